//! The four subcommands. Each builds its inputs from the raw config with a
//! consolidated validation pass, runs the corresponding library layer, and
//! writes CSV files with the schemas defined in `psq_core::export`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use psq_core::export;
use psq_core::fluid::{solve_trajectory, FluidProblem};
use psq_core::sim::{run_replications, SimConfig};
use psq_core::steady::solve_fixed_point;
use psq_core::validate::{convergence_experiment, ConvergenceSpec};

use crate::config::{build_joint, build_model, build_scalar, RawConfig, Validator};
use crate::CliError;

pub struct Context {
    pub raw: RawConfig,
    pub out_dir: Option<PathBuf>,
    pub quiet: bool,
}

impl Context {
    fn out_path(&self, name: &str) -> Result<PathBuf, CliError> {
        let dir = match &self.out_dir {
            Some(d) => d.clone(),
            None => self
                .raw
                .output
                .as_ref()
                .and_then(|o| o.dir.clone())
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(".")),
        };
        std::fs::create_dir_all(&dir)?;
        let prefix = self
            .raw
            .output
            .as_ref()
            .and_then(|o| o.prefix.clone())
            .unwrap_or_default();
        Ok(dir.join(format!("{prefix}{name}")))
    }

    fn create(&self, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
        let path = self.out_path(name)?;
        let file = File::create(&path)?;
        Ok((path, BufWriter::new(file)))
    }

    fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

pub fn cmd_steady(ctx: &Context) -> Result<(), CliError> {
    let mut v = Validator::default();
    let model = build_model(&ctx.raw.model, &mut v);
    v.into_result().map_err(CliError::Config)?;
    let model = model.expect("validated");

    let report = solve_fixed_point(&model)?;
    let (path, mut out) = ctx.create("steady.csv")?;
    export::write_steady_report(&mut out, model.lambda, model.rho(), &report)?;
    out.flush()?;
    ctx.info(format!(
        "z_inf = {:.10}, P_s = {:.10}, residual = {:.3e}, evals = {} -> {}",
        report.z_inf,
        report.p_success,
        report.residual,
        report.evals,
        path.display()
    ));
    Ok(())
}

pub fn cmd_fluid(ctx: &Context) -> Result<(), CliError> {
    let mut v = Validator::default();
    let model = build_model(&ctx.raw.model, &mut v);
    let fluid = ctx.raw.fluid.as_ref();
    if fluid.is_none() {
        v.fail("fluid", "section required");
    }
    let mut z0 = None;
    let mut horizon = None;
    let mut dt = None;
    let mut initial_law = None;
    if let Some(f) = fluid {
        z0 = v.require(f.z0, "fluid.z0");
        horizon = v.require(f.horizon, "fluid.horizon");
        dt = v.require(f.dt, "fluid.dt");
        initial_law = f
            .initial_law
            .as_ref()
            .and_then(|raw| build_joint(raw, "fluid.initial_law", &mut v));
        if let Some(m) = &f.measure {
            if m.times.is_empty() || m.xs.is_empty() || m.ys.is_empty() {
                v.fail("fluid.measure", "times, xs, ys must be nonempty");
            }
            if let (Some(dt), Some(horizon)) = (f.dt, f.horizon) {
                for &t in &m.times {
                    let pos = t / dt;
                    if !(0.0..=horizon).contains(&t) || (pos - pos.round()).abs() > 1e-6 {
                        v.fail(
                            "fluid.measure.times",
                            format!("{t} is not a grid time (dt = {dt}, horizon = {horizon})"),
                        );
                    }
                }
            }
            for &x in m.xs.iter().chain(&m.ys) {
                if x < 0.0 {
                    v.fail(
                        "fluid.measure",
                        format!("corner coordinate {x} must be >= 0"),
                    );
                }
            }
        }
    }
    v.into_result().map_err(CliError::Config)?;
    let (model, z0, horizon, dt) = (
        model.expect("validated"),
        z0.unwrap(),
        horizon.unwrap(),
        dt.unwrap(),
    );

    let mut problem = FluidProblem::new(model, z0, initial_law, horizon, dt)
        .map_err(|e| CliError::Config(vec![format!("fluid: {e}")]))?;
    if let Some(f) = fluid {
        problem = problem.with_tolerance(
            f.tol.unwrap_or(psq_core::fluid::PICARD_TOL),
            f.max_iter.unwrap_or(psq_core::fluid::PICARD_MAX_ITER),
        );
    }
    for w in problem.warnings() {
        ctx.info(format!("warning: {w}"));
    }
    if let Some(advisory) = problem.uniqueness_advisory() {
        ctx.info(format!("advisory: {advisory}"));
    }

    let traj = solve_trajectory(problem)?;
    let residual = traj.residual();
    let (path, mut out) = ctx.create("trajectory.csv")?;
    export::write_trajectory(&mut out, &traj)?;
    out.flush()?;
    ctx.info(format!(
        "converged in {} iterations, residual certificate {:.3e} -> {}",
        traj.iterations,
        residual,
        path.display()
    ));

    if let Some(m) = fluid.and_then(|f| f.measure.as_ref()) {
        let (mpath, mut mout) = ctx.create("measure.csv")?;
        export::write_measure_grid(&mut mout, &traj, &m.times, &m.xs, &m.ys)?;
        mout.flush()?;
        ctx.info(format!("measure grid -> {}", mpath.display()));
    }
    Ok(())
}

pub fn cmd_simulate(ctx: &Context) -> Result<(), CliError> {
    let mut v = Validator::default();
    let model = build_model(&ctx.raw.model, &mut v);
    let sim = ctx.raw.sim.as_ref();
    if sim.is_none() {
        v.fail("sim", "section required");
    }
    let seed = v.require(ctx.raw.seed, "seed");
    let mut interarrival = None;
    let mut first_arrival = None;
    let mut initial_law = None;
    let mut r = None;
    let mut reps = None;
    let mut horizon = None;
    if let Some(s) = sim {
        interarrival = s
            .interarrival
            .as_ref()
            .and_then(|raw| build_scalar(raw, "sim.interarrival", &mut v))
            .or_else(|| {
                if s.interarrival.is_none() {
                    v.fail("sim.interarrival", "required");
                }
                None
            });
        first_arrival = s
            .first_arrival
            .as_ref()
            .and_then(|raw| build_scalar(raw, "sim.first_arrival", &mut v));
        initial_law = s
            .initial_law
            .as_ref()
            .and_then(|raw| build_joint(raw, "sim.initial_law", &mut v));
        r = v.require(s.r, "sim.r");
        reps = v.require(s.reps, "sim.reps");
        horizon = v.require(s.horizon, "sim.horizon");
        if s.initial_count.unwrap_or(0) > 0 && s.initial_law.is_none() {
            v.fail("sim.initial_law", "required when initial_count > 0");
        }
    }
    v.into_result().map_err(CliError::Config)?;
    let (model, sim) = (model.expect("validated"), sim.expect("validated"));
    let (r, reps, horizon) = (r.unwrap(), reps.unwrap(), horizon.unwrap());

    let write_events = sim.write_events.unwrap_or(false);
    let write_snapshots = sim.write_snapshots.unwrap_or(false);

    if horizon == 0.0 {
        // nothing to simulate; still produce the (empty) summary contract
        let (path, mut out) = ctx.create("summary.csv")?;
        export::write_summary(&mut out, &[], r)?;
        out.flush()?;
        ctx.info(format!("zero horizon, empty summary -> {}", path.display()));
        return Ok(());
    }

    let config = SimConfig {
        interarrival: interarrival.expect("validated"),
        law: model.law.clone(),
        initial_count: sim.initial_count.unwrap_or(0),
        initial_law,
        horizon,
        seed: seed.unwrap(),
        snapshot_times: sim.snapshot_times.clone().unwrap_or_default(),
        r,
        record_events: write_events,
        first_arrival,
    };
    let runs = run_replications(&config, reps)?;

    let (path, mut out) = ctx.create("summary.csv")?;
    export::write_summary(&mut out, &runs, r)?;
    out.flush()?;
    ctx.info(format!("{} replications -> {}", runs.len(), path.display()));

    if write_snapshots {
        let (spath, mut sout) = ctx.create("snapshots.csv")?;
        export::write_snapshots(&mut sout, &runs[0].1)?;
        sout.flush()?;
        ctx.info(format!("snapshots of replication 0 -> {}", spath.display()));
    }
    if write_events {
        let (epath, mut eout) = ctx.create("events.csv")?;
        export::write_events(&mut eout, &runs[0].0)?;
        eout.flush()?;
        ctx.info(format!("events of replication 0 -> {}", epath.display()));
    }
    Ok(())
}

pub fn cmd_converge(ctx: &Context) -> Result<(), CliError> {
    let mut v = Validator::default();
    let model = build_model(&ctx.raw.model, &mut v);
    let seed = v.require(ctx.raw.seed, "seed");
    let interarrival = match ctx.raw.sim.as_ref().and_then(|s| s.interarrival.as_ref()) {
        Some(raw) => build_scalar(raw, "sim.interarrival", &mut v),
        None => {
            v.fail(
                "sim.interarrival",
                "required (converge reuses the sim arrival law)",
            );
            None
        }
    };
    let conv = ctx.raw.converge.as_ref();
    if conv.is_none() {
        v.fail("converge", "section required");
    }
    let mut r_list = Vec::new();
    let mut times = Vec::new();
    let mut reps = None;
    let mut fluid_dt = None;
    let mut initial_law = None;
    let mut z0 = 0.0;
    if let Some(c) = conv {
        match &c.r_list {
            Some(rs) if !rs.is_empty() => r_list = rs.clone(),
            _ => v.fail("converge.r_list", "required, nonempty"),
        }
        match &c.times {
            Some(ts) if !ts.is_empty() => times = ts.clone(),
            _ => v.fail("converge.times", "required, nonempty"),
        }
        reps = v.require(c.reps, "converge.reps");
        fluid_dt = v.require(c.fluid_dt, "converge.fluid_dt");
        z0 = c.z0.unwrap_or(0.0);
        initial_law = c
            .initial_law
            .as_ref()
            .and_then(|raw| build_joint(raw, "converge.initial_law", &mut v));
    }
    v.into_result().map_err(CliError::Config)?;
    let model = model.expect("validated");

    let spec = ConvergenceSpec {
        interarrival: interarrival.expect("validated"),
        law: model.law.clone(),
        z0,
        initial_law,
        master_seed: seed.unwrap(),
        fluid_dt: fluid_dt.unwrap(),
    };
    let table = convergence_experiment(&spec, &r_list, reps.unwrap(), &times)?;

    let (path, mut out) = ctx.create("convergence.csv")?;
    export::write_convergence(&mut out, &table)?;
    out.flush()?;
    let verdict = if table.error_monotone_in_r() {
        "PASS"
    } else {
        "FAIL"
    };
    // the verdict line is part of the command contract, not of --quiet
    println!("monotone-error property: {verdict}");
    ctx.info(format!("convergence table -> {}", path.display()));
    Ok(())
}
