//! CSV export of solver and simulator outputs.
//!
//! Formats are part of the external contract and are written byte-stably:
//! floats use the shortest round-trip representation, rows follow the
//! deterministic order of the producing structures.

use std::io::{self, Write};

use crate::fluid::FluidTrajectory;
use crate::sim::{EventLog, Snapshot};
use crate::steady::SteadyStateReport;
use crate::validate::ConvergenceTable;

/// `t,z,S0`
pub fn write_trajectory<W: Write>(out: &mut W, traj: &FluidTrajectory) -> io::Result<()> {
    writeln!(out, "t,z,S0")?;
    for ((t, z), s0) in traj.times().iter().zip(traj.z()).zip(traj.s0()) {
        writeln!(out, "{t},{z},{s0}")?;
    }
    Ok(())
}

/// `t,x,y,zeta` over the cartesian grid of the given probe coordinates.
pub fn write_measure_grid<W: Write>(
    out: &mut W,
    traj: &FluidTrajectory,
    times: &[f64],
    xs: &[f64],
    ys: &[f64],
) -> io::Result<()> {
    writeln!(out, "t,x,y,zeta")?;
    for &t in times {
        for &x in xs {
            for &y in ys {
                let zeta = traj.eval_measure(t, x, y);
                writeln!(out, "{t},{x},{y},{zeta}")?;
            }
        }
    }
    Ok(())
}

/// `lambda,rho,z_inf,p_success,residual,evals`
pub fn write_steady_report<W: Write>(
    out: &mut W,
    lambda: f64,
    rho: f64,
    report: &SteadyStateReport,
) -> io::Result<()> {
    writeln!(out, "lambda,rho,z_inf,p_success,residual,evals")?;
    writeln!(
        out,
        "{lambda},{rho},{},{},{},{}",
        report.z_inf, report.p_success, report.residual, report.evals
    )
}

/// `time,kind,job_id`
pub fn write_events<W: Write>(out: &mut W, log: &EventLog) -> io::Result<()> {
    writeln!(out, "time,kind,job_id")?;
    if let Some(events) = &log.events {
        for e in events {
            writeln!(out, "{},{},{}", e.time, e.kind.as_str(), e.job_id)?;
        }
    }
    Ok(())
}

/// `t,residual_b,residual_d`
pub fn write_snapshots<W: Write>(out: &mut W, snapshots: &[Snapshot]) -> io::Result<()> {
    writeln!(out, "t,residual_b,residual_d")?;
    for snap in snapshots {
        for (rb, rd) in &snap.points {
            writeln!(out, "{},{rb},{rd}", snap.t)?;
        }
    }
    Ok(())
}

/// `r,rep,t,z_scaled,completions,renegings` — one row per replication and
/// snapshot time; `t` is in fluid units (absolute time divided by `r`).
pub fn write_summary<W: Write>(
    out: &mut W,
    runs: &[(EventLog, Vec<Snapshot>)],
    r: f64,
) -> io::Result<()> {
    writeln!(out, "r,rep,t,z_scaled,completions,renegings")?;
    for (rep, (log, snapshots)) in runs.iter().enumerate() {
        for snap in snapshots {
            let t = snap.t / r;
            let z = snap.points.len() as f64 / r;
            writeln!(
                out,
                "{r},{rep},{t},{z},{},{}",
                log.completions, log.renegings
            )?;
        }
    }
    Ok(())
}

/// `r,t,reps,mean_scaled_mass,fluid_z,abs_err,std_err`
pub fn write_convergence<W: Write>(out: &mut W, table: &ConvergenceTable) -> io::Result<()> {
    writeln!(out, "r,t,reps,mean_scaled_mass,fluid_z,abs_err,std_err")?;
    for row in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.r, row.t, row.reps, row.mean_scaled_mass, row.fluid_z, row.abs_err, row.std_err
        )?;
    }
    Ok(())
}
