//! CSV output of trajectories. Numbers are written in full-precision
//! scientific notation.

use super::run::Trajectory;
use crate::error::Result;
use std::io::Write;

pub const SNAPSHOT_HEADER: &str = "t,node,x,y";
pub const ENERGY_HEADER: &str = "t,energy,length,max_abs_curvature,radius_fit";

pub fn write_snapshots<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    writeln!(w, "{SNAPSHOT_HEADER}")?;
    for s in &traj.snapshots {
        for (i, p) in s.nodes.iter().enumerate() {
            writeln!(w, "{:e},{i},{:e},{:e}", s.time, p[0], p[1])?;
        }
    }
    Ok(())
}

pub fn write_energy_log<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    writeln!(w, "{ENERGY_HEADER}")?;
    for e in &traj.energy_log {
        writeln!(
            w,
            "{:e},{:e},{:e},{:e},{:e}",
            e.t, e.energy, e.length, e.max_abs_curvature, e.radius_fit
        )?;
    }
    Ok(())
}
