use super::run::{run, FlowConfig, StopReason, Stepper};
use super::state::{hausdorff, CurveState};
use crate::error::{Error, Result};
use crate::geometry::{Immersion, Shape};
use serde::Serialize;

/// Runs of one initial curve for a decreasing list of `ε`, compared with
/// curve-shortening flow.
#[derive(Clone, Debug)]
pub struct McfConfig {
    pub shape: Immersion,
    pub eps_list: Vec<f64>,
    pub k: usize,
    pub nodes: usize,
    pub t_end: f64,
    /// Comparison times are multiples of this.
    pub sample_every: f64,
    pub rtol: f64,
}

impl McfConfig {
    pub fn new(shape: Immersion, eps_list: Vec<f64>) -> Self {
        McfConfig {
            shape,
            eps_list,
            k: 3,
            nodes: 32,
            t_end: 0.4,
            sample_every: 0.01,
            rtol: 1e-8,
        }
    }

    fn flow(&self, eps: f64, nodes: usize) -> FlowConfig {
        FlowConfig {
            k: self.k,
            eps,
            nodes,
            stepper: Stepper::Explicit,
            t_end: self.t_end,
            snapshot_every: self.sample_every,
            rtol: self.rtol,
            max_steps: 50_000_000,
            ..FlowConfig::default()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct McfRow {
    pub eps: f64,
    /// Sup over sample times of the deviation from the reference.
    pub deviation: f64,
    pub final_radius_fit: f64,
    pub steps: usize,
    pub stop: StopReason,
}

#[derive(Clone, Debug, Serialize)]
pub struct McfReport {
    pub shape: String,
    /// `circle-ode` (radius against `sqrt(R0^2 - 2t)`) or
    /// `curve-shortening-run` (Hausdorff distance to an ε = 0 run on twice the nodes).
    pub reference: String,
    pub t_end: f64,
    pub rows: Vec<McfRow>,
    /// Deviations strictly decrease along the ε list.
    pub monotone: bool,
}

pub fn mcf_compare(config: &McfConfig) -> Result<McfReport> {
    if config.eps_list.is_empty() {
        return Err(Error::InvalidArgument("empty eps list".into()));
    }
    if config.eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("eps list must be strictly decreasing".into()));
    }
    let initial = CurveState::from_immersion(&config.shape, config.nodes)?;
    let circle = matches!(config.shape.shape, Shape::Circle { .. });
    let mut rows = Vec::new();
    let reference = if circle {
        let r0 = initial.radius_fit();
        if config.t_end >= 0.5 * r0 * r0 {
            return Err(Error::InvalidArgument(format!(
                "t_end {} reaches the curve-shortening extinction time {}",
                config.t_end,
                0.5 * r0 * r0
            )));
        }
        for &eps in &config.eps_list {
            let traj = run(&initial, &config.flow(eps, config.nodes))?;
            let deviation = traj
                .snapshots
                .iter()
                .map(|s| (s.radius_fit() - (r0 * r0 - 2.0 * s.time).sqrt()).abs())
                .fold(0.0, f64::max);
            rows.push(McfRow {
                eps,
                deviation,
                final_radius_fit: traj.last().radius_fit(),
                steps: traj.steps,
                stop: traj.stop,
            });
        }
        "circle-ode"
    } else {
        let fine_initial = CurveState::from_immersion(&config.shape, 2 * config.nodes)?;
        let fine = run(&fine_initial, &config.flow(0.0, 2 * config.nodes))?;
        for &eps in &config.eps_list {
            let traj = run(&initial, &config.flow(eps, config.nodes))?;
            let mut deviation = 0.0f64;
            for s in &traj.snapshots {
                if let Some(r) = fine.snapshots.iter().find(|r| (r.time - s.time).abs() < 1e-9) {
                    deviation = deviation.max(hausdorff(s, r));
                }
            }
            rows.push(McfRow {
                eps,
                deviation,
                final_radius_fit: traj.last().radius_fit(),
                steps: traj.steps,
                stop: traj.stop,
            });
        }
        "curve-shortening-run"
    };
    let monotone = rows.windows(2).all(|w| w[1].deviation < w[0].deviation);
    Ok(McfReport {
        shape: config.shape.to_string(),
        reference: reference.into(),
        t_end: config.t_end,
        rows,
        monotone,
    })
}
