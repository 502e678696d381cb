use super::discrete::{d2_symbol, CurveEnergy, EnergyReport};
use super::state::CurveState;
use crate::error::{Error, Result};
use crate::geometry::Immersion;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stepper {
    /// Preconditioned gradient descent with Armijo backtracking.
    Descent,
    /// Adaptive Dormand–Prince 5(4) on the gradient-flow ODE.
    Explicit,
}

impl FromStr for Stepper {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "descent" => Ok(Stepper::Descent),
            "explicit" => Ok(Stepper::Explicit),
            other => Err(Error::InvalidArgument(format!("unknown stepper `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub k: usize,
    pub eps: f64,
    pub nodes: usize,
    pub stepper: Stepper,
    /// Flow time (pseudo-time for descent) at which to stop.
    pub t_end: f64,
    /// Stop when the 2-norm of the normal part of the gradient, divided by
    /// the length, drops below this.
    pub grad_tol: f64,
    pub max_steps: usize,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Local error tolerance of the explicit stepper.
    pub rtol: f64,
    /// Snapshot spacing: flow time for explicit runs, accepted steps for descent.
    pub snapshot_every: f64,
    /// Equal-arc-length resampling period of the descent stepper (0 disables).
    pub redistribute_every: usize,
    /// Uniform node perturbation applied to the initial curve (0 disables).
    pub perturbation: f64,
    pub seed: u64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            k: 3,
            eps: 1.0,
            nodes: 64,
            stepper: Stepper::Descent,
            t_end: f64::INFINITY,
            grad_tol: 1e-6,
            max_steps: 200_000,
            dt_min: 1e-14,
            dt_max: 1.0,
            rtol: 1e-8,
            snapshot_every: 100.0,
            redistribute_every: 50,
            perturbation: 0.0,
            seed: 42,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(3..=6).contains(&self.k) {
            return bad(format!("k must be in 3..=6, got {}", self.k));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be finite and >= 0, got {}", self.eps));
        }
        if self.nodes < 16 || self.nodes < 4 * self.k {
            return bad(format!("need at least max(16, 4k) nodes, got {}", self.nodes));
        }
        if !(self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.stepper == Stepper::Explicit && !self.t_end.is_finite() {
            return bad("explicit runs need a finite t_end".into());
        }
        if !(self.dt_min > 0.0 && self.dt_max >= self.dt_min) {
            return bad("need 0 < dt_min <= dt_max".into());
        }
        if !(self.snapshot_every > 0.0) || !(self.rtol > 0.0) || !(self.grad_tol > 0.0) {
            return bad("snapshot_every, rtol and grad_tol must be positive".into());
        }
        Ok(())
    }

    /// The curve sampled at `nodes` parameter values, perturbed if requested.
    /// Samples `shape` at equal arc length, then applies the perturbation.
    pub fn initial_state(&self, shape: &Immersion) -> Result<CurveState> {
        let s = CurveState::from_immersion(shape, self.nodes)?.redistributed();
        Ok(if self.perturbation > 0.0 {
            s.perturbed(self.perturbation, self.seed)
        } else {
            s
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyEntry {
    pub t: f64,
    pub energy: f64,
    pub length: f64,
    pub max_abs_curvature: f64,
    pub radius_fit: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Gradient norm per unit length below tolerance.
    Converged,
    TimeLimit,
    StepLimit,
    /// A step would have to be smaller than `dt_min`.
    StepUnderflow,
    /// Descent made no decrease above rounding for many consecutive steps.
    Stalled,
    /// Edges crossed; the last snapshot is the last valid state.
    SelfIntersection,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub snapshots: Vec<CurveState>,
    pub energy_log: Vec<EnergyEntry>,
    pub stop: StopReason,
    pub steps: usize,
    pub rejected_steps: usize,
    /// Normal part of the gradient at the last state.
    pub final_grad_norm: f64,
}

impl Trajectory {
    pub fn last(&self) -> &CurveState {
        self.snapshots.last().expect("trajectory has an initial snapshot")
    }

    pub fn halted(&self) -> bool {
        self.stop == StopReason::SelfIntersection
    }

    /// Accepted steps whose energy exceeds the previous entry.
    pub fn energy_increases(&self) -> usize {
        self.energy_log.windows(2).filter(|w| w[1].energy > w[0].energy).count()
    }
}

fn entry(t: f64, r: &EnergyReport, s: &CurveState) -> EnergyEntry {
    EnergyEntry {
        t,
        energy: r.energy,
        length: r.length,
        max_abs_curvature: r.max_abs_curvature,
        radius_fit: s.radius_fit(),
    }
}

/// 2-norm of the normal components of a nodal gradient.
fn normal_norm(g: &[[f64; 2]], normals: &[[f64; 2]]) -> f64 {
    g.iter().zip(normals).map(|(g, m)| (g[0] * m[0] + g[1] * m[1]).powi(2)).sum::<f64>().sqrt()
}

/// Runs the flow from `initial`.
pub fn run(initial: &CurveState, config: &FlowConfig) -> Result<Trajectory> {
    config.validate()?;
    if initial.len() != config.nodes {
        return Err(Error::InvalidArgument(format!(
            "initial curve has {} nodes, config asks for {}",
            initial.len(),
            config.nodes
        )));
    }
    if let Some((i, j)) = initial.self_intersection() {
        return Err(Error::InvalidState(format!("initial curve self-intersects (edges {i}, {j})")));
    }
    let energy = CurveEnergy::new(config.k, config.eps)?;
    match config.stepper {
        Stepper::Descent => descent(initial, config, &energy),
        Stepper::Explicit => explicit(initial, config, &energy),
    }
}

/// Applies `1/P(ω)` per coordinate in Fourier space, with
/// `P = 1 + λ + 2kε λ^{k-1}` and `λ` the symbol of the second-derivative
/// stencil at mean spacing `ds`.
struct Preconditioner {
    n: usize,
    symbol: Vec<f64>,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Preconditioner {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Preconditioner {
            n,
            symbol: vec![1.0; n],
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    fn update(&mut self, k: usize, eps: f64, ds: f64) {
        for (j, p) in self.symbol.iter_mut().enumerate() {
            let w = 2.0 * std::f64::consts::PI * j as f64 / self.n as f64;
            let l = d2_symbol(w) / (ds * ds);
            *p = 1.0 + l + 2.0 * k as f64 * eps * l.powi(k as i32 - 1);
        }
    }

    fn apply(&self, v: &mut [[f64; 2]]) {
        for axis in 0..2 {
            let mut buf: Vec<Complex64> = v.iter().map(|p| Complex64::new(p[axis], 0.0)).collect();
            self.fwd.process(&mut buf);
            for (b, p) in buf.iter_mut().zip(&self.symbol) {
                *b /= p * self.n as f64;
            }
            self.inv.process(&mut buf);
            for (p, b) in v.iter_mut().zip(&buf) {
                p[axis] = b.re;
            }
        }
    }
}

/// Consecutive rounding-level steps after which descent gives up.
const STALL_STEPS: usize = 200;
/// Largest node displacement per descent step, in mean spacings.
const MAX_MOVE: f64 = 0.25;
/// Relative energy change treated as unresolved.
const RESOLUTION: f64 = 64.0 * f64::EPSILON;

/// `out_i = scale (v_i·n_i) n_i`.
fn project(out: &mut [[f64; 2]], v: &[[f64; 2]], normals: &[[f64; 2]], scale: f64) {
    for ((o, v), m) in out.iter_mut().zip(v).zip(normals) {
        let c = scale * (v[0] * m[0] + v[1] * m[1]);
        *o = [c * m[0], c * m[1]];
    }
}

fn dot(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p[0] * q[0] + p[1] * q[1]).sum()
}

fn descent(initial: &CurveState, config: &FlowConfig, energy: &CurveEnergy) -> Result<Trajectory> {
    let n = initial.len();
    let mut state = initial.clone();
    let mut grad = vec![[0.0; 2]; n];
    let mut normals = vec![[0.0; 2]; n];
    let mut report = energy.gradient_with_normals(&state.nodes, &mut grad, &mut normals)?;
    let mut traj = Trajectory {
        snapshots: vec![state.clone()],
        energy_log: vec![entry(state.time, &report, &state)],
        stop: StopReason::StepLimit,
        steps: 0,
        rejected_steps: 0,
        final_grad_norm: normal_norm(&grad, &normals),
    };
    let mut pre = Preconditioner::new(n);
    let mut dir = vec![[0.0; 2]; n];
    let mut trial = state.clone();
    let mut trial_grad = grad.clone();
    let mut alpha = 1.0f64;
    let snapshot_steps = (config.snapshot_every.round() as usize).max(1);
    let mut flat_steps = 0;
    loop {
        let gnorm = normal_norm(&grad, &normals);
        traj.final_grad_norm = gnorm;
        if gnorm / report.length < config.grad_tol {
            traj.stop = StopReason::Converged;
            break;
        }
        if state.time >= config.t_end {
            traj.stop = StopReason::TimeLimit;
            break;
        }
        if traj.steps >= config.max_steps {
            traj.stop = StopReason::StepLimit;
            break;
        }
        // velocity-like direction: gradient per unit arc weight, smoothed
        let ds = report.length / n as f64;
        pre.update(config.k, config.eps, ds);
        // normal part only: tangential node motion is left to redistribution
        project(&mut dir, &grad, &normals, -1.0 / ds);
        pre.apply(&mut dir);
        let smoothed = dir.clone();
        project(&mut dir, &smoothed, &normals, 1.0);
        let slope = dot(&dir, &grad);
        if slope >= 0.0 {
            return Err(Error::InvalidState("preconditioned direction is not a descent direction".into()));
        }
        // no node moves more than a fraction of the spacing per step, which
        // keeps the parametrization smooth
        let reach = dir.iter().map(|d| d[0].hypot(d[1])).fold(0.0, f64::max);
        alpha = alpha.min(MAX_MOVE * ds / reach).min(config.dt_max).min(config.t_end - state.time);
        let accepted = loop {
            if alpha < config.dt_min {
                break None;
            }
            for ((t, p), d) in trial.nodes.iter_mut().zip(&state.nodes).zip(&dir) {
                *t = [p[0] + alpha * d[0], p[1] + alpha * d[1]];
            }
            match energy.energy(&trial.nodes) {
                Ok(r) if r.energy <= report.energy + 1e-4 * alpha * slope => break Some(r),
                // Below energy resolution the sufficient-decrease test is
                // noise; accept a non-increasing step that has not yet passed
                // the line minimum.
                Ok(r) if r.energy <= report.energy
                    && report.energy - r.energy <= RESOLUTION * report.energy.abs()
                    && energy.gradient(&trial.nodes, &mut trial_grad).is_ok()
                    && dot(&trial_grad, &dir) <= 0.0 =>
                {
                    break Some(r)
                }
                _ => {
                    alpha *= 0.5;
                    traj.rejected_steps += 1;
                }
            }
        };
        if accepted.is_none() {
            traj.stop = StopReason::StepUnderflow;
            break;
        }
        trial.time = state.time + alpha;
        if trial.self_intersection().is_some() {
            traj.stop = StopReason::SelfIntersection;
            break;
        }
        std::mem::swap(&mut state, &mut trial);
        traj.steps += 1;
        let previous = report.energy;
        report = energy.gradient_with_normals(&state.nodes, &mut grad, &mut normals)?;
        if previous - report.energy <= 8.0 * f64::EPSILON * previous.abs() {
            flat_steps += 1;
        } else {
            flat_steps = 0;
        }
        if flat_steps >= STALL_STEPS {
            traj.energy_log.push(entry(state.time, &report, &state));
            traj.stop = StopReason::Stalled;
            break;
        }
        alpha *= 2.0;

        if config.redistribute_every > 0 && traj.steps % config.redistribute_every == 0 {
            let mut moved = state.redistributed();
            let mut g2 = vec![[0.0; 2]; n];
            let mut n2 = vec![[0.0; 2]; n];
            if moved.self_intersection().is_none() {
                if let Ok(r) = energy.gradient_with_normals(&moved.nodes, &mut g2, &mut n2) {
                    if r.energy <= report.energy {
                        moved.time = state.time;
                        state = moved;
                        report = r;
                        grad = g2;
                        normals = n2;
                    }
                }
            }
        }
        traj.energy_log.push(entry(state.time, &report, &state));
        if traj.steps % snapshot_steps == 0 {
            traj.snapshots.push(state.clone());
        }
    }
    if traj.snapshots.last() != Some(&state) {
        traj.snapshots.push(state);
    }
    Ok(traj)
}

// Dormand–Prince 5(4) tableau
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Normal node velocities; returns the energy report and the mean spacing.
fn velocity(energy: &CurveEnergy, nodes: &[[f64; 2]], out: &mut [[f64; 2]]) -> Result<(EnergyReport, f64)> {
    let report = energy.normal_velocity(nodes, out)?;
    Ok((report, report.length / nodes.len() as f64))
}

fn explicit(initial: &CurveState, config: &FlowConfig, energy: &CurveEnergy) -> Result<Trajectory> {
    let n = initial.len();
    let mut state = initial.clone();
    let mut stages = vec![vec![[0.0; 2]; n]; 7];
    let (mut report, mut ds) = velocity(energy, &state.nodes, &mut stages[0])?;
    let mut traj = Trajectory {
        snapshots: vec![state.clone()],
        energy_log: vec![entry(state.time, &report, &state)],
        stop: StopReason::TimeLimit,
        steps: 0,
        rejected_steps: 0,
        final_grad_norm: 0.0,
    };
    let mut next_output = config.snapshot_every.min(config.t_end);
    let mut dt = (1e-3 / energy.stiffness(ds)).max(config.dt_min);
    let mut stage_nodes = state.nodes.clone();
    let mut y5 = state.nodes.clone();
    while state.time < config.t_end {
        if traj.steps >= config.max_steps {
            traj.stop = StopReason::StepLimit;
            break;
        }
        let cap = 3.0 / energy.stiffness(ds);
        dt = dt.min(cap).min(config.dt_max).min(next_output - state.time);
        if dt < config.dt_min {
            traj.stop = StopReason::StepUnderflow;
            break;
        }
        let mut last = None;
        for s in 1..7 {
            for i in 0..n {
                let mut p = state.nodes[i];
                for (j, a) in A[s][..s].iter().enumerate() {
                    p[0] += dt * a * stages[j][i][0];
                    p[1] += dt * a * stages[j][i][1];
                }
                stage_nodes[i] = p;
            }
            match velocity(energy, &stage_nodes, &mut stages[s]) {
                Ok(r) if s == 6 => last = Some(r),
                Ok(_) => {}
                Err(_) => break,
            }
        }
        let ok = last.is_some();
        if ok {
            y5.copy_from_slice(&stage_nodes);
        }
        let mut err = f64::INFINITY;
        if ok {
            let scale = report.length / n as f64;
            err = 0.0f64;
            for i in 0..n {
                for axis in 0..2 {
                    let e: f64 = (0..7).map(|s| (B5[s] - B4[s]) * stages[s][i][axis]).sum::<f64>() * dt;
                    let tol = config.rtol * (scale + y5[i][axis].abs());
                    err = err.max((e / tol).abs());
                }
            }
        }
        if !(err <= 1.0) {
            traj.rejected_steps += 1;
            let f = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.25 };
            dt *= f;
            continue;
        }
        let mut candidate = CurveState {
            nodes: y5.clone(),
            time: state.time + dt,
        };
        if (candidate.time - next_output).abs() <= 1e-12 * next_output.max(1.0) {
            candidate.time = next_output;
        }
        if candidate.self_intersection().is_some() {
            traj.stop = StopReason::SelfIntersection;
            break;
        }
        state = candidate;
        traj.steps += 1;
        // first-same-as-last: the last stage is the next first stage
        stages.swap(0, 6);
        (report, ds) = last.expect("accepted step has a last stage");
        dt *= (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        if state.time >= next_output {
            traj.energy_log.push(entry(state.time, &report, &state));
            traj.snapshots.push(state.clone());
            next_output = (next_output + config.snapshot_every).min(config.t_end);
        }
    }
    let (mut grad, mut normals) = (vec![[0.0; 2]; n], vec![[0.0; 2]; n]);
    energy.gradient_with_normals(&state.nodes, &mut grad, &mut normals)?;
    traj.final_grad_norm = normal_norm(&grad, &normals);
    if traj.snapshots.last() != Some(&state) {
        traj.energy_log.push(entry(state.time, &report, &state));
        traj.snapshots.push(state);
    }
    Ok(traj)
}
