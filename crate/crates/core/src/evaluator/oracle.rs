use super::{CompiledNorm, CompiledTensor, JetSample, Labels};
use crate::error::Result;
use crate::geometry::{default_step, jets, sample_params, verify_prop1, DistanceField, Immersion, Prop1Report};
use crate::recursion::RecursionTable;
use serde::Serialize;

/// Full `A^k` in the adapted frame assembled from the table: a component
/// with `s` tangent arguments is `p^{k,s}` at those tangent indices (in
/// order) and the remaining normal arguments as labels.
pub fn evaluator_tensor_in_frame(table: &RecursionTable, sample: &JetSample, k: usize) -> Result<Vec<f64>> {
    let (n, d) = (sample.n, sample.ambient_dim());
    let m = sample.m;
    let blocks: Vec<Vec<f64>> = (0..=k)
        .map(|s| CompiledTensor::new(table.entry(k, s)?, n, m, Labels::Normal).evaluate(sample))
        .collect::<Result<_>>()?;
    let total = d.pow(k as u32);
    let mut out = vec![0.0; total];
    for (idx, o) in out.iter_mut().enumerate() {
        let mut axes = vec![0; k];
        let mut rest = idx;
        for slot in (0..k).rev() {
            axes[slot] = rest % d;
            rest /= d;
        }
        let tangents: Vec<usize> = axes.iter().copied().filter(|&a| a < n).collect();
        let labels: Vec<usize> = axes.iter().copied().filter(|&a| a >= n).map(|a| a - n).collect();
        let s = tangents.len();
        let pos = labels
            .iter()
            .fold(tangents.iter().fold(0, |acc, &t| acc * n + t), |acc, &l| acc * m + l);
        *o = blocks[s][pos];
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct OraclePoint {
    pub param: Vec<f64>,
    pub k: usize,
    pub h: f64,
    pub norm_evaluator: f64,
    pub norm_fd: f64,
    pub norm_rel_err: f64,
    pub component_rel_err: f64,
    pub asymmetry: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleSummary {
    pub k: usize,
    pub max_component_rel_err: f64,
    pub max_norm_rel_err: f64,
    pub max_asymmetry: f64,
}

/// Evaluator against the finite-difference oracle.
#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub shape: String,
    pub points: Vec<OraclePoint>,
    pub per_k: Vec<OracleSummary>,
    pub failures: Vec<String>,
}

impl OracleReport {
    pub fn max_error(&self) -> f64 {
        self.per_k
            .iter()
            .map(|s| s.max_component_rel_err.max(s.max_norm_rel_err))
            .fold(0.0, f64::max)
    }
}

/// Compares evaluator components and `|A^k|^2` with Richardson-extrapolated
/// finite differences at `samples` points, for each `k` in `ks`.
///
/// Errors are relative to the largest FD component (to 1 on flat shapes).
pub fn compare_with_fd(im: &Immersion, table: &RecursionTable, samples: usize, ks: &[usize]) -> Result<OracleReport> {
    let df = DistanceField::new(im.clone());
    let k_max = ks.iter().copied().max().unwrap_or(3);
    let mut report = OracleReport {
        shape: im.to_string(),
        points: Vec::new(),
        per_k: Vec::new(),
        failures: Vec::new(),
    };
    let norms: Vec<(usize, CompiledNorm)> = ks
        .iter()
        .map(|&k| Ok((k, CompiledNorm::new(&table.squared_norm_expr(k)?, im.dim(), im.codim()))))
        .collect::<Result<_>>()?;
    for u in sample_params(im, samples) {
        let data = jets(im, &u, k_max.saturating_sub(3))?;
        let sample = JetSample::from(&data);
        let h = default_step(&data);
        let flat = data.b_norm_sq() < 1e-20;
        for (k, norm) in &norms {
            let fd = match df.fd_ak(&data.point, *k, h) {
                Ok(t) => t,
                Err(e) => {
                    report.failures.push(format!("u={u:?}, k={k}: {e}"));
                    continue;
                }
            };
            let fd_frame = fd.in_frame(&data.frame);
            let ev = evaluator_tensor_in_frame(table, &sample, *k)?;
            let scale = fd_frame.iter().map(|x| x.abs()).fold(0.0, f64::max).max(if flat { 1.0 } else { 0.0 });
            let comp_err = ev.iter().zip(&fd_frame).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
            let norm_ev = norm.evaluate(&sample)?;
            let norm_fd = fd.norm_sq();
            let norm_scale = norm_fd.max(if flat { 1.0 } else { 0.0 });
            report.points.push(OraclePoint {
                param: u.clone(),
                k: *k,
                h,
                norm_evaluator: norm_ev,
                norm_fd,
                norm_rel_err: (norm_ev - norm_fd).abs() / norm_scale,
                component_rel_err: comp_err,
                asymmetry: fd.asymmetry,
            });
        }
    }
    for &k in ks {
        let pts = report.points.iter().filter(|p| p.k == k);
        let mut s = OracleSummary {
            k,
            max_component_rel_err: 0.0,
            max_norm_rel_err: 0.0,
            max_asymmetry: 0.0,
        };
        for p in pts {
            s.max_component_rel_err = s.max_component_rel_err.max(p.component_rel_err);
            s.max_norm_rel_err = s.max_norm_rel_err.max(p.norm_rel_err);
            s.max_asymmetry = s.max_asymmetry.max(p.asymmetry);
        }
        report.per_k.push(s);
    }
    Ok(report)
}

/// Projection identities plus the evaluator/oracle comparison.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub shape: String,
    pub k_max: usize,
    pub samples: usize,
    pub tol: f64,
    pub prop1: Prop1Report,
    pub oracle: OracleReport,
    pub passed: bool,
}

pub fn verify_identities(im: &Immersion, k_max: usize, samples: usize, tol: f64) -> Result<IdentityReport> {
    let table = RecursionTable::filled_to(k_max.max(3))?;
    let prop1 = verify_prop1(im, samples)?;
    let ks: Vec<usize> = (3..=k_max).collect();
    let oracle = compare_with_fd(im, &table, samples, &ks)?;
    let passed = prop1.failures.is_empty()
        && oracle.failures.is_empty()
        && prop1.max_error() < tol
        && oracle.max_error() < tol;
    Ok(IdentityReport {
        shape: im.to_string(),
        k_max,
        samples,
        tol,
        prop1,
        oracle,
        passed,
    })
}
