use super::distance::DistanceField;
use super::immersion::Immersion;
use super::jets::{jets, JetData};
use crate::error::Result;
use serde::Serialize;

/// Default ratio of FD step to local curvature radius.
pub const STEP_FRACTION: f64 = 1e-2;

/// Max absolute errors of the projection identities over a sample set.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Prop1Report {
    pub shape: String,
    pub samples: usize,
    /// `∇A = π` at points off the submanifold.
    pub grad_a_projection: f64,
    /// `∇²A` equals the tangent projection on the submanifold.
    pub hessian_tangent_projection: f64,
    /// `∇²η` equals twice the normal projection.
    pub eta_hessian_normal_projection: f64,
    /// `B^k_ij = A_ijs (δ_ks - A_ks)`.
    pub b_from_a: f64,
    /// `A_ijk = B^k_ij + B^i_jk + B^j_ki`.
    pub a3_from_b: f64,
    /// `H^k = Σ_i A_iik`.
    pub mean_curvature_trace: f64,
    pub max_asymmetry: f64,
    pub failures: Vec<String>,
}

impl Prop1Report {
    pub fn max_error(&self) -> f64 {
        [
            self.grad_a_projection,
            self.hessian_tangent_projection,
            self.eta_hessian_normal_projection,
            self.b_from_a,
            self.a3_from_b,
            self.mean_curvature_trace,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Deterministic, well-spread parameter points.
pub fn sample_params(im: &Immersion, samples: usize) -> Vec<Vec<f64>> {
    let golden = [0.618_033_988_749_894_9, 0.754_877_666_246_692_7];
    (0..samples)
        .map(|i| {
            let t = i as f64 + 0.5;
            if im.is_flat() {
                (0..im.dim()).map(|c| 2.0 * (t * golden[c]).fract() - 1.0).collect()
            } else if im.dim() == 1 {
                vec![2.0 * std::f64::consts::PI * t / samples as f64 + 0.1]
            } else {
                (0..2).map(|c| 2.0 * std::f64::consts::PI * (t * golden[c]).fract()).collect()
            }
        })
        .collect()
}

/// FD step at a point: `STEP_FRACTION` times the curvature radius `1/|B|`.
pub fn default_step(data: &JetData) -> f64 {
    let b = data.b_norm_sq().sqrt();
    if b < 1e-12 {
        STEP_FRACTION
    } else {
        STEP_FRACTION / b
    }
}

/// Ambient components `B^k_{ij}` of the second fundamental form extended
/// by the tangent projection, index `(i * d + j) * d + k`.
pub fn ambient_b(data: &JetData) -> Vec<f64> {
    let (n, d) = (data.n, data.ambient_dim());
    let mut out = vec![0.0; d * d * d];
    for t in 0..n {
        for u in 0..n {
            let vec = data.to_ambient(&data.bjets[0][(t * n + u) * d..(t * n + u + 1) * d]);
            for i in 0..d {
                for j in 0..d {
                    let w = data.frame[t][i] * data.frame[u][j];
                    for k in 0..d {
                        out[(i * d + j) * d + k] += w * vec[k];
                    }
                }
            }
        }
    }
    out
}

pub fn tangent_projection(data: &JetData) -> Vec<f64> {
    let d = data.ambient_dim();
    let mut p = vec![0.0; d * d];
    for e in &data.frame[..data.n] {
        for i in 0..d {
            for j in 0..d {
                p[i * d + j] += e[i] * e[j];
            }
        }
    }
    p
}

/// Checks the projection identities at `samples` points against the jets.
pub fn verify_prop1(im: &Immersion, samples: usize) -> Result<Prop1Report> {
    let df = DistanceField::new(im.clone());
    let d = im.ambient_dim();
    let mut report = Prop1Report {
        shape: im.to_string(),
        samples,
        ..Default::default()
    };
    let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    for u in sample_params(im, samples) {
        let data = jets(im, &u, 0)?;
        let x = &data.point;
        let h = default_step(&data);

        let normal = &data.frame[data.n];
        let offset = 0.4 * df.half_width.min(1.0);
        let off: Vec<f64> = x.iter().zip(normal).map(|(p, v)| p + offset * v).collect();
        let step = (h * 0.5).min(0.1 * (df.half_width - offset));
        match (df.fd_grad_a(&off, step), df.project(&off)) {
            (Ok(grad), Ok(proj)) => {
                report.grad_a_projection = report.grad_a_projection.max(max_diff(&grad, &proj.foot));
            }
            (Err(e), _) | (_, Err(e)) => report.failures.push(format!("u={u:?}: {e}")),
        }

        let (a2, a3) = match (df.fd_ak(x, 2, h), df.fd_ak(x, 3, h)) {
            (Ok(a2), Ok(a3)) => (a2, a3),
            (Err(e), _) | (_, Err(e)) => {
                report.failures.push(format!("u={u:?}: {e}"));
                continue;
            }
        };
        report.max_asymmetry = report.max_asymmetry.max(a2.asymmetry).max(a3.asymmetry);
        let proj = tangent_projection(&data);
        let hess_err = max_diff(&a2.data, &proj);
        report.hessian_tangent_projection = report.hessian_tangent_projection.max(hess_err);
        // ∇²η = 2(I - ∇²A), normal projection = I - P
        report.eta_hessian_normal_projection = report.eta_hessian_normal_projection.max(2.0 * hess_err);

        let b = ambient_b(&data);
        let mut b_err: f64 = 0.0;
        let mut a3_err: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let mut rhs = 0.0;
                    for s in 0..d {
                        let delta = if k == s { 1.0 } else { 0.0 };
                        rhs += a3.get(&[i, j, s]) * (delta - a2.get(&[k, s]));
                    }
                    b_err = b_err.max((b[(i * d + j) * d + k] - rhs).abs());
                    let sum = b[(i * d + j) * d + k] + b[(j * d + k) * d + i] + b[(k * d + i) * d + j];
                    a3_err = a3_err.max((a3.get(&[i, j, k]) - sum).abs());
                }
            }
        }
        report.b_from_a = report.b_from_a.max(b_err);
        report.a3_from_b = report.a3_from_b.max(a3_err);

        let h_amb = data.to_ambient(&data.mean_curvature);
        for k in 0..d {
            let trace: f64 = (0..d).map(|i| a3.get(&[i, i, k])).sum();
            report.mean_curvature_trace = report.mean_curvature_trace.max((trace - h_amb[k]).abs());
        }
    }
    Ok(report)
}
