use super::immersion::Immersion;
use super::taylor::{Taylor, TaylorSpace};
use crate::error::{Error, Result};

/// Pointwise geometry of an immersion, with `D^a B` stored in the adapted
/// frame: tangent slots range over `0..n`, the ambient label over `0..n+m`
/// (first `n` tangent, then normal).
#[derive(Clone, Debug)]
pub struct JetData {
    pub n: usize,
    pub m: usize,
    pub param: Vec<f64>,
    pub point: Vec<f64>,
    /// Adapted orthonormal frame, `frame[b]` is an ambient vector.
    pub frame: Vec<Vec<f64>>,
    /// Induced metric in parameter coordinates, row-major `n x n`.
    pub metric: Vec<f64>,
    /// `Γ^k_{ij}` at index `(k * n + i) * n + j`.
    pub christoffel: Vec<f64>,
    /// `bjets[a]` holds `D^a B` with index `((t_1 * n + t_2) * n + ...) * (n+m) + label`.
    pub bjets: Vec<Vec<f64>>,
    /// Mean curvature vector in frame components.
    pub mean_curvature: Vec<f64>,
}

impl JetData {
    pub fn ambient_dim(&self) -> usize {
        self.n + self.m
    }

    pub fn a_max(&self) -> usize {
        self.bjets.len() - 1
    }

    /// Component of `D^a B` with tangent indices `slots` (length `a+2`) and label `label`.
    pub fn bjet(&self, a: usize, slots: &[usize], label: usize) -> f64 {
        let mut idx = 0;
        for &t in slots {
            idx = idx * self.n + t;
        }
        self.bjets[a][idx * self.ambient_dim() + label]
    }

    /// `|B|^2`.
    pub fn b_norm_sq(&self) -> f64 {
        self.bjets[0].iter().map(|x| x * x).sum()
    }

    /// Ambient vector of a frame-component vector.
    pub fn to_ambient(&self, comps: &[f64]) -> Vec<f64> {
        let d = self.ambient_dim();
        (0..d).map(|alpha| (0..d).map(|b| comps[b] * self.frame[b][alpha]).sum()).collect()
    }
}

/// Tensor of Taylor series: parameter-coordinate slots (`n` each) followed by one ambient slot.
struct SeriesTensor {
    slots: usize,
    data: Vec<Taylor>,
}

fn gram_schmidt(vectors: &mut Vec<Vec<f64>>, candidate: Vec<f64>) -> bool {
    let mut v = candidate;
    for _ in 0..2 {
        for e in vectors.iter() {
            let dot: f64 = v.iter().zip(e).map(|(a, b)| a * b).sum();
            for (vi, ei) in v.iter_mut().zip(e) {
                *vi -= dot * ei;
            }
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-8 {
        return false;
    }
    vectors.push(v.iter().map(|x| x / norm).collect());
    true
}

/// Geometric jets of `im` at parameter `u`, with `D^a B` up to `a_max`.
///
/// Derivatives of the parametrization come from truncated Taylor
/// arithmetic. `D^{a+1}B` differentiates the ambient components of `D^a B`
/// in the fixed ambient basis, with Christoffel corrections on every tangent
/// slot; the new derivative slot comes first.
pub fn jets(im: &Immersion, u: &[f64], a_max: usize) -> Result<JetData> {
    let n = im.dim();
    let d = im.ambient_dim();
    let m = d - n;
    assert_eq!(u.len(), n, "parameter has wrong dimension");
    let space = TaylorSpace::new(n, a_max + 2);
    let vars: Vec<Taylor> = (0..n).map(|i| Taylor::variable(&space, i, u[i])).collect();
    let phi = im.param(&vars);
    let dphi: Vec<Vec<Taylor>> = (0..n).map(|i| phi.iter().map(|c| c.partial(i)).collect()).collect();
    let ddphi: Vec<Vec<Vec<Taylor>>> = (0..n)
        .map(|i| (0..n).map(|j| dphi[j].iter().map(|c| c.partial(i)).collect()).collect())
        .collect();
    let dot = |a: &[Taylor], b: &[Taylor]| {
        let mut acc = &a[0] * &b[0];
        for (x, y) in a.iter().zip(b).skip(1) {
            acc = &acc + &(x * y);
        }
        acc
    };

    let g: Vec<Vec<Taylor>> = (0..n).map(|i| (0..n).map(|j| dot(&dphi[i], &dphi[j])).collect()).collect();
    let ginv: Vec<Vec<Taylor>> = if n == 1 {
        if g[0][0].value() <= 1e-14 {
            return Err(Error::DegenerateImmersion(u.to_vec(), g[0][0].value()));
        }
        vec![vec![g[0][0].recip()]]
    } else {
        let det = &(&g[0][0] * &g[1][1]) - &(&g[0][1] * &g[0][1]);
        if det.value() <= 1e-14 {
            return Err(Error::DegenerateImmersion(u.to_vec(), det.value()));
        }
        let inv = det.recip();
        vec![
            vec![&g[1][1] * &inv, -&(&g[0][1] * &inv)],
            vec![-&(&g[0][1] * &inv), &g[0][0] * &inv],
        ]
    };
    // Γ^k_ij = g^{kl} <∂_i ∂_j φ, ∂_l φ>
    let mut gamma: Vec<Taylor> = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = Taylor::constant(&space, 0.0);
                for l in 0..n {
                    acc = &acc + &(&ginv[k][l] * &dot(&ddphi[i][j], &dphi[l]));
                }
                gamma.push(acc);
            }
        }
    }
    let gam = |k: usize, i: usize, j: usize| &gamma[(k * n + i) * n + j];

    // B_ij = ∂_i ∂_j φ - Γ^k_ij ∂_k φ
    let mut b = SeriesTensor {
        slots: 2,
        data: Vec::with_capacity(n * n * d),
    };
    for i in 0..n {
        for j in 0..n {
            for alpha in 0..d {
                let mut acc = ddphi[i][j][alpha].clone();
                for k in 0..n {
                    acc = &acc - &(gam(k, i, j) * &dphi[k][alpha]);
                }
                b.data.push(acc);
            }
        }
    }

    let mut series = vec![b];
    for _ in 0..a_max {
        let prev = series.last().expect("nonempty");
        let p = prev.slots;
        let block = n.pow(p as u32) * d;
        let mut data = Vec::with_capacity(n * block);
        for l in 0..n {
            for idx in 0..block {
                let alpha = idx % d;
                let slot_idx = idx / d;
                let digits = digits_of(slot_idx, n, p);
                let mut acc = prev.data[idx].partial(l);
                for q in 0..p {
                    for r in 0..n {
                        let mut moved = digits.clone();
                        moved[q] = r;
                        let j = flat(&moved, n) * d + alpha;
                        acc = &acc - &(gam(r, l, digits[q]) * &prev.data[j]);
                    }
                }
                data.push(acc);
            }
        }
        series.push(SeriesTensor { slots: p + 1, data });
    }

    // adapted frame
    let point: Vec<f64> = phi.iter().map(Taylor::value).collect();
    let tangent_raw: Vec<Vec<f64>> = dphi.iter().map(|v| v.iter().map(Taylor::value).collect()).collect();
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(d);
    // e_t = Σ_i E[t][i] ∂_i φ
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (i, v) in tangent_raw.iter().enumerate() {
        let mut c = vec![0.0; n];
        c[i] = 1.0;
        let mut w = v.clone();
        for (e, ce) in frame.iter().zip(&coeffs) {
            let proj: f64 = v.iter().zip(e).map(|(a, b)| a * b).sum();
            for (wi, ei) in w.iter_mut().zip(e) {
                *wi -= proj * ei;
            }
            for (ci, cei) in c.iter_mut().zip(ce) {
                *ci -= proj * cei;
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::DegenerateImmersion(u.to_vec(), norm));
        }
        frame.push(w.iter().map(|x| x / norm).collect());
        coeffs.push(c.iter().map(|x| x / norm).collect());
    }
    match (n, d) {
        (1, 2) => {
            let t = &frame[0];
            frame.push(vec![-t[1], t[0]]);
        }
        (2, 3) => {
            let (a, c) = (&frame[0], &frame[1]);
            frame.push(vec![
                a[1] * c[2] - a[2] * c[1],
                a[2] * c[0] - a[0] * c[2],
                a[0] * c[1] - a[1] * c[0],
            ]);
        }
        _ => {
            for axis in 0..d {
                if frame.len() == d {
                    break;
                }
                let mut e = vec![0.0; d];
                e[axis] = 1.0;
                gram_schmidt(&mut frame, e);
            }
        }
    }

    let bjets: Vec<Vec<f64>> = series
        .iter()
        .map(|s| {
            let p = s.slots;
            let count = n.pow(p as u32);
            let mut out = vec![0.0; count * d];
            for t_idx in 0..count {
                let ts = digits_of(t_idx, n, p);
                for i_idx in 0..count {
                    let is = digits_of(i_idx, n, p);
                    let w: f64 = ts.iter().zip(&is).map(|(&t, &i)| coeffs[t][i]).product();
                    if w == 0.0 {
                        continue;
                    }
                    for (bl, f) in frame.iter().enumerate() {
                        let comp: f64 = (0..d).map(|alpha| f[alpha] * s.data[i_idx * d + alpha].value()).sum();
                        out[t_idx * d + bl] += w * comp;
                    }
                }
            }
            out
        })
        .collect();

    let mut mean_curvature = vec![0.0; d];
    for t in 0..n {
        for (bl, h) in mean_curvature.iter_mut().enumerate() {
            *h += bjets[0][(t * n + t) * d + bl];
        }
    }

    Ok(JetData {
        n,
        m,
        param: u.to_vec(),
        point,
        frame,
        metric: g.iter().flatten().map(Taylor::value).collect(),
        christoffel: gamma.iter().map(Taylor::value).collect(),
        bjets,
        mean_curvature,
    })
}

fn digits_of(mut idx: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in (0..len).rev() {
        out[slot] = idx % base;
        idx /= base;
    }
    out
}

fn flat(digits: &[usize], base: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * base + x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn circle_second_fundamental_form() {
        let r = 2.5;
        let data = jets(&Immersion::circle(r), &[0.0], 2).unwrap();
        // frame: tangent (0,1), normal rot90 = (-1,0) pointing inward
        assert_relative_eq!(data.frame[1][0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(data.bjet(0, &[0, 0], 1), 1.0 / r, epsilon = 1e-13);
        assert!(data.bjet(0, &[0, 0], 0).abs() < 1e-13);
        assert!(data.bjet(1, &[0, 0, 0], 1).abs() < 1e-12);
        // tangent-label part of D^1 B: -<B, B> e_t
        assert_relative_eq!(data.bjet(1, &[0, 0, 0], 0), -1.0 / (r * r), epsilon = 1e-12);
    }

    #[test]
    fn ellipse_curvature_at_vertex() {
        let data = jets(&Immersion::ellipse(2.0, 1.0), &[0.0], 0).unwrap();
        assert_relative_eq!(data.bjet(0, &[0, 0], 1), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn taylor_derivatives_match_central_differences() {
        let im = Immersion::torus3(2.0, 0.5);
        let u = [0.4, 1.1];
        let space = TaylorSpace::new(2, 2);
        let vars: Vec<Taylor> = (0..2).map(|i| Taylor::variable(&space, i, u[i])).collect();
        let phi = im.param(&vars);
        let h = 1e-4;
        for c in 0..3 {
            let f = |a: f64, b: f64| im.point(&[u[0] + a, u[1] + b])[c];
            let fd_uv = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
            assert_relative_eq!(phi[c].derivative_at(&[1, 1]), fd_uv, epsilon = 1e-6);
            let fd_uu = (f(h, 0.0) - 2.0 * f(0.0, 0.0) + f(-h, 0.0)) / (h * h);
            assert_relative_eq!(phi[c].derivative_at(&[2, 0]), fd_uu, epsilon = 1e-5);
        }
    }
}
