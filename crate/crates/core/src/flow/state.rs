use crate::error::{Error, Result};
use crate::geometry::Immersion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;

/// Closed polygon in the plane, nodes in periodic order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveState {
    pub nodes: Vec<[f64; 2]>,
    pub time: f64,
}

impl CurveState {
    pub fn new(nodes: Vec<[f64; 2]>) -> Result<Self> {
        let n = nodes.len();
        if n < 3 {
            return Err(Error::InvalidState(format!("{n} nodes do not form a polygon")));
        }
        for i in 0..n {
            let (p, q) = (nodes[i], nodes[(i + 1) % n]);
            if p == q {
                return Err(Error::InvalidState(format!("nodes {i} and {} coincide", (i + 1) % n)));
            }
        }
        Ok(CurveState { nodes, time: 0.0 })
    }

    /// Samples a closed plane curve at `n` equally spaced parameter values.
    pub fn from_immersion(im: &Immersion, n: usize) -> Result<Self> {
        if im.dim() != 1 || im.ambient_dim() != 2 || !im.is_periodic() {
            return Err(Error::InvalidArgument(format!("{im} is not a closed plane curve")));
        }
        let nodes = (0..n)
            .map(|i| {
                let p = im.point(&[2.0 * PI * i as f64 / n as f64]);
                [p[0], p[1]]
            })
            .collect();
        Self::new(nodes)
    }

    /// Moves every node by an independent uniform offset in
    /// `[-amplitude, amplitude]²`.
    pub fn perturbed(&self, amplitude: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for p in &mut out.nodes {
            p[0] += rng.gen_range(-amplitude..=amplitude);
            p[1] += rng.gen_range(-amplitude..=amplitude);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Perimeter of the polygon.
    pub fn polygon_length(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let (p, q) = (self.nodes[i], self.nodes[(i + 1) % n]);
                (q[0] - p[0]).hypot(q[1] - p[1])
            })
            .sum()
    }

    /// Signed area (positive for counter-clockwise order).
    pub fn area(&self) -> f64 {
        let n = self.len();
        0.5 * (0..n)
            .map(|i| {
                let (p, q) = (self.nodes[i], self.nodes[(i + 1) % n]);
                p[0] * q[1] - q[0] * p[1]
            })
            .sum::<f64>()
    }

    /// `1 - 4πA/L²`: zero for a circle, positive otherwise.
    pub fn isoperimetric_deviation(&self) -> f64 {
        let l = self.polygon_length();
        1.0 - 4.0 * PI * self.area().abs() / (l * l)
    }

    /// Radius of the algebraic least-squares circle through the nodes.
    pub fn radius_fit(&self) -> f64 {
        // minimize Σ (x² + y² + a x + b y + c)²
        let mut m = [[0.0; 3]; 3];
        let mut rhs = [0.0; 3];
        for p in &self.nodes {
            let row = [p[0], p[1], 1.0];
            let z = -(p[0] * p[0] + p[1] * p[1]);
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += row[i] * row[j];
                }
                rhs[i] += row[i] * z;
            }
        }
        let [a, b, c] = solve3(m, rhs);
        (0.25 * (a * a + b * b) - c).max(0.0).sqrt()
    }

    /// Largest relative spread of node distances from the centroid.
    pub fn radial_spread(&self) -> f64 {
        let n = self.len() as f64;
        let cx = self.nodes.iter().map(|p| p[0]).sum::<f64>() / n;
        let cy = self.nodes.iter().map(|p| p[1]).sum::<f64>() / n;
        let r: Vec<f64> = self.nodes.iter().map(|p| (p[0] - cx).hypot(p[1] - cy)).collect();
        let max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = r.iter().copied().fold(f64::INFINITY, f64::min);
        (max - min) / max
    }

    /// First pair of non-adjacent edges that touch, if any.
    pub fn self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.len();
        let seg = |i: usize| (self.nodes[i], self.nodes[(i + 1) % n]);
        // sweep over edges sorted by their left end
        let mut order: Vec<(f64, f64, usize)> = (0..n)
            .map(|i| {
                let (p, q) = seg(i);
                (p[0].min(q[0]), p[0].max(q[0]), i)
            })
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (a, &(_, right, i)) in order.iter().enumerate() {
            for &(left, _, j) in &order[a + 1..] {
                if left > right {
                    break;
                }
                let adjacent = (i + 1) % n == j || (j + 1) % n == i;
                if !adjacent && segments_touch(seg(i), seg(j)) {
                    return Some((i.min(j), i.max(j)));
                }
            }
        }
        None
    }

    /// Resamples the curve at equal arc length along its trigonometric
    /// interpolant, keeping node 0 fixed.
    pub fn redistributed(&self) -> Self {
        let n = self.len();
        let coeffs: Vec<Vec<Complex64>> = (0..2)
            .map(|axis| {
                let mut buf: Vec<Complex64> = self.nodes.iter().map(|p| Complex64::new(p[axis], 0.0)).collect();
                FftPlanner::new().plan_fft_forward(n).process(&mut buf);
                buf.iter().map(|c| c / n as f64).collect()
            })
            .collect();
        let freq = |j: usize| if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        // for real data the real part of the sum is the real interpolant
        let eval = |u: f64, deriv: bool| -> [f64; 2] {
            let mut out = [0.0; 2];
            for (axis, c) in coeffs.iter().enumerate() {
                out[axis] = c
                    .iter()
                    .enumerate()
                    .map(|(j, cj)| {
                        let w = freq(j);
                        let term = cj * Complex64::from_polar(1.0, w * u);
                        if deriv {
                            (term * Complex64::new(0.0, w)).re
                        } else {
                            term.re
                        }
                    })
                    .sum();
            }
            out
        };
        // arc length as a spectral antiderivative of the speed sampled on a
        // fine grid, inverted by Newton from the nearest grid point
        let fine = 8 * n;
        let du = 2.0 * PI / fine as f64;
        let speed = |u: f64| {
            let d = eval(u, true);
            d[0].hypot(d[1])
        };
        let mut buf: Vec<Complex64> = (0..fine).map(|i| Complex64::new(speed(i as f64 * du), 0.0)).collect();
        FftPlanner::new().plan_fft_forward(fine).process(&mut buf);
        let modes: Vec<Complex64> = buf.iter().map(|c| c / fine as f64).collect();
        let mean = modes[0].re;
        let ffreq = |j: usize| if j <= fine / 2 { j as f64 } else { j as f64 - fine as f64 };
        let arc = |u: f64| -> f64 {
            let periodic: f64 = modes
                .iter()
                .enumerate()
                .skip(1)
                .filter(|&(j, _)| 2 * j != fine)
                .map(|(j, c)| {
                    let w = ffreq(j);
                    (c * (Complex64::from_polar(1.0, w * u) - 1.0) / Complex64::new(0.0, w)).re
                })
                .sum();
            mean * u + periodic
        };
        let total = 2.0 * PI * mean;
        let grid: Vec<f64> = (0..=fine).map(|i| arc(i as f64 * du)).collect();
        let mut nodes = Vec::with_capacity(n);
        let mut seg = 0;
        for i in 0..n {
            let target = total * i as f64 / n as f64;
            while grid[seg + 1] < target {
                seg += 1;
            }
            let mut u = (seg as f64 + (target - grid[seg]) / (grid[seg + 1] - grid[seg])) * du;
            for _ in 0..8 {
                let step = (arc(u) - target) / speed(u);
                u -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            nodes.push(eval(u, false));
        }
        CurveState { nodes, time: self.time }
    }
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).expect("rows");
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for c in col..3 {
                m[row][c] -= f * m[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|c| m[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    x
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_touch((p1, p2): ([f64; 2], [f64; 2]), (q1, q2): ([f64; 2], [f64; 2])) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Symmetric Hausdorff distance between two closed polygons.
pub fn hausdorff(a: &CurveState, b: &CurveState) -> f64 {
    fn one_sided(a: &CurveState, b: &CurveState) -> f64 {
        let n = b.len();
        a.nodes
            .iter()
            .map(|p| {
                (0..n)
                    .map(|i| point_segment(*p, b.nodes[i], b.nodes[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
    one_sided(a, b).max(one_sided(b, a))
}

fn point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}
