use super::taylor::Real;
use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Analytic model shapes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Circle { r: f64 },
    Ellipse { a: f64, b: f64 },
    /// Torus of revolution in R^3 with center-circle radius `big_r` and tube radius `r`.
    Torus3 { big_r: f64, r: f64 },
    /// Flat torus `S^1(r) x S^1(r)` in R^4.
    Clifford4 { r: f64 },
    Line,
    Plane,
}

/// Parametrized submanifold: a model shape, optionally scaled and rotated
/// in the ambient space.
#[derive(Clone, Debug, PartialEq)]
pub struct Immersion {
    pub shape: Shape,
    scale: f64,
    rotation: Option<Vec<Vec<f64>>>,
}

impl Immersion {
    pub fn new(shape: Shape) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::ShapeParse(format!("{name} must be positive, got {v}")))
            }
        };
        match shape {
            Shape::Circle { r } | Shape::Clifford4 { r } => positive("R", r)?,
            Shape::Ellipse { a, b } => {
                positive("a", a)?;
                positive("b", b)?;
            }
            Shape::Torus3 { big_r, r } => {
                positive("R", big_r)?;
                positive("r", r)?;
                if r >= big_r {
                    return Err(Error::ShapeParse(format!("torus needs r < R, got r={r}, R={big_r}")));
                }
            }
            Shape::Line | Shape::Plane => {}
        }
        Ok(Immersion {
            shape,
            scale: 1.0,
            rotation: None,
        })
    }

    pub fn circle(r: f64) -> Self {
        Self::new(Shape::Circle { r }).expect("valid circle")
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        Self::new(Shape::Ellipse { a, b }).expect("valid ellipse")
    }

    pub fn torus3(big_r: f64, r: f64) -> Self {
        Self::new(Shape::Torus3 { big_r, r }).expect("valid torus")
    }

    pub fn clifford4(r: f64) -> Self {
        Self::new(Shape::Clifford4 { r }).expect("valid Clifford torus")
    }

    /// Copy scaled by `lambda` about the origin.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.scale *= lambda;
        out
    }

    /// Copy rotated by the orthogonal matrix `q` (rows are images of basis vectors).
    pub fn rotated(&self, q: Vec<Vec<f64>>) -> Self {
        let d = self.ambient_dim();
        assert!(q.len() == d && q.iter().all(|row| row.len() == d), "rotation must be {d}x{d}");
        let mut out = self.clone();
        out.rotation = Some(match &self.rotation {
            None => q,
            Some(old) => (0..d)
                .map(|i| (0..d).map(|j| (0..d).map(|l| q[i][l] * old[l][j]).sum()).collect())
                .collect(),
        });
        out
    }

    pub fn dim(&self) -> usize {
        match self.shape {
            Shape::Circle { .. } | Shape::Ellipse { .. } | Shape::Line => 1,
            _ => 2,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self.shape {
            Shape::Circle { .. } | Shape::Ellipse { .. } | Shape::Line => 2,
            Shape::Torus3 { .. } | Shape::Plane => 3,
            Shape::Clifford4 { .. } => 4,
        }
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim() - self.dim()
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.shape, Shape::Line | Shape::Plane)
    }

    /// Box of parameters used to seed projections: periodic shapes use
    /// `[0, 2π)` per coordinate.
    pub fn parameter_box(&self) -> (f64, f64) {
        if self.is_flat() {
            (-10.0 * self.scale, 10.0 * self.scale)
        } else {
            (0.0, 2.0 * PI)
        }
    }

    pub fn is_periodic(&self) -> bool {
        !self.is_flat()
    }

    /// Half-width of the neighborhood in which projection is trusted, kept
    /// well below the focal distance.
    pub fn half_width(&self) -> f64 {
        let w = match self.shape {
            Shape::Circle { r } => r / 2.0,
            Shape::Ellipse { a, b } => {
                let (big, small) = if a >= b { (a, b) } else { (b, a) };
                small * small / (2.0 * big)
            }
            Shape::Torus3 { r, .. } => r / 2.0,
            Shape::Clifford4 { r } => r / 2.0,
            Shape::Line | Shape::Plane => 1.0e3,
        };
        w * self.scale
    }

    /// Ambient position of the parameter point `u`.
    pub fn param<T: Real>(&self, u: &[T]) -> Vec<T> {
        let base: Vec<T> = match self.shape {
            Shape::Circle { r } => vec![u[0].cos().scale(r), u[0].sin().scale(r)],
            Shape::Ellipse { a, b } => vec![u[0].cos().scale(a), u[0].sin().scale(b)],
            Shape::Torus3 { big_r, r } => {
                let ring = u[1].cos().scale(r).add_const(big_r);
                vec![ring.mul(&u[0].cos()), ring.mul(&u[0].sin()), u[1].sin().scale(r)]
            }
            Shape::Clifford4 { r } => vec![
                u[0].cos().scale(r),
                u[0].sin().scale(r),
                u[1].cos().scale(r),
                u[1].sin().scale(r),
            ],
            Shape::Line => vec![u[0].clone(), u[0].lift(0.0)],
            Shape::Plane => vec![u[0].clone(), u[1].clone(), u[0].lift(0.0)],
        };
        let scaled: Vec<T> = base.iter().map(|c| c.scale(self.scale)).collect();
        match &self.rotation {
            None => scaled,
            Some(q) => q
                .iter()
                .map(|row| {
                    let mut acc = scaled[0].scale(row[0]);
                    for (c, &w) in scaled.iter().zip(row).skip(1) {
                        acc = acc.add(&c.scale(w));
                    }
                    acc
                })
                .collect(),
        }
    }

    pub fn point(&self, u: &[f64]) -> Vec<f64> {
        self.param(u)
    }
}

fn parse_params(body: &str) -> Result<Vec<(String, f64)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::ShapeParse(format!("expected key=value, got '{kv}'")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::ShapeParse(format!("bad number '{value}' for '{key}'")))?;
            Ok((key.trim().to_string(), value))
        })
        .collect()
}

fn take(params: &[(String, f64)], allowed: &[(&str, f64)], shape: &str) -> Result<Vec<f64>> {
    for (key, _) in params {
        if !allowed.iter().any(|(k, _)| k == key) {
            return Err(Error::ShapeParse(format!("unknown parameter '{key}' for {shape}")));
        }
    }
    Ok(allowed
        .iter()
        .map(|(k, default)| params.iter().rev().find(|(p, _)| p == k).map_or(*default, |(_, v)| *v))
        .collect())
}

impl FromStr for Immersion {
    type Err = Error;

    /// Parses `circle:R=1`, `ellipse:a=2,b=1`, `torus3:R=2,r=0.5`,
    /// `clifford4:R=1`, `line` or `plane`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, body) = s.split_once(':').unwrap_or((s, ""));
        let params = parse_params(body)?;
        let shape = match name.trim() {
            "circle" => Shape::Circle {
                r: take(&params, &[("R", 1.0)], "circle")?[0],
            },
            "ellipse" => {
                let v = take(&params, &[("a", 2.0), ("b", 1.0)], "ellipse")?;
                Shape::Ellipse { a: v[0], b: v[1] }
            }
            "torus3" => {
                let v = take(&params, &[("R", 2.0), ("r", 0.5)], "torus3")?;
                Shape::Torus3 { big_r: v[0], r: v[1] }
            }
            "clifford4" => Shape::Clifford4 {
                r: take(&params, &[("R", 1.0)], "clifford4")?[0],
            },
            "line" => {
                take(&params, &[], "line")?;
                Shape::Line
            }
            "plane" => {
                take(&params, &[], "plane")?;
                Shape::Plane
            }
            other => return Err(Error::ShapeParse(format!("unknown shape '{other}'"))),
        };
        Immersion::new(shape)
    }
}

impl fmt::Display for Immersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.shape {
            Shape::Circle { r } => write!(f, "circle:R={r}")?,
            Shape::Ellipse { a, b } => write!(f, "ellipse:a={a},b={b}")?,
            Shape::Torus3 { big_r, r } => write!(f, "torus3:R={big_r},r={r}")?,
            Shape::Clifford4 { r } => write!(f, "clifford4:R={r}")?,
            Shape::Line => write!(f, "line")?,
            Shape::Plane => write!(f, "plane")?,
        }
        if self.scale != 1.0 {
            write!(f, " (scaled by {})", self.scale)?;
        }
        if self.rotation.is_some() {
            write!(f, " (rotated)")?;
        }
        Ok(())
    }
}

/// Rotation of the ambient space acting on coordinates `i` and `j` by `angle`.
pub fn plane_rotation(d: usize, i: usize, j: usize, angle: f64) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = (0..d).map(|r| (0..d).map(|c| if r == c { 1.0 } else { 0.0 }).collect()).collect();
    let (s, c) = angle.sin_cos();
    q[i][i] = c;
    q[i][j] = -s;
    q[j][i] = s;
    q[j][j] = c;
    q
}
