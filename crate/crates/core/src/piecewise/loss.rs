// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::roots::{monotone_newton, quadratic_roots};
use super::ROOT_TOL;
use crate::error::{Error, Result};

/// Convex loss used to fit segment means.
///
/// Pieces of a cost function are stored in a loss-specific *coordinate*:
/// the mean itself for the square loss and `log(mean)` for the Poisson loss,
/// so that a Poisson interval may start at `-inf` (mean zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossFamily {
    /// `w (y - mu)^2`, pieces `a mu^2 + b mu + c`.
    Square,
    /// `w (mu - y log mu)`, pieces `a mu + b log(mu) + c`.
    Poisson,
}

impl fmt::Display for LossFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "square" | "gaussian" | "l2" => Ok(LossFamily::Square),
            "poisson" => Ok(LossFamily::Poisson),
            other => Err(Error::Misuse(format!("unknown loss {other:?}"))),
        }
    }
}

/// Three coefficients of a piece. Their meaning depends on the loss:
/// `a mu^2 + b mu + c` (square) or `a mu + b log(mu) + c` (Poisson).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Coeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Coeffs {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Coeffs { a, b, c }
    }

    pub const fn constant(c: f64) -> Self {
        Coeffs { a: 0.0, b: 0.0, c }
    }

    pub fn is_constant(&self) -> bool {
        self.a == 0.0 && self.b == 0.0
    }

    pub(crate) fn sub(&self, other: &Coeffs) -> Coeffs {
        Coeffs::new(self.a - other.a, self.b - other.b, self.c - other.c)
    }

    pub(crate) fn scale_add(&self, factor: f64, add: &Coeffs) -> Coeffs {
        Coeffs::new(
            self.a * factor + add.a,
            self.b * factor + add.b,
            self.c * factor + add.c,
        )
    }
}

impl LossFamily {
    pub fn name(self) -> &'static str {
        match self {
            LossFamily::Square => "square",
            LossFamily::Poisson => "poisson",
        }
    }

    /// Mean to storage coordinate.
    pub fn to_coord(self, mean: f64) -> f64 {
        match self {
            LossFamily::Square => mean,
            LossFamily::Poisson => mean.ln(),
        }
    }

    /// Storage coordinate to mean.
    pub fn to_mean(self, coord: f64) -> f64 {
        match self {
            LossFamily::Square => coord,
            LossFamily::Poisson => coord.exp(),
        }
    }

    pub fn check_value(self, y: f64) -> Result<()> {
        if !y.is_finite() {
            return Err(Error::InvalidValue(y, self.name()));
        }
        if self == LossFamily::Poisson && (y < 0.0 || y.fract() != 0.0) {
            return Err(Error::InvalidValue(y, self.name()));
        }
        Ok(())
    }

    /// Coefficients of `w * loss(y, .)`.
    pub fn loss_coeffs(self, y: f64, w: f64) -> Coeffs {
        match self {
            LossFamily::Square => Coeffs::new(w, -2.0 * w * y, w * y * y),
            LossFamily::Poisson => Coeffs::new(w, -w * y, 0.0),
        }
    }

    /// Direct evaluation of `w * loss(y, mean)` on the mean scale.
    pub fn loss(self, y: f64, w: f64, mean: f64) -> f64 {
        match self {
            LossFamily::Square => w * (y - mean) * (y - mean),
            LossFamily::Poisson => {
                if y == 0.0 {
                    w * mean
                } else {
                    w * (mean - y * mean.ln())
                }
            }
        }
    }

    /// Piece value at a storage coordinate. Poisson limits at `-inf`
    /// follow the sign of the log coefficient.
    pub fn eval(self, k: &Coeffs, x: f64) -> f64 {
        match self {
            LossFamily::Square => (k.a * x + k.b) * x + k.c,
            LossFamily::Poisson => {
                if x == f64::NEG_INFINITY {
                    if k.b == 0.0 {
                        k.c
                    } else if k.b < 0.0 {
                        f64::INFINITY
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    k.a * x.exp() + k.b * x + k.c
                }
            }
        }
    }

    /// Derivative with respect to the storage coordinate.
    pub(crate) fn deriv(self, k: &Coeffs, x: f64) -> f64 {
        match self {
            LossFamily::Square => 2.0 * k.a * x + k.b,
            LossFamily::Poisson => k.a * x.exp() + k.b,
        }
    }

    /// Unconstrained minimiser of a convex piece, in storage coordinates.
    ///
    /// `None` for a constant piece; `-inf`/`+inf` when the piece is monotone
    /// over the whole coordinate line.
    pub(crate) fn argmin_coord(self, k: &Coeffs) -> Option<f64> {
        match self {
            LossFamily::Square => {
                if k.a > 0.0 {
                    Some(-k.b / (2.0 * k.a))
                } else if k.b > 0.0 {
                    Some(f64::NEG_INFINITY)
                } else if k.b < 0.0 {
                    Some(f64::INFINITY)
                } else {
                    None
                }
            }
            LossFamily::Poisson => {
                if k.a > 0.0 && k.b < 0.0 {
                    Some((-k.b / k.a).ln())
                } else if k.a > 0.0 || k.b > 0.0 {
                    Some(f64::NEG_INFINITY)
                } else if k.b < 0.0 {
                    Some(f64::INFINITY)
                } else {
                    None
                }
            }
        }
    }

    /// Solutions of `piece(x) = d` for a convex piece, in increasing order
    /// of storage coordinate.
    pub(crate) fn roots_coord(self, k: &Coeffs, d: f64) -> Vec<f64> {
        match self {
            LossFamily::Square => square_roots(k, d),
            LossFamily::Poisson => poisson_roots(k, d),
        }
    }
}

fn polish_square(k: &Coeffs, d: f64, x: f64) -> f64 {
    let f = (k.a * x + k.b) * x + k.c - d;
    let df = 2.0 * k.a * x + k.b;
    if df == 0.0 {
        return x;
    }
    let y = x - f / df;
    let fy = (k.a * y + k.b) * y + k.c - d;
    if fy.abs() < f.abs() {
        y
    } else {
        x
    }
}

fn square_roots(k: &Coeffs, d: f64) -> Vec<f64> {
    if k.a > 0.0 {
        let xm = -k.b / (2.0 * k.a);
        let m = (k.a * xm + k.b) * xm + k.c;
        if d < m - ROOT_TOL {
            return Vec::new();
        }
        if d - m < ROOT_TOL {
            return vec![xm];
        }
    }
    quadratic_roots(k.a, k.b, k.c - d)
        .into_iter()
        .map(|x| polish_square(k, d, x))
        .collect()
}

fn poisson_roots(k: &Coeffs, d: f64) -> Vec<f64> {
    let (a, b, c) = (k.a, k.b, k.c);
    if a > 0.0 && b < 0.0 {
        let mu_min = -b / a;
        let x_min = mu_min.ln();
        let m = a * mu_min + b * x_min + c;
        if d < m - ROOT_TOL {
            return Vec::new();
        }
        if d - m < ROOT_TOL {
            return vec![x_min];
        }
        // Smaller root in x = log(mu): a e^x + b x + c - d is linear as
        // x -> -inf; its asymptote lies to the left of the root.
        let h = |x: f64| a * x.exp() + b * x + c - d;
        let dh = |x: f64| a * x.exp() + b;
        let mut left = (d - c) / b;
        if !(left < x_min && h(left) > 0.0) {
            let mut step = 1.0;
            left = x_min - step;
            while h(left) <= 0.0 {
                step *= 2.0;
                left = x_min - step;
            }
        }
        let small = monotone_newton(h, dh, left, x_min);

        // Larger root in mu: a mu + b log(mu) + c - d is linear as mu -> inf.
        let g = |mu: f64| a * mu + b * mu.ln() + c - d;
        let dg = |mu: f64| a + b / mu;
        let mut right = (d - c) / a;
        if !(right > mu_min && g(right) > 0.0) {
            right = mu_min * 2.0;
            while g(right) <= 0.0 {
                right *= 2.0;
            }
        }
        let large = monotone_newton(g, dg, right, mu_min).ln();
        vec![small, large]
    } else if a > 0.0 && b == 0.0 {
        let mu = (d - c) / a;
        if mu > 0.0 {
            vec![mu.ln()]
        } else if mu == 0.0 {
            vec![f64::NEG_INFINITY]
        } else {
            Vec::new()
        }
    } else if a == 0.0 && b != 0.0 {
        vec![(d - c) / b]
    } else {
        Vec::new()
    }
}
