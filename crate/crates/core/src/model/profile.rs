use serde::{Deserialize, Serialize};

use super::grid::Grid1D;
use crate::error::{Error, Result};

/// Minimal gap 1 + u kept by every operation that divides by it.
pub const DELTA_FLOOR: f64 = 1e-6;

/// Plate deflection sampled on a [`Grid1D`].
///
/// Derivatives use centered differences with reflected ghost nodes
/// `u[-k] = u[k]`, `u[n-1+k] = u[n-1-k]`, which encode `∂ₓu(±1) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeflectionProfile {
    grid: Grid1D,
    values: Vec<f64>,
}

impl DeflectionProfile {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NotAdmissible(format!(
                "non-finite value at node {i}"
            )));
        }
        Ok(DeflectionProfile { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        DeflectionProfile {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        DeflectionProfile {
            grid,
            values: grid.sample(f),
        }
    }

    /// Same grid, new values. Length must match.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        DeflectionProfile::new(self.grid, values)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `u(±1) = 0`; the slope condition holds by the ghost convention.
    pub fn is_clamped(&self) -> bool {
        self.values[0] == 0.0 && self.values[self.len() - 1] == 0.0
    }

    /// Membership in the discrete obstacle set: -1 < u ≤ 0 at every node.
    pub fn is_admissible(&self) -> bool {
        self.values.iter().all(|&v| v > -1.0 && v <= 0.0)
    }

    pub fn evenness_defect(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| (self.values[i] - self.values[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }

    pub fn require_admissible(&self) -> Result<()> {
        if !self.is_clamped() {
            return Err(Error::NotAdmissible("u(±1) must vanish".into()));
        }
        if let Some(i) = self.values.iter().position(|&v| v > 0.0) {
            return Err(Error::NotAdmissible(format!(
                "u = {} > 0 at node {i}",
                self.values[i]
            )));
        }
        self.require_gap()
    }

    /// Fails with [`Error::Touchdown`] unless min u > -1 + [`DELTA_FLOOR`].
    pub fn require_gap(&self) -> Result<()> {
        let min_u = self.min();
        if min_u <= -1.0 + DELTA_FLOOR {
            return Err(Error::Touchdown {
                min_u,
                floor: DELTA_FLOOR,
            });
        }
        Ok(())
    }

    pub fn scaled(&self, t: f64) -> Self {
        DeflectionProfile {
            grid: self.grid,
            values: self.values.iter().map(|v| t * v).collect(),
        }
    }

    /// `self + s * dir`.
    pub fn axpy(&self, s: f64, dir: &DeflectionProfile) -> Result<Self> {
        if dir.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: dir.len(),
            });
        }
        Ok(DeflectionProfile {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&dir.values)
                .map(|(u, v)| u + s * v)
                .collect(),
        })
    }

    /// Average with the mirror image; the result is exactly even.
    pub fn symmetrized(&self) -> Self {
        let n = self.len();
        let mut values = self.values.clone();
        for i in 0..n / 2 {
            let avg = 0.5 * (self.values[i] + self.values[n - 1 - i]);
            values[i] = avg;
            values[n - 1 - i] = avg;
        }
        DeflectionProfile {
            grid: self.grid,
            values,
        }
    }

    /// Project onto u ≤ 0.
    pub fn clamped_nonpositive(&self) -> Self {
        DeflectionProfile {
            grid: self.grid,
            values: self.values.iter().map(|&v| v.min(0.0)).collect(),
        }
    }

    /// Linear interpolation between nodes.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.len();
        let s = ((x + 1.0) / self.grid.h()).clamp(0.0, (n - 1) as f64);
        let r = s.round();
        if (s - r).abs() < 1e-9 {
            return self.values[r as usize];
        }
        let i = (s.floor() as usize).min(n - 2);
        let w = s - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }

    pub fn d1(&self) -> Vec<f64> {
        d1(&self.values, self.grid.h())
    }

    pub fn d2(&self) -> Vec<f64> {
        d2(&self.values, self.grid.h())
    }

    /// Fourth difference on interior nodes; boundary entries are zero.
    pub fn d4(&self) -> Vec<f64> {
        d4(&self.values, self.grid.h())
    }

    /// ‖∂ₓ²u‖² as the trapezoid sum of `d2` squared.
    ///
    /// Its gradient with respect to the interior values in the `h`-weighted
    /// inner product is exactly `2 d4(u)`.
    pub fn hessian_norm_sq(&self) -> f64 {
        let h = self.grid.h();
        let d = self.d2();
        let n = d.len();
        let interior: f64 = d[1..n - 1].iter().map(|v| v * v).sum();
        h * (interior + 0.5 * (d[0] * d[0] + d[n - 1] * d[n - 1]))
    }

    /// ‖∂ₓu‖² from forward differences, the summation-by-parts partner of
    /// `d2`: equals `-h Σ u_i d2(u)_i` for clamped u.
    pub fn grad_norm_sq(&self) -> f64 {
        let h = self.grid.h();
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
            .sum::<f64>()
            / h
    }
}

/// Centered first difference with reflected ghosts (zero at both ends).
pub fn d1(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    out
}

/// Centered second difference with reflected ghosts.
pub fn d2(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let h2 = h * h;
    let mut out = vec![0.0; n];
    out[0] = 2.0 * (v[1] - v[0]) / h2;
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2;
    }
    out[n - 1] = 2.0 * (v[n - 2] - v[n - 1]) / h2;
    out
}

/// Five-point fourth difference on interior nodes, ghosts reflected.
pub fn d4(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let h4 = h.powi(4);
    let at = |k: isize| -> f64 {
        let last = (n - 1) as isize;
        let k = if k < 0 {
            -k
        } else if k > last {
            2 * last - k
        } else {
            k
        };
        v[k as usize]
    };
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate().take(n - 1).skip(1) {
        let i = i as isize;
        *o = (at(i - 2) - 4.0 * at(i - 1) + 6.0 * at(i) - 4.0 * at(i + 1) + at(i + 2)) / h4;
    }
    out
}

/// `h Σ a_i b_i` over interior nodes: the L² pairing used for gradients.
pub fn interior_dot(a: &[f64], b: &[f64], h: f64) -> f64 {
    let n = a.len();
    h * a[1..n - 1]
        .iter()
        .zip(&b[1..n - 1])
        .map(|(x, y)| x * y)
        .sum::<f64>()
}

pub fn interior_norm(a: &[f64], h: f64) -> f64 {
    interior_dot(a, a, h).sqrt()
}
