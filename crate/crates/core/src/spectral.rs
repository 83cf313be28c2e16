//! First eigenpair of the clamped operator `β∂⁴ − τ∂²` and the feasible
//! seed `η_ρ φ₁` on an electrostatic energy level set.

use serde::Serialize;

use crate::banded::BandMatrix;
use crate::energy::{rescale_to_energy, Electrostatics};
use crate::error::{Error, Result};
use crate::model::{interior_norm, DeflectionProfile, Grid1D, Grid2D, ModelParams};

/// Stagnation tolerance of inverse iteration (relative change of the iterate).
pub const EIGEN_TOL: f64 = 1e-10;
pub const EIGEN_MAX_ITER: usize = 200;
/// Upper end of the seed bracket in `η`.
pub const SEED_ETA_MAX: f64 = 0.999;

/// `β D4 − tension D2` on the `n − 2` interior unknowns, clamped ghosts.
///
/// Rows 1 and `n−2` of `D4` read `(7, −4, 1)/h⁴` after reflecting
/// `u_{−1} = u_1`; the matrix is symmetric pentadiagonal.
pub fn clamped_operator(beta: f64, tension: f64, grid: &Grid1D) -> BandMatrix {
    let m = grid.len() - 2;
    let h = grid.h();
    let c4 = beta / h.powi(4);
    let c2 = tension / (h * h);
    let mut a = BandMatrix::zeros(m, 2, 2);
    for r in 0..m {
        let diag = if r == 0 || r == m - 1 { 7.0 } else { 6.0 };
        a.add(r, r, c4 * diag + 2.0 * c2);
        if r + 1 < m {
            a.add(r, r + 1, -4.0 * c4 - c2);
            a.add(r + 1, r, -4.0 * c4 - c2);
        }
        if r + 2 < m {
            a.add(r, r + 2, c4);
            a.add(r + 2, r, c4);
        }
    }
    a
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub mu1: f64,
    pub phi1: DeflectionProfile,
    /// `‖Aφ − μφ‖ / (μ‖φ‖)` in the discrete L² norm.
    pub residual: f64,
    pub iterations: usize,
}

impl EigenPair {
    pub fn csv(&self) -> String {
        let mut s = String::from("x,phi1\n");
        for (x, v) in self.phi1.grid().nodes().iter().zip(self.phi1.values()) {
            s.push_str(&format!("{x:.16e},{v:.16e}\n"));
        }
        s
    }
}

/// Smallest eigenvalue of the discrete clamped operator by inverse iteration.
///
/// The eigenvector is symmetrized, made non-positive and scaled so that its
/// minimum is exactly −1.
pub fn clamped_eigenpair(p: &ModelParams, grid: &Grid1D) -> Result<EigenPair> {
    let a = clamped_operator(p.beta, p.tau, grid);
    let lu = a.clone().factor()?;
    let m = grid.len() - 2;
    let mut x = vec![1.0; m];
    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while iterations < EIGEN_MAX_ITER {
        iterations += 1;
        let mut y = lu.solve(&x);
        let scale = y.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        y.iter_mut().for_each(|v| *v /= scale);
        change = x
            .iter()
            .zip(&y)
            .fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
        x = y;
        if change <= EIGEN_TOL {
            break;
        }
    }
    if change > EIGEN_TOL {
        return Err(Error::NonConvergence {
            what: "inverse iteration",
            iterations,
            residual: change,
        });
    }
    let mut full = vec![0.0; grid.len()];
    full[1..=m].copy_from_slice(&x);
    let sym = DeflectionProfile::new(*grid, full)?.symmetrized();
    let peak = sym
        .values()
        .iter()
        .fold(0.0f64, |s, v| if v.abs() > s.abs() { *v } else { s });
    let mut values: Vec<f64> = sym.values().iter().map(|v| -v / peak).collect();
    // exact −1 at the extremum despite the division
    let imin = (0..values.len())
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .unwrap_or(0);
    values[imin] = -1.0;
    values[grid.mirror(imin)] = -1.0;
    for v in values.iter_mut() {
        if *v > 0.0 {
            *v = 0.0;
        }
    }
    let phi1 = DeflectionProfile::new(*grid, values)?;
    let interior = &phi1.values()[1..=m];
    let ax = a.matvec(interior);
    let num: f64 = ax.iter().zip(interior).map(|(a, b)| a * b).sum();
    let den: f64 = interior.iter().map(|v| v * v).sum();
    let mu1 = num / den;
    let r2: f64 = ax
        .iter()
        .zip(interior)
        .map(|(a, b)| (a - mu1 * b).powi(2))
        .sum();
    let residual = (r2 / den).sqrt() / mu1;
    Ok(EigenPair {
        mu1,
        phi1,
        residual,
        iterations,
    })
}

/// `η_ρ φ₁` with `E_e(η_ρ φ₁) = ρ`.
#[derive(Debug, Clone)]
pub struct FeasibleSeed {
    pub eta: f64,
    pub profile: DeflectionProfile,
    pub state: Electrostatics,
    pub eigen: EigenPair,
}

/// Solve `E_e(η φ₁) = ρ` for `η ∈ (0, SEED_ETA_MAX]`.
///
/// `η ↦ E_e(η φ₁)` is non-decreasing from 2; the bracket is searched by the
/// safeguarded root finder of [`rescale_to_energy`].
pub fn feasible_seed(rho: f64, p: &ModelParams, grid: &Grid2D) -> Result<FeasibleSeed> {
    let eigen = clamped_eigenpair(p, &grid.line())?;
    let top = eigen.phi1.scaled(SEED_ETA_MAX);
    let r = rescale_to_energy(&top, p, grid, rho)?;
    Ok(FeasibleSeed {
        eta: SEED_ETA_MAX * r.t,
        profile: r.profile,
        state: r.state,
        eigen,
    })
}

/// Rayleigh quotient `⟨Aφ, φ⟩/⟨φ, φ⟩` in the interior pairing.
pub fn rayleigh_quotient(p: &ModelParams, u: &DeflectionProfile) -> f64 {
    let grid = u.grid();
    let a = clamped_operator(p.beta, p.tau, grid);
    let interior = &u.values()[1..u.len() - 1];
    let ax = a.matvec(interior);
    let num: f64 = ax.iter().zip(interior).map(|(a, b)| a * b).sum();
    let mut full = vec![0.0; u.len()];
    full[1..u.len() - 1].copy_from_slice(interior);
    num * grid.h() / interior_norm(&full, grid.h()).powi(2)
}
