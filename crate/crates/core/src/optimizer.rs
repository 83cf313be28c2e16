//! Minimization of `E_m` on `{u admissible, even, E_e(u) = ρ}`.
//!
//! A descent phase runs a Sobolev-preconditioned projected gradient with
//! radial restoration onto the level set. Its fixed points satisfy
//! `∇E_m ∥ g(u)`, but the discrete `E_e` has gradient `−g(u) + O(h²)`, so
//! descent alone stalls at an `O(h²)` multiplier residual. A Newton polish
//! on `(u, λ)` then solves `∇E_m + λ g(u) = 0`, `E_e(u) = ρ` directly.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::continuation::{add_even, linearize, reduced_len, restrict};
use crate::energy::{electrostatics, restore_energy, Electrostatics};
use crate::error::{Error, Result};
use crate::model::mechanics::mechanical_energy_unchecked;
use crate::model::{
    em_gradient, interior_dot, interior_norm, DeflectionProfile, Grid2D, ModelParams,
};
use crate::spectral::{clamped_operator, feasible_seed};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OptimizerOptions {
    /// Target for `‖∇E_m + λ_ρ g‖`.
    pub kkt_tol: f64,
    /// Cap on descent iterations.
    pub max_iter: usize,
    /// Descent hands over to the polish once the residual falls below this
    /// fraction of `‖∇E_m‖`.
    pub polish_switch: f64,
    pub polish_max_iter: usize,
    /// Smallest gap `1 + min u` a restoration may produce.
    pub min_gap: f64,
    pub max_halvings: usize,
    /// Relative feasibility `|E_e − ρ|/ρ` required of the result.
    pub feasibility_tol: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            kkt_tol: 1e-5,
            max_iter: 500,
            polish_switch: 1e-3,
            polish_max_iter: 20,
            min_gap: 1e-3,
            max_halvings: 30,
            feasibility_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HistoryEntry {
    pub e_m: f64,
    pub constraint_gap: f64,
    pub step: f64,
    pub kkt: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizerResult {
    pub rho: f64,
    pub u_rho: DeflectionProfile,
    /// Multiplier from the energy identity (`u` tested against itself).
    pub lambda_rho: f64,
    /// Least-squares multiplier `argmin_λ ‖∇E_m + λ g‖`.
    pub lambda_ls: f64,
    pub e_m: f64,
    pub e_e: f64,
    pub kkt_residual: f64,
    pub converged: bool,
    pub iterations: usize,
    pub polish_iterations: usize,
    /// Descent phase only; non-increasing in `e_m`.
    pub history: Vec<HistoryEntry>,
    pub seed_eta: f64,
    pub seed_e_m: f64,
}

impl MinimizerResult {
    pub fn require_converged(&self) -> Result<&Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence {
                what: "constrained minimization",
                iterations: self.iterations + self.polish_iterations,
                residual: self.kkt_residual,
            })
        }
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("x,u\n");
        for (x, u) in self.u_rho.grid().nodes().iter().zip(self.u_rho.values()) {
            s.push_str(&format!("{x:.16e},{u:.16e}\n"));
        }
        s
    }
}

/// `(β‖∂²u‖² + τ‖∂u‖² + a‖∂u‖⁴) / (−∫ u g)`, both sides in the interior
/// pairing (trapezoid, since `u` vanishes at the ends).
pub fn extract_multiplier(u: &DeflectionProfile, p: &ModelParams, g: &[f64]) -> Result<f64> {
    if u.is_zero() {
        return Err(Error::DegenerateMultiplier);
    }
    let s = u.grad_norm_sq();
    let num = p.beta * u.hessian_norm_sq() + p.tau * s + p.a * s * s;
    let den = -interior_dot(u.values(), g, u.grid().h());
    if den <= 0.0 || !den.is_finite() {
        return Err(Error::DegenerateMultiplier);
    }
    Ok(num / den)
}

/// `‖∇E_m(u) + λ g(u)‖` over interior nodes.
pub fn kkt_residual(u: &DeflectionProfile, lambda: f64, p: &ModelParams, g: &[f64]) -> f64 {
    let r: Vec<f64> = em_gradient(u, p)
        .iter()
        .zip(g)
        .map(|(a, b)| a + lambda * b)
        .collect();
    interior_norm(&r, u.grid().h())
}

/// `λ` minimizing [`kkt_residual`].
pub fn least_squares_multiplier(u: &DeflectionProfile, p: &ModelParams, g: &[f64]) -> f64 {
    let h = u.grid().h();
    let gg = interior_dot(g, g, h);
    if gg == 0.0 {
        return 0.0;
    }
    -interior_dot(&em_gradient(u, p), g, h) / gg
}

struct Iterate {
    u: DeflectionProfile,
    state: Electrostatics,
    e_m: f64,
}

impl Iterate {
    fn new(u: DeflectionProfile, state: Electrostatics, p: &ModelParams) -> Self {
        let e_m = mechanical_energy_unchecked(&u, p);
        Iterate { u, state, e_m }
    }
}

pub fn minimize_mechanical(
    rho: f64,
    p: &ModelParams,
    grid: &Grid2D,
    opts: &OptimizerOptions,
) -> Result<MinimizerResult> {
    let seed = feasible_seed(rho, p, grid)?;
    let seed_eta = seed.eta;
    let mut it = Iterate::new(seed.profile, seed.state, p);
    let seed_e_m = it.e_m;
    let h = grid.line().h();
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut step = 0.0;

    loop {
        let grad = em_gradient(&it.u, p);
        let lam = least_squares_multiplier(&it.u, p, &it.state.g);
        let kkt = kkt_residual(&it.u, lam, p, &it.state.g);
        history.push(HistoryEntry {
            e_m: it.e_m,
            constraint_gap: (it.state.energy - rho).abs(),
            step,
            kkt,
        });
        if kkt <= opts.kkt_tol
            || kkt <= opts.polish_switch * interior_norm(&grad, h)
            || iterations >= opts.max_iter
        {
            break;
        }
        let dir = descent_direction(&it, &grad, p);
        let mut alpha = 1.0;
        let mut next = None;
        for _ in 0..opts.max_halvings {
            let trial = it.u.axpy(alpha, &dir)?.clamped_nonpositive().symmetrized();
            if !trial.is_zero() && trial.require_gap().is_ok() {
                if let Ok(r) = restore_energy(&trial, p, grid, rho, opts.min_gap) {
                    let cand = Iterate::new(r.profile, r.state, p);
                    if cand.e_m < it.e_m {
                        next = Some(cand);
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        let Some(next) = next else { break };
        let stalled = it.e_m - next.e_m <= 1e-14 * it.e_m.abs();
        it = next;
        step = alpha;
        iterations += 1;
        if stalled {
            break;
        }
    }

    let descent_end = it.u.clone();
    let (it, polish_iterations) = match polish(it, rho, p, grid, opts) {
        Ok(r) => r,
        Err(_) => {
            let st = electrostatics(&descent_end, p, grid)?;
            (Iterate::new(descent_end, st, p), 0)
        }
    };
    let lambda_rho = extract_multiplier(&it.u, p, &it.state.g)?;
    let lambda_ls = least_squares_multiplier(&it.u, p, &it.state.g);
    let kkt_residual = kkt_residual(&it.u, lambda_rho, p, &it.state.g);
    let feasible = (it.state.energy - rho).abs() <= opts.feasibility_tol * rho;
    Ok(MinimizerResult {
        rho,
        converged: kkt_residual <= opts.kkt_tol
            && feasible
            && it.u.is_admissible()
            && lambda_rho > 0.0,
        lambda_rho,
        lambda_ls,
        e_m: it.e_m,
        e_e: it.state.energy,
        kkt_residual,
        iterations,
        polish_iterations,
        history,
        seed_eta,
        seed_e_m,
        u_rho: it.u,
    })
}

/// `−(A⁻¹∇E_m − γ A⁻¹g)` with `A = β D4 − (τ + a‖∂u‖²) D2` and `γ` chosen
/// so that the direction is orthogonal to `g`.
fn descent_direction(it: &Iterate, grad: &[f64], p: &ModelParams) -> DeflectionProfile {
    let line = *it.u.grid();
    let n = line.len();
    let a = clamped_operator(p.beta, p.tau + p.a * it.u.grad_norm_sq(), &line);
    let lu = a.factor().expect("clamped operator is positive definite");
    let y = lu.solve(&grad[1..n - 1]);
    let z = lu.solve(&it.state.g[1..n - 1]);
    let g = &it.state.g[1..n - 1];
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gamma = dot(g, &y) / dot(g, &z);
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = -(y[i - 1] - gamma * z[i - 1]);
    }
    DeflectionProfile::new(line, d).expect("finite direction")
}

/// Newton on `(u, λ)` for `∇E_m + λ g = 0`, `E_e = ρ` in even-reduced form.
fn polish(
    mut it: Iterate,
    rho: f64,
    p: &ModelParams,
    grid: &Grid2D,
    opts: &OptimizerOptions,
) -> Result<(Iterate, usize)> {
    let h = grid.line().h();
    let c = reduced_len(it.u.len());
    let mut lambda = least_squares_multiplier(&it.u, p, &it.state.g);
    // (reduced residual, E_e − ρ, ‖∇E_m + λg‖)
    let merit = |it: &Iterate, lambda: f64| -> (Vec<f64>, f64, f64) {
        let r: Vec<f64> = em_gradient(&it.u, p)
            .iter()
            .zip(&it.state.g)
            .map(|(a, b)| a + lambda * b)
            .collect();
        (restrict(&r), it.state.energy - rho, interior_norm(&r, h))
    };
    let (mut f, mut gap, mut kkt) = merit(&it, lambda);
    for k in 0..opts.polish_max_iter {
        if kkt <= 0.1 * opts.kkt_tol && gap.abs() <= 1e-10 * rho {
            return Ok((it, k));
        }
        let m = kkt.max(gap.abs());
        let lin = linearize(&it.u, p, grid)?;
        let g = restrict(&it.state.g);
        let jac = DMatrix::from_fn(c + 1, c + 1, |r, col| match (r < c, col < c) {
            (true, true) => lin.jm[(r, col)] + lambda * lin.jg[(r, col)],
            (true, false) => g[r],
            (false, true) => lin.de[col],
            (false, false) => 0.0,
        });
        let rhs = DVector::from_iterator(c + 1, f.iter().chain([&gap]).map(|v| -v));
        let delta = jac.lu().solve(&rhs).ok_or(Error::Singular { row: c })?;
        let mut s = 1.0;
        let mut accepted = None;
        for _ in 0..10 {
            if let Ok(v) = add_even(&it.u, &delta.as_slice()[..c], s) {
                if v.require_gap().is_ok() {
                    if let Ok(st) = electrostatics(&v, p, grid) {
                        let cand = Iterate::new(v, st, p);
                        let l = lambda + s * delta[c];
                        let (cf, cg, ck) = merit(&cand, l);
                        if ck.max(cg.abs()) < m {
                            accepted = Some((cand, l, cf, cg, ck));
                            break;
                        }
                    }
                }
            }
            s *= 0.5;
        }
        let Some((cand, l, cf, cg, ck)) = accepted else {
            return Err(Error::NonConvergence {
                what: "multiplier polish",
                iterations: k,
                residual: m,
            });
        };
        it = cand;
        lambda = l;
        f = cf;
        gap = cg;
        kkt = ck;
    }
    Err(Error::NonConvergence {
        what: "multiplier polish",
        iterations: opts.polish_max_iter,
        residual: kkt.max(gap.abs()),
    })
}

/// Both sides of `4 E_m ≥ λ √β (ρ−2)² / (2(√β + ε² √E_m))`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Relative slack granted to discretized bound checks.
pub const BOUND_SLACK: f64 = 0.05;

pub fn verify_multiplier_bound(result: &MinimizerResult, p: &ModelParams) -> BoundCheck {
    let sb = p.beta.sqrt();
    let lhs = 4.0 * result.e_m;
    let rhs = result.lambda_rho * sb * (result.rho - 2.0).powi(2)
        / (2.0 * (sb + p.eps2() * result.e_m.sqrt()));
    BoundCheck {
        lhs,
        rhs,
        holds: lhs >= (1.0 - BOUND_SLACK) * rhs,
    }
}

/// `min u` against `1/(ρ³K²) − 1`, `K = max(2/ρ, ‖∂²u‖)`.
pub fn verify_pointwise_bound(u: &DeflectionProfile, rho: f64) -> BoundCheck {
    let k = (2.0 / rho).max(u.hessian_norm_sq().sqrt());
    let rhs = 1.0 / (rho.powi(3) * k * k) - 1.0;
    let lhs = u.min();
    BoundCheck {
        lhs,
        rhs,
        holds: lhs >= rhs,
    }
}
