//! Newton continuation of the small-voltage branch `λ ↦ U_λ` starting at
//! `U_0 = 0`, and the comparison with constrained minimizers at matched `λ`.
//!
//! Unknowns are the even-reduced interior values `u_1 ..= u_c` with
//! `c = (n−1)/2`; residual rows are the same nodes.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::elliptic::traction;
use crate::energy::{electrostatic_energy, electrostatics, Electrostatics};
use crate::error::{Error, Result};
use crate::model::{em_gradient, interior_norm, DeflectionProfile, Grid1D, Grid2D, ModelParams};
use crate::optimizer::{minimize_mechanical, MinimizerResult, OptimizerOptions};
use crate::spectral::clamped_operator;

/// Relative step of the traction finite differences.
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NewtonOptions {
    /// Absolute `‖F‖_∞` target.
    pub tol: f64,
    pub max_iter: usize,
    /// Extra iterations after `tol` is met, while `‖F‖` still halves.
    pub polish_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-8,
            max_iter: 30,
            polish_iter: 3,
        }
    }
}

/// Number of even-reduced unknowns on a line of `n` nodes.
pub(crate) fn reduced_len(n: usize) -> usize {
    (n - 1) / 2
}

/// Residual rows `1 ..= c` of a full nodal vector.
pub(crate) fn restrict(full: &[f64]) -> Vec<f64> {
    full[1..=reduced_len(full.len())].to_vec()
}

/// Add an even-reduced update to `u`, mirroring it onto the right half.
pub(crate) fn add_even(u: &DeflectionProfile, delta: &[f64], s: f64) -> Result<DeflectionProfile> {
    let grid = u.grid();
    let mut v = u.values().to_vec();
    for (k, d) in delta.iter().enumerate() {
        let j = k + 1;
        v[j] += s * d;
        let m = grid.mirror(j);
        if m != j {
            v[m] += s * d;
        }
    }
    u.with_values(v)
}

/// First-order data of the discrete equations at `u`.
#[derive(Debug, Clone)]
pub(crate) struct Linearization {
    pub state: Electrostatics,
    /// Reduced `∂(∇E_m)/∂u`.
    pub jm: DMatrix<f64>,
    /// Reduced `∂g/∂u`.
    pub jg: DMatrix<f64>,
    /// Reduced `∂E_e/∂u`.
    pub de: Vec<f64>,
}

/// Mechanical Jacobian (analytic, including the nonlocal stretching term)
/// and traction/energy Jacobians (central differences through linearized
/// potential re-solves that reuse the factorization at `u`).
pub(crate) fn linearize(
    u: &DeflectionProfile,
    p: &ModelParams,
    grid: &Grid2D,
) -> Result<Linearization> {
    let state = electrostatics(u, p, grid)?;
    let line = u.grid();
    let n = line.len();
    let c = reduced_len(n);
    let h = line.h();
    let s = u.grad_norm_sq();
    let a = clamped_operator(p.beta, p.tau + p.a * s, line);
    let d2u = u.d2();
    let full_jm =
        |i: usize, j: usize| -> f64 { a.get(i - 1, j - 1) + 2.0 * p.a * h * d2u[i] * d2u[j] };
    let jm = DMatrix::from_fn(c, c, |r, k| {
        let (i, j) = (r + 1, k + 1);
        let m = line.mirror(j);
        if m == j {
            full_jm(i, j)
        } else {
            full_jm(i, j) + full_jm(i, m)
        }
    });

    let step = FD_STEP * (1.0 + u.sup_norm());
    let columns: Vec<Result<(Vec<f64>, f64)>> = (0..c)
        .into_par_iter()
        .map(|k| {
            let mut e = vec![0.0; c];
            e[k] = 1.0;
            let side = |sign: f64| -> Result<(Vec<f64>, f64)> {
                let v = add_even(u, &e, sign * step)?;
                let phi = state.solve.linearized_potential(&v, p)?;
                let g = traction(&v, p, &phi)?.g;
                Ok((restrict(&g), electrostatic_energy(&v, p, &phi)?))
            };
            let (gp, ep) = side(1.0)?;
            let (gm, em) = side(-1.0)?;
            let col = gp
                .iter()
                .zip(&gm)
                .map(|(a, b)| (a - b) / (2.0 * step))
                .collect();
            Ok((col, (ep - em) / (2.0 * step)))
        })
        .collect();
    let mut jg = DMatrix::zeros(c, c);
    let mut de = vec![0.0; c];
    for (k, col) in columns.into_iter().enumerate() {
        let (col, d) = col?;
        jg.set_column(k, &DVector::from_vec(col));
        de[k] = d;
    }
    Ok(Linearization { state, jm, jg, de })
}

/// `F(u, λ) = β d4(u) − (τ + a‖∂u‖²) d2(u) + λ g(u)` on interior nodes.
pub fn residual(
    u: &DeflectionProfile,
    lambda: f64,
    p: &ModelParams,
    g: &[f64],
) -> Result<Vec<f64>> {
    u.require_gap()?;
    if g.len() != u.len() {
        return Err(Error::LengthMismatch {
            expected: u.len(),
            got: g.len(),
        });
    }
    let n = u.len();
    let mut f = em_gradient(u, p);
    for i in 1..n - 1 {
        f[i] += lambda * g[i];
    }
    Ok(f)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |s, x| s.max(x.abs()))
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    pub lambda: f64,
    pub u: DeflectionProfile,
    pub e_e: f64,
    pub sup_norm: f64,
    pub newton_residual: f64,
    pub iterations: usize,
}

/// Solve `F(u, λ) = 0` by damped Newton from `u0` (even by construction).
pub fn newton_solve(
    lambda: f64,
    u0: &DeflectionProfile,
    p: &ModelParams,
    grid: &Grid2D,
    opts: &NewtonOptions,
) -> Result<BranchPoint> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::param(
            "lambda",
            format!("must be non-negative, got {lambda}"),
        ));
    }
    let mut u = u0.symmetrized();
    let mut lin = linearize(&u, p, grid)?;
    let mut f = restrict(&residual(&u, lambda, p, &lin.state.g)?);
    let mut norm = sup(&f);
    let mut extra = 0;
    for it in 0..opts.max_iter {
        if norm <= opts.tol && (extra >= opts.polish_iter || norm == 0.0) {
            return Ok(branch_point(lambda, u, &lin.state, norm, it));
        }
        let j = &lin.jm + &lin.jg * lambda;
        let rhs = DVector::from_iterator(f.len(), f.iter().map(|v| -v));
        let delta = j.lu().solve(&rhs).ok_or(Error::Singular { row: 0 })?;
        let mut s = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            if let Ok(v) = add_even(&u, delta.as_slice(), s) {
                if v.require_gap().is_ok() {
                    if let Ok(st) = electrostatics(&v, p, grid) {
                        let fv = restrict(&residual(&v, lambda, p, &st.g)?);
                        let nv = sup(&fv);
                        if nv < norm {
                            accepted = Some((v, fv, nv));
                            break;
                        }
                    }
                }
            }
            s *= 0.5;
        }
        let Some((v, fv, nv)) = accepted else {
            if norm <= opts.tol {
                return Ok(branch_point(lambda, u, &lin.state, norm, it));
            }
            return Err(Error::NonConvergence {
                what: "branch Newton",
                iterations: it,
                residual: norm,
            });
        };
        if norm <= opts.tol {
            extra += 1;
            if nv > 0.5 * norm {
                let st = electrostatics(&v, p, grid)?;
                return Ok(branch_point(lambda, v, &st, nv, it + 1));
            }
        }
        u = v;
        f = fv;
        norm = nv;
        lin = linearize(&u, p, grid)?;
    }
    if norm <= opts.tol {
        return Ok(branch_point(lambda, u, &lin.state, norm, opts.max_iter));
    }
    Err(Error::NonConvergence {
        what: "branch Newton",
        iterations: opts.max_iter,
        residual: norm,
    })
}

fn branch_point(
    lambda: f64,
    u: DeflectionProfile,
    st: &Electrostatics,
    residual: f64,
    iterations: usize,
) -> BranchPoint {
    BranchPoint {
        lambda,
        sup_norm: u.sup_norm(),
        u,
        e_e: st.energy,
        newton_residual: residual,
        iterations,
    }
}

/// Accepted branch points plus the reason tracing stopped early, if it did.
#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub target: f64,
    pub stopped: Option<String>,
}

impl Branch {
    pub fn reached(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.lambda)
    }

    pub fn complete(&self) -> bool {
        self.stopped.is_none()
    }

    pub const CSV_HEADER: &'static str = "lambda,sup_norm,E_e,newton_residual";

    pub fn csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for p in &self.points {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                p.lambda, p.sup_norm, p.e_e, p.newton_residual
            ));
        }
        s
    }
}

/// Natural-parameter continuation from `λ = 0` to `lambda_max` in `steps`
/// equal steps with a secant predictor. A failed step is halved up to
/// `MAX_HALVINGS` times; after that tracing stops and the reason is kept.
pub fn continue_branch(
    lambda_max: f64,
    steps: usize,
    p: &ModelParams,
    grid: &Grid2D,
    opts: &NewtonOptions,
) -> Result<Branch> {
    const MAX_HALVINGS: usize = 8;
    if steps < 2 {
        return Err(Error::param("steps", "need at least 2"));
    }
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(Error::param("lambda_max", "must be positive"));
    }
    let zero = DeflectionProfile::zeros(grid.line());
    let mut points = vec![newton_solve(0.0, &zero, p, grid, opts)?];
    let base = lambda_max / steps as f64;
    let mut dl = base;
    let mut halvings = 0;
    let mut stopped = None;
    while points.last().map_or(0.0, |b| b.lambda) < lambda_max {
        let last = points.last().expect("branch starts at zero");
        let target = if last.lambda + dl >= lambda_max * (1.0 - 1e-12) {
            lambda_max
        } else {
            last.lambda + dl
        };
        let guess = predictor(&points, target)?;
        match newton_solve(target, &guess, p, grid, opts) {
            Ok(pt) => {
                points.push(pt);
                if halvings > 0 {
                    halvings -= 1;
                    dl = (dl * 2.0).min(base);
                }
            }
            Err(e) => {
                if halvings == MAX_HALVINGS {
                    stopped = Some(format!("stopped at lambda = {}: {e}", last.lambda));
                    break;
                }
                halvings += 1;
                dl *= 0.5;
            }
        }
    }
    Ok(Branch {
        points,
        target: lambda_max,
        stopped,
    })
}

fn predictor(points: &[BranchPoint], target: f64) -> Result<DeflectionProfile> {
    let last = &points[points.len() - 1];
    if points.len() < 2 {
        return Ok(last.u.clone());
    }
    let prev = &points[points.len() - 2];
    let w = (target - last.lambda) / (last.lambda - prev.lambda);
    let values = last
        .u
        .values()
        .iter()
        .zip(prev.u.values())
        .map(|(a, b)| a + w * (a - b))
        .collect();
    let guess = last.u.with_values(values)?;
    Ok(if guess.require_gap().is_ok() {
        guess
    } else {
        last.u.clone()
    })
}

/// Solution of the linear clamped problem `β d4(w) − τ d2(w) = 1`, so that
/// `U_λ = −λ w + O(λ²)`.
pub fn linear_response(p: &ModelParams, line: &Grid1D) -> Result<DeflectionProfile> {
    let a = clamped_operator(p.beta, p.tau, line);
    let interior = a.factor()?.solve(&vec![1.0; line.len() - 2]);
    let mut w = vec![0.0; line.len()];
    w[1..line.len() - 1].copy_from_slice(&interior);
    DeflectionProfile::new(*line, w)
}

/// `‖U_λ + λ w‖_∞`.
pub fn expansion_defect(point: &BranchPoint, w: &DeflectionProfile) -> f64 {
    point
        .u
        .values()
        .iter()
        .zip(w.values())
        .fold(0.0f64, |s, (u, w)| s.max((u + point.lambda * w).abs()))
}

/// A minimizer at `ρ` against the branch solution at the same `λ`.
#[derive(Debug, Clone, Serialize)]
pub struct MultiplicityReport {
    pub rho: f64,
    pub lambda_rho: f64,
    pub minimizer_e_e: f64,
    pub branch_e_e: f64,
    pub energy_gap: f64,
    pub sup_distance: f64,
    pub l2_distance: f64,
    pub minimizer: MinimizerResult,
    pub branch_point: BranchPoint,
    pub branch: Branch,
}

pub fn multiplicity_report(
    rho: f64,
    p: &ModelParams,
    grid: &Grid2D,
    opt: &OptimizerOptions,
    steps: usize,
    newton: &NewtonOptions,
) -> Result<MultiplicityReport> {
    let minimizer = minimize_mechanical(rho, p, grid, opt)?;
    multiplicity_against(minimizer, p, grid, steps, newton)
}

/// Same as [`multiplicity_report`] for an already computed minimizer.
pub fn multiplicity_against(
    minimizer: MinimizerResult,
    p: &ModelParams,
    grid: &Grid2D,
    steps: usize,
    newton: &NewtonOptions,
) -> Result<MultiplicityReport> {
    let lambda_rho = minimizer.lambda_rho;
    let branch = continue_branch(lambda_rho, steps, p, grid, newton)?;
    if !branch.complete() {
        return Err(Error::BranchIncomplete {
            reached: branch.reached(),
            target: lambda_rho,
        });
    }
    let point = branch.points.last().expect("complete branch").clone();
    let diff: Vec<f64> = minimizer
        .u_rho
        .values()
        .iter()
        .zip(point.u.values())
        .map(|(a, b)| a - b)
        .collect();
    let h = grid.line().h();
    Ok(MultiplicityReport {
        rho: minimizer.rho,
        lambda_rho,
        minimizer_e_e: minimizer.e_e,
        branch_e_e: point.e_e,
        energy_gap: minimizer.e_e - point.e_e,
        sup_distance: sup(&diff),
        l2_distance: interior_norm(&diff, h),
        minimizer,
        branch_point: point,
        branch,
    })
}
