//! The invariant suite behind `mode=verify`.
//!
//! Every check reports a measured value and the bound it is held to. The
//! report carries no timings, so repeated runs are byte-identical.

use serde::Serialize;

use super::catalog::random_corpus;
use super::config::RunConfig;
use crate::continuation::{expansion_defect, linear_response, newton_solve, NewtonOptions};
use crate::energy::{
    boundary_identity, electrostatics, energy_bounds, monotonicity_check, shape_derivative_check,
};
use crate::error::Result;
use crate::model::DeflectionProfile;
use crate::optimizer::{
    minimize_mechanical, verify_multiplier_bound, verify_pointwise_bound, OptimizerOptions,
};
use crate::spectral::clamped_eigenpair;

pub const CORPUS_SIZE: usize = 10;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: &'static str,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, bound: f64) -> Check {
        Check {
            name: name.into(),
            value,
            relation: "<=",
            bound,
            pass: value <= bound,
        }
    }

    fn at_least(name: &str, value: f64, bound: f64) -> Check {
        Check {
            name: name.into(),
            value,
            relation: ">=",
            bound,
            pass: value >= bound,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
    pub all_pass: bool,
}

/// Smallest positive root of `cos(2k) cosh(2k) = 1`; the clamped beam on
/// `(−1, 1)` has first eigenvalue `k⁴` for `β = 1`, `τ = 0`.
pub fn clamped_beam_root() -> f64 {
    let f = |k: f64| (2.0 * k).cos() * (2.0 * k).cosh() - 1.0;
    let (mut lo, mut hi) = (2.0f64, 2.6f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn sup_dev(v: &[f64], target: f64) -> f64 {
    v.iter().fold(0.0f64, |s, x| s.max((x - target).abs()))
}

pub fn run_suite(cfg: &RunConfig) -> Result<VerifyReport> {
    let p = cfg.params;
    let line = cfg.line();
    let grid = cfg.grid();
    let h = line.h().max(grid.heta());
    let mut checks = Vec::new();

    let flat = electrostatics(&DeflectionProfile::zeros(line), &p, &grid)?;
    checks.push(Check::at_most(
        "flat_gap_energy_error",
        (flat.energy - 2.0).abs(),
        1e-6,
    ));
    checks.push(Check::at_most(
        "flat_gap_traction_error",
        sup_dev(&flat.g, 1.0),
        1e-6,
    ));
    let constant = electrostatics(&DeflectionProfile::from_fn(line, |_| -0.5), &p, &grid)?;
    checks.push(Check::at_most(
        "constant_gap_energy_error",
        (constant.energy - 4.0).abs(),
        1e-6,
    ));
    checks.push(Check::at_most(
        "constant_gap_traction_error",
        sup_dev(&constant.g, 4.0),
        1e-6,
    ));

    let corpus = random_corpus(cfg.seed, CORPUS_SIZE, &line, &p)?;
    let slack = 10.0 * h * h;
    let mut chain = f64::NEG_INFINITY;
    let mut identity: f64 = 0.0;
    for (_, _, u) in &corpus {
        let es = electrostatics(u, &p, &grid)?;
        let (lo, up) = energy_bounds(u, &p)?;
        chain = chain
            .max(2.0 - slack - lo)
            .max(lo - es.energy - slack)
            .max(es.energy - up - slack);
        identity = identity.max(boundary_identity(u, &p, es.potential())?.residual());
    }
    checks.push(Check::at_most("energy_bound_chain_violation", chain, 0.0));
    checks.push(Check::at_most("boundary_identity_residual", identity, 1e-2));

    let v = DeflectionProfile::from_fn(line, |x| -(1.0 - x * x).powi(3));
    let mut gap: f64 = 0.0;
    for (_, amp, u) in corpus.iter().take(2) {
        let u = u.scaled(0.8_f64.min(0.8 / amp));
        gap = gap.max(shape_derivative_check(&u, &v, &p, &grid, 1e-3)?.relative_gap());
    }
    checks.push(Check::at_most("shape_derivative_relative_gap", gap, 1e-3));

    let eig = clamped_eigenpair(&p, &line)?;
    let mut unordered = 0.0;
    for (t, s) in [(0.9, 0.0), (0.9, 0.5), (0.6, 0.3), (0.3, 0.1), (0.8, 0.79)] {
        if !monotonicity_check(&eig.phi1.scaled(t), &eig.phi1.scaled(s), &p, &grid)? {
            unordered += 1.0;
        }
    }
    checks.push(Check::at_most("monotonicity_failures", unordered, 0.0));

    checks.push(Check::at_most("eigen_residual", eig.residual, 1e-8));
    checks.push(Check::at_most("eigen_max_value", eig.phi1.max(), 1e-12));
    checks.push(Check::at_most(
        "eigen_min_error",
        (eig.phi1.min() + 1.0).abs(),
        0.0,
    ));
    checks.push(Check::at_most(
        "eigen_evenness_defect",
        eig.phi1.evenness_defect(),
        1e-10,
    ));
    if p.tau == 0.0 {
        let exact = p.beta * clamped_beam_root().powi(4);
        checks.push(Check::at_most(
            "eigen_value_relative_error",
            (eig.mu1 - exact).abs() / exact,
            1e-3,
        ));
    }

    let opts = OptimizerOptions {
        kkt_tol: cfg.kkt_tol,
        ..Default::default()
    };
    let r = minimize_mechanical(cfg.rho, &p, &grid, &opts)?;
    checks.push(Check::at_most(
        "minimizer_kkt_residual",
        r.kkt_residual,
        cfg.kkt_tol,
    ));
    checks.push(Check::at_most(
        "minimizer_feasibility",
        (r.e_e - cfg.rho).abs() / cfg.rho,
        1e-6,
    ));
    checks.push(Check::at_least(
        "minimizer_multiplier",
        r.lambda_rho,
        f64::MIN_POSITIVE,
    ));
    let rise = r
        .history
        .windows(2)
        .fold(f64::NEG_INFINITY, |s, w| s.max(w[1].e_m - w[0].e_m));
    checks.push(Check::at_most(
        "minimizer_descent_rise",
        rise.max(0.0),
        1e-12,
    ));
    checks.push(Check::at_most(
        "minimizer_vs_seed_energy",
        r.e_m - r.seed_e_m,
        0.0,
    ));
    checks.push(Check::at_most(
        "multiplier_estimates_relative_gap",
        (r.lambda_rho - r.lambda_ls).abs() / r.lambda_rho,
        1e-2,
    ));
    checks.push(Check::at_most(
        "minimizer_evenness_defect",
        r.u_rho.evenness_defect(),
        1e-10,
    ));
    let mb = verify_multiplier_bound(&r, &p);
    checks.push(Check::at_least(
        "multiplier_bound_ratio",
        mb.lhs / mb.rhs,
        0.95,
    ));
    let pb = verify_pointwise_bound(&r.u_rho, cfg.rho);
    checks.push(Check::at_least(
        "pointwise_bound_margin",
        pb.lhs - pb.rhs,
        0.0,
    ));

    let w = linear_response(&p, &line)?;
    let zero = DeflectionProfile::zeros(line);
    let newton = NewtonOptions::default();
    let ratio = |l: f64| -> Result<f64> {
        Ok(expansion_defect(&newton_solve(l, &zero, &p, &grid, &newton)?, &w) / (l * l))
    };
    let (r1, r2) = (ratio(1e-3)?, ratio(5e-4)?);
    checks.push(Check::at_most(
        "expansion_ratio_variation",
        (r1 / r2 - 1.0).abs(),
        0.5,
    ));

    Ok(finish(checks))
}

fn finish(checks: Vec<Check>) -> VerifyReport {
    let passed = checks.iter().filter(|c| c.pass).count();
    let failed = checks.len() - passed;
    VerifyReport {
        checks,
        passed,
        failed,
        all_pass: failed == 0,
    }
}

/// Coarse grid used by the unit test of the suite.
#[cfg(test)]
fn small_config() -> RunConfig {
    use std::collections::BTreeMap;
    let mut m = BTreeMap::new();
    for (k, v) in [("mode", "verify"), ("n", "33"), ("neta", "17")] {
        m.insert(k.to_string(), v.to_string());
    }
    RunConfig::from_pairs(&m).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_value() {
        assert!((clamped_beam_root() - 2.36502).abs() < 1e-5);
    }

    #[test]
    fn suite_on_coarse_grid() {
        let cfg = small_config();
        let r = run_suite(&cfg).unwrap();
        assert_eq!(r.passed + r.failed, r.checks.len());
        for name in [
            "flat_gap_energy_error",
            "minimizer_kkt_residual",
            "monotonicity_failures",
        ] {
            assert!(r.checks.iter().any(|c| c.name == name && c.pass), "{name}");
        }
    }
}
