//! Electrostatic energy, its bounds and identities, the shape derivative
//! and radial rescaling onto an energy level set.

use serde::Serialize;

use crate::elliptic::{coefficients, normal_flux, traction, PotentialSolve, TransformedPotential};
use crate::error::{Error, Result};
use crate::model::mechanics::mechanical_energy_unchecked;
use crate::model::{quad1d, quad2d, DeflectionProfile, Grid2D, ModelParams};

/// Relative tolerance on `|E_e(t u) − ρ|` after rescaling.
pub const RESCALE_TOL: f64 = 1e-8;
/// Iteration cap of the rescaling root finder.
pub const RESCALE_MAX_ITER: usize = 60;
/// Slack of the pointwise order test.
pub const ORDER_SLACK: f64 = 1e-12;
/// Tolerance of the monotonicity comparison.
pub const MONOTONE_TOL: f64 = 1e-9;

/// Potential, traction and energy for one deflection.
#[derive(Debug, Clone)]
pub struct Electrostatics {
    pub solve: PotentialSolve,
    pub g: Vec<f64>,
    pub energy: f64,
}

impl Electrostatics {
    pub fn potential(&self) -> &TransformedPotential {
        &self.solve.potential
    }
}

/// Solve for the potential of `u` and derive traction and energy.
pub fn electrostatics(
    u: &DeflectionProfile,
    p: &ModelParams,
    grid: &Grid2D,
) -> Result<Electrostatics> {
    let solve = PotentialSolve::new(u, p, grid)?;
    let g = traction(u, p, &solve.potential)?.g;
    let energy = electrostatic_energy(u, p, &solve.potential)?;
    Ok(Electrostatics { solve, g, energy })
}

/// `E_e(u) = ∫_{Ω(u)} ε²|∂ₓψ|² + |∂zψ|²`, evaluated on the rectangle.
///
/// With `ψ = Φ + η` and `z = −1 + (1+u)η`:
/// `∂ₓψ = ∂ₓΦ − ηU(1 + ∂ηΦ)`, `∂zψ = (1 + ∂ηΦ)/(1+u)` and
/// `d(x,z) = (1+u) d(x,η)`.
pub fn electrostatic_energy(
    u: &DeflectionProfile,
    p: &ModelParams,
    phi: &TransformedPotential,
) -> Result<f64> {
    let grid = &phi.grid;
    if u.len() != grid.nx() {
        return Err(Error::LengthMismatch {
            expected: grid.nx(),
            got: u.len(),
        });
    }
    let c = coefficients(u)?;
    let px = phi.dx();
    let pe = phi.deta();
    let eps2 = p.eps2();
    let mut integrand = vec![0.0; grid.node_count()];
    for i in 0..grid.nx() {
        let gap = 1.0 + u.values()[i];
        for j in 0..grid.neta() {
            let k = grid.index(i, j);
            let eta = grid.eta(j);
            let one_pe = 1.0 + pe[k];
            let psi_x = px[k] - eta * c.log_slope[i] * one_pe;
            let psi_z = one_pe * c.inv_gap[i];
            integrand[k] = (eps2 * psi_x * psi_x + psi_z * psi_z) * gap;
        }
    }
    quad2d(grid, &integrand)
}

/// `(∫ dx/(1+u), ∫ (1 + ε²|∂ₓu|²) dx/(1+u))`, the two sides enclosing `E_e`.
pub fn energy_bounds(u: &DeflectionProfile, p: &ModelParams) -> Result<(f64, f64)> {
    u.require_gap()?;
    let du = u.d1();
    let eps2 = p.eps2();
    let lower: Vec<f64> = u.values().iter().map(|v| 1.0 / (1.0 + v)).collect();
    let upper: Vec<f64> = lower
        .iter()
        .zip(&du)
        .map(|(r, d)| (1.0 + eps2 * d * d) * r)
        .collect();
    Ok((quad1d(u.grid(), &lower)?, quad1d(u.grid(), &upper)?))
}

/// Both sides of `−∫ u (1 + ε²|∂ₓu|²) ∂zψ(x,u) dx = E_e(u) − 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryIdentity {
    pub flux_side: f64,
    pub energy_side: f64,
}

impl BoundaryIdentity {
    pub fn residual(&self) -> f64 {
        (self.flux_side - self.energy_side).abs()
    }
}

pub fn boundary_identity(
    u: &DeflectionProfile,
    p: &ModelParams,
    phi: &TransformedPotential,
) -> Result<BoundaryIdentity> {
    u.require_gap()?;
    let du = u.d1();
    let flux = normal_flux(u, phi);
    let eps2 = p.eps2();
    let samples: Vec<f64> = u
        .values()
        .iter()
        .zip(&du)
        .zip(&flux)
        .map(|((ui, di), fi)| -ui * (1.0 + eps2 * di * di) * fi)
        .collect();
    Ok(BoundaryIdentity {
        flux_side: quad1d(u.grid(), &samples)?,
        energy_side: electrostatic_energy(u, p, phi)? - 2.0,
    })
}

pub fn boundary_identity_residual(
    u: &DeflectionProfile,
    p: &ModelParams,
    phi: &TransformedPotential,
) -> Result<f64> {
    Ok(boundary_identity(u, p, phi)?.residual())
}

/// Scalar summary of one deflection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub mechanical: f64,
    pub electrostatic: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub identity_residual: f64,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str = "E_m,E_e,lower,upper,identity_residual";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.mechanical,
            self.electrostatic,
            self.lower_bound,
            self.upper_bound,
            self.identity_residual
        )
    }
}

pub fn energy_report(
    u: &DeflectionProfile,
    p: &ModelParams,
    grid: &Grid2D,
) -> Result<EnergyReport> {
    let es = electrostatics(u, p, grid)?;
    let (lower_bound, upper_bound) = energy_bounds(u, p)?;
    let identity_residual = boundary_identity_residual(u, p, es.potential())?;
    let mechanical = if u.is_clamped() {
        mechanical_energy_unchecked(u, p)
    } else {
        f64::NAN
    };
    Ok(EnergyReport {
        mechanical,
        electrostatic: es.energy,
        lower_bound,
        upper_bound,
        identity_residual,
    })
}

/// Central difference of `E_e` along `v` against `−∫ g(u) v dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeDerivativeCheck {
    pub fd: f64,
    pub analytic: f64,
    pub gap: f64,
}

impl ShapeDerivativeCheck {
    pub fn relative_gap(&self) -> f64 {
        if self.analytic == 0.0 {
            self.gap
        } else {
            self.gap / self.analytic.abs()
        }
    }
}

pub fn shape_derivative_check(
    u: &DeflectionProfile,
    v: &DeflectionProfile,
    p: &ModelParams,
    grid: &Grid2D,
    s: f64,
) -> Result<ShapeDerivativeCheck> {
    let plus = u.axpy(s, v)?;
    let minus = u.axpy(-s, v)?;
    plus.require_gap()?;
    minus.require_gap()?;
    let base = electrostatics(u, p, grid)?;
    let gv: Vec<f64> = base.g.iter().zip(v.values()).map(|(g, v)| g * v).collect();
    let analytic = -quad1d(u.grid(), &gv)?;
    let fd = if v.is_zero() {
        0.0
    } else {
        (electrostatics(&plus, p, grid)?.energy - electrostatics(&minus, p, grid)?.energy)
            / (2.0 * s)
    };
    Ok(ShapeDerivativeCheck {
        fd,
        analytic,
        gap: (fd - analytic).abs(),
    })
}

/// Outcome of a radial rescaling `u ↦ t u` onto `E_e = ρ`.
#[derive(Debug, Clone)]
pub struct Rescaled {
    pub t: f64,
    pub profile: DeflectionProfile,
    pub state: Electrostatics,
    /// Every `(t, E_e(t u))` evaluated, in evaluation order.
    pub samples: Vec<(f64, f64)>,
}

/// Find `t ∈ [0, 1]` with `E_e(t u) = ρ`.
///
/// Requires `E_e(u) ≥ ρ > 2`; `t ↦ E_e(t u)` is continuous, non-decreasing
/// and equals 2 at `t = 0`.
pub fn rescale_to_energy(
    u: &DeflectionProfile,
    p: &ModelParams,
    grid: &Grid2D,
    rho: f64,
) -> Result<Rescaled> {
    check_rho(rho)?;
    let top = electrostatics(u, p, grid)?;
    if top.energy < rho * (1.0 - RESCALE_TOL) {
        return Err(Error::OutOfBracket {
            target: rho,
            low: 2.0,
            high: top.energy,
        });
    }
    find_scale(u, p, grid, rho, (0.0, 2.0), (1.0, top))
}

/// Like [`rescale_to_energy`] but also grows `u` when `E_e(u) < ρ`, as long
/// as the gap stays above `min_gap`.
pub fn restore_energy(
    u: &DeflectionProfile,
    p: &ModelParams,
    grid: &Grid2D,
    rho: f64,
    min_gap: f64,
) -> Result<Rescaled> {
    check_rho(rho)?;
    let depth = -u.min();
    if depth <= 0.0 {
        return Err(Error::NotAdmissible("cannot rescale a zero profile".into()));
    }
    let at_one = electrostatics(u, p, grid)?;
    if at_one.energy >= rho {
        return find_scale(u, p, grid, rho, (0.0, 2.0), (1.0, at_one));
    }
    let t_max = (1.0 - min_gap) / depth;
    let mut lo = (1.0, at_one.energy);
    let mut t = 1.0;
    loop {
        if t >= t_max {
            return Err(Error::OutOfBracket {
                target: rho,
                low: 2.0,
                high: lo.1,
            });
        }
        t = (t * 1.25).min(t_max);
        let st = electrostatics(&u.scaled(t), p, grid)?;
        if st.energy >= rho {
            return find_scale(u, p, grid, rho, lo, (t, st));
        }
        lo = (t, st.energy);
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho.is_finite() && rho > 2.0) {
        return Err(Error::param("rho", format!("must exceed 2, got {rho}")));
    }
    Ok(())
}

/// Safeguarded Newton on `t ↦ E_e(t u) − ρ` using the shape derivative
/// `d/dt E_e(t u) = −∫ g(t u) u dx`, falling back to bisection.
fn find_scale(
    u: &DeflectionProfile,
    p: &ModelParams,
    grid: &Grid2D,
    rho: f64,
    low: (f64, f64),
    high: (f64, Electrostatics),
) -> Result<Rescaled> {
    let (mut lo, e_lo) = low;
    let (mut hi, hi_state) = high;
    let e_hi = hi_state.energy;
    let mut samples = vec![(lo, e_lo), (hi, e_hi)];
    let slope = |st: &Electrostatics| -> Result<f64> {
        let gu: Vec<f64> = st.g.iter().zip(u.values()).map(|(g, v)| g * v).collect();
        Ok(-quad1d(u.grid(), &gu)?)
    };
    if (e_hi - rho).abs() <= RESCALE_TOL * rho * 1e-4 {
        return Ok(Rescaled {
            t: hi,
            profile: u.scaled(hi),
            state: hi_state,
            samples,
        });
    }
    let mut t = hi;
    let mut best = (hi, hi_state);
    let mut d = slope(&best.1)?;
    for _ in 0..RESCALE_MAX_ITER {
        let f = best.1.energy - rho;
        let newton = t - f / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let st = electrostatics(&u.scaled(next), p, grid)?;
        samples.push((next, st.energy));
        if st.energy < rho {
            lo = next;
        } else {
            hi = next;
        }
        t = next;
        d = slope(&st)?;
        let done = (st.energy - rho).abs() <= 1e-13 * rho || hi - lo <= 1e-15 * hi.max(1.0);
        best = (next, st);
        if done {
            break;
        }
    }
    let err = (best.1.energy - rho).abs();
    if err > RESCALE_TOL * rho {
        return Err(Error::NonConvergence {
            what: "energy rescaling",
            iterations: RESCALE_MAX_ITER,
            residual: err / rho,
        });
    }
    Ok(Rescaled {
        t: best.0,
        profile: u.scaled(best.0),
        state: best.1,
        samples,
    })
}

/// `E_e(u2) ≤ E_e(u1)` for pointwise ordered `u1 ≤ u2`.
pub fn monotonicity_check(
    u1: &DeflectionProfile,
    u2: &DeflectionProfile,
    p: &ModelParams,
    grid: &Grid2D,
) -> Result<bool> {
    if u1.len() != u2.len() {
        return Err(Error::LengthMismatch {
            expected: u1.len(),
            got: u2.len(),
        });
    }
    if let Some(node) = u1
        .values()
        .iter()
        .zip(u2.values())
        .position(|(a, b)| *a > *b + ORDER_SLACK)
    {
        return Err(Error::Unordered { node });
    }
    let e1 = electrostatics(u1, p, grid)?.energy;
    let e2 = electrostatics(u2, p, grid)?.energy;
    Ok(e2 <= e1 + MONOTONE_TOL * e1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Grid1D;

    fn quartic(n: usize, c: f64) -> DeflectionProfile {
        DeflectionProfile::from_fn(Grid1D::new(n).unwrap(), |x| -c * (1.0 - x * x).powi(2))
    }

    fn params(eps: f64) -> ModelParams {
        ModelParams::new(1.0, 0.0, 0.0, eps).unwrap()
    }

    #[test]
    fn flat_energy_is_two() {
        let g2 = Grid2D::with_sizes(129, 65).unwrap();
        let u = DeflectionProfile::zeros(g2.line());
        let e = electrostatics(&u, &params(0.5), &g2).unwrap().energy;
        assert!((e - 2.0).abs() < 1e-6);
    }

    #[test]
    fn constant_gap_energy() {
        let g2 = Grid2D::with_sizes(33, 17).unwrap();
        let u = DeflectionProfile::from_fn(g2.line(), |_| -0.5);
        let e = electrostatics(&u, &params(0.9), &g2).unwrap().energy;
        assert!((e - 4.0).abs() < 1e-6);
    }

    #[test]
    fn bounds_of_flat_profiles() {
        let g = Grid1D::new(33).unwrap();
        let (l, u) = energy_bounds(&DeflectionProfile::zeros(g), &params(0.5)).unwrap();
        assert!((l - 2.0).abs() < 1e-14 && (u - 2.0).abs() < 1e-14);
        for eps in [0.1, 1.0, 3.0] {
            let (l, u) =
                energy_bounds(&DeflectionProfile::from_fn(g, |_| -0.5), &params(eps)).unwrap();
            assert!((l - 4.0).abs() < 1e-13 && (u - 4.0).abs() < 1e-13);
        }
    }

    #[test]
    fn bounds_of_quartic_against_quadrature_oracle() {
        let u = quartic(257, 0.5);
        let (l, up) = energy_bounds(&u, &params(1.0)).unwrap();
        // independent adaptive-free check: fine midpoint rule on the analytic integrands
        let m = 200_000;
        let (mut lo, mut hi) = (0.0, 0.0);
        for k in 0..m {
            let x = -1.0 + (k as f64 + 0.5) * 2.0 / m as f64;
            let v = -0.5 * (1.0 - x * x).powi(2);
            let dv = 2.0 * x * (1.0 - x * x);
            lo += 1.0 / (1.0 + v);
            hi += (1.0 + dv * dv) / (1.0 + v);
        }
        lo *= 2.0 / m as f64;
        hi *= 2.0 / m as f64;
        assert!((l - lo).abs() < 1e-6, "{l} vs {lo}");
        // centered slopes are second order: h² ≈ 6e-5 times O(1) constants
        assert!((up - hi).abs() < 1e-3, "{up} vs {hi}");
        assert!(l >= 2.0 && up > l);
    }

    #[test]
    fn identity_vanishes_for_flat_plate() {
        let g2 = Grid2D::with_sizes(33, 17).unwrap();
        let u = DeflectionProfile::zeros(g2.line());
        let phi = TransformedPotential::zero(&g2);
        assert!(boundary_identity_residual(&u, &params(0.5), &phi).unwrap() < 1e-8);
    }

    #[test]
    fn zero_direction_has_no_gap() {
        let g2 = Grid2D::with_sizes(33, 17).unwrap();
        let u = quartic(33, 0.3);
        let v = DeflectionProfile::zeros(g2.line());
        let c = shape_derivative_check(&u, &v, &params(0.5), &g2, 1e-3).unwrap();
        assert_eq!(c.gap, 0.0);
    }

    #[test]
    fn flat_plate_shape_derivative() {
        // g(0) ≡ 1, so the derivative along -(1-x²)² is 16/15
        let g2 = Grid2D::with_sizes(65, 33).unwrap();
        let u = DeflectionProfile::zeros(g2.line());
        let v = DeflectionProfile::from_fn(g2.line(), |x| -(1.0 - x * x).powi(2));
        let c = shape_derivative_check(&u, &v, &params(0.5), &g2, 1e-3).unwrap();
        assert!((c.analytic - 16.0 / 15.0).abs() < 1e-6);
        assert!((c.fd - 16.0 / 15.0).abs() < 1e-3, "{}", c.fd);
    }

    #[test]
    fn rescale_identity_and_limits() {
        let g2 = Grid2D::with_sizes(33, 17).unwrap();
        let p = params(0.5);
        let u = quartic(33, 0.6);
        let e = electrostatics(&u, &p, &g2).unwrap().energy;
        let r = rescale_to_energy(&u, &p, &g2, e).unwrap();
        assert_eq!(r.t, 1.0);
        let r = rescale_to_energy(&u, &p, &g2, 2.0 + 1e-6).unwrap();
        assert!(r.t <= 1e-2);
        assert!(matches!(
            rescale_to_energy(&u, &p, &g2, 2.0),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            rescale_to_energy(&u, &p, &g2, e + 1.0),
            Err(Error::OutOfBracket { .. })
        ));
    }

    #[test]
    fn restore_grows_small_profiles() {
        let g2 = Grid2D::with_sizes(33, 17).unwrap();
        let p = params(0.5);
        let u = quartic(33, 0.2);
        let r = restore_energy(&u, &p, &g2, 3.0, 1e-3).unwrap();
        assert!(r.t > 1.0);
        assert!((r.state.energy - 3.0).abs() < 1e-8 * 3.0);
    }

    #[test]
    fn monotone_on_ordered_quartics() {
        let g2 = Grid2D::with_sizes(33, 17).unwrap();
        let p = params(0.5);
        let u1 = quartic(33, 0.5);
        let u2 = quartic(33, 0.25);
        assert!(monotonicity_check(&u1, &u2, &p, &g2).unwrap());
        assert!(monotonicity_check(&u1, &u1, &p, &g2).unwrap());
        assert!(matches!(
            monotonicity_check(&u2, &u1, &p, &g2),
            Err(Error::Unordered { .. })
        ));
        let e1 = electrostatics(&u1, &p, &g2).unwrap().energy;
        let e2 = electrostatics(&u2, &p, &g2).unwrap().energy;
        assert!(e2 < e1);
    }
}
