//! Electrostatic potential on the fixed rectangle.
//!
//! The gap `Ω(u) = {-1 < z < u(x)}` is mapped onto `[-1,1] x [0,1]` by
//! `η = (1+z)/(1+u(x))`. Writing `ψ = Φ + η`, the potential solves a
//! non-divergence elliptic problem `L_u Φ = f_u` with `Φ = 0` on the
//! boundary:
//!
//! ```text
//! L_u = ε² ∂ₓ² − 2ε²ηU ∂ₓ∂η + (1 + ε²η²(∂ₓu)²)/(1+u)² ∂η²
//!       + ε²η (2U² − ∂ₓ²u/(1+u)) ∂η
//! f_u = ε²η (∂ₓU − U²),            U = ∂ₓu/(1+u)
//! ```
//!
//! discretized by centered second-order differences (four-point cross for
//! the mixed term) and solved with a banded LU.

use serde::Serialize;

use crate::banded::{BandLu, BandMatrix};
use crate::error::{Error, Result};
use crate::model::profile::d1;
use crate::model::{DeflectionProfile, Grid2D, ModelParams};

/// Relative residual accepted from the linear solve.
pub const LINEAR_TOL: f64 = 1e-10;

/// Coefficients of the transformed operator sampled on the x-grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientField {
    /// `∂ₓu`
    pub du: Vec<f64>,
    /// `∂ₓ²u`
    pub d2u: Vec<f64>,
    /// `U = ∂ₓu / (1+u)`
    pub log_slope: Vec<f64>,
    /// `∂ₓU`, same difference rule as `du`
    pub log_slope_dx: Vec<f64>,
    /// `1 / (1+u)`
    pub inv_gap: Vec<f64>,
}

pub fn coefficients(u: &DeflectionProfile) -> Result<CoefficientField> {
    u.require_gap()?;
    let h = u.grid().h();
    let du = u.d1();
    let d2u = u.d2();
    let inv_gap: Vec<f64> = u.values().iter().map(|v| 1.0 / (1.0 + v)).collect();
    let log_slope: Vec<f64> = du.iter().zip(&inv_gap).map(|(d, r)| d * r).collect();
    let log_slope_dx = d1(&log_slope, h);
    Ok(CoefficientField {
        du,
        d2u,
        log_slope,
        log_slope_dx,
        inv_gap,
    })
}

/// Nine-point stencil weights at one node.
#[derive(Debug, Clone, Copy, Default)]
struct Stencil {
    c: f64,
    e: f64,
    w: f64,
    n: f64,
    s: f64,
    // cross term weight; applied as +NE -SE -NW +SW
    x: f64,
}

/// Discretized `L_u` and `f_u` for a fixed deflection.
#[derive(Debug, Clone)]
pub struct TransformedOperator {
    grid: Grid2D,
    eps2: f64,
    coef: CoefficientField,
}

impl TransformedOperator {
    pub fn new(u: &DeflectionProfile, p: &ModelParams, grid: &Grid2D) -> Result<Self> {
        if u.len() != grid.nx() {
            return Err(Error::LengthMismatch {
                expected: grid.nx(),
                got: u.len(),
            });
        }
        Ok(TransformedOperator {
            grid: *grid,
            eps2: p.eps2(),
            coef: coefficients(u)?,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn coefficients(&self) -> &CoefficientField {
        &self.coef
    }

    fn stencil(&self, i: usize, j: usize) -> Stencil {
        let g = &self.grid;
        let (hx, he) = (g.hx(), g.heta());
        let eta = g.eta(j);
        let c = &self.coef;
        let eps2 = self.eps2;
        let big_u = c.log_slope[i];
        let a_xx = eps2;
        let a_xe = -2.0 * eps2 * eta * big_u;
        let a_ee = (1.0 + eps2 * eta * eta * c.du[i] * c.du[i]) * c.inv_gap[i] * c.inv_gap[i];
        let b_e = eps2 * eta * (2.0 * big_u * big_u - c.d2u[i] * c.inv_gap[i]);
        Stencil {
            c: -2.0 * a_xx / (hx * hx) - 2.0 * a_ee / (he * he),
            e: a_xx / (hx * hx),
            w: a_xx / (hx * hx),
            n: a_ee / (he * he) + b_e / (2.0 * he),
            s: a_ee / (he * he) - b_e / (2.0 * he),
            x: a_xe / (4.0 * hx * he),
        }
    }

    /// `f_u` on the full grid (zero on boundary nodes).
    pub fn rhs(&self) -> Vec<f64> {
        let g = &self.grid;
        let mut f = vec![0.0; g.node_count()];
        for i in 1..g.nx() - 1 {
            let big_u = self.coef.log_slope[i];
            let shape = self.coef.log_slope_dx[i] - big_u * big_u;
            for j in 1..g.neta() - 1 {
                f[g.index(i, j)] = self.eps2 * g.eta(j) * shape;
            }
        }
        f
    }

    /// Apply the discrete operator to full-grid values, boundary values
    /// included. Boundary entries of the result are zero.
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let ne = g.neta();
        let mut out = vec![0.0; g.node_count()];
        for i in 1..g.nx() - 1 {
            for j in 1..ne - 1 {
                let st = self.stencil(i, j);
                let k = g.index(i, j);
                out[k] = st.c * phi[k]
                    + st.e * phi[k + ne]
                    + st.w * phi[k - ne]
                    + st.n * phi[k + 1]
                    + st.s * phi[k - 1]
                    + st.x
                        * (phi[k + ne + 1] - phi[k + ne - 1] - phi[k - ne + 1] + phi[k - ne - 1]);
            }
        }
        out
    }

    fn unknowns(&self) -> (usize, usize) {
        (self.grid.nx() - 2, self.grid.neta() - 2)
    }

    /// Interior system with the Dirichlet boundary eliminated.
    pub fn matrix(&self) -> BandMatrix {
        let (mx, me) = self.unknowns();
        let band = me + 1;
        let mut m = BandMatrix::zeros(mx * me, band, band);
        let id = |i: usize, j: usize| (i - 1) * me + (j - 1);
        let inside = |i: usize, j: usize| i >= 1 && i <= mx && j >= 1 && j <= me;
        for i in 1..=mx {
            for j in 1..=me {
                let st = self.stencil(i, j);
                let row = id(i, j);
                let mut put = |ii: usize, jj: usize, v: f64| {
                    if inside(ii, jj) {
                        m.add(row, id(ii, jj), v);
                    }
                };
                put(i, j, st.c);
                put(i + 1, j, st.e);
                put(i - 1, j, st.w);
                put(i, j + 1, st.n);
                put(i, j - 1, st.s);
                put(i + 1, j + 1, st.x);
                put(i + 1, j - 1, -st.x);
                put(i - 1, j + 1, -st.x);
                put(i - 1, j - 1, st.x);
            }
        }
        m
    }

    fn gather(&self, full: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (mx, me) = self.unknowns();
        let mut v = Vec::with_capacity(mx * me);
        for i in 1..=mx {
            v.extend_from_slice(&full[g.index(i, 1)..g.index(i, 1) + me]);
        }
        v
    }

    fn scatter(&self, interior: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (mx, me) = self.unknowns();
        let mut full = vec![0.0; g.node_count()];
        for i in 1..=mx {
            let k = g.index(i, 1);
            full[k..k + me].copy_from_slice(&interior[(i - 1) * me..i * me]);
        }
        full
    }
}

/// `Φ_u` sampled on the rectangle grid; zero on all four edges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformedPotential {
    pub grid: Grid2D,
    pub phi: Vec<f64>,
}

impl TransformedPotential {
    pub fn zero(grid: &Grid2D) -> Self {
        TransformedPotential {
            grid: *grid,
            phi: vec![0.0; grid.node_count()],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.phi[self.grid.index(i, j)]
    }

    /// `∂ₓΦ` on all nodes; one-sided second-order at x = ±1.
    pub fn dx(&self) -> Vec<f64> {
        let g = &self.grid;
        let (nx, ne, h) = (g.nx(), g.neta(), g.hx());
        let mut out = vec![0.0; g.node_count()];
        for j in 0..ne {
            let v = |i: usize| self.phi[g.index(i, j)];
            out[g.index(0, j)] = (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h);
            for i in 1..nx - 1 {
                out[g.index(i, j)] = (v(i + 1) - v(i - 1)) / (2.0 * h);
            }
            out[g.index(nx - 1, j)] = (3.0 * v(nx - 1) - 4.0 * v(nx - 2) + v(nx - 3)) / (2.0 * h);
        }
        out
    }

    /// `∂ηΦ` on all nodes; one-sided second-order at η = 0, 1.
    pub fn deta(&self) -> Vec<f64> {
        let g = &self.grid;
        let (ne, h) = (g.neta(), g.heta());
        let mut out = vec![0.0; g.node_count()];
        for i in 0..g.nx() {
            let k0 = g.index(i, 0);
            let col = &self.phi[k0..k0 + ne];
            let dst = &mut out[k0..k0 + ne];
            dst[0] = (-3.0 * col[0] + 4.0 * col[1] - col[2]) / (2.0 * h);
            for j in 1..ne - 1 {
                dst[j] = (col[j + 1] - col[j - 1]) / (2.0 * h);
            }
            dst[ne - 1] = (3.0 * col[ne - 1] - 4.0 * col[ne - 2] + col[ne - 3]) / (2.0 * h);
        }
        out
    }

    /// `∂ηΦ(x, 1)` by the one-sided three-point rule.
    pub fn trace_deta_top(&self) -> Vec<f64> {
        let g = &self.grid;
        let ne = g.neta();
        let h = g.heta();
        (0..g.nx())
            .map(|i| {
                let v = |j: usize| self.phi[g.index(i, j)];
                (3.0 * v(ne - 1) - 4.0 * v(ne - 2) + v(ne - 3)) / (2.0 * h)
            })
            .collect()
    }

    /// Bilinear interpolation at (x, η).
    pub fn interpolate(&self, x: f64, eta: f64) -> f64 {
        let g = &self.grid;
        let sx = ((x + 1.0) / g.hx()).clamp(0.0, (g.nx() - 1) as f64);
        let se = (eta / g.heta()).clamp(0.0, (g.neta() - 1) as f64);
        let i = (sx.floor() as usize).min(g.nx() - 2);
        let j = (se.floor() as usize).min(g.neta() - 2);
        let (wx, we) = (sx - i as f64, se - j as f64);
        (1.0 - wx) * ((1.0 - we) * self.at(i, j) + we * self.at(i, j + 1))
            + wx * ((1.0 - we) * self.at(i + 1, j) + we * self.at(i + 1, j + 1))
    }
}

/// A solved potential together with the factorization that produced it.
///
/// Keeping the factorization allows cheap linearized re-solves when `u`
/// is perturbed (used for traction Jacobians).
#[derive(Debug, Clone)]
pub struct PotentialSolve {
    pub operator: TransformedOperator,
    pub potential: TransformedPotential,
    lu: BandLu,
}

impl PotentialSolve {
    pub fn new(u: &DeflectionProfile, p: &ModelParams, grid: &Grid2D) -> Result<Self> {
        let operator = TransformedOperator::new(u, p, grid)?;
        let f = operator.rhs();
        Self::with_forcing(operator, &f)
    }

    /// Solve `L_u Φ = forcing` (full-grid forcing, boundary entries ignored).
    pub fn with_forcing(operator: TransformedOperator, forcing: &[f64]) -> Result<Self> {
        let grid = *operator.grid();
        if forcing.len() != grid.node_count() {
            return Err(Error::LengthMismatch {
                expected: grid.node_count(),
                got: forcing.len(),
            });
        }
        let matrix = operator.matrix();
        let b = operator.gather(forcing);
        let lu = matrix.clone().factor()?;
        let x = solve_refined(&matrix, &lu, &b)?;
        let potential = TransformedPotential {
            grid,
            phi: operator.scatter(&x),
        };
        Ok(PotentialSolve {
            operator,
            potential,
            lu,
        })
    }

    /// First-order update of `Φ` for a nearby deflection `v`:
    /// `Φ + L_u⁻¹ (f_v − L_v Φ)`, reusing the factorization of `L_u`.
    pub fn linearized_potential(
        &self,
        v: &DeflectionProfile,
        p: &ModelParams,
    ) -> Result<TransformedPotential> {
        let op_v = TransformedOperator::new(v, p, self.operator.grid())?;
        let f = op_v.rhs();
        let lphi = op_v.apply(&self.potential.phi);
        let r: Vec<f64> = f.iter().zip(&lphi).map(|(a, b)| a - b).collect();
        let mut dx = self.operator.gather(&r);
        self.lu.solve_in_place(&mut dx);
        let d = self.operator.scatter(&dx);
        Ok(TransformedPotential {
            grid: *self.operator.grid(),
            phi: self
                .potential
                .phi
                .iter()
                .zip(&d)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }
}

fn solve_refined(m: &BandMatrix, lu: &BandLu, b: &[f64]) -> Result<Vec<f64>> {
    let bnorm = b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if bnorm == 0.0 {
        return Ok(vec![0.0; b.len()]);
    }
    let mut x = lu.solve(b);
    let mut rel = f64::INFINITY;
    for _ in 0..3 {
        let ax = m.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        rel = r.iter().fold(0.0f64, |s, v| s.max(v.abs())) / bnorm;
        if rel <= LINEAR_TOL {
            return Ok(x);
        }
        let dx = lu.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    Err(Error::NonConvergence {
        what: "transformed potential solve",
        iterations: 3,
        residual: rel,
    })
}

/// Solve the transformed potential problem for deflection `u`.
pub fn solve_transformed(
    u: &DeflectionProfile,
    p: &ModelParams,
    grid: &Grid2D,
) -> Result<TransformedPotential> {
    Ok(PotentialSolve::new(u, p, grid)?.potential)
}

/// Boundary traction `g(u) = ε²|∂ₓψ|² + |∂zψ|²` on the plate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Traction {
    pub g: Vec<f64>,
}

/// Traction from the trace of `∂ηΦ` at η = 1.
///
/// On the plate `∂zψ = (1 + ∂ηΦ)/(1+u)` and `∂ₓψ = −∂zψ ∂ₓu`, so
/// `g = (1 + ε²(∂ₓu)²) ((1 + ∂ηΦ)/(1+u))²`.
pub fn traction(
    u: &DeflectionProfile,
    p: &ModelParams,
    phi: &TransformedPotential,
) -> Result<Traction> {
    u.require_gap()?;
    let du = u.d1();
    let tr = phi.trace_deta_top();
    let eps2 = p.eps2();
    let g = u
        .values()
        .iter()
        .zip(&du)
        .zip(&tr)
        .map(|((ui, di), ti)| {
            let dz = (1.0 + ti) / (1.0 + ui);
            (1.0 + eps2 * di * di) * dz * dz
        })
        .collect();
    Ok(Traction { g })
}

/// `∂zψ(x, u(x)) = (1 + ∂ηΦ(x,1))/(1+u(x))` at every node.
pub fn normal_flux(u: &DeflectionProfile, phi: &TransformedPotential) -> Vec<f64> {
    let tr = phi.trace_deta_top();
    u.values()
        .iter()
        .zip(&tr)
        .map(|(ui, ti)| (1.0 + ti) / (1.0 + ui))
        .collect()
}

/// `ψ(x, z) = Φ(x, η) + η` with `η = (1+z)/(1+u(x))`.
pub fn recover_physical(
    u: &DeflectionProfile,
    phi: &TransformedPotential,
    x: f64,
    z: f64,
) -> Result<f64> {
    const SLACK: f64 = 1e-12;
    if !(-1.0 - SLACK..=1.0 + SLACK).contains(&x) {
        return Err(Error::OutsideDomain { x, z });
    }
    let top = u.eval(x);
    if z < -1.0 - SLACK || z > top + SLACK || 1.0 + top <= 0.0 {
        return Err(Error::OutsideDomain { x, z });
    }
    let eta = ((1.0 + z) / (1.0 + top)).clamp(0.0, 1.0);
    Ok(phi.interpolate(x, eta) + eta)
}

/// Physical coordinates and potential at every rectangle node:
/// `(x, z, ψ)` rows in grid order.
pub fn physical_samples(u: &DeflectionProfile, phi: &TransformedPotential) -> Vec<[f64; 3]> {
    let g = &phi.grid;
    let mut rows = Vec::with_capacity(g.node_count());
    for i in 0..g.nx() {
        let gap = 1.0 + u.values()[i];
        for j in 0..g.neta() {
            let eta = g.eta(j);
            rows.push([g.x(i), -1.0 + gap * eta, phi.at(i, j) + eta]);
        }
    }
    rows
}
