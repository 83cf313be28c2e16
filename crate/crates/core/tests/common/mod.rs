//! Oracles shared by the integration tests. The reference solutions here
//! never call the library's potential, energy or traction code; only
//! `mms_error` runs the solver under test.

#![allow(dead_code)]

use mems_core::elliptic::{PotentialSolve, TransformedOperator};
use mems_core::model::{DeflectionProfile, Grid1D, Grid2D, ModelParams};

/// Piecewise-linear finite elements for `ε²ψ_xx + ψ_zz = 0` on the
/// physical gap `{−1 < x < 1, −1 < z < u(x)}`, with `ψ = 0` on the ground,
/// `ψ = 1` on the plate and `ψ = (1+z)/(1+u)` on the sides.
///
/// The mesh follows the plate: column `i` sits at `x_i` and carries `m+1`
/// equally spaced nodes from `z = −1` to `z = u(x_i)`. Each cell is split
/// into two triangles with alternating diagonals.
pub struct FemSolution {
    pub nx: usize,
    pub m: usize,
    pub x: Vec<f64>,
    pub top: Vec<f64>,
    /// Node values, column-major: `psi[i * (m+1) + j]`.
    pub psi: Vec<f64>,
    pub energy: f64,
}

struct Csr {
    start: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut start = vec![0];
        let mut col = Vec::new();
        let mut val = Vec::new();
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            let mut last = usize::MAX;
            for (c, v) in r {
                if c == last {
                    *val.last_mut().unwrap() += v;
                } else {
                    col.push(c);
                    val.push(v);
                    last = c;
                }
            }
            start.push(col.len());
        }
        Csr { start, col, val }
    }

    fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.start.len() - 1)
            .map(|r| {
                (self.start[r]..self.start[r + 1])
                    .map(|k| self.val[k] * x[self.col[k]])
                    .sum()
            })
            .collect()
    }

    fn diag(&self) -> Vec<f64> {
        (0..self.start.len() - 1)
            .map(|r| {
                (self.start[r]..self.start[r + 1])
                    .find(|&k| self.col[k] == r)
                    .map(|k| self.val[k])
                    .unwrap()
            })
            .collect()
    }
}

pub fn fem_solve(u: impl Fn(f64) -> f64, eps: f64, nx: usize, m: usize) -> FemSolution {
    let e2 = eps * eps;
    let x: Vec<f64> = (0..nx)
        .map(|i| -1.0 + 2.0 * i as f64 / (nx - 1) as f64)
        .collect();
    let top: Vec<f64> = x.iter().map(|&xi| u(xi)).collect();
    let per = m + 1;
    let id = |i: usize, j: usize| i * per + j;
    let pos = |i: usize, j: usize| (x[i], -1.0 + (1.0 + top[i]) * j as f64 / m as f64);
    let nn = nx * per;

    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nn];
    let mut add_tri = |t: [usize; 3], p: [(f64, f64); 3]| {
        let det = (p[1].0 - p[0].0) * (p[2].1 - p[0].1) - (p[2].0 - p[0].0) * (p[1].1 - p[0].1);
        let area = 0.5 * det.abs();
        // gradients of the barycentric basis functions
        let b = [p[1].1 - p[2].1, p[2].1 - p[0].1, p[0].1 - p[1].1];
        let c = [p[2].0 - p[1].0, p[0].0 - p[2].0, p[1].0 - p[0].0];
        for a in 0..3 {
            for q in 0..3 {
                let k = (e2 * b[a] * b[q] + c[a] * c[q]) / (4.0 * area);
                rows[t[a]].push((t[q], k));
            }
        }
    };
    for i in 0..nx - 1 {
        for j in 0..m {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            let (pa, pb, pc, pd) = (pos(i, j), pos(i + 1, j), pos(i + 1, j + 1), pos(i, j + 1));
            if (i + j) % 2 == 0 {
                add_tri([a, b, c], [pa, pb, pc]);
                add_tri([a, c, d], [pa, pc, pd]);
            } else {
                add_tri([a, b, d], [pa, pb, pd]);
                add_tri([b, c, d], [pb, pc, pd]);
            }
        }
    }
    let k = Csr::from_rows(rows);

    let mut fixed = vec![false; nn];
    let mut psi = vec![0.0; nn];
    for i in 0..nx {
        for j in 0..per {
            let side = i == 0 || i == nx - 1;
            if side || j == 0 || j == m {
                fixed[id(i, j)] = true;
                psi[id(i, j)] = j as f64 / m as f64;
            }
        }
    }
    // CG on the free nodes, Jacobi preconditioned.
    let diag = k.diag();
    let project = |v: &mut Vec<f64>| {
        for (vi, f) in v.iter_mut().zip(&fixed) {
            if *f {
                *vi = 0.0;
            }
        }
    };
    let mut r: Vec<f64> = k.mul(&psi).iter().map(|v| -v).collect();
    project(&mut r);
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let r0 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _ in 0..20 * nn {
        let mut ap = k.mul(&p);
        project(&mut ap);
        let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for q in 0..nn {
            psi[q] += alpha * p[q];
            r[q] -= alpha * ap[q];
        }
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-13 * r0 {
            break;
        }
        z = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for q in 0..nn {
            p[q] = z[q] + beta * p[q];
        }
    }
    let energy = psi.iter().zip(k.mul(&psi)).map(|(a, b)| a * b).sum();
    FemSolution {
        nx,
        m,
        x,
        top,
        psi,
        energy,
    }
}

impl FemSolution {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.psi[i * (self.m + 1) + j]
    }

    /// `ε²ψ_x² + ψ_z²` on the plate. Since `ψ ≡ 1` along the plate,
    /// `ψ_x = −u′ψ_z`; `ψ_z` is a one-sided second-order difference down
    /// the vertical mesh column.
    pub fn traction(&self, du: impl Fn(f64) -> f64, eps: f64) -> Vec<f64> {
        let m = self.m;
        (0..self.nx)
            .map(|i| {
                let dz = (1.0 + self.top[i]) / m as f64;
                let psi_z = (3.0 * self.at(i, m) - 4.0 * self.at(i, m - 1) + self.at(i, m - 2))
                    / (2.0 * dz);
                let s = du(self.x[i]);
                (1.0 + eps * eps * s * s) * psi_z * psi_z
            })
            .collect()
    }
}

/// Fourth-order central second difference.
fn second(f: impl Fn(f64) -> f64, t: f64, d: f64) -> f64 {
    (-f(t - 2.0 * d) + 16.0 * f(t - d) - 30.0 * f(t) + 16.0 * f(t + d) - f(t + 2.0 * d))
        / (12.0 * d * d)
}

/// `(ε²∂ₓ² + ∂z²)` of `Φ(x, (1+z)/(1+u(x)))` at the physical point that
/// maps to `(x, η)`, by differencing in physical coordinates.
pub fn physical_forcing(
    phi: &impl Fn(f64, f64) -> f64,
    u: &impl Fn(f64) -> f64,
    eps: f64,
    x: f64,
    eta: f64,
) -> f64 {
    let psi = |x: f64, z: f64| phi(x, (1.0 + z) / (1.0 + u(x)));
    let z = -1.0 + eta * (1.0 + u(x));
    let d = 1e-3;
    eps * eps * second(|s| psi(s, z), x, d) + second(|s| psi(x, s), z, d)
}

pub fn sup(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0f64, |s, x| s.max(x.abs()))
}

/// Manufactured solution on the unit rectangle, zero on every edge.
pub fn exact(x: f64, eta: f64) -> f64 {
    (1.0 - x * x) * (std::f64::consts::PI * eta).sin() * (0.5 * x).exp()
}

pub fn plate(x: f64) -> f64 {
    -0.3 * (1.0 - x * x).powi(2)
}

/// Max-norm error of the transformed solve on an `n × n` grid.
pub fn mms_error(n: usize, eps: f64) -> f64 {
    let line = Grid1D::new(n).unwrap();
    let grid = Grid2D::new(line, n).unwrap();
    let p = ModelParams::new(1.0, 0.0, 0.0, eps).unwrap();
    let u = DeflectionProfile::from_fn(line, plate);
    let op = TransformedOperator::new(&u, &p, &grid).unwrap();
    let forcing = grid.sample(|x, eta| physical_forcing(&exact, &plate, eps, x, eta));
    let sol = PotentialSolve::with_forcing(op, &forcing).unwrap();
    let mut err: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            err = err.max((sol.potential.at(i, j) - exact(grid.x(i), grid.eta(j))).abs());
        }
    }
    err
}
