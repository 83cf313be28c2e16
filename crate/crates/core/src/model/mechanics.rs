use super::params::ModelParams;
use super::profile::DeflectionProfile;
use crate::error::Result;

/// Bending plus stretching energy
/// `β/2 ‖∂²u‖² + ½(τ + a/2 ‖∂u‖²) ‖∂u‖²`.
pub fn mechanical_energy(u: &DeflectionProfile, p: &ModelParams) -> Result<f64> {
    u.require_admissible()?;
    Ok(mechanical_energy_unchecked(u, p))
}

pub(crate) fn mechanical_energy_unchecked(u: &DeflectionProfile, p: &ModelParams) -> f64 {
    let s = u.grad_norm_sq();
    0.5 * p.beta * u.hessian_norm_sq() + 0.5 * (p.tau + 0.5 * p.a * s) * s
}

/// L²-gradient of the mechanical energy, `β d4(u) - (τ + a‖∂u‖²) d2(u)`, on
/// interior nodes. Boundary entries are zero.
///
/// This is the exact gradient of the discrete energy above with respect to
/// the interior values in the `h`-weighted inner product.
pub fn em_gradient(u: &DeflectionProfile, p: &ModelParams) -> Vec<f64> {
    let stretch = p.tau + p.a * u.grad_norm_sq();
    let d4 = u.d4();
    let d2 = u.d2();
    let n = u.len();
    let mut g = vec![0.0; n];
    for i in 1..n - 1 {
        g[i] = p.beta * d4[i] - stretch * d2[i];
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::grid::Grid1D;
    use crate::model::profile::interior_dot;

    fn quartic(n: usize, c: f64) -> DeflectionProfile {
        DeflectionProfile::from_fn(Grid1D::new(n).unwrap(), |x| -c * (1.0 - x * x).powi(2))
    }

    #[test]
    fn zero_has_zero_energy() {
        let u = DeflectionProfile::zeros(Grid1D::new(17).unwrap());
        assert_eq!(mechanical_energy(&u, &ModelParams::default()).unwrap(), 0.0);
        assert!(em_gradient(&u, &ModelParams::default())
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn bending_only_oracle() {
        // ‖∂²u‖² = 0.25 · 128/5 for u = -0.5(1-x²)²
        let p = ModelParams::new(1.0, 0.0, 0.0, 0.5).unwrap();
        let e = mechanical_energy(&quartic(257, 0.5), &p).unwrap();
        assert!((e - 3.2).abs() < 1e-3, "{e}");
    }

    #[test]
    fn with_stretching_oracle() {
        // ‖∂u‖² = 64/105
        let p = ModelParams::new(1.0, 1.0, 2.0, 0.5).unwrap();
        let s: f64 = 64.0 / 105.0;
        let exact = 3.2 + 0.5 * (1.0 + s) * s;
        let e = mechanical_energy(&quartic(257, 0.5), &p).unwrap();
        assert!((e - exact).abs() < 1e-3, "{e} vs {exact}");
        assert!((exact - 3.6905).abs() < 1e-4);
    }

    #[test]
    fn rejects_inadmissible() {
        let u = quartic(17, -0.5);
        assert!(mechanical_energy(&u, &ModelParams::default()).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let p = ModelParams::new(1.3, 0.7, 2.0, 0.5).unwrap();
        let u = quartic(33, 0.4);
        let g = em_gradient(&u, &p);
        let v = DeflectionProfile::from_fn(*u.grid(), |x| -(1.0 - x * x).powi(3) * (1.0 + x * x));
        let s = 1e-4;
        let fd = (mechanical_energy_unchecked(&u.axpy(s, &v).unwrap(), &p)
            - mechanical_energy_unchecked(&u.axpy(-s, &v).unwrap(), &p))
            / (2.0 * s);
        let an = interior_dot(&g, v.values(), u.grid().h());
        assert!((fd - an).abs() < 1e-8 * an.abs(), "{fd} vs {an}");
    }
}
