//! Composite Simpson quadrature on the 1D and 2D grids.

use super::grid::{Grid1D, Grid2D};
use crate::error::{Error, Result};

/// Composite Simpson weights for `n` (odd) uniformly spaced nodes at spacing `h`.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    debug_assert!(n % 2 == 1 && n >= 3);
    (0..n)
        .map(|i| {
            let c = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

/// Integral over [-1, 1] of the grid samples.
pub fn quad1d(grid: &Grid1D, samples: &[f64]) -> Result<f64> {
    if samples.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: samples.len(),
        });
    }
    let w = simpson_weights(grid.len(), grid.h());
    Ok(w.iter().zip(samples).map(|(w, f)| w * f).sum())
}

/// Integral over [-1, 1] x [0, 1] of samples stored in `Grid2D::index` order.
pub fn quad2d(grid: &Grid2D, samples: &[f64]) -> Result<f64> {
    if samples.len() != grid.node_count() {
        return Err(Error::LengthMismatch {
            expected: grid.node_count(),
            got: samples.len(),
        });
    }
    let wx = simpson_weights(grid.nx(), grid.hx());
    let we = simpson_weights(grid.neta(), grid.heta());
    let mut total = 0.0;
    for (i, wxi) in wx.iter().enumerate() {
        let row = &samples[grid.index(i, 0)..grid.index(i, 0) + grid.neta()];
        let inner: f64 = we.iter().zip(row).map(|(w, f)| w * f).sum();
        total += wxi * inner;
    }
    Ok(total)
}
