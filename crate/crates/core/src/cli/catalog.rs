//! Named test profiles and seeded random corpora built from them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{DeflectionProfile, Grid1D, ModelParams};
use crate::spectral::clamped_eigenpair;

pub const PROFILES: &[&str] = &["zero", "quartic", "sextic", "eigen", "constant"];

/// `zero`, `quartic` = −c(1−x²)², `sextic` = −c(1−x²)³, `eigen` = cφ₁, and
/// `constant` = −c (flat but not clamped; only meaningful for potential
/// and energy evaluation). Every shape has minimum `−c`.
pub fn profile_catalog(
    name: &str,
    amplitude: f64,
    line: &Grid1D,
    p: &ModelParams,
) -> Result<DeflectionProfile> {
    if !PROFILES.contains(&name) {
        return Err(Error::config(
            "profile",
            format!(
                "unknown profile `{name}` (expected one of {})",
                PROFILES.join(", ")
            ),
        ));
    }
    if name != "zero" && !(0.0..1.0).contains(&amplitude) {
        return Err(Error::config(
            "amplitude",
            format!("must lie in [0, 1) to avoid touchdown, got {amplitude}"),
        ));
    }
    let c = amplitude;
    Ok(match name {
        "zero" => DeflectionProfile::zeros(*line),
        "quartic" => DeflectionProfile::from_fn(*line, |x| -c * (1.0 - x * x).powi(2)),
        "sextic" => DeflectionProfile::from_fn(*line, |x| -c * (1.0 - x * x).powi(3)),
        "constant" => DeflectionProfile::from_fn(*line, |_| -c),
        _ => clamped_eigenpair(p, line)?.phi1.scaled(c),
    })
}

/// `count` even clamped admissible profiles with shapes drawn from
/// quartic/sextic/eigen and amplitudes uniform in `[0.05, 0.85]`.
pub fn random_corpus(
    seed: u64,
    count: usize,
    line: &Grid1D,
    p: &ModelParams,
) -> Result<Vec<(String, f64, DeflectionProfile)>> {
    const SHAPES: [&str; 3] = ["quartic", "sextic", "eigen"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eigen = clamped_eigenpair(p, line)?.phi1;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let shape = SHAPES[rng.random_range(0..SHAPES.len())];
        let amp: f64 = rng.random_range(0.05..=0.85);
        let u = if shape == "eigen" {
            eigen.scaled(amp)
        } else {
            profile_catalog(shape, amp, line, p)?
        };
        out.push((shape.to_string(), amp, u));
    }
    Ok(out)
}
