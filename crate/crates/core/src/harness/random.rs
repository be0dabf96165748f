//! Seeded random fields for the identity suites.
//!
//! Every trial draws from its own ChaCha8 stream: `seed` selects the key and
//! the trial index the stream, so trials are reproducible one by one and do
//! not depend on the order in which they run.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spectral::{in_bands, sobolev_norm, FourierGrid, SpectralField};

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn draw(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Real field with independent uniform coefficients on `1 <= |j| <= max_mode`.
pub fn random_band_field(grid: &Arc<FourierGrid>, rng: &mut ChaCha8Rng, max_mode: i64) -> SpectralField {
    let max_mode = max_mode.min(grid.n() as i64 / 2 - 1);
    let mut out = SpectralField::zeros(grid.clone());
    for j in 1..=max_mode {
        let c = draw(rng);
        let (p, m) = (grid.slot(j).unwrap(), grid.slot(-j).unwrap());
        out.coeffs_mut()[p] = c;
        out.coeffs_mut()[m] = c.conj();
    }
    out
}

/// As [`random_band_field`], scaled to unit `H^s` norm.
pub fn random_unit_field(grid: &Arc<FourierGrid>, rng: &mut ChaCha8Rng, max_mode: i64, s: f64) -> SpectralField {
    let f = random_band_field(grid, rng, max_mode);
    let norm = sobolev_norm(&f, s).expect("non-negative order");
    f.scale(1.0 / norm)
}

/// Real zero-mean field supported in the cutoff bands `|k - j k0| <= delta`, `|j| <= max_band`.
pub fn random_band_psi(
    grid: &Arc<FourierGrid>,
    rng: &mut ChaCha8Rng,
    k0: f64,
    delta: f64,
    max_band: u32,
) -> SpectralField {
    let mut out = SpectralField::zeros(grid.clone());
    for j in 1..grid.n() as i64 / 2 {
        let k = j as f64 * grid.dk();
        if !in_bands(k, k0, delta, max_band) {
            continue;
        }
        let c = draw(rng);
        let (p, m) = (grid.slot(j).unwrap(), grid.slot(-j).unwrap());
        out.coeffs_mut()[p] = c;
        out.coeffs_mut()[m] = c.conj();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let g = FourierGrid::new(64, 2.0 * PI).unwrap();
        let a = random_band_field(&g, &mut trial_rng(7, 3), 10);
        let b = random_band_field(&g, &mut trial_rng(7, 3), 10);
        let c = random_band_field(&g, &mut trial_rng(7, 4), 10);
        assert_eq!(a.coeffs(), b.coeffs());
        assert_ne!(a.coeffs(), c.coeffs());
        assert!(a.is_hermitian() && a.mean() == Complex64::new(0.0, 0.0));
        assert!(a.coeffs().iter().enumerate().all(|(i, c)| g.mode(i).abs() <= 10 || c.norm() == 0.0));
    }

    #[test]
    fn unit_norm_and_band_support() {
        let g = FourierGrid::for_carrier(1.0, 16, 256).unwrap();
        let f = random_unit_field(&g, &mut trial_rng(1, 0), 40, 6.0);
        assert!((sobolev_norm(&f, 6.0).unwrap() - 1.0).abs() < 1e-12);
        let p = random_band_psi(&g, &mut trial_rng(1, 1), 1.0, 0.25, 2);
        for (i, c) in p.coeffs().iter().enumerate() {
            let k = g.wavenumber(i);
            if c.norm() > 0.0 {
                assert!(in_bands(k, 1.0, 0.25, 2) && k != 0.0);
            }
        }
    }
}
