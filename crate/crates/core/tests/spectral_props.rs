use std::f64::consts::PI;
use std::sync::Arc;

use nlskg::dispersion::{omega, rho};
use nlskg::spectral::{
    apply_multiplier, dealiased_product, inverse_transform, sobolev_norm, transform, weighted_l1_norm, FourierGrid,
    RealField, SpectralField, Symbol,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn real_field(grid: &Arc<FourierGrid>, coeffs: &[(f64, f64)]) -> SpectralField {
    let modes: Vec<_> = coeffs
        .iter()
        .enumerate()
        .flat_map(|(i, &(a, b))| {
            let j = i as i64 + 1;
            [(j, Complex64::new(a, b)), (-j, Complex64::new(a, -b))]
        })
        .collect();
    SpectralField::from_modes(grid.clone(), &modes).unwrap()
}

/// `sum_{p + q = j} f_p g_q` over all mode pairs, no truncation.
fn direct_convolution(f: &SpectralField, g: &SpectralField) -> SpectralField {
    let grid = f.grid().clone();
    let n = grid.n() as i64;
    let mut out = SpectralField::zeros(grid.clone());
    for p in -n / 2..n / 2 {
        for q in -n / 2..n / 2 {
            if let Some(slot) = grid.slot(p + q) {
                out.coeffs_mut()[slot] += f.mode(p) * g.mode(q);
            }
        }
    }
    out
}

fn grid_strategy() -> impl Strategy<Value = Arc<FourierGrid>> {
    (prop::sample::select(vec![32usize, 64, 128, 96]), 1.0f64..200.0).prop_map(|(n, l)| FourierGrid::new(n, l).unwrap())
}

proptest! {
    #[test]
    fn transform_round_trip_and_parseval(g in grid_strategy(), seed in prop::collection::vec(-1.0f64..1.0, 128)) {
        let values: Vec<f64> = (0..g.n()).map(|i| seed[i % seed.len()] * (1.0 + (i as f64).sin())).collect();
        let f = RealField::new(g.clone(), values.clone()).unwrap();
        let back = inverse_transform(&transform(&f).unwrap()).unwrap();
        let scale = f.max_abs().max(1e-300);
        for (a, b) in values.iter().zip(back.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
        let spectral = transform(&f).unwrap().l2_norm();
        let physical = f.l2_norm();
        prop_assert!((spectral - physical).abs() <= 1e-12 * physical.max(1e-300));
    }

    #[test]
    fn odd_multipliers_keep_fields_real(coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..30)) {
        let g = FourierGrid::new(64, 20.0).unwrap();
        let f = real_field(&g, &coeffs);
        for sym in [Symbol::i_omega(), Symbol::i_rho(), Symbol::derivative(3)] {
            let out = apply_multiplier(&f, &sym);
            prop_assert!(out.hermitian_defect() <= 1e-12, "{}", sym.name());
        }
    }

    #[test]
    fn dispersion_symmetry_on_grid(g in grid_strategy()) {
        for idx in 1..g.n() {
            let k = g.wavenumber(idx);
            prop_assert!((omega(k).powi(2) - (1.0 + k * k)).abs() <= 4.0 * f64::EPSILON * (1.0 + k * k));
            prop_assert_eq!(omega(-k), -omega(k));
            prop_assert_eq!(rho(-k), -rho(k));
        }
    }

    #[test]
    fn dealiased_product_is_convolution_for_narrow_bands(
        a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=10),
        b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=10),
    ) {
        // n / 6 = 10
        let g = FourierGrid::new(64, 2.0 * PI).unwrap();
        let (f, h) = (real_field(&g, &a), real_field(&g, &b));
        let fast = dealiased_product(&f, &h).unwrap();
        let slow = direct_convolution(&f, &h);
        prop_assert!((&fast - &slow).max_abs() <= 1e-12 * (1.0 + slow.max_abs()));
    }

    #[test]
    fn product_inequality(
        a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=16),
        b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=16),
        s in prop::sample::select(vec![0.0, 1.0, 2.5, 6.0]),
        l in 5.0f64..80.0,
    ) {
        let g = FourierGrid::new(128, l).unwrap();
        let (psi, f) = (real_field(&g, &a), real_field(&g, &b));
        // exact product: the supports are well inside the 2/3 band
        let lhs = sobolev_norm(&dealiased_product(&psi, &f).unwrap(), s).unwrap();
        let rhs = 2f64.powf(0.5 * s) * weighted_l1_norm(&psi, s).unwrap() * sobolev_norm(&f, s).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }
}
