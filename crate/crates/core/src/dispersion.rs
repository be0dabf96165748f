//! Closed-form dispersion quantities of the Klein-Gordon symbol and
//! resonance diagnostics.
//!
//! The branch convention is `sign(0) = +1`, so `omega(0) = 1` and
//! `rho(0) = 0`. Scans that cross a zero of an argument evaluate both
//! one-sided limits explicitly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn sign(k: f64) -> f64 {
    if k < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `sign(k) sqrt(1 + k^2)`.
pub fn omega(k: f64) -> f64 {
    sign(k) * (1.0 + k * k).sqrt()
}

/// `sign(k) k^2 / sqrt(1 + k^2)`.
pub fn rho(k: f64) -> f64 {
    sign(k) * k * k / (1.0 + k * k).sqrt()
}

/// Derivative of `rho` (even and continuous, `rho'(0) = 0`).
pub fn rho_prime(k: f64) -> f64 {
    let a = k.abs();
    (a * a * a + 2.0 * a) / (1.0 + k * k).powf(1.5)
}

/// Carrier quantities at the basic wavenumber `k0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarrierData {
    pub k0: f64,
    pub omega0: f64,
    /// Group velocity `omega'(k0)`.
    pub cg: f64,
    /// `omega''(k0)`.
    pub omega2: f64,
}

pub fn carrier(k0: f64) -> Result<CarrierData> {
    if !(k0 > 0.0 && k0.is_finite()) {
        return Err(Error::InvalidParameter(format!("carrier wavenumber must be positive, got {k0}")));
    }
    let q = 1.0 + k0 * k0;
    Ok(CarrierData { k0, omega0: q.sqrt(), cg: k0 / q.sqrt(), omega2: q.powf(-1.5) })
}

/// Default scan half-width in `k`.
pub fn default_k_max(k1: f64) -> f64 {
    (10.0 * k1).max(50.0)
}

pub const DEFAULT_SCAN_DENSITY: usize = 1000;

/// Result of the three-wave nonresonance scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonresonanceScan {
    pub k1: f64,
    pub k_max: f64,
    pub density: usize,
    /// Minimum over the scanned lattice.
    pub scanned_min: f64,
    pub argmin_k: f64,
    pub argmin_p: f64,
    pub argmin_j1: i8,
    pub argmin_j2: i8,
    /// Infimum of the limits `k -> +-infinity` (only `j1 = j2` has a finite limit).
    pub tail_infimum: f64,
    /// `min(scanned_min, tail_infimum)`.
    pub constant: f64,
}

/// Infimum over `|k| <= k_max`, `|p| <= k1` and `j1, j2 = +-1` of
/// `|-j1 omega(k) - omega(p) + j2 omega(k - p)|`, together with the
/// `|k| -> infinity` limit.
///
/// `k` and `p` run over the lattice `Z / density`, which contains every
/// sign change of the three arguments; at those points both branches of
/// `omega(0) = +-1` are tried.
///
/// For `j1 = j2 = j` and `|k| -> infinity` the expression tends to
/// `|j p + omega(p)|`, whose minimum over `|p| <= k1` is
/// `1 / (k1 + sqrt(1 + k1^2))`. Beyond `k_max` the expression approaches this
/// limit monotonically up to `O(k1 / k_max^2)`, so the tail value is folded
/// into the constant. The mixed pairs grow like `2|k|`.
pub fn nonresonance_constant(k0: f64, k1: f64, density: usize) -> Result<NonresonanceScan> {
    nonresonance_scan(k0, k1, density, default_k_max(k1))
}

pub fn nonresonance_scan(k0: f64, k1: f64, density: usize, k_max: f64) -> Result<NonresonanceScan> {
    carrier(k0)?;
    if !(k1 > 0.0 && k1.is_finite()) || !(k_max >= k1) {
        return Err(Error::InvalidParameter(format!("need 0 < k1 <= k_max, got k1 = {k1}, k_max = {k_max}")));
    }
    if density == 0 {
        return Err(Error::InvalidParameter("scan density must be positive".into()));
    }
    let d = density as f64;
    let na = (k_max * d).floor() as i64;
    let nb = (k1 * d).floor() as i64;
    // omega on the lattice i/d for i in [-(na+nb), na+nb]; the zero entry is handled by branching
    let offset = na + nb;
    let table: Vec<f64> = (-offset..=offset).map(|i| omega(i as f64 / d)).collect();
    let branches = |i: i64| -> [f64; 2] {
        if i == 0 {
            [1.0, -1.0]
        } else {
            let w = table[(i + offset) as usize];
            [w, w]
        }
    };

    // (value, a, b, j1, j2); ties broken lexicographically so the result is partition independent
    type Best = (f64, i64, i64, i8, i8);
    let better = |x: Best, y: Best| -> Best {
        if (x.0, x.1, x.2, x.3, x.4) <= (y.0, y.1, y.2, y.3, y.4) {
            x
        } else {
            y
        }
    };
    let init: Best = (f64::INFINITY, 0, 0, 0, 0);

    let best = (-na..=na)
        .into_par_iter()
        .map(|a| {
            let mut best = init;
            let wk = branches(a);
            for b in -nb..=nb {
                if a != 0 && b != 0 && a != b {
                    let (x, y, z) = (wk[0], table[(b + offset) as usize], table[(a - b + offset) as usize]);
                    for j1 in [1i8, -1] {
                        for j2 in [1i8, -1] {
                            let v = (-(j1 as f64) * x - y + j2 as f64 * z).abs();
                            if v < best.0 {
                                best = better((v, a, b, j1, j2), best);
                            }
                        }
                    }
                    continue;
                }
                let wp = branches(b);
                let wkp = branches(a - b);
                for j1 in [1i8, -1] {
                    for j2 in [1i8, -1] {
                        let mut v = f64::INFINITY;
                        for x in wk {
                            for y in wp {
                                for z in wkp {
                                    v = v.min((-(j1 as f64) * x - y + j2 as f64 * z).abs());
                                }
                            }
                        }
                        if v < best.0 {
                            best = better((v, a, b, j1, j2), best);
                        }
                    }
                }
            }
            best
        })
        .reduce(|| init, better);

    let tail = 1.0 / (k1 + (1.0 + k1 * k1).sqrt());
    Ok(NonresonanceScan {
        k1,
        k_max,
        density,
        scanned_min: best.0,
        argmin_k: best.1 as f64 / d,
        argmin_p: best.2 as f64 / d,
        argmin_j1: best.3,
        argmin_j2: best.4,
        tail_infimum: tail,
        constant: best.0.min(tail),
    })
}

/// Harmonic gaps `min(|omega(m k0) - m omega0|, |omega(m k0) + m omega0|)` for `m = 2..=m_max`.
pub fn harmonic_nonresonance(k0: f64, m_max: u32) -> Result<Vec<(u32, f64)>> {
    let c = carrier(k0)?;
    if m_max < 2 {
        return Err(Error::InvalidParameter(format!("m_max must be at least 2, got {m_max}")));
    }
    Ok((2..=m_max)
        .map(|m| {
            let w = omega(m as f64 * k0);
            let mw = m as f64 * c.omega0;
            (m, (w - mw).abs().min((w + mw).abs()))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn carrier_at_one_matches_finite_differences() {
        let c = carrier(1.0).unwrap();
        let h = 1e-5;
        let d1 = (omega(1.0 + h) - omega(1.0 - h)) / (2.0 * h);
        let d2 = (omega(1.0 + h) - 2.0 * omega(1.0) + omega(1.0 - h)) / (h * h);
        assert!((c.omega0 - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!((c.cg - d1).abs() < 1e-8);
        assert!((c.omega2 - d2).abs() < 1e-5);
        assert!((c.omega2 - 0.353_553_4).abs() < 1e-7);
    }

    #[test]
    fn carrier_identities() {
        for k0 in [0.5, 1.0, 2.0, 5.0] {
            let c = carrier(k0).unwrap();
            assert!((c.omega0 * c.cg - k0).abs() < 1e-14);
            assert!(c.omega0 > 1.0 && c.cg > 0.0 && c.cg < 1.0 && c.omega2 > 0.0);
        }
        let c = carrier(1e-9).unwrap();
        assert!((c.omega0 - 1.0).abs() < 1e-15 && c.cg < 1e-8);
        assert!(carrier(0.0).is_err());
        assert!(carrier(-1.0).is_err());
    }

    #[test]
    fn branch_convention() {
        assert_eq!(omega(0.0), 1.0);
        assert_eq!(rho(0.0), 0.0);
        assert_eq!(omega(-2.0), -(5f64).sqrt());
        let h = 1e-6;
        for k in [-2.0, -0.3, 0.7, 3.0] {
            let fd = (rho(k + h) - rho(k - h)) / (2.0 * h);
            assert!((rho_prime(k) - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn one_sided_limit_example() {
        // k -> 0+, p = 1, j1 = j2 = 1
        let v = (-omega(0.0) - omega(1.0) + omega(-1.0)).abs();
        assert!((v - 3.828_427_1).abs() < 1e-7);
    }

    #[test]
    fn harmonic_gaps() {
        let g = harmonic_nonresonance(1.0, 3).unwrap();
        assert!((g[0].1 - 0.592_359_1).abs() < 1e-7);
        assert!((g[1].1 - 1.080_363_0).abs() < 1e-7);
        assert!(harmonic_nonresonance(1.0, 1).is_err());
    }

    #[test]
    fn coarse_scan_is_positive() {
        let s = nonresonance_scan(1.0, 1.0, 20, 10.0).unwrap();
        assert!(s.constant > 0.0);
        assert!(s.constant <= s.tail_infimum);
    }
}
