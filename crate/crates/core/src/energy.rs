//! Error extraction, the bilinear normal-form operators `N`, `S`, `G`, the
//! energy `E_s` and its modified version.
//!
//! Fields are stored as Fourier-series coefficients, so the discrete
//! convolution `sum_m n(k, k - m, m) h(k - m) f(m)` already is the coefficient
//! of the product and carries no extra `2 pi / L` factor. Every identity below
//! then holds exactly up to rounding: each term is built from the same table
//! of `omega` and `rho` values and the same finite sum.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::approximation::{build_ansatz, AnsatzBundle};
use crate::dispersion::{omega, rho, rho_prime};
use crate::error::{Error, Result};
use crate::kg::DiagonalState;
use crate::spectral::{dealiased_product, integrate_product, FourierGrid, SpectralField};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Smallest admissible kernel denominator.
pub const DENOMINATOR_GUARD: f64 = 1e-6;

/// Below this `|k - m|` the difference quotient in the `S` kernel is replaced by `rho'(m)`.
pub const QUOTIENT_CUTOFF: f64 = 1e-10;

/// `(u_{-1}, u_1) = eps psi + eps^{5/2} (R_{-1}, R_1)`.
#[derive(Clone, Debug)]
pub struct ErrorPair {
    pub r_m1: SpectralField,
    pub r_p1: SpectralField,
    pub eps: f64,
    pub t: f64,
}

impl ErrorPair {
    pub fn zeros(grid: std::sync::Arc<FourierGrid>, eps: f64, t: f64) -> Self {
        Self { r_m1: SpectralField::zeros(grid.clone()), r_p1: SpectralField::zeros(grid), eps, t }
    }

    pub fn sum(&self) -> SpectralField {
        &self.r_p1 + &self.r_m1
    }
}

pub fn extract_error(sim: &DiagonalState, ansatz: &DiagonalState, eps: f64) -> Result<ErrorPair> {
    sim.um1.check_grid(&ansatz.um1)?;
    if (sim.t - ansatz.t).abs() > 1e-9 * sim.t.abs().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "simulation at t = {} but ansatz at t = {}",
            sim.t, ansatz.t
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let scale = eps.powf(-2.5);
    let mut r_m1 = (&sim.um1 - &ansatz.um1).scale(scale);
    let mut r_p1 = (&sim.up1 - &ansatz.up1).scale(scale);
    r_m1.symmetrize();
    r_p1.symmetrize();
    Ok(ErrorPair { r_m1, r_p1, eps, t: sim.t })
}

/// The combined approximation `psi` and the indicator `chi` of its Fourier support.
#[derive(Clone, Debug)]
pub struct PsiData {
    pub psi_hat: SpectralField,
    pub chi_mask: Vec<bool>,
}

impl PsiData {
    pub fn new(psi_hat: SpectralField) -> Self {
        let chi_mask = psi_hat.coeffs().iter().map(|c| *c != ZERO).collect();
        Self { psi_hat, chi_mask }
    }

    /// `psi = (u_{-1} + u_1) / eps` of the ansatz at time `t`.
    pub fn from_ansatz(b: &AnsatzBundle, t: f64) -> Result<Self> {
        let a = build_ansatz(b, t)?;
        Ok(Self::new((&a.um1 + &a.up1).scale(1.0 / b.eps)))
    }

    pub fn grid(&self) -> &std::sync::Arc<FourierGrid> {
        self.psi_hat.grid()
    }

    /// Indices where `chi` is one.
    pub fn support(&self) -> Vec<usize> {
        (0..self.chi_mask.len()).filter(|&i| self.chi_mask[i]).collect()
    }

    pub fn chi(&self, idx: usize) -> bool {
        self.chi_mask[idx]
    }

    /// Largest `|j|` in the support.
    pub fn max_mode(&self) -> i64 {
        let g = self.grid();
        self.support().into_iter().map(|i| g.mode(i).abs()).max().unwrap_or(0)
    }
}

fn check_sign(j: i32) -> Result<f64> {
    match j {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        _ => Err(Error::InvalidParameter(format!("sign index must be +1 or -1, got {j}"))),
    }
}

fn guarded(den: f64, k: f64, m: f64) -> Result<f64> {
    if den.abs() < DENOMINATOR_GUARD {
        Err(Error::Resonance { denominator: den, k, m })
    } else {
        Ok(den)
    }
}

/// `n_{j1 j2}(k, p, m) = -j1 rho(k) / (-j1 omega(k) - omega(p) + j2 omega(m))`, with `chi(p) = 1`.
pub fn n_kernel(k: f64, p: f64, m: f64, j1: i32, j2: i32) -> Result<f64> {
    let (s1, s2) = (check_sign(j1)?, check_sign(j2)?);
    let den = guarded(-s1 * omega(k) - omega(p) + s2 * omega(m), k, m)?;
    Ok(-s1 * rho(k) / den)
}

/// `s_{j2 j1}(k, p, m) = -j1 (rho(k) - rho(m)) / (p i (-j2 omega(k) - omega(p) + j1 omega(m)))`.
/// The removable singularity at `p = 0` uses `rho'(m)` in place of the quotient.
pub fn s_kernel(k: f64, p: f64, m: f64, j2: i32, j1: i32) -> Result<Complex64> {
    let (s1, s2) = (check_sign(j1)?, check_sign(j2)?);
    let den = guarded(-s2 * omega(k) - omega(p) + s1 * omega(m), k, m)?;
    let quotient = if p.abs() < QUOTIENT_CUTOFF { rho_prime(m) } else { (rho(k) - rho(m)) / p };
    // 1/i = -i
    Ok(Complex64::new(0.0, s1 * quotient / den))
}

/// Multiplier of `G_{j1 j2}` at `k` (without `chi`).
pub fn g_multiplier(k: f64, j1: i32, j2: i32) -> Result<Complex64> {
    let (s1, s2) = (check_sign(j1)?, check_sign(j2)?);
    if s1 == s2 {
        let den = omega(k) + s1 * k;
        Ok(Complex64::new(0.0, 1.0 / den))
    } else {
        Ok(Complex64::new(0.5, 0.0))
    }
}

struct Tables {
    k: Vec<f64>,
    omega: Vec<f64>,
    rho: Vec<f64>,
}

impl Tables {
    fn new(grid: &FourierGrid) -> Self {
        let k = grid.wavenumbers();
        let omega = k.iter().map(|&x| omega(x)).collect();
        let rho = k.iter().map(|&x| rho(x)).collect();
        Self { k, omega, rho }
    }
}

/// `out(k) = sum_{p in supp chi} kernel(a, p, m) h(p) f(m)`, `m = k - p` on the grid.
fn bilinear(
    chi: &PsiData,
    h: &SpectralField,
    f: &SpectralField,
    mut kernel: impl FnMut(&Tables, usize, usize, usize) -> Result<Complex64>,
) -> Result<SpectralField> {
    chi.psi_hat.check_grid(h)?;
    chi.psi_hat.check_grid(f)?;
    let grid = f.grid().clone();
    let n = grid.n();
    let half = (n / 2) as i64;
    let tables = Tables::new(&grid);
    let support: Vec<(usize, i64)> = chi.support().into_iter().map(|p| (p, grid.mode(p))).collect();
    let hc = h.coeffs();
    let fc = f.coeffs();
    let mut out = vec![ZERO; n];
    for (a, slot) in out.iter_mut().enumerate() {
        let ja = grid.mode(a);
        if ja == -half {
            continue;
        }
        let mut acc = ZERO;
        for &(p, jp) in &support {
            let jm = ja - jp;
            if jm.abs() >= half {
                continue;
            }
            let m = grid.slot(jm).expect("mode inside the grid");
            if fc[m] == ZERO || hc[p] == ZERO {
                continue;
            }
            acc += kernel(&tables, a, p, m)? * hc[p] * fc[m];
        }
        *slot = acc;
    }
    Ok(SpectralField::from_raw(grid, out))
}

/// `N_{j1 j2}(h, f)` with `chi` taken from `psi`; `h` is read on the support only.
pub fn apply_n_with(psi: &PsiData, h: &SpectralField, f: &SpectralField, j1: i32, j2: i32) -> Result<SpectralField> {
    let (s1, s2) = (check_sign(j1)?, check_sign(j2)?);
    bilinear(psi, h, f, |t, a, p, m| {
        let den = guarded(-s1 * t.omega[a] - t.omega[p] + s2 * t.omega[m], t.k[a], t.k[m])?;
        Ok(Complex64::new(-s1 * t.rho[a] / den, 0.0))
    })
}

pub fn apply_n(psi: &PsiData, f: &SpectralField, j1: i32, j2: i32) -> Result<SpectralField> {
    apply_n_with(psi, &psi.psi_hat, f, j1, j2)
}

/// `S_{j2 j1}(dh, f)`; `dh` is the already differentiated field `d/dx h`.
pub fn apply_s(psi: &PsiData, dh: &SpectralField, f: &SpectralField, j2: i32, j1: i32) -> Result<SpectralField> {
    let (s1, s2) = (check_sign(j1)?, check_sign(j2)?);
    bilinear(psi, dh, f, |t, a, p, m| {
        let den = guarded(-s2 * t.omega[a] - t.omega[p] + s1 * t.omega[m], t.k[a], t.k[m])?;
        let dk = t.k[p];
        let quotient = if dk.abs() < QUOTIENT_CUTOFF { rho_prime(t.k[m]) } else { (t.rho[a] - t.rho[m]) / dk };
        Ok(Complex64::new(0.0, s1 * quotient / den))
    })
}

/// `G_{j1 j2} h` with `chi` taken from `psi`.
pub fn apply_g(psi: &PsiData, h: &SpectralField, j1: i32, j2: i32) -> Result<SpectralField> {
    psi.psi_hat.check_grid(h)?;
    let grid = h.grid().clone();
    let mut out = vec![ZERO; grid.n()];
    for (idx, c) in h.coeffs().iter().enumerate() {
        if psi.chi(idx) {
            out[idx] = g_multiplier(grid.wavenumber(idx), j1, j2)? * c;
        }
    }
    Ok(SpectralField::from_raw(grid, out))
}

/// Absolute discrepancy of an identity and the size of its terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub discrepancy: f64,
    pub scale: f64,
}

impl IdentityCheck {
    /// `discrepancy / scale`, or 0 when every term vanishes.
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.discrepancy
        } else {
            self.discrepancy / self.scale
        }
    }
}

fn times_i(f: &SpectralField, symbol: fn(f64) -> f64) -> SpectralField {
    f.map_modes(|k, c| Complex64::new(0.0, symbol(k)) * c)
}

/// `-j1 i omega N(psi, f) - N(i omega psi, f) + j2 N(psi, i omega f) + j1 i rho(psi f)` in L2.
pub fn check_normal_form_identity(psi: &PsiData, f: &SpectralField, j1: i32, j2: i32) -> Result<IdentityCheck> {
    let (s1, s2) = (check_sign(j1)?, check_sign(j2)?);
    let t1 = times_i(&apply_n(psi, f, j1, j2)?, omega).scale(-s1);
    let t2 = apply_n_with(psi, &times_i(&psi.psi_hat, omega), f, j1, j2)?.scale(-1.0);
    let t3 = apply_n(psi, &times_i(f, omega), j1, j2)?.scale(s2);
    let t4 = times_i(&dealiased_product(&psi.psi_hat, f)?, rho).scale(s1);
    let scale = t1.l2_norm() + t2.l2_norm() + t3.l2_norm() + t4.l2_norm();
    let lhs = &(&(&t1 + &t2) + &t3) + &t4;
    Ok(IdentityCheck { discrepancy: lhs.l2_norm(), scale })
}

/// `int f N_{j1 j2}(psi, g) + (j1/j2) int N_{j2 j1}(psi, f) g - int S_{j2 j1}(psi_x, f) g`.
pub fn check_adjoint_identity(
    psi: &PsiData,
    f: &SpectralField,
    g: &SpectralField,
    j1: i32,
    j2: i32,
) -> Result<IdentityCheck> {
    let (s1, s2) = (check_sign(j1)?, check_sign(j2)?);
    let lhs = f.inner(&apply_n(psi, g, j1, j2)?);
    let back = -(s1 / s2) * apply_n(psi, f, j2, j1)?.inner(g);
    let s_term = apply_s(psi, &psi.psi_hat.derivative(1), f, j2, j1)?.inner(g);
    Ok(IdentityCheck { discrepancy: (lhs - back - s_term).abs(), scale: lhs.abs() + back.abs() + s_term.abs() })
}

/// Discrepancies of the two integration-by-parts identities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PartsCheck {
    /// `int a_j f_j f_j' + 1/2 int a_j' f_j^2`, worst of `j = +-1`.
    pub single: IdentityCheck,
    /// `sum_j int a_j f_j f_{-j}'` minus the leading term and the two explicit remainders.
    pub mixed: IdentityCheck,
    /// `1/2 int (a_{-1} - a_1)(f_1 + f_{-1})(f_1 - f_{-1})'`.
    pub leading: f64,
    /// `-1/2 int (a_1 + a_{-1})' f_1 f_{-1}`.
    pub remainder_cross: f64,
    /// `1/4 int (a_{-1} - a_1)' (f_1^2 - f_{-1}^2)`.
    pub remainder_square: f64,
}

/// `a = (a_{-1}, a_1)`, `f = (f_{-1}, f_1)`.
pub fn check_parts_identities(
    a: (&SpectralField, &SpectralField),
    f: (&SpectralField, &SpectralField),
) -> Result<PartsCheck> {
    let (am, ap) = a;
    let (fm, fp) = f;
    let mut single = IdentityCheck::default();
    for (aj, fj) in [(am, fm), (ap, fp)] {
        let lhs = integrate_product(&[aj, fj, &fj.derivative(1)])?;
        let rhs = -0.5 * integrate_product(&[&aj.derivative(1), fj, fj])?;
        let c = IdentityCheck { discrepancy: (lhs - rhs).abs(), scale: lhs.abs() + rhs.abs() };
        if c.relative() >= single.relative() {
            single = c;
        }
    }
    let lhs = integrate_product(&[am, fm, &fp.derivative(1)])? + integrate_product(&[ap, fp, &fm.derivative(1)])?;
    let diff_a = am - ap;
    let sum_a = am + ap;
    let leading = 0.5 * integrate_product(&[&diff_a, &(fp + fm), &(fp - fm).derivative(1)])?;
    let remainder_cross = -0.5 * integrate_product(&[&sum_a.derivative(1), fp, fm])?;
    let squares = integrate_product(&[&diff_a.derivative(1), fp, fp])? - integrate_product(&[&diff_a.derivative(1), fm, fm])?;
    let remainder_square = 0.25 * squares;
    let mixed = IdentityCheck {
        discrepancy: (lhs - leading - remainder_cross - remainder_square).abs(),
        scale: lhs.abs() + leading.abs() + remainder_cross.abs() + remainder_square.abs(),
    };
    Ok(PartsCheck { single, mixed, leading, remainder_cross, remainder_square })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `E_0 .. E_s`.
    pub e_ell: Vec<f64>,
    /// `h_1 .. h_s`.
    pub h_ell: Vec<f64>,
    pub e_total: f64,
    pub e_modified: f64,
    pub s: u32,
}

/// `E_s` and `E_s + eps^2/2 sum h_l` for the error `err` around `psi`.
pub fn energy(err: &ErrorPair, psi: &PsiData, s: u32) -> Result<EnergyBreakdown> {
    err.r_m1.check_grid(&psi.psi_hat)?;
    err.r_p1.check_grid(&psi.psi_hat)?;
    let eps = err.eps;
    let r = [(-1, &err.r_m1), (1, &err.r_p1)];
    // N_{j1 j2}(psi, R_{j2}), indexed [j1][j2] with 0 for -1
    let mut n = Vec::with_capacity(4);
    for (j1, _) in r {
        for (j2, rj2) in r {
            n.push((j1, apply_n(psi, rj2, j1, j2)?));
        }
    }
    let mut e_ell = Vec::with_capacity(s as usize + 1);
    for l in 0..=s {
        let mut e = 0.0;
        for (j1, rj1) in r {
            let dr = rj1.derivative(l);
            e += 0.5 * dr.inner(&dr);
            let cross: f64 = n.iter().filter(|(j, _)| *j == j1).map(|(_, nj)| dr.inner(&nj.derivative(l))).sum();
            e += eps * cross;
        }
        e_ell.push(e);
    }
    let sum = err.sum();
    let psi_hat = &psi.psi_hat;
    let mut h_ell = Vec::with_capacity(s as usize);
    for l in 1..=s {
        let q = &psi_hat.derivative(2).scale((2 * l + 1) as f64) - psi_hat;
        let d = sum.derivative(l);
        let h = integrate_product(&[&q, psi_hat, &d, &d])?
            + eps.powf(1.5) * integrate_product(&[&q, &sum, &d, &d])?
            + eps.sqrt() * integrate_product(&[&sum, &d, &d])?;
        h_ell.push(h);
    }
    let e_total: f64 = e_ell.iter().sum();
    let e_modified = e_total + 0.5 * eps * eps * h_ell.iter().sum::<f64>();
    Ok(EnergyBreakdown { e_ell, h_ell, e_total, e_modified, s })
}

/// One row of an energy trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub e: f64,
    pub e_modified: f64,
    /// Centred difference of `e_modified`; one-sided at the ends.
    pub de_dt: f64,
    /// `de_dt / (eps^2 (E~ + eps^{1/2} E~^{3/2} + 1))`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub eps: f64,
    pub s: u32,
    pub samples: Vec<EnergySample>,
    pub sup_modified: f64,
    pub sup_abs_ratio: f64,
    /// `sup |E~ - E| / eps^2`.
    pub gap_constant: f64,
    pub initial_modified: f64,
}

/// Assemble a trace from `(t, E_s, E~_s)` samples at increasing times.
pub fn energy_trace(eps: f64, s: u32, points: &[(f64, f64, f64)]) -> Result<EnergyTrace> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter("an energy trace needs at least two samples".into()));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::InvalidParameter("sample times must increase".into()));
    }
    if let Some(p) = points.iter().find(|p| !(p.1.is_finite() && p.2.is_finite())) {
        return Err(Error::BlowUp { t: p.0, reason: "non-finite energy".into() });
    }
    let last = points.len() - 1;
    let mut samples = Vec::with_capacity(points.len());
    for (i, &(t, e, em)) in points.iter().enumerate() {
        let (lo, hi) = (i.saturating_sub(1), (i + 1).min(last));
        let de_dt = (points[hi].2 - points[lo].2) / (points[hi].0 - points[lo].0);
        let scale = eps * eps * (em + eps.sqrt() * em.max(0.0).powf(1.5) + 1.0);
        samples.push(EnergySample { t, e, e_modified: em, de_dt, ratio: de_dt / scale });
    }
    let sup_modified = samples.iter().map(|x| x.e_modified).fold(f64::NEG_INFINITY, f64::max);
    let sup_abs_ratio = samples.iter().map(|x| x.ratio.abs()).fold(0.0, f64::max);
    let gap_constant = samples.iter().map(|x| (x.e_modified - x.e).abs()).fold(0.0, f64::max) / (eps * eps);
    Ok(EnergyTrace { eps, s, initial_modified: samples[0].e_modified, samples, sup_modified, sup_abs_ratio, gap_constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::FourierGrid;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real(g: &Arc<FourierGrid>, modes: &[(i64, Complex64)]) -> SpectralField {
        let all: Vec<_> = modes.iter().flat_map(|&(j, c)| [(j, c), (-j, c.conj())]).collect();
        SpectralField::from_modes(g.clone(), &all).unwrap()
    }

    fn grid() -> Arc<FourierGrid> {
        // dk = 1/4
        FourierGrid::new(128, 8.0 * PI).unwrap()
    }

    fn psi(g: &Arc<FourierGrid>) -> PsiData {
        PsiData::new(real(g, &[(4, c(0.5, 0.2)), (3, c(0.1, -0.3)), (8, c(0.05, 0.0))]))
    }

    fn f(g: &Arc<FourierGrid>) -> SpectralField {
        let modes: Vec<_> = (1..30).map(|j| (j, c((j as f64 * 0.7).sin(), (j as f64 * 1.3).cos()) / j as f64)).collect();
        real(g, &modes)
    }

    #[test]
    fn kernel_point_values() {
        assert!((n_kernel(2.0, 1.0, 1.0, 1, 1).unwrap() - 0.8).abs() < 1e-15);
        let expect = rho(2.0) / (omega(2.0) + 2.0 * omega(1.0));
        assert!((n_kernel(2.0, 1.0, 1.0, 1, -1).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.353_214_75).abs() < 1e-8);
        let g = g_multiplier(2.0, 1, 1).unwrap();
        assert!(g.re.abs() < 1e-15 && (g.im - 0.236_068_0).abs() < 1e-7);
        assert_eq!(g_multiplier(2.0, 1, -1).unwrap(), c(0.5, 0.0));
        assert!(n_kernel(1.0, 1.0, 1.0, 2, 1).is_err());
    }

    #[test]
    fn g_difference_is_derivative() {
        for k in [0.3, 1.0, 1.7, 2.2, -0.9] {
            let d = g_multiplier(k, -1, -1).unwrap() - g_multiplier(k, 1, 1).unwrap();
            assert!((d - c(0.0, 2.0 * k)).norm() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn s_kernel_diagonal_limit() {
        let m = 1.3;
        let at = s_kernel(m, 0.0, m, 1, 1).unwrap();
        let near = s_kernel(m + 1e-6, 1e-6, m, 1, 1).unwrap();
        assert!(at.is_finite() && (at - near).norm() < 1e-5);
    }

    #[test]
    fn kernel_symmetry() {
        let g = grid();
        for j1 in [-1, 1] {
            for j2 in [-1, 1] {
                for a in 1..40 {
                    for p in [1, 3, 8] {
                        if a == p {
                            continue;
                        }
                        let (k, q) = (g.dk() * a as f64, g.dk() * p as f64);
                        let fwd = n_kernel(k, q, k - q, j1, j2).unwrap();
                        let back = n_kernel(-k, -q, q - k, j1, j2).unwrap();
                        assert_eq!(fwd, back);
                    }
                }
            }
        }
    }

    #[test]
    fn bilinear_zero_and_reality() {
        let g = grid();
        let p = psi(&g);
        let zero = SpectralField::zeros(g.clone());
        assert!(apply_n(&p, &zero, 1, 1).unwrap().is_zero());
        assert!(apply_n(&PsiData::new(zero.clone()), &f(&g), 1, -1).unwrap().is_zero());
        for (j1, j2) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let out = apply_n(&p, &f(&g), j1, j2).unwrap();
            assert!(out.hermitian_defect() < 1e-12);
        }
    }

    #[test]
    fn single_mode_reduces_to_kernel() {
        let g = grid();
        let p = PsiData::new(real(&g, &[(4, c(1.0, 0.0))]));
        let f = real(&g, &[(6, c(0.5, 0.0))]);
        let out = apply_n(&p, &f, 1, -1).unwrap();
        let expect = n_kernel(10.0 * g.dk(), 4.0 * g.dk(), 6.0 * g.dk(), 1, -1).unwrap() * 0.5;
        assert!((out.mode(10) - c(expect, 0.0)).norm() < 1e-15);
        let expect = n_kernel(-2.0 * g.dk(), 4.0 * g.dk(), -6.0 * g.dk(), 1, -1).unwrap() * 0.5;
        assert!((out.mode(-2) - c(expect, 0.0)).norm() < 1e-15);
        for j1 in [-1, 1] {
            for j2 in [-1, 1] {
                assert!(check_normal_form_identity(&p, &f, j1, j2).unwrap().relative() < 1e-14);
            }
        }
    }

    #[test]
    fn identities_hold() {
        let g = grid();
        let (p, f1) = (psi(&g), f(&g));
        let g1 = f1.derivative(1).map_modes(|k, c| c / (1.0 + k * k));
        for j1 in [-1, 1] {
            for j2 in [-1, 1] {
                let nf = check_normal_form_identity(&p, &f1, j1, j2).unwrap();
                assert!(nf.relative() < 1e-13, "{nf:?}");
                let adj = check_adjoint_identity(&p, &f1, &g1, j1, j2).unwrap();
                assert!(adj.relative() < 1e-13, "{adj:?}");
            }
        }
    }

    #[test]
    fn parts_identities() {
        let g = grid();
        let am = real(&g, &[(2, c(0.3, 0.1)), (5, c(0.0, 0.2))]);
        let ap = real(&g, &[(1, c(-0.2, 0.4))]);
        let fm = f(&g);
        let fp = f(&g).derivative(1).scale(0.3);
        let r = check_parts_identities((&am, &ap), (&fm, &fp)).unwrap();
        assert!(r.single.relative() < 1e-13 && r.mixed.relative() < 1e-13, "{r:?}");
        let r = check_parts_identities((&am, &am), (&fm, &fp)).unwrap();
        assert!(r.leading.abs() < 1e-13);
    }

    #[test]
    fn energy_limits() {
        let g = grid();
        let p = psi(&g);
        let zero = ErrorPair::zeros(g.clone(), 0.1, 0.0);
        let e = energy(&zero, &p, 6).unwrap();
        assert!(e.e_ell.iter().chain(&e.h_ell).all(|x| *x == 0.0));
        assert_eq!((e.e_ell.len(), e.h_ell.len()), (7, 6));
        let err = ErrorPair { r_m1: f(&g), r_p1: f(&g).scale(-0.5), eps: 0.0, t: 0.0 };
        let e = energy(&err, &p, 3).unwrap();
        for (l, el) in e.e_ell.iter().enumerate() {
            let a = err.r_m1.derivative(l as u32);
            let b = err.r_p1.derivative(l as u32);
            let expect = 0.5 * (a.inner(&a) + b.inner(&b));
            assert!((el - expect).abs() < 1e-12 * expect);
        }
        assert_eq!(e.e_total, e.e_modified);
    }

    #[test]
    fn extract_recovers_injection() {
        let g = grid();
        let eps: f64 = 0.1;
        let ans = DiagonalState { um1: psi(&g).psi_hat, up1: SpectralField::zeros(g.clone()), t: 2.0 };
        let known = f(&g);
        let sim = DiagonalState { um1: &ans.um1 + &known.scale(eps.powf(2.5)), up1: ans.up1.clone(), t: 2.0 };
        let e = extract_error(&sim, &ans, eps).unwrap();
        assert!((&e.r_m1 - &known).max_abs() < 1e-12);
        assert!(e.r_p1.is_zero());
        assert!(extract_error(&ans, &ans, eps).unwrap().r_m1.is_zero());
        let late = DiagonalState { t: 3.0, ..ans.clone() };
        assert!(extract_error(&late, &ans, eps).is_err());
    }

    #[test]
    fn trace_of_zero_error() {
        let tr = energy_trace(0.1, 6, &[(0.0, 0.0, 0.0), (0.5, 0.0, 0.0), (1.0, 0.0, 0.0)]).unwrap();
        assert!(tr.samples.iter().all(|s| s.de_dt == 0.0 && s.ratio == 0.0));
        assert_eq!(tr.sup_modified, 0.0);
        assert!(energy_trace(0.1, 6, &[(0.0, 0.0, 0.0)]).is_err());
    }
}
