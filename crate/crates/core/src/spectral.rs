//! Periodic Fourier discretization of the real line.
//!
//! A [`FourierGrid`] of `n` points on a torus of length `L` carries the
//! collocation points `x_j = -L/2 + j L / n` and the wavenumbers
//! `k_j = 2 pi j / L`, `j = -n/2 .. n/2 - 1`. Spectral coefficients follow the
//! convention
//!
//! ```text
//! u(x) = sum_j c_j exp(i k_j x)
//! ```
//!
//! with `x` measured from the centre of the box, so a field that is even
//! about `x = 0` has real coefficients. Coefficients are stored in FFT order
//! (index `0..n/2` holds `j >= 0`, the upper half holds `j < 0`).
//!
//! Discrete norms are pinned as follows:
//!
//! * `sobolev_norm(F, s) = sqrt(L * sum_j (1 + k_j^2)^s |c_j|^2)`, so at
//!   `s = 0` it is the trapezoidal L2 norm of the physical field.
//! * `weighted_l1_norm(F, s) = sum_j (1 + k_j^2)^(s/2) |c_j|`. This is the
//!   Riemann sum of the coefficient density `|c_j| L / (2 pi)` with bin width
//!   `2 pi / L`, and it bounds the sup norm of the field.
//!
//! With these conventions `||psi f||_{H^s} <= 2^{s/2} ||psi||_{L1(s)} ||f||_{H^s}`
//! for alias-free products.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::dispersion;
use crate::error::{Error, Result};

/// Relative tolerance used when a spectral field must represent a real field.
pub const HERMITIAN_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Equispaced periodic grid with cached FFT plans.
pub struct FourierGrid {
    n: usize,
    length: f64,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
    padded: OnceLock<Arc<FourierGrid>>,
}

impl fmt::Debug for FourierGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierGrid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl FourierGrid {
    pub fn new(n: usize, length: f64) -> Result<Arc<Self>> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "grid size must be even and >= 8, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid length must be positive, got {length}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            n,
            length,
            forward: planner.plan_fft_forward(n),
            backward: planner.plan_fft_inverse(n),
            padded: OnceLock::new(),
        }))
    }

    /// Grid spanning `wavelengths` carrier periods, so that `k0` is the
    /// wavenumber of bin `wavelengths` exactly.
    pub fn for_carrier(k0: f64, wavelengths: usize, n: usize) -> Result<Arc<Self>> {
        if !(k0 > 0.0) || wavelengths == 0 {
            return Err(Error::InvalidParameter(format!(
                "carrier grid needs k0 > 0 and at least one wavelength (k0 = {k0}, m = {wavelengths})"
            )));
        }
        Self::new(n, 2.0 * PI * wavelengths as f64 / k0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Wavenumber spacing `2 pi / L`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Signed mode number of storage slot `idx`.
    pub fn mode(&self, idx: usize) -> i64 {
        if idx < self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    /// Storage slot of signed mode `j`, if it is on the grid.
    pub fn slot(&self, j: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if j >= -half && j < half {
            Some(if j >= 0 { j as usize } else { (j + self.n as i64) as usize })
        } else {
            None
        }
    }

    pub fn wavenumber(&self, idx: usize) -> f64 {
        self.dk() * self.mode(idx) as f64
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Largest mode number kept by the 2/3 rule.
    pub fn dealias_limit(&self) -> i64 {
        (self.n / 3) as i64
    }

    pub fn same_as(&self, other: &FourierGrid) -> bool {
        std::ptr::eq(self, other) || (self.n == other.n && self.length == other.length)
    }

    /// Twice-refined grid on the same box, used for exact quadrature of
    /// cubic and quartic products.
    pub(crate) fn padded(&self) -> &Arc<FourierGrid> {
        self.padded.get_or_init(|| {
            FourierGrid::new(2 * self.n, self.length).expect("doubling a valid grid")
        })
    }

    /// Physical samples to coefficients, in place.
    pub(crate) fn forward_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.forward.process(buf);
        let scale = 1.0 / self.n as f64;
        for (idx, c) in buf.iter_mut().enumerate() {
            // exp(i k_j L/2) = (-1)^j shifts the origin to the box centre
            *c *= if idx % 2 == 0 { scale } else { -scale };
        }
    }

    /// Coefficients to physical samples, in place.
    pub(crate) fn backward_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        for c in buf.iter_mut().skip(1).step_by(2) {
            *c = -*c;
        }
        self.backward.process(buf);
    }
}

/// Real samples of a field at the collocation points.
#[derive(Clone, Debug)]
pub struct RealField {
    grid: Arc<FourierGrid>,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Arc<FourierGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidField(format!(
                "expected {} samples, got {}",
                grid.n(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite sample at index {pos}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<FourierGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<FourierGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Trapezoidal L2 norm.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.dx() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Fourier coefficients `c_j` of a field on a [`FourierGrid`].
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<FourierGrid>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Arc<FourierGrid>) -> Self {
        let n = grid.n();
        Self { grid, coeffs: vec![ZERO; n] }
    }

    pub fn from_coeffs(grid: Arc<FourierGrid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(Error::InvalidField(format!(
                "expected {} coefficients, got {}",
                grid.n(),
                coeffs.len()
            )));
        }
        if let Some(pos) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidField(format!("non-finite coefficient at slot {pos}")));
        }
        Ok(Self { grid, coeffs })
    }

    /// Field built from `(mode, coefficient)` pairs. Modes off the grid are an error.
    pub fn from_modes(grid: Arc<FourierGrid>, modes: &[(i64, Complex64)]) -> Result<Self> {
        let mut field = Self::zeros(grid);
        for &(j, c) in modes {
            let slot = field
                .grid
                .slot(j)
                .ok_or_else(|| Error::InvalidParameter(format!("mode {j} is not on the grid")))?;
            field.coeffs[slot] += c;
        }
        Ok(field)
    }

    /// Coefficients of complex physical samples (no symmetry assumed).
    pub fn from_complex_values(grid: Arc<FourierGrid>, mut values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidField(format!(
                "expected {} samples, got {}",
                grid.n(),
                values.len()
            )));
        }
        grid.forward_in_place(&mut values);
        Self::from_coeffs(grid, values)
    }

    pub(crate) fn from_raw(grid: Arc<FourierGrid>, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.n());
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &Arc<FourierGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of signed mode `j` (zero off the grid).
    pub fn mode(&self, j: i64) -> Complex64 {
        self.grid.slot(j).map_or(ZERO, |s| self.coeffs[s])
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn check_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Largest violation of `c_{-j} = conj(c_j)`, relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let n = self.grid.n();
        let mut defect = self.coeffs[0].im.abs().max(self.coeffs[n / 2].im.abs());
        for idx in 1..n / 2 {
            defect = defect.max((self.coeffs[n - idx] - self.coeffs[idx].conj()).norm());
        }
        defect / scale
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_defect() <= HERMITIAN_TOL
    }

    /// Project onto the Hermitian subspace (the closest real field).
    pub fn symmetrize(&mut self) {
        let n = self.grid.n();
        self.coeffs[0].im = 0.0;
        self.coeffs[n / 2].im = 0.0;
        for idx in 1..n / 2 {
            let avg = 0.5 * (self.coeffs[idx] + self.coeffs[n - idx].conj());
            self.coeffs[idx] = avg;
            self.coeffs[n - idx] = avg.conj();
        }
    }

    /// Complex physical samples of the field.
    pub fn to_complex_values(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        self.grid.backward_in_place(&mut buf);
        buf
    }

    /// Real parts of the physical samples, without a symmetry check.
    pub(crate) fn real_values(&self) -> Vec<f64> {
        self.to_complex_values().into_iter().map(|z| z.re).collect()
    }

    /// Real samples on the twice-refined grid (exact spectral interpolation).
    pub(crate) fn padded_real_values(&self) -> Vec<f64> {
        let fine = self.grid.padded();
        let mut buf = vec![ZERO; fine.n()];
        for (idx, c) in self.coeffs.iter().enumerate() {
            let slot = fine.slot(self.grid.mode(idx)).expect("coarse mode fits on the fine grid");
            buf[slot] = *c;
        }
        fine.backward_in_place(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    pub fn map_modes(&self, mut f: impl FnMut(f64, Complex64) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| f(self.grid.wavenumber(idx), *c))
            .collect();
        Self::from_raw(self.grid.clone(), coeffs)
    }

    /// `d^order/dx^order`, exact for trigonometric polynomials.
    pub fn derivative(&self, order: u32) -> Self {
        if order == 0 {
            return self.clone();
        }
        self.map_modes(|k, c| c * Complex64::new(0.0, k).powu(order))
    }

    /// Keep only modes with `|j| <= limit`.
    pub fn truncated(&self, limit: i64) -> Self {
        let mut out = self.clone();
        for idx in 0..self.grid.n() {
            if self.grid.mode(idx).abs() > limit {
                out.coeffs[idx] = ZERO;
            }
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_raw(self.grid.clone(), self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// `integral of self * other` for real fields (Parseval, exact).
    pub fn inner(&self, other: &SpectralField) -> f64 {
        debug_assert!(self.grid.same_as(&other.grid));
        self.grid.length()
            * self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| (a * b.conj()).re)
                .sum::<f64>()
    }

    /// Spectral L2 norm `sqrt(L sum |c_j|^2)`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.length() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&SpectralField> for &SpectralField {
            type Output = SpectralField;
            fn $method(self, rhs: &SpectralField) -> SpectralField {
                assert!(self.grid.same_as(&rhs.grid), "spectral fields on different grids");
                let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a $op b).collect();
                SpectralField::from_raw(self.grid.clone(), coeffs)
            }
        }
        impl $trait<SpectralField> for SpectralField {
            type Output = SpectralField;
            fn $method(self, rhs: SpectralField) -> SpectralField {
                &self $op &rhs
            }
        }
        impl $trait<&SpectralField> for SpectralField {
            type Output = SpectralField;
            fn $method(self, rhs: &SpectralField) -> SpectralField {
                &self $op rhs
            }
        }
    };
}

binary_op!(Add, add, +);
binary_op!(Sub, sub, -);

impl AddAssign<&SpectralField> for SpectralField {
    fn add_assign(&mut self, rhs: &SpectralField) {
        assert!(self.grid.same_as(&rhs.grid), "spectral fields on different grids");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&SpectralField> for SpectralField {
    fn sub_assign(&mut self, rhs: &SpectralField) {
        assert!(self.grid.same_as(&rhs.grid), "spectral fields on different grids");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scale(rhs)
    }
}

impl Mul<Complex64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: Complex64) -> SpectralField {
        SpectralField::from_raw(self.grid.clone(), self.coeffs.iter().map(|c| c * rhs).collect())
    }
}

type SymbolFn = dyn Fn(f64) -> Complex64 + Send + Sync;

/// A Fourier multiplier, evaluated bin by bin.
#[derive(Clone)]
pub struct Symbol {
    name: String,
    eval: Arc<SymbolFn>,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol").field("name", &self.name).finish()
    }
}

impl Symbol {
    pub fn new(name: impl Into<String>, eval: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), eval: Arc::new(eval) }
    }

    pub fn real(name: impl Into<String>, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(name, move |k| Complex64::new(eval(k), 0.0))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, k: f64) -> Complex64 {
        (self.eval)(k)
    }

    /// `omega(k) = sign(k) sqrt(1 + k^2)`.
    pub fn omega() -> Self {
        Self::real("omega", dispersion::omega)
    }

    /// `rho(k) = sign(k) k^2 / sqrt(1 + k^2)`.
    pub fn rho() -> Self {
        Self::real("rho", dispersion::rho)
    }

    /// `i omega(k)`, the skew generator of the diagonal linear flow.
    pub fn i_omega() -> Self {
        Self::new("i*omega", |k| Complex64::new(0.0, dispersion::omega(k)))
    }

    pub fn i_rho() -> Self {
        Self::new("i*rho", |k| Complex64::new(0.0, dispersion::rho(k)))
    }

    /// Hilbert transform, symbol `-i sign(k)`.
    pub fn hilbert() -> Self {
        Self::new("hilbert", |k| Complex64::new(0.0, -dispersion::sign(k)))
    }

    /// `sqrt(1 - d_x^2)`.
    pub fn bessel() -> Self {
        Self::real("sqrt(1+k^2)", |k| (1.0 + k * k).sqrt())
    }

    pub fn derivative(order: u32) -> Self {
        Self::new(format!("d^{order}"), move |k| Complex64::new(0.0, k).powu(order))
    }

    /// Indicator of `|k - j k0| <= delta` for some `|j| <= max_band`.
    pub fn band_cutoff(k0: f64, delta: f64, max_band: u32) -> Self {
        Self::real("band_cutoff", move |k| if in_bands(k, k0, delta, max_band) { 1.0 } else { 0.0 })
    }
}

pub(crate) fn in_bands(k: f64, k0: f64, delta: f64, max_band: u32) -> bool {
    let nearest = (k / k0).round();
    nearest.abs() <= max_band as f64 && (k - nearest * k0).abs() <= delta
}

/// Coefficients of a real field.
pub fn transform(f: &RealField) -> Result<SpectralField> {
    let buf = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    SpectralField::from_complex_values(f.grid.clone(), buf)
}

/// Real field of Hermitian coefficients.
pub fn inverse_transform(field: &SpectralField) -> Result<RealField> {
    if let Some(pos) = field.coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::InvalidField(format!("non-finite coefficient at slot {pos}")));
    }
    let defect = field.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::Symmetry { defect });
    }
    RealField::new(field.grid.clone(), field.real_values())
}

pub fn apply_multiplier(field: &SpectralField, symbol: &Symbol) -> SpectralField {
    field.map_modes(|k, c| symbol.eval(k) * c)
}

/// Alias-free product by the 2/3 rule: modes with `|j| > n/3` are removed
/// from both factors and from the result.
pub fn dealiased_product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    f.check_grid(g)?;
    let grid = f.grid.clone();
    let limit = grid.dealias_limit();
    let mut a = f.truncated(limit).into_coeffs();
    grid.backward_in_place(&mut a);
    let mut b = g.truncated(limit).into_coeffs();
    grid.backward_in_place(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    grid.forward_in_place(&mut a);
    Ok(SpectralField::from_raw(grid, a).truncated(limit))
}

/// Discrete `H^s` norm, `sqrt(L sum_j (1 + k_j^2)^s |c_j|^2)`.
pub fn sobolev_norm(field: &SpectralField, s: f64) -> Result<f64> {
    check_order(s)?;
    let grid = &field.grid;
    let sum: f64 = field
        .coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let k = grid.wavenumber(idx);
            (1.0 + k * k).powf(s) * c.norm_sqr()
        })
        .sum();
    Ok((grid.length() * sum).sqrt())
}

/// Discrete `L^1(s)` norm of the coefficient density, `sum_j (1 + k_j^2)^{s/2} |c_j|`.
pub fn weighted_l1_norm(field: &SpectralField, s: f64) -> Result<f64> {
    check_order(s)?;
    let grid = &field.grid;
    Ok(field
        .coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let k = grid.wavenumber(idx);
            (1.0 + k * k).powf(0.5 * s) * c.norm()
        })
        .sum())
}

fn check_order(s: f64) -> Result<()> {
    if s >= 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Sobolev order must be non-negative, got {s}")))
    }
}

/// Exact integral of the pointwise product of up to four real band-limited
/// fields, by trapezoidal quadrature on the twice-refined grid.
pub fn integrate_product(fields: &[&SpectralField]) -> Result<f64> {
    let (first, rest) = fields
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("empty product".into()))?;
    if fields.len() > 4 {
        return Err(Error::InvalidParameter("at most four factors are integrated exactly".into()));
    }
    for f in rest {
        first.check_grid(f)?;
    }
    let mut acc = first.padded_real_values();
    for f in rest {
        for (a, v) in acc.iter_mut().zip(f.padded_real_values()) {
            *a *= v;
        }
    }
    let fine = first.grid.padded();
    Ok(fine.dx() * acc.iter().sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, length: f64) -> Arc<FourierGrid> {
        FourierGrid::new(n, length).unwrap()
    }

    #[test]
    fn cosine_has_two_half_modes() {
        let g = grid(16, 2.0 * PI);
        let f = RealField::from_fn(g, f64::cos).unwrap();
        let c = transform(&f).unwrap();
        for idx in 0..16 {
            let j = c.grid().mode(idx);
            let expect = if j.abs() == 1 { 0.5 } else { 0.0 };
            assert!((c.coeffs()[idx] - Complex64::new(expect, 0.0)).norm() < 1e-15, "mode {j}");
        }
    }

    #[test]
    fn dc_mode_is_constant() {
        let g = grid(32, 5.0);
        let c = SpectralField::from_modes(g, &[(0, Complex64::new(1.0, 0.0))]).unwrap();
        let f = inverse_transform(&c).unwrap();
        assert!(f.values().iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(FourierGrid::new(7, 1.0).is_err());
        assert!(FourierGrid::new(6, 1.0).is_err());
        assert!(FourierGrid::new(8, 0.0).is_err());
        let g = grid(8, 1.0);
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(RealField::new(g.clone(), v), Err(Error::InvalidField(_))));
        let asym = SpectralField::from_modes(g, &[(1, Complex64::new(1.0, 0.0))]).unwrap();
        assert!(matches!(inverse_transform(&asym), Err(Error::Symmetry { .. })));
    }

    #[test]
    fn hilbert_maps_cos_to_sin() {
        let g = grid(16, 2.0 * PI);
        let f = transform(&RealField::from_fn(g, f64::cos).unwrap()).unwrap();
        let h = inverse_transform(&apply_multiplier(&f, &Symbol::hilbert())).unwrap();
        for (x, v) in h.grid().points().iter().zip(h.values()) {
            assert!((v - x.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn omega_twice_is_one_plus_k_squared() {
        let g = grid(16, 2.0 * PI);
        let f = SpectralField::from_modes(g, &[(2, Complex64::new(1.0, 0.0))]).unwrap();
        let twice = apply_multiplier(&apply_multiplier(&f, &Symbol::omega()), &Symbol::omega());
        assert!((twice.mode(2) - Complex64::new(5.0, 0.0)).norm() < 1e-14);
        let r = apply_multiplier(&f, &Symbol::rho());
        assert!((r.mode(2).re - 1.788_854_381_999_831_7).abs() < 1e-15);
    }

    #[test]
    fn product_of_cosines() {
        let g = grid(32, 2.0 * PI);
        let f = transform(&RealField::from_fn(g, f64::cos).unwrap()).unwrap();
        let p = dealiased_product(&f, &f).unwrap();
        assert!((p.mode(0).re - 0.5).abs() < 1e-15);
        assert!((p.mode(2).re - 0.25).abs() < 1e-15);
        assert!((p.mode(-2).re - 0.25).abs() < 1e-15);
        let zero = SpectralField::zeros(f.grid().clone());
        assert!(dealiased_product(&zero, &f).unwrap().max_abs() == 0.0);
        let other = SpectralField::zeros(grid(32, 3.0));
        assert!(matches!(dealiased_product(&f, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn sine_norms() {
        let g = grid(32, 2.0 * PI);
        let f = transform(&RealField::from_fn(g, f64::sin).unwrap()).unwrap();
        assert!((sobolev_norm(&f, 0.0).unwrap() - PI.sqrt()).abs() < 1e-14);
        assert!((sobolev_norm(&f, 1.0).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-14);
        assert!(sobolev_norm(&f, -1.0).is_err());
        assert!(weighted_l1_norm(&f, -0.5).is_err());
    }

    #[test]
    fn single_pair_norm_conventions() {
        let length = 7.3;
        let g = grid(64, length);
        let a = Complex64::new(0.3, -0.4);
        let f = SpectralField::from_modes(g.clone(), &[(3, a), (-3, a.conj())]).unwrap();
        let k = 3.0 * g.dk();
        for s in [0.0, 1.0, 2.5, 6.0] {
            let h = sobolev_norm(&f, s).unwrap();
            let expect = a.norm() * (2.0 * length).sqrt() * (1.0 + k * k).powf(0.5 * s);
            assert!((h - expect).abs() < 1e-13 * expect);
            let l1 = weighted_l1_norm(&f, s).unwrap();
            let expect = 2.0 * a.norm() * (1.0 + k * k).powf(0.5 * s);
            assert!((l1 - expect).abs() < 1e-13 * expect);
        }
        assert_eq!(weighted_l1_norm(&SpectralField::zeros(g), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn band_cutoff_symbol() {
        let chi = Symbol::band_cutoff(1.0, 0.25, 2);
        assert_eq!(chi.eval(1.2).re, 1.0);
        assert_eq!(chi.eval(-2.25).re, 1.0);
        assert_eq!(chi.eval(0.5).re, 0.0);
        assert_eq!(chi.eval(3.0).re, 0.0);
        assert_eq!(chi.eval(0.0).re, 1.0);
    }

    #[test]
    fn quartic_quadrature_is_exact() {
        let g = grid(16, 2.0 * PI);
        let f = transform(&RealField::from_fn(g, |x| (3.0 * x).cos()).unwrap()).unwrap();
        // mean of cos^4 is 3/8
        let q = integrate_product(&[&f, &f, &f, &f]).unwrap();
        assert!((q - 0.75 * PI).abs() < 1e-13);
    }
}
