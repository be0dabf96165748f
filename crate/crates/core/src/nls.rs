//! Split-step solver for `A_T = i nu1 A_XX + i nu2 |A|^2 A` on the slow grid,
//! closed-form solutions, and evaluation of the envelope at the fast
//! collocation points `X = eps (x - cg t)`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{FourierGrid, SpectralField};

/// Relative tolerance for `L_X = eps L`.
pub const COMMENSURATE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NlsParams {
    pub nu1: f64,
    pub nu2: f64,
    pub k0: f64,
}

impl NlsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu1 > 0.0 && self.nu1.is_finite()) {
            return Err(Error::InvalidParameter(format!("nu1 must be positive, got {}", self.nu1)));
        }
        if !self.nu2.is_finite() {
            return Err(Error::InvalidParameter("nu2 must be finite".into()));
        }
        Ok(())
    }

    pub fn is_focusing(&self) -> bool {
        self.nu1 * self.nu2 > 0.0
    }
}

/// Complex amplitude `A(X, T)` on the slow grid. Not Hermitian.
#[derive(Clone, Debug)]
pub struct Envelope {
    pub a_hat: SpectralField,
    pub time: f64,
}

impl Envelope {
    pub fn from_profile(grid: Arc<FourierGrid>, time: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Ok(Self { a_hat: SpectralField::from_complex_values(grid, values)?, time })
    }

    pub fn zeros(grid: Arc<FourierGrid>, time: f64) -> Self {
        Self { a_hat: SpectralField::zeros(grid), time }
    }

    pub fn grid(&self) -> &Arc<FourierGrid> {
        self.a_hat.grid()
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.a_hat.to_complex_values()
    }

    /// `L_X sum |a_j|^2`.
    pub fn mass(&self) -> f64 {
        self.grid().length() * self.a_hat.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// `sum K_j |a_j|^2`.
    pub fn momentum(&self) -> f64 {
        let g = self.grid();
        self.a_hat.coeffs().iter().enumerate().map(|(i, c)| g.wavenumber(i) * c.norm_sqr()).sum()
    }

    /// `i nu1 A_XX + i nu2 |A|^2 A`, evaluated spectrally (the cubic term is
    /// formed pointwise on the slow grid).
    pub fn time_derivative(&self, p: &NlsParams) -> Result<SpectralField> {
        let grid = self.grid().clone();
        let vals = self.values();
        let cubic: Vec<Complex64> = vals.iter().map(|a| Complex64::new(0.0, p.nu2) * a.norm_sqr() * a).collect();
        let cubic = SpectralField::from_complex_values(grid, cubic)?;
        let lin = self.a_hat.map_modes(|k, c| Complex64::new(0.0, -p.nu1 * k * k) * c);
        Ok(&lin + &cubic)
    }
}

fn nonlinear_phase(values: &mut [Complex64], nu2: f64, h: f64) {
    for a in values.iter_mut() {
        *a *= Complex64::from_polar(1.0, nu2 * a.norm_sqr() * h);
    }
}

/// One Strang step: nonlinear half step, exact linear step, nonlinear half step.
pub fn nls_step(e: &Envelope, p: &NlsParams, dt: f64) -> Result<Envelope> {
    p.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("NLS step must be positive, got {dt}")));
    }
    let grid = e.grid().clone();
    let mut buf = e.a_hat.coeffs().to_vec();
    grid.backward_in_place(&mut buf);
    nonlinear_phase(&mut buf, p.nu2, 0.5 * dt);
    grid.forward_in_place(&mut buf);
    for (idx, c) in buf.iter_mut().enumerate() {
        let k = grid.wavenumber(idx);
        *c *= Complex64::from_polar(1.0, -p.nu1 * k * k * dt);
    }
    grid.backward_in_place(&mut buf);
    nonlinear_phase(&mut buf, p.nu2, 0.5 * dt);
    grid.forward_in_place(&mut buf);
    let time = e.time + dt;
    if buf.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::BlowUp { t: time, reason: "non-finite envelope coefficient".into() });
    }
    Ok(Envelope { a_hat: SpectralField::from_raw(grid, buf), time })
}

/// Fixed-step driver that lands exactly on requested times.
#[derive(Clone, Debug)]
pub struct NlsSolver {
    pub params: NlsParams,
    pub max_dt: f64,
}

impl NlsSolver {
    pub fn new(params: NlsParams, max_dt: f64) -> Result<Self> {
        params.validate()?;
        if !(max_dt > 0.0 && max_dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("NLS step must be positive, got {max_dt}")));
        }
        Ok(Self { params, max_dt })
    }

    /// Evolve to slow time `target >= e.time` with equal steps no longer than `max_dt`.
    pub fn advance_to(&self, e: &Envelope, target: f64) -> Result<Envelope> {
        let span = target - e.time;
        if span < 0.0 {
            return Err(Error::InvalidParameter(format!("cannot step backwards from T = {} to {target}", e.time)));
        }
        let steps = (span / self.max_dt - 1e-9).ceil().max(0.0) as usize;
        if steps == 0 {
            return Ok(Envelope { a_hat: e.a_hat.clone(), time: target });
        }
        let h = span / steps as f64;
        let mut cur = e.clone();
        for _ in 0..steps {
            cur = nls_step(&cur, &self.params, h)?;
        }
        cur.time = target;
        Ok(cur)
    }

    /// Envelopes at each of the (non-decreasing) `times`.
    pub fn checkpoints(&self, e: &Envelope, times: &[f64]) -> Result<Vec<Envelope>> {
        let mut out = Vec::with_capacity(times.len());
        let mut cur = e.clone();
        for &t in times {
            cur = self.advance_to(&cur, t)?;
            out.push(cur.clone());
        }
        Ok(out)
    }
}

/// `sech(X)`.
pub fn sech_profile(x: f64) -> Complex64 {
    Complex64::new(1.0 / x.cosh(), 0.0)
}

/// `exp(-X^2 / (2 sigma^2))`.
pub fn gaussian_profile(sigma: f64) -> impl Fn(f64) -> Complex64 {
    move |x| Complex64::new((-x * x / (2.0 * sigma * sigma)).exp(), 0.0)
}

/// Free Schrodinger evolution of [`gaussian_profile`] under `A_T = i nu1 A_XX`.
pub fn free_gaussian(sigma: f64, nu1: f64, x: f64, t: f64) -> Complex64 {
    let s2 = Complex64::new(sigma * sigma, 2.0 * nu1 * t);
    (Complex64::new(sigma * sigma, 0.0) / s2).sqrt() * (-(x * x) / (2.0 * s2)).exp()
}

/// Bright soliton `eta sqrt(2 nu1 / nu2) sech(eta X) exp(i nu1 eta^2 T)` of
/// the focusing equation. Substituting, `sech'' = sech - 2 sech^3` balances
/// the cubic term exactly when the amplitude squared is `2 nu1 eta^2 / nu2`.
#[derive(Clone, Copy, Debug)]
pub struct Soliton {
    pub params: NlsParams,
    pub eta: f64,
}

impl Soliton {
    pub fn new(params: NlsParams, eta: f64) -> Result<Self> {
        params.validate()?;
        if !params.is_focusing() {
            return Err(Error::UnsupportedRegime(format!(
                "bright solitons need nu1 nu2 > 0 (nu1 = {}, nu2 = {})",
                params.nu1, params.nu2
            )));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("soliton width parameter must be positive, got {eta}")));
        }
        Ok(Self { params, eta })
    }

    pub fn peak(&self) -> f64 {
        self.eta * (2.0 * self.params.nu1 / self.params.nu2).sqrt()
    }

    pub fn value(&self, x: f64, t: f64) -> Complex64 {
        Complex64::from_polar(self.peak() / (self.eta * x).cosh(), self.params.nu1 * self.eta * self.eta * t)
    }

    pub fn envelope(&self, grid: Arc<FourierGrid>, t: f64) -> Result<Envelope> {
        Envelope::from_profile(grid, t, |x| self.value(x, t))
    }
}

fn check_commensurate(slow: &FourierGrid, fast: &FourierGrid, eps: f64) -> Result<()> {
    let expect = eps * fast.length();
    if !((slow.length() - expect).abs() <= COMMENSURATE_TOL * expect) {
        return Err(Error::InvalidParameter(format!(
            "slow grid length {} is not eps * fast length = {expect}",
            slow.length()
        )));
    }
    if slow.n() > fast.n() {
        return Err(Error::InvalidParameter(format!(
            "slow grid ({} modes) does not fit into the fast grid ({} modes)",
            slow.n(),
            fast.n()
        )));
    }
    Ok(())
}

/// Fast-grid coefficients of `x -> A(eps (x - cg t))`. Slow mode `j` lands on
/// fast mode `j` (since `eps K_j = k_j`) with the exact shift phase
/// `exp(-i K_j eps cg t)`.
pub fn fast_coefficients(e: &Envelope, fast: &Arc<FourierGrid>, eps: f64, cg: f64, t: f64) -> Result<SpectralField> {
    let slow = e.grid();
    check_commensurate(slow, fast, eps)?;
    let shift = eps * cg * t;
    let mut out = SpectralField::zeros(fast.clone());
    let coeffs = out.coeffs_mut();
    let nyquist = slow.n() / 2;
    for (idx, a) in e.a_hat.coeffs().iter().enumerate() {
        if *a == Complex64::new(0.0, 0.0) {
            continue;
        }
        let j = slow.mode(idx);
        if idx == nyquist && fast.n() > slow.n() {
            // the slow Nyquist mode stands for both K and -K; split it evenly
            for jj in [j, -j] {
                let slot = fast.slot(jj).expect("slow modes fit on the fast grid");
                coeffs[slot] += 0.5 * a * Complex64::from_polar(1.0, -(jj as f64) * slow.dk() * shift);
            }
            continue;
        }
        let slot = fast.slot(j).expect("slow modes fit on the fast grid");
        coeffs[slot] += a * Complex64::from_polar(1.0, -slow.wavenumber(idx) * shift);
    }
    Ok(out)
}

/// `A(eps (x_n - cg t))` at every fast collocation point.
pub fn evaluate_on_fast_grid(e: &Envelope, fast: &Arc<FourierGrid>, eps: f64, cg: f64, t: f64) -> Result<Vec<Complex64>> {
    Ok(fast_coefficients(e, fast, eps, cg, t)?.to_complex_values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params() -> NlsParams {
        NlsParams { nu1: 0.176_776_695_296_636_9, nu2: -0.942_809_041_582_063, k0: 1.0 }
    }

    #[test]
    fn constant_envelope_rotates() {
        let g = FourierGrid::new(32, 10.0).unwrap();
        let a = Complex64::new(0.6, 0.2);
        let mut e = Envelope::from_profile(g, 0.0, |_| a).unwrap();
        let p = params();
        for _ in 0..100 {
            e = nls_step(&e, &p, 0.01).unwrap();
        }
        let expect = a * Complex64::from_polar(1.0, p.nu2 * a.norm_sqr() * 1.0);
        for v in e.values() {
            assert!((v - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn free_gaussian_spreading() {
        let g = FourierGrid::new(256, 60.0).unwrap();
        let p = NlsParams { nu2: 0.0, ..params() };
        let e = Envelope::from_profile(g.clone(), 0.0, gaussian_profile(1.5)).unwrap();
        let e = NlsSolver::new(p, 0.01).unwrap().advance_to(&e, 2.0).unwrap();
        for (x, v) in g.points().iter().zip(e.values()) {
            assert!((v - free_gaussian(1.5, p.nu1, *x, 2.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn mass_is_conserved() {
        let g = FourierGrid::new(128, 40.0).unwrap();
        let e0 = Envelope::from_profile(g, 0.0, |x| sech_profile(x) * Complex64::from_polar(1.0, 0.3 * x)).unwrap();
        let mut e = e0.clone();
        for _ in 0..200 {
            let next = nls_step(&e, &params(), 0.005).unwrap();
            assert!((next.momentum() - e.momentum()).abs() < 1e-10 * e0.momentum().abs());
            e = next;
        }
        assert!((e.mass() - e0.mass()).abs() < 1e-12 * e0.mass());
    }

    #[test]
    fn soliton_requires_focusing() {
        assert!(matches!(Soliton::new(params(), 1.0), Err(Error::UnsupportedRegime(_))));
        let p = NlsParams { nu2: 0.5, ..params() };
        let s = Soliton::new(p, 1.3).unwrap();
        assert!((s.value(0.0, 0.0).re - 1.3 * (2.0 * p.nu1 / 0.5).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn soliton_solves_the_equation() {
        let p = NlsParams { nu2: 0.7, ..params() };
        let s = Soliton::new(p, 1.0).unwrap();
        let g = FourierGrid::new(512, 80.0).unwrap();
        let t = 0.37;
        let e = s.envelope(g.clone(), t).unwrap();
        let rhs = e.time_derivative(&p).unwrap();
        let dt_exact = Envelope::from_profile(g, t, |x| Complex64::new(0.0, p.nu1) * s.value(x, t)).unwrap();
        assert!((&rhs - &dt_exact.a_hat).max_abs() < 1e-10);
    }

    #[test]
    fn fast_evaluation_shifts() {
        let eps = 0.1;
        let fast = FourierGrid::new(256, 200.0).unwrap();
        let slow = FourierGrid::new(64, 20.0).unwrap();
        let j = 3;
        let e = Envelope {
            a_hat: SpectralField::from_modes(slow.clone(), &[(j, Complex64::new(1.0, 0.0))]).unwrap(),
            time: 0.0,
        };
        let kj = slow.wavenumber(j as usize);
        // half a slow bin
        let shift = 0.5 * slow.dx();
        let cg = 0.7;
        let t = shift / (eps * cg);
        let v = evaluate_on_fast_grid(&e, &fast, eps, cg, t).unwrap();
        for (x, z) in fast.points().iter().zip(&v) {
            let expect = Complex64::from_polar(1.0, kj * (eps * x - shift));
            assert!((z - expect).norm() < 1e-12);
        }
        // a full slow period is the identity
        let period = slow.length() / (eps * cg);
        let v0 = evaluate_on_fast_grid(&e, &fast, eps, cg, 0.0).unwrap();
        let v1 = evaluate_on_fast_grid(&e, &fast, eps, cg, period).unwrap();
        for (a, b) in v0.iter().zip(&v1) {
            assert!((a - b).norm() < 1e-12);
        }
        let bad = FourierGrid::new(64, 2.0 * PI).unwrap();
        let e = Envelope::zeros(bad, 0.0);
        assert!(evaluate_on_fast_grid(&e, &fast, eps, cg, 0.0).is_err());
    }
}
