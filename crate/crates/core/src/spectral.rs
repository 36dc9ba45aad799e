//! Fourier-domain operators on sampled time signals.
//!
//! The general transform is `F[phi](w) = (2 pi)^(-1/2) int exp(i w t) phi(t) dt`.
//! The attenuation operator, the corrected operator and its adjoint are
//! evaluated as the displayed double integrals with their own `1/(2 pi)`
//! prefactors: an inner time integral at a (possibly complex) wavenumber and
//! an outer frequency integral over a symmetric grid. Both integrals use the
//! composite trapezoid rule. Frequencies `+w` and `-w` are paired so every
//! output is real by construction.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dispersion::{
    self, correction_coefficients, kappa, kappa_tilde_ratio, lambda_weight, omega_over_kappa,
    AttenuationModel, CorrectionOrder,
};
use crate::error::{PatError, Result};
use crate::stats;

/// Largest admissible natural-log growth of a complex exponential.
pub const EXP_GUARD: f64 = 700.0;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Uniform time grid `t0 + k dt`, `k = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n: usize) -> Self {
        TimeGrid { t0, dt, n }
    }

    /// `n` samples covering `[t0, t1]`.
    pub fn spanning(t0: f64, t1: f64, n: usize) -> Self {
        let dt = if n > 1 {
            (t1 - t0) / (n - 1) as f64
        } else {
            1.0
        };
        TimeGrid { t0, dt, n }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.n.saturating_sub(1))
    }

    pub fn zeros(&self) -> TimeSignal {
        TimeSignal::zeros(self.t0, self.dt, self.n)
    }
}

/// Uniformly sampled real signal, zero outside `[t0, t0 + (n-1) dt]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl TimeSignal {
    pub fn new(t0: f64, dt: f64, samples: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(PatError::Parameter(format!(
                "sample spacing {dt} must be > 0"
            )));
        }
        if !t0.is_finite() {
            return Err(PatError::Parameter(format!(
                "start time {t0} must be finite"
            )));
        }
        Ok(TimeSignal { t0, dt, samples })
    }

    pub fn zeros(t0: f64, dt: f64, n: usize) -> Self {
        TimeSignal {
            t0,
            dt,
            samples: vec![0.0; n],
        }
    }

    pub fn from_fn(t0: f64, dt: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let samples = (0..n).map(|k| f(t0 + k as f64 * dt)).collect();
        TimeSignal { t0, dt, samples }
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid::new(self.t0, self.dt, self.len())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    /// Trapezoid weight of sample `k`.
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.len() {
            0.5 * self.dt
        } else {
            self.dt
        }
    }

    /// `(int phi^2 dt)^(1/2)` by the trapezoid rule.
    pub fn l2_norm(&self) -> f64 {
        self.samples
            .iter()
            .enumerate()
            .map(|(k, v)| self.weight(k) * v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Bilinear pairing `int phi psi dt` on a shared grid.
    pub fn dot(&self, other: &TimeSignal) -> f64 {
        assert_eq!(self.len(), other.len());
        self.samples
            .iter()
            .zip(&other.samples)
            .enumerate()
            .map(|(k, (a, b))| self.weight(k) * a * b)
            .sum()
    }

    /// `t^p phi(t)`.
    pub fn times_power(&self, p: i32) -> TimeSignal {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(k, v)| self.time(k).powi(p) * v)
            .collect();
        TimeSignal { samples, ..*self }
    }

    pub fn scaled(&self, k: f64) -> TimeSignal {
        TimeSignal {
            samples: self.samples.iter().map(|v| k * v).collect(),
            ..*self
        }
    }

    pub fn plus(&self, other: &TimeSignal) -> TimeSignal {
        assert_eq!(self.len(), other.len());
        TimeSignal {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
            ..*self
        }
    }

    pub fn minus(&self, other: &TimeSignal) -> TimeSignal {
        self.plus(&other.scaled(-1.0))
    }

    /// Signal shifted later by `k` samples, keeping its grid (samples
    /// shifted past the end are dropped, vacated ones are zero).
    pub fn delayed(&self, k: usize) -> TimeSignal {
        let n = self.len();
        let mut samples = vec![0.0; n];
        samples[k.min(n)..].copy_from_slice(&self.samples[..n - k.min(n)]);
        TimeSignal { samples, ..*self }
    }
}

/// Symmetric uniform frequency grid `w_k = k rho / K`, `k = -K..=K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub rho: f64,
    pub half: usize,
}

impl FrequencyGrid {
    pub const DEFAULT_HALF: usize = 512;

    pub fn new(rho: f64, half: usize) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(PatError::Parameter(format!(
                "cutoff rho = {rho} must be > 0"
            )));
        }
        if half == 0 {
            return Err(PatError::Parameter(
                "frequency grid needs at least one step".into(),
            ));
        }
        Ok(FrequencyGrid { rho, half })
    }

    /// Grid with spacing `rho / 512`.
    pub fn with_cutoff(rho: f64) -> Result<Self> {
        Self::new(rho, Self::DEFAULT_HALF)
    }

    pub fn step(&self) -> f64 {
        self.rho / self.half as f64
    }

    pub fn omega(&self, k: i64) -> f64 {
        k as f64 * self.step()
    }

    /// All `2K + 1` frequencies in increasing order.
    pub fn omegas(&self) -> Vec<f64> {
        let k = self.half as i64;
        (-k..=k).map(|j| self.omega(j)).collect()
    }

    /// Non-negative frequencies with the weights that make
    /// `2 Re sum_k w_k F(omega_k)` the trapezoid rule over `[-rho, rho]`
    /// for integrands with `F(-omega) = conj F(omega)`.
    pub fn paired(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = self.step();
        (0..=self.half).map(move |k| {
            let w = if k == 0 || k == self.half { 0.5 * h } else { h };
            (k as f64 * h, w)
        })
    }
}

/// Complex samples of a transform on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: FrequencyGrid,
    pub values: Vec<Complex64>,
}

impl Spectrum {
    pub fn of(signal: &TimeSignal, grid: FrequencyGrid) -> Result<Self> {
        let values = grid
            .omegas()
            .into_iter()
            .map(|w| fourier(signal, Complex64::new(w, 0.0)))
            .collect::<Result<_>>()?;
        Ok(Spectrum { grid, values })
    }

    /// Largest `|F(-w) - conj F(w)|` relative to the largest `|F|`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let n = self.values.len();
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        let worst = (0..n)
            .map(|k| (self.values[n - 1 - k] - self.values[k].conj()).norm())
            .fold(0.0f64, f64::max);
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }
}

fn check_growth(what: &'static str, z: Complex64, t_first: f64, t_last: f64) -> Result<()> {
    // |exp(i z t)| = exp(-Im z t)
    let growth = (-z.im * t_first).max(-z.im * t_last);
    if growth > EXP_GUARD || !z.re.is_finite() || !z.im.is_finite() {
        return Err(PatError::Range {
            what,
            im: z.im,
            length: t_first.abs().max(t_last.abs()),
            guard: EXP_GUARD,
        });
    }
    Ok(())
}

/// `exp(i z (t0 + k dt))` for `k = 0..n`, by rotation with periodic reseeding.
struct Phasor {
    t0: f64,
    dt: f64,
    z: Complex64,
    step: Complex64,
    current: Complex64,
    k: usize,
}

const RESEED: usize = 128;

impl Phasor {
    fn new(z: Complex64, t0: f64, dt: f64) -> Self {
        Phasor {
            t0,
            dt,
            z,
            step: (I * z * dt).exp(),
            current: (I * z * t0).exp(),
            k: 0,
        }
    }
}

impl Iterator for Phasor {
    type Item = Complex64;

    fn next(&mut self) -> Option<Complex64> {
        let out = self.current;
        self.k += 1;
        self.current = if self.k.is_multiple_of(RESEED) {
            (I * self.z * (self.t0 + self.k as f64 * self.dt)).exp()
        } else {
            self.current * self.step
        };
        Some(out)
    }
}

/// `sum_q w_q exp(i z s_q) phi(s_q)` (no normalization).
fn weighted_transform(signal: &TimeSignal, z: Complex64) -> Complex64 {
    let n = signal.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, (v, e)) in signal
        .samples
        .iter()
        .zip(Phasor::new(z, signal.t0, signal.dt))
        .enumerate()
    {
        if *v != 0.0 {
            let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
            acc += e * (w * v);
        }
    }
    acc * signal.dt
}

/// `F[phi](omega)` for real or complex `omega`.
pub fn fourier(signal: &TimeSignal, omega: Complex64) -> Result<Complex64> {
    if signal.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    check_growth("omega", omega, signal.t0, signal.end_time())?;
    Ok(weighted_transform(signal, omega) / (2.0 * PI).sqrt())
}

/// One frequency term of a double-integral operator:
/// `weight * mult * [sum_s exp(i z_in s) phi(s)] * exp(i z_out t)`.
#[derive(Debug, Clone, Copy)]
struct Mode {
    weight: f64,
    mult: Complex64,
    z_in: Complex64,
    z_out: Complex64,
}

/// Evaluates `(1/2pi) int_{-rho}^{rho} mult e^{i z_out t} int e^{i z_in s} phi(s) ds dw`
/// on the signal's own grid, from the non-negative half of the frequency grid.
fn apply_modes(signal: &TimeSignal, modes: &[Mode]) -> Result<TimeSignal> {
    apply_modes_onto(signal, modes, signal.grid())
}

fn apply_modes_onto(signal: &TimeSignal, modes: &[Mode], out: TimeGrid) -> Result<TimeSignal> {
    if signal.is_empty() {
        return Ok(out.zeros());
    }
    let coefs = modes
        .iter()
        .map(|m| {
            check_growth("inner wavenumber", m.z_in, signal.t0, signal.end_time())?;
            let coef = m.mult * weighted_transform(signal, m.z_in) * (m.weight / PI);
            Ok((coef, m.z_out))
        })
        .collect::<Result<Vec<_>>>()?;
    synthesize(&coefs, out)
}

/// `sum_k Re[c_k exp(i z_k t)]` on `out`.
fn synthesize(coefs: &[(Complex64, Complex64)], out: TimeGrid) -> Result<TimeSignal> {
    let mut samples = vec![0.0; out.n];
    if out.n == 0 {
        return Ok(TimeSignal {
            t0: out.t0,
            dt: out.dt,
            samples,
        });
    }
    for &(coef, z) in coefs {
        if coef == Complex64::new(0.0, 0.0) {
            continue;
        }
        check_growth("outer wavenumber", z, out.t0, out.end_time())?;
        for (o, e) in samples.iter_mut().zip(Phasor::new(z, out.t0, out.dt)) {
            *o += (coef * e).re;
        }
    }
    Ok(TimeSignal {
        t0: out.t0,
        dt: out.dt,
        samples,
    })
}

/// Attenuated trace `L_a[p]` on `out` for a signal known only through its
/// (unnormalized) transform `P(z) = int p(s) e^{i z s} ds` at complex `z`.
///
/// Also returns the trace value at the last grid time seen through a
/// Gaussian spectral taper of width `rho / 6`, which suppresses the ringing
/// of the sharp cutoff and leaves the physical tail.
pub fn attenuate_transform(
    model: &AttenuationModel,
    grid: &FrequencyGrid,
    transform: impl Fn(Complex64) -> Result<Complex64>,
    out: TimeGrid,
) -> Result<(TimeSignal, f64)> {
    let width = grid.rho / 6.0;
    let t_end = out.end_time();
    let mut coefs = Vec::with_capacity(grid.half + 1);
    let mut tail = 0.0;
    for (w, h) in grid.paired() {
        let k = kappa(model, w)?;
        let coef = omega_over_kappa(model, w)? * transform(k)? * (h / PI);
        let z = Complex64::new(-w, 0.0);
        tail += (-0.5 * (w / width).powi(2)).exp() * (coef * (I * z * t_end).exp()).re;
        coefs.push((coef, z));
    }
    Ok((synthesize(&coefs, out)?, tail))
}
/// Band-limited evaluation `S_rho[phi](t)` at a single time.
pub fn s_rho(signal: &TimeSignal, rho: f64, t: f64) -> Result<f64> {
    let grid = FrequencyGrid::with_cutoff(rho)?;
    let mut acc = 0.0;
    for (w, h) in grid.paired() {
        let f = weighted_transform(signal, Complex64::new(w, 0.0));
        acc += h * (f * Complex64::new(0.0, -w * t).exp()).re;
    }
    Ok(acc / PI)
}

/// `S_rho[phi]` on the signal's grid, `rho` taken from `grid`.
pub fn band_limit(signal: &TimeSignal, grid: &FrequencyGrid) -> Result<TimeSignal> {
    fourier_multiplier(signal, grid, |_| Complex64::new(1.0, 0.0))
}

/// `F^-1[m(w) F[phi](w)]` on the signal's grid, band-limited to the grid.
/// `m` must satisfy `m(-w) = conj m(w)`.
pub fn fourier_multiplier(
    signal: &TimeSignal,
    grid: &FrequencyGrid,
    m: impl Fn(f64) -> Complex64,
) -> Result<TimeSignal> {
    let modes: Vec<Mode> = grid
        .paired()
        .map(|(w, h)| Mode {
            weight: h,
            mult: m(w),
            z_in: Complex64::new(w, 0.0),
            z_out: Complex64::new(-w, 0.0),
        })
        .collect();
    apply_modes(signal, &modes)
}

fn attenuation_modes(model: &AttenuationModel, grid: &FrequencyGrid) -> Result<Vec<Mode>> {
    grid.paired()
        .map(|(w, h)| {
            Ok(Mode {
                weight: h,
                mult: omega_over_kappa(model, w)?,
                z_in: kappa(model, w)?,
                z_out: Complex64::new(-w, 0.0),
            })
        })
        .collect()
}

/// `(omega lambda / kappa~, kappa~)` at one frequency.
pub(crate) fn corrected_symbol(
    model: &AttenuationModel,
    omega: f64,
    order: CorrectionOrder,
) -> Result<(Complex64, Complex64)> {
    let ratio = kappa_tilde_ratio(model, omega, order)?;
    let lam = lambda_weight(model, omega, order)?;
    Ok((lam / ratio, omega * ratio))
}

/// Attenuation operator
/// `L_a[phi](t) = (1/2pi) int (w/kappa) e^{-iwt} int e^{i kappa s} phi(s) ds dw`.
pub fn apply_attenuation(
    model: &AttenuationModel,
    signal: &TimeSignal,
    grid: &FrequencyGrid,
) -> Result<TimeSignal> {
    apply_modes(signal, &attenuation_modes(model, grid)?)
}

/// Regularized corrected operator
/// `L~_{a,rho}[phi](t) = (1/2pi) int phi(s) int (w lambda/kappa~) e^{i kappa~ s} e^{-iwt} dw ds`.
pub fn apply_correction(
    model: &AttenuationModel,
    signal: &TimeSignal,
    grid: &FrequencyGrid,
    order: CorrectionOrder,
) -> Result<TimeSignal> {
    apply_correction_onto(model, signal, grid, order, signal.grid())
}

/// [`apply_correction`] evaluated on an arbitrary output grid.
pub fn apply_correction_onto(
    model: &AttenuationModel,
    signal: &TimeSignal,
    grid: &FrequencyGrid,
    order: CorrectionOrder,
    out: TimeGrid,
) -> Result<TimeSignal> {
    let modes = grid
        .paired()
        .map(|(w, h)| {
            let (mult, kt) = corrected_symbol(model, w, order)?;
            Ok(Mode {
                weight: h,
                mult,
                z_in: kt,
                z_out: Complex64::new(-w, 0.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    apply_modes_onto(signal, &modes, out)
}

/// Adjoint of the corrected operator
/// `L~*_{a,rho}[phi](t) = (1/2pi) int (w lambda/kappa~) e^{i kappa~ t} int e^{-iws} phi(s) ds dw`.
pub fn apply_correction_adjoint(
    model: &AttenuationModel,
    signal: &TimeSignal,
    grid: &FrequencyGrid,
    order: CorrectionOrder,
) -> Result<TimeSignal> {
    let modes = grid
        .paired()
        .map(|(w, h)| {
            let (mult, kt) = corrected_symbol(model, w, order)?;
            Ok(Mode {
                weight: h,
                mult,
                z_in: Complex64::new(-w, 0.0),
                z_out: kt,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    apply_modes(signal, &modes)
}

/// `||L~*_{a,rho} L_a[phi] - S_rho[phi]|| / ||phi||`.
pub fn composition_residual(
    model: &AttenuationModel,
    signal: &TimeSignal,
    grid: &FrequencyGrid,
    order: CorrectionOrder,
) -> Result<f64> {
    let attenuated = apply_attenuation(model, signal, grid)?;
    let restored = apply_correction_adjoint(model, &attenuated, grid, order)?;
    let reference = band_limit(signal, grid)?;
    Ok(restored.minus(&reference).l2_norm() / signal.l2_norm())
}

/// Frequency functions entering the first- and second-order operators,
/// tabulated on the non-negative half of a grid.
struct Coefficients {
    lambda1: Vec<Complex64>,
    lambda2: Vec<Complex64>,
    /// `gamma_1(-w)`.
    gamma1_neg: Vec<Complex64>,
    /// `gamma_2(-w)`.
    gamma2_neg: Vec<Complex64>,
    step: f64,
}

impl Coefficients {
    fn tabulate(model: &AttenuationModel, grid: &FrequencyGrid) -> Result<Self> {
        let mut c = Coefficients {
            lambda1: Vec::new(),
            lambda2: Vec::new(),
            gamma1_neg: Vec::new(),
            gamma2_neg: Vec::new(),
            step: grid.step(),
        };
        for (w, _) in grid.paired() {
            let (j1, j2) = dispersion::lambda_jets(model, w);
            let neg = correction_coefficients(model, -w)?;
            c.lambda1.push(j1.c[0]);
            c.lambda2.push(j2.c[0]);
            c.gamma1_neg.push(neg.gamma1);
            c.gamma2_neg.push(neg.gamma2);
        }
        Ok(c)
    }

    fn at(&self, table: &[Complex64], w: f64) -> Complex64 {
        table[(w / self.step).round() as usize]
    }
}

/// First-order expansion operators `(f_1[phi], g_1[phi])`:
///
/// ```text
/// f_1[phi] = F^-1[-i w lambda_1 F[s phi] + lambda_1 F[phi]]
/// g_1[phi] = F^-1[gamma_1(-w) F[phi]] + t F^-1[i w lambda_1 F[phi]]
/// ```
pub fn first_order_operators(
    model: &AttenuationModel,
    signal: &TimeSignal,
    grid: &FrequencyGrid,
) -> Result<(TimeSignal, TimeSignal)> {
    let c = Coefficients::tabulate(model, grid)?;
    Ok((f1(&c, signal, grid)?, g1(&c, signal, grid)?))
}

fn f1(c: &Coefficients, phi: &TimeSignal, grid: &FrequencyGrid) -> Result<TimeSignal> {
    let a = fourier_multiplier(&phi.times_power(1), grid, |w| -I * w * c.at(&c.lambda1, w))?;
    let b = fourier_multiplier(phi, grid, |w| c.at(&c.lambda1, w))?;
    Ok(a.plus(&b))
}

fn g1(c: &Coefficients, phi: &TimeSignal, grid: &FrequencyGrid) -> Result<TimeSignal> {
    let a = fourier_multiplier(phi, grid, |w| c.at(&c.gamma1_neg, w))?;
    let b = fourier_multiplier(phi, grid, |w| I * w * c.at(&c.lambda1, w))?;
    Ok(a.plus(&b.times_power(1)))
}

/// Second-order expansion operators `(f_2[phi], g_2[phi], g_1[f_1[phi]])`
/// with `mu_2 = lambda_1^2 - lambda_2`:
///
/// ```text
/// f_2[phi] = F^-1[mu_2 F[phi] - i w mu_2 F[s phi] + (i w lambda_1)^2 / 2 F[s^2 phi]]
/// g_2[phi] = F^-1[gamma_2(-w) F[phi]] + t F^-1[i w (gamma_1(-w) lambda_1 - lambda_2) F[phi]]
///            + t^2 F^-1[(i w lambda_1)^2 / 2 F[phi]]
/// ```
pub fn second_order_operators(
    model: &AttenuationModel,
    signal: &TimeSignal,
    grid: &FrequencyGrid,
) -> Result<(TimeSignal, TimeSignal, TimeSignal)> {
    let c = Coefficients::tabulate(model, grid)?;
    let mu2 = |w: f64| {
        let l1 = c.at(&c.lambda1, w);
        l1 * l1 - c.at(&c.lambda2, w)
    };
    let half_sq = |w: f64| {
        let x = I * w * c.at(&c.lambda1, w);
        0.5 * x * x
    };

    let f2 = fourier_multiplier(signal, grid, mu2)?
        .plus(&fourier_multiplier(&signal.times_power(1), grid, |w| {
            -I * w * mu2(w)
        })?)
        .plus(&fourier_multiplier(&signal.times_power(2), grid, half_sq)?);

    let g2 = fourier_multiplier(signal, grid, |w| c.at(&c.gamma2_neg, w))?
        .plus(
            &fourier_multiplier(signal, grid, |w| {
                I * w * (c.at(&c.gamma1_neg, w) * c.at(&c.lambda1, w) - c.at(&c.lambda2, w))
            })?
            .times_power(1),
        )
        .plus(&fourier_multiplier(signal, grid, half_sq)?.times_power(2));

    let g1f1 = g1(&c, &f1(&c, signal, grid)?, grid)?;
    Ok((f2, g2, g1f1))
}

/// Relative L2 distance between two signals on the same grid.
pub fn relative_difference(a: &TimeSignal, b: &TimeSignal) -> f64 {
    stats::relative_l2(&a.samples, &b.samples)
}
