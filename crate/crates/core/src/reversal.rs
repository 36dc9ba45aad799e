//! Regularized time-reversal imaging.
//!
//! The back-propagated field is
//!
//! ```text
//! v(x, T; s) = -(1/2pi) int_{-rho}^{rho} int_{dOmega} i w G~_w(x, y) g(y, T - s) dsigma(y) e^{-i w (T - s)} dw
//! ```
//!
//! with the corrected fundamental solution `G~_w = lambda e^{i kappa~ |x-y|} / (4 pi |x-y|)`.
//! The image integrates `v` over `s`. Since the data cover `t >= 0` only,
//! the functional recovers half of the density; [`FULL_TIME_FACTOR`]
//! restores the full amplitude.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dispersion::{
    kappa_tilde_ratio, lambda_weight, rho_threshold, AttenuationModel, CorrectionOrder,
    RhoThreshold,
};
use crate::error::{PatError, Result};
use crate::forward::{distance, norm, DataSet, Phantom, Vec3};
use crate::spectral::{FrequencyGrid, TimeGrid, TimeSignal, EXP_GUARD};
use crate::stats;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Accounts for the unobserved half `t < 0` of the time-symmetric
/// initial-value solution.
pub const FULL_TIME_FACTOR: f64 = 2.0;

/// Outgoing Helmholtz fundamental solution `e^{i w r} / (4 pi r)`.
pub fn green_free(x: Vec3, y: Vec3, omega: f64) -> Result<Complex64> {
    let r = distance(x, y);
    if r == 0.0 {
        return Err(PatError::Singularity(format!(
            "fundamental solution at x = y = {x:?}"
        )));
    }
    Ok((I * omega * r).exp() / (4.0 * PI * r))
}

/// `(lambda, kappa~)` at one frequency.
pub fn corrected_wavenumber(
    model: &AttenuationModel,
    omega: f64,
    order: CorrectionOrder,
) -> Result<(Complex64, Complex64)> {
    Ok((
        lambda_weight(model, omega, order)?,
        omega * kappa_tilde_ratio(model, omega, order)?,
    ))
}

fn corrected_kernel(lambda: Complex64, kt: Complex64, r: f64) -> Result<Complex64> {
    if -kt.im * r > EXP_GUARD {
        return Err(PatError::Range {
            what: "kappa~ (lower the cutoff rho)",
            im: kt.im,
            length: r,
            guard: EXP_GUARD,
        });
    }
    Ok(lambda * (I * kt * r).exp() / (4.0 * PI * r))
}

/// Corrected fundamental solution `lambda e^{i kappa~ r} / (4 pi r)`.
pub fn green_corrected(
    model: &AttenuationModel,
    x: Vec3,
    y: Vec3,
    omega: f64,
    order: CorrectionOrder,
) -> Result<Complex64> {
    if order == CorrectionOrder::Zero {
        return green_free(x, y, omega);
    }
    let r = distance(x, y);
    if r == 0.0 {
        return Err(PatError::Singularity(format!(
            "fundamental solution at x = y = {x:?}"
        )));
    }
    let (lambda, kt) = corrected_wavenumber(model, omega, order)?;
    corrected_kernel(lambda, kt, r)
}

/// `d/dt` of the regularized fundamental solution,
/// `(1/2pi) int_{-rho}^{rho} (-i w) G~_w(x, y) e^{-i w (t - s)} dw`, on `times` with `s = 0`.
pub fn green_time_derivative(
    model: &AttenuationModel,
    x: Vec3,
    y: Vec3,
    grid: &FrequencyGrid,
    order: CorrectionOrder,
    times: TimeGrid,
) -> Result<TimeSignal> {
    let mut out = times.zeros();
    for (w, h) in grid.paired() {
        let c = -I * w * green_corrected(model, x, y, w, order)? * (h / PI);
        for (k, o) in out.samples.iter_mut().enumerate() {
            *o += (c * (-I * w * times.time(k)).exp()).re;
        }
    }
    Ok(out)
}

/// Points on the segment `center +- half_length * direction`, endpoints included.
pub fn line_profile(center: Vec3, direction: Vec3, half_length: f64, n: usize) -> Vec<Vec3> {
    let len = norm(direction);
    let u = direction.map(|v| v / len);
    (0..n)
        .map(|k| {
            let s = if n > 1 {
                -half_length + 2.0 * half_length * k as f64 / (n - 1) as f64
            } else {
                0.0
            };
            [
                center[0] + s * u[0],
                center[1] + s * u[1],
                center[2] + s * u[2],
            ]
        })
        .collect()
}

/// `n^3` points on a cube of side `2 half_length` about `center`.
pub fn volume_grid(center: Vec3, half_length: f64, n: usize) -> Vec<Vec3> {
    let axis = line_profile([0.0; 3], [1.0, 0.0, 0.0], half_length, n);
    let mut out = Vec::with_capacity(n * n * n);
    for a in &axis {
        for b in &axis {
            for c in &axis {
                out.push([center[0] + a[0], center[1] + b[0], center[2] + c[0]]);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionConfig {
    pub rho: f64,
    /// Frequency steps on `[0, rho]`; `None` picks a step free of aliasing.
    pub half: Option<usize>,
    pub order: CorrectionOrder,
    pub points: Vec<Vec3>,
    /// Allow `rho` above the stability threshold (logged).
    pub override_threshold: bool,
}

impl ReconstructionConfig {
    pub fn new(rho: f64, order: CorrectionOrder, points: Vec<Vec3>) -> Self {
        ReconstructionConfig {
            rho,
            half: None,
            order,
            points,
            override_threshold: false,
        }
    }

    /// Frequency grid for a dataset: the step keeps `2 pi / dw` above the
    /// range `T + diam` of travel-time differences, with a factor two margin.
    pub fn frequency_grid(&self, dataset: &DataSet) -> Result<FrequencyGrid> {
        let span = dataset.final_time() + 2.0 * dataset.sensors.radius;
        let half = self.half.unwrap_or_else(|| {
            (FrequencyGrid::DEFAULT_HALF).max((self.rho * span / PI).ceil() as usize)
        });
        FrequencyGrid::new(self.rho, half)
    }

    fn validate(&self, dataset: &DataSet) -> Result<()> {
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(PatError::Parameter(format!(
                "cutoff rho = {} must be > 0",
                self.rho
            )));
        }
        let r = dataset.sensors.radius;
        if let Some(p) = self.points.iter().find(|p| norm(**p) >= r) {
            return Err(PatError::Parameter(format!(
                "evaluation point {p:?} is not inside the sensor sphere of radius {r}"
            )));
        }
        if self.rho > dataset.rho {
            log::warn!(
                "cutoff {} exceeds the data cutoff {}; the upper band holds no data",
                self.rho,
                dataset.rho
            );
        }
        if self.order == CorrectionOrder::Zero {
            return Ok(());
        }
        match rho_threshold(&dataset.model, 2.0 * r) {
            Ok(RhoThreshold::Finite(t)) if self.rho > t => {
                if self.override_threshold {
                    log::warn!("cutoff {} is above the stability threshold {t}", self.rho);
                } else {
                    return Err(PatError::Parameter(format!(
                        "cutoff {} is above the stability threshold {t}; override to proceed",
                        self.rho
                    )));
                }
            }
            Err(e) => log::debug!("no stability threshold: {e}"),
            _ => {}
        }
        Ok(())
    }
}

/// Image values at the configured points.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagingResult {
    pub points: Vec<Vec3>,
    pub values: Vec<f64>,
    pub rho: f64,
    pub order: CorrectionOrder,
    pub model: AttenuationModel,
}

impl ImagingResult {
    /// Relative L2 error against the density at the evaluation points.
    pub fn relative_error(&self, phantom: &Phantom) -> f64 {
        let reference: Vec<f64> = self.points.iter().map(|p| phantom.value(*p)).collect();
        stats::relative_l2(&self.values, &reference)
    }
}

struct Prepared {
    grid: FrequencyGrid,
    /// `(w, pair weight, lambda, kappa~)`.
    modes: Vec<(f64, f64, Complex64, Complex64)>,
}

fn prepare(dataset: &DataSet, config: &ReconstructionConfig) -> Result<Prepared> {
    config.validate(dataset)?;
    let grid = config.frequency_grid(dataset)?;
    let modes = grid
        .paired()
        .map(|(w, h)| {
            let (lambda, kt) = corrected_wavenumber(&dataset.model, w, config.order)?;
            Ok((w, h, lambda, kt))
        })
        .collect::<Result<_>>()?;
    Ok(Prepared { grid, modes })
}

fn kernel(p: &Prepared, order: CorrectionOrder, x: Vec3, y: Vec3, k: usize) -> Result<Complex64> {
    let (w, _, lambda, kt) = p.modes[k];
    if order == CorrectionOrder::Zero {
        return green_free(x, y, w);
    }
    let r = distance(x, y);
    if r == 0.0 {
        return Err(PatError::Singularity(format!(
            "evaluation point on sensor {y:?}"
        )));
    }
    corrected_kernel(lambda, kt, r)
}

/// Literal `v(x, T; s)` for `s` on the data grid.
pub fn back_propagate(
    dataset: &DataSet,
    x: Vec3,
    s: f64,
    config: &ReconstructionConfig,
) -> Result<f64> {
    let p = prepare(dataset, config)?;
    let j = grid_index(dataset, s)?;
    back_propagate_prepared(dataset, &p, config.order, x, j)
}

fn grid_index(dataset: &DataSet, s: f64) -> Result<usize> {
    let n = dataset.samples_per_trace();
    let j = (s / dataset.dt).round();
    if !(j >= 0.0
        && (j as usize) < n
        && (s - j * dataset.dt).abs() <= 1e-9 * dataset.dt.max(s.abs()))
    {
        return Err(PatError::Parameter(format!(
            "s = {s} is not a sample of the data grid"
        )));
    }
    Ok(j as usize)
}

fn back_propagate_prepared(
    dataset: &DataSet,
    p: &Prepared,
    order: CorrectionOrder,
    x: Vec3,
    j: usize,
) -> Result<f64> {
    let n = dataset.samples_per_trace();
    let t_big = dataset.final_time();
    let s = j as f64 * dataset.dt;
    let mut acc = 0.0;
    for (k, &(w, h, _, _)) in p.modes.iter().enumerate() {
        let mut surface = Complex64::new(0.0, 0.0);
        for (m, y) in dataset.sensors.points.iter().enumerate() {
            let g = dataset.traces[m][n - 1 - j];
            surface += kernel(p, order, x, *y, k)? * (dataset.sensors.weights[m] * g);
        }
        let term = I * w * surface * (-I * w * (t_big - s)).exp();
        acc += h * term.re;
    }
    let v = -acc / PI;
    if !v.is_finite() {
        return Err(PatError::Numeric {
            x,
            omega: p.grid.rho,
        });
    }
    Ok(v)
}

/// `FULL_TIME_FACTOR * int_0^T v(x, T; s) ds` evaluated as the literal triple
/// sum over `s`, sensors and frequencies.
pub fn literal_functional(
    dataset: &DataSet,
    x: Vec3,
    config: &ReconstructionConfig,
) -> Result<f64> {
    let p = prepare(dataset, config)?;
    let n = dataset.samples_per_trace();
    let weights = TimeSignal::zeros(0.0, dataset.dt, n);
    let mut acc = 0.0;
    for j in 0..n {
        acc += weights.weight(j) * back_propagate_prepared(dataset, &p, config.order, x, j)?;
    }
    Ok(FULL_TIME_FACTOR * acc)
}

/// Imaging functional at every configured point.
///
/// The `s` integral is taken first: `H(y, w) = int_0^T g(y, t) e^{-i w t} dt`
/// per sensor, then `I(x) = -(1/2pi) int int i w G~_w(x, y) H(y, w) dsigma dw`.
pub fn reconstruct(dataset: &DataSet, config: &ReconstructionConfig) -> Result<ImagingResult> {
    let p = prepare(dataset, config)?;
    let n = dataset.samples_per_trace();
    let spectra: Vec<Vec<Complex64>> = (0..dataset.sensors.len())
        .into_par_iter()
        .map(|m| {
            let trace = TimeSignal {
                t0: 0.0,
                dt: dataset.dt,
                samples: dataset.traces[m].clone(),
            };
            p.modes
                .iter()
                .map(|&(w, ..)| trace_spectrum(&trace, w))
                .collect()
        })
        .collect();
    log::debug!(
        "sensor spectra: {} x {} (n = {n})",
        spectra.len(),
        p.modes.len()
    );

    let values = config
        .points
        .par_iter()
        .map(|&x| {
            let mut acc = 0.0;
            for (k, &(w, h, _, _)) in p.modes.iter().enumerate() {
                let mut surface = Complex64::new(0.0, 0.0);
                for (m, y) in dataset.sensors.points.iter().enumerate() {
                    surface += kernel(&p, config.order, x, *y, k)?
                        * spectra[m][k]
                        * dataset.sensors.weights[m];
                }
                let term = (I * w * surface).re;
                if !term.is_finite() {
                    return Err(PatError::Numeric { x, omega: w });
                }
                acc += h * term;
            }
            Ok(-FULL_TIME_FACTOR * acc / PI)
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(ImagingResult {
        points: config.points.clone(),
        values,
        rho: config.rho,
        order: config.order,
        model: dataset.model.clone(),
    })
}

/// `sum_t w_t g(t) e^{-i w t}` by rotation of a unit phasor.
fn trace_spectrum(trace: &TimeSignal, w: f64) -> Complex64 {
    let step = (-I * w * trace.dt).exp();
    let mut e = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, g) in trace.samples.iter().enumerate() {
        if k % 256 == 0 {
            e = (-I * w * trace.time(k)).exp();
        }
        acc += e * (trace.weight(k) * g);
        e *= step;
    }
    acc
}

/// One reconstruction per cutoff, returning `(rho, relative L2 error)`.
/// Cutoffs above the stability threshold are allowed and logged.
pub fn sweep_rho(
    dataset: &DataSet,
    config: &ReconstructionConfig,
    rhos: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let phantom = dataset
        .phantom
        .as_ref()
        .ok_or_else(|| PatError::Parameter("a sweep needs the reference phantom".into()))?;
    rhos.iter()
        .map(|&rho| {
            let c = ReconstructionConfig {
                rho,
                override_threshold: true,
                ..config.clone()
            };
            let result = reconstruct(dataset, &c)?;
            Ok((rho, result.relative_error(phantom)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{synthesize_dataset, SensorArray};

    #[test]
    fn green_free_examples() {
        let x = [0.0; 3];
        let g = green_free(x, [0.0, 2.0, 0.0], 0.0).unwrap();
        assert_eq!(g, Complex64::new(1.0 / (8.0 * PI), 0.0));
        let g = green_free(x, [1.0, 0.0, 0.0], PI).unwrap();
        assert!((g - Complex64::new(-1.0 / (4.0 * PI), 0.0)).norm() < 1e-16);
        assert!(matches!(
            green_free(x, x, 1.0),
            Err(PatError::Singularity(_))
        ));
    }

    /// `(kappa^2 + Laplacian) G` by central differences.
    fn helmholtz_residual(
        g: impl Fn(Vec3) -> Complex64,
        k2: Complex64,
        y: Vec3,
        h: f64,
    ) -> Complex64 {
        let mut lap = -6.0 * g(y);
        for i in 0..3 {
            let mut a = y;
            let mut b = y;
            a[i] += h;
            b[i] -= h;
            lap += g(a) + g(b);
        }
        lap / (h * h) + k2 * g(y)
    }

    #[test]
    fn green_functions_solve_helmholtz() {
        let x = [0.1, 0.2, -0.1];
        let y = [1.2, -0.4, 0.9];
        let w = 3.0;
        let m = AttenuationModel::ksb(0.05, 1.0, 1.5).unwrap();
        for order in [
            CorrectionOrder::Zero,
            CorrectionOrder::First,
            CorrectionOrder::Second,
        ] {
            let (_, kt) = corrected_wavenumber(&m, w, order).unwrap();
            let k2 = if order == CorrectionOrder::Zero {
                Complex64::new(w * w, 0.0)
            } else {
                kt * kt
            };
            let g = |p: Vec3| green_corrected(&m, x, p, w, order).unwrap();
            let scale = g(y).norm() * k2.norm();
            let r1 = helmholtz_residual(g, k2, y, 1e-2).norm();
            let r2 = helmholtz_residual(g, k2, y, 5e-3).norm();
            assert!(r1 < 1e-3 * scale, "{order:?}: {r1}");
            // Second-order convergence.
            assert!((r1 / r2 - 4.0).abs() < 0.2, "{order:?}: {}", r1 / r2);
        }
    }

    #[test]
    fn corrected_green_reduces_to_free() {
        let x = [0.0, 0.3, 0.0];
        let y = [2.0, 0.0, 0.0];
        let m = AttenuationModel::nsw(0.02, 0.01).unwrap();
        for w in [0.0, 1.0, 17.5] {
            assert_eq!(
                green_corrected(&m, x, y, w, CorrectionOrder::Zero).unwrap(),
                green_free(x, y, w).unwrap()
            );
            let l = AttenuationModel::ksb(0.0, 1.0, 2.0).unwrap();
            let a = green_corrected(&l, x, y, w, CorrectionOrder::First).unwrap();
            assert!((a - green_free(x, y, w).unwrap()).norm() <= 1e-15 * a.norm());
        }
    }

    #[test]
    fn corrected_green_grows_with_frequency() {
        let m = AttenuationModel::ksb(0.05, 1.0, 2.0).unwrap();
        let x = [0.0; 3];
        let y = [0.0, 0.0, 2.0];
        let mut last = 0.0;
        for k in 1..40 {
            let w = 25.0 * k as f64;
            let (lambda, kt) = corrected_wavenumber(&m, w, CorrectionOrder::First).unwrap();
            assert!(kt.im < 0.0);
            let growth =
                (green_corrected(&m, x, y, w, CorrectionOrder::First).unwrap() / lambda).norm();
            assert!(growth > last);
            last = growth;
        }
        let huge = AttenuationModel::nsw(1.0, 0.0).unwrap();
        assert!(matches!(
            green_corrected(&huge, x, [0.0, 0.0, 1e4], 50.0, CorrectionOrder::First),
            Err(PatError::Range { .. })
        ));
    }

    fn small_dataset(model: AttenuationModel) -> DataSet {
        let s = SensorArray::fibonacci(24, 2.0).unwrap();
        let p = Phantom::gaussian([0.1, 0.0, -0.1], 0.08, 1.0).unwrap();
        let g = FrequencyGrid::new(30.0, 256).unwrap();
        synthesize_dataset(&p, &s, &model, &g, 0.05, 16.0).unwrap()
    }

    #[test]
    fn zero_data_reconstruct_to_zero() {
        let mut d = small_dataset(AttenuationModel::lossless());
        for t in &mut d.traces {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
        let c = ReconstructionConfig::new(
            10.0,
            CorrectionOrder::Zero,
            line_profile([0.0; 3], [1.0, 0.0, 0.0], 1.0, 5),
        );
        assert!(reconstruct(&d, &c)
            .unwrap()
            .values
            .iter()
            .all(|v| *v == 0.0));
        assert_eq!(back_propagate(&d, [0.1, 0.0, 0.0], 1.0, &c).unwrap(), 0.0);
    }

    #[test]
    fn reorganized_sum_matches_literal_triple_loop() {
        let d = small_dataset(AttenuationModel::ksb(0.01, 1.0, 2.0).unwrap());
        for order in [CorrectionOrder::Zero, CorrectionOrder::First] {
            let x = [0.13, -0.07, 0.21];
            let mut c = ReconstructionConfig::new(10.0, order, vec![x]);
            c.half = Some(64);
            let fast = reconstruct(&d, &c).unwrap().values[0];
            let slow = literal_functional(&d, x, &c).unwrap();
            assert!((fast - slow).abs() <= 1e-8 * slow.abs(), "{fast} vs {slow}");
        }
    }

    #[test]
    fn reconstruction_is_linear_in_data() {
        let d1 = small_dataset(AttenuationModel::nsw(0.02, 0.01).unwrap());
        let mut d2 = d1.clone();
        for (k, t) in d2.traces.iter_mut().enumerate() {
            t.iter_mut()
                .enumerate()
                .for_each(|(j, v)| *v = (0.01 * (j * (k + 1)) as f64).sin());
        }
        let c = ReconstructionConfig::new(
            5.0,
            CorrectionOrder::First,
            line_profile([0.0; 3], [0.0, 1.0, 1.0], 0.8, 7),
        );
        let r1 = reconstruct(&d1, &c).unwrap().values;
        let r2 = reconstruct(&d2, &c).unwrap().values;
        let r = reconstruct(&d1.combine(0.7, &d2, -1.9).unwrap(), &c)
            .unwrap()
            .values;
        let combo: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| 0.7 * a - 1.9 * b).collect();
        assert!(stats::relative_l2(&r, &combo) < 1e-10);
    }

    #[test]
    fn threshold_is_enforced_unless_overridden() {
        let d = small_dataset(AttenuationModel::nsw(0.02, 0.01).unwrap());
        let mut c = ReconstructionConfig::new(20.0, CorrectionOrder::First, vec![[0.0; 3]]);
        assert!(matches!(reconstruct(&d, &c), Err(PatError::Parameter(_))));
        c.override_threshold = true;
        assert!(reconstruct(&d, &c).is_ok());
        c.order = CorrectionOrder::Zero;
        c.override_threshold = false;
        assert!(reconstruct(&d, &c).is_ok());
        let outside = ReconstructionConfig::new(5.0, CorrectionOrder::Zero, vec![[0.0, 2.5, 0.0]]);
        assert!(reconstruct(&d, &outside).is_err());
    }

    #[test]
    fn back_propagation_needs_grid_times() {
        let d = small_dataset(AttenuationModel::lossless());
        let c = ReconstructionConfig::new(5.0, CorrectionOrder::Zero, vec![]);
        assert!(back_propagate(&d, [0.0; 3], 0.5, &c).is_ok());
        assert!(back_propagate(&d, [0.0; 3], 0.51, &c).is_err());
        assert!(back_propagate(&d, [0.0; 3], 40.0, &c).is_err());
    }

    #[test]
    fn single_row_sweep() {
        let d = small_dataset(AttenuationModel::lossless());
        let c = ReconstructionConfig::new(5.0, CorrectionOrder::Zero, vec![[0.1, 0.0, -0.1]]);
        let rows = sweep_rho(&d, &c, &[8.0]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].0, 8.0);
    }

    #[test]
    fn profile_endpoints() {
        let p = line_profile([0.0; 3], [0.0, 0.0, 2.0], 1.0, 64);
        assert_eq!(p.len(), 64);
        assert_eq!(p[0], [0.0, 0.0, -1.0]);
        assert_eq!(p[63], [0.0, 0.0, 1.0]);
        assert_eq!(volume_grid([0.0; 3], 1.0, 3).len(), 27);
    }
}
