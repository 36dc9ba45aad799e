//! Synthetic measurements for parametric phantoms.
//!
//! The unattenuated pressure from an initial density `f` is
//! `p(x, t) = d/dt [t M(x, t)]`, with `M` the spherical mean of `f` about `x`.
//! Balls and Gaussians have closed-form spherical means, and the time
//! transforms of their boundary traces are also closed form. Attenuated data
//! `g_a = L_a[p]` are synthesized from those transforms, so the inner
//! integral of the attenuation operator is exact.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dispersion::{time_constant, AttenuationModel};
use crate::error::{PatError, Result};
use crate::spectral::{attenuate_transform, FrequencyGrid, TimeGrid, TimeSignal, EXP_GUARD};

pub type Vec3 = [f64; 3];

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Gaussians are treated as supported within this many widths of their center.
pub const GAUSSIAN_CUTOFF: f64 = 8.0;

/// Relative tail level a trace must fall below at the final time.
pub const QUIESCENCE_TOLERANCE: f64 = 1e-6;

pub fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn distance(a: Vec3, b: Vec3) -> f64 {
    norm([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

/// `m v` for a row-major 3x3 matrix.
pub fn rotate(m: &[[f64; 3]; 3], v: Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    /// Uniform ball.
    Ball {
        center: Vec3,
        radius: f64,
        amplitude: f64,
    },
    /// `amplitude * exp(-|x - center|^2 / (2 sigma^2))`.
    Gaussian {
        center: Vec3,
        sigma: f64,
        amplitude: f64,
    },
}

impl Component {
    fn validate(&self) -> Result<()> {
        let (c, r, a, what) = match *self {
            Component::Ball {
                center,
                radius,
                amplitude,
            } => (center, radius, amplitude, "ball radius"),
            Component::Gaussian {
                center,
                sigma,
                amplitude,
            } => (center, sigma, amplitude, "gaussian width"),
        };
        if !(r.is_finite() && r > 0.0) {
            return Err(PatError::Parameter(format!("{what} {r} must be > 0")));
        }
        if !a.is_finite() || c.iter().any(|v| !v.is_finite()) {
            return Err(PatError::Parameter(
                "phantom center and amplitude must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn center(&self) -> Vec3 {
        match *self {
            Component::Ball { center, .. } | Component::Gaussian { center, .. } => center,
        }
    }

    /// Radius of the region treated as the support.
    pub fn reach(&self) -> f64 {
        match *self {
            Component::Ball { radius, .. } => radius,
            Component::Gaussian { sigma, .. } => GAUSSIAN_CUTOFF * sigma,
        }
    }

    pub fn value(&self, x: Vec3) -> f64 {
        match *self {
            Component::Ball {
                center,
                radius,
                amplitude,
            } => {
                let d = distance(x, center);
                if d < radius {
                    amplitude
                } else if d == radius {
                    0.5 * amplitude
                } else {
                    0.0
                }
            }
            Component::Gaussian {
                center,
                sigma,
                amplitude,
            } => {
                let d = distance(x, center);
                amplitude * (-d * d / (2.0 * sigma * sigma)).exp()
            }
        }
    }

    fn spherical_mean(&self, x: Vec3, r: f64) -> f64 {
        let d = distance(x, self.center());
        match *self {
            Component::Ball {
                radius, amplitude, ..
            } => amplitude * ball_fraction(d, r, radius),
            Component::Gaussian {
                sigma, amplitude, ..
            } => {
                let s2 = sigma * sigma;
                let x2 = 2.0 * d * r / s2;
                amplitude * (-(d - r).powi(2) / (2.0 * s2)).exp() * exprel_neg(x2)
            }
        }
    }

    fn pressure(&self, x: Vec3, t: f64) -> f64 {
        let d = distance(x, self.center());
        match *self {
            Component::Ball {
                radius, amplitude, ..
            } => {
                if t == 0.0 {
                    return self.value(x);
                }
                if d + t < radius {
                    amplitude
                } else if (d - t).abs() < radius && d > 0.0 {
                    amplitude * (d - t) / (2.0 * d)
                } else {
                    0.0
                }
            }
            Component::Gaussian {
                sigma, amplitude, ..
            } => {
                let s2 = sigma * sigma;
                let h = |u: f64| u * (-u * u / (2.0 * s2)).exp();
                if d < 1e-3 * sigma {
                    // [h(t + d) - h(t - d)] / (2d) by Taylor expansion.
                    let e = (-t * t / (2.0 * s2)).exp();
                    let h1 = (1.0 - t * t / s2) * e;
                    let h3 = (-3.0 / s2 + 6.0 * t * t / (s2 * s2) - t.powi(4) / (s2 * s2 * s2)) * e;
                    amplitude * (h1 + d * d * h3 / 6.0)
                } else {
                    amplitude * (h(d + t) + h(d - t)) / (2.0 * d)
                }
            }
        }
    }

    /// `int_0^inf p(x, s) e^{i z s} ds` for an observation point outside the support.
    fn pressure_transform(&self, x: Vec3, z: Complex64) -> Result<Complex64> {
        let d = distance(x, self.center());
        match *self {
            Component::Ball {
                radius, amplitude, ..
            } => {
                // p = A (d - s) / (2d) on [d - R, d + R].
                let c1 = -amplitude / (2.0 * d);
                let c0 = amplitude / 2.0;
                linear_segment_transform(c0, c1, d - radius, d + radius, z)
            }
            Component::Gaussian {
                sigma, amplitude, ..
            } => {
                // Only the outgoing lobe (d - s) e^{-(s-d)^2/2s^2} survives once
                // d exceeds the cutoff; integrate it over the whole line.
                let s2 = sigma * sigma;
                let log_mag = -0.5 * s2 * (z * z).re - z.im * d;
                if log_mag > EXP_GUARD {
                    return Err(PatError::Range {
                        what: "gaussian transform",
                        im: z.im,
                        length: d,
                        guard: EXP_GUARD,
                    });
                }
                let g = (-0.5 * s2 * z * z + I * z * d).exp();
                Ok(-I * z * sigma.powi(3) * (2.0 * PI).sqrt() * g * (amplitude / (2.0 * d)))
            }
        }
    }
}

/// `(1 - exp(-x)) / x`, continuous at 0.
fn exprel_neg(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// Fraction of the sphere of radius `r`, centered at distance `d` from the
/// center of a ball of radius `big_r`, lying inside the ball.
fn ball_fraction(d: f64, r: f64, big_r: f64) -> f64 {
    if r == 0.0 || d == 0.0 {
        let rr = r.max(d);
        return if rr < big_r {
            1.0
        } else if rr == big_r {
            0.5
        } else {
            0.0
        };
    }
    if d + r <= big_r {
        1.0
    } else if (d - r).abs() >= big_r {
        0.0
    } else {
        (big_r * big_r - (d - r).powi(2)) / (4.0 * d * r)
    }
}

/// `int_a^b (c0 + c1 s) e^{i z s} ds`.
fn linear_segment_transform(c0: f64, c1: f64, a: f64, b: f64, z: Complex64) -> Result<Complex64> {
    let m = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let growth = (-z.im * a).max(-z.im * b);
    if growth > EXP_GUARD {
        return Err(PatError::Range {
            what: "ball transform",
            im: z.im,
            length: b,
            guard: EXP_GUARD,
        });
    }
    let x = z * h;
    let (s0, s1) = if x.norm() < 1e-2 {
        let x2 = x * x;
        (
            1.0 - x2 / 6.0 + x2 * x2 / 120.0,
            1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0,
        )
    } else {
        (x.sin() / x, (x.sin() - x * x.cos()) / (x * x * x))
    };
    let even = (c0 + c1 * m) * 2.0 * h * s0;
    let odd = 2.0 * I * c1 * z * h.powi(3) * s1;
    Ok((I * z * m).exp() * (even + odd))
}

/// Initial density as a sum of components.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub components: Vec<Component>,
}

impl Phantom {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        for c in &components {
            c.validate()?;
        }
        Ok(Phantom { components })
    }

    pub fn zero() -> Self {
        Phantom {
            components: Vec::new(),
        }
    }

    pub fn ball(center: Vec3, radius: f64, amplitude: f64) -> Result<Self> {
        Self::new(vec![Component::Ball {
            center,
            radius,
            amplitude,
        }])
    }

    pub fn gaussian(center: Vec3, sigma: f64, amplitude: f64) -> Result<Self> {
        Self::new(vec![Component::Gaussian {
            center,
            sigma,
            amplitude,
        }])
    }

    /// Radius about the origin containing every component's support.
    pub fn support_radius(&self) -> f64 {
        self.components
            .iter()
            .map(|c| norm(c.center()) + c.reach())
            .fold(0.0, f64::max)
    }

    pub fn value(&self, x: Vec3) -> f64 {
        self.components.iter().map(|c| c.value(x)).sum()
    }

    pub fn rotated(&self, m: &[[f64; 3]; 3]) -> Phantom {
        let components = self
            .components
            .iter()
            .map(|c| match *c {
                Component::Ball {
                    center,
                    radius,
                    amplitude,
                } => Component::Ball {
                    center: rotate(m, center),
                    radius,
                    amplitude,
                },
                Component::Gaussian {
                    center,
                    sigma,
                    amplitude,
                } => Component::Gaussian {
                    center: rotate(m, center),
                    sigma,
                    amplitude,
                },
            })
            .collect();
        Phantom { components }
    }
}

/// Average of the phantom over the sphere of radius `r` about `x`.
pub fn spherical_mean(phantom: &Phantom, x: Vec3, r: f64) -> f64 {
    phantom
        .components
        .iter()
        .map(|c| c.spherical_mean(x, r))
        .sum()
}

/// Free-space pressure `p(x, t) = d/dt [t M(x, t)]` for `t >= 0`.
pub fn freespace_pressure(phantom: &Phantom, x: Vec3, t: f64) -> f64 {
    phantom.components.iter().map(|c| c.pressure(x, t)).sum()
}

/// Measurement points on a sphere about the origin with surface weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorArray {
    pub radius: f64,
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl SensorArray {
    /// `m` Fibonacci-lattice points with equal weights `4 pi R^2 / m`.
    pub fn fibonacci(m: usize, radius: f64) -> Result<Self> {
        if m == 0 {
            return Err(PatError::Parameter("sensor count must be positive".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(PatError::Parameter(format!(
                "sphere radius {radius} must be > 0"
            )));
        }
        let golden = PI * (3.0 - 5f64.sqrt());
        let points = (0..m)
            .map(|i| {
                let z = 1.0 - (2 * i + 1) as f64 / m as f64;
                let rho = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                [
                    radius * rho * phi.cos(),
                    radius * rho * phi.sin(),
                    radius * z,
                ]
            })
            .collect();
        let w = 4.0 * PI * radius * radius / m as f64;
        Ok(SensorArray {
            radius,
            points,
            weights: vec![w; m],
        })
    }

    /// Explicit points and weights; points are checked to lie on the sphere.
    pub fn from_points(radius: f64, points: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(PatError::Parameter(
                "need one positive weight per sensor".into(),
            ));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(PatError::Parameter(format!(
                "sphere radius {radius} must be > 0"
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if (norm(*p) - radius).abs() > 1e-12 * radius.max(1.0) {
                return Err(PatError::Parameter(format!(
                    "sensor {i} at distance {} is off the sphere of radius {radius}",
                    norm(*p)
                )));
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(PatError::Parameter(
                "sensor weights must be positive".into(),
            ));
        }
        Ok(SensorArray {
            radius,
            points,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn rotated(&self, m: &[[f64; 3]; 3]) -> SensorArray {
        SensorArray {
            radius: self.radius,
            points: self.points.iter().map(|p| rotate(m, *p)).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Attenuated boundary traces on a common grid `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    pub sensors: SensorArray,
    pub model: AttenuationModel,
    pub phantom: Option<Phantom>,
    /// Cutoff used when the traces were synthesized.
    pub rho: f64,
    pub dt: f64,
    pub traces: Vec<Vec<f64>>,
}

impl DataSet {
    pub fn samples_per_trace(&self) -> usize {
        self.traces.first().map_or(0, Vec::len)
    }

    pub fn final_time(&self) -> f64 {
        self.dt * self.samples_per_trace().saturating_sub(1) as f64
    }

    pub fn trace(&self, m: usize) -> TimeSignal {
        TimeSignal {
            t0: 0.0,
            dt: self.dt,
            samples: self.traces[m].clone(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.traces
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `alpha self + beta other` on identical grids.
    pub fn combine(&self, alpha: f64, other: &DataSet, beta: f64) -> Result<DataSet> {
        if self.dt != other.dt
            || self.traces.len() != other.traces.len()
            || self.samples_per_trace() != other.samples_per_trace()
        {
            return Err(PatError::Parameter(
                "datasets live on different grids".into(),
            ));
        }
        let traces = self
            .traces
            .iter()
            .zip(&other.traces)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect())
            .collect();
        Ok(DataSet {
            traces,
            phantom: None,
            ..self.clone()
        })
    }
}

/// Default final time: last possible arrival plus five attenuation time
/// constants and one unit of slack for band-limit ringing.
pub fn default_final_time(
    model: &AttenuationModel,
    sensors: &SensorArray,
    phantom: &Phantom,
) -> f64 {
    sensors.radius + phantom.support_radius() + 5.0 * time_constant(model) + 1.0
}

/// Sample spacing at half the Nyquist limit of the cutoff.
pub fn default_dt(rho: f64) -> f64 {
    0.5 * PI / rho
}

/// Synthesizes `g_a(y_m, t) = L_a[p(y_m, .)](t)` on `t = k dt`, `0 <= t <= T`.
///
/// The pressure transform is exact; the frequency integral is the trapezoid
/// rule over `grid`. Fails if a trace has not decayed to
/// [`QUIESCENCE_TOLERANCE`] of the data maximum by `T`.
pub fn synthesize_dataset(
    phantom: &Phantom,
    sensors: &SensorArray,
    model: &AttenuationModel,
    grid: &FrequencyGrid,
    dt: f64,
    final_time: f64,
) -> Result<DataSet> {
    model.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(PatError::Parameter(format!("time step {dt} must be > 0")));
    }
    let support = phantom.support_radius();
    if support >= sensors.radius {
        return Err(PatError::Parameter(format!(
            "phantom support radius {support} must lie strictly inside the sensor sphere {}",
            sensors.radius
        )));
    }
    let latest = sensors.radius + support;
    if !(final_time >= latest) {
        return Err(PatError::Parameter(format!(
            "final time {final_time} is before the last arrival {latest}"
        )));
    }
    let n = (final_time / dt).round() as usize + 1;
    let out = TimeGrid::new(0.0, dt, n);

    let results: Vec<(Vec<f64>, f64)> = sensors
        .points
        .par_iter()
        .map(|&y| {
            let transform = |z: Complex64| {
                phantom
                    .components
                    .iter()
                    .map(|c| c.pressure_transform(y, z))
                    .sum::<Result<Complex64>>()
            };
            let (trace, tail) = attenuate_transform(model, grid, transform, out)?;
            Ok((trace.samples, tail))
        })
        .collect::<Result<_>>()?;

    let peak = results
        .iter()
        .flat_map(|(t, _)| t.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    for (m, (_, tail)) in results.iter().enumerate() {
        if tail.abs() > QUIESCENCE_TOLERANCE * peak {
            return Err(PatError::NotQuiescent {
                sensor: m,
                residual: tail.abs() / peak,
                tolerance: QUIESCENCE_TOLERANCE,
            });
        }
    }
    log::debug!("synthesized {} traces of {n} samples", sensors.len());
    Ok(DataSet {
        sensors: sensors.clone(),
        model: model.clone(),
        phantom: Some(phantom.clone()),
        rho: grid.rho,
        dt,
        traces: results.into_iter().map(|(t, _)| t).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{apply_attenuation, band_limit, relative_difference};

    fn ball() -> Phantom {
        Phantom::ball([0.1, -0.2, 0.05], 0.5, 1.3).unwrap()
    }

    /// Quasi-Monte-Carlo sphere average with `n` Fibonacci points.
    fn qmc_mean(phantom: &Phantom, x: Vec3, r: f64, n: usize) -> f64 {
        let s = SensorArray::fibonacci(n, r).unwrap();
        s.points
            .iter()
            .map(|p| phantom.value([x[0] + p[0], x[1] + p[1], x[2] + p[2]]))
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn spherical_mean_examples() {
        let b = Phantom::ball([0.0; 3], 0.5, 1.0).unwrap();
        assert_eq!(spherical_mean(&b, [0.1, 0.0, 0.0], 0.0), 1.0);
        assert_eq!(spherical_mean(&b, [2.0, 0.0, 0.0], 1.0), 0.0);
        let v = spherical_mean(&b, [2.0, 0.0, 0.0], 2.0);
        assert!((v - (0.25 - 0.0) / 16.0).abs() < 1e-15);
        assert!((v - qmc_mean(&b, [2.0, 0.0, 0.0], 2.0, 200_000)).abs() < 1e-4);
    }

    #[test]
    fn gaussian_mean_matches_quadrature() {
        let g = Phantom::gaussian([0.2, 0.1, -0.3], 0.3, 2.0).unwrap();
        for &(x, r) in &[
            ([0.0; 3], 0.4),
            ([1.0, 0.5, 0.0], 1.1),
            ([0.2, 0.1, -0.3], 0.5),
        ] {
            let exact = spherical_mean(&g, x, r);
            let qmc = qmc_mean(&g, x, r, 100_000);
            assert!((exact - qmc).abs() < 1e-6, "{exact} vs {qmc}");
        }
        let x = [0.5, 0.0, 0.0];
        assert!((spherical_mean(&g, x, 0.0) - g.value(x)).abs() < 1e-15);
    }

    #[test]
    fn pressure_is_derivative_of_t_times_mean() {
        let p = Phantom::new(vec![
            Component::Ball {
                center: [0.1, 0.0, 0.0],
                radius: 0.4,
                amplitude: 1.0,
            },
            Component::Gaussian {
                center: [-0.2, 0.3, 0.0],
                sigma: 0.15,
                amplitude: 0.7,
            },
        ])
        .unwrap();
        let h = 1e-5;
        for &x in &[[1.5, 0.2, -0.1], [0.12, 0.01, 0.0], [-0.2, 0.3, 0.0]] {
            for k in 1..60 {
                let t = 0.037 * k as f64;
                let fd = ((t + h) * spherical_mean(&p, x, t + h)
                    - (t - h) * spherical_mean(&p, x, t - h))
                    / (2.0 * h);
                let exact = freespace_pressure(&p, x, t);
                // Skip the ball's jump points.
                let d = distance(x, [0.1, 0.0, 0.0]);
                if ((d - t).abs() - 0.4).abs() < 1e-3 || (d + t - 0.4).abs() < 1e-3 {
                    continue;
                }
                assert!((fd - exact).abs() < 1e-6, "x {x:?} t {t}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn ball_trace_is_n_wave() {
        let b = ball();
        let y = [2.0, 0.0, 0.0];
        let d = distance(y, [0.1, -0.2, 0.05]);
        for k in 0..400 {
            let t = 0.01 * k as f64;
            let expected = if (t - d).abs() < 0.5 {
                1.3 * (d - t) / (2.0 * d)
            } else {
                0.0
            };
            assert_eq!(freespace_pressure(&b, y, t), expected);
        }
        assert_eq!(freespace_pressure(&b, y, d + 0.51), 0.0);
    }

    #[test]
    fn pressure_starts_from_density() {
        let p = Phantom::new(vec![
            Component::Ball {
                center: [0.0; 3],
                radius: 0.4,
                amplitude: 1.0,
            },
            Component::Gaussian {
                center: [0.1, 0.0, 0.0],
                sigma: 0.2,
                amplitude: 0.5,
            },
        ])
        .unwrap();
        for &x in &[
            [0.0, 0.0, 0.0],
            [0.1, 0.0, 0.0],
            [0.3, 0.1, 0.0],
            [1.0, 0.0, 0.0],
        ] {
            assert!((freespace_pressure(&p, x, 0.0) - p.value(x)).abs() < 1e-14);
            assert!((freespace_pressure(&p, x, 1e-9) - p.value(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn transforms_match_quadrature() {
        let p = Phantom::new(vec![
            Component::Ball {
                center: [0.1, 0.0, 0.0],
                radius: 0.4,
                amplitude: 1.0,
            },
            Component::Gaussian {
                center: [-0.2, 0.3, 0.0],
                sigma: 0.1,
                amplitude: 0.7,
            },
        ])
        .unwrap();
        let y = [0.0, 2.0, 0.0];
        let n = 400_001;
        let sig = TimeSignal::from_fn(0.0, 4.0 / (n - 1) as f64, n, |t| {
            freespace_pressure(&p, y, t)
        });
        for &z in &[
            Complex64::new(0.0, 0.0),
            Complex64::new(1e-4, 0.0),
            Complex64::new(3.0, 0.2),
            Complex64::new(25.0, 1.5),
        ] {
            let exact: Complex64 = p
                .components
                .iter()
                .map(|c| c.pressure_transform(y, z).unwrap())
                .sum();
            let quad = crate::spectral::fourier(&sig, z).unwrap() * (2.0 * PI).sqrt();
            assert!((exact - quad).norm() < 1e-5, "z {z}: {exact} vs {quad}");
        }
    }

    #[test]
    fn fibonacci_sensors_on_sphere() {
        let s = SensorArray::fibonacci(256, 2.0).unwrap();
        assert!(s.points.iter().all(|p| (norm(*p) - 2.0).abs() < 1e-12));
        let total: f64 = s.weights.iter().sum();
        assert!((total - 16.0 * PI).abs() < 1e-10);
        assert!(SensorArray::from_points(2.0, vec![[2.0, 0.0, 0.1]], vec![1.0]).is_err());
        assert!(SensorArray::from_points(2.0, vec![[2.0, 0.0, 0.0]], vec![0.0]).is_err());
    }

    fn scene() -> (SensorArray, FrequencyGrid) {
        (
            SensorArray::fibonacci(12, 2.0).unwrap(),
            FrequencyGrid::new(40.0, 256).unwrap(),
        )
    }

    #[test]
    fn zero_phantom_gives_zero_data() {
        let (s, g) = scene();
        let m = AttenuationModel::ksb(0.01, 1.0, 2.0).unwrap();
        let d = synthesize_dataset(&Phantom::zero(), &s, &m, &g, 0.02, 8.0).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn lossless_data_are_band_limited_pressure() {
        let (s, _) = scene();
        let g = FrequencyGrid::new(100.0, 512).unwrap();
        let p = Phantom::gaussian([0.1, 0.0, 0.2], 0.1, 1.0).unwrap();
        let d = synthesize_dataset(&p, &s, &AttenuationModel::lossless(), &g, 0.005, 4.0).unwrap();
        for m in [0, 5, 11] {
            let y = s.points[m];
            let raw = TimeSignal::from_fn(0.0, 0.005, 801, |t| freespace_pressure(&p, y, t));
            let bl = band_limit(&raw, &g).unwrap();
            assert!(relative_difference(&d.trace(m), &bl) < 1e-9);
            // The Gaussian spectrum is negligible beyond the cutoff.
            assert!(relative_difference(&d.trace(m), &raw) < 1e-9);
        }
    }

    #[test]
    fn exact_transform_agrees_with_sampled_attenuation() {
        let (s, g) = scene();
        let p = Phantom::gaussian([0.0, 0.1, 0.0], 0.1, 1.0).unwrap();
        let m = AttenuationModel::nsw(0.02, 0.01).unwrap();
        let d = synthesize_dataset(&p, &s, &m, &g, 0.005, 4.0).unwrap();
        let y = s.points[3];
        let raw = TimeSignal::from_fn(0.0, 0.005, 801, |t| freespace_pressure(&p, y, t));
        let sampled = apply_attenuation(&m, &raw, &g).unwrap();
        assert!(relative_difference(&d.trace(3), &sampled) < 1e-9);
    }

    #[test]
    fn attenuation_removes_energy() {
        let (s, g) = scene();
        let p = ball();
        let lossless =
            synthesize_dataset(&p, &s, &AttenuationModel::lossless(), &g, 0.02, 12.0).unwrap();
        let m = AttenuationModel::ksb(0.05, 1.0, 2.0).unwrap();
        let att = synthesize_dataset(&p, &s, &m, &g, 0.02, 12.0).unwrap();
        for k in 0..s.len() {
            assert!(att.trace(k).l2_norm() < lossless.trace(k).l2_norm());
        }
    }

    #[test]
    fn short_final_time_is_rejected() {
        let (s, g) = scene();
        let m = AttenuationModel::ksb(0.05, 1.0, 2.0).unwrap();
        let err = synthesize_dataset(&ball(), &s, &m, &g, 0.02, 3.5).unwrap_err();
        assert!(matches!(err, PatError::NotQuiescent { .. }), "{err:?}");
        let err = synthesize_dataset(&ball(), &s, &m, &g, 0.02, 2.0).unwrap_err();
        assert!(matches!(err, PatError::Parameter(_)));
        let big = Phantom::ball([0.0; 3], 2.5, 1.0).unwrap();
        assert!(synthesize_dataset(&big, &s, &m, &g, 0.02, 9.0).is_err());
    }

    #[test]
    fn data_are_linear_in_phantom() {
        let (s, g) = scene();
        let m = AttenuationModel::ksb(0.01, 1.0, 2.0).unwrap();
        let a = Component::Ball {
            center: [0.1, 0.0, 0.0],
            radius: 0.3,
            amplitude: 1.0,
        };
        let b = Component::Gaussian {
            center: [-0.2, 0.2, 0.1],
            sigma: 0.08,
            amplitude: 0.6,
        };
        let t = 12.0;
        let da = synthesize_dataset(&Phantom::new(vec![a]).unwrap(), &s, &m, &g, 0.02, t).unwrap();
        let db = synthesize_dataset(&Phantom::new(vec![b]).unwrap(), &s, &m, &g, 0.02, t).unwrap();
        let dab =
            synthesize_dataset(&Phantom::new(vec![a, b]).unwrap(), &s, &m, &g, 0.02, t).unwrap();
        let sum = da.combine(1.0, &db, 1.0).unwrap();
        for k in 0..s.len() {
            assert!(relative_difference(&sum.trace(k), &dab.trace(k)) < 1e-10);
        }
    }

    #[test]
    fn data_are_rotation_invariant() {
        let (s, g) = scene();
        let m = AttenuationModel::nsw(0.02, 0.01).unwrap();
        let p = Phantom::new(vec![
            Component::Ball {
                center: [0.1, 0.0, 0.2],
                radius: 0.3,
                amplitude: 1.0,
            },
            Component::Gaussian {
                center: [-0.2, 0.2, 0.1],
                sigma: 0.08,
                amplitude: 0.6,
            },
        ])
        .unwrap();
        let (c, sn) = (0.3f64.cos(), 0.3f64.sin());
        let rot = [
            [c, -sn, 0.0],
            [sn * 0.6, c * 0.6, 0.8],
            [-sn * 0.8, -c * 0.8, 0.6],
        ];
        let d0 = synthesize_dataset(&p, &s, &m, &g, 0.01, 4.0).unwrap();
        let d1 = synthesize_dataset(&p.rotated(&rot), &s.rotated(&rot), &m, &g, 0.01, 4.0).unwrap();
        for k in 0..s.len() {
            assert!(relative_difference(&d1.trace(k), &d0.trace(k)) < 1e-10);
        }
    }
}
