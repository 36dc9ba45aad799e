//! Complex dispersion relations of the supported attenuation laws and the
//! asymptotic coefficients that define the corrected time-reversal operator.
//!
//! Every model is written as `kappa(omega) = omega * m(omega; a)` where `a` is
//! the attenuation strength (`alpha0` for KSB, the largest relaxation time for
//! NSW, `a` for the thermo-viscous law). The expansion
//! `m = sum_j (-1)^j lambda_j(omega) a^j` defines `lambda_1`, `lambda_2`; the
//! corrected wavenumber `kappa~` and weight `lambda` are built from them.
//!
//! Time dependence is `exp(-i omega t)` throughout, so a damped outgoing wave
//! has `Im kappa >= 0` for `omega >= 0`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{PatError, Result};
use crate::jet::{Jet, JetScalar, TaylorJet};

/// Frequencies below this magnitude are treated as `omega = 0` where a
/// removable singularity or a singular derivative would otherwise appear.
pub const EPS_OMEGA: f64 = 1e-12;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// One relaxation process of the NSW law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relaxation {
    pub tau: f64,
    pub tau_tilde: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttenuationModel {
    /// `kappa = omega / sqrt(1 - i a omega)`.
    ThermoViscous { a: f64 },
    /// Power-law model with fractional exponent `gamma` in (1, 2].
    Ksb { alpha0: f64, tau0: f64, gamma: f64 },
    /// Relaxation model averaged over `N >= 1` processes.
    Nsw { processes: Vec<Relaxation> },
}

/// How far the asymptotic attenuation correction is carried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CorrectionOrder {
    Zero,
    First,
    Second,
}

impl CorrectionOrder {
    pub fn as_u32(self) -> u32 {
        match self {
            CorrectionOrder::Zero => 0,
            CorrectionOrder::First => 1,
            CorrectionOrder::Second => 2,
        }
    }
}

impl TryFrom<u32> for CorrectionOrder {
    type Error = PatError;

    fn try_from(k: u32) -> Result<Self> {
        match k {
            0 => Ok(CorrectionOrder::Zero),
            1 => Ok(CorrectionOrder::First),
            2 => Ok(CorrectionOrder::Second),
            _ => Err(PatError::Capability(format!(
                "correction order {k} (orders 0, 1 and 2 are implemented)"
            ))),
        }
    }
}

/// Stability cutoff for the imaging functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoThreshold {
    Finite(f64),
    /// No attenuation: the corrected Green's function never grows.
    Unbounded,
}

impl RhoThreshold {
    pub fn value(self) -> f64 {
        match self {
            RhoThreshold::Finite(r) => r,
            RhoThreshold::Unbounded => f64::INFINITY,
        }
    }
}

impl AttenuationModel {
    pub fn thermo_viscous(a: f64) -> Result<Self> {
        let m = AttenuationModel::ThermoViscous { a };
        m.validate()?;
        Ok(m)
    }

    pub fn ksb(alpha0: f64, tau0: f64, gamma: f64) -> Result<Self> {
        let m = AttenuationModel::Ksb {
            alpha0,
            tau0,
            gamma,
        };
        m.validate()?;
        Ok(m)
    }

    /// Single relaxation process.
    pub fn nsw(tau: f64, tau_tilde: f64) -> Result<Self> {
        Self::nsw_multi(vec![Relaxation { tau, tau_tilde }])
    }

    pub fn nsw_multi(processes: Vec<Relaxation>) -> Result<Self> {
        let m = AttenuationModel::Nsw { processes };
        m.validate()?;
        Ok(m)
    }

    /// Attenuation-free model (`kappa = kappa~ = omega`, `lambda = 1`).
    pub fn lossless() -> Self {
        AttenuationModel::ThermoViscous { a: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(PatError::Parameter(s));
        match self {
            AttenuationModel::ThermoViscous { a } => {
                if !(a.is_finite() && *a >= 0.0) {
                    return bad(format!("thermo-viscous a = {a} must be finite and >= 0"));
                }
            }
            AttenuationModel::Ksb {
                alpha0,
                tau0,
                gamma,
            } => {
                if !(alpha0.is_finite() && *alpha0 >= 0.0) {
                    return bad(format!("KSB alpha0 = {alpha0} must be finite and >= 0"));
                }
                if !(tau0.is_finite() && *tau0 > 0.0) {
                    return bad(format!("KSB tau0 = {tau0} must be finite and > 0"));
                }
                if !(gamma.is_finite() && *gamma > 1.0 && *gamma <= 2.0) {
                    return bad(format!("KSB gamma = {gamma} must lie in (1, 2]"));
                }
            }
            AttenuationModel::Nsw { processes } => {
                if processes.is_empty() {
                    return bad("NSW needs at least one relaxation process".into());
                }
                for (j, p) in processes.iter().enumerate() {
                    if !(p.tau.is_finite() && p.tau_tilde.is_finite() && p.tau_tilde >= 0.0) {
                        return bad(format!(
                            "NSW process {j}: tau = {}, tau_tilde = {} must be finite and >= 0",
                            p.tau, p.tau_tilde
                        ));
                    }
                    if p.tau < p.tau_tilde {
                        return bad(format!(
                            "NSW process {j}: strong causality requires tau >= tau_tilde, got tau = {} < tau_tilde = {}",
                            p.tau, p.tau_tilde
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// The small parameter `a` of the asymptotic expansion.
    pub fn strength(&self) -> f64 {
        match self {
            AttenuationModel::ThermoViscous { a } => *a,
            AttenuationModel::Ksb { alpha0, .. } => *alpha0,
            AttenuationModel::Nsw { processes } => {
                processes.iter().map(|p| p.tau).fold(0.0, f64::max)
            }
        }
    }

    pub fn is_lossless(&self) -> bool {
        match self {
            AttenuationModel::Nsw { processes } => processes.iter().all(|p| p.tau == p.tau_tilde),
            _ => self.strength() == 0.0,
        }
    }

    /// Same law with the attenuation strength replaced by `a` (shape
    /// parameters such as `tau0`, `gamma` or the ratios `tau_j / a` kept).
    pub fn with_strength(&self, a: f64) -> Self {
        match self {
            AttenuationModel::ThermoViscous { .. } => AttenuationModel::ThermoViscous { a },
            AttenuationModel::Ksb { tau0, gamma, .. } => AttenuationModel::Ksb {
                alpha0: a,
                tau0: *tau0,
                gamma: *gamma,
            },
            AttenuationModel::Nsw { .. } => {
                let processes = self
                    .nsw_ratios()
                    .into_iter()
                    .map(|(r, rt)| Relaxation {
                        tau: a * r,
                        tau_tilde: a * rt,
                    })
                    .collect();
                AttenuationModel::Nsw { processes }
            }
        }
    }

    /// `(tau_j / a, tau~_j / a)` with `a` the largest relaxation time.
    fn nsw_ratios(&self) -> Vec<(f64, f64)> {
        match self {
            AttenuationModel::Nsw { processes } => {
                let a = self.strength();
                processes
                    .iter()
                    .map(|p| {
                        if a > 0.0 {
                            (p.tau / a, p.tau_tilde / a)
                        } else {
                            (0.0, 0.0)
                        }
                    })
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// `kappa(omega) / omega` at attenuation strength `a`, generic so that
    /// both `omega` and `a` may carry Taylor jets.
    pub fn ratio<S: JetScalar>(&self, omega: S, a: S) -> S {
        let one = S::from_real(1.0);
        match self {
            AttenuationModel::ThermoViscous { .. } => {
                (one - S::from_complex(I) * a * omega).powf(-0.5)
            }
            AttenuationModel::Ksb { tau0, gamma, .. } => {
                let u = (S::from_complex(-I * *tau0) * omega).powf(gamma - 1.0);
                one.clone() + a * (one + u).powf(-0.5)
            }
            AttenuationModel::Nsw { .. } => {
                let ratios = self.nsw_ratios();
                let n = ratios.len() as f64;
                let mut sum = S::from_real(0.0);
                for (r, rt) in ratios {
                    let num = one.clone() - S::from_complex(I * rt) * a.clone() * omega.clone();
                    let den = one.clone() - S::from_complex(I * r) * a.clone() * omega.clone();
                    sum = sum + num / den;
                }
                sum.scale(1.0 / n).sqrt()
            }
        }
    }

    fn has_singular_origin(&self) -> bool {
        matches!(self, AttenuationModel::Ksb { gamma, .. } if *gamma < 2.0)
    }
}

/// Complex wavenumber `kappa(omega)`.
pub fn kappa(model: &AttenuationModel, omega: f64) -> Result<Complex64> {
    model.validate()?;
    let a = Complex64::new(model.strength(), 0.0);
    Ok(omega * model.ratio(Complex64::new(omega, 0.0), a))
}

/// `omega / kappa(omega)`, with the analytic limit at `omega = 0`.
pub fn omega_over_kappa(model: &AttenuationModel, omega: f64) -> Result<Complex64> {
    model.validate()?;
    let w = if omega.abs() < EPS_OMEGA { 0.0 } else { omega };
    let a = Complex64::new(model.strength(), 0.0);
    Ok(model.ratio(Complex64::new(w, 0.0), a).inv())
}

/// First-order coefficient `lambda_1` of `kappa = omega (1 - a lambda_1 + ...)`,
/// in closed form. Accepts plain complex frequencies or jets.
pub fn lambda1<S: JetScalar>(model: &AttenuationModel, omega: S) -> S {
    match model {
        AttenuationModel::ThermoViscous { .. } => (S::from_complex(-I) * omega).scale(0.5),
        AttenuationModel::Ksb { tau0, gamma, .. } => {
            let u = (S::from_complex(-I * *tau0) * omega).powf(gamma - 1.0);
            -(S::from_real(1.0) + u).powf(-0.5)
        }
        AttenuationModel::Nsw { .. } => {
            let ratios = model.nsw_ratios();
            let mean = ratios.iter().map(|(r, rt)| r - rt).sum::<f64>() / ratios.len() as f64;
            (S::from_complex(-I) * omega).scale(0.5 * mean)
        }
    }
}

/// `(lambda_1, lambda_2)` as frequency jets at `omega`, from the exact
/// second-order expansion of `kappa / omega` in the attenuation strength.
pub fn lambda_jets(model: &AttenuationModel, omega: f64) -> (TaylorJet, TaylorJet) {
    let w = Complex64::new(omega, 0.0);
    let wj = if omega.abs() < EPS_OMEGA && model.has_singular_origin() {
        Jet::constant(Complex64::new(0.0, 0.0))
    } else {
        Jet::variable(w)
    };
    let a: Jet<TaylorJet> = Jet::new(
        TaylorJet::from_real(0.0),
        TaylorJet::from_real(1.0),
        TaylorJet::from_real(0.0),
    );
    let m = model.ratio(Jet::constant(wj), a);
    let [_, c1, c2] = m.c;
    (-c1, c2)
}

/// Displayed KSB first-order wavenumber correction
/// `nu_1(omega) = -(1 + (i tau0 omega)^(gamma-1))^(-1/2)`.
pub fn ksb_nu1(tau0: f64, gamma: f64, omega: f64) -> Complex64 {
    let v = JetScalar::powf(&(I * tau0 * omega), gamma - 1.0);
    -JetScalar::powf(&(1.0 + v), -0.5)
}

/// Displayed KSB first-order weight correction
/// `nu_2 = (7-gamma)/2 (1+v)^(-1/2) + (gamma-1)/2 (1+v)^(-3/2)`, `v = (i tau0 omega)^(gamma-1)`.
pub fn ksb_nu2(tau0: f64, gamma: f64, omega: f64) -> Complex64 {
    let v = JetScalar::powf(&(I * tau0 * omega), gamma - 1.0);
    let s = 1.0 + v;
    JetScalar::powf(&s, -0.5) * ((7.0 - gamma) / 2.0)
        + JetScalar::powf(&s, -1.5) * ((gamma - 1.0) / 2.0)
}

fn nsw_mean_quotient(processes: &[Relaxation], omega: f64) -> Complex64 {
    let sum: Complex64 = processes
        .iter()
        .map(|p| (1.0 + I * omega * p.tau_tilde) / (1.0 + I * omega * p.tau))
        .sum();
    sum / processes.len() as f64
}

/// Expansion coefficients at one frequency.
#[derive(Debug, Clone)]
pub struct ExpansionCoefficients {
    pub omega: f64,
    pub lambda1: TaylorJet,
    pub lambda2: TaylorJet,
    /// `nu_1(omega) = lambda_1(-omega)`.
    pub nu1: Complex64,
    /// `nu_2 = beta_1`.
    pub nu2: Complex64,
    pub gamma1: Complex64,
    pub gamma2: Complex64,
    pub beta1: Complex64,
    pub beta2: Complex64,
}

/// `lambda_1`, `lambda_2` and their frequency-scaled derivatives at `w`:
/// `d1 = w lambda_1'`, `d2 = w^2 lambda_1''`, `e1 = w lambda_2'`.
/// The scaled derivatives vanish at `w = 0` for every supported law.
struct Scaled {
    l: Complex64,
    d1: Complex64,
    d2: Complex64,
    l2: Complex64,
    e1: Complex64,
}

impl Scaled {
    fn at(model: &AttenuationModel, w: f64) -> Scaled {
        let (j1, j2) = lambda_jets(model, w);
        let (d1, d2, e1) = if w.abs() < EPS_OMEGA {
            let z = Complex64::new(0.0, 0.0);
            (z, z, z)
        } else {
            (
                w * j1.derivative(1),
                w * w * j1.derivative(2),
                w * j2.derivative(1),
            )
        };
        Scaled {
            l: j1.c[0],
            d1,
            d2,
            l2: j2.c[0],
            e1,
        }
    }
}

/// All expansion coefficients at `omega`.
///
/// The first-order condition gives `gamma_1(-w) = -2 lambda_1(w) - w lambda_1'(w)`
/// and `beta_1 = gamma_1 - lambda_1(-.)`. The second-order condition is
/// evaluated literally:
///
/// ```text
/// gamma_2(-w) = X + d/dw (w X) - 1/2 d^2/dw^2 (w lambda_1)^2,
/// X = -lambda_1^2 + lambda_2 - gamma_1(-w) lambda_1,
/// ```
///
/// and `beta_2(w) = gamma_2(w) - gamma_1(w) lambda_1(-w) + lambda_2(-w)`.
pub fn correction_coefficients(
    model: &AttenuationModel,
    omega: f64,
) -> Result<ExpansionCoefficients> {
    model.validate()?;
    let (lambda1, lambda2) = lambda_jets(model, omega);
    // Everything below is evaluated at w = -omega so that the results refer
    // to +omega.
    let Scaled { l, d1, d2, l2, e1 } = Scaled::at(model, -omega);

    let gamma1 = -2.0 * l - d1;
    let beta1 = gamma1 - l;

    let g = gamma1;
    let w_dg = -3.0 * d1 - d2;
    let x = -l * l + l2 - g * l;
    let w_dx = -2.0 * l * d1 + e1 - w_dg * l - g * d1;
    let d_wx = x + w_dx;
    let half_second = (l + d1) * (l + d1) + l * (2.0 * d1 + d2);
    let gamma2 = x + d_wx - half_second;

    let beta2 = gamma2 - gamma1 * l + l2;

    Ok(ExpansionCoefficients {
        omega,
        lambda1,
        lambda2,
        nu1: l,
        nu2: beta1,
        gamma1,
        gamma2,
        beta1,
        beta2,
    })
}

/// Corrected wavenumber `kappa~(omega)` at the given order.
///
/// KSB order 1 uses the displayed `omega (1 - alpha0 nu_1)`, order 2 the
/// series `omega (1 - a lambda_1(-omega) + a^2 lambda_2(-omega))`. NSW uses the
/// closed form `omega sqrt(mean (1 + i omega tau~_j)/(1 + i omega tau_j))` at
/// every positive order, and the thermo-viscous law its `tau~ = 0` analogue
/// `omega / sqrt(1 + i a omega)`.
pub fn kappa_tilde(
    model: &AttenuationModel,
    omega: f64,
    order: CorrectionOrder,
) -> Result<Complex64> {
    Ok(omega * kappa_tilde_ratio(model, omega, order)?)
}

/// `kappa~(omega) / omega`, finite at `omega = 0`.
pub fn kappa_tilde_ratio(
    model: &AttenuationModel,
    omega: f64,
    order: CorrectionOrder,
) -> Result<Complex64> {
    model.validate()?;
    let one = Complex64::new(1.0, 0.0);
    if order == CorrectionOrder::Zero {
        return Ok(one);
    }
    Ok(match model {
        AttenuationModel::ThermoViscous { a } => JetScalar::powf(&(1.0 + I * a * omega), -0.5),
        AttenuationModel::Ksb {
            alpha0,
            tau0,
            gamma,
        } => match order {
            CorrectionOrder::First => one - alpha0 * ksb_nu1(*tau0, *gamma, omega),
            _ => {
                let (j1, j2) = lambda_jets(model, -omega);
                one - alpha0 * j1.c[0] + alpha0 * alpha0 * j2.c[0]
            }
        },
        AttenuationModel::Nsw { processes } => nsw_mean_quotient(processes, omega).sqrt(),
    })
}

/// Weight `lambda(omega)` of the corrected fundamental solution.
///
/// Order 1: KSB `1 + alpha0 nu_2` (displayed form), NSW the closed form
/// `(mean (1 + i omega tau~_j)/(1 + i omega tau_j))^2`, thermo-viscous
/// `(1 + i a omega)^-2`. Order 2: `1 + a beta_1 + a^2 beta_2` for every law.
pub fn lambda_weight(
    model: &AttenuationModel,
    omega: f64,
    order: CorrectionOrder,
) -> Result<Complex64> {
    model.validate()?;
    let one = Complex64::new(1.0, 0.0);
    match order {
        CorrectionOrder::Zero => Ok(one),
        CorrectionOrder::First => Ok(match model {
            AttenuationModel::ThermoViscous { a } => JetScalar::powf(&(1.0 + I * a * omega), -2.0),
            AttenuationModel::Ksb {
                alpha0,
                tau0,
                gamma,
            } => 1.0 + alpha0 * ksb_nu2(*tau0, *gamma, omega),
            AttenuationModel::Nsw { processes } => {
                let q = nsw_mean_quotient(processes, omega);
                q * q
            }
        }),
        CorrectionOrder::Second => {
            let a = model.strength();
            let c = correction_coefficients(model, omega)?;
            Ok(one + a * c.beta1 + a * a * c.beta2)
        }
    }
}

/// Stability threshold for the cutoff `rho` given the domain diameter.
///
/// KSB: `tau0^((g-1)/(3-g)) / (alpha0 diam sin((g-1) pi/4))^(2/(3-g))`.
/// NSW: `sqrt(N / (diam sum_j (tau_j - tau~_j)))`.
pub fn rho_threshold(model: &AttenuationModel, diameter: f64) -> Result<RhoThreshold> {
    model.validate()?;
    if !(diameter.is_finite() && diameter > 0.0) {
        return Err(PatError::Parameter(format!(
            "domain diameter {diameter} must be positive"
        )));
    }
    match model {
        AttenuationModel::ThermoViscous { .. } => Err(PatError::Capability(
            "no stability threshold is available for the thermo-viscous law; supply rho explicitly"
                .into(),
        )),
        AttenuationModel::Ksb {
            alpha0,
            tau0,
            gamma,
        } => {
            if *alpha0 == 0.0 {
                return Ok(RhoThreshold::Unbounded);
            }
            // sin^2((g-1) pi/4) through the half-angle form keeps g = 2 exact.
            let s2 = 0.5 * (1.0 - ((gamma - 1.0) * PI / 2.0).cos());
            let p = 1.0 / (3.0 - gamma);
            let value =
                tau0.powf((gamma - 1.0) * p) * (alpha0 * diameter).powf(-2.0 * p) * s2.powf(-p);
            Ok(RhoThreshold::Finite(value))
        }
        AttenuationModel::Nsw { processes } => {
            let excess: f64 = processes.iter().map(|p| p.tau - p.tau_tilde).sum();
            if excess <= 0.0 {
                return Ok(RhoThreshold::Unbounded);
            }
            let n = processes.len() as f64;
            Ok(RhoThreshold::Finite((n / (diameter * excess)).sqrt()))
        }
    }
}

/// Fastest propagation speed `lim omega / Re kappa(omega)` as `omega -> inf`.
pub fn front_speed(model: &AttenuationModel) -> Option<f64> {
    match model {
        AttenuationModel::ThermoViscous { a } => {
            if *a == 0.0 {
                Some(1.0)
            } else {
                None
            }
        }
        AttenuationModel::Ksb { .. } => Some(1.0),
        AttenuationModel::Nsw { processes } => {
            let mean: f64 = processes
                .iter()
                .map(|p| {
                    if p.tau > 0.0 {
                        p.tau_tilde / p.tau
                    } else {
                        1.0
                    }
                })
                .sum::<f64>()
                / processes.len() as f64;
            Some(1.0 / mean.sqrt())
        }
    }
}

/// Characteristic relaxation time, used for the default final time.
pub fn time_constant(model: &AttenuationModel) -> f64 {
    match model {
        AttenuationModel::ThermoViscous { a } => *a,
        AttenuationModel::Ksb { alpha0, tau0, .. } => {
            if *alpha0 == 0.0 {
                0.0
            } else {
                *tau0
            }
        }
        AttenuationModel::Nsw { .. } => model.strength(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_close(a: Complex64, b: Complex64, tol: f64) {
        assert!(
            (a - b).norm() <= tol * (1.0 + b.norm()),
            "{a} vs {b} (tol {tol})"
        );
    }

    #[test]
    fn kappa_examples() {
        let ksb = AttenuationModel::ksb(0.1, 1.0, 2.0).unwrap();
        assert_eq!(kappa(&ksb, 0.0).unwrap(), c(0.0, 0.0));
        // 30-digit reference evaluation of omega (1 + alpha0 / sqrt(1 - i)).
        assert_close(
            kappa(&ksb, 1.0).unwrap(),
            c(1.077_688_698_701_501_9, 0.032_179_712_645_279_13),
            1e-15,
        );
        let nsw = AttenuationModel::nsw(0.2, 0.1).unwrap();
        assert_close(
            kappa(&nsw, 1.0).unwrap(),
            c(0.991_524_234_067_446_7, 0.048_487_895_126_578_15),
            1e-15,
        );
    }

    #[test]
    fn zero_attenuation_collapses() {
        let models = [
            AttenuationModel::ksb(0.0, 1.0, 1.5).unwrap(),
            AttenuationModel::nsw(0.0, 0.0).unwrap(),
            AttenuationModel::nsw(0.3, 0.3).unwrap(),
            AttenuationModel::thermo_viscous(0.0).unwrap(),
        ];
        for m in &models {
            for &w in &[-3.0, -0.2, 0.0, 0.7, 12.0] {
                assert_close(kappa(m, w).unwrap(), c(w, 0.0), 1e-15);
                for k in 0..3 {
                    let order = CorrectionOrder::try_from(k).unwrap();
                    assert_close(kappa_tilde(m, w, order).unwrap(), c(w, 0.0), 1e-15);
                    assert_close(lambda_weight(m, w, order).unwrap(), c(1.0, 0.0), 1e-15);
                }
            }
        }
    }

    #[test]
    fn kappa_tilde_examples() {
        let ksb = AttenuationModel::ksb(0.1, 1.0, 2.0).unwrap();
        let nu1 = -JetScalar::powf(&c(1.0, 1.0), -0.5);
        assert_close(ksb_nu1(1.0, 2.0, 1.0), nu1, 1e-15);
        assert_close(
            kappa_tilde(&ksb, 1.0, CorrectionOrder::First).unwrap(),
            1.0 - 0.1 * nu1,
            1e-15,
        );
        assert_eq!(
            kappa_tilde(&ksb, 1.7, CorrectionOrder::Zero).unwrap(),
            c(1.7, 0.0)
        );
        let nsw = AttenuationModel::nsw(0.2, 0.1).unwrap();
        assert_close(
            kappa_tilde(&nsw, 1.0, CorrectionOrder::First).unwrap(),
            kappa(&nsw, 1.0).unwrap().conj(),
            1e-15,
        );
    }

    #[test]
    fn lambda_weight_examples() {
        let ksb = AttenuationModel::ksb(0.04, 1.0, 1.3).unwrap();
        assert_close(
            lambda_weight(&ksb, 0.0, CorrectionOrder::First).unwrap(),
            c(1.0 + 3.0 * 0.04, 0.0),
            1e-15,
        );
        let nsw = AttenuationModel::nsw(0.2, 0.1).unwrap();
        // ((1 + 0.1i)/(1 + 0.2i))^2 evaluated at 30 digits.
        assert_close(
            lambda_weight(&nsw, 1.0, CorrectionOrder::First).unwrap(),
            c(0.952_662_721_893_491_1, -0.188_609_467_455_621_3),
            1e-15,
        );
    }

    #[test]
    fn order_above_two_is_rejected() {
        assert!(matches!(
            CorrectionOrder::try_from(3),
            Err(PatError::Capability(_))
        ));
    }

    #[test]
    fn lambda1_examples() {
        let ksb = AttenuationModel::ksb(0.3, 1.0, 2.0).unwrap();
        assert_close(lambda1(&ksb, c(0.0, 0.0)), c(-1.0, 0.0), 0.0);
        assert_close(
            lambda1(&ksb, c(1.0, 0.0)),
            -JetScalar::powf(&c(1.0, -1.0), -0.5),
            1e-15,
        );
        // a lambda_1 = -i omega (tau - tau~) / 2 whatever the normalization of a.
        let nsw = AttenuationModel::nsw(0.02, 0.01).unwrap();
        let a = nsw.strength();
        assert_close(a * lambda1(&nsw, c(1.0, 0.0)), c(0.0, -0.005), 1e-15);
    }

    #[test]
    fn closed_form_lambda1_matches_series_expansion() {
        let models = [
            AttenuationModel::ksb(0.05, 0.7, 1.4).unwrap(),
            AttenuationModel::ksb(0.05, 1.0, 2.0).unwrap(),
            AttenuationModel::nsw(0.02, 0.01).unwrap(),
            AttenuationModel::nsw_multi(vec![
                Relaxation {
                    tau: 0.03,
                    tau_tilde: 0.01,
                },
                Relaxation {
                    tau: 0.02,
                    tau_tilde: 0.015,
                },
            ])
            .unwrap(),
            AttenuationModel::thermo_viscous(0.01).unwrap(),
        ];
        for m in &models {
            for &w in &[-4.0, -0.3, 0.5, 1.0, 7.5] {
                let (j1, _) = lambda_jets(m, w);
                let closed = lambda1(m, Jet::variable(c(w, 0.0)));
                for k in 0..3 {
                    assert_close(j1.derivative(k), closed.derivative(k), 1e-13);
                }
            }
        }
    }

    #[test]
    fn ksb_has_no_second_order_term() {
        let m = AttenuationModel::ksb(0.05, 1.0, 1.5).unwrap();
        for &w in &[0.1, 1.0, 3.0] {
            let (_, j2) = lambda_jets(&m, w);
            assert!(j2.c.iter().all(|z| z.norm() < 1e-15));
        }
    }

    #[test]
    fn coefficients_at_zero_frequency_ksb() {
        for &g in &[1.2, 1.5, 2.0] {
            let m = AttenuationModel::ksb(0.01, 1.0, g).unwrap();
            let e = correction_coefficients(&m, 0.0).unwrap();
            assert_close(e.gamma1, c(2.0, 0.0), 1e-15);
            assert_close(e.beta1, c(3.0, 0.0), 1e-15);
            assert_close(e.nu1, c(-1.0, 0.0), 1e-15);
            // Limit of the second-order condition at omega = 0.
            assert_close(e.gamma2, c(1.0, 0.0), 1e-15);
            assert_close(e.beta2, c(3.0, 0.0), 1e-15);
        }
    }

    #[test]
    fn ksb_displayed_nu_match_conditions() {
        for &g in &[1.1, 1.5, 1.9, 2.0] {
            for &tau0 in &[0.5, 1.0, 2.0] {
                let m = AttenuationModel::ksb(0.02, tau0, g).unwrap();
                for &w in &[-5.0, -0.4, 0.3, 1.0, 9.0] {
                    let e = correction_coefficients(&m, w).unwrap();
                    assert_close(e.nu1, ksb_nu1(tau0, g, w), 1e-14);
                    assert_close(e.nu2, ksb_nu2(tau0, g, w), 1e-13);
                }
            }
        }
    }

    #[test]
    fn nsw_nu2_matches_closed_form() {
        // a nu_1 = i omega (tau - tau~) / 2 and a nu_2 = -2 i omega (tau - tau~).
        let m = AttenuationModel::nsw(0.2, 0.1).unwrap();
        let a = m.strength();
        for &w in &[-2.0, 0.5, 1.0, 3.0] {
            let e = correction_coefficients(&m, w).unwrap();
            assert_close(a * e.nu2, c(0.0, -2.0 * w * 0.1), 1e-14);
            assert_close(a * e.nu1, c(0.0, 0.5 * w * 0.1), 1e-14);
        }
    }

    #[test]
    fn threshold_examples() {
        let ksb = AttenuationModel::ksb(0.01, 1.0, 2.0).unwrap();
        let r = rho_threshold(&ksb, 2.0).unwrap().value();
        assert_eq!(r, 5000.0);
        let nsw = AttenuationModel::nsw(0.02, 0.01).unwrap();
        let r = rho_threshold(&nsw, 2.0).unwrap().value();
        assert!((r - 7.071_067_811_865_475).abs() < 1e-12);
        let free = AttenuationModel::nsw(0.02, 0.02).unwrap();
        assert_eq!(rho_threshold(&free, 2.0).unwrap(), RhoThreshold::Unbounded);
        let tv = AttenuationModel::thermo_viscous(0.01).unwrap();
        assert!(matches!(
            rho_threshold(&tv, 2.0),
            Err(PatError::Capability(_))
        ));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(AttenuationModel::ksb(0.01, 1.0, 2.5).is_err());
        assert!(AttenuationModel::ksb(0.01, 1.0, 1.0).is_err());
        assert!(AttenuationModel::ksb(-0.01, 1.0, 1.5).is_err());
        assert!(AttenuationModel::ksb(0.01, 0.0, 1.5).is_err());
        assert!(AttenuationModel::nsw(0.01, 0.02).is_err());
        assert!(AttenuationModel::nsw_multi(vec![]).is_err());
        assert!(AttenuationModel::thermo_viscous(-1.0).is_err());
    }

    #[test]
    fn thermo_viscous_damps_forward_and_grows_backward() {
        let m = AttenuationModel::thermo_viscous(0.05).unwrap();
        for &w in &[0.5, 4.0, 30.0] {
            assert!(kappa(&m, w).unwrap().im > 0.0);
            assert!(kappa_tilde(&m, w, CorrectionOrder::First).unwrap().im < 0.0);
        }
    }
}
