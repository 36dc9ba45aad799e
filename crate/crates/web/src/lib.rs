//! Browser bindings for the interactive demo page in `www/`.
//!
//! Models are passed as a kind string (`ksb`, `nsw`, `thermo_viscous`,
//! `lossless`) plus three numbers whose meaning depends on the kind:
//! `(alpha0, tau0, gamma)`, `(tau, tau_tilde, -)` or `(a, -, -)`.

use causal_pat::dispersion::{kappa, kappa_tilde, rho_threshold};
use causal_pat::forward::{synthesize_dataset, Phantom, SensorArray};
use causal_pat::spectral::{composition_residual as residual, FrequencyGrid, TimeSignal};
use causal_pat::{AttenuationModel, CorrectionOrder};
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn model(kind: &str, p1: f64, p2: f64, p3: f64) -> Result<AttenuationModel, JsValue> {
    match kind {
        "ksb" => AttenuationModel::ksb(p1, p2, p3),
        "nsw" => AttenuationModel::nsw(p1, p2),
        "thermo_viscous" => AttenuationModel::thermo_viscous(p1),
        "lossless" => Ok(AttenuationModel::lossless()),
        other => return Err(js_err(format!("unknown model `{other}`"))),
    }
    .map_err(js_err)
}

fn order(k: u32) -> Result<CorrectionOrder, JsValue> {
    CorrectionOrder::try_from(k).map_err(js_err)
}

/// Rows `[omega, Re kappa, Im kappa, Re kappa~, Im kappa~]` for `n` frequencies
/// on `(0, omega_max]`, flattened.
#[wasm_bindgen]
pub fn dispersion_curves(
    kind: &str,
    p1: f64,
    p2: f64,
    p3: f64,
    correction: u32,
    omega_max: f64,
    n: usize,
) -> Result<Vec<f64>, JsValue> {
    let m = model(kind, p1, p2, p3)?;
    let o = order(correction)?;
    let mut out = Vec::with_capacity(5 * n);
    for k in 1..=n {
        let w = omega_max * k as f64 / n as f64;
        let kf = kappa(&m, w).map_err(js_err)?;
        let kt = kappa_tilde(&m, w, o).map_err(js_err)?;
        out.extend_from_slice(&[w, kf.re, kf.im, kt.re, kt.im]);
    }
    Ok(out)
}

/// Pressure trace of a ball of radius `radius` at the origin, observed at
/// `distance`: `[t..., lossless..., attenuated...]` on `n` samples of `[0, t_end]`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn attenuated_trace(
    kind: &str,
    p1: f64,
    p2: f64,
    p3: f64,
    radius: f64,
    distance: f64,
    rho: f64,
    t_end: f64,
    n: usize,
) -> Result<Vec<f64>, JsValue> {
    let m = model(kind, p1, p2, p3)?;
    if n < 2 {
        return Err(js_err("need at least two samples"));
    }
    let phantom = Phantom::ball([0.0; 3], radius, 1.0).map_err(js_err)?;
    let sensors = SensorArray::from_points(distance, vec![[0.0, 0.0, distance]], vec![1.0])
        .map_err(js_err)?;
    let grid = FrequencyGrid::new(rho, 1024).map_err(js_err)?;
    let dt = t_end / (n - 1) as f64;
    let free = synthesize_dataset(
        &phantom,
        &sensors,
        &AttenuationModel::lossless(),
        &grid,
        dt,
        t_end,
    )
    .map_err(js_err)?;
    let lossy = synthesize_dataset(&phantom, &sensors, &m, &grid, dt, t_end).map_err(js_err)?;
    let len = free.traces[0].len();
    let mut out: Vec<f64> = (0..len).map(|k| k as f64 * dt).collect();
    out.extend_from_slice(&free.traces[0]);
    out.extend_from_slice(&lossy.traces[0]);
    Ok(out)
}

/// Relative residual of the corrected composition identity on a Gaussian
/// pulse, for each strength in `alphas`.
#[wasm_bindgen]
pub fn composition_residuals(
    kind: &str,
    p1: f64,
    p2: f64,
    p3: f64,
    correction: u32,
    alphas: Vec<f64>,
) -> Result<Vec<f64>, JsValue> {
    let m = model(kind, p1, p2, p3)?;
    let o = order(correction)?;
    let window = if matches!(m, AttenuationModel::Ksb { .. }) {
        20.0
    } else {
        3.0
    };
    let n = 1025;
    let phi = TimeSignal::from_fn(0.0, window / (n - 1) as f64, n, |t| {
        (-(t - 1.5f64).powi(2) / (2.0 * 0.04)).exp()
    });
    let grid = FrequencyGrid::new(40.0, 512).map_err(js_err)?;
    alphas
        .iter()
        .map(|&a| residual(&m.with_strength(a), &phi, &grid, o).map_err(js_err))
        .collect()
}

/// Stability threshold of the cutoff for a domain of the given diameter;
/// `Infinity` when unbounded.
#[wasm_bindgen]
pub fn stability_threshold(
    kind: &str,
    p1: f64,
    p2: f64,
    p3: f64,
    diameter: f64,
) -> Result<f64, JsValue> {
    let m = model(kind, p1, p2, p3)?;
    rho_threshold(&m, diameter)
        .map(|t| t.value())
        .map_err(js_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_have_five_columns() {
        let v = dispersion_curves("ksb", 0.01, 1.0, 2.0, 1, 10.0, 4).unwrap();
        assert_eq!(v.len(), 20);
        assert_eq!(v[15], 10.0);
        // Forward waves are damped, the corrected ones amplified.
        assert!(v[17] > 0.0 && v[19] < 0.0);
    }

    #[test]
    fn attenuation_lowers_the_trace() {
        let v = attenuated_trace("ksb", 0.05, 1.0, 2.0, 0.3, 1.5, 40.0, 12.0, 241).unwrap();
        let n = v.len() / 3;
        let peak = |s: &[f64]| s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(peak(&v[2 * n..]) < peak(&v[n..2 * n]));
    }

    #[test]
    fn residual_drops_with_order() {
        let r0 = composition_residuals("nsw", 0.02, 0.01, 0.0, 0, vec![0.01]).unwrap()[0];
        let r1 = composition_residuals("nsw", 0.02, 0.01, 0.0, 1, vec![0.01]).unwrap()[0];
        assert!(r1 < 0.1 * r0);
    }

    #[test]
    fn threshold_value() {
        assert_eq!(
            stability_threshold("ksb", 0.01, 1.0, 2.0, 2.0).unwrap(),
            5000.0
        );
    }
}
