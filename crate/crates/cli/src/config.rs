//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use causal_pat::dispersion::rho_threshold;
use causal_pat::forward::{default_dt, default_final_time, norm, Phantom, SensorArray, Vec3};
use causal_pat::reversal::{line_profile, volume_grid};
use causal_pat::{AttenuationModel, CorrectionOrder, Relaxation};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

const KEYS: &[&str] = &[
    "model",
    "alpha0",
    "tau0",
    "gamma",
    "a",
    "tau",
    "tau_tilde",
    "phantom",
    "phantom_center",
    "phantom_radius",
    "phantom_sigma",
    "phantom_amplitude",
    "sensors",
    "sensor_radius",
    "data_rho",
    "data_steps",
    "dt",
    "final_time",
    "rho",
    "order",
    "frequency_steps",
    "profile",
    "profile_center",
    "profile_direction",
    "profile_half_length",
    "profile_points",
    "sweep_rhos",
    "diameter",
    "dataset",
    "seed",
    "identity_sigma",
    "identity_center",
    "identity_window",
    "identity_samples",
    "identity_rho",
    "identity_steps",
];

/// Which phantom the run uses, as written in file headers.
#[derive(Debug, Clone, PartialEq)]
pub enum PhantomSpec {
    Ball {
        center: Vec3,
        radius: f64,
        amplitude: f64,
    },
    Gaussian {
        center: Vec3,
        sigma: f64,
        amplitude: f64,
    },
}

impl PhantomSpec {
    pub fn build(&self) -> causal_pat::Result<Phantom> {
        match *self {
            PhantomSpec::Ball {
                center,
                radius,
                amplitude,
            } => Phantom::ball(center, radius, amplitude),
            PhantomSpec::Gaussian {
                center,
                sigma,
                amplitude,
            } => Phantom::gaussian(center, sigma, amplitude),
        }
    }

    pub fn center(&self) -> Vec3 {
        match *self {
            PhantomSpec::Ball { center, .. } | PhantomSpec::Gaussian { center, .. } => center,
        }
    }
}

/// Settings of the composition-identity check.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityConfig {
    pub sigma: f64,
    pub center: f64,
    pub window: f64,
    pub samples: usize,
    pub rho: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub path: PathBuf,
    /// Hex SHA-256 of the configuration file bytes.
    pub hash: String,
    pub model: AttenuationModel,
    pub phantom: PhantomSpec,
    pub sensors: SensorArray,
    pub data_rho: f64,
    pub data_steps: usize,
    pub dt: f64,
    pub final_time: f64,
    rho: Option<f64>,
    rho_line: Option<usize>,
    order: Option<CorrectionOrder>,
    pub frequency_steps: Option<usize>,
    pub points: Vec<Vec3>,
    pub sweep_rhos: Vec<f64>,
    pub diameter: f64,
    pub dataset: Option<PathBuf>,
    pub seed: u64,
    pub identity: IdentityConfig,
}

impl RunConfig {
    /// Correction order; defaults to first order for attenuating models.
    pub fn order(&self) -> CorrectionOrder {
        self.order.unwrap_or(if self.model.is_lossless() {
            CorrectionOrder::Zero
        } else {
            CorrectionOrder::First
        })
    }

    pub fn explicit_order(&self) -> Option<CorrectionOrder> {
        self.order
    }

    /// Imaging cutoff: the configured `rho`, otherwise the stability
    /// threshold capped at half the data cutoff.
    pub fn rho(&self) -> f64 {
        if let Some(r) = self.rho {
            return r;
        }
        let cap = 0.5 * self.data_rho;
        match rho_threshold(&self.model, self.diameter) {
            Ok(t) => t.value().min(cap),
            Err(_) => cap,
        }
    }

    /// Rejects a configured `rho` above the stability threshold.
    pub fn check_rho(&self, allow_above: bool) -> CliResult<()> {
        let (Some(rho), Some(line)) = (self.rho, self.rho_line) else {
            return Ok(());
        };
        if allow_above || self.order() == CorrectionOrder::Zero {
            return Ok(());
        }
        if let Ok(t) = rho_threshold(&self.model, self.diameter) {
            if rho > t.value() {
                return Err(CliError::ConfigLine {
                    path: self.path.clone(),
                    line,
                    message: format!(
                        "rho = {rho} is above the stability threshold {} for diameter {}; pass --override-rho to proceed",
                        t.value(),
                        self.diameter
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn with_rho(&self, rho: f64) -> RunConfig {
        RunConfig {
            rho: Some(rho),
            rho_line: None,
            ..self.clone()
        }
    }

    /// `key = value` pairs describing the attenuation model.
    pub fn model_header(&self) -> Vec<(String, String)> {
        model_header(&self.model)
    }
}

pub fn model_header(model: &AttenuationModel) -> Vec<(String, String)> {
    let list = |v: Vec<f64>| {
        v.iter()
            .map(|x| format!("{x}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    match model {
        m if m.is_lossless() && !matches!(m, AttenuationModel::Nsw { .. }) => {
            vec![("model".into(), "lossless".into())]
        }
        AttenuationModel::ThermoViscous { a } => vec![
            ("model".into(), "thermo_viscous".into()),
            ("a".into(), format!("{a}")),
        ],
        AttenuationModel::Ksb {
            alpha0,
            tau0,
            gamma,
        } => vec![
            ("model".into(), "ksb".into()),
            ("alpha0".into(), format!("{alpha0}")),
            ("tau0".into(), format!("{tau0}")),
            ("gamma".into(), format!("{gamma}")),
        ],
        AttenuationModel::Nsw { processes } => vec![
            ("model".into(), "nsw".into()),
            (
                "tau".into(),
                list(processes.iter().map(|p| p.tau).collect()),
            ),
            (
                "tau_tilde".into(),
                list(processes.iter().map(|p| p.tau_tilde).collect()),
            ),
        ],
    }
}

struct Entry {
    value: String,
    line: usize,
}

struct Entries<'a> {
    path: &'a Path,
    map: BTreeMap<String, Entry>,
}

impl Entries<'_> {
    fn err(&self, line: usize, message: String) -> CliError {
        CliError::ConfigLine {
            path: self.path.to_path_buf(),
            line,
            message,
        }
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|e| e.line)
    }

    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.map.get(key).map(|e| (e.value.as_str(), e.line))
    }

    fn require(&self, key: &str, why: &str) -> CliResult<(&str, usize)> {
        self.raw(key).ok_or_else(|| CliError::Config {
            path: self.path.to_path_buf(),
            message: format!("missing required key `{key}` ({why})"),
        })
    }

    fn parse_f64(&self, key: &str, text: &str, line: usize) -> CliResult<f64> {
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                self.err(
                    line,
                    format!("`{key}` expects a finite number, got `{text}`"),
                )
            })
    }

    fn f64(&self, key: &str) -> CliResult<Option<(f64, usize)>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => Ok(Some((self.parse_f64(key, v, line)?, line))),
        }
    }

    fn list(&self, key: &str) -> CliResult<Option<(Vec<f64>, usize)>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => {
                let items = v
                    .split(',')
                    .map(|s| self.parse_f64(key, s.trim(), line))
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(Some((items, line)))
            }
        }
    }

    fn usize(&self, key: &str) -> CliResult<Option<(usize, usize)>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<usize>().map(|n| Some((n, line))).map_err(|_| {
                self.err(
                    line,
                    format!("`{key}` expects a non-negative integer, got `{v}`"),
                )
            }),
        }
    }

    /// Value that must satisfy `ok`, with `range` quoted in the error.
    fn ranged(
        &self,
        key: &str,
        default: f64,
        ok: impl Fn(f64) -> bool,
        range: &str,
    ) -> CliResult<f64> {
        match self.f64(key)? {
            None => Ok(default),
            Some((v, _)) if ok(v) => Ok(v),
            Some((v, line)) => Err(self.err(
                line,
                format!("{key} = {v} is out of range: must lie in {range}"),
            )),
        }
    }

    fn count(&self, key: &str, default: usize, min: usize) -> CliResult<usize> {
        match self.usize(key)? {
            None => Ok(default),
            Some((n, _)) if n >= min => Ok(n),
            Some((n, line)) => Err(self.err(
                line,
                format!("{key} = {n} is out of range: must be >= {min}"),
            )),
        }
    }

    fn vec3(&self, key: &str, default: Vec3) -> CliResult<Vec3> {
        match self.list(key)? {
            None => Ok(default),
            Some((v, _)) if v.len() == 3 => Ok([v[0], v[1], v[2]]),
            Some((v, line)) => Err(self.err(
                line,
                format!(
                    "`{key}` expects three comma-separated numbers, got {}",
                    v.len()
                ),
            )),
        }
    }

    /// Rejects keys that belong to another model or phantom kind.
    fn forbid(&self, keys: &[&str], owner: &str) -> CliResult<()> {
        for k in keys {
            if let Some(line) = self.line(k) {
                return Err(self.err(line, format!("key `{k}` does not apply to {owner}")));
            }
        }
        Ok(())
    }
}

fn positive(v: f64) -> bool {
    v > 0.0
}

fn non_negative(v: f64) -> bool {
    v >= 0.0
}

fn read_entries(path: &Path, text: &str) -> CliResult<BTreeMap<String, Entry>> {
    let mut map: BTreeMap<String, Entry> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |message: String| CliError::ConfigLine {
            path: path.to_path_buf(),
            line,
            message,
        };
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{body}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(err(format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(err(format!("key `{key}` has no value")));
        }
        if let Some(first) = map.get(key) {
            return Err(err(format!(
                "duplicate key `{key}` (first set on line {})",
                first.line
            )));
        }
        map.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line,
            },
        );
    }
    Ok(map)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> CliResult<RunConfig> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| CliError::Config {
        path: path.to_path_buf(),
        message: "configuration is not valid UTF-8".into(),
    })?;
    let hash = hex(&Sha256::digest(&bytes));
    let e = Entries {
        path,
        map: read_entries(path, text)?,
    };

    let model = parse_model(&e)?;
    let phantom = parse_phantom(&e)?;

    let sensor_radius = e.ranged("sensor_radius", 2.0, positive, "(0, inf)")?;
    let count = e.count("sensors", 256, 1)?;
    let sensors = SensorArray::fibonacci(count, sensor_radius).map_err(|err| CliError::Config {
        path: path.to_path_buf(),
        message: err.to_string(),
    })?;
    let built = phantom
        .build()
        .map_err(|err| e.err(e.line("phantom").unwrap_or(0), err.to_string()))?;
    let support = built.support_radius();
    if support >= sensor_radius {
        let line = e.line("phantom").or(e.line("sensor_radius")).unwrap_or(0);
        return Err(e.err(
            line,
            format!("phantom support radius {support} must lie strictly inside sensor_radius = {sensor_radius}"),
        ));
    }

    let data_rho = e.ranged("data_rho", 80.0, positive, "(0, inf)")?;
    let data_steps = e.count("data_steps", 1024, 1)?;
    let dt = e.ranged("dt", default_dt(data_rho), positive, "(0, inf)")?;
    let latest = sensor_radius + support;
    let final_time = e.ranged(
        "final_time",
        default_final_time(&model, &sensors, &built),
        |t| t >= latest,
        &format!("[{latest}, inf) (last arrival)"),
    )?;

    let (rho, rho_line) = match e.f64("rho")? {
        None => (None, None),
        Some((r, line)) if r > 0.0 => (Some(r), Some(line)),
        Some((r, line)) => {
            return Err(e.err(
                line,
                format!("rho = {r} is out of range: must lie in (0, inf)"),
            ))
        }
    };
    let order = match e.raw("order") {
        None => None,
        Some((v, line)) => Some(match v {
            "0" => CorrectionOrder::Zero,
            "1" => CorrectionOrder::First,
            "2" => CorrectionOrder::Second,
            _ => {
                return Err(e.err(
                    line,
                    format!("order = {v} is out of range: must be 0, 1 or 2"),
                ))
            }
        }),
    };
    let frequency_steps = match e.usize("frequency_steps")? {
        None => None,
        Some((0, line)) => return Err(e.err(line, "frequency_steps must be >= 1".into())),
        Some((n, _)) => Some(n),
    };

    let points = parse_points(&e, phantom.center(), sensor_radius)?;

    let sweep_rhos = match e.list("sweep_rhos")? {
        None => vec![10.0, 20.0, 40.0],
        Some((v, line)) => {
            if v.iter().any(|r| *r <= 0.0) {
                return Err(e.err(line, "sweep_rhos must all be > 0".into()));
            }
            v
        }
    };
    let diameter = e.ranged("diameter", 2.0 * sensor_radius, positive, "(0, inf)")?;
    let dataset = e.raw("dataset").map(|(v, _)| {
        let p = PathBuf::from(v);
        if p.is_relative() {
            path.parent().unwrap_or(Path::new(".")).join(p)
        } else {
            p
        }
    });
    let seed = match e.raw("seed") {
        None => 0,
        Some((v, line)) => v.parse::<u64>().map_err(|_| {
            e.err(
                line,
                format!("`seed` expects a non-negative integer, got `{v}`"),
            )
        })?,
    };

    let long = matches!(model, AttenuationModel::Ksb { .. });
    let identity = IdentityConfig {
        sigma: e.ranged("identity_sigma", 0.2, positive, "(0, inf)")?,
        center: e.ranged("identity_center", 1.5, non_negative, "[0, inf)")?,
        window: e.ranged(
            "identity_window",
            if long { 20.0 } else { 3.0 },
            positive,
            "(0, inf)",
        )?,
        samples: e.count("identity_samples", if long { 2049 } else { 1025 }, 2)?,
        rho: e.ranged("identity_rho", 40.0, positive, "(0, inf)")?,
        steps: e.count("identity_steps", 512, 1)?,
    };

    Ok(RunConfig {
        path: path.to_path_buf(),
        hash,
        model,
        phantom,
        sensors,
        data_rho,
        data_steps,
        dt,
        final_time,
        rho,
        rho_line,
        order,
        frequency_steps,
        points,
        sweep_rhos,
        diameter,
        dataset,
        seed,
        identity,
    })
}

fn parse_model(e: &Entries) -> CliResult<AttenuationModel> {
    let (name, model_line) = e.require("model", "lossless, thermo_viscous, ksb or nsw")?;
    match name {
        "lossless" => {
            e.forbid(
                &["alpha0", "tau0", "gamma", "a", "tau", "tau_tilde"],
                "model lossless",
            )?;
            Ok(AttenuationModel::lossless())
        }
        "thermo_viscous" => {
            e.forbid(
                &["alpha0", "tau0", "gamma", "tau", "tau_tilde"],
                "model thermo_viscous",
            )?;
            e.require("a", "thermo-viscous strength")?;
            let a = e.ranged("a", 0.0, non_negative, "[0, inf)")?;
            Ok(AttenuationModel::ThermoViscous { a })
        }
        "ksb" => {
            e.forbid(&["a", "tau", "tau_tilde"], "model ksb")?;
            e.require("alpha0", "KSB strength")?;
            let alpha0 = e.ranged("alpha0", 0.0, non_negative, "[0, inf)")?;
            let tau0 = e.ranged("tau0", 1.0, positive, "(0, inf)")?;
            let gamma = e.ranged("gamma", 2.0, |g| g > 1.0 && g <= 2.0, "(1, 2]")?;
            Ok(AttenuationModel::Ksb {
                alpha0,
                tau0,
                gamma,
            })
        }
        "nsw" => {
            e.forbid(&["alpha0", "tau0", "gamma", "a"], "model nsw")?;
            let (tau, tau_line) = e.list("tau")?.ok_or_else(|| CliError::Config {
                path: e.path.to_path_buf(),
                message: "missing required key `tau` (NSW relaxation times)".into(),
            })?;
            let (tau_tilde, tt_line) = e.list("tau_tilde")?.ok_or_else(|| CliError::Config {
                path: e.path.to_path_buf(),
                message: "missing required key `tau_tilde` (NSW relaxation times)".into(),
            })?;
            let line = tau_line.max(tt_line);
            if tau.len() != tau_tilde.len() {
                return Err(e.err(
                    line,
                    format!(
                        "tau has {} entries but tau_tilde has {}",
                        tau.len(),
                        tau_tilde.len()
                    ),
                ));
            }
            let mut processes = Vec::with_capacity(tau.len());
            for (&t, &tt) in tau.iter().zip(&tau_tilde) {
                if t < 0.0 || tt < 0.0 {
                    return Err(e.err(
                        line,
                        format!("relaxation times must be >= 0, got tau = {t}, tau_tilde = {tt}"),
                    ));
                }
                if t < tt {
                    return Err(e.err(
                        line,
                        format!("causality violation: tau = {t} < tau_tilde = {tt} (tau >= tau_tilde required)"),
                    ));
                }
                processes.push(Relaxation {
                    tau: t,
                    tau_tilde: tt,
                });
            }
            Ok(AttenuationModel::Nsw { processes })
        }
        other => Err(e.err(
            model_line,
            format!("unknown model `{other}` (expected lossless, thermo_viscous, ksb or nsw)"),
        )),
    }
}

fn parse_phantom(e: &Entries) -> CliResult<PhantomSpec> {
    let center = e.vec3("phantom_center", [0.0; 3])?;
    let amplitude = e.f64("phantom_amplitude")?.map_or(1.0, |(v, _)| v);
    match e.raw("phantom").map_or(("ball", 0), |r| r) {
        ("ball", _) => {
            e.forbid(&["phantom_sigma"], "a ball phantom")?;
            let radius = e.ranged("phantom_radius", 0.5, positive, "(0, inf)")?;
            Ok(PhantomSpec::Ball {
                center,
                radius,
                amplitude,
            })
        }
        ("gaussian", _) => {
            e.forbid(&["phantom_radius"], "a gaussian phantom")?;
            let sigma = e.ranged("phantom_sigma", 0.1, positive, "(0, inf)")?;
            Ok(PhantomSpec::Gaussian {
                center,
                sigma,
                amplitude,
            })
        }
        (other, line) => Err(e.err(
            line,
            format!("unknown phantom `{other}` (expected ball or gaussian)"),
        )),
    }
}

fn parse_points(e: &Entries, phantom_center: Vec3, radius: f64) -> CliResult<Vec<Vec3>> {
    let center = e.vec3("profile_center", phantom_center)?;
    let half = e.ranged("profile_half_length", 1.0, positive, "(0, inf)")?;
    let kind = e.raw("profile").map_or(("line", 0), |r| r);
    let (points, reach) = match kind {
        ("line", _) => {
            let direction = e.vec3("profile_direction", [1.0, 0.0, 0.0])?;
            if norm(direction) == 0.0 {
                return Err(e.err(
                    e.line("profile_direction").unwrap_or(0),
                    "profile_direction must be non-zero".into(),
                ));
            }
            let n = e.count("profile_points", 64, 2)?;
            (line_profile(center, direction, half, n), half)
        }
        ("volume", _) => {
            e.forbid(&["profile_direction"], "a volume profile")?;
            let n = e.count("profile_points", 16, 1)?;
            (volume_grid(center, half, n), half * 3f64.sqrt())
        }
        (other, line) => {
            return Err(e.err(
                line,
                format!("unknown profile `{other}` (expected line or volume)"),
            ))
        }
    };
    if norm(center) + reach >= radius {
        let line = e
            .line("profile_half_length")
            .or(e.line("profile_center"))
            .unwrap_or(0);
        return Err(e.err(
            line,
            format!(
                "evaluation points reach {} from the origin, outside sensor_radius = {radius}",
                norm(center) + reach
            ),
        ));
    }
    Ok(points)
}
