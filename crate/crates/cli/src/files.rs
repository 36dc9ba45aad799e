//! CSV persistence with `# key = value` headers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use causal_pat::forward::{DataSet, SensorArray, Vec3};
use causal_pat::reversal::ImagingResult;
use causal_pat::AttenuationModel;

use crate::config::{model_header, PhantomSpec, RunConfig};
use crate::error::{CliError, CliResult};

pub const TOOL: &str = concat!("causal-pat ", env!("CARGO_PKG_VERSION"));

/// Ordered header lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header(pub Vec<(String, String)>);

impl Header {
    /// Tool version, configuration hash, seed and model parameters.
    pub fn for_run(cfg: &RunConfig, kind: &str) -> Header {
        let mut h = Header::default();
        h.push("tool", TOOL);
        h.push("kind", kind);
        h.push("config_sha256", &cfg.hash);
        h.push("seed", cfg.seed);
        h.0.extend(cfg.model_header());
        h
    }

    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.0.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn write(&self, out: &mut String) {
        for (k, v) in &self.0 {
            let _ = writeln!(out, "# {k} = {v}");
        }
    }

    fn model_lines(&self) -> Vec<(String, String)> {
        const MODEL_KEYS: [&str; 7] = ["model", "a", "alpha0", "tau0", "gamma", "tau", "tau_tilde"];
        self.0
            .iter()
            .filter(|(k, _)| MODEL_KEYS.contains(&k.as_str()))
            .cloned()
            .collect()
    }
}

fn vec3(v: Vec3) -> String {
    format!("{}, {}, {}", v[0], v[1], v[2])
}

fn phantom_header(h: &mut Header, phantom: &PhantomSpec) {
    match *phantom {
        PhantomSpec::Ball {
            center,
            radius,
            amplitude,
        } => {
            h.push("phantom", "ball");
            h.push("phantom_center", vec3(center));
            h.push("phantom_radius", radius);
            h.push("phantom_amplitude", amplitude);
        }
        PhantomSpec::Gaussian {
            center,
            sigma,
            amplitude,
        } => {
            h.push("phantom", "gaussian");
            h.push("phantom_center", vec3(center));
            h.push("phantom_sigma", sigma);
            h.push("phantom_amplitude", amplitude);
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_dataset(path: &Path, cfg: &RunConfig, data: &DataSet) -> CliResult<()> {
    let mut h = Header::for_run(cfg, "dataset");
    phantom_header(&mut h, &cfg.phantom);
    h.push("data_rho", data.rho);
    h.push("dt", data.dt);
    h.push("samples", data.samples_per_trace());
    h.push("sensor_radius", data.sensors.radius);
    h.push("sensor_count", data.sensors.len());
    h.push("sensor_weight", data.sensors.weights[0]);

    let mut out = String::new();
    h.write(&mut out);
    out.push_str("sensor_index,x,y,z,t,value\n");
    for (m, (y, trace)) in data.sensors.points.iter().zip(&data.traces).enumerate() {
        for (k, v) in trace.iter().enumerate() {
            let t = k as f64 * data.dt;
            let _ = writeln!(
                out,
                "{m},{:.16e},{:.16e},{:.16e},{t:.16e},{v:.16e}",
                y[0], y[1], y[2]
            );
        }
    }
    write_file(path, &out)
}

pub fn write_image(
    path: &Path,
    cfg: &RunConfig,
    result: &ImagingResult,
    error: Option<f64>,
) -> CliResult<()> {
    let mut h = Header::for_run(cfg, "image");
    phantom_header(&mut h, &cfg.phantom);
    h.push("rho", result.rho);
    h.push("order", result.order.as_u32());
    if let Some(e) = error {
        h.push("rel_l2_error", format!("{e:.16e}"));
    }
    let mut out = String::new();
    h.write(&mut out);
    out.push_str("px,py,pz,value\n");
    for (p, v) in result.points.iter().zip(&result.values) {
        let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{v:.16e}", p[0], p[1], p[2]);
    }
    write_file(path, &out)
}

pub fn write_sweep(path: &Path, cfg: &RunConfig, order: u32, rows: &[(f64, f64)]) -> CliResult<()> {
    let mut h = Header::for_run(cfg, "sweep");
    phantom_header(&mut h, &cfg.phantom);
    h.push("order", order);
    let mut out = String::new();
    h.write(&mut out);
    out.push_str("rho,rel_l2_error\n");
    for (rho, e) in rows {
        let _ = writeln!(out, "{rho:.16e},{e:.16e}");
    }
    write_file(path, &out)
}

/// Header and data rows of a CSV file written by this tool.
pub struct Table {
    pub header: Header,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |message: String| CliError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut header = Header::default();
    let mut columns = None;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: header without `=`", i + 1)))?;
            header.push(k.trim(), v.trim());
        } else if columns.is_none() {
            columns = Some(
                line.split(',')
                    .map(|s| s.trim().to_string())
                    .collect::<Vec<_>>(),
            );
        } else {
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad(format!("line {}: non-numeric field", i + 1)))?;
            rows.push(row);
        }
    }
    let columns = columns.ok_or_else(|| bad("no column line".into()))?;
    if let Some((i, r)) = rows
        .iter()
        .enumerate()
        .find(|(_, r)| r.len() != columns.len())
    {
        return Err(bad(format!(
            "row {} has {} fields, expected {}",
            i + 1,
            r.len(),
            columns.len()
        )));
    }
    Ok(Table {
        header,
        columns,
        rows,
    })
}

fn header_f64(path: &Path, h: &Header, key: &str) -> CliResult<f64> {
    h.get(key)
        .and_then(|v| v.parse::<f64>().ok())
        .ok_or_else(|| CliError::Format {
            path: path.to_path_buf(),
            message: format!("header `{key}` missing or not a number"),
        })
}

fn header_vec3(path: &Path, h: &Header, key: &str) -> CliResult<Vec3> {
    let v: Vec<f64> = h
        .get(key)
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect())
        .unwrap_or_default();
    if v.len() != 3 {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: format!("header `{key}` must hold three numbers"),
        });
    }
    Ok([v[0], v[1], v[2]])
}

fn read_phantom(path: &Path, h: &Header) -> CliResult<Option<PhantomSpec>> {
    let center = || header_vec3(path, h, "phantom_center");
    let amplitude = || header_f64(path, h, "phantom_amplitude");
    Ok(match h.get("phantom") {
        Some("ball") => Some(PhantomSpec::Ball {
            center: center()?,
            radius: header_f64(path, h, "phantom_radius")?,
            amplitude: amplitude()?,
        }),
        Some("gaussian") => Some(PhantomSpec::Gaussian {
            center: center()?,
            sigma: header_f64(path, h, "phantom_sigma")?,
            amplitude: amplitude()?,
        }),
        _ => None,
    })
}

/// A dataset file with the attenuation model of the run attached.
pub struct LoadedDataSet {
    pub data: DataSet,
    pub phantom: Option<PhantomSpec>,
    /// The file header records a different model.
    pub model_mismatch: bool,
}

pub fn read_dataset(path: &Path, model: &AttenuationModel) -> CliResult<LoadedDataSet> {
    let table = read_table(path)?;
    let bad = |message: String| CliError::Format {
        path: path.to_path_buf(),
        message,
    };
    let expected = ["sensor_index", "x", "y", "z", "t", "value"];
    if table.columns != expected {
        return Err(bad(format!("expected columns {}", expected.join(","))));
    }
    let h = &table.header;
    if h.get("kind") != Some("dataset") {
        return Err(bad("not a dataset file".into()));
    }
    let rho = header_f64(path, h, "data_rho")?;
    let dt = header_f64(path, h, "dt")?;
    let samples = header_f64(path, h, "samples")? as usize;
    let radius = header_f64(path, h, "sensor_radius")?;
    let count = header_f64(path, h, "sensor_count")? as usize;
    let weight = header_f64(path, h, "sensor_weight")?;
    if samples == 0 || table.rows.len() != samples * count {
        return Err(bad(format!(
            "{} rows, expected {count} sensors x {samples} samples",
            table.rows.len()
        )));
    }
    let mut points = Vec::with_capacity(count);
    let mut traces = Vec::with_capacity(count);
    for (m, block) in table.rows.chunks(samples).enumerate() {
        if block.iter().any(|r| r[0] != m as f64) {
            return Err(bad(format!("rows of sensor {m} are not contiguous")));
        }
        points.push([block[0][1], block[0][2], block[0][3]]);
        traces.push(block.iter().map(|r| r[5]).collect());
    }
    let sensors = SensorArray::from_points(radius, points, vec![weight; count])
        .map_err(|e| bad(e.to_string()))?;
    let phantom = read_phantom(path, h)?;
    let model_mismatch = h.model_lines() != model_header(model);
    let built = match &phantom {
        Some(p) => Some(p.build().map_err(|e| bad(e.to_string()))?),
        None => None,
    };
    Ok(LoadedDataSet {
        data: DataSet {
            sensors,
            model: model.clone(),
            phantom: built,
            rho,
            dt,
            traces,
        },
        phantom,
        model_mismatch,
    })
}
