//! Experiment pipelines behind the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use causal_pat::dispersion::{front_speed, rho_threshold};
use causal_pat::forward::synthesize_dataset;
use causal_pat::reversal::{reconstruct, sweep_rho, ReconstructionConfig};
use causal_pat::spectral::{composition_residual, FrequencyGrid, TimeSignal};
use causal_pat::stats::loglog_slope;
use causal_pat::{CorrectionOrder, RhoThreshold};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult, Context};
use crate::files::{self, LoadedDataSet};

/// Options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub output_dir: PathBuf,
    pub override_rho: Option<f64>,
}

impl RunOptions {
    fn prepare(&self) -> CliResult<()> {
        fs::create_dir_all(&self.output_dir).map_err(|e| CliError::io(&self.output_dir, e))
    }

    fn output(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    /// Applies `--override-rho`.
    fn effective(&self, cfg: &RunConfig) -> CliResult<RunConfig> {
        match self.override_rho {
            Some(r) if r > 0.0 && r.is_finite() => Ok(cfg.with_rho(r)),
            Some(r) => Err(CliError::Config {
                path: cfg.path.clone(),
                message: format!("--override-rho {r} must be > 0"),
            }),
            None => {
                cfg.check_rho(false)?;
                Ok(cfg.clone())
            }
        }
    }

    fn imaging(&self, cfg: &RunConfig) -> ReconstructionConfig {
        ReconstructionConfig {
            rho: cfg.rho(),
            half: cfg.frequency_steps,
            order: cfg.order(),
            points: cfg.points.clone(),
            override_threshold: self.override_rho.is_some(),
        }
    }
}

pub fn run_simulate(cfg: &RunConfig, opts: &RunOptions) -> CliResult<()> {
    opts.prepare()?;
    let phantom = cfg.phantom.build().context("phantom")?;
    let grid = FrequencyGrid::new(cfg.data_rho, cfg.data_steps).context("data grid")?;
    let data = synthesize_dataset(
        &phantom,
        &cfg.sensors,
        &cfg.model,
        &grid,
        cfg.dt,
        cfg.final_time,
    )
    .context("synthesizing data")?;
    let path = opts.output("dataset.csv");
    files::write_dataset(&path, cfg, &data)?;
    println!(
        "wrote {} traces of {} samples (T = {}, dt = {}) to {}",
        data.sensors.len(),
        data.samples_per_trace(),
        data.final_time(),
        data.dt,
        path.display()
    );
    Ok(())
}

fn load(cfg: &RunConfig, opts: &RunOptions) -> CliResult<LoadedDataSet> {
    let path = cfg
        .dataset
        .clone()
        .unwrap_or_else(|| opts.output("dataset.csv"));
    let loaded = files::read_dataset(&path, &cfg.model)?;
    if loaded.model_mismatch {
        log::warn!(
            "{} was synthesized with a different attenuation model; correcting for the configured one",
            path.display()
        );
    }
    Ok(loaded)
}

pub fn run_reconstruct(cfg: &RunConfig, opts: &RunOptions) -> CliResult<()> {
    opts.prepare()?;
    let cfg = opts.effective(cfg)?;
    let loaded = load(&cfg, opts)?;
    let result = reconstruct(&loaded.data, &opts.imaging(&cfg)).context("reconstruction")?;
    let error = loaded
        .data
        .phantom
        .as_ref()
        .map(|p| result.relative_error(p));
    let path = opts.output("image.csv");
    files::write_image(&path, &cfg, &result, error)?;
    print!(
        "reconstructed {} points at rho = {}, order {}",
        result.points.len(),
        result.rho,
        result.order.as_u32()
    );
    match error {
        Some(e) => println!("; relative L2 error {e:.6}"),
        None => println!(),
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn run_sweep(cfg: &RunConfig, opts: &RunOptions) -> CliResult<()> {
    opts.prepare()?;
    let loaded = load(cfg, opts)?;
    if loaded.phantom.is_none() {
        return Err(CliError::Format {
            path: cfg
                .dataset
                .clone()
                .unwrap_or_else(|| opts.output("dataset.csv")),
            message: "a sweep needs the reference phantom in the dataset header".into(),
        });
    }
    let base = opts.imaging(cfg);
    let rows = sweep_rho(&loaded.data, &base, &cfg.sweep_rhos).context("rho sweep")?;
    let path = opts.output("sweep.csv");
    files::write_sweep(&path, cfg, base.order.as_u32(), &rows)?;
    println!("rho, rel_l2_error (order {})", base.order.as_u32());
    for (rho, e) in &rows {
        println!("{rho}, {e:.6}");
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn run_thresholds(cfg: &RunConfig, _opts: &RunOptions) -> CliResult<()> {
    for (k, v) in cfg.model_header() {
        println!("{k} = {v}");
    }
    println!("diameter = {:?}", cfg.diameter);
    match rho_threshold(&cfg.model, cfg.diameter) {
        Ok(RhoThreshold::Finite(t)) => println!("rho_threshold = {t:?}"),
        Ok(RhoThreshold::Unbounded) => println!("rho_threshold = unbounded"),
        Err(e) => println!("rho_threshold unavailable: {e}"),
    }
    match front_speed(&cfg.model) {
        Some(c) => println!("front_speed = {c:?}"),
        None => println!("front_speed = none (not strongly causal)"),
    }
    println!("default_rho = {:?}", cfg.rho());
    Ok(())
}

/// Required log-log slope range of the composition residual per order.
fn slope_bounds(order: CorrectionOrder) -> (f64, f64) {
    match order {
        CorrectionOrder::Zero => (0.7, 1.3),
        CorrectionOrder::First => (1.7, f64::INFINITY),
        CorrectionOrder::Second => (2.6, f64::INFINITY),
    }
}

pub fn run_verify_identity(cfg: &RunConfig, _opts: &RunOptions) -> CliResult<()> {
    if cfg.model.is_lossless() {
        return Err(CliError::Config {
            path: cfg.path.clone(),
            message: "the identity check needs an attenuating model".into(),
        });
    }
    let id = &cfg.identity;
    let dt = id.window / (id.samples - 1) as f64;
    let phi = TimeSignal::from_fn(0.0, dt, id.samples, |t| {
        (-(t - id.center).powi(2) / (2.0 * id.sigma * id.sigma)).exp()
    });
    let grid = FrequencyGrid::new(id.rho, id.steps).context("identity grid")?;
    let alphas = [10f64.powf(-1.5), 1e-2, 10f64.powf(-2.5)];
    let orders = match cfg.explicit_order() {
        Some(o) => vec![o],
        None => vec![
            CorrectionOrder::Zero,
            CorrectionOrder::First,
            CorrectionOrder::Second,
        ],
    };
    let mut failed = Vec::new();
    for order in orders {
        let residuals = alphas
            .iter()
            .map(|&a| composition_residual(&cfg.model.with_strength(a), &phi, &grid, order))
            .collect::<causal_pat::Result<Vec<f64>>>()
            .context("composition residual")?;
        let slope = loglog_slope(&alphas, &residuals);
        let (lo, hi) = slope_bounds(order);
        let ok = slope >= lo && slope <= hi;
        println!(
            "order {}: residuals {:.3e} {:.3e} {:.3e} at a = {:.3e} {:.3e} {:.3e}; slope {slope:.3} (required {}) {}",
            order.as_u32(),
            residuals[0],
            residuals[1],
            residuals[2],
            alphas[0],
            alphas[1],
            alphas[2],
            if hi.is_finite() { format!("in [{lo}, {hi}]") } else { format!(">= {lo}") },
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            failed.push(format!("order {} slope {slope:.3}", order.as_u32()));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(failed.join(", ")))
    }
}

/// Resolves the output directory, defaulting to the working directory.
pub fn output_dir(dir: Option<&Path>) -> PathBuf {
    dir.map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}
