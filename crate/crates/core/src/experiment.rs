//! Experiment runner: data generation, corruption, per-method grid search
//! maximizing PSNR against the clean reference, and result/plot emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{fourier_denoise, tv_denoise};
use crate::eigen::EigenConfig;
use crate::error::Error;
use crate::grid::{encode_pgm, format_number as num, load_field, Field, FieldFormat, FieldKind};
use crate::hamiltonian::{build_hamiltonian, BoundaryMode, PlanckMassRatio};
use crate::metrics::{psnr_db, snr_db, ssim, Peak, SSIM_WINDOW};
use crate::noise::{corrupt, corrupt_within, Corruption, NoiseModel, NoiseSpec};
use crate::par;
use crate::pipeline::{
    decompose, run_pipeline, AtStage, EigenMode, PipelineConfig, PipelineError, PipelineRun, Stage,
    StageTimings,
};
use crate::smoothing::gaussian_smooth;
use crate::synth::{make_image, make_signal};
use crate::transform::{
    project, reconstruct, threshold_index, weights, CoefficientOrder, ThresholdProfile,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Noisy,
    Proposed,
    Fourier,
    Tv,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Noisy => "Noisy",
            Method::Proposed => "Proposed",
            Method::Fourier => "Fourier",
            Method::Tv => "TV",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    SynthSignal,
    SynthImage,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub source: DataSource,
    /// Signal length or image side for synthetic data.
    #[serde(default)]
    pub size: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Clean reference for `file` sources.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Pre-corrupted input; when set no noise is drawn.
    #[serde(default)]
    pub noisy_path: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<FieldFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub model: NoiseModel,
    pub target_snr_db: f64,
    pub seed: u64,
    /// Redraw (seed, seed + 1, ...) until the empirical SNR lands this close
    /// to the target.
    #[serde(default)]
    pub tolerance_db: Option<f64>,
}

impl NoiseSection {
    pub const MAX_DRAWS: usize = 1000;

    pub fn spec(&self) -> NoiseSpec {
        NoiseSpec {
            model: self.model,
            target_snr_db: self.target_snr_db,
            seed: self.seed,
        }
    }

    pub fn apply(&self, clean: &Field) -> Result<Corruption, PipelineError> {
        match self.tolerance_db {
            Some(tol) => corrupt_within(clean, &self.spec(), tol, Self::MAX_DRAWS),
            None => corrupt(clean, &self.spec()),
        }
        .at(Stage::Noise)
    }
}

/// Search space of the proposed method. Absolute lists take precedence over
/// their relative counterparts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProposedGrid {
    /// ħ²/2m values as multiples of the noisy field's range.
    pub ratio_scale: Vec<f64>,
    pub ratio: Option<Vec<f64>>,
    pub sigma: Vec<f64>,
    /// `s` as fractions of the field size.
    pub s_fraction: Vec<f64>,
    pub s: Option<Vec<usize>>,
    /// `ρ` as multiples of `s`.
    pub rho_factor: Vec<f64>,
    pub rho: Option<Vec<f64>>,
    pub boundary: BoundaryMode,
    pub order: CoefficientOrder,
    pub project_smoothed: bool,
    pub eigen_mode: EigenMode,
}

impl Default for ProposedGrid {
    fn default() -> Self {
        Self {
            ratio_scale: vec![0.1, 0.5, 1.0, 5.0, 25.0, 125.0],
            ratio: None,
            sigma: vec![0.0, 1.0, 2.0, 4.0],
            s_fraction: vec![0.01, 0.05, 0.10, 0.25],
            s: None,
            rho_factor: vec![0.5, 1.0, 2.0],
            rho: None,
            boundary: BoundaryMode::default(),
            order: CoefficientOrder::default(),
            project_smoothed: false,
            eigen_mode: EigenMode::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FourierGrid {
    pub s_fraction: Vec<f64>,
    pub s: Option<Vec<usize>>,
    pub rho_factor: Vec<f64>,
    pub rho: Option<Vec<f64>>,
}

impl Default for FourierGrid {
    fn default() -> Self {
        let p = ProposedGrid::default();
        Self {
            s_fraction: p.s_fraction,
            s: None,
            rho_factor: p.rho_factor,
            rho: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TvGrid {
    /// λ as multiples of the noisy field's range.
    pub lambda_scale: Vec<f64>,
    pub lambda: Option<Vec<f64>>,
    pub iterations: usize,
}

impl Default for TvGrid {
    fn default() -> Self {
        Self {
            lambda_scale: vec![0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2],
            lambda: None,
            iterations: 300,
        }
    }
}

/// One experiment, as read from a TOML descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub data: DataSpec,
    pub noise: Option<NoiseSection>,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub proposed: ProposedGrid,
    #[serde(default)]
    pub fourier: FourierGrid,
    #[serde(default)]
    pub tv: TvGrid,
    #[serde(default)]
    pub peak: Peak,
    #[serde(default)]
    pub eigen: EigenConfig,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("experiment descriptor: {e}")))
            .at(Stage::Config)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(path, e))
            .at(Stage::Io)?;
        Self::from_toml(&text)
    }
}

/// Parameters of one evaluated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum MethodConfig {
    Noisy,
    Proposed(PipelineConfig),
    Fourier { s: usize, rho: f64 },
    Tv { lambda: f64, iterations: usize },
}

impl MethodConfig {
    pub fn method(&self) -> Method {
        match self {
            MethodConfig::Noisy => Method::Noisy,
            MethodConfig::Proposed(_) => Method::Proposed,
            MethodConfig::Fourier { .. } => Method::Fourier,
            MethodConfig::Tv { .. } => Method::Tv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub psnr_db: f64,
    pub snr_db: f64,
    /// `None` for signals (and images smaller than the SSIM window).
    pub ssim: Option<f64>,
}

/// Metrics of one method's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseReport {
    pub data: String,
    pub noise: String,
    pub method: Method,
    pub scores: Option<Scores>,
    pub config: MethodConfig,
    /// Wall times vary run to run, so they are not serialized with the report.
    #[serde(skip)]
    pub timings: StageTimings,
}

pub fn score(clean: &Field, test: &Field, peak: Peak) -> Result<Scores, PipelineError> {
    let psnr = psnr_db(clean, test, peak).at(Stage::Metrics)?;
    let snr = snr_db(clean, test).at(Stage::Metrics)?;
    let ssim = if clean.kind() == FieldKind::Image2D
        && clean.width() >= SSIM_WINDOW
        && clean.height() >= SSIM_WINDOW
    {
        Some(ssim(clean, test, peak).at(Stage::Metrics)?)
    } else {
        None
    };
    Ok(Scores {
        psnr_db: psnr,
        snr_db: snr,
        ssim,
    })
}

/// A scored grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub config: MethodConfig,
    pub scores: Scores,
}

#[derive(Debug, Clone)]
pub struct MethodResult {
    pub best: DenoiseReport,
    pub output: Field,
    pub grid: Vec<GridRow>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub spec: ExperimentSpec,
    pub clean: Option<Field>,
    pub noisy: Field,
    pub achieved_snr_db: Option<f64>,
    pub noisy_report: DenoiseReport,
    pub results: Vec<MethodResult>,
    /// Re-run of the winning proposed configuration, for plot data.
    pub proposed_run: Option<PipelineRun>,
}

impl ExperimentOutcome {
    pub fn result(&self, method: Method) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.best.method == method)
    }

    pub fn reports(&self) -> Vec<&DenoiseReport> {
        std::iter::once(&self.noisy_report)
            .chain(self.results.iter().map(|r| &r.best))
            .collect()
    }
}

fn data_label(spec: &ExperimentSpec, field: &Field) -> String {
    match spec.data.source {
        DataSource::SynthSignal => "Signal".into(),
        DataSource::SynthImage => "Image".into(),
        DataSource::File => spec
            .data
            .path
            .as_ref()
            .or(spec.data.noisy_path.as_ref())
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| match field.kind() {
                FieldKind::Signal1D => "Signal".into(),
                FieldKind::Image2D => "Image".into(),
            }),
    }
}

fn noise_label(spec: &ExperimentSpec) -> String {
    match (&spec.noise, &spec.data.noisy_path) {
        (_, Some(_)) => "File".into(),
        (Some(n), None) => match n.model {
            NoiseModel::Poisson => "Poisson".into(),
            NoiseModel::SignalDependentGaussian => "Gaussian".into(),
        },
        (None, None) => "None".into(),
    }
}

fn load_data(
    spec: &DataSpec,
    noise: Option<&NoiseSection>,
) -> Result<(Option<Field>, Field, Option<f64>), PipelineError> {
    let load = |path: &PathBuf| {
        let format = spec
            .format
            .or_else(|| FieldFormat::from_path(path))
            .ok_or_else(|| {
                Error::InvalidParameter(format!("cannot infer format of {}", path.display()))
            })
            .at(Stage::Config)?;
        load_field(path, format).at(Stage::Io)
    };
    let clean = match spec.source {
        DataSource::SynthSignal => {
            Some(make_signal(spec.size.unwrap_or(256), spec.seed).at(Stage::Config)?)
        }
        DataSource::SynthImage => {
            Some(make_image(spec.size.unwrap_or(64), spec.seed).at(Stage::Config)?)
        }
        DataSource::File => spec.path.as_ref().map(load).transpose()?,
    };
    if let Some(path) = &spec.noisy_path {
        let noisy = load(path)?;
        if let Some(c) = &clean {
            if !c.same_shape(&noisy) {
                return Err(Error::DimensionMismatch {
                    expected: c.len(),
                    actual: noisy.len(),
                })
                .at(Stage::Io);
            }
        }
        let achieved = clean
            .as_ref()
            .map(|c| snr_db(c, &noisy))
            .transpose()
            .at(Stage::Metrics)?;
        return Ok((clean, noisy, achieved));
    }
    let clean = clean
        .ok_or_else(|| Error::InvalidParameter("file source needs `path` or `noisy_path`".into()))
        .at(Stage::Config)?;
    match noise {
        Some(n) => {
            let c = n.apply(&clean)?;
            Ok((Some(clean), c.noisy, Some(c.achieved_snr_db)))
        }
        None => {
            let noisy = clean.clone();
            Ok((Some(clean), noisy, Some(f64::INFINITY)))
        }
    }
}

fn relative_or_absolute<T: Copy>(
    absolute: &Option<Vec<T>>,
    relative: &[f64],
    f: impl Fn(f64) -> T,
) -> Vec<T> {
    match absolute {
        Some(v) => v.clone(),
        None => relative.iter().map(|&r| f(r)).collect(),
    }
}

fn s_values(absolute: &Option<Vec<usize>>, fractions: &[f64], dim: usize) -> Vec<usize> {
    let mut v = relative_or_absolute(absolute, fractions, |f| {
        ((f * dim as f64).round() as usize).max(1)
    });
    v.dedup();
    v
}

fn rho_values(absolute: &Option<Vec<f64>>, factors: &[f64], s: usize) -> Vec<f64> {
    relative_or_absolute(absolute, factors, |f| (f * s as f64).max(0.5))
}

fn pick_best(grid: &[GridRow]) -> Option<&GridRow> {
    // first maximum wins, so ties resolve by grid order
    grid.iter()
        .fold(None, |best: Option<&GridRow>, row| match best {
            Some(b) if b.scores.psnr_db >= row.scores.psnr_db => Some(b),
            _ => Some(row),
        })
}

fn field_range(x: &Field) -> f64 {
    let r = x.range();
    if r > 0.0 {
        r
    } else {
        x.max().abs().max(1.0)
    }
}

/// Evaluates every configuration of the proposed method. Cells sharing
/// `(ħ²/2m, σ)` share one eigendecomposition.
pub fn search_proposed(
    noisy: &Field,
    clean: &Field,
    grid: &ProposedGrid,
    peak: Peak,
    eigen: &EigenConfig,
) -> Result<Vec<GridRow>, PipelineError> {
    let dim = noisy.len();
    let range = field_range(noisy);
    let ratios = relative_or_absolute(&grid.ratio, &grid.ratio_scale, |r| r * range);
    let profiles: Vec<ThresholdProfile> = s_values(&grid.s, &grid.s_fraction, dim)
        .into_iter()
        .flat_map(|s| {
            rho_values(&grid.rho, &grid.rho_factor, s)
                .into_iter()
                .map(move |rho| (s, rho))
        })
        .map(|(s, rho)| ThresholdProfile::with_order(s, rho, grid.order).at(Stage::Config))
        .collect::<Result<_, _>>()?;
    let widest = profiles
        .iter()
        .max_by_key(|p| p.support())
        .copied()
        .ok_or_else(|| Error::InvalidParameter("empty threshold grid".into()))
        .at(Stage::Config)?;
    let cells: Vec<(f64, f64)> = ratios
        .iter()
        .flat_map(|&r| grid.sigma.iter().map(move |&s| (r, s)))
        .collect();
    if cells.is_empty() {
        return Err(Error::InvalidParameter("empty ħ²/2m or σ grid".into())).at(Stage::Config);
    }

    let evaluated = par::map_slice(
        &cells,
        |&(ratio, sigma)| -> Result<Vec<GridRow>, PipelineError> {
            let ratio = PlanckMassRatio::new(ratio).at(Stage::Config)?;
            let potential = if sigma > 0.0 {
                gaussian_smooth(noisy, sigma).at(Stage::Smooth)?
            } else {
                noisy.clone()
            };
            let h = build_hamiltonian(&potential, ratio, grid.boundary).at(Stage::Hamiltonian)?;
            let basis = decompose(&h, grid.eigen_mode, &widest, eigen).at(Stage::Eigen)?;
            let target = if grid.project_smoothed {
                &potential
            } else {
                noisy
            };
            let coeffs = project(&basis, target).at(Stage::Project)?;
            profiles
                .iter()
                .map(|profile| {
                    let out = reconstruct(&basis, &coeffs, profile).at(Stage::Reconstruct)?;
                    let config = PipelineConfig {
                        ratio,
                        sigma,
                        s: profile.s,
                        rho: profile.rho,
                        boundary: grid.boundary,
                        order: grid.order,
                        project_smoothed: grid.project_smoothed,
                        eigen_mode: grid.eigen_mode,
                    };
                    Ok(GridRow {
                        config: MethodConfig::Proposed(config),
                        scores: score(clean, &out, peak)?,
                    })
                })
                .collect()
        },
    );
    let mut rows = Vec::new();
    for cell in evaluated {
        rows.extend(cell?);
    }
    Ok(rows)
}

pub fn search_fourier(
    noisy: &Field,
    clean: &Field,
    grid: &FourierGrid,
    peak: Peak,
) -> Result<Vec<GridRow>, PipelineError> {
    let configs: Vec<(usize, f64)> = s_values(&grid.s, &grid.s_fraction, noisy.len())
        .into_iter()
        .flat_map(|s| {
            rho_values(&grid.rho, &grid.rho_factor, s)
                .into_iter()
                .map(move |rho| (s, rho))
        })
        .collect();
    par::map_slice(&configs, |&(s, rho)| {
        let profile = ThresholdProfile::new(s, rho).at(Stage::Config)?;
        let out = fourier_denoise(noisy, &profile).at(Stage::Reconstruct)?;
        Ok(GridRow {
            config: MethodConfig::Fourier { s, rho },
            scores: score(clean, &out, peak)?,
        })
    })
    .into_iter()
    .collect()
}

pub fn search_tv(
    noisy: &Field,
    clean: &Field,
    grid: &TvGrid,
    peak: Peak,
) -> Result<Vec<GridRow>, PipelineError> {
    let range = field_range(noisy);
    let lambdas = relative_or_absolute(&grid.lambda, &grid.lambda_scale, |r| r * range);
    par::map_slice(&lambdas, |&lambda| {
        let out = tv_denoise(noisy, lambda, grid.iterations).at(Stage::Reconstruct)?;
        Ok(GridRow {
            config: MethodConfig::Tv {
                lambda,
                iterations: grid.iterations,
            },
            scores: score(clean, &out, peak)?,
        })
    })
    .into_iter()
    .collect()
}

/// Reruns a single configuration and returns its output.
pub fn apply_method(
    noisy: &Field,
    config: &MethodConfig,
    eigen: &EigenConfig,
) -> Result<(Field, StageTimings, Option<PipelineRun>), PipelineError> {
    match config {
        MethodConfig::Noisy => Ok((noisy.clone(), StageTimings::default(), None)),
        MethodConfig::Proposed(cfg) => {
            let run = run_pipeline(noisy, cfg, eigen)?;
            Ok((run.denoised.clone(), run.timings, Some(run)))
        }
        MethodConfig::Fourier { s, rho } => {
            let profile = ThresholdProfile::new(*s, *rho).at(Stage::Config)?;
            Ok((
                fourier_denoise(noisy, &profile).at(Stage::Reconstruct)?,
                StageTimings::default(),
                None,
            ))
        }
        MethodConfig::Tv { lambda, iterations } => Ok((
            tv_denoise(noisy, *lambda, *iterations).at(Stage::Reconstruct)?,
            StageTimings::default(),
            None,
        )),
    }
}

/// Runs every requested method. With a clean reference each method's grid
/// is searched exhaustively for the best PSNR; without one, every grid must
/// hold exactly one configuration.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome, PipelineError> {
    let (clean, noisy, achieved) = load_data(&spec.data, spec.noise.as_ref())?;
    let data = data_label(spec, &noisy);
    let noise = noise_label(spec);
    let noisy_scores = clean
        .as_ref()
        .map(|c| score(c, &noisy, spec.peak))
        .transpose()?;
    let noisy_report = DenoiseReport {
        data: data.clone(),
        noise: noise.clone(),
        method: Method::Noisy,
        scores: noisy_scores,
        config: MethodConfig::Noisy,
        timings: StageTimings::default(),
    };

    let mut results = Vec::new();
    let mut proposed_run = None;
    for &method in &spec.methods {
        let grid = match &clean {
            Some(c) => match method {
                Method::Noisy => vec![GridRow {
                    config: MethodConfig::Noisy,
                    scores: score(c, &noisy, spec.peak)?,
                }],
                Method::Proposed => {
                    search_proposed(&noisy, c, &spec.proposed, spec.peak, &spec.eigen)?
                }
                Method::Fourier => search_fourier(&noisy, c, &spec.fourier, spec.peak)?,
                Method::Tv => search_tv(&noisy, c, &spec.tv, spec.peak)?,
            },
            None => Vec::new(),
        };
        let chosen = match (&clean, pick_best(&grid)) {
            (Some(_), Some(best)) => best.config.clone(),
            (Some(_), None) => {
                return Err(Error::InvalidParameter(format!(
                    "empty search grid for {method:?}"
                )))
                .at(Stage::Config)
            }
            (None, _) => single_config(spec, method, &noisy)?,
        };
        let (output, timings, run) = apply_method(&noisy, &chosen, &spec.eigen)?;
        if method == Method::Proposed {
            proposed_run = run;
        }
        let scores = clean
            .as_ref()
            .map(|c| score(c, &output, spec.peak))
            .transpose()?;
        results.push(MethodResult {
            best: DenoiseReport {
                data: data.clone(),
                noise: noise.clone(),
                method,
                scores,
                config: chosen,
                timings,
            },
            output,
            grid,
        });
    }
    Ok(ExperimentOutcome {
        spec: spec.clone(),
        clean,
        noisy,
        achieved_snr_db: achieved,
        noisy_report,
        results,
        proposed_run,
    })
}

fn single_config(
    spec: &ExperimentSpec,
    method: Method,
    noisy: &Field,
) -> Result<MethodConfig, PipelineError> {
    let only = |n: usize| -> Result<(), PipelineError> {
        if n == 1 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{method:?}: grid search needs a clean reference; give exactly one configuration"
            )))
            .at(Stage::Config)
        }
    };
    let dim = noisy.len();
    match method {
        Method::Noisy => Ok(MethodConfig::Noisy),
        Method::Proposed => {
            let g = &spec.proposed;
            let ratios = relative_or_absolute(&g.ratio, &g.ratio_scale, |r| r * field_range(noisy));
            let s = s_values(&g.s, &g.s_fraction, dim);
            only(ratios.len() * g.sigma.len() * s.len())?;
            let rho = rho_values(&g.rho, &g.rho_factor, s[0]);
            only(rho.len())?;
            Ok(MethodConfig::Proposed(PipelineConfig {
                ratio: PlanckMassRatio::new(ratios[0]).at(Stage::Config)?,
                sigma: g.sigma[0],
                s: s[0],
                rho: rho[0],
                boundary: g.boundary,
                order: g.order,
                project_smoothed: g.project_smoothed,
                eigen_mode: g.eigen_mode,
            }))
        }
        Method::Fourier => {
            let g = &spec.fourier;
            let s = s_values(&g.s, &g.s_fraction, dim);
            only(s.len())?;
            let rho = rho_values(&g.rho, &g.rho_factor, s[0]);
            only(rho.len())?;
            Ok(MethodConfig::Fourier {
                s: s[0],
                rho: rho[0],
            })
        }
        Method::Tv => {
            let g = &spec.tv;
            let lambdas =
                relative_or_absolute(&g.lambda, &g.lambda_scale, |r| r * field_range(noisy));
            only(lambdas.len())?;
            Ok(MethodConfig::Tv {
                lambda: lambdas[0],
                iterations: g.iterations,
            })
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// One line per grid cell of every method.
pub fn grid_csv(outcome: &ExperimentOutcome) -> String {
    let mut out = String::from("method,ratio,sigma,s,rho,lambda,iterations,psnr_db,snr_db,ssim\n");
    for result in &outcome.results {
        for row in &result.grid {
            let (ratio, sigma, s, rho, lambda, iters) = match &row.config {
                MethodConfig::Noisy => (None, None, None, None, None, None),
                MethodConfig::Proposed(c) => (
                    Some(c.ratio.value()),
                    Some(c.sigma),
                    Some(c.s as f64),
                    Some(c.rho),
                    None,
                    None,
                ),
                MethodConfig::Fourier { s, rho } => {
                    (None, None, Some(*s as f64), Some(*rho), None, None)
                }
                MethodConfig::Tv { lambda, iterations } => (
                    None,
                    None,
                    None,
                    None,
                    Some(*lambda),
                    Some(*iterations as f64),
                ),
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                result.best.method.label(),
                fmt_opt(ratio),
                fmt_opt(sigma),
                fmt_opt(s),
                fmt_opt(rho),
                fmt_opt(lambda),
                fmt_opt(iters),
                num(row.scores.psnr_db),
                num(row.scores.snr_db),
                row.scores.ssim.map(num).unwrap_or_else(|| "NA".into()),
            )
            .unwrap();
        }
    }
    out
}

/// `data,noise,method,psnr_db,snr_db,ssim` with `NA` where SSIM is undefined.
pub fn table_csv(outcome: &ExperimentOutcome) -> String {
    let mut out = String::from("data,noise,method,psnr_db,snr_db,ssim\n");
    for report in outcome.reports() {
        let (psnr, snr, ssim) = match report.scores {
            Some(s) => (
                format!("{:.2}", s.psnr_db),
                format!("{:.2}", s.snr_db),
                s.ssim
                    .map(|v| format!("{v:.2}"))
                    .unwrap_or_else(|| "NA".into()),
            ),
            None => ("NA".into(), "NA".into(), "NA".into()),
        };
        writeln!(
            out,
            "{},{},{},{psnr},{snr},{ssim}",
            report.data,
            report.noise,
            report.method.label()
        )
        .unwrap();
    }
    out
}

pub fn report_json(outcome: &ExperimentOutcome) -> String {
    #[derive(Serialize)]
    struct Document<'a> {
        name: &'a str,
        achieved_snr_db: Option<f64>,
        reports: Vec<&'a DenoiseReport>,
    }
    let doc = Document {
        name: &outcome.spec.name,
        achieved_snr_db: outcome.achieved_snr_db,
        reports: outcome.reports(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

pub fn timings_csv(outcome: &ExperimentOutcome) -> String {
    let mut out =
        String::from("method,smooth_s,hamiltonian_s,eigen_s,project_s,reconstruct_s,total_s\n");
    for r in &outcome.results {
        let t = &r.best.timings;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.best.method.label(),
            t.smooth.as_secs_f64(),
            t.hamiltonian.as_secs_f64(),
            t.eigen.as_secs_f64(),
            t.project.as_secs_f64(),
            t.reconstruct.as_secs_f64(),
            t.total().as_secs_f64()
        )
        .unwrap();
    }
    out
}

fn write(path: PathBuf, contents: &[u8], written: &mut Vec<PathBuf>) -> Result<(), PipelineError> {
    fs::write(&path, contents)
        .map_err(|e| Error::io(&path, e))
        .at(Stage::Io)?;
    written.push(path);
    Ok(())
}

/// Writes `fields.csv` in long form (`k,row,col,<name>...`, 1-based) and,
/// for images, one PGM per field.
fn write_fields(
    out_dir: &Path,
    fields: &[(&str, &Field)],
    written: &mut Vec<PathBuf>,
) -> Result<(), PipelineError> {
    let Some((_, first)) = fields.first() else {
        return Ok(());
    };
    let map = first.index_map();
    let mut csv = String::from("k,row,col");
    for (name, _) in fields {
        csv.push(',');
        csv.push_str(name);
    }
    csv.push('\n');
    for k in 0..first.len() {
        let (row, col) = map.unflatten(k + 1).at(Stage::Io)?;
        write!(csv, "{},{row},{col}", k + 1).unwrap();
        for (_, f) in fields {
            write!(csv, ",{}", num(f.values()[k])).unwrap();
        }
        csv.push('\n');
    }
    write(out_dir.join("fields.csv"), csv.as_bytes(), written)?;
    if first.kind() == FieldKind::Image2D {
        for (name, f) in fields {
            write(out_dir.join(format!("{name}.pgm")), &encode_pgm(f), written)?;
        }
    }
    Ok(())
}

/// Index of the eigenvector whose eigenvalue is closest to the median of
/// the potential: a state that oscillates over the low regions and decays
/// under the high ones.
pub fn mid_potential_state(run: &PipelineRun) -> usize {
    let mut sorted = run.potential.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let values = run.basis.eigenvalues();
    (0..values.len())
        .min_by(|&a, &b| {
            (values[a] - median)
                .abs()
                .total_cmp(&(values[b] - median).abs())
                .then(a.cmp(&b))
        })
        .unwrap_or(0)
}

/// Writes CSVs for plotting a pipeline run: the eigenvalue spectrum, one
/// eigenvector against the potential, coefficients in threshold order, and
/// the fields themselves (`fields.csv`).
pub fn emit_plotdata(
    run: &PipelineRun,
    clean: Option<&Field>,
    noisy: &Field,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, PipelineError> {
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::io(out_dir, e))
        .at(Stage::Io)?;
    let mut written = Vec::new();

    let mut spectrum = String::from("index,eigenvalue\n");
    for (i, l) in run.basis.eigenvalues().iter().enumerate() {
        writeln!(spectrum, "{},{}", i + 1, num(*l)).unwrap();
    }
    write(
        out_dir.join("spectrum.csv"),
        spectrum.as_bytes(),
        &mut written,
    )?;

    let state = mid_potential_state(run);
    let lambda = run.basis.eigenvalues()[state];
    let mut eigvec = String::from("k,potential,eigenvalue,psi\n");
    for (k, (v, p)) in run
        .potential
        .values()
        .iter()
        .zip(run.basis.vector(state))
        .enumerate()
    {
        writeln!(eigvec, "{},{},{},{}", k + 1, num(*v), num(lambda), num(*p)).unwrap();
    }
    write(
        out_dir.join("eigenvector.csv"),
        eigvec.as_bytes(),
        &mut written,
    )?;

    let profile = run.config.profile()?;
    let m = run.basis.count();
    let taus = weights(&profile, m);
    let mut rows: Vec<(usize, usize)> = (0..m)
        .map(|i| (threshold_index(profile.order, i, m), i))
        .collect();
    rows.sort();
    let mut coeffs = String::from("index,eigenvalue,alpha,tau\n");
    for (rank, i) in rows {
        writeln!(
            coeffs,
            "{rank},{},{},{}",
            num(run.basis.eigenvalues()[i]),
            num(run.coefficients.alpha[i]),
            num(taus[i])
        )
        .unwrap();
    }
    write(
        out_dir.join("coefficients.csv"),
        coeffs.as_bytes(),
        &mut written,
    )?;

    let mut fields: Vec<(&str, &Field)> = Vec::new();
    if let Some(c) = clean {
        fields.push(("clean", c));
    }
    fields.extend([
        ("noisy", noisy),
        ("potential", &run.potential),
        ("denoised", &run.denoised),
    ]);
    write_fields(out_dir, &fields, &mut written)?;
    Ok(written)
}

/// Writes `report.json`, `table.csv`, `grid.csv`, `timings.csv`, `fields.csv`
/// and the plot data of the winning proposed configuration under `out_dir`.
pub fn write_outcome(
    outcome: &ExperimentOutcome,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, PipelineError> {
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::io(out_dir, e))
        .at(Stage::Io)?;
    let mut written = Vec::new();
    write(
        out_dir.join("report.json"),
        report_json(outcome).as_bytes(),
        &mut written,
    )?;
    write(
        out_dir.join("table.csv"),
        table_csv(outcome).as_bytes(),
        &mut written,
    )?;
    write(
        out_dir.join("grid.csv"),
        grid_csv(outcome).as_bytes(),
        &mut written,
    )?;
    write(
        out_dir.join("timings.csv"),
        timings_csv(outcome).as_bytes(),
        &mut written,
    )?;
    let names: Vec<String> = outcome
        .results
        .iter()
        .map(|r| r.best.method.label().to_ascii_lowercase())
        .collect();
    let mut fields: Vec<(&str, &Field)> = Vec::new();
    if let Some(c) = &outcome.clean {
        fields.push(("clean", c));
    }
    fields.push(("noisy", &outcome.noisy));
    for (name, r) in names.iter().zip(&outcome.results) {
        fields.push((name, &r.output));
    }
    write_fields(out_dir, &fields, &mut written)?;
    if let Some(run) = &outcome.proposed_run {
        written.extend(emit_plotdata(
            run,
            outcome.clean.as_ref(),
            &outcome.noisy,
            &out_dir.join("plot"),
        )?);
    }
    Ok(written)
}
