//! The end-to-end denoiser: smooth the potential, assemble the Hamiltonian,
//! diagonalize, project, threshold and reconstruct.

use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::eigen::{eig_full_with, eig_partial_with, EigenBasis, EigenConfig, Which};
use crate::error::Error;
use crate::grid::Field;
use crate::hamiltonian::{build_hamiltonian, BoundaryMode, HamiltonianMatrix, PlanckMassRatio};
use crate::smoothing::gaussian_smooth;
use crate::transform::{project, reconstruct, CoefficientOrder, Coefficients, ThresholdProfile};

/// Where a pipeline failure happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Smooth,
    Hamiltonian,
    Eigen,
    Project,
    Reconstruct,
    Noise,
    Metrics,
    Io,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Smooth => "smooth",
            Stage::Hamiltonian => "hamiltonian",
            Stage::Eigen => "eigen",
            Stage::Project => "project",
            Stage::Reconstruct => "reconstruct",
            Stage::Noise => "noise",
            Stage::Metrics => "metrics",
            Stage::Io => "io",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("[{stage}] {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

/// Tags a module error with the stage it came from.
pub trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T> AtStage<T> for Result<T, Error> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

/// How many eigenpairs to compute.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenMode {
    /// Full decomposition within the dense limit, otherwise only the pairs
    /// the threshold profile can keep.
    #[default]
    Auto,
    Full,
    /// The `m` pairs at the end of the spectrum the profile starts from.
    Partial(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// ħ²/2m.
    pub ratio: PlanckMassRatio,
    /// Gaussian pre-smoothing width; 0 disables smoothing.
    #[serde(default)]
    pub sigma: f64,
    pub s: usize,
    pub rho: f64,
    #[serde(default)]
    pub boundary: BoundaryMode,
    #[serde(default)]
    pub order: CoefficientOrder,
    /// Project the smoothed field instead of the raw input.
    #[serde(default)]
    pub project_smoothed: bool,
    #[serde(default)]
    pub eigen_mode: EigenMode,
}

impl PipelineConfig {
    /// A configuration that reproduces its input exactly.
    pub fn identity(dim: usize) -> Self {
        Self {
            ratio: PlanckMassRatio::new(1.0).expect("positive"),
            sigma: 0.0,
            s: dim,
            rho: 1.0,
            boundary: BoundaryMode::default(),
            order: CoefficientOrder::default(),
            project_smoothed: false,
            eigen_mode: EigenMode::Auto,
        }
    }

    pub fn profile(&self) -> Result<ThresholdProfile, PipelineError> {
        ThresholdProfile::with_order(self.s, self.rho, self.order).at(Stage::Config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )))
            .at(Stage::Config);
        }
        if self.eigen_mode == EigenMode::Partial(0) {
            return Err(Error::InvalidParameter(
                "partial eigen mode needs at least one pair".into(),
            ))
            .at(Stage::Config);
        }
        self.profile().map(|_| ())
    }
}

/// Wall time spent in each stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub smooth: Duration,
    pub hamiltonian: Duration,
    pub eigen: Duration,
    pub project: Duration,
    pub reconstruct: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.smooth + self.hamiltonian + self.eigen + self.project + self.reconstruct
    }
}

/// Everything a pipeline run produced.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub config: PipelineConfig,
    /// The potential used for the Hamiltonian (the input when σ = 0).
    pub potential: Field,
    pub basis: EigenBasis,
    pub coefficients: Coefficients,
    pub denoised: Field,
    pub timings: StageTimings,
}

pub fn denoise_pipeline(x_noisy: &Field, config: &PipelineConfig) -> Result<Field, PipelineError> {
    Ok(run_pipeline(x_noisy, config, &EigenConfig::default())?.denoised)
}

fn timed<T>(slot: &mut Duration, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    *slot = start.elapsed();
    out
}

/// Runs the pipeline and keeps the intermediate products.
pub fn run_pipeline(
    x: &Field,
    config: &PipelineConfig,
    eigen: &EigenConfig,
) -> Result<PipelineRun, PipelineError> {
    config.validate()?;
    let profile = config.profile()?;
    let mut timings = StageTimings::default();

    let potential = timed(&mut timings.smooth, || {
        if config.sigma > 0.0 {
            gaussian_smooth(x, config.sigma)
        } else {
            Ok(x.clone())
        }
    })
    .at(Stage::Smooth)?;
    let h = timed(&mut timings.hamiltonian, || {
        build_hamiltonian(&potential, config.ratio, config.boundary)
    })
    .at(Stage::Hamiltonian)?;
    let basis = timed(&mut timings.eigen, || {
        decompose(&h, config.eigen_mode, &profile, eigen)
    })
    .at(Stage::Eigen)?;
    let target = if config.project_smoothed {
        &potential
    } else {
        x
    };
    let coefficients =
        timed(&mut timings.project, || project(&basis, target)).at(Stage::Project)?;
    let denoised = timed(&mut timings.reconstruct, || {
        reconstruct(&basis, &coefficients, &profile)
    })
    .at(Stage::Reconstruct)?;
    Ok(PipelineRun {
        config: config.clone(),
        potential,
        basis,
        coefficients,
        denoised,
        timings,
    })
}

/// The spectrum end the profile keeps first.
pub fn kept_end(order: CoefficientOrder) -> Which {
    match order {
        CoefficientOrder::AscendingEnergy => Which::Lowest,
        CoefficientOrder::DescendingEnergy => Which::Highest,
    }
}

pub(crate) fn decompose(
    h: &HamiltonianMatrix,
    mode: EigenMode,
    profile: &ThresholdProfile,
    eigen: &EigenConfig,
) -> Result<EigenBasis, Error> {
    let dim = h.dim();
    let needed = profile.support().clamp(1, dim);
    match mode {
        EigenMode::Full => eig_full_with(h, eigen),
        EigenMode::Partial(m) => eig_partial_with(h, m.min(dim), kept_end(profile.order), eigen),
        EigenMode::Auto if dim <= eigen.dense_limit => eig_full_with(h, eigen),
        EigenMode::Auto => eig_partial_with(h, needed, kept_end(profile.order), eigen),
    }
}
