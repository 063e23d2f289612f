//! Adaptive orthonormal transforms built from the eigenvectors of a discrete
//! Schrödinger Hamiltonian whose potential is the data itself, and a
//! denoiser for signal-dependent noise on top of them.
//!
//! Low-energy eigenvectors oscillate slowly where the field is bright and
//! faster where it is dark, so truncating the expansion smooths bright
//! regions harder than dark ones.

pub mod analysis;
pub mod baselines;
pub mod eigen;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod hamiltonian;
pub mod metrics;
pub mod noise;
mod par;
pub mod pipeline;
pub mod smoothing;
pub mod synth;
pub mod transform;

pub use eigen::{eig_full, eig_partial, EigenBasis, EigenConfig, SymmetricOperator, Which};
pub use error::{Error, Result};
pub use grid::{load_field, save_field, Field, FieldFormat, FieldKind, GridIndexMap};
pub use hamiltonian::{build_hamiltonian, BoundaryMode, HamiltonianMatrix, PlanckMassRatio};
pub use metrics::{psnr_db, snr_db, ssim, Peak};
pub use noise::{corrupt, NoiseModel, NoiseSpec};
pub use pipeline::{
    denoise_pipeline, run_pipeline, AtStage, EigenMode, PipelineConfig, PipelineError, Stage,
};
pub use smoothing::gaussian_smooth;
pub use transform::{project, reconstruct, tau, CoefficientOrder, Coefficients, ThresholdProfile};
