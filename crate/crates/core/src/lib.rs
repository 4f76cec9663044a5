//! Exact Gromov-Hausdorff computations for finite ultrametric spaces.
//!
//! All distances are exact rationals ([`ExactValue`]). The non-Archimedean
//! distance is computed by three independent methods that are cross-checked
//! in [`engine::dhat_gh`]: minimum-distortion strong correspondences,
//! threshold scans over strong epsilon-isometries, and threshold scans over
//! strong epsilon-approximations.

#![allow(
    clippy::result_large_err,
    clippy::needless_range_loop,
    clippy::too_many_arguments,
    clippy::type_complexity,
    clippy::unnecessary_map_or,
    clippy::manual_is_multiple_of
)]

pub mod convergence;
pub mod correspondence;
pub mod engine;
pub mod generators;
pub mod isometry;
mod ladder;
pub mod space;
pub mod spectrum;
pub mod ums;
pub mod value;

pub use convergence::{
    check_convergence_certificate, check_net_convergence_certificate, diameter_trend, find_split, sutb_check,
    CertificateVerdict, ConvergenceError, MapDirection, NetVerdict, SplitResult, SutbVerdict, TrendClass, TrendReport,
};
pub use correspondence::{
    glue_with_constant_bridge, is_correspondence, min_distortion_correspondence,
    min_distortion_strong_correspondence, Budget, BudgetExceeded, Correspondence, CorrespondenceError,
    EquilibriumTable, GlueResult, Minimum, Pair, StrongnessVerdict,
};
pub use engine::{
    approximation_scan, classical_gh, dhat_gh, isometry_scan, metric_ratio, spectra_lower_bound, DistanceReport,
    EngineConfig, EngineError, Method, MethodSelection, MetricRatio,
};
pub use generators::{
    random_ultrametric, ramified_ball_approx, truncated_scaled_ball, truncated_unramified_ring, zq_delta,
    GeneratorError, LocalFieldParams,
};
pub use isometry::{
    exists_strong_epsilon_approximation, exists_strong_epsilon_isometry, is_strong_epsilon_approximation,
    is_strong_epsilon_isometry, map_distortion, ApproximationWitness, IsometryError, MapWitness,
};
pub use space::{SpaceError, UltrametricSpace};
pub use spectrum::{candidate_thresholds, full_spectrum, weight_spectrum, WeightSpectrum};
pub use ums::UmsError;
pub use value::{ExactValue, ValueError};

/// Any error raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Correspondence(#[from] CorrespondenceError),
    #[error(transparent)]
    Budget(#[from] BudgetExceeded),
    #[error(transparent)]
    Isometry(#[from] IsometryError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Convergence(#[from] ConvergenceError),
    #[error(transparent)]
    Ums(#[from] UmsError),
}
