//! Statistics over a response matrix: centering, rankings, reliability,
//! correlation structure, MDS, Procrustes alignment, the anchored score
//! curve and paired tests.

mod correlation;
mod curve;
mod mds;
mod procrustes;
mod rank;
mod reliability;
mod wilcoxon;

use thiserror::Error;

pub use correlation::{correlation_matrix, ideal_circumplex_matrix, pearson, CorrelationMatrix};
pub use curve::{anchored_curve, anchored_curve_from, fit_sine, AnchoredCurve, SineFit};
pub use mds::{
    classical_scaling, human_reference_embedding, mds_embed, smacof, stress1, Dissimilarity,
    Embedding2D, MdsOptions, SmacofRun,
};
pub use procrustes::{align_embeddings, procrustes_align, ProcrustesFit};
pub use rank::{
    average_ranks, center_scores, center_session, mean_profile, rank_profile, session_profiles,
    spearman_rho, CenteredProfile,
};
pub use reliability::{cronbach_alpha, cronbach_by_value};
pub use wilcoxon::{wilcoxon_signed_rank, Alternative, WilcoxonResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("input has no rank variance")]
    DegenerateInput,
    #[error("total score variance is zero")]
    ZeroVariance,
    #[error("need at least {needed} sessions, found {found}")]
    TooFewSessions { found: usize, needed: usize },
    #[error("only {0} values have nonzero variance; at least 3 are needed")]
    InsufficientValues(usize),
    #[error("configuration has zero spread")]
    DegenerateConfiguration,
    #[error("no value-anchored sessions in dataset")]
    NoAnchoredSessions,
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("need at least 6 nonzero differences, found {0}")]
    TooFewDifferences(usize),
}
