//! Geodesic-flow guidance for embedding-space image morphing.
//!
//! Subspaces of a shared image/text embedding space are treated as points
//! on a Grassmann manifold. The geodesic between two of them induces a
//! metric `Q`, and cosine losses measured through `Q` guide an iterative
//! pixel-space inversion against frozen toy encoders.

pub mod augment;
pub mod encoder;
pub mod error;
pub mod grassmann;
pub mod image;
pub mod inversion;
pub mod io;
pub mod linalg;
pub mod losses;
pub mod metrics;
pub mod random;

pub use augment::{apply_augmentation, sample_augmentations, AugmentationOp};
pub use encoder::{make_encoder, make_image_encoder, make_tanh_encoder, prompt_vector, EncoderKind, ToyEncoder};
pub use error::{Error, Result};
pub use grassmann::{
    evaluate_flow, geodesic_cosine, geodesic_flow, geodesic_loss, principal_angles, q_matrix, GeodesicFlow,
    GuidanceMetric,
};
pub use image::{ImageShape, ImageTensor};
pub use linalg::{extract_subspace, orthonormal_complement, svd, EmbeddingBatch, Matrix, SubspaceBasis};
pub use losses::{LossReport, SphericalMode};
pub use metrics::{GapReport, MetricKind, ScoreRow, ScoreTable};
pub use inversion::{
    cosine_lr, inversion_step, run_inversion, text_direction, InversionConfig, LossMode, MorphState,
    MorphTrajectory, Optimizer, Schedule,
};
