//! Data-driven codecs: uniform scale bins and residual scalar quantization.

pub mod bins;
pub mod kmeans;
pub mod rsq;

pub use bins::{bin_decode, bin_encode, bin_fit, BinSpec};
pub use kmeans::{kmeans1d_fit, kmeans1d_fit_with, KMeansEngine, KMeansFit, LloydConfig};
pub use rsq::{rsq_decode, rsq_encode, rsq_fit, rsq_fit_with, Codebook, RsqFit, RsqSpec};

/// Token indices are rendered with three digits, which bounds codebook size.
pub const MAX_CODEBOOK: usize = 1000;
