//! Zero-shot monocular depth from vision-language embeddings.
//!
//! A dense feature map from an image encoder is compared against the text
//! embeddings of a handful of distance prompts ("This object is close", ...).
//! Per patch, the cosine similarities go through a temperature softmax and the
//! resulting weights average a fixed list of depth bins. Every pixel of a
//! patch receives that patch's depth.
//!
//! Modules:
//! - [`model`]: feature maps, text banks, bin partitions, depth maps.
//! - [`projection`]: similarity, softmax, bin combination, pixel expansion.
//! - [`metrics`]: threshold accuracy, rel, log10 and RMSE.
//! - [`baseline`]: the uniform random lower bound.
//! - [`ablation`]: bin-partition and prompt sweeps, depth histograms.
//! - [`io`] and [`manifest`]: on-disk formats and dataset indexing.
//!
//! Feature extraction itself happens outside this crate; features and text
//! embeddings arrive as `DCE1` containers (see [`io::container`]).

pub mod ablation;
pub mod baseline;
pub mod error;
pub mod io;
pub mod manifest;
pub mod metrics;
pub mod model;
pub mod presets;
pub mod projection;

pub use error::{Error, Result};
pub use metrics::{Aggregation, EvalMask, MetricReport};
pub use model::{validate_pairing, BinPartition, DepthMap, FeatureMap, TextBank};
pub use projection::{inspect_patch, predict, Temperature};
