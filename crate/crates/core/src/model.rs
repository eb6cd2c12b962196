//! Shared data model: feature maps, text banks, bin partitions and depth maps.
//!
//! Every type validates its invariants on construction and is immutable
//! afterwards, so values can be shared freely across threads.

use crate::error::{Error, Result};

/// Placeholder substituted by a token inside a prompt template.
pub const TEMPLATE_PLACEHOLDER: &str = "{}";

/// Dense per-patch visual embeddings, row-major `(patch_row, patch_col, channel)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    height_f: usize,
    width_f: usize,
    channels: usize,
    data: Vec<f32>,
    source_id: String,
    model_id: Option<String>,
}

impl FeatureMap {
    pub fn new(
        height_f: usize,
        width_f: usize,
        channels: usize,
        data: Vec<f32>,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        if height_f == 0 || width_f == 0 || channels == 0 {
            return Err(Error::InvalidFeatureMap(format!(
                "dimensions must be positive, got {height_f}x{width_f}x{channels}"
            )));
        }
        let expected = height_f
            .checked_mul(width_f)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| Error::InvalidFeatureMap("dimensions overflow".into()))?;
        if data.len() != expected {
            return Err(Error::InvalidFeatureMap(format!(
                "expected {expected} values for {height_f}x{width_f}x{channels}, got {}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFeatureMap(format!(
                "non-finite value {} at flat index {i}",
                data[i]
            )));
        }
        Ok(Self {
            height_f,
            width_f,
            channels,
            data,
            source_id: source_id.into(),
            model_id: None,
        })
    }

    pub fn with_model_id(mut self, model_id: Option<String>) -> Self {
        self.model_id = model_id;
        self
    }

    pub fn height_f(&self) -> usize {
        self.height_f
    }

    pub fn width_f(&self) -> usize {
        self.width_f
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn num_patches(&self) -> usize {
        self.height_f * self.width_f
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn model_id(&self) -> Option<&str> {
        self.model_id.as_deref()
    }

    /// Embedding of the patch at `(row, col)`.
    ///
    /// Panics if the indices are out of range.
    pub fn patch(&self, row: usize, col: usize) -> &[f32] {
        assert!(row < self.height_f && col < self.width_f);
        let start = (row * self.width_f + col) * self.channels;
        &self.data[start..start + self.channels]
    }

    /// Patch embeddings in row-major order.
    pub fn patches(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.channels)
    }
}

/// `K` prompt embeddings paired with their token strings.
#[derive(Debug, Clone, PartialEq)]
pub struct TextBank {
    tokens: Vec<String>,
    template: String,
    embeddings: Vec<f32>,
    channels: usize,
    model_id: Option<String>,
}

impl TextBank {
    pub fn new(
        tokens: Vec<String>,
        template: impl Into<String>,
        embeddings: Vec<f32>,
        channels: usize,
    ) -> Result<Self> {
        let template = template.into();
        if tokens.is_empty() {
            return Err(Error::InvalidTextBank("at least one token is required".into()));
        }
        if channels == 0 {
            return Err(Error::InvalidTextBank("channels must be positive".into()));
        }
        if template.matches(TEMPLATE_PLACEHOLDER).count() != 1 {
            return Err(Error::InvalidTextBank(format!(
                "template {template:?} must contain exactly one {TEMPLATE_PLACEHOLDER} placeholder"
            )));
        }
        if embeddings.len() != tokens.len() * channels {
            return Err(Error::InvalidTextBank(format!(
                "expected {} embedding values for {} tokens x {channels} channels, got {}",
                tokens.len() * channels,
                tokens.len(),
                embeddings.len()
            )));
        }
        for (k, row) in embeddings.chunks_exact(channels).enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidTextBank(format!(
                    "non-finite embedding for token {k} ({:?})",
                    tokens[k]
                )));
            }
            if row.iter().all(|&v| v == 0.0) {
                return Err(Error::ZeroNormVector { what: "token", index: k });
            }
        }
        Ok(Self {
            tokens,
            template,
            embeddings,
            channels,
            model_id: None,
        })
    }

    pub fn with_model_id(mut self, model_id: Option<String>) -> Self {
        self.model_id = model_id;
        self
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn model_id(&self) -> Option<&str> {
        self.model_id.as_deref()
    }

    /// Flat `K x channels` embedding matrix.
    pub fn embeddings(&self) -> &[f32] {
        &self.embeddings
    }

    pub fn embedding(&self, k: usize) -> &[f32] {
        &self.embeddings[k * self.channels..(k + 1) * self.channels]
    }

    /// Full prompt text for token `k`.
    pub fn prompt(&self, k: usize) -> String {
        self.template.replacen(TEMPLATE_PLACEHOLDER, &self.tokens[k], 1)
    }
}

/// Depth value in meters attached to each semantic token, strictly increasing.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "RawBinPartition", into = "RawBinPartition")]
pub struct BinPartition {
    name: String,
    bins: Vec<f64>,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct RawBinPartition {
    name: String,
    bins: Vec<f64>,
}

impl TryFrom<RawBinPartition> for BinPartition {
    type Error = Error;

    fn try_from(raw: RawBinPartition) -> Result<Self> {
        BinPartition::new(raw.name, raw.bins)
    }
}

impl From<BinPartition> for RawBinPartition {
    fn from(bp: BinPartition) -> Self {
        RawBinPartition {
            name: bp.name,
            bins: bp.bins,
        }
    }
}

impl BinPartition {
    pub fn new(name: impl Into<String>, bins: Vec<f64>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::InvalidBins("at least one bin is required".into()));
        }
        if let Some(v) = bins.iter().find(|v| !v.is_finite() || **v <= 0.0) {
            return Err(Error::InvalidBins(format!(
                "bins must be finite and > 0, got {v}"
            )));
        }
        if let Some(i) = bins.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidBins(format!(
                "bins must be strictly increasing: {} at index {i} is not below {}",
                bins[i],
                bins[i + 1]
            )));
        }
        Ok(Self {
            name: name.into(),
            bins,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.bins[0]
    }

    pub fn max(&self) -> f64 {
        self.bins[self.bins.len() - 1]
    }
}

/// Per-pixel depth in meters. Pixels that are NaN or `<= 0` are invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl DepthMap {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDepthMap(format!(
                "dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::InvalidDepthMap(format!(
                "expected {} values for {height}x{width}, got {}",
                height * width,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|&v| v == f64::INFINITY) {
            return Err(Error::InvalidDepthMap(format!(
                "infinite depth at flat index {i}"
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Constant map of `value` meters.
    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Whether a raw depth value counts as a valid measurement.
    pub fn is_valid_depth(value: f64) -> bool {
        value > 0.0 && value.is_finite()
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|&&v| Self::is_valid_depth(v)).count()
    }
}

/// Checks that a feature map, text bank and bin partition can be used together.
pub fn validate_pairing(fm: &FeatureMap, tb: &TextBank, bp: &BinPartition) -> Result<()> {
    if fm.channels() != tb.channels() {
        return Err(Error::ChannelMismatch {
            features: fm.channels(),
            text: tb.channels(),
        });
    }
    if tb.len() != bp.len() {
        return Err(Error::ArityMismatch {
            tokens: tb.len(),
            bins: bp.len(),
        });
    }
    Ok(())
}
