//! Similarity to depth: cosine similarity between patch and token embeddings,
//! temperature softmax over tokens, weighted combination of depth bins, and
//! block replication of patch depths to pixels.
//!
//! All arithmetic is carried out in `f64`. Per-patch sums run in token-index
//! order so results do not depend on how callers schedule the work.

use crate::error::{Error, Result};
use crate::model::{validate_pairing, BinPartition, DepthMap, FeatureMap, TextBank};

/// Softmax temperature `tau > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(tau: f64) -> Result<Self> {
        if tau.is_finite() && tau > 0.0 {
            Ok(Self(tau))
        } else {
            Err(Error::InvalidTemperature(tau))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Temperature {
    fn default() -> Self {
        Self(crate::presets::TEMPERATURE)
    }
}

/// Token scores per patch, row-major `(patch_row, patch_col, token)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGrid {
    height_f: usize,
    width_f: usize,
    k: usize,
    scores: Vec<f64>,
}

impl SimilarityGrid {
    /// Wraps precomputed scores. Scores only need to be finite; values from
    /// [`cosine_similarity`] additionally lie in `[-1, 1]` up to rounding.
    pub fn from_scores(height_f: usize, width_f: usize, k: usize, scores: Vec<f64>) -> Result<Self> {
        if height_f == 0 || width_f == 0 || k == 0 {
            return Err(Error::ShapeError(format!(
                "similarity grid dimensions must be positive, got {height_f}x{width_f}x{k}"
            )));
        }
        if scores.len() != height_f * width_f * k {
            return Err(Error::ShapeError(format!(
                "expected {} scores, got {}",
                height_f * width_f * k,
                scores.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig("similarity scores must be finite".into()));
        }
        Ok(Self {
            height_f,
            width_f,
            k,
            scores,
        })
    }

    pub fn height_f(&self) -> usize {
        self.height_f
    }

    pub fn width_f(&self) -> usize {
        self.width_f
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Scores of the patch at `(row, col)` for every token.
    pub fn patch(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.width_f + col) * self.k;
        &self.scores[start..start + self.k]
    }
}

/// Per-patch token weights; each patch's weights are non-negative and sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGrid {
    height_f: usize,
    width_f: usize,
    k: usize,
    weights: Vec<f64>,
}

impl WeightGrid {
    pub fn height_f(&self) -> usize {
        self.height_f
    }

    pub fn width_f(&self) -> usize {
        self.width_f
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn patch(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.width_f + col) * self.k;
        &self.weights[start..start + self.k]
    }
}

/// Depth in meters for each patch of the feature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchDepths {
    height_f: usize,
    width_f: usize,
    depths: Vec<f64>,
}

impl PatchDepths {
    pub fn new(height_f: usize, width_f: usize, depths: Vec<f64>) -> Result<Self> {
        if height_f == 0 || width_f == 0 || depths.len() != height_f * width_f {
            return Err(Error::ShapeError(format!(
                "{} patch depths do not fill a {height_f}x{width_f} grid",
                depths.len()
            )));
        }
        Ok(Self {
            height_f,
            width_f,
            depths,
        })
    }

    pub fn height_f(&self) -> usize {
        self.height_f
    }

    pub fn width_f(&self) -> usize {
        self.width_f
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.depths[row * self.width_f + col]
    }
}

fn l2_norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

/// Cosine similarity of every patch embedding with every token embedding.
pub fn cosine_similarity(fm: &FeatureMap, tb: &TextBank) -> Result<SimilarityGrid> {
    if fm.channels() != tb.channels() {
        return Err(Error::ChannelMismatch {
            features: fm.channels(),
            text: tb.channels(),
        });
    }
    let k = tb.len();
    let token_norms = (0..k)
        .map(|t| match l2_norm(tb.embedding(t)) {
            n if n > 0.0 => Ok(n),
            _ => Err(Error::ZeroNormVector {
                what: "token",
                index: t,
            }),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut scores = Vec::with_capacity(fm.num_patches() * k);
    for (p, patch) in fm.patches().enumerate() {
        let patch_norm = l2_norm(patch);
        if patch_norm == 0.0 {
            return Err(Error::ZeroNormVector {
                what: "patch",
                index: p,
            });
        }
        for (t, &token_norm) in token_norms.iter().enumerate() {
            let dot: f64 = patch
                .iter()
                .zip(tb.embedding(t))
                .map(|(&a, &b)| f64::from(a) * f64::from(b))
                .sum();
            scores.push(dot / (patch_norm * token_norm));
        }
    }
    Ok(SimilarityGrid {
        height_f: fm.height_f(),
        width_f: fm.width_f(),
        k,
        scores,
    })
}

/// Stable softmax of `scores / tau` written into `out`.
fn softmax_row(scores: &[f64], tau: f64, out: &mut [f64]) {
    let max = scores
        .iter()
        .map(|s| s / tau)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (w, s) in out.iter_mut().zip(scores) {
        *w = (s / tau - max).exp();
        total += *w;
    }
    for w in out.iter_mut() {
        *w /= total;
    }
}

/// Temperature softmax over the token axis of every patch.
pub fn temperature_softmax(sg: &SimilarityGrid, t: Temperature) -> WeightGrid {
    let mut weights = vec![0.0; sg.scores.len()];
    for (scores, out) in sg.scores.chunks_exact(sg.k).zip(weights.chunks_exact_mut(sg.k)) {
        softmax_row(scores, t.value(), out);
    }
    WeightGrid {
        height_f: sg.height_f,
        width_f: sg.width_f,
        k: sg.k,
        weights,
    }
}

/// Weighted combination of a partition's depth bins for every patch.
pub fn combine_bins(wg: &WeightGrid, bp: &BinPartition) -> Result<PatchDepths> {
    combine_bin_values(wg, bp.values())
}

/// Same as [`combine_bins`] for an arbitrary (not necessarily sorted) list of
/// positive bin depths. The result is clamped to `[min(bins), max(bins)]` to
/// absorb rounding in the weight sum.
pub fn combine_bin_values(wg: &WeightGrid, bins: &[f64]) -> Result<PatchDepths> {
    if bins.len() != wg.k {
        return Err(Error::ArityMismatch {
            tokens: wg.k,
            bins: bins.len(),
        });
    }
    let lo = bins.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = bins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let depths = wg
        .weights
        .chunks_exact(wg.k)
        .map(|w| {
            w.iter()
                .zip(bins)
                .fold(0.0, |acc, (w, d)| acc + w * d)
                .clamp(lo, hi)
        })
        .collect();
    Ok(PatchDepths {
        height_f: wg.height_f,
        width_f: wg.width_f,
        depths,
    })
}

/// Expands patch depths to an `out_height x out_width` pixel map. Pixel
/// `(r, c)` takes the depth of patch `(r * Hf / out_height, c * Wf / out_width)`
/// (floor division).
pub fn patch_to_pixel(pd: &PatchDepths, out_height: usize, out_width: usize) -> Result<DepthMap> {
    if out_height < pd.height_f || out_width < pd.width_f {
        return Err(Error::ShapeError(format!(
            "output {out_height}x{out_width} is smaller than the {}x{} patch grid",
            pd.height_f, pd.width_f
        )));
    }
    let col_patch: Vec<usize> = (0..out_width)
        .map(|c| c * pd.width_f / out_width)
        .collect();
    let mut data = Vec::with_capacity(out_height * out_width);
    for r in 0..out_height {
        let pr = r * pd.height_f / out_height;
        let row = &pd.depths[pr * pd.width_f..(pr + 1) * pd.width_f];
        data.extend(col_patch.iter().map(|&pc| row[pc]));
    }
    DepthMap::new(out_height, out_width, data)
}

/// Patch-level depth prediction (before pixel expansion).
pub fn predict_patches(
    fm: &FeatureMap,
    tb: &TextBank,
    bp: &BinPartition,
    t: Temperature,
) -> Result<PatchDepths> {
    validate_pairing(fm, tb, bp)?;
    let sg = cosine_similarity(fm, tb)?;
    let wg = temperature_softmax(&sg, t);
    combine_bins(&wg, bp)
}

/// Full prediction pipeline producing an `out_height x out_width` depth map.
pub fn predict(
    fm: &FeatureMap,
    tb: &TextBank,
    bp: &BinPartition,
    t: Temperature,
    out_height: usize,
    out_width: usize,
) -> Result<DepthMap> {
    let pd = predict_patches(fm, tb, bp, t)?;
    patch_to_pixel(&pd, out_height, out_width)
}

/// Response of one patch to one semantic token.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TokenResponse {
    pub token: String,
    pub similarity: f64,
    pub weight: f64,
    pub bin: f64,
    /// `weight * bin`, in meters.
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PatchInspection {
    pub row: usize,
    pub col: usize,
    /// Predicted patch depth, equal to [`predict`] at this patch.
    pub depth: f64,
    pub responses: Vec<TokenResponse>,
}

/// Breaks down the prediction of a single patch token by token.
pub fn inspect_patch(
    fm: &FeatureMap,
    tb: &TextBank,
    bp: &BinPartition,
    t: Temperature,
    row: usize,
    col: usize,
) -> Result<PatchInspection> {
    if row >= fm.height_f() || col >= fm.width_f() {
        return Err(Error::IndexOutOfRange {
            row,
            col,
            height: fm.height_f(),
            width: fm.width_f(),
        });
    }
    validate_pairing(fm, tb, bp)?;
    let single = FeatureMap::new(1, 1, fm.channels(), fm.patch(row, col).to_vec(), fm.source_id())?;
    let sg = cosine_similarity(&single, tb)?;
    let wg = temperature_softmax(&sg, t);
    let depth = combine_bins(&wg, bp)?.get(0, 0);
    let responses = (0..tb.len())
        .map(|k| {
            let weight = wg.weights[k];
            let bin = bp.values()[k];
            TokenResponse {
                token: tb.tokens()[k].clone(),
                similarity: sg.scores[k],
                weight,
                bin,
                contribution: weight * bin,
            }
        })
        .collect();
    Ok(PatchInspection {
        row,
        col,
        depth,
        responses,
    })
}
