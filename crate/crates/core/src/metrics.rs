//! Depth error metrics: threshold accuracies, mean absolute relative error,
//! mean absolute log10 error and RMSE, over ground-truth-masked pixels.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::DepthMap;

/// Threshold base; `delta_i` counts ratios below `THRESHOLD_BASE^i`.
pub const THRESHOLD_BASE: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MetricReport {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub rel: f64,
    pub log10: f64,
    /// Meters.
    pub rmse: f64,
    pub n_images: usize,
    pub n_pixels: usize,
}

/// Rectangular region `rows [top, bottom) x cols [left, right)` kept for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Crop {
    pub top: usize,
    pub bottom: usize,
    pub left: usize,
    pub right: usize,
}

/// Ground-truth pixels count when `min_depth < gt <= max_depth` and, if a
/// crop is set, they lie inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalMask {
    min_depth: f64,
    max_depth: f64,
    crop: Option<Crop>,
}

impl EvalMask {
    pub fn new(min_depth: f64, max_depth: f64) -> Result<Self> {
        if !(min_depth.is_finite() && max_depth.is_finite() && 0.0 <= min_depth && min_depth < max_depth) {
            return Err(Error::InvalidConfig(format!(
                "evaluation range must satisfy 0 <= min < max, got ({min_depth}, {max_depth}]"
            )));
        }
        Ok(Self {
            min_depth,
            max_depth,
            crop: None,
        })
    }

    pub fn with_crop(mut self, crop: Crop) -> Result<Self> {
        if crop.top >= crop.bottom || crop.left >= crop.right {
            return Err(Error::InvalidConfig(format!("empty crop {crop:?}")));
        }
        self.crop = Some(crop);
        Ok(self)
    }

    pub fn min_depth(&self) -> f64 {
        self.min_depth
    }

    pub fn max_depth(&self) -> f64 {
        self.max_depth
    }

    pub fn crop(&self) -> Option<Crop> {
        self.crop
    }

    pub fn accepts(&self, gt: f64) -> bool {
        DepthMap::is_valid_depth(gt) && gt > self.min_depth && gt <= self.max_depth
    }
}

impl Default for EvalMask {
    fn default() -> Self {
        Self {
            min_depth: 0.0,
            max_depth: 10.0,
            crop: None,
        }
    }
}

/// How per-image results are combined into a dataset report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Mean of per-image metrics, each image weighted equally.
    #[default]
    PerImage,
    /// Metrics over the union of all valid pixels.
    Pooled,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-image" => Ok(Self::PerImage),
            "pooled" => Ok(Self::Pooled),
            other => Err(Error::InvalidConfig(format!(
                "unknown aggregation {other:?} (expected per-image or pooled)"
            ))),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PerImage => "per-image",
            Self::Pooled => "pooled",
        })
    }
}

/// Raw error sums for one image; aggregate with [`aggregate`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ImageStats {
    pub n: usize,
    pub abs_rel: f64,
    pub sq: f64,
    pub abs_log10: f64,
    pub hits: [usize; 3],
}

impl ImageStats {
    fn merge(&mut self, other: &ImageStats) {
        self.n += other.n;
        self.abs_rel += other.abs_rel;
        self.sq += other.sq;
        self.abs_log10 += other.abs_log10;
        for (a, b) in self.hits.iter_mut().zip(other.hits) {
            *a += b;
        }
    }

    fn report(&self, n_images: usize) -> MetricReport {
        let n = self.n as f64;
        MetricReport {
            delta1: self.hits[0] as f64 / n,
            delta2: self.hits[1] as f64 / n,
            delta3: self.hits[2] as f64 / n,
            rel: self.abs_rel / n,
            log10: self.abs_log10 / n,
            rmse: (self.sq / n).sqrt(),
            n_images,
            n_pixels: self.n,
        }
    }
}

/// Accumulates error sums for one prediction / ground-truth pair.
pub fn image_stats(pred: &DepthMap, gt: &DepthMap, mask: &EvalMask) -> Result<ImageStats> {
    if pred.shape() != gt.shape() {
        return Err(Error::ShapeMismatch {
            pred: pred.shape(),
            gt: gt.shape(),
        });
    }
    let (height, width) = gt.shape();
    let crop = mask.crop.unwrap_or(Crop {
        top: 0,
        bottom: height,
        left: 0,
        right: width,
    });
    if crop.bottom > height || crop.right > width {
        return Err(Error::ShapeError(format!(
            "crop {crop:?} exceeds the {height}x{width} image"
        )));
    }
    let thresholds = [
        THRESHOLD_BASE,
        THRESHOLD_BASE.powi(2),
        THRESHOLD_BASE.powi(3),
    ];

    let mut stats = ImageStats::default();
    for r in crop.top..crop.bottom {
        for c in crop.left..crop.right {
            let truth = gt.get(r, c);
            if !mask.accepts(truth) {
                continue;
            }
            let y = pred.get(r, c);
            if !DepthMap::is_valid_depth(y) {
                return Err(Error::NonPositivePrediction {
                    index: r * width + c,
                    value: y,
                });
            }
            let diff = y - truth;
            stats.n += 1;
            stats.abs_rel += diff.abs() / truth;
            stats.sq += diff * diff;
            stats.abs_log10 += (y.log10() - truth.log10()).abs();
            let ratio = (y / truth).max(truth / y);
            for (hit, thr) in stats.hits.iter_mut().zip(thresholds) {
                if ratio < thr {
                    *hit += 1;
                }
            }
        }
    }
    if stats.n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(stats)
}

/// Metrics for a single image.
pub fn image_metrics(pred: &DepthMap, gt: &DepthMap, mask: &EvalMask) -> Result<MetricReport> {
    Ok(image_stats(pred, gt, mask)?.report(1))
}

/// Combines per-image stats (in the given order) into one report.
pub fn aggregate(stats: &[ImageStats], agg: Aggregation) -> Result<MetricReport> {
    if stats.is_empty() {
        return Err(Error::Empty("no images to aggregate"));
    }
    match agg {
        Aggregation::Pooled => {
            let mut total = ImageStats::default();
            for s in stats {
                total.merge(s);
            }
            Ok(total.report(stats.len()))
        }
        Aggregation::PerImage => {
            let m = stats.len() as f64;
            let mut out = MetricReport {
                delta1: 0.0,
                delta2: 0.0,
                delta3: 0.0,
                rel: 0.0,
                log10: 0.0,
                rmse: 0.0,
                n_images: stats.len(),
                n_pixels: 0,
            };
            for s in stats {
                let r = s.report(1);
                out.delta1 += r.delta1;
                out.delta2 += r.delta2;
                out.delta3 += r.delta3;
                out.rel += r.rel;
                out.log10 += r.log10;
                out.rmse += r.rmse;
                out.n_pixels += r.n_pixels;
            }
            out.delta1 /= m;
            out.delta2 /= m;
            out.delta3 /= m;
            out.rel /= m;
            out.log10 /= m;
            out.rmse /= m;
            Ok(out)
        }
    }
}

/// Metrics over a dataset of `(prediction, ground truth)` pairs.
///
/// Images are evaluated in parallel; errors carry the index of the failing pair.
pub fn dataset_metrics(
    pairs: &[(&DepthMap, &DepthMap)],
    mask: &EvalMask,
    agg: Aggregation,
) -> Result<MetricReport> {
    let stats = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (pred, gt))| image_stats(pred, gt, mask).map_err(|e| e.at_image(i)))
        .collect::<Result<Vec<_>>>()?;
    aggregate(&stats, agg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dm(values: &[f64]) -> DepthMap {
        DepthMap::new(1, values.len(), values.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn identical_maps_are_perfect() {
        let gt = dm(&[0.5, 1.0, 3.0, 9.9]);
        let r = image_metrics(&gt, &gt, &EvalMask::default()).unwrap();
        assert_eq!((r.rel, r.rmse, r.log10), (0.0, 0.0, 0.0));
        assert_eq!((r.delta1, r.delta2, r.delta3), (1.0, 1.0, 1.0));
        assert_eq!(r.n_pixels, 4);
    }

    #[test]
    fn two_pixel_hand_case() {
        let r = image_metrics(&dm(&[1.0, 2.0]), &dm(&[2.0, 4.0]), &EvalMask::default()).unwrap();
        assert!(close(r.rel, 0.5, 1e-12));
        assert!(close(r.rmse, 2.5f64.sqrt(), 1e-12));
        assert!(close(r.log10, std::f64::consts::LOG10_2, 1e-12));
        assert_eq!((r.delta1, r.delta2, r.delta3), (0.0, 0.0, 0.0));
    }

    #[test]
    fn single_pixel_within_first_threshold() {
        let r = image_metrics(&dm(&[1.2]), &dm(&[1.0]), &EvalMask::default()).unwrap();
        assert_eq!(r.delta1, 1.0);
    }

    #[test]
    fn threshold_is_strict() {
        // Ratio exactly 1.25 is not below the threshold.
        let r = image_metrics(&dm(&[1.25]), &dm(&[1.0]), &EvalMask::default()).unwrap();
        assert_eq!((r.delta1, r.delta2), (0.0, 1.0));
    }

    #[test]
    fn errors() {
        let mask = EvalMask::default();
        assert!(matches!(
            image_metrics(&dm(&[1.0]), &dm(&[1.0, 2.0]), &mask),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(
            image_metrics(&dm(&[1.0]), &dm(&[f64::NAN]), &mask),
            Err(Error::EmptyMask)
        ));
        assert!(matches!(
            image_metrics(&dm(&[1.0, 0.0]), &dm(&[1.0, 2.0]), &mask),
            Err(Error::NonPositivePrediction { index: 1, .. })
        ));
        // Invalid predictions outside the mask are ignored.
        assert!(image_metrics(&dm(&[1.0, 0.0]), &dm(&[1.0, 20.0]), &mask).is_ok());
        assert!(EvalMask::new(2.0, 1.0).is_err());
        assert!(EvalMask::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn crop_restricts_pixels() {
        let gt = DepthMap::new(2, 2, vec![1.0, 1.0, 1.0, 4.0]).unwrap();
        let pred = DepthMap::filled(2, 2, 1.0).unwrap();
        let mask = EvalMask::default()
            .with_crop(Crop { top: 0, bottom: 1, left: 0, right: 2 })
            .unwrap();
        let r = image_metrics(&pred, &gt, &mask).unwrap();
        assert_eq!((r.n_pixels, r.rel), (2, 0.0));
        let big = EvalMask::default()
            .with_crop(Crop { top: 0, bottom: 3, left: 0, right: 2 })
            .unwrap();
        assert!(image_metrics(&pred, &gt, &big).is_err());
    }

    #[test]
    fn dataset_singleton_and_duplicates() {
        let mask = EvalMask::default();
        let (p, g) = (dm(&[1.0, 2.0, 3.3]), dm(&[2.0, 2.5, 3.0]));
        let single = image_metrics(&p, &g, &mask).unwrap();
        let one = dataset_metrics(&[(&p, &g)], &mask, Aggregation::PerImage).unwrap();
        assert_eq!(one, single);
        let two = dataset_metrics(&[(&p, &g), (&p, &g)], &mask, Aggregation::PerImage).unwrap();
        assert!(close(two.rel, single.rel, 1e-15));
        assert!(close(two.rmse, single.rmse, 1e-15));
        assert_eq!(two.n_images, 2);
        assert_eq!(two.n_pixels, 6);
    }

    #[test]
    fn dataset_per_image_mean_vs_pooled() {
        let mask = EvalMask::default();
        // Image A: identical, one pixel. Image B: pred=[1,2], gt=[2,4].
        let (pa, ga) = (dm(&[3.0]), dm(&[3.0]));
        let (pb, gb) = (dm(&[1.0, 2.0]), dm(&[2.0, 4.0]));
        let pairs = [(&pa, &ga), (&pb, &gb)];
        let mean = dataset_metrics(&pairs, &mask, Aggregation::PerImage).unwrap();
        assert!(close(mean.rel, 0.25, 1e-12));
        assert!(close(mean.rmse, 2.5f64.sqrt() / 2.0, 1e-12));
        assert!(close(mean.delta1, 0.5, 1e-12));
        assert!(close(mean.log10, 2f64.log10() / 2.0, 1e-12));
        let pooled = dataset_metrics(&pairs, &mask, Aggregation::Pooled).unwrap();
        assert!(close(pooled.rel, 1.0 / 3.0, 1e-12));
        assert!(close(pooled.rmse, (5.0f64 / 3.0).sqrt(), 1e-12));
        assert!(close(pooled.delta1, 1.0 / 3.0, 1e-12));
    }

    #[test]
    fn dataset_errors_carry_index() {
        let mask = EvalMask::default();
        let (p, g) = (dm(&[1.0]), dm(&[1.0]));
        let bad = dm(&[f64::NAN]);
        let err = dataset_metrics(&[(&p, &g), (&p, &bad)], &mask, Aggregation::PerImage).unwrap_err();
        assert!(matches!(err, Error::Image { index: 1, .. }));
        assert!(dataset_metrics(&[], &mask, Aggregation::PerImage).is_err());
    }

    #[test]
    fn aggregation_parses() {
        assert_eq!("pooled".parse::<Aggregation>().unwrap(), Aggregation::Pooled);
        assert_eq!("per-image".parse::<Aggregation>().unwrap(), Aggregation::PerImage);
        assert!("mean".parse::<Aggregation>().is_err());
    }

    fn depths() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((0.05f64..9.0, 0.05f64..9.0), 1..64)
    }

    fn split(pairs: &[(f64, f64)]) -> (DepthMap, DepthMap) {
        let (p, g): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        (dm(&p), dm(&g))
    }

    proptest! {
        #[test]
        fn deltas_nested(pairs in depths()) {
            let (p, g) = split(&pairs);
            let r = image_metrics(&p, &g, &EvalMask::default()).unwrap();
            prop_assert!(0.0 <= r.delta1 && r.delta1 <= r.delta2 && r.delta2 <= r.delta3 && r.delta3 <= 1.0);
        }

        #[test]
        fn deltas_symmetric(pairs in depths()) {
            let (p, g) = split(&pairs);
            let a = image_metrics(&p, &g, &EvalMask::default()).unwrap();
            let b = image_metrics(&g, &p, &EvalMask::default()).unwrap();
            prop_assert_eq!((a.delta1, a.delta2, a.delta3), (b.delta1, b.delta2, b.delta3));
        }

        #[test]
        fn scale_behavior(pairs in depths(), s in 0.1f64..10.0) {
            let mask = EvalMask::new(0.0, 1e6).unwrap();
            let (p, g) = split(&pairs);
            let scaled: Vec<(f64, f64)> = pairs.iter().map(|(a, b)| (a * s, b * s)).collect();
            let (ps, gs) = split(&scaled);
            let a = image_metrics(&p, &g, &mask).unwrap();
            let b = image_metrics(&ps, &gs, &mask).unwrap();
            prop_assert!((a.rel - b.rel).abs() <= 1e-9);
            prop_assert!((a.log10 - b.log10).abs() <= 1e-9);
            prop_assert_eq!((a.delta1, a.delta2, a.delta3), (b.delta1, b.delta2, b.delta3));
            prop_assert!((a.rmse * s - b.rmse).abs() <= 1e-9 * (1.0 + b.rmse));
        }

        #[test]
        fn masked_pixels_do_not_contribute(pairs in depths(), sentinels in proptest::collection::vec(prop_oneof![Just(0.0), Just(-1.0), Just(f64::NAN), 10.0001f64..1e4], 1..16)) {
            let (p, g) = split(&pairs);
            let base = image_metrics(&p, &g, &EvalMask::default()).unwrap();
            let mut pv = p.data().to_vec();
            let mut gv = g.data().to_vec();
            for s in &sentinels {
                pv.push(123.0);
                gv.push(*s);
            }
            let with = image_metrics(&dm(&pv), &dm(&gv), &EvalMask::default()).unwrap();
            prop_assert_eq!(base, with);
        }
    }
}
