#![allow(dead_code, clippy::needless_range_loop)]

//! Test fixtures and independent reference computations.
//!
//! Nothing in here calls into the projection or metrics code paths; the
//! reference functions are deliberately naive loops over raw arrays.

use std::path::{Path, PathBuf};

use lingdepth::io::container::{write_feature_map, write_text_bank};
use lingdepth::io::depth_file::write_depth_map;
use lingdepth::manifest::{Manifest, ManifestRecord};
use lingdepth::{BinPartition, DepthMap, FeatureMap, TextBank};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random prediction problem with Hf, Wf <= 8, C <= 16, K <= 7.
#[derive(Debug, Clone)]
pub struct Instance {
    pub hf: usize,
    pub wf: usize,
    pub c: usize,
    pub k: usize,
    pub features: Vec<f32>,
    pub tokens: Vec<f32>,
    pub bins: Vec<f64>,
    pub tau: f64,
    pub out_h: usize,
    pub out_w: usize,
}

fn nonzero_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f32> {
    loop {
        let v: Vec<f32> = (0..n).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        if v.iter().any(|&x| x != 0.0) {
            return v;
        }
    }
}

/// Strictly increasing positive bins spanning at most 1.8 m.
pub fn random_bins(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut d = rng.gen_range(0.5..1.5);
    let mut bins = Vec::with_capacity(k);
    for _ in 0..k {
        bins.push(d);
        d += rng.gen_range(0.02..0.3);
    }
    bins
}

impl Instance {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hf = rng.gen_range(1..=8);
        let wf = rng.gen_range(1..=8);
        let c = rng.gen_range(1..=16);
        let k = rng.gen_range(1..=7);
        let features = (0..hf * wf).flat_map(|_| nonzero_vec(&mut rng, c)).collect();
        let tokens = (0..k).flat_map(|_| nonzero_vec(&mut rng, c)).collect();
        let bins = random_bins(&mut rng, k);
        let tau = 10f64.powf(rng.gen_range(-1.7..0.3));
        let out_h = hf * rng.gen_range(1..=3) + rng.gen_range(0..3);
        let out_w = wf * rng.gen_range(1..=3) + rng.gen_range(0..3);
        Self {
            hf,
            wf,
            c,
            k,
            features,
            tokens,
            bins,
            tau,
            out_h,
            out_w,
        }
    }

    pub fn token_names(&self) -> Vec<String> {
        (0..self.k).map(|i| format!("token-{i}")).collect()
    }

    pub fn feature_map(&self) -> FeatureMap {
        FeatureMap::new(self.hf, self.wf, self.c, self.features.clone(), "instance").unwrap()
    }

    pub fn text_bank(&self) -> TextBank {
        TextBank::new(self.token_names(), "This object is {}", self.tokens.clone(), self.c).unwrap()
    }

    pub fn bin_partition(&self) -> BinPartition {
        BinPartition::new("random", self.bins.clone()).unwrap()
    }
}

/// Straight-line prediction: for each output pixel, locate its patch, compute
/// cosine similarities, a plain (unshifted) softmax and the weighted bin sum.
pub fn reference_predict(inst: &Instance) -> Vec<f64> {
    let mut out = Vec::with_capacity(inst.out_h * inst.out_w);
    for r in 0..inst.out_h {
        for c in 0..inst.out_w {
            let pr = r * inst.hf / inst.out_h;
            let pc = c * inst.wf / inst.out_w;
            let base = (pr * inst.wf + pc) * inst.c;
            let patch = &inst.features[base..base + inst.c];

            let mut exps = vec![0.0f64; inst.k];
            let mut total = 0.0f64;
            for t in 0..inst.k {
                let token = &inst.tokens[t * inst.c..(t + 1) * inst.c];
                let mut dot = 0.0f64;
                let mut pp = 0.0f64;
                let mut tt = 0.0f64;
                for i in 0..inst.c {
                    dot += patch[i] as f64 * token[i] as f64;
                    pp += patch[i] as f64 * patch[i] as f64;
                    tt += token[i] as f64 * token[i] as f64;
                }
                let sim = dot / (pp.sqrt() * tt.sqrt());
                exps[t] = (sim / inst.tau).exp();
                total += exps[t];
            }
            let mut depth = 0.0;
            for t in 0..inst.k {
                depth += exps[t] / total * inst.bins[t];
            }
            out.push(depth);
        }
    }
    out
}

/// Raw per-pixel metric sums, straight from the formulas.
pub fn reference_metrics(pred: &[f64], gt: &[f64], max_depth: f64) -> [f64; 6] {
    let mut n = 0.0;
    let mut sums = [0.0f64; 6];
    for (&y, &g) in pred.iter().zip(gt) {
        if !(g > 0.0 && g <= max_depth) {
            continue;
        }
        n += 1.0;
        let ratio = if y / g > g / y { y / g } else { g / y };
        for (i, thr) in [1.25, 1.25 * 1.25, 1.25 * 1.25 * 1.25].iter().enumerate() {
            if ratio < *thr {
                sums[i] += 1.0;
            }
        }
        sums[3] += (y - g).abs() / g;
        sums[4] += (y.log10() - g.log10()).abs();
        sums[5] += (y - g) * (y - g);
    }
    [
        sums[0] / n,
        sums[1] / n,
        sums[2] / n,
        sums[3] / n,
        sums[4] / n,
        (sums[5] / n).sqrt(),
    ]
}

/// P(max(X/Y, Y/X) < t) for X, Y independent uniform on (0, a], by composite
/// Simpson integration of the conditional probability over x.
pub fn uniform_ratio_probability(t: f64, a: f64) -> f64 {
    // For fixed x, y must lie in (x / t, min(x t, a)).
    let inner = |x: f64| ((x * t).min(a) - x / t).max(0.0) / a;
    let simpson = |lo: f64, hi: f64, n: usize| {
        let h = (hi - lo) / n as f64;
        let mut s = inner(lo) + inner(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * inner(lo + i as f64 * h);
        }
        s * h / 3.0
    };
    // Split at the kink x = a / t.
    (simpson(0.0, a / t, 2000) + simpson(a / t, a, 2000)) / a
}

pub struct SyntheticDataset {
    pub dir: PathBuf,
    pub manifest_path: PathBuf,
    pub text_path: PathBuf,
    pub text_bank: TextBank,
}

/// Writes `n` images (features + ground truth) cycling through `classes`,
/// plus one text bank and a manifest, all under `dir`.
pub fn write_synthetic_dataset(
    dir: &Path,
    n: usize,
    seed: u64,
    classes: &[&str],
) -> SyntheticDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (c, k) = (8usize, 7usize);
    std::fs::create_dir_all(dir.join("features")).unwrap();
    std::fs::create_dir_all(dir.join("gt")).unwrap();

    let tokens: Vec<f32> = (0..k).flat_map(|_| nonzero_vec(&mut rng, c)).collect();
    let names = lingdepth::presets::TOKENS.iter().map(|t| t.to_string()).collect();
    let text_bank = TextBank::new(names, lingdepth::presets::TEMPLATE, tokens, c).unwrap();
    let text_path = dir.join("text.dce");
    write_text_bank(&text_path, &text_bank).unwrap();

    let mut records = Vec::new();
    for i in 0..n {
        let (hf, wf) = (rng.gen_range(2..=5), rng.gen_range(2..=6));
        let data = (0..hf * wf).flat_map(|_| nonzero_vec(&mut rng, c)).collect();
        let id = format!("img_{i:04}");
        let fm = FeatureMap::new(hf, wf, c, data, id.clone()).unwrap();
        let (h, w) = (hf * 3 + 1, wf * 4);
        let gt_data = (0..h * w)
            .map(|_| match rng.gen_range(0..20) {
                0 => f64::NAN,
                1 => 0.0,
                2 => 12.0,
                _ => rng.gen_range(0.3..6.0),
            })
            .collect();
        let gt = DepthMap::new(h, w, gt_data).unwrap();
        let fpath = PathBuf::from("features").join(format!("{id}.dce"));
        let gpath = PathBuf::from("gt").join(format!("{id}.dpm"));
        write_feature_map(dir.join(&fpath), &fm).unwrap();
        write_depth_map(dir.join(&gpath), &gt).unwrap();
        records.push(ManifestRecord {
            image_id: id,
            features_path: fpath,
            gt_path: Some(gpath),
            scene_class: classes.get(i % classes.len().max(1)).map(|c| c.to_string()),
        });
    }
    let manifest = Manifest::from_records(records, dir).unwrap();
    let manifest_path = dir.join("manifest.jsonl");
    std::fs::write(&manifest_path, manifest.to_jsonl()).unwrap();
    SyntheticDataset {
        dir: dir.to_path_buf(),
        manifest_path,
        text_path,
        text_bank,
    }
}
