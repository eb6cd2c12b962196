//! Sweeps over bin partitions and prompt designs, plus ground-truth depth
//! histograms per scene class.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::manifest::EvalRecord;
use crate::metrics::{aggregate, image_stats, Aggregation, EvalMask, ImageStats, MetricReport};
use crate::model::{validate_pairing, BinPartition, DepthMap, TextBank};
use crate::projection::{
    combine_bins, cosine_similarity, patch_to_pixel, predict, temperature_softmax, Temperature,
    WeightGrid,
};

/// Named rows in configuration order.
pub type SweepTable = Vec<(String, MetricReport)>;

/// Which records take part in an evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ClassFilter {
    #[default]
    All,
    Class(String),
}

impl ClassFilter {
    pub fn matches(&self, scene_class: Option<&str>) -> bool {
        match self {
            ClassFilter::All => true,
            ClassFilter::Class(c) => scene_class == Some(c.as_str()),
        }
    }
}

impl FromStr for ClassFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "" => Err(Error::InvalidConfig("empty class filter".into())),
            "all" => Ok(ClassFilter::All),
            c => Ok(ClassFilter::Class(c.to_owned())),
        }
    }
}

impl fmt::Display for ClassFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassFilter::All => f.write_str("all"),
            ClassFilter::Class(c) => f.write_str(c),
        }
    }
}

/// Settings shared by every evaluation in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalSettings {
    pub temperature: Temperature,
    pub mask: EvalMask,
    pub aggregation: Aggregation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinSweepConfig {
    partitions: Vec<BinPartition>,
    class_filter: ClassFilter,
}

impl BinSweepConfig {
    pub fn new(partitions: Vec<BinPartition>, class_filter: ClassFilter) -> Result<Self> {
        if partitions.is_empty() {
            return Err(Error::InvalidConfig("bin sweep needs at least one partition".into()));
        }
        let mut names = HashSet::new();
        for p in &partitions {
            if !names.insert(p.name()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate partition name {:?}",
                    p.name()
                )));
            }
        }
        Ok(Self {
            partitions,
            class_filter,
        })
    }

    /// The built-in original and class-dependent partitions.
    pub fn presets(class_filter: ClassFilter) -> Self {
        Self::new(crate::presets::partitions(), class_filter).expect("presets are valid")
    }

    pub fn partitions(&self) -> &[BinPartition] {
        &self.partitions
    }

    pub fn class_filter(&self) -> &ClassFilter {
        &self.class_filter
    }
}

/// A named list of semantic tokens.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PromptDesign {
    pub name: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSweepConfig {
    designs: Vec<PromptDesign>,
    template: String,
}

impl PromptSweepConfig {
    pub fn new(designs: Vec<PromptDesign>, template: impl Into<String>) -> Result<Self> {
        let Some(first) = designs.first() else {
            return Err(Error::InvalidConfig("prompt sweep needs at least one design".into()));
        };
        let k = first.tokens.len();
        let mut names = HashSet::new();
        for d in &designs {
            if !names.insert(d.name.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate design name {:?}", d.name)));
            }
            if d.tokens.len() != k || k == 0 {
                return Err(Error::InvalidConfig(format!(
                    "design {:?} has {} tokens, expected {k} (> 0)",
                    d.name,
                    d.tokens.len()
                )));
            }
        }
        Ok(Self {
            designs,
            template: template.into(),
        })
    }

    pub fn presets() -> Self {
        Self::new(crate::presets::prompt_designs(), crate::presets::TEMPLATE)
            .expect("presets are valid")
    }

    pub fn designs(&self) -> &[PromptDesign] {
        &self.designs
    }

    pub fn template(&self) -> &str {
        &self.template
    }
}

/// Whether a bin sweep computes token weights once per record or once per
/// (partition, record).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimilarityReuse {
    #[default]
    Reuse,
    Recompute,
}

fn select<'a>(records: &'a [EvalRecord], filter: &ClassFilter) -> Result<Vec<&'a EvalRecord>> {
    let selected: Vec<&EvalRecord> = records
        .iter()
        .filter(|r| filter.matches(r.scene_class.as_deref()))
        .collect();
    if selected.is_empty() {
        return Err(match filter {
            ClassFilter::All => Error::Empty("no records to evaluate"),
            ClassFilter::Class(c) => Error::EmptyClassFilter(c.clone()),
        });
    }
    Ok(selected)
}

fn ground_truth(record: &EvalRecord) -> Result<&DepthMap> {
    record
        .gt
        .as_ref()
        .ok_or_else(|| Error::MissingGroundTruth(record.image_id.clone()))
}

/// Predicts every record at its ground-truth resolution and aggregates metrics.
pub fn evaluate(
    records: &[&EvalRecord],
    tb: &TextBank,
    bp: &BinPartition,
    settings: &EvalSettings,
) -> Result<MetricReport> {
    let stats = records
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let run = || -> Result<ImageStats> {
                let gt = ground_truth(r)?;
                let pred = predict(&r.features, tb, bp, settings.temperature, gt.height(), gt.width())?;
                image_stats(&pred, gt, &settings.mask)
            };
            run().map_err(|e| e.at_image(i))
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate(&stats, settings.aggregation)
}

/// One metric row per partition, restricted to the configured scene class.
pub fn run_bin_sweep(
    cfg: &BinSweepConfig,
    records: &[EvalRecord],
    tb: &TextBank,
    settings: &EvalSettings,
) -> Result<SweepTable> {
    run_bin_sweep_with(cfg, records, tb, settings, SimilarityReuse::Reuse)
}

pub fn run_bin_sweep_with(
    cfg: &BinSweepConfig,
    records: &[EvalRecord],
    tb: &TextBank,
    settings: &EvalSettings,
    reuse: SimilarityReuse,
) -> Result<SweepTable> {
    let selected = select(records, &cfg.class_filter)?;
    for bp in &cfg.partitions {
        if bp.len() != tb.len() {
            return Err(Error::ArityMismatch {
                tokens: tb.len(),
                bins: bp.len(),
            });
        }
    }

    match reuse {
        SimilarityReuse::Recompute => cfg
            .partitions
            .iter()
            .map(|bp| Ok((bp.name().to_owned(), evaluate(&selected, tb, bp, settings)?)))
            .collect(),
        SimilarityReuse::Reuse => {
            // Weights do not depend on the bins; compute them once per record.
            let weights = selected
                .par_iter()
                .enumerate()
                .map(|(i, r)| {
                    let run = || -> Result<(WeightGrid, &DepthMap)> {
                        validate_pairing(&r.features, tb, &cfg.partitions[0])?;
                        let sg = cosine_similarity(&r.features, tb)?;
                        Ok((temperature_softmax(&sg, settings.temperature), ground_truth(r)?))
                    };
                    run().map_err(|e| e.at_image(i))
                })
                .collect::<Result<Vec<_>>>()?;

            cfg.partitions
                .iter()
                .map(|bp| {
                    let stats = weights
                        .par_iter()
                        .enumerate()
                        .map(|(i, (wg, gt))| {
                            let run = || -> Result<ImageStats> {
                                let patches = combine_bins(wg, bp)?;
                                let pred = patch_to_pixel(&patches, gt.height(), gt.width())?;
                                image_stats(&pred, gt, &settings.mask)
                            };
                            run().map_err(|e| e.at_image(i))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok((bp.name().to_owned(), aggregate(&stats, settings.aggregation)?))
                })
                .collect()
        }
    }
}

/// One metric row per prompt design, each evaluated with its own text bank.
pub fn run_prompt_sweep(
    cfg: &PromptSweepConfig,
    records: &[EvalRecord],
    banks: &BTreeMap<String, TextBank>,
    bp: &BinPartition,
    settings: &EvalSettings,
) -> Result<SweepTable> {
    let selected = select(records, &ClassFilter::All)?;
    cfg.designs
        .iter()
        .map(|design| {
            let tb = banks
                .get(&design.name)
                .ok_or_else(|| Error::MissingTextBank(design.name.clone()))?;
            if tb.tokens() != design.tokens.as_slice() || tb.template() != cfg.template {
                return Err(Error::MetadataMismatch(format!(
                    "text bank for design {:?} was encoded from {:?} with template {:?}",
                    design.name,
                    tb.tokens(),
                    tb.template()
                )));
            }
            Ok((design.name.clone(), evaluate(&selected, tb, bp, settings)?))
        })
        .collect()
}

/// Counts of valid ground-truth depths per bin `(edges[i], edges[i + 1]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthHistogram {
    pub edges_len: usize,
    pub counts: Vec<u64>,
    /// Valid depths `<= edges[0]`.
    pub below: u64,
    /// Valid depths `> edges[last]`.
    pub above: u64,
}

impl DepthHistogram {
    /// All valid pixels seen: `sum(counts) + below + above`.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.below + self.above
    }
}

/// Histogram of valid ground-truth depths for records of one scene class.
pub fn depth_histogram<'a, I>(samples: I, filter: &ClassFilter, edges: &[f64]) -> Result<DepthHistogram>
where
    I: IntoIterator<Item = (Option<&'a str>, &'a DepthMap)>,
{
    if edges.len() < 2
        || edges.iter().any(|e| !e.is_finite())
        || edges.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::InvalidConfig(
            "histogram edges must be at least two finite, strictly increasing values".into(),
        ));
    }
    let mut hist = DepthHistogram {
        edges_len: edges.len(),
        counts: vec![0; edges.len() - 1],
        below: 0,
        above: 0,
    };
    let mut matched = false;
    for (class, gt) in samples {
        if !filter.matches(class) {
            continue;
        }
        matched = true;
        for &d in gt.data().iter().filter(|&&d| DepthMap::is_valid_depth(d)) {
            match edges.partition_point(|&e| e < d) {
                0 => hist.below += 1,
                i if i == edges.len() => hist.above += 1,
                i => hist.counts[i - 1] += 1,
            }
        }
    }
    if !matched {
        return Err(match filter {
            ClassFilter::All => Error::Empty("no ground-truth maps to histogram"),
            ClassFilter::Class(c) => Error::EmptyClassFilter(c.clone()),
        });
    }
    Ok(hist)
}
