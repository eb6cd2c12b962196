use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use lingdepth::ablation::{
    depth_histogram, run_bin_sweep, run_prompt_sweep, BinSweepConfig, ClassFilter,
    EvalSettings, PromptDesign, PromptSweepConfig,
};
use lingdepth::baseline::{random_depth_map, RandomBaselineConfig};
use lingdepth::io::container::{read_feature_map, read_text_bank};
use lingdepth::io::depth_file::{read_depth_map, write_depth_map};
use lingdepth::io::pgm::export_pgm;
use lingdepth::io::report::write_report;
use lingdepth::manifest::{EvalRecord, Manifest};
use lingdepth::metrics::{aggregate, image_stats};
use lingdepth::{
    inspect_patch, predict, presets, Aggregation, BinPartition, Error, EvalMask, Result,
    Temperature,
};

#[derive(Parser)]
#[command(name = "lingdepth", version, about = "Zero-shot depth from patch/prompt similarity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Predict a depth map from a feature container and a text bank.
    Predict(PredictArgs),
    /// Predict every manifest record at its ground-truth resolution.
    PredictAll(PredictAllArgs),
    /// Evaluate predicted depth files against manifest ground truth.
    Eval(EvalArgs),
    /// Compare bin partitions on (a class subset of) a manifest.
    AblateBins(AblateBinsArgs),
    /// Compare prompt designs, one text bank per design.
    AblatePrompts(AblatePromptsArgs),
    /// Evaluate the uniform random lower bound.
    Baseline(BaselineArgs),
    /// Per-token breakdown of one patch's prediction.
    Inspect(InspectArgs),
    /// Export a depth file as a 16-bit PGM image.
    ExportPgm(ExportPgmArgs),
    /// Histogram of ground-truth depths for a scene class.
    Histogram(HistogramArgs),
}

#[derive(Args)]
struct MaskArgs {
    #[arg(long, default_value_t = 0.0)]
    min_depth: f64,
    #[arg(long, default_value_t = 10.0)]
    max_depth: f64,
    /// per-image or pooled
    #[arg(long, default_value = "per-image")]
    agg: String,
}

impl MaskArgs {
    fn mask(&self) -> Result<EvalMask> {
        EvalMask::new(self.min_depth, self.max_depth)
    }

    fn settings(&self, temperature: f64) -> Result<EvalSettings> {
        Ok(EvalSettings {
            temperature: Temperature::new(temperature)?,
            mask: self.mask()?,
            aggregation: self.agg.parse()?,
        })
    }
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    text: PathBuf,
    /// Built-in partition name or a JSON file {"name": .., "bins": [..]}.
    #[arg(long, default_value = "original")]
    bins: String,
    #[arg(long, default_value_t = presets::TEMPERATURE)]
    temperature: f64,
    /// Output size HxW; defaults to the patch grid.
    #[arg(long)]
    out_size: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictAllArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    text: PathBuf,
    #[arg(long, default_value = "original")]
    bins: String,
    #[arg(long, default_value_t = presets::TEMPERATURE)]
    temperature: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    pred_dir: PathBuf,
    #[command(flatten)]
    mask: MaskArgs,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct AblateBinsArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    text: PathBuf,
    /// JSON list of partitions; defaults to the built-in set.
    #[arg(long)]
    partitions: Option<PathBuf>,
    #[arg(long, default_value = "all")]
    class: String,
    #[arg(long, default_value_t = presets::TEMPERATURE)]
    temperature: f64,
    #[command(flatten)]
    mask: MaskArgs,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct AblatePromptsArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory holding one `<design>.dce` text bank per design.
    #[arg(long)]
    text_dir: PathBuf,
    /// JSON design list; defaults to every container in --text-dir.
    #[arg(long)]
    designs: Option<PathBuf>,
    #[arg(long, default_value = "original")]
    bins: String,
    #[arg(long, default_value_t = presets::TEMPERATURE)]
    temperature: f64,
    #[command(flatten)]
    mask: MaskArgs,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    low: f64,
    #[arg(long, default_value_t = 10.0)]
    high: f64,
    #[command(flatten)]
    mask: MaskArgs,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    text: PathBuf,
    #[arg(long, default_value = "original")]
    bins: String,
    #[arg(long, default_value_t = presets::TEMPERATURE)]
    temperature: f64,
    /// Patch coordinates as row,col.
    #[arg(long)]
    patch: String,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ExportPgmArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    max_depth: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct HistogramArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "all")]
    class: String,
    /// Comma-separated bin edges in meters.
    #[arg(long, default_value = "0,1,2,3,4,5,6,7,8,9,10")]
    edges: String,
}

fn parse_pair(s: &str, sep: char, what: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidConfig(format!("{what} must look like A{sep}B, got {s:?}"));
    let (a, b) = s.split_once(sep).ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn resolve_bins(name_or_path: &str) -> Result<BinPartition> {
    match presets::partition(name_or_path) {
        Some(bp) => Ok(bp),
        None => read_json(Path::new(name_or_path)),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PartitionsFile {
    List(Vec<BinPartition>),
    Wrapped { partitions: Vec<BinPartition> },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DesignsFile {
    List(Vec<PromptDesign>),
    Wrapped {
        template: Option<String>,
        designs: Vec<PromptDesign>,
    },
}

fn load_records(manifest: &Path) -> Result<Vec<EvalRecord>> {
    Manifest::load(manifest)?.load_records()
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let fm = read_feature_map(&a.features)?;
    let tb = read_text_bank(&a.text)?;
    let bp = resolve_bins(&a.bins)?;
    let (h, w) = match &a.out_size {
        Some(s) => parse_pair(s, 'x', "--out-size")?,
        None => (fm.height_f(), fm.width_f()),
    };
    let dm = predict(&fm, &tb, &bp, Temperature::new(a.temperature)?, h, w)?;
    write_depth_map(&a.out, &dm)
}

fn cmd_predict_all(a: PredictAllArgs) -> Result<()> {
    let tb = read_text_bank(&a.text)?;
    let bp = resolve_bins(&a.bins)?;
    let t = Temperature::new(a.temperature)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::Io {
        path: a.out_dir.clone(),
        source: e,
    })?;
    for (i, r) in load_records(&a.manifest)?.iter().enumerate() {
        let (h, w) = r
            .gt
            .as_ref()
            .map(|g| g.shape())
            .unwrap_or((r.features.height_f(), r.features.width_f()));
        let dm = predict(&r.features, &tb, &bp, t, h, w).map_err(|e| e_at(e, i))?;
        write_depth_map(a.out_dir.join(format!("{}.dpm", r.image_id)), &dm)?;
    }
    Ok(())
}

fn e_at(e: Error, index: usize) -> Error {
    Error::Image {
        index,
        source: Box::new(e),
    }
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let mask = a.mask.mask()?;
    let agg: Aggregation = a.mask.agg.parse()?;
    let gts = Manifest::load(&a.manifest)?.load_ground_truth()?;
    let stats = gts
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let pred = read_depth_map(a.pred_dir.join(format!("{}.dpm", r.image_id)))?;
            image_stats(&pred, &r.gt, &mask).map_err(|e| e_at(e, i))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = aggregate(&stats, agg)?;
    write_report(&[("eval".to_string(), report)], &a.report)
}

fn cmd_ablate_bins(a: AblateBinsArgs) -> Result<()> {
    let tb = read_text_bank(&a.text)?;
    let filter: ClassFilter = a.class.parse()?;
    let cfg = match &a.partitions {
        Some(path) => {
            let parts = match read_json::<PartitionsFile>(path)? {
                PartitionsFile::List(p) | PartitionsFile::Wrapped { partitions: p } => p,
            };
            BinSweepConfig::new(parts, filter)?
        }
        None => BinSweepConfig::presets(filter),
    };
    let records = load_records(&a.manifest)?;
    let table = run_bin_sweep(&cfg, &records, &tb, &a.mask.settings(a.temperature)?)?;
    write_report(&table, &a.report)
}

fn cmd_ablate_prompts(a: AblatePromptsArgs) -> Result<()> {
    let mut banks = BTreeMap::new();
    let cfg = match &a.designs {
        Some(path) => {
            let (template, designs) = match read_json::<DesignsFile>(path)? {
                DesignsFile::List(d) => (None, d),
                DesignsFile::Wrapped { template, designs } => (template, designs),
            };
            for d in &designs {
                let file = a.text_dir.join(format!("{}.dce", d.name));
                if file.exists() {
                    banks.insert(d.name.clone(), read_text_bank(&file)?);
                }
            }
            PromptSweepConfig::new(designs, template.unwrap_or_else(|| presets::TEMPLATE.into()))?
        }
        None => {
            let entries = std::fs::read_dir(&a.text_dir).map_err(|e| Error::Io {
                path: a.text_dir.clone(),
                source: e,
            })?;
            let mut files: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "dce"))
                .collect();
            files.sort();
            let mut designs = Vec::new();
            let mut template = None;
            for file in files {
                let name = file.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                let tb = read_text_bank(&file)?;
                template.get_or_insert_with(|| tb.template().to_owned());
                designs.push(PromptDesign {
                    name: name.clone(),
                    tokens: tb.tokens().to_vec(),
                });
                banks.insert(name, tb);
            }
            PromptSweepConfig::new(designs, template.unwrap_or_default())?
        }
    };
    let bp = resolve_bins(&a.bins)?;
    let records = load_records(&a.manifest)?;
    let table = run_prompt_sweep(&cfg, &records, &banks, &bp, &a.mask.settings(a.temperature)?)?;
    write_report(&table, &a.report)
}

fn cmd_baseline(a: BaselineArgs) -> Result<()> {
    let cfg = RandomBaselineConfig::new(a.seed, a.low, a.high)?;
    let mask = a.mask.mask()?;
    let agg: Aggregation = a.mask.agg.parse()?;
    let gts = Manifest::load(&a.manifest)?.load_ground_truth()?;
    let stats = gts
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let pred = random_depth_map(&cfg, &r.image_id, r.gt.height(), r.gt.width())?;
            image_stats(&pred, &r.gt, &mask).map_err(|e| e_at(e, i))
        })
        .collect::<Result<Vec<_>>>()?;
    write_report(&[("lower-bound".to_string(), aggregate(&stats, agg)?)], &a.report)
}

fn cmd_inspect(a: InspectArgs) -> Result<()> {
    let fm = read_feature_map(&a.features)?;
    let tb = read_text_bank(&a.text)?;
    let bp = resolve_bins(&a.bins)?;
    let (row, col) = parse_pair(&a.patch, ',', "--patch")?;
    let ins = inspect_patch(&fm, &tb, &bp, Temperature::new(a.temperature)?, row, col)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&ins)?);
        return Ok(());
    }
    println!("patch ({row}, {col}) of {}x{}: depth {:.4} m", fm.height_f(), fm.width_f(), ins.depth);
    println!(
        "{:<20} {:>10} {:>8} {:>7} {:>12}",
        "token", "similarity", "weight", "bin", "contribution"
    );
    for r in &ins.responses {
        println!(
            "{:<20} {:>10.4} {:>8.4} {:>7.2} {:>12.4}",
            r.token, r.similarity, r.weight, r.bin, r.contribution
        );
    }
    Ok(())
}

fn cmd_export_pgm(a: ExportPgmArgs) -> Result<()> {
    export_pgm(&read_depth_map(&a.input)?, &a.out, a.max_depth)
}

fn cmd_histogram(a: HistogramArgs) -> Result<()> {
    let edges = a
        .edges
        .split(',')
        .map(|e| {
            e.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad edge {e:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let filter: ClassFilter = a.class.parse()?;
    let gts = Manifest::load(&a.manifest)?.load_ground_truth()?;
    let hist = depth_histogram(
        gts.iter().map(|r| (r.scene_class.as_deref(), &r.gt)),
        &filter,
        &edges,
    )?;
    let total = hist.total().max(1) as f64;
    println!("class {filter}: {} valid pixels", hist.total());
    println!("<= {:<8} {:>12}", edges[0], hist.below);
    for (i, c) in hist.counts.iter().enumerate() {
        println!(
            "({}, {}] {:>12} {:>8.4}",
            edges[i],
            edges[i + 1],
            c,
            *c as f64 / total
        );
    }
    println!("> {:<9} {:>12}", edges[edges.len() - 1], hist.above);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Predict(a) => cmd_predict(a),
        Command::PredictAll(a) => cmd_predict_all(a),
        Command::Eval(a) => cmd_eval(a),
        Command::AblateBins(a) => cmd_ablate_bins(a),
        Command::AblatePrompts(a) => cmd_ablate_prompts(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Inspect(a) => cmd_inspect(a),
        Command::ExportPgm(a) => cmd_export_pgm(a),
        Command::Histogram(a) => cmd_histogram(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
