//! `teamroles`: agent role clustering from team compositions.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use teamroles::cooccur::write_vectors_csv;
use teamroles::divergence::{DistanceKind, LOG_BASE};
use teamroles::ingest::{
    expand, filter_records, parse_records, write_wide, DataQuality, InputFormat, ParseOptions, RawRecord, Strictness,
};
use teamroles::patch_impact::compare;
use teamroles::pipeline::{analyze, AnalysisOptions, AnalysisSnapshot};
use teamroles::report::{render_summary, AnalysisReport, Fingerprint};
use teamroles::synth::{generate_records, PlantedModel};

const TOOL: &str = "teamroles";

#[derive(Parser)]
#[command(name = TOOL, version, about = "Discover agent roles from team compositions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster the agents of one dataset.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        opts: RunArgs,
    },
    /// Analyze a pre-patch and a post-patch dataset and report what moved.
    Compare {
        /// Pre-patch file, then post-patch file.
        #[arg(long, num_args = 1, required = true)]
        input: Vec<PathBuf>,
        #[command(flatten)]
        opts: RunArgs,
    },
    /// Write a synthetic dataset with planted roles.
    Synth {
        /// JSON model: roles (name, agents, affinity), noise, num_compositions, seed, map.
        #[arg(long)]
        model: PathBuf,
        /// Overrides the model's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value_t = Format::Wide)]
    format: Format,
    /// Keep only compositions played on this map (case-insensitive).
    #[arg(long)]
    map: Option<String>,
    /// Fixed number of clusters instead of the silhouette optimum.
    #[arg(long)]
    k: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Output kinds; all when absent.
    #[arg(long, value_enum, value_delimiter = ',')]
    emit: Vec<Emit>,
    /// Skip malformed rows instead of failing.
    #[arg(long)]
    lenient: bool,
    /// Single-byte field delimiter; sniffed from the header when absent.
    #[arg(long)]
    delimiter: Option<char>,
    /// Use the square root of the divergence as the distance.
    #[arg(long)]
    sqrt_jsd: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Wide,
    Long,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Json,
    Csv,
    Newick,
    Dot,
}

/// A failure caused by what the user supplied (exit code 2).
#[derive(Debug)]
struct InputError(String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Analyze { input, opts } => cmd_analyze(&input, &opts),
        Command::Compare { input, opts } => cmd_compare(&input, &opts),
        Command::Synth { model, seed, out } => cmd_synth(&model, seed, out.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let input = err.chain().any(|cause| {
                cause.is::<InputError>()
                    || cause
                        .downcast_ref::<teamroles::Error>()
                        .is_some_and(|e| e.is_input_error())
            });
            ExitCode::from(if input { 2 } else { 1 })
        }
    }
}

struct Loaded {
    records: Vec<RawRecord>,
    snapshot: AnalysisSnapshot,
    quality: DataQuality,
    fingerprint: Fingerprint,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunArgs {
    fn parse_options(&self) -> anyhow::Result<ParseOptions> {
        let delimiter = match self.delimiter {
            None => None,
            Some(c) if c.is_ascii() => Some(c as u8),
            Some(c) => return Err(input_error(format!("delimiter {c:?} is not a single byte"))),
        };
        Ok(ParseOptions {
            format: match self.format {
                Format::Wide => InputFormat::Wide,
                Format::Long => InputFormat::Long,
            },
            delimiter,
            strictness: if self.lenient {
                Strictness::Lenient
            } else {
                Strictness::Strict
            },
        })
    }

    fn distance(&self) -> DistanceKind {
        if self.sqrt_jsd {
            DistanceKind::SqrtJsd
        } else {
            DistanceKind::Jsd
        }
    }

    fn emits(&self, kind: Emit) -> bool {
        self.emit.is_empty() || self.emit.contains(&kind)
    }

    fn fingerprint(&self, hashes: Vec<String>) -> Fingerprint {
        let format = match self.format {
            Format::Wide => "wide",
            Format::Long => "long",
        };
        let options = [
            ("format", format.to_string()),
            ("map", self.map.clone().unwrap_or_default()),
            ("k", self.k.map(|k| k.to_string()).unwrap_or_default()),
            ("distance", if self.sqrt_jsd { "sqrt_jsd" } else { "jsd" }.to_string()),
            ("log_base", LOG_BASE.to_string()),
            (
                "strictness",
                if self.lenient { "lenient" } else { "strict" }.to_string(),
            ),
            ("delimiter", self.delimiter.map(String::from).unwrap_or_default()),
        ];
        Fingerprint {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            input_sha256: hashes,
            options: options.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    fn load(&self, input: &Path, label: &str) -> anyhow::Result<Loaded> {
        let bytes = fs::read(input).map_err(|e| input_error(format!("cannot read {}: {e}", input.display())))?;
        let parsed = parse_records(&bytes[..], &self.parse_options()?)
            .with_context(|| format!("reading {}", input.display()))?;
        for issue in &parsed.skipped {
            eprintln!("warning: {}: line {}: {}", input.display(), issue.line, issue.message);
        }
        let filtered = filter_records(&parsed.records, self.map.as_deref());
        let comps = expand(&filtered.retained);
        let options = AnalysisOptions {
            label: label.to_string(),
            k: self.k,
            distance: self.distance(),
        };
        let snapshot = analyze(&comps, &options).with_context(|| format!("analyzing {}", input.display()))?;
        let quality = DataQuality {
            rows_read: parsed.rows_read,
            records_parsed: parsed.records.len(),
            skipped: parsed.skipped,
            records_retained: filtered.retained.len(),
            dropped_other_map: filtered.dropped_other_map,
            dropped_blank_map: filtered.dropped_blank_map,
            blank_map_retained: filtered.blank_map_retained,
            compositions: comps.len(),
        };
        Ok(Loaded {
            records: filtered.retained,
            snapshot,
            quality,
            fingerprint: self.fingerprint(vec![sha256_hex(&bytes)]),
        })
    }

    fn write_outputs(&self, dir: &Path, loaded: Loaded) -> anyhow::Result<String> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let Loaded {
            records,
            snapshot,
            quality,
            fingerprint,
        } = loaded;
        let summary = render_summary(&snapshot, &quality);
        write_text(&dir.join("summary.md"), &summary)?;
        if self.emits(Emit::Json) {
            write_json(
                &dir.join("report.json"),
                &AnalysisReport::new(&snapshot, quality, fingerprint),
            )?;
            write_json(&dir.join("dendrogram.json"), &snapshot.dendrogram.to_json())?;
        }
        if self.emits(Emit::Csv) {
            if let Some(c) = &snapshot.cooccurrence {
                c.write_csv(create(&dir.join("cooccurrence.csv"))?)?;
            }
            write_vectors_csv(
                &snapshot.vectors,
                &snapshot.roster,
                create(&dir.join("probabilities.csv"))?,
            )?;
            snapshot.distances.write_csv(create(&dir.join("distances.csv"))?)?;
            snapshot.sweep.write_csv(create(&dir.join("sweep.csv"))?)?;
            snapshot.assignment.write_csv(create(&dir.join("assignment.csv"))?)?;
            write_wide(&records, create(&dir.join("compositions.csv"))?, b',')?;
        }
        if self.emits(Emit::Newick) {
            write_text(
                &dir.join("dendrogram.nwk"),
                &format!("{}\n", snapshot.dendrogram.to_newick()),
            )?;
        }
        if self.emits(Emit::Dot) {
            write_text(
                &dir.join("dendrogram.dot"),
                &snapshot.dendrogram.to_dot(Some(&snapshot.assignment)),
            )?;
        }
        Ok(summary)
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn cmd_analyze(input: &Path, opts: &RunArgs) -> anyhow::Result<()> {
    let label = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let loaded = opts.load(input, &label)?;
    let summary = opts.write_outputs(&opts.out, loaded)?;
    print!("{summary}");
    Ok(())
}

fn cmd_compare(inputs: &[PathBuf], opts: &RunArgs) -> anyhow::Result<()> {
    let [pre_path, post_path] = inputs else {
        return Err(input_error(format!(
            "compare needs exactly two --input files, got {}",
            inputs.len()
        )));
    };
    let pre = opts.load(pre_path, "pre")?;
    let post = opts.load(post_path, "post")?;
    let report = compare(&pre.snapshot, &post.snapshot)?;
    opts.write_outputs(&opts.out.join("pre"), pre)?;
    opts.write_outputs(&opts.out.join("post"), post)?;
    let markdown = report.to_markdown();
    if opts.emits(Emit::Json) {
        write_json(&opts.out.join("impact.json"), &report.to_json())?;
    }
    write_text(&opts.out.join("impact.md"), &markdown)?;
    print!("{markdown}");
    Ok(())
}

fn cmd_synth(model_path: &Path, seed: Option<u64>, out: Option<&Path>) -> anyhow::Result<()> {
    let text = fs::read_to_string(model_path)
        .map_err(|e| input_error(format!("cannot read {}: {e}", model_path.display())))?;
    let mut model: PlantedModel =
        serde_json::from_str(&text).with_context(|| format!("parsing model {}", model_path.display()))?;
    if let Some(seed) = seed {
        model.seed = seed;
    }
    let records = generate_records(&model)?;
    match out {
        Some(path) => {
            let mut sink = create(path)?;
            write_wide(&records, &mut sink, b',')?;
            sink.flush()?;
        }
        None => write_wide(&records, std::io::stdout().lock(), b',')?,
    }
    Ok(())
}
