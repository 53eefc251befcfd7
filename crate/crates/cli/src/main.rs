use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use tbrf_core::classifier::{repeated_eval, train, LabeledDataset, MulticlassStrategy, TrainedModel};
use tbrf_core::config::Config;
use tbrf_core::encoder::{feature_rows, read_jsonl, write_jsonl, FeatureRow};
use tbrf_core::evaluation::detection::{detection_report, parse_zone_records};
use tbrf_core::evaluation::metrics::{classification_report, format_table};
use tbrf_core::evaluation::report::render_overlay_report;
use tbrf_core::ingest::{parse_block_dump_report, to_dump_json};
use tbrf_core::pipeline::{analyze, classify_document, detect_document, prepare};
use tbrf_core::synth::{generate_corpus, two_column_fixture, SynthOptions};
use tbrf_core::{BlockLabel, Document, Error, Result};
use tracing::warn;

#[derive(Parser)]
#[command(name = "tbrf", version, about = "Text-block classification and figure/table zone detection for article layouts")]
struct Cli {
    /// TOML file overriding caption/section patterns, thresholds and SVM settings.
    #[arg(long, global = true, env = "TBRF_CONFIG")]
    config: Option<PathBuf>,

    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and normalize a block dump; prints the normalized dump.
    Ingest {
        dump: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Encode the blocks of a dump as feature rows (JSON lines).
    Encode {
        dump: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Turn feature rows into a labeling template with empty labels.
    Annotate {
        features: PathBuf,
        /// Dump the rows came from, to include the block text.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Train the SVM on a labeled dataset.
    Train {
        dataset: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        svm: SvmArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Label every block of a dump (JSON lines, one row per block).
    Classify {
        dump: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Detect figure and table zones; one JSON object per dump.
    Detect {
        #[arg(required = true)]
        dumps: Vec<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        /// Also detect zones in the appendix.
        #[arg(long)]
        include_appendix: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Precision / recall / F1 of predicted labels against gold labels.
    EvalCls {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Zone detection accuracy at an IoU threshold.
    EvalDet {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        iou_threshold: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Repeated stratified train/validation runs on a labeled dataset.
    EvalRuns {
        dataset: PathBuf,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// Training share of each split.
        #[arg(long, default_value_t = 0.9)]
        ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        svm: SvmArgs,
        #[arg(long)]
        json: bool,
    },
    /// Static HTML overlay of block labels and zones.
    Report {
        dump: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write a synthetic corpus: dumps, a labeled dataset and gold zones.
    Synth {
        #[arg(long, default_value_t = 10)]
        docs: usize,
        #[arg(long, default_value_t = 1000)]
        seed: u64,
        #[arg(long, default_value = "synth")]
        prefix: String,
        /// Also write the small two-column fixture page and its gold zones.
        #[arg(long)]
        fixture: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct SvmArgs {
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<MulticlassStrategy>,
}

fn parse_strategy(s: &str) -> std::result::Result<MulticlassStrategy, String> {
    match s {
        "ovo" | "one-vs-one" => Ok(MulticlassStrategy::OneVsOne),
        "ovr" | "one-vs-rest" => Ok(MulticlassStrategy::OneVsRest),
        _ => Err(format!("unknown strategy `{s}` (expected ovo or ovr)")),
    }
}

impl SvmArgs {
    fn apply(&self, cfg: &mut Config) -> Result<()> {
        if let Some(c) = self.c {
            cfg.svm.c = c;
        }
        if let Some(g) = self.gamma {
            cfg.svm.gamma = g;
        }
        if let Some(s) = self.strategy {
            cfg.svm.strategy = s;
        }
        cfg.svm.validate()
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| io_err(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read(path)?).map_err(|e| Error::schema(path.display().to_string(), e.to_string()))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn load_dump(path: &Path, cfg: &Config) -> Result<Document> {
    let (doc, mut warnings) = parse_block_dump_report(&read(path)?)?;
    let (doc, more) = prepare(doc, cfg)?;
    warnings.extend(more);
    for w in warnings {
        warn!(page = w.page_index, block = ?w.block_id, "{}", w.message);
    }
    Ok(doc)
}

fn load_model(path: &Path) -> Result<TrainedModel> {
    TrainedModel::from_json(&read_text(path)?)
}

fn label_map(rows: &[FeatureRow]) -> Result<BTreeMap<(String, u32), BlockLabel>> {
    let mut out = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        let label = r
            .label
            .ok_or_else(|| Error::schema(format!("line {}: label", i + 1), "label is null"))?;
        let key = (r.doc_id.clone().unwrap_or_default(), r.block_id);
        if out.insert(key, label).is_some() {
            return Err(Error::DuplicateRow {
                doc_id: r.doc_id.clone().unwrap_or_default(),
                block_id: r.block_id,
            });
        }
    }
    Ok(out)
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports always serialize") + "\n"
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }

    match cli.command {
        Command::Ingest { dump, output } => {
            let doc = load_dump(&dump, &cfg)?;
            write_out(output.as_deref(), &(to_dump_json(&doc) + "\n"))
        }
        Command::Encode { dump, output } => {
            let doc = load_dump(&dump, &cfg)?;
            write_out(output.as_deref(), &write_jsonl(&feature_rows(&doc, &cfg.encoder)?))
        }
        Command::Annotate { features, dump, output } => {
            let mut rows = read_jsonl(&read_text(&features)?)?;
            let doc = dump.map(|d| load_dump(&d, &cfg)).transpose()?;
            for r in &mut rows {
                r.label = None;
                if let Some(b) = doc.as_ref().and_then(|d| d.block(r.block_id)) {
                    r.text = Some(b.text.chars().take(80).collect());
                }
            }
            write_out(output.as_deref(), &write_jsonl(&rows))
        }
        Command::Train { dataset, output, svm, seed } => {
            svm.apply(&mut cfg)?;
            let data = LabeledDataset::from_feature_rows(&read_jsonl(&read_text(&dataset)?)?)?;
            let model = train(&data, &cfg.svm, seed)?;
            write_out(Some(&output), &(model.to_json() + "\n"))
        }
        Command::Classify { dump, model, output } => {
            let doc = load_dump(&dump, &cfg)?;
            let (rows, _) = classify_document(&doc, &load_model(&model)?, &cfg)?;
            write_out(output.as_deref(), &write_jsonl(&rows))
        }
        Command::Detect {
            dumps,
            model,
            include_appendix,
            output,
        } => {
            cfg.zones.include_appendix |= include_appendix;
            let model = load_model(&model)?;
            let sets = dumps
                .par_iter()
                .map(|d| {
                    let doc = load_dump(d, &cfg)?;
                    let a = analyze(&doc, &model, &cfg)?;
                    for w in &a.warnings {
                        warn!(doc = %a.doc_id, "{w}");
                    }
                    Ok(serde_json::to_string(&a.detection_set()).expect("detections serialize"))
                })
                .collect::<Result<Vec<String>>>()?;
            let mut out = String::new();
            for line in sets {
                out.push_str(&line);
                out.push('\n');
            }
            write_out(output.as_deref(), &out)
        }
        Command::EvalCls { gold, pred, json } => {
            let g = label_map(&read_jsonl(&read_text(&gold)?)?)?;
            let p = label_map(&read_jsonl(&read_text(&pred)?)?)?;
            let report = classification_report(&g, &p)?;
            write_out(None, &if json { to_json(&report) } else { format_table(&report) })
        }
        Command::EvalDet {
            gold,
            pred,
            iou_threshold,
            json,
        } => {
            let threshold = iou_threshold.unwrap_or(cfg.evaluation.iou_threshold);
            let g = parse_zone_records(&read_text(&gold)?)?;
            let p = parse_zone_records(&read_text(&pred)?)?;
            let report = detection_report(&p, &g, threshold)?;
            write_out(None, &if json { to_json(&report) } else { report.format_table() })
        }
        Command::EvalRuns {
            dataset,
            runs,
            ratio,
            seed,
            svm,
            json,
        } => {
            svm.apply(&mut cfg)?;
            let data = LabeledDataset::from_feature_rows(&read_jsonl(&read_text(&dataset)?)?)?;
            let summary = repeated_eval(&data, &cfg.svm, runs, ratio, seed)?;
            write_out(None, &if json { to_json(&summary) } else { summary.format_table() })
        }
        Command::Report { dump, model, output } => {
            let doc = load_dump(&dump, &cfg)?;
            let (_, labels) = classify_document(&doc, &load_model(&model)?, &cfg)?;
            let z = detect_document(&doc, &labels, &cfg)?;
            let html = render_overlay_report(&doc, &labels, &z.zones, &z.warnings);
            write_out(Some(&output), &html)
        }
        Command::Synth {
            docs,
            seed,
            prefix,
            fixture,
            out_dir,
        } => {
            let corpus = generate_corpus(&prefix, docs, seed, &SynthOptions::default());
            let dump_dir = out_dir.join("dumps");
            std::fs::create_dir_all(&dump_dir).map_err(|e| io_err(&dump_dir, e))?;
            let mut gold = String::new();
            let mut rows = Vec::new();
            for d in &corpus {
                let path = dump_dir.join(format!("{}.json", d.doc.doc_id));
                write_out(Some(&path), &(to_dump_json(&d.doc) + "\n"))?;
                gold.push_str(&serde_json::to_string(&d.gold).expect("detections serialize"));
                gold.push('\n');
                rows.extend(d.labeled_rows(&cfg.encoder)?);
            }
            write_out(Some(&out_dir.join("dataset.jsonl")), &write_jsonl(&rows))?;
            write_out(Some(&out_dir.join("gold_zones.jsonl")), &gold)?;
            if fixture {
                let fx = two_column_fixture();
                write_out(Some(&out_dir.join("synth_2col.json")), &(to_dump_json(&fx.doc) + "\n"))?;
                write_out(Some(&out_dir.join("synth_2col_gold.json")), &to_json(&fx.gold))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .with_target(false)
        .init();

    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::from(1)
        }
    }
}
