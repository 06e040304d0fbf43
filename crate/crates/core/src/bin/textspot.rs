use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use textspot::commands::{self, DecodeOptions, EvaluateOptions, GenLabelsOptions, Task, WeightSource};
use textspot::eval::DEFAULT_IOU_THRESHOLD;
use textspot::lexicon::LexiconMode;
use textspot::selftest::{self, SelftestOptions};

#[derive(Parser)]
#[command(name = "textspot", version, about = "Mask-branch decoding and evaluation for scene text spotting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render instance and character targets for every proposal.
    GenLabels {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        proposals: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Target size as WxH.
        #[arg(long, default_value = "128x32")]
        size: String,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Recognize one word from character maps and/or attention features.
    Decode {
        /// 37-channel character probability maps.
        #[arg(long)]
        seg: Option<PathBuf>,
        /// Feature map for the attention decoder.
        #[arg(long)]
        sam: Option<PathBuf>,
        /// Weight bundle directory.
        #[arg(long, conflicts_with = "random_weights")]
        weights: Option<PathBuf>,
        #[arg(long, hide = true, value_name = "SEED")]
        random_weights: Option<u64>,
        /// One word per line.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        lexicon_mode: Option<LexiconMode>,
        #[arg(long)]
        weighted_ed: bool,
        /// Beam width; greedy decoding when omitted.
        #[arg(long)]
        beam: Option<usize>,
        #[arg(long)]
        bg_threshold: Option<f64>,
    },
    /// Score predictions against ground truth.
    Evaluate {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// det, e2e or spotting.
        #[arg(long, default_value = "det")]
        task: Task,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        lexicon_mode: Option<LexiconMode>,
        #[arg(long)]
        weighted_ed: bool,
        #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
        iou: f64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Print only the aggregate report.
        #[arg(long)]
        summary: bool,
    },
    /// Run the built-in invariant checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        corrupt_softmax: bool,
    },
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::GenLabels {
            annotations,
            proposals,
            out_dir,
            size,
            jobs,
        } => {
            let (width, height) = commands::parse_size(&size)?;
            let opts = GenLabelsOptions {
                width,
                height,
                jobs,
                ..GenLabelsOptions::new(annotations, proposals, out_dir)
            };
            let written = commands::gen_labels(&opts).context("gen-labels")?;
            print_json(&serde_json::json!({ "written": written }))?;
        }
        Command::Decode {
            seg,
            sam,
            weights,
            random_weights,
            lexicon,
            lexicon_mode,
            weighted_ed,
            beam,
            bg_threshold,
        } => {
            let weights = weights
                .map(WeightSource::Bundle)
                .or(random_weights.map(WeightSource::Random));
            let opts = DecodeOptions {
                seg,
                sam,
                weights,
                lexicon,
                lexicon_mode,
                weighted_ed,
                beam,
                bg_threshold,
            };
            print_json(&commands::decode(&opts).context("decode")?)?;
        }
        Command::Evaluate {
            gt,
            pred,
            task,
            lexicon,
            lexicon_mode,
            weighted_ed,
            iou,
            jobs,
            summary,
        } => {
            let opts = EvaluateOptions {
                lexicon,
                lexicon_mode,
                weighted_ed,
                iou,
                jobs,
                ..EvaluateOptions::new(gt, pred, task)
            };
            let out = commands::evaluate(&opts).context("evaluate")?;
            if summary {
                print_json(&out.aggregate)?;
            } else {
                print_json(&out)?;
            }
        }
        Command::Selftest { seed, corrupt_softmax } => {
            let checks = selftest::run(&SelftestOptions { corrupt_softmax, seed });
            print!("{}", selftest::render_table(&checks));
            let failed: Vec<_> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
            if !failed.is_empty() {
                eprintln!("selftest failed: {}", failed.join(", "));
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
