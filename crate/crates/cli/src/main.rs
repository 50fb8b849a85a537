//! `smctrack`: track, evaluate, synthesize and self-check from the command line.

mod svg;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use smctrack_core::evaluation::{check_frame_range, DEFAULT_IOU_THRESHOLD};
use smctrack_core::io::{
    attach_embeddings, detection_records, ground_truth_records, read_config, read_detections, read_embeddings,
    read_ground_truth, write_embeddings, write_records, write_results_csv,
};
use smctrack_core::selfcheck::run_selfcheck;
use smctrack_core::synth::{generate_scenario, ScenarioSpec};
use smctrack_core::{evaluate, smc_step, FusionMode, MetricsReport, TrackerConfig, TrackerState};

#[derive(Parser)]
#[command(name = "smctrack", version, about = "Two-stage similarity-matching multi-object tracker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track a MOT-format detection file.
    Track {
        #[arg(long)]
        det: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Embedding sidecar: frame,index,d,v1..vd
        #[arg(long)]
        emb: Option<PathBuf>,
        /// key=value tracker configuration
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured fusion mode.
        #[arg(long)]
        fusion: Option<FusionMode>,
        #[arg(long, env = "SMCTRACK_SEED")]
        seed: Option<u64>,
    },
    /// Score a results file against ground truth.
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        res: PathBuf,
        #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
        iou_thresh: f64,
        /// CSV report; an SVG chart is written next to it.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Materialize a synthetic scenario.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_gt: PathBuf,
        #[arg(long)]
        out_det: PathBuf,
        #[arg(long)]
        out_emb: Option<PathBuf>,
    },
    /// Run the built-in oracle suites.
    Selfcheck,
}

fn track(
    det: &Path,
    out: &Path,
    emb: Option<&Path>,
    config: Option<&Path>,
    fusion: Option<FusionMode>,
    seed: Option<u64>,
) -> Result<String> {
    let mut cfg = match config {
        Some(p) => read_config(p).with_context(|| format!("config {}", p.display()))?,
        None => TrackerConfig::default(),
    };
    if let Some(f) = fusion {
        cfg.fusion_mode = f;
    }
    cfg.validate().context("invalid configuration")?;

    let mut frames = read_detections(det)?;
    if let Some(p) = emb {
        attach_embeddings(&mut frames, read_embeddings(p)?).with_context(|| format!("embeddings {}", p.display()))?;
    }

    let start = Instant::now();
    let mut state = TrackerState::new();
    let mut results = Vec::new();
    for f in &frames {
        results.extend(smc_step(&mut state, f, &cfg)?.emitted);
    }
    let elapsed = start.elapsed().as_secs_f64();
    write_results_csv(&results, out)?;

    let ids: BTreeSet<u64> = results.iter().map(|r| r.id).collect();
    let mut s = String::new();
    let _ = writeln!(s, "sequence      {}", det.display());
    let _ = writeln!(s, "fusion        {}", cfg.fusion_mode);
    if let Some(seed) = seed {
        let _ = writeln!(s, "seed          {seed}");
    }
    let _ = writeln!(s, "frames        {}", frames.len());
    let _ = writeln!(s, "tracks        {}", state.ids_issued());
    let _ = writeln!(s, "ids emitted   {}", ids.len());
    let _ = writeln!(s, "boxes         {}", results.len());
    let _ = writeln!(s, "fps           {:.1}", frames.len() as f64 / elapsed.max(1e-9));
    Ok(s)
}

fn report_chart(r: &MetricsReport) -> String {
    svg::bar_chart(
        "tracking metrics",
        &[("MOTA", r.mota), ("IDF1", r.idf1), ("MT", r.mt), ("ML", r.ml), ("mIoU", r.mean_iou)],
    )
}

fn eval(gt: &Path, res: &Path, iou_thresh: f64, report: Option<&Path>) -> Result<String> {
    let gt_entries = read_ground_truth(gt)?;
    let res_entries = read_ground_truth(res)?;
    check_frame_range(&gt_entries, &res_entries)?;
    let r = evaluate(&gt_entries, &res_entries, iou_thresh)?;
    if let Some(p) = report {
        std::fs::write(p, r.to_csv()).with_context(|| format!("writing {}", p.display()))?;
        let chart = p.with_extension("svg");
        std::fs::write(&chart, report_chart(&r)).with_context(|| format!("writing {}", chart.display()))?;
    }
    Ok(format!("{r}\n"))
}

fn synth(spec: &Path, out_gt: &Path, out_det: &Path, out_emb: Option<&Path>) -> Result<String> {
    let text = std::fs::read_to_string(spec).with_context(|| format!("reading {}", spec.display()))?;
    let spec = ScenarioSpec::from_toml(&text)?;
    let s = generate_scenario(&spec)?;
    write_records(&ground_truth_records(&s.ground_truth), out_gt)?;
    write_records(&detection_records(&s.frames), out_det)?;
    if let Some(p) = out_emb {
        write_embeddings(&s.frames, p)?;
    }
    Ok(format!(
        "{} frames, {} gt boxes, {} detections\n",
        s.frames.len(),
        s.ground_truth.len(),
        s.frames.iter().map(|f| f.len()).sum::<usize>()
    ))
}

fn selfcheck() -> Result<String> {
    let outcomes = run_selfcheck();
    let mut s = String::new();
    for o in &outcomes {
        let _ = writeln!(s, "{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
    if !failed.is_empty() {
        print(&s);
        bail!("failed suites: {}", failed.join(", "));
    }
    Ok(s)
}

/// Writes to stdout; a closed pipe is not an error.
fn print(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let is_selfcheck = matches!(cli.command, Command::Selfcheck);
    let outcome = match cli.command {
        Command::Track { det, out, emb, config, fusion, seed } => {
            track(&det, &out, emb.as_deref(), config.as_deref(), fusion, seed)
        }
        Command::Eval { gt, res, iou_thresh, report } => eval(&gt, &res, iou_thresh, report.as_deref()),
        Command::Synth { spec, out_gt, out_det, out_emb } => synth(&spec, &out_gt, &out_det, out_emb.as_deref()),
        Command::Selfcheck => selfcheck(),
    };
    match outcome {
        Ok(text) => {
            print(&text);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_selfcheck { 1 } else { 2 })
        }
    }
}
