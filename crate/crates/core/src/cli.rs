//! Command-line front end: `score`, `evaluate`, `rsc`, `synth`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hard_metrics::{evaluate, MetricReport, DEFAULT_ECE_BINS};
use crate::io::{read_cost_matrix, read_predictions, write_atomic, write_predictions, write_report, Format};
use crate::psr::{mean_score, Rule, ScoringConfig};
use crate::retention::{
    bootstrap_aursc, rank_samples_with, retention_curve, BootstrapSummary, FractionGrid, Metric,
    RetentionConfig, DEFAULT_REPLICATES,
};
use crate::svg::render_curve_svg;
use crate::synth::{generate, Mode, SynthConfig};
use crate::types::{CostMatrix, EvalDataset};

#[derive(Debug, Parser)]
#[command(name = "ordscore", version, about = "Scoring rules and retained-samples curves for ordinal classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every sample with one rule and list the worst first.
    Score(ScoreArgs),
    /// Hard metrics (accuracy, QWK, expected cost, ECE) and mean scores.
    Evaluate(EvaluateArgs),
    /// Retained-samples curves and bootstrapped AURSC per rule.
    Rsc(RscArgs),
    /// Write a synthetic prediction file.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Prediction CSV with header id,label,p0,...,p{K-1}.
    #[arg(long)]
    pub input: PathBuf,
    /// Index of the first class in the file's label column.
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub label_base: u8,
    /// Evaluate sa_rps with the 1/(K-1) factor outside the square.
    #[arg(long)]
    pub sa_rps_paper_literal: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "rps")]
    pub rule: String,
    /// Per-sample scores CSV (id,label,argmax,score), worst first.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// `linear`, `quadratic`, or a path to a headerless K x K CSV.
    #[arg(long, default_value = "linear")]
    pub cost: String,
    #[arg(long, default_value_t = DEFAULT_ECE_BINS)]
    pub bins: usize,
    /// JSON report path.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RscArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated rule list.
    #[arg(long, default_value = "brier,log,rps,sa_rps")]
    pub rules: String,
    #[arg(long, default_value = "qwk")]
    pub metric: String,
    /// `start:stop:step` or a comma-separated list, starting at 1.
    #[arg(long, default_value = "1.0:0.05:0.05")]
    pub fractions: String,
    /// Bootstrap replicate count.
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    pub bootstrap: usize,
    /// 0 disables resampling (every replicate is the full dataset).
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// `linear`, `quadratic`, or a path to a headerless K x K CSV.
    #[arg(long, default_value = "linear")]
    pub cost: String,
    /// Prepended verbatim to every output file name.
    #[arg(long, default_value = "rsc_")]
    pub output_prefix: String,
    /// Worker threads for bootstrap replicates (results do not depend on it).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 1.0)]
    pub miscal: f64,
    #[arg(long, default_value = "ordinal")]
    pub mode: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Score(a) => cmd_score(&a, out),
        Command::Evaluate(a) => cmd_evaluate(&a, out),
        Command::Rsc(a) => cmd_rsc(&a, out),
        Command::Synth(a) => cmd_synth(&a, out),
    }
}

fn load(input: &InputArgs) -> Result<EvalDataset> {
    read_predictions(&input.input, input.label_base)
}

fn scoring(input: &InputArgs) -> ScoringConfig {
    ScoringConfig {
        sa_rps_paper_literal: input.sa_rps_paper_literal,
    }
}

fn resolve_cost(spec: &str, num_classes: usize) -> Result<CostMatrix> {
    let costs = match spec {
        "linear" => CostMatrix::linear(num_classes),
        "quadratic" => CostMatrix::quadratic(num_classes),
        path => read_cost_matrix(Path::new(path))?,
    };
    if costs.num_classes() != num_classes {
        return Err(Error::ShapeMismatch(format!(
            "cost matrix is {0}x{0} but the dataset has {num_classes} classes",
            costs.num_classes()
        )));
    }
    Ok(costs)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

pub fn cmd_score(args: &ScoreArgs, out: &mut dyn Write) -> Result<()> {
    let rule: Rule = args.rule.parse()?;
    let ds = load(&args.input)?;
    let ranked = rank_samples_with(&ds, rule, &scoring(&args.input))?;
    let base = usize::from(args.input.label_base);

    ensure_parent(&args.output)?;
    write_atomic(&args.output, |w| {
        writeln!(w, "id,label,argmax,score")?;
        for s in &ranked {
            writeln!(
                w,
                "{},{},{},{}",
                s.id,
                s.label + base,
                s.argmax_class + base,
                crate::io::format_real(s.score)
            )?;
        }
        Ok(())
    })?;

    writeln!(out, "worst {} samples by {rule}:", ranked.len().min(5))?;
    writeln!(out, "{:<16} {:>6} {:>7} {:>12}", "id", "label", "argmax", "score")?;
    for s in ranked.iter().take(5) {
        writeln!(
            out,
            "{:<16} {:>6} {:>7} {:>12.6}",
            s.id,
            s.label + base,
            s.argmax_class + base,
            s.score
        )?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvaluationConfig<'a> {
    input: &'a Path,
    label_base: u8,
    cost: &'a str,
    cost_matrix: &'a [Vec<f64>],
    bins: usize,
    sa_rps_paper_literal: bool,
}

#[derive(Debug, Serialize)]
struct EvaluationReport<'a> {
    #[serde(flatten)]
    metrics: MetricReport,
    mean_scores: BTreeMap<&'static str, f64>,
    config: EvaluationConfig<'a>,
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let ds = load(&args.input)?;
    let costs = resolve_cost(&args.cost, ds.num_classes())?;
    let metrics = evaluate(&ds, &costs, args.bins)?;
    let sc = scoring(&args.input);
    let mean_scores: BTreeMap<&'static str, f64> = Rule::ALL
        .iter()
        .map(|&r| (r.as_str(), mean_score(&ds, r, &sc)))
        .collect();

    writeln!(out, "{:<14} {:>12}", "metric", "value")?;
    for (name, v) in [
        ("n", metrics.n as f64),
        ("accuracy", metrics.accuracy),
        ("qwk", metrics.qwk),
        ("expected_cost", metrics.expected_cost),
        ("ece", metrics.ece),
    ] {
        writeln!(out, "{name:<14} {v:>12.6}")?;
    }
    for (name, v) in &mean_scores {
        writeln!(out, "{:<14} {v:>12.6}", format!("mean {name}"))?;
    }

    if let Some(path) = &args.output {
        let report = EvaluationReport {
            metrics,
            mean_scores,
            config: EvaluationConfig {
                input: &args.input.input,
                label_base: args.input.label_base,
                cost: &args.cost,
                cost_matrix: costs.rows(),
                bins: args.bins,
                sa_rps_paper_literal: sc.sa_rps_paper_literal,
            },
        };
        ensure_parent(path)?;
        write_atomic(path, |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            writeln!(w)?;
            Ok(())
        })?;
    }
    Ok(())
}

/// One rule's retained-samples result, as written to JSON.
#[derive(Debug, Serialize)]
pub struct RscReport<'a> {
    pub input: &'a Path,
    pub label_base: u8,
    pub rule: Rule,
    pub metric: Metric,
    pub fractions: &'a [f64],
    pub cost: &'a str,
    pub cost_matrix: &'a [Vec<f64>],
    pub sa_rps_paper_literal: bool,
    /// Curve on the full (non-resampled) dataset.
    pub values: &'a [f64],
    pub aursc: f64,
    #[serde(flatten)]
    pub bootstrap: &'a BootstrapSummary,
}

fn parse_rules(list: &str) -> Result<Vec<Rule>> {
    let rules = list
        .split(',')
        .map(|r| r.trim().parse())
        .collect::<Result<Vec<Rule>>>()?;
    if rules.is_empty() {
        return Err(Error::UnknownRule(String::new()));
    }
    Ok(rules)
}

pub fn cmd_rsc(args: &RscArgs, out: &mut dyn Write) -> Result<()> {
    let rules = parse_rules(&args.rules)?;
    let metric: Metric = args.metric.parse()?;
    let fractions: FractionGrid = args.fractions.parse()?;
    if args.bootstrap == 0 {
        return Err(Error::InvalidConfig(
            "--bootstrap must be at least 1".into(),
        ));
    }
    let ds = load(&args.input)?;
    let costs = resolve_cost(&args.cost, ds.num_classes())?;
    let sc = scoring(&args.input);

    let compute = || -> Result<Vec<_>> {
        rules
            .iter()
            .map(|&rule| {
                let cfg = RetentionConfig {
                    rule,
                    metric,
                    fractions: fractions.clone(),
                    costs: costs.clone(),
                    scoring: sc,
                };
                let curve = retention_curve(&ds, &cfg)?;
                let summary = bootstrap_aursc(&ds, &cfg, args.bootstrap, args.seed)?;
                Ok((curve, summary))
            })
            .collect()
    };
    let results = match args.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(compute)?,
        None => compute()?,
    };

    let prefix = &args.output_prefix;
    ensure_parent(Path::new(&format!("{prefix}x")))?;
    for (curve, summary) in &results {
        let stem = format!("{prefix}{}_{}", curve.rule, metric);
        write_report(curve, Path::new(&format!("{stem}_curve.csv")), Format::Csv)?;
        let report = RscReport {
            input: &args.input.input,
            label_base: args.input.label_base,
            rule: curve.rule,
            metric,
            fractions: fractions.as_slice(),
            cost: &args.cost,
            cost_matrix: costs.rows(),
            sa_rps_paper_literal: sc.sa_rps_paper_literal,
            values: &curve.values,
            aursc: curve.aursc,
            bootstrap: summary,
        };
        let path = PathBuf::from(format!("{stem}.json"));
        write_atomic(&path, |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            writeln!(w)?;
            Ok(())
        })?;
    }
    let curves: Vec<_> = results.iter().map(|(c, _)| c.clone()).collect();
    render_curve_svg(&curves, Path::new(&format!("{prefix}{metric}.svg")))?;

    let direction = if metric.higher_is_better() { "higher" } else { "lower" };
    let heading = format!("AURSC-{} ({direction} is better)", metric.as_str().to_uppercase());
    writeln!(out, "{:<8} {:>24}", "rule", heading)?;
    for (curve, s) in &results {
        writeln!(
            out,
            "{:<8} {:>24}",
            curve.rule.as_str(),
            format!("{:.2} ± {:.2}", s.mean, s.std)
        )?;
    }
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = SynthConfig {
        n: args.n,
        k: args.k,
        noise: args.noise,
        miscal: args.miscal,
        mode: args.mode.parse::<Mode>()?,
        seed: args.seed,
    };
    let ds = generate(&cfg)?;
    ensure_parent(&args.output)?;
    write_predictions(&ds, &args.output, 0)?;
    writeln!(
        out,
        "wrote {} samples, {} classes to {}",
        ds.len(),
        ds.num_classes(),
        args.output.display()
    )?;
    Ok(())
}
