//! `peersel`: simulation runs, grid sweeps, PeerBTS on review files,
//! incentive audits and MAD summaries.

mod output;

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use peersel::deviation::{
    audit_counterexample, audit_effort_gap, audit_lottery_deviation, replay_strategyproofness, strategy_grid,
    topup_counterexample, DeviationStrategy, EffortMechanism, LotteryWorld, ReplayMechanism,
};
use peersel::experiments::{
    lottery_share_by_decile, mad_stats, parse_grid, recall_by_d_phi, run_sweep, ExperimentConfig, ExperimentRecord,
    MechanismKind, SweepOptions, WinnerEntry,
};
use peersel::io::{
    read_profile, read_reviews, read_score_predictions, write_decile_summary, write_jsonl, write_mad_reviewers,
    write_mad_summary, write_recall_summary, write_scores,
};
use peersel::mechanisms::{peer_nomination, peer_nomination_from_approvals};
use peersel::peerbts::{peerbts_combine, PeerBtsParams, QuotaBasis};
use peersel::rbts::sub_lotteries;
use peersel::sampling::PredictionModel;

use output::write_atomic;

#[derive(Parser)]
#[command(name = "peersel", version, about = "Peer selection with a truth-serum reward lottery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one parameter cell and write one JSON record per trial.
    Simulate(SimulateArgs),
    /// Run every cell of a grid config file.
    Sweep(SweepArgs),
    /// Run PeerBTS on a review CSV and print the winners.
    Select(SelectArgs),
    /// Run an incentive audit and print a JSON verdict.
    Audit(AuditArgs),
    /// Summarize reviewers' score-prediction errors.
    Mad(MadArgs),
}

#[derive(Args)]
struct ThreadArgs {
    /// Worker threads (defaults to all cores).
    #[arg(long, env = "PEERSEL_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct CellArgs {
    /// Number of agents.
    #[arg(long, default_value_t = 120)]
    n: usize,
    /// Number of winners.
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Reviews per agent.
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Lottery winners.
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Lottery exponent.
    #[arg(long, default_value_t = 8.0)]
    epsilon: f64,
    /// Mallows dispersion of the ground rankings.
    #[arg(long, default_value_t = 0.5)]
    phi: f64,
    /// Prediction model: clairvoyant, random, divided or deciles.
    #[arg(long, default_value = "deciles")]
    pred_model: PredictionModel,
    /// Quality-stage target: k-minus-d or k.
    #[arg(long, default_value = "k-minus-d")]
    quota_basis: QuotaBasis,
    /// Trials.
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl CellArgs {
    fn config(&self, mechanism: MechanismKind) -> Result<ExperimentConfig> {
        let c = ExperimentConfig {
            n: self.n,
            k: self.k,
            m: self.m,
            d: self.d,
            epsilon: self.epsilon,
            phi: self.phi,
            model: self.pred_model,
            trials: self.trials,
            seed: self.seed,
            quota_basis: self.quota_basis,
            mechanism,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct SummaryArgs {
    /// Also write `decile,mean_lottery_share` to this CSV.
    #[arg(long)]
    deciles: Option<PathBuf>,
    /// Also write `d,phi,recall,anti_recall` to this CSV.
    #[arg(long)]
    recall: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    cell: CellArgs,
    /// Selection mechanism: peerbts or partition-threshold:<clusters>.
    #[arg(long, default_value = "peerbts")]
    mechanism: MechanismKind,
    /// Results JSONL (`-` for stdout).
    #[arg(long, default_value = "-")]
    out: PathBuf,
    #[command(flatten)]
    summary: SummaryArgs,
    #[command(flatten)]
    threads: ThreadArgs,
    /// Record per-trial wall time (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Grid config (TOML).
    config: PathBuf,
    /// Results JSONL (`-` for stdout).
    #[arg(long, default_value = "-")]
    out: PathBuf,
    #[command(flatten)]
    summary: SummaryArgs,
    #[command(flatten)]
    threads: ThreadArgs,
    /// Record per-trial wall time (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct SelectArgs {
    /// Review CSV: proposal_id,reviewer_id,approval,prediction.
    #[arg(long)]
    reviews: PathBuf,
    /// Optional ranking CSV (agent_id,rank_1,...) for the quality stage;
    /// without it the approvals are counted directly.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Number of winners.
    #[arg(long)]
    k: usize,
    /// Lottery winners.
    #[arg(long, default_value_t = 0)]
    d: usize,
    /// Lottery exponent.
    #[arg(long, default_value_t = 8.0)]
    epsilon: f64,
    /// Quality-stage target: k-minus-d or k.
    #[arg(long, default_value = "k-minus-d")]
    quota_basis: QuotaBasis,
    /// Seed for board orders and the lottery.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Winners JSON (`-` for stdout).
    #[arg(long, default_value = "-")]
    out: PathBuf,
    /// Also write `proposal_id,reviewer_id,score,share` to this CSV.
    #[arg(long)]
    scores: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AuditMechanism {
    Peernomination,
    Partition,
    Peerbts,
    NaiveTopup,
}

#[derive(Clone, Copy, ValueEnum)]
enum AuditInstance {
    /// Four agents where a top-up of a Borda ranking is manipulable.
    TopupCounterexample,
}

#[derive(Args)]
struct AuditArgs {
    /// Mechanism under audit.
    #[arg(long, value_enum)]
    mechanism: AuditMechanism,
    /// Fixed instance to replay instead of random worlds.
    #[arg(long, value_enum)]
    instance: Option<AuditInstance>,
    /// Random instances for the strategyproofness replay.
    #[arg(long, default_value_t = 200)]
    instances: usize,
    #[command(flatten)]
    cell: CellArgs,
    /// Audit JSON (`-` for stdout).
    #[arg(long, default_value = "-")]
    out: PathBuf,
    #[command(flatten)]
    threads: ThreadArgs,
}

#[derive(Args)]
struct MadArgs {
    /// CSV: proposal_id,reviewer_id,prediction,final_score.
    #[arg(long)]
    predictions: PathBuf,
    /// Summary CSV (`-` for stdout).
    #[arg(long, default_value = "-")]
    out: PathBuf,
    /// Also write `reviewer_id,reviews,mad` to this CSV.
    #[arg(long)]
    per_reviewer: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Select(a) => select(a),
        Command::Audit(a) => audit(a),
        Command::Mad(a) => mad(a),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn write_json(w: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

fn write_results(records: &[ExperimentRecord], out: &Path, summary: &SummaryArgs) -> Result<()> {
    write_atomic(out, |w| Ok(write_jsonl(w, records)?))?;
    if let Some(p) = &summary.deciles {
        write_atomic(p, |w| Ok(write_decile_summary(w, &lottery_share_by_decile(records))?))?;
    }
    if let Some(p) = &summary.recall {
        write_atomic(p, |w| Ok(write_recall_summary(w, &recall_by_d_phi(records))?))?;
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let config = a.cell.config(a.mechanism)?;
    let opts = SweepOptions { threads: a.threads.threads, record_timing: a.timing };
    let out = run_sweep(&[config], &opts)?;
    if let Some(f) = out.failures.first() {
        bail!("{}", f.error);
    }
    write_results(&out.records, &a.out, &a.summary)
}

fn sweep(a: SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let cells = parse_grid(&text)?;
    let opts = SweepOptions { threads: a.threads.threads, record_timing: a.timing };
    let out = run_sweep(&cells, &opts)?;
    write_results(&out.records, &a.out, &a.summary)?;
    if !out.failures.is_empty() {
        for f in &out.failures {
            eprintln!("cell {} failed: {}", f.cell, f.error);
        }
        bail!("{} of {} cells failed", out.failures.len(), cells.len());
    }
    Ok(())
}

#[derive(Serialize)]
struct SelectOutput {
    seed: u64,
    k: usize,
    d: usize,
    epsilon: f64,
    quota_basis: QuotaBasis,
    winners: Vec<WinnerEntry>,
}

fn select(a: SelectArgs) -> Result<()> {
    let data = read_reviews(open(&a.reviews)?)?;
    let params = PeerBtsParams { k: a.k, d: a.d, epsilon: a.epsilon, quota_basis: a.quota_basis };
    params.validate(data.assignment.n(), data.assignment.m())?;
    let quality = match &a.profile {
        Some(p) => peer_nomination(&read_profile(open(p)?)?, &data.assignment, params.quality_target())?,
        None => peer_nomination_from_approvals(&data.x, &data.assignment, params.quality_target())?,
    };
    let outcome = peerbts_combine(quality, &data.x, &data.y, &data.assignment, &params, a.seed)?;
    let result = SelectOutput {
        seed: a.seed,
        k: a.k,
        d: a.d,
        epsilon: a.epsilon,
        quota_basis: a.quota_basis,
        winners: outcome.winners.iter().map(|(&agent, &provenance)| WinnerEntry { agent, provenance }).collect(),
    };
    write_atomic(&a.out, |w| write_json(w, &result))?;
    if let Some(path) = &a.scores {
        let Some(scores) = &outcome.scores else {
            bail!("--scores needs d > 0 (no truth-serum scores are computed without a lottery)");
        };
        let subs = sub_lotteries(scores, a.epsilon);
        write_atomic(path, |w| Ok(write_scores(w, scores, &subs)?))?;
    }
    Ok(())
}

fn audit(a: AuditArgs) -> Result<()> {
    let seed = a.cell.seed;
    let run = || -> Result<serde_json::Value> {
        Ok(match (a.mechanism, a.instance) {
            (AuditMechanism::NaiveTopup, _) | (AuditMechanism::Peerbts, Some(AuditInstance::TopupCounterexample)) => {
                let report = audit_counterexample(&topup_counterexample(), seed)?;
                let changes = match a.mechanism {
                    AuditMechanism::NaiveTopup => report.naive.changes,
                    _ => report.peerbts.changes,
                };
                let verdict = if changes > 0 { "violation" } else { "no-violation" };
                json!({ "mechanism": mechanism_name(a.mechanism), "instance": "topup-counterexample",
                        "verdict": verdict, "seed": seed, "report": report })
            }
            (AuditMechanism::Peernomination | AuditMechanism::Partition, Some(_)) => {
                bail!("--instance topup-counterexample applies to naive-topup and peerbts")
            }
            (AuditMechanism::Peernomination, None) => {
                let replay = replay_strategyproofness(ReplayMechanism::PeerNomination, a.instances, seed)?;
                let effort = audit_effort_gap(EffortMechanism::PeerNomination, &a.cell.config(MechanismKind::PeerBts)?)?;
                let zero = replay.violations == 0 && effort.max_abs_pair_diff == 0.0;
                json!({ "mechanism": "peernomination", "verdict": if zero { "zero-delta" } else { "violation" },
                        "seed": seed, "replay": replay, "effort": effort })
            }
            (AuditMechanism::Partition, None) => {
                let replay = replay_strategyproofness(ReplayMechanism::Partition, a.instances, seed)?;
                let verdict = if replay.violations == 0 { "no-violation" } else { "violation" };
                json!({ "mechanism": "partition", "verdict": verdict, "seed": seed, "replay": replay })
            }
            (AuditMechanism::Peerbts, None) => {
                let effort = audit_effort_gap(EffortMechanism::PeerBts, &a.cell.config(MechanismKind::PeerBts)?)?;
                let world = LotteryWorld { epsilon: a.cell.epsilon, ..LotteryWorld::default() };
                let lottery =
                    audit_lottery_deviation(&world, &strategy_grid(), DeviationStrategy::Honest, a.cell.trials, seed)?;
                let verdict = if effort.significant && lottery.honest_within_2se {
                    "effort-rewarded"
                } else {
                    "not-confirmed"
                };
                json!({ "mechanism": "peerbts", "verdict": verdict, "seed": seed, "effort": effort, "lottery": lottery })
            }
        })
    };
    let report = match a.threads.threads {
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build()?.install(run)?,
        None => run()?,
    };
    write_atomic(&a.out, |w| write_json(w, &report))
}

fn mechanism_name(m: AuditMechanism) -> &'static str {
    match m {
        AuditMechanism::Peernomination => "peernomination",
        AuditMechanism::Partition => "partition",
        AuditMechanism::Peerbts => "peerbts",
        AuditMechanism::NaiveTopup => "naive-topup",
    }
}

fn mad(a: MadArgs) -> Result<()> {
    let (predictions, finals) = read_score_predictions(open(&a.predictions)?)?;
    let summary = mad_stats(&predictions, &finals)?;
    write_atomic(&a.out, |w| Ok(write_mad_summary(w, &summary)?))?;
    if let Some(p) = &a.per_reviewer {
        write_atomic(p, |w| Ok(write_mad_reviewers(w, &summary)?))?;
    }
    Ok(())
}
