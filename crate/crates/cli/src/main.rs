mod align;
mod common;
mod durations;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use common::{Context, UsageError};

#[derive(Parser, Debug)]
#[command(name = "phonedur", version, about = "Phoneme-duration alignment, statistics and modification")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Phoneme inventory file, one symbol per line (default: ARPABET).
    #[arg(long, global = true)]
    pub inventory: Option<PathBuf>,
    #[arg(long, global = true, default_value = phonedur::inventory::SPACE)]
    pub space_symbol: String,
    #[arg(long, global = true, default_value = phonedur::inventory::SILENCE)]
    pub silence_symbol: String,
    /// Worker threads; output order never depends on this.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Root seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON file with subcommand settings; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output path (stdout when absent).
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    /// Run manifest path (default: `<out>.manifest.json`).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build an initial HMM from a linear segmentation.
    HmmInit(align::HmmTrainArgs),
    /// Train a monophone HMM-GMM with Viterbi EM.
    HmmTrain(align::HmmTrainArgs),
    /// Force-align transcripts with a trained HMM.
    HmmAlign(align::HmmAlignArgs),
    /// Force-align transcripts on CTC emission log-posteriors.
    CtcAlign(align::CtcAlignArgs),
    /// Convert frame-level HMM alignments to per-phoneme durations.
    Durations(durations::DurationsArgs),
    /// Per-phoneme duration statistics.
    Stats(durations::StatsArgs),
    /// Mean KL divergence between predicted and reference durations.
    Kld(durations::KldArgs),
    /// Export one phoneme's duration histogram as CSV.
    HistExport(durations::HistExportArgs),
    /// Scale durations by a constant or a random walk.
    Modify(durations::ModifyArgs),
    /// Replace predicted durations by reference durations.
    OracleSub(durations::OracleSubArgs),
    /// Gaussian upsampling of phoneme-level vectors to frames.
    Upsample(durations::UpsampleArgs),
    /// Run the duration simulation sweep.
    Simulate(simulate::SimulateArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModifyMode {
    Constant,
    Walk,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::HmmInit(_) => "hmm-init",
            Command::HmmTrain(_) => "hmm-train",
            Command::HmmAlign(_) => "hmm-align",
            Command::CtcAlign(_) => "ctc-align",
            Command::Durations(_) => "durations",
            Command::Stats(_) => "stats",
            Command::Kld(_) => "kld",
            Command::HistExport(_) => "hist-export",
            Command::Modify(_) => "modify",
            Command::OracleSub(_) => "oracle-sub",
            Command::Upsample(_) => "upsample",
            Command::Simulate(_) => "simulate",
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut ctx = Context::new(cli.global, cli.command.name())?;
    match &cli.command {
        Command::HmmInit(a) => align::hmm_init(&mut ctx, a),
        Command::HmmTrain(a) => align::hmm_train(&mut ctx, a),
        Command::HmmAlign(a) => align::hmm_align(&mut ctx, a),
        Command::CtcAlign(a) => align::ctc_align(&mut ctx, a),
        Command::Durations(a) => durations::durations(&mut ctx, a),
        Command::Stats(a) => durations::stats(&mut ctx, a),
        Command::Kld(a) => durations::kld(&mut ctx, a),
        Command::HistExport(a) => durations::hist_export(&mut ctx, a),
        Command::Modify(a) => durations::modify(&mut ctx, a),
        Command::OracleSub(a) => durations::oracle_sub(&mut ctx, a),
        Command::Upsample(a) => durations::upsample(&mut ctx, a),
        Command::Simulate(a) => simulate::simulate(&mut ctx, a),
    }?;
    ctx.finish()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
