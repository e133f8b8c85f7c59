use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use convstruct::Aggregation;

mod commands;
mod manifest;
mod render;

#[derive(Parser, Debug)]
#[command(
    name = "convstruct",
    version,
    about = "Evaluate and analyze conversational role and thread annotations"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Seed for every resampling and permutation procedure.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Thread-metric aggregation across clips.
    #[arg(long = "aggregate", global = true, value_enum, default_value_t = AggregateArg::Macro)]
    pub aggregate: AggregateArg,
    /// Number of bootstrap resamples (metric CIs are off when absent).
    #[arg(long, global = true, value_name = "N")]
    pub bootstrap: Option<usize>,
    /// Confidence level for bootstrap intervals.
    #[arg(long, global = true, default_value_t = 0.95)]
    pub level: f64,
    /// Drop extra-diegetic and monologue lines before scoring.
    #[arg(long, global = true)]
    pub filter_nondialogic: bool,
    /// Treat warnings as errors and reject unknown annotation keys.
    #[arg(long, global = true)]
    pub strict: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AggregateArg {
    Micro,
    Macro,
}

impl From<AggregateArg> for Aggregation {
    fn from(a: AggregateArg) -> Self {
        match a {
            AggregateArg::Micro => Aggregation::Micro,
            AggregateArg::Macro => Aggregation::Macro,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BaselineMode {
    Full,
    ReplyOnly,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check corpora or annotation files and print diagnostics as JSON lines.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Score predictions against gold annotations.
    Evaluate { gold: PathBuf, pred: PathBuf },
    /// Pairwise inter-annotator agreement from a manifest of annotator files.
    Agree { manifest: PathBuf },
    /// Produce heuristic predictions for a corpus.
    Baseline {
        corpus: PathBuf,
        #[arg(long, value_enum, default_value_t = BaselineMode::Full)]
        mode: BaselineMode,
        /// Face-track file or directory of `<clip>.faces.json`.
        #[arg(long)]
        faces: Option<PathBuf>,
        /// Word-timing file or directory of `<clip>.words.tsv`.
        #[arg(long)]
        words: Option<PathBuf>,
        /// Output annotation file (standard output when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Corpus analyses.
    #[command(subcommand)]
    Analyze(Analysis),
}

#[derive(Subcommand, Debug)]
pub enum Analysis {
    /// Female share of thread starts and holds relative to speaking time.
    Threads {
        corpus: PathBuf,
        /// Participant metadata (defaults to the corpus participants.tsv).
        #[arg(long)]
        gender: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        permutations: usize,
        /// Count events on extra-diegetic and monologue lines too.
        #[arg(long)]
        include_nondialogic: bool,
    },
    /// Role distributions by gender and a multinomial logit.
    Roles {
        corpus: PathBuf,
        #[arg(long)]
        gender: Option<PathBuf>,
    },
    /// Distinctive words of private versus side-participant conversation.
    Logodds {
        corpus: PathBuf,
        /// Fixed prior strength; calibrated by permutation when absent.
        #[arg(long)]
        c_star: Option<f64>,
        #[arg(long, default_value_t = 100)]
        permutations: usize,
        #[arg(long, default_value_t = 5)]
        min_count: u64,
        /// Number of terms listed per direction in the table.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Spearman correlations between clip features and scores.
    Correlate {
        features: PathBuf,
        /// Outcome columns (defaults to the f1_* score columns).
        #[arg(long = "target")]
        targets: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Validate { paths } => commands::validate(&cli.global, &paths),
        Command::Evaluate { gold, pred } => commands::evaluate(&cli.global, &gold, &pred),
        Command::Agree { manifest } => commands::agree(&cli.global, &manifest),
        Command::Baseline {
            corpus,
            mode,
            faces,
            words,
            out,
        } => commands::baseline(
            &cli.global,
            &corpus,
            mode,
            faces.as_deref(),
            words.as_deref(),
            out.as_deref(),
        ),
        Command::Analyze(a) => commands::analyze(&cli.global, a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
