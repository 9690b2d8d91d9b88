use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use migrant_attachment::pipeline::{Command, RunConfig};

/// Home and destination attachment of migrants from geo-tagged hashtag corpora.
#[derive(Parser)]
#[command(name = "mattach", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML file with any `RunConfig` field; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory shared by all stages.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    posts: Option<PathBuf>,
    #[arg(long, global = true)]
    friends: Option<PathBuf>,
    #[arg(long, global = true)]
    hofstede: Option<PathBuf>,
    #[arg(long, global = true)]
    pairs: Option<PathBuf>,
    #[arg(long, global = true)]
    dest_languages: Option<PathBuf>,
    /// Extra covariate table keyed by `country` or `origin,destination` (repeatable).
    #[arg(long = "covariates", global = true)]
    covariates: Vec<PathBuf>,
    /// Reference year for residence and hashtag counts [default: 2018]
    #[arg(long, global = true)]
    year: Option<i32>,
    /// Normalized-entropy cutoff for country-specific hashtags [default: 0.5]
    #[arg(long, global = true)]
    entropy_threshold: Option<f64>,
    /// Minimum hashtag uses for a migrant to be scored [default: 10]
    #[arg(long, global = true)]
    min_hashtags: Option<usize>,
    /// Null-model reshuffles [default: 5]
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// Seed for the null model and the generator [default: 42]
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Assign residence and nationality to users
    Label,
    /// Assign hashtags to countries
    Atlas,
    /// Compute HA and DA per migrant
    Score,
    /// Recompute scores on shuffled hashtags
    Null,
    /// Compare real and null scores, HA and DA, language cohorts
    Stats,
    /// Correlate HA and DA with country covariates
    Correlate,
    /// Write plot-data tables
    Report,
    /// Generate a synthetic corpus with ground truth
    Synth,
    /// Run label through report in order
    All,
}

impl Cli {
    fn config(&self) -> migrant_attachment::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = &self.$f { c.$f = v.clone().into(); })*};
        }
        set!(out, year, entropy_threshold, min_hashtags, replicates, seed);
        set!(posts, friends, hofstede, pairs, dest_languages);
        if !self.covariates.is_empty() {
            c.covariates = self.covariates.clone();
        }
        Ok(c)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let commands: Vec<Command> = match cli.command {
        Cmd::Label => vec![Command::Label],
        Cmd::Atlas => vec![Command::Atlas],
        Cmd::Score => vec![Command::Score],
        Cmd::Null => vec![Command::Null],
        Cmd::Stats => vec![Command::Stats],
        Cmd::Correlate => vec![Command::Correlate],
        Cmd::Report => vec![Command::Report],
        Cmd::Synth => vec![Command::Synth],
        Cmd::All => Command::CHAIN.to_vec(),
    };
    let result = cli.config().and_then(|config| {
        for cmd in commands {
            for path in cmd.run(&config)? {
                println!("{}", path.display());
            }
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
