use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use mainstreamlab::config::{parse_config_file, RunConfig};
use mainstreamlab::pipeline::{self, Inputs};

/// Country-aware music listening analytics: popularity profiles,
/// mainstreaminess measures, outlier detection, country clustering, and
/// rating-prediction evaluation over user-artist listening events.
#[derive(Parser)]
#[command(name = "mainstreamlab", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse inputs, filter by country support, and write the matrix back
    /// as ingestable TSVs plus dataset statistics.
    Ingest(StageArgs),
    /// Ranked global popularity lists and per-country popularity-plot data.
    Popularity(StageArgs),
    /// Per-user mainstreaminess table over all six measures.
    Measures(StageArgs),
    /// Descriptive statistics, Kruskal-Wallis, and normality checks.
    Stats(StageArgs),
    /// Sliding-window and global-difference outliers for one country.
    Outliers(StageArgs),
    /// Affinity-propagation clustering of countries by popularity curves.
    Cluster(StageArgs),
    /// Cross-validated rating-prediction experiments per measure and
    /// user set, plus the unfiltered baseline.
    RecsysEval(StageArgs),
    /// Table-shaped summaries over precomputed artifacts or a fresh run.
    Report(StageArgs),
}

#[derive(Args)]
struct StageArgs {
    /// Listening events TSV (3 columns aggregated, 5 columns raw).
    #[arg(long)]
    events: Option<PathBuf>,
    /// Users TSV (user_id, country).
    #[arg(long)]
    users: Option<PathBuf>,
    /// Output directory for this stage.
    #[arg(long)]
    out: PathBuf,
    /// Directory with prior-stage artifacts (stats, report).
    #[arg(long)]
    artifacts: Option<PathBuf>,
    /// Flat key=value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed; falls back to MAINSTREAMLAB_SEED, then 42.
    #[arg(long)]
    seed: Option<u64>,
    /// Keep only countries with at least this many users.
    #[arg(long)]
    min_country_users: Option<usize>,
    /// Country eligibility threshold for rating-prediction runs.
    #[arg(long)]
    min_country_users_recsys: Option<usize>,
    /// Additive smoothing for distribution comparisons.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Remove each user's own listening from the reference profile.
    #[arg(long)]
    leave_one_out: bool,
    /// Popularity basis: apc or alc.
    #[arg(long)]
    basis: Option<String>,
    /// Measure scope filter: global or country.
    #[arg(long)]
    scope: Option<String>,
    /// Measure method filter: distribution or rank.
    #[arg(long)]
    method: Option<String>,
    /// Country code, or "all" for every eligible country.
    #[arg(long)]
    country: Option<String>,
    /// User set: low, mid, high, or all.
    #[arg(long)]
    user_set: Option<String>,
    /// Sliding-window width in artists.
    #[arg(long)]
    window: Option<usize>,
    /// Positive outlier threshold in percent.
    #[arg(long)]
    pos_thresh: Option<f64>,
    /// Negative outlier threshold in percent (a negative number).
    #[arg(long, allow_hyphen_values = true)]
    neg_thresh: Option<f64>,
    /// Global-rank horizon for plots and outlier detection.
    #[arg(long)]
    horizon: Option<usize>,
    /// Exclude the anchor artist from its window mean.
    #[arg(long)]
    exclude_self: bool,
    /// Keep only the n most extreme outliers per polarity and detector.
    #[arg(long)]
    top_n: Option<usize>,
    /// Affinity propagation damping factor.
    #[arg(long)]
    damping: Option<f64>,
    /// Affinity propagation iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Iterations the exemplar set must stay unchanged to converge.
    #[arg(long)]
    convergence_window: Option<usize>,
    /// Affinity propagation preference; defaults to the median similarity.
    #[arg(long, allow_hyphen_values = true)]
    preference: Option<f64>,
    /// Restrict clustering features to the global top-k artists (0 = all).
    #[arg(long)]
    top_k_features: Option<usize>,
    /// Latent factor count.
    #[arg(long)]
    k: Option<usize>,
    /// SGD learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// L2 regularization strength.
    #[arg(long)]
    reg: Option<f64>,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Cross-validation folds.
    #[arg(long)]
    folds: Option<usize>,
    /// Fraction of interactions used for training.
    #[arg(long)]
    train_frac: Option<f64>,
    /// Use raw playcounts as ratings instead of [0, 1] normalized values.
    #[arg(long)]
    raw_ratings: bool,
    /// Drop cold test interactions instead of predicting 0 for them.
    #[arg(long)]
    drop_cold: bool,
    /// Also run the ICC and subsample validation suite.
    #[arg(long)]
    validate: bool,
    /// Users per validation subsample.
    #[arg(long)]
    subsample_size: Option<usize>,
    /// Number of validation subsamples per country.
    #[arg(long)]
    subsamples: Option<usize>,
}

impl StageArgs {
    /// Precedence: flag > config file > MAINSTREAMLAB_SEED (seed only) >
    /// default.
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        cfg.seed_from_env();
        if let Some(path) = &self.config {
            let entries = parse_config_file(path)?;
            cfg.apply_file(&entries)?;
        }

        macro_rules! copy_flag {
            ($($field:ident),+) => {
                $(if let Some(v) = self.$field {
                    cfg.$field = v;
                })+
            };
        }
        macro_rules! clone_opt_flag {
            ($($field:ident),+) => {
                $(if let Some(v) = &self.$field {
                    cfg.$field = Some(v.clone());
                })+
            };
        }
        copy_flag!(
            seed,
            min_country_users,
            min_country_users_recsys,
            epsilon,
            window,
            pos_thresh,
            neg_thresh,
            horizon,
            damping,
            max_iter,
            convergence_window,
            top_k_features,
            k,
            lr,
            reg,
            epochs,
            folds,
            train_frac,
            subsample_size,
            subsamples
        );
        clone_opt_flag!(basis, scope, method, country, user_set);
        if let Some(n) = self.top_n {
            cfg.top_n = Some(n);
        }
        if let Some(p) = self.preference {
            cfg.preference = Some(p);
        }
        if self.leave_one_out {
            cfg.leave_one_out = true;
        }
        if self.exclude_self {
            cfg.exclude_self = true;
        }
        if self.raw_ratings {
            cfg.raw_ratings = true;
        }
        if self.drop_cold {
            cfg.drop_cold = true;
        }
        if self.validate {
            cfg.validate = true;
        }
        Ok(cfg)
    }

    fn inputs(&self) -> Result<Inputs<'_>> {
        match (&self.events, &self.users) {
            (Some(events), Some(users)) => Ok(Inputs { events, users }),
            _ => bail!("this subcommand needs both --events and --users"),
        }
    }

    fn optional_inputs(&self) -> Option<Inputs<'_>> {
        match (&self.events, &self.users) {
            (Some(events), Some(users)) => Some(Inputs { events, users }),
            _ => None,
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(args) => pipeline::cmd_ingest(&args.inputs()?, &args.resolve()?, &args.out),
        Command::Popularity(args) => {
            pipeline::cmd_popularity(&args.inputs()?, &args.resolve()?, &args.out)
        }
        Command::Measures(args) => {
            pipeline::cmd_measures(&args.inputs()?, &args.resolve()?, &args.out)
        }
        Command::Stats(args) => pipeline::cmd_stats(
            args.optional_inputs().as_ref(),
            args.artifacts.as_deref(),
            &args.resolve()?,
            &args.out,
        ),
        Command::Outliers(args) => {
            pipeline::cmd_outliers(&args.inputs()?, &args.resolve()?, &args.out)
        }
        Command::Cluster(args) => {
            pipeline::cmd_cluster(&args.inputs()?, &args.resolve()?, &args.out)
        }
        Command::RecsysEval(args) => {
            pipeline::cmd_recsys_eval(&args.inputs()?, &args.resolve()?, &args.out)
        }
        Command::Report(args) => pipeline::cmd_report(
            args.optional_inputs().as_ref(),
            args.artifacts.as_deref(),
            &args.resolve()?,
            &args.out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
