use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "mixgower",
    version,
    about = "Gower dissimilarities for mixed-type data, donor matching, hotdeck imputation and simulations",
    args_override_self = true,
    after_help = "Every flag can also be set in a TOML file passed with --config. Top-level keys apply to every \
                  subcommand that accepts them, tables named after a subcommand (e.g. [match]) to that one only. \
                  Flags given on the command line win."
)]
pub struct Cli {
    /// TOML file with default flag values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads; output does not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-column summaries (n, min, max, range, quartiles, IQR, sd, bandwidths, k) as JSON.
    Stats(StatsArgs),
    /// Dense distance matrix of recipients against donors as CSV.
    Dist(DistArgs),
    /// Top-n donors of every recipient as CSV.
    Match(MatchArgs),
    /// Nearest-neighbour hotdeck imputation of one column.
    Impute(ImputeArgs),
    /// Monte Carlo comparison of distances in hotdeck imputation.
    Simulate(SimulateArgs),
    /// Dice, Manhattan, squared Euclidean and simple-matching distances on a categorical dataset.
    DummyReport(DummyArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Input CSV.
    #[arg(long, value_name = "CSV")]
    pub data: PathBuf,
    /// JSON schema of the input columns.
    #[arg(long, value_name = "JSON")]
    pub schema: PathBuf,
    /// Report path; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Range-scaled Manhattan distance.
    Std,
    /// IQR-scaled distance capped at 1.
    Iqr,
    /// Kernel window with c = 1.06.
    Kde1,
    /// Kernel window with c = 0.9.
    Kde2,
    /// k-nearest-neighbour window.
    Knn,
    /// Two-step conditional distance.
    Cond,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Range,
    Iqr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrdinalArg {
    /// Ranks rescaled to [0, 1] by the declared number of levels.
    Kr,
    /// Midrank differences over the observed midrank span.
    Podani,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatsSourceArg {
    /// Rows of both files.
    Pooled,
    Recipients,
    Donors,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    /// Numeric distance.
    #[arg(long, value_enum, default_value = "std")]
    pub method: MethodArg,
    /// Denominator of the numeric distance (range by default).
    #[arg(long, value_enum)]
    pub scale: Option<ScaleArg>,
    /// Allow `--method std --scale iqr`, which selects the IQR-capped distance.
    #[arg(long)]
    pub force: bool,
    /// JSON object mapping column names to non-negative weights.
    #[arg(long, value_name = "JSON")]
    pub weights: Option<PathBuf>,
    /// Ordinal distance.
    #[arg(long, value_enum, default_value = "kr")]
    pub ordinal: OrdinalArg,
    /// Neighbourhood size of the knn window; round(sqrt(n)) when omitted.
    #[arg(long, value_name = "K")]
    pub knn_k: Option<usize>,
    /// knn window: zero distance when either point lies in the other's neighbourhood.
    #[arg(long)]
    pub knn_symmetrize: bool,
    /// Conditional distance: treat ordinal columns as numeric.
    #[arg(long)]
    pub ordinal_as_numeric: bool,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    /// Recipient CSV (matrix rows).
    #[arg(long, value_name = "CSV")]
    pub recipients: PathBuf,
    /// Donor CSV (matrix columns).
    #[arg(long, value_name = "CSV")]
    pub donors: PathBuf,
    #[arg(long, value_name = "JSON")]
    pub schema: PathBuf,
    #[command(flatten)]
    pub distance: DistanceArgs,
    /// Rows defining ranges, quartiles, bandwidths and neighbourhoods.
    #[arg(long = "stats-from", value_enum, default_value = "pooled")]
    pub stats_from: StatsSourceArg,
    /// Output CSV; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    /// Donors listed per recipient.
    #[arg(long, default_value_t = 1, value_name = "N")]
    pub top_n: usize,
    /// Seed of the tie-breaking order.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ImputeArgs {
    #[arg(long, value_name = "CSV")]
    pub data: PathBuf,
    #[arg(long, value_name = "JSON")]
    pub schema: PathBuf,
    /// Column to fill.
    #[arg(long)]
    pub target: String,
    #[command(flatten)]
    pub distance: DistanceArgs,
    /// Seed of the tie-breaking order.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Maximum recipients served by one donor.
    #[arg(long, value_name = "N")]
    pub max_uses: Option<usize>,
    /// Column parameters from all rows instead of the donors only.
    #[arg(long)]
    pub pooled_stats: bool,
    /// Completed CSV; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// CSV of recipient_id, donor_id, distance.
    #[arg(long, value_name = "FILE")]
    pub donor_map: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    /// X2..X5 categorized into 4, 6, 2 and 4 classes.
    Fourcat,
    /// X3..X5 categorized into 6, 2 and 4 classes.
    Threecat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MechanismArg {
    Mcar,
    Mar,
    Mnar,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "fourcat")]
    pub scenario: ScenarioArg,
    /// Replace 2% of X1 with N(200, 20^2) draws.
    #[arg(long)]
    pub outliers: bool,
    #[arg(long, value_enum, default_value = "mcar")]
    pub mechanism: MechanismArg,
    /// Driver column of MAR deletion (X1 on artificial data).
    #[arg(long)]
    pub driver: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub missing_fraction: f64,
    #[arg(long, default_value_t = 0.02)]
    pub outlier_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated methods (no.mod, kde1, kde2, knn, cond.dist), each
    /// optionally suffixed with :range or :iqr. Bare names run both scalings.
    #[arg(long, default_value = "no.mod,kde1,kde2,knn,cond.dist")]
    pub methods: String,
    /// User CSV; switches from artificial data to deletion and imputation of --target.
    #[arg(long, value_name = "CSV", requires_all = ["schema", "target"])]
    pub data: Option<PathBuf>,
    #[arg(long, value_name = "JSON", requires = "data")]
    pub schema: Option<PathBuf>,
    /// Numeric column to delete and impute in the user data.
    #[arg(long, requires = "data")]
    pub target: Option<String>,
    /// Include per-replication metrics in the report.
    #[arg(long)]
    pub trace: bool,
    /// Report path; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DummyArgs {
    #[arg(long, value_name = "CSV")]
    pub data: PathBuf,
    #[arg(long, value_name = "JSON")]
    pub schema: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}
