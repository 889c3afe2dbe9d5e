use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "forestconc", version, about = "Concentration bounds for graph-dependent variables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Seed for every random choice (random trees, regions, trials).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "FORESTCONC_WORKERS", default_value_t = 1)]
    pub workers: usize,

    /// Write the CSV (or JSON for `complexity`) here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Forest complexity of a graph: exact when small, otherwise upper bounds.
    Complexity(ComplexityArgs),
    /// Tail bounds on a threshold grid.
    Bound(BoundArgs),
    /// Monte Carlo tail estimate checked against the tightest bound.
    Simulate(SimulateArgs),
    /// Risk bound of a uniformly stable learner, term by term.
    Genbound(GenboundArgs),
    /// Repeated generalization-gap experiment on m-dependent data.
    Gap(GapArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyName {
    Path,
    /// Uniform random tree drawn from --seed.
    Tree,
    Cycle,
    /// The --m × --m grid.
    Grid,
    /// i ~ j iff |i − j| <= --m, on --n vertices.
    Mdep,
    /// --n vertices, one center.
    Star,
    Edgeless,
    Complete,
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// JSON graph file.
    #[arg(long, conflicts_with = "family")]
    pub graph: Option<PathBuf>,

    /// Built-in graph family.
    #[arg(long, value_enum)]
    pub family: Option<FamilyName>,

    /// Number of vertices.
    #[arg(long)]
    pub n: Option<usize>,

    /// Grid side or dependence range.
    #[arg(long)]
    pub m: Option<usize>,

    /// Also write the graph as JSON.
    #[arg(long)]
    pub emit_graph: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BudgetArgs {
    /// Largest graph handed to the exact forest-complexity oracle.
    #[arg(long, default_value_t = forestconc::complexity::DEFAULT_ORACLE_BUDGET)]
    pub budget: usize,

    /// Largest graph for the exact fractional chromatic number.
    #[arg(long, default_value_t = forestconc::chromatic::DEFAULT_CHROMATIC_BUDGET)]
    pub chromatic_budget: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ComplexityArgs {
    #[command(flatten)]
    pub graph: GraphArgs,

    #[arg(long, default_value_t = forestconc::complexity::DEFAULT_ORACLE_BUDGET)]
    pub budget: usize,

    /// Print the JSON report on stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundChoice {
    All,
    Mcdiarmid,
    Janson,
    Tree,
    Forest,
    General,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub graph: GraphArgs,

    #[command(flatten)]
    pub budget: BudgetArgs,

    /// Lipschitz vector: `uniform:x` or a comma-separated list.
    #[arg(long, default_value = "uniform:1")]
    pub c: String,

    /// Comma-separated thresholds.
    #[arg(long)]
    pub t: String,

    /// Which bound to evaluate; a single inapplicable family is an error.
    #[arg(long, value_enum, default_value_t = BoundChoice::All)]
    pub bound: BoundChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerName {
    Edgegen,
    Mdep,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CenteringName {
    Exact,
    Pilot,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub sampler: SamplerName,

    /// Graph for the edge-generator sampler; `--n`/`--m` also size `mdep`.
    #[command(flatten)]
    pub graph: GraphArgs,

    #[command(flatten)]
    pub budget: BudgetArgs,

    /// Number of random rectangles for the Poisson sampler.
    #[arg(long, default_value_t = 20)]
    pub regions: usize,

    /// JSON list of `[x0, y0, x1, y1]` rectangles (overrides --regions).
    #[arg(long)]
    pub regions_file: Option<PathBuf>,

    #[arg(long, default_value_t = 20.0)]
    pub intensity: f64,

    #[arg(long, default_value_t = 5)]
    pub cap: u32,

    #[arg(long, default_value = "uniform:1")]
    pub c: String,

    /// Comma-separated thresholds, or `auto` for empirical quantiles at the
    /// tail levels 0.3, 0.1, 0.03, 0.01, 0.003 and 0.0005.
    #[arg(long, default_value = "auto")]
    pub t_grid: String,

    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,

    #[arg(long, default_value_t = 0.99)]
    pub confidence: f64,

    #[arg(long, value_enum, default_value_t = CenteringName::Exact)]
    pub centering: CenteringName,

    /// Negative control: halve every bound denominator.
    #[arg(long)]
    pub corrupt_bound: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GenboundArgs {
    #[arg(long)]
    pub n: usize,

    /// `β_i = B/i`.
    #[arg(long, conflicts_with = "beta_table")]
    pub beta_const: Option<f64>,

    /// Comma-separated `β_1, β_2, …`.
    #[arg(long)]
    pub beta_table: Option<String>,

    #[arg(long, default_value_t = 1.0)]
    pub loss_bound: f64,

    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,

    #[arg(long, default_value_t = 0.0)]
    pub empirical_risk: f64,

    /// m-dependent data (Δ = 2m, Λ ≤ 4mn).
    #[arg(long, conflicts_with_all = ["lambda", "max_degree", "iid"])]
    pub m: Option<usize>,

    /// Forest complexity of the dependency graph.
    #[arg(long, requires = "max_degree", conflicts_with = "iid")]
    pub lambda: Option<u64>,

    /// Maximum degree Δ of the dependency graph.
    #[arg(long, requires = "lambda")]
    pub max_degree: Option<usize>,

    /// Independent data: Λ = n, Δ = 0.
    #[arg(long)]
    pub iid: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GapArgs {
    #[arg(long, default_value_t = 500)]
    pub n: usize,

    /// Window half-width; the data are 2q-dependent.
    #[arg(long, default_value_t = 2)]
    pub q: usize,

    #[arg(long, default_value_t = 200)]
    pub reps: usize,

    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,

    #[arg(long, default_value_t = 1.0)]
    pub regularization: f64,

    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,

    #[arg(long, default_value_t = 20_000)]
    pub test_trials: u64,

    /// Fail (exit 1) below this fraction of passing repetitions.
    #[arg(long, default_value_t = 0.95)]
    pub min_pass_fraction: f64,
}
