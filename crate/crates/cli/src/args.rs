use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "loopsoup", version, about = "Markov loop measures, loop soups, free fields and spanning trees on finite graphs")]
pub struct Cli {
    /// Worker threads for Monte Carlo sharding (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    /// Emit JSON on stdout instead of a table.
    #[arg(long)]
    pub json: bool,
    /// Write the main artifact (JSON report or CSV dump) to this file.
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct Sampling {
    #[arg(short = 'n', long = "samples", default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Green function G = (M_λ - C)^{-1}, optionally G_χ.
    Green {
        graph: PathBuf,
        /// Vertex measure as a JSON object, e.g. '{"a": 0.5}'.
        #[arg(long)]
        chi: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Exact loop-measure quantities.
    Mu {
        #[command(subcommand)]
        op: MuOp,
    },
    /// Poissonian loop ensembles; `-o` dumps the loops as CSV.
    Sample {
        graph: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Cap on the length of sampled loops (default: from the spectral tail).
        #[arg(long)]
        k_cap: Option<usize>,
        #[command(flatten)]
        run: Sampling,
        #[command(flatten)]
        out: Output,
    },
    /// Spanning trees by Wilson's algorithm; `-o` dumps edge lists as CSV.
    Wilson {
        graph: PathBuf,
        /// Root vertex (recurrent graphs); the cemetery otherwise.
        #[arg(long)]
        root: Option<String>,
        #[command(flatten)]
        run: Sampling,
        #[command(flatten)]
        out: Output,
    },
    /// Gaussian free field draws; `-o` dumps them as CSV.
    Gff {
        graph: PathBuf,
        #[command(flatten)]
        run: Sampling,
        #[command(flatten)]
        out: Output,
    },
    /// Non-backtracking cycle counts and the Ihara zeta function.
    Zeta {
        graph: PathBuf,
        /// Comma-separated u values (default: 0.2, 0.5, 0.8 of the radius).
        #[arg(long, value_delimiter = ',')]
        u_grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 8)]
        m_max: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Run a verification suite; exits 1 if any check fails.
    Verify(VerifyArgs),
    /// Write the bundled fixture graphs.
    Fixtures {
        /// Output directory.
        #[arg(short = 'o', long = "output", default_value = "fixtures")]
        dir: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum MuOp {
    /// μ(p > 1) = -log det(I - P).
    Total {
        graph: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Enumerated loops up to `--k-cap`; `-o` dumps (loop, mass) as CSV.
    Enumerate {
        graph: PathBuf,
        #[arg(long, default_value_t = 8)]
        k_cap: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Mass of loops meeting every vertex of `--set` and avoiding `--set2`.
    HitAvoid {
        graph: PathBuf,
        #[arg(long)]
        set: String,
        #[arg(long)]
        set2: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Mass of loops meeting both `--set` and `--set2`, with its series.
    Cross {
        graph: PathBuf,
        #[arg(long)]
        set: String,
        #[arg(long)]
        set2: String,
        #[arg(long, default_value_t = 40)]
        k_cap: usize,
        #[command(flatten)]
        out: Output,
    },
    /// E[exp(-<L_α, χ>)].
    Laplace {
        graph: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        chi: String,
        #[command(flatten)]
        out: Output,
    },
    /// E[∏ L̂^{x_i}] and Per_α(G) over the points of `--set` (repeats allowed).
    Moment {
        graph: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        set: String,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Dynkin,
    Marginals,
    Transfer,
    ErasedLoops,
    Erasure,
    PoissonDirichlet,
    LoopMass,
    CrossHitting,
    Wreath,
    Web,
    Reflection,
    Counterexample,
    Variation,
    Zeta,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub suite: Suite,
    #[arg(long)]
    pub graph: PathBuf,
    /// Intensity; comma-separated for `marginals`. `dynkin` uses α = k/2.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Vertex measure as a JSON object; `variation` adds it to κ.
    #[arg(long)]
    pub chi: Option<String>,
    /// Comma-separated vertex names.
    #[arg(long)]
    pub set: Option<String>,
    #[arg(long)]
    pub set2: Option<String>,
    /// Edge sets `a-b,b-c;a-c` (sets separated by `;`, `delta` for the cemetery).
    #[arg(long)]
    pub edges: Option<String>,
    #[arg(long)]
    pub root: Option<String>,
    #[arg(long)]
    pub k_cap: Option<usize>,
    #[arg(long)]
    pub m_max: Option<usize>,
    /// Random splits for `web`.
    #[arg(long, default_value_t = 20)]
    pub splits: usize,
    #[command(flatten)]
    pub run: Sampling,
    #[command(flatten)]
    pub out: Output,
}
