use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bbols::config::{parse_f64_grid, parse_usize_grid, MatrixKind};
use bbols::curves::{run_bound_curves, write_bounds_csv, CustomGrid, Preset};
use bbols::io::{format_vector, read_matrix, read_vector, write_matrix, write_vector};
use bbols::sweep::{derive_xi, generate_matrix, run_sweep, write_curve_csv};
use bbols::{occupancy_from_recovery, ExperimentConfig, HarnessError, Axis};
use bbols_core::block_model::{calibrate_noise, gen_signal, measure, seeded_rng};
use bbols_core::recovery::{recover, Algorithm, RuleKind, StoppingRule};
use bbols_core::{coherence_profile, BlockMatrix, SignalDist};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

#[derive(Parser)]
#[command(name = "bbols", version, about = "Block-sparse greedy recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mutual, block and sub-coherence of a matrix.
    Coherence(CoherenceArgs),
    /// Closed-form bound curves as CSV.
    Bounds(BoundsArgs),
    /// Recover a signal from a measurement vector.
    Solve(SolveArgs),
    /// Monte Carlo recovery sweep from a config file.
    Sweep(SweepArgs),
    /// Draw a random matrix and optionally a measured block-sparse signal.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct GenSpec {
    /// Matrix ensemble.
    #[arg(long, value_enum, default_value_t = Kind::GaussianBlockOrth)]
    kind: Kind,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Offset bound of the hybrid ensemble.
    #[arg(long = "g", default_value_t = 5.0)]
    hybrid_g: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    GaussianBlockOrth,
    Hybrid,
    TwoOrthobasis,
}

impl From<Kind> for MatrixKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::GaussianBlockOrth => MatrixKind::GaussianBlockOrth,
            Kind::Hybrid => MatrixKind::Hybrid,
            Kind::TwoOrthobasis => MatrixKind::TwoOrthobasis,
        }
    }
}

impl GenSpec {
    fn build(&self) -> Result<BlockMatrix, HarnessError> {
        let m = self.m.ok_or_else(|| HarnessError::Config("--m is required with --generate".into()))?;
        let n = match (self.kind, self.n) {
            (_, Some(n)) => n,
            (Kind::TwoOrthobasis, None) => 2 * m,
            _ => return Err(HarnessError::Config("--n is required with --generate".into())),
        };
        let mut cfg = ExperimentConfig::new(m, n, self.d, Axis::Sparsity { k_grid: vec![0], snr_db: 0.0 });
        cfg.matrix_kind = self.kind.into();
        cfg.hybrid_g = self.hybrid_g;
        cfg.validate()?;
        Ok(generate_matrix(&cfg, &mut seeded_rng(self.seed))?)
    }
}

#[derive(Args)]
struct CoherenceArgs {
    /// Matrix file; omit with --generate.
    matrix: Option<PathBuf>,
    #[arg(long)]
    generate: bool,
    #[command(flatten)]
    spec: GenSpec,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, value_parser = parse_preset, conflicts_with = "custom")]
    preset: Option<Preset>,
    #[arg(long)]
    custom: bool,
    /// Block sparsity values, e.g. `2,3` or `2:8`.
    #[arg(long, default_value = "2")]
    k: String,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Coherence values, e.g. `0.05` or `0.01:0.01:0.1`.
    #[arg(long, default_value = "0.05")]
    mu: String,
    /// Block coherence; defaults to mu/d.
    #[arg(long)]
    mu_b: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p_target: Option<String>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    Preset::parse(s).ok_or_else(|| format!("unknown preset {s}; expected eigen-mu, eigen-k, projection, sparsity or snr"))
}

#[derive(Clone, Copy, ValueEnum)]
enum Alg {
    Omp,
    Ols,
    Bomp,
    Bols,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Fixed,
    Residual,
    Blind,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Measurement vector file.
    #[arg(long)]
    y: PathBuf,
    #[arg(long, value_enum, default_value_t = Alg::Bols)]
    alg: Alg,
    #[arg(long, value_enum, default_value_t = Rule::Blind)]
    rule: Rule,
    /// Selections for the fixed rule.
    #[arg(long)]
    iterations: Option<usize>,
    /// Residual threshold for the residual rule.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 0.95)]
    p_target: f64,
    /// Explicit ξ; used when the derivation from --p-target is not valid.
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Write x̂ here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured worker count.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    spec: GenSpec,
    #[arg(long)]
    out: PathBuf,
    /// Also draw a signal with this many active blocks.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 20.0)]
    snr_db: f64,
    #[arg(long, default_value = "gauss01")]
    signal_dist: String,
    #[arg(long)]
    x_out: Option<PathBuf>,
    #[arg(long)]
    y_out: Option<PathBuf>,
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn coherence(args: CoherenceArgs) -> Result<(), HarnessError> {
    let matrix = match (&args.matrix, args.generate) {
        (Some(p), false) => read_matrix(p)?,
        (None, true) => args.spec.build()?,
        _ => return Err(HarnessError::Config("give either a matrix file or --generate".into())),
    };
    let p = coherence_profile(&matrix);
    println!("m {}", matrix.m());
    println!("n {}", matrix.n());
    println!("d {}", matrix.block_len());
    println!("mu {}", bbols::format::g9(p.mu));
    println!("mu_b {}", bbols::format::g9(p.mu_b));
    println!("nu {}", bbols::format::g9(p.nu));
    Ok(())
}

fn bounds(args: BoundsArgs) -> Result<(), HarnessError> {
    let points = match (args.preset, args.custom) {
        (Some(p), false) => p.points(),
        (None, true) => CustomGrid {
            k: parse_usize_grid(&args.k)?,
            d: args.d,
            mu: parse_f64_grid(&args.mu)?,
            mu_b: args.mu_b,
            m: args.m,
            n: args.n,
            p_target: args.p_target.as_deref().map(parse_f64_grid).transpose()?.unwrap_or_default(),
            xi: args.xi,
        }
        .points()?,
        _ => return Err(HarnessError::Config("give --preset or --custom".into())),
    };
    let rows = run_bound_curves(&points);
    write_bounds_csv(output(&args.out)?, &rows)?;
    Ok(())
}

fn solve(args: SolveArgs) -> Result<(), HarnessError> {
    let matrix = read_matrix(&args.matrix)?;
    let y = read_vector(&args.y)?;
    let algorithm = match args.alg {
        Alg::Omp => Algorithm::Omp,
        Alg::Ols => Algorithm::Ols,
        Alg::Bomp => Algorithm::Bomp,
        Alg::Bols => Algorithm::Bols,
    };
    let d = if algorithm.is_block() { matrix.block_len() } else { 1 };
    let kind = match args.rule {
        Rule::Fixed => RuleKind::FixedIterations(
            args.iterations.ok_or_else(|| HarnessError::Config("--iterations is required for the fixed rule".into()))?,
        ),
        Rule::Residual => RuleKind::ResidualNorm(
            args.tau.ok_or_else(|| HarnessError::Config("--tau is required for the residual rule".into()))?,
        ),
        Rule::Blind => {
            let p = coherence_profile(&matrix);
            let coh = if d == 1 { p.mu } else { p.mu_b };
            let xi = match derive_xi(p.mu, coh, d, matrix.m(), matrix.n(), args.p_target) {
                Ok(xi) => xi,
                Err(reason) => match args.xi {
                    Some(xi) => {
                        warn!("xi from p_target unavailable ({reason}); using --xi {xi}");
                        xi
                    }
                    None => return Err(HarnessError::Regime(format!("{reason}; pass --xi"))),
                },
            };
            if d == 1 {
                RuleKind::BlindScalar { xi, mu: coh }
            } else {
                RuleKind::BlindBlock { xi, mu_b: coh, d }
            }
        }
    };
    let mut rule = StoppingRule::new(kind);
    if let Some(cap) = args.max_iterations {
        rule = rule.with_cap(cap);
    }
    let res = recover(&matrix, &y, algorithm, &rule)?;
    eprintln!("selected {:?}", res.selected_blocks);
    eprintln!("stop {} after {} iterations", res.stop_reason.name(), res.iterations);
    if res.rank_deficient {
        eprintln!("warning: selected columns are rank deficient; minimum-norm estimate");
    }
    let occ = occupancy_from_recovery(&res, matrix.n_blocks());
    eprintln!("occupied {:?}", occ.occupied_blocks());
    let mut out = output(&args.out)?;
    out.write_all(format_vector(&res.x_hat).as_bytes())?;
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), HarnessError> {
    let text = fs::read_to_string(&args.config)?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    let points = run_sweep(&cfg)?;
    write_curve_csv(output(&args.out)?, &points)?;
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<(), HarnessError> {
    let matrix = args.spec.build()?;
    write_matrix(&args.out, &matrix)?;
    if let Some(k) = args.k {
        let dist = SignalDist::parse(&args.signal_dist)
            .ok_or_else(|| HarnessError::Config(format!("unknown signal_dist {}", args.signal_dist)))?;
        let mut rng = seeded_rng(args.spec.seed.wrapping_add(1));
        let signal = gen_signal(matrix.n(), matrix.block_len(), k, dist, &mut rng)?;
        let noise = match calibrate_noise(&matrix, signal.entries(), args.snr_db, &mut rng) {
            Ok((e, _)) => e,
            Err(bbols_core::Error::ZeroSignal) => vec![0.0; matrix.m()],
            Err(e) => return Err(e.into()),
        };
        if let Some(p) = &args.x_out {
            write_vector(p, signal.entries())?;
        }
        if let Some(p) = &args.y_out {
            write_vector(p, &measure(&matrix, signal.entries(), &noise))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Coherence(a) => coherence(a),
        Command::Bounds(a) => bounds(a),
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::Generate(a) => generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                HarnessError::Config(_) | HarnessError::Input(_) => 2,
                HarnessError::Regime(_) => 3,
                HarnessError::Core(_) | HarnessError::Io(_) => 1,
            })
        }
    }
}
