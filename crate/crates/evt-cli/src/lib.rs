//! Command-line surface: argument parsing, file IO, report rendering, and
//! the exit-code contract.
//!
//! Exit codes: 0 for success or a passing check, 1 for usage, parse, or
//! validation problems, 2 for numeric failures (non-convergence, resample
//! budget exhaustion, a failed certification). Results go to stdout,
//! diagnostics to stderr.

pub mod format;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand};

use evt_core::{
    mean_entropy_relation, minimize_kl, pointwise_value_identity_residual, relative_entropy,
    solve_alpha_for_mean, verify_h_theorem, Direction, GibbsModel, OracleConfig,
    PowersetDistribution,
};
use format::{emit_dist, fmt_g17, parse_dist, parse_model, render_mask, DistMetadata, ModelFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

/// Oracle agreement bounds checked by the `oracle` subcommand: the descent
/// entropy must match the closed form within this, and the distributions
/// within this sup-norm.
pub const ORACLE_ENTROPY_TOLERANCE: f64 = 1e-6;
pub const ORACLE_SUP_TOLERANCE: f64 = 1e-4;

/// Environment variable overriding the `verify` thread count.
pub const VERIFY_THREADS_VAR: &str = "EVT_VERIFY_THREADS";

#[derive(Parser)]
#[command(
    name = "evt",
    version,
    about = "Powerset distributions, entropy-minimizing tilt families, and their certification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RateArgs {
    /// Gibbs rate β ≥ 0 (tilts mass toward low values).
    #[arg(long)]
    beta: Option<f64>,
    /// Anti-Gibbs rate γ ≥ 0 (tilts mass toward high values).
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Tilt a model's base distribution and write the result.
    Gibbs {
        /// Model file (events, values, base probabilities).
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        rate: RateArgs,
        /// Output distribution file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Find the tilt whose distribution has the given mean value.
    Solve {
        #[arg(long)]
        model: PathBuf,
        /// Mean value the tilted distribution must attain.
        #[arg(long = "target-mean")]
        target_mean: f64,
        /// Solver tolerance on the attained mean.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Optional output distribution file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative entropy of a distribution against a model's base.
    Entropy {
        /// Distribution file.
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Certify entropy minimality against randomized feasible competitors.
    Verify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "target-mean")]
        target_mean: f64,
        /// Number of competitor draws.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Cross-check the closed-form minimizer against an independent descent.
    Oracle {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "target-mean")]
        target_mean: f64,
        /// Duality-gap tolerance for the descent.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Iteration cap for the descent.
        #[arg(long, default_value_t = 50_000)]
        iters: usize,
    },
    /// Draw subsets from a distribution, one bitstring per line.
    Sample {
        #[arg(long)]
        dist: PathBuf,
        /// Number of draws.
        #[arg(short = 'n')]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file for the draws.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the per-subset and averaged value identities of a tilt.
    Identities {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        rate: RateArgs,
    },
}

/// Failures carry their exit code; diagnostics print to stderr on the way
/// out.
enum Failure {
    Invalid(String),
    Numeric(String),
}

impl Failure {
    fn report(self) -> i32 {
        match self {
            Failure::Invalid(msg) => {
                eprintln!("error: {msg}");
                EXIT_INVALID
            }
            Failure::Numeric(msg) => {
                eprintln!("error: {msg}");
                EXIT_NUMERIC
            }
        }
    }
}

/// Resample exhaustion is a numeric failure; everything else the library
/// rejects is bad input.
fn core_failure(err: evt_core::Error) -> Failure {
    match err {
        evt_core::Error::ResampleBudgetExhausted { .. } => Failure::Numeric(err.to_string()),
        _ => Failure::Invalid(err.to_string()),
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|err| Failure::Invalid(format!("{}: {err}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|err| Failure::Invalid(format!("{}: {err}", path.display())))
}

fn load_model(path: &Path) -> Result<ModelFile, Failure> {
    let text = read_file(path)?;
    parse_model(&text).map_err(|err| Failure::Invalid(format!("{}: {err}", path.display())))
}

fn load_dist(path: &Path) -> Result<PowersetDistribution, Failure> {
    let text = read_file(path)?;
    parse_dist(&text)
        .map(|file| file.dist)
        .map_err(|err| Failure::Invalid(format!("{}: {err}", path.display())))
}

fn signed_rate(rate: &RateArgs) -> Result<f64, Failure> {
    let alpha = match (rate.beta, rate.gamma) {
        (Some(beta), None) => Direction::Perception.signed_alpha(beta),
        (None, Some(gamma)) => Direction::Activity.signed_alpha(gamma),
        _ => {
            return Err(Failure::Invalid(
                "exactly one of --beta and --gamma is required".to_string(),
            ))
        }
    };
    alpha.map_err(core_failure)
}

fn finite(name: &str, x: f64) -> Result<f64, Failure> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Failure::Invalid(format!("--{name} must be finite")))
    }
}

fn positive(name: &str, x: f64) -> Result<f64, Failure> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Failure::Invalid(format!(
            "--{name} must be a positive finite number"
        )))
    }
}

/// Runs the tool on `argv` (program name first) and returns the exit code.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err)
            if matches!(
                err.kind(),
                ClapErrorKind::DisplayHelp
                    | ClapErrorKind::DisplayVersion
                    | ClapErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            print!("{err}");
            return EXIT_OK;
        }
        Err(err) => {
            eprint!("{err}");
            return EXIT_INVALID;
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(failure) => failure.report(),
    }
}

fn run(command: Command) -> Result<i32, Failure> {
    match command {
        Command::Gibbs { model, rate, out } => {
            let alpha = signed_rate(&rate)?;
            let file = load_model(&model)?;
            let tilt = GibbsModel::new(file.base, file.value, alpha).map_err(core_failure)?;
            let dist = tilt.distribution();
            let entropy = relative_entropy(&dist, tilt.base()).map_err(core_failure)?;
            let metadata = DistMetadata {
                alpha: tilt.alpha(),
                log_z: tilt.log_z(),
                entropy,
            };
            write_file(&out, &emit_dist(&dist, Some(&metadata)))?;
            print_tilt_summary(&tilt, entropy);
            Ok(EXIT_OK)
        }
        Command::Solve {
            model,
            target_mean,
            tol,
            out,
        } => {
            let target = finite("target-mean", target_mean)?;
            let tol = positive("tol", tol)?;
            let file = load_model(&model)?;
            let tilt =
                solve_alpha_for_mean(&file.base, &file.value, target, tol).map_err(core_failure)?;
            let dist = tilt.distribution();
            let entropy = relative_entropy(&dist, tilt.base()).map_err(core_failure)?;
            print_tilt_summary(&tilt, entropy);
            if let Some(out) = out {
                let metadata = DistMetadata {
                    alpha: tilt.alpha(),
                    log_z: tilt.log_z(),
                    entropy,
                };
                write_file(&out, &emit_dist(&dist, Some(&metadata)))?;
            }
            Ok(EXIT_OK)
        }
        Command::Entropy { dist, model } => {
            let q = load_dist(&dist)?;
            let file = load_model(&model)?;
            let entropy = relative_entropy(&q, &file.base).map_err(core_failure)?;
            println!("H={}", fmt_g17(entropy));
            Ok(EXIT_OK)
        }
        Command::Verify {
            model,
            target_mean,
            trials,
            seed,
        } => {
            let target = finite("target-mean", target_mean)?;
            if trials == 0 {
                return Err(Failure::Invalid("--trials must be at least 1".to_string()));
            }
            let file = load_model(&model)?;
            let report = run_verify(&file, target, trials, seed)?;
            println!("trials={}", report.trials);
            println!("gibbs_entropy={}", fmt_g17(report.gibbs_entropy));
            println!(
                "min_competitor_entropy={}",
                fmt_g17(report.min_competitor_entropy)
            );
            println!("worst_gap={}", fmt_g17(report.worst_gap));
            println!(
                "max_decomposition_residual={}",
                fmt_g17(report.max_decomposition_residual)
            );
            println!("passed={}", report.passed);
            if report.passed {
                Ok(EXIT_OK)
            } else {
                Err(Failure::Numeric(format!(
                    "certification failed: worst gap {}",
                    fmt_g17(report.worst_gap)
                )))
            }
        }
        Command::Oracle {
            model,
            target_mean,
            tol,
            iters,
        } => {
            let target = finite("target-mean", target_mean)?;
            let tol = positive("tol", tol)?;
            if iters == 0 {
                return Err(Failure::Invalid("--iters must be at least 1".to_string()));
            }
            let file = load_model(&model)?;

            let closed = solve_alpha_for_mean(&file.base, &file.value, target, 1e-12)
                .map_err(core_failure)?
                .distribution();
            let closed_entropy = relative_entropy(&closed, &file.base).map_err(core_failure)?;
            let config = OracleConfig {
                max_iters: iters,
                tol,
                seed: 0,
            };
            let solution =
                minimize_kl(&file.base, &file.value, target, &config).map_err(core_failure)?;
            let sup_diff = solution
                .distribution
                .probs()
                .iter()
                .zip(closed.probs())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            let entropy_diff = solution.entropy - closed_entropy;
            let agrees = solution.converged
                && entropy_diff.abs() <= ORACLE_ENTROPY_TOLERANCE
                && sup_diff <= ORACLE_SUP_TOLERANCE;

            println!("closed_form_entropy={}", fmt_g17(closed_entropy));
            println!("descent_entropy={}", fmt_g17(solution.entropy));
            println!("entropy_diff={}", fmt_g17(entropy_diff));
            println!("sup_diff={}", fmt_g17(sup_diff));
            println!("iterations={}", solution.iterations);
            println!("duality_gap={}", fmt_g17(solution.duality_gap));
            println!("converged={}", solution.converged);
            println!("agrees={agrees}");
            if agrees {
                Ok(EXIT_OK)
            } else if solution.converged {
                Err(Failure::Numeric(format!(
                    "descent and closed form disagree: entropy diff {}, sup diff {}",
                    fmt_g17(entropy_diff),
                    fmt_g17(sup_diff)
                )))
            } else {
                Err(Failure::Numeric(format!(
                    "descent did not converge: duality gap {} after {} iterations",
                    fmt_g17(solution.duality_gap),
                    solution.iterations
                )))
            }
        }
        Command::Sample { dist, n, seed, out } => {
            let q = load_dist(&dist)?;
            let batch = evt_core::sample(&q, n, seed);
            let event_count = q.events().len();
            let mut text = String::with_capacity(n * (event_count + 1));
            for draw in batch.draws() {
                text.push_str(&render_mask(*draw, event_count));
                text.push('\n');
            }
            write_file(&out, &text)?;
            Ok(EXIT_OK)
        }
        Command::Identities { model, rate } => {
            let alpha = signed_rate(&rate)?;
            let file = load_model(&model)?;
            let tilt = GibbsModel::new(file.base, file.value, alpha).map_err(core_failure)?;
            let mut max_residual = 0.0f64;
            for mask in tilt.base().support() {
                let residual =
                    pointwise_value_identity_residual(&tilt, mask).map_err(core_failure)?;
                max_residual = max_residual.max(residual.abs());
            }
            let relation = mean_entropy_relation(&tilt).map_err(core_failure)?;
            let mean_residual = (relation.reconstructed_mean - relation.mean).abs();
            println!("max_pointwise_residual={}", fmt_g17(max_residual));
            println!("mean_relation_residual={}", fmt_g17(mean_residual));
            Ok(EXIT_OK)
        }
    }
}

fn print_tilt_summary(tilt: &GibbsModel, entropy: f64) {
    println!("alpha={}", fmt_g17(tilt.alpha()));
    let (direction, rate) = Direction::from_alpha(tilt.alpha());
    match direction {
        Direction::Perception => println!("beta={}", fmt_g17(rate)),
        Direction::Activity => println!("gamma={}", fmt_g17(rate)),
    }
    println!("logZ={}", fmt_g17(tilt.log_z()));
    println!("H={}", fmt_g17(entropy));
}

/// Runs certification, honoring the thread-count override variable.
fn run_verify(
    file: &ModelFile,
    target: f64,
    trials: usize,
    seed: u64,
) -> Result<evt_core::VerificationReport, Failure> {
    let verify = || verify_h_theorem(&file.base, &file.value, target, trials, seed);
    match std::env::var(VERIFY_THREADS_VAR) {
        Err(std::env::VarError::NotPresent) => verify().map_err(core_failure),
        Err(err) => Err(Failure::Invalid(format!("{VERIFY_THREADS_VAR}: {err}"))),
        Ok(raw) => {
            let threads: usize = raw.parse().ok().filter(|&k| k >= 1).ok_or_else(|| {
                Failure::Invalid(format!(
                    "{VERIFY_THREADS_VAR} must be a positive integer, got `{raw}`"
                ))
            })?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|err| Failure::Invalid(format!("{VERIFY_THREADS_VAR}: {err}")))?;
            pool.install(|| verify().map_err(core_failure))
        }
    }
}
