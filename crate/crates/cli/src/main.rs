use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use addlab::afspec::AdditiveFunctionSpec;
use addlab::euler::{
    l_partial, mean_value_predict, reconstruct_from_zeros, verify_power_obstruction, zero_set, EulerVariant,
    MeanValueConfig, ZeroLattice,
};
use addlab::kac::{kac_tail_exact_integer, kac_tail_mc, MonteCarloConfig, Sampler};
use addlab::ldp::{compare_specs, CompareConfig, Horizon, Method, Predictor, PredictorConfig};
use addlab::numeric::parse_grid;
use addlab::primedist::{empirical_prime_distribution, verify_class_c};
use addlab::report::{build_comparison, parse_count, parse_ratio, resolve_function, RunConfig};
use addlab::series::{exponent_series, CramerSeries};
use addlab::sieve::{empirical_tail, sieve_values, SieveConfig};
use addlab::special::gamma_self_test;
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "addlab", version, about = "Large deviations of strongly additive functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sieve f(n) for n <= x and print the standardized tail frequencies.
    Sieve {
        #[arg(long)]
        function: String,
        #[arg(long, value_parser = count)]
        x: u64,
        #[arg(long, value_parser = grid)]
        deltas: Grid,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = count)]
        segment_size: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Empirical distribution of f(p) over primes p <= prime-limit.
    PrimesDist {
        #[arg(long)]
        function: String,
        #[arg(long, value_parser = count)]
        prime_limit: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also report KS distances to the declared limit on a log grid up to prime-limit.
        #[arg(long)]
        ks: bool,
    },
    /// Cramér coefficients u_m and the exponent-series cross-check.
    Cramer {
        #[arg(long)]
        function: String,
        /// Inclusive range `a..b`.
        #[arg(long, default_value = "3..8", value_parser = order_range)]
        orders: (usize, usize),
        /// Series truncation order.
        #[arg(long, default_value_t = addlab::series::DEFAULT_ORDER)]
        order: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tail predictions for f at horizon x.
    Predict {
        #[arg(long)]
        function: String,
        #[arg(long, value_parser = count)]
        x: u64,
        #[arg(long, default_value = "theorem5")]
        method: Method,
        #[arg(long, value_parser = grid)]
        deltas: Grid,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        series_order: Option<usize>,
        #[arg(long)]
        cramer_window: Option<f64>,
        #[arg(long)]
        saddle_floor: Option<f64>,
    },
    /// Classify how closely f and g are distributed; writes a JSON verdict.
    Compare {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        #[arg(long, value_parser = count)]
        x: u64,
        #[arg(long, default_value = "1/2")]
        alpha: String,
        #[arg(long, value_parser = grid, default_value = "0:4:0.5")]
        deltas: Grid,
        #[arg(long, value_parser = count)]
        prime_limit: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Partial Euler product, optionally with the mean-value prediction at x.
    Lfun {
        #[arg(long)]
        function: String,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, value_parser = count, default_value = "1000000")]
        prime_limit: u64,
        #[arg(long, default_value = "corrected")]
        variant: EulerVariant,
        /// Also predict the sum of exp(s f(n)) over n <= x.
        #[arg(long, value_parser = count)]
        x: Option<u64>,
    },
    /// Zeros of the Euler factors, reconstruction, and the power obstruction check.
    Zeros {
        #[arg(long)]
        function: Option<String>,
        #[arg(long, value_parser = count, default_value = "50")]
        prime_limit: u64,
        #[arg(long, default_value_t = 3)]
        k: u64,
        /// Read a `re,im` zero list instead of generating one.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Recover `p,value` pairs from the zeros.
        #[arg(long)]
        reconstruct: bool,
        /// Search for power relations among p - 1 with odd exponents up to this bound.
        #[arg(long)]
        obstruction: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tail of the independent-primes model.
    Kac {
        #[arg(long)]
        function: String,
        #[arg(long, value_parser = count)]
        x: u64,
        #[arg(long, value_enum, default_value_t = KacMode::Exact)]
        mode: KacMode,
        #[arg(long, value_parser = grid)]
        deltas: Grid,
        #[arg(long, value_parser = count, default_value = "1000000")]
        samples: u64,
        #[arg(long, value_parser = count, default_value = "42")]
        seed: u64,
        #[arg(long)]
        per_prime: bool,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full comparison table driven by a key=value config file.
    Report {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KacMode {
    Exact,
    Mc,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone)]
struct Grid(Vec<f64>);

fn count(text: &str) -> Result<u64, String> {
    parse_count(text).map_err(|e| e.to_string())
}

fn grid(text: &str) -> Result<Grid, String> {
    parse_grid(text).map(Grid).map_err(|e| e.to_string())
}

fn order_range(text: &str) -> Result<(usize, usize), String> {
    let (a, b) = text.split_once("..").ok_or_else(|| format!("expected a..b, got '{text}'"))?;
    let a = a.trim().parse().map_err(|_| format!("bad start in '{text}'"))?;
    let b = b.trim().trim_start_matches('=').parse().map_err(|_| format!("bad end in '{text}'"))?;
    if a > b {
        return Err(format!("empty range '{text}'"));
    }
    Ok((a, b))
}

fn function(text: &str) -> Result<AdditiveFunctionSpec> {
    resolve_function(text, None).with_context(|| format!("resolving function '{text}'"))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    gamma_self_test().context("gamma self-test")?;
    let cli = Cli::parse();
    match cli.command {
        Command::Sieve { function: f, x, deltas, out, segment_size, threads } => {
            let spec = function(&f)?;
            let mut cfg = SieveConfig { threads, ..SieveConfig::default() };
            if let Some(size) = segment_size {
                cfg.segment_size = size as usize;
            }
            let result = sieve_values(&spec, x, &cfg)?;
            eprintln!("mu={} sigma2={}", result.mu(), result.sigma2());
            emit(out.as_deref(), &empirical_tail(&result, &deltas.0)?.to_csv())
        }
        Command::PrimesDist { function: f, prime_limit, out, ks } => {
            let spec = function(&f)?;
            let cdf = empirical_prime_distribution(&spec, prime_limit)?;
            if ks {
                let grid: Vec<u64> = addlab::numeric::log_grid(100.0, prime_limit.max(100) as f64, 8)
                    .into_iter()
                    .map(|p| p.round() as u64)
                    .collect();
                let report = verify_class_c(&spec, &grid)?;
                for point in &report.ks {
                    eprintln!("P={} pi(P)={} ks={}", point.prime_limit, point.prime_count, point.ks);
                }
                if let Some(slope) = report.decay_slope {
                    eprintln!("slope of ln KS against ln ln P: {slope}");
                }
            }
            emit(out.as_deref(), &cdf.to_csv())
        }
        Command::Cramer { function: f, orders: (lo, hi), order, out } => {
            let spec = function(&f)?;
            let psi = spec.require_limit()?;
            let series = CramerSeries::new(psi, order)?;
            let exponent = exponent_series(psi, order)?;
            let mut csv = String::from("m,u,q\n");
            for m in lo.max(3)..=hi {
                if m > series.max_index() {
                    bail!("u_{m} needs a series order of at least {}", m + 2);
                }
                csv.push_str(&format!("{m},{},{}\n", series.u(m), exponent.coeff(m)));
            }
            emit(out.as_deref(), &csv)
        }
        Command::Predict { function: f, x, method, deltas, out, series_order, cramer_window, saddle_floor } => {
            let spec = function(&f)?;
            let mut config = PredictorConfig::default();
            if let Some(n) = series_order {
                config.series_order = n;
            }
            if let Some(w) = cramer_window {
                config.cramer_window = w;
            }
            if let Some(floor) = saddle_floor {
                config.saddle_floor = floor;
            }
            let mut predictor = Predictor::for_spec(&spec, Horizon::from_x(x as f64)?, config)?;
            emit(out.as_deref(), &predictor.report(method, &deltas.0)?.to_csv())
        }
        Command::Compare { f, g, x, alpha, deltas, prime_limit, out } => {
            let (f, g) = (function(&f)?, function(&g)?);
            let mut config = CompareConfig::default();
            if let Some(p) = prime_limit {
                config.prime_limit = p;
            }
            let verdict = compare_specs(&f, &g, x, &deltas.0, parse_ratio(&alpha)?, &config)?;
            emit(out.as_deref(), &(serde_json::to_string_pretty(&verdict)? + "\n"))
        }
        Command::Lfun { function: f, s, prime_limit, variant, x } => {
            let spec = function(&f)?;
            let product = l_partial(&spec, s, prime_limit, variant)?;
            let mut csv = String::from("s,prime_limit,variant,log_value,value");
            let mut row = format!("{},{},{},{},{}", product.s, prime_limit, variant, product.log_value, product.value);
            if let Some(x) = x {
                let cfg = MeanValueConfig { variant, prime_limit, ..MeanValueConfig::default() };
                csv.push_str(",x,mean_value");
                row.push_str(&format!(",{x},{}", mean_value_predict(&spec, s, x as f64, &cfg)?));
            }
            emit(None, &format!("{csv}\n{row}\n"))
        }
        Command::Zeros { function: f, prime_limit, k, input, reconstruct, obstruction, out } => {
            if let Some(odd_max) = obstruction {
                let report = verify_power_obstruction(prime_limit, odd_max)?;
                return emit(out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"));
            }
            let lattice = match (&input, &f) {
                (Some(path), _) => ZeroLattice::parse_csv(
                    &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
                )?,
                (None, Some(f)) => zero_set(&function(f)?, prime_limit, k),
                (None, None) => bail!("either --function or --input is required"),
            };
            if reconstruct {
                let mut csv = String::from("p,value\n");
                for (p, v) in reconstruct_from_zeros(&lattice)? {
                    csv.push_str(&format!("{p},{v}\n"));
                }
                emit(out.as_deref(), &csv)
            } else {
                emit(out.as_deref(), &lattice.to_csv())
            }
        }
        Command::Kac { function: f, x, mode, deltas, samples, seed, per_prime, threads, out } => {
            let spec = function(&f)?;
            let table = match mode {
                KacMode::Exact => {
                    let exact = kac_tail_exact_integer(&spec, x, &deltas.0)?;
                    eprintln!(
                        "mu={} sigma2={} dropped_mass={:e}",
                        exact.moments.mu, exact.moments.sigma2, exact.dropped_mass
                    );
                    exact.table
                }
                KacMode::Mc => {
                    let mut cfg = MonteCarloConfig::new(samples, seed);
                    cfg.threads = threads;
                    if per_prime {
                        cfg.sampler = Sampler::PerPrime;
                    }
                    kac_tail_mc(&spec, x, &deltas.0, &cfg)?
                }
            };
            let csv = match &table.standard_errors {
                None => table.to_csv(),
                Some(errors) => {
                    let mut csv = String::from("delta,empirical,standard_error\n");
                    for ((d, e), s) in table.deltas.iter().zip(&table.empirical).zip(errors) {
                        csv.push_str(&format!("{d},{e},{s}\n"));
                    }
                    csv
                }
            };
            emit(out.as_deref(), &csv)
        }
        Command::Report { config, out, format } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let run = RunConfig::parse(&text)?;
            let base = config.parent().filter(|p| !p.as_os_str().is_empty());
            let report = build_comparison(&run.to_request(base)?)?;
            let target = out.or_else(|| {
                run.out.as_ref().map(|o| match base {
                    Some(dir) if Path::new(o).is_relative() => dir.join(o),
                    _ => PathBuf::from(o),
                })
            });
            let json = match format {
                Some(fmt) => fmt == Format::Json,
                None => target.as_ref().and_then(|t| t.extension()).is_some_and(|e| e == "json"),
            };
            let body = if json { report.to_json()? + "\n" } else { report.to_csv() };
            emit(target.as_deref(), &body)
        }
    }
}
