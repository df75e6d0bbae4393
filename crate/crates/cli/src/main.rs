use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use qsa_core::asymptotics::scaled_limit_for;
use qsa_core::closed_form::{fit, guess_moment, template, FitReport};
use qsa_core::distribution::{density_csv, export_density, tail_probability};
use qsa_core::moments::{
    central_from_factorial, central_moment, factorial_series, moment_data, moment_table,
    moments_from_factorial, raw_moment,
};
use qsa_core::numeric::{format_decimal, to_float, RationalRepr};
use qsa_core::simulator::{
    exhaustive_distribution, monte_carlo, selection_sort_count, shuffled_keys, SimConfig,
};
use qsa_core::{pgf, Error, Float, Rational};

#[derive(Parser)]
#[command(
    name = "qsa",
    version,
    about = "Exact comparison-count analysis of randomized Quicksort"
)]
struct Cli {
    /// Output format, where the command defines both
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output to FILE instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Exact distribution of the comparison count X_n
    Pgf {
        #[arg(long)]
        n: u64,
        /// Refuse larger n (the tables grow roughly like n^3 log n bits)
        #[arg(long, env = "QSA_NMAX", default_value_t = 130)]
        nmax: u64,
    },
    /// One exact moment of X_n
    Moment {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        r: u32,
        /// Moment about the mean instead of about zero
        #[arg(long)]
        central: bool,
        /// Use the truncated-series route even when n <= nmax
        #[arg(long)]
        series: bool,
        /// Largest n computed from the full distribution
        #[arg(long, env = "QSA_NMAX", default_value_t = 130)]
        nmax: u64,
        /// Truncation order of the series route
        #[arg(long, env = "QSA_ORDER", default_value_t = 10)]
        order: u32,
    },
    /// Moments for n = 1..nmax, one row per (n, r)
    MomentsTable {
        /// Moment order R or range A..B
        #[arg(long, value_parser = parse_range)]
        r: RangeInclusive<u64>,
        #[arg(long, env = "QSA_NMAX", default_value_t = 130)]
        nmax: u64,
        /// Moments about zero instead of about the mean
        #[arg(long)]
        raw: bool,
    },
    /// Guess a closed form in n and harmonic numbers for a moment
    Guess {
        /// 1 for the mean, r >= 2 for the r-th central moment
        #[arg(long)]
        r: u32,
        /// Last n of moment data (default: enough for the largest template)
        #[arg(long)]
        nmax: Option<u64>,
        #[arg(long, value_parser = parse_range, requires = "test")]
        train: Option<RangeInclusive<u64>>,
        #[arg(long, value_parser = parse_range, requires = "train")]
        test: Option<RangeInclusive<u64>>,
    },
    /// Limits of the scaled central moments m_r / m_2^{r/2}
    Limits {
        /// Order R or range A..B
        #[arg(long, value_parser = parse_range)]
        r: RangeInclusive<u64>,
        /// Decimal digits
        #[arg(long, env = "QSA_PRECISION", default_value_t = 50)]
        precision: u32,
    },
    /// Histogram of the standardized count Z_n
    Density {
        #[arg(long, default_value_t = 130)]
        n: u64,
        #[arg(long, default_value = "0.1")]
        bin: String,
    },
    /// Estimate Pr(X_n > x) from a smaller exact distribution
    Tail {
        #[arg(long)]
        n: u64,
        /// Threshold, an integer or fraction p/q
        #[arg(long)]
        x: String,
        #[arg(long, env = "QSA_SURROGATE", default_value_t = 130)]
        surrogate: u64,
    },
    /// Monte Carlo statistics of the comparison count
    Simulate {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Exact distribution by enumerating every pivot choice (n <= 12)
    Oracle {
        #[arg(long)]
        n: u64,
    },
    /// Comparisons made by selection sort on random inputs
    SelectionCount {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::OracleTooLarge { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Compute(e.to_string()),
        }
    }
}

fn parse_range(s: &str) -> Result<RangeInclusive<u64>, String> {
    let bad = || format!("expected N or A..B, got {s:?}");
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b),
        None => (s, s),
    };
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(format!("empty range {s:?}"));
    }
    Ok(a..=b)
}

fn u32_of(v: u64) -> Result<u32, Failure> {
    u32::try_from(v).map_err(|_| Failure::Usage(format!("{v} is too large")))
}

fn rational_json(q: &Rational) -> serde_json::Value {
    json!(RationalRepr::from(q))
}

fn distribution_csv(rows: impl Iterator<Item = (u64, Rational)>) -> String {
    let mut out = String::from("k,num,den\n");
    for (k, p) in rows {
        let _ = writeln!(out, "{k},{},{}", p.numer(), p.denom());
    }
    out
}

fn run(cli: Cli) -> Result<String, Failure> {
    let fmt = |default: Format| cli.format.unwrap_or(default);
    let json_only = |what: &str| -> Result<(), Failure> {
        match cli.format {
            Some(Format::Csv) => Err(Failure::Usage(format!("{what} has no CSV form"))),
            _ => Ok(()),
        }
    };
    Ok(match cli.command {
        Command::Pgf { n, nmax } => {
            if n > nmax {
                return Err(Failure::Usage(format!("n = {n} exceeds nmax = {nmax}")));
            }
            let g = pgf(n);
            match fmt(Format::Json) {
                Format::Json => g.to_json() + "\n",
                Format::Csv => distribution_csv(g.coefficients()),
            }
        }
        Command::Moment {
            n,
            r,
            central,
            series,
            nmax,
            order,
        } => {
            let value = if series || n > nmax {
                let order = order.max(r).max(1);
                let s = factorial_series(n, order)?.pop().expect("series to n");
                if central {
                    central_from_factorial(&s, r)?
                } else {
                    moments_from_factorial(&s, r)?
                }
            } else if central {
                if r == 0 {
                    return Err(Failure::Usage("central moments start at r = 1".into()));
                }
                central_moment(n, r)
            } else {
                raw_moment(n, r)
            };
            match fmt(Format::Json) {
                Format::Json => {
                    json!({"n": n, "r": r, "central": central, "value": rational_json(&value)})
                        .to_string()
                        + "\n"
                }
                Format::Csv => {
                    format!("n,r,num,den\n{n},{r},{},{}\n", value.numer(), value.denom())
                }
            }
        }
        Command::MomentsTable { r, nmax, raw } => {
            let mut tables = Vec::new();
            for r in r {
                let r = u32_of(r)?;
                if r == 0 {
                    return Err(Failure::Usage("moment orders start at 1".into()));
                }
                tables.push(moment_table(r, nmax, !raw)?);
            }
            match fmt(Format::Csv) {
                Format::Csv => {
                    let mut out = String::from("n,r,num,den\n");
                    for t in &tables {
                        out.push_str(&t.to_csv());
                    }
                    out
                }
                Format::Json => {
                    let rows: Vec<_> = tables
                        .iter()
                        .flat_map(|t| {
                            t.values.iter().map(move |(n, v)| {
                                json!({"n": n, "r": t.r, "num": v.numer().to_string(), "den": v.denom().to_string()})
                            })
                        })
                        .collect();
                    serde_json::Value::from(rows).to_string() + "\n"
                }
            }
        }
        Command::Guess {
            r,
            nmax,
            train,
            test,
        } => {
            json_only("guess")?;
            let report = match (train, test) {
                (Some(train), Some(test)) => guess_on(r, train, test)?,
                _ => guess_moment(r, nmax)?,
            };
            if !report.is_verified() {
                return Err(Failure::Compute(format!(
                    "no verified closed form: {}",
                    report.to_json()
                )));
            }
            report.to_json() + "\n"
        }
        Command::Limits { r, precision } => {
            json_only("limits")?;
            let mut out = String::new();
            for r in r {
                let r = u32_of(r)?;
                let v = scaled_limit_for(r, precision)?;
                let line = json!({
                    "r": r,
                    "value": v.value.to_decimal_string(),
                    "stable_digits": v.stability,
                });
                out.push_str(&line.to_string());
                out.push('\n');
            }
            out
        }
        Command::Density { n, bin } => {
            let width = Float::parse(&bin)
                .map(|w| Float::with_val(256, w))
                .map_err(|_| Failure::Usage(format!("bad bin width {bin:?}")))?;
            let bins = export_density(n, &width)?;
            match fmt(Format::Csv) {
                Format::Csv => density_csv(&bins),
                Format::Json => {
                    let rows: Vec<_> = bins
                        .iter()
                        .map(|b| {
                            json!({
                                "z_left": format_decimal(&b.z_left, 12),
                                "z_right": format_decimal(&b.z_right, 12),
                                "mass": rational_json(&b.mass),
                                "mass_decimal": format_decimal(&to_float(&b.mass, 128), 20),
                            })
                        })
                        .collect();
                    serde_json::Value::from(rows).to_string() + "\n"
                }
            }
        }
        Command::Tail { n, x, surrogate } => {
            json_only("tail")?;
            let threshold: Rational = x
                .parse()
                .map_err(|_| Failure::Usage(format!("bad threshold {x:?}")))?;
            let est = tail_probability(n, &threshold, surrogate)?;
            serde_json::to_string(&est).expect("serializable") + "\n"
        }
        Command::Simulate { n, trials, seed } => {
            json_only("simulate")?;
            let stats = monte_carlo(&SimConfig { n, trials, seed })?;
            serde_json::to_string(&stats).expect("serializable") + "\n"
        }
        Command::Oracle { n } => {
            let dist = exhaustive_distribution(n)?;
            match fmt(Format::Csv) {
                Format::Csv => distribution_csv(dist.into_iter()),
                Format::Json => {
                    let coeffs: Vec<_> = dist
                        .iter()
                        .map(|(k, p)| json!([k, p.numer().to_string(), p.denom().to_string()]))
                        .collect();
                    // keep "n" first, as in the pgf export
                    format!(
                        "{{\"n\":{n},\"coeffs\":{}}}\n",
                        serde_json::Value::from(coeffs)
                    )
                }
            }
        }
        Command::SelectionCount { n, trials, seed } => {
            json_only("selection-count")?;
            let mut counts = Vec::new();
            for (i, mut keys) in shuffled_keys(n, trials, seed).enumerate() {
                let c = selection_sort_count(&mut keys);
                if !keys.windows(2).all(|w| w[0] <= w[1]) {
                    return Err(Failure::Compute(format!(
                        "trial {i} left the input unsorted"
                    )));
                }
                counts.push(c);
            }
            counts.dedup();
            if counts.len() != 1 {
                return Err(Failure::Compute(format!(
                    "comparison count varied: {counts:?}"
                )));
            }
            json!({"n": n, "trials": trials, "seed": seed, "comparisons": counts[0]}).to_string()
                + "\n"
        }
    })
}

/// Escalating fit on caller-chosen train/test ranges.
fn guess_on(
    r: u32,
    train: RangeInclusive<u64>,
    test: RangeInclusive<u64>,
) -> Result<FitReport, Failure> {
    let n_max = *train.end().max(test.end());
    let data = moment_data(r, n_max)?;
    let points = train.end() - train.start() + 1;
    let mut last = None;
    for d in 1..=r {
        let monomials = template(r, d, d);
        if monomials.len() as u64 > points {
            break;
        }
        let report = fit(&data, &monomials, train.clone(), test.clone())?;
        if report.is_verified() {
            return Ok(report);
        }
        last = Some(report);
    }
    last.ok_or_else(|| {
        Failure::Usage(format!(
            "training range has {points} points, fewer than the smallest template for r = {r}"
        ))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    match run(cli) {
        Ok(text) => {
            let written = match &out {
                Some(path) => std::fs::write(path, text),
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(text.as_bytes())
                }
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: cannot write output: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
