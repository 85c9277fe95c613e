use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use pfcycles::completions::{
    completions_count, completions_count_block, completions_count_bruteforce, OccupiedVector,
};
use pfcycles::distributions::{
    empirical_joint_distribution, exact_joint_distribution, tv_distance_to_poisson,
};
use pfcycles::exact_math::{format_rational, serde_bigint, serde_rational, to_f64};
use pfcycles::moments::{
    enumerated_moments, expected_k_cycles_exact, expected_k_cycles_mc, harmonic, total_cycles_stats,
};
use pfcycles::parking::{
    count_parking_functions, enumerate_parking_functions, is_parking_function, sample_into,
    CircleScratch,
};
use pfcycles::sampling::{run_sharded, DEFAULT_WORKERS};
use pfcycles::stein::{stein_terms, tv_upper_bound, BCoefficient, SteinMode};
use pfcycles::structure::cycle_profile;
use pfcycles::{Error, ExactRational, PrefSeq, SeedPlan};

#[derive(Parser, Debug)]
#[command(
    name = "pfcycles",
    version,
    about = "Cycle statistics of random parking functions"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Output format; `enumerate` and `sample` default to one sequence per line.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sampling and enumeration (does not affect results).
    #[arg(long, global = true, default_value_t = DEFAULT_WORKERS)]
    workers: usize,
    /// Seed for Monte Carlo commands.
    #[arg(long, global = true, env = "PFCYCLES_SEED")]
    seed: Option<u64>,
    /// Lift the size guards on exhaustive computations.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Number of parking functions of length n.
    Count {
        #[arg(long)]
        n: usize,
    },
    /// List all parking functions of length n in lexicographic order.
    Enumerate {
        #[arg(long)]
        n: usize,
    },
    /// Test whether a comma-separated sequence is a parking function.
    Check { seq: String },
    /// Count parking completions of occupied spots v.
    Completions {
        #[arg(long)]
        n: usize,
        /// Occupied spots, comma-separated and strictly increasing.
        #[arg(long)]
        v: String,
        #[arg(long, value_enum, default_value_t = CompletionMethod::Formula)]
        method: CompletionMethod,
    },
    /// Cycle counts of a sequence viewed as a map [n] -> [n].
    Profile { seq: String },
    /// Draw uniform parking functions.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        samples: u64,
    },
    /// Means of the k-cycle counts.
    Moments {
        #[arg(long)]
        n: usize,
        /// Only this k (default: every k, capped at 10 for mc).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum)]
        method: MomentMethod,
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Stein approximation terms and their explicit bounds.
    Stein {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        mode: ModeArgs,
        /// Constant in the lowering-event term: n/(3k) or n/(4k).
        #[arg(long, value_enum, default_value_t = CbArg::Third)]
        cb: CbArg,
    },
    /// Total variation distance between (C_1..C_d) and independent Poisson(1/k).
    Tv {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        mode: ModeArgs,
        /// Also write the joint law as CSV (count vector, mass) to this file.
        #[arg(long)]
        dist_out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ModeArgs {
    /// Exhaustive enumeration.
    #[arg(long, conflicts_with = "samples")]
    exact: bool,
    /// Monte Carlo sample count (requires a seed).
    #[arg(long)]
    samples: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum CompletionMethod {
    Formula,
    Block,
    Brute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MomentMethod {
    Enum,
    Formula,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CbArg {
    Third,
    Quarter,
}

#[derive(Serialize, Deserialize)]
struct CountReport {
    n: usize,
    #[serde(with = "serde_bigint")]
    count: BigUint,
}

#[derive(Serialize, Deserialize)]
struct CheckReport {
    is_parking_function: bool,
}

#[derive(Serialize, Deserialize)]
struct CompletionsReport {
    n: usize,
    v: Vec<u32>,
    method: CompletionMethod,
    #[serde(with = "serde_bigint")]
    count: BigUint,
}

#[derive(Serialize, Deserialize)]
struct ProfileReport {
    n: usize,
    counts: BTreeMap<usize, u32>,
    total: u32,
}

#[derive(Serialize, Deserialize)]
struct SampleReport {
    n: usize,
    seed: u64,
    samples: Vec<PrefSeq>,
}

/// One row of the moments table. `k` is `total` for the cycle count `K_n`.
#[derive(Serialize, Deserialize)]
struct MomentRow {
    n: usize,
    k: String,
    method: String,
    value: String,
    approx: f64,
    stderr: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct TvReport {
    n: usize,
    d: usize,
    tv: f64,
    #[serde(with = "serde_rational")]
    bound: ExactRational,
    bound_approx: f64,
    method: String,
    samples: Option<u64>,
    seed: Option<u64>,
}

enum Output {
    Json(String),
    Csv(String),
}

struct Failure {
    kind: &'static str,
    message: String,
    code: u8,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) => 2,
            Error::GuardExceeded { .. } => 3,
            Error::Consistency(_) => 4,
        };
        Failure {
            kind: e.kind(),
            message: e.to_string(),
            code,
        }
    }
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            kind: "invalid_argument",
            message: message.into(),
            code: 2,
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Failure {
            kind: "io",
            message: message.into(),
            code: 1,
        }
    }
}

type Outcome = std::result::Result<Output, Failure>;

fn json<T: Serialize>(value: &T) -> Output {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    Output::Json(s)
}

fn method_name(m: CompletionMethod) -> &'static str {
    match m {
        CompletionMethod::Formula => "formula",
        CompletionMethod::Block => "block",
        CompletionMethod::Brute => "brute",
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn parse_list(text: &str) -> std::result::Result<Vec<u32>, Failure> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|e| Failure::usage(format!("bad entry {t:?} in {text:?}: {e}")))
        })
        .collect()
}

fn parse_seq(text: &str) -> std::result::Result<PrefSeq, Failure> {
    text.parse::<PrefSeq>().map_err(Failure::from)
}

fn require_seed(global: &Global) -> std::result::Result<SeedPlan, Failure> {
    let seed = global
        .seed
        .ok_or_else(|| Failure::usage("--samples needs --seed (or PFCYCLES_SEED)"))?;
    Ok(SeedPlan::new(seed, global.workers))
}

fn sequences_csv<'a>(seqs: impl Iterator<Item = &'a PrefSeq>) -> String {
    let mut out = String::new();
    for s in seqs {
        out.push_str(&s.to_string());
        out.push('\n');
    }
    out
}

fn run(cli: &Cli) -> Outcome {
    let g = &cli.global;
    let format = g.format;
    match &cli.command {
        Command::Count { n } => {
            let report = CountReport {
                n: *n,
                count: count_parking_functions(*n)?,
            };
            Ok(match format {
                Some(Format::Csv) => {
                    Output::Csv(format!("n,count\n{},{}\n", report.n, report.count))
                }
                _ => json(&report),
            })
        }
        Command::Enumerate { n } => {
            let all: Vec<PrefSeq> = enumerate_parking_functions(*n, g.force)?.collect();
            Ok(match format {
                Some(Format::Json) => json(&all),
                _ => Output::Csv(sequences_csv(all.iter())),
            })
        }
        Command::Check { seq } => {
            let report = CheckReport {
                is_parking_function: is_parking_function(&parse_seq(seq)?),
            };
            Ok(match format {
                Some(Format::Csv) => Output::Csv(format!(
                    "is_parking_function\n{}\n",
                    report.is_parking_function
                )),
                _ => json(&report),
            })
        }
        Command::Completions { n, v, method } => {
            let spots = parse_list(v)?;
            let occ = OccupiedVector::new(*n, spots.clone())?;
            let count = match method {
                CompletionMethod::Formula => completions_count(&occ),
                CompletionMethod::Brute => completions_count_bruteforce(&occ, g.force)?,
                CompletionMethod::Block => {
                    let first = spots[0] as usize;
                    let contiguous = spots.windows(2).all(|w| w[1] == w[0] + 1);
                    if !contiguous {
                        return Err(Failure::usage("block method needs contiguous spots"));
                    }
                    completions_count_block(*n, first - 1, spots.len())?
                }
            };
            let report = CompletionsReport {
                n: *n,
                v: spots,
                method: *method,
                count,
            };
            Ok(match format {
                Some(Format::Csv) => Output::Csv(format!(
                    "n,v,method,count\n{},{},{},{}\n",
                    report.n,
                    csv_field(v),
                    method_name(report.method),
                    report.count
                )),
                _ => json(&report),
            })
        }
        Command::Profile { seq } => {
            let p = cycle_profile(&parse_seq(seq)?);
            let counts: BTreeMap<usize, u32> = (1..=p.n)
                .filter(|&k| p.count(k) > 0)
                .map(|k| (k, p.count(k)))
                .collect();
            let report = ProfileReport {
                n: p.n,
                counts,
                total: p.total,
            };
            Ok(match format {
                Some(Format::Csv) => {
                    let mut s = String::from("k,count\n");
                    for (k, c) in &report.counts {
                        s.push_str(&format!("{k},{c}\n"));
                    }
                    Output::Csv(s)
                }
                _ => json(&report),
            })
        }
        Command::Sample { n, samples } => {
            if *n == 0 {
                return Err(Failure::usage("n must be at least 1"));
            }
            let plan = require_seed(g)?;
            let n = *n;
            let seqs = run_sharded(
                *samples,
                plan,
                |rng, count| {
                    let mut scratch = CircleScratch::default();
                    let mut buf = Vec::with_capacity(n);
                    (0..count)
                        .map(|_| {
                            sample_into(n, rng, &mut buf, &mut scratch);
                            PrefSeq::new(buf.clone()).expect("sampler output is in range")
                        })
                        .collect::<Vec<_>>()
                },
                |mut a, b| {
                    a.extend(b);
                    a
                },
            );
            Ok(match format {
                Some(Format::Json) => json(&SampleReport {
                    n,
                    seed: plan.seed,
                    samples: seqs,
                }),
                _ => Output::Csv(sequences_csv(seqs.iter())),
            })
        }
        Command::Moments {
            n,
            k,
            method,
            samples,
        } => {
            let rows = moment_rows(g, *n, *k, *method, *samples)?;
            Ok(match format {
                Some(Format::Csv) => {
                    let mut s = String::from("n,k,method,value,approx,stderr\n");
                    for r in &rows {
                        let stderr = r.stderr.map(|e| e.to_string()).unwrap_or_default();
                        s.push_str(&format!(
                            "{},{},{},{},{},{}\n",
                            r.n, r.k, r.method, r.value, r.approx, stderr
                        ));
                    }
                    Output::Csv(s)
                }
                _ => json(&rows),
            })
        }
        Command::Stein { n, d, mode, cb } => {
            let c_b = match cb {
                CbArg::Third => BCoefficient::ThirdK,
                CbArg::Quarter => BCoefficient::QuarterK,
            };
            let mode = stein_mode(g, mode)?;
            let report = stein_terms(*n, *d, mode, c_b)?;
            Ok(match format {
                Some(Format::Csv) => {
                    let mut s = String::from("n,d,k,term_a,bound_a,term_b,bound_b,total_bound\n");
                    for r in &report.records {
                        s.push_str(&format!(
                            "{},{},{},{},{},{},{},{}\n",
                            report.n,
                            report.d,
                            r.k,
                            r.term_a,
                            format_rational(&r.bound_a),
                            r.term_b,
                            format_rational(&r.bound_b),
                            format_rational(&report.total_bound)
                        ));
                    }
                    Output::Csv(s)
                }
                _ => json(&report),
            })
        }
        Command::Tv {
            n,
            d,
            mode,
            dist_out,
        } => {
            if *d == 0 || *d >= *n {
                return Err(Failure::usage(format!(
                    "need 1 <= d < n, got d = {d}, n = {n}"
                )));
            }
            let (dist, method, samples, seed) = match stein_mode(g, mode)? {
                SteinMode::Exact { force } => (
                    exact_joint_distribution(*n, *d, force)?,
                    "exact",
                    None,
                    None,
                ),
                SteinMode::MonteCarlo { samples, plan } => (
                    empirical_joint_distribution(*n, *d, samples, plan)?,
                    "mc",
                    Some(samples),
                    Some(plan.seed),
                ),
            };
            if let Some(path) = dist_out {
                fs::write(path, dist.to_csv())
                    .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))?;
            }
            let bound = tv_upper_bound(*n, *d)?;
            let report = TvReport {
                n: *n,
                d: *d,
                tv: tv_distance_to_poisson(&dist),
                bound_approx: to_f64(&bound),
                bound,
                method: method.to_string(),
                samples,
                seed,
            };
            Ok(match format {
                Some(Format::Csv) => Output::Csv(format!(
                    "n,d,tv,bound,method\n{},{},{},{},{}\n",
                    report.n,
                    report.d,
                    report.tv,
                    format_rational(&report.bound),
                    report.method
                )),
                _ => json(&report),
            })
        }
    }
}

fn stein_mode(g: &Global, mode: &ModeArgs) -> std::result::Result<SteinMode, Failure> {
    match (mode.exact, mode.samples) {
        (true, _) => Ok(SteinMode::Exact { force: g.force }),
        (false, Some(samples)) => Ok(SteinMode::MonteCarlo {
            samples,
            plan: require_seed(g)?,
        }),
        (false, None) => Err(Failure::usage("pass --exact or --samples")),
    }
}

fn moment_rows(
    g: &Global,
    n: usize,
    k: Option<usize>,
    method: MomentMethod,
    samples: Option<u64>,
) -> std::result::Result<Vec<MomentRow>, Failure> {
    if n == 0 {
        return Err(Failure::usage("n must be at least 1"));
    }
    if let Some(k) = k {
        if k == 0 || k > n {
            return Err(Failure::usage(format!("k = {k} must lie in [1, {n}]")));
        }
    }
    let exact_row = |k: String, method: &str, r: &ExactRational| MomentRow {
        n,
        k,
        method: method.to_string(),
        value: format_rational(r),
        approx: to_f64(r),
        stderr: None,
    };
    let mut rows = Vec::new();
    match method {
        MomentMethod::Enum => {
            let m = enumerated_moments(n, g.force)?;
            let ks: Vec<usize> = k.map_or_else(|| (1..=n).collect(), |k| vec![k]);
            for k in ks {
                rows.push(exact_row(k.to_string(), "enum", &m.mean(k)));
            }
            if k.is_none() {
                rows.push(exact_row("total".into(), "enum", &m.total_mean));
                rows.push(exact_row("total".into(), "harmonic", &harmonic(n)));
            }
        }
        MomentMethod::Formula => {
            let ks: Vec<usize> = k.map_or_else(|| (1..=n).collect(), |k| vec![k]);
            for k in ks {
                let mean = expected_k_cycles_exact(n, k, g.force)?;
                rows.push(exact_row(k.to_string(), "formula", &mean));
            }
        }
        MomentMethod::Mc => {
            let samples = samples.ok_or_else(|| Failure::usage("mc needs --samples"))?;
            let plan = require_seed(g)?;
            let (lo, hi) = k.map_or((1, n.min(10)), |k| (k, k));
            let est = expected_k_cycles_mc(n, hi, samples, plan)?;
            for e in est.iter().filter(|e| e.k >= lo) {
                rows.push(MomentRow {
                    n,
                    k: e.k.to_string(),
                    method: "mc".into(),
                    value: e.mean.to_string(),
                    approx: e.mean,
                    stderr: Some(e.stderr),
                });
                rows.push(exact_row(e.k.to_string(), "limit", &e.limit));
                rows.push(exact_row(
                    e.k.to_string(),
                    "finite_reference",
                    &e.finite_reference,
                ));
            }
            if k.is_none() {
                let t = total_cycles_stats(n, samples, plan)?;
                rows.push(MomentRow {
                    n,
                    k: "total".into(),
                    method: "mc".into(),
                    value: t.mean.to_string(),
                    approx: t.mean,
                    stderr: Some(t.stderr),
                });
                rows.push(exact_row("total".into(), "harmonic", &t.harmonic));
            }
        }
    }
    Ok(rows)
}

fn emit_error(f: &Failure) -> ExitCode {
    let body = serde_json::json!({ "error": { "kind": f.kind, "message": f.message } });
    eprintln!("{body}");
    ExitCode::from(f.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return emit_error(&Failure::usage(e.render().to_string().trim_end()));
        }
    };
    let text = match run(&cli) {
        Ok(Output::Json(s)) | Ok(Output::Csv(s)) => s,
        Err(f) => return emit_error(&f),
    };
    let written = match &cli.global.out {
        Some(path) => fs::write(path, &text)
            .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::io(e.to_string())),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => emit_error(&f),
    }
}
