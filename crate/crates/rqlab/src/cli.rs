//! Command-line surface: one subcommand per experiment, machine-readable
//! output (JSON by default, CSV opt-in for histograms), exit codes 0/2/64.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::field::QuadraticField;
use crate::invariants::{self, ScanFilter};
use crate::{norms, rayclass, stats};

#[derive(Parser)]
#[command(
    name = "rqlab",
    version,
    about = "Class groups, units and Fermat quotients of real quadratic fields"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// p-adic invariant report (h, h0, delta of eps and eta, flags) for one field
    Analyze(AnalyzeArgs),
    /// Sweep fundamental discriminants and report fields passing the filters
    Scan(ScanArgs),
    /// Torsion structure of the ray class tower at p (rank and p-part)
    Rayclass(RayclassArgs),
    /// Distribution of ideal class orders over split primes ell = +-1 mod p^(n+1)
    SurveyOrders(SurveyArgs),
    /// Distribution of delta_p over ell-units of a fixed class order
    SurveyEllUnits(SurveyEllUnitsArgs),
    /// Distribution of delta_p over random principal products from a prime pool
    SurveyRelations(SurveyRelationsArgs),
    /// Integral elements of a given norm, one per associate class
    SolveNorm(SolveNormArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct FieldArgs {
    /// Squarefree m >= 2 defining k = Q(sqrt m)
    #[arg(long)]
    m: Option<u64>,
    /// Fundamental discriminant D (alternative to --m)
    #[arg(long = "D")]
    d: Option<u64>,
}

impl FieldArgs {
    fn field(&self) -> Result<QuadraticField> {
        match (self.m, self.d) {
            (Some(m), None) => QuadraticField::new(m),
            (None, Some(d)) => QuadraticField::from_discriminant(d),
            _ => unreachable!("clap enforces exactly one of --m/--D"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the artifact to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long)]
    p: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    p: u64,
    /// Lower bound on the fundamental discriminant
    #[arg(long = "bd", default_value_t = 5)]
    bd: u64,
    /// Upper bound on the fundamental discriminant
    #[arg(long = "BD")]
    bd_hi: u64,
    /// Keep only fields with v_p(h) >= this
    #[arg(long, default_value_t = 0)]
    vh_min: u32,
    /// Keep only fields with delta_p(eps) >= this
    #[arg(long, default_value_t = 0)]
    zmax_exp: u32,
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct RayclassArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long)]
    p: u64,
    /// Starting modulus exponent t of p^t (escalated until saturation)
    #[arg(long, default_value_t = 9)]
    nt: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SurveyArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long)]
    p: u64,
    /// Congruence exponent: enumerate primes ell = +-1 mod p^(n+1)
    #[arg(long, default_value_t = 8)]
    n: u32,
    /// Upper bound on ell
    #[arg(long)]
    bl: u64,
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SurveyEllUnitsArgs {
    #[command(flatten)]
    survey: SurveyArgs,
    /// Ideal class order selecting the stratum (eta generates l^r)
    #[arg(long)]
    r: u64,
}

#[derive(Args)]
struct SurveyRelationsArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long)]
    p: u64,
    /// Explicit prime pool, comma separated, consumed in the given order
    #[arg(long, value_delimiter = ',')]
    pool: Option<Vec<u64>>,
    /// Bound for the derived pool when --pool is absent
    #[arg(long, default_value_t = 1000)]
    pool_bound: u64,
    /// Number of random products to draw
    #[arg(long, visible_alias = "nt", default_value_t = 1000)]
    trials: u64,
    /// RNG seed; equal seeds reproduce the histogram bit for bit
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SolveNormArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Target norm, a possibly negative integer
    #[arg(long, allow_hyphen_values = true)]
    norm: String,
    /// Restrict to solutions of content 1
    #[arg(long)]
    primitive: bool,
}

/// Worker count: the flag wins, then the environment, then rayon's default.
fn init_jobs(flag: Option<usize>) {
    let jobs = flag.or_else(|| {
        std::env::var("RQLAB_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(j) = jobs.filter(|&j| j > 0) {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global();
    }
}

fn append_elapsed(json_line: &str, started: Instant) -> String {
    let mut line = json_line.trim_end().to_string();
    assert!(line.ends_with('}'));
    line.truncate(line.len() - 1);
    line.push_str(&format!(
        ",\"elapsed_ms\":{}}}",
        started.elapsed().as_millis()
    ));
    line
}

fn histogram_artifact(hist: &stats::SurveyHistogram, format: Format, started: Instant) -> String {
    match format {
        Format::Json => append_elapsed(&hist.json_line(), started),
        Format::Csv => hist.csv().trim_end().to_string(),
    }
}

fn run_cmd(cmd: Cmd) -> Result<String> {
    match cmd {
        Cmd::Analyze(a) => {
            let field = a.field.field()?;
            let report = invariants::analyze(&field, a.p)?;
            Ok(match a.output.format {
                Format::Json => report.json_line(),
                Format::Csv => format!(
                    "{}\n{}",
                    invariants::InvariantReport::csv_header(),
                    report.csv_row()
                ),
            })
        }
        Cmd::Scan(a) => {
            init_jobs(a.jobs);
            let filter = ScanFilter {
                vh_min: a.vh_min,
                zmax_exp: a.zmax_exp,
                ..ScanFilter::default()
            };
            let reports = invariants::scan(a.bd, a.bd_hi, a.p, &filter)?;
            Ok(match a.output.format {
                Format::Json => reports
                    .iter()
                    .map(|r| r.json_line())
                    .collect::<Vec<_>>()
                    .join("\n"),
                Format::Csv => {
                    let mut lines = vec![invariants::InvariantReport::csv_header().to_string()];
                    lines.extend(reports.iter().map(|r| r.csv_row()));
                    lines.join("\n")
                }
            })
        }
        Cmd::Rayclass(a) => {
            let field = a.field.field()?;
            let ts = rayclass::torsion_structure(&field, a.p, a.nt)?;
            Ok(match a.output.format {
                Format::Json => ts.json_line(),
                Format::Csv => format!(
                    "m,D,p,t,rank,p_part,saturated_at\n{},{},{},{},{},{},{}",
                    ts.m,
                    ts.d,
                    ts.p,
                    ts.t,
                    ts.rank,
                    ts.p_part
                        .iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                    ts.saturated_at
                ),
            })
        }
        Cmd::SurveyOrders(a) => {
            init_jobs(a.jobs);
            let field = a.field.field()?;
            let spec = stats::ScanSpec::new(a.p, a.n, a.bl)?;
            let started = Instant::now();
            let hist = stats::order_survey(&field, &spec)?;
            Ok(histogram_artifact(&hist, a.output.format, started))
        }
        Cmd::SurveyEllUnits(a) => {
            init_jobs(a.survey.jobs);
            let field = a.survey.field.field()?;
            let spec = stats::ScanSpec::new(a.survey.p, a.survey.n, a.survey.bl)?;
            let started = Instant::now();
            let hist = stats::ell_unit_delta_survey(&field, &spec, a.r)?;
            Ok(histogram_artifact(&hist, a.survey.output.format, started))
        }
        Cmd::SurveyRelations(a) => {
            let field = a.field.field()?;
            let pool = match a.pool {
                Some(pool) => pool,
                None => stats::relation_pool(&field, a.p, a.pool_bound)?,
            };
            let started = Instant::now();
            let hist = stats::relation_survey(&field, a.p, &pool, a.trials, a.seed)?;
            Ok(histogram_artifact(&hist, a.output.format, started))
        }
        Cmd::SolveNorm(a) => {
            let field = a.field.field()?;
            let n = BigInt::from_str(&a.norm)
                .map_err(|_| Error::InvalidArgument(format!("unreadable norm {:?}", a.norm)))?;
            let set = norms::norm_solutions(&field, &n, a.primitive)?;
            let solutions: Vec<String> = set
                .solutions
                .iter()
                .map(|x| {
                    let (xc, yc, den) = x.sqrt_m_coords();
                    format!("{{\"x\":\"{xc}\",\"y\":\"{yc}\",\"den\":{den}}}")
                })
                .collect();
            Ok(format!(
                "{{\"m\":{},\"D\":{},\"norm\":\"{}\",\"primitive_only\":{},\"count\":{},\"solutions\":[{}]}}",
                field.m,
                field.d,
                set.n,
                set.primitive_only,
                set.solutions.len(),
                solutions.join(",")
            ))
        }
    }
}

fn output_target(cmd: &Cmd) -> Option<PathBuf> {
    match cmd {
        Cmd::Analyze(a) => a.output.out.clone(),
        Cmd::Scan(a) => a.output.out.clone(),
        Cmd::Rayclass(a) => a.output.out.clone(),
        Cmd::SurveyOrders(a) => a.output.out.clone(),
        Cmd::SurveyEllUnits(a) => a.survey.output.out.clone(),
        Cmd::SurveyRelations(a) => a.output.out.clone(),
        Cmd::SolveNorm(_) => None,
    }
}

pub fn run_cli() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return code;
        }
    };
    let out = output_target(&cli.cmd);
    match run_cmd(cli.cmd) {
        Ok(artifact) => {
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, artifact + "\n") {
                        eprintln!("cannot write {}: {e}", path.display());
                        return 2;
                    }
                }
                None => println!("{artifact}"),
            }
            0
        }
        Err(e) => {
            println!(
                "{{\"error\":\"{}\",\"message\":{}}}",
                e.code(),
                serde_json::to_string(&e.to_string()).expect("message serializes")
            );
            2
        }
    }
}
