//! `apent`: entropy estimates, Verblunsky coefficients and Monte Carlo
//! suites from the command line.
//!
//! Exit codes: 0 success, 1 invalid input, 2 a singular (`−∞`) result,
//! 3 a failed statistical suite.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use apent_core::entropy::{self, format_ext, EntropyOptions, EntropyReport, Method};
use apent_core::freegroup::{Enumeration, LetterOrder, Word};
use apent_core::randrep::{self, DilDistConfig, SampleReport};
use apent_core::verblunsky::{self, VerblunskySequence};
use apent_core::{Error, PdfSpec};
use clap::{Args, Parser, Subcommand};
use rand::Rng;

#[derive(Parser)]
#[command(name = "apent", version, about = "Annealed AP entropy on free groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the annealed entropy of a positive definite function.
    Entropy(EntropyArgs),
    /// Extract or reconstruct Verblunsky coefficient sequences.
    Verblunsky(VerblunskyArgs),
    /// Run Monte Carlo suites against random unitary representations.
    Simulate(SimulateArgs),
    /// Entropy of the mollified functions along a grid of weights.
    Mollify(MollifyArgs),
}

#[derive(Args)]
struct Common {
    /// Spec file, or inline JSON starting with `{`.
    #[arg(long)]
    spec: Option<String>,
    /// Highest level to compute.
    #[arg(long, default_value_t = entropy::DEFAULT_MAX_LEVEL)]
    levels: usize,
    /// Letter order as comma-separated signed indices, e.g. `2,-2,1,-1`.
    #[arg(long, allow_hyphen_values = true)]
    enum_order: Option<String>,
    /// Output path; without it the report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EntropyArgs {
    #[command(flatten)]
    common: Common,
    /// formula1, formula2, verblunsky, seward, seward-cmi or all.
    #[arg(long, default_value = "all")]
    method: String,
    /// Stabilization tolerance on consecutive increments.
    #[arg(long, default_value_t = entropy::DEFAULT_TOL)]
    tol: f64,
    /// Emit CSV instead of JSON.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct VerblunskyArgs {
    #[command(flatten)]
    common: Common,
    /// Reconstruct the partial function from this coefficient file.
    #[arg(long)]
    inverse: Option<PathBuf>,
    /// Reconstruct from the extracted coefficients and re-extract.
    #[arg(long)]
    roundtrip: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// wishart, sigma, dildist, independence, trace, ldp, haar or all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Dimension; each suite has its own default.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    /// Seed; drawn from the OS and recorded in the report when absent.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write raw samples as CSV to this path.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct MollifyArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated weights in (0, 1].
    #[arg(long)]
    t_grid: String,
    #[arg(long, default_value = "verblunsky")]
    method: String,
    #[arg(long, default_value_t = entropy::DEFAULT_TOL)]
    tol: f64,
}

/// A failure mapped to an exit code.
enum Failure {
    Invalid(String),
    Singular(String),
    Statistical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Singular(_) => 2,
            Failure::Statistical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Singular(m) | Failure::Statistical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::SingularPrefix { step } => Failure::Singular(format!("singular prefix at step {step}")),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(msg.into())
}

fn load_spec(arg: Option<&str>) -> Result<PdfSpec, Failure> {
    let arg = arg.ok_or_else(|| invalid("--spec is required"))?;
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| invalid(format!("cannot read {arg}: {e}")))?
    };
    Ok(PdfSpec::from_json(&text)?)
}

fn letter_order(arg: Option<&str>, rank: u32) -> Result<LetterOrder, Failure> {
    match arg {
        None => Ok(LetterOrder::standard(rank)),
        Some(s) => {
            let letters = s
                .split(',')
                .map(|x| x.trim().parse::<i32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| invalid(format!("bad --enum-order: {e}")))?;
            Ok(LetterOrder::new(rank, letters)?)
        }
    }
}

fn parse_methods(s: &str) -> Result<Vec<Method>, Failure> {
    if s == "all" {
        return Ok(Method::MAIN.to_vec());
    }
    s.split(',')
        .map(|m| {
            m.trim()
                .parse::<Method>()
                .map_err(|_| invalid(format!("unknown method {m}")))
        })
        .collect()
}

fn check_tol(tol: f64) -> CmdResult {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(invalid("--tol must be positive"))
    }
}

fn emit(out: Option<&Path>, body: &str, summary: &str) -> CmdResult {
    match out {
        Some(p) => {
            std::fs::write(p, body).map_err(|e| invalid(format!("cannot write {}: {e}", p.display())))?;
            println!("{summary}");
        }
        None => print!("{body}{}", if body.ends_with('\n') { "" } else { "\n" }),
    }
    Ok(())
}

fn cmd_entropy(a: &EntropyArgs) -> CmdResult {
    let spec = load_spec(a.common.spec.as_deref())?;
    check_tol(a.tol)?;
    let opts = EntropyOptions {
        max_level: a.common.levels,
        tol: a.tol,
        order: Some(letter_order(a.common.enum_order.as_deref(), spec.rank())?),
        stop_when_stable: false,
    };
    let reports = parse_methods(&a.method)?
        .into_iter()
        .map(|m| entropy::estimate_hann(&spec, m, &opts))
        .collect::<apent_core::Result<Vec<EntropyReport>>>()?;
    let body = if a.csv {
        let mut s = String::from("method,level,term,partial_sum\n");
        for r in &reports {
            for line in r.to_csv().lines().skip(1) {
                s.push_str(&format!("{},{line}\n", r.method));
            }
        }
        s
    } else {
        serde_json::to_string_pretty(&reports).expect("reports always serialize")
    };
    let summary = reports
        .iter()
        .map(|r| {
            format!(
                "{}={}{}",
                r.method,
                format_ext(r.estimate),
                if r.stabilized { "" } else { " (not stabilized)" }
            )
        })
        .collect::<Vec<_>>()
        .join(" ");
    emit(a.common.out.as_deref(), &body, &format!("entropy: {summary}"))?;
    if reports.iter().any(EntropyReport::is_singular) {
        return Err(Failure::Singular(format!("singular input: {summary}")));
    }
    Ok(())
}

fn max_coeff_error(a: &[apent_core::Contraction], b: &[apent_core::Contraction]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| (x.matrix() - y.matrix()).iter().map(|z| z.norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

fn cmd_verblunsky(a: &VerblunskyArgs) -> CmdResult {
    if let Some(path) = &a.inverse {
        let text =
            std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let seq = VerblunskySequence::from_json(&text)?;
        let (en, coeffs) = seq.parts()?;
        let q = verblunsky::reconstruct(seq.k, &coeffs, &en)?;
        let mut summary = format!("verblunsky: reconstructed over {} elements", q.set().len());
        if a.roundtrip {
            let back = verblunsky::coefficients_of(&q, &en, coeffs.len())?;
            summary.push_str(&format!(", roundtrip max error {:e}", max_coeff_error(&coeffs, &back)));
        }
        return emit(a.common.out.as_deref(), &q.to_json(), &summary);
    }

    let spec = load_spec(a.common.spec.as_deref())?;
    let order = letter_order(a.common.enum_order.as_deref(), spec.rank())?;
    let (_, unital) = apent_core::pdf::normalize(&spec)?;
    let phi = unital.ok_or_else(|| Failure::Singular("singular prefix at step 0: φ(e) is singular".into()))?;
    // levels follow the entropy convention: level L covers |g| ≤ L + 1
    let en = Enumeration::length_lex_ball(&order, a.common.levels + 1);
    let steps = en.len() - 1;
    let coeffs = verblunsky::coefficient_sequence(&phi, &en, steps)?;
    let seq = VerblunskySequence::new(phi.k(), &en, &coeffs);
    let mut summary = format!("verblunsky: {} coefficients", coeffs.len());
    if a.roundtrip {
        let q = verblunsky::reconstruct(phi.k(), &coeffs, &en)?;
        let back = verblunsky::coefficients_of(&q, &en, steps)?;
        let direct = phi.restrict(&en.prefix(steps))?;
        let gram_err = (q.matrix().matrix() - direct.matrix().matrix())
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()));
        summary.push_str(&format!(
            ", roundtrip max error {:e}, gram max error {:e}",
            max_coeff_error(&coeffs, &back),
            gram_err
        ));
    }
    emit(a.common.out.as_deref(), &seq.to_json(), &summary)
}

const SUITES: [&str; 7] = ["wishart", "sigma", "dildist", "independence", "trace", "ldp", "haar"];

fn run_suite(name: &str, n: Option<usize>, samples: Option<usize>, seed: u64) -> Result<Vec<SampleReport>, Failure> {
    let positive = |v: Option<usize>, d: usize, what: &str| match v {
        Some(0) => Err(invalid(format!("--{what} must be positive"))),
        Some(x) => Ok(x),
        None => Ok(d),
    };
    Ok(match name {
        "wishart" => vec![randrep::test_wishart_k1(
            positive(n, 16, "n")?,
            positive(samples, 20000, "samples")?,
            seed,
        )],
        "sigma" => {
            let n = positive(n, 8, "n")?;
            if n < 2 {
                return Err(invalid("sigma needs n ≥ 2"));
            }
            vec![randrep::test_sigma_k1(n, positive(samples, 20000, "samples")?, seed)]
        }
        "dildist" | "dil-dist" => {
            let cfg = DilDistConfig::standard(positive(n, 24, "n")?, positive(samples, 4000, "samples")?, seed);
            vec![randrep::test_dil_dist(&cfg)?]
        }
        "independence" => vec![randrep::test_coefficient_independence(
            2,
            positive(n, 32, "n")?,
            1,
            4,
            positive(samples, 5000, "samples")?,
            seed,
        )?],
        "trace" => {
            let hi = positive(n, 64, "n")?;
            let words = [
                Word::new(2, &[1])?,
                Word::new(2, &[1, 2])?,
                Word::new(2, &[1, 2, -1, -2])?,
            ];
            let dims: Vec<usize> = [8, hi].into_iter().collect();
            vec![randrep::trace_convergence(
                2,
                &words,
                &dims,
                positive(samples, 200, "samples")?,
                seed,
                0.3,
            )?]
        }
        "ldp" => {
            let ns = match n {
                Some(0) => return Err(invalid("--n must be positive")),
                Some(n) => vec![n],
                None => vec![50, 100, 200],
            };
            if ns.iter().any(|&x| x < 2) {
                return Err(invalid("ldp needs n ≥ 2"));
            }
            vec![randrep::ldp_rate_check(&ns, 0.5)]
        }
        "haar" => vec![
            randrep::test_haar_phase(positive(samples, 10000, "samples")?, seed),
            randrep::test_haar_trace_moment(positive(n, 8, "n")?, positive(samples, 5000, "samples")?, seed),
        ],
        other => {
            return Err(invalid(format!(
                "unknown suite {other}; expected one of {} or all",
                SUITES.join(", ")
            )))
        }
    })
}

/// `dir/stem_tag.ext` for the dump of one report among several.
fn tagged(path: &Path, tag: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = path
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    path.with_file_name(format!("{stem}_{tag}{ext}"))
}

fn cmd_simulate(a: &SimulateArgs) -> CmdResult {
    let names: Vec<&str> = if a.suite == "all" {
        SUITES.to_vec()
    } else {
        a.suite.split(',').collect()
    };
    let seed = a.seed.unwrap_or_else(|| rand::rng().random());
    let mut reports = Vec::new();
    for name in names {
        reports.extend(run_suite(name.trim(), a.n, a.samples, seed)?);
    }
    if let Some(dump) = &a.dump {
        let with_raw: Vec<&SampleReport> = reports.iter().filter(|r| !r.raw.is_empty()).collect();
        for r in &with_raw {
            let path = if with_raw.len() == 1 {
                dump.clone()
            } else {
                tagged(dump, &r.test)
            };
            std::fs::write(&path, r.dump_csv())
                .map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
        }
    }
    let body = serde_json::to_string_pretty(&reports).expect("reports always serialize");
    let summary = reports
        .iter()
        .map(|r| format!("{}={}", r.test, if r.pass { "pass" } else { "FAIL" }))
        .collect::<Vec<_>>()
        .join(" ");
    emit(a.out.as_deref(), &body, &format!("simulate (seed {seed}): {summary}"))?;
    if reports.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(Failure::Statistical(format!("failed suites: {summary}")))
    }
}

fn cmd_mollify(a: &MollifyArgs) -> CmdResult {
    let spec = load_spec(a.common.spec.as_deref())?;
    check_tol(a.tol)?;
    let grid = a
        .t_grid
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| invalid(format!("bad --t-grid: {e}")))?;
    let method = match parse_methods(&a.method)?.as_slice() {
        [m] => *m,
        _ => return Err(invalid("mollify takes a single method")),
    };
    let opts = EntropyOptions {
        max_level: a.common.levels,
        tol: a.tol,
        order: Some(letter_order(a.common.enum_order.as_deref(), spec.rank())?),
        stop_when_stable: true,
    };
    let profile = entropy::mollified_profile(&spec, &grid, method, &opts)?;
    let mut body = String::from("t,h_ann\n");
    for p in &profile {
        body.push_str(&format!("{},{}\n", p.t, format_ext(p.h_ann)));
    }
    let mut sorted = profile.clone();
    sorted.sort_by(|x, y| x.t.total_cmp(&y.t));
    let nonincreasing = sorted.windows(2).all(|w| w[1].h_ann <= w[0].h_ann + 1e-12);
    let summary = format!(
        "mollify: {} points, h_ann {} in t",
        profile.len(),
        if nonincreasing { "nonincreasing" } else { "not monotone" }
    );
    emit(a.common.out.as_deref(), &body, &summary)
}

fn init_threads() -> CmdResult {
    if let Ok(v) = std::env::var("APENT_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| invalid(format!("APENT_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| invalid(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = init_threads().and_then(|()| match &cli.command {
        Command::Entropy(a) => cmd_entropy(a),
        Command::Verblunsky(a) => cmd_verblunsky(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Mollify(a) => cmd_mollify(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("apent: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
