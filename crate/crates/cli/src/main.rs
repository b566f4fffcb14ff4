//! `chvrank`: generate hard knapsack instances, search critical vectors, audit
//! approximability, and emit replayable certificates.
//!
//! Exit codes: 0 success, 2 certified negative outcome (reported as data), 1 error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chvrank_core::closure::{diagonal_trace, trace_csv};
use chvrank_core::critical_rank::{auto_gamma, verify_gamma, GammaOptions};
use chvrank_core::num::{parse_int, parse_rat, serde_str};
use chvrank_core::{
    candidate_closure, check_claims, critical_upper, diophantine_audit, generate_hard_instance, greedy_certificate,
    rank_lower_bound, verify_gamma_certificate, AuditConfig, AuditMode, AuditVerdict, BasisKind,
    ClaimReport, GammaCertificate, GammaMethod, GreedyCertificate, HPolytope, HardInstance, Instance, InstanceJson,
    NcConstants, ProfitVector, Rational, WeightVector,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "chvrank", version, about = "Exact Chvátal-rank experiments on knapsack polytopes")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print progress notes on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Sample `a` and assemble `c = (a, b, b, b, 0)`.
    Gen(GenArgs),
    /// Shortest critical vector by enumeration.
    Lmin(LminArgs),
    /// Explicit critical vector `floor(n c / (||c||_1 eps))`.
    Upper(UpperArgs),
    /// Short simultaneous approximants of `a`.
    Audit(AuditArgs),
    /// Greedy half-fill certificate for a profit vector.
    GreedyCert(GreedyArgs),
    /// Certify `L_c(eps) >= gamma / eps` on `[delta1, delta0]`.
    Gamma(GammaArgs),
    /// `(gamma/2) ln(delta0/delta1)` with downward rounding.
    RankBound(RankArgs),
    /// Truncated closure of a polytope in dimension <= 4.
    Closure(ClosureArgs),
    /// Diagonal trace `eps_bar_i` through iterated truncated closures (CSV).
    Trace(TraceArgs),
    /// Re-validate a gamma or greedy certificate with exact arithmetic.
    VerifyCert(VerifyArgs),
}

fn rat_arg(s: &str) -> std::result::Result<Rational, String> {
    parse_rat(s).map_err(|e| e.to_string())
}

fn int_arg(s: &str) -> std::result::Result<BigInt, String> {
    parse_int(s).map_err(|e| e.to_string())
}

/// Not part of the echoed config: artifacts must not depend on where they are written.
#[derive(Args, Debug)]
struct OutArg {
    /// Output file (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum BasisArg {
    Powers,
    Tight,
}

impl From<BasisArg> for BasisKind {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Powers => BasisKind::Powers,
            BasisArg::Tight => BasisKind::Tight,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    #[arg(long)]
    m: usize,
    /// Range parameter `D` (default `2^floor(m/8)`).
    #[arg(long, value_parser = int_arg)]
    #[serde(with = "serde_str::opt_int")]
    d: Option<BigInt>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = rat_arg, default_value = "1/4")]
    #[serde(with = "serde_str::rat")]
    eps: Rational,
    #[arg(long, value_enum, default_value = "powers")]
    basis: BasisArg,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArg,
}

#[derive(Args, Debug, Serialize)]
struct InstanceArg {
    /// Instance file (`{"c": [...], "eps": "p/q"}`, optionally with a `hard` section).
    input: PathBuf,
    /// Overrides the file's `eps`.
    #[arg(long, value_parser = rat_arg)]
    #[serde(with = "serde_str::opt_rat")]
    eps: Option<Rational>,
}

#[derive(Args, Debug, Serialize)]
struct LminArgs {
    #[command(flatten)]
    inst: InstanceArg,
    #[arg(long)]
    budget: u64,
    #[arg(long, env = "CHVRANK_LMIN_MAX_VECTORS", default_value_t = chvrank_core::critical_rank::LMIN_MAX_VECTORS)]
    max_vectors: u64,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArg,
}

#[derive(Args, Debug, Serialize)]
struct UpperArgs {
    #[command(flatten)]
    inst: InstanceArg,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArg,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ModeArg {
    Certified,
    Exhaustive,
    Heuristic,
}

#[derive(Args, Debug, Serialize)]
struct AuditArgs {
    /// Hard instance file produced by `gen`.
    input: PathBuf,
    #[arg(long, value_parser = rat_arg)]
    #[serde(with = "serde_str::opt_rat")]
    eps: Option<Rational>,
    #[arg(long, value_parser = rat_arg, default_value = "2000")]
    #[serde(with = "serde_str::rat")]
    alpha: Rational,
    #[arg(long, value_enum, default_value = "certified")]
    mode: ModeArg,
    /// Residual constant `K` in `K eps m D`.
    #[arg(long, value_parser = rat_arg, default_value = "128")]
    #[serde(with = "serde_str::rat")]
    residual: Rational,
    /// Per-index window constant (default `4 * residual`).
    #[arg(long, value_parser = rat_arg)]
    #[serde(with = "serde_str::opt_rat")]
    window: Option<Rational>,
    #[arg(long, value_parser = rat_arg, default_value = "2")]
    #[serde(with = "serde_str::rat")]
    approx_cap: Rational,
    #[arg(long, value_parser = rat_arg, default_value = "1/4")]
    #[serde(with = "serde_str::rat")]
    good_fraction: Rational,
    #[arg(long, env = "CHVRANK_GRID_BUDGET", default_value_t = 50_000_000)]
    grid_budget: u128,
    #[arg(long, env = "CHVRANK_EXHAUSTIVE_BUDGET", default_value_t = 10_000_000)]
    exhaustive_budget: u128,
    #[arg(long, default_value_t = 4096)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArg,
}

#[derive(Args, Debug, Serialize)]
struct GreedyArgs {
    /// Hard instance file produced by `gen`.
    input: PathBuf,
    /// Comma-separated profit vector.
    #[arg(long, value_delimiter = ',', value_parser = int_arg)]
    #[serde(with = "serde_str::opt_int_vec")]
    ctilde: Option<Vec<BigInt>>,
    /// JSON array with the profit vector.
    #[arg(long, conflicts_with = "ctilde")]
    ctilde_file: Option<PathBuf>,
    #[arg(long, value_parser = rat_arg, default_value = "1/100")]
    #[serde(with = "serde_str::rat")]
    delta: Rational,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArg,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum MethodArg {
    ExactLmin,
    NecessaryCondition,
}

#[derive(Args, Debug, Serialize)]
struct GammaArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "necessary-condition")]
    method: MethodArg,
    #[arg(long, value_parser = rat_arg)]
    #[serde(with = "serde_str::rat")]
    delta0: Rational,
    #[arg(long, value_parser = rat_arg)]
    #[serde(with = "serde_str::rat")]
    delta1: Rational,
    /// Explicit decreasing grid; disables refinement.
    #[arg(long, value_delimiter = ',', value_parser = rat_arg)]
    #[serde(with = "serde_str::opt_rat_vec")]
    grid: Option<Vec<Rational>>,
    #[arg(long, value_parser = rat_arg, default_value = "2")]
    #[serde(with = "serde_str::rat")]
    ratio: Rational,
    /// Refinement stops once gamma reaches this value.
    #[arg(long, value_parser = rat_arg, default_value = "2")]
    #[serde(with = "serde_str::rat")]
    target: Rational,
    #[arg(long, default_value_t = 65)]
    max_points: usize,
    #[arg(long, default_value_t = 16)]
    lmin_budget: u64,
    #[arg(long, value_parser = rat_arg, default_value = "32")]
    #[serde(with = "serde_str::rat")]
    nc_const: Rational,
    #[arg(long, value_parser = rat_arg, default_value = "1/100")]
    #[serde(with = "serde_str::rat")]
    delta: Rational,
    #[arg(long, env = "CHVRANK_MAX_CANDIDATES", default_value_t = 50_000_000)]
    max_candidates: u64,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArg,
}

#[derive(Args, Debug, Serialize)]
struct RankArgs {
    #[arg(long, value_parser = rat_arg, required_unless_present = "cert")]
    #[serde(with = "serde_str::opt_rat")]
    gamma: Option<Rational>,
    #[arg(long, value_parser = rat_arg, required_unless_present = "cert")]
    #[serde(with = "serde_str::opt_rat")]
    delta0: Option<Rational>,
    #[arg(long, value_parser = rat_arg, required_unless_present = "cert")]
    #[serde(with = "serde_str::opt_rat")]
    delta1: Option<Rational>,
    /// Take `gamma`, `delta0`, `delta1` from a gamma certificate.
    #[arg(long, conflicts_with_all = ["gamma", "delta0", "delta1"])]
    cert: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArg,
}

#[derive(Args, Debug, Serialize)]
struct ClosureArgs {
    /// Polytope (`{"n", "ineqs"}`) or instance (`{"c", "eps"}`, n <= 4).
    input: PathBuf,
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArg,
}

#[derive(Args, Debug, Serialize)]
struct TraceArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long, default_value_t = 2)]
    rounds: usize,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArg,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    input: PathBuf,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArg,
}

/// Instance file layout written by `gen` and read by every other command.
#[derive(Debug, Serialize, Deserialize)]
struct InstanceDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<Value>,
    #[serde(flatten)]
    inst: InstanceJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hard: Option<HardInstance>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GammaDoc {
    kind: String,
    config: Value,
    certificate: GammaCertificate,
}

#[derive(Debug, Serialize, Deserialize)]
struct GreedyDoc {
    kind: String,
    config: Value,
    #[serde(with = "serde_str::int_vec")]
    c: Vec<BigInt>,
    ctilde: ProfitVector,
    bases: [Vec<usize>; 3],
    #[serde(with = "serde_str::rat")]
    delta: Rational,
    certificate: GreedyCertificate,
    claims: ClaimReport,
}

enum Outcome {
    Done,
    Negative,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit_text(out: &OutArg, text: &str) -> Result<()> {
    match &out.output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit<T: Serialize>(out: &OutArg, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit_text(out, &text)
}

fn load_instance(arg: &InstanceArg) -> Result<(Instance, Option<HardInstance>)> {
    let doc: InstanceDoc = read_json(&arg.input)?;
    let mut inst = Instance::try_from(doc.inst)?;
    if let Some(e) = &arg.eps {
        inst = inst.with_eps(e.clone())?;
    }
    Ok((inst, doc.hard))
}

fn load_hard(path: &Path) -> Result<(HardInstance, Rational)> {
    let doc: InstanceDoc = read_json(path)?;
    let Some(hard) = doc.hard else { bail!("{} has no `hard` section; create it with `gen`", path.display()) };
    hard.validate()?;
    if hard.c != doc.inst.c {
        bail!("`c` and `hard.c` disagree in {}", path.display());
    }
    Ok((hard, doc.inst.eps))
}

fn load_polytope(path: &Path) -> Result<HPolytope> {
    let v: Value = read_json(path)?;
    if v.get("ineqs").is_some() {
        let p: HPolytope = serde_json::from_value(v)?;
        return Ok(HPolytope::new(p.n, p.ineqs)?);
    }
    let doc: InstanceDoc = serde_json::from_value(v)?;
    Ok(HPolytope::knapsack_polytope(&Instance::try_from(doc.inst)?)?)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let config = serde_json::to_value(&cli.cmd)?;
    let note = |s: &str| {
        if cli.verbose {
            eprintln!("{s}");
        }
    };
    match &cli.cmd {
        Command::Gen(a) => {
            let hard = generate_hard_instance(a.m, a.d.clone(), a.seed, a.basis.into())?;
            let inst = hard.instance(a.eps.clone())?;
            note(&format!("generated {inst}"));
            let doc = InstanceDoc { config: Some(config), inst: InstanceJson::from(&inst), hard: Some(hard) };
            emit(&a.out, &doc)?;
        }
        Command::Lmin(a) => {
            let (inst, _) = load_instance(&a.inst)?;
            let r = chvrank_core::critical_rank::l_min_with(&inst, a.budget, a.max_vectors)?;
            emit(&a.out, &json!({ "config": config, "result": r }))?;
            if r.budget_exceeded {
                return Ok(Outcome::Negative);
            }
        }
        Command::Upper(a) => {
            let (inst, _) = load_instance(&a.inst)?;
            let r = critical_upper(&inst)?;
            emit(&a.out, &json!({ "config": config, "result": r }))?;
        }
        Command::Audit(a) => {
            let (hard, file_eps) = load_hard(&a.input)?;
            let eps = a.eps.clone().unwrap_or(file_eps);
            let mode = match a.mode {
                ModeArg::Certified => AuditMode::Certified,
                ModeArg::Exhaustive => AuditMode::Exhaustive,
                ModeArg::Heuristic => AuditMode::Heuristic,
            };
            let cfg = AuditConfig {
                mode,
                residual: a.residual.clone(),
                window: a.window.clone(),
                approx_cap: a.approx_cap.clone(),
                good_fraction: a.good_fraction.clone(),
                grid_budget: a.grid_budget,
                exhaustive_budget: a.exhaustive_budget,
                trials: a.trials,
                seed: a.seed,
                ..AuditConfig::default()
            };
            let r = diophantine_audit(&hard.a, &hard.d, &eps, &a.alpha, &cfg)?;
            emit(&a.out, &json!({ "config": config, "report": r }))?;
            if r.verdict == AuditVerdict::CertifiedNone {
                return Ok(Outcome::Negative);
            }
        }
        Command::GreedyCert(a) => {
            let (hard, _) = load_hard(&a.input)?;
            let ct = match (&a.ctilde, &a.ctilde_file) {
                (Some(v), _) => v.clone(),
                (None, Some(p)) => {
                    let raw: Vec<Value> = read_json(p)?;
                    raw.iter()
                        .map(|x| match x {
                            Value::String(s) => Ok(parse_int(s)?),
                            Value::Number(n) => Ok(parse_int(&n.to_string())?),
                            _ => bail!("profit entries must be integers"),
                        })
                        .collect::<Result<_>>()?
                }
                (None, None) => bail!("pass --ctilde or --ctilde-file"),
            };
            let ctilde = ProfitVector::new(ct);
            let c = hard.weights();
            let cert = greedy_certificate(&c, &ctilde, &hard.bases)?;
            let claims = check_claims(&cert, &c, &hard.bases, &a.delta);
            let doc = GreedyDoc {
                kind: "greedy".into(),
                config,
                c: hard.c.clone(),
                ctilde,
                bases: hard.bases.clone(),
                delta: a.delta.clone(),
                certificate: cert,
                claims,
            };
            emit(&a.out, &doc)?;
        }
        Command::Gamma(a) => {
            let doc: InstanceDoc = read_json(&a.input)?;
            let c = WeightVector::new(doc.inst.c.clone())?;
            let bases = doc.hard.as_ref().map(|h| h.bases.clone());
            let method = match a.method {
                MethodArg::ExactLmin => GammaMethod::ExactLmin,
                MethodArg::NecessaryCondition => GammaMethod::NecessaryCondition,
            };
            let opts = GammaOptions {
                lmin_budget: a.lmin_budget,
                nc: NcConstants { nc_const: a.nc_const.clone(), delta: a.delta.clone() },
                max_candidates: a.max_candidates,
            };
            let cert = match &a.grid {
                Some(g) => {
                    if g.first() != Some(&a.delta0) || g.last() != Some(&a.delta1) {
                        bail!("--grid must start at delta0 and end at delta1");
                    }
                    verify_gamma(&c, bases.as_ref(), g, method, &opts)?
                }
                None => auto_gamma(
                    &c,
                    bases.as_ref(),
                    &a.delta0,
                    &a.delta1,
                    &a.ratio,
                    method,
                    &opts,
                    &a.target,
                    a.max_points,
                )?,
            };
            if !cert.sound {
                eprintln!("warning: hypotheses of the distance test fail; the certificate carries no guarantee");
            }
            note(&format!("gamma = {} over {} grid points", cert.gamma, cert.points.len()));
            emit(&a.out, &GammaDoc { kind: "gamma".into(), config, certificate: cert })?;
        }
        Command::RankBound(a) => {
            let (g, d0, d1) = match &a.cert {
                Some(p) => {
                    let doc: GammaDoc = read_json(p)?;
                    let c = doc.certificate;
                    if !c.sound {
                        bail!("certificate hypotheses do not hold; no rank bound follows");
                    }
                    (c.gamma, c.delta0, c.delta1)
                }
                None => (a.gamma.clone().unwrap(), a.delta0.clone().unwrap(), a.delta1.clone().unwrap()),
            };
            let r = rank_lower_bound(&g, &d0, &d1)?;
            emit(&a.out, &json!({ "config": config, "result": r }))?;
        }
        Command::Closure(a) => {
            let mut p = load_polytope(&a.input)?;
            for _ in 0..a.rounds {
                p = candidate_closure(&p, a.k)?;
            }
            emit(
                &a.out,
                &json!({
                    "config": config,
                    "semantics": "upper-bounding relaxation of the closure (normals with ||c||_inf <= K)",
                    "polytope": p,
                }),
            )?;
        }
        Command::Trace(a) => {
            let p = load_polytope(&a.input)?;
            let t = diagonal_trace(&p, a.k, a.rounds)?;
            let text = format!("# config: {}\n{}", serde_json::to_string(&config)?, trace_csv(&t));
            emit_text(&a.out, &text)?;
        }
        Command::VerifyCert(a) => {
            let v: Value = read_json(&a.input)?;
            let problems = match v.get("kind").and_then(Value::as_str) {
                Some("gamma") => {
                    let doc: GammaDoc = serde_json::from_value(v)?;
                    verify_gamma_certificate(&doc.certificate)
                }
                Some("greedy") => {
                    let doc: GreedyDoc = serde_json::from_value(v)?;
                    verify_greedy_doc(&doc)?
                }
                _ => bail!("unknown certificate kind"),
            };
            let valid = problems.is_empty();
            emit(&a.out, &json!({ "config": config, "valid": valid, "problems": problems }))?;
            if !valid {
                bail!("certificate rejected");
            }
        }
    }
    Ok(Outcome::Done)
}

fn verify_greedy_doc(doc: &GreedyDoc) -> Result<Vec<String>> {
    let c = WeightVector::new(doc.c.clone())?;
    let mut problems = doc.certificate.verify(&c, &doc.ctilde, &doc.bases);
    if !problems.is_empty() {
        return Ok(problems);
    }
    let claims = check_claims(&doc.certificate, &c, &doc.bases, &doc.delta);
    if claims != doc.claims {
        problems.push("claim report does not match a fresh evaluation".into());
    }
    if claims.preconditions_hold && !claims.all_hold() {
        problems.push("preconditions hold but a guaranteed inequality fails".into());
    }
    Ok(problems)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Negative) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
