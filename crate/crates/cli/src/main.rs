use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use symcsp::ap::{algorithm_m, gamma_split, OracleMode, SimulatedOracle};
use symcsp::frame::{eliminate_constant_unary, evaluate_with_cap, ConstraintFrame, DEFAULT_CAP};
use symcsp::gadget::{
    delta_series_from_unary, derive_delta, hardness_gadget, pair_hardness_gadget, reduce_arity,
    verify_chain, xor_series, ChainReport, GadgetChain, PConvergenceSeries,
};
use symcsp::json::{parse_frame, to_canonical_pretty, to_canonical_string, ConstraintJson};
use symcsp::rational::{format_rational, int, parse_rational, pow, q, within_pow2};
use symcsp::taxonomy::{classify_constraint, classify_set, HardWitness, Verdict};
use symcsp::{Constraint, Error, Rational};

#[derive(Parser)]
#[command(name = "symcsp", version, about = "Exact tools for symmetric Boolean weighted constraint problems")]
struct Cli {
    /// Largest number of variables enumerated by exact evaluation.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP)]
    max_vars: usize,
    /// Range `lo:hi` of m checked for convergent series.
    #[arg(long, global = true, default_value = "1:50", value_parser = parse_m_range)]
    m_range: (u32, u32),
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Pretty-print the JSON result.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Class labels of each constraint and the verdict for the whole set.
    Classify {
        /// Constraint inputs: file path, `-` for stdin, or inline JSON.
        #[arg(required = true)]
        inputs: Vec<String>,
    },
    /// Exact value of a constraint frame.
    Eval { frame: String },
    /// One operation on a constraint.
    Op {
        #[arg(value_enum)]
        op: OpKind,
        constraint: String,
        /// Variable index (0-based) for pin, merge and marginalize.
        #[arg(long, default_value_t = 0)]
        var: usize,
        /// Pin value.
        #[arg(long, default_value_t = 0)]
        bit: usize,
        /// Variable kept by a merge (0-based).
        #[arg(long, default_value_t = 1)]
        into: usize,
        /// Exponent for power.
        #[arg(long, default_value_t = 2)]
        exponent: u32,
    },
    /// Chains constructing Δ0 and/or Δ1 from a complement-unstable constraint.
    DeriveDelta {
        constraint: String,
        /// Directory receiving `delta0.json` / `delta1.json`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// One-step arity reduction keeping complement instability.
    ReduceArity {
        constraint: String,
        #[arg(long)]
        chain_out: Option<PathBuf>,
    },
    /// A member of OR ∪ NAND ∪ B built from a constraint outside Γ and Δ_{i0}.
    Hardness {
        constraint: String,
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
        i0: u8,
        #[arg(long)]
        chain_out: Option<PathBuf>,
    },
    /// A member of OR ∪ NAND ∪ B from one constraint of each tractable family.
    PairHardness {
        first: String,
        second: String,
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
        i0: u8,
        #[arg(long)]
        chain_out: Option<PathBuf>,
    },
    /// Removes the constant unary from a frame of complement-stable constraints.
    EliminateDelta {
        frame: String,
        /// Extra constraints available for the odd case; defaults to the frame's own.
        #[arg(long)]
        family: Vec<String>,
    },
    /// Replays a chain and checks every step.
    Verify {
        chain: String,
        /// Constraint the chain must end in.
        #[arg(long)]
        target: Option<String>,
    },
    /// Runs the single-query approximation algorithm against a simulated oracle.
    ApRun {
        frame: String,
        /// Name of the constraint replaced by the convergent family.
        #[arg(long)]
        target: String,
        /// Series JSON; defaults to a built-in series when the target is Δ0, Δ1 or XOR.
        #[arg(long)]
        series: Option<String>,
        #[arg(long, default_value = "1/4")]
        epsilon: String,
        #[arg(long, value_enum, default_value_t = OracleArg::Exact)]
        oracle: OracleArg,
        #[arg(long, default_value = "1/4")]
        failure_prob: String,
        #[arg(long, default_value_t = 1)]
        trials: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OpKind {
    Pin,
    Merge,
    Marginalize,
    Power,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Exact,
    WorstLegal,
    RandomLegal,
    Faulty,
}

impl From<OracleArg> for OracleMode {
    fn from(o: OracleArg) -> Self {
        match o {
            OracleArg::Exact => OracleMode::Exact,
            OracleArg::WorstLegal => OracleMode::WorstLegal,
            OracleArg::RandomLegal => OracleMode::RandomLegal,
            OracleArg::Faulty => OracleMode::Faulty,
        }
    }
}

fn parse_m_range(s: &str) -> Result<(u32, u32), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: u32 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: u32 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if lo == 0 || lo > hi {
        return Err("need 1 <= lo <= hi".into());
    }
    Ok((lo, hi))
}

/// How a command ended.
enum Failure {
    /// Bad input or violated precondition.
    Input(Value),
    /// A chain or case analysis did not check out.
    Verification(Value),
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidRational(_) | Error::TableLength { .. } | Error::Malformed(_) => "malformed",
        Error::UnknownConstraint(_) | Error::UnknownVariable(_) => "unknown-name",
        Error::DuplicateName(_) | Error::NameConflict(_) => "name-conflict",
        Error::EnumerationCap { .. } => "enumeration-cap",
        Error::Precondition(_) | Error::AllZero | Error::Asymmetric | Error::EmptySet => "precondition",
        Error::Verification { .. } => "verification",
        Error::ProofDeviation(_) => "proof-deviation",
        _ => "invalid-argument",
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let body = json!({ "error": error_kind(&e), "message": e.to_string() });
        match e {
            Error::Verification { .. } | Error::ProofDeviation(_) => Failure::Verification(body),
            _ => Failure::Input(body),
        }
    }
}

type Outcome = Result<Value, Failure>;

fn read_text(input: &str) -> Result<String, Error> {
    let t = input.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        return Ok(input.to_string());
    }
    if input == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Error::Malformed(format!("stdin: {e}")))?;
        return Ok(s);
    }
    fs::read_to_string(input).map_err(|e| Error::Malformed(format!("{input}: {e}")))
}

fn constraint_from_value(v: &Value) -> Result<(String, Constraint), Error> {
    match v {
        // A bare array is a symmetric signature.
        Value::Array(items) => {
            let sig = items
                .iter()
                .map(|x| match x {
                    Value::String(s) => parse_rational(s),
                    Value::Number(n) => parse_rational(&n.to_string()),
                    _ => Err(Error::Malformed(format!("signature entry {x}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((String::new(), Constraint::symmetric(&sig)?))
        }
        Value::Object(_) => {
            let raw: ConstraintJson =
                serde_json::from_value(v.clone()).map_err(|e| Error::Malformed(e.to_string()))?;
            Ok((raw.name.clone(), raw.to_constraint()?))
        }
        _ => Err(Error::Malformed(format!("expected a constraint, got {v}"))),
    }
}

fn parse_json(text: &str) -> Result<Value, Error> {
    serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))
}

/// One constraint, or several when the input is a list of constraint objects.
fn read_constraints(input: &str) -> Result<Vec<(String, Constraint)>, Error> {
    let v = parse_json(&read_text(input)?)?;
    match &v {
        Value::Array(items) if items.iter().all(|x| x.is_object() || x.is_array()) && !items.is_empty() => {
            items.iter().map(constraint_from_value).collect()
        }
        _ => Ok(vec![constraint_from_value(&v)?]),
    }
}

fn read_constraint(input: &str) -> Result<Constraint, Error> {
    let mut all = read_constraints(input)?;
    if all.len() != 1 {
        return Err(Error::Malformed(format!("expected one constraint, got {}", all.len())));
    }
    Ok(all.remove(0).1)
}

fn read_frame(input: &str) -> Result<ConstraintFrame, Error> {
    parse_frame(&read_text(input)?)
}

fn read_chain(input: &str) -> Result<GadgetChain, Error> {
    serde_json::from_str(&read_text(input)?).map_err(|e| Error::Malformed(e.to_string()))
}

fn cjson(c: &Constraint) -> Value {
    serde_json::to_value(ConstraintJson::from_constraint("", c)).expect("serializable")
}

fn chain_json(chain: &GadgetChain) -> Value {
    serde_json::to_value(chain).expect("serializable")
}

fn write_json(path: &Path, v: &Value) -> Result<(), Error> {
    let text = to_canonical_pretty(v)?;
    fs::write(path, text + "\n").map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
}

fn report_json(r: &ChainReport) -> Value {
    json!({
        "ok": r.ok,
        "output": r.output.as_ref().map(cjson),
        "worst_series_ratio": r.worst_series_ratio.as_ref().map(format_rational),
        "steps": r.steps.iter().map(|s| json!({
            "index": s.index,
            "kind": s.kind,
            "ok": s.ok,
            "detail": s.detail,
            "worst_ratio": s.worst_ratio.as_ref().map(format_rational),
        })).collect::<Vec<_>>(),
    })
}

fn verdict_json(v: &Verdict) -> Value {
    match v {
        Verdict::PolyTime { first, second } => {
            json!({ "verdict": "polynomial-time", "first_family": first, "second_family": second })
        }
        Verdict::Hard(HardWitness::Single(f)) => {
            json!({ "verdict": "sharp-p-hard", "witness": [cjson(f)] })
        }
        Verdict::Hard(HardWitness::Pair(a, b)) => {
            json!({ "verdict": "sharp-p-hard", "witness": [cjson(a), cjson(b)] })
        }
    }
}

/// `classify` prints one line per constraint and a final verdict line.
fn classify(inputs: &[String]) -> Result<Vec<Value>, Failure> {
    let mut all = Vec::new();
    for input in inputs {
        all.extend(read_constraints(input)?);
    }
    let mut lines = Vec::new();
    for (name, c) in &all {
        let labels = classify_constraint(c)?;
        lines.push(json!({ "name": name, "labels": labels }));
    }
    let set: Vec<Constraint> = all.into_iter().map(|(_, c)| c).collect();
    lines.push(verdict_json(&classify_set(&set)?));
    Ok(lines)
}

fn emit_chain(chain: &GadgetChain, out: &Option<PathBuf>) -> Result<(), Error> {
    if let Some(path) = out {
        write_json(path, &chain_json(chain))?;
    }
    Ok(())
}

fn default_series(target: &Constraint) -> Result<PConvergenceSeries, Error> {
    if target.is_delta(0) {
        return Ok(delta_series_from_unary(&int(2), &int(1))?.1);
    }
    if target.is_delta(1) {
        return Ok(delta_series_from_unary(&int(1), &int(2))?.1);
    }
    if *target == Constraint::xor() {
        return xor_series(&int(1), &int(2), false);
    }
    Err(Error::Precondition(format!(
        "no built-in series for {target}; pass --series"
    )))
}

#[allow(clippy::too_many_arguments)]
fn ap_run(
    frame: &str,
    target: &str,
    series: &Option<String>,
    epsilon: &str,
    oracle: OracleArg,
    failure_prob: &str,
    trials: usize,
    seed: u64,
    cap: usize,
) -> Outcome {
    let frame = read_frame(frame)?;
    let f = frame.constraint(target)?.clone();
    let series = match series {
        Some(s) => serde_json::from_str(&read_text(s)?).map_err(|e| Error::Malformed(e.to_string()))?,
        None => default_series(&f)?,
    };
    let eps = parse_rational(epsilon)?;
    let failure = match oracle {
        OracleArg::Faulty => parse_rational(failure_prob)?,
        _ => Rational::from_integer(0.into()),
    };
    let truth = evaluate_with_cap(&frame, cap)?;
    let mut records = Vec::new();
    let mut hits = 0usize;
    let mut params = None;
    for t in 0..trials {
        let trial_seed = seed.wrapping_add(t as u64);
        let mut o = SimulatedOracle::new(oracle.into(), failure.clone(), trial_seed)?;
        let out = algorithm_m(&frame, target, &series, &eps, &mut o)?;
        let ok = within_pow2(&out.output, &truth, &eps)?;
        hits += usize::from(ok);
        records.push(json!({
            "seed": trial_seed,
            "answer": format_rational(&out.answer.value),
            "output": format_rational(&out.output),
            "within": ok,
        }));
        params.get_or_insert(out.params);
    }
    let params = params.ok_or_else(|| Error::Precondition("at least one trial is needed".into()))?;
    let (g1, g2) = gamma_split(&frame, target, &series, params.m)?;
    let lm = pow(&params.lambda, params.m);
    Ok(json!({
        "truth": format_rational(&truth),
        "params": params,
        "gamma1": format_rational(&g1),
        "gamma2": format_rational(&g2),
        "gamma2_bound": format_rational(&(lm * &params.b0)),
        "oracle": OracleMode::from(oracle),
        "trials": records,
        "hits": hits,
        "success_rate": format_rational(&q(hits as i64, trials as i64)),
    }))
}

fn run(cli: &Cli) -> Result<Vec<Value>, Failure> {
    let one = |v: Outcome| v.map(|x| vec![x]);
    match &cli.command {
        Command::Classify { inputs } => classify(inputs),
        Command::Eval { frame } => one((|| {
            let frame = read_frame(frame)?;
            let v = evaluate_with_cap(&frame, cli.max_vars)?;
            Ok(json!({ "value": format_rational(&v) }))
        })()),
        Command::Op { op, constraint, var, bit, into, exponent } => one((|| {
            let c = read_constraint(constraint)?;
            let out = match op {
                OpKind::Pin => c.pin(*var, *bit)?,
                OpKind::Merge => c.merge(*var, *into)?,
                OpKind::Marginalize => c.marginalize(*var)?,
                OpKind::Power => c.power(*exponent)?,
            };
            Ok(cjson(&out))
        })()),
        Command::DeriveDelta { constraint, out_dir } => one((|| {
            let c = read_constraint(constraint)?;
            let d = derive_delta(&c)?;
            let mut chains = BTreeMap::new();
            for (i, chain) in &d.chains {
                if let Some(dir) = out_dir {
                    fs::create_dir_all(dir).map_err(|e| Error::Malformed(e.to_string()))?;
                    write_json(&dir.join(format!("delta{i}.json")), &chain_json(chain))?;
                }
                chains.insert(i.to_string(), chain_json(chain));
            }
            Ok(json!({ "both_guaranteed": d.both_guaranteed, "chains": chains }))
        })()),
        Command::ReduceArity { constraint, chain_out } => one((|| {
            let c = read_constraint(constraint)?;
            let (g, chain) = reduce_arity(&c)?;
            emit_chain(&chain, chain_out)?;
            Ok(json!({ "constraint": cjson(&g), "chain": chain_json(&chain) }))
        })()),
        Command::Hardness { constraint, i0, chain_out } => one((|| {
            let c = read_constraint(constraint)?;
            let (g, chain) = hardness_gadget(&c, usize::from(*i0))?;
            emit_chain(&chain, chain_out)?;
            Ok(json!({ "constraint": cjson(&g), "labels": classify_constraint(&g)?, "chain": chain_json(&chain) }))
        })()),
        Command::PairHardness { first, second, i0, chain_out } => one((|| {
            let f1 = read_constraint(first)?;
            let f2 = read_constraint(second)?;
            let (g, chain) = pair_hardness_gadget(&f1, &f2, usize::from(*i0))?;
            emit_chain(&chain, chain_out)?;
            Ok(json!({ "constraint": cjson(&g), "labels": classify_constraint(&g)?, "chain": chain_json(&chain) }))
        })()),
        Command::EliminateDelta { frame, family } => one((|| {
            let frame = read_frame(frame)?;
            let lib: BTreeMap<String, Constraint> = if family.is_empty() {
                frame.constraints().clone()
            } else {
                let mut lib = BTreeMap::new();
                for input in family {
                    for (i, (name, c)) in read_constraints(input)?.into_iter().enumerate() {
                        let name = if name.is_empty() { format!("g{i}") } else { name };
                        lib.insert(name, c);
                    }
                }
                lib
            };
            let e = eliminate_constant_unary(&frame, &lib)?;
            Ok(json!({
                "frame": serde_json::to_value(&e.frame).map_err(|e| Error::Malformed(e.to_string()))?,
                "scale": format_rational(&e.scale),
                "pinned_to": e.pinned_to,
            }))
        })()),
        Command::Verify { chain, target } => {
            let chain = read_chain(chain)?;
            let report = verify_chain(&chain, cli.m_range);
            let mut body = report_json(&report);
            let mut ok = report.ok;
            if let Some(t) = target {
                let t = read_constraint(t)?;
                let matches = chain.output() == &t && report.output.as_ref() == Some(&t);
                body["target_matches"] = json!(matches);
                ok &= matches;
            }
            if ok {
                Ok(vec![body])
            } else {
                Err(Failure::Verification(body))
            }
        }
        Command::ApRun { frame, target, series, epsilon, oracle, failure_prob, trials } => one(ap_run(
            frame,
            target,
            series,
            epsilon,
            *oracle,
            failure_prob,
            *trials,
            cli.seed,
            cli.max_vars,
        )),
    }
}

fn print(v: &Value, pretty: bool) {
    let text = if pretty { to_canonical_pretty(v) } else { to_canonical_string(v) };
    // A closed pipe on stdout is not an error worth reporting.
    let _ = writeln!(std::io::stdout(), "{}", text.expect("serializable"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(lines) => {
            for l in &lines {
                print(l, cli.pretty);
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Input(v)) => {
            print(&v, cli.pretty);
            ExitCode::from(1)
        }
        Err(Failure::Verification(v)) => {
            print(&v, cli.pretty);
            ExitCode::from(2)
        }
    }
}
