//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits with
//! a failure status if any criterion fails.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subproj_core::automata::format_trace;
use subproj_core::corpus::{self, Expected};
use subproj_core::csm::{check_channel_compliance, ExploreOptions};
use subproj_core::oracle::{
    bounded_fidelity_check_with, generate_gk, indistinguishable_finite, intersection_witness, random_global_type,
    IntersectionOracle, RandomTypeConfig, DEFAULT_SWAP_BUDGET,
};
use subproj_core::projection::{bounded_local_language_check, subset_construction};
use subproj_core::syntax::validate_well_formedness;
use subproj_core::validity::{
    available_messages, check_implementability, check_no_mixed_choice, AvailableMessageQuery,
};
use subproj_core::{AsyncEvent, Csm, GlobalType, Role, ViolationKind};

const TABLE_ROWS: [(&str, Option<ViolationKind>); 7] = [
    ("Odd-even", None),
    ("G_r", Some(ViolationKind::ReceiveValidity)),
    ("G'_r", None),
    ("G_s", Some(ViolationKind::SendValidity)),
    ("G'_s", None),
    ("G_fold", None),
    ("G_unf", None),
];
const VERDICT_BUDGET: Duration = Duration::from_millis(50);
const FIDELITY_DEPTH: usize = 14;
const FIDELITY_BOUND: usize = 4;
const FIDELITY_BUDGET: Duration = Duration::from_secs(30);
const GK_BUDGET: Duration = Duration::from_secs(60);
const RANDOM_TYPES: u64 = 1000;
const RANDOM_TRACES: u64 = 500;
const MAX_TRACE_LEN: usize = 8;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn load(name: &str) -> GlobalType {
    GlobalType::parse(corpus::find(name).expect("bundled").source).expect("parses")
}

fn implementable_corpus() -> Vec<(&'static str, GlobalType)> {
    corpus::ENTRIES
        .iter()
        .filter(|e| e.expected == Expected::Implementable)
        .map(|e| (e.name, GlobalType::parse(e.source).unwrap()))
        .collect()
}

fn random_type(seed: u64) -> GlobalType {
    random_global_type(&mut ChaCha8Rng::seed_from_u64(seed), &RandomTypeConfig::default())
}

fn verdict_parity() -> Outcome {
    let start = Instant::now();
    let mut matched = 0;
    for (name, expected) in TABLE_ROWS {
        let verdict = check_implementability(&load(name)).map_err(|e| format!("{name}: {e}"))?;
        let got = verdict.violation.map(|v| v.kind);
        if got != expected {
            return Err(format!("{name}: expected {expected:?}, got {got:?}"));
        }
        matched += 1;
    }
    let elapsed = start.elapsed();
    if elapsed > VERDICT_BUDGET {
        return Err(format!(
            "{matched}/7 verdicts match but took {elapsed:?} (budget {VERDICT_BUDGET:?})"
        ));
    }
    Ok(format!(
        "{matched}/7 verdicts match in {:.2} ms",
        elapsed.as_secs_f64() * 1e3
    ))
}

fn size_parity() -> Outcome {
    let mut parts = Vec::new();
    for (name, expected) in [("G_r", 12), ("G'_r", 16), ("G_s", 8)] {
        let size = load(name).measure_size();
        if size != expected {
            return Err(format!("{name}: size {size}, expected {expected}"));
        }
        parts.push(format!("{name}={size}"));
    }
    let first = load("G'_s").measure_size();
    let again = GlobalType::parse(&load("G'_s").pretty()).unwrap().measure_size();
    if first != again {
        return Err(format!("G'_s size is unstable: {first} vs {again}"));
    }
    Ok(format!("{} exact; G'_s={first} (not compared)", parts.join(", ")))
}

fn counterexample_validity() -> Outcome {
    let mut parts = Vec::new();
    for name in ["G_r", "G_s"] {
        let g = load(name);
        let verdict = check_implementability(&g).map_err(|e| e.to_string())?;
        let trace = verdict.counterexample.ok_or(format!("{name}: no counterexample"))?;
        let text = format_trace(&trace);
        let csm = Csm::new(verdict.machines);
        let mut cfg = csm.initial();
        for (i, e) in trace.iter().enumerate() {
            cfg = subproj_core::csm::csm_step(&csm, &cfg, e)
                .map_err(|err| format!("{name}: {text} blocks at {i}: {err:?}"))?;
        }
        if intersection_witness(&g, &trace).is_some() {
            return Err(format!("{name}: {text} has a consistent global run"));
        }
        if name == "G_s" && text != "p>q!o.q<p?o.r>q!m" {
            return Err(format!("G_s: got {text}"));
        }
        parts.push(format!("{name}: {text}"));
    }
    Ok(parts.join("; "))
}

fn bounded_soundness() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for (name, g) in implementable_corpus() {
        let csm = Csm::from_global_type(&g);
        let report = bounded_fidelity_check_with(&g, &csm, FIDELITY_DEPTH, FIDELITY_BOUND);
        if let Some(f) = report.failure {
            return Err(format!("{name}: {} fails on {}", f.obligation, format_trace(&f.trace)));
        }
        parts.push(format!("{name} ({} traces)", report.checked_traces));
    }
    let elapsed = start.elapsed();
    if elapsed > FIDELITY_BUDGET {
        return Err(format!("passed but took {elapsed:?}"));
    }
    Ok(format!(
        "{} protocols at depth {FIDELITY_DEPTH}, bound {FIDELITY_BOUND} in {:.2} s: {}",
        parts.len(),
        elapsed.as_secs_f64(),
        parts.join(", ")
    ))
}

fn exponential_family() -> Outcome {
    let mut sizes = Vec::new();
    let mut k8 = Duration::ZERO;
    for k in 1..=8 {
        let start = Instant::now();
        let g = generate_gk(k);
        if !validate_well_formedness(&g).is_well_formed() {
            return Err(format!("G_{k} is not well-formed"));
        }
        if !check_implementability(&g).map_err(|e| e.to_string())?.implementable {
            return Err(format!("G_{k} is not implementable"));
        }
        let states = subset_construction(&g, &Role::new("q")).len();
        if states < 1 << k {
            return Err(format!("G_{k}: {states} states for q, expected at least {}", 1 << k));
        }
        if k == 8 {
            k8 = start.elapsed();
        }
        sizes.push(states.to_string());
    }
    if k8 > GK_BUDGET {
        return Err(format!("k=8 took {k8:?}"));
    }
    Ok(format!(
        "states of q for k=1..8: {}; k=8 in {:.1} ms",
        sizes.join(", "),
        k8.as_secs_f64() * 1e3
    ))
}

fn walk(csm: &Csm, rng: &mut ChaCha8Rng, len: usize) -> Vec<AsyncEvent> {
    let mut cfg = csm.initial();
    let mut trace = Vec::new();
    while trace.len() < len {
        let enabled = csm.enabled(&cfg);
        if enabled.is_empty() {
            break;
        }
        let (e, next) = enabled[rng.gen_range(0..enabled.len())].clone();
        trace.push(e);
        cfg = next;
    }
    trace
}

fn property_suites() -> Outcome {
    // (a) no mixed choice in implementable protocols
    let mut mixed_checked = 0;
    for (name, g) in implementable_corpus() {
        for m in check_implementability(&g).unwrap().machines {
            if !check_no_mixed_choice(&m) {
                return Err(format!("(a) {name}: mixed choice for {}", m.role()));
            }
            mixed_checked += 1;
        }
    }

    // (b) available messages never belong to a blocked role
    let mut queries = 0;
    for seed in 0..RANDOM_TYPES {
        let g = random_type(seed);
        if g.measure_size() > 30 {
            return Err(format!("(b) random type {seed} has size {}", g.measure_size()));
        }
        for id in g.ids() {
            for role in g.roles() {
                let q = AvailableMessageQuery::new(id, [role.clone()]);
                let result = available_messages(&g, &q).map_err(|e| e.to_string())?;
                if let Some(e) = result.events.keys().find(|e| e.active == role) {
                    return Err(format!("(b) {e} available with {role} blocked in {g}"));
                }
                queries += 1;
            }
        }
    }

    // (c) monotonicity and invariance under reordering
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut reordered = 0;
    for seed in 0..RANDOM_TRACES {
        let g = random_type(seed);
        let oracle = IntersectionOracle::new(&g);
        let len = rng.gen_range(1..=MAX_TRACE_LEN);
        let w = walk(&Csm::from_global_type(&g), &mut rng, len);
        for i in 1..=w.len() {
            if oracle.witness(&w[..i - 1]).is_none() && oracle.witness(&w[..i]).is_some() {
                return Err(format!("(c) intersection grew on {}", format_trace(&w[..i])));
            }
        }
        let mut v = w.clone();
        for _ in 0..2 * w.len() {
            if v.len() < 2 {
                break;
            }
            let i = rng.gen_range(0..v.len() - 1);
            let mut next = v.clone();
            next.swap(i, i + 1);
            if indistinguishable_finite(&w, &next, DEFAULT_SWAP_BUDGET) == Ok(true) {
                v = next;
            }
        }
        if v != w {
            reordered += 1;
            if oracle.witness(&w).is_none() != oracle.witness(&v).is_none() {
                return Err(format!("(c) {} and {} disagree", format_trace(&w), format_trace(&v)));
            }
        }
    }

    // (d) subset constructions accept exactly the projected global language
    let mut languages = 0;
    for entry in corpus::ENTRIES {
        let g = GlobalType::parse(entry.source).unwrap();
        for role in g.roles() {
            if !bounded_local_language_check(&g, &role, 10) {
                return Err(format!("(d) {} differs for {role}", entry.name));
            }
            languages += 1;
        }
    }

    // (e) explored traces respect FIFO channels
    let mut traces = 0;
    let options = ExploreOptions {
        channel_bound: FIDELITY_BOUND,
        depth: 10,
        retain_traces: true,
    };
    for entry in corpus::ENTRIES {
        let g = GlobalType::parse(entry.source).unwrap();
        let report = Csm::from_global_type(&g).explore_with(&options);
        for t in report.trace_prefixes.unwrap_or_default() {
            if !check_channel_compliance(&t) {
                return Err(format!("(e) {}: {}", entry.name, format_trace(&t)));
            }
            traces += 1;
        }
    }

    Ok(format!(
        "(a) {mixed_checked} machines, (b) {queries} queries on {RANDOM_TYPES} types, \
         (c) {RANDOM_TRACES} traces ({reordered} reordered), (d) {languages} role languages, (e) {traces} traces"
    ))
}

fn strip_timings(output: &[u8]) -> Result<String, String> {
    let mut value: serde_json::Value = serde_json::from_slice(output).map_err(|e| e.to_string())?;
    let object = value.as_object_mut().ok_or("bench output is not an object")?;
    object.remove("timings").ok_or("no timings key")?;
    let keys: BTreeSet<&String> = object.keys().collect();
    if keys.iter().any(|k| k.contains("ms")) {
        return Err("timing fields outside the timings key".into());
    }
    Ok(serde_json::to_string(&value).unwrap())
}

fn determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_subproj"))
            .args(["bench", "--format", "json"])
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    if !a.status.success() || !b.status.success() {
        return Err(format!("bench exited with {} and {}", a.status, b.status));
    }
    let (sa, sb) = (strip_timings(&a.stdout)?, strip_timings(&b.stdout)?);
    if sa != sb {
        return Err("outputs differ outside the timings key".into());
    }
    // the raw bytes must also agree once the timings block is cut out
    let cut = |bytes: &[u8]| {
        let s = String::from_utf8_lossy(bytes).into_owned();
        s.split("\"timings\"").next().unwrap().to_string()
    };
    if cut(&a.stdout) != cut(&b.stdout) {
        return Err("byte difference before the timings key".into());
    }
    Ok(format!("{} bytes identical after stripping timings", sa.len()))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("verdict parity", verdict_parity),
        ("size parity", size_parity),
        ("counterexample validity", counterexample_validity),
        ("bounded soundness", bounded_soundness),
        ("exponential family", exponential_family),
        ("property suites", property_suites),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
