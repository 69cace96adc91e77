//! JSON shapes emitted by the commands. Field order is fixed by the struct
//! definitions, so output is byte-stable for a given input.

use serde::Serialize;
use subproj_core::automata::format_trace;
use subproj_core::csm::Deadlock;
use subproj_core::validity::ViolationDetails;
use subproj_core::{Csm, GlobalType, SubsetMachine, ValidityViolation, Verdict};

pub const SCHEMA: u32 = 1;

#[derive(Serialize)]
pub struct Protocol {
    pub name: String,
    pub size: usize,
    pub roles: Vec<String>,
}

impl Protocol {
    pub fn new(name: &str, g: &GlobalType) -> Self {
        Protocol {
            name: name.to_string(),
            size: g.measure_size(),
            roles: g.roles().iter().map(|r| r.to_string()).collect(),
        }
    }
}

#[derive(Serialize)]
pub struct ViolationJson {
    pub kind: String,
    pub role: String,
    pub state: usize,
    pub subset: Vec<usize>,
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub competing: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub available: Option<String>,
    /// Subterms missing the send, or the continuation offering the message.
    pub subterms: Vec<usize>,
    pub description: String,
}

impl From<&ValidityViolation> for ViolationJson {
    fn from(v: &ValidityViolation) -> Self {
        let (label, competing, available, subterms) = match &v.details {
            ViolationDetails::Send { label, missing, .. } => (
                label.to_string(),
                None,
                None,
                missing.iter().map(|n| n.index()).collect(),
            ),
            ViolationDetails::Receive {
                committed,
                alternative,
                continuation,
                available,
                ..
            } => (
                committed.to_string(),
                Some(alternative.to_string()),
                Some(available.to_string()),
                vec![continuation.index()],
            ),
        };
        ViolationJson {
            kind: v.kind.to_string(),
            role: v.role.to_string(),
            state: v.state,
            subset: v.subset.members().iter().map(|n| n.index()).collect(),
            label,
            competing,
            available,
            subterms,
            description: v.to_string(),
        }
    }
}

#[derive(Serialize)]
pub struct VerdictJson {
    pub implementable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<ViolationJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violations: Option<Vec<ViolationJson>>,
}

impl VerdictJson {
    pub fn new(v: &Verdict, all: bool) -> Self {
        VerdictJson {
            implementable: v.implementable,
            violation: v.violation.as_ref().map(ViolationJson::from),
            counterexample: v.counterexample_text(),
            violations: all.then(|| v.all_violations.iter().map(ViolationJson::from).collect()),
        }
    }
}

#[derive(Serialize)]
pub struct TransitionJson {
    pub source: usize,
    pub label: String,
    pub target: usize,
}

#[derive(Serialize)]
pub struct MachineJson {
    pub role: String,
    /// Member subterm ids of each state, indexed by state.
    pub states: Vec<Vec<usize>>,
    pub transitions: Vec<TransitionJson>,
    pub final_states: Vec<usize>,
}

impl From<&SubsetMachine> for MachineJson {
    fn from(m: &SubsetMachine) -> Self {
        MachineJson {
            role: m.role().to_string(),
            states: m
                .states()
                .iter()
                .map(|s| s.members().iter().map(|n| n.index()).collect())
                .collect(),
            transitions: m
                .transitions()
                .map(|(source, e, target)| TransitionJson {
                    source,
                    label: e.to_string(),
                    target,
                })
                .collect(),
            final_states: m.final_states().collect(),
        }
    }
}

#[derive(Serialize, Default)]
pub struct Timings {
    pub parse_ms: f64,
    pub project_ms: f64,
    pub check_ms: f64,
}

#[derive(Serialize)]
pub struct CheckReport {
    pub schema: u32,
    pub protocol: Protocol,
    pub verdict: VerdictJson,
    pub projections: Vec<MachineJson>,
    pub timings: Timings,
}

#[derive(Serialize)]
pub struct ProjectReport {
    pub schema: u32,
    pub protocol: Protocol,
    pub implementable: bool,
    pub projections: Vec<MachineJson>,
}

#[derive(Serialize)]
pub struct DeadlockJson {
    pub trace: String,
    pub configuration: String,
}

impl DeadlockJson {
    pub fn new(csm: &Csm, d: &Deadlock) -> Self {
        DeadlockJson {
            trace: format_trace(&d.trace),
            configuration: csm.describe(&d.configuration),
        }
    }
}

#[derive(Serialize)]
pub struct Exploration {
    pub channel_bound: usize,
    pub depth: usize,
    pub visited: usize,
    pub frontier_cut: bool,
    pub deadlocks: Vec<DeadlockJson>,
}

#[derive(Serialize)]
pub struct SimulateReport {
    pub schema: u32,
    pub protocol: Protocol,
    pub exploration: Exploration,
}

#[derive(Serialize)]
pub struct BenchRow {
    pub name: String,
    pub file: String,
    pub size: usize,
    pub roles: usize,
    pub expected: String,
    pub verdict: String,
    pub agrees: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
    pub projection_states: usize,
}

#[derive(Serialize)]
pub struct BenchTiming {
    pub name: String,
    #[serde(flatten)]
    pub timings: Timings,
}

#[derive(Serialize)]
pub struct BenchReport {
    pub schema: u32,
    pub protocols: Vec<BenchRow>,
    pub timings: Vec<BenchTiming>,
}

#[derive(Serialize)]
pub struct GkReport {
    pub schema: u32,
    pub protocol: Protocol,
    pub global_type: String,
}
