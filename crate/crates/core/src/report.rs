//! Run reports and their text and JSON renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{AssociativityReport, PairAmplitudes, Witness, WitnessOrigin};
use crate::regrad::{RegradStatus, TrivialityCertificate, XiTable};
use crate::scenario::{Cx, ScenarioFile, Task};
use crate::theory::{fmt_complex, WaveState};

pub const TOOLKIT_NAME: &str = "regrad";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Toolkit {
    pub name: String,
    pub version: String,
}

impl Default for Toolkit {
    fn default() -> Self {
        Toolkit {
            name: TOOLKIT_NAME.into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Pass,
    /// The check ran and its mathematical verdict is negative.
    Fail,
    Skipped,
    Error,
}

impl TaskStatus {
    pub fn label(self) -> &'static str {
        match self {
            TaskStatus::Pass => "PASS",
            TaskStatus::Fail => "FAIL",
            TaskStatus::Skipped => "SKIPPED",
            TaskStatus::Error => "ERROR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudesRecord {
    pub first: Cx,
    pub second: Cx,
    pub joint: Cx,
}

impl From<PairAmplitudes> for AmplitudesRecord {
    fn from(p: PairAmplitudes) -> Self {
        AmplitudesRecord {
            first: p.first.into(),
            second: p.second.into(),
            joint: p.joint.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub coeffs: BTreeMap<String, Cx>,
    pub phi: AmplitudesRecord,
}

impl StateRecord {
    pub fn new(state: &WaveState, phi: PairAmplitudes) -> Self {
        StateRecord {
            coeffs: state
                .coeffs
                .iter()
                .map(|(id, c)| (id.to_string(), (*c).into()))
                .collect(),
            phi: phi.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OriginRecord {
    PhaseProbe { phase: Cx },
    RandomSearch { first_index: usize, second_index: usize },
}

/// Two states that agree on every single-slit amplitude and disagree on the joint one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    /// The joined slits, in order.
    pub slits: [String; 2],
    pub tolerance: f64,
    pub origin: OriginRecord,
    pub first: StateRecord,
    pub second: StateRecord,
}

impl WitnessRecord {
    pub fn new(w: &Witness, slits: [String; 2], tolerance: f64) -> Self {
        WitnessRecord {
            slits,
            tolerance,
            origin: match w.origin {
                WitnessOrigin::PhaseProbe { phase } => OriginRecord::PhaseProbe { phase: phase.into() },
                WitnessOrigin::RandomSearch {
                    first_index,
                    second_index,
                } => OriginRecord::RandomSearch {
                    first_index,
                    second_index,
                },
            },
            first: StateRecord::new(&w.first, w.first_phi),
            second: StateRecord::new(&w.second, w.second_phi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationOutcome {
    Representation,
    NotRepresentation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationPayload {
    pub verdict: RepresentationOutcome,
    pub agreement_tolerance: f64,
    pub samples_used: usize,
    pub witness: Option<WitnessRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub x: Cx,
    pub y: Cx,
    pub z: Cx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormRecord {
    /// `sum`, `product`, `sum_plus_product` or `sum_plus_square`.
    pub key: String,
    pub formula: String,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinatorPayload {
    pub functional: bool,
    pub key_tolerance: f64,
    pub samples_used: usize,
    pub degenerate_skipped: usize,
    pub entries: Vec<EntryRecord>,
    pub closed_form: Option<ClosedFormRecord>,
    pub witness: Option<WitnessRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociativityPayload {
    /// Which S was tested.
    pub rule: String,
    /// Key of the closed form tested, if S is one.
    pub closed_form: Option<String>,
    pub grid_size: usize,
    pub tolerance: f64,
    pub max_residual: f64,
    pub max_relative_residual: f64,
    pub worst_triple: [Cx; 3],
    /// S(S(x,y),z) and S(x,S(y,z)) at the worst triple.
    pub worst_sides: [Cx; 2],
    pub passed: bool,
}

impl AssociativityPayload {
    pub fn new(rule: String, closed_form: Option<String>, r: &AssociativityReport) -> Self {
        AssociativityPayload {
            rule,
            closed_form,
            grid_size: r.grid_size,
            tolerance: r.tolerance,
            max_residual: r.max_residual,
            max_relative_residual: r.max_relative_residual,
            worst_triple: r.worst_triple.map(Cx::from),
            worst_sides: r.worst_sides.map(Cx::from),
            passed: r.passed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegradMode {
    /// ξ tabulated on a real interval from a closed-form combinator.
    Combinator,
    /// ξ at sampled amplitude values, one equation per state.
    Constraints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegradOutcome {
    Found,
    Trivial,
}

impl From<RegradStatus> for RegradOutcome {
    fn from(s: RegradStatus) -> Self {
        match s {
            RegradStatus::Found => RegradOutcome::Found,
            RegradStatus::Trivial => RegradOutcome::Trivial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XiRecord {
    Interval { knots: Vec<f64>, values: Vec<f64> },
    Points { points: Vec<Cx>, values: Vec<f64>, merge_tolerance: f64 },
}

impl From<&XiTable> for XiRecord {
    fn from(t: &XiTable) -> Self {
        match t {
            XiTable::Interval(t) => XiRecord::Interval {
                knots: t.knots().to_vec(),
                values: t.values().to_vec(),
            },
            XiTable::Points(p) => XiRecord::Points {
                points: p.points.iter().map(|&z| z.into()).collect(),
                values: p.values.clone(),
                merge_tolerance: p.merge_tol,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub constrained_residual: f64,
    pub unconstrained_sup_norm: f64,
    pub null_dim: usize,
}

impl From<TrivialityCertificate> for CertificateRecord {
    fn from(c: TrivialityCertificate) -> Self {
        CertificateRecord {
            constrained_residual: c.constrained_residual,
            unconstrained_sup_norm: c.unconstrained_sup_norm,
            null_dim: c.null_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegraduationPayload {
    pub mode: RegradMode,
    pub status: RegradOutcome,
    pub anchor: Cx,
    pub additivity_residual: f64,
    pub equation_count: usize,
    pub unknowns: usize,
    /// Distinct equations in the order they were generated (constraint mode only).
    pub equations: Vec<String>,
    pub xi: XiRecord,
    pub certificate: Option<CertificateRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditivityPayload {
    pub tolerance: f64,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
    pub worst_state: StateRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Representation(RepresentationPayload),
    Combinator(CombinatorPayload),
    Associativity(AssociativityPayload),
    Regraduation(RegraduationPayload),
    Additivity(AdditivityPayload),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEntry {
    pub task: Task,
    pub status: TaskStatus,
    pub summary: String,
    pub cause: Option<String>,
    pub payload: Option<Payload>,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub toolkit: Toolkit,
    pub headline: String,
    pub scenario: ScenarioFile,
    pub tasks: Vec<TaskEntry>,
}

pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const ERROR: i32 = 1;
    pub const NEGATIVE: i32 = 2;
}

impl Report {
    pub fn task(&self, task: Task) -> Option<&TaskEntry> {
        self.tasks.iter().find(|t| t.task == task)
    }

    /// 1 if any task errored, else 2 if any verdict is negative, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.tasks.iter().any(|t| t.status == TaskStatus::Error) {
            exit::ERROR
        } else if self.tasks.iter().any(|t| t.status == TaskStatus::Fail) {
            exit::NEGATIVE
        } else {
            exit::SUCCESS
        }
    }

    /// Every witness in the report, labelled by the task that produced it.
    pub fn witnesses(&self) -> Vec<(Task, &WitnessRecord)> {
        self.tasks
            .iter()
            .filter_map(|t| {
                let w = match t.payload.as_ref()? {
                    Payload::Representation(p) => p.witness.as_ref(),
                    Payload::Combinator(p) => p.witness.as_ref(),
                    _ => None,
                }?;
                Some((t.task, w))
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.headline);
        let title = self.scenario.name.as_deref().unwrap_or("(unnamed scenario)");
        let _ = writeln!(out, "{} {}: {}", self.toolkit.name, self.toolkit.version, title);
        for t in &self.tasks {
            let _ = writeln!(out);
            render_task(&mut out, t);
        }
        if self.tasks.is_empty() {
            let _ = writeln!(out, "\nno tasks requested");
        }
        out
    }
}

fn c(z: Cx) -> String {
    fmt_complex(Complex64::from(z))
}

fn render_state(s: &StateRecord) -> String {
    let coeffs: Vec<String> = s.coeffs.iter().map(|(k, v)| format!("{k}={}", c(*v))).collect();
    format!("({})", coeffs.join(", "))
}

fn render_witness(out: &mut String, w: &WitnessRecord) {
    let [a, b] = &w.slits;
    let origin = match &w.origin {
        OriginRecord::PhaseProbe { phase } => format!("phase probe, relative phase {}", c(*phase)),
        OriginRecord::RandomSearch {
            first_index,
            second_index,
        } => format!("random search, samples {first_index} and {second_index}"),
    };
    let _ = writeln!(out, "  witness ({origin}, tolerance {:e}):", w.tolerance);
    for s in [&w.first, &w.second] {
        let _ = writeln!(
            out,
            "    state {}: φ({a}) = {}, φ({b}) = {}, φ({a} ∨ {b}) = {}",
            render_state(s),
            c(s.phi.first),
            c(s.phi.second),
            c(s.phi.joint)
        );
    }
}

fn render_task(out: &mut String, t: &TaskEntry) {
    let _ = writeln!(out, "[{}] {}: {}", t.task, t.status.label(), t.summary);
    if let Some(cause) = &t.cause {
        let _ = writeln!(out, "  cause: {cause}");
    }
    match &t.payload {
        None => {}
        Some(Payload::Representation(p)) => {
            let _ = writeln!(
                out,
                "  samples used: {}, agreement tolerance: {:e}",
                p.samples_used, p.agreement_tolerance
            );
            if let Some(w) = &p.witness {
                render_witness(out, w);
            }
        }
        Some(Payload::Combinator(p)) => {
            let _ = writeln!(
                out,
                "  {} table entries from {} samples ({} degenerate skipped), key tolerance {:e}",
                p.entries.len(),
                p.samples_used,
                p.degenerate_skipped,
                p.key_tolerance
            );
            if let Some(f) = &p.closed_form {
                let _ = writeln!(out, "  S(x,y) = {} within {:e}", f.formula, f.max_deviation);
            }
            if let Some(w) = &p.witness {
                render_witness(out, w);
            }
        }
        Some(Payload::Associativity(p)) => {
            let [x, y, z] = p.worst_triple;
            let _ = writeln!(
                out,
                "  S = {} on {} triples: max residual {:e} (tolerance {:e})",
                p.rule, p.grid_size, p.max_residual, p.tolerance
            );
            let _ = writeln!(
                out,
                "  worst triple ({}, {}, {}): S(S(x,y),z) = {}, S(x,S(y,z)) = {}",
                c(x),
                c(y),
                c(z),
                c(p.worst_sides[0]),
                c(p.worst_sides[1])
            );
        }
        Some(Payload::Regraduation(p)) => {
            let mode = match p.mode {
                RegradMode::Combinator => "interval table",
                RegradMode::Constraints => "constraint system",
            };
            let _ = writeln!(
                out,
                "  {mode}: {} equations in {} unknowns, ξ({}) = 1, residual {:e}",
                p.equation_count,
                p.unknowns,
                c(p.anchor),
                p.additivity_residual
            );
            if !p.equations.is_empty() {
                let _ = writeln!(out, "  equations:");
                for e in &p.equations {
                    let _ = writeln!(out, "    {e}");
                }
            }
            if let Some(cert) = &p.certificate {
                let _ = writeln!(
                    out,
                    "  certificate: anchored fit residual {:e}; nearest exact solution sup-norm {:e} \
                     (solution space dimension {})",
                    cert.constrained_residual, cert.unconstrained_sup_norm, cert.null_dim
                );
            }
            match &p.xi {
                XiRecord::Interval { knots, .. } => {
                    let _ = writeln!(
                        out,
                        "  ξ tabulated at {} knots on [{}, {}]",
                        knots.len(),
                        knots[0],
                        knots[knots.len() - 1]
                    );
                }
                XiRecord::Points { points, values, .. } => {
                    let cells: Vec<String> = points
                        .iter()
                        .zip(values)
                        .map(|(p, v)| format!("ξ({}) = {}", c(*p), v))
                        .collect();
                    let _ = writeln!(out, "  {}", cells.join(", "));
                }
            }
        }
        Some(Payload::Additivity(p)) => {
            let _ = writeln!(
                out,
                "  {} held-out states: max residual {:e}, mean {:e} (tolerance {:e})",
                p.count, p.max, p.mean, p.tolerance
            );
            let _ = writeln!(out, "  worst state {}", render_state(&p.worst_state));
        }
    }
}
