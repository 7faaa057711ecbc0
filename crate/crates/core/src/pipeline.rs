//! Runs the tasks of a scenario in order and collects the report.

use std::time::Instant;

use num_complex::Complex64;

use crate::analysis::{
    check_associativity, check_representation, fit_combinator, grid_triples, identify_closed_form,
    AnalysisError, ClosedForm, Combinator, CombinatorTable, PairAmplitudes, RepresentationStatus, SlitPair,
    WitnessOrigin,
};
use crate::regrad::{
    build_constraints, regraduate_combinator, solve_constraints, verify_additivity, CombinatorOptions,
    RegradError, RegradStatus, RegraduationResult, SolveOptions,
};
use crate::report::{
    AdditivityPayload, AssociativityPayload, ClosedFormRecord, CombinatorPayload, EntryRecord, Payload,
    RegradMode, RegraduationPayload, Report, RepresentationOutcome, RepresentationPayload, StateRecord,
    TaskEntry, TaskStatus, Timing, Toolkit, WitnessRecord,
};
use crate::sampling::{lane, sample_batch, sample_values, Sampler};
use crate::scenario::{Scenario, Task};
use crate::theory::{fmt_complex, phi, Theory, TheoryError, WaveState};

/// Largest number of distinct grid values whose full cube is used as the associativity grid.
const MAX_CUBE_VALUES: usize = 24;

/// Identification tolerance for closed forms, relative to the key tolerance.
const CLOSED_FORM_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum RepState {
    Holds,
    /// Refuted; the relative phase that exposed it.
    Refuted(Complex64),
    Unknown,
}

struct Outcome {
    status: TaskStatus,
    summary: String,
    cause: Option<String>,
    payload: Option<Payload>,
}

impl Outcome {
    fn skipped(cause: impl Into<String>) -> Self {
        Outcome {
            status: TaskStatus::Skipped,
            summary: "not run".into(),
            cause: Some(cause.into()),
            payload: None,
        }
    }

    fn error(summary: &str, err: impl std::fmt::Display) -> Self {
        Outcome {
            status: TaskStatus::Error,
            summary: summary.into(),
            cause: Some(err.to_string()),
            payload: None,
        }
    }
}

struct Run<'a> {
    sc: &'a Scenario,
    pair: SlitPair,
    rep: RepState,
    table: Option<CombinatorTable>,
    closed_form: Option<ClosedForm>,
    associativity: Option<TaskStatus>,
    regrad: Option<RegraduationResult>,
}

impl<'a> Run<'a> {
    fn labels(&self) -> [String; 2] {
        [self.pair.first.to_string(), self.pair.second.to_string()]
    }

    fn representation(&mut self) -> Outcome {
        let sc = self.sc;
        let tol = sc.tolerances.representation;
        let verdict = match check_representation(
            &sc.theory,
            &self.pair,
            &sc.sampler,
            sc.seed,
            sc.samples.representation,
            tol,
        ) {
            Ok(v) => v,
            Err(e) => return Outcome::error("representation check failed to run", e),
        };
        let witness = verdict.witness.as_ref();
        let (status, summary) = match verdict.status {
            RepresentationStatus::Representation => {
                self.rep = RepState::Holds;
                (
                    TaskStatus::Pass,
                    format!(
                        "no witness among {} states; φ(a ∨ a') behaves as a function of φ(a), φ(a') (sampling verdict)",
                        verdict.samples_used
                    ),
                )
            }
            RepresentationStatus::NotRepresentation => {
                let w = witness.expect("a refutation carries its witness");
                self.rep = RepState::Refuted(match w.origin {
                    WitnessOrigin::PhaseProbe { phase } => phase,
                    WitnessOrigin::RandomSearch { .. } => Complex64::new(-1.0, 0.0),
                });
                (TaskStatus::Fail, format!("not a representation: {w}"))
            }
        };
        Outcome {
            status,
            summary,
            cause: None,
            payload: Some(Payload::Representation(RepresentationPayload {
                verdict: match verdict.status {
                    RepresentationStatus::Representation => RepresentationOutcome::Representation,
                    RepresentationStatus::NotRepresentation => RepresentationOutcome::NotRepresentation,
                },
                agreement_tolerance: verdict.agreement_tolerance,
                samples_used: verdict.samples_used,
                witness: witness.map(|w| WitnessRecord::new(w, self.labels(), tol)),
            })),
        }
    }

    fn combinator(&mut self) -> Outcome {
        match self.rep {
            RepState::Holds => {}
            RepState::Refuted(_) => {
                return Outcome::skipped("the amplitudes are not a representation, so no S exists")
            }
            RepState::Unknown => return Outcome::skipped("the representation check did not complete"),
        }
        let sc = self.sc;
        let key_tol = sc.tolerances.combinator;
        match fit_combinator(
            &sc.theory,
            &self.pair,
            &sc.sampler,
            sc.seed,
            sc.samples.combinator,
            key_tol,
        ) {
            Ok(fit) => {
                let form = identify_closed_form(&fit.table, CLOSED_FORM_FACTOR * key_tol);
                self.closed_form = form.map(|(f, _)| f);
                let summary = match form {
                    Some((f, _)) => format!("functional table of {} entries; S(x,y) = {}", fit.table.len(), f.formula()),
                    None => format!("functional table of {} entries; no built-in closed form matches", fit.table.len()),
                };
                let payload = CombinatorPayload {
                    functional: true,
                    key_tolerance: key_tol,
                    samples_used: fit.samples_used,
                    degenerate_skipped: fit.degenerate_skipped,
                    entries: fit
                        .table
                        .entries()
                        .iter()
                        .map(|e| EntryRecord {
                            x: e.x.into(),
                            y: e.y.into(),
                            z: e.z.into(),
                        })
                        .collect(),
                    closed_form: form.map(|(f, dev)| ClosedFormRecord {
                        key: f.key().into(),
                        formula: f.formula().into(),
                        max_deviation: dev,
                    }),
                    witness: None,
                };
                self.table = Some(fit.table);
                Outcome {
                    status: TaskStatus::Pass,
                    summary,
                    cause: None,
                    payload: Some(Payload::Combinator(payload)),
                }
            }
            Err(AnalysisError::NonFunctional(w)) => {
                self.rep = RepState::Refuted(match w.origin {
                    WitnessOrigin::PhaseProbe { phase } => phase,
                    WitnessOrigin::RandomSearch { .. } => Complex64::new(-1.0, 0.0),
                });
                Outcome {
                    status: TaskStatus::Fail,
                    summary: format!("not functional: {w}"),
                    cause: None,
                    payload: Some(Payload::Combinator(CombinatorPayload {
                        functional: false,
                        key_tolerance: key_tol,
                        samples_used: 0,
                        degenerate_skipped: 0,
                        entries: Vec::new(),
                        closed_form: None,
                        witness: Some(WitnessRecord::new(&w, self.labels(), key_tol)),
                    })),
                }
            }
            Err(e) => Outcome::error("combinator fit failed to run", e),
        }
    }

    /// Triples of amplitudes the theory actually produces.
    fn associativity_grid(&self) -> Result<Vec<[Complex64; 3]>, AnalysisError> {
        let sc = self.sc;
        if let (Sampler::Grid { .. }, Some(table)) = (&sc.sampler, &self.table) {
            let mut values: Vec<Complex64> = Vec::new();
            for e in table.entries() {
                for v in [e.x, e.y] {
                    if !values.contains(&v) {
                        values.push(v);
                    }
                }
            }
            values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
            if values.len() <= MAX_CUBE_VALUES {
                return Ok(grid_triples(&values));
            }
        }
        let n = sc.samples.associativity;
        let coeffs = sample_values(sc.seed, lane::ASSOCIATIVITY, &sc.sampler, 3 * n)?;
        let first = self.pair.first_only();
        let amps = coeffs
            .iter()
            .map(|&v| phi(&sc.theory, &self.pair.state(v, Complex64::new(0.0, 0.0)), &first))
            .collect::<Result<Vec<_>, TheoryError>>()?;
        Ok(amps.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
    }

    fn associativity(&mut self) -> Outcome {
        let Some(table) = &self.table else {
            return Outcome::skipped("no combinator table is available");
        };
        let grid = match self.associativity_grid() {
            Ok(g) => g,
            Err(e) => return Outcome::error("could not build the associativity grid", e),
        };
        let tol = self.sc.tolerances.associativity;
        let (rule, key, report) = match self.closed_form {
            Some(f) => (f.formula().to_string(), Some(f.key().to_string()), check_associativity(&f, &grid, tol)),
            None => (table.describe(), None, check_associativity(table, &grid, tol)),
        };
        let report = match report {
            Ok(r) => r,
            Err(e) => return Outcome::error("associativity check failed to run", e),
        };
        let status = if report.passed { TaskStatus::Pass } else { TaskStatus::Fail };
        self.associativity = Some(status);
        let [x, y, z] = report.worst_triple;
        let summary = if report.passed {
            format!("S = {rule} is associative on {} triples (max residual {:e})", report.grid_size, report.max_residual)
        } else {
            format!(
                "S = {rule} is not associative: residual {:e} at ({}, {}, {})",
                report.max_residual,
                fmt_complex(x),
                fmt_complex(y),
                fmt_complex(z)
            )
        };
        Outcome {
            status,
            summary,
            cause: None,
            payload: Some(Payload::Associativity(AssociativityPayload::new(rule, key, &report))),
        }
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.sc.tolerances.regraduation,
            triviality: self.sc.tolerances.triviality,
        }
    }

    /// Constraint-mode regraduation over `states`, anchored at `anchor`.
    fn constraint_mode(&mut self, states: &[WaveState], anchor: Complex64) -> Outcome {
        let sc = self.sc;
        let cs = match build_constraints(&sc.theory, states, &self.pair, sc.tolerances.merge) {
            Ok(cs) => cs,
            Err(e) => return Outcome::error("could not build the constraint system", e),
        };
        let mut equations: Vec<String> = Vec::new();
        for eq in &cs.equations {
            let s = cs.render_equation(eq);
            if !equations.contains(&s) {
                equations.push(s);
            }
        }
        match solve_constraints(&cs, anchor, self.solve_options()) {
            Ok(result) => {
                let payload = RegraduationPayload {
                    mode: RegradMode::Constraints,
                    status: result.status.into(),
                    anchor: result.anchor.into(),
                    additivity_residual: result.additivity_residual,
                    equation_count: result.equations,
                    unknowns: result.unknowns,
                    equations,
                    xi: (&result.xi).into(),
                    certificate: result.certificate.map(Into::into),
                };
                let (status, summary) = match result.status {
                    RegradStatus::Found => (
                        TaskStatus::Pass,
                        format!("ξ found at {} points (residual {:e})", result.unknowns, result.additivity_residual),
                    ),
                    RegradStatus::Trivial => (
                        TaskStatus::Fail,
                        format!(
                            "only ξ = 0 satisfies the {} equations (anchored residual {:e})",
                            result.equations, result.additivity_residual
                        ),
                    ),
                };
                self.regrad = Some(result);
                Outcome {
                    status,
                    summary,
                    cause: None,
                    payload: Some(Payload::Regraduation(payload)),
                }
            }
            Err(e) => Outcome::error("constraint system did not settle", e),
        }
    }

    /// The states `(α, α)` and `(α, ζα)` over the α grid, dropping any the theory cannot evaluate.
    fn phase_family(&self, zeta: Complex64) -> Result<(Vec<WaveState>, Complex64), RegradError> {
        let sc = self.sc;
        let alphas: Vec<Complex64> = match &sc.sampler {
            Sampler::Grid { points } if matches!(sc.theory, Theory::UserTable(_)) => {
                points.iter().copied().filter(|p| p.norm() > 0.0).collect()
            }
            _ => sc.regraduation.alpha_grid.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
        };
        let mut states = Vec::new();
        let mut anchor: Option<(f64, Complex64)> = None;
        for &alpha in &alphas {
            for s in [self.pair.state(alpha, alpha), self.pair.state(alpha, zeta * alpha)] {
                match PairAmplitudes::evaluate(&sc.theory, &s, &self.pair) {
                    Ok(p) => {
                        let distance = (alpha - 1.0).norm();
                        if p.first.norm() > 0.0 && anchor.is_none_or(|(d, _)| distance < d) {
                            anchor = Some((distance, p.first));
                        }
                        states.push(s);
                    }
                    Err(TheoryError::TableMiss(_)) => {}
                    Err(e) => return Err(e.into()),
                }
            }
        }
        let anchor = anchor.ok_or(RegradError::NoStates)?.1;
        Ok((states, sc.regraduation.anchor.map_or(anchor, |a| Complex64::new(a, 0.0))))
    }

    fn combinator_mode(&mut self, form: ClosedForm, table: &CombinatorTable) -> Outcome {
        let sc = self.sc;
        let domain = sc.regraduation.domain.unwrap_or_else(|| {
            table
                .entries()
                .iter()
                .flat_map(|e| [e.x.re, e.y.re, e.z.re])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)))
        });
        let opts = CombinatorOptions {
            anchor: sc.regraduation.anchor,
            tol: sc.tolerances.regraduation,
        };
        match regraduate_combinator(&form, domain, sc.regraduation.grid_size, opts) {
            Ok(result) => {
                let summary = format!(
                    "ξ found for S = {} on [{}, {}] ({} knots, residual {:e})",
                    form.formula(),
                    domain.0,
                    domain.1,
                    result.unknowns,
                    result.additivity_residual
                );
                let payload = RegraduationPayload {
                    mode: RegradMode::Combinator,
                    status: result.status.into(),
                    anchor: result.anchor.into(),
                    additivity_residual: result.additivity_residual,
                    equation_count: result.equations,
                    unknowns: result.unknowns,
                    equations: Vec::new(),
                    xi: (&result.xi).into(),
                    certificate: None,
                };
                self.regrad = Some(result);
                Outcome {
                    status: TaskStatus::Pass,
                    summary,
                    cause: None,
                    payload: Some(Payload::Regraduation(payload)),
                }
            }
            Err(e @ RegradError::NotAssociative { .. }) => Outcome {
                status: TaskStatus::Fail,
                summary: "no additive ξ: S is not associative on the interval".into(),
                cause: Some(e.to_string()),
                payload: None,
            },
            Err(e) => Outcome::error("interval regraduation failed", e),
        }
    }

    fn regraduation(&mut self) -> Outcome {
        match self.associativity {
            Some(TaskStatus::Fail) => {
                return Outcome::skipped("S is not associative, so no additive ξ exists")
            }
            Some(TaskStatus::Error) => return Outcome::skipped("the associativity check did not complete"),
            _ => {}
        }
        let sc = self.sc;
        match self.rep {
            RepState::Unknown => Outcome::skipped("the representation check did not complete"),
            RepState::Refuted(zeta) => match self.phase_family(zeta) {
                Ok((states, anchor)) => self.constraint_mode(&states, anchor),
                Err(e) => Outcome::error("could not build the sign-flip states", e),
            },
            RepState::Holds => {
                if let (Some(form), Some(table), true) = (self.closed_form, self.table.clone(), sc.sampler.is_real()) {
                    return self.combinator_mode(form, &table);
                }
                let ids = self.pair.ids();
                let states = match sample_batch(sc.seed, lane::REGRADUATION, &ids, &sc.sampler, sc.samples.regraduation) {
                    Ok(s) => s,
                    Err(e) => return Outcome::error("could not sample states", e),
                };
                let anchor = match sc.regraduation.anchor {
                    Some(a) => Ok(Complex64::new(a, 0.0)),
                    None => first_nonzero_single(&sc.theory, &states, &self.pair),
                };
                match anchor {
                    Ok(a) => self.constraint_mode(&states, a),
                    Err(e) => Outcome::error("could not choose an anchor", e),
                }
            }
        }
    }

    fn additivity(&mut self) -> Outcome {
        let Some(result) = &self.regrad else {
            return Outcome::skipped("no regraduation result is available");
        };
        if result.status == RegradStatus::Trivial {
            return Outcome::skipped("the only regraduation is ξ = 0; there is nothing to verify");
        }
        let sc = self.sc;
        let states = match sample_batch(sc.seed, lane::ADDITIVITY, &self.pair.ids(), &sc.sampler, sc.samples.additivity) {
            Ok(s) => s,
            Err(e) => return Outcome::error("could not sample states", e),
        };
        let stats = match verify_additivity(&result.xi, &sc.theory, &states, &self.pair) {
            Ok(s) => s,
            Err(e) => return Outcome::error("additivity check failed to run", e),
        };
        let worst = &states[stats.worst];
        let worst_phi = match PairAmplitudes::evaluate(&sc.theory, worst, &self.pair) {
            Ok(p) => p,
            Err(e) => return Outcome::error("could not re-evaluate the worst state", e),
        };
        let tol = sc.tolerances.additivity;
        let passed = stats.max <= tol;
        Outcome {
            status: if passed { TaskStatus::Pass } else { TaskStatus::Fail },
            summary: format!(
                "ξ is {} on {} held-out states (max residual {:e}, tolerance {:e})",
                if passed { "additive" } else { "not additive" },
                stats.count,
                stats.max,
                tol
            ),
            cause: None,
            payload: Some(Payload::Additivity(AdditivityPayload {
                tolerance: tol,
                max: stats.max,
                mean: stats.mean,
                count: stats.count,
                worst_state: StateRecord::new(worst, worst_phi),
            })),
        }
    }
}

fn first_nonzero_single(theory: &Theory, states: &[WaveState], pair: &SlitPair) -> Result<Complex64, RegradError> {
    for s in states {
        let v = phi(theory, s, &pair.first_only())?;
        if v.norm() > 0.0 {
            return Ok(v);
        }
    }
    Err(RegradError::NoStates)
}

fn headline(entries: &[TaskEntry]) -> String {
    let get = |t: Task| entries.iter().find(|e| e.task == t);
    let mut parts: Vec<String> = Vec::new();
    if let Some(e) = get(Task::Representation) {
        parts.push(
            match e.status {
                TaskStatus::Pass => "REPRESENTATION",
                TaskStatus::Fail => "NOT A REPRESENTATION",
                _ => "representation ERROR",
            }
            .into(),
        );
    }
    if let Some(e) = get(Task::Combinator) {
        let formula = match &e.payload {
            Some(Payload::Combinator(p)) => p.closed_form.as_ref().map(|f| f.formula.clone()),
            _ => None,
        };
        let s = match formula {
            Some(f) => format!("S ≈ {f}"),
            None => "S tabulated".into(),
        };
        match (e.status, get(Task::Associativity).map(|a| a.status)) {
            (TaskStatus::Pass, Some(TaskStatus::Pass)) => parts.push(format!("{s} associative")),
            (TaskStatus::Pass, Some(TaskStatus::Fail)) => parts.push(format!("{s} NOT ASSOCIATIVE")),
            (TaskStatus::Pass, Some(TaskStatus::Error)) => parts.push(format!("{s}; associativity ERROR")),
            (TaskStatus::Pass, _) => parts.push(s),
            (TaskStatus::Fail, _) => parts.push("S NOT FUNCTIONAL".into()),
            (TaskStatus::Error, _) => parts.push("combinator ERROR".into()),
            (TaskStatus::Skipped, _) => {}
        }
    }
    if let Some(e) = get(Task::Regraduation) {
        let trivial = matches!(&e.payload, Some(Payload::Regraduation(p)) if p.certificate.is_some());
        match e.status {
            TaskStatus::Pass => parts.push("ξ found".into()),
            TaskStatus::Fail if trivial => parts.push("regraduation TRIVIAL (ξ = 0)".into()),
            TaskStatus::Fail => parts.push("no ξ".into()),
            TaskStatus::Error => parts.push("regraduation ERROR".into()),
            TaskStatus::Skipped => {}
        }
    }
    if let Some(e) = get(Task::Additivity) {
        match e.status {
            TaskStatus::Fail => parts.push("additivity FAIL".into()),
            TaskStatus::Error => parts.push("additivity ERROR".into()),
            _ => {}
        }
    }
    if parts.is_empty() {
        "NO TASKS".into()
    } else {
        parts.join("; ")
    }
}

/// Executes every task of `scenario`. Task failures are recorded in the
/// report; they never stop the remaining tasks.
pub fn run(scenario: &Scenario) -> Report {
    let pair = SlitPair::new(scenario.slits[0].clone(), scenario.slits[1].clone())
        .expect("scenario slits are distinct");
    let mut ctx = Run {
        sc: scenario,
        pair,
        rep: RepState::Unknown,
        table: None,
        closed_form: None,
        associativity: None,
        regrad: None,
    };
    let mut tasks = Vec::with_capacity(scenario.tasks.len());
    for &task in &scenario.tasks {
        let start = Instant::now();
        let out = match task {
            Task::Representation => ctx.representation(),
            Task::Combinator => ctx.combinator(),
            Task::Associativity => ctx.associativity(),
            Task::Regraduation => ctx.regraduation(),
            Task::Additivity => ctx.additivity(),
        };
        tasks.push(TaskEntry {
            task,
            status: out.status,
            summary: out.summary,
            cause: out.cause,
            payload: out.payload,
            timing: Timing {
                elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            },
        });
    }
    Report {
        toolkit: Toolkit::default(),
        headline: headline(&tasks),
        scenario: scenario.to_file(),
        tasks,
    }
}
