//! Scenario files: which theory to examine, how to sample it, and which checks to run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::sampling::Sampler;
use crate::setup::{Configuration, SlitId};
use crate::theory::{TableEntry, Theory, UserTable};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error in `{field}`: {reason}")]
    Schema { field: String, reason: String },
    #[error("task `{task}` requires `{missing}` to run before it")]
    Dependency { task: String, missing: String },
}

fn schema(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema {
        field: field.into(),
        reason: reason.into(),
    }
}

/// A complex number on the wire: `{"re": .., "im": ..}`. A bare number is
/// accepted on input as a real value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

impl<'de> Deserialize<'de> for Cx {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Real(f64),
            Pair {
                re: f64,
                #[serde(default)]
                im: f64,
            },
        }
        Ok(match Wire::deserialize(d)? {
            Wire::Real(re) => Cx { re, im: 0.0 },
            Wire::Pair { re, im } => Cx { re, im },
        })
    }
}

impl From<Complex64> for Cx {
    fn from(z: Complex64) -> Self {
        Cx { re: z.re, im: z.im }
    }
}

impl From<Cx> for Complex64 {
    fn from(z: Cx) -> Self {
        Complex64::new(z.re, z.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntrySpec {
    pub coeffs: BTreeMap<String, Cx>,
    pub open: Vec<String>,
    pub value: Cx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TheorySpec {
    Linear,
    Quadratic,
    Power { p: u32 },
    UserTable { table: Vec<TableEntrySpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerSpec {
    ComplexGaussian {
        #[serde(default)]
        seed: Option<u64>,
        sigma: f64,
    },
    RealUniform {
        #[serde(default)]
        seed: Option<u64>,
        lo: f64,
        hi: f64,
    },
    Grid {
        #[serde(default)]
        seed: Option<u64>,
        points: Vec<Cx>,
    },
}

impl SamplerSpec {
    pub fn set_seed(&mut self, value: u64) {
        match self {
            SamplerSpec::ComplexGaussian { seed, .. }
            | SamplerSpec::RealUniform { seed, .. }
            | SamplerSpec::Grid { seed, .. } => *seed = Some(value),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            SamplerSpec::ComplexGaussian { seed, .. }
            | SamplerSpec::RealUniform { seed, .. }
            | SamplerSpec::Grid { seed, .. } => *seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegraduationSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<f64>,
}

/// The scenario file as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub slits: Vec<String>,
    pub theory: TheorySpec,
    pub sampler: SamplerSpec,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub samples: BTreeMap<String, usize>,
    #[serde(default)]
    pub regraduation: RegraduationSpec,
    pub tasks: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Representation,
    Combinator,
    Associativity,
    Regraduation,
    Additivity,
}

impl Task {
    pub const ALL: [Task; 5] = [
        Task::Representation,
        Task::Combinator,
        Task::Associativity,
        Task::Regraduation,
        Task::Additivity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Representation => "representation",
            Task::Combinator => "combinator",
            Task::Associativity => "associativity",
            Task::Regraduation => "regraduation",
            Task::Additivity => "additivity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Task::ALL.into_iter().find(|t| t.name() == name)
    }

    pub fn prerequisite(self) -> Option<Task> {
        match self {
            Task::Representation => None,
            Task::Combinator => Some(Task::Representation),
            Task::Associativity => Some(Task::Combinator),
            Task::Regraduation => Some(Task::Representation),
            Task::Additivity => Some(Task::Regraduation),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Named tolerances, with defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Single-slit agreement ε for representation witnesses.
    pub representation: f64,
    /// Key tolerance of the combinator table.
    pub combinator: f64,
    pub associativity: f64,
    /// Largest equation residual for a non-trivial ξ.
    pub regraduation: f64,
    /// Sup-norm below which the nearest exact ξ counts as zero.
    pub triviality: f64,
    /// Amplitudes closer than this share a ξ unknown.
    pub merge: f64,
    /// Held-out additivity check; defaults to ten times `regraduation`.
    pub additivity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            representation: 1e-9,
            combinator: 1e-9,
            associativity: 1e-9,
            regraduation: 1e-6,
            triviality: 1e-8,
            merge: 1e-10,
            additivity: 1e-5,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 7] = [
        "representation",
        "combinator",
        "associativity",
        "regraduation",
        "triviality",
        "merge",
        "additivity",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "representation" => &mut self.representation,
            "combinator" => &mut self.combinator,
            "associativity" => &mut self.associativity,
            "regraduation" => &mut self.regraduation,
            "triviality" => &mut self.triviality,
            "merge" => &mut self.merge,
            "additivity" => &mut self.additivity,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), ScenarioError> {
        if !(value.is_finite() && value > 0.0) {
            return Err(schema(format!("tolerances.{name}"), "must be positive and finite"));
        }
        let slot = self
            .slot(name)
            .ok_or_else(|| schema(format!("tolerances.{name}"), "unknown tolerance"))?;
        *slot = value;
        Ok(())
    }

    fn to_map(self) -> BTreeMap<String, f64> {
        let mut copy = self;
        Self::NAMES
            .iter()
            .map(|n| (n.to_string(), *copy.slot(n).expect("known name")))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleCounts {
    pub representation: usize,
    pub combinator: usize,
    pub associativity: usize,
    pub additivity: usize,
    /// States used when ξ is solved from sampled constraints.
    pub regraduation: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        SampleCounts {
            representation: 10_000,
            combinator: 2_000,
            associativity: 1_000,
            additivity: 1_000,
            regraduation: 50,
        }
    }
}

impl SampleCounts {
    const NAMES: [&'static str; 5] = ["representation", "combinator", "associativity", "additivity", "regraduation"];

    fn slot(&mut self, name: &str) -> Option<&mut usize> {
        Some(match name {
            "representation" => &mut self.representation,
            "combinator" => &mut self.combinator,
            "associativity" => &mut self.associativity,
            "additivity" => &mut self.additivity,
            "regraduation" => &mut self.regraduation,
            _ => return None,
        })
    }

    fn to_map(self) -> BTreeMap<String, usize> {
        let mut copy = self;
        Self::NAMES
            .iter()
            .map(|n| (n.to_string(), *copy.slot(n).expect("known name")))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegraduationSettings {
    /// Knots of the ξ table when a combinator is regraduated.
    pub grid_size: usize,
    /// α values of the sign-flip states used when the assignment is not a representation.
    pub alpha_grid: Vec<f64>,
    /// Interval for ξ; defaults to the range of observed amplitudes.
    pub domain: Option<(f64, f64)>,
    pub anchor: Option<f64>,
}

impl Default for RegraduationSettings {
    fn default() -> Self {
        RegraduationSettings {
            grid_size: 1201,
            alpha_grid: vec![0.25, 0.5, 1.0, 2.0],
            domain: None,
            anchor: None,
        }
    }
}

/// A validated scenario with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: Option<String>,
    pub description: Option<String>,
    pub slits: Vec<SlitId>,
    pub theory: Theory,
    theory_spec: TheorySpec,
    pub sampler: Sampler,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub samples: SampleCounts,
    pub regraduation: RegraduationSettings,
    pub tasks: Vec<Task>,
}

fn build_theory(spec: &TheorySpec, slits: &[SlitId]) -> Result<Theory, ScenarioError> {
    Ok(match spec {
        TheorySpec::Linear => Theory::Linear,
        TheorySpec::Quadratic => Theory::Quadratic,
        TheorySpec::Power { p } => Theory::power(*p).map_err(|e| schema("theory.p", e.to_string()))?,
        TheorySpec::UserTable { table } => {
            if table.is_empty() {
                return Err(schema("theory.table", "must contain at least one entry"));
            }
            let lookup = |label: &str, field: String| {
                slits
                    .iter()
                    .find(|s| s.as_str() == label)
                    .cloned()
                    .ok_or_else(|| schema(field, format!("`{label}` is not a scenario slit")))
            };
            let mut entries = Vec::with_capacity(table.len());
            for (i, e) in table.iter().enumerate() {
                let mut coeffs = BTreeMap::new();
                for (label, value) in &e.coeffs {
                    coeffs.insert(lookup(label, format!("theory.table[{i}].coeffs"))?, (*value).into());
                }
                let open = e
                    .open
                    .iter()
                    .map(|l| lookup(l, format!("theory.table[{i}].open")))
                    .collect::<Result<Vec<_>, _>>()?;
                let open = Configuration::new(open)
                    .map_err(|err| schema(format!("theory.table[{i}].open"), err.to_string()))?;
                entries.push(TableEntry {
                    coeffs,
                    open,
                    value: e.value.into(),
                });
            }
            Theory::UserTable(UserTable::new(entries).map_err(|e| schema("theory.table", e.to_string()))?)
        }
    })
}

fn build_sampler(spec: &SamplerSpec) -> Result<Sampler, ScenarioError> {
    let sampler = match spec {
        SamplerSpec::ComplexGaussian { sigma, .. } => Sampler::ComplexGaussian { sigma: *sigma },
        SamplerSpec::RealUniform { lo, hi, .. } => Sampler::RealUniform { lo: *lo, hi: *hi },
        SamplerSpec::Grid { points, .. } => Sampler::Grid {
            points: points.iter().map(|&p| p.into()).collect(),
        },
    };
    sampler.validate().map_err(|e| schema("sampler", e.to_string()))?;
    Ok(sampler)
}

fn build_tasks(names: &[String]) -> Result<Vec<Task>, ScenarioError> {
    let mut tasks = Vec::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        let task = Task::from_name(name)
            .ok_or_else(|| schema(format!("tasks[{i}]"), format!("unknown task `{name}`")))?;
        if tasks.contains(&task) {
            return Err(schema(format!("tasks[{i}]"), format!("task `{name}` listed twice")));
        }
        if let Some(pre) = task.prerequisite() {
            if !tasks.contains(&pre) {
                return Err(ScenarioError::Dependency {
                    task: task.to_string(),
                    missing: pre.to_string(),
                });
            }
        }
        tasks.push(task);
    }
    Ok(tasks)
}

impl Scenario {
    pub fn from_file(file: &ScenarioFile) -> Result<Self, ScenarioError> {
        if file.slits.len() < 2 {
            return Err(schema("slits", "at least two slits are required"));
        }
        let mut slits = Vec::with_capacity(file.slits.len());
        for (i, label) in file.slits.iter().enumerate() {
            let id = SlitId::new(label.clone()).map_err(|e| schema(format!("slits[{i}]"), e.to_string()))?;
            if slits.contains(&id) {
                return Err(schema(format!("slits[{i}]"), format!("duplicate slit `{label}`")));
            }
            slits.push(id);
        }
        let theory = build_theory(&file.theory, &slits)?;
        let sampler = build_sampler(&file.sampler)?;
        let seed = file
            .sampler
            .seed()
            .ok_or_else(|| schema("sampler.seed", "required for random samplers"))?;

        let mut tolerances = Tolerances::default();
        let mut additivity_given = false;
        for (name, value) in &file.tolerances {
            tolerances.set(name, *value)?;
            additivity_given |= name == "additivity";
        }
        if !additivity_given {
            // rounded so that 10 × 1e-6 prints as 1e-5
            let scaled = format!("{:.12e}", 10.0 * tolerances.regraduation);
            tolerances.additivity = scaled.parse().expect("formatted float parses");
        }

        let mut samples = SampleCounts::default();
        for (name, value) in &file.samples {
            let slot = samples
                .slot(name)
                .ok_or_else(|| schema(format!("samples.{name}"), "unknown sample count"))?;
            if *value == 0 {
                return Err(schema(format!("samples.{name}"), "must be at least 1"));
            }
            *slot = *value;
        }

        let mut regraduation = RegraduationSettings::default();
        let r = &file.regraduation;
        if let Some(m) = r.grid_size {
            if m < 3 {
                return Err(schema("regraduation.grid_size", "must be at least 3"));
            }
            regraduation.grid_size = m;
        }
        if let Some(alphas) = &r.alpha_grid {
            if alphas.is_empty() || alphas.iter().any(|a| !a.is_finite() || *a == 0.0) {
                return Err(schema("regraduation.alpha_grid", "needs finite nonzero values"));
            }
            regraduation.alpha_grid = alphas.clone();
        }
        if let Some([lo, hi]) = r.domain {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(schema("regraduation.domain", "needs finite lo < hi"));
            }
            regraduation.domain = Some((lo, hi));
        }
        if let Some(anchor) = r.anchor {
            if !anchor.is_finite() {
                return Err(schema("regraduation.anchor", "must be finite"));
            }
            regraduation.anchor = Some(anchor);
        }

        Ok(Scenario {
            name: file.name.clone(),
            description: file.description.clone(),
            slits,
            theory,
            theory_spec: file.theory.clone(),
            sampler,
            seed,
            tolerances,
            samples,
            regraduation,
            tasks: build_tasks(&file.tasks)?,
        })
    }

    /// The scenario as a file, with every default written out.
    pub fn to_file(&self) -> ScenarioFile {
        let seed = Some(self.seed);
        let sampler = match &self.sampler {
            Sampler::ComplexGaussian { sigma } => SamplerSpec::ComplexGaussian { seed, sigma: *sigma },
            Sampler::RealUniform { lo, hi } => SamplerSpec::RealUniform { seed, lo: *lo, hi: *hi },
            Sampler::Grid { points } => SamplerSpec::Grid {
                seed,
                points: points.iter().map(|&p| p.into()).collect(),
            },
        };
        let r = &self.regraduation;
        ScenarioFile {
            name: self.name.clone(),
            description: self.description.clone(),
            slits: self.slits.iter().map(|s| s.to_string()).collect(),
            theory: self.theory_spec.clone(),
            sampler,
            tolerances: self.tolerances.to_map(),
            samples: self.samples.to_map(),
            regraduation: RegraduationSpec {
                grid_size: Some(r.grid_size),
                alpha_grid: Some(r.alpha_grid.clone()),
                domain: r.domain.map(|(lo, hi)| [lo, hi]),
                anchor: r.anchor,
            },
            tasks: self.tasks.iter().map(|t| t.to_string()).collect(),
        }
    }
}

/// Parses scenario JSON text without validating it.
pub fn parse_scenario_file(text: &str) -> Result<ScenarioFile, ScenarioError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let file: ScenarioFile = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        schema(if path == "." { "(root)".into() } else { path }, e.into_inner().to_string())
    })?;
    Ok(file)
}

/// Parses and validates scenario JSON text.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    Scenario::from_file(&parse_scenario_file(text)?)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scenario(&text)
}
