#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use regrad::setup::{SetupExpr, SlitId};

pub const LABELS: [&str; 6] = ["a", "a'", "a''", "b", "c", "d"];

/// A bracketing of `leaves` whose split points are read from `choices`.
pub fn tree_from_choices(leaves: &[SlitId], choices: &mut impl Iterator<Item = usize>) -> SetupExpr {
    if leaves.len() == 1 {
        return SetupExpr::atom(leaves[0].clone());
    }
    let split = 1 + choices.next().unwrap_or(0) % (leaves.len() - 1);
    let left = tree_from_choices(&leaves[..split], choices);
    let right = tree_from_choices(&leaves[split..], choices);
    SetupExpr::join(left, right)
}

pub fn regrad_bin() -> &'static str {
    env!("CARGO_BIN_EXE_regrad")
}

pub fn regrad(args: &[&str], cwd: &Path) -> Output {
    Command::new(regrad_bin())
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("regrad binary runs")
}

/// The report with every timing line removed.
pub fn without_timing(json: &str) -> String {
    json.lines()
        .filter(|l| !l.contains("\"elapsed_ms\""))
        .collect::<Vec<_>>()
        .join("\n")
}

/// φ(a) = x, φ(a') = y and φ(a ∨ a') = f(x, y) for every pair of grid points.
pub fn grid_theory(points: &[f64], f: impl Fn(f64, f64) -> f64) -> regrad::theory::Theory {
    use std::collections::BTreeMap;

    use num_complex::Complex64;
    use regrad::setup::Configuration;
    use regrad::theory::{TableEntry, Theory, UserTable};

    let a = SlitId::new("a").unwrap();
    let b = SlitId::new("a'").unwrap();
    let c = |v: f64| Complex64::new(v, 0.0);
    let mut entries = Vec::new();
    for &x in points {
        for id in [&a, &b] {
            entries.push(TableEntry {
                coeffs: BTreeMap::from([(id.clone(), c(x))]),
                open: Configuration::single(id.clone()),
                value: c(x),
            });
        }
        for &y in points {
            entries.push(TableEntry {
                coeffs: BTreeMap::from([(a.clone(), c(x)), (b.clone(), c(y))]),
                open: Configuration::new([a.clone(), b.clone()]).unwrap(),
                value: c(f(x, y)),
            });
        }
    }
    Theory::UserTable(UserTable::new(entries).unwrap())
}

pub fn pair() -> regrad::analysis::SlitPair {
    regrad::analysis::SlitPair::new(SlitId::new("a").unwrap(), SlitId::new("a'").unwrap()).unwrap()
}
