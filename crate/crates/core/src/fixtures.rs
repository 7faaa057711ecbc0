//! Scenarios shipped with the toolkit.

pub struct Fixture {
    pub name: &'static str,
    pub summary: &'static str,
    pub json: &'static str,
}

pub const FIXTURES: [Fixture; 4] = [
    Fixture {
        name: "quadratic-counterexample",
        summary: "φ(a ∨ a') = (α + α')²: not a representation, only ξ = 0",
        json: include_str!("../fixtures/quadratic-counterexample.json"),
    },
    Fixture {
        name: "linear-baseline",
        summary: "φ(a ∨ a') = α + α': S = x + y, ξ linear",
        json: include_str!("../fixtures/linear-baseline.json"),
    },
    Fixture {
        name: "product-combinator",
        summary: "tabulated S = x·y on a grid: ξ proportional to log",
        json: include_str!("../fixtures/product-combinator.json"),
    },
    Fixture {
        name: "nonassociative-combinator",
        summary: "tabulated S = x + y²: associativity fails",
        json: include_str!("../fixtures/nonassociative-combinator.json"),
    },
];

/// Looks a fixture up by name, with or without the `.json` suffix.
pub fn fixture(name: &str) -> Option<&'static Fixture> {
    let stem = name.strip_suffix(".json").unwrap_or(name);
    FIXTURES.iter().find(|f| f.name == stem)
}
