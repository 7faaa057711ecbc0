mod common;

use proptest::prelude::*;
use regrad::setup::{
    association_trees, association_variants, canonicalize, parse_setup, render, slits, Configuration, SetupError,
    SetupExpr, SlitId,
};

/// A random expression over 1..=6 distinct slits.
fn expr() -> impl Strategy<Value = SetupExpr> {
    (Just(common::LABELS.to_vec()).prop_shuffle(), 1usize..=6, prop::collection::vec(0usize..100, 6)).prop_map(
        |(labels, n, choices)| {
            let leaves: Vec<SlitId> = labels[..n].iter().map(|l| SlitId::new(*l).unwrap()).collect();
            common::tree_from_choices(&leaves, &mut choices.into_iter())
        },
    )
}

fn swap_at(e: &SetupExpr, path: &[bool]) -> SetupExpr {
    match e {
        SetupExpr::Atom(_) => e.clone(),
        SetupExpr::Join(l, r) => match path.split_first() {
            None => SetupExpr::join((**r).clone(), (**l).clone()),
            Some((true, rest)) => SetupExpr::join(swap_at(l, rest), (**r).clone()),
            Some((false, rest)) => SetupExpr::join((**l).clone(), swap_at(r, rest)),
        },
    }
}

proptest! {
    #[test]
    fn variants_share_a_configuration(labels in Just(common::LABELS.to_vec()).prop_shuffle(), n in 3usize..=6) {
        let leaves: Vec<SlitId> = labels[..n].iter().map(|l| SlitId::new(*l).unwrap()).collect();
        let expected = Configuration::new(leaves.clone()).unwrap();
        for (l, r) in association_variants(&leaves).unwrap() {
            prop_assert_eq!(canonicalize(&l), expected.clone());
            prop_assert_eq!(canonicalize(&r), expected.clone());
        }
    }

    #[test]
    fn render_then_parse_is_identity(e in expr()) {
        prop_assert_eq!(parse_setup(&render(&e)).unwrap(), e);
    }

    #[test]
    fn redundant_parentheses_do_not_matter(e in expr()) {
        fn fully(e: &SetupExpr) -> String {
            match e {
                SetupExpr::Atom(id) => format!("({id})"),
                SetupExpr::Join(l, r) => format!("({} ∨ {})", fully(l), fully(r)),
            }
        }
        prop_assert_eq!(parse_setup(&fully(&e)).unwrap(), e);
    }

    #[test]
    fn canonicalize_ignores_child_order(e in expr(), path in prop::collection::vec(any::<bool>(), 0..5)) {
        prop_assert_eq!(canonicalize(&swap_at(&e, &path)), canonicalize(&e));
        prop_assert_eq!(canonicalize(&e.mirrored()), canonicalize(&e));
    }
}

fn catalan(n: u64) -> u64 {
    // C_n = (2n)! / ((n+1)! n!) computed as a running product
    (0..n).fold(1, |c, k| c * 2 * (2 * k + 1) / (k + 2))
}

#[test]
fn four_slits_give_catalan_many_trees() {
    let leaves = slits(&["a", "b", "c", "d"]).unwrap();
    let trees = association_trees(&leaves);
    assert_eq!(trees.len() as u64, catalan(3));
    assert_eq!(trees.len(), 5);
    let distinct: std::collections::HashSet<_> = trees.iter().collect();
    assert_eq!(distinct.len(), 5);
    assert_eq!(association_variants(&leaves).unwrap().len(), 10);
    for n in 3..=6 {
        let leaves: Vec<SlitId> = common::LABELS[..n].iter().map(|l| SlitId::new(*l).unwrap()).collect();
        assert_eq!(association_trees(&leaves).len() as u64, catalan(n as u64 - 1));
    }
}

#[test]
fn three_slits_give_the_two_bracketings() {
    let leaves = slits(&["a", "a'", "a''"]).unwrap();
    let v = association_variants(&leaves).unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].0, parse_setup("(a v a') v a''").unwrap());
    assert_eq!(v[0].1, parse_setup("a v (a' v a'')").unwrap());
    assert_eq!(
        association_variants(&slits(&["a", "a'"]).unwrap()),
        Err(SetupError::TooFewSlits(2))
    );
}
