mod common;

use std::collections::HashMap;

use common::{global_types, rename};
use proptest::prelude::*;
use subproj_core::corpus;
use subproj_core::syntax::validate_well_formedness;
use subproj_core::validity::check_implementability;
use subproj_core::{GlobalType, Message, RecVar, Role};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pretty_output_parses_back(g in global_types()) {
        let text = g.pretty();
        let back = GlobalType::parse(&text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(back.pretty(), text);
        prop_assert_eq!(back.len(), g.len());
    }

    #[test]
    fn random_types_are_well_formed(g in global_types()) {
        prop_assert!(validate_well_formedness(&g).is_well_formed());
        prop_assert!(g.measure_size() <= 30);
    }

    #[test]
    fn interning_shares_equal_subterms(g in global_types()) {
        let ids: Vec<_> = g.ids().collect();
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                prop_assert!(!g.subterm_eq(a, &g, b), "{} and {} are equal subterms", a, b);
            }
        }
        for id in ids {
            prop_assert_eq!(g.lookup(g.node(id)), Some(id));
        }
    }

    #[test]
    fn renaming_preserves_size_and_verdict(g in global_types()) {
        // a fixed permutation of the role pool, fresh message and variable names
        let perm: HashMap<&str, &str> = [("p", "s"), ("q", "p"), ("r", "q"), ("s", "r")].into();
        let h = rename(
            &g,
            |r| Role::new(perm[r.as_str()]),
            |m| Message::new(format!("{m}_x")),
            |t| RecVar::new(format!("u{t}")),
        );
        prop_assert!(validate_well_formedness(&h).is_well_formed());
        prop_assert_eq!(h.measure_size(), g.measure_size());
        let (vg, vh) = (check_implementability(&g).unwrap(), check_implementability(&h).unwrap());
        prop_assert_eq!(vg.implementable, vh.implementable);
        prop_assert_eq!(
            vg.violation.map(|v| v.kind),
            vh.violation.map(|v| v.kind)
        );
        let sizes = |v: &subproj_core::Verdict| {
            let mut s: Vec<usize> = v.machines.iter().map(|m| m.len()).collect();
            s.sort();
            s
        };
        prop_assert_eq!(sizes(&check_implementability(&g).unwrap()), sizes(&check_implementability(&h).unwrap()));
    }
}

#[test]
fn corpus_round_trips() {
    for entry in corpus::ENTRIES {
        let g = GlobalType::parse(entry.source).unwrap();
        assert_eq!(GlobalType::parse(&g.pretty()).unwrap(), g, "{}", entry.name);
    }
}
