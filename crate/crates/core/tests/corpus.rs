use subproj_core::corpus::{self, Expected};
use subproj_core::oracle::{bounded_fidelity_check, generate_gk};
use subproj_core::projection::{bounded_local_language_check, subset_construction};
use subproj_core::validity::check_implementability;
use subproj_core::{Csm, GlobalType, Role, ViolationKind};

fn parsed() -> Vec<(&'static corpus::CorpusEntry, GlobalType)> {
    corpus::ENTRIES
        .iter()
        .map(|e| (e, GlobalType::parse(e.source).unwrap()))
        .collect()
}

#[test]
fn verdicts_match_file_headers() {
    for (entry, g) in parsed() {
        let verdict = check_implementability(&g).unwrap();
        let kind = verdict.violation.as_ref().map(|v| v.kind);
        let expected = match entry.expected {
            Expected::Implementable => None,
            Expected::SendValidity => Some(ViolationKind::SendValidity),
            Expected::ReceiveValidity => Some(ViolationKind::ReceiveValidity),
        };
        assert_eq!(kind, expected, "{}", entry.name);
        assert_eq!(verdict.implementable, expected.is_none());
    }
}

#[test]
fn subset_constructions_agree_with_the_global_language() {
    for (entry, g) in parsed() {
        for role in g.roles() {
            assert!(bounded_local_language_check(&g, &role, 10), "{} {}", entry.name, role);
        }
    }
}

#[test]
fn implementable_entries_pass_bounded_fidelity() {
    for (entry, g) in parsed() {
        if entry.expected != Expected::Implementable {
            continue;
        }
        let csm = Csm::from_global_type(&g);
        let report = bounded_fidelity_check(&g, &csm, 12);
        assert!(report.passed(), "{}: {:?}", entry.name, report.failure);
        // every configuration without successors is final
        let explored = csm.explore(4, 12);
        assert!(explored.deadlocks.is_empty(), "{}", entry.name);
    }
}

#[test]
fn exponential_family_is_implementable() {
    for k in 1..=5 {
        let g = generate_gk(k);
        assert!(check_implementability(&g).unwrap().implementable, "k = {k}");
        let m = subset_construction(&g, &Role::new("q"));
        assert!(m.len() >= 1 << k, "k = {k}: {} states", m.len());
    }
}
