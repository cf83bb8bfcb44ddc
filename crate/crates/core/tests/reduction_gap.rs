use std::time::Duration;

use mba::exact::solve_exact;
use mba::reduction::{
    build_reduction, verify_gap, GapOutcome, GapSolver, NodeKind, ReductionSidecar, ThreeDmInstance,
};
use mba::SolveStatus;

fn no_instance() -> ThreeDmInstance {
    ThreeDmInstance::new(2, &[(1, 1, 1), (1, 2, 2), (2, 1, 2), (2, 2, 1)]).unwrap()
}

#[test]
fn yes_instance_reaches_unit_weight() {
    let v = verify_gap(&ThreeDmInstance::example(), 1, GapSolver::Exact { time_limit: None }).unwrap();
    assert!(v.yes);
    assert_eq!(v.expected, 1);
    assert_eq!(v.objective, Some(1));
    assert_eq!(v.outcome, GapOutcome::Confirmed);
}

#[test]
fn no_instance_costs_two_layers_plus_one() {
    let v = verify_gap(&no_instance(), 1, GapSolver::Exact { time_limit: None }).unwrap();
    assert!(!v.yes);
    assert_eq!((v.objective, v.outcome), (Some(2), GapOutcome::Confirmed));
}

#[test]
fn uncovered_z_makes_the_instance_infeasible() {
    // z2 appears in no triple, so its node has no successor
    let tdm = ThreeDmInstance::new(2, &[(1, 1, 1), (1, 2, 1), (2, 1, 1)]).unwrap();
    let out = build_reduction(&tdm, 1).unwrap();
    let r = solve_exact(&out.instance, Some(Duration::from_secs(30)), None);
    assert_eq!(r.report.status, SolveStatus::Infeasible);
    let v = verify_gap(&tdm, 1, GapSolver::Exact { time_limit: Some(Duration::from_secs(30)) }).unwrap();
    assert_eq!(v.outcome, GapOutcome::Contradicted);
}

#[test]
fn sidecar_describes_every_node() {
    let out = build_reduction(&ThreeDmInstance::example(), 2).unwrap();
    let side: ReductionSidecar = serde_json::from_str(&out.sidecar_json()).unwrap();
    assert_eq!(side.layer_heights, vec![3, 2]);
    assert_eq!(side.triples, vec![(1, 1, 1), (2, 2, 2), (1, 2, 1)]);
    assert_eq!(side.meta.len(), out.instance.m());
    assert!(side.meta.iter().all(|col| col.len() == out.instance.n()));
    for (c, col) in side.meta.iter().enumerate() {
        for (e, node) in col.iter().enumerate() {
            let w = out.instance.weight(e, c);
            if node.kind == NodeKind::Dummy {
                assert_eq!(w, 0, "dummy ({c}, {e})");
            }
            assert!(w <= 1);
        }
    }
}

#[test]
fn parse_accepts_commas_and_comments() {
    let tdm = ThreeDmInstance::parse("# example\n2\n1,1,1\n2 2 2 # second\n\n1, 2, 1\n").unwrap();
    assert_eq!(tdm, ThreeDmInstance::example());
    assert!(ThreeDmInstance::parse("2\n1 1 3\n").is_err());
    assert!(ThreeDmInstance::parse("").is_err());
}
