//! End-to-end flow behavior: the illustrative fixture, the pollution guard,
//! step control, and the trajectory invariants.

use holostab_core::flow::{run_stability, FlowConfig, FlowEngine, Phase};
use holostab_core::functional::Perturbation;
use holostab_testkit as testkit;

#[test]
fn illustrative_fixture_eliminates_the_cheap_edge() {
    let (c, profile) = testkit::illustrative_fixture();
    let cfg = FlowConfig::default();
    let result = run_stability(&c, &profile, cfg).expect("flow must converge");

    assert!(result.converged);
    let e56 = c.edge_position_by_label(5, 6).unwrap();
    assert!(
        result.eliminated_edges.contains(&e56),
        "expected edge (5,6) among eliminated {:?}",
        result.eliminated_edges
    );
    // eps* within 5% of w1(5,6) = 0.4.
    assert!(
        (result.eps_star - 0.4).abs() <= 0.02,
        "eps* = {} not within 5% of 0.4",
        result.eps_star
    );
    assert_eq!(result.betti_before, 1);
    assert_eq!(result.betti_after, 2);
}

#[test]
fn pollution_fixture_never_returns_the_disconnecting_cut() {
    // With the connector edges at a small weight, the flow must not stop at a
    // perturbation whose only zero edges are (2,4), (3,5): the returned
    // reduced complex must have gained a hole.
    for eps_hat in [0.2, 0.1] {
        let (c, profile) = testkit::pollution_fixture(eps_hat);
        let cfg = FlowConfig::default();
        let result = run_stability(&c, &profile, cfg).expect("flow must converge");
        assert!(result.converged);
        assert!(
            result.betti_after > result.betti_before,
            "eps_hat {eps_hat}: Betti verification failed"
        );
        let e24 = c.edge_position_by_label(2, 4).unwrap();
        let e35 = c.edge_position_by_label(3, 5).unwrap();
        let only_connectors = result.eliminated_edges.iter().all(|&e| e == e24 || e == e35)
            && !result.eliminated_edges.is_empty();
        assert!(
            !only_connectors,
            "eps_hat {eps_hat}: returned the spurious disconnecting cut"
        );
    }
}

#[test]
fn trajectory_is_monotone_within_segments_and_norm_conserved() {
    let (c, profile) = testkit::illustrative_fixture();
    let result = run_stability(&c, &profile, FlowConfig::default()).unwrap();

    // F non-increasing over accepted steps within each segment.
    let mut last: Option<(usize, f64)> = None;
    for row in result.trajectory.iter().filter(|r| r.accepted) {
        if let Some((seg, f)) = last {
            if seg == row.segment {
                assert!(
                    row.f <= f + 1e-12,
                    "F increased within segment {seg}: {f} -> {} (step {})",
                    row.f,
                    row.step
                );
            }
        }
        last = Some((row.segment, row.f));
    }

    // Norm conservation on accepted constrained steps.
    for row in result.trajectory.iter().filter(|r| r.accepted) {
        if matches!(row.phase, Phase::Constrained | Phase::Alpha) {
            assert!(
                (row.norm_e - 1.0).abs() <= 1e-10,
                "norm drift {} at step {}",
                row.norm_e,
                row.step
            );
        }
    }

    // eps strictly increases across the outer continuation.
    let mut eps_seen = f64::NEG_INFINITY;
    let mut outer_eps: Vec<f64> = Vec::new();
    for row in &result.trajectory {
        if row.eps > eps_seen {
            eps_seen = row.eps;
            outer_eps.push(row.eps);
        }
    }
    for w in outer_eps.windows(2) {
        assert!(w[1] > w[0]);
    }
}

#[test]
fn forced_rejections_shrink_the_step() {
    let (c, profile) = testkit::illustrative_fixture();
    let cfg = FlowConfig { h0: 1e3, ..FlowConfig::default() };
    let mut engine = FlowEngine::new(&c, &profile, cfg).unwrap();
    let e0 = Perturbation::uniform_shrink(c.n_edges());
    let out = engine.inner_constrained_flow(1e-3, e0).unwrap();
    let _ = out;
    // The huge initial step must produce at least one rejected trial before
    // the first accepted one.
    let state = engine.state();
    assert!(state.h < 1e3);
}

#[test]
fn stationary_input_returns_quickly() {
    // Start an inner flow at an already-stationary state: zero steps needed.
    let (c, profile) = testkit::illustrative_fixture();
    let cfg = FlowConfig::default();
    let mut engine = FlowEngine::new(&c, &profile, cfg).unwrap();
    let (_, e_star) = engine.alpha_phase().unwrap();
    let before = engine.state().f_val;
    let out = engine.inner_constrained_flow(1e-3, e_star).unwrap();
    assert!(out.f <= before + 1e-12);
}

#[test]
fn hollow_square_has_no_reachable_second_hole() {
    // A 4-cycle with no triangles: beta1 = 1 already and no admissible edge
    // elimination can create another hole (only disconnections). The flow
    // must not converge; the regression pins the NotConverged outcome.
    let vertices = [1i64, 2, 3, 4];
    let edges = [(1i64, 2i64), (1, 4), (2, 3), (3, 4)];
    let c = holostab_core::complex::SimplicialComplex::build(&vertices, &edges, None).unwrap();
    assert_eq!(c.betti_numbers(), (1, 1));
    let profile = holostab_core::weights::WeightProfile::unit(&c);
    let cfg = FlowConfig { max_outer: 12, ..FlowConfig::default() };
    match run_stability(&c, &profile, cfg) {
        Err(holostab_core::flow::FlowError::NotConverged(partial)) => {
            assert!(!partial.converged);
            assert!(partial.f_star > 1e-6);
        }
        other => panic!("expected NotConverged, got {:?}", other.map(|r| r.eps_star)),
    }
}

#[test]
fn max_outer_one_gives_partial_result() {
    let (c, profile) = testkit::illustrative_fixture();
    let cfg = FlowConfig { max_outer: 1, ..FlowConfig::default() };
    match run_stability(&c, &profile, cfg) {
        Err(holostab_core::flow::FlowError::NotConverged(partial)) => {
            assert!(!partial.converged);
            assert!(!partial.trajectory.is_empty());
        }
        Ok(r) => panic!("unexpected convergence at eps = {}", r.eps_star),
        Err(e) => panic!("unexpected error {e}"),
    }
}
