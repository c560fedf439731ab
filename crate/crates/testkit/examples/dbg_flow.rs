use holostab_core::flow::{run_stability, FlowConfig};
use holostab_testkit as testkit;

fn main() {
    for eps_hat in [0.2, 0.1] {
        let (c, profile) = testkit::pollution_fixture(eps_hat);
        let cfg = FlowConfig::default();
        match run_stability(&c, &profile, cfg) {
            Ok(r) => println!(
                "eps_hat {eps_hat}: OK eps*={} eliminated={:?} betti {} -> {} warnings {:?}",
                r.eps_star, r.eliminated_edges, r.betti_before, r.betti_after, r.warnings
            ),
            Err(e) => println!("eps_hat {eps_hat}: ERR {e}"),
        }
    }
    // hollow square
    let vertices = [1i64, 2, 3, 4];
    let edges = [(1i64, 2i64), (1, 4), (2, 3), (3, 4)];
    let c = holostab_core::complex::SimplicialComplex::build(&vertices, &edges, None).unwrap();
    let profile = holostab_core::weights::WeightProfile::unit(&c);
    let cfg = FlowConfig { max_outer: 12, ..FlowConfig::default() };
    match run_stability(&c, &profile, cfg) {
        Ok(r) => println!("square: OK eps*={} eliminated={:?} betti {} -> {}", r.eps_star, r.eliminated_edges, r.betti_before, r.betti_after),
        Err(e) => println!("square: ERR {e}"),
    }
}
