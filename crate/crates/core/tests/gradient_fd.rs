//! Finite-difference validation of the weight-coupling Jacobians and the free
//! gradient of the functional.
//!
//! The oracle is central differencing of the full evaluation path (perturb ->
//! assemble -> dense eigendecomposition by index -> functional), entirely
//! independent of the analytic gradient assembly.

use holostab_core::complex::SimplicialComplex;
use holostab_core::dense::sym_eigen_csr;
use holostab_core::functional::{eval_functional, free_gradient, FunctionalParams, Perturbation};
use holostab_core::laplacian::assemble;
use holostab_core::rng::SplitMix64;
use holostab_core::solver::SpectralPoint;
use holostab_core::sparse::{dot, nrm2};
use holostab_core::weights::{perturb, weight_jacobians, WeightProfile};
use holostab_testkit as testkit;

/// Dense by-index evaluation of (lambda_+, mu_2) and the functional.
fn spectral_by_index(
    c: &SimplicialComplex,
    profile: &WeightProfile,
    eps: f64,
    e: &Perturbation,
) -> (f64, f64, SpectralPoint, SpectralPoint) {
    let pw = perturb(c, profile, eps, e).unwrap();
    let bundle = assemble(c, &pw);
    let support: Vec<bool> = pw.w1.iter().map(|&w| w > 1e-12).collect();
    let n_comp = c.component_count_masked(&support);
    let (beta0, beta1) = c.betti_numbers();
    let up_kernel = c.n_vertices() - beta0 + beta1;

    let eig0 = sym_eigen_csr(&bundle.l0).unwrap();
    let eig1 = sym_eigen_csr(&bundle.l1_up).unwrap();
    let mu2 = eig0.values[n_comp];
    let lambda = eig1.values[up_kernel];
    let sp_mu = SpectralPoint {
        value: mu2,
        vector: eig0.eigenvector(n_comp),
        residual: 0.0,
        multiplicity_flag: false,
    };
    let sp_lambda = SpectralPoint {
        value: lambda,
        vector: eig1.eigenvector(up_kernel),
        residual: 0.0,
        multiplicity_flag: false,
    };
    (lambda, mu2, sp_lambda, sp_mu)
}

fn f_of(
    c: &SimplicialComplex,
    profile: &WeightProfile,
    params: &FunctionalParams,
    eps: f64,
    e: &Perturbation,
) -> f64 {
    let (lambda, mu2, _, _) = spectral_by_index(c, profile, eps, e);
    eval_functional(lambda, mu2, params)
}

/// Random admissible perturbation staying away from support boundaries and
/// coupling arg-min ties.
fn safe_perturbation(rng: &mut SplitMix64, c: &SimplicialComplex, profile: &WeightProfile, eps: f64) -> Perturbation {
    'outer: loop {
        let mut vals: Vec<f64> = (0..c.n_edges()).map(|_| rng.next_range(-1.0, 1.0)).collect();
        let n = nrm2(&vals);
        for v in vals.iter_mut() {
            *v /= n * 1.25; // keep strictly inside the unit ball
        }
        // Keep all weights well positive.
        for (e, &v) in vals.iter().enumerate() {
            if profile.w1[e] + eps * v < 0.05 * profile.w1[e] {
                continue 'outer;
            }
        }
        // Avoid arg-min ties of the coupling within each triangle.
        let u: Vec<f64> = (0..c.n_edges()).map(|e| eps * vals[e] / profile.w1[e]).collect();
        for t in 0..c.n_triangles() {
            let f = c.triangle_edge_positions(t);
            let mut us = [u[f[0]], u[f[1]], u[f[2]]];
            us.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            if us[1] - us[0] < 1e-3 {
                continue 'outer;
            }
            // Keep the arg-min below zero so the coupling is not clamped at
            // its kink.
            if us[0] > -1e-3 {
                continue 'outer;
            }
        }
        return Perturbation::new(vals);
    }
}

#[test]
fn coupled_weights_match_finite_differences() {
    // d w_i(w1 + h D) / dh at h = 0 against the Jacobian contraction, for
    // h = 1e-4 and 1e-5 (error O(h) one-sided).
    let c = testkit::fig1_complex();
    let profile = WeightProfile::unit(&c);
    let mut rng = SplitMix64::new(11);
    let eps = 0.3;

    for trial in 0..5 {
        let e = safe_perturbation(&mut rng, &c, &profile, eps);
        let pw = perturb(&c, &profile, eps, &e).unwrap();
        let jac = weight_jacobians(&c, &profile, &pw);
        let dir: Vec<f64> = (0..c.n_edges()).map(|_| rng.next_range(-1.0, 1.0)).collect();

        for &h in &[1e-4, 1e-5] {
            // Perturb w1_tilde directly by h * dir through the E parameter.
            let mut e_plus = e.values.clone();
            for (v, d) in e_plus.iter_mut().zip(&dir) {
                *v += h * d / eps;
            }
            let pw_plus = perturb(&c, &profile, eps, &Perturbation::new(e_plus)).unwrap();

            // Vertex weights: exact linear map, so FD must be almost exact.
            for v in 0..c.n_vertices() {
                let fd = (pw_plus.w0[v] - pw.w0[v]) / h;
                let (a, b) = (0..c.n_edges()).fold((0.0, 0.0), |acc, e| {
                    let (s, _) = acc;
                    let val = holostab_core::weights::WeightJacobians::j10_entry(&c, e, v);
                    (s + val * dir[e], 0.0)
                });
                let _ = b;
                assert!((fd - a).abs() < 1e-8, "trial {trial} vertex {v}: fd {fd} vs {a}");
            }

            // Triangle weights: single active arg-min edge per triangle.
            for t in 0..c.n_triangles() {
                let fd = (pw_plus.w2[t] - pw.w2[t]) / h;
                let analytic: f64 =
                    (0..c.n_edges()).map(|e| jac.j12_entry(e, t) * dir[e]).sum();
                assert!(
                    (fd - analytic).abs() < 40.0 * h,
                    "trial {trial} triangle {t} h {h}: fd {fd} vs {analytic}"
                );
            }
        }
    }
}

#[test]
fn triangle_coupling_is_monotone_in_each_weight() {
    let c = testkit::fig1_complex();
    let profile = WeightProfile::unit(&c);
    let mut rng = SplitMix64::new(5);
    let eps = 0.4;
    for _ in 0..50 {
        let e = safe_perturbation(&mut rng, &c, &profile, eps);
        let pw = perturb(&c, &profile, eps, &e).unwrap();
        let edge = rng.next_below(c.n_edges() as u64) as usize;
        let mut bigger = e.values.clone();
        bigger[edge] += 0.05;
        let pw_big = perturb(&c, &profile, eps, &Perturbation::new(bigger)).unwrap();
        for t in 0..c.n_triangles() {
            assert!(pw_big.w2[t] >= pw.w2[t] - 1e-14);
        }
    }
}

#[test]
fn free_gradient_matches_central_differences() {
    let c = testkit::fig1_complex();
    let profile = WeightProfile::unit(&c);
    let mut rng = SplitMix64::new(2718);
    let eps = 0.25;

    // mu_bar above the unperturbed mu2 so the penalty branch is active in
    // some trials (mu2 moves below it), inactive in others.
    let (_, mu2_init, _, _) =
        spectral_by_index(&c, &profile, 0.0, &Perturbation::zeros(c.n_edges()));

    for (trial, mu_ratio) in [0.75f64, 1.2, 0.9, 1.1].iter().enumerate() {
        let params = FunctionalParams::new(1.0, mu_ratio * mu2_init);
        let e = safe_perturbation(&mut rng, &c, &profile, eps);
        let (_, mu2, sp_lambda, sp_mu) = spectral_by_index(&c, &profile, eps, &e);
        // Stay away from the hinge kink.
        if (mu2 - params.mu_bar).abs() < 1e-3 {
            continue;
        }
        let pw = perturb(&c, &profile, eps, &e).unwrap();
        let bundle = assemble(&c, &pw);
        let jac = weight_jacobians(&c, &profile, &pw);
        let grad = free_gradient(&c, &profile, &bundle, &sp_lambda, &sp_mu, &jac, &params, eps, &e);

        let mut dir: Vec<f64> = (0..c.n_edges()).map(|_| rng.next_range(-1.0, 1.0)).collect();
        let n = nrm2(&dir);
        for v in dir.iter_mut() {
            *v /= n;
        }

        let h = 1e-5;
        let mut plus = e.values.clone();
        let mut minus = e.values.clone();
        for i in 0..dir.len() {
            plus[i] += h * dir[i];
            minus[i] -= h * dir[i];
        }
        let fp = f_of(&c, &profile, &params, eps, &Perturbation::new(plus));
        let fm = f_of(&c, &profile, &params, eps, &Perturbation::new(minus));
        let fd = (fp - fm) / (2.0 * h);
        let analytic = dot(&grad.g, &dir);
        let denom = fd.abs().max(analytic.abs()).max(1e-10);
        assert!(
            ((fd - analytic) / denom).abs() < 1e-5,
            "trial {trial}: fd {fd:e} vs analytic {analytic:e}"
        );
    }
}

#[test]
fn gradient_respects_triangle_symmetry() {
    // A single triangle with symmetric weights: the lambda-block of the
    // gradient must be identical on the two non-tie-break edges.
    let c = SimplicialComplex::build(&[1, 2, 3], &[(1, 2), (1, 3), (2, 3)], None).unwrap();
    let profile = WeightProfile::unit(&c);
    let params = FunctionalParams::new(1.0, 1e-9); // penalty always inactive
    let eps = 0.2;

    // Symmetric perturbation: equal decrease on edges (1,3) and (2,3),
    // arg-min on edge (1,2).
    let e12 = c.edge_position_by_label(1, 2).unwrap();
    let e13 = c.edge_position_by_label(1, 3).unwrap();
    let e23 = c.edge_position_by_label(2, 3).unwrap();
    let mut vals = vec![0.0; 3];
    vals[e12] = -0.9;
    vals[e13] = -0.3;
    vals[e23] = -0.3;
    let e = Perturbation::new(vals);

    let (_, _, sp_lambda, sp_mu) = spectral_by_index(&c, &profile, eps, &e);
    let pw = perturb(&c, &profile, eps, &e).unwrap();
    let bundle = assemble(&c, &pw);
    let jac = weight_jacobians(&c, &profile, &pw);
    let grad = free_gradient(&c, &profile, &bundle, &sp_lambda, &sp_mu, &jac, &params, eps, &e);
    assert!(
        (grad.g[e13] - grad.g[e23]).abs() < 1e-10,
        "symmetric edges must carry equal gradient: {} vs {}",
        grad.g[e13],
        grad.g[e23]
    );
}

#[test]
fn penalty_inactive_gradient_has_no_mu_block() {
    let c = testkit::fig1_complex();
    let profile = WeightProfile::unit(&c);
    let eps = 0.1;
    let e = Perturbation::uniform_shrink(c.n_edges());
    let (_, mu2, sp_lambda, sp_mu) = spectral_by_index(&c, &profile, eps, &e);
    let params = FunctionalParams::new(50.0, 0.5 * mu2); // inactive: mu2 > mu_bar
    let pw = perturb(&c, &profile, eps, &e).unwrap();
    let bundle = assemble(&c, &pw);
    let jac = weight_jacobians(&c, &profile, &pw);
    let grad = free_gradient(&c, &profile, &bundle, &sp_lambda, &sp_mu, &jac, &params, eps, &e);

    // Against alpha = tiny: identical gradient, because the hinge is off.
    let params_small = FunctionalParams::new(1e-6, 0.5 * mu2);
    let grad_small =
        free_gradient(&c, &profile, &bundle, &sp_lambda, &sp_mu, &jac, &params_small, eps, &e);
    for e_idx in 0..c.n_edges() {
        assert_eq!(grad.g[e_idx], grad_small.g[e_idx]);
    }
}
