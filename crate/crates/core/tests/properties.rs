//! Randomized invariants over the numerical core. Each case draws its inputs
//! from a seed so a failure shrinks to a reproducible seed.

use faer::{c64, Mat};
use proptest::prelude::*;
use rand::Rng;

use resmono::catalysis::{self, CatalysisOptions, CatalystMode, ChoiMatrix};
use resmono::coherence::{self, CfOptions};
use resmono::cones::{self, LmoOptions, PptSpace};
use resmono::divergences;
use resmono::extension::{self, ExtensionOptions};
use resmono::fw::FwOptions;
use resmono::harness::{self, Suite, SuiteConfig};
use resmono::linalg::{self, CMat};
use resmono::measurement;
use resmono::ree::{self, MeasuredOptions};
use resmono::rng;
use resmono::states::{self, DensityMatrix, ProbVector};

fn random_hermitian(n: usize, seed: u64) -> CMat {
    let mut r = rng::from_seed(seed);
    let g = Mat::from_fn(n, n, |_, _| rng::complex_normal(&mut r));
    linalg::hermitian_part(&g)
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn eig_reconstructs(seed: u64, n in 1usize..12) {
        let m = random_hermitian(n, seed);
        let e = linalg::herm_eig(&m).unwrap();
        let res = linalg::frobenius(&linalg::axpby(1.0, &e.reconstruct(), -1.0, &m));
        prop_assert!(res <= 1e-10 * linalg::frobenius(&m).max(1e-300));
    }

    #[test]
    fn partial_transpose_is_a_trace_preserving_involution(seed: u64, pair in prop::sample::select(vec![(2usize, 2usize), (2, 3), (3, 3)])) {
        let (a, b) = pair;
        let mut r = rng::from_seed(seed);
        let m = Mat::from_fn(a * b, a * b, |_, _| rng::complex_normal(&mut r));
        let dims = [a, b];
        let t = linalg::partial_transpose(&m, &dims, &[1]).unwrap();
        let back = linalg::partial_transpose(&t, &dims, &[1]).unwrap();
        prop_assert!(linalg::max_abs(&linalg::axpby(1.0, &back, -1.0, &m)) == 0.0);
        prop_assert!((linalg::trace(&t) - linalg::trace(&m)).norm() < 1e-12);
        let h = linalg::hermitian_part(&m);
        prop_assert!(linalg::is_hermitian(&linalg::partial_transpose(&h, &dims, &[1]).unwrap(), 1e-14));
        // linearity
        let m2 = random_hermitian(a * b, seed ^ 1);
        let lhs = linalg::partial_transpose(&linalg::axpby(2.0, &h, -0.5, &m2), &dims, &[1]).unwrap();
        let rhs = linalg::axpby(2.0, &linalg::partial_transpose(&h, &dims, &[1]).unwrap(), -0.5, &linalg::partial_transpose(&m2, &dims, &[1]).unwrap());
        prop_assert!(linalg::max_abs(&linalg::axpby(1.0, &lhs, -1.0, &rhs)) < 1e-13);
    }

    #[test]
    fn log_gradient_matches_central_differences(seed: u64, n in 2usize..5) {
        let mut r = rng::from_seed(seed);
        let rho = states::random_density_with(&[n], None, None, &mut r).unwrap().into_matrix();
        let s0 = states::random_density_with(&[n], None, None, &mut r).unwrap().into_matrix();
        // keep σ well conditioned
        let sigma = linalg::axpby(0.5, &s0, 0.5 / n as f64, &linalg::identity(n));
        let dir = random_hermitian(n, seed ^ 7);
        let g = linalg::log_gradient(&rho, &sigma).unwrap();
        let f = |t: f64| divergences::tr_rho_log_sigma(&rho, &linalg::axpby(1.0, &sigma, t, &dir)).unwrap().unwrap();
        let h = 1e-5;
        let fd = (f(h) - f(-h)) / (2.0 * h);
        prop_assert!((linalg::inner(&g, &dir) - fd).abs() <= 1e-6, "{} vs {}", linalg::inner(&g, &dir), fd);
    }

    #[test]
    fn partial_trace_of_product(seed: u64, a in 1usize..4, b in 1usize..4) {
        let mut r = rng::from_seed(seed);
        let rho = states::random_density_with(&[a], None, None, &mut r).unwrap();
        let tau = states::random_density_with(&[b], None, None, &mut r).unwrap();
        let m = linalg::kron(rho.matrix(), tau.matrix());
        let back = linalg::partial_trace(&m, &[a, b], &[0]).unwrap();
        prop_assert!(linalg::max_abs(&linalg::axpby(1.0, &back, -1.0, rho.matrix())) <= 1e-12);
    }

    #[test]
    fn constructors_satisfy_invariants(d in 2usize..5, p in 0.0f64..=1.0, seed: u64) {
        for rho in [states::isotropic(d, p).unwrap(), states::max_entangled(d).unwrap(), states::max_coherent(d).unwrap(), states::random_density(d, seed).unwrap(), states::random_pure(d, seed).unwrap()] {
            prop_assert!((linalg::trace(rho.matrix()).re - 1.0).abs() <= 1e-10);
            prop_assert!(linalg::min_eigenvalue(rho.matrix()).unwrap() >= -1e-10);
            prop_assert_eq!(rho.dims().iter().product::<usize>(), rho.matrix().nrows());
        }
    }

    #[test]
    fn symmetric_families_are_twirl_invariant(d in 2usize..4, p in 0.0f64..=1.0, seed: u64) {
        let mut r = rng::from_seed(seed);
        let iso = states::isotropic(d, p).unwrap();
        let wer = states::werner(d, p).unwrap();
        for _ in 0..20 {
            let u = states::haar_unitary(d, &mut r);
            let uu = linalg::kron(&u, &u);
            let uubar = linalg::kron(&u, &linalg::transpose(&linalg::dagger(&u)));
            let moved_w = &uu * wer.matrix() * uu.adjoint();
            let moved_i = &uubar * iso.matrix() * uubar.adjoint();
            prop_assert!(linalg::max_abs(&linalg::axpby(1.0, &moved_w, -1.0, wer.matrix())) <= 1e-9);
            prop_assert!(linalg::max_abs(&linalg::axpby(1.0, &moved_i, -1.0, iso.matrix())) <= 1e-9);
        }
    }

    #[test]
    fn measurement_data_processing(seed: u64, dims in prop::sample::select(vec![vec![2usize], vec![3], vec![4], vec![2, 2]])) {
        let mut r = rng::from_seed(seed);
        let cut = if dims.len() == 2 { Some(vec![0]) } else { None };
        let rho = states::random_density_with(&dims, cut.clone(), Some(r.random_range(1..=2)), &mut r).unwrap();
        let sigma = states::random_density_with(&dims, cut, None, &mut r).unwrap();
        let d = divergences::umegaki(&rho, &sigma).unwrap().value();
        let layout = if dims.len() == 2 { rho.clone() } else { DensityMatrix::maximally_mixed(vec![dims[0], 1], Some(vec![0])).unwrap() };
        let mut povms = vec![measurement::computational_basis(&layout).unwrap()];
        for i in 0..3 {
            povms.push(measurement::random_product_basis(&layout, &mut r, i).unwrap());
        }
        for m in &povms {
            let kl = divergences::kl_slices(&m.apply(rho.matrix()), &m.apply(sigma.matrix())).unwrap().value();
            prop_assert!(kl <= d + 1e-9, "{kl} > {d}");
        }
    }

    #[test]
    fn scalar_pinsker(seed: u64, n in 2usize..8) {
        let mut r = rng::from_seed(seed);
        let w1: Vec<f64> = (0..n).map(|_| r.random::<f64>() + 1e-3).collect();
        let w2: Vec<f64> = (0..n).map(|_| r.random::<f64>() + 1e-3).collect();
        let (p, q) = (ProbVector::from_weights(&w1).unwrap(), ProbVector::from_weights(&w2).unwrap());
        let l1: f64 = p.as_slice().iter().zip(q.as_slice()).map(|(a, b)| (a - b).abs()).sum();
        let kl = divergences::kl(&p, &q).unwrap().value();
        prop_assert!(kl >= l1 * l1 / (2.0 * std::f64::consts::LN_2) - 1e-12);
    }

    #[test]
    fn cq_chain_rule(seed: u64, k in 1usize..4, d in 1usize..4) {
        let mut r = rng::from_seed(seed);
        let w = |r: &mut rand_chacha::ChaCha20Rng| ProbVector::from_weights(&(0..k).map(|_| r.random::<f64>() + 0.05).collect::<Vec<_>>()).unwrap();
        let (px, qx) = (w(&mut r), w(&mut r));
        let rhos: Vec<_> = (0..k).map(|_| states::random_density_with(&[d], None, None, &mut r).unwrap()).collect();
        let sigmas: Vec<_> = (0..k).map(|_| states::random_density_with(&[d], None, None, &mut r).unwrap()).collect();
        let c = divergences::cq_chain_identity_check(&px, &rhos, &qx, &sigmas).unwrap();
        prop_assert!(c.residual <= 1e-9);
    }

    #[test]
    fn coherence_orderings(seed: u64, d in 2usize..5) {
        let mut r = rng::from_seed(seed);
        let rank = r.random_range(1..=d);
        let rho = states::random_density_with(&[d], None, Some(rank), &mut r).unwrap();
        let cr = coherence::c_r(&rho);
        let q = coherence::quintessential(&rho).unwrap();
        prop_assert!(q >= -1e-12 && q <= cr + 1e-9 && cr <= (d as f64).log2() + 1e-12);
        let tau = states::random_density_with(&[2], None, None, &mut r).unwrap();
        prop_assert!((coherence::c_r(&rho.tensor(&tau)) - cr - coherence::c_r(&tau)).abs() <= 1e-9);
        let t = coherence::trim(&rho);
        let t_state = DensityMatrix::new(t.clone(), vec![d], None);
        if let Ok(ts) = t_state {
            prop_assert!(linalg::max_abs(&linalg::axpby(1.0, &coherence::trim(&ts), -1.0, &t)) <= 1e-12);
        }
        let u = coherence::random_diagonal_phase(d, &mut r);
        let rotated = states::conjugate(&rho, &u);
        let lhs = coherence::trim(&rotated);
        let rhs = &u * &t * u.adjoint();
        prop_assert!(linalg::max_abs(&linalg::axpby(1.0, &lhs, -1.0, &rhs)) <= 1e-12);
    }

    #[test]
    fn cmi_is_nonnegative(seed: u64) {
        let mut r = rng::from_seed(seed);
        let rho = states::random_density_with(&[2, 2, 2], None, Some(r.random_range(1..=8)), &mut r).unwrap();
        prop_assert!(extension::cond_mutual_info(&rho, &[0], &[1], &[2]).unwrap() >= -1e-9);
    }

    #[test]
    fn identity_channel_is_exact(seed: u64, d in 2usize..4) {
        let mut r = rng::from_seed(seed);
        let rho = states::random_density_with(&[d, d], Some(vec![0]), None, &mut r).unwrap();
        let out = ChoiMatrix::identity(&[d, d], &[1]).apply(&rho).unwrap();
        prop_assert!(linalg::max_abs(&linalg::axpby(1.0, out.matrix(), -1.0, rho.matrix())) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn lmo_output_is_feasible_and_not_beaten(seed: u64, b in 2usize..4) {
        let space = PptSpace::bipartite(2, b);
        let g = random_hermitian(2 * b, seed);
        let res = cones::lmo_ppt(&g, &space, &LmoOptions::default(), None).unwrap();
        prop_assert!(linalg::min_eigenvalue(&res.minimizer).unwrap() >= -1e-8);
        prop_assert!(space.min_pt_eigenvalue(&res.minimizer).unwrap() >= -1e-8);
        prop_assert!((linalg::trace(&res.minimizer).re - 1.0).abs() <= 1e-8);
        prop_assert!(res.lower_bound <= res.objective + 1e-12);
        let mut r = rng::from_seed(seed ^ 3);
        for _ in 0..50 {
            let sigma = states::random_ppt_with(&[2, b], vec![0], 5, &mut r).unwrap();
            prop_assert!(res.objective <= linalg::inner(&g, sigma.matrix()) + 1e-5);
        }
    }

    #[test]
    fn dykstra_residuals_settle(seed: u64) {
        let space = PptSpace::bipartite(2, 2);
        let h = random_hermitian(4, seed);
        let res = cones::dykstra_ppt_density(&h, &space, 400, 1e-10).unwrap();
        let tr = &res.residual_trace;
        let burn = tr.len() / 4;
        for w in tr[burn..].windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-6) + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn ree_certificates_are_consistent(seed: u64) {
        let mut r = rng::from_seed(seed);
        let rho = states::random_density_with(&[2, 2], Some(vec![0]), Some(r.random_range(1..=4)), &mut r).unwrap();
        let opts = FwOptions::default();
        let b = ree::ree_ppt(&rho, &opts).unwrap();
        prop_assert!(b.lower <= b.upper + 1e-12);
        for w in b.upper_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        let family = measurement::default_family(&rho, 1, seed).unwrap();
        let m = ree::measured_ree_with_upper(&rho, &family, &MeasuredOptions::default(), b.clone()).unwrap();
        prop_assert!(m.lower <= b.upper + 1e-9);
        let seq = ree::regularized_ree_sequence(&rho, 2, &opts).unwrap();
        prop_assert!(seq[1].upper <= seq[0].upper + 1e-12);
    }

    #[test]
    fn ppt_states_have_zero_ree(seed: u64) {
        let mut r = rng::from_seed(seed);
        let sigma = states::random_ppt_with(&[2, 3], vec![0], 20, &mut r).unwrap();
        prop_assert!(ree::ree_ppt(&sigma, &FwOptions::default()).unwrap().upper <= 1e-6);
    }

    #[test]
    fn cf_sits_above_cr(seed: u64, d in 2usize..4) {
        let rho = states::random_density(d, seed).unwrap();
        let cf = coherence::c_f(&rho, &CfOptions { seed, ..Default::default() }).unwrap();
        prop_assert!(cf.value >= coherence::c_r(&rho) - 1e-6);
    }

    #[test]
    fn squashed_of_pure_is_entanglement_entropy(seed: u64) {
        let mut r = rng::from_seed(seed);
        let psi = states::random_pure_with(&[2, 2], Some(vec![0]), &mut r).unwrap();
        let s = divergences::vn_entropy(&psi.marginal(&[0]).unwrap());
        let b = extension::squashed_upper(&psi, &ExtensionOptions { seed, restarts: 2, ..Default::default() }).unwrap();
        prop_assert!((b.value - s).abs() <= 1e-6, "{} vs {s}", b.value);
    }

    #[test]
    fn ppt_inputs_stay_below_half(seed: u64) {
        let mut r = rng::from_seed(seed);
        let rho = states::random_ppt_with(&[2, 2], vec![0], 20, &mut r).unwrap();
        let f = catalysis::ppt_ops_fidelity(&rho, 1, &CatalysisOptions::default()).unwrap();
        prop_assert!(f.upper <= 0.5 + 1e-3);
        let chk = f.choi.as_ref().unwrap().verify().unwrap();
        prop_assert!(chk.ok(1e-6), "{chk:?}");
    }

    #[test]
    fn reports_are_reproducible(seed: u64) {
        let c = SuiteConfig { trials: 2, seed, ..SuiteConfig::defaults(Suite::Pinsker) };
        let a = harness::run_suite(&c).unwrap();
        prop_assert_eq!(a.deterministic_json(), harness::run_suite(&c).unwrap().deterministic_json());
        let again = harness::run_trial(&c, 1).unwrap();
        prop_assert_eq!(&again.inputs_digest, &a.trials[1].inputs_digest);
    }
}

proptest! {
    #![proptest_config(config(3))]

    #[test]
    fn correlated_relaxes_strict(seed: u64) {
        let mut r = rng::from_seed(seed);
        let rho = states::isotropic(2, r.random_range(0.55..0.95)).unwrap();
        let tau = states::random_ppt_with(&[2, 1], vec![0], 5, &mut r).unwrap();
        let opts = CatalysisOptions { build_choi: false, ..Default::default() };
        let strict = catalysis::catalytic_fidelity(&rho, &tau, 1, CatalystMode::Strict, &opts).unwrap();
        let corr = catalysis::catalytic_fidelity(&rho, &tau, 1, CatalystMode::Correlated, &opts).unwrap();
        // compare certified values: the correlated optimum is at least the strict feasible value
        prop_assert!(corr.upper >= strict.lower.unwrap_or(0.0) - 1e-6);
    }
}

#[test]
fn complex_scalars_roundtrip_through_state_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let mut m = Mat::zeros(2, 2);
    m[(0, 0)] = c64::new(0.5, 0.0);
    m[(1, 1)] = c64::new(0.5, 0.0);
    m[(0, 1)] = c64::new(0.1, -0.2);
    m[(1, 0)] = c64::new(0.1, 0.2);
    let rho = DensityMatrix::new(m, vec![2], None).unwrap();
    harness::state_file::write_state(&path, &rho).unwrap();
    let back = harness::state_file::read_state(&path).unwrap();
    assert_eq!(back.matrix()[(0, 1)], c64::new(0.1, -0.2));
}
