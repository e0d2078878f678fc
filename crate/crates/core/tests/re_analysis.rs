//! Structural invariants of the restricted-eigenvalue machinery on random
//! designs: monotonicity of the spectral tables, interval ordering of the
//! kappa estimates, and the implications between the sufficient conditions
//! and the cone bounds.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sparsebench_core::model::{
    cone_membership, CoefficientVector, DesignMatrix, GramMatrix,
};
use sparsebench_core::re::{
    check_assumptions, estimate_kappa, kappa1_lower, kappa2_lower, kernel_sparsity_check,
    projector_cone_check, restricted_correlation, restricted_eigenvalues, ReQuery,
};

const CAP: usize = 1_000_000;

fn random_unit_design(n: usize, m: usize, seed: u64) -> DesignMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    for j in 0..m {
        let norm = (x.column(j).norm_squared() / n as f64).sqrt();
        for i in 0..n {
            x[(i, j)] /= norm;
        }
    }
    DesignMatrix::new(x).unwrap()
}

#[test]
fn phi_tables_are_monotone_in_u() {
    for seed in 0..5u64 {
        let design = random_unit_design(24, 8, 100 + seed);
        let gram = design.gram();
        let mut last_min = f64::INFINITY;
        let mut last_max = 0.0f64;
        for u in 1..=8 {
            let (lo, hi, exact) = restricted_eigenvalues(&gram, u, CAP).unwrap();
            assert!(exact);
            assert!(lo <= last_min + 1e-12, "phi_min increased at u = {u}");
            assert!(hi >= last_max - 1e-12, "phi_max decreased at u = {u}");
            last_min = lo;
            last_max = hi;
        }
    }
}

#[test]
fn theta_is_monotone_in_each_argument() {
    let design = random_unit_design(20, 7, 42);
    let gram = design.gram();
    let theta = |m1: usize, m2: usize| restricted_correlation(&gram, m1, m2, CAP).unwrap().0;
    for m1 in 1..=2 {
        for m2 in 1..=3 {
            if m1 + m2 + 1 <= 7 {
                assert!(theta(m1, m2) <= theta(m1, m2 + 1) + 1e-12);
                assert!(theta(m1, m2) <= theta(m1 + 1, m2) + 1e-12);
            }
        }
    }
}

#[test]
fn kappa_m_variant_never_exceeds_plain_and_nesting_holds() {
    for seed in 0..4u64 {
        let design = random_unit_design(30, 7, 500 + seed);
        // m-variant uses the same witnesses, so upper_m <= upper.
        let query = ReQuery::new(2, 1.0).with_m(2).with_budget(8);
        let est = estimate_kappa(&design, &query).unwrap();
        assert!(est.upper_m.unwrap() <= est.upper + 1e-9);

        // RE(s', c0) implies RE(s, c0) for s' > s: the upper estimate
        // shrinks as s grows (supersets of supports, larger cones).
        let upper_s1 = estimate_kappa(&design, &ReQuery::new(1, 1.0).with_budget(8))
            .unwrap()
            .upper;
        let upper_s2 = estimate_kappa(&design, &ReQuery::new(2, 1.0).with_budget(8))
            .unwrap()
            .upper;
        let upper_s3 = estimate_kappa(&design, &ReQuery::new(3, 1.0).with_budget(8))
            .unwrap()
            .upper;
        assert!(upper_s2 <= upper_s1 + 1e-9);
        assert!(upper_s3 <= upper_s2 + 1e-9);
    }
}

#[test]
fn lemma_lower_bounds_stay_below_witnessed_upper() {
    // Whenever Assumption 1 (resp. 2) holds, kappa1 (resp. kappa2) is a
    // valid lower bound for the witnessed upper estimate.
    let mut checked1 = 0;
    let mut checked2 = 0;
    for seed in 0..12u64 {
        let design = random_unit_design(40, 7, 900 + seed);
        let gram = design.gram();
        let s = 1;
        let m = 2;
        let c0 = 1.0;
        let verdicts = check_assumptions(&gram, s, Some(m), c0, CAP).unwrap();
        let query = ReQuery::new(s, c0).with_m(m).with_budget(12);
        let est = estimate_kappa(&design, &query).unwrap();
        if verdicts[0].holds() {
            let (k1, exact) = kappa1_lower(&gram, s, c0, CAP).unwrap();
            assert!(exact);
            let k1 = k1.expect("assumption 1 holding implies kappa1 > 0");
            assert!(
                k1 <= est.upper + 1e-6,
                "kappa1 = {k1} above witnessed upper {}",
                est.upper
            );
            checked1 += 1;
        }
        if verdicts[1].holds() {
            let (k2, _) = kappa2_lower(&gram, s, m, c0, CAP).unwrap();
            let k2 = k2.expect("assumption 2 holding implies kappa2 > 0");
            assert!(
                k2 <= est.upper_m.unwrap() + 1e-6,
                "kappa2 = {k2} above witnessed m-upper {}",
                est.upper_m.unwrap()
            );
            checked2 += 1;
        }
    }
    assert!(checked1 > 0, "no design satisfied assumption 1");
    assert!(checked2 > 0, "no design satisfied assumption 2");
}

fn random_cone_vector(
    rng: &mut ChaCha8Rng,
    m: usize,
    j0: &[usize],
    c0: f64,
) -> CoefficientVector {
    let mut delta = vec![0.0; m];
    let mut on_l1 = 0.0;
    for &j in j0 {
        let v: f64 = rng.sample(StandardNormal);
        delta[j] = v;
        on_l1 += v.abs();
    }
    // Fill the complement and rescale it into the cone.
    let outside: Vec<usize> = (0..m).filter(|j| !j0.contains(j)).collect();
    let mut off_l1 = 0.0;
    for &j in &outside {
        let v: f64 = rng.sample(StandardNormal);
        delta[j] = v;
        off_l1 += v.abs();
    }
    let budget = rng.gen::<f64>() * c0 * on_l1;
    if off_l1 > 0.0 {
        for &j in &outside {
            delta[j] *= budget / off_l1;
        }
    }
    CoefficientVector::from_vec(delta)
}

#[test]
fn assumption4_implies_cone_quadratic_bound() {
    // Under assumption 4, (1/n)|X D|^2 >= (phi_min(s) - 2 c0 theta_{1,1} s)
    // |D_{J0}|_2^2 for every cone vector.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut exercised = 0;
    for seed in 0..10u64 {
        let design = random_unit_design(60, 6, 1300 + seed);
        let gram = design.gram();
        let s = 2;
        let c0 = 1.0;
        let verdicts = check_assumptions(&gram, s, None, c0, CAP).unwrap();
        if !verdicts[3].holds() {
            continue;
        }
        exercised += 1;
        let (phi_min, _, _) = restricted_eigenvalues(&gram, s, CAP).unwrap();
        let (theta11, _) = restricted_correlation(&gram, 1, 1, CAP).unwrap();
        let floor = phi_min - 2.0 * c0 * theta11 * s as f64;
        assert!(floor > 0.0);
        for _ in 0..50 {
            let j0 = vec![0, 3];
            let delta = random_cone_vector(&mut rng, 6, &j0, c0);
            assert!(cone_membership(&delta, &j0, c0 + 1e-9));
            let image = design.apply(delta.vector());
            let lhs = image.norm_squared() / design.n() as f64;
            let on: f64 = j0
                .iter()
                .map(|&j| delta.as_slice()[j] * delta.as_slice()[j])
                .sum();
            assert!(
                lhs >= floor * on - 1e-9,
                "cone bound violated: {lhs} < {floor} * {on}"
            );
        }
    }
    assert!(exercised > 0, "assumption 4 never held");
}

#[test]
fn projector_bound_holds_on_random_cone_vectors() {
    // Random 8-column design with assumption 1 holding: the projected norm
    // dominates kappa1 |D_{J01}|_2 on sampled cone vectors.
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut exercised = 0;
    for seed in 0..20u64 {
        let design = random_unit_design(80, 8, 2100 + seed);
        let gram = design.gram();
        let s = 1;
        let c0 = 1.0;
        if !check_assumptions(&gram, s, None, c0, CAP).unwrap()[0].holds() {
            continue;
        }
        exercised += 1;
        for trial in 0..100 {
            let j0 = vec![(trial % 8) as usize];
            let delta = random_cone_vector(&mut rng, 8, &j0, c0);
            let check = projector_cone_check(&design, &j0, s, &delta, c0 + 1e-9, CAP).unwrap();
            if let Some(holds) = check.holds_vs_kappa1 {
                assert!(holds, "projector bound failed: {check:?}");
            }
        }
        if exercised >= 3 {
            break;
        }
    }
    assert!(exercised > 0, "assumption 1 never held on the 8-column corpus");
}

#[test]
fn kernel_ok_implies_positive_kappa_upper() {
    for seed in 0..5u64 {
        let design = random_unit_design(20, 6, 3100 + seed);
        let check = kernel_sparsity_check(&design, 2, CAP).unwrap();
        assert!(check.ok);
        let est = estimate_kappa(&design, &ReQuery::new(2, 1.0).with_budget(6)).unwrap();
        assert!(
            est.upper > 0.0,
            "kernel ok but kappa upper = {}",
            est.upper
        );
    }
}

#[test]
fn restricted_oracle_rhs_consumes_membership_verdicts() {
    // End-to-end Corollary-style chain: decide which oracle supports clear
    // gamma, then restrict the oracle infimum to those sparsities.
    use sparsebench_core::bounds::{
        best_sparse_approx, oracle_inequality_rhs, KappaPlugin, OracleVariant,
    };
    use sparsebench_core::model::penalty_level;
    use sparsebench_core::re::{lambda_membership, LambdaMembership};

    let design = random_unit_design(40, 6, 7100);
    let f = design.apply(
        &nalgebra::DVector::from_vec(vec![2.0, 0.0, -1.0, 0.0, 0.0, 0.0]),
    );
    let s = 2;
    let oracle = best_sparse_approx(&design, &f, s, CAP).unwrap();
    let gamma = 0.25;
    let c0 = 1.0;
    let query = ReQuery::new(s, c0).with_budget(6);

    // Membership of the best support at each sparsity level.
    let mut admissible = Vec::new();
    for k in 1..=s {
        let level = best_sparse_approx(&design, &f, k, CAP).unwrap();
        let verdict =
            lambda_membership(&design, &level.support, gamma, c0, None, &query).unwrap();
        if verdict != LambdaMembership::WitnessedFails {
            admissible.push(k);
        }
    }
    assert!(!admissible.is_empty(), "gamma = {gamma} excluded everything");

    let penalty = penalty_level(4.0, 1.0, 40, 6).unwrap();
    let check = oracle_inequality_rhs(
        &oracle,
        0.0,
        2.0,
        KappaPlugin::certified(1.0),
        design.f_max(),
        &penalty,
        &OracleVariant::Corollary2 {
            gamma,
            admissible_sparsities: &admissible,
        },
    )
    .unwrap();
    assert!(check.applicable);
    assert!(check.rhs.is_finite());
    // The restricted infimum can only exceed the unrestricted one at the
    // same plug-in value.
    let unrestricted = oracle_inequality_rhs(
        &oracle,
        0.0,
        2.0,
        KappaPlugin::certified(gamma),
        design.f_max(),
        &penalty,
        &OracleVariant::Theorem3,
    )
    .unwrap();
    assert!(check.rhs >= unrestricted.rhs - 1e-9);
}

#[test]
fn perturbation_contract_verified_by_sampling() {
    // For cone vectors, the Rayleigh quotient under the perturbed Gram
    // matrix drops by at most eps_n (1 + c0)^2 |J0|.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let design = random_unit_design(30, 6, 4100);
    let gram = design.gram();
    let mut perturbed = gram.matrix().clone();
    for i in 0..6 {
        for j in 0..6 {
            if i != j {
                let bump = 0.002 * (((i * 7 + j * 3) % 5) as f64 - 2.0);
                perturbed[(i, j)] += bump;
            }
        }
    }
    let perturbed = 0.5 * (&perturbed + perturbed.transpose());
    let psi_n = GramMatrix::from_matrix(perturbed).unwrap();
    let j0 = vec![1, 4];
    let c0 = 1.0;
    let (eps_n, term) =
        sparsebench_core::re::gram_perturbation_bound(&psi_n, &gram, j0.len(), c0).unwrap();
    assert!(eps_n > 0.0);
    for _ in 0..200 {
        let delta = random_cone_vector(&mut rng, 6, &j0, c0);
        let v = DVector::from_column_slice(delta.as_slice());
        let norm_sq = v.norm_squared();
        if norm_sq < 1e-12 {
            continue;
        }
        let q_n = (psi_n.matrix() * &v).dot(&v) / norm_sq;
        let q = (gram.matrix() * &v).dot(&v) / norm_sq;
        assert!(q_n >= q - term - 1e-9, "perturbation contract violated");
    }
}
