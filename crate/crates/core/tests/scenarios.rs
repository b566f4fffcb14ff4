use chvrank_core::closure::{candidate_closure, HPolytope, Ineq, Point};
use chvrank_core::instance::is_critical;
use chvrank_core::num::rat;
use chvrank_core::*;
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn inst(c: &[i64], eps: Rational) -> Instance {
    make_instance(WeightVector::from_i64(c).unwrap(), eps).unwrap()
}

fn pt(x: &[(i64, i64)]) -> Point {
    x.iter().map(|&(p, q)| rat(p, q)).collect()
}

/// Every vertex of `inner` lies in `outer`.
fn contained(inner: &HPolytope, outer: &HPolytope) -> bool {
    inner.vertices().iter().all(|v| outer.contains(v))
}

#[test]
fn truncated_closures_form_a_superset_chain() {
    let square_cut = HPolytope::new(2, vec![Ineq::from_i64(&[1, 1], rat(3, 2))]).unwrap();
    // hand-built closures: the integer hulls, reached after one round in each case
    let triangle = HPolytope::from_points(2, &[pt(&[(0, 1), (0, 1)]), pt(&[(1, 1), (0, 1)]), pt(&[(0, 1), (1, 1)])]).unwrap();
    let segment = HPolytope::new(2, vec![Ineq::from_i64(&[0, 1], rat(0, 1))]).unwrap();
    let cases = [
        (HPolytope::knapsack_polytope(&inst(&[1, 1], rat(1, 4))).unwrap(), triangle.clone()),
        (square_cut, triangle),
        (HPolytope::knapsack_polytope(&inst(&[1, 2], rat(1, 4))).unwrap(), segment),
    ];
    for (k, (p, exact)) in cases.iter().enumerate() {
        let mut prev = p.clone();
        for kk in 1..=3 {
            let next = candidate_closure(p, kk).unwrap();
            assert!(contained(&next, &prev), "case {k}: K={kk} not inside K={}", kk - 1);
            assert!(contained(exact, &next), "case {k}: exact closure escapes K={kk}");
            prev = next;
        }
        // at K = 3 the truncation already matches the hand-built closure
        assert!(contained(&prev, exact), "case {k}");
    }
}

#[test]
fn integral_polytopes_are_fixed_points() {
    let cube = HPolytope::cube(3);
    let c = candidate_closure(&cube, 1).unwrap();
    assert_eq!(cube.vertices(), c.vertices());
    let t = diagonal_trace(&cube, 1, 2).unwrap();
    assert!(t.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn saturation_examples() {
    let p = HPolytope::knapsack_polytope(&inst(&[1, 1], rat(1, 4))).unwrap();
    let hull = ZeroOneHull::of(&p);
    assert!(!is_saturated(&p, &hull, &[BigInt::from(1), BigInt::from(1)]));
    assert!(is_saturated(&p, &hull, &[BigInt::from(0), BigInt::from(0)]));
    let q = candidate_closure(&p, 2).unwrap();
    assert!(is_saturated(&q, &ZeroOneHull::of(&q), &[BigInt::from(1), BigInt::from(1)]));
}

#[test]
fn distance_test_refusals_are_never_critical() {
    // m = 160 so the half-fill hypotheses hold; exact DP decides criticality
    let eps = rat(1, 64);
    let h = generate_hard_instance(160, Some(BigInt::from(64)), 11, BasisKind::Tight).unwrap();
    assert!(h.preconditions(&rat(1, 100)).holds);
    let i = h.instance(eps).unwrap();
    let cw: Vec<i64> = h.c.iter().map(|x| i64::try_from(x).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut refused = 0;
    for j in 0..60 {
        let v: Vec<i64> = if j % 3 == 0 {
            let lam = rng.gen_range(32..300i64);
            cw.iter().map(|x| x / lam).collect()
        } else {
            let mut v = vec![0i64; cw.len()];
            for _ in 0..rng.gen_range(1..200) {
                v[rng.gen_range(0..cw.len())] += 1;
            }
            v
        };
        let ct = ProfitVector::from_i64(&v);
        if ct.is_zero() {
            continue;
        }
        let nc = necessary_condition(&i, &ct, &h.bases, &NcConstants::default()).unwrap();
        if nc.certifies_noncritical {
            refused += 1;
            assert!(!is_critical(&i, &ct).unwrap().is_critical, "vector {j} refused yet critical");
        }
    }
    assert!(refused > 0);
}

#[test]
fn distance_test_is_flagged_outside_its_hypotheses() {
    let h = generate_hard_instance(16, None, 0, BasisKind::Powers).unwrap();
    let i = h.instance(rat(1, 16)).unwrap();
    let ct = ProfitVector::new(vec![BigInt::from(1); h.n()]);
    let nc = necessary_condition(&i, &ct, &h.bases, &NcConstants::default()).unwrap();
    assert!(!nc.eps_admissible);
    assert!(!nc.certifies_noncritical);
}

#[test]
fn audits_are_deterministic_and_witnesses_reverify() {
    let d = BigInt::from(1000);
    for s in 0..5 {
        let a = sample_hard_vector(4, &d, s);
        for mode in [AuditMode::Certified, AuditMode::Exhaustive, AuditMode::Heuristic] {
            let cfg = AuditConfig { mode, seed: 9, ..Default::default() };
            let r1 = diophantine_audit(&a, &d, &rat(1, 1000), &rat(200, 1), &cfg).unwrap();
            let r2 = diophantine_audit(&a, &d, &rat(1, 1000), &rat(200, 1), &cfg).unwrap();
            assert_eq!(r1, r2);
            if let Some(w) = &r1.witness {
                assert!(w.verify(&a, &r1.budget, &r1.residual_bound));
            }
        }
    }
}

#[test]
fn hard_instance_round_trips_through_json() {
    let h = generate_hard_instance(24, None, 5, BasisKind::Tight).unwrap();
    let s = serde_json::to_string(&h).unwrap();
    let back: HardInstance = serde_json::from_str(&s).unwrap();
    assert_eq!(back, h);
    back.validate().unwrap();
}

#[test]
fn gamma_certificate_replays_on_the_all_ones_vector() {
    let c = WeightVector::from_i64(&[1, 1, 1, 1]).unwrap();
    let opts = GammaOptions { lmin_budget: 2, ..Default::default() };
    let cert = verify_gamma(&c, None, &[rat(1, 4), rat(1, 8)], GammaMethod::ExactLmin, &opts).unwrap();
    assert!(cert.sound);
    assert_eq!(cert.gamma, rat(3, 8));
    assert!(verify_gamma_certificate(&cert).is_empty());
    let back: GammaCertificate = serde_json::from_str(&serde_json::to_string(&cert).unwrap()).unwrap();
    assert_eq!(back, cert);
}
