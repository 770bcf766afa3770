mod common;

use common::{fixture, oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stride_core::governor::{
    build_moas, govern, linear_nearest, rollout, Governor, Membership, MoasArtifact, RolloutWrench, SampleGrid,
    DEFAULT_SAMPLE_BUDGET,
};
use stride_core::sim::{check_trace, run_scenario, Breakpoint, Wrench};
use stride_core::{AdmittanceGains, AxisBounds, AxisReference, GovernorError, MoasIndex, MoasSample, Scenario};

fn scenario() -> Scenario {
    Scenario::from_json(&fixture("pull_scenario.json")).unwrap()
}

fn small_index(env: RolloutWrench) -> MoasIndex {
    let sc = scenario();
    let grid = SampleGrid::uniform(&sc.bounds, [7; 5]);
    build_moas(&sc.gains, &sc.bounds, &env, &grid, DEFAULT_SAMPLE_BUDGET).unwrap().0
}

fn random_query(rng: &mut ChaCha8Rng, b: &AxisBounds, spread: f64) -> MoasSample {
    let s = b.scales();
    MoasSample::from_array(std::array::from_fn(|i| rng.gen_range(-spread..spread) * s[i]))
}

#[test]
fn retained_set_agrees_with_oracle_rollout() {
    for env in [RolloutWrench::Constant, scenario().rollout_wrench()] {
        let idx = small_index(env);
        let grid = &idx.grid;
        let mut retained = idx.samples().iter();
        let mut next = retained.next();
        for i in 0..grid.len() {
            let p = grid.point(i);
            let keep = oracle::admissible(&p, &idx.gains, &idx.bounds, &idx.env);
            if next == Some(&p) {
                assert!(keep, "stored sample {p:?} fails the oracle");
                next = retained.next();
            } else {
                assert!(!keep, "oracle admits dropped sample {p:?}");
            }
        }
        assert!(next.is_none());
    }
}

#[test]
fn rollout_matches_oracle_trajectory() {
    let sc = scenario();
    let env = sc.rollout_wrench();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..300 {
        let q = random_query(&mut rng, &sc.bounds, 1.0);
        let traj = oracle::trajectory(&q, &sc.gains, &sc.bounds, &env);
        let first_bad = traj.iter().position(|s| {
            !(s.x.abs() <= sc.bounds.x_max && s.v.abs() <= sc.bounds.v_max && s.w.abs() <= sc.bounds.w_max)
        });
        let out = rollout(&q, &sc.gains, &sc.bounds, &env);
        assert_eq!(out.first_violation.map(|t| t as usize), first_bad);
        let reached = &traj[first_bad.unwrap_or(traj.len() - 1)];
        assert!((out.final_state.x - reached.x).abs() <= 1e-12);
        assert!((out.final_state.v - reached.v).abs() <= 1e-12);
        assert!((out.final_state.w - reached.w).abs() <= 1e-9);
    }
}

#[test]
fn tighter_bounds_shrink_the_set() {
    let sc = scenario();
    let env = RolloutWrench::Constant;
    let grid = SampleGrid::uniform(&sc.bounds, [9; 5]);
    let (wide, _) = build_moas(&sc.gains, &sc.bounds, &env, &grid, DEFAULT_SAMPLE_BUDGET).unwrap();
    let tight_bounds = AxisBounds { x_max: sc.bounds.x_max / 2.0, ..sc.bounds };
    let (tight, _) =
        build_moas(&sc.gains, &tight_bounds, &env, &grid.restricted_to(&tight_bounds), DEFAULT_SAMPLE_BUDGET).unwrap();
    assert!(tight.len() < wide.len());
    for s in tight.samples() {
        assert!(wide.samples().contains(s));
        assert!(s.x.abs() <= tight_bounds.x_max && s.x_ref.abs() <= tight_bounds.x_max);
    }
}

#[test]
fn vacuous_bounds_keep_everything_and_builds_are_thread_independent() {
    let sc = scenario();
    let huge = AxisBounds { x_max: 1e6, v_max: 1e6, w_max: 1e9, ..sc.bounds };
    let grid = SampleGrid::uniform(&sc.bounds, [5; 5]);
    let (_, summary) = build_moas(&sc.gains, &huge, &RolloutWrench::Constant, &grid, DEFAULT_SAMPLE_BUDGET).unwrap();
    assert_eq!(summary.retained_fraction, 1.0);

    let grid = SampleGrid::uniform(&sc.bounds, [7; 5]);
    let build = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| build_moas(&sc.gains, &sc.bounds, &sc.rollout_wrench(), &grid, DEFAULT_SAMPLE_BUDGET))
            .unwrap()
            .0
    };
    assert_eq!(build(1).samples(), build(4).samples());
}

#[test]
fn kd_tree_matches_linear_scan() {
    let idx = small_index(RolloutWrench::Constant);
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..10_000 {
        let q = random_query(&mut rng, &idx.bounds, 1.5);
        let (hit, sample) = idx.nearest_hit(&q).unwrap();
        let scan = linear_nearest(idx.normalized_points(), &idx.normalize(&q)).unwrap();
        assert_eq!(hit.index, scan.index);
        assert_eq!(hit.dist2, scan.dist2);
        assert_eq!(sample, idx.samples()[scan.index]);
    }
    for s in idx.samples().iter().step_by(97) {
        let (hit, found) = idx.nearest_hit(s).unwrap();
        assert_eq!((found, hit.dist2), (*s, 0.0));
    }
}

#[test]
fn single_point_index() {
    let sc = scenario();
    let only = MoasSample::default();
    let idx = MoasIndex::from_samples(vec![only], sc.gains, sc.bounds, RolloutWrench::Constant, SampleGrid::default_for(&sc.bounds));
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..100 {
        assert_eq!(idx.nearest(&random_query(&mut rng, &sc.bounds, 3.0)).unwrap(), only);
    }
}

#[test]
fn infinite_tolerance_never_modifies() {
    let idx = small_index(RolloutWrench::Constant);
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for _ in 0..500 {
        let q = random_query(&mut rng, &idx.bounds, 3.0);
        let out = govern(&idx, &q, f64::INFINITY).unwrap();
        assert!(!out.modified);
        assert_eq!(out.reference, q.reference());
    }
}

#[test]
fn tolerance_membership_keeps_stored_samples() {
    let idx = small_index(RolloutWrench::Constant);
    let g = Governor::with_default_tolerance(idx.clone());
    for s in idx.samples().iter().step_by(53) {
        assert!(!g.govern(s).unwrap().modified);
    }
}

#[test]
fn exact_governor_is_idempotent_and_sound() {
    let sc = scenario();
    let idx = small_index(sc.rollout_wrench());
    let g = Governor::new(idx.clone(), Membership::Exact { candidates: 64 });
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let mut verified = 0;
    for _ in 0..400 {
        let mut q = random_query(&mut rng, &idx.bounds, 1.0);
        q.x_ref *= 2.0;
        let out = g.govern(&q).unwrap();
        if !out.verified {
            continue;
        }
        verified += 1;
        let applied = q.with_reference(out.reference);
        assert!(oracle::admissible(&applied, &idx.gains, &idx.bounds, &idx.env));
        let again = g.govern(&applied).unwrap();
        assert!(!again.modified);
        assert_eq!(again.reference, out.reference);
    }
    assert!(verified > 200, "{verified}");
}

#[test]
fn reference_beyond_the_limit_is_replaced() {
    let sc = scenario();
    let idx = small_index(sc.rollout_wrench());
    let q = MoasSample { x_ref: 2.0 * sc.bounds.x_max, ..Default::default() };
    // exact: the new references are admissible from the query state
    let out = Governor::new(idx.clone(), Membership::Exact { candidates: 64 }).govern(&q).unwrap();
    assert!(out.modified && out.verified);
    assert!(out.reference.x_ref.abs() <= sc.bounds.x_max);
    assert!(oracle::admissible(&q.with_reference(out.reference), &idx.gains, &idx.bounds, &idx.env));
    // tolerance: the references come from an admissible stored sample
    let out = Governor::new(idx.clone(), Membership::Tolerance { tol: idx.default_tolerance() }).govern(&q).unwrap();
    let nearest = idx.nearest(&q).unwrap();
    assert!(out.modified);
    assert_eq!(out.reference, nearest.reference());
    assert!(oracle::admissible(&nearest, &idx.gains, &idx.bounds, &idx.env));
}

#[test]
fn artifact_round_trip_and_fingerprint() {
    let idx = small_index(RolloutWrench::Constant);
    let json = idx.to_artifact().to_json();
    let back = MoasArtifact::from_json(&json).unwrap().into_index(Some((&idx.gains, &idx.bounds, &idx.env))).unwrap();
    assert_eq!(back.samples(), idx.samples());
    assert_eq!(back.fingerprint(), idx.fingerprint());

    let other = AdmittanceGains { k_d: idx.gains.k_d + 1.0, ..idx.gains };
    let err = MoasArtifact::from_json(&json).unwrap().into_index(Some((&other, &idx.bounds, &idx.env)));
    assert!(matches!(err, Err(GovernorError::FingerprintMismatch { .. })));
}

/// Step amplitudes and disturbances around the benchmark pull.
fn scenario_family() -> Vec<Scenario> {
    let base = scenario();
    let mut out = Vec::new();
    for amp in [0.04, 0.08, 0.12, 0.2, 0.3, -0.2] {
        for dist in [0.0, 4.0, -6.0] {
            for x0 in [0.0, 0.09, 0.15] {
                let mut s = base.clone();
                s.references = vec![
                    Breakpoint { t: 0.0, value: AxisReference::default() },
                    Breakpoint { t: 0.3, value: AxisReference { x_ref: amp, w_ref: 0.0 } },
                    Breakpoint { t: 2.5, value: AxisReference { x_ref: 0.0, w_ref: 0.0 } },
                ];
                s.contact.disturbance = vec![
                    Breakpoint { t: 1.0, value: Wrench { w: dist } },
                    Breakpoint { t: 1.5, value: Wrench { w: 0.0 } },
                ];
                s.initial.x = x0;
                s.duration = 4.0;
                out.push(s);
            }
        }
    }
    out
}

#[test]
fn governor_never_adds_violations() {
    let base = scenario();
    let grid = SampleGrid::default_for(&base.bounds);
    let (idx, _) =
        build_moas(&base.gains, &base.bounds, &base.rollout_wrench(), &grid, DEFAULT_SAMPLE_BUDGET).unwrap();
    let mut unsafe_runs = 0;
    for s in scenario_family() {
        let mut plain = s.clone();
        plain.governor.enabled = false;
        let without = check_trace(&run_scenario(&plain, None).unwrap(), &s.bounds);
        let governed = run_scenario(&s, Some(&idx)).unwrap();
        let with = check_trace(&governed, &s.bounds);
        assert!(with.total() <= without.total(), "{with:?} vs {without:?}");
        let first = &governed.records[0];
        let start = MoasSample { x: first.x, v: first.v, x_ref: 0.0, w: first.w_meas, w_ref: 0.0 };
        if idx.admissible(&start) {
            assert!(with.is_clean(), "start {start:?}: {with:?}");
        }
        unsafe_runs += usize::from(!without.is_clean());
    }
    assert!(unsafe_runs > 0);
}
