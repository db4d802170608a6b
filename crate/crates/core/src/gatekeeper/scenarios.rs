use proptest::prelude::{prop_assert_eq, proptest};

use super::*;
use crate::base::{IssBound, TimeGrid, Trajectory};
use crate::error::Error;
use crate::sets::HalfPlane;
use crate::vehicles::{BackupPolicy, DoubleIntegrator, RadialBackup, RadialFactory, StopBackup, StopFactory};

const DT: f64 = 0.05;
const SPEED: f64 = 5.0;
const ACCEL: f64 = 5.0;

/// Straight run along +x at constant speed.
fn nominal(x0: f64, duration: f64) -> Trajectory<f64> {
    let grid = TimeGrid::spanning(0.0, duration, DT).unwrap();
    let states: Vec<Vec<f64>> =
        (0..=grid.n_steps()).map(|i| vec![x0 + SPEED * grid.time(i), 0.0, SPEED, 0.0]).collect();
    let inputs = vec![vec![0.0, 0.0]; grid.n_steps()];
    Trajectory::from_rows(grid, &states, &inputs, None).unwrap()
}

fn wall(x: f64) -> HalfPlane<f64> {
    HalfPlane::new([1.0, 0.0], x).unwrap()
}

fn cfg(horizon: f64, backup: f64, n: usize) -> GatekeeperConfig<f64> {
    GatekeeperConfig::new(horizon, backup, n, DT)
}

fn stop(radius: f64) -> StopFactory<f64> {
    StopFactory { accel_max: ACCEL, dt: DT, radius }
}

fn di() -> DoubleIntegrator<f64> {
    DoubleIntegrator::new(ACCEL)
}

/// Stopping distance from full speed under the discrete stop law.
fn stop_distance() -> f64 {
    StopBackup::new(&[0.0, 0.0, SPEED, 0.0], ACCEL, DT, 0.0).unwrap().stop_point(&[0.0, 0.0, SPEED, 0.0])[0]
}

#[test]
fn discrete_stop_distance() {
    // Constant deceleration landing on a step boundary: exactly v^2 / 2a.
    let d = stop_distance();
    assert!((d - SPEED * SPEED / (2.0 * ACCEL)).abs() < 1e-9, "{d}");
}

#[test]
fn initial_commitment_is_pure_backup() {
    let x0 = [0.0, 0.0, 0.0, 0.0];
    let st = CommitState::initialize(&cfg(4.0, 4.0, 10), &di(), &x0, 0.0, &wall(10.0), &stop(0.5)).unwrap();
    let c = st.current().unwrap();
    assert_eq!(c.t_switch, 0.0);
    assert_eq!(c.trajectory.switch_index(), Some(0));
    assert!(c.trajectory.states().all(|s| s == x0));
    assert_eq!(st.log()[0].outcome, Outcome::Initial);
}

#[test]
fn startup_failure_is_reported() {
    let x0 = [20.0, 0.0, 0.0, 0.0];
    let e = CommitState::initialize(&cfg(4.0, 4.0, 10), &di(), &x0, 0.0, &wall(10.0), &stop(0.5)).unwrap_err();
    assert!(matches!(e, Error::Startup(_)), "{e}");
}

#[test]
fn iterate_before_initialize_is_usage_error() {
    let mut st = CommitState::<f64, StopBackup<f64>>::empty();
    let nom = nominal(0.0, 10.0);
    let e = st.iterate(&cfg(4.0, 4.0, 10), &di(), &nom, nom.first_state(), 0.0, &wall(1e4), &stop(0.5)).unwrap_err();
    assert!(matches!(e, Error::Usage(_)));
    assert!(st.committed_state(&cfg(4.0, 4.0, 10), &di(), 0.0).is_err());
}

#[test]
fn open_field_commits_full_horizon() {
    let c = cfg(4.0, 4.0, 10);
    let nom = nominal(0.0, 10.0);
    let set = wall(1e4);
    let mut st = CommitState::initialize(&c, &di(), nom.first_state(), 0.0, &set, &stop(0.5)).unwrap();
    let rec = st.iterate(&c, &di(), &nom, nom.first_state(), 0.0, &set, &stop(0.5)).unwrap().clone();
    assert_eq!(rec.outcome, Outcome::Valid);
    assert_eq!(rec.t_switch, Some(4.0));
    assert_eq!(rec.candidates_tried, 1);
}

#[test]
fn wall_ahead_leaves_only_pure_backup() {
    let c = cfg(4.0, 4.0, 10);
    let w = 50.0;
    let x0 = w - stop_distance() - 0.5 - 0.1;
    let nom = nominal(x0, 10.0);
    let mut st = CommitState::initialize(&c, &di(), nom.first_state(), 0.0, &wall(w), &stop(0.5)).unwrap();
    let rec = st.iterate(&c, &di(), &nom, nom.first_state(), 0.0, &wall(w), &stop(0.5)).unwrap().clone();
    assert_eq!(rec.t_switch, Some(0.0));
    assert_eq!(rec.candidates_tried, 11);
    assert!(rec.reject_reason.contains("tube"), "{}", rec.reject_reason);
}

#[test]
fn largest_switch_time_matches_closed_form() {
    // Valid iff x0 + v T_S + stop + radius <= wall, searched on a 1 s grid.
    let c = cfg(8.0, 4.0, 8);
    let (x0, w, rad) = (10.0, 50.0, 0.5);
    let expected = ((w - x0 - stop_distance() - rad) / SPEED).floor().min(8.0);
    let nom = nominal(x0, 20.0);
    let mut st = CommitState::initialize(&c, &di(), nom.first_state(), 0.0, &wall(w), &stop(rad)).unwrap();
    let rec = st.iterate(&c, &di(), &nom, nom.first_state(), 0.0, &wall(w), &stop(rad)).unwrap();
    assert_eq!(rec.t_switch, Some(expected));
}

#[test]
fn near_miss_rejected_by_tube() {
    let c = cfg(4.0, 4.0, 10);
    let reach = SPEED * 4.0 + stop_distance();
    for (gap, ok) in [(0.01, true), (-0.01, false)] {
        let nom = nominal(50.0 - reach - gap, 10.0);
        let rep = evaluate_candidate(&c, &di(), Some(&nom), &wall(50.0), &stop(0.0), nom.first_state(), 0.0, 80);
        assert_eq!(rep.is_valid(), ok, "gap {gap}: {:?}", rep.rejection);
        if !ok {
            assert_eq!(rep.rejection.unwrap().kind(), "tube");
        }
    }
}

#[test]
fn short_backup_misses_terminal_set() {
    let c = cfg(4.0, 0.5, 10);
    let nom = nominal(0.0, 10.0);
    let rep = evaluate_candidate(&c, &di(), Some(&nom), &wall(1e4), &stop(0.5), nom.first_state(), 0.0, 40);
    assert!(matches!(rep.rejection, Some(Rejection::Terminal { .. })), "{:?}", rep.rejection);
}

fn robust_cfg(r: f64, w_bar: f64) -> GatekeeperConfig<f64> {
    let mut c = cfg(4.0, 4.0, 10);
    c.robust = true;
    c.r = r;
    c.w_bar = w_bar;
    c.iss = IssBound::new(1.0, 0.5, 2.0).unwrap();
    c
}

#[test]
fn backup_margin_requires_r_plus_r() {
    // R = 0.5, R + r = 1.0; the stop point sits 0.9 or 1.1 from the wall.
    let c = robust_cfg(0.5, 0.0);
    assert!((c.backup_margin() - 1.0).abs() < 1e-12);
    let reach = SPEED * 4.0 + stop_distance();
    let at = |gap: f64| {
        let nom = nominal(50.0 - reach - gap, 10.0);
        evaluate_candidate(&c, &di(), Some(&nom), &wall(50.0), &stop(0.0), nom.first_state(), 0.0, 80)
    };
    let short = at(0.9);
    assert_eq!(short.rejection.as_ref().map(|r| r.kind()), Some("backup-margin"), "{:?}", short.rejection);
    assert!(at(1.1).is_valid());
    // Inside the tube radius the tube check fires first.
    assert_eq!(at(0.4).rejection.map(|r| r.kind()), Some("tube"));
}

proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
    #[test]
    fn zero_margins_reduce_to_plain_validity(x0 in 0.0f64..40.0, n_s in 0usize..=80, rad in 0.0f64..1.0) {
        let plain = cfg(4.0, 4.0, 10);
        let robust = robust_cfg(0.0, 0.0);
        let nom = nominal(x0, 10.0);
        let (tr, b) = build_candidate(&plain, &di(), Some(&nom), &stop(rad), nom.first_state(), 0.0, n_s).unwrap();
        let a = check_valid(&plain, &di(), &tr, &wall(50.0), &b);
        let r = check_robustly_valid(&robust, &di(), &tr, &wall(50.0), &b);
        prop_assert_eq!(a, r);
    }
}

#[test]
fn failed_iteration_keeps_previous_commitment() {
    let c = cfg(4.0, 4.0, 10);
    let nom = nominal(0.0, 10.0);
    let mut st = CommitState::initialize(&c, &di(), nom.first_state(), 0.0, &wall(1e4), &stop(0.5)).unwrap();
    st.iterate(&c, &di(), &nom, nom.first_state(), 0.0, &wall(1e4), &stop(0.5)).unwrap();
    let before = st.current().unwrap().trajectory.clone();
    // The perceived boundary jumps behind the vehicle: nothing is valid.
    let x1 = nom.eval(1.0).unwrap();
    let rec = st.iterate(&c, &di(), &nom, &x1, 1.0, &wall(0.0), &stop(0.5)).unwrap();
    assert_eq!(rec.outcome, Outcome::RejectedAll);
    assert_eq!(rec.t_switch, None);
    let cur = st.current().unwrap();
    assert_eq!(cur.t_commit, 0.0);
    assert_eq!(cur.trajectory, before);
    assert_eq!(st.iteration(), 2);
}

#[test]
fn parallel_search_matches_sequential() {
    let mut seq = cfg(4.0, 4.0, 20);
    let mut par = seq.clone();
    par.parallel = true;
    seq.parallel = false;
    for x0 in [0.0, 12.3, 20.0, 25.0, 27.0, 30.0, 40.0] {
        let nom = nominal(x0, 10.0);
        let run = |c: &GatekeeperConfig<f64>| {
            let mut st = CommitState::initialize(c, &di(), nom.first_state(), 0.0, &wall(50.0), &stop(0.5))?;
            let rec = st.iterate(c, &di(), &nom, nom.first_state(), 0.0, &wall(50.0), &stop(0.5))?.clone();
            Ok::<_, Error>((rec.t_switch, rec.candidates_tried, st.current()?.trajectory.clone()))
        };
        match (run(&seq), run(&par)) {
            (Ok(a), Ok(b)) => assert_eq!(a, b, "x0 = {x0}"),
            (Err(_), Err(_)) => {}
            other => panic!("x0 = {x0}: {other:?}"),
        }
    }
}

#[test]
fn stop_commitment_extends_at_rest() {
    let c = cfg(4.0, 4.0, 10);
    let nom = nominal(0.0, 10.0);
    let mut st = CommitState::initialize(&c, &di(), nom.first_state(), 0.0, &wall(1e4), &stop(0.5)).unwrap();
    st.iterate(&c, &di(), &nom, nom.first_state(), 0.0, &wall(1e4), &stop(0.5)).unwrap();
    let end = st.current().unwrap().trajectory.last_state().to_vec();
    let far = st.committed_state(&c, &di(), 30.0).unwrap();
    assert!((far[0] - end[0]).abs() < 1e-9 && far[2].abs() < 1e-9);
    assert!((end[0] - (20.0 + stop_distance())).abs() < 1e-9);
    st.extend_until(&c, &di(), 30.0).unwrap();
    assert!(st.current().unwrap().trajectory.t_end() >= 30.0);
    assert_eq!(st.committed_state(&c, &di(), 30.0).unwrap(), far);
    assert!(matches!(st.committed_state(&c, &di(), -1.0), Err(Error::OutOfRange { .. })));
}

#[test]
fn radial_commitment_follows_moving_ball() {
    // Disk fire of radius 100 at the origin growing at 2 m/s; vehicle 150 m out.
    let c = cfg(2.0, 30.0, 4);
    let x0 = [150.0, 0.0, 0.0, 0.0];
    let factory = RadialFactory(RadialBackup::new(&x0, 100.0, 0.0).unwrap());
    let set = crate::sets::AnalyticDiskComplement::new([0.0, 0.0], crate::sets::linear_growth(100.0, 0.0, 2.0));
    let st = CommitState::initialize(&c, &DoubleIntegrator::unbounded(), &x0, 0.0, &set, &factory).unwrap();
    let t = 200.0;
    let x = st.committed_state(&c, &DoubleIntegrator::unbounded(), t).unwrap();
    let ball = st.current().unwrap().backup.backup_set();
    assert!(ball.contains(&x, t, 0.0).unwrap(), "{x:?}");
    assert!(x[0] > 100.0 + 2.0 * t);
}

#[test]
fn commit_log_csv() {
    let c = cfg(4.0, 4.0, 10);
    let nom = nominal(0.0, 10.0);
    let mut st = CommitState::initialize(&c, &di(), nom.first_state(), 0.0, &wall(1e4), &stop(0.5)).unwrap();
    st.iterate(&c, &di(), &nom, nom.first_state(), 0.0, &wall(1e4), &stop(0.5)).unwrap();
    let mut buf = Vec::new();
    st.write_log(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "k,t_k,T_S_star,verdict,reject_reason,compute_ms");
    assert!(lines[1].starts_with("0,0,0,INITIAL,,"));
    assert!(lines[2].starts_with("1,0,4,VALID,,"));
}

#[test]
fn shared_prefix_reproduces_standalone_candidates() {
    use super::candidate::TrackingPrefix;
    let mut c = robust_cfg(0.2, 0.05);
    c.pad = 0.3;
    for (x0, horizon) in [(0.0, 10.0), (12.0, 10.0), (26.0, 10.0), (20.0, 3.0)] {
        let nom = nominal(x0, horizon);
        let steps = c.switch_steps().unwrap();
        let prefix = TrackingPrefix::new(&c, &di(), &nom, &wall(50.0), nom.first_state(), 0.0, steps[0]).unwrap();
        for &n in &steps {
            let a = prefix.evaluate(&c, &di(), &wall(50.0), &stop(0.5), n);
            let b = evaluate_candidate(&c, &di(), Some(&nom), &wall(50.0), &stop(0.5), nom.first_state(), 0.0, n);
            assert_eq!(a.rejection, b.rejection, "x0 {x0} n {n}");
            assert_eq!(a.trajectory, b.trajectory, "x0 {x0} n {n}");
        }
    }
}
