use std::ffi::CStr;
use std::ptr;

use gittins_ffi::*;

fn last_error() -> String {
    let p = gittins_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn toy_solution_round_trip() {
    unsafe {
        let mut arm = ptr::null_mut();
        assert_eq!(gittins_arm_toy(&mut arm), GittinsStatus::Ok);
        let mut sol = ptr::null_mut();
        assert_eq!(gittins_solve(arm, 0.9, 1e-6, &mut sol), GittinsStatus::Ok);
        let mut n = 0;
        assert_eq!(gittins_solution_num_states(sol, &mut n), GittinsStatus::Ok);
        assert_eq!(n, 5);
        let mut idx = [0.0; 5];
        let mut m = [0.0; 5];
        assert_eq!(gittins_solution_indices(sol, idx.as_mut_ptr(), 5), GittinsStatus::Ok);
        assert_eq!(gittins_solution_retirement(sol, m.as_mut_ptr(), 5), GittinsStatus::Ok);
        // state 0 pays the largest reward, 0.9, and keeps the arm there w.p. 0.1
        assert!((idx[0] - 0.9).abs() < 1e-5);
        for s in 0..5 {
            assert!((m[s] * (1.0 - 0.9) - idx[s]).abs() < 1e-9);
        }
        assert_eq!(gittins_solution_indices(sol, idx.as_mut_ptr(), 4), GittinsStatus::ShapeMismatch);
        assert!(last_error().contains("need 5"));
        gittins_solution_free(sol);
        gittins_arm_free(arm);
    }
}

#[test]
fn absorbing_states_index_is_their_reward() {
    // two absorbing states: index equals the state's reward
    let p = [1.0, 0.0, 0.0, 1.0];
    let r = [0.3, 0.7];
    unsafe {
        let mut arm = ptr::null_mut();
        assert_eq!(gittins_arm_new(2, p.as_ptr(), r.as_ptr(), &mut arm), GittinsStatus::Ok);
        let mut sol = ptr::null_mut();
        assert_eq!(gittins_solve(arm, 0.9, 1e-8, &mut sol), GittinsStatus::Ok);
        let mut idx = [0.0; 2];
        gittins_solution_indices(sol, idx.as_mut_ptr(), 2);
        assert!((idx[0] - 0.3).abs() < 1e-6 && (idx[1] - 0.7).abs() < 1e-6);
        gittins_solution_free(sol);
        gittins_arm_free(arm);
    }
}

#[test]
fn bad_inputs_report_status_and_message() {
    unsafe {
        let bad = [0.5, 0.4, 0.0, 1.0];
        let r = [0.0, 1.0];
        let mut arm = ptr::null_mut();
        assert_eq!(gittins_arm_new(2, bad.as_ptr(), r.as_ptr(), &mut arm), GittinsStatus::InvalidInput);
        assert!(arm.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(gittins_arm_new(2, ptr::null(), r.as_ptr(), &mut arm), GittinsStatus::NullPointer);
        assert_eq!(gittins_arm_toy(ptr::null_mut()), GittinsStatus::NullPointer);
        let mut toy = ptr::null_mut();
        gittins_arm_toy(&mut toy);
        assert_eq!(gittins_solve(toy, 1.5, 1e-6, &mut ptr::null_mut()), GittinsStatus::InvalidInput);
        gittins_arm_free(toy);
        gittins_arm_free(ptr::null_mut());
    }
}

#[test]
fn qgi_counters_follow_closed_form() {
    let (n, t_steps) = (5usize, 17u64);
    unsafe {
        let mut l = ptr::null_mut();
        assert_eq!(gittins_learner_new(GittinsAlgorithm::Qgi, n, 1, &mut l), GittinsStatus::Ok);
        let mut c = GittinsCounters::default();
        for k in 0..t_steps {
            let beta = if (k + 1) % 10 == 0 { 0.5 } else { 0.0 };
            let st = (k as usize) % n;
            let s = gittins_learner_update(l, 0, st, 0.5, (st + 1) % n, ptr::null(), ptr::null(), 0, 0.2, beta, 0.9, &mut c);
            assert_eq!(s, GittinsStatus::Ok);
        }
        assert_eq!(c.q_updates, t_steps * n as u64);
        assert_eq!(c.index_updates, (t_steps / 10) * n as u64);
        let mut v = f64::NAN;
        assert_eq!(gittins_learner_index(l, 0, 0, 0.9, &mut v), GittinsStatus::Ok);
        assert!(v.is_finite());
        assert_eq!(gittins_learner_index(l, 1, 0, 0.9, &mut v), GittinsStatus::OutOfRange);
        assert_eq!(
            gittins_learner_update(l, 0, n, 0.0, 0, ptr::null(), ptr::null(), 0, 0.1, 0.1, 0.9, ptr::null_mut()),
            GittinsStatus::OutOfRange
        );
        gittins_learner_free(l);
    }
}

#[test]
fn storage_entries_for_ten_heterogeneous_arms() {
    let expect = [
        (GittinsAlgorithm::Qgi, 101_000),
        (GittinsAlgorithm::Restart, 200_000),
        (GittinsAlgorithm::Qwi, 201_000),
    ];
    for (algo, want) in expect {
        unsafe {
            let mut l = ptr::null_mut();
            assert_eq!(gittins_learner_new(algo, 100, 10, &mut l), GittinsStatus::Ok);
            let mut e = 0;
            assert_eq!(gittins_learner_tracked_entries(l, &mut e), GittinsStatus::Ok);
            assert_eq!(e, want);
            gittins_learner_free(l);
        }
    }
}

#[test]
fn validator_accepts_tuned_schedule() {
    let mut ok = false;
    unsafe {
        assert_eq!(gittins_validate_two_timescale(0.2, 0.6, 5000, 5000, 10, 20_000, &mut ok), GittinsStatus::Ok);
    }
    assert!(ok);
}

#[test]
fn header_declares_every_entry_point() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/gittins.h")).unwrap();
    for name in [
        "gittins_last_error",
        "gittins_arm_new",
        "gittins_arm_toy",
        "gittins_arm_free",
        "gittins_solve",
        "gittins_solution_indices",
        "gittins_solution_retirement",
        "gittins_solution_free",
        "gittins_validate_two_timescale",
        "gittins_learner_new",
        "gittins_learner_update",
        "gittins_learner_index",
        "gittins_learner_free",
        "typedef struct GittinsLearner GittinsLearner",
        "GITTINS_STATUS_OK",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}
