use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use revjump::model::neutral;
use revjump::reversal::{reverse_model, ReversedModel};
use revjump::simulate::*;
use revjump::stationary::solve_stationary_shooting;
use revjump::stats::{batch_means_iat, ks_one_sample, mean, variance};
use revjump::verify::check_interarrivals;
use revjump::Model;

fn reversed(m: &Model) -> ReversedModel {
    let pi = Arc::new(solve_stationary_shooting(m, 1e-12).unwrap());
    reverse_model(m, pi).unwrap()
}

#[test]
fn identical_seeds_give_identical_paths() {
    let m = neutral(0.3, 0.5, 1.0).unwrap();
    let p = SimParams::new(5.0, 1e-3).recording_every(10);
    let a = simulate_forward(&m, 0.4, &p, 17, 3).unwrap();
    let b = simulate_forward(&m, 0.4, &p, 17, 3).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, simulate_forward(&m, 0.4, &p, 17, 4).unwrap());

    let r = reversed(&m);
    let opts = BackwardOptions::default();
    let c = simulate_backward(&r, 0.4, &p, &opts, 17, 3).unwrap();
    assert_eq!(c, simulate_backward(&r, 0.4, &p, &opts, 17, 3).unwrap());
}

#[test]
fn states_stay_in_the_unit_interval() {
    let p = SimParams::new(20.0, 2e-3).without_refinement();
    for (mu, lam) in [(0.05, 1.0), (0.2, 3.0), (2.0, 1.0)] {
        let m = neutral(mu, mu, lam).unwrap();
        let r = reversed(&m);
        for path in [
            simulate_forward(&m, 0.0, &p, 1, 0).unwrap(),
            simulate_forward_eps(&m, 0.1, 1.0, &p, 1, 0).unwrap(),
            simulate_backward(&r, 0.5, &p, &BackwardOptions::default(), 1, 0).unwrap(),
        ] {
            assert!(path.states.iter().all(|x| (0.0..=1.0).contains(x)), "{:?}", path.scheme);
            assert!(path.events.windows(2).all(|w| w[0].tick < w[1].tick));
        }
    }
}

#[test]
fn jump_count_is_poisson() {
    let m = neutral(0.5, 0.5, 1.0).unwrap();
    let path = simulate_forward(&m, 0.5, &SimParams::new(1000.0, 1e-2).recording_every(100), 5, 0).unwrap();
    let n = path.events.len() as f64;
    println!("jumps {n}");
    assert!((n - 1000.0).abs() < 3.0 * 1000f64.sqrt());
    assert!(path.events.iter().all(|e| e.to == 0.0 || e.to == 1.0));
}

#[test]
fn inter_arrivals_are_exponential() {
    let m = neutral(0.5, 0.5, 2.0).unwrap();
    let p = SimParams::new(1000.0, 1e-2).recording_every(100);
    let paths = run_replicates(6, |r| simulate_forward(&m, 0.5, &p, 9, r)).unwrap();
    let c = check_interarrivals(&paths, 2.0, 0.01);
    println!("{c:?}");
    assert!(c.samples >= 10_000);
    assert!(c.passed());
    assert!(!check_interarrivals(&paths, 2.2, 0.01).passed());
}

#[test]
fn degenerate_jump_law_always_lands_at_one() {
    let m = Model::custom("p*(1-p)", "0.5*(1-p) - 0.5*p", "0", 1.0, &BTreeMap::new()).unwrap();
    let path = simulate_forward(&m, 0.5, &SimParams::new(200.0, 1e-2), 2, 0).unwrap();
    assert!(path.events.len() > 100);
    assert!(path.events.iter().all(|e| e.to == 1.0));
}

#[test]
fn eps_jumps_land_in_the_strip() {
    let m = neutral(0.5, 0.5, 1.0).unwrap();
    let p = SimParams::new(200.0, 1e-2);
    let path = simulate_forward_eps(&m, 1e-6, 0.5, &p, 4, 0).unwrap();
    assert!(path.events.len() > 100);
    assert!(path.events.iter().all(|e| e.to < 1e-6 || e.to > 1.0 - 1e-6));
    // the clock is shared with the forward scheme
    let plain = simulate_forward(&m, 0.5, &p, 4, 0).unwrap();
    let ticks = |q: &Path| q.events.iter().map(|e| e.tick).collect::<Vec<_>>();
    assert_eq!(ticks(&path), ticks(&plain));
}

#[test]
fn neutral_symmetric_mean_is_one_half() {
    let m = neutral(1.0, 1.0, 0.0).unwrap();
    let path = simulate_forward(&m, 0.5, &SimParams::new(4000.0, 1e-2).recording_every(10), 8, 0).unwrap();
    let xs = &path.states[100..];
    let tau = batch_means_iat(xs, 40).unwrap();
    let se = (variance(xs) * tau / xs.len() as f64).sqrt();
    println!("mean {} se {se}", mean(xs));
    assert!((mean(xs) - 0.5).abs() < 3.0 * se);
}

#[test]
fn reversal_of_paths() {
    let m = neutral(0.3, 0.3, 2.0).unwrap();
    let path = simulate_forward(&m, 0.5, &SimParams::new(10.0, 1e-2).recording_every(5), 1, 0).unwrap();
    assert!(!path.events.is_empty());
    let back = reverse_path(&path);
    assert!(back.reversed);
    assert_eq!(reverse_path(&back), path);
    let t = path.t_end();
    for (e, b) in path.events.iter().zip(back.events.iter().rev()) {
        assert!((back.event_time(b) - (t - path.event_time(e))).abs() < 1e-12);
        assert_eq!((b.from, b.to), (e.to, e.from));
    }

    let mut flat = path.clone();
    flat.states.iter_mut().for_each(|x| *x = 0.25);
    flat.events.clear();
    let rf = reverse_path(&flat);
    assert_eq!(rf.states, flat.states);

    let mut one = flat.clone();
    one.events = vec![JumpEvent { tick: 3 * TICKS_PER_STEP, from: 0.7, to: 1.0 }];
    let ro = reverse_path(&one);
    assert_eq!(ro.events.len(), 1);
    assert!((ro.event_time(&ro.events[0]) - (t - 0.03)).abs() < 1e-12);
    assert_eq!((ro.events[0].from, ro.events[0].to), (1.0, 0.7));
}

#[test]
fn without_jumps_the_reversed_process_never_jumps() {
    let r = reversed(&neutral(0.2, 0.4, 0.0).unwrap());
    let path = simulate_backward(&r, 0.5, &SimParams::new(200.0, 1e-2), &BackwardOptions::default(), 3, 0).unwrap();
    assert!(path.events.is_empty());
}

#[test]
fn infinite_rate_boundaries_are_left_at_once() {
    let m = neutral(1.0, 1.0, 1.0).unwrap();
    let r = reversed(&m);
    let p = SimParams::new(50.0, 1e-3).recording_every(10);
    let opts = BackwardOptions::default();
    let path = simulate_backward(&r, 0.0, &p, &opts, 6, 0).unwrap();
    assert_eq!(path.events[0].tick, 0);
    assert!(path.events.len() > 20);
    for e in &path.events {
        assert!(e.from == 0.0 || e.from == 1.0);
        assert!(e.to > 0.0 && e.to < 1.0);
    }
    assert_eq!(path.dwell_steps, [0, 0]);
    assert_eq!(path.boundary_dwell(0) + path.boundary_dwell(1), 0);
}

#[test]
fn finite_rate_boundaries_hold_the_process() {
    let m = neutral(0.2, 0.2, 1.0).unwrap();
    let r = reversed(&m);
    let p = SimParams::new(50.0, 1e-3).recording_every(10);
    let path = simulate_backward(&r, 0.5, &p, &BackwardOptions::default(), 6, 0).unwrap();
    println!("near time {:?}, jumps {}", path.near_time, path.events.len());
    assert!(path.near_time[0] > 0.0 && path.near_time[1] > 0.0);
    assert!(path.events.iter().all(|e| (e.from == 0.0 || e.from == 1.0) && e.to > 0.0 && e.to < 1.0));
}

#[test]
fn backward_targets_follow_the_target_law() {
    let m = neutral(1.0, 0.6, 1.0).unwrap();
    let r = reversed(&m);
    let p = SimParams::new(2000.0, 1e-2).recording_every(100);
    let paths = run_replicates(8, |k| simulate_backward(&r, 0.5, &p, &BackwardOptions::default(), 12, k)).unwrap();
    for i in 0..2 {
        let xs: Vec<f64> = paths.iter().flat_map(|q| q.events.iter()).filter(|e| e.from == i as f64).map(|e| e.to).collect();
        let law = r.targets[i].as_ref().unwrap();
        let ks = ks_one_sample(&xs, |x| law.cdf(x));
        println!("boundary {i}: {} jumps, {ks:?}", xs.len());
        assert!(xs.len() >= 4000);
        assert!(ks.p_value > 0.01);
    }
}

#[test]
fn local_time_functional_is_small_at_short_times() {
    // E[L(t)^2] / t -> 0 at an accessible boundary, started at the boundary
    let m = neutral(0.2, 0.2, 1.0).unwrap();
    let r = reversed(&m);
    let opts = BackwardOptions { disable_clock: [true; 2], ..Default::default() };
    let mut points = Vec::new();
    for t in [1e-3, 1e-4, 1e-5] {
        let dt = t / 1000.0;
        let eps = 10.0 * (dt * m.v_prime[0]).sqrt();
        let p = SimParams::new(t, dt);
        let paths = run_replicates(2000, |k| simulate_backward(&r, 0.0, &p, &opts, 21, k)).unwrap();
        let sq: Vec<f64> = paths
            .iter()
            .map(|q| {
                let l: f64 = q.states[1..].iter().filter(|&&x| x < eps).map(|&x| dt / (eps * r.pi.eval(x))).sum();
                l * l
            })
            .collect();
        points.push((t.ln(), mean(&sq).ln()));
    }
    let slope = (points[2].1 - points[0].1) / (points[2].0 - points[0].0);
    println!("log E[L^2] vs log t: {points:?}, slope {slope}");
    assert!(slope > 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn forward_states_are_bounded(mu0 in 0.05f64..2.0, mu1 in 0.05f64..2.0, lam in 0.0f64..4.0, seed in 0u64..1000, x0 in 0.0f64..=1.0) {
        let m = neutral(mu0, mu1, lam).unwrap();
        let path = simulate_forward(&m, x0, &SimParams::new(2.0, 1e-2), seed, 0).unwrap();
        prop_assert!(path.states.iter().all(|x| (0.0..=1.0).contains(x)));
        prop_assert!(path.events.iter().all(|e| e.to == 0.0 || e.to == 1.0));
    }

    #[test]
    fn path_reversal_is_an_involution(seed in 0u64..1000, lam in 0.0f64..5.0) {
        let m = neutral(0.4, 0.6, lam).unwrap();
        let path = simulate_forward(&m, 0.5, &SimParams::new(3.0, 1e-2).recording_every(3), seed, 1).unwrap();
        prop_assert_eq!(reverse_path(&reverse_path(&path)), path);
    }
}
