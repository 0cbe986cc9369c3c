use std::sync::Arc;

use revjump::model::{coef, neutral, wright_fisher};
use revjump::quad::{GridParams, PanelGrid};
use revjump::stationary::*;

fn beta22(p: f64) -> f64 {
    6.0 * p * (1.0 - p)
}

fn grid() -> Arc<PanelGrid> {
    Arc::new(PanelGrid::new(GridParams::default()))
}

#[test]
fn shooting_reproduces_beta_density_without_jumps() {
    let m = neutral(1.0, 1.0, 0.0).unwrap();
    let d = solve_stationary_shooting(&m, 1e-12).unwrap();
    let err = (0..d.len()).map(|k| (d.values[k] - beta22(d.grid[k])).abs()).fold(0.0, f64::max);
    println!("shooting sup err {err:e}");
    assert!(err < 1e-6);
}

#[test]
fn nullspace_reproduces_beta_density_without_jumps() {
    let m = neutral(1.0, 1.0, 0.0).unwrap();
    let d = solve_stationary_nullspace(&m, 2000).unwrap();
    let err = (0..d.len()).map(|k| (d.values[k] - beta22(d.grid[k])).abs()).fold(0.0, f64::max);
    println!("nullspace sup err {err:e} residual {:e}", d.diagnostics.residual);
    assert!(err < 1e-3);
    assert!(d.diagnostics.residual < 1e-10);
}

#[test]
fn three_methods_agree_for_neutral_bottlenecks() {
    let m = neutral(0.3, 0.3, 1.0).unwrap();
    let s = solve_stationary_shooting(&m, 1e-12).unwrap();
    let n = solve_stationary_nullspace(&m, 2000).unwrap();
    let c = stationary_neutral_closed_form(0.3, 0.3, 1.0, grid()).unwrap();
    let f = comparison_faces();
    let (sn, sc, nc) = (s.relative_l1(&n, &f), s.relative_l1(&c, &f), n.relative_l1(&c, &f));
    println!("L1 shooting-null {sn:e} shooting-closed {sc:e} null-closed {nc:e}");
    println!("kappa {} {} / {} {} / {} {}", s.kappa0, s.kappa1, n.kappa0, n.kappa1, c.kappa0, c.kappa1);
    assert!(sn < 1e-3 && sc < 1e-3 && nc < 1e-3);
    for d in [&s, &n, &c] {
        assert!((d.kappa0 - 0.5).abs() < 1e-8, "{:?} kappa0 {}", d.method, d.kappa0);
    }
}

#[test]
fn mean_matches_mutation_ratio() {
    let m = neutral(0.3, 0.7, 1.0).unwrap();
    let s = solve_stationary_shooting(&m, 1e-12).unwrap();
    let n = solve_stationary_nullspace(&m, 2000).unwrap();
    println!("mean {} {} kappa1 {} {}", s.mean(), n.mean(), s.kappa1, n.kappa1);
    assert!((s.mean() - 0.3).abs() < 1e-6);
    assert!((s.kappa1 - 0.3).abs() < 1e-6);
    assert!((n.mean() - 0.3).abs() < 1e-4);
}

#[test]
fn closed_form_small_rate_limit() {
    let c = stationary_neutral_closed_form(0.7, 1.3, 1e-8, grid()).unwrap();
    let b = stationary_neutral_closed_form(0.7, 1.3, 0.0, grid()).unwrap();
    let err = (0..c.len()).map(|k| (c.values[k] - b.values[k]).abs()).fold(0.0, f64::max);
    let beta = |p: f64| p.powf(0.4) * (1.0 - p).powf(1.6) / 0.21140902394842395;
    let oracle = (0..b.len()).map(|k| (b.values[k] - beta(b.grid[k])).abs()).fold(0.0, f64::max);
    println!("closed small-rate sup err {err:e}, zero-rate vs beta {oracle:e}");
    assert!(oracle < 1e-8);
    assert!(err < 1e-5);
}

#[test]
fn selection_models_agree_across_methods() {
    for (mu0, mu1, s, lam) in [(0.2, 0.6, 2.0, 1.0), (0.5, 0.5, -1.0, 2.0), (1.5, 0.1, 0.0, 0.5)] {
        let m = wright_fisher(mu0, mu1, coef(move |_| s), lam, coef(|p: f64| p)).unwrap();
        let a = solve_stationary_shooting(&m, 1e-12).unwrap();
        let b = solve_stationary_nullspace(&m, 2000).unwrap();
        let d = a.relative_l1(&b, &comparison_faces());
        println!("({mu0},{mu1},{s},{lam}) L1 {d:e} kappa {} {}", a.kappa0, b.kappa0);
        println!("  asym {:?}", a.boundary_asymptotics);
        assert!(d < 1e-3);
    }
}

fn moment_residuals(d: &StationaryDensity, m: &revjump::Model) -> f64 {
    (1..=8)
        .map(|k| {
            let kf = k as f64;
            let g = |p: f64| {
                m.generator(p, p.powi(k), kf * p.powi(k - 1), kf * (kf - 1.0) * p.powi((k - 2).max(0)), 0.0, 1.0)
            };
            d.integrate(g).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn stationarity_identity_holds_for_polynomials() {
    for m in [
        neutral(0.3, 0.3, 1.0).unwrap(),
        neutral(0.2, 0.9, 3.0).unwrap(),
        wright_fisher(0.4, 0.6, coef(|p: f64| 3.0 * p), 1.0, coef(|p: f64| p * p)).unwrap(),
    ] {
        let d = solve_stationary_shooting(&m, 1e-12).unwrap();
        let r = moment_residuals(&d, &m);
        println!("{} moment residual {r:e} norm {:e}", m.label, d.normalization_residual);
        assert!(r < 1e-6);
        assert!((d.total_mass() - 1.0).abs() < 1e-10);
        assert!((d.kappa0 + d.kappa1 - 1.0).abs() < 1e-10);
    }
}

#[test]
fn boundary_descriptors_follow_the_four_regimes() {
    let d = solve_stationary_shooting(&neutral(0.2, 0.7, 1.0).unwrap(), 1e-12).unwrap();
    let a = d.boundary_asymptotics[0];
    assert_eq!(a.case, AsymptoticCase::Power);
    assert!((a.beta + 0.6).abs() < 1e-12);
    assert!((a.fitted_beta + 0.6).abs() < 1e-4 && a.reliable);

    let d = solve_stationary_shooting(&neutral(0.5, 0.7, 1.0).unwrap(), 1e-12).unwrap();
    let a = d.boundary_asymptotics[0];
    assert_eq!(a.case, AsymptoticCase::Log);
    assert!((a.predicted - 2.0 * d.kappa0).abs() < 1e-12);
    assert!((a.coefficient / a.predicted - 1.0).abs() < 1e-4);

    let d = solve_stationary_shooting(&neutral(1.0, 1.0, 1.0).unwrap(), 1e-12).unwrap();
    let a = d.boundary_asymptotics[0];
    assert_eq!(a.case, AsymptoticCase::Constant);
    assert!((a.predicted - 1.0).abs() < 1e-8);
    assert!((d.eval(1e-10) - 1.0).abs() < 1e-6);

    let m = revjump::Model::custom("p*(1-p)", "0.3*(1-p) - 0.4*p", "1", 1.0, &Default::default()).unwrap();
    let d = solve_stationary_shooting(&m, 1e-12).unwrap();
    let a = d.boundary_asymptotics[1];
    assert_eq!(a.case, AsymptoticCase::PowerNoJump);
    assert!((a.fitted_beta + 0.2).abs() < 1e-4 && a.reliable, "{a:?}");
    assert_eq!(d.kappa1, 0.0);
}

#[test]
fn ode_residual_shrinks_with_tolerance() {
    let m = neutral(0.3, 0.6, 1.0).unwrap();
    let coarse = solve_stationary_shooting(&m, 1e-3).unwrap();
    let fine = solve_stationary_shooting(&m, 1e-10).unwrap();
    println!("ode residual {:e} -> {:e}", coarse.diagnostics.residual, fine.diagnostics.residual);
    assert!(fine.diagnostics.residual < coarse.diagnostics.residual);
}
