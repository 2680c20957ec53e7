use mogd_core::metric::{bfgs_update, update_tradeoff, TradeoffState};
use mogd_core::{check_spd, BBScales, Metric, SimplexWeights};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spd(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
    let d = DVector::from_fn(n, |_, _| rng.random_range(lo..hi));
    &q * DMatrix::from_diagonal(&d) * q.transpose()
}

fn inf_norm_minus_identity(b: &DMatrix<f64>, h: &DMatrix<f64>) -> f64 {
    let mut p = b * h;
    for i in 0..p.nrows() {
        p[(i, i)] -= 1.0;
    }
    p.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

#[test]
fn thousand_chained_updates_keep_the_pair_consistent() {
    let n = 50;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_spd(n, 1.0, 20.0, &mut rng);
    let mut metric = Metric::identity(n);
    let mut accepted = 0;
    while accepted < 1000 {
        let s = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let noise = DVector::from_fn(n, |_, _| rng.random_range(-0.1..0.1));
        let y = &a * &s + noise;
        let u = bfgs_update(&metric, &s, &y).unwrap();
        if !u.accepted {
            continue;
        }
        accepted += 1;
        metric = u.metric;
        let secant = (metric.b() * &s - &y).norm();
        assert!(secant <= 1e-8 * y.norm(), "secant residual {secant:e}");
        let pair = inf_norm_minus_identity(metric.b(), metric.b_inv());
        assert!(pair <= 1e-8 * n as f64, "pair residual {pair:e} at update {accepted}");
        if accepted % 50 == 0 {
            assert!(check_spd(metric.b(), 1e-12).unwrap());
            assert!(check_spd(metric.b_inv(), 1e-12).unwrap());
        }
    }
}

#[test]
fn single_updates_from_random_pairs() {
    let n = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let start = Metric::from_spd(random_spd(n, 0.5, 5.0, &mut rng)).unwrap();
        let s = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let mut y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        if s.dot(&y) <= 0.1 * s.norm() * y.norm() {
            y = -y + &s;
        }
        let u = bfgs_update(&start, &s, &y).unwrap();
        if u.accepted {
            assert!(inf_norm_minus_identity(u.metric.b(), u.metric.b_inv()) <= 1e-10 * n as f64);
            assert!(check_spd(u.metric.b(), 0.0).unwrap());
        }
    }
}

#[test]
fn zero_step_leaves_tradeoff_metric_unchanged() {
    let jac = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -1.0, 0.5]);
    let x = DVector::from_vec(vec![0.3, -0.2]);
    let state = TradeoffState::new(Metric::identity(2), SimplexWeights::uniform(2, 1e-8), BBScales::ones(2), x.clone(), &jac).unwrap();
    let (next, accepted) = update_tradeoff(&state, &x, &jac).unwrap();
    assert!(!accepted);
    assert_eq!(next.metric, state.metric);
}

#[test]
fn concentrated_weights_track_one_hessian() {
    let n = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a0 = random_spd(n, 1.0, 10.0, &mut rng);
    let a1 = random_spd(n, 1.0, 10.0, &mut rng);
    let alpha = 2.5;
    let grad = |x: &DVector<f64>| DMatrix::from_rows(&[(&a0 * x).transpose(), (&a1 * x).transpose()]);
    let weights = SimplexWeights::new(DVector::from_vec(vec![1.0, 0.0]), 1e-8).unwrap();
    let scales = BBScales::new(DVector::from_vec(vec![alpha, 1.0]), 1e-3, 1e3).unwrap();
    let mut x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let mut state = TradeoffState::new(Metric::identity(n), weights, scales, x.clone(), &grad(&x)).unwrap();
    for _ in 0..n {
        let x_new = &x + DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let (next, accepted) = update_tradeoff(&state, &x_new, &grad(&x_new)).unwrap();
        assert!(accepted);
        let s = &x_new - &x;
        let y = &a0 * &s / alpha;
        assert!((next.metric.b() * &s - &y).norm() <= 1e-8 * y.norm());
        state = next;
        x = x_new;
    }
}

/// Textbook inverse BFGS on a single quadratic with exact line search.
fn reference_bfgs(a: &DMatrix<f64>, b: &DVector<f64>, x0: &DVector<f64>, steps: usize) -> Vec<DVector<f64>> {
    let n = x0.len();
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut x = x0.clone();
    let mut out = vec![x.clone()];
    for _ in 0..steps {
        let g = a * &x + b;
        let d = -(&h * &g);
        let t = -g.dot(&d) / d.dot(&(a * &d));
        let x_new = &x + &d * t;
        let s = &x_new - &x;
        let y = a * &s;
        let rho = 1.0 / s.dot(&y);
        let i = DMatrix::<f64>::identity(n, n);
        h = (&i - &s * y.transpose() * rho) * &h * (&i - &y * s.transpose() * rho) + &s * s.transpose() * rho;
        x = x_new;
        out.push(x.clone());
    }
    out
}

#[test]
fn single_objective_reproduces_classical_bfgs() {
    let n = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = random_spd(n, 1.0, 30.0, &mut rng);
    let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let x0 = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
    let steps = 4;
    let reference = reference_bfgs(&a, &b, &x0, steps);

    let jac = |x: &DVector<f64>| DMatrix::from_row_slice(1, n, (&a * x + &b).as_slice());
    let one = SimplexWeights::new(DVector::from_vec(vec![1.0]), 1e-8).unwrap();
    let mut x = x0.clone();
    let mut state = TradeoffState::new(Metric::identity(n), one, BBScales::ones(1), x.clone(), &jac(&x)).unwrap();
    for k in 1..=steps {
        let g = &a * &x + &b;
        let d = -(state.metric.b_inv() * &g);
        let t = -g.dot(&d) / d.dot(&(&a * &d));
        x = &x + &d * t;
        let (next, accepted) = update_tradeoff(&state, &x, &jac(&x)).unwrap();
        assert!(accepted);
        state = next;
        let err = (&x - &reference[k]).amax();
        assert!(err <= 1e-10 * reference[k].amax().max(1.0), "step {k}: {err:e}");
    }
}
