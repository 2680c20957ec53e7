use mogd_core::bb_scales::{compute_alpha, compute_alpha_euclidean};
use mogd_core::Metric;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spd(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
    let d = DVector::from_fn(n, |_, _| rng.random_range(lo..hi));
    &q * DMatrix::from_diagonal(&d) * q.transpose()
}

#[test]
fn quadratic_scales_are_rayleigh_quotients() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..200 {
        let n = rng.random_range(2..=8);
        let hessians: Vec<_> = (0..2).map(|_| random_spd(n, 0.5, 50.0, &mut rng)).collect();
        let s = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_rows(&[(&hessians[0] * &s).transpose(), (&hessians[1] * &s).transpose()]);
        let alpha = compute_alpha_euclidean(&s, &y, 1e-3, 1e3).unwrap();
        for (i, a) in hessians.iter().enumerate() {
            let expected = s.dot(&(a * &s)) / s.dot(&s);
            assert!((alpha.values()[i] - expected).abs() <= 1e-12 * expected);
        }
        let same = compute_alpha(&s, &y, &Metric::identity(n), 1e-3, 1e3).unwrap();
        assert_eq!(same, alpha);
    }
}

#[test]
fn scales_lie_between_relative_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let n = rng.random_range(2..=6);
        let a = random_spd(n, 0.5, 20.0, &mut rng);
        let b = random_spd(n, 0.5, 5.0, &mut rng);
        let metric = Metric::from_spd(b.clone()).unwrap();
        let s = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_row_slice(1, n, (&a * &s).as_slice());
        let alpha = compute_alpha(&s, &y, &metric, 1e-6, 1e6).unwrap().values()[0];

        // Eigenvalues of B⁻¹A through the symmetric form L⁻¹ A L⁻ᵀ with B = L Lᵀ.
        let l = b.cholesky().unwrap().l();
        let l_inv = l.try_inverse().unwrap();
        let eig = (&l_inv * &a * l_inv.transpose()).symmetric_eigen().eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        assert!(alpha >= lo * (1.0 - 1e-10) && alpha <= hi * (1.0 + 1e-10), "{alpha} outside [{lo}, {hi}]");
    }
}

#[test]
fn multiple_of_identity_divides_euclidean_scales() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let c: f64 = rng.random_range(0.1..10.0);
        let s = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let mut y = DMatrix::from_fn(2, n, |_, _| rng.random_range(-1.0..1.0));
        // Keep the first-branch case: ⟨s, y_i⟩ > 0.
        for mut row in y.row_iter_mut() {
            if row.transpose().dot(&s) <= 0.0 {
                row.neg_mut();
            }
        }
        let metric = Metric::from_spd(DMatrix::identity(n, n) * c).unwrap();
        let scaled = compute_alpha(&s, &y, &metric, 1e-12, 1e12).unwrap();
        let plain = compute_alpha_euclidean(&s, &y, 1e-12, 1e12).unwrap();
        for i in 0..2 {
            let expected = plain.values()[i] / c;
            assert!((scaled.values()[i] - expected).abs() <= 1e-12 * expected.max(1e-300));
        }
    }
}

#[test]
fn scales_respect_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..500 {
        let n = rng.random_range(1..=5);
        let s = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_fn(3, n, |_, _| rng.random_range(-1e4..1e4) * 10f64.powi(rng.random_range(-8..0)));
        let alpha = compute_alpha_euclidean(&s, &y, 1e-3, 1e3).unwrap();
        assert!(alpha.values().iter().all(|a| (1e-3..=1e3).contains(a)));
    }
}
