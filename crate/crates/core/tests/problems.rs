use mogd_core::problems::{
    bk1, jacobian_fd_error, load_problem, make_quadratic, sample_initial, save_problem, Objectives, Quadratic,
    QuadraticSpec,
};
use mogd_core::{check_spd, Error, ProblemRegistry};
use nalgebra::DVector;

#[test]
fn builtin_jacobians_match_central_differences() {
    let reg = ProblemRegistry::with_builtins();
    for name in ["BK1", "JOS1a", "JOS1b", "JOS1c", "JOS1d", "QPa", "QPb", "QPc", "QPd", "QPg"] {
        let p = reg.instantiate(name, 3).unwrap();
        for k in 0..100 {
            let x = sample_initial(&p, k).unwrap();
            let err = jacobian_fd_error(&p, &x, 1e-6).unwrap();
            assert!(err <= 1e-5, "{name} point {k}: {err:e}");
        }
    }
}

#[test]
fn bk1_known_values() {
    let p = bk1();
    let x = DVector::from_vec(vec![5.0, 5.0]);
    assert_eq!(p.eval_objectives(&x).unwrap().as_slice(), &[50.0, 0.0]);
    let j = p.eval_jacobian(&x).unwrap();
    assert_eq!(j.row(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0]);
    assert_eq!((p.lower()[0], p.upper()[1]), (-5.0, 10.0));
}

fn quadratic_terms(spec: &QuadraticSpec) -> Quadratic {
    let p = make_quadratic(spec).unwrap();
    let doc = p.to_document().unwrap();
    match doc.kind {
        mogd_core::problems::ProblemKind::Quadratic { hessians, linear } => {
            let n = spec.n;
            Quadratic::new(
                hessians.iter().map(|a| nalgebra::DMatrix::from_row_slice(n, n, a)).collect(),
                linear.into_iter().map(DVector::from_vec).collect(),
            )
            .unwrap()
        }
        other => panic!("unexpected kind {other:?}"),
    }
}

#[test]
fn generated_hessians_have_requested_conditioning() {
    for (n, kappa) in [(10, 1e1), (10, 1e2), (40, 1e3), (30, 1e5)] {
        let spec = QuadraticSpec::new(n, vec![kappa, kappa.sqrt()], 11);
        let q = quadratic_terms(&spec);
        for (i, k) in spec.kappa.iter().enumerate() {
            let a = q.hessian(i);
            assert!((a - a.transpose()).amax() == 0.0);
            assert!(check_spd(a, 1e-12).unwrap());
            let eig = a.clone().symmetric_eigen().eigenvalues;
            let lo = eig.min();
            let hi = eig.max();
            assert!((lo - 1.0).abs() < 1e-9 * k, "min eigenvalue {lo}");
            assert!((hi - k).abs() < 1e-9 * k, "max eigenvalue {hi} vs {k}");
            assert!((hi / lo - k).abs() / k < 1e-8);
            assert!(q.linear(i).amax() <= 1.0);
        }
    }
}

#[test]
fn generator_is_deterministic_in_seed() {
    let spec = QuadraticSpec::new(12, vec![100.0, 100.0], 99);
    let a = make_quadratic(&spec).unwrap().to_document().unwrap();
    let b = make_quadratic(&spec).unwrap().to_document().unwrap();
    assert_eq!(a, b);
    let c = make_quadratic(&QuadraticSpec { seed: 100, ..spec }).unwrap().to_document().unwrap();
    assert_ne!(a, c);
}

#[test]
fn quadratic_values_match_definition() {
    let spec = QuadraticSpec::new(6, vec![10.0, 50.0], 5);
    let p = make_quadratic(&spec).unwrap();
    let q = quadratic_terms(&spec);
    let x = sample_initial(&p, 1).unwrap();
    let f = p.eval_objectives(&x).unwrap();
    let j = p.eval_jacobian(&x).unwrap();
    for i in 0..2 {
        let a = q.hessian(i);
        let b = q.linear(i);
        let expected = 0.5 * x.dot(&(a * &x)) + b.dot(&x);
        assert!((f[i] - expected).abs() < 1e-12 * expected.abs().max(1.0));
        let grad = a * &x + b;
        assert!((j.row(i).transpose() - grad).amax() < 1e-12);
    }
    let h = p.eval_hessians(&x).unwrap().unwrap();
    assert_eq!(&h[1], q.hessian(1));
    assert_eq!(q.values(&x), f);
}

#[test]
fn document_roundtrip_preserves_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let reg = ProblemRegistry::with_builtins();
    for name in ["BK1", "JOS1a", "QPb"] {
        let p = reg.instantiate(name, 8).unwrap();
        let path = dir.path().join(format!("{name}.json"));
        save_problem(&p, &path).unwrap();
        let back = load_problem(&path).unwrap();
        assert_eq!(back.name(), name);
        assert_eq!((back.n(), back.m()), (p.n(), p.m()));
        let x = sample_initial(&p, 4).unwrap();
        assert_eq!(back.eval_objectives(&x).unwrap(), p.eval_objectives(&x).unwrap());
        assert_eq!(back.eval_jacobian(&x).unwrap(), p.eval_jacobian(&x).unwrap());
    }
}

#[test]
fn malformed_documents_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"name":"x","n":2,"m":2,"lower":[0],"upper":[1,1],"kind":"bk1"}"#).unwrap();
    assert!(matches!(load_problem(&path), Err(Error::Format(_))));
    std::fs::write(&path, "not json").unwrap();
    assert!(matches!(load_problem(&path), Err(Error::Format(_))));
    assert!(matches!(load_problem(&dir.path().join("missing.json")), Err(Error::Io { .. })));
}

#[test]
fn initial_points_lie_in_the_box() {
    let reg = ProblemRegistry::with_builtins();
    for name in reg.names().collect::<Vec<_>>() {
        let p = reg.instantiate(name, 1).unwrap();
        for seed in 0..5 {
            let x = sample_initial(&p, seed).unwrap();
            assert!(x.iter().zip(p.lower().iter()).all(|(v, l)| v >= l));
            assert!(x.iter().zip(p.upper().iter()).all(|(v, u)| v <= u));
        }
        assert_eq!(sample_initial(&p, 9).unwrap(), sample_initial(&p, 9).unwrap());
    }
}

#[test]
fn registry_lists_all_builtins() {
    let reg = ProblemRegistry::with_builtins();
    let names: Vec<_> = reg.names().collect();
    for expected in ["BK1", "JOS1a", "JOS1d", "QPa", "QPg"] {
        assert!(names.contains(&expected));
    }
    assert_eq!(reg.listing().len(), 12);
    assert!(matches!(reg.instantiate("ZDT1", 0), Err(Error::UnknownProblem(_))));
}
