use holoext_core::domain::{delta, hefer_q, monomial_hefer, polarize, validate_rho, DomainFile};
use holoext_core::error::DomainError;
use holoext_core::{HermitianPolynomial, MultiIndex, Polynomial, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<C64> {
    (0..n)
        .map(|_| {
            c(
                rng.random_range(-radius..radius),
                rng.random_range(-radius..radius),
            )
        })
        .collect()
}

fn twisted_components() -> Vec<Polynomial> {
    let s = 1.0 / 3f64.sqrt();
    let z1 = Polynomial::variable(2, 0);
    let z2 = Polynomial::variable(2, 1);
    let one = Polynomial::constant(2, c(1.0, 0.0));
    vec![
        z1.scale(c(s, 0.0)),
        z2.scale(c(s, 0.0)),
        one.sub(&z1.mul(&z2)).scale(c(2.0 * s, 0.0)),
    ]
}

/// |z₁|²+|z₂|²+4|1−z₁z₂|²−3 as explicit rows.
fn twisted_rows() -> HermitianPolynomial {
    let m = |v: [u32; 2]| MultiIndex::new(v.to_vec());
    HermitianPolynomial::new(
        2,
        [
            (m([1, 0]), m([1, 0]), c(1.0, 0.0)),
            (m([0, 1]), m([0, 1]), c(1.0, 0.0)),
            (m([0, 0]), m([0, 0]), c(4.0 - 3.0, 0.0)),
            (m([1, 1]), m([0, 0]), c(-4.0, 0.0)),
            (m([0, 0]), m([1, 1]), c(-4.0, 0.0)),
            (m([1, 1]), m([1, 1]), c(4.0, 0.0)),
        ],
    )
    .unwrap()
}

#[test]
fn unit_ball_validates_with_identity_levi_form() {
    let d = validate_rho(HermitianPolynomial::unit_ball(2), 10_000, 0).unwrap();
    assert!((d.levi_floor() - 1.0).abs() < 1e-12);
    assert!(d.mos2_constant() > 0.0);
    assert!(d.is_unit_ball());
}

#[test]
fn reversed_ball_is_not_psh() {
    let m = |v: [u32; 2]| MultiIndex::new(v.to_vec());
    let rho = HermitianPolynomial::new(
        2,
        [
            (m([0, 0]), m([0, 0]), c(1.0, 0.0)),
            (m([1, 0]), m([1, 0]), c(-1.0, 0.0)),
            (m([0, 1]), m([0, 1]), c(-1.0, 0.0)),
        ],
    )
    .unwrap();
    assert!(matches!(
        validate_rho(rho, 1000, 0),
        Err(DomainError::NotStrictlyPsh { .. })
    ));
}

#[test]
fn non_hermitian_coefficients_are_rejected() {
    let m = |v: [u32; 1]| MultiIndex::new(v.to_vec());
    let r = HermitianPolynomial::new(
        1,
        [
            (m([1]), m([0]), c(1.0, 0.0)),
            (m([0]), m([0]), c(-1.0, 0.0)),
        ],
    );
    assert!(matches!(r, Err(DomainError::InvalidDefiningFunction(_))));
}

#[test]
fn twisted_domain_is_valid_and_matches_pullback() {
    let rows = twisted_rows();
    let pull = HermitianPolynomial::from_pullback(2, &twisted_components()).unwrap();
    let d = validate_rho(rows.clone(), 10_000, 3).unwrap();
    assert!(d.levi_floor() > 0.0 && d.mos2_constant() > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let p = random_point(&mut rng, 2, 1.5);
        assert!((rows.eval(&p) - 3.0 * pull.eval(&p)).abs() < 1e-10);
    }
}

#[test]
fn polarization_of_ball_and_identity() {
    let v = polarize(&HermitianPolynomial::unit_ball(2));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let zeta = random_point(&mut rng, 2, 1.0);
        let z = random_point(&mut rng, 2, 1.0);
        let expected = c(1.0, 0.0) - (zeta[0].conj() * z[0] + zeta[1].conj() * z[1]);
        assert!((v.eval(&zeta, &z) - expected).norm() < 1e-14);
    }
    for rho in [HermitianPolynomial::unit_ball(3), twisted_rows()] {
        let v = polarize(&rho);
        for _ in 0..100 {
            let p = random_point(&mut rng, rho.dim(), 1.5);
            assert!((v.eval(&p, &p) + rho.eval(&p)).norm() < 1e-12);
        }
    }
}

#[test]
fn twisted_polarization_agrees_with_pullback_formula() {
    let comps = twisted_components();
    let v = polarize(&HermitianPolynomial::from_pullback(2, &comps).unwrap());
    let v3 = polarize(&twisted_rows());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let zeta = random_point(&mut rng, 2, 1.2);
        let z = random_point(&mut rng, 2, 1.2);
        let dot: C64 = comps
            .iter()
            .map(|p| p.eval(&zeta).conj() * p.eval(&z))
            .sum();
        let expected = c(1.0, 0.0) - dot;
        assert!((v.eval(&zeta, &z) - expected).norm() < 1e-12);
        assert!((v3.eval(&zeta, &z) - expected * 3.0).norm() < 1e-11);
    }
}

#[test]
fn polarized_support_is_structurally_antiholomorphic() {
    let n = 2;
    for rho in [HermitianPolynomial::unit_ball(n), twisted_rows()] {
        let p = polarize(&rho).polynomial();
        for (e, _) in p.terms() {
            assert!(
                e.entries()[..n].iter().all(|&x| x == 0),
                "holomorphic ζ factor in v"
            );
        }
    }
}

#[test]
fn monomial_hefer_examples() {
    let p = monomial_hefer(&MultiIndex::new(vec![2]));
    let x = [c(0.3, 0.2), c(-0.4, 0.7)];
    assert!((p[0].eval(&x) - (x[0] + x[1])).norm() < 1e-15);

    let p = monomial_hefer(&MultiIndex::new(vec![1, 1]));
    let x = [c(0.3, 0.1), c(0.5, -0.2), c(-0.1, 0.4), c(0.8, 0.3)];
    assert!((p[0].eval(&x) - x[1]).norm() < 1e-15);
    assert!((p[1].eval(&x) - x[2]).norm() < 1e-15);
}

#[test]
fn monomial_hefer_telescoping_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = rng.random_range(1..=3);
        let alpha = loop {
            let a: Vec<u32> = (0..n).map(|_| rng.random_range(0..=4)).collect();
            if a.iter().sum::<u32>() <= 4 {
                break MultiIndex::new(a);
            }
        };
        let p = monomial_hefer(&alpha);
        for _ in 0..50 {
            let zeta = random_point(&mut rng, n, 1.0);
            let z = random_point(&mut rng, n, 1.0);
            let x: Vec<C64> = zeta.iter().chain(&z).copied().collect();
            let lhs: C64 = (0..n).map(|j| (zeta[j] - z[j]) * p[j].eval(&x)).sum();
            let mono = |w: &[C64]| (0..n).map(|j| w[j].powu(alpha.get(j))).product::<C64>();
            assert!((lhs - (mono(&zeta) - mono(&z))).norm() < 1e-12);
        }
    }
}

#[test]
fn hefer_form_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ball = validate_rho(HermitianPolynomial::unit_ball(2), 1000, 0).unwrap();
    let q = hefer_q(&ball);
    let two_pi_i = c(0.0, 2.0 * std::f64::consts::PI);
    for _ in 0..100 {
        let zeta = random_point(&mut rng, 2, 0.7);
        let z = random_point(&mut rng, 2, 0.7);
        let qv = q.eval(&zeta, &z);
        for j in 0..2 {
            assert!((qv[j] - zeta[j].conj() / two_pi_i).norm() < 1e-14);
        }
        let rhs = ball.v().eval(&zeta, &z) + ball.rho().eval(&zeta);
        assert!((q.contract(&zeta, &z) - rhs).norm() < 1e-10);
    }
    let twisted = validate_rho(twisted_rows(), 2000, 1).unwrap();
    for _ in 0..100 {
        let zeta = random_point(&mut rng, 2, 1.2);
        let z = random_point(&mut rng, 2, 1.2);
        let rhs = twisted.v().eval(&zeta, &z) + twisted.rho().eval(&zeta);
        assert!((hefer_q(&twisted).contract(&zeta, &z) - rhs).norm() < 1e-10);
    }
}

#[test]
fn delta_examples_and_surrogate() {
    let ball = validate_rho(HermitianPolynomial::unit_ball(2), 1000, 0).unwrap();
    assert_eq!(delta(&ball, &[c(0.0, 0.0), c(0.0, 0.0)]).unwrap(), 1.0);
    assert!((delta(&ball, &[c(0.9, 0.0), c(0.0, 0.0)]).unwrap() - 0.1).abs() < 1e-15);
    assert!(matches!(
        delta(&ball, &[c(1.1, 0.0), c(0.0, 0.0)]),
        Err(DomainError::OutsideDomain { .. })
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 200 {
        let z = random_point(&mut rng, 2, 1.0);
        let r: f64 = z.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if !(0.5..1.0).contains(&r) {
            continue;
        }
        let surrogate = -ball.rho().eval(&z) / ball.rho().real_gradient_norm(&z);
        let ratio = surrogate / (1.0 - r);
        assert!((0.5..=2.0).contains(&ratio));
        checked += 1;
    }
}

#[test]
fn koranyi_shape_and_mos2_on_fresh_samples() {
    let ball = validate_rho(HermitianPolynomial::unit_ball(2), 10_000, 0).unwrap();
    let twisted = validate_rho(twisted_rows(), 10_000, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut n = 0;
    while n < 2000 {
        let zeta = random_point(&mut rng, 2, 1.0);
        let z = random_point(&mut rng, 2, 1.0);
        if !(ball.contains(&zeta) && ball.contains(&z)) {
            continue;
        }
        let lower = 0.5 * (ball.delta(&zeta).unwrap() + ball.delta(&z).unwrap());
        assert!(ball.v().eval(&zeta, &z).norm() >= lower - 1e-12);
        assert!(ball.mos2_margin(&zeta, &z) >= -1e-12);
        n += 1;
    }
    let mut n = 0;
    while n < 2000 {
        let zeta = random_point(&mut rng, 2, 1.8);
        let z = random_point(&mut rng, 2, 1.8);
        if !(twisted.contains(&zeta) && twisted.contains(&z)) {
            continue;
        }
        assert!(twisted.mos2_margin(&zeta, &z) >= -1e-12);
        n += 1;
    }
}

#[test]
fn domain_files_parse() {
    let ball = DomainFile::parse("dimension = 2\nkind = \"unit-ball\"\n").unwrap();
    assert!(ball.defining_function().unwrap().is_unit_ball());
    let text = r#"
dimension = 1
[[rho]]
alpha = [1]
beta = [1]
re = 1.0
[[rho]]
alpha = [0]
beta = [0]
re = -1.0
"#;
    assert!(DomainFile::parse(text)
        .unwrap()
        .defining_function()
        .unwrap()
        .is_unit_ball());
    let text = r#"
dimension = 1
[[component]]
terms = [{ exponent = [1], re = 1.0 }]
"#;
    assert!(DomainFile::parse(text)
        .unwrap()
        .defining_function()
        .unwrap()
        .is_unit_ball());
}
