use std::f64::consts::PI;

use holoext_core::domain::{validate_rho, Domain};
use holoext_core::form::ExtForm;
use holoext_core::kernel::{
    hefer_hypersurface, hefer_monomial_ci, residue_collapse, weight_galpha, CollapsedIntegrand,
    WeightContext,
};
use holoext_core::variety::VarietySpec;
use holoext_core::{BiJet, HermitianPolynomial, JetLayout, MultiIndex, Polynomial, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn ball(n: usize) -> Domain {
    validate_rho(HermitianPolynomial::unit_ball(n), 1000, 0).unwrap()
}

fn random_in_ball(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<C64> {
    loop {
        let p: Vec<C64> = (0..n)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        if p.iter().map(|x| x.norm_sqr()).sum::<f64>() < radius * radius {
            return p;
        }
    }
}

/// Midpoint rule in polar coordinates over the unit disc.
fn disc_quadrature(f: impl Fn(C64) -> C64, nr: usize, nt: usize) -> C64 {
    let mut total = c(0.0, 0.0);
    for i in 0..nr {
        let r = (i as f64 + 0.5) / nr as f64;
        for k in 0..nt {
            let t = 2.0 * PI * (k as f64 + 0.5) / nt as f64;
            total += f(C64::from_polar(r, t)) * r;
        }
    }
    total * (2.0 * PI / (nr * nt) as f64)
}

#[test]
fn one_dimensional_weight_matches_classical_bergman_kernel() {
    let d = ball(1);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..20 {
        let z = random_in_ball(&mut rng, 1, 0.9);
        let zeta = random_in_ball(&mut rng, 1, 0.99);
        let ctx = WeightContext::new(&d, 1.0, &z).unwrap();
        let g = weight_galpha(&ctx, &zeta).unwrap();
        let density = g.top_coefficient().constant_term() * c(0.0, -2.0);
        let w = 1.0 - zeta[0].norm_sqr();
        let expected = (2.0 / PI) * w / (c(1.0, 0.0) - zeta[0].conj() * z[0]).powu(3);
        assert!(
            (density - expected).norm() < 1e-10 * expected.norm().max(1.0),
            "{density} vs {expected}"
        );
    }
}

#[test]
fn weight_is_one_on_the_diagonal() {
    for n in 1..=3 {
        let d = ball(n);
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let z = random_in_ball(&mut rng, n, 0.9);
        for alpha in [0.5, 1.0, 2.5] {
            let ctx = WeightContext::new(&d, alpha, &z).unwrap();
            let g = weight_galpha(&ctx, &z).unwrap();
            let scalar = g.component(0, 0).unwrap().constant_term();
            assert!((scalar - c(1.0, 0.0)).norm() < 1e-12);
        }
    }
}

#[test]
fn weight_vanishes_on_the_boundary() {
    let d = ball(2);
    let ctx = WeightContext::new(&d, 1.0, &[c(0.3, 0.1), c(-0.2, 0.0)]).unwrap();
    let g = weight_galpha(&ctx, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    assert!(g.is_zero());
    let near = weight_galpha(&ctx, &[c(0.6 * 0.999_999, 0.0), c(0.0, 0.8 * 0.999_999)]).unwrap();
    assert!(near.terms().iter().all(|t| t.coeff.max_abs() < 1e-4));
}

#[test]
fn full_domain_disc_reproduces_polynomials() {
    let d = ball(1);
    for alpha in [1.0, 2.0] {
        for z in [c(0.0, 0.0), c(0.5, -0.3), c(-0.1, 0.8)] {
            let ctx = WeightContext::new(&d, alpha, &[z]).unwrap();
            let k = CollapsedIntegrand::new(ctx, None, None, false).unwrap();
            for power in 0..3u32 {
                let psi = Polynomial::monomial(MultiIndex::new(vec![power]), c(1.0, 0.0));
                let value = disc_quadrature(
                    |w| {
                        let kj = k.kernel_jet(&[w]).unwrap();
                        k.collapse(&kj, &k.psi_jet(&psi, &[w]))[0]
                    },
                    400,
                    400,
                );
                assert!(
                    (value - z.powu(power)).norm() < 1e-5,
                    "α={alpha} z={z} ψ=z^{power}: {value}"
                );
            }
        }
    }
}

#[test]
fn point_collapse_reproduces_first_order_jet() {
    // N = 1, Z = {0}, M = 1: the extension is ψ(0) + τ_z ψ'(0) exactly.
    let d = ball(1);
    let spec = VarietySpec::monomial(1, &[0], MultiIndex::new(vec![1])).unwrap();
    let z = c(0.3, -0.4);
    let ctx = WeightContext::new(&d, 3.0, &[z]).unwrap();
    let k = CollapsedIntegrand::new(ctx, Some(&spec), None, false).unwrap();
    let psi = Polynomial::from_terms(
        1,
        [
            (MultiIndex::new(vec![0]), c(2.0, 1.0)),
            (MultiIndex::new(vec![1]), c(-0.5, 0.25)),
            (MultiIndex::new(vec![2]), c(7.0, 0.0)),
        ],
    );
    let kj = k.kernel_jet(&[]).unwrap();
    let value = k.collapse(&kj, &k.psi_jet(&psi, &[]))[0];
    let expected = c(2.0, 1.0) + z * c(-0.5, 0.25);
    assert!((value - expected).norm() < 1e-12, "{value} vs {expected}");
}

#[test]
fn symmetric_truncation_gives_identical_collapse() {
    let d = ball(2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for m in 0..=2u32 {
        let spec = VarietySpec::monomial(2, &[1], MultiIndex::new(vec![m])).unwrap();
        let z = random_in_ball(&mut rng, 2, 0.8);
        let psi = Polynomial::from_terms(
            2,
            [
                (MultiIndex::new(vec![1, 0]), c(1.0, 0.0)),
                (MultiIndex::new(vec![0, 1]), c(0.0, 1.0)),
                (MultiIndex::new(vec![1, 2]), c(0.5, 0.0)),
            ],
        );
        let ka = CollapsedIntegrand::new(
            WeightContext::new(&d, 4.0, &z).unwrap(),
            Some(&spec),
            None,
            false,
        )
        .unwrap();
        let kb = CollapsedIntegrand::new(
            WeightContext::new(&d, 4.0, &z).unwrap(),
            Some(&spec),
            None,
            true,
        )
        .unwrap();
        for _ in 0..10 {
            let zeta = random_in_ball(&mut rng, 1, 0.95);
            let a = ka.collapse(&ka.kernel_jet(&zeta).unwrap(), &ka.psi_jet(&psi, &zeta))[0];
            let b = kb.collapse(&kb.kernel_jet(&zeta).unwrap(), &kb.psi_jet(&psi, &zeta))[0];
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }
}

#[test]
fn reduced_collapse_is_slice_bergman_density() {
    // M = 0 on the slice {ζ₂ = 0} of the ball in C²: the density is the
    // one-dimensional weighted Bergman kernel with the same weight exponent.
    let d = ball(2);
    let spec = VarietySpec::reduced(2, &[1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let alpha = 2.0;
    for _ in 0..10 {
        let z1 = random_in_ball(&mut rng, 1, 0.9)[0];
        let ctx = WeightContext::new(&d, alpha, &[z1, c(0.0, 0.0)]).unwrap();
        let k = CollapsedIntegrand::new(ctx, Some(&spec), None, false).unwrap();
        let w = random_in_ball(&mut rng, 1, 0.99)[0];
        let value = k.kernel_jet(&[w]).unwrap().constant_term();
        // (a+1)/π (1−|w|²)^a / (1−w̄z)^{a+2} with a = α
        let a = alpha;
        let expected = (a + 1.0) / PI * (1.0 - w.norm_sqr()).powf(a)
            / (c(1.0, 0.0) - w.conj() * z1).powf(a + 2.0);
        assert!(
            (value - expected).norm() < 1e-10 * expected.norm().max(1.0),
            "{value} vs {expected}"
        );
    }
}

#[test]
fn ideal_members_collapse_to_zero() {
    let d = ball(2);
    let spec = VarietySpec::monomial(2, &[1], MultiIndex::new(vec![1])).unwrap();
    let ctx = WeightContext::new(&d, 3.0, &[c(0.2, 0.1), c(0.1, -0.3)]).unwrap();
    let k =
        CollapsedIntegrand::new(ctx, Some(&spec), Some(MultiIndex::new(vec![1])), false).unwrap();
    let psi = Polynomial::from_terms(
        2,
        [
            (MultiIndex::new(vec![0, 2]), c(1.0, 0.0)),
            (MultiIndex::new(vec![3, 2]), c(0.0, 2.0)),
        ],
    );
    let kj = k.kernel_jet(&[c(0.4, 0.2)]).unwrap();
    assert!(k
        .collapse(&kj, &k.psi_jet(&psi, &[c(0.4, 0.2)]))
        .iter()
        .all(|x| *x == c(0.0, 0.0)));
}

#[test]
fn monomial_hefer_contraction_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let layout = JetLayout::scalar();
    let k = |x: C64| BiJet::constant(layout, x);
    for m in [vec![0u32], vec![1], vec![2]] {
        let m = MultiIndex::new(m);
        let tau = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let tz = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let h = hefer_monomial_ci(1, &[0], &m, &[k(tau)], &[k(tz)]).unwrap();
        let contracted = h.contract(&[k(tau - tz)]).unwrap();
        let e = m.get(0) + 1;
        let expected = tau.powu(e) - tz.powu(e);
        assert!((contracted.component(0, 0).unwrap().constant_term() - expected).norm() < 1e-12);
    }
    // M = (1,1): δ(h₁∧h₂) = (τ₁²−τ_{z1}²) h₂ − (τ₂²−τ_{z2}²) h₁
    let m = MultiIndex::new(vec![1, 1]);
    for _ in 0..20 {
        let t: Vec<C64> = (0..2)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let tz: Vec<C64> = (0..2)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let h =
            hefer_monomial_ci(2, &[0, 1], &m, &[k(t[0]), k(t[1])], &[k(tz[0]), k(tz[1])]).unwrap();
        let w = [k(t[0] - tz[0]), k(t[1] - tz[1])];
        let lhs = h.contract(&w).unwrap();
        let h1 =
            hefer_monomial_ci(2, &[0], &MultiIndex::new(vec![1]), &[k(t[0])], &[k(tz[0])]).unwrap();
        let h2 =
            hefer_monomial_ci(2, &[1], &MultiIndex::new(vec![1]), &[k(t[1])], &[k(tz[1])]).unwrap();
        let f1 = t[0].powu(2) - tz[0].powu(2);
        let f2 = t[1].powu(2) - tz[1].powu(2);
        let mut rhs = h2.scale(f1);
        rhs.add_scaled(&h1, -f2);
        for j in 0..2u16 {
            let a = lhs
                .component(1 << j, 0)
                .map_or(c(0.0, 0.0), BiJet::constant_term);
            let b = rhs
                .component(1 << j, 0)
                .map_or(c(0.0, 0.0), BiJet::constant_term);
            assert!((a - b).norm() < 1e-12);
        }
    }
}

#[test]
fn hypersurface_hefer_contraction_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // f = τ − ζ₁², coordinates (ζ₁, τ)
    let f = Polynomial::from_terms(
        2,
        [
            (MultiIndex::new(vec![0, 1]), c(1.0, 0.0)),
            (MultiIndex::new(vec![2, 0]), c(-1.0, 0.0)),
        ],
    );
    for order in [0u32, 1, 2] {
        for _ in 0..50 {
            let zeta = random_in_ball(&mut rng, 2, 1.0);
            let z = random_in_ball(&mut rng, 2, 1.0);
            let h = hefer_hypersurface(&f, order, &zeta, &z);
            let layout = JetLayout::scalar();
            let w: Vec<BiJet> = (0..2)
                .map(|j| BiJet::constant(layout, zeta[j] - z[j]))
                .collect();
            let lhs = h
                .contract(&w)
                .unwrap()
                .component(0, 0)
                .unwrap()
                .constant_term();
            let rhs = f.eval(&zeta).powu(order + 1) - f.eval(&z).powu(order + 1);
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }
    // f = τ with M = 0 is the monomial Hefer form
    let tau = Polynomial::variable(2, 1);
    let zeta = [c(0.1, 0.2), c(0.3, -0.1)];
    let z = [c(-0.2, 0.0), c(0.05, 0.4)];
    let a = hefer_hypersurface(&tau, 0, &zeta, &z);
    let k = |x: C64| BiJet::constant(JetLayout::scalar(), x);
    let b = hefer_monomial_ci(
        2,
        &[1],
        &MultiIndex::new(vec![0]),
        &[k(zeta[1])],
        &[k(z[1])],
    )
    .unwrap();
    let diff = a.add(&b.scale(c(-1.0, 0.0))).unwrap();
    assert!(diff.terms().iter().all(|t| t.coeff.max_abs() < 1e-15));
}

#[test]
fn residue_collapse_free_function_matches_integrand() {
    let d = ball(2);
    let spec = VarietySpec::monomial(2, &[1], MultiIndex::new(vec![1])).unwrap();
    let z = [c(0.2, 0.1), c(0.1, -0.3)];
    let ctx = WeightContext::new(&d, 3.0, &z).unwrap();
    let k = CollapsedIntegrand::new(ctx, Some(&spec), None, false).unwrap();
    let psi = Polynomial::from_terms(
        2,
        [
            (MultiIndex::new(vec![1, 0]), c(1.0, 0.0)),
            (MultiIndex::new(vec![1, 1]), c(1.0, 0.0)),
        ],
    );
    let zeta = [c(0.3, -0.2)];
    let direct = k.collapse(&k.kernel_jet(&zeta).unwrap(), &k.psi_jet(&psi, &zeta))[0];
    // Assemble H and the (n, n) weight component by hand and collapse.
    let layout = k.layout();
    let tau = BiJet::variable(layout, holoext_core::JetVar::Hol(0), c(0.0, 0.0));
    let tz = BiJet::constant(layout, z[1]);
    let h = hefer_monomial_ci(2, &[1], spec.m(), &[tau], &[tz]).unwrap();
    let kernel_only = k.kernel_jet(&zeta).unwrap();
    assert!(kernel_only.max_abs() > 0.0);
    let g = ExtForm::zero(2, layout);
    let zero = residue_collapse(
        &spec,
        &h,
        &g,
        &k.psi_jet(&psi, &zeta),
        &[MultiIndex::zeros(0)],
    )
    .unwrap();
    assert_eq!(zero[0], c(0.0, 0.0));
    assert!(direct.norm() > 0.0);
}
