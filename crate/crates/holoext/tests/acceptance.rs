//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Criteria 1 to 7 run the experiments of `configs/acceptance.toml`; a
//! criterion passes when none of its rows is FAIL or INCONCLUSIVE. Criterion 8
//! runs the algebra oracles inline.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use holoext::{run_suite, Kind, ReportRow, Suite, Tally};
use holoext_core::domain::{hefer_q, polarize, validate_rho};
use holoext_core::form::{wedge, ExtForm};
use holoext_core::jet::{jet_mul, jet_pow_real, tau_derivative_at_zero};
use holoext_core::variety::{jet_on_z, VarietySpec};
use holoext_core::{BiJet, HermitianPolynomial, JetLayout, MultiIndex, Polynomial, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn config_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/acceptance.toml")
}

fn ratios<'a>(rows: &'a [ReportRow], filter: &'a str) -> impl Iterator<Item = f64> + 'a {
    rows.iter()
        .filter(move |r| r.params.contains(filter))
        .filter_map(|r| r.ratio)
}

fn max(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

fn summary(rows: &[ReportRow]) -> String {
    let t = Tally::of(rows);
    format!(
        "{} rows: {} pass, {} fail, {} inconclusive, {} degenerate",
        rows.len(),
        t.pass,
        t.fail,
        t.inconclusive,
        t.degenerate
    )
}

fn experiment(suite: &Suite, kind: Kind, stat: impl Fn(&[ReportRow]) -> String) -> Outcome {
    let rows = match run_suite(suite, Some(kind)) {
        Ok(rows) => rows,
        Err(e) => {
            return Outcome {
                pass: false,
                detail: format!("error: {e}"),
            }
        }
    };
    let t = Tally::of(&rows);
    let pass = t.pass > 0 && t.fail == 0 && t.inconclusive == 0;
    Outcome {
        pass,
        detail: format!("{}; {}", summary(&rows), stat(&rows)),
    }
}

/// Taylor coefficients at the origin from samples on a polycircle of radius `r`.
fn taylor_fit(
    f: impl Fn(&[C64]) -> C64,
    vars: usize,
    pts: usize,
    r: f64,
) -> HashMap<Vec<u32>, C64> {
    let digits = |mut k: usize| -> Vec<usize> {
        (0..vars)
            .map(|_| {
                let i = k % pts;
                k /= pts;
                i
            })
            .collect()
    };
    let total = pts.pow(vars as u32);
    let samples: Vec<(Vec<usize>, C64)> = (0..total)
        .map(|flat| {
            let idx = digits(flat);
            let x: Vec<C64> = idx
                .iter()
                .map(|&i| C64::from_polar(r, 2.0 * PI * i as f64 / pts as f64))
                .collect();
            let v = f(&x);
            (idx, v)
        })
        .collect();
    (0..total)
        .map(|flat| {
            let e = digits(flat);
            let sum: C64 = samples
                .iter()
                .map(|(idx, v)| {
                    let phase: usize = idx.iter().zip(&e).map(|(i, j)| i * j).sum();
                    v * C64::from_polar(1.0, -2.0 * PI * phase as f64 / pts as f64)
                })
                .sum();
            let deg: usize = e.iter().sum();
            (
                e.iter().map(|&k| k as u32).collect(),
                sum / (r.powi(deg as i32) * total as f64),
            )
        })
        .collect()
}

fn fit_error(j: &BiJet, fit: &HashMap<Vec<u32>, C64>) -> f64 {
    let layout = j.layout();
    let worst = (0..layout.size())
        .map(|idx| {
            let (h, a, _) = layout.exponents_of(idx);
            let key: Vec<u32> = h.entries().iter().chain(a.entries()).copied().collect();
            (j.coeff_at(idx) - fit[&key]).norm()
        })
        .fold(0.0, f64::max);
    worst / j.max_abs()
}

fn random_jet(rng: &mut ChaCha8Rng, layout: &'static JetLayout, lead: C64, scale: f64) -> BiJet {
    let terms: Vec<_> = (0..layout.size())
        .map(|idx| {
            let (h, a, _) = layout.exponents_of(idx);
            let v = if idx == 0 {
                lead
            } else {
                c(
                    rng.random_range(-scale..scale),
                    rng.random_range(-scale..scale),
                )
            };
            (h, a, v)
        })
        .collect();
    BiJet::from_terms(layout, &terms)
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

fn algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut jet_err: f64 = 0.0;

    // Products and real powers against the discrete Cauchy formula.
    let ring = JetLayout::get(
        &MultiIndex::new(vec![2, 1]),
        &MultiIndex::new(vec![1, 1]),
        &MultiIndex::zeros(0),
    );
    for _ in 0..2 {
        let a = random_jet(&mut rng, ring, c(0.4, 0.1), 1.0);
        let b = random_jet(&mut rng, ring, c(-0.3, 0.6), 1.0);
        let fit = taylor_fit(
            |x| a.evaluate(&x[..2], &x[2..], &[]) * b.evaluate(&x[..2], &x[2..], &[]),
            4,
            6,
            1.0,
        );
        jet_err = jet_err.max(fit_error(&jet_mul(&a, &b).unwrap(), &fit));
    }
    let single = JetLayout::get(
        &MultiIndex::new(vec![3]),
        &MultiIndex::new(vec![2]),
        &MultiIndex::zeros(0),
    );
    let a = random_jet(&mut rng, single, c(2.0, 0.5), 0.3);
    for beta in [0.5, -1.0, -3.0, 2.5] {
        let fit = taylor_fit(|x| a.evaluate(&x[..1], &x[1..], &[]).powf(beta), 2, 32, 0.1);
        jet_err = jet_err.max(fit_error(&jet_pow_real(&a, beta).unwrap(), &fit));
    }

    // τ-derivatives of a jet on Z against a five-point stencil.
    let spec = VarietySpec::reduced(2, &[1]).unwrap();
    let mi = |e: &[u32]| MultiIndex::new(e.to_vec());
    let psi = Polynomial::from_terms(
        2,
        [
            (mi(&[1, 0]), c(0.7, -0.1)),
            (mi(&[0, 1]), c(-0.4, 0.9)),
            (mi(&[2, 2]), c(1.3, 0.2)),
            (mi(&[1, 3]), c(-0.6, 0.5)),
        ],
    );
    let zeta = [c(0.3, 0.2)];
    let jet = jet_on_z(&spec, &psi, &zeta, &mi(&[3]));
    let g = |t: f64| psi.eval(&[zeta[0], c(t, 0.0)]);
    let h = 1e-3;
    let fd = (-g(2.0 * h) + g(h) * 8.0 - g(-h) * 8.0 + g(-2.0 * h)) / (12.0 * h);
    let d1 = tau_derivative_at_zero(&jet, &mi(&[1])).unwrap();
    let fd_err = (d1 - fd).norm() / d1.norm();

    // Graded anticommutativity of the wedge product on 1-forms and 2-forms.
    let form = |rng: &mut ChaCha8Rng, masks: &[(u16, u16)]| {
        masks.iter().fold(ExtForm::zero(3, ring), |f, &(hm, am)| {
            f.add(&ExtForm::basis(
                3,
                hm,
                am,
                random_jet(rng, ring, c(0.5, 0.0), 1.0),
            ))
            .unwrap()
        })
    };
    let f1 = form(&mut rng, &[(1, 0), (0, 2), (4, 0)]);
    let f2 = form(&mut rng, &[(3, 0), (1, 1), (0, 6)]);
    let g1 = form(&mut rng, &[(2, 0), (0, 1)]);
    let wedge_gap = |f: &ExtForm, g: &ExtForm, sign: f64| {
        let d = wedge(f, g)
            .unwrap()
            .add(&wedge(g, f).unwrap().scale(c(-sign, 0.0)))
            .unwrap();
        d.terms()
            .iter()
            .map(|t| t.coeff.max_abs())
            .fold(0.0, f64::max)
    };
    let form_err = wedge_gap(&f1, &g1, -1.0).max(wedge_gap(&f1, &f2, 1.0));

    // Hefer and polarization identities on the ball and a non-ball domain.
    let m = |v: [u32; 2]| MultiIndex::new(v.to_vec());
    let twisted = HermitianPolynomial::new(
        2,
        [
            (m([1, 0]), m([1, 0]), c(1.0, 0.0)),
            (m([0, 1]), m([0, 1]), c(1.0, 0.0)),
            (m([0, 0]), m([0, 0]), c(1.0, 0.0)),
            (m([1, 1]), m([0, 0]), c(-4.0, 0.0)),
            (m([0, 0]), m([1, 1]), c(-4.0, 0.0)),
            (m([1, 1]), m([1, 1]), c(4.0, 0.0)),
        ],
    )
    .unwrap();
    let mut identity_err: f64 = 0.0;
    for rho in [HermitianPolynomial::unit_ball(2), twisted] {
        let domain = validate_rho(rho.clone(), 2000, 1).unwrap();
        let q = hefer_q(&domain);
        let v = polarize(&rho);
        for _ in 0..200 {
            let zeta = random_point(&mut rng, 2, 1.0);
            let z = random_point(&mut rng, 2, 1.0);
            let hefer = q.contract(&zeta, &z) - (domain.v().eval(&zeta, &z) + rho.eval(&zeta));
            let polar = v.eval(&zeta, &zeta) + rho.eval(&zeta);
            identity_err = identity_err.max(hefer.norm()).max(polar.norm());
        }
    }

    let pass = jet_err <= 1e-8 && fd_err <= 1e-8 && form_err <= 1e-10 && identity_err <= 1e-10;
    Outcome {
        pass,
        detail: format!(
            "jet vs Cauchy fit {jet_err:.1e}, derivative vs stencil {fd_err:.1e}, wedge law {form_err:.1e}, hefer/polarization {identity_err:.1e}"
        ),
    }
}

fn main() -> ExitCode {
    let suite = match Suite::load(&config_path()) {
        Ok(s) => s,
        Err(e) => {
            println!("acceptance config failed to load: {e}");
            return ExitCode::FAILURE;
        }
    };
    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(&str, Check)> = vec![
        (
            "reproducing identity",
            Box::new(|| {
                experiment(&suite, Kind::Reproduce, |rows| {
                    let se = rows.iter().map(|r| r.stderr).fold(0.0, f64::max);
                    format!(
                        "max |dev|/stderr {:.2}, max stderr {se:.1e}",
                        max(ratios(rows, ""))
                    )
                })
            }),
        ),
        (
            "sharp constant",
            Box::new(|| {
                experiment(&suite, Kind::SharpConstant, |rows| {
                    format!(
                        "max |measured/exact - 1| {:.2e}",
                        max(ratios(rows, "").map(|r| (r - 1.0).abs()))
                    )
                })
            }),
        ),
        (
            "interpolation",
            Box::new(|| {
                experiment(&suite, Kind::Interpolation, |rows| {
                    format!("max normalized mismatch {:.2}", max(ratios(rows, "")))
                })
            }),
        ),
        (
            "extension inequality",
            Box::new(|| {
                experiment(&suite, Kind::TraumaSweep, |rows| {
                    format!(
                        "max |family-max change - 1| {:.3}",
                        max(ratios(rows, "family-max").map(|r| (r - 1.0).abs()))
                    )
                })
            }),
        ),
        (
            "hypersurface extension",
            Box::new(|| {
                experiment(&suite, Kind::ThmBSweep, |rows| {
                    format!(
                        "max |family-max change - 1| {:.3}, max fresh/fitted kernel constant {:.2}",
                        max(ratios(rows, "family-max").map(|r| (r - 1.0).abs())),
                        max(ratios(rows, "kernel-bound"))
                    )
                })
            }),
        ),
        (
            "boundary integral lemma",
            Box::new(|| {
                experiment(&suite, Kind::Uppsk, |rows| {
                    format!("max spread {:.2}", max(ratios(rows, "")))
                })
            }),
        ),
        (
            "norm equivalence",
            Box::new(|| {
                experiment(&suite, Kind::NormEquivalence, |rows| {
                    let fitted = rows
                        .iter()
                        .filter(|r| r.params.contains("fitted"))
                        .map(|r| r.value);
                    format!("fitted constant {:.3}", max(fitted))
                })
            }),
        ),
        ("algebra suite", Box::new(algebra)),
    ];

    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {} {name}: {verdict} ({}; {:.1}s)",
            i + 1,
            out.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
