//! One runner per experiment kind.

use holoext_core::extension::{
    default_alpha, derivative_weighted_integrals, extension_lp_norms, kernel_bound_constant,
    sharp_constant, trivial_extension, uniform_points, verify_interpolation, x_norm_integrals,
    ExtensionEvaluator, Verdict,
};
use holoext_core::quadrature::{
    uppsk_ratio, weighted_lp_norm, BoundarySequence, Estimate, QuadraturePlan, Region,
};
use holoext_core::variety::{
    generators_gamma, generators_monomial, generators_noncm, norm_pointwise, VarietySpec,
};
use holoext_core::{Domain, MultiIndex, Polynomial, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, Kind};
use crate::error::{HarnessError, Result};
use crate::report::ReportRow;

/// Point batches drawn before giving up on finding enough admissible points.
const MAX_POINT_BATCHES: u64 = 1000;

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    cfg.validate()?;
    match cfg.kind {
        Kind::Reproduce => reproduce(cfg),
        Kind::SharpConstant => sharp(cfg),
        Kind::TraumaSweep => trauma(cfg),
        Kind::ThmBSweep => thm_b(cfg),
        Kind::Uppsk => uppsk(cfg),
        Kind::NormEquivalence => norm_equivalence(cfg),
        Kind::Interpolation => interpolation(cfg),
    }
}

fn plan(cfg: &ExperimentConfig) -> QuadraturePlan {
    QuadraturePlan::new(cfg.samples, cfg.seed)
}

fn row(
    cfg: &ExperimentConfig,
    params: String,
    value: f64,
    stderr: f64,
    ratio: Option<f64>,
    verdict: Verdict,
) -> ReportRow {
    ReportRow {
        kind: cfg.kind,
        experiment: cfg.name.clone(),
        params: format!("{params};seed={};samples={}", cfg.seed, cfg.samples),
        value,
        stderr,
        ratio: ratio.filter(|r| r.is_finite()),
        verdict,
    }
}

fn fmt_point(z: &[C64]) -> String {
    let parts: Vec<String> = z
        .iter()
        .map(|c| format!("{:.6}{:+.6}i", c.re, c.im))
        .collect();
    format!("({})", parts.join(","))
}

/// Relative stderr of a quotient of independent estimates.
fn quotient_rel_stderr(num: &Estimate, den: &Estimate) -> f64 {
    (num.stderr / num.value.re).hypot(den.stderr / den.value.re)
}

/// Deterministic batches of uniform points of `region` kept when `keep` holds.
fn filtered_points(
    region: &Region,
    count: usize,
    seed: u64,
    keep: impl Fn(&[C64]) -> bool,
) -> Result<Vec<Vec<C64>>> {
    let mut out = Vec::with_capacity(count);
    for batch in 0..MAX_POINT_BATCHES {
        let sample = uniform_points(region, count, seed.wrapping_add(batch << 32))?;
        out.extend(sample.points.into_iter().filter(|p| keep(p)));
        if out.len() >= count {
            out.truncate(count);
            return Ok(out);
        }
    }
    Err(HarnessError::Config(format!(
        "could not find {count} admissible points"
    )))
}

/// Points of `D` with `δ(z) ≥ min_delta`.
fn interior_points(
    domain: &Domain,
    count: usize,
    min_delta: f64,
    seed: u64,
) -> Result<Vec<Vec<C64>>> {
    filtered_points(&Region::FullDomain(domain), count, seed, |z| {
        domain.delta(z).is_ok_and(|d| d >= min_delta)
    })
}

/// Tangential coordinates of points of `Z ∩ D` with `δ ≥ min_delta`.
fn slice_points(
    domain: &Domain,
    spec: &VarietySpec,
    count: usize,
    min_delta: f64,
    seed: u64,
) -> Result<Vec<Vec<C64>>> {
    filtered_points(&Region::Slice(domain, spec), count, seed, |x| {
        domain
            .delta(&spec.point_on_z(x))
            .is_ok_and(|d| d >= min_delta)
    })
}

fn reproduce(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let domain = cfg.domain()?;
    let alpha = cfg.alpha.expect("validated");
    let phis = cfg.representatives(domain.dim())?;
    let zs = interior_points(&domain, cfg.points, cfg.min_delta.unwrap_or(0.1), cfg.seed)?;
    let ev = ExtensionEvaluator::reproducing(domain, phis[0].clone(), alpha, plan(cfg))?
        .with_representatives(phis.clone())?;
    let est = ev.extend_all(&zs)?;
    let resolution = cfg.resolution.unwrap_or(1e-2);
    let k = cfg.tolerance.unwrap_or(3.0);
    let mut rows = Vec::new();
    for (i, z) in zs.iter().enumerate() {
        for (j, phi) in phis.iter().enumerate() {
            let e = est[i][j];
            let dev = (e.value - phi.eval(z)).norm();
            let verdict = if e.stderr > resolution {
                Verdict::Inconclusive
            } else if dev <= k * e.stderr {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            let params = format!("alpha={alpha};psi={j};z={}", fmt_point(z));
            rows.push(row(
                cfg,
                params,
                dev,
                e.stderr,
                Some(dev / e.stderr),
                verdict,
            ));
        }
    }
    Ok(rows)
}

fn sharp(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let domain = cfg.domain()?;
    let spec = cfg.require_variety()?;
    let psis = cfg.representatives(domain.dim())?;
    let kappa = spec.kappa();
    let weight = cfg.weight();
    let tol = cfg.tolerance.unwrap_or(0.02);
    let full = Region::FullDomain(&domain);
    let slice = Region::Slice(&domain, &spec);
    let lhs_plan = plan(cfg);
    let rhs_plan = QuadraturePlan::new(cfg.samples, cfg.seed.wrapping_add(1));
    let mut rows = Vec::new();
    for (k, psi) in psis.iter().enumerate() {
        let ext = trivial_extension(&spec, psi)?;
        for g in &cfg.grid {
            let params = format!("psi={k};r={};p={};kappa={kappa}", g.r, g.p);
            let lhs = weighted_lp_norm(|x| ext.eval(x), g.r, g.p, weight, &full, &lhs_plan)?;
            let rhs = weighted_lp_norm(
                |x| psi.eval(x),
                g.r + kappa as f64,
                g.p,
                weight,
                &slice,
                &rhs_plan,
            )?;
            if lhs.value.re == 0.0 && rhs.value.re == 0.0 {
                rows.push(row(cfg, params, 0.0, 0.0, None, Verdict::Degenerate));
                continue;
            }
            let exact = sharp_constant(g.r, kappa);
            let ratio = lhs.value.re / rhs.value.re;
            let se = ratio * quotient_rel_stderr(&lhs, &rhs);
            let verdict = if 3.0 * se > tol * exact {
                Verdict::Inconclusive
            } else if (ratio / exact - 1.0).abs() <= tol {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            rows.push(row(cfg, params, ratio, se, Some(ratio / exact), verdict));
        }
    }
    Ok(rows)
}

/// `τ₁^{M₁+1}·(1 + ζ'₁)`, a member of the ideal.
fn ideal_member(spec: &VarietySpec) -> Polynomial {
    let n = spec.dim();
    let mut e = vec![0; n];
    e[spec.normal()[0]] = spec.m().get(0) + 1;
    let tau = Polynomial::monomial(MultiIndex::new(e), C64::new(1.0, 0.0));
    let mut factor = Polynomial::constant(n, C64::new(1.0, 0.0));
    if let Some(&t) = spec.tangential().first() {
        factor = factor.add(&Polynomial::variable(n, t));
    }
    tau.mul(&factor)
}

fn evaluator(
    cfg: &ExperimentConfig,
    domain: &Domain,
    spec: &VarietySpec,
    psis: Vec<Polynomial>,
) -> Result<ExtensionEvaluator> {
    let alpha = cfg.alpha.unwrap_or_else(|| default_alpha(spec));
    let ev = ExtensionEvaluator::new(domain.clone(), spec.clone(), psis[0].clone(), plan(cfg))?
        .with_representatives(psis)?
        .with_alpha(alpha)?;
    Ok(match cfg.resolution {
        Some(r) => ev.with_resolution(r),
        None => ev,
    })
}

fn interpolation(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let domain = cfg.domain()?;
    let spec = cfg.require_variety()?;
    let psis = cfg.representatives(domain.dim())?;
    let family = psis.len();
    let mut all = psis;
    all.push(ideal_member(&spec));
    let ev = evaluator(cfg, &domain, &spec, all)?;
    let points = slice_points(
        &domain,
        &spec,
        cfg.points,
        cfg.min_delta.unwrap_or(0.2),
        cfg.seed,
    )?;
    let tol = cfg.tolerance.unwrap_or(3.0);
    let report = verify_interpolation(&ev, &points, tol)?;
    let mut rows = Vec::new();
    let (mut member_max, mut member_stderr) = (0.0f64, 0.0f64);
    for r in &report.rows {
        if r.representative == family {
            member_max = member_max.max(r.extension_jet.norm());
            member_stderr = member_stderr.max(r.stderr);
            continue;
        }
        let verdict = if r.stderr > ev.resolution() {
            Verdict::Inconclusive
        } else if r.normalized <= tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        let params = format!(
            "M={};psi={};m={};zeta={}",
            spec.m(),
            r.representative,
            r.order,
            fmt_point(&r.point)
        );
        rows.push(row(
            cfg,
            params,
            r.mismatch,
            r.stderr,
            Some(r.normalized),
            verdict,
        ));
    }
    let exact = member_max == 0.0 && member_stderr == 0.0;
    let verdict = if exact { Verdict::Pass } else { Verdict::Fail };
    rows.push(row(
        cfg,
        format!("M={};ideal-member", spec.m()),
        member_max,
        member_stderr,
        None,
        verdict,
    ));
    Ok(rows)
}

/// `(LHS/RHS)^{1/p}` rows for each representative and grid entry, at `outer`
/// and `4·outer` outer samples, plus one stability row per grid entry with the
/// family maximum (the empirical constant).
fn nested_ratio_rows(
    cfg: &ExperimentConfig,
    label: &str,
    ev: &ExtensionEvaluator,
    rhs: impl Fn(&QuadraturePlan) -> Result<Vec<Vec<Estimate>>>,
) -> Result<Vec<ReportRow>> {
    let tol = cfg.tolerance.unwrap_or(0.2);
    let weight = cfg.weight();
    let mut rows = Vec::new();
    // [stage][grid] → (max ratio, its stderr), None when the family is degenerate.
    let mut maxima: Vec<Vec<Option<(f64, f64)>>> = Vec::new();
    for factor in [1usize, 4] {
        let outer = cfg.outer * factor;
        let lhs = extension_lp_norms(ev, &cfg.grid, weight, outer, cfg.seed)?;
        let rhs = rhs(&QuadraturePlan::new(cfg.samples * factor, cfg.seed))?;
        let mut stage_max: Vec<Option<(f64, f64)>> = vec![None; cfg.grid.len()];
        for (k, (l_row, r_row)) in lhs.iter().zip(&rhs).enumerate() {
            for (j, g) in cfg.grid.iter().enumerate() {
                let (l, r) = (&l_row[j], &r_row[j]);
                let params = format!("{label};psi={k};r={};p={};outer={outer}", g.r, g.p);
                if l.value.re == 0.0 && r.value.re == 0.0 {
                    rows.push(row(cfg, params, 0.0, 0.0, None, Verdict::Degenerate));
                    continue;
                }
                if r.value.re <= 0.0 {
                    rows.push(row(cfg, params, l.value.re, l.stderr, None, Verdict::Fail));
                    continue;
                }
                let ratio = (l.value.re / r.value.re).powf(1.0 / g.p);
                let se = ratio / g.p * quotient_rel_stderr(l, r);
                let verdict = if ratio.is_finite() {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                };
                if stage_max[j].is_none_or(|(m, _)| ratio > m) {
                    stage_max[j] = Some((ratio, se));
                }
                rows.push(row(cfg, params, ratio, se, Some(ratio), verdict));
            }
        }
        maxima.push(stage_max);
    }
    for (j, g) in cfg.grid.iter().enumerate() {
        let params = format!(
            "{label};family-max;r={};p={};outer={}..{}",
            g.r,
            g.p,
            cfg.outer,
            4 * cfg.outer
        );
        match (maxima[0][j], maxima[1][j]) {
            (Some((m1, s1)), Some((m4, s4))) => {
                let change = m4 / m1;
                let change_se = change * (s1 / m1).hypot(s4 / m4);
                let verdict = if 3.0 * change_se > tol {
                    Verdict::Inconclusive
                } else if (change - 1.0).abs() < tol {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                };
                rows.push(row(cfg, params, m4, s4, Some(change), verdict));
            }
            _ => rows.push(row(cfg, params, 0.0, 0.0, None, Verdict::Degenerate)),
        }
    }
    Ok(rows)
}

fn trauma(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let domain = cfg.domain()?;
    let spec = cfg.require_variety()?;
    let psis = cfg.representatives(domain.dim())?;
    let gens = if spec.gammas().is_empty() {
        generators_monomial(spec.m(), spec.n())
    } else {
        generators_gamma(&spec)
    };
    let ev = evaluator(cfg, &domain, &spec, psis.clone())?;
    let label = format!("M={}", spec.m());
    nested_ratio_rows(cfg, &label, &ev, |p| {
        Ok(x_norm_integrals(
            &domain,
            &spec,
            &gens,
            &psis,
            &cfg.grid,
            cfg.weight(),
            p,
        )?)
    })
}

fn thm_b(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let domain = cfg.domain()?;
    let spec = cfg.require_variety()?;
    let hs = spec.hypersurface_data().ok_or_else(|| {
        HarnessError::Config(format!(
            "{}: thmB-sweep needs a hypersurface variety",
            cfg.name
        ))
    })?;
    let psis = cfg.representatives(domain.dim())?;
    let label = format!("M={}", hs.order());
    let ev = evaluator(cfg, &domain, &spec, psis.clone())?;
    let mut rows = Vec::new();

    // f = τ: the monomial path computes the same extension.
    let normal = spec.normal()[0];
    let tau = Polynomial::variable(domain.dim(), normal);
    if *hs.f() == tau {
        let mono = VarietySpec::monomial(
            domain.dim(),
            spec.normal(),
            MultiIndex::new(vec![hs.order()]),
        )?;
        let mono_ev = evaluator(cfg, &domain, &mono, psis.clone())?;
        let zs = interior_points(&domain, cfg.points, cfg.min_delta.unwrap_or(0.1), cfg.seed)?;
        let a = ev.extend_all(&zs)?;
        let b = mono_ev.extend_all(&zs)?;
        for (i, z) in zs.iter().enumerate() {
            for k in 0..psis.len() {
                let (x, y) = (a[i][k], b[i][k]);
                let diff = (x.value - y.value).norm();
                let se = x.stderr.hypot(y.stderr);
                let verdict = if diff <= 3.0 * se {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                };
                let params = format!("{label};agreement;psi={k};z={}", fmt_point(z));
                rows.push(row(cfg, params, diff, se, Some(diff / se), verdict));
            }
        }
    }

    // |f(z)|² ≤ C|v(ζ, z)|: fit C on one sample, check it on a fresh one.
    let fitted = 2.0 * kernel_bound_constant(&domain, &spec, cfg.pairs, cfg.seed)?;
    let fresh = kernel_bound_constant(&domain, &spec, cfg.pairs, cfg.seed.wrapping_add(1))?;
    let verdict = if fresh.is_finite() && fresh <= fitted {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    rows.push(row(
        cfg,
        format!("{label};kernel-bound;pairs={}", cfg.pairs),
        fitted,
        0.0,
        Some(fresh / fitted),
        verdict,
    ));

    rows.extend(nested_ratio_rows(cfg, &label, &ev, |p| {
        Ok(derivative_weighted_integrals(
            &domain,
            &spec,
            &psis,
            &cfg.grid,
            cfg.weight(),
            p,
        )?)
    })?);
    Ok(rows)
}

fn uppsk(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let domain = cfg.domain()?;
    let spec = cfg.variety()?;
    let params = cfg.uppsk.as_ref().expect("validated");
    let direction = cfg.direction().expect("validated");
    let seq = BoundarySequence::new(&domain, spec.as_ref(), direction, params.ladder.clone())?;
    let kind = format!("{:?}", params.integral).to_lowercase();
    let mut rows = Vec::new();
    for e in &params.exponents {
        let pts = uppsk_ratio(e.s, e.b, params.integral, &seq, &plan(cfg))?;
        for p in &pts {
            let ok = p.ratio.is_finite() && p.ratio > 0.0;
            let verdict = if ok { Verdict::Pass } else { Verdict::Fail };
            let label = format!("{kind};s={};b={};delta={}", e.s, e.b, p.delta);
            rows.push(row(cfg, label, p.ratio, p.ratio_stderr, None, verdict));
        }
        let max = pts
            .iter()
            .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
            .expect("non-empty ladder");
        let min = pts
            .iter()
            .min_by(|a, b| a.ratio.total_cmp(&b.ratio))
            .expect("non-empty ladder");
        let spread = max.ratio / min.ratio;
        let se = spread * (max.ratio_stderr / max.ratio).hypot(min.ratio_stderr / min.ratio);
        let verdict = if spread.is_finite() && spread <= params.max_spread {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        let label = format!("{kind};s={};b={};spread", e.s, e.b);
        rows.push(row(cfg, label, spread, se, Some(spread), verdict));
    }
    Ok(rows)
}

/// Random `φ₀(z) + φ₁(z)w₁ + …`: tangential degree ≤ 2, normal degree ≤ 1, so
/// `φ` is not in the ideal.
fn random_polynomial(rng: &mut ChaCha8Rng, spec: &VarietySpec) -> Polynomial {
    let nvars = spec.dim();
    Polynomial::from_terms(
        nvars,
        (0..6).map(|_| {
            let mut e = vec![0; nvars];
            for &t in spec.tangential() {
                e[t] = rng.random_range(0..=2);
            }
            let slot = rng.random_range(0..=spec.kappa());
            if slot > 0 {
                e[spec.normal()[slot - 1]] = 1;
            }
            (
                MultiIndex::new(e),
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )
        }),
    )
}

/// Uniform points of the ball of radius `radius` in `C^n`.
fn ball_points(rng: &mut ChaCha8Rng, n: usize, radius: f64, count: usize) -> Vec<Vec<C64>> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z: Vec<C64> = (0..n)
            .map(|_| {
                C64::new(
                    rng.random_range(-radius..radius),
                    rng.random_range(-radius..radius),
                )
            })
            .collect();
        if z.iter().map(|c| c.norm_sqr()).sum::<f64>() <= radius * radius {
            out.push(z);
        }
    }
    out
}

fn norm_equivalence(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let spec = cfg.require_variety()?;
    let gamma = generators_gamma(&spec);
    let direct = generators_noncm(&spec)?;
    let mut psis = cfg.representatives(spec.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    psis.extend((0..cfg.random_psi).map(|_| random_polynomial(&mut rng, &spec)));
    let tol = cfg.tolerance.unwrap_or(0.2);
    // Nested samples: the first `points` of the doubled set are the original set.
    let zs = ball_points(&mut rng, spec.n(), cfg.radius, 2 * cfg.points);
    let mut constants = [0.0f64; 2];
    let mut rows = Vec::new();
    for (k, psi) in psis.iter().enumerate() {
        let ratios: Vec<f64> = zs
            .iter()
            .map(|z| norm_pointwise(&spec, &gamma, psi, z) / norm_pointwise(&spec, &direct, psi, z))
            .collect();
        let usable = |rs: &[f64]| -> Option<(f64, f64)> {
            let rs: Vec<f64> = rs
                .iter()
                .copied()
                .filter(|r| r.is_finite() && *r > 0.0)
                .collect();
            (!rs.is_empty()).then(|| {
                (
                    rs.iter().copied().fold(f64::MAX, f64::min),
                    rs.iter().copied().fold(0.0, f64::max),
                )
            })
        };
        let params = format!("psi={k};radius={}", cfg.radius);
        let invalid = ratios
            .iter()
            .filter(|r| !(r.is_finite() && **r > 0.0))
            .count();
        match usable(&ratios) {
            Some((lo, hi)) => {
                for (stage, n) in [cfg.points, 2 * cfg.points].into_iter().enumerate() {
                    let (lo, hi) = usable(&ratios[..n]).unwrap_or((lo, hi));
                    constants[stage] = constants[stage].max(hi).max(1.0 / lo);
                }
                let verdict = if invalid == 0 {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                };
                rows.push(row(
                    cfg,
                    format!("{params};points={}", zs.len()),
                    hi,
                    0.0,
                    Some(lo),
                    verdict,
                ));
            }
            None => rows.push(row(cfg, params, 0.0, 0.0, None, Verdict::Degenerate)),
        }
    }
    let change = constants[1] / constants[0];
    let verdict = if change.is_finite() && (change - 1.0).abs() <= tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let params = format!("fitted-C;points={}..{}", cfg.points, 2 * cfg.points);
    rows.push(row(cfg, params, constants[1], 0.0, Some(change), verdict));
    Ok(rows)
}
