//! The extension operator `Φ(z) = ∫ HR ∧ g^α ψ`, evaluated by Monte Carlo over
//! `Z ∩ D` (or over `D` for the reproducing formula), and the weighted norms
//! that enter the extension estimates.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{AlgebraError, ExtensionError, QuadratureError};
use crate::jet::C64;
use crate::kernel::{CollapsedIntegrand, WeightContext};
use crate::multi_index::MultiIndex;
use crate::poly::Polynomial;
use crate::quadrature::{
    check_weight, mc_integrate_vec, BoundaryWeight, Estimate, QuadraturePlan, Region,
    Stratification, VectorEstimate,
};
use crate::variety::{norm_pointwise, NoetherianGeneratorSet, VarietySpec};

/// Evaluation points closer than this to `∂D` are rejected.
pub const NEAR_BOUNDARY: f64 = 10.0 * f64::EPSILON;

/// Outcome of a numerical check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    /// Quadrature noise too large to decide.
    Inconclusive,
    /// Both sides vanish identically; nothing to compare.
    Degenerate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Degenerate => "DEGENERATE",
        })
    }
}

/// `|M| + n + 2`.
pub fn default_alpha(spec: &VarietySpec) -> f64 {
    (spec.m().order() as usize + spec.n() + 2) as f64
}

/// Extension of one or more representatives `ψ` from `X` (or of functions on
/// `D` itself when no variety is given, which is the reproducing formula).
#[derive(Clone, Debug)]
pub struct ExtensionEvaluator {
    domain: Domain,
    variety: Option<VarietySpec>,
    alpha: f64,
    psis: Vec<Polynomial>,
    plan: QuadraturePlan,
    resolution: f64,
    common_samples: bool,
}

impl ExtensionEvaluator {
    pub fn new(
        domain: Domain,
        variety: VarietySpec,
        psi: Polynomial,
        plan: QuadraturePlan,
    ) -> Result<Self, ExtensionError> {
        if variety.dim() != domain.dim() {
            return Err(AlgebraError::DimensionMismatch {
                left: domain.dim(),
                right: variety.dim(),
            }
            .into());
        }
        let alpha = default_alpha(&variety);
        ExtensionEvaluator {
            domain,
            variety: Some(variety),
            alpha,
            psis: Vec::new(),
            plan,
            resolution: 1e-2,
            common_samples: false,
        }
        .with_representatives(vec![psi])
    }

    /// `Φ(z) = ∫_D g^α φ`, which reproduces holomorphic `φ`.
    pub fn reproducing(
        domain: Domain,
        phi: Polynomial,
        alpha: f64,
        plan: QuadraturePlan,
    ) -> Result<Self, ExtensionError> {
        ExtensionEvaluator {
            domain,
            variety: None,
            alpha,
            psis: Vec::new(),
            plan,
            resolution: 1e-2,
            common_samples: false,
        }
        .with_representatives(vec![phi])
    }

    /// Replaces the representatives; all of them are integrated from the same samples.
    pub fn with_representatives(mut self, psis: Vec<Polynomial>) -> Result<Self, ExtensionError> {
        if psis.is_empty() {
            return Err(ExtensionError::Unsupported(
                "at least one representative is required".into(),
            ));
        }
        if let Some(p) = psis.iter().find(|p| p.nvars() != self.domain.dim()) {
            return Err(AlgebraError::DimensionMismatch {
                left: self.domain.dim(),
                right: p.nvars(),
            }
            .into());
        }
        self.psis = psis;
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self, ExtensionError> {
        if !(alpha > 0.0) {
            return Err(ExtensionError::Unsupported(format!(
                "weight exponent α = {alpha} must be positive"
            )));
        }
        self.alpha = alpha;
        Ok(self)
    }

    /// Largest acceptable stderr in interpolation checks.
    pub fn with_resolution(mut self, resolution: f64) -> Self {
        self.resolution = resolution;
        self
    }

    /// Uses one sample set for all evaluation points (common random numbers)
    /// instead of Koranyi shells centred at each point.
    pub fn with_common_samples(mut self, common: bool) -> Self {
        self.common_samples = common;
        self
    }

    pub fn with_plan(mut self, plan: QuadraturePlan) -> Self {
        self.plan = plan;
        self
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn variety(&self) -> Option<&VarietySpec> {
        self.variety.as_ref()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn representatives(&self) -> &[Polynomial] {
        &self.psis
    }

    pub fn plan(&self) -> &QuadraturePlan {
        &self.plan
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    fn region(&self) -> Region<'_> {
        match &self.variety {
            Some(v) => Region::Slice(&self.domain, v),
            None => Region::FullDomain(&self.domain),
        }
    }

    fn integrands(
        &self,
        zs: &[Vec<C64>],
        z_jet: Option<&MultiIndex>,
    ) -> Result<Vec<CollapsedIntegrand<'_>>, ExtensionError> {
        zs.iter()
            .map(|z| {
                if z.len() != self.domain.dim() {
                    return Err(AlgebraError::DimensionMismatch {
                        left: self.domain.dim(),
                        right: z.len(),
                    }
                    .into());
                }
                let d = self.domain.delta(z)?;
                if d < NEAR_BOUNDARY {
                    return Err(ExtensionError::NearBoundary { distance: d });
                }
                let ctx = WeightContext::new(&self.domain, self.alpha, z)?;
                CollapsedIntegrand::new(ctx, self.variety.as_ref(), z_jet.cloned(), false)
            })
            .collect()
    }

    /// `∂_{τ_z}^m Φ_ψ(z)` for every point, representative and `m ≤ order`,
    /// indexed `[point][representative][m]` with `m` in [`MultiIndex::below`] order.
    pub fn normal_jets(
        &self,
        zs: &[Vec<C64>],
        order: &MultiIndex,
    ) -> Result<Vec<Vec<Vec<Estimate>>>, ExtensionError> {
        let jet = if order.is_empty() { None } else { Some(order) };
        self.evaluate(zs, jet)
    }

    /// Shells are used on unit-ball regions unless common samples were requested.
    fn uses_shells(&self) -> bool {
        !self.common_samples && self.region().is_coordinate_ball()
    }

    fn evaluate(
        &self,
        zs: &[Vec<C64>],
        z_jet: Option<&MultiIndex>,
    ) -> Result<Vec<Vec<Vec<Estimate>>>, ExtensionError> {
        let integrands = self.integrands(zs, z_jet)?;
        let orders = integrands.first().map_or(1, |c| c.param_orders().len());
        let stride = orders * self.psis.len();
        let region = self.region();
        let reshape = |est: &VectorEstimate, i: usize| -> Vec<Vec<Estimate>> {
            (0..self.psis.len())
                .map(|k| {
                    (0..orders)
                        .map(|m| est.component(i * stride + k * orders + m))
                        .collect()
                })
                .collect()
        };
        if self.uses_shells() {
            return integrands
                .iter()
                .zip(zs)
                .map(|(ci, z)| {
                    let centre = match &self.variety {
                        Some(v) => v.split(z).0,
                        None => z.clone(),
                    };
                    let plan = self
                        .plan
                        .clone()
                        .with_stratification(Stratification::KoranyiPolar(centre));
                    let est = mc_integrate_vec(&region, stride, &plan, |x, out| {
                        ci.densities(&self.psis, x, out)
                    })?;
                    Ok(reshape(&est, 0))
                })
                .collect();
        }
        let est = mc_integrate_vec(&region, stride * zs.len(), &self.plan, |x, out| {
            for (i, ci) in integrands.iter().enumerate() {
                ci.densities(&self.psis, x, &mut out[i * stride..(i + 1) * stride])?;
            }
            Ok::<(), ExtensionError>(())
        })?;
        Ok((0..zs.len()).map(|i| reshape(&est, i)).collect())
    }

    /// `Φ_ψ(z)` for every point and representative, indexed `[point][representative]`.
    pub fn extend_all(&self, zs: &[Vec<C64>]) -> Result<Vec<Vec<Estimate>>, ExtensionError> {
        Ok(self
            .evaluate(zs, None)?
            .into_iter()
            .map(|row| row.into_iter().map(|v| v[0]).collect())
            .collect())
    }

    /// `∂_τ^m ψ` at the point of `Z` over `ζ'`, one value per `m ≤ order`.
    pub fn representative_jets(
        &self,
        zeta: &[C64],
        order: &MultiIndex,
    ) -> Result<Vec<Vec<C64>>, ExtensionError> {
        let spec = self
            .variety
            .as_ref()
            .ok_or_else(|| ExtensionError::Unsupported("no variety".into()))?;
        let z = spec.point_on_z(zeta);
        let ctx = WeightContext::new(&self.domain, self.alpha, &z)?;
        let ci = CollapsedIntegrand::new(ctx, Some(spec), None, false)?;
        let zero_a = MultiIndex::zeros(order.len());
        Ok(self
            .psis
            .iter()
            .map(|psi| {
                let jet = ci.psi_jet(psi, zeta);
                order
                    .below()
                    .iter()
                    .map(|m| jet.coeff(m, &zero_a, &MultiIndex::zeros(0)) * m.factorial())
                    .collect()
            })
            .collect())
    }
}

/// `Φ(z)` for the evaluator's first representative.
pub fn extend(ev: &ExtensionEvaluator, z: &[C64]) -> Result<Estimate, ExtensionError> {
    Ok(ev.extend_all(&[z.to_vec()])?[0][0])
}

/// [`extend`] restricted to evaluators built on a hypersurface variety.
pub fn extend_hypersurface(ev: &ExtensionEvaluator, z: &[C64]) -> Result<Estimate, ExtensionError> {
    if ev
        .variety()
        .and_then(VarietySpec::hypersurface_data)
        .is_none()
    {
        return Err(ExtensionError::Unsupported(
            "evaluator is not built on a hypersurface".into(),
        ));
    }
    extend(ev, z)
}

/// `Φ(ζ', τ) = ψ(ζ', 0)` for a reduced coordinate subspace.
#[derive(Clone, Debug)]
pub struct TrivialExtension {
    psi: Polynomial,
    normal: Vec<usize>,
}

impl TrivialExtension {
    pub fn eval(&self, x: &[C64]) -> C64 {
        let mut y = x.to_vec();
        for &j in &self.normal {
            y[j] = C64::new(0.0, 0.0);
        }
        self.psi.eval(&y)
    }
}

pub fn trivial_extension(
    spec: &VarietySpec,
    psi: &Polynomial,
) -> Result<TrivialExtension, ExtensionError> {
    if !spec.is_reduced() || spec.hypersurface_data().is_some() {
        return Err(ExtensionError::Unsupported(
            "the trivial extension needs a reduced coordinate subspace".into(),
        ));
    }
    if psi.nvars() != spec.dim() {
        return Err(AlgebraError::DimensionMismatch {
            left: spec.dim(),
            right: psi.nvars(),
        }
        .into());
    }
    Ok(TrivialExtension {
        psi: psi.clone(),
        normal: spec.normal().to_vec(),
    })
}

/// `c_{r,κ} = π^κ / ((r+1)⋯(r+κ))`.
pub fn sharp_constant(r: f64, kappa: usize) -> f64 {
    PI.powi(kappa as i32) / (1..=kappa).map(|i| r + i as f64).product::<f64>()
}

/// One compared jet in an interpolation check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationRow {
    pub point: Vec<C64>,
    pub representative: usize,
    pub order: MultiIndex,
    pub extension_jet: C64,
    pub representative_jet: C64,
    pub mismatch: f64,
    pub stderr: f64,
    /// `mismatch / stderr`, with the stderr floored at a rounding scale.
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub rows: Vec<InterpolationRow>,
    pub max_normalized: f64,
    pub max_stderr: f64,
    pub verdict: Verdict,
}

/// Compares `∂_τ^m Φ` with `∂_τ^m ψ` on `Z` for all `m ≤ M`.
pub fn verify_interpolation(
    ev: &ExtensionEvaluator,
    sample_points: &[Vec<C64>],
    tol_multiplier: f64,
) -> Result<InterpolationReport, ExtensionError> {
    let spec = ev
        .variety()
        .ok_or_else(|| ExtensionError::Unsupported("interpolation needs a variety".into()))?;
    let order = spec.m().clone();
    let zs: Vec<Vec<C64>> = sample_points.iter().map(|p| spec.point_on_z(p)).collect();
    let phi = ev.normal_jets(&zs, &order)?;
    let orders = order.below();
    let mut rows = Vec::new();
    for (i, p) in sample_points.iter().enumerate() {
        let reference = ev.representative_jets(p, &order)?;
        for (k, psi_jets) in reference.iter().enumerate() {
            for (mi, m) in orders.iter().enumerate() {
                let est = phi[i][k][mi];
                let target = psi_jets[mi];
                let mismatch = (est.value - target).norm();
                let floor = 1e-12 * (1.0 + target.norm());
                rows.push(InterpolationRow {
                    point: p.clone(),
                    representative: k,
                    order: m.clone(),
                    extension_jet: est.value,
                    representative_jet: target,
                    mismatch,
                    stderr: est.stderr,
                    normalized: mismatch / est.stderr.max(floor),
                });
            }
        }
    }
    let max_normalized = rows.iter().map(|r| r.normalized).fold(0.0, f64::max);
    let max_stderr = rows.iter().map(|r| r.stderr).fold(0.0, f64::max);
    let verdict = if max_stderr > ev.resolution() {
        Verdict::Inconclusive
    } else if max_normalized <= tol_multiplier {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(InterpolationReport {
        rows,
        max_normalized,
        max_stderr,
        verdict,
    })
}

/// `(r, p)` pair of a weighted `L^p` norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightExponents {
    pub r: f64,
    pub p: f64,
}

fn check_grid(grid: &[WeightExponents], shift: f64) -> Result<(), QuadratureError> {
    for g in grid {
        check_weight(g.r + shift.min(0.0))?;
        if !(g.p >= 1.0) {
            return Err(QuadratureError::Invalid(format!(
                "p = {} must be at least 1",
                g.p
            )));
        }
    }
    Ok(())
}

/// `∫_{Z∩D} w^{r+κ} |ψ|_X^p dV_Z` for each representative and grid entry, `[ψ][grid]`.
pub fn x_norm_integrals(
    domain: &Domain,
    spec: &VarietySpec,
    gens: &NoetherianGeneratorSet,
    psis: &[Polynomial],
    grid: &[WeightExponents],
    weight: BoundaryWeight,
    plan: &QuadraturePlan,
) -> Result<Vec<Vec<Estimate>>, QuadratureError> {
    check_grid(grid, 0.0)?;
    let kappa = spec.kappa() as f64;
    let region = Region::Slice(domain, spec);
    let width = psis.len() * grid.len();
    let est = mc_integrate_vec(&region, width, plan, |x, out| {
        let amb = spec.point_on_z(x);
        let w = weight.eval(domain, &amb);
        for (k, psi) in psis.iter().enumerate() {
            let norm = norm_pointwise(spec, gens, psi, x);
            for (j, g) in grid.iter().enumerate() {
                out[k * grid.len() + j] = C64::new(w.powf(g.r + kappa) * norm.powf(g.p), 0.0);
            }
        }
        Ok::<(), QuadratureError>(())
    })?;
    Ok(reshape(&est, psis.len(), grid.len()))
}

/// `Σ_{k≤M} ∫_{Z∩D} w^{r+1+k/2} Σ_{|β|=k} |∂^β ψ|^p dV_Z` with `β` over all
/// ambient directions, `[ψ][grid]`.
pub fn derivative_weighted_integrals(
    domain: &Domain,
    spec: &VarietySpec,
    psis: &[Polynomial],
    grid: &[WeightExponents],
    weight: BoundaryWeight,
    plan: &QuadraturePlan,
) -> Result<Vec<Vec<Estimate>>, QuadratureError> {
    check_grid(grid, 0.0)?;
    let order = spec.m().order();
    let derivs: Vec<Vec<(u32, Polynomial)>> = psis
        .iter()
        .map(|psi| {
            (0..=order)
                .flat_map(|k| {
                    MultiIndex::up_to_order(spec.dim(), k)
                        .into_iter()
                        .filter(move |b| b.order() == k)
                })
                .map(|b| (b.order(), psi.derivative_multi(&b)))
                .collect()
        })
        .collect();
    let region = Region::Slice(domain, spec);
    let width = psis.len() * grid.len();
    let est = mc_integrate_vec(&region, width, plan, |x, out| {
        let amb = spec.point_on_z(x);
        let w = weight.eval(domain, &amb);
        for (k, ds) in derivs.iter().enumerate() {
            for (j, g) in grid.iter().enumerate() {
                let total: f64 = ds
                    .iter()
                    .map(|(ord, d)| {
                        w.powf(g.r + 1.0 + *ord as f64 / 2.0) * d.eval(&amb).norm().powf(g.p)
                    })
                    .sum();
                out[k * grid.len() + j] = C64::new(total, 0.0);
            }
        }
        Ok::<(), QuadratureError>(())
    })?;
    Ok(reshape(&est, psis.len(), grid.len()))
}

fn reshape(est: &VectorEstimate, rows: usize, cols: usize) -> Vec<Vec<Estimate>> {
    (0..rows)
        .map(|k| (0..cols).map(|j| est.component(k * cols + j)).collect())
        .collect()
}

/// Uniform points of a region drawn by hit-or-miss from its bounding box.
#[derive(Clone, Debug)]
pub struct UniformPoints {
    pub points: Vec<Vec<C64>>,
    pub box_volume: f64,
    pub proposals: usize,
}

impl UniformPoints {
    /// Hit-or-miss estimate of `∫ f` from the values of `f` at the points.
    pub fn integral(&self, values: &[f64], seed: u64) -> Estimate {
        let p = self.proposals as f64;
        let mean = values.iter().sum::<f64>() / p;
        let second = values.iter().map(|v| v * v).sum::<f64>() / p;
        let var = (second - mean * mean).max(0.0) * p / (p - 1.0).max(1.0);
        Estimate {
            value: C64::new(self.box_volume * mean, 0.0),
            stderr: self.box_volume * (var / p).sqrt(),
            n_samples: self.proposals,
            seed,
        }
    }
}

pub fn uniform_points(
    region: &Region,
    hits: usize,
    seed: u64,
) -> Result<UniformPoints, QuadratureError> {
    let bbox = region.domain().bounding_box();
    let dims: Vec<usize> = match region {
        Region::FullDomain(d) => (0..d.dim()).collect(),
        Region::Slice(_, v) => v.tangential().to_vec(),
        Region::BoundarySequence(_) => {
            return Err(QuadratureError::Invalid("not an integration region".into()))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(hits);
    let mut proposals = 0usize;
    let limit = hits.saturating_mul(100).max(1000);
    while out.len() < hits {
        if proposals >= limit {
            return Err(QuadratureError::InefficientRegion {
                efficiency: out.len() as f64 / proposals as f64,
            });
        }
        proposals += 1;
        let x: Vec<C64> = dims
            .iter()
            .map(|&j| {
                let re = rng.random_range(bbox.lo[2 * j]..bbox.hi[2 * j]);
                let im = rng.random_range(bbox.lo[2 * j + 1]..bbox.hi[2 * j + 1]);
                C64::new(re, im)
            })
            .collect();
        if region.contains(&x) {
            out.push(x);
        }
    }
    let box_volume = dims
        .iter()
        .map(|&j| (bbox.hi[2 * j] - bbox.lo[2 * j]) * (bbox.hi[2 * j + 1] - bbox.lo[2 * j + 1]))
        .product();
    Ok(UniformPoints {
        points: out,
        box_volume,
        proposals,
    })
}

/// `∫_D w^r |Φ_ψ|^p dV` by nested Monte Carlo: `outer` uniform points of `D`,
/// each `Φ_ψ` estimated by the evaluator with its own sampling settings.
/// Returns `[ψ][grid]`; the stderr covers the outer sampling only.
pub fn extension_lp_norms(
    ev: &ExtensionEvaluator,
    grid: &[WeightExponents],
    weight: BoundaryWeight,
    outer: usize,
    seed: u64,
) -> Result<Vec<Vec<Estimate>>, ExtensionError> {
    check_grid(grid, 0.0)?;
    let domain = ev.domain();
    let region = Region::FullDomain(domain);
    let sample = uniform_points(&region, outer, seed)?;
    let phis = ev.extend_all(&sample.points)?;
    let weights: Vec<f64> = sample
        .points
        .iter()
        .map(|z| weight.eval(domain, z))
        .collect();
    Ok((0..ev.representatives().len())
        .map(|k| {
            grid.iter()
                .map(|g| {
                    let vals: Vec<f64> = weights
                        .iter()
                        .zip(&phis)
                        .map(|(w, phi)| w.powf(g.r) * phi[k].value.norm().powf(g.p))
                        .collect();
                    sample.integral(&vals, seed)
                })
                .collect()
        })
        .collect())
}

/// `max |f(z)|² / |v(ζ, z)|` over `pairs` samples `ζ ∈ Z ∩ D`, `z ∈ D`.
pub fn kernel_bound_constant(
    domain: &Domain,
    spec: &VarietySpec,
    pairs: usize,
    seed: u64,
) -> Result<f64, ExtensionError> {
    let hs = spec.hypersurface_data().ok_or_else(|| {
        ExtensionError::Unsupported("the kernel bound is stated for hypersurfaces".into())
    })?;
    let zetas = uniform_points(&Region::Slice(domain, spec), pairs, seed)?.points;
    let zs = uniform_points(
        &Region::FullDomain(domain),
        pairs,
        seed ^ 0x9e37_79b9_7f4a_7c15,
    )?
    .points;
    Ok(zetas
        .iter()
        .zip(&zs)
        .map(|(zp, z)| {
            let zeta = spec.point_on_z(zp);
            hs.f().eval(z).norm_sqr() / domain.v().eval(&zeta, z).norm()
        })
        .fold(0.0, f64::max))
}
