//! Deterministic Monte Carlo integration over the domain, over slices `Z ∩ D`
//! and along boundary-approach ladders.
//!
//! Samples are drawn by hit-or-miss inside axis-aligned boxes. The work is cut
//! into fixed blocks, each with its own ChaCha stream, and block statistics are
//! merged in block order, so results are bitwise identical whether blocks run
//! sequentially or on the rayon pool.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::QuadratureError;
use crate::jet::C64;
use crate::sampling::RealBox;
use crate::variety::VarietySpec;

const MIN_EFFICIENCY: f64 = 0.01;

/// Strata of the Koranyi importance sampler over `(log |v|, arg v)`.
const POLAR_GRID: [usize; 2] = [16, 8];

/// Integration region.
#[derive(Clone, Copy, Debug)]
pub enum Region<'a> {
    /// All of `D`, sampled in ambient coordinates.
    FullDomain(&'a Domain),
    /// `Z ∩ D`, sampled in the tangential coordinates `ζ'`.
    Slice(&'a Domain, &'a VarietySpec),
    /// A ladder of points approaching the boundary; used by [`uppsk_ratio`].
    BoundarySequence(&'a BoundarySequence<'a>),
}

impl<'a> Region<'a> {
    pub fn domain(&self) -> &'a Domain {
        match self {
            Region::FullDomain(d) | Region::Slice(d, _) => d,
            Region::BoundarySequence(s) => s.domain,
        }
    }

    /// Complex dimension of the sampled coordinates.
    pub fn dim(&self) -> usize {
        match self {
            Region::FullDomain(d) => d.dim(),
            Region::Slice(_, v) => v.n(),
            Region::BoundarySequence(s) => s.region().dim(),
        }
    }

    /// Ambient point for region coordinates.
    pub fn ambient(&self, x: &[C64]) -> Vec<C64> {
        match self {
            Region::FullDomain(_) => x.to_vec(),
            Region::Slice(_, v) => v.point_on_z(x),
            Region::BoundarySequence(s) => s.region().ambient(x),
        }
    }

    pub fn contains(&self, x: &[C64]) -> bool {
        match self {
            Region::FullDomain(d) => d.contains(x),
            Region::Slice(d, v) => d.contains(&v.point_on_z(x)),
            Region::BoundarySequence(s) => s.region().contains(x),
        }
    }

    /// Bounding box of the region in its own coordinates.
    fn bounding_box(&self) -> RealBox {
        match self {
            Region::FullDomain(d) => d.bounding_box().clone(),
            Region::Slice(d, v) => {
                let b = d.bounding_box();
                let mut lo = Vec::with_capacity(2 * v.n());
                let mut hi = Vec::with_capacity(2 * v.n());
                for &j in v.tangential() {
                    lo.extend_from_slice(&b.lo[2 * j..2 * j + 2]);
                    hi.extend_from_slice(&b.hi[2 * j..2 * j + 2]);
                }
                RealBox { lo, hi }
            }
            Region::BoundarySequence(s) => s.region().bounding_box(),
        }
    }

    /// Whether the region is a unit ball in its own coordinates, so that
    /// `v(x, p) = 1 − ⟨x, p⟩` and Koranyi shells can be laid out exactly.
    pub fn is_coordinate_ball(&self) -> bool {
        match self {
            Region::FullDomain(d) => d.is_unit_ball(),
            Region::Slice(d, v) => d.is_unit_ball() && v.hypersurface_data().is_none(),
            Region::BoundarySequence(s) => s.region().is_coordinate_ball(),
        }
    }
}

/// Points `p_k` with `δ(p_k)` running down a strictly decreasing ladder.
#[derive(Clone, Debug)]
pub struct BoundarySequence<'a> {
    domain: &'a Domain,
    variety: Option<&'a VarietySpec>,
    direction: Vec<C64>,
    ladder: Vec<f64>,
}

impl<'a> BoundarySequence<'a> {
    /// `direction` lives in region coordinates (ambient, or `ζ'` when a
    /// variety is given). The points lie on the ray through the origin.
    pub fn new(
        domain: &'a Domain,
        variety: Option<&'a VarietySpec>,
        direction: Vec<C64>,
        ladder: Vec<f64>,
    ) -> Result<Self, QuadratureError> {
        let dim = variety.map_or(domain.dim(), |v| v.n());
        if direction.len() != dim || direction.iter().all(|c| c.norm() == 0.0) {
            return Err(QuadratureError::Invalid(
                "ladder direction must be a non-zero vector of the region dimension".into(),
            ));
        }
        if ladder.is_empty()
            || ladder.iter().any(|&d| !(d > 0.0))
            || ladder.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(QuadratureError::Invalid(
                "ladder must be positive and strictly decreasing".into(),
            ));
        }
        let seq = BoundarySequence {
            domain,
            variety,
            direction,
            ladder,
        };
        if !seq.region().contains(&vec![C64::new(0.0, 0.0); dim]) {
            return Err(QuadratureError::Invalid(
                "boundary ladders start from the origin, which must be interior".into(),
            ));
        }
        Ok(seq)
    }

    pub fn ladder(&self) -> &[f64] {
        &self.ladder
    }

    /// The region in which the ladder points live.
    pub fn region(&self) -> Region<'a> {
        match self.variety {
            Some(v) => Region::Slice(self.domain, v),
            None => Region::FullDomain(self.domain),
        }
    }

    fn delta_at(&self, x: &[C64]) -> f64 {
        self.domain.delta(&self.region().ambient(x)).unwrap_or(0.0)
    }

    /// Region coordinates of the ladder points.
    pub fn points(&self) -> Vec<Vec<C64>> {
        let norm = self
            .direction
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt();
        let unit: Vec<C64> = self.direction.iter().map(|c| c / norm).collect();
        let at = |t: f64| unit.iter().map(|c| c * t).collect::<Vec<_>>();
        self.ladder
            .iter()
            .map(|&target| {
                if self.region().is_coordinate_ball() {
                    return at(1.0 - target);
                }
                // δ decreases along the ray near the boundary; bisect for δ = target.
                let mut hi = 1.0;
                while self.region().contains(&at(hi)) {
                    hi *= 2.0;
                }
                let (mut a, mut b) = (0.0, hi);
                for _ in 0..100 {
                    let mid = 0.5 * (a + b);
                    let p = at(mid);
                    if self.region().contains(&p) && self.delta_at(&p) > target {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                at(a)
            })
            .collect()
    }
}

/// How blocks are scheduled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Execution {
    Sequential,
    /// Rayon pool; falls back to sequential when the `parallel` feature is off.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Sampling strategy.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum Stratification {
    #[default]
    Uniform,
    /// Dyadic shells of `|v(·, p)|` around the given point (unit-ball regions only).
    KoranyiShells(Vec<C64>),
    /// Importance sampling with `|v(·, p)|` log-uniform around the given point
    /// (unit-ball regions only).
    KoranyiPolar(Vec<C64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraturePlan {
    pub samples: usize,
    pub seed: u64,
    pub antithetic: bool,
    pub stratification: Stratification,
    pub execution: Execution,
    /// Samples per RNG block.
    pub block_size: usize,
}

impl QuadraturePlan {
    pub fn new(samples: usize, seed: u64) -> Self {
        QuadraturePlan {
            samples,
            seed,
            antithetic: true,
            stratification: Stratification::Uniform,
            execution: Execution::default(),
            block_size: 4096,
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_stratification(mut self, s: Stratification) -> Self {
        self.stratification = s;
        self
    }

    pub fn with_antithetic(mut self, antithetic: bool) -> Self {
        self.antithetic = antithetic;
        self
    }
}

/// Scalar Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: C64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Estimates of several integrals computed from the same samples.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorEstimate {
    pub values: Vec<C64>,
    pub stderrs: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    /// Fraction of proposals that landed in the region.
    pub efficiency: f64,
}

impl VectorEstimate {
    pub fn component(&self, i: usize) -> Estimate {
        Estimate {
            value: self.values[i],
            stderr: self.stderrs[i],
            n_samples: self.n_samples,
            seed: self.seed,
        }
    }

    pub fn width(&self) -> usize {
        self.values.len()
    }
}

/// Running mean and centred second moment of one real component.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0.0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n / n;
        self.m2 += o.m2 + d * d * self.n * o.n / n;
        self.n = n;
    }

    fn variance(&self) -> f64 {
        if self.n > 1.0 {
            self.m2 / (self.n - 1.0)
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug)]
struct BlockStats {
    re: Vec<Moments>,
    im: Vec<Moments>,
    proposals: u64,
    hits: u64,
}

impl BlockStats {
    fn new(width: usize) -> Self {
        BlockStats {
            re: vec![Moments::default(); width],
            im: vec![Moments::default(); width],
            proposals: 0,
            hits: 0,
        }
    }

    fn merge(&mut self, o: &BlockStats) {
        for (a, b) in self.re.iter_mut().zip(&o.re) {
            a.merge(b);
        }
        for (a, b) in self.im.iter_mut().zip(&o.im) {
            a.merge(b);
        }
        self.proposals += o.proposals;
        self.hits += o.hits;
    }
}

/// Maps a uniform point of `[0,1)^k` to a region point and its importance
/// weight (`1/pdf`), or to nothing when the proposal misses.
#[derive(Clone, Debug)]
enum Proposal {
    /// Uniform in a box, after an optional unitary change `x = U w`, optionally
    /// restricted to a shell `lo < |1 − ⟨x, p⟩| ≤ hi`.
    Box {
        bbox: RealBox,
        rotation: Option<Vec<Vec<C64>>>,
        shell: Option<(Vec<C64>, f64, f64)>,
    },
    /// Log-uniform `|v|` around `p` inside the unit ball (see [`polar_sample`]),
    /// restricted to one cell of a grid over `(log |v|, arg v)`.
    Polar {
        rotation: Vec<Vec<C64>>,
        radius: f64,
        cell: [usize; 2],
    },
}

fn rotate(rotation: &Option<Vec<Vec<C64>>>, w: &[C64], x: &mut [C64]) {
    match rotation {
        None => x.copy_from_slice(w),
        Some(u) => {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = u[i].iter().zip(w).map(|(uij, wj)| uij * wj).sum();
            }
        }
    }
}

impl Proposal {
    fn unit_dim(&self, dim: usize) -> usize {
        match self {
            Proposal::Box { bbox, .. } => bbox.dim(),
            // One extra coordinate for the radius of higher-dimensional tangential balls.
            Proposal::Polar { .. } => 2 * dim + 1,
        }
    }

    fn sample(&self, u: &[f64], scratch: &mut [f64], w: &mut [C64], x: &mut [C64]) -> Option<f64> {
        match self {
            Proposal::Box {
                bbox,
                rotation,
                shell,
            } => {
                bbox.map_unit(u, scratch);
                for (wi, c) in w.iter_mut().zip(scratch.chunks(2)) {
                    *wi = C64::new(c[0], c[1]);
                }
                rotate(rotation, w, x);
                if let Some((p, lo, hi)) = shell {
                    let dot: C64 = x.iter().zip(p).map(|(a, b)| a.conj() * b).sum();
                    let v = (C64::new(1.0, 0.0) - dot).norm();
                    if !(v > *lo && v <= *hi) {
                        return None;
                    }
                }
                Some(bbox.volume())
            }
            Proposal::Polar {
                rotation,
                radius,
                cell,
            } => {
                scratch.copy_from_slice(u);
                scratch[0] = (cell[0] as f64 + u[0]) / POLAR_GRID[0] as f64;
                scratch[1] = (cell[1] as f64 + u[1]) / POLAR_GRID[1] as f64;
                let weight = polar_sample(*radius, scratch, w)?;
                rotate(&Some(rotation.clone()), w, x);
                Some(weight / (POLAR_GRID[0] * POLAR_GRID[1]) as f64)
            }
        }
    }
}

/// Point `w` of the unit ball with `v = 1 − r·w̄₁` drawn log-uniformly in `|v| ∈ [1−r, 1+r]`,
/// `arg v` uniform on the arc that keeps `|w₁| < 1`, and `w'` in the ball of radius
/// `t = (1 − |w₁|²)^{1/2}` (see [`tangential_sample`]). Returns `1/pdf`, or `None`
/// outside the ball. The weight cancels the `|v|`-singularity of
/// Koranyi-concentrated integrands.
fn polar_sample(r: f64, u: &[f64], w: &mut [C64]) -> Option<f64> {
    let (lo, hi) = (1.0 - r, 1.0 + r);
    let log_span = (hi / lo).ln();
    let rho = lo * (u[0] * log_span).exp();
    let c = (1.0 + rho * rho - r * r) / (2.0 * rho);
    let theta_max = if c <= -1.0 { PI } else { c.min(1.0).acos() };
    let theta = theta_max * (2.0 * u[1] - 1.0);
    let v = C64::from_polar(rho, theta);
    w[0] = ((C64::new(1.0, 0.0) - v) / r).conj();
    let rest = 1.0 - w[0].norm_sqr();
    if rest <= 0.0 {
        return None;
    }
    let w1_weight = 2.0 * theta_max * rho * rho * log_span / (r * r);
    Some(w1_weight * tangential_sample(rest.sqrt(), &u[2..], &mut w[1..]))
}

/// Fills `w'` inside the ball of radius `t` and returns `1/pdf`. With one
/// tangential direction `s = |w'|²/t²` has density `∝ (1 − s)^{1/2}`, which
/// favours the interior where integrands vanishing on `∂D` carry their mass
/// while keeping the weight square-integrable for integrands that do not vanish.
/// With more directions the point is uniform in the ball; `u` then carries one
/// extra coordinate for the radius.
fn tangential_sample(t: f64, u: &[f64], w: &mut [C64]) -> f64 {
    let m = w.len();
    match m {
        0 => 1.0,
        1 => {
            let s = 1.0 - (1.0 - u[0]).powf(2.0 / 3.0);
            w[0] = C64::from_polar(t * s.sqrt(), 2.0 * PI * u[1]);
            PI * t * t / (1.5 * (1.0 - s).sqrt())
        }
        _ => {
            // Gaussian direction by Box–Muller, radius from the ball's radial law.
            let mut norm = 0.0;
            for (k, wk) in w.iter_mut().enumerate() {
                let a = (-2.0 * (1.0 - u[2 * k]).ln()).sqrt();
                *wk = C64::from_polar(a, 2.0 * PI * u[2 * k + 1]);
                norm += wk.norm_sqr();
            }
            let radial = u[2 * m];
            let scale = t * radial.powf(1.0 / (2 * m) as f64) / norm.sqrt();
            for wk in w.iter_mut() {
                *wk *= scale;
            }
            PI.powi(m as i32) * t.powi(2 * m as i32) / (1..=m).product::<usize>() as f64
        }
    }
}

/// Unitary matrix (rows indexed by output coordinate) whose first column is `p/|p|`.
fn unitary_with_first_column(p: &[C64]) -> Vec<Vec<C64>> {
    let d = p.len();
    let norm = p.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut cols: Vec<Vec<C64>> = vec![p.iter().map(|c| c / norm).collect()];
    for k in 0..d {
        if cols.len() == d {
            break;
        }
        let mut e = vec![C64::new(0.0, 0.0); d];
        e[k] = C64::new(1.0, 0.0);
        for c in &cols {
            let proj: C64 = c.iter().zip(&e).map(|(a, b)| a.conj() * b).sum();
            for (ei, ci) in e.iter_mut().zip(c) {
                *ei -= proj * ci;
            }
        }
        let en = e.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if en > 1e-8 {
            cols.push(e.iter().map(|c| c / en).collect());
        }
    }
    (0..d)
        .map(|i| (0..d).map(|j| cols[j][i]).collect())
        .collect()
}

fn centre_radius(p: &[C64]) -> f64 {
    p.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn unit_cube(d: usize) -> Proposal {
    Proposal::Box {
        bbox: RealBox::cube(2 * d, 1.0),
        rotation: None,
        shell: None,
    }
}

/// Dyadic `|v|` shells around `p` inside the unit ball of `C^d`.
fn koranyi_strata(p: &[C64]) -> Vec<Proposal> {
    let d = p.len();
    let r = centre_radius(p);
    if d == 0 || r < 1e-3 {
        return vec![unit_cube(d)];
    }
    let mut eps = vec![2.0];
    while *eps.last().unwrap() > 1.0 - r {
        let e = 0.5 * eps.last().unwrap();
        eps.push(e);
    }
    let rotation = unitary_with_first_column(p);
    let count = eps.len() - 1;
    (0..count)
        .map(|k| {
            let outer = eps[k];
            let inner = if k + 1 == count { 0.0 } else { eps[k + 1] };
            let lower_re = ((1.0 - outer) / r).max(-1.0);
            let half_im = (outer / r).min(1.0);
            let t = if lower_re > 0.0 {
                (1.0 - lower_re * lower_re).max(0.0).sqrt()
            } else {
                1.0
            };
            let mut lo = vec![lower_re, -half_im];
            let mut hi = vec![1.0, half_im];
            for _ in 1..d {
                lo.extend([-t, -t]);
                hi.extend([t, t]);
            }
            Proposal::Box {
                bbox: RealBox { lo, hi },
                rotation: Some(rotation.clone()),
                shell: Some((p.to_vec(), inner, outer)),
            }
        })
        .collect()
}

fn proposals_for(region: &Region, plan: &QuadraturePlan) -> Result<Vec<Proposal>, QuadratureError> {
    let centre = match &plan.stratification {
        Stratification::Uniform => {
            return Ok(vec![Proposal::Box {
                bbox: region.bounding_box(),
                rotation: None,
                shell: None,
            }]);
        }
        Stratification::KoranyiShells(p) | Stratification::KoranyiPolar(p) => p,
    };
    if !region.is_coordinate_ball() {
        return Err(QuadratureError::Invalid(
            "Koranyi sampling needs a unit-ball region".into(),
        ));
    }
    if centre.len() != region.dim() {
        return Err(QuadratureError::Invalid(
            "sampling centre has the wrong dimension".into(),
        ));
    }
    if centre_radius(centre) >= 1.0 {
        return Err(QuadratureError::Invalid(
            "sampling centre must lie inside the ball".into(),
        ));
    }
    Ok(match &plan.stratification {
        Stratification::KoranyiShells(p) => koranyi_strata(p),
        _ => {
            let r = centre_radius(centre);
            if r < 1e-3 {
                vec![unit_cube(centre.len())]
            } else {
                let rotation = unitary_with_first_column(centre);
                (0..POLAR_GRID[0])
                    .flat_map(|i| (0..POLAR_GRID[1]).map(move |j| [i, j]))
                    .map(|cell| Proposal::Polar {
                        rotation: rotation.clone(),
                        radius: r,
                        cell,
                    })
                    .collect()
            }
        }
    })
}

fn run_block<E, F>(
    region: &Region,
    proposal: &Proposal,
    plan: &QuadraturePlan,
    stream: u64,
    count: usize,
    width: usize,
    f: &F,
) -> Result<BlockStats, E>
where
    F: Fn(&[C64], &mut [C64]) -> Result<(), E>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    rng.set_stream(stream);
    let dim = region.dim();
    let k = proposal.unit_dim(dim);
    let mut stats = BlockStats::new(width);
    let mut u = vec![0.0; k];
    let mut ur = vec![0.0; k];
    let mut scratch = vec![0.0; k];
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut x = vec![C64::new(0.0, 0.0); dim];
    let mut val = vec![C64::new(0.0, 0.0); width];
    let mut acc = vec![C64::new(0.0, 0.0); width];
    let reps = if plan.antithetic { 2.0 } else { 1.0 };

    let mut sample = |u: &[f64], acc: &mut [C64], stats: &mut BlockStats| -> Result<(), E> {
        stats.proposals += 1;
        if let Some(weight) = proposal.sample(u, &mut scratch, &mut w, &mut x) {
            if region.contains(&x) {
                stats.hits += 1;
                f(&x, &mut val)?;
                for (a, v) in acc.iter_mut().zip(&val) {
                    *a += v * weight;
                }
            }
        }
        Ok(())
    };

    for _ in 0..count {
        for ui in u.iter_mut() {
            *ui = rng.random::<f64>();
        }
        acc.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
        sample(&u, &mut acc, &mut stats)?;
        if plan.antithetic {
            for (r, v) in ur.iter_mut().zip(&u) {
                *r = 1.0 - v;
            }
            sample(&ur, &mut acc, &mut stats)?;
        }
        for (i, a) in acc.iter().enumerate() {
            stats.re[i].push(a.re / reps);
            stats.im[i].push(a.im / reps);
        }
    }
    Ok(stats)
}

/// Integrates a vector-valued integrand over `region`. The integrand receives
/// region coordinates and writes `width` values.
pub fn mc_integrate_vec<E, F>(
    region: &Region,
    width: usize,
    plan: &QuadraturePlan,
    f: F,
) -> Result<VectorEstimate, E>
where
    E: From<QuadratureError> + Send,
    F: Fn(&[C64], &mut [C64]) -> Result<(), E> + Sync,
{
    if plan.samples == 0 || plan.block_size == 0 {
        return Err(QuadratureError::Invalid(
            "sample count and block size must be positive".into(),
        )
        .into());
    }
    if let Region::BoundarySequence(_) = region {
        return Err(QuadratureError::Invalid(
            "integrate over the ladder's own region instead".into(),
        )
        .into());
    }
    let dim = region.dim();
    if dim == 0 {
        // The region is a single point with unit counting measure.
        let mut out = vec![C64::new(0.0, 0.0); width];
        if region.contains(&[]) {
            f(&[], &mut out)?;
        }
        return Ok(VectorEstimate {
            values: out,
            stderrs: vec![0.0; width],
            n_samples: 1,
            seed: plan.seed,
            efficiency: 1.0,
        });
    }
    let proposals = proposals_for(region, plan)?;
    let reps = if plan.antithetic { 2 } else { 1 };
    let units_per_stratum = plan.samples.div_ceil(reps * proposals.len()).max(2);
    let units_per_block = plan.block_size.div_ceil(reps).max(1);

    let mut jobs = Vec::new();
    for s in 0..proposals.len() {
        let blocks = units_per_stratum.div_ceil(units_per_block);
        for b in 0..blocks {
            let count = units_per_block.min(units_per_stratum - b * units_per_block);
            jobs.push((s, ((s as u64) << 40) | b as u64, count));
        }
    }
    let run = |&(s, stream, count): &(usize, u64, usize)| {
        run_block(region, &proposals[s], plan, stream, count, width, &f)
    };

    let results: Vec<Result<BlockStats, E>> = match plan.execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            jobs.par_iter().map(run).collect()
        }
        _ => jobs.iter().map(run).collect(),
    };

    let mut per_stratum: Vec<BlockStats> = vec![BlockStats::new(width); proposals.len()];
    for (job, r) in jobs.iter().zip(results) {
        per_stratum[job.0].merge(&r?);
    }

    let mut values = vec![C64::new(0.0, 0.0); width];
    let mut vars = vec![0.0; width];
    let (mut proposed, mut hits) = (0u64, 0u64);
    for stats in &per_stratum {
        for i in 0..width {
            let n = stats.re[i].n;
            values[i] += C64::new(stats.re[i].mean, stats.im[i].mean);
            vars[i] += (stats.re[i].variance() + stats.im[i].variance()) / n;
        }
        proposed += stats.proposals;
        hits += stats.hits;
    }
    let efficiency = hits as f64 / proposed as f64;
    if efficiency < MIN_EFFICIENCY {
        return Err(QuadratureError::InefficientRegion { efficiency }.into());
    }
    Ok(VectorEstimate {
        values,
        stderrs: vars.into_iter().map(f64::sqrt).collect(),
        n_samples: proposed as usize,
        seed: plan.seed,
        efficiency,
    })
}

/// Integrates a scalar integrand over `region` with the default plan.
pub fn mc_integrate<F>(
    f: F,
    region: &Region,
    n: usize,
    seed: u64,
) -> Result<Estimate, QuadratureError>
where
    F: Fn(&[C64]) -> C64 + Sync,
{
    mc_integrate_with(f, region, &QuadraturePlan::new(n, seed))
}

pub fn mc_integrate_with<F>(
    f: F,
    region: &Region,
    plan: &QuadraturePlan,
) -> Result<Estimate, QuadratureError>
where
    F: Fn(&[C64]) -> C64 + Sync,
{
    let est = mc_integrate_vec(region, 1, plan, |x, out| {
        out[0] = f(x);
        Ok::<(), QuadratureError>(())
    })?;
    Ok(est.component(0))
}

/// Boundary weight in weighted norms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryWeight {
    /// Euclidean distance to `∂D` (exact on the ball, `−ρ/|∇ρ|` otherwise).
    #[default]
    Distance,
    /// `−ρ`.
    DefiningFunction,
}

impl BoundaryWeight {
    pub fn eval(&self, domain: &Domain, x: &[C64]) -> f64 {
        match self {
            BoundaryWeight::Distance => domain.delta(x).unwrap_or(0.0),
            BoundaryWeight::DefiningFunction => (-domain.rho().eval(x)).max(0.0),
        }
    }
}

/// Checks `r > −1`.
pub fn check_weight(r: f64) -> Result<(), QuadratureError> {
    if r > -1.0 {
        Ok(())
    } else {
        Err(QuadratureError::DivergentWeight { r })
    }
}

/// `∫ w^r |F|^p dV` over `region`; `F` receives ambient points.
pub fn weighted_lp_norm<F>(
    f: F,
    r: f64,
    p: f64,
    weight: BoundaryWeight,
    region: &Region,
    plan: &QuadraturePlan,
) -> Result<Estimate, QuadratureError>
where
    F: Fn(&[C64]) -> C64 + Sync,
{
    check_weight(r)?;
    if !(p >= 1.0) {
        return Err(QuadratureError::Invalid(format!(
            "p = {p} must be at least 1"
        )));
    }
    let domain = region.domain();
    mc_integrate_with(
        |x| {
            let amb = region.ambient(x);
            C64::new(
                weight.eval(domain, &amb).powf(r) * f(&amb).norm().powf(p),
                0.0,
            )
        },
        region,
        plan,
    )
}

/// Which estimate of the boundary lemma to probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UppskKind {
    /// `∫_D δ(z)^s |v(ζ,z)|^{-(N+1+s+b)} dV(z)` with `ζ` on the ladder.
    Polo1,
    /// `∫_{Z∩D} δ(ζ)^s |v(ζ,z)|^{-(n+1+s+b)} dV(ζ)` with `z ∈ Z` on the ladder.
    Polo3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UppskPoint {
    pub delta: f64,
    pub integral: Estimate,
    /// `integral · δ^b`.
    pub ratio: f64,
    pub ratio_stderr: f64,
}

/// Evaluates the boundary-lemma integral along a ladder. Polo1 needs a ladder
/// in the full domain, Polo3 one on a slice. Unit-ball regions use Koranyi
/// shells around the ladder point; other domains are sampled uniformly.
pub fn uppsk_ratio(
    s: f64,
    b: f64,
    kind: UppskKind,
    ladder: &BoundarySequence,
    plan: &QuadraturePlan,
) -> Result<Vec<UppskPoint>, QuadratureError> {
    check_weight(s)?;
    if !(b > 0.0) {
        return Err(QuadratureError::Invalid(format!(
            "b = {b} must be positive"
        )));
    }
    let region = ladder.region();
    match (kind, &region) {
        (UppskKind::Polo1, Region::FullDomain(_)) | (UppskKind::Polo3, Region::Slice(..)) => {}
        _ => {
            return Err(QuadratureError::Invalid(
                "ladder region does not match the integral kind".into(),
            ))
        }
    }
    let domain = ladder.domain;
    let exponent = region.dim() as f64 + 1.0 + s + b;
    let mut out = Vec::with_capacity(ladder.ladder.len());
    for (pt, &delta) in ladder.points().iter().zip(&ladder.ladder) {
        let fixed = region.ambient(pt);
        let mut local = plan.clone();
        if region.is_coordinate_ball() {
            local.stratification = Stratification::KoranyiShells(pt.clone());
        } else if delta < 0.01 {
            return Err(QuadratureError::Invalid(format!(
                "δ = {delta} needs Koranyi shells, which are only available on unit-ball regions"
            )));
        }
        let est = mc_integrate_with(
            |x| {
                let amb = region.ambient(x);
                let dv = domain.delta(&amb).unwrap_or(0.0);
                let v = domain.v().eval(&amb, &fixed).norm();
                C64::new(dv.powf(s) / v.powf(exponent), 0.0)
            },
            &region,
            &local,
        )?;
        let scale = delta.powf(b);
        out.push(UppskPoint {
            delta,
            integral: est,
            ratio: est.value.re * scale,
            ratio_stderr: est.stderr * scale,
        });
    }
    Ok(out)
}
