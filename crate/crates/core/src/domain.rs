//! Strictly pseudoconvex domains `{ρ < 0}` with polynomial Hermitian `ρ`,
//! their polarization `v`, Hefer form `q` and distance surrogate.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::DomainError;
use crate::jet::C64;
use crate::multi_index::MultiIndex;
use crate::poly::{Polynomial, TermRow};
use crate::sampling::{Halton, RealBox};

/// `ρ(ζ) = Σ c_{αβ} ζ^α ζ̄^β`, stored as a polynomial in `(ζ, ζ̄)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianPolynomial {
    dim: usize,
    poly: Polynomial,
}

/// One `(α, β, re, im)` row of a defining function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoRow {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

fn split(e: &MultiIndex, dim: usize) -> (MultiIndex, MultiIndex) {
    let (a, b) = e.entries().split_at(dim);
    (MultiIndex::new(a.to_vec()), MultiIndex::new(b.to_vec()))
}

fn join(a: &MultiIndex, b: &MultiIndex) -> MultiIndex {
    MultiIndex::new([a.entries(), b.entries()].concat())
}

impl HermitianPolynomial {
    pub fn new(
        dim: usize,
        terms: impl IntoIterator<Item = (MultiIndex, MultiIndex, C64)>,
    ) -> Result<Self, DomainError> {
        let mut joined = Vec::new();
        for (a, b, c) in terms {
            if a.len() != dim || b.len() != dim {
                return Err(DomainError::InvalidDefiningFunction(format!(
                    "monomial ({a}, {b}) does not have {dim} variables"
                )));
            }
            joined.push((join(&a, &b), c));
        }
        let poly = Polynomial::from_terms(2 * dim, joined);
        if poly.is_zero() {
            return Err(DomainError::InvalidDefiningFunction(
                "defining function is zero".into(),
            ));
        }
        let scale = poly
            .terms()
            .iter()
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max);
        for (e, c) in poly.terms() {
            let (a, b) = split(e, dim);
            let mirror = poly.coeff(&join(&b, &a));
            if (mirror - c.conj()).norm() > 1e-12 * scale {
                return Err(DomainError::InvalidDefiningFunction(format!(
                    "coefficients of ({a}, {b}) and ({b}, {a}) are not conjugate"
                )));
            }
        }
        Ok(HermitianPolynomial { dim, poly })
    }

    pub fn from_rows(dim: usize, rows: &[RhoRow]) -> Result<Self, DomainError> {
        HermitianPolynomial::new(
            dim,
            rows.iter().map(|r| {
                (
                    MultiIndex::new(r.alpha.clone()),
                    MultiIndex::new(r.beta.clone()),
                    C64::new(r.re, r.im),
                )
            }),
        )
    }

    /// `|ζ|² − 1`.
    pub fn unit_ball(dim: usize) -> Self {
        let mut terms = vec![(
            MultiIndex::zeros(dim),
            MultiIndex::zeros(dim),
            C64::new(-1.0, 0.0),
        )];
        for j in 0..dim {
            terms.push((
                MultiIndex::unit(dim, j),
                MultiIndex::unit(dim, j),
                C64::new(1.0, 0.0),
            ));
        }
        HermitianPolynomial::new(dim, terms).expect("unit ball is Hermitian")
    }

    /// `Σ_i |ψ_i(ζ)|² − 1` for a holomorphic polynomial map `ψ`.
    pub fn from_pullback(dim: usize, components: &[Polynomial]) -> Result<Self, DomainError> {
        let mut terms = vec![(
            MultiIndex::zeros(dim),
            MultiIndex::zeros(dim),
            C64::new(-1.0, 0.0),
        )];
        for psi in components {
            if psi.nvars() != dim {
                return Err(DomainError::InvalidDefiningFunction(format!(
                    "pullback component has {} variables, expected {dim}",
                    psi.nvars()
                )));
            }
            for (a, ca) in psi.terms() {
                for (b, cb) in psi.terms() {
                    terms.push((a.clone(), b.clone(), ca * cb.conj()));
                }
            }
        }
        HermitianPolynomial::new(dim, terms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Terms as `(α, β, c_{αβ})`.
    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, MultiIndex, C64)> + '_ {
        self.poly.terms().iter().map(|(e, c)| {
            let (a, b) = split(e, self.dim);
            (a, b, *c)
        })
    }

    /// The polynomial in the variables `(ζ, ζ̄)`.
    pub fn as_polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn is_unit_ball(&self) -> bool {
        *self == HermitianPolynomial::unit_ball(self.dim)
    }

    fn doubled(&self, zeta: &[C64]) -> Vec<C64> {
        assert_eq!(zeta.len(), self.dim, "point has wrong dimension");
        zeta.iter()
            .copied()
            .chain(zeta.iter().map(|z| z.conj()))
            .collect()
    }

    pub fn eval(&self, zeta: &[C64]) -> f64 {
        self.poly.eval(&self.doubled(zeta)).re
    }

    /// `(∂ρ/∂ζ̄_j)_j`.
    pub fn dbar(&self, zeta: &[C64]) -> Vec<C64> {
        let x = self.doubled(zeta);
        (0..self.dim)
            .map(|j| self.poly.derivative(self.dim + j).eval(&x))
            .collect()
    }

    /// Euclidean norm of the real gradient, `2 |∂ρ/∂ζ̄|`.
    pub fn real_gradient_norm(&self, zeta: &[C64]) -> f64 {
        2.0 * self
            .dbar(zeta)
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Complex Hessian `∂²ρ/∂ζ_j∂ζ̄_k`.
    pub fn levi_matrix(&self, zeta: &[C64]) -> DMatrix<C64> {
        let x = self.doubled(zeta);
        DMatrix::from_fn(self.dim, self.dim, |j, k| {
            self.poly.derivative(j).derivative(self.dim + k).eval(&x)
        })
    }

    pub fn min_levi_eigenvalue(&self, zeta: &[C64]) -> f64 {
        let l = self.levi_matrix(zeta);
        let h = (&l + l.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// `v(ζ, z) = −Σ c_{αβ} z^α ζ̄^β`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarizedSupport {
    dim: usize,
    coeffs: Vec<(MultiIndex, MultiIndex, C64)>,
}

impl PolarizedSupport {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Table of `(α, β, c_{αβ})`; `α` are the `z` exponents and `β` the `ζ̄` exponents.
    pub fn coeffs(&self) -> &[(MultiIndex, MultiIndex, C64)] {
        &self.coeffs
    }

    pub fn eval(&self, zeta: &[C64], z: &[C64]) -> C64 {
        let mut total = C64::new(0.0, 0.0);
        for (a, b, c) in &self.coeffs {
            let mut t = -c;
            for j in 0..self.dim {
                t *= z[j].powu(a.get(j)) * zeta[j].conj().powu(b.get(j));
            }
            total += t;
        }
        total
    }

    /// The polynomial in `(ζ, ζ̄, z)`.
    pub fn polynomial(&self) -> Polynomial {
        let n = self.dim;
        let terms = self.coeffs.iter().map(|(a, b, c)| {
            let mut e = vec![0; 3 * n];
            e[n..2 * n].copy_from_slice(b.entries());
            e[2 * n..].copy_from_slice(a.entries());
            (MultiIndex::new(e), -c)
        });
        Polynomial::from_terms(3 * n, terms)
    }
}

pub fn polarize(rho: &HermitianPolynomial) -> PolarizedSupport {
    PolarizedSupport {
        dim: rho.dim,
        coeffs: rho.terms().collect(),
    }
}

/// Polynomials `p_j(ζ, z)` in the variables `(ζ, z)` with
/// `Σ_j (ζ_j − z_j) p_j = ζ^α − z^α`.
pub fn monomial_hefer(alpha: &MultiIndex) -> Vec<Polynomial> {
    let n = alpha.len();
    let one = C64::new(1.0, 0.0);
    (0..n)
        .map(|j| {
            let aj = alpha.get(j);
            let terms = (0..aj).map(|k| {
                let mut e = vec![0; 2 * n];
                for i in 0..j {
                    e[n + i] = alpha.get(i);
                }
                e[j] = aj - 1 - k;
                e[n + j] = k;
                for i in j + 1..n {
                    e[i] = alpha.get(i);
                }
                (MultiIndex::new(e), one)
            });
            Polynomial::from_terms(2 * n, terms)
        })
        .collect()
}

/// `q = Σ q_j dζ_j` with `δ_{ζ−z} q = v + ρ(ζ)`; components are polynomials
/// in `(ζ, ζ̄, z)` with the factor `1/(2πi)` included.
#[derive(Clone, Debug, PartialEq)]
pub struct HeferOneForm {
    dim: usize,
    q: Vec<Polynomial>,
}

impl HeferOneForm {
    pub fn components(&self) -> &[Polynomial] {
        &self.q
    }

    fn point(zeta: &[C64], z: &[C64]) -> Vec<C64> {
        zeta.iter()
            .copied()
            .chain(zeta.iter().map(|x| x.conj()))
            .chain(z.iter().copied())
            .collect()
    }

    pub fn eval(&self, zeta: &[C64], z: &[C64]) -> Vec<C64> {
        let x = HeferOneForm::point(zeta, z);
        self.q.iter().map(|p| p.eval(&x)).collect()
    }

    /// `δ_{ζ−z} q = 2πi Σ (ζ_j − z_j) q_j`.
    pub fn contract(&self, zeta: &[C64], z: &[C64]) -> C64 {
        let two_pi_i = C64::new(0.0, 2.0 * PI);
        self.eval(zeta, z)
            .iter()
            .enumerate()
            .map(|(j, qj)| two_pi_i * (zeta[j] - z[j]) * qj)
            .sum()
    }
}

fn build_hefer(rho: &HermitianPolynomial) -> HeferOneForm {
    let n = rho.dim;
    let scale = C64::new(0.0, 2.0 * PI).inv();
    let mut q = vec![Polynomial::zero(3 * n); n];
    for (a, b, c) in rho.terms() {
        let zbar_b = {
            let mut e = vec![0; 3 * n];
            e[n..2 * n].copy_from_slice(b.entries());
            Polynomial::monomial(MultiIndex::new(e), c * scale)
        };
        let map: Vec<usize> = (0..n).chain(2 * n..3 * n).collect();
        for (j, p) in monomial_hefer(&a).into_iter().enumerate() {
            q[j] = q[j].add(&zbar_b.mul(&p.embed(3 * n, &map)));
        }
    }
    HeferOneForm { dim: n, q }
}

/// Polynomials in `(ζ, ζ̄, z)` needed to assemble the weight at a sample point.
#[derive(Clone, Debug)]
pub struct KernelPolynomials {
    pub rho: Polynomial,
    pub v: Polynomial,
    pub q: Vec<Polynomial>,
    /// `∂ρ/∂ζ̄_k`
    pub dbar_rho: Vec<Polynomial>,
    /// `dbar_q[k][j] = ∂q_j/∂ζ̄_k`
    pub dbar_q: Vec<Vec<Polynomial>>,
    pub max_exponents: Vec<u32>,
}

impl KernelPolynomials {
    fn build(rho: &HermitianPolynomial, v: &PolarizedSupport, q: &HeferOneForm) -> Self {
        let n = rho.dim;
        let map: Vec<usize> = (0..2 * n).collect();
        let rho3 = rho.poly.embed(3 * n, &map);
        let v3 = v.polynomial();
        let dbar_rho: Vec<Polynomial> = (0..n).map(|k| rho3.derivative(n + k)).collect();
        let dbar_q: Vec<Vec<Polynomial>> = (0..n)
            .map(|k| q.q.iter().map(|qj| qj.derivative(n + k)).collect())
            .collect();
        let mut max_exponents = vec![0; 3 * n];
        let all = [&rho3, &v3].into_iter().chain(&q.q);
        for p in all {
            for (m, e) in max_exponents.iter_mut().zip(p.max_exponents()) {
                *m = (*m).max(e);
            }
        }
        KernelPolynomials {
            rho: rho3,
            v: v3,
            q: q.q.clone(),
            dbar_rho,
            dbar_q,
            max_exponents,
        }
    }
}

/// A validated strictly pseudoconvex domain.
#[derive(Clone, Debug)]
pub struct Domain {
    rho: HermitianPolynomial,
    v: PolarizedSupport,
    q: HeferOneForm,
    levi_floor: f64,
    mos2_constant: f64,
    bbox: RealBox,
    unit_ball: bool,
    kernel: KernelPolynomials,
}

fn to_point(x: &[f64]) -> Vec<C64> {
    x.chunks(2).map(|p| C64::new(p[0], p[1])).collect()
}

/// Interior points among Halton samples of a cube, growing the cube until some are found.
fn interior_points(
    rho: &HermitianPolynomial,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, DomainError> {
    let dim = 2 * rho.dim;
    for half in [2.0, 8.0, 32.0] {
        let cube = RealBox::cube(dim, half);
        let mut h = Halton::new(dim, seed);
        let mut x = vec![0.0; dim];
        let mut found = Vec::new();
        for _ in 0..count {
            cube.map_unit(&h.next_point(), &mut x);
            if rho.eval(&to_point(&x)) < 0.0 {
                found.push(x.clone());
            }
        }
        if !found.is_empty() {
            return Ok(found);
        }
    }
    Err(DomainError::InvalidDefiningFunction(
        "no interior points found; domain empty or too small".into(),
    ))
}

/// Largest `t ≥ 0` with `ρ(x + t·s·e_d) < 0` along the segment, by doubling then bisection.
fn exit_distance(
    rho: &HermitianPolynomial,
    x: &[f64],
    d: usize,
    s: f64,
) -> Result<f64, DomainError> {
    let at = |t: f64| {
        let mut y = x.to_vec();
        y[d] += s * t;
        rho.eval(&to_point(&y))
    };
    let mut lo = 0.0;
    let mut hi = 0.25;
    while at(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(DomainError::InvalidDefiningFunction(
                "domain appears unbounded".into(),
            ));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if at(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

fn bounding_box(rho: &HermitianPolynomial, seed: u64) -> Result<RealBox, DomainError> {
    let dim = 2 * rho.dim;
    if rho.is_unit_ball() {
        return Ok(RealBox::cube(dim, 1.0));
    }
    let seeds = interior_points(rho, 20_000, seed)?;
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    let include = |x: &[f64], lo: &mut [f64], hi: &mut [f64]| {
        for d in 0..dim {
            lo[d] = lo[d].min(x[d]);
            hi[d] = hi[d].max(x[d]);
        }
    };
    for x in seeds.iter().take(400) {
        for d in 0..dim {
            let up = exit_distance(rho, x, d, 1.0)?;
            let down = exit_distance(rho, x, d, -1.0)?;
            let mut y = x.clone();
            y[d] = x[d] + up;
            include(&y, &mut lo, &mut hi);
            y[d] = x[d] - down;
            include(&y, &mut lo, &mut hi);
        }
    }
    // Grow until no interior sample falls outside the hull estimate.
    for round in 0..10 {
        let hull = RealBox {
            lo: lo.clone(),
            hi: hi.clone(),
        };
        let probe = hull.expanded(1.5);
        let mut h = Halton::new(dim, seed.wrapping_add(1 + round));
        let mut x = vec![0.0; dim];
        let mut grew = false;
        for _ in 0..20_000 {
            probe.map_unit(&h.next_point(), &mut x);
            let outside = x.iter().zip(&lo).zip(&hi).any(|((v, a), b)| v < a || v > b);
            if outside && rho.eval(&to_point(&x)) < 0.0 {
                include(&x, &mut lo, &mut hi);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    Ok(RealBox { lo, hi }.expanded(1.2))
}

/// Validates `ρ` and samples the Levi floor and the polarization positivity constant.
pub fn validate_rho(
    rho: HermitianPolynomial,
    sample_count: usize,
    seed: u64,
) -> Result<Domain, DomainError> {
    let dim = 2 * rho.dim;
    // Levi form on the closure of the domain, before anything assumes boundedness.
    {
        let cube = RealBox::cube(dim, 2.0);
        let mut h = Halton::new(dim, seed ^ 0x5eed);
        let mut x = vec![0.0; dim];
        for _ in 0..sample_count.max(1000) {
            cube.map_unit(&h.next_point(), &mut x);
            let p = to_point(&x);
            if rho.eval(&p) <= 0.0 {
                let e = rho.min_levi_eigenvalue(&p);
                if e <= 0.0 {
                    return Err(DomainError::NotStrictlyPsh {
                        point: p,
                        eigenvalue: e,
                    });
                }
            }
        }
    }
    let bbox = bounding_box(&rho, seed)?;
    let unit_ball = rho.is_unit_ball();

    let mut pts = Vec::with_capacity(sample_count);
    let mut h = Halton::new(dim, seed);
    let mut x = vec![0.0; dim];
    let mut tries = 0usize;
    while pts.len() < sample_count && tries < 1000 * sample_count.max(1) {
        tries += 1;
        bbox.map_unit(&h.next_point(), &mut x);
        let p = to_point(&x);
        if rho.eval(&p) < 0.0 {
            pts.push(p);
        }
    }
    if pts.is_empty() {
        return Err(DomainError::InvalidDefiningFunction(
            "no interior samples".into(),
        ));
    }

    let mut levi_floor = f64::INFINITY;
    for p in &pts {
        let e = rho.min_levi_eigenvalue(p);
        if e <= 0.0 {
            return Err(DomainError::NotStrictlyPsh {
                point: p.clone(),
                eigenvalue: e,
            });
        }
        levi_floor = levi_floor.min(e);
    }

    let v = polarize(&rho);
    let mut min_ratio = f64::INFINITY;
    let half = pts.len() / 2;
    for i in 0..pts.len() {
        let zeta = &pts[i];
        let z = &pts[(i + half.max(1)) % pts.len()];
        let dist2: f64 = zeta.iter().zip(z).map(|(a, b)| (a - b).norm_sqr()).sum();
        if dist2 < 1e-12 {
            continue;
        }
        let lhs = 2.0 * v.eval(zeta, z).re + rho.eval(z) + rho.eval(zeta);
        min_ratio = min_ratio.min(lhs / dist2);
    }
    if !(min_ratio > 0.0) {
        return Err(DomainError::PolarizationPositivityFailure {
            constant: min_ratio,
        });
    }

    let q = build_hefer(&rho);
    let kernel = KernelPolynomials::build(&rho, &v, &q);
    Ok(Domain {
        rho,
        v,
        q,
        levi_floor,
        mos2_constant: 0.5 * min_ratio,
        bbox,
        unit_ball,
        kernel,
    })
}

pub fn hefer_q(domain: &Domain) -> &HeferOneForm {
    &domain.q
}

pub fn delta(domain: &Domain, z: &[C64]) -> Result<f64, DomainError> {
    domain.delta(z)
}

impl Domain {
    pub fn unit_ball(dim: usize) -> Domain {
        validate_rho(HermitianPolynomial::unit_ball(dim), 1000, 0).expect("the unit ball is valid")
    }

    pub fn dim(&self) -> usize {
        self.rho.dim
    }

    pub fn rho(&self) -> &HermitianPolynomial {
        &self.rho
    }

    pub fn v(&self) -> &PolarizedSupport {
        &self.v
    }

    pub fn q(&self) -> &HeferOneForm {
        &self.q
    }

    pub fn levi_floor(&self) -> f64 {
        self.levi_floor
    }

    pub fn mos2_constant(&self) -> f64 {
        self.mos2_constant
    }

    pub fn bounding_box(&self) -> &RealBox {
        &self.bbox
    }

    pub fn is_unit_ball(&self) -> bool {
        self.unit_ball
    }

    pub fn kernel_polynomials(&self) -> &KernelPolynomials {
        &self.kernel
    }

    pub fn contains(&self, z: &[C64]) -> bool {
        self.rho.eval(z) < 0.0
    }

    /// Distance to the boundary: exact for the unit ball, `−ρ/|∇ρ|` otherwise.
    pub fn delta(&self, z: &[C64]) -> Result<f64, DomainError> {
        let r = self.rho.eval(z);
        if !(r < 0.0) {
            return Err(DomainError::OutsideDomain {
                point: z.to_vec(),
                rho: r,
            });
        }
        if self.unit_ball {
            let norm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            return Ok(1.0 - norm);
        }
        Ok(-r / self.rho.real_gradient_norm(z))
    }

    /// `(2 Re v + ρ(z) + ρ(ζ)) − c|ζ − z|²`, non-negative when the stored constant holds.
    pub fn mos2_margin(&self, zeta: &[C64], z: &[C64]) -> f64 {
        let dist2: f64 = zeta.iter().zip(z).map(|(a, b)| (a - b).norm_sqr()).sum();
        2.0 * self.v.eval(zeta, z).re + self.rho.eval(z) + self.rho.eval(zeta)
            - self.mos2_constant * dist2
    }
}

/// Domain specification file: either `rho` rows or pullback `component`s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainFile {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rho: Vec<RhoRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub component: Vec<PullbackComponent>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullbackComponent {
    pub terms: Vec<TermRow>,
}

impl DomainFile {
    pub fn parse(text: &str) -> Result<Self, DomainError> {
        toml::from_str(text).map_err(|e| DomainError::File(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, DomainError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DomainError::File(format!("{}: {e}", path.display())))?;
        DomainFile::parse(&text)
    }

    pub fn defining_function(&self) -> Result<HermitianPolynomial, DomainError> {
        let n = self.dimension;
        if n == 0 {
            return Err(DomainError::File("dimension must be positive".into()));
        }
        match (
            self.kind.as_deref(),
            self.rho.is_empty(),
            self.component.is_empty(),
        ) {
            (Some("unit-ball"), true, true) => Ok(HermitianPolynomial::unit_ball(n)),
            (None, false, true) => HermitianPolynomial::from_rows(n, &self.rho),
            (None, true, false) => {
                let comps = self
                    .component
                    .iter()
                    .map(|c| Polynomial::from_rows(n, &c.terms))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(DomainError::File)?;
                HermitianPolynomial::from_pullback(n, &comps)
            }
            _ => Err(DomainError::File(
                "give exactly one of kind = \"unit-ball\", [[rho]] rows or [[component]] maps"
                    .into(),
            )),
        }
    }
}
