//! Non-reduced structure along a coordinate subspace `Z = {τ = 0}`, Noetherian
//! generator sets and the pointwise norm `|φ|_X`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::VarietyError;
use crate::jet::{BiJet, JetLayout, JetVar, C64};
use crate::multi_index::MultiIndex;
use crate::poly::{JetEnv, Polynomial, TermRow};

/// A representative of a function on `X`: any polynomial on the ambient space.
pub type RepresentativePolynomial = Polynomial;

/// `f^{M+1}` with `f = a·τ + g(ζ')` affine in the normal coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypersurface {
    f: Polynomial,
    order: u32,
    slope: C64,
    graph: Polynomial,
}

impl Hypersurface {
    pub fn f(&self) -> &Polynomial {
        &self.f
    }

    /// `M` in `⟨f^{M+1}⟩`.
    pub fn order(&self) -> u32 {
        self.order
    }

    /// The constant `a = ∂f/∂τ`.
    pub fn slope(&self) -> C64 {
        self.slope
    }

    /// `g(ζ') = f|_{τ=0}`, a polynomial in the ambient variables not involving `τ`.
    pub fn graph(&self) -> &Polynomial {
        &self.graph
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarietySpec {
    dim: usize,
    normal: Vec<usize>,
    tangential: Vec<usize>,
    m: MultiIndex,
    gammas: Vec<Polynomial>,
    hypersurface: Option<Hypersurface>,
}

impl VarietySpec {
    /// `⟨τ^{M+1}⟩` with `τ` the coordinates listed in `normal`.
    pub fn monomial(dim: usize, normal: &[usize], m: MultiIndex) -> Result<Self, VarietyError> {
        let mut sorted = normal.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != normal.len() || sorted.iter().any(|&j| j >= dim) {
            return Err(VarietyError::Invalid(format!(
                "normal indices {normal:?} invalid for dimension {dim}"
            )));
        }
        if sorted.is_empty() {
            return Err(VarietyError::Invalid(
                "at least one normal coordinate is required".into(),
            ));
        }
        if m.len() != sorted.len() {
            return Err(VarietyError::Invalid(format!(
                "exponent vector {m} has {} entries for {} normal coordinates",
                m.len(),
                sorted.len()
            )));
        }
        let tangential = (0..dim).filter(|j| !sorted.contains(j)).collect();
        Ok(VarietySpec {
            dim,
            normal: sorted,
            tangential,
            m,
            gammas: Vec::new(),
            hypersurface: None,
        })
    }

    /// Reduced coordinate subspace (`M = 0`).
    pub fn reduced(dim: usize, normal: &[usize]) -> Result<Self, VarietyError> {
        VarietySpec::monomial(dim, normal, MultiIndex::zeros(normal.len()))
    }

    /// `⟨f^{M+1}⟩` where `f` is affine in the single normal coordinate with constant slope.
    pub fn hypersurface(
        dim: usize,
        normal: usize,
        f: Polynomial,
        order: u32,
    ) -> Result<Self, VarietyError> {
        if f.nvars() != dim {
            return Err(VarietyError::Invalid(format!(
                "f has {} variables, expected {dim}",
                f.nvars()
            )));
        }
        let mut spec = VarietySpec::monomial(dim, &[normal], MultiIndex::new(vec![order]))?;
        let mut slope = C64::new(0.0, 0.0);
        let mut graph = Vec::new();
        for (e, c) in f.terms() {
            match e.get(normal) {
                0 => graph.push((e.clone(), *c)),
                1 if e.order() == 1 => slope += c,
                _ => {
                    return Err(VarietyError::UnsupportedHypersurface(format!(
                        "term x^{e} is not affine in coordinate {normal} with constant slope"
                    )))
                }
            }
        }
        if slope.norm() == 0.0 {
            return Err(VarietyError::UnsupportedHypersurface(
                "∂f/∂τ vanishes".into(),
            ));
        }
        spec.hypersurface = Some(Hypersurface {
            graph: Polynomial::from_terms(dim, graph),
            f,
            order,
            slope,
        });
        Ok(spec)
    }

    /// Attaches a multiplier presentation `γ_1, …, γ_ρ`.
    pub fn with_gammas(mut self, gammas: Vec<Polynomial>) -> Result<Self, VarietyError> {
        if let Some(g) = gammas.iter().find(|g| g.nvars() != self.dim) {
            return Err(VarietyError::Invalid(format!(
                "γ has {} variables, expected {}",
                g.nvars(),
                self.dim
            )));
        }
        self.gammas = gammas;
        Ok(self)
    }

    /// The non-Cohen–Macaulay example in `C⁴_{z₁,z₂,w₁,w₂}` along `{w = 0}`,
    /// presented by `γ₁ = w₁w₂`, `γ₂ = z₁w₂ + z₂w₁` over `⟨w₁², w₂²⟩`.
    pub fn noncm() -> Self {
        let w1w2 = Polynomial::monomial(MultiIndex::new(vec![0, 0, 1, 1]), C64::new(1.0, 0.0));
        let mixed = Polynomial::from_terms(
            4,
            [
                (MultiIndex::new(vec![1, 0, 0, 1]), C64::new(1.0, 0.0)),
                (MultiIndex::new(vec![0, 1, 1, 0]), C64::new(1.0, 0.0)),
            ],
        );
        VarietySpec::monomial(4, &[2, 3], MultiIndex::new(vec![1, 1]))
            .and_then(|s| s.with_gammas(vec![w1w2, mixed]))
            .expect("fixed example is well formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of normal coordinates `κ`.
    pub fn kappa(&self) -> usize {
        self.normal.len()
    }

    /// `n = N − κ`.
    pub fn n(&self) -> usize {
        self.tangential.len()
    }

    pub fn normal(&self) -> &[usize] {
        &self.normal
    }

    pub fn tangential(&self) -> &[usize] {
        &self.tangential
    }

    pub fn m(&self) -> &MultiIndex {
        &self.m
    }

    pub fn gammas(&self) -> &[Polynomial] {
        &self.gammas
    }

    pub fn hypersurface_data(&self) -> Option<&Hypersurface> {
        self.hypersurface.as_ref()
    }

    pub fn is_reduced(&self) -> bool {
        self.m.is_zero()
    }

    /// Ambient point from tangential and normal coordinates.
    pub fn join(&self, zeta: &[C64], tau: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        for (&j, &x) in self.tangential.iter().zip(zeta) {
            out[j] = x;
        }
        for (&j, &x) in self.normal.iter().zip(tau) {
            out[j] = x;
        }
        out
    }

    /// Splits an ambient point into (tangential, normal) coordinates.
    pub fn split(&self, x: &[C64]) -> (Vec<C64>, Vec<C64>) {
        (
            self.tangential.iter().map(|&j| x[j]).collect(),
            self.normal.iter().map(|&j| x[j]).collect(),
        )
    }

    /// Ambient point on `Z` over `ζ'`. In hypersurface mode this is the point of
    /// `{f = 0}`, otherwise `τ = 0`.
    pub fn point_on_z(&self, zeta: &[C64]) -> Vec<C64> {
        let mut x = self.join(zeta, &vec![C64::new(0.0, 0.0); self.kappa()]);
        if let Some(h) = &self.hypersurface {
            x[self.normal[0]] = -h.graph.eval(&x) / h.slope;
        }
        x
    }

    /// Membership of `ψ` in `⟨τ^{M+1}⟩` (monomial case): every monomial has some `τ_j`-degree above `M_j`.
    pub fn in_ideal(&self, psi: &Polynomial) -> bool {
        psi.terms().iter().all(|(e, _)| {
            self.normal
                .iter()
                .zip(self.m.entries())
                .any(|(&j, &mj)| e.get(j) > mj)
        })
    }
}

/// One term `c(ζ') ∂_{ζ'}^a ∂_τ^m` of a Noetherian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorTerm {
    /// Polynomial in the tangential coordinates.
    pub coeff: Polynomial,
    pub tau_order: MultiIndex,
    pub zeta_order: MultiIndex,
}

/// `φ ↦ Σ c(ζ') ∂_{ζ'}^a ∂_τ^m (γφ)|_{τ=0}`; `gamma` indexes the variety's multipliers.
#[derive(Clone, Debug, PartialEq)]
pub struct NoetherianOperator {
    pub terms: Vec<GeneratorTerm>,
    pub gamma: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// `Σ_j |ℒ_j φ|`
    L1,
    /// `(Σ_j |ℒ_j φ|²)^{1/2}`
    L2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoetherianGeneratorSet {
    pub generators: Vec<NoetherianOperator>,
    pub aggregation: Aggregation,
}

/// `{(m, a): m ≤ M, |a| ≤ |M − m|}` with unit coefficients, `a` ranging over `n` tangential directions.
pub fn generators_monomial(m: &MultiIndex, n: usize) -> NoetherianGeneratorSet {
    let total = m.order();
    let generators = m
        .below()
        .into_iter()
        .flat_map(|mm| {
            let room = total - mm.order();
            MultiIndex::up_to_order(n, room)
                .into_iter()
                .map(move |a| NoetherianOperator {
                    terms: vec![GeneratorTerm {
                        coeff: Polynomial::constant(n, C64::new(1.0, 0.0)),
                        tau_order: mm.clone(),
                        zeta_order: a,
                    }],
                    gamma: None,
                })
        })
        .collect();
    NoetherianGeneratorSet {
        generators,
        aggregation: Aggregation::L1,
    }
}

/// The monomial set for the spec's `M`, composed with each of its multipliers.
pub fn generators_gamma(spec: &VarietySpec) -> NoetherianGeneratorSet {
    let base = generators_monomial(&spec.m, spec.n());
    let generators = (0..spec.gammas.len())
        .flat_map(|g| {
            base.generators.iter().map(move |op| NoetherianOperator {
                terms: op.terms.clone(),
                gamma: Some(g),
            })
        })
        .collect();
    NoetherianGeneratorSet {
        generators,
        aggregation: Aggregation::L1,
    }
}

/// `1, z₂∂_{z₁}, z₁∂_{z₁}, z₂∂_{z₂}, z₁∂_{z₂}, z₁∂_{w₁} + z₂∂_{w₂}` with ℓ² aggregation.
pub fn generators_noncm(spec: &VarietySpec) -> Result<NoetherianGeneratorSet, VarietyError> {
    if spec.dim != 4 {
        return Err(VarietyError::WrongAmbientShape {
            expected: 4,
            got: spec.dim,
        });
    }
    if spec.normal != [2, 3] {
        return Err(VarietyError::Invalid(
            "expected Z = {w₁ = w₂ = 0} with w the last two coordinates".into(),
        ));
    }
    let one = Polynomial::constant(2, C64::new(1.0, 0.0));
    let z1 = Polynomial::variable(2, 0);
    let z2 = Polynomial::variable(2, 1);
    let mi = |v: [u32; 2]| MultiIndex::new(v.to_vec());
    let single = |coeff: &Polynomial, m: [u32; 2], a: [u32; 2]| NoetherianOperator {
        terms: vec![GeneratorTerm {
            coeff: coeff.clone(),
            tau_order: mi(m),
            zeta_order: mi(a),
        }],
        gamma: None,
    };
    let generators = vec![
        single(&one, [0, 0], [0, 0]),
        single(&z2, [0, 0], [1, 0]),
        single(&z1, [0, 0], [1, 0]),
        single(&z2, [0, 0], [0, 1]),
        single(&z1, [0, 0], [0, 1]),
        NoetherianOperator {
            terms: vec![
                GeneratorTerm {
                    coeff: z1,
                    tau_order: mi([1, 0]),
                    zeta_order: mi([0, 0]),
                },
                GeneratorTerm {
                    coeff: z2,
                    tau_order: mi([0, 1]),
                    zeta_order: mi([0, 0]),
                },
            ],
            gamma: None,
        },
    ];
    Ok(NoetherianGeneratorSet {
        generators,
        aggregation: Aggregation::L2,
    })
}

impl NoetherianOperator {
    pub fn apply(&self, spec: &VarietySpec, psi: &Polynomial, zeta: &[C64]) -> C64 {
        let target = match self.gamma {
            Some(g) => spec.gammas[g].mul(psi),
            None => psi.clone(),
        };
        let x = spec.point_on_z(zeta);
        let mut total = C64::new(0.0, 0.0);
        for t in &self.terms {
            let mut d = vec![0; spec.dim];
            for (&j, &k) in spec.normal.iter().zip(t.tau_order.entries()) {
                d[j] += k;
            }
            for (&j, &k) in spec.tangential.iter().zip(t.zeta_order.entries()) {
                d[j] += k;
            }
            let derived = target.derivative_multi(&MultiIndex::new(d));
            total += t.coeff.eval(zeta) * derived.eval(&x);
        }
        total
    }
}

/// `|ψ|_X` at `ζ' ∈ Z` from a fixed generator set.
pub fn norm_pointwise(
    spec: &VarietySpec,
    gens: &NoetherianGeneratorSet,
    psi: &Polynomial,
    zeta: &[C64],
) -> f64 {
    let values = gens
        .generators
        .iter()
        .map(|op| op.apply(spec, psi, zeta).norm());
    match gens.aggregation {
        Aggregation::L1 => values.sum(),
        Aggregation::L2 => values.map(|x| x * x).sum::<f64>().sqrt(),
    }
}

/// `(φ₀, h)` with `ψ ≡ φ₀ + φ₁w₁ + φ₂w₂` modulo `⟨w₁², w₂², w₁w₂, w₁z₂ − w₂z₁⟩` and `h = z₁φ₁ + z₂φ₂`.
pub fn noncm_pair(psi: &Polynomial) -> Result<(Polynomial, Polynomial), VarietyError> {
    if psi.nvars() != 4 {
        return Err(VarietyError::InconsistentRepresentative(format!(
            "representative has {} variables, expected 4",
            psi.nvars()
        )));
    }
    let mut phi0 = Vec::new();
    let mut h = Vec::new();
    for (e, c) in psi.terms() {
        let z = [e.get(0), e.get(1)];
        match (e.get(2), e.get(3)) {
            (0, 0) => phi0.push((MultiIndex::new(z.to_vec()), *c)),
            (1, 0) => h.push((MultiIndex::new(vec![z[0] + 1, z[1]]), *c)),
            (0, 1) => h.push((MultiIndex::new(vec![z[0], z[1] + 1]), *c)),
            _ => {}
        }
    }
    Ok((
        Polynomial::from_terms(2, phi0),
        Polynomial::from_terms(2, h),
    ))
}

/// τ-Taylor coefficients of `ψ` at `(ζ', 0)` up to `order`.
pub fn jet_on_z(spec: &VarietySpec, psi: &Polynomial, zeta: &[C64], order: &MultiIndex) -> BiJet {
    let layout = JetLayout::get(
        order,
        &MultiIndex::zeros(order.len()),
        &MultiIndex::zeros(0),
    );
    let base = spec.join(zeta, &vec![C64::new(0.0, 0.0); spec.kappa()]);
    let mut vars = vec![None; spec.dim];
    for (i, &j) in spec.normal.iter().enumerate() {
        vars[j] = Some((JetVar::Hol(i), C64::new(1.0, 0.0)));
    }
    let env = JetEnv::new(layout, &base, &vars, &psi.max_exponents());
    psi.eval_jet(&env)
}

/// Variety specification file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarietyFile {
    pub dimension: usize,
    pub normal: Vec<usize>,
    #[serde(default, rename = "M")]
    pub m: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma: Vec<PolynomialRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypersurface: Option<HypersurfaceRows>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialRows {
    pub terms: Vec<TermRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypersurfaceRows {
    pub order: u32,
    pub terms: Vec<TermRow>,
}

impl VarietyFile {
    pub fn parse(text: &str) -> Result<Self, VarietyError> {
        toml::from_str(text).map_err(|e| VarietyError::File(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, VarietyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| VarietyError::File(format!("{}: {e}", path.display())))?;
        VarietyFile::parse(&text)
    }

    pub fn spec(&self) -> Result<VarietySpec, VarietyError> {
        let n = self.dimension;
        let spec = match &self.hypersurface {
            Some(h) => {
                if self.normal.len() != 1 {
                    return Err(VarietyError::Invalid(
                        "hypersurface mode needs exactly one normal index".into(),
                    ));
                }
                let f = Polynomial::from_rows(n, &h.terms).map_err(VarietyError::File)?;
                VarietySpec::hypersurface(n, self.normal[0], f, h.order)?
            }
            None => {
                let m = if self.m.is_empty() {
                    vec![0; self.normal.len()]
                } else {
                    self.m.clone()
                };
                VarietySpec::monomial(n, &self.normal, MultiIndex::new(m))?
            }
        };
        let gammas = self
            .gamma
            .iter()
            .map(|g| Polynomial::from_rows(n, &g.terms))
            .collect::<Result<Vec<_>, _>>()
            .map_err(VarietyError::File)?;
        spec.with_gammas(gammas)
    }
}
