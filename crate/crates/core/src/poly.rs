//! Sparse multivariate polynomials with complex coefficients.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::jet::{BiJet, JetLayout, JetVar, C64};
use crate::multi_index::MultiIndex;

/// Polynomial `Σ c_e x^e` in a fixed number of variables. Terms are kept
/// sorted by exponent with zero coefficients removed.
#[derive(Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: Vec<(MultiIndex, C64)>,
}

/// One `(exponent, re, im)` row as it appears in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRow {
    pub exponent: Vec<u32>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: Vec::new(),
        }
    }

    pub fn constant(nvars: usize, c: C64) -> Self {
        Polynomial::monomial(MultiIndex::zeros(nvars), c)
    }

    pub fn variable(nvars: usize, j: usize) -> Self {
        Polynomial::monomial(MultiIndex::unit(nvars, j), C64::new(1.0, 0.0))
    }

    pub fn monomial(exponent: MultiIndex, c: C64) -> Self {
        Polynomial::from_terms(exponent.len(), [(exponent, c)])
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (MultiIndex, C64)>) -> Self {
        let mut map: BTreeMap<MultiIndex, C64> = BTreeMap::new();
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "monomial has wrong number of variables");
            *map.entry(e).or_insert(C64::new(0.0, 0.0)) += c;
        }
        Polynomial {
            nvars,
            terms: map.into_iter().filter(|(_, c)| c.norm() != 0.0).collect(),
        }
    }

    pub fn from_rows(nvars: usize, rows: &[TermRow]) -> Result<Self, String> {
        let mut terms = Vec::with_capacity(rows.len());
        for row in rows {
            if row.exponent.len() != nvars {
                return Err(format!(
                    "exponent {:?} has {} entries, expected {nvars}",
                    row.exponent,
                    row.exponent.len()
                ));
            }
            terms.push((
                MultiIndex::new(row.exponent.clone()),
                C64::new(row.re, row.im),
            ));
        }
        Ok(Polynomial::from_terms(nvars, terms))
    }

    pub fn to_rows(&self) -> Vec<TermRow> {
        self.terms
            .iter()
            .map(|(e, c)| TermRow {
                exponent: e.entries().to_vec(),
                re: c.re,
                im: c.im,
            })
            .collect()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(MultiIndex, C64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `x^e`.
    pub fn coeff(&self, e: &MultiIndex) -> C64 {
        self.terms
            .binary_search_by(|(t, _)| t.cmp(e))
            .map_or(C64::new(0.0, 0.0), |i| self.terms[i].1)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.order()).max().unwrap_or(0)
    }

    /// Largest exponent of each variable.
    pub fn max_exponents(&self) -> Vec<u32> {
        let mut out = vec![0; self.nvars];
        for (e, _) in &self.terms {
            for (o, &x) in out.iter_mut().zip(e.entries()) {
                *o = (*o).max(x);
            }
        }
        out
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(
            self.nvars, other.nvars,
            "polynomial variable count mismatch"
        );
        Polynomial::from_terms(self.nvars, self.terms.iter().chain(&other.terms).cloned())
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Polynomial {
        Polynomial::from_terms(
            self.nvars,
            self.terms.iter().map(|(e, x)| (e.clone(), x * c)),
        )
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(
            self.nvars, other.nvars,
            "polynomial variable count mismatch"
        );
        let terms = self.terms.iter().flat_map(|(e1, c1)| {
            other
                .terms
                .iter()
                .map(move |(e2, c2)| (e1.add(e2), c1 * c2))
        });
        Polynomial::from_terms(self.nvars, terms)
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        (0..k).fold(
            Polynomial::constant(self.nvars, C64::new(1.0, 0.0)),
            |acc, _| acc.mul(self),
        )
    }

    /// `∂/∂x_j`.
    pub fn derivative(&self, j: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e.get(j) > 0)
            .map(|(e, c)| {
                let k = e.get(j);
                (e.with(j, k - 1), c * f64::from(k))
            });
        Polynomial::from_terms(self.nvars, terms)
    }

    /// Higher partial derivative `∂^a`.
    pub fn derivative_multi(&self, a: &MultiIndex) -> Polynomial {
        let mut p = self.clone();
        for (j, &k) in a.entries().iter().enumerate() {
            for _ in 0..k {
                p = p.derivative(j);
            }
        }
        p
    }

    /// Re-indexes the variables: variable `j` of `self` becomes variable
    /// `map[j]` of a polynomial in `nvars` variables.
    pub fn embed(&self, nvars: usize, map: &[usize]) -> Polynomial {
        assert_eq!(map.len(), self.nvars, "variable map has wrong length");
        let terms = self.terms.iter().map(|(e, c)| {
            let mut out = vec![0; nvars];
            for (&x, &t) in e.entries().iter().zip(map) {
                out[t] += x;
            }
            (MultiIndex::new(out), *c)
        });
        Polynomial::from_terms(nvars, terms)
    }

    /// Substitutes polynomials (all in the same variables) for each variable.
    pub fn compose(&self, images: &[Polynomial]) -> Polynomial {
        assert_eq!(
            images.len(),
            self.nvars,
            "composition needs one image per variable"
        );
        let target = images.first().map_or(0, Polynomial::nvars);
        let max = self.max_exponents();
        let powers: Vec<Vec<Polynomial>> = images
            .iter()
            .zip(&max)
            .map(|(p, &m)| {
                let mut v = vec![Polynomial::constant(target, C64::new(1.0, 0.0))];
                for k in 1..=m as usize {
                    let next = v[k - 1].mul(p);
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Polynomial::zero(target);
        for (e, c) in &self.terms {
            let mut t = Polynomial::constant(target, *c);
            for (j, &k) in e.entries().iter().enumerate() {
                if k > 0 {
                    t = t.mul(&powers[j][k as usize]);
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Sets variables to constants; `values[j] = None` keeps variable `j`.
    pub fn partial_eval(&self, values: &[Option<C64>]) -> Polynomial {
        assert_eq!(values.len(), self.nvars, "one value slot per variable");
        let terms = self.terms.iter().map(|(e, c)| {
            let mut coeff = *c;
            let mut exp = e.clone();
            for (j, v) in values.iter().enumerate() {
                if let Some(x) = v {
                    coeff *= x.powu(e.get(j));
                    exp = exp.with(j, 0);
                }
            }
            (exp, coeff)
        });
        Polynomial::from_terms(self.nvars, terms)
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        assert_eq!(x.len(), self.nvars, "point has wrong dimension");
        let mut total = C64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut t = *c;
            for (xi, &k) in x.iter().zip(e.entries()) {
                if k > 0 {
                    t *= xi.powu(k);
                }
            }
            total += t;
        }
        total
    }

    /// Evaluates with every variable replaced by its jet from `env`.
    pub fn eval_jet(&self, env: &JetEnv) -> BiJet {
        assert_eq!(
            env.base.len(),
            self.nvars,
            "jet environment has wrong dimension"
        );
        let mut out = BiJet::zero(env.layout);
        for (e, c) in &self.terms {
            let mut scalar = *c;
            let mut jet: Option<BiJet> = None;
            for (j, &k) in e.entries().iter().enumerate() {
                if k == 0 {
                    continue;
                }
                match &env.jet_powers[j] {
                    None => scalar *= env.scalar_power(j, k),
                    Some(powers) => {
                        let p = &powers[k as usize - 1];
                        jet = Some(match jet {
                            None => p.clone(),
                            Some(acc) => &acc * p,
                        });
                    }
                }
            }
            match jet {
                None => {
                    out.add_assign_scaled(&BiJet::constant(env.layout, C64::new(1.0, 0.0)), scalar)
                }
                Some(j) => out.add_assign_scaled(&j, scalar),
            }
        }
        out
    }
}

/// Point at which polynomials are expanded into jets: each variable is a base
/// value plus, optionally, a multiple of one jet direction.
pub struct JetEnv {
    layout: &'static JetLayout,
    base: Vec<C64>,
    jet_powers: Vec<Option<Vec<BiJet>>>,
    scalar_powers: Vec<Vec<C64>>,
}

impl JetEnv {
    /// `max_exponents[j]` bounds the powers of variable `j` that will be requested.
    pub fn new(
        layout: &'static JetLayout,
        base: &[C64],
        vars: &[Option<(JetVar, C64)>],
        max_exponents: &[u32],
    ) -> Self {
        assert_eq!(base.len(), vars.len());
        assert_eq!(base.len(), max_exponents.len());
        let one = C64::new(1.0, 0.0);
        let mut jet_powers = Vec::with_capacity(base.len());
        let mut scalar_powers = Vec::with_capacity(base.len());
        for ((&b, var), &m) in base.iter().zip(vars).zip(max_exponents) {
            match var {
                Some((v, slope)) => {
                    let x = BiJet::affine(layout, b, &[(*v, *slope)]);
                    let mut powers = Vec::with_capacity(m as usize);
                    if m > 0 {
                        powers.push(x.clone());
                    }
                    for k in 1..m as usize {
                        let next = &powers[k - 1] * &x;
                        powers.push(next);
                    }
                    jet_powers.push(Some(powers));
                    scalar_powers.push(Vec::new());
                }
                None => {
                    let mut powers = vec![one];
                    for k in 1..=m as usize {
                        let next = powers[k - 1] * b;
                        powers.push(next);
                    }
                    jet_powers.push(None);
                    scalar_powers.push(powers);
                }
            }
        }
        JetEnv {
            layout,
            base: base.to_vec(),
            jet_powers,
            scalar_powers,
        }
    }

    fn scalar_power(&self, j: usize, k: u32) -> C64 {
        self.scalar_powers[j]
            .get(k as usize)
            .copied()
            .unwrap_or_else(|| self.base[j].powu(k))
    }

    pub fn layout(&self) -> &'static JetLayout {
        self.layout
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.4}{:+.4}i)x^{}", c.re, c.im, e)?;
        }
        Ok(())
    }
}
