//! Truncated multivariate Taylor jets in the normal coordinates.
//!
//! A [`BiJet`] is a polynomial in three groups of variables: holomorphic
//! normal coordinates `τ`, their conjugates `τ̄`, and optional parameter
//! directions (normal coordinates of the evaluation point `z`). Each variable
//! carries its own truncation bound; products discard any monomial exceeding
//! a bound. Storage is dense over an interned [`JetLayout`], which also holds
//! the precomputed product table, so multiplication is a single pass over
//! index triples.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use smallvec::SmallVec;

use crate::error::AlgebraError;
use crate::multi_index::{binomial, MultiIndex};

pub type C64 = Complex64;

/// One jet variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JetVar {
    /// Holomorphic normal coordinate `τ_j`.
    Hol(usize),
    /// Anti-holomorphic normal coordinate `τ̄_j`.
    Anti(usize),
    /// Parameter direction (normal coordinate of `z`).
    Param(usize),
}

/// Truncation bounds and multiplication table shared by all jets of one shape.
pub struct JetLayout {
    hol: MultiIndex,
    anti: MultiIndex,
    param: MultiIndex,
    radix: Vec<u32>,
    strides: Vec<usize>,
    size: usize,
    products: Vec<(u16, u16, u16)>,
    max_degree: u32,
}

type LayoutKey = (MultiIndex, MultiIndex, MultiIndex);

fn registry() -> &'static Mutex<HashMap<LayoutKey, &'static JetLayout>> {
    static REGISTRY: OnceLock<Mutex<HashMap<LayoutKey, &'static JetLayout>>> = OnceLock::new();
    REGISTRY.get_or_init(|| Mutex::new(HashMap::new()))
}

impl JetLayout {
    /// Interned layout with the given bounds for `τ`, `τ̄` and parameter variables.
    pub fn get(hol: &MultiIndex, anti: &MultiIndex, param: &MultiIndex) -> &'static JetLayout {
        let key = (hol.clone(), anti.clone(), param.clone());
        let mut reg = registry().lock().expect("jet layout registry poisoned");
        if let Some(layout) = reg.get(&key) {
            return layout;
        }
        let layout: &'static JetLayout = Box::leak(Box::new(JetLayout::build(hol, anti, param)));
        reg.insert(key, layout);
        layout
    }

    /// The one-coefficient layout with no variables.
    pub fn scalar() -> &'static JetLayout {
        static SCALAR: OnceLock<&'static JetLayout> = OnceLock::new();
        SCALAR.get_or_init(|| {
            JetLayout::get(
                &MultiIndex::zeros(0),
                &MultiIndex::zeros(0),
                &MultiIndex::zeros(0),
            )
        })
    }

    /// Layout truncated at `(bound, bound)` in `(τ, τ̄)` with no parameter directions.
    pub fn symmetric(bound: &MultiIndex) -> &'static JetLayout {
        JetLayout::get(bound, bound, &MultiIndex::zeros(0))
    }

    fn build(hol: &MultiIndex, anti: &MultiIndex, param: &MultiIndex) -> JetLayout {
        let radix: Vec<u32> = hol
            .entries()
            .iter()
            .chain(anti.entries())
            .chain(param.entries())
            .map(|b| b + 1)
            .collect();
        let mut strides = vec![1usize; radix.len()];
        for v in (0..radix.len().saturating_sub(1)).rev() {
            strides[v] = strides[v + 1] * radix[v + 1] as usize;
        }
        let size: usize = radix.iter().map(|&r| r as usize).product();
        assert!(size <= u16::MAX as usize, "jet layout too large");
        let decode = |mut idx: usize| -> Vec<u32> {
            strides
                .iter()
                .map(|&s| {
                    let e = idx / s;
                    idx %= s;
                    e as u32
                })
                .collect()
        };
        let exps: Vec<Vec<u32>> = (0..size).map(decode).collect();
        let mut products = Vec::new();
        for (i, ei) in exps.iter().enumerate() {
            for (j, ej) in exps.iter().enumerate() {
                let fits = ei.iter().zip(ej).zip(&radix).all(|((a, b), r)| a + b < *r);
                if fits {
                    let k: usize = ei
                        .iter()
                        .zip(ej)
                        .zip(&strides)
                        .map(|((a, b), s)| (a + b) as usize * s)
                        .sum();
                    products.push((i as u16, j as u16, k as u16));
                }
            }
        }
        let max_degree = radix.iter().map(|r| r - 1).sum();
        JetLayout {
            hol: hol.clone(),
            anti: anti.clone(),
            param: param.clone(),
            radix,
            strides,
            size,
            products,
            max_degree,
        }
    }

    pub fn hol_bound(&self) -> &MultiIndex {
        &self.hol
    }

    pub fn anti_bound(&self) -> &MultiIndex {
        &self.anti
    }

    pub fn param_bound(&self) -> &MultiIndex {
        &self.param
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn var_slot(&self, var: JetVar) -> usize {
        match var {
            JetVar::Hol(j) => {
                assert!(j < self.hol.len(), "holomorphic jet variable out of range");
                j
            }
            JetVar::Anti(j) => {
                assert!(
                    j < self.anti.len(),
                    "anti-holomorphic jet variable out of range"
                );
                self.hol.len() + j
            }
            JetVar::Param(j) => {
                assert!(j < self.param.len(), "parameter jet variable out of range");
                self.hol.len() + self.anti.len() + j
            }
        }
    }

    /// Dense index of the monomial `τ^hol τ̄^anti p^param`, or `None` if truncated away.
    pub fn index_of(
        &self,
        hol: &MultiIndex,
        anti: &MultiIndex,
        param: &MultiIndex,
    ) -> Option<usize> {
        if hol.len() != self.hol.len()
            || anti.len() != self.anti.len()
            || param.len() != self.param.len()
        {
            return None;
        }
        let exps = hol
            .entries()
            .iter()
            .chain(anti.entries())
            .chain(param.entries());
        let mut idx = 0;
        for ((&e, &r), &s) in exps.zip(&self.radix).zip(&self.strides) {
            if e >= r {
                return None;
            }
            idx += e as usize * s;
        }
        Some(idx)
    }

    /// Splits a dense index back into (τ, τ̄, parameter) exponents.
    pub fn exponents_of(&self, mut idx: usize) -> (MultiIndex, MultiIndex, MultiIndex) {
        let all: Vec<u32> = self
            .strides
            .iter()
            .map(|&s| {
                let e = idx / s;
                idx %= s;
                e as u32
            })
            .collect();
        let (h, rest) = all.split_at(self.hol.len());
        let (a, p) = rest.split_at(self.anti.len());
        (
            MultiIndex::new(h.to_vec()),
            MultiIndex::new(a.to_vec()),
            MultiIndex::new(p.to_vec()),
        )
    }
}

impl fmt::Debug for JetLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "JetLayout(τ≤{}, τ̄≤{}, p≤{})",
            self.hol, self.anti, self.param
        )
    }
}

/// Truncated Taylor expansion in `(τ, τ̄, p)` with complex coefficients.
#[derive(Clone)]
pub struct BiJet {
    layout: &'static JetLayout,
    coeffs: SmallVec<[C64; 16]>,
}

impl BiJet {
    pub fn zero(layout: &'static JetLayout) -> Self {
        BiJet {
            layout,
            coeffs: SmallVec::from_elem(C64::new(0.0, 0.0), layout.size),
        }
    }

    pub fn constant(layout: &'static JetLayout, c: C64) -> Self {
        let mut j = BiJet::zero(layout);
        j.coeffs[0] = c;
        j
    }

    /// `base + var`.
    pub fn variable(layout: &'static JetLayout, var: JetVar, base: C64) -> Self {
        BiJet::affine(layout, base, &[(var, C64::new(1.0, 0.0))])
    }

    /// `base + Σ slope·var`.
    pub fn affine(layout: &'static JetLayout, base: C64, linear: &[(JetVar, C64)]) -> Self {
        let mut j = BiJet::constant(layout, base);
        for &(var, slope) in linear {
            let slot = layout.var_slot(var);
            if layout.radix[slot] > 1 {
                j.coeffs[layout.strides[slot]] += slope;
            }
        }
        j
    }

    /// Builds a jet from (τ exponents, τ̄ exponents, value) triples without parameter part.
    pub fn from_terms(layout: &'static JetLayout, terms: &[(MultiIndex, MultiIndex, C64)]) -> Self {
        let param = MultiIndex::zeros(layout.param.len());
        let mut j = BiJet::zero(layout);
        for (h, a, c) in terms {
            if let Some(idx) = layout.index_of(h, a, &param) {
                j.coeffs[idx] += *c;
            }
        }
        j
    }

    pub fn layout(&self) -> &'static JetLayout {
        self.layout
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn constant_term(&self) -> C64 {
        self.coeffs[0]
    }

    /// Coefficient of `τ^hol τ̄^anti p^param`; zero beyond truncation.
    pub fn coeff(&self, hol: &MultiIndex, anti: &MultiIndex, param: &MultiIndex) -> C64 {
        self.layout
            .index_of(hol, anti, param)
            .map_or(C64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    /// Coefficient at a raw dense index.
    pub fn coeff_at(&self, idx: usize) -> C64 {
        self.coeffs[idx]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn same_layout(&self, other: &BiJet) -> bool {
        std::ptr::eq(self.layout, other.layout)
    }

    pub fn checked_mul(&self, other: &BiJet) -> Result<BiJet, AlgebraError> {
        if !self.same_layout(other) {
            return Err(AlgebraError::TruncationMismatch);
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &BiJet) -> BiJet {
        if self.layout.size == 1 {
            return BiJet::constant(self.layout, self.coeffs[0] * other.coeffs[0]);
        }
        let mut out = BiJet::zero(self.layout);
        let a = &self.coeffs;
        let b = &other.coeffs;
        for &(i, j, k) in &self.layout.products {
            out.coeffs[k as usize] += a[i as usize] * b[j as usize];
        }
        out
    }

    pub fn scale(&self, c: C64) -> BiJet {
        BiJet {
            layout: self.layout,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> BiJet {
        BiJet {
            layout: self.layout,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add_assign_scaled(&mut self, other: &BiJet, c: C64) {
        assert!(self.same_layout(other), "jet truncation mismatch");
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * c;
        }
    }

    pub fn conj_coeffs(&self) -> BiJet {
        BiJet {
            layout: self.layout,
            coeffs: self.coeffs.iter().map(|x| x.conj()).collect(),
        }
    }

    /// Truncated expansion of `self^beta` about the constant term (principal branch).
    pub fn pow_real(&self, beta: f64) -> Result<BiJet, AlgebraError> {
        let a0 = self.coeffs[0];
        let integral = beta.fract() == 0.0;
        if a0.norm() == 0.0 || (!integral && a0.re <= 0.0) {
            return Err(AlgebraError::SingularPower {
                constant: a0,
                exponent: beta,
            });
        }
        let lead = if integral && beta.abs() < 64.0 {
            a0.powi(beta as i32)
        } else {
            a0.powf(beta)
        };
        if self.layout.size == 1 {
            return Ok(BiJet::constant(self.layout, lead));
        }
        let mut u = self.scale(a0.inv());
        u.coeffs[0] = C64::new(0.0, 0.0);
        let degree = self.layout.max_degree;
        let mut acc = BiJet::constant(self.layout, C64::new(binomial(beta, degree), 0.0));
        for k in (0..degree).rev() {
            acc = acc.mul_unchecked(&u);
            acc.coeffs[0] += binomial(beta, k);
        }
        Ok(acc.scale(lead))
    }

    pub fn recip(&self) -> Result<BiJet, AlgebraError> {
        self.pow_real(-1.0)
    }

    /// `∂^{|m|}/∂τ^m` at `τ = τ̄ = 0` (parameter part at its base point).
    pub fn tau_derivative_at_zero(&self, m: &MultiIndex) -> Result<C64, AlgebraError> {
        if !m.le(&self.layout.hol) {
            return Err(AlgebraError::InsufficientJetOrder {
                requested: m.clone(),
                available: self.layout.hol.clone(),
            });
        }
        let zero_a = MultiIndex::zeros(self.layout.anti.len());
        let zero_p = MultiIndex::zeros(self.layout.param.len());
        Ok(self.coeff(m, &zero_a, &zero_p) * m.factorial())
    }

    /// Re-expresses the jet in another layout with the same variable counts,
    /// dropping terms the target truncates and zero-filling new ones.
    pub fn relayout(&self, target: &'static JetLayout) -> BiJet {
        if std::ptr::eq(self.layout, target) {
            return self.clone();
        }
        assert_eq!(
            self.layout.radix.len(),
            target.radix.len(),
            "jet variable count mismatch"
        );
        let mut out = BiJet::zero(target);
        for (idx, c) in self.coeffs.iter().enumerate() {
            let (h, a, p) = self.layout.exponents_of(idx);
            if let Some(t) = target.index_of(&h, &a, &p) {
                out.coeffs[t] = *c;
            }
        }
        out
    }

    /// Evaluates the truncated polynomial at concrete variable values.
    pub fn evaluate(&self, tau: &[C64], tau_bar: &[C64], param: &[C64]) -> C64 {
        let mut total = C64::new(0.0, 0.0);
        for (idx, c) in self.coeffs.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let (h, a, p) = self.layout.exponents_of(idx);
            let mut term = *c;
            for (x, e) in tau.iter().zip(h.entries()) {
                term *= x.powu(*e);
            }
            for (x, e) in tau_bar.iter().zip(a.entries()) {
                term *= x.powu(*e);
            }
            for (x, e) in param.iter().zip(p.entries()) {
                term *= x.powu(*e);
            }
            total += term;
        }
        total
    }
}

/// Coefficientwise Cauchy product truncated to the shared bounds.
pub fn jet_mul(a: &BiJet, b: &BiJet) -> Result<BiJet, AlgebraError> {
    a.checked_mul(b)
}

pub fn jet_pow_real(a: &BiJet, beta: f64) -> Result<BiJet, AlgebraError> {
    a.pow_real(beta)
}

pub fn tau_derivative_at_zero(j: &BiJet, m: &MultiIndex) -> Result<C64, AlgebraError> {
    j.tau_derivative_at_zero(m)
}

impl fmt::Debug for BiJet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_map();
        for (idx, c) in self.coeffs.iter().enumerate() {
            if c.norm() != 0.0 {
                let (h, a, p) = self.layout.exponents_of(idx);
                s.entry(&format_args!("{h}{a}{p}"), c);
            }
        }
        s.finish()
    }
}

impl Mul for &BiJet {
    type Output = BiJet;

    fn mul(self, rhs: &BiJet) -> BiJet {
        assert!(self.same_layout(rhs), "jet truncation mismatch");
        self.mul_unchecked(rhs)
    }
}

impl Add for &BiJet {
    type Output = BiJet;

    fn add(self, rhs: &BiJet) -> BiJet {
        assert!(self.same_layout(rhs), "jet truncation mismatch");
        BiJet {
            layout: self.layout,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &BiJet {
    type Output = BiJet;

    fn sub(self, rhs: &BiJet) -> BiJet {
        assert!(self.same_layout(rhs), "jet truncation mismatch");
        BiJet {
            layout: self.layout,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &BiJet {
    type Output = BiJet;

    fn neg(self) -> BiJet {
        BiJet {
            layout: self.layout,
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }
}
