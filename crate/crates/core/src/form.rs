//! Exterior algebra over `{dζ_j, dζ̄_j}` with jet coefficients.
//!
//! Basis elements are stored as a pair of bitmasks `(I, J)` and stand for
//! `dζ_I ∧ dζ̄_J` with both index sets increasing and every holomorphic
//! differential to the left of every anti-holomorphic one.

use crate::error::AlgebraError;
use crate::jet::{BiJet, JetLayout, C64};

pub const MAX_DIM: usize = 16;

#[derive(Clone, Debug)]
pub struct FormTerm {
    pub hol: u16,
    pub anti: u16,
    pub coeff: BiJet,
}

impl FormTerm {
    pub fn degree(&self) -> u32 {
        self.hol.count_ones() + self.anti.count_ones()
    }
}

#[derive(Clone, Debug)]
pub struct ExtForm {
    dim: usize,
    layout: &'static JetLayout,
    terms: Vec<FormTerm>,
}

/// (−1)^{#{(i∈a, j∈b): i > j}}: sign of merging two increasing index lists.
fn shuffle_sign(a: u16, b: u16) -> i32 {
    let mut inversions = 0;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        // elements of a strictly greater than j
        inversions += (a >> (j + 1)).count_ones();
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

impl ExtForm {
    pub fn zero(dim: usize, layout: &'static JetLayout) -> Self {
        assert!(dim <= MAX_DIM, "ambient dimension too large");
        ExtForm {
            dim,
            layout,
            terms: Vec::new(),
        }
    }

    pub fn scalar(dim: usize, coeff: BiJet) -> Self {
        ExtForm::basis(dim, 0, 0, coeff)
    }

    /// `coeff · dζ_I ∧ dζ̄_J` for index masks `I`, `J`.
    pub fn basis(dim: usize, hol: u16, anti: u16, coeff: BiJet) -> Self {
        let mut f = ExtForm::zero(dim, coeff.layout());
        assert!(
            u32::from(hol | anti) < (1u32 << dim),
            "differential index out of range"
        );
        f.terms.push(FormTerm { hol, anti, coeff });
        f
    }

    /// `coeff · dζ_j`
    pub fn dzeta(dim: usize, j: usize, coeff: BiJet) -> Self {
        ExtForm::basis(dim, 1 << j, 0, coeff)
    }

    /// `coeff · dζ̄_j`
    pub fn dzeta_bar(dim: usize, j: usize, coeff: BiJet) -> Self {
        ExtForm::basis(dim, 0, 1 << j, coeff)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layout(&self) -> &'static JetLayout {
        self.layout
    }

    pub fn terms(&self) -> &[FormTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.is_zero())
    }

    /// Degrees present among the terms, as (holomorphic, anti-holomorphic) pairs.
    pub fn bidegrees(&self) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = self
            .terms
            .iter()
            .map(|t| (t.hol.count_ones(), t.anti.count_ones()))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Total degree if the form is homogeneous.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut degs = self.terms.iter().map(FormTerm::degree);
        let first = degs.next().unwrap_or(0);
        degs.all(|d| d == first).then_some(first)
    }

    fn push(&mut self, hol: u16, anti: u16, coeff: BiJet) {
        if let Some(t) = self
            .terms
            .iter_mut()
            .find(|t| t.hol == hol && t.anti == anti)
        {
            t.coeff = &t.coeff + &coeff;
        } else {
            self.terms.push(FormTerm { hol, anti, coeff });
        }
    }

    fn push_scaled(&mut self, hol: u16, anti: u16, coeff: &BiJet, c: C64) {
        if let Some(t) = self
            .terms
            .iter_mut()
            .find(|t| t.hol == hol && t.anti == anti)
        {
            t.coeff.add_assign_scaled(coeff, c);
        } else {
            self.terms.push(FormTerm {
                hol,
                anti,
                coeff: coeff.scale(c),
            });
        }
    }

    pub fn component(&self, hol: u16, anti: u16) -> Option<&BiJet> {
        self.terms
            .iter()
            .find(|t| t.hol == hol && t.anti == anti)
            .map(|t| &t.coeff)
    }

    /// Keeps only the terms of bidegree `(p, q)`.
    pub fn part(&self, p: u32, q: u32) -> ExtForm {
        ExtForm {
            dim: self.dim,
            layout: self.layout,
            terms: self
                .terms
                .iter()
                .filter(|t| t.hol.count_ones() == p && t.anti.count_ones() == q)
                .cloned()
                .collect(),
        }
    }

    pub fn add(&self, other: &ExtForm) -> Result<ExtForm, AlgebraError> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.hol, t.anti, t.coeff.clone());
        }
        Ok(out)
    }

    pub fn add_scaled(&mut self, other: &ExtForm, c: C64) {
        assert_eq!(self.dim, other.dim, "form dimension mismatch");
        for t in &other.terms {
            self.push_scaled(t.hol, t.anti, &t.coeff, c);
        }
    }

    pub fn scale(&self, c: C64) -> ExtForm {
        ExtForm {
            dim: self.dim,
            layout: self.layout,
            terms: self
                .terms
                .iter()
                .map(|t| FormTerm {
                    hol: t.hol,
                    anti: t.anti,
                    coeff: t.coeff.scale(c),
                })
                .collect(),
        }
    }

    /// Multiplies every coefficient by a function (0-form) `j`.
    pub fn scale_jet(&self, j: &BiJet) -> ExtForm {
        ExtForm {
            dim: self.dim,
            layout: self.layout,
            terms: self
                .terms
                .iter()
                .map(|t| FormTerm {
                    hol: t.hol,
                    anti: t.anti,
                    coeff: &t.coeff * j,
                })
                .collect(),
        }
    }

    fn check_compatible(&self, other: &ExtForm) -> Result<(), AlgebraError> {
        if self.dim != other.dim {
            return Err(AlgebraError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        if !std::ptr::eq(self.layout, other.layout) {
            return Err(AlgebraError::TruncationMismatch);
        }
        Ok(())
    }

    /// Graded exterior product.
    pub fn wedge(&self, other: &ExtForm) -> Result<ExtForm, AlgebraError> {
        self.check_compatible(other)?;
        let mut out = ExtForm::zero(self.dim, self.layout);
        for a in &self.terms {
            for b in &other.terms {
                if a.hol & b.hol != 0 || a.anti & b.anti != 0 {
                    continue;
                }
                // dζ_I1 dζ̄_J1 dζ_I2 dζ̄_J2: move dζ_I2 left past dζ̄_J1, then merge.
                let cross = (a.anti.count_ones() * b.hol.count_ones()) % 2;
                let mut sign = if cross == 0 { 1 } else { -1 };
                sign *= shuffle_sign(a.hol, b.hol) * shuffle_sign(a.anti, b.anti);
                let coeff = &a.coeff * &b.coeff;
                out.push_scaled(
                    a.hol | b.hol,
                    a.anti | b.anti,
                    &coeff,
                    C64::new(f64::from(sign), 0.0),
                );
            }
        }
        Ok(out)
    }

    /// k-fold wedge power (k = 0 gives the unit 0-form).
    pub fn wedge_pow(&self, k: u32) -> ExtForm {
        let mut acc = ExtForm::scalar(self.dim, BiJet::constant(self.layout, C64::new(1.0, 0.0)));
        for _ in 0..k {
            acc = acc.wedge(self).expect("compatible by construction");
        }
        acc
    }

    /// Coefficient of the full `(N, N)` term relative to `Π_j dζ_j ∧ dζ̄_j`.
    pub fn top_coefficient(&self) -> BiJet {
        let full: u16 = ((1u32 << self.dim) - 1) as u16;
        let n = self.dim as u32;
        let sign = if (n * n.saturating_sub(1) / 2) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        self.component(full, full)
            .map_or_else(|| BiJet::zero(self.layout), |c| c.scale_real(sign))
    }

    /// Interior product with `2πi Σ_j w_j ∂/∂ζ_j`.
    pub fn contract(&self, w: &[BiJet]) -> Result<ExtForm, AlgebraError> {
        if w.len() != self.dim {
            return Err(AlgebraError::DimensionMismatch {
                left: self.dim,
                right: w.len(),
            });
        }
        let two_pi_i = C64::new(0.0, 2.0 * std::f64::consts::PI);
        let mut out = ExtForm::zero(self.dim, self.layout);
        for t in &self.terms {
            let mut rest = t.hol;
            let mut position = 0;
            while rest != 0 {
                let j = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let sign = if position % 2 == 0 { 1.0 } else { -1.0 };
                let coeff = &t.coeff * &w[j];
                out.push_scaled(t.hol & !(1 << j), t.anti, &coeff, two_pi_i * sign);
                position += 1;
            }
        }
        Ok(out)
    }

    /// Pull-back under a holomorphic map: `dζ_j ↦ hol_images[j]` and
    /// `dζ̄_j ↦ anti_images[j]`, all images being 1-forms on the target.
    pub fn pullback(
        &self,
        hol_images: &[ExtForm],
        anti_images: &[ExtForm],
    ) -> Result<ExtForm, AlgebraError> {
        if hol_images.len() != self.dim || anti_images.len() != self.dim {
            return Err(AlgebraError::DimensionMismatch {
                left: self.dim,
                right: hol_images.len(),
            });
        }
        let target_dim = hol_images.first().map_or(self.dim, ExtForm::dim);
        let one = BiJet::constant(self.layout, C64::new(1.0, 0.0));
        let mut out = ExtForm::zero(target_dim, self.layout);
        for t in &self.terms {
            let mut image = ExtForm::scalar(target_dim, one.clone());
            for j in (0..self.dim).filter(|j| t.hol >> j & 1 == 1) {
                image = image.wedge(&hol_images[j])?;
            }
            for j in (0..self.dim).filter(|j| t.anti >> j & 1 == 1) {
                image = image.wedge(&anti_images[j])?;
            }
            out.add_scaled(&image.scale_jet(&t.coeff), C64::new(1.0, 0.0));
        }
        Ok(out)
    }
}

/// Wedge product with dimension and truncation checks.
pub fn wedge(f: &ExtForm, g: &ExtForm) -> Result<ExtForm, AlgebraError> {
    f.wedge(g)
}
