//! Assembly of the extension integrand: the weight `g^α`, Hefer forms, and the
//! collapse of the residue current onto `Z`.

use std::f64::consts::PI;

use crate::domain::{monomial_hefer, Domain};
use crate::error::{AlgebraError, DomainError, ExtensionError};
use crate::form::ExtForm;
use crate::jet::{BiJet, JetLayout, JetVar, C64};
use crate::multi_index::{binomial, MultiIndex};
use crate::poly::{JetEnv, Polynomial};
use crate::variety::VarietySpec;

fn two_pi_i() -> C64 {
    C64::new(0.0, 2.0 * PI)
}

/// Weight parameters for a fixed evaluation point `z`.
#[derive(Clone, Debug)]
pub struct WeightContext<'a> {
    domain: &'a Domain,
    alpha: f64,
    z: Vec<C64>,
}

impl<'a> WeightContext<'a> {
    pub fn new(domain: &'a Domain, alpha: f64, z: &[C64]) -> Result<Self, ExtensionError> {
        if !(alpha > 0.0) {
            return Err(ExtensionError::Unsupported(format!(
                "weight exponent α = {alpha} must be positive"
            )));
        }
        if z.len() != domain.dim() {
            return Err(AlgebraError::DimensionMismatch {
                left: domain.dim(),
                right: z.len(),
            }
            .into());
        }
        domain.delta(z)?;
        Ok(WeightContext {
            domain,
            alpha,
            z: z.to_vec(),
        })
    }

    pub fn domain(&self) -> &'a Domain {
        self.domain
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn z(&self) -> &[C64] {
        &self.z
    }

    /// Functional-calculus exponent `γ = −α − 1`.
    fn gamma(&self) -> f64 {
        -self.alpha - 1.0
    }
}

/// Jets of the polynomial data of the domain at one sample point.
struct PointJets {
    rho: BiJet,
    v: BiJet,
    q: Vec<BiJet>,
    dbar_rho: Vec<BiJet>,
    dbar_q: Vec<Vec<BiJet>>,
}

fn point_jets(domain: &Domain, env: &JetEnv) -> PointJets {
    let k = domain.kernel_polynomials();
    PointJets {
        rho: k.rho.eval_jet(env),
        v: k.v.eval_jet(env),
        q: k.q.iter().map(|p| p.eval_jet(env)).collect(),
        dbar_rho: k.dbar_rho.iter().map(|p| p.eval_jet(env)).collect(),
        dbar_q: k
            .dbar_q
            .iter()
            .map(|row| row.iter().map(|p| p.eval_jet(env)).collect())
            .collect(),
    }
}

/// `s₀ = v/(−ρ)` and `s₊ = ∂̄(q/ρ)`.
fn weight_parts(dim: usize, jets: &PointJets) -> Result<(BiJet, ExtForm), AlgebraError> {
    let inv_rho = jets.rho.recip()?;
    let inv_rho2 = &inv_rho * &inv_rho;
    let s0 = -&(&jets.v * &inv_rho);
    let mut splus = ExtForm::zero(dim, inv_rho.layout());
    for k in 0..dim {
        for j in 0..dim {
            // ∂(q_j/ρ)/∂ζ̄_k dζ̄_k ∧ dζ_j = −(…) dζ_j ∧ dζ̄_k
            let d =
                &(&jets.dbar_q[k][j] * &inv_rho) - &(&(&jets.q[j] * &jets.dbar_rho[k]) * &inv_rho2);
            if !d.is_zero() {
                splus.add_scaled(&ExtForm::basis(dim, 1 << j, 1 << k, d), C64::new(-1.0, 0.0));
            }
        }
    }
    Ok((s0, splus))
}

/// `binom(γ, k) s₀^{γ−k} s₊^k`.
fn weight_component(
    gamma: f64,
    k: u32,
    s0: &BiJet,
    splus: &ExtForm,
) -> Result<ExtForm, AlgebraError> {
    let scalar = s0
        .pow_real(gamma - f64::from(k))?
        .scale_real(binomial(gamma, k));
    Ok(splus.wedge_pow(k).scale_jet(&scalar))
}

/// `g^α = Σ_k binom(γ, k) s₀^{γ−k} s₊^k` at a point `ζ` (no jets). On `∂D` the
/// weight vanishes and the zero form is returned.
pub fn weight_galpha(ctx: &WeightContext, zeta: &[C64]) -> Result<ExtForm, ExtensionError> {
    let domain = ctx.domain;
    let dim = domain.dim();
    let layout = JetLayout::scalar();
    let r = domain.rho().eval(zeta);
    if r > 0.0 {
        return Err(DomainError::OutsideDomain {
            point: zeta.to_vec(),
            rho: r,
        }
        .into());
    }
    if r == 0.0 {
        return Ok(ExtForm::zero(dim, layout));
    }
    let base: Vec<C64> = zeta
        .iter()
        .copied()
        .chain(zeta.iter().map(|x| x.conj()))
        .chain(ctx.z.iter().copied())
        .collect();
    let env = JetEnv::new(
        layout,
        &base,
        &vec![None; 3 * dim],
        &domain.kernel_polynomials().max_exponents,
    );
    let jets = point_jets(domain, &env);
    let (s0, splus) = weight_parts(dim, &jets)?;
    let mut g = ExtForm::zero(dim, layout);
    for k in 0..=dim as u32 {
        g.add_scaled(
            &weight_component(ctx.gamma(), k, &s0, &splus)?,
            C64::new(1.0, 0.0),
        );
    }
    Ok(g)
}

/// `H = h_1 ∧ … ∧ h_κ` with `h_j = (1/2πi) Σ_k τ_j^{M_j−k} τ_{z,j}^k dτ_j`,
/// where `τ_j` is the ambient coordinate `normal[j]`.
pub fn hefer_monomial_ci(
    dim: usize,
    normal: &[usize],
    m: &MultiIndex,
    zeta_tau: &[BiJet],
    z_tau: &[BiJet],
) -> Result<ExtForm, AlgebraError> {
    let layout = zeta_tau
        .first()
        .map_or_else(JetLayout::scalar, BiJet::layout);
    let one = BiJet::constant(layout, C64::new(1.0, 0.0));
    let mut h = ExtForm::scalar(dim, one.clone());
    for (i, &j) in normal.iter().enumerate() {
        let mj = m.get(i);
        let mut coeff = BiJet::zero(layout);
        let mut zpow = one.clone();
        for k in 0..=mj {
            let mut t = zpow.clone();
            for _ in 0..mj - k {
                t = t.checked_mul(&zeta_tau[i])?;
            }
            coeff = &coeff + &t;
            zpow = zpow.checked_mul(&z_tau[i])?;
        }
        let hj = ExtForm::dzeta(dim, j, coeff.scale(two_pi_i().inv()));
        h = h.wedge(&hj)?;
    }
    Ok(h)
}

/// `h_j(ζ, z)` polynomials in `(ζ, ζ̄, z)` with `2πi Σ (ζ_j − z_j) h_j = f(ζ) − f(z)`.
fn hypersurface_h(f: &Polynomial) -> Vec<Polynomial> {
    let n = f.nvars();
    let map: Vec<usize> = (0..n).chain(2 * n..3 * n).collect();
    let mut h = vec![Polynomial::zero(3 * n); n];
    for (alpha, c) in f.terms() {
        for (j, p) in monomial_hefer(alpha).into_iter().enumerate() {
            h[j] = h[j].add(&p.embed(3 * n, &map).scale(c / two_pi_i()));
        }
    }
    h
}

/// `H = Σ_{k≤M} f(ζ)^{M−k} f(z)^k h` in the ambient coordinates, evaluated at a point pair.
pub fn hefer_hypersurface(f: &Polynomial, order: u32, zeta: &[C64], z: &[C64]) -> ExtForm {
    let n = f.nvars();
    let layout = JetLayout::scalar();
    let x: Vec<C64> = zeta
        .iter()
        .copied()
        .chain(zeta.iter().map(|w| w.conj()))
        .chain(z.iter().copied())
        .collect();
    let fz = f.eval(zeta);
    let fw = f.eval(z);
    let sum: C64 = (0..=order).map(|k| fz.powu(order - k) * fw.powu(k)).sum();
    let mut out = ExtForm::zero(n, layout);
    for (j, p) in hypersurface_h(f).iter().enumerate() {
        out.add_scaled(
            &ExtForm::dzeta(n, j, BiJet::constant(layout, p.eval(&x))),
            sum,
        );
    }
    out
}

/// Collapse of `HR ∧ g ψ` onto `Z`: the `τ^M` coefficient of the top-degree
/// coefficient of `(dτ̄_1 ∧ h_1) ∧ … ∧ (dτ̄_κ ∧ h_κ) ∧ g ψ`, times the measure and
/// residue normalization. Returns `∂_{τ_z}^m` of the result for each `m` in `param_orders`.
pub fn residue_collapse(
    spec: &VarietySpec,
    h: &ExtForm,
    g: &ExtForm,
    psi_jet: &BiJet,
    param_orders: &[MultiIndex],
) -> Result<Vec<C64>, AlgebraError> {
    let dim = spec.dim();
    let kappa = spec.kappa();
    let layout = g.layout();
    let mask: u16 = spec.normal().iter().map(|&j| 1u16 << j).sum();
    let sign = if (kappa * kappa.saturating_sub(1) / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    };
    let dtbar = ExtForm::basis(dim, 0, mask, BiJet::constant(layout, C64::new(sign, 0.0)));
    let top = dtbar.wedge(h)?.wedge(g)?.top_coefficient();
    let norm = normalization(dim, kappa);
    let m = spec.m();
    let zero_a = MultiIndex::zeros(layout.anti_bound().len());
    let mut out = Vec::with_capacity(param_orders.len());
    for p in param_orders {
        let mut total = C64::new(0.0, 0.0);
        for mm in m.below() {
            let rest = m.checked_sub(&mm).expect("mm ≤ M");
            total += top.coeff(&rest, &zero_a, p)
                * psi_jet.coeff(
                    &mm,
                    &MultiIndex::zeros(psi_jet.layout().anti_bound().len()),
                    &MultiIndex::zeros(0),
                );
        }
        out.push(total * norm * p.factorial());
    }
    Ok(out)
}

/// `(−2i)^N π^κ`: Lebesgue measure against `Π dζ_j ∧ dζ̄_j` and the residue pairing.
fn normalization(dim: usize, kappa: usize) -> C64 {
    C64::new(0.0, -2.0).powu(dim as u32) * PI.powi(kappa as i32)
}

struct HypersurfaceKernel {
    h: Vec<Polynomial>,
    f_zeta: Polynomial,
    f_z: Polynomial,
    slope_inv: C64,
    graph_grad: Vec<Polynomial>,
    max_exponents: Vec<u32>,
}

/// The collapsed integrand `ζ' ↦ density` on `Z ∩ D` for a fixed `z`, or the
/// full-domain integrand when no variety is given.
pub struct CollapsedIntegrand<'a> {
    ctx: WeightContext<'a>,
    spec: Option<&'a VarietySpec>,
    layout: &'static JetLayout,
    psi_layout: &'static JetLayout,
    param_orders: Vec<MultiIndex>,
    pairing: Vec<Vec<(usize, usize)>>,
    hyper: Option<HypersurfaceKernel>,
    max_exponents: Vec<u32>,
}

impl<'a> CollapsedIntegrand<'a> {
    /// `z_jet_order` attaches jets in the normal directions of `z` (requires a variety);
    /// `symmetric` truncates at `(M, M)` instead of `(M, 0)`.
    pub fn new(
        ctx: WeightContext<'a>,
        spec: Option<&'a VarietySpec>,
        z_jet_order: Option<MultiIndex>,
        symmetric: bool,
    ) -> Result<Self, ExtensionError> {
        let dim = ctx.domain.dim();
        let (m, param) = match spec {
            Some(s) => {
                if s.dim() != dim {
                    return Err(AlgebraError::DimensionMismatch {
                        left: dim,
                        right: s.dim(),
                    }
                    .into());
                }
                let p = z_jet_order.unwrap_or_else(|| MultiIndex::zeros(0));
                if !p.is_empty() && p.len() != s.kappa() {
                    return Err(ExtensionError::Unsupported(
                        "z-jet order must have one entry per normal direction".into(),
                    ));
                }
                (s.m().clone(), p)
            }
            None => {
                if z_jet_order.is_some() {
                    return Err(ExtensionError::Unsupported("z-jets need a variety".into()));
                }
                (MultiIndex::zeros(0), MultiIndex::zeros(0))
            }
        };
        let anti = if symmetric {
            m.clone()
        } else {
            MultiIndex::zeros(m.len())
        };
        let layout = JetLayout::get(&m, &anti, &param);
        let psi_layout = JetLayout::get(&m, &MultiIndex::zeros(m.len()), &MultiIndex::zeros(0));
        let param_orders = param.below();
        let zero_a = MultiIndex::zeros(m.len());
        let pairing = param_orders
            .iter()
            .map(|p| {
                m.below()
                    .into_iter()
                    .map(|mm| {
                        let rest = m.checked_sub(&mm).expect("mm ≤ M");
                        let k = layout.index_of(&rest, &zero_a, p).expect("within layout");
                        let i = psi_layout
                            .index_of(&mm, &zero_a, &MultiIndex::zeros(0))
                            .expect("within layout");
                        (k, i)
                    })
                    .collect()
            })
            .collect();
        let mut max_exponents = ctx.domain.kernel_polynomials().max_exponents.clone();
        let hyper = spec.and_then(VarietySpec::hypersurface_data).map(|hs| {
            let f = hs.f();
            let n = dim;
            let h = hypersurface_h(f);
            let f_zeta = f.embed(3 * n, &(0..n).collect::<Vec<_>>());
            let f_z = f.embed(3 * n, &(2 * n..3 * n).collect::<Vec<_>>());
            let graph_grad = (0..n).map(|k| hs.graph().derivative(k)).collect();
            let mut me = vec![0; 3 * n];
            for p in h.iter().chain([&f_zeta, &f_z]) {
                for (a, b) in me.iter_mut().zip(p.max_exponents()) {
                    *a = (*a).max(b);
                }
            }
            HypersurfaceKernel {
                h,
                f_zeta,
                f_z,
                slope_inv: hs.slope().inv(),
                graph_grad,
                max_exponents: me,
            }
        });
        if let Some(hk) = &hyper {
            for (a, &b) in max_exponents.iter_mut().zip(&hk.max_exponents) {
                *a = (*a).max(b);
            }
        }
        Ok(CollapsedIntegrand {
            ctx,
            spec,
            layout,
            psi_layout,
            param_orders,
            pairing,
            hyper,
            max_exponents,
        })
    }

    pub fn context(&self) -> &WeightContext<'a> {
        &self.ctx
    }

    /// Multi-indices `m` of the z-jet outputs, in the order returned by [`Self::collapse`].
    pub fn param_orders(&self) -> &[MultiIndex] {
        &self.param_orders
    }

    pub fn layout(&self) -> &'static JetLayout {
        self.layout
    }

    /// Dimension of the integration region (`2n` real, reported as complex `n`).
    pub fn region_dim(&self) -> usize {
        self.spec.map_or(self.ctx.domain.dim(), VarietySpec::n)
    }

    /// Ambient point over a sample `ζ'` of the integration region.
    pub fn ambient_point(&self, zeta: &[C64]) -> Vec<C64> {
        match self.spec {
            Some(s) => s.point_on_z(zeta),
            None => zeta.to_vec(),
        }
    }

    fn env(&self, zeta: &[C64]) -> JetEnv {
        let dim = self.ctx.domain.dim();
        let one = C64::new(1.0, 0.0);
        let x = self.ambient_point(zeta);
        let mut base: Vec<C64> = x
            .iter()
            .copied()
            .chain(x.iter().map(|w| w.conj()))
            .chain(self.ctx.z.iter().copied())
            .collect();
        let mut vars: Vec<Option<(JetVar, C64)>> = vec![None; 3 * dim];
        if let Some(s) = self.spec {
            let slope = self.hyper.as_ref().map_or(one, |h| h.slope_inv);
            let has_param = !self.layout.param_bound().is_empty();
            for (i, &j) in s.normal().iter().enumerate() {
                vars[j] = Some((JetVar::Hol(i), slope));
                vars[dim + j] = Some((JetVar::Anti(i), slope.conj()));
                if has_param {
                    vars[2 * dim + j] = Some((JetVar::Param(i), slope));
                }
            }
            base[2 * dim..].copy_from_slice(&self.ctx.z);
        }
        JetEnv::new(self.layout, &base, &vars, &self.max_exponents)
    }

    /// Top-degree kernel coefficient at `ζ'` as a jet in `(τ, τ̄, τ_z)`, normalization included.
    pub fn kernel_jet(&self, zeta: &[C64]) -> Result<BiJet, ExtensionError> {
        let domain = self.ctx.domain;
        let dim = domain.dim();
        let env = self.env(zeta);
        let jets = point_jets(domain, &env);
        let (s0, mut splus) = weight_parts(dim, &jets)?;
        let Some(spec) = self.spec else {
            let g = weight_component(self.ctx.gamma(), dim as u32, &s0, &splus)?;
            return Ok(g.top_coefficient().scale(normalization(dim, 0)));
        };
        let tangential_mask: u16 = spec.tangential().iter().map(|&j| 1u16 << j).sum();
        let one = BiJet::constant(self.layout, C64::new(1.0, 0.0));
        let h = match &self.hyper {
            None => {
                let tau: Vec<BiJet> = (0..spec.kappa())
                    .map(|i| BiJet::variable(self.layout, JetVar::Hol(i), C64::new(0.0, 0.0)))
                    .collect();
                let has_param = !self.layout.param_bound().is_empty();
                let tz: Vec<BiJet> = spec
                    .normal()
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| {
                        let lin: &[(JetVar, C64)] = if has_param {
                            &[(JetVar::Param(i), C64::new(1.0, 0.0))]
                        } else {
                            &[]
                        };
                        BiJet::affine(self.layout, self.ctx.z[j], lin)
                    })
                    .collect();
                hefer_monomial_ci(dim, spec.normal(), spec.m(), &tau, &tz)?
            }
            Some(hk) => {
                let j0 = spec.normal()[0];
                let x = spec.point_on_z(zeta);
                let mut hol_images = Vec::with_capacity(dim);
                let mut anti_images = Vec::with_capacity(dim);
                for j in 0..dim {
                    if j == j0 {
                        let mut img = ExtForm::dzeta(dim, j0, one.scale(hk.slope_inv));
                        let mut aimg = ExtForm::dzeta_bar(dim, j0, one.scale(hk.slope_inv.conj()));
                        for &k in spec.tangential() {
                            let dg = hk.graph_grad[k].eval(&x) * hk.slope_inv;
                            img.add_scaled(
                                &ExtForm::dzeta(dim, k, one.scale(-dg)),
                                C64::new(1.0, 0.0),
                            );
                            aimg.add_scaled(
                                &ExtForm::dzeta_bar(dim, k, one.scale(-dg.conj())),
                                C64::new(1.0, 0.0),
                            );
                        }
                        hol_images.push(img);
                        anti_images.push(aimg);
                    } else {
                        hol_images.push(ExtForm::dzeta(dim, j, one.clone()));
                        anti_images.push(ExtForm::dzeta_bar(dim, j, one.clone()));
                    }
                }
                splus = splus.pullback(&hol_images, &anti_images)?;
                let fz = hk.f_zeta.eval_jet(&env);
                let fw = hk.f_z.eval_jet(&env);
                let order = spec.m().get(0);
                let mut sum = BiJet::zero(self.layout);
                for k in 0..=order {
                    let mut t = one.clone();
                    for _ in 0..order - k {
                        t = &t * &fz;
                    }
                    for _ in 0..k {
                        t = &t * &fw;
                    }
                    sum = &sum + &t;
                }
                let mut h = ExtForm::zero(dim, self.layout);
                for (j, p) in hk.h.iter().enumerate() {
                    h.add_scaled(
                        &ExtForm::dzeta(dim, j, &p.eval_jet(&env) * &sum),
                        C64::new(1.0, 0.0),
                    );
                }
                h.pullback(&hol_images, &anti_images)?
            }
        };
        let keep_hol = if self.hyper.is_some() {
            u16::MAX
        } else {
            tangential_mask
        };
        let splus = restrict(&splus, keep_hol, tangential_mask);
        let g = weight_component(self.ctx.gamma(), spec.n() as u32, &s0, &splus)?;
        let mask: u16 = spec.normal().iter().map(|&j| 1u16 << j).sum();
        let kappa = spec.kappa();
        let sign = if (kappa * kappa.saturating_sub(1) / 2) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        let dtbar = ExtForm::basis(
            dim,
            0,
            mask,
            BiJet::constant(self.layout, C64::new(sign, 0.0)),
        );
        let top = dtbar.wedge(&h)?.wedge(&g)?.top_coefficient();
        Ok(top.scale(normalization(dim, kappa)))
    }

    /// τ-jet of `ψ` at the point of `Z` over `ζ'` (in the straightened coordinate in hypersurface mode).
    pub fn psi_jet(&self, psi: &Polynomial, zeta: &[C64]) -> BiJet {
        let x = self.ambient_point(zeta);
        let mut vars: Vec<Option<(JetVar, C64)>> = vec![None; x.len()];
        if let Some(s) = self.spec {
            let slope = self
                .hyper
                .as_ref()
                .map_or(C64::new(1.0, 0.0), |h| h.slope_inv);
            for (i, &j) in s.normal().iter().enumerate() {
                vars[j] = Some((JetVar::Hol(i), slope));
            }
        }
        let env = JetEnv::new(self.psi_layout, &x, &vars, &psi.max_exponents());
        psi.eval_jet(&env)
    }

    /// `∂_{τ_z}^m` of the density for each `m` in [`Self::param_orders`].
    pub fn collapse(&self, kernel: &BiJet, psi_jet: &BiJet) -> Vec<C64> {
        self.pairing
            .iter()
            .zip(&self.param_orders)
            .map(|(pairs, p)| {
                let s: C64 = pairs
                    .iter()
                    .map(|&(k, i)| kernel.coeff_at(k) * psi_jet.coeff_at(i))
                    .sum();
                s * p.factorial()
            })
            .collect()
    }

    /// Density values for several representatives at once, laid out as
    /// `[ψ_0 orders…, ψ_1 orders…, …]`.
    pub fn densities(
        &self,
        psis: &[Polynomial],
        zeta: &[C64],
        out: &mut [C64],
    ) -> Result<(), ExtensionError> {
        let kernel = self.kernel_jet(zeta)?;
        let stride = self.param_orders.len();
        for (i, psi) in psis.iter().enumerate() {
            let values = self.collapse(&kernel, &self.psi_jet(psi, zeta));
            out[i * stride..(i + 1) * stride].copy_from_slice(&values);
        }
        Ok(())
    }
}

fn restrict(form: &ExtForm, hol: u16, anti: u16) -> ExtForm {
    let mut out = ExtForm::zero(form.dim(), form.layout());
    for t in form.terms() {
        if t.hol & !hol == 0 && t.anti & !anti == 0 {
            out.add_scaled(
                &ExtForm::basis(form.dim(), t.hol, t.anti, t.coeff.clone()),
                C64::new(1.0, 0.0),
            );
        }
    }
    out
}
