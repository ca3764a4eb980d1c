//! T-operators, the c-function C₊(s), the Eisenstein integral, and the
//! intertwining scalars a(υ, s, τ).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{kappa_nbar, GroupElement};
use crate::liealg::{casimir_scalar, dual, CompSerLabel, KType, WeightLabel};
use crate::model::{
    act_sampled, evaluate, left_mtype_block, project_samples, ActConfig, Basis, Block, ModelVector,
    Pullback,
};
use crate::operator::KTypeOperator;
use crate::quadrature::{k_coord, m_quadrature, QuadratureGrid};
use crate::special::{gauss_jacobi, gauss_legendre, ln_gamma};

fn next_pow2(n: usize) -> usize {
    n.max(2).next_power_of_two()
}

/// M grid integrating products of two blocks with t1 ≤ cutoff exactly.
pub fn m_grid_for(basis: &Basis) -> Result<QuadratureGrid> {
    let lam = basis.cutoff.max(1) as usize;
    match basis.d() {
        1 => m_quadrature(1, 2),
        2 => m_quadrature(2, next_pow2(4 * lam + 2)),
        _ => m_quadrature(3, next_pow2(4 * lam + 2)),
    }
}

fn t_block(b1: &Block, b2: &Block, mgrid: &QuadratureGrid) -> DMatrix<Complex64> {
    let mut t = DMatrix::zeros(b2.dim, b1.dim);
    for (p, &w) in mgrid.nodes.iter().zip(&mgrid.weights) {
        let f1 = b1.values(&p.coord);
        let f2 = b2.values(&p.coord);
        for i in 0..b2.dim {
            let c = f2[i].conj() * w;
            for j in 0..b1.dim {
                t[(i, j)] += c * f1[j];
            }
        }
    }
    t
}

/// T_{τ₁}^{τ₂} v = ∫_M v(m) U^s(m) χ_{τ₂} dm on the τ₁ block, as a
/// dim τ₂ × dim τ₁ block: T_ij = ∫_M conj(φ_{τ₂,i}(m)) φ_{τ₁,j}(m) dm.
pub fn t_operator(
    basis: &Arc<Basis>,
    tau1: KType,
    tau2: KType,
    mgrid: &QuadratureGrid,
) -> Result<KTypeOperator> {
    let b1 = &basis.blocks[basis.block_index(tau1)?];
    let b2 = &basis.blocks[basis.block_index(tau2)?];
    let mut op = KTypeOperator::zero(basis);
    op.insert(tau1, tau2, t_block(b1, b2, mgrid))?;
    Ok(op)
}

/// T = Σ_{τ₁,τ₂} T_{τ₁}^{τ₂} over all K-types of the basis.
pub fn t_operator_full(basis: &Arc<Basis>, mgrid: &QuadratureGrid) -> Result<KTypeOperator> {
    let pairs: Vec<(usize, usize)> = (0..basis.blocks.len())
        .flat_map(|i| (0..basis.blocks.len()).map(move |j| (i, j)))
        .collect();
    let blocks: Vec<DMatrix<Complex64>> = pairs
        .par_iter()
        .map(|&(i, j)| t_block(&basis.blocks[i], &basis.blocks[j], mgrid))
        .collect();
    let mut op = KTypeOperator::zero(basis);
    for ((i, j), m) in pairs.into_iter().zip(blocks) {
        op.insert(basis.blocks[i].tau, basis.blocks[j].tau, m)?;
    }
    Ok(op)
}

/// Blockwise left projection onto the M-type σ.
pub fn left_mtype_projector(
    basis: &Arc<Basis>,
    sigma: &WeightLabel,
    mgrid: &QuadratureGrid,
) -> Result<KTypeOperator> {
    let mut op = KTypeOperator::zero(basis);
    for b in &basis.blocks {
        op.insert(b.tau, b.tau, left_mtype_block(b, sigma, mgrid))?;
    }
    Ok(op)
}

/// The left M-type υ* that T maps into.
pub fn upsilon_star(label: &CompSerLabel) -> Result<WeightLabel> {
    dual(&label.upsilon, label.d)
}

/// Normalization of the N̄ measure used by C₊.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NbarMeasure {
    /// dx on R^d.
    Lebesgue,
    /// dx / Z_d with Z_d = ∫ (1 + |x|²)^{−d} dx, so ∫ e^{−dH(n̄)} dn̄ = 1.
    Haar,
}

/// Z_d = π^{d/2} Γ(d/2) / Γ(d).
pub fn nbar_haar_constant(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    (h * PI.ln() + ln_gamma(h) - ln_gamma(d as f64)).exp()
}

/// ∫_{R^d} (1 + |x|²)^{−s} dx = π^{d/2} Γ(s − d/2) / Γ(s).
pub fn spherical_cplus_value(d: usize, s: f64) -> f64 {
    let h = d as f64 / 2.0;
    (h * PI.ln() + ln_gamma(s - h) - ln_gamma(s)).exp()
}

/// Quadrature on the unit sphere S^{d−1} with total weight its area.
/// Exact for polynomials of degree ≤ `degree`; symmetric under ω ↦ −ω.
pub fn sphere_grid(d: usize, degree: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    match d {
        1 => Ok(vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)]),
        2 => {
            let n = 2 * (degree / 2 + 1);
            Ok((0..n)
                .map(|i| {
                    let phi = 2.0 * PI * i as f64 / n as f64;
                    (vec![phi.cos(), phi.sin()], 2.0 * PI / n as f64)
                })
                .collect())
        }
        3 => {
            let gl = gauss_legendre(degree / 2 + 1);
            let n = 2 * (degree / 2 + 1);
            let mut out = Vec::with_capacity(gl.len() * n);
            for (z, wz) in gl.nodes.iter().zip(&gl.weights) {
                let rho = (1.0 - z * z).sqrt();
                for i in 0..n {
                    let phi = 2.0 * PI * i as f64 / n as f64;
                    out.push((
                        vec![rho * phi.cos(), rho * phi.sin(), *z],
                        wz * 2.0 * PI / n as f64,
                    ));
                }
            }
            Ok(out)
        }
        _ => Err(Error::Unsupported(format!("sphere grid for d = {d}"))),
    }
}

#[derive(Clone, Debug)]
pub struct CPlusConfig {
    pub measure: NbarMeasure,
    /// Gauss–Jacobi nodes in y = 1/(1 + r²); defaults to cutoff/2 + 6.
    pub radial_nodes: Option<usize>,
}

impl Default for CPlusConfig {
    fn default() -> Self {
        CPlusConfig {
            measure: NbarMeasure::Haar,
            radial_nodes: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CPlus {
    pub op: KTypeOperator,
    pub measure: NbarMeasure,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    /// Largest entry change when the radial rule gains four nodes.
    pub error_estimate: f64,
}

fn cplus_blocks(
    basis: &Basis,
    n: usize,
    angular: &[(Vec<f64>, f64)],
) -> Result<Vec<DMatrix<Complex64>>> {
    let d = basis.d();
    let s = basis.s();
    let a = d as f64 / 2.0 - 1.0;
    let b = s - d as f64 / 2.0 - 1.0;
    let rule = gauss_jacobi(n, a, b);
    let scale = 2f64.powf(-a - b - 1.0) * 0.5;
    let partials: Vec<Result<Vec<DMatrix<Complex64>>>> = rule
        .nodes
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(&xj, &wj)| {
            let y = (1.0 + xj) / 2.0;
            let r = ((1.0 - y) / y).sqrt();
            let mut acc: Vec<DMatrix<Complex64>> = basis
                .blocks
                .iter()
                .map(|bl| DMatrix::zeros(bl.dim, bl.dim))
                .collect();
            for (omega, wa) in angular {
                let x: Vec<f64> = omega.iter().map(|o| r * o).collect();
                let kc = k_coord(&kappa_nbar(&x))?;
                let w = Complex64::new(wj * wa * scale, 0.0);
                for (m, bl) in acc.iter_mut().zip(&basis.blocks) {
                    *m += bl.rep_matrix(&kc).transpose() * w;
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total: Vec<DMatrix<Complex64>> = basis
        .blocks
        .iter()
        .map(|bl| DMatrix::zeros(bl.dim, bl.dim))
        .collect();
    for part in partials {
        for (t, p) in total.iter_mut().zip(part?) {
            *t += p;
        }
    }
    Ok(total)
}

/// C₊(s) = ∫_{N̄} U^s(κ(n̄)⁻¹) e^{−sH(n̄)} dn̄ on every block of `basis`.
///
/// Polar coordinates with y = 1/(1 + r²) turn the radial integral into
/// ½ ∫₀¹ F(y) (1 − y)^{d/2−1} y^{s−d/2−1} dy, handled by Gauss–Jacobi. After
/// the (exact) angular sum F is a polynomial in y of degree ≤ cutoff.
pub fn cplus(basis: &Arc<Basis>, cfg: &CPlusConfig) -> Result<CPlus> {
    let d = basis.d();
    let s = basis.s();
    if !(s > d as f64 / 2.0) {
        return Err(Error::InvalidLabel(format!(
            "C₊ needs s > d/2, got s = {s}"
        )));
    }
    let lam = basis.cutoff.max(0) as usize;
    let n = cfg.radial_nodes.unwrap_or(lam / 2 + 6);
    let angular = sphere_grid(d, 2 * lam + 2)?;
    let coarse = cplus_blocks(basis, n, &angular)?;
    let fine = cplus_blocks(basis, n + 4, &angular)?;
    let norm = match cfg.measure {
        NbarMeasure::Lebesgue => 1.0,
        NbarMeasure::Haar => 1.0 / nbar_haar_constant(d),
    };
    let mut error_estimate = 0.0f64;
    let mut op = KTypeOperator::zero(basis);
    for ((c, f), bl) in coarse.iter().zip(fine).zip(&basis.blocks) {
        error_estimate = error_estimate.max((c - &f).camax() * norm);
        op.insert(bl.tau, bl.tau, f * Complex64::new(norm, 0.0))?;
    }
    Ok(CPlus {
        op,
        measure: cfg.measure,
        radial_nodes: n + 4,
        angular_nodes: angular.len(),
        error_estimate,
    })
}

/// Largest component outside τ of U^s(κ(n̄_x)⁻¹) e_{τ,i}, computed by the
/// sampled (quadrature) action at a few radii. Checks that the rotations
/// entering C₊ preserve K-types independently of the block formula.
pub fn cplus_leakage(basis: &Arc<Basis>, cfg: &ActConfig, radii: &[f64]) -> Result<f64> {
    let d = basis.d();
    let mut worst = 0.0f64;
    for &r in radii {
        let mut x = vec![0.0; d];
        x[0] = r * 0.8;
        if d > 1 {
            x[d - 1] = -r * 0.6;
        }
        let k_inv = kappa_nbar(&x).inverse();
        for b in &basis.blocks {
            for i in 0..b.dim {
                let v = ModelVector::basis_vector(basis, b.tau, i)?;
                let out = act_sampled(&k_inv, &v, cfg)?;
                let mut leak = out.vector.clone();
                leak.coeffs[b.offset..b.offset + b.dim].fill(Complex64::new(0.0, 0.0));
                worst = worst.max(leak.norm());
            }
        }
    }
    Ok(worst)
}

/// ‖C P_σ − P_σ C‖ over the given M-types.
pub fn mtype_commutator(
    op: &KTypeOperator,
    sigmas: &[WeightLabel],
    mgrid: &QuadratureGrid,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for sigma in sigmas {
        let p = left_mtype_projector(&op.basis, sigma, mgrid)?;
        let a = op.compose(&p)?.to_dense();
        let b = p.compose(op)?.to_dense();
        worst = worst.max((a - b).camax());
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct EisensteinReport {
    pub lhs: DMatrix<Complex64>,
    pub rhs: DMatrix<Complex64>,
    /// Spectral norm of lhs − rhs.
    pub defect: f64,
}

/// Compares P_{τ₂}U^s(g)P_{τ₁} with ∫_K e^{(s−d)H(gk)} U^s(κ(gk)) T U^s(k⁻¹) dk.
pub fn eisenstein_check(
    g: &GroupElement,
    basis: &Arc<Basis>,
    tau1: KType,
    tau2: KType,
    cfg: &ActConfig,
    mgrid: &QuadratureGrid,
) -> Result<EisensteinReport> {
    let i1 = basis.block_index(tau1)?;
    let i2 = basis.block_index(tau2)?;
    let (b1, b2) = (&basis.blocks[i1], &basis.blocks[i2]);
    let mut lhs = DMatrix::zeros(b2.dim, b1.dim);
    for j in 0..b1.dim {
        let v = ModelVector::basis_vector(basis, tau1, j)?;
        let out = act_sampled(g, &v, cfg)?;
        lhs.set_column(j, &out.vector.block_vec(i2));
    }
    let t = t_block(b1, b2, mgrid);
    let forward = Pullback::new(&g.inverse());
    let exponent = basis.s() - basis.d() as f64;
    let grid = &cfg.grid;
    let partials: Vec<Result<DMatrix<Complex64>>> = grid
        .nodes
        .par_chunks(256)
        .zip(grid.weights.par_chunks(256))
        .map(|(nodes, weights)| {
            let mut acc = DMatrix::zeros(b2.dim, b1.dim);
            for (p, &w) in nodes.iter().zip(weights) {
                let (e, kappa) = forward.at(&p.elem)?;
                let left = b2.rep_matrix(&kappa).map(|z| z.conj());
                let right = b1.rep_matrix(&p.coord).transpose();
                acc += left * &t * right * Complex64::new(w * e.powf(exponent), 0.0);
            }
            Ok(acc)
        })
        .collect();
    let mut rhs = DMatrix::zeros(b2.dim, b1.dim);
    for part in partials {
        rhs += part?;
    }
    let defect = (&lhs - &rhs).singular_values().max();
    Ok(EisensteinReport { lhs, rhs, defect })
}

/// Γ(s + t) / Γ(d − s + t) for integer t, using the reflection formula for
/// negative arguments instead of evaluating Γ there.
pub fn gamma_quotient(s: f64, d: usize, t: i64) -> Result<f64> {
    let z1 = s + t as f64;
    let z2 = d as f64 - s + t as f64;
    let is_pole = |z: f64| z <= 0.0 && (z - z.round()).abs() < 1e-12;
    if is_pole(z1) || is_pole(z2) {
        return Err(Error::InvalidGamma(format!(
            "pole at s = {s}, t = {t}, d = {d}"
        )));
    }
    match (z1 > 0.0, z2 > 0.0) {
        (true, true) => Ok((ln_gamma(z1) - ln_gamma(z2)).exp()),
        (false, false) => {
            // Γ(z) = π / (sin(πz) Γ(1 − z)); the sines differ by (−1)^{d+1}
            // since z1 + z2 − 2t = d.
            if d % 2 == 0 {
                return Err(Error::InvalidGamma(format!(
                    "negative quotient for d = {d}, s = {s}, t = {t}"
                )));
            }
            Ok((ln_gamma(1.0 - z2) - ln_gamma(1.0 - z1)).exp())
        }
        _ => Err(Error::InvalidGamma(format!(
            "mixed-sign Gamma arguments {z1}, {z2} (d = {d}, s = {s}, t = {t})"
        ))),
    }
}

/// a(υ, s, τ₂) / a(υ, s, τ₁) from the Gamma-quotient formulas.
pub fn a_ratio(label: &CompSerLabel, tau1: KType, tau2: KType) -> Result<f64> {
    let d = label.d;
    let s = label.s;
    let u = label.upsilon_first();
    if label.upsilon.entries.iter().skip(1).any(|&e| e != 0) {
        return Err(Error::InvalidLabel(
            "υ must have the form (υ, 0, …, 0)".into(),
        ));
    }
    if u != 0 && (d <= 2 || s >= d as f64 - 1.0) {
        return Err(Error::InvalidLabel(format!(
            "υ = {u} with d = {d}, s = {s} has no Gamma-quotient scalars"
        )));
    }
    let types = crate::liealg::ktypes_of_compser(label, tau1.t1.abs().max(tau2.t1.abs()))?;
    for tau in [tau1, tau2] {
        if !types.contains(&tau) {
            return Err(Error::NotContained(tau.to_string()));
        }
    }
    if tau1 == tau2 {
        return Ok(1.0);
    }
    let mut ratio = gamma_quotient(s, d, tau1.t1)? / gamma_quotient(s, d, tau2.t1)?;
    if s < d as f64 - 1.0 {
        ratio *= gamma_quotient(s, d, tau1.t2 - 1)? / gamma_quotient(s, d, tau2.t2 - 1)?;
    }
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::InvalidGamma(format!(
            "ratio {ratio} for {tau1} → {tau2}"
        )));
    }
    Ok(ratio)
}

/// Base K-type with a = 1: smallest Casimir eigenvalue, ties broken
/// lexicographically. This is (0) for d = 1, (υ) for d = 2, (υ, 0) for d = 3.
pub fn base_ktype(label: &CompSerLabel) -> Result<KType> {
    let u = label.upsilon_first().abs();
    let types = crate::liealg::ktypes_of_compser(label, u + 1)?;
    types
        .into_iter()
        .min_by(|a, b| {
            casimir_scalar(*a, label.d)
                .partial_cmp(&casimir_scalar(*b, label.d))
                .expect("finite Casimir")
                .then(a.cmp(b))
        })
        .ok_or_else(|| Error::InvalidLabel("label has no K-types".into()))
}

/// a(υ, s, τ) / a(υ, s, base) for all K-types up to a cutoff.
#[derive(Clone, Debug, Serialize)]
pub struct IntertwiningScalars {
    pub label: CompSerLabel,
    pub base: KType,
    pub table: BTreeMap<KType, f64>,
}

impl IntertwiningScalars {
    pub fn new(label: &CompSerLabel, cutoff: i64) -> Result<Self> {
        let base = base_ktype(label)?;
        let mut table = BTreeMap::new();
        for tau in crate::liealg::ktypes_of_compser(label, cutoff)? {
            table.insert(tau, a_ratio(label, base, tau)?);
        }
        Ok(IntertwiningScalars {
            label: label.clone(),
            base,
            table,
        })
    }

    pub fn get(&self, tau: KType) -> Result<f64> {
        self.table
            .get(&tau)
            .copied()
            .ok_or_else(|| Error::NotContained(format!("no scalar for {tau}")))
    }

    /// A(υ, s) v = Σ a(τ) P_τ v.
    pub fn apply(&self, v: &ModelVector) -> Result<ModelVector> {
        let mut out = v.clone();
        for (bi, b) in v.basis.blocks.iter().enumerate() {
            let c = v.block_vec(bi);
            if c.iter().any(|z| z.norm_sqr() > 0.0) {
                out.set_block(bi, &(c * Complex64::new(self.get(b.tau)?, 0.0)));
            }
        }
        Ok(out)
    }

    /// CSV with columns t1, t2, a_over_base.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t1,t2,a_over_base\n");
        for (tau, a) in &self.table {
            out.push_str(&format!("{},{},{:.16e}\n", tau.t1, tau.t2, a));
        }
        out
    }
}

/// ⟨u, v⟩_{U(υ,s)} = Σ_τ a(υ, s, τ) ⟨P_τ u, P_τ v⟩_K.
pub fn unitary_inner(
    u: &ModelVector,
    v: &ModelVector,
    scalars: &IntertwiningScalars,
) -> Result<Complex64> {
    crate::model::inner_k(u, &scalars.apply(v)?)
}

/// |⟨U(g)u, U(g)v⟩_U − ⟨u, v⟩_U| / (‖u‖_U ‖v‖_U) with U(g) re-projected to
/// the cutoff of the basis, so the defect measures truncation loss.
pub fn unitary_invariance_defect(
    g: &GroupElement,
    u: &ModelVector,
    v: &ModelVector,
    scalars: &IntertwiningScalars,
    cfg: &ActConfig,
) -> Result<f64> {
    let gu = act_sampled(g, u, cfg)?.vector;
    let gv = act_sampled(g, v, cfg)?.vector;
    let before = unitary_inner(u, v, scalars)?;
    let after = unitary_inner(&gu, &gv, scalars)?;
    let nu = unitary_inner(u, u, scalars)?.re.sqrt();
    let nv = unitary_inner(v, v, scalars)?.re.sqrt();
    Ok((after - before).norm() / (nu * nv))
}

/// Which index of (r1, r2) the first-order check raises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Raise {
    First,
    Second,
}

impl Raise {
    pub fn target(self, tau: KType) -> KType {
        match self {
            Raise::First => KType::new(tau.t1 + 1, tau.t2),
            Raise::Second => KType::new(tau.t1, tau.t2 + 1),
        }
    }

    /// s + r1 or s + r2 − 1.
    pub fn coefficient(self, s: f64, tau: KType) -> f64 {
        match self {
            Raise::First => s + tau.t1 as f64,
            Raise::Second => s + tau.t2 as f64 - 1.0,
        }
    }
}

/// exp(ε X_i) for X_i = e_i e_qᵀ + e_q e_iᵀ, i ≤ d (i = d gives a_ε).
pub fn p_direction_exp(d: usize, i: usize, eps: f64) -> GroupElement {
    let q = d + 1;
    let mut m = DMatrix::identity(d + 2, d + 2);
    m[(i, i)] = eps.cosh();
    m[(q, q)] = eps.cosh();
    m[(i, q)] = eps.sinh();
    m[(q, i)] = eps.sinh();
    GroupElement::from_matrix_unchecked(d, m)
}

#[derive(Clone, Debug, Serialize)]
pub struct FirstOrderReport {
    pub direction: usize,
    pub source: KType,
    pub target: KType,
    pub coefficient: f64,
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    pub relative_defect: f64,
}

/// P_target {⟨Ad_{k⁻¹}X_i, H⟩ v(k)}, with ⟨Ad_{k⁻¹}X_i, H⟩ = (k e_p)_i.
pub fn multiplier_projection(
    v: &ModelVector,
    i: usize,
    target: KType,
    grid: &QuadratureGrid,
) -> Result<ModelVector> {
    let basis = &v.basis;
    let p = basis.d();
    let tb = basis
        .block(target)
        .ok_or_else(|| Error::NotContained(target.to_string()))?;
    let mut only = Basis {
        label: basis.label.clone(),
        cutoff: basis.cutoff,
        blocks: vec![tb.clone()],
        dim: tb.dim,
    };
    only.blocks[0].offset = 0;
    let (coeffs, _) = project_samples(&only, grid, |k| {
        Ok(evaluate(v, &k.coord) * k.elem.mat[(i, p)])
    })?;
    let mut out = ModelVector::zeros(basis);
    out.coeffs[tb.offset..tb.offset + tb.dim].copy_from_slice(&coeffs);
    Ok(out)
}

/// Central difference of the sampled action along exp(εX_i), projected on `target`.
pub fn derivative_projection(
    v: &ModelVector,
    i: usize,
    target: KType,
    eps: f64,
    cfg: &ActConfig,
) -> Result<ModelVector> {
    let d = v.basis.d();
    let plus = act_sampled(&p_direction_exp(d, i, eps), v, cfg)?.vector;
    let minus = act_sampled(&p_direction_exp(d, i, -eps), v, cfg)?.vector;
    let diff = plus.sub(&minus)?.scale(Complex64::new(0.5 / eps, 0.0));
    crate::model::project_ktype(&diff, target)
}

/// Compares P_{τ'} dU^s(X_i) v with c · P_{τ'}{⟨Ad_{k⁻¹}X_i, H⟩ v(k)}.
pub fn first_order_action_check(
    v: &ModelVector,
    i: usize,
    raise: Raise,
    eps: f64,
    cfg: &ActConfig,
) -> Result<FirstOrderReport> {
    let support = v.support();
    if support.len() != 1 {
        return Err(Error::Degenerate("v must lie in a single K-type".into()));
    }
    let source = v.basis.blocks[support[0]].tau;
    let target = raise.target(source);
    let coefficient = raise.coefficient(v.basis.s(), source);
    let lhs = derivative_projection(v, i, target, eps, cfg)?;
    let rhs =
        multiplier_projection(v, i, target, &cfg.grid)?.scale(Complex64::new(coefficient, 0.0));
    let rhs_norm = rhs.norm();
    if rhs_norm < 1e-10 * v.norm() {
        return Err(Error::Degenerate(format!(
            "projection onto {target} vanishes for direction {i}"
        )));
    }
    Ok(FirstOrderReport {
        direction: i,
        source,
        target,
        coefficient,
        lhs_norm: lhs.norm(),
        rhs_norm,
        relative_defect: lhs.sub(&rhs)?.norm() / rhs_norm,
    })
}

/// Searches the 𝔭 directions and the basis vectors of τ for a pair with a
/// nonvanishing projection onto the raised K-type.
pub fn find_witness(
    basis: &Arc<Basis>,
    tau: KType,
    raise: Raise,
    grid: &QuadratureGrid,
) -> Result<(usize, ModelVector)> {
    let target = raise.target(tau);
    basis
        .block(target)
        .ok_or_else(|| Error::NotContained(target.to_string()))?;
    let b = basis
        .block(tau)
        .ok_or_else(|| Error::NotContained(tau.to_string()))?;
    let mut best: Option<(f64, usize, ModelVector)> = None;
    for i in (0..=basis.d()).rev() {
        for j in 0..b.dim {
            let v = ModelVector::basis_vector(basis, tau, j)?;
            let n = multiplier_projection(&v, i, target, grid)?.norm();
            if n > 1e-8 && best.as_ref().map_or(true, |(bn, _, _)| n > *bn + 1e-12) {
                best = Some((n, i, v));
            }
        }
    }
    best.map(|(_, i, v)| (i, v))
        .ok_or_else(|| Error::Degenerate(format!("no witness raising {tau} to {target}")))
}

/// ‖P dU^s(X)v‖ / ‖P dU^{d−s}(X)v‖, which should equal (s + r)/(d − s + r).
pub fn coefficient_ratio(
    v: &ModelVector,
    i: usize,
    raise: Raise,
    eps: f64,
    cfg: &ActConfig,
) -> Result<(f64, f64)> {
    let support = v.support();
    let source = v.basis.blocks[*support
        .first()
        .ok_or(Error::Degenerate("zero vector".into()))?]
    .tau;
    let target = raise.target(source);
    let s = v.basis.s();
    let d = v.basis.d() as f64;
    let dual_basis = v.basis.with_s(d - s)?;
    let v_dual = ModelVector::from_coeffs(&dual_basis, v.coeffs.clone())?;
    let a = derivative_projection(v, i, target, eps, cfg)?.norm();
    let b = derivative_projection(&v_dual, i, target, eps, cfg)?.norm();
    let expected = raise.coefficient(s, source) / raise.coefficient(d - s, source);
    Ok((a / b, expected))
}

#[derive(Clone, Debug, Serialize)]
pub struct KvReport {
    pub s: f64,
    pub d: usize,
    /// t^{d−2s} Γ(s+t)/Γ(d−s+t) at the largest grid point.
    pub normalized_at_max: f64,
    pub t_max: f64,
    /// Γ(s+t)/Γ(d−s+t) / (1 + t^{2s−d}) over the grid.
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub ratio_at_zero: Option<f64>,
    pub pass: bool,
}

/// Γ(s+t)/Γ(d−s+t) ≍ 1 + t^{2s−d}: ratios over a t grid and the limit at t_max.
pub fn kv_ratio_check(s: f64, d: usize, t_grid: &[f64]) -> Result<KvReport> {
    if !(s > d as f64 / 2.0 && s < d as f64) {
        return Err(Error::InvalidLabel(format!("s = {s} outside (d/2, d)")));
    }
    let quotient = |t: f64| (ln_gamma(s + t) - ln_gamma(d as f64 - s + t)).exp();
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = 0.0f64;
    let mut ratio_at_zero = None;
    for &t in t_grid {
        let r = quotient(t) / (1.0 + t.powf(2.0 * s - d as f64));
        if t == 0.0 {
            ratio_at_zero = Some(r);
        }
        min_ratio = min_ratio.min(r);
        max_ratio = max_ratio.max(r);
    }
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let normalized_at_max = t_max.powf(d as f64 - 2.0 * s) * quotient(t_max);
    let pass = t_max < 1e4 || (normalized_at_max - 1.0).abs() < 1e-2;
    Ok(KvReport {
        s,
        d,
        normalized_at_max,
        t_max,
        min_ratio,
        max_ratio,
        ratio_at_zero,
        pass,
    })
}

/// sup over the s grid and K-types t1 ≤ tmax of
/// a(τ₂)/a(τ₁) / ((1 + τ₁(Ω)^d)(1 + τ₂(Ω)^d)).
pub fn abdd_supremum(d: usize, upsilon: i64, s_grid: &[f64], tmax: i64) -> Result<f64> {
    let mut sup = 0.0f64;
    for &s in s_grid {
        let label = CompSerLabel::with_upsilon(d, upsilon, s)?;
        let types = crate::liealg::ktypes_of_compser(&label, tmax)?;
        for &t1 in &types {
            for &t2 in &types {
                let r = a_ratio(&label, t1, t2)?;
                let w1 = 1.0 + casimir_scalar(t1, d).powi(d as i32);
                let w2 = 1.0 + casimir_scalar(t2, d).powi(d as i32);
                sup = sup.max(r / (w1 * w2));
            }
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::make_a;
    use crate::liealg::ktype_dim;
    use crate::quadrature::k_quadrature;

    fn basis(d: usize, u: i64, s: f64, cut: i64) -> Arc<Basis> {
        Basis::new(&CompSerLabel::with_upsilon(d, u, s).unwrap(), cut).unwrap()
    }

    #[test]
    fn t_on_diagonal_is_scaled_projection() {
        let b = basis(2, 0, 1.5, 2);
        let mg = m_grid_for(&b).unwrap();
        let t = t_operator(&b, KType::new(1, 0), KType::new(1, 0), &mg).unwrap();
        let m = t.block(KType::new(1, 0), KType::new(1, 0)).unwrap();
        let mut expect = DMatrix::<Complex64>::zeros(3, 3);
        expect[(1, 1)] = Complex64::new(3.0, 0.0);
        assert!((m - expect).camax() < 1e-12);
    }

    #[test]
    fn t_adjoint_symmetry_and_norm_bound() {
        for (d, u) in [(2, 1), (3, 1)] {
            let b = basis(d, u, d as f64 * 0.6, 3);
            let mg = m_grid_for(&b).unwrap();
            let full = t_operator_full(&b, &mg).unwrap();
            let dim_u = if d == 3 { 2 * u + 1 } else { 1 } as f64;
            for ((f, t), m) in &full.blocks {
                let back = full.block(*t, *f).unwrap();
                assert!((m - back.adjoint()).camax() < 1e-12);
                let bound = ((ktype_dim(*f, d) * ktype_dim(*t, d)) as f64).sqrt() / dim_u;
                assert!(m.clone().singular_values().max() <= bound + 1e-10);
            }
        }
    }

    #[test]
    fn cplus_spherical_values() {
        for (d, s) in [(1, 1.0), (1, 0.75), (2, 1.5), (3, 2.2)] {
            let label = CompSerLabel::standard(d, WeightLabel::trivial(d), s).unwrap();
            let b = Basis::new(&label, 2).unwrap();
            let c = cplus(
                &b,
                &CPlusConfig {
                    measure: NbarMeasure::Lebesgue,
                    radial_nodes: None,
                },
            )
            .unwrap();
            let tau = b.blocks[b.block_index(KType::new(0, 0)).unwrap()].tau;
            let val = c.op.block(tau, tau).unwrap()[(0, 0)];
            assert!(
                (val.re - spherical_cplus_value(d, s)).abs() < 1e-10,
                "d = {d}: {val}"
            );
            assert!(val.im.abs() < 1e-12);
        }
        assert!((spherical_cplus_value(1, 1.0) - PI).abs() < 1e-13);
        assert!((spherical_cplus_value(2, 1.5) - 2.0 * PI).abs() < 1e-12);
        assert!((nbar_haar_constant(1) - PI).abs() < 1e-13);
    }

    #[test]
    fn cplus_rejects_small_s() {
        let label = CompSerLabel::standard(2, WeightLabel::trivial(2), 0.9).unwrap();
        let b = Basis::new(&label, 2).unwrap();
        assert!(cplus(&b, &CPlusConfig::default()).is_err());
    }

    #[test]
    fn cplus_d1_blocks_match_direct_quadrature() {
        // x = tan φ turns ∫ e^{inθ(κ(n̄_x))} (1 + x²)^{−s} dx into a smooth
        // integral over (−π/2, π/2) with weight cos^{2s−2} φ; s = 2 keeps it analytic
        let s = 2.0;
        let label = CompSerLabel::standard(1, WeightLabel::trivial(1), s).unwrap();
        let b = Basis::new(&label, 3).unwrap();
        let c = cplus(
            &b,
            &CPlusConfig {
                measure: NbarMeasure::Lebesgue,
                radial_nodes: None,
            },
        )
        .unwrap();
        let rule = gauss_legendre(200).mapped(-PI / 2.0, PI / 2.0);
        for n in -3i64..=3 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (phi, w) in rule.nodes.iter().zip(&rule.weights) {
                let kc = k_coord(&kappa_nbar(&[phi.tan()])).unwrap();
                let th = match kc {
                    crate::quadrature::KCoord::Circle(t) => t,
                    _ => unreachable!(),
                };
                acc +=
                    Complex64::from_polar(1.0, n as f64 * th) * (w * phi.cos().powf(2.0 * s - 2.0));
            }
            let got = c.op.block(KType::new(n, 0), KType::new(n, 0)).unwrap()[(0, 0)];
            assert!((got - acc).norm() < 1e-12, "n = {n}: {got} vs {acc}");
        }
    }

    #[test]
    fn eisenstein_identity_at_identity_and_boost() {
        let b = basis(1, 0, 0.75, 4);
        let grid = Arc::new(k_quadrature(1, 256).unwrap());
        let cfg = ActConfig {
            grid,
            tolerance: 1.0,
        };
        let mg = m_grid_for(&b).unwrap();
        for g in [GroupElement::identity(1), make_a(1.0, 1)] {
            for (t1, t2) in [(0, 0), (0, 1), (-1, 2)] {
                let r = eisenstein_check(&g, &b, KType::new(t1, 0), KType::new(t2, 0), &cfg, &mg)
                    .unwrap();
                assert!(r.defect < 1e-8, "({t1},{t2}): {}", r.defect);
            }
        }
    }

    #[test]
    fn gamma_ratios_follow_the_functional_equation() {
        let l = CompSerLabel::with_upsilon(2, 0, 1.5).unwrap();
        assert!(
            (a_ratio(&l, KType::new(0, 0), KType::new(1, 0)).unwrap() - 1.0 / 3.0).abs() < 1e-14
        );
        let l = CompSerLabel::with_upsilon(1, 0, 0.75).unwrap();
        assert!(
            (a_ratio(&l, KType::new(0, 0), KType::new(1, 0)).unwrap() - 1.0 / 3.0).abs() < 1e-14
        );
        assert!(
            (a_ratio(&l, KType::new(0, 0), KType::new(-1, 0)).unwrap() - 1.0 / 3.0).abs() < 1e-14
        );
        assert_eq!(
            a_ratio(&l, KType::new(2, 0), KType::new(2, 0)).unwrap(),
            1.0
        );
    }

    #[test]
    fn d3_scalars_are_symmetric_in_t2_and_satisfy_both_recursions() {
        let s = 1.7;
        let l = CompSerLabel::with_upsilon(3, 2, s).unwrap();
        let sc = IntertwiningScalars::new(&l, 6).unwrap();
        for (tau, a) in &sc.table {
            assert!(*a > 0.0);
            let mirror = sc.get(KType::new(tau.t1, -tau.t2)).unwrap();
            assert!((a - mirror).abs() < 1e-12 * a);
            if let Ok(up) = sc.get(KType::new(tau.t1 + 1, tau.t2)) {
                let lhs = (s + tau.t1 as f64) * up;
                let rhs = (3.0 - s + tau.t1 as f64) * a;
                assert!((lhs - rhs).abs() < 1e-12 * rhs.abs());
            }
            if let Ok(up) = sc.get(KType::new(tau.t1, tau.t2 + 1)) {
                let lhs = (s + tau.t2 as f64 - 1.0) * up;
                let rhs = (3.0 - s + tau.t2 as f64 - 1.0) * a;
                assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(lhs.abs()));
            }
        }
    }

    #[test]
    fn invalid_scalar_labels_are_rejected() {
        assert!(a_ratio(
            &CompSerLabel::with_upsilon(2, 1, 1.5).unwrap(),
            KType::new(1, 0),
            KType::new(2, 0)
        )
        .is_err());
        assert!(a_ratio(
            &CompSerLabel::with_upsilon(3, 1, 2.5).unwrap(),
            KType::new(1, 0),
            KType::new(2, 0)
        )
        .is_err());
        assert!(gamma_quotient(1.5, 2, -2).is_err());
    }

    #[test]
    fn scalar_csv_layout() {
        let sc =
            IntertwiningScalars::new(&CompSerLabel::with_upsilon(1, 0, 0.75).unwrap(), 1).unwrap();
        let csv = sc.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t1,t2,a_over_base");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("0,0,1.0000000000000000e0"));
    }

    #[test]
    fn kv_limits() {
        let r = kv_ratio_check(0.75, 1, &[0.0, 1.0, 100.0, 1e4]).unwrap();
        assert!(r.pass);
        let expect = (ln_gamma(0.75) - ln_gamma(0.25)).exp();
        assert!((r.ratio_at_zero.unwrap() - expect).abs() < 1e-14);
    }
}
