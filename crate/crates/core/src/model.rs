//! Truncated Peter–Weyl model of L²(K:υ).
//!
//! The K-type τ block is spanned by φ_{τ,i}(k) = √dim τ · [D_τ(k) ξ_τ]_i,
//! where ξ_τ is a unit vector on which M acts through υ. Then
//!
//! * the φ_{τ,i} are orthonormal in L²(K),
//! * φ(km) = φ(k) transformed by υ(m), so the span lies in L²(K:υ),
//! * left translation acts on coefficients by c ↦ conj(D_τ(k)) c.
//!
//! Realizations: d = 1 uses e^{inθ}; d = 2 uses spin-ℓ Wigner matrices with
//! ξ = e_{m=−υ}; d = 3 uses D^{j_L}(l) ⊗ D^{j_R}(r) with j_{L,R} = (t1 ± t2)/2
//! and ξ the coupled state |υ, 0⟩.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{as_boost, boost_iwasawa, exp_h, iwasawa, GroupElement};
use crate::liealg::{ktype_dim, ktypes_of_compser, CompSerLabel, KType, WeightLabel};
use crate::quadrature::{k_coord, KCoord, KPoint, QuadratureGrid};
use crate::su2::{clebsch_gordan, wigner_d, Quat, WignerEval};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const CHUNK: usize = 512;

#[derive(Clone, Debug)]
enum Rep {
    Circle(i64),
    Spin { j2: usize, col: usize },
    Pair { l2: usize, r2: usize },
}

/// One K-isotypic block of the basis.
#[derive(Clone, Debug)]
pub struct Block {
    pub tau: KType,
    pub offset: usize,
    pub dim: usize,
    rep: Rep,
    xi: DVector<Complex64>,
}

impl Block {
    /// D_τ(k) in the block's representation space.
    pub fn rep_matrix(&self, coord: &KCoord) -> DMatrix<Complex64> {
        match (&self.rep, coord) {
            (Rep::Circle(n), KCoord::Circle(t)) => {
                DMatrix::from_element(1, 1, Complex64::from_polar(1.0, *n as f64 * t))
            }
            (Rep::Spin { j2, .. }, KCoord::Su2(q)) => wigner_d(*j2, *q),
            (Rep::Pair { l2, r2 }, KCoord::Su2Pair(l, r)) => {
                wigner_d(*l2, *l).kronecker(&wigner_d(*r2, *r))
            }
            _ => panic!("coordinate type does not match the basis dimension"),
        }
    }

    /// Values φ_{τ,i}(k) for all i.
    pub fn values(&self, coord: &KCoord) -> Vec<Complex64> {
        let scale = (self.dim as f64).sqrt();
        match (&self.rep, coord) {
            (Rep::Circle(n), KCoord::Circle(t)) => {
                vec![Complex64::from_polar(scale, *n as f64 * t)]
            }
            (Rep::Spin { j2, col }, KCoord::Su2(q)) => WignerEval::new(*j2, *q)
                .column(*col)
                .into_iter()
                .map(|z| z * scale)
                .collect(),
            (Rep::Pair { .. }, KCoord::Su2Pair(..)) => {
                let v = self.rep_matrix(coord) * &self.xi;
                v.iter().map(|z| z * scale).collect()
            }
            _ => panic!("coordinate type does not match the basis dimension"),
        }
    }

    /// The right vector ξ_τ.
    pub fn xi(&self) -> &DVector<Complex64> {
        &self.xi
    }
}

/// Ordered basis of the truncated model: K-types with |t1| ≤ cutoff.
#[derive(Clone, Debug)]
pub struct Basis {
    pub label: CompSerLabel,
    pub cutoff: i64,
    pub blocks: Vec<Block>,
    pub dim: usize,
}

impl Basis {
    pub fn new(label: &CompSerLabel, cutoff: i64) -> Result<Arc<Basis>> {
        let d = label.d;
        if !(1..=3).contains(&d) {
            return Err(Error::Unsupported(format!("L²(K:υ) model for d = {d}")));
        }
        let u = label.upsilon_first();
        let mut blocks = Vec::new();
        let mut offset = 0;
        for tau in ktypes_of_compser(label, cutoff)? {
            let dim = ktype_dim(tau, d);
            let (rep, xi) = match d {
                1 => (
                    Rep::Circle(tau.t1),
                    DVector::from_element(1, Complex64::new(1.0, 0.0)),
                ),
                2 => {
                    let j2 = 2 * tau.t1 as usize;
                    let col = (tau.t1 - u) as usize;
                    let mut xi = DVector::zeros(j2 + 1);
                    xi[col] = Complex64::new(1.0, 0.0);
                    (Rep::Spin { j2, col }, xi)
                }
                _ => {
                    let l2 = (tau.t1 + tau.t2) as usize;
                    let r2 = (tau.t1 - tau.t2) as usize;
                    let mut xi = DVector::zeros((l2 + 1) * (r2 + 1));
                    for a in 0..=l2 {
                        for c in 0..=r2 {
                            let ma = 2 * a as i64 - l2 as i64;
                            let mc = 2 * c as i64 - r2 as i64;
                            let cg = clebsch_gordan(l2 as i64, ma, r2 as i64, mc, 2 * u, 0);
                            xi[a * (r2 + 1) + c] = Complex64::new(cg, 0.0);
                        }
                    }
                    (Rep::Pair { l2, r2 }, xi)
                }
            };
            debug_assert_eq!(xi.len(), dim);
            blocks.push(Block {
                tau,
                offset,
                dim,
                rep,
                xi,
            });
            offset += dim;
        }
        Ok(Arc::new(Basis {
            label: label.clone(),
            cutoff,
            blocks,
            dim: offset,
        }))
    }

    pub fn d(&self) -> usize {
        self.label.d
    }

    pub fn s(&self) -> f64 {
        self.label.s
    }

    pub fn ktypes(&self) -> Vec<KType> {
        self.blocks.iter().map(|b| b.tau).collect()
    }

    pub fn block(&self, tau: KType) -> Option<&Block> {
        self.blocks
            .binary_search_by(|b| b.tau.cmp(&tau))
            .ok()
            .map(|i| &self.blocks[i])
    }

    pub fn block_index(&self, tau: KType) -> Result<usize> {
        self.blocks
            .binary_search_by(|b| b.tau.cmp(&tau))
            .map_err(|_| Error::NotContained(tau.to_string()))
    }

    /// Same label, different cutoff.
    pub fn with_cutoff(&self, cutoff: i64) -> Result<Arc<Basis>> {
        Basis::new(&self.label, cutoff)
    }

    /// Same (d, υ, cutoff), different s.
    pub fn with_s(&self, s: f64) -> Result<Arc<Basis>> {
        Basis::new(&self.label.with_s(s)?, self.cutoff)
    }

    /// All basis values at a point, in basis order.
    pub fn values(&self, coord: &KCoord) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.dim);
        for b in &self.blocks {
            out.extend(b.values(coord));
        }
        out
    }

    fn same_space(&self, other: &Basis) -> bool {
        self.cutoff == other.cutoff && self.label == other.label
    }
}

/// A vector of the truncated model, stored as Peter–Weyl coefficients.
#[derive(Clone, Debug)]
pub struct ModelVector {
    pub basis: Arc<Basis>,
    pub coeffs: Vec<Complex64>,
}

impl ModelVector {
    pub fn zeros(basis: &Arc<Basis>) -> Self {
        ModelVector {
            basis: basis.clone(),
            coeffs: vec![ZERO; basis.dim],
        }
    }

    pub fn from_coeffs(basis: &Arc<Basis>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != basis.dim {
            return Err(Error::LabelMismatch);
        }
        Ok(ModelVector {
            basis: basis.clone(),
            coeffs,
        })
    }

    /// The basis function φ_{τ,i}.
    pub fn basis_vector(basis: &Arc<Basis>, tau: KType, i: usize) -> Result<Self> {
        let b = &basis.blocks[basis.block_index(tau)?];
        if i >= b.dim {
            return Err(Error::NotContained(format!("{tau} index {i}")));
        }
        let mut v = ModelVector::zeros(basis);
        v.coeffs[b.offset + i] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    /// Standard complex Gaussian coefficients on the listed K-types.
    pub fn random<R: Rng + ?Sized>(
        basis: &Arc<Basis>,
        ktypes: &[KType],
        rng: &mut R,
    ) -> Result<Self> {
        let mut v = ModelVector::zeros(basis);
        for tau in ktypes {
            let b = &basis.blocks[basis.block_index(*tau)?];
            for i in 0..b.dim {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                v.coeffs[b.offset + i] = Complex64::new(re, im) / 2f64.sqrt();
            }
        }
        Ok(v)
    }

    pub fn block(&self, tau: KType) -> Option<&[Complex64]> {
        self.basis
            .block(tau)
            .map(|b| &self.coeffs[b.offset..b.offset + b.dim])
    }

    pub fn block_vec(&self, idx: usize) -> DVector<Complex64> {
        let b = &self.basis.blocks[idx];
        DVector::from_column_slice(&self.coeffs[b.offset..b.offset + b.dim])
    }

    pub fn set_block(&mut self, idx: usize, values: &DVector<Complex64>) {
        let b = &self.basis.blocks[idx];
        self.coeffs[b.offset..b.offset + b.dim].copy_from_slice(values.as_slice());
    }

    /// Indices of blocks with a nonzero coefficient.
    pub fn support(&self) -> Vec<usize> {
        self.basis
            .blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| {
                self.coeffs[b.offset..b.offset + b.dim]
                    .iter()
                    .any(|c| c.norm_sqr() > 0.0)
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, z: Complex64) -> ModelVector {
        ModelVector {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().map(|c| c * z).collect(),
        }
    }

    pub fn normalized(&self) -> ModelVector {
        self.scale(Complex64::new(1.0 / self.norm(), 0.0))
    }

    pub fn add(&self, other: &ModelVector) -> Result<ModelVector> {
        check_same(self, other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(ModelVector {
            basis: self.basis.clone(),
            coeffs,
        })
    }

    pub fn sub(&self, other: &ModelVector) -> Result<ModelVector> {
        check_same(self, other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ModelVector {
            basis: self.basis.clone(),
            coeffs,
        })
    }

    /// Re-express over a basis with another cutoff (dropping or zero-padding K-types).
    pub fn rebased(&self, basis: &Arc<Basis>) -> Result<ModelVector> {
        if basis.label != self.basis.label {
            return Err(Error::LabelMismatch);
        }
        let mut out = ModelVector::zeros(basis);
        for b in &self.basis.blocks {
            if let Some(nb) = basis.block(b.tau) {
                out.coeffs[nb.offset..nb.offset + nb.dim]
                    .copy_from_slice(&self.coeffs[b.offset..b.offset + b.dim]);
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<ModelEntry> = self
            .basis
            .blocks
            .iter()
            .flat_map(|b| {
                (0..b.dim).filter_map(move |i| {
                    let c = self.coeffs[b.offset + i];
                    (c.norm_sqr() > 0.0).then_some(ModelEntry(
                        [b.tau.t1, b.tau.t2],
                        i,
                        0,
                        c.re,
                        c.im,
                    ))
                })
            })
            .collect();
        serde_json::to_value(ModelVectorFile {
            label: self.basis.label.clone(),
            cutoff: self.basis.cutoff,
            entries,
        })
        .expect("model vectors serialize")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<ModelVector> {
        let file: ModelVectorFile = serde_json::from_value(value.clone())
            .map_err(|e| Error::InvalidLabel(format!("model vector JSON: {e}")))?;
        let basis = Basis::new(&file.label, file.cutoff)?;
        let mut v = ModelVector::zeros(&basis);
        for ModelEntry(tau, i, j, re, im) in file.entries {
            if j != 0 {
                return Err(Error::NotContained(format!("right index {j}")));
            }
            let b = &basis.blocks[basis.block_index(KType::new(tau[0], tau[1]))?];
            if i >= b.dim {
                return Err(Error::NotContained(format!("left index {i}")));
            }
            v.coeffs[b.offset + i] = Complex64::new(re, im);
        }
        Ok(v)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelEntry([i64; 2], usize, usize, f64, f64);

#[derive(Serialize, Deserialize)]
struct ModelVectorFile {
    label: CompSerLabel,
    cutoff: i64,
    entries: Vec<ModelEntry>,
}

fn check_same(u: &ModelVector, v: &ModelVector) -> Result<()> {
    if Arc::ptr_eq(&u.basis, &v.basis) || u.basis.same_space(&v.basis) {
        Ok(())
    } else {
        Err(Error::LabelMismatch)
    }
}

/// ⟨u, v⟩_K, linear in u.
pub fn inner_k(u: &ModelVector, v: &ModelVector) -> Result<Complex64> {
    check_same(u, v)?;
    Ok(u.coeffs
        .iter()
        .zip(&v.coeffs)
        .map(|(a, b)| a * b.conj())
        .sum())
}

/// v(k) from the truncated series.
pub fn evaluate(v: &ModelVector, k: &KCoord) -> Complex64 {
    evaluate_on(v, &v.support(), k)
}

pub fn evaluate_on(v: &ModelVector, support: &[usize], k: &KCoord) -> Complex64 {
    let mut acc = ZERO;
    for &bi in support {
        let b = &v.basis.blocks[bi];
        for (i, phi) in b.values(k).into_iter().enumerate() {
            acc += v.coeffs[b.offset + i] * phi;
        }
    }
    acc
}

/// v at a group element of K.
pub fn evaluate_at(v: &ModelVector, g: &GroupElement) -> Result<Complex64> {
    if !g.is_in_k(1e-9) {
        return Err(Error::NotInGroup("evaluation needs an element of K".into()));
    }
    Ok(evaluate(v, &k_coord(g)?))
}

/// Left translation λ(k) = U^s(k), exact on coefficients.
pub fn act_k(k: &KCoord, v: &ModelVector) -> ModelVector {
    let mut out = ModelVector::zeros(&v.basis);
    for (bi, b) in v.basis.blocks.iter().enumerate() {
        let c = v.block_vec(bi);
        if c.iter().all(|z| z.norm_sqr() == 0.0) {
            continue;
        }
        let rotated = b.rep_matrix(k).map(|z| z.conj()) * c;
        out.set_block(bi, &rotated);
    }
    out
}

/// Settings for the sampled action of a general group element.
#[derive(Clone, Debug)]
pub struct ActConfig {
    pub grid: Arc<QuadratureGrid>,
    /// Largest admissible relative mass in the K-types just above the cutoff.
    pub tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct ActOutcome {
    pub vector: ModelVector,
    /// ‖shell Λ < t1 ≤ Λ+2‖ / ‖v‖_K.
    pub truncation_defect: f64,
    /// Quadrature norm of U^s(g)v not captured up to Λ+2, relative to ‖v‖_K.
    pub tail_mass: f64,
}

/// The map k ↦ (e^{H(g⁻¹k)}, κ(g⁻¹k)) for a fixed g, with a
/// cancellation-free branch when g is a pure boost.
#[derive(Clone, Debug)]
pub enum Pullback {
    Boost(f64),
    General(GroupElement),
}

impl Pullback {
    pub fn new(g: &GroupElement) -> Pullback {
        match as_boost(g) {
            Some(t) => Pullback::Boost(-t),
            None => Pullback::General(g.inverse()),
        }
    }

    pub fn at(&self, k: &GroupElement) -> Result<(f64, KCoord)> {
        match self {
            Pullback::Boost(tau) => {
                let (e, kappa) = boost_iwasawa(*tau, k);
                Ok((e, k_coord(&kappa)?))
            }
            Pullback::General(g_inv) => {
                let h = g_inv.mul(k);
                let e = exp_h(&h);
                if e <= 0.0 {
                    return Err(Error::Iwasawa(e));
                }
                let f = iwasawa(&h)?;
                Ok((e, k_coord(&f.k)?))
            }
        }
    }
}

/// [U^s(g)v](k) = e^{−sH(g⁻¹k)} v(κ(g⁻¹k)) at one point.
pub fn sample_action(
    pb: &Pullback,
    v: &ModelVector,
    support: &[usize],
    k: &KPoint,
) -> Result<Complex64> {
    let (e, kappa) = pb.at(&k.elem)?;
    Ok(evaluate_on(v, support, &kappa) * e.powf(-v.basis.s()))
}

/// Project a sampled function onto the blocks of `target` by quadrature.
/// Returns the coefficients and the quadrature L² mass of the samples.
pub fn project_samples<F>(
    target: &Basis,
    grid: &QuadratureGrid,
    f: F,
) -> Result<(Vec<Complex64>, f64)>
where
    F: Fn(&KPoint) -> Result<Complex64> + Sync,
{
    let partials: Vec<Result<(Vec<Complex64>, f64)>> = grid
        .nodes
        .par_chunks(CHUNK)
        .zip(grid.weights.par_chunks(CHUNK))
        .map(|(nodes, weights)| {
            let mut acc = vec![ZERO; target.dim];
            let mut mass = 0.0;
            for (p, &w) in nodes.iter().zip(weights) {
                let val = f(p)?;
                mass += w * val.norm_sqr();
                let wv = val * w;
                let mut idx = 0;
                for b in &target.blocks {
                    for phi in b.values(&p.coord) {
                        acc[idx] += wv * phi.conj();
                        idx += 1;
                    }
                }
            }
            Ok((acc, mass))
        })
        .collect();
    let mut coeffs = vec![ZERO; target.dim];
    let mut mass = 0.0;
    for part in partials {
        let (acc, m) = part?;
        for (c, a) in coeffs.iter_mut().zip(acc) {
            *c += a;
        }
        mass += m;
    }
    Ok((coeffs, mass))
}

/// U^s(g)v re-projected onto K-types ≤ Λ through the K grid.
pub fn act_sampled(g: &GroupElement, v: &ModelVector, cfg: &ActConfig) -> Result<ActOutcome> {
    let basis = &v.basis;
    let ext = basis.with_cutoff(basis.cutoff + 2)?;
    let pb = Pullback::new(g);
    let support = v.support();
    let (coeffs, mass) = project_samples(&ext, &cfg.grid, |k| sample_action(&pb, v, &support, k))?;
    let mut out = ModelVector::zeros(basis);
    let mut shell = 0.0;
    let mut kept = 0.0;
    for b in &ext.blocks {
        let slice = &coeffs[b.offset..b.offset + b.dim];
        let m: f64 = slice.iter().map(|c| c.norm_sqr()).sum();
        kept += m;
        match basis.block(b.tau) {
            Some(nb) => out.coeffs[nb.offset..nb.offset + nb.dim].copy_from_slice(slice),
            None => shell += m,
        }
    }
    let scale = v.norm().max(f64::MIN_POSITIVE);
    let truncation_defect = shell.sqrt() / scale;
    let tail_mass = (mass - kept).max(0.0).sqrt() / scale;
    if truncation_defect > cfg.tolerance {
        return Err(Error::TruncationOverflow {
            defect: truncation_defect,
            tolerance: cfg.tolerance,
        });
    }
    Ok(ActOutcome {
        vector: out,
        truncation_defect,
        tail_mass,
    })
}

/// U^s(g)v: exact rotation for g ∈ K, sampled re-projection otherwise.
pub fn act(g: &GroupElement, v: &ModelVector, cfg: &ActConfig) -> Result<ActOutcome> {
    if g.is_in_k(1e-13) {
        let k = k_coord(g)?;
        return Ok(ActOutcome {
            vector: act_k(&k, v),
            truncation_defect: 0.0,
            tail_mass: 0.0,
        });
    }
    act_sampled(g, v, cfg)
}

/// P_τ: coefficient masking.
pub fn project_ktype(v: &ModelVector, tau: KType) -> Result<ModelVector> {
    let idx = v.basis.block_index(tau)?;
    let mut out = ModelVector::zeros(&v.basis);
    out.set_block(idx, &v.block_vec(idx));
    Ok(out)
}

/// The M-character χ_σ(m) = dim σ · tr σ(m) at an element of M.
pub fn m_character(sigma: &WeightLabel, m: &KCoord) -> Complex64 {
    match m {
        KCoord::Circle(_) => Complex64::new(1.0, 0.0),
        KCoord::Su2(h) => {
            // m = R_z(φ) lifts to h with a = e^{−iφ/2}; χ_(n) = e^{inφ} = ā^{2n}
            let (a, _) = h.to_su2();
            let n = sigma.first();
            if n >= 0 {
                a.conj().powi(2 * n as i32)
            } else {
                a.powi((-2 * n) as i32)
            }
        }
        KCoord::Su2Pair(h, _) => {
            let l = sigma.first() as usize;
            let dim = (2 * l + 1) as f64;
            wigner_d(2 * l, *h).trace() * dim
        }
    }
}

/// Matrix of the left projection P_σ = ∫_M χ̄_σ(m) λ(m) dm on one block.
pub fn left_mtype_block(
    block: &Block,
    sigma: &WeightLabel,
    mgrid: &QuadratureGrid,
) -> DMatrix<Complex64> {
    let mut acc = DMatrix::zeros(block.dim, block.dim);
    for (p, &w) in mgrid.nodes.iter().zip(&mgrid.weights) {
        let chi = m_character(sigma, &p.coord).conj();
        acc += block.rep_matrix(&p.coord).map(|z| z.conj()) * (chi * w);
    }
    acc
}

/// P_σ v for the left M-action, by M quadrature.
pub fn project_mtype_left(
    v: &ModelVector,
    sigma: &WeightLabel,
    mgrid: &QuadratureGrid,
) -> Result<ModelVector> {
    if sigma.n != v.basis.d() {
        return Err(Error::InvalidWeight(format!(
            "σ must label SO({})",
            v.basis.d()
        )));
    }
    let mut out = ModelVector::zeros(&v.basis);
    for (bi, b) in v.basis.blocks.iter().enumerate() {
        let p = left_mtype_block(b, sigma, mgrid);
        out.set_block(bi, &(p * v.block_vec(bi)));
    }
    Ok(out)
}

/// χ_τ = Σ_i conj(φ_{τ,i}(e)) φ_{τ,i}.
pub fn chi_vector(tau: KType, basis: &Arc<Basis>) -> Result<ModelVector> {
    let idx = basis.block_index(tau)?;
    let b = &basis.blocks[idx];
    let scale = (b.dim as f64).sqrt();
    let coeffs = b.xi.map(|z| z.conj() * scale);
    let mut v = ModelVector::zeros(basis);
    v.set_block(idx, &coeffs);
    Ok(v)
}

/// Identity element in the coordinates used by the basis.
pub fn identity_coord(d: usize) -> KCoord {
    match d {
        1 => KCoord::Circle(0.0),
        2 => KCoord::Su2(Quat::ONE),
        _ => KCoord::Su2Pair(Quat::ONE, Quat::ONE),
    }
}

/// Compose two K coordinates: coordinates of k1 k2.
pub fn compose_coord(a: &KCoord, b: &KCoord) -> KCoord {
    match (a, b) {
        (KCoord::Circle(x), KCoord::Circle(y)) => KCoord::Circle(x + y),
        (KCoord::Su2(p), KCoord::Su2(q)) => KCoord::Su2(p.mul(*q)),
        (KCoord::Su2Pair(l1, r1), KCoord::Su2Pair(l2, r2)) => {
            KCoord::Su2Pair(l1.mul(*l2), r1.mul(*r2))
        }
        _ => panic!("mismatched coordinate types"),
    }
}

/// Largest deviation of ∫_M χ̄_υ(m) v(k m) dm from v(k) over sample points.
pub fn right_m_defect(v: &ModelVector, mgrid: &QuadratureGrid, samples: &[KCoord]) -> f64 {
    let ups = &v.basis.label.upsilon;
    let mut worst = 0.0f64;
    for k in samples {
        let mut acc = ZERO;
        for (p, &w) in mgrid.nodes.iter().zip(&mgrid.weights) {
            let km = compose_coord(k, &p.coord);
            acc += m_character(ups, &p.coord).conj() * evaluate(v, &km) * w;
        }
        worst = worst.max((acc - evaluate(v, k)).norm());
    }
    worst
}
