//! SO°(d+1, 1) as (d+2)×(d+2) matrices preserving J = diag(1, …, 1, −1).
//!
//! Coordinates are ordered x_1, …, x_d, p, q with p = d+1 and q = d+2 (one
//! based). K = SO(d+1) acts on the first d+1 coordinates, M = SO(d) on the
//! first d, and a_t is the boost in the (p, q) plane. With u = e_p + e_q and
//! w = e_q − e_p:
//!
//! * a_t u = e^t u and a_t w = e^{−t} w,
//! * n̄_x = I + x uᵀ + w xᵀ + ½|x|² w uᵀ (contracted by Ad(a_t)),
//! * n_y = I − y wᵀ − u yᵀ + ½|y|² u wᵀ (fixes u).
//!
//! The Iwasawa coordinate is read off the light-cone vector u: since K fixes
//! e_q and N fixes u, (g u)_q = e^{H(g)}.

use nalgebra::{DMatrix, DVector, Matrix3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::su2::Quat;

const GROUP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub d: usize,
    pub mat: DMatrix<f64>,
}

impl GroupElement {
    pub fn identity(d: usize) -> Self {
        GroupElement {
            d,
            mat: DMatrix::identity(d + 2, d + 2),
        }
    }

    /// Wrap a matrix after checking J-orthogonality and the identity component.
    pub fn new(d: usize, mat: DMatrix<f64>) -> Result<Self> {
        let g = GroupElement { d, mat };
        g.check()?;
        Ok(g)
    }

    pub fn from_matrix_unchecked(d: usize, mat: DMatrix<f64>) -> Self {
        GroupElement { d, mat }
    }

    fn q(&self) -> usize {
        self.d + 1
    }

    /// Max-norm defect of gᵀ J g = J.
    pub fn form_defect(&self) -> f64 {
        let jm = form(self.d);
        (self.mat.transpose() * &jm * &self.mat - jm).amax()
    }

    pub fn check(&self) -> Result<()> {
        let n = self.d + 2;
        if self.mat.nrows() != n || self.mat.ncols() != n {
            return Err(Error::NotInGroup(format!("expected a {n}×{n} matrix")));
        }
        let scale = self.mat.amax().max(1.0);
        let defect = self.form_defect();
        if defect > GROUP_TOL * scale * scale {
            return Err(Error::NotInGroup(format!("form defect {defect:.3e}")));
        }
        if self.mat[(self.q(), self.q())] < 1.0 - GROUP_TOL * scale {
            return Err(Error::NotInGroup("time orientation reversed".into()));
        }
        let det = self.mat.clone().determinant();
        if (det - 1.0).abs() > GROUP_TOL * scale.powi(n as i32) {
            return Err(Error::NotInGroup(format!("determinant {det}")));
        }
        Ok(())
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        debug_assert_eq!(self.d, other.d);
        GroupElement {
            d: self.d,
            mat: &self.mat * &other.mat,
        }
    }

    /// g⁻¹ = J gᵀ J.
    pub fn inverse(&self) -> GroupElement {
        let mut m = self.mat.transpose();
        let q = self.q();
        for i in 0..q {
            m[(i, q)] = -m[(i, q)];
            m[(q, i)] = -m[(q, i)];
        }
        GroupElement { d: self.d, mat: m }
    }

    /// True when g lies in K up to `tol`.
    pub fn is_in_k(&self, tol: f64) -> bool {
        let q = self.q();
        let mut off = 0.0f64;
        for i in 0..q {
            off = off.max(self.mat[(i, q)].abs()).max(self.mat[(q, i)].abs());
        }
        off <= tol && (self.mat[(q, q)] - 1.0).abs() <= tol
    }

    /// The (d+1)×(d+1) rotation block of an element of K.
    pub fn rotation_block(&self) -> DMatrix<f64> {
        self.mat.view((0, 0), (self.d + 1, self.d + 1)).into_owned()
    }

    pub fn max_abs_diff(&self, other: &GroupElement) -> f64 {
        (&self.mat - &other.mat).amax()
    }
}

/// The form J = diag(1, …, 1, −1).
pub fn form(d: usize) -> DMatrix<f64> {
    let mut j = DMatrix::identity(d + 2, d + 2);
    j[(d + 1, d + 1)] = -1.0;
    j
}

/// The boost a_t = exp(t H₀).
pub fn make_a(t: f64, d: usize) -> GroupElement {
    let mut g = GroupElement::identity(d);
    let (p, q) = (d, d + 1);
    let (c, s) = (t.cosh(), t.sinh());
    g.mat[(p, p)] = c;
    g.mat[(q, q)] = c;
    g.mat[(p, q)] = s;
    g.mat[(q, p)] = s;
    g
}

/// The infinitesimal boost H₀.
pub fn h0(d: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(d + 2, d + 2);
    h[(d, d + 1)] = 1.0;
    h[(d + 1, d)] = 1.0;
    h
}

fn light_cone(d: usize) -> (DVector<f64>, DVector<f64>) {
    let mut u = DVector::zeros(d + 2);
    let mut w = DVector::zeros(d + 2);
    u[d] = 1.0;
    u[d + 1] = 1.0;
    w[d] = -1.0;
    w[d + 1] = 1.0;
    (u, w)
}

fn spatial(x: &[f64], d: usize) -> DVector<f64> {
    assert_eq!(x.len(), d, "expected a {d}-vector");
    let mut v = DVector::zeros(d + 2);
    v.rows_mut(0, d).copy_from_slice(x);
    v
}

/// n̄_x, contracted by conjugation with a_t.
pub fn make_nbar(x: &[f64]) -> GroupElement {
    let d = x.len();
    let (u, w) = light_cone(d);
    let xv = spatial(x, d);
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let mat = DMatrix::identity(d + 2, d + 2)
        + &xv * u.transpose()
        + &w * xv.transpose()
        + (&w * u.transpose()) * (0.5 * r2);
    GroupElement { d, mat }
}

/// n_y, the N factor of the Iwasawa decomposition.
pub fn make_n(y: &[f64]) -> GroupElement {
    let d = y.len();
    let (u, w) = light_cone(d);
    let yv = spatial(y, d);
    let r2: f64 = y.iter().map(|v| v * v).sum();
    let mat = DMatrix::identity(d + 2, d + 2) - &yv * w.transpose() - &u * yv.transpose()
        + (&u * w.transpose()) * (0.5 * r2);
    GroupElement { d, mat }
}

fn check_rotation(r: &DMatrix<f64>) -> Result<()> {
    let n = r.nrows();
    if r.ncols() != n {
        return Err(Error::NotInGroup("rotation must be square".into()));
    }
    let defect = (r.transpose() * r - DMatrix::<f64>::identity(n, n)).amax();
    if defect > GROUP_TOL {
        return Err(Error::NotInGroup(format!(
            "not orthogonal (defect {defect:.3e})"
        )));
    }
    let det = if n == 0 { 1.0 } else { r.clone().determinant() };
    if (det - 1.0).abs() > GROUP_TOL {
        return Err(Error::NotInGroup(format!("determinant {det}")));
    }
    Ok(())
}

/// Embed m ∈ SO(d) acting on x_1, …, x_d.
pub fn embed_m(m_rot: &DMatrix<f64>, d: usize) -> Result<GroupElement> {
    if m_rot.nrows() != d {
        return Err(Error::NotInGroup(format!("expected a {d}×{d} rotation")));
    }
    check_rotation(m_rot)?;
    let mut g = GroupElement::identity(d);
    g.mat.view_mut((0, 0), (d, d)).copy_from(m_rot);
    Ok(g)
}

/// Embed k ∈ SO(d+1) acting on x_1, …, x_d, p.
pub fn embed_k(k_rot: &DMatrix<f64>, d: usize) -> Result<GroupElement> {
    if k_rot.nrows() != d + 1 {
        return Err(Error::NotInGroup(format!(
            "expected a {}×{} rotation",
            d + 1,
            d + 1
        )));
    }
    check_rotation(k_rot)?;
    Ok(embed_k_unchecked(k_rot, d))
}

pub(crate) fn embed_k_unchecked(k_rot: &DMatrix<f64>, d: usize) -> GroupElement {
    let mut g = GroupElement::identity(d);
    g.mat.view_mut((0, 0), (d + 1, d + 1)).copy_from(k_rot);
    g
}

/// Factors of g = k · a_H · n_y.
#[derive(Clone, Debug)]
pub struct IwasawaFactors {
    pub k: GroupElement,
    pub h: f64,
    pub n: Vec<f64>,
}

impl IwasawaFactors {
    pub fn reassemble(&self) -> GroupElement {
        let d = self.k.d;
        self.k.mul(&make_a(self.h, d)).mul(&make_n(&self.n))
    }
}

/// Light-cone coordinate e^{H(g)} = (g u)_q.
pub fn exp_h(g: &GroupElement) -> f64 {
    let q = g.d + 1;
    g.mat[(q, g.d)] + g.mat[(q, q)]
}

/// H(g) only.
pub fn iwasawa_h(g: &GroupElement) -> Result<f64> {
    let e = exp_h(g);
    if e <= 0.0 || !e.is_finite() {
        return Err(Error::Iwasawa(e));
    }
    Ok(e.ln())
}

/// g = κ(g) exp(H(g) H₀) n_g.
pub fn iwasawa(g: &GroupElement) -> Result<IwasawaFactors> {
    let d = g.d;
    let (p, q) = (d, d + 1);
    let e = exp_h(g);
    if e <= 0.0 || !e.is_finite() {
        return Err(Error::Iwasawa(e));
    }
    let h = e.ln();
    // n_y fixes u and a_H scales it by e^H, so g u = e^H k u; for i < d,
    // g e_i = k e_i − y_i g u. Both avoid forming g n_y⁻¹ with large entries.
    let gu: DVector<f64> = g.mat.column(p) + g.mat.column(q);
    let y: Vec<f64> = (0..d).map(|i| -g.mat[(q, i)] / e).collect();
    let mut kmat = DMatrix::zeros(d + 2, d + 2);
    for i in 0..d {
        let col = g.mat.column(i) + &gu * y[i];
        kmat.view_mut((0, i), (q, 1)).copy_from(&col.rows(0, q));
    }
    let kp = &gu / e;
    kmat.view_mut((0, p), (q, 1)).copy_from(&kp.rows(0, q));
    kmat[(q, q)] = 1.0;
    let k = GroupElement { d, mat: kmat };
    Ok(IwasawaFactors { k, h, n: y })
}

/// κ(n̄_x) in closed form: the reflection-like rotation sending e_p to
/// (2x, 1 − |x|²)/(1 + |x|²). Accurate for any |x|, unlike the generic route.
pub fn kappa_nbar(x: &[f64]) -> GroupElement {
    let d = x.len();
    let p = d;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let den = 1.0 + r2;
    let mut m = DMatrix::identity(d + 2, d + 2);
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] -= 2.0 * x[i] * x[j] / den;
        }
        m[(i, p)] = 2.0 * x[i] / den;
        m[(p, i)] = -2.0 * x[i] / den;
    }
    m[(p, p)] = (1.0 - r2) / den;
    GroupElement { d, mat: m }
}

/// (e^{H(a_τ k)}, κ(a_τ k)) for k ∈ K, free of the cancellation that the
/// matrix product a_τ k suffers when |τ| is large.
pub fn boost_iwasawa(tau: f64, k: &GroupElement) -> (f64, GroupElement) {
    let d = k.d;
    let p = d;
    let omega: Vec<f64> = (0..=d).map(|i| k.mat[(i, p)]).collect();
    let side: f64 = omega[..d].iter().map(|v| v * v).sum();
    let wp = omega[p];
    // 1 ± ω_p without cancellation, using 1 − ω_p² = |ω_spatial|²
    let (minus, plus) = if wp >= 0.0 {
        let plus = 1.0 + wp;
        (side / plus, plus)
    } else {
        let minus = 1.0 - wp;
        (minus, side / minus)
    };
    let (up, down) = (tau.exp(), (-tau).exp());
    let e = 0.5 * (up * plus + down * minus);
    let gup = 0.5 * (up * plus - down * minus);
    let mut m = DMatrix::identity(d + 2, d + 2);
    for j in 0..d {
        m[(j, p)] = omega[j] / e;
    }
    m[(p, p)] = gup / e;
    for i in 0..d {
        let y = -tau.sinh() * k.mat[(p, i)] / e;
        for j in 0..d {
            m[(j, i)] = k.mat[(j, i)] + y * omega[j];
        }
        m[(p, i)] = k.mat[(p, i)] / e;
    }
    (e, GroupElement { d, mat: m })
}

/// The t with g = a_t, if g is a pure boost.
pub fn as_boost(g: &GroupElement) -> Option<f64> {
    let (p, q) = (g.d, g.d + 1);
    let m = &g.mat;
    for i in 0..g.d + 2 {
        for j in 0..g.d + 2 {
            let in_block = (i == p || i == q) && (j == p || j == q);
            let expect = if i == j { 1.0 } else { 0.0 };
            if !in_block && m[(i, j)] != expect {
                return None;
            }
        }
    }
    let t = m[(q, p)].asinh();
    let a = make_a(t, g.d);
    (a.max_abs_diff(g) <= 1e-14 * m[(q, q)]).then_some(t)
}

/// Principal rotation angles of an element of K, for d ≤ 3.
fn rotation_angles(r: &DMatrix<f64>) -> Result<Vec<f64>> {
    match r.nrows() {
        2 => Ok(vec![r[(1, 0)].atan2(r[(0, 0)]).abs()]),
        3 => {
            let m = Matrix3::from_fn(|i, j| r[(i, j)]);
            Ok(vec![Quat::from_rotation(&m).rotation_angle()])
        }
        4 => {
            let (l, rq) = so4_to_quaternions(r);
            let al = quat_half_angle(l);
            let ar = quat_half_angle(rq);
            let wrap = |t: f64| {
                let t = t.rem_euclid(2.0 * std::f64::consts::PI);
                t.min(2.0 * std::f64::consts::PI - t)
            };
            Ok(vec![wrap(al + ar), wrap(al - ar)])
        }
        n => Err(Error::Unsupported(format!("dist_K for SO({n})"))),
    }
}

fn quat_half_angle(q: Quat) -> f64 {
    let v = (q.x * q.x + q.y * q.y + q.z * q.z).sqrt();
    v.atan2(q.w)
}

/// Geodesic distance on K for the metric ⟨X, Y⟩ = −½ tr(XY) on 𝔨.
///
/// This is −B(X, θY)/(2d) with B the Killing form, the scaling that gives H₀
/// unit length. Plane rotations E_ij − E_ji are orthonormal, so a rotation
/// by θ ∈ [0, π] sits at distance θ (declared constant c = 1).
pub fn dist_k(k1: &GroupElement, k2: &GroupElement) -> Result<f64> {
    let rel = k1.inverse().mul(k2);
    if !rel.is_in_k(1e-9) {
        return Err(Error::NotInGroup("dist_K needs elements of K".into()));
    }
    let angles = rotation_angles(&rel.rotation_block())?;
    Ok(angles.iter().map(|a| a * a).sum::<f64>().sqrt())
}

/// Quaternions (l, r) with R(x) = l x r̄ on H = R⁴, x = x4 + x1 i + x2 j + x3 k.
pub fn so4_to_quaternions(r: &DMatrix<f64>) -> (Quat, Quat) {
    // c = R(1) = l r̄; x ↦ c̄ R(x) = r x r̄ is the SO(3) rotation of r.
    let col = |j: usize| Quat::new(r[(3, j)], r[(0, j)], r[(1, j)], r[(2, j)]);
    let c = col(3);
    let cbar = c.conj();
    let mut m = Matrix3::zeros();
    for j in 0..3 {
        let img = cbar.mul(col(j));
        m[(0, j)] = img.x;
        m[(1, j)] = img.y;
        m[(2, j)] = img.z;
    }
    let rq = Quat::from_rotation(&m);
    let l = c.mul(rq).normalized();
    (l, rq)
}

/// 4×4 matrix of x ↦ l x r̄ in the ordering (x1, x2, x3, x4).
pub fn quaternions_to_so4(l: Quat, r: Quat) -> DMatrix<f64> {
    let basis = [
        Quat::new(0.0, 1.0, 0.0, 0.0),
        Quat::new(0.0, 0.0, 1.0, 0.0),
        Quat::new(0.0, 0.0, 0.0, 1.0),
        Quat::ONE,
    ];
    let rc = r.conj();
    let mut m = DMatrix::zeros(4, 4);
    for (j, e) in basis.iter().enumerate() {
        let img = l.mul(*e).mul(rc);
        m[(0, j)] = img.x;
        m[(1, j)] = img.y;
        m[(2, j)] = img.z;
        m[(3, j)] = img.w;
    }
    m
}

/// Haar-random rotation in SO(n) by QR of a Gaussian matrix.
pub fn random_rotation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.clone().determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

pub fn random_k<R: Rng + ?Sized>(d: usize, rng: &mut R) -> GroupElement {
    embed_k_unchecked(&random_rotation(d + 1, rng), d)
}

pub fn random_m<R: Rng + ?Sized>(d: usize, rng: &mut R) -> GroupElement {
    let mut g = GroupElement::identity(d);
    g.mat
        .view_mut((0, 0), (d, d))
        .copy_from(&random_rotation(d, rng));
    g
}

/// Word of `len` random generators a_t (|t| ≤ t_max), n̄_x (|x_i| ≤ x_max), k.
pub fn random_word<R: Rng + ?Sized>(
    d: usize,
    len: usize,
    t_max: f64,
    x_max: f64,
    rng: &mut R,
) -> GroupElement {
    let mut g = GroupElement::identity(d);
    for _ in 0..len {
        let factor = match rng.gen_range(0..3) {
            0 => make_a(rng.gen_range(-t_max..=t_max), d),
            1 => {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-x_max..=x_max)).collect();
                make_nbar(&x)
            }
            _ => random_k(d, rng),
        };
        g = g.mul(&factor);
    }
    g
}

/// exp of a (d+2)×(d+2) matrix by scaling and squaring with a Taylor core.
pub fn expm(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let norm = x.amax() * n as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = x / 2f64.powi(squarings as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..20 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_preserve_the_form() {
        let d = 3;
        assert!(make_a(0.7, d).form_defect() < 1e-14);
        assert!(make_nbar(&[0.3, -1.2, 0.5]).form_defect() < 1e-14);
        assert!(make_n(&[0.3, -1.2, 0.5]).form_defect() < 1e-14);
        assert!(make_a(0.7, d).check().is_ok());
        assert!(make_nbar(&[0.3, -1.2, 0.5]).check().is_ok());
    }

    #[test]
    fn a_is_a_one_parameter_group() {
        for d in 1..=3 {
            assert!(make_a(0.0, d).max_abs_diff(&GroupElement::identity(d)) == 0.0);
            let lhs = make_a(0.4, d).mul(&make_a(-1.3, d));
            assert!(lhs.max_abs_diff(&make_a(-0.9, d)) < 1e-12);
            assert!(expm(&(h0(d) * 0.8)).relative_eq(&make_a(0.8, d).mat, 1e-13, 1e-13));
        }
    }

    #[test]
    fn nbar_is_abelian_and_scaled_by_a() {
        let x = [0.4, -0.2];
        let y = [1.1, 0.7];
        let sum = [1.5, 0.5];
        assert!(
            make_nbar(&x)
                .mul(&make_nbar(&y))
                .max_abs_diff(&make_nbar(&sum))
                < 1e-12
        );
        assert!(make_nbar(&[0.0, 0.0]).max_abs_diff(&GroupElement::identity(2)) == 0.0);
        let t: f64 = 1.3;
        let conj = make_a(t, 2).mul(&make_nbar(&x)).mul(&make_a(-t, 2));
        let scaled: Vec<f64> = x.iter().map(|v| v * (-t).exp()).collect();
        assert!(conj.max_abs_diff(&make_nbar(&scaled)) < 1e-12);
        let conj_n = make_a(t, 2).mul(&make_n(&x)).mul(&make_a(-t, 2));
        let grown: Vec<f64> = x.iter().map(|v| v * t.exp()).collect();
        assert!(conj_n.max_abs_diff(&make_n(&grown)) < 1e-12);
    }

    #[test]
    fn m_centralizes_a_and_rotates_nbar() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = 3;
        let mrot = random_rotation(d, &mut rng);
        let m = embed_m(&mrot, d).unwrap();
        let a = make_a(0.9, d);
        assert!(m.mul(&a).max_abs_diff(&a.mul(&m)) < 1e-12);
        let x = [0.3, -0.8, 1.4];
        let mx: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|j| mrot[(i, j)] * x[j]).sum())
            .collect();
        let lhs = m.mul(&make_nbar(&x)).mul(&m.inverse());
        assert!(lhs.max_abs_diff(&make_nbar(&mx)) < 1e-12);
        assert!(embed_m(&DMatrix::identity(d, d), d).unwrap() == GroupElement::identity(d));
    }

    #[test]
    fn embedding_rejects_non_orthogonal() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(embed_m(&bad, 2).is_err());
        let refl = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(embed_k(&refl, 1).is_err());
    }

    #[test]
    fn iwasawa_examples() {
        for d in 1..=3 {
            let f = iwasawa(&GroupElement::identity(d)).unwrap();
            assert!(f.h.abs() < 1e-15);
            assert!(f.n.iter().all(|v| v.abs() < 1e-15));
            assert!(f.k.max_abs_diff(&GroupElement::identity(d)) < 1e-15);
            assert!((iwasawa(&make_a(1.0, d)).unwrap().h - 1.0).abs() < 1e-14);
        }
        let x = [0.6, -1.7];
        let f = iwasawa(&make_nbar(&x)).unwrap();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        assert!((f.h.exp() - (1.0 + r2)).abs() < 1e-12);
    }

    #[test]
    fn iwasawa_rejects_wrong_time_orientation() {
        let mut m = DMatrix::identity(3, 3);
        m[(2, 2)] = -1.0;
        m[(1, 1)] = -1.0;
        let g = GroupElement::from_matrix_unchecked(1, m);
        assert!(matches!(iwasawa(&g), Err(Error::Iwasawa(_))));
    }

    #[test]
    fn dist_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in 1..=3 {
            let k = random_k(d, &mut rng);
            assert!(dist_k(&k, &k).unwrap() < 1e-7);
        }
        for &theta in &[0.0, 0.3, 1.7, std::f64::consts::PI] {
            let r = DMatrix::from_row_slice(
                2,
                2,
                &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()],
            );
            let k = embed_k(&r, 1).unwrap();
            let dist = dist_k(&GroupElement::identity(1), &k).unwrap();
            assert!((dist - theta).abs() < 1e-12);
        }
    }

    #[test]
    fn so4_quaternion_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let r = random_rotation(4, &mut rng);
            let (l, q) = so4_to_quaternions(&r);
            assert!((quaternions_to_so4(l, q) - &r).amax() < 1e-12);
        }
    }

    fn arb_word(d: usize) -> impl Strategy<Value = GroupElement> {
        any::<u64>().prop_map(move |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_word(d, 5, 1.5, 1.0, &mut rng)
        })
    }

    #[test]
    fn closed_forms_match_the_generic_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for d in 1..=3 {
            for _ in 0..20 {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let f = iwasawa(&make_nbar(&x)).unwrap();
                assert!(f.k.max_abs_diff(&kappa_nbar(&x)) < 1e-12);
                let k = random_k(d, &mut rng);
                let tau = rng.gen_range(-3.0..3.0);
                let f = iwasawa(&make_a(tau, d).mul(&k)).unwrap();
                let (e, kappa) = boost_iwasawa(tau, &k);
                assert!((e.ln() - f.h).abs() < 1e-12);
                assert!(kappa.max_abs_diff(&f.k) < 1e-11);
            }
        }
    }

    #[test]
    fn closed_forms_stay_orthogonal_at_extreme_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let kap = kappa_nbar(&[3e15, -1e15]);
        assert!(kap.is_in_k(1e-12) && kap.check().is_ok());
        for d in 1..=3 {
            let k = random_k(d, &mut rng);
            // k close to the identity makes e^H ≈ e^{−30}
            let near = k.mul(&make_a(0.0, d));
            let (e, kappa) = boost_iwasawa(-30.0, &GroupElement::identity(d));
            assert!((e - (-30f64).exp()).abs() < 1e-12 * e);
            assert!(kappa.max_abs_diff(&GroupElement::identity(d)) < 1e-14);
            let (_, kappa) = boost_iwasawa(-30.0, &near);
            assert!(kappa.is_in_k(1e-12) && kappa.check().is_ok());
        }
    }

    proptest! {
        #[test]
        fn products_stay_in_the_group(g in (1usize..=3).prop_flat_map(arb_word)) {
            let scale = g.mat.amax().max(1.0);
            prop_assert!(g.form_defect() < 1e-12 * scale * scale);
            prop_assert!(g.check().is_ok());
        }

        #[test]
        fn iwasawa_reassembles(g in (1usize..=3).prop_flat_map(arb_word)) {
            let f = iwasawa(&g).unwrap();
            prop_assert!(f.reassemble().max_abs_diff(&g) < 1e-10);
            prop_assert!(f.k.is_in_k(1e-9));
            prop_assert!(f.k.check().is_ok());
            let again = iwasawa(&f.reassemble()).unwrap();
            prop_assert!((again.h - f.h).abs() < 1e-10);
            prop_assert!(again.n.iter().zip(&f.n).all(|(a, b)| (a - b).abs() < 1e-9));
        }

        #[test]
        fn h_is_m_conjugation_invariant(seed in any::<u64>(), d in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_word(d, 4, 1.5, 1.0, &mut rng);
            let m = random_m(d, &mut rng);
            let conj = m.mul(&g).mul(&m.inverse());
            prop_assert!((iwasawa_h(&conj).unwrap() - iwasawa_h(&g).unwrap()).abs() < 1e-10);
        }

        #[test]
        fn cocycle_identity_for_nbar(seed in any::<u64>(), d in 1usize..=3, t in 0.0f64..3.0) {
            // H(a_t κ(n̄)) = H(a_t n̄ a_{−t}) + H(a_t) − H(n̄)
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let nbar = make_nbar(&x);
            let kappa = iwasawa(&nbar).unwrap().k;
            let lhs = iwasawa_h(&make_a(t, d).mul(&kappa)).unwrap();
            let conj = make_a(t, d).mul(&nbar).mul(&make_a(-t, d));
            let rhs = iwasawa_h(&conj).unwrap() + t - iwasawa_h(&nbar).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn dist_is_symmetric_and_bi_invariant(seed in any::<u64>(), d in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k1 = random_k(d, &mut rng);
            let k2 = random_k(d, &mut rng);
            let k3 = random_k(d, &mut rng);
            let d12 = dist_k(&k1, &k2).unwrap();
            prop_assert!((d12 - dist_k(&k2, &k1).unwrap()).abs() < 1e-9);
            prop_assert!((d12 - dist_k(&k3.mul(&k1), &k3.mul(&k2)).unwrap()).abs() < 1e-9);
            prop_assert!((d12 - dist_k(&k1.mul(&k3), &k2.mul(&k3)).unwrap()).abs() < 1e-9);
            let via = dist_k(&k1, &k3).unwrap() + dist_k(&k3, &k2).unwrap();
            prop_assert!(d12 <= via + 1e-9);
        }
    }
}
