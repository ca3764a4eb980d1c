//! Unit quaternions, SU(2) Wigner matrices and Clebsch–Gordan coefficients.
//!
//! Spins are passed doubled (`j2 = 2j`) so half-integers stay exact. Matrix
//! indices run upward in the magnetic number: index `i` is `m = i − j`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};
use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const ONE: Quat = Quat {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quat { w, x, y, z }
    }

    /// Rotation by `angle` about the unit `axis`.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Quat::new(c, s * axis[0], s * axis[1], s * axis[2])
    }

    pub fn mul(self, o: Quat) -> Quat {
        Quat {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    pub fn conj(self) -> Quat {
        Quat::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Quat {
        let n = self.norm();
        Quat::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn neg(self) -> Quat {
        Quat::new(-self.w, -self.x, -self.y, -self.z)
    }

    pub fn as_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Rotation v ↦ q v q̄ of the imaginary part, as a 3×3 matrix.
    pub fn to_rotation(self) -> Matrix3<f64> {
        let Quat { w, x, y, z } = self;
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Unit quaternion of a rotation matrix (Shepperd's method), defined up to sign.
    pub fn from_rotation(r: &Matrix3<f64>) -> Quat {
        let tr = r[(0, 0)] + r[(1, 1)] + r[(2, 2)];
        let q = if tr > r[(0, 0)].max(r[(1, 1)]).max(r[(2, 2)]) {
            let s = (1.0 + tr).sqrt() * 2.0;
            Quat::new(
                0.25 * s,
                (r[(2, 1)] - r[(1, 2)]) / s,
                (r[(0, 2)] - r[(2, 0)]) / s,
                (r[(1, 0)] - r[(0, 1)]) / s,
            )
        } else if r[(0, 0)] >= r[(1, 1)] && r[(0, 0)] >= r[(2, 2)] {
            let s = (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt() * 2.0;
            Quat::new(
                (r[(2, 1)] - r[(1, 2)]) / s,
                0.25 * s,
                (r[(0, 1)] + r[(1, 0)]) / s,
                (r[(0, 2)] + r[(2, 0)]) / s,
            )
        } else if r[(1, 1)] >= r[(2, 2)] {
            let s = (1.0 + r[(1, 1)] - r[(0, 0)] - r[(2, 2)]).sqrt() * 2.0;
            Quat::new(
                (r[(0, 2)] - r[(2, 0)]) / s,
                (r[(0, 1)] + r[(1, 0)]) / s,
                0.25 * s,
                (r[(1, 2)] + r[(2, 1)]) / s,
            )
        } else {
            let s = (1.0 + r[(2, 2)] - r[(0, 0)] - r[(1, 1)]).sqrt() * 2.0;
            Quat::new(
                (r[(1, 0)] - r[(0, 1)]) / s,
                (r[(0, 2)] + r[(2, 0)]) / s,
                (r[(1, 2)] + r[(2, 1)]) / s,
                0.25 * s,
            )
        };
        q.normalized()
    }

    /// Entries (a, b) of the SU(2) matrix [[a, b], [−b̄, ā]].
    pub fn to_su2(self) -> (Complex64, Complex64) {
        (
            Complex64::new(self.w, -self.z),
            Complex64::new(-self.y, -self.x),
        )
    }

    /// Rotation angle in [0, π] of the SO(3) element q represents.
    pub fn rotation_angle(self) -> f64 {
        let v = (self.x * self.x + self.y * self.y + self.z * self.z).sqrt();
        2.0 * v.atan2(self.w.abs())
    }
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for i in 1..=n {
        f[i] = f[i - 1] * i as f64;
    }
    f
}

/// Eigenvectors of the symmetric tridiagonal generator S with off-diagonal
/// entries √((c+1)(2j−c)), cached per spin.
fn generator_eigen(j2: usize) -> Arc<(DMatrix<f64>, Vec<f64>)> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<(DMatrix<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(e) = cache.read().expect("cache lock").get(&j2) {
        return e.clone();
    }
    let n = j2 + 1;
    let s = DMatrix::from_fn(n, n, |r, c| {
        if r == c + 1 {
            ((c as f64 + 1.0) * (j2 - c) as f64).sqrt()
        } else if c == r + 1 {
            ((r as f64 + 1.0) * (j2 - r) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(s);
    let entry = Arc::new((eig.eigenvectors, eig.eigenvalues.iter().copied().collect()));
    cache.write().expect("cache lock").insert(j2, entry.clone());
    entry
}

/// Spin-j Wigner entries at one element.
///
/// Writes U = Z(φ1) Y(β) Z(φ2) with Z(φ) = diag(e^{iφ}, e^{−iφ}) and Y(β)
/// the real rotation [[cos β, sin β], [−sin β, cos β]]. Z acts diagonally and
/// Y through the cached eigenvectors of its generator, which avoids the
/// cancellation of the explicit polynomial formula at large spin.
pub struct WignerEval {
    j2: usize,
    eig: Arc<(DMatrix<f64>, Vec<f64>)>,
    left: Vec<Complex64>,
    right: Vec<Complex64>,
    rot: Vec<Complex64>,
}

impl WignerEval {
    pub fn new(j2: usize, q: Quat) -> Self {
        let (a, b) = q.to_su2();
        let beta = b.norm().atan2(a.norm());
        let sum = if a.norm() > 0.0 { a.arg() } else { 0.0 };
        let diff = if b.norm() > 0.0 { b.arg() } else { 0.0 };
        let (phi1, phi2) = ((sum + diff) / 2.0, (sum - diff) / 2.0);
        let phases = |phi: f64| -> Vec<Complex64> {
            (0..=j2)
                .map(|r| Complex64::from_polar(1.0, phi * (2.0 * r as f64 - j2 as f64)))
                .collect()
        };
        let eig = generator_eigen(j2);
        let rot = eig
            .1
            .iter()
            .map(|&l| Complex64::from_polar(1.0, beta * l))
            .collect();
        WignerEval {
            j2,
            eig,
            left: phases(phi1),
            right: phases(phi2),
            rot,
        }
    }

    /// Entry D_{m' m} with row index `r` (m' = r − j) and column `c`.
    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        let v = &self.eig.0;
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, z) in self.rot.iter().enumerate() {
            acc += z * (v[(r, k)] * v[(c, k)]);
        }
        let turn = match (c + 4 - r % 4) % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        self.left[r] * self.right[c] * turn * acc
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..=self.j2).map(|r| self.entry(r, c)).collect()
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.j2 + 1, self.j2 + 1, |r, c| self.entry(r, c))
    }
}

/// Spin-j representation matrix of the SU(2) element `q`.
pub fn wigner_d(j2: usize, q: Quat) -> DMatrix<Complex64> {
    WignerEval::new(j2, q).matrix()
}

/// Clebsch–Gordan coefficient ⟨j1 m1; j2 m2 | J M⟩ (Racah formula), all
/// arguments doubled.
pub fn clebsch_gordan(j1: i64, m1: i64, j2: i64, m2: i64, jj: i64, mm: i64) -> f64 {
    if m1 + m2 != mm || jj < (j1 - j2).abs() || jj > j1 + j2 || (j1 + j2 + jj) % 2 != 0 {
        return 0.0;
    }
    if m1.abs() > j1 || m2.abs() > j2 || mm.abs() > jj {
        return 0.0;
    }
    if (j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (jj + mm) % 2 != 0 {
        return 0.0;
    }
    let h = |x: i64| -> usize {
        debug_assert!(x >= 0 && x % 2 == 0);
        (x / 2) as usize
    };
    let f = factorials(((j1 + j2 + jj) / 2 + 1) as usize + 2);
    let pre = ((jj + 1) as f64 * f[h(jj + j1 - j2)] * f[h(jj - j1 + j2)] * f[h(j1 + j2 - jj)]
        / f[h(j1 + j2 + jj + 2)])
    .sqrt()
        * (f[h(jj + mm)]
            * f[h(jj - mm)]
            * f[h(j1 - m1)]
            * f[h(j1 + m1)]
            * f[h(j2 - m2)]
            * f[h(j2 + m2)])
        .sqrt();
    let mut sum = 0.0;
    let kmax = (j1 + j2 - jj).min(j1 - m1).min(j2 + m2);
    let mut k = 0;
    while k <= kmax {
        let a = j1 + j2 - jj - k;
        let b = j1 - m1 - k;
        let c = j2 + m2 - k;
        let dd = jj - j2 + m1 + k;
        let e = jj - j1 - m2 + k;
        if a >= 0 && b >= 0 && c >= 0 && dd >= 0 && e >= 0 {
            let term = 1.0 / (f[h(k)] * f[h(a)] * f[h(b)] * f[h(c)] * f[h(dd)] * f[h(e)]);
            if (k / 2) % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        k += 2;
    }
    pre * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_quat(rng: &mut ChaCha8Rng) -> Quat {
        loop {
            let q = Quat::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let n = q.norm();
            if n > 0.1 && n < 1.0 {
                return q.normalized();
            }
        }
    }

    #[test]
    fn su2_map_is_a_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = random_quat(&mut rng);
            let q = random_quat(&mut rng);
            let lhs = wigner_d(1, p.mul(q));
            let rhs = wigner_d(1, p) * wigner_d(1, q);
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    fn powers(z: Complex64, n: usize) -> Vec<Complex64> {
        let mut p = Vec::with_capacity(n + 1);
        let mut acc = Complex64::new(1.0, 0.0);
        for _ in 0..=n {
            p.push(acc);
            acc *= z;
        }
        p
    }

    /// Explicit polynomial formula in (a, ā, b, −b̄); exact algebra, used as
    /// an oracle at moderate spin.
    fn polynomial_entry(j2: usize, q: Quat, r: usize, c: usize) -> Complex64 {
        let (a, b) = q.to_su2();
        let f = factorials(j2);
        let (pa, pac, pb, pbc) = (
            powers(a, j2),
            powers(a.conj(), j2),
            powers(b, j2),
            powers(-b.conj(), j2),
        );
        let lo = r.saturating_sub(j2 - c);
        let mut acc = Complex64::new(0.0, 0.0);
        for k1 in lo..=c.min(r) {
            let k2 = r - k1;
            let coef = 1.0 / (f[k1] * f[c - k1] * f[k2] * f[j2 - c - k2]);
            acc += pa[k1] * pbc[c - k1] * pb[k2] * pac[j2 - c - k2] * coef;
        }
        acc * (f[r] * f[j2 - r] * f[c] * f[j2 - c]).sqrt()
    }

    #[test]
    fn stable_evaluation_matches_polynomial_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for j2 in 0..=10 {
            let q = random_quat(&mut rng);
            let d = wigner_d(j2, q);
            for r in 0..=j2 {
                for c in 0..=j2 {
                    assert!(
                        (d[(r, c)] - polynomial_entry(j2, q, r, c)).norm() < 1e-12,
                        "2j = {j2}"
                    );
                }
            }
        }
        for (j2, q) in [
            (4, Quat::ONE),
            (3, Quat::new(0.0, 0.0, 0.0, 1.0)),
            (2, Quat::new(0.0, 1.0, 0.0, 0.0)),
        ] {
            let d = wigner_d(j2, q);
            for r in 0..=j2 {
                for c in 0..=j2 {
                    assert!((d[(r, c)] - polynomial_entry(j2, q, r, c)).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn wigner_matrices_are_unitary_homomorphisms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for j2 in 0..=32 {
            let p = random_quat(&mut rng);
            let q = random_quat(&mut rng);
            let dp = wigner_d(j2, p);
            let dq = wigner_d(j2, q);
            let eye = DMatrix::<Complex64>::identity(j2 + 1, j2 + 1);
            assert!(
                (dp.adjoint() * &dp - &eye).camax() < 1e-12,
                "unitarity at 2j = {j2}"
            );
            assert!(
                (wigner_d(j2, p.mul(q)) - dp * dq).camax() < 1e-12,
                "product at 2j = {j2}"
            );
        }
    }

    #[test]
    fn z_rotations_are_diagonal_phases() {
        let phi = 0.731;
        let q = Quat::from_axis_angle([0.0, 0.0, 1.0], phi);
        let d = wigner_d(4, q);
        for i in 0..5 {
            let m = i as f64 - 2.0;
            let expect = Complex64::from_polar(1.0, -m * phi);
            assert!((d[(i, i)] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn spin_one_matches_rotation_in_spherical_basis() {
        // Characters: tr D^1 = 1 + 2cos θ = tr R.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let q = random_quat(&mut rng);
            let tr_d = wigner_d(2, q).trace();
            let tr_r = q.to_rotation().trace();
            assert_relative_eq!(tr_d.re, tr_r, epsilon = 1e-13);
            assert!(tr_d.im.abs() < 1e-13);
        }
    }

    #[test]
    fn rotation_roundtrip_up_to_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let q = random_quat(&mut rng);
            let back = Quat::from_rotation(&q.to_rotation());
            let same = (0..4).all(|i| (q.as_array()[i] - back.as_array()[i]).abs() < 1e-12);
            let flipped = (0..4).all(|i| (q.as_array()[i] + back.as_array()[i]).abs() < 1e-12);
            assert!(same || flipped);
        }
    }

    #[test]
    fn clebsch_gordan_known_values() {
        // ⟨½ ½; ½ −½ | 1 0⟩ = 1/√2, ⟨½ ½; ½ −½ | 0 0⟩ = 1/√2
        assert_relative_eq!(
            clebsch_gordan(1, 1, 1, -1, 2, 0),
            0.5f64.sqrt(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            clebsch_gordan(1, 1, 1, -1, 0, 0),
            0.5f64.sqrt(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            clebsch_gordan(1, -1, 1, 1, 0, 0),
            -(0.5f64.sqrt()),
            epsilon = 1e-15
        );
        // ⟨1 1; 1 −1 | 0 0⟩ = 1/√3
        assert_relative_eq!(
            clebsch_gordan(2, 2, 2, -2, 0, 0),
            (1.0f64 / 3.0).sqrt(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            clebsch_gordan(2, 0, 2, 0, 0, 0),
            -(1.0f64 / 3.0).sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn clebsch_gordan_orthonormality() {
        for j1 in 0..=4i64 {
            for j2 in 0..=4i64 {
                let mut jj = (j1 - j2).abs();
                while jj <= j1 + j2 {
                    let mut mm = -jj;
                    while mm <= jj {
                        let mut norm = 0.0;
                        let mut m1 = -j1;
                        while m1 <= j1 {
                            let c = clebsch_gordan(j1, m1, j2, mm - m1, jj, mm);
                            norm += c * c;
                            m1 += 2;
                        }
                        assert_relative_eq!(norm, 1.0, epsilon = 1e-13);
                        mm += 2;
                    }
                    jj += 2;
                }
            }
        }
    }

    #[test]
    fn coupled_state_is_invariant_under_diagonal_action() {
        // The J = 0 state of j ⊗ j is fixed by D^j(h) ⊗ D^j(h).
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let j2 = 3usize;
        let n = j2 + 1;
        let mut xi = nalgebra::DVector::<Complex64>::zeros(n * n);
        for a in 0..n {
            for c in 0..n {
                let ma = 2 * a as i64 - j2 as i64;
                let mc = 2 * c as i64 - j2 as i64;
                xi[a * n + c] =
                    Complex64::new(clebsch_gordan(j2 as i64, ma, j2 as i64, mc, 0, 0), 0.0);
            }
        }
        for _ in 0..10 {
            let h = random_quat(&mut rng);
            let d = wigner_d(j2, h);
            let big = d.kronecker(&d);
            assert!((big * &xi - &xi).norm() < 1e-13);
        }
    }
}
