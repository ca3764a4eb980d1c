//! Probability Haar quadrature on K = SO(d+1) and M = SO(d) for d ≤ 3.
//!
//! Every node carries both its matrix and compact coordinates (an angle, a
//! unit quaternion, or a quaternion pair) so representation matrices can be
//! evaluated without re-deriving them from the matrix.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3};

use crate::error::{Error, Result};
use crate::group::{embed_k_unchecked, quaternions_to_so4, so4_to_quaternions, GroupElement};
use crate::special::{composite_legendre, gauss_legendre, graded_breaks};
use crate::su2::Quat;

/// Compact coordinates of an element of K.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KCoord {
    /// Rotation by θ in the (x_1, p) plane (d = 1).
    Circle(f64),
    /// SU(2) lift of an SO(3) element (d = 2).
    Su2(Quat),
    /// Pair (l, r) with x ↦ l x r̄ (d = 3).
    Su2Pair(Quat, Quat),
}

#[derive(Clone, Debug)]
pub struct KPoint {
    pub elem: GroupElement,
    pub coord: KCoord,
}

impl KPoint {
    pub fn from_element(elem: GroupElement) -> Result<Self> {
        let coord = k_coord(&elem)?;
        Ok(KPoint { elem, coord })
    }

    pub fn from_coord(d: usize, coord: KCoord) -> Self {
        KPoint {
            elem: coord_to_element(d, coord),
            coord,
        }
    }
}

/// Compact coordinates of an element of K (matrix must lie in K).
pub fn k_coord(g: &GroupElement) -> Result<KCoord> {
    let r = g.rotation_block();
    match g.d {
        1 => Ok(KCoord::Circle(r[(1, 0)].atan2(r[(0, 0)]))),
        2 => Ok(KCoord::Su2(Quat::from_rotation(&Matrix3::from_fn(
            |i, j| r[(i, j)],
        )))),
        3 => {
            let (l, q) = so4_to_quaternions(&r);
            Ok(KCoord::Su2Pair(l, q))
        }
        d => Err(Error::Unsupported(format!("K coordinates for d = {d}"))),
    }
}

pub fn coord_to_element(d: usize, coord: KCoord) -> GroupElement {
    let rot = match coord {
        KCoord::Circle(t) => DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]),
        KCoord::Su2(q) => {
            let m = q.to_rotation();
            DMatrix::from_fn(3, 3, |i, j| m[(i, j)])
        }
        KCoord::Su2Pair(l, r) => quaternions_to_so4(l, r),
    };
    debug_assert_eq!(rot.nrows(), d + 1);
    embed_k_unchecked(&rot, d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridGroup {
    K,
    M,
}

#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    pub d: usize,
    pub group: GridGroup,
    pub nodes: Vec<KPoint>,
    pub weights: Vec<f64>,
    /// Largest t1 such that products of two matrix coefficients of K-types
    /// with first coordinate ≤ degree are integrated exactly.
    pub degree: usize,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// ∫ f with the grid weights.
    pub fn integrate<T, F>(&self, f: F) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: Fn(&KPoint) -> T,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::default(), |acc, (p, &w)| acc + f(p) * w)
    }
}

fn check_level(level: usize) -> Result<()> {
    if level < 2 || !level.is_power_of_two() {
        return Err(Error::Quadrature(format!(
            "level {level} must be a power of two ≥ 2"
        )));
    }
    Ok(())
}

fn qz(angle: f64) -> Quat {
    Quat::from_axis_angle([0.0, 0.0, 1.0], angle)
}

fn qy(angle: f64) -> Quat {
    Quat::from_axis_angle([0.0, 1.0, 0.0], angle)
}

/// Euler grid on SU(2): α, γ uniform on [0, 4π), cos β Gauss–Legendre.
fn su2_euler(level: usize) -> (Vec<Quat>, Vec<f64>) {
    let gl = gauss_legendre(level / 2);
    let n = level as f64;
    let mut qs = Vec::with_capacity(level * level * level / 2);
    let mut ws = Vec::with_capacity(qs.capacity());
    for i in 0..level {
        let alpha = 4.0 * PI * i as f64 / n;
        for (x, wb) in gl.nodes.iter().zip(&gl.weights) {
            let beta = x.acos();
            for k in 0..level {
                let gamma = 4.0 * PI * k as f64 / n;
                qs.push(qz(alpha).mul(qy(beta)).mul(qz(gamma)));
                ws.push(0.5 * wb / (n * n));
            }
        }
    }
    (qs, ws)
}

/// Haar quadrature on K = SO(d+1) at a power-of-two `level`.
///
/// d = 1: `level` equispaced angles. d = 2: Euler angles z-y-z with α, γ on
/// `level` points and `level/2` Gauss–Legendre nodes in cos β. d = 3: product
/// of two SU(2) Euler grids through SU(2) × SU(2) → SO(4).
pub fn k_quadrature(d: usize, level: usize) -> Result<QuadratureGrid> {
    check_level(level)?;
    let n = level as f64;
    let (nodes, weights, degree) = match d {
        1 => {
            let nodes = (0..level)
                .map(|i| KPoint::from_coord(1, KCoord::Circle(2.0 * PI * i as f64 / n)))
                .collect();
            (nodes, vec![1.0 / n; level], (level - 1) / 2)
        }
        2 => {
            let gl = gauss_legendre(level / 2);
            let mut nodes = Vec::with_capacity(level * level * level / 2);
            let mut weights = Vec::with_capacity(nodes.capacity());
            for i in 0..level {
                let alpha = 2.0 * PI * i as f64 / n;
                for (x, wb) in gl.nodes.iter().zip(&gl.weights) {
                    let beta = x.acos();
                    for k in 0..level {
                        let gamma = 2.0 * PI * k as f64 / n;
                        let q = qz(alpha).mul(qy(beta)).mul(qz(gamma));
                        nodes.push(KPoint::from_coord(2, KCoord::Su2(q)));
                        weights.push(0.5 * wb / (n * n));
                    }
                }
            }
            (nodes, weights, (level - 1) / 2)
        }
        3 => {
            if level > 8 {
                return Err(Error::Quadrature(
                    "d = 3 grids are limited to level 8".into(),
                ));
            }
            let (qs, ws) = su2_euler(level);
            let mut nodes = Vec::with_capacity(qs.len() * qs.len());
            let mut weights = Vec::with_capacity(qs.len() * qs.len());
            for (l, wl) in qs.iter().zip(&ws) {
                for (r, wr) in qs.iter().zip(&ws) {
                    nodes.push(KPoint::from_coord(3, KCoord::Su2Pair(*l, *r)));
                    weights.push(wl * wr);
                }
            }
            // α-frequencies up to 2 t1 must stay below level/2.
            (nodes, weights, (level / 2 - 1) / 2)
        }
        _ => return Err(Error::Unsupported(format!("K quadrature for d = {d}"))),
    };
    Ok(QuadratureGrid {
        d,
        group: GridGroup::K,
        nodes,
        weights,
        degree,
    })
}

/// Haar quadrature on M = SO(d), embedded in K.
pub fn m_quadrature(d: usize, level: usize) -> Result<QuadratureGrid> {
    check_level(level)?;
    let n = level as f64;
    let (nodes, weights) = match d {
        1 => (vec![KPoint::from_coord(1, KCoord::Circle(0.0))], vec![1.0]),
        2 => {
            let nodes = (0..level)
                .map(|i| KPoint::from_coord(2, KCoord::Su2(qz(2.0 * PI * i as f64 / n))))
                .collect();
            (nodes, vec![1.0 / n; level])
        }
        3 => {
            let (qs, ws) = su2_euler(level);
            let nodes = qs
                .iter()
                .map(|h| KPoint::from_coord(3, KCoord::Su2Pair(*h, *h)))
                .collect();
            (nodes, ws)
        }
        _ => return Err(Error::Unsupported(format!("M quadrature for d = {d}"))),
    };
    Ok(QuadratureGrid {
        d,
        group: GridGroup::M,
        nodes,
        weights,
        degree: (level - 1) / 2,
    })
}

/// K quadrature refined near the base point for integrands concentrated on
/// a cap of angular radius ~ `scale` around e (boosts a_t with e^{−t} ~ scale).
///
/// d = 1: composite Gauss–Legendre in θ, geometric panels around 0.
/// d = 2: α, γ uniform on `level` points, β composite Gauss–Legendre
/// graded at β = 0 against sin β dβ / 2.
pub fn k_quadrature_graded(d: usize, level: usize, scale: f64) -> Result<QuadratureGrid> {
    graded(d, level, level, scale)
}

/// Graded grid for right-M-invariant integrands: the last Euler angle is
/// dropped (d = 2), leaving a quadrature on K/M with the same weights.
pub fn k_quadrature_graded_cosets(d: usize, level: usize, scale: f64) -> Result<QuadratureGrid> {
    graded(d, level, 1, scale)
}

fn graded(d: usize, level: usize, gamma_points: usize, scale: f64) -> Result<QuadratureGrid> {
    check_level(level)?;
    let per_panel = 16;
    let first = (scale / 4.0).clamp(1e-12, 0.25);
    let n = level as f64;
    let (nodes, weights) = match d {
        1 => {
            let half = graded_breaks(first, PI, 0.25);
            let mut breaks: Vec<f64> = half.iter().rev().map(|b| -b).collect();
            breaks.extend(half.iter().skip(1));
            let rule = composite_legendre(&breaks, per_panel);
            let nodes = rule
                .nodes
                .iter()
                .map(|t| KPoint::from_coord(1, KCoord::Circle(*t)))
                .collect();
            let weights = rule.weights.iter().map(|w| w / (2.0 * PI)).collect();
            (nodes, weights)
        }
        2 => {
            let rule = composite_legendre(&graded_breaks(first, PI, 0.25), per_panel);
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            for i in 0..level {
                let alpha = 2.0 * PI * i as f64 / n;
                for (beta, wb) in rule.nodes.iter().zip(&rule.weights) {
                    for k in 0..gamma_points {
                        let gamma = 2.0 * PI * k as f64 / gamma_points as f64;
                        let q = qz(alpha).mul(qy(*beta)).mul(qz(gamma));
                        nodes.push(KPoint::from_coord(2, KCoord::Su2(q)));
                        weights.push(0.5 * beta.sin() * wb / (n * gamma_points as f64));
                    }
                }
            }
            (nodes, weights)
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "graded K quadrature for d = {d}"
            )))
        }
    };
    Ok(QuadratureGrid {
        d,
        group: GridGroup::K,
        nodes,
        weights,
        degree: (level - 1) / 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for d in 1..=3 {
            let level = if d == 3 { 4 } else { 16 };
            let k = k_quadrature(d, level).unwrap();
            assert!((k.weight_sum() - 1.0).abs() < 1e-12);
            let m = m_quadrature(d, 8).unwrap();
            assert!((m.weight_sum() - 1.0).abs() < 1e-12);
        }
        for d in 1..=2 {
            let g = k_quadrature_graded(d, 8, 1e-3).unwrap();
            assert!((g.weight_sum() - 1.0).abs() < 1e-12);
            let c = k_quadrature_graded_cosets(d, 8, 1e-3).unwrap();
            assert!((c.weight_sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nodes_lie_in_k_and_m() {
        for d in 1..=3 {
            let k = k_quadrature(d, 4).unwrap();
            for p in k.nodes.iter().step_by(7) {
                assert!(p.elem.is_in_k(1e-12));
                assert!(p.elem.check().is_ok());
            }
            let m = m_quadrature(d, 4).unwrap();
            for p in &m.nodes {
                let r = p.elem.rotation_block();
                assert!((r[(d, d)] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coordinates_roundtrip() {
        for d in 1..=3 {
            let k = k_quadrature(d, 4).unwrap();
            for p in k.nodes.iter().step_by(5) {
                let back = coord_to_element(d, k_coord(&p.elem).unwrap());
                assert!(back.max_abs_diff(&p.elem) < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_levels_and_dimensions() {
        assert!(k_quadrature(1, 12).is_err());
        assert!(k_quadrature(4, 8).is_err());
        assert!(m_quadrature(2, 0).is_err());
        assert!(k_quadrature_graded(3, 8, 0.1).is_err());
    }

    #[test]
    fn d2_grid_size_at_level_32() {
        assert_eq!(k_quadrature(2, 32).unwrap().len(), 16384);
    }

    #[test]
    fn graded_circle_integrates_peaked_function() {
        // ∫ (cosh t − sinh t cos θ)^{-1} dθ/2π = 1, written without cancellation
        let t: f64 = 8.0;
        let g = k_quadrature_graded(1, 2, (-t).exp()).unwrap();
        let val: f64 = g.integrate(|p| match p.coord {
            KCoord::Circle(th) => 1.0 / ((-t).exp() + 2.0 * t.sinh() * (th / 2.0).sin().powi(2)),
            _ => unreachable!(),
        });
        assert!((val - 1.0).abs() < 1e-12, "{val}");
    }
}
