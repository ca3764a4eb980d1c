//! Highest weights of SO(n): validation, branching to SO(n−1), duals,
//! dimensions, Casimir scalars and Sobolev weights.
//!
//! K-types of the model are kept in the two-coordinate form `(t1, t2)`
//! regardless of `d`; for `d ≤ 2` the second coordinate is always zero.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest weight of an irreducible representation of SO(n).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WeightLabel {
    pub n: usize,
    pub entries: Vec<i64>,
}

impl WeightLabel {
    pub fn new(n: usize, entries: Vec<i64>) -> Result<Self> {
        if validate_weight(n, &entries)? {
            Ok(WeightLabel { n, entries })
        } else {
            Err(Error::InvalidWeight(format!(
                "{entries:?} is not dominant for SO({n})"
            )))
        }
    }

    pub fn trivial(n: usize) -> Self {
        WeightLabel {
            n,
            entries: vec![0; n / 2],
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    /// First entry, or 0 for SO(1).
    pub fn first(&self) -> i64 {
        self.entries.first().copied().unwrap_or(0)
    }
}

impl fmt::Display for WeightLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// K-type in the two-coordinate form `(t1, t2, 0, …)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KType {
    pub t1: i64,
    pub t2: i64,
}

impl KType {
    pub const fn new(t1: i64, t2: i64) -> Self {
        KType { t1, t2 }
    }

    /// Highest weight of SO(d+1) described by this K-type.
    pub fn weight(&self, d: usize) -> WeightLabel {
        let n = d + 1;
        let mut entries = vec![0; n / 2];
        if !entries.is_empty() {
            entries[0] = self.t1;
        }
        if entries.len() > 1 {
            entries[1] = self.t2;
        }
        WeightLabel { n, entries }
    }
}

impl fmt::Display for KType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.t1, self.t2)
    }
}

/// Parameters (d, υ, s) of the representation U(υ, s) of SO°(d+1, 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompSerLabel {
    pub d: usize,
    pub upsilon: WeightLabel,
    pub s: f64,
}

impl CompSerLabel {
    /// Complementary series parameters: requires d/2 < s < d.
    pub fn new(d: usize, upsilon: WeightLabel, s: f64) -> Result<Self> {
        if !(s > d as f64 / 2.0 && s < d as f64) {
            return Err(Error::InvalidLabel(format!(
                "s = {s} outside (d/2, d) for d = {d}"
            )));
        }
        Self::standard(d, upsilon, s)
    }

    /// Parameters of the standard representation U^s on L²(K:υ) for any
    /// finite real s.
    pub fn standard(d: usize, upsilon: WeightLabel, s: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidLabel("d must be at least 1".into()));
        }
        if upsilon.n != d {
            return Err(Error::InvalidLabel(format!(
                "υ labels SO({}), expected SO({d})",
                upsilon.n
            )));
        }
        if !validate_weight(d, &upsilon.entries)? {
            return Err(Error::InvalidLabel(format!(
                "υ = {upsilon} is not dominant"
            )));
        }
        if !s.is_finite() {
            return Err(Error::InvalidLabel(format!("s = {s} is not finite")));
        }
        Ok(CompSerLabel { d, upsilon, s })
    }

    /// Label with υ = (u, 0, …, 0).
    pub fn with_upsilon(d: usize, u: i64, s: f64) -> Result<Self> {
        let mut entries = vec![0; d / 2];
        if let Some(e) = entries.first_mut() {
            *e = u;
        } else if u != 0 {
            return Err(Error::InvalidLabel(
                "SO(1) only has the trivial weight".into(),
            ));
        }
        let ups = WeightLabel::new(d, entries)?;
        CompSerLabel::new(d, ups, s)
    }

    /// Same (d, υ) with a different s, without the complementary series bounds.
    pub fn with_s(&self, s: f64) -> Result<Self> {
        CompSerLabel::standard(self.d, self.upsilon.clone(), s)
    }

    pub fn upsilon_first(&self) -> i64 {
        self.upsilon.first()
    }
}

/// Dominance check for a weight of SO(n).
pub fn validate_weight(n: usize, entries: &[i64]) -> Result<bool> {
    if n == 0 {
        return Err(Error::InvalidWeight("SO(0) is not a group here".into()));
    }
    let m = n / 2;
    if entries.len() != m {
        return Err(Error::InvalidWeight(format!(
            "SO({n}) weights have {m} entries, got {}",
            entries.len()
        )));
    }
    if m == 0 {
        return Ok(true);
    }
    let decreasing = entries.windows(2).all(|w| w[0] >= w[1]);
    let ok = if n % 2 == 0 {
        m == 1 || (decreasing && entries[m - 2] >= entries[m - 1].abs())
    } else {
        decreasing && entries[m - 1] >= 0
    };
    Ok(ok)
}

fn checked(n: usize, tau: &WeightLabel) -> Result<()> {
    if tau.n != n {
        return Err(Error::InvalidWeight(format!(
            "weight labels SO({}), expected SO({n})",
            tau.n
        )));
    }
    if !validate_weight(n, &tau.entries)? {
        return Err(Error::InvalidWeight(format!(
            "{tau} is not dominant for SO({n})"
        )));
    }
    Ok(())
}

/// Restriction of the SO(d+1) type `tau` to SO(d) by interlacing.
pub fn branch(tau: &WeightLabel, d: usize) -> Result<Vec<WeightLabel>> {
    checked(d + 1, tau)?;
    let t = &tau.entries;
    let m = d / 2;
    // Per-coordinate ranges for σ.
    let mut ranges: Vec<(i64, i64)> = Vec::with_capacity(m);
    if d % 2 == 0 {
        // SO(2m+1) → SO(2m): τ1 ≥ σ1 ≥ τ2 ≥ … ≥ τm ≥ |σm|
        for i in 0..m {
            let hi = t[i];
            let lo = if i + 1 < m { t[i + 1] } else { -t[m - 1] };
            ranges.push((lo, hi));
        }
    } else {
        // SO(2m+2) → SO(2m+1): τ1 ≥ σ1 ≥ τ2 ≥ … ≥ σm ≥ |τ_{m+1}|
        for i in 0..m {
            let hi = t[i];
            let lo = if i + 1 < m { t[i + 1] } else { t[m].abs() };
            ranges.push((lo, hi));
        }
    }
    let mut out = vec![Vec::new()];
    for &(lo, hi) in &ranges {
        let mut next = Vec::new();
        for prefix in &out {
            for v in lo..=hi {
                let mut p: Vec<i64> = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    Ok(out
        .into_iter()
        .map(|entries| WeightLabel { n: d, entries })
        .collect())
}

/// Dual representation: negate the last entry for SO(4m+2), identity otherwise.
pub fn dual(tau: &WeightLabel, n: usize) -> Result<WeightLabel> {
    checked(n, tau)?;
    let mut out = tau.clone();
    if n % 4 == 2 {
        if let Some(last) = out.entries.last_mut() {
            *last = -*last;
        }
    }
    Ok(out)
}

/// Weyl dimension formula for SO(n).
pub fn dim_weight(tau: &WeightLabel, n: usize) -> Result<usize> {
    checked(n, tau)?;
    let m = n / 2;
    let odd = n % 2 == 1;
    let rho: Vec<f64> = (0..m)
        .map(|i| (m - i) as f64 - if odd { 0.5 } else { 1.0 })
        .collect();
    let l: Vec<f64> = tau
        .entries
        .iter()
        .zip(&rho)
        .map(|(t, r)| *t as f64 + r)
        .collect();
    let mut num = 1.0;
    let mut den = 1.0;
    for i in 0..m {
        for j in i + 1..m {
            num *= l[i] * l[i] - l[j] * l[j];
            den *= rho[i] * rho[i] - rho[j] * rho[j];
        }
        if odd {
            num *= l[i];
            den *= rho[i];
        }
    }
    Ok((num / den).round() as usize)
}

/// Eigenvalue of the Casimir of K on the K-type (t1, t2) of U(υ, s).
pub fn casimir_scalar(tau: KType, d: usize) -> f64 {
    let (t1, t2, d) = (tau.t1 as f64, tau.t2 as f64, d as f64);
    t1 * t1 + t2 * t2 + (d - 1.0) * t1 + (d - 3.0) * t2
}

/// K-types (t1, t2) of U(υ, s) with |t1| ≤ cutoff, sorted by (t1, t2).
///
/// For d = 2 the K-types are ℓ ≥ |υ|, which reduces to ℓ ≥ 0 for υ = 0.
pub fn ktypes_of_compser(label: &CompSerLabel, cutoff: i64) -> Result<Vec<KType>> {
    let d = label.d;
    let ups = &label.upsilon.entries;
    if ups.iter().skip(1).any(|&e| e != 0) {
        return Err(Error::InvalidLabel(format!(
            "υ = {} has more than one nonzero entry",
            label.upsilon
        )));
    }
    let u = label.upsilon_first();
    let mut out = Vec::new();
    match d {
        1 => out.extend((-cutoff..=cutoff).map(|t| KType::new(t, 0))),
        2 => out.extend((u.abs()..=cutoff).map(|t| KType::new(t, 0))),
        3 => {
            for t1 in u..=cutoff {
                for t2 in -u..=u {
                    out.push(KType::new(t1, t2));
                }
            }
        }
        _ => {
            for t1 in u..=cutoff {
                for t2 in 0..=u {
                    out.push(KType::new(t1, t2));
                }
            }
        }
    }
    Ok(out)
}

/// Casimir Sobolev weight (1 + τ(Ω_K))^m.
pub fn sobolev_weight(tau: KType, m: u32, d: usize) -> f64 {
    (1.0 + casimir_scalar(tau, d)).powi(m as i32)
}

/// Dimension of the K-type (t1, t2) as an SO(d+1) representation.
pub fn ktype_dim(tau: KType, d: usize) -> usize {
    dim_weight(&tau.weight(d), d + 1).expect("K-types of the model are dominant")
}
