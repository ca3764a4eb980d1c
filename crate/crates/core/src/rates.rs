//! Mixing exponents from the spectral data (δ, s₁, λ_i) of a hyperbolic
//! manifold: η, η_s, λ(δ, r), β and the lattice variants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Critical exponent δ, second resonance s₁ and optional Laplace eigenvalues
/// λ₀ < λ₁ ≤ … below d²/4.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub d: usize,
    pub delta: f64,
    pub s1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
}

impl SpectralData {
    pub fn new(d: usize, delta: f64, s1: f64, eigenvalues: Option<Vec<f64>>) -> Result<Self> {
        let data = SpectralData {
            d,
            delta,
            s1,
            eigenvalues,
        };
        data.validate()?;
        Ok(data)
    }

    /// s₁ = d/2 when no eigenvalue lies strictly between λ₀ and d²/4.
    pub fn without_exceptional(d: usize, delta: f64) -> Result<Self> {
        SpectralData::new(d, delta, d as f64 / 2.0, None)
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.d as f64 / 2.0;
        if self.d == 0 {
            return Err(Error::InvalidSpectral("d must be ≥ 1".into()));
        }
        if !(self.delta > h && self.delta <= self.d as f64) {
            return Err(Error::InvalidSpectral(format!(
                "delta = {} outside (d/2, d]",
                self.delta
            )));
        }
        if !(self.s1 >= h && self.s1 < self.delta) {
            return Err(Error::InvalidSpectral(format!(
                "s1 = {} outside [d/2, delta)",
                self.s1
            )));
        }
        Ok(())
    }

    pub fn is_lattice(&self) -> bool {
        self.delta == self.d as f64
    }
}

/// λ = s(d − s).
pub fn lambda_of_s(s: f64, d: usize) -> f64 {
    s * (d as f64 - s)
}

/// The root s ≥ d/2 of s(d − s) = λ.
pub fn s_of_lambda(lambda: f64, d: usize) -> Result<f64> {
    let h = d as f64 / 2.0;
    let disc = h * h - lambda;
    if !(disc >= 0.0) {
        return Err(Error::InvalidSpectral(format!("λ = {lambda} exceeds d²/4")));
    }
    Ok(h + disc.sqrt())
}

/// η_s = min(2s − d, 1).
pub fn eta_s(s: f64, d: usize) -> Result<f64> {
    if !(s > d as f64 / 2.0) {
        return Err(Error::InvalidSpectral(format!(
            "η_s needs s > d/2, got s = {s}"
        )));
    }
    Ok((2.0 * s - d as f64).min(1.0))
}

/// η = min(δ − s₁, 1).
pub fn mixing_eta(data: &SpectralData) -> Result<f64> {
    data.validate()?;
    Ok((data.delta - data.s1).min(1.0))
}

/// s − d − η_s, which is −s up to (d+1)/2 and s − d − 1 beyond.
fn decay_exponent(s: f64, d: usize) -> f64 {
    let d = d as f64;
    if s <= (d + 1.0) / 2.0 {
        -s
    } else {
        s - d - 1.0
    }
}

/// max of s − d − η_s over [a, b]: the function is convex piecewise linear,
/// so the maximum sits at an endpoint.
fn max_decay_exponent(a: f64, b: f64, d: usize) -> f64 {
    decay_exponent(a, d).max(decay_exponent(b, d))
}

/// λ(δ, r) = max over s ∈ [s₁ + r, δ] of s − d − η_s.
pub fn lambda_rate(data: &SpectralData, r: f64) -> Result<f64> {
    data.validate()?;
    if !(r > 0.0 && r < data.delta - data.s1) {
        return Err(Error::InvalidSpectral(format!(
            "r = {r} outside (0, δ − s1)"
        )));
    }
    Ok(max_decay_exponent(data.s1 + r, data.delta, data.d))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BetaReport {
    pub beta: f64,
    /// min{1, δ − s₁} − (ξ + r), or min{d − s₁, 2} − (ξ + r) for lattices.
    pub lower_bound: f64,
    /// The exponents whose minimum is β.
    pub terms: Vec<f64>,
    /// λ(δ, r), or the lattice bound α when δ = d (None if its range is empty).
    pub lambda: Option<f64>,
    pub lattice: bool,
}

/// β = min{η_δ, δ − s₁ − r − ξ, δ − d − λ(δ, r)}.
///
/// For δ = d the main term is exact and non-spherical complementary series
/// stop at s = d − 1, so β = min{d − s₁ − r − ξ, −α} with
/// α = max over s ∈ [s₁ + r, d − 1] of s − d − η_s.
pub fn beta_rate(data: &SpectralData, r: f64, xi: f64) -> Result<BetaReport> {
    data.validate()?;
    if !(r > 0.0 && xi > 0.0) {
        return Err(Error::InvalidSpectral(format!(
            "r = {r} and ξ = {xi} must be positive"
        )));
    }
    let gap = data.delta - data.s1;
    let report = if data.is_lattice() {
        let d = data.d as f64;
        let hi = d - 1.0;
        let a = data.s1 + r;
        let alpha = (a <= hi).then(|| max_decay_exponent(a, hi, data.d));
        let mut terms = vec![gap - r - xi];
        if let Some(alpha) = alpha {
            terms.push(-alpha);
        }
        let beta = terms.iter().copied().fold(f64::INFINITY, f64::min);
        BetaReport {
            beta,
            lower_bound: gap.min(2.0) - (xi + r),
            terms,
            lambda: alpha,
            lattice: true,
        }
    } else {
        let lambda = lambda_rate(data, r)?;
        let terms = vec![
            eta_s(data.delta, data.d)?,
            gap - r - xi,
            data.delta - data.d as f64 - lambda,
        ];
        let beta = terms.iter().copied().fold(f64::INFINITY, f64::min);
        BetaReport {
            beta,
            lower_bound: gap.min(1.0) - (xi + r),
            terms,
            lambda: Some(lambda),
            lattice: false,
        }
    };
    if report.beta < report.lower_bound - 1e-12 {
        return Err(Error::Degenerate(format!(
            "β = {} below its lower bound {}",
            report.beta, report.lower_bound
        )));
    }
    Ok(report)
}

/// Rate for lattices: min(d − s₁, 2), or d − s₁ when no non-spherical
/// complementary series with s > s₁ + 1 occurs.
pub fn lattice_eta(data: &SpectralData, no_nonspherical_above: bool) -> Result<f64> {
    data.validate()?;
    if !data.is_lattice() {
        return Err(Error::InvalidSpectral(format!(
            "lattice rate needs δ = d, got δ = {}",
            data.delta
        )));
    }
    let gap = data.d as f64 - data.s1;
    Ok(if no_nonspherical_above {
        gap
    } else {
        gap.min(2.0)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenvalueCheck {
    pub index: usize,
    pub lambda: f64,
    /// d/2 + √(d²/4 − λ) when λ ≤ d²/4.
    pub s: Option<f64>,
    pub in_window: bool,
    pub ordered: bool,
    /// Agreement with δ (index 0) or s₁ (index 1); true for later indices.
    pub consistent: bool,
    pub issues: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaxPhillipsReport {
    pub d: usize,
    pub items: Vec<EigenvalueCheck>,
    pub pass: bool,
}

/// Checks λ₀ = δ(d − δ) < λ₁ ≤ … < d²/4 and λ₁ = s₁(d − s₁), item by item.
pub fn validate_lax_phillips(data: &SpectralData) -> Result<LaxPhillipsReport> {
    data.validate()?;
    let eigs = data
        .eigenvalues
        .as_ref()
        .ok_or_else(|| Error::InvalidSpectral("eigenvalue list required".into()))?;
    if eigs.is_empty() {
        return Err(Error::InvalidSpectral("eigenvalue list is empty".into()));
    }
    let d = data.d;
    let top = (d * d) as f64 / 4.0;
    let tol = 1e-12;
    let mut items = Vec::with_capacity(eigs.len());
    for (i, &lambda) in eigs.iter().enumerate() {
        let mut issues = Vec::new();
        let in_window = (0.0..top).contains(&lambda);
        if !in_window {
            issues.push(format!("λ_{i} = {lambda} outside [0, {top})"));
        }
        let ordered = match i {
            0 => true,
            1 => lambda > eigs[0],
            _ => lambda >= eigs[i - 1],
        };
        if !ordered {
            issues.push(format!("λ_{i} = {lambda} out of order"));
        }
        let s = s_of_lambda(lambda, d).ok();
        let consistent = match (i, s) {
            (0, Some(s)) => {
                (s - data.delta).abs() <= tol && (lambda_of_s(data.delta, d) - lambda).abs() <= tol
            }
            (1, Some(s)) => (s - data.s1).abs() <= tol,
            (_, Some(_)) => true,
            (_, None) => false,
        };
        if !consistent {
            let expected = if i == 0 { "δ" } else { "s1" };
            issues.push(format!("λ_{i} = {lambda} inconsistent with {expected}"));
        }
        items.push(EigenvalueCheck {
            index: i,
            lambda,
            s,
            in_window,
            ordered,
            consistent,
            issues,
        });
    }
    if eigs.len() == 1 && data.s1 != d as f64 / 2.0 {
        items[0]
            .issues
            .push(format!("no λ₁ given but s1 = {} ≠ d/2", data.s1));
        items[0].consistent = false;
    }
    let pass = items.iter().all(|it| it.issues.is_empty());
    Ok(LaxPhillipsReport { d, items, pass })
}

/// Input of the rate calculator: s₁ may be omitted, r and ξ default to
/// min(0.05, (δ − s₁)/4).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateInput {
    pub d: usize,
    pub delta: f64,
    #[serde(default)]
    pub s1: Option<f64>,
    #[serde(default)]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub xi: Option<f64>,
    #[serde(default)]
    pub no_nonspherical_above: bool,
}

impl RateInput {
    /// s₁ from the input, else from λ₁, else d/2.
    pub fn spectral_data(&self) -> Result<SpectralData> {
        let s1 = match (self.s1, &self.eigenvalues) {
            (Some(s1), _) => s1,
            (None, Some(e)) if e.len() > 1 => s_of_lambda(e[1], self.d)?,
            _ => self.d as f64 / 2.0,
        };
        SpectralData::new(self.d, self.delta, s1, self.eigenvalues.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub data: SpectralData,
    pub r: f64,
    pub xi: f64,
    /// min{1, δ − s₁}, the r, ξ → 0 limit of β (lattice rate when δ = d).
    pub eta: f64,
    pub eta_delta: f64,
    pub lambda: Option<f64>,
    pub beta: f64,
    pub lower_bound: f64,
    pub lax_phillips: Option<LaxPhillipsReport>,
    pub diagnostics: Vec<String>,
}

pub fn rate_report(input: &RateInput) -> Result<RateReport> {
    let data = input.spectral_data()?;
    let default = (0.05f64).min((data.delta - data.s1) / 4.0);
    let r = input.r.unwrap_or(default);
    let xi = input.xi.unwrap_or(default);
    let beta = beta_rate(&data, r, xi)?;
    let mut diagnostics = vec![format!("β terms: {:?}", beta.terms)];
    let eta = if data.is_lattice() {
        diagnostics.push("lattice branch (δ = d)".into());
        lattice_eta(&data, input.no_nonspherical_above)?
    } else {
        mixing_eta(&data)?
    };
    diagnostics.push("the exponent for BMS mixing is not computed".into());
    let lax_phillips = match &data.eigenvalues {
        Some(_) => {
            let lp = validate_lax_phillips(&data)?;
            for it in &lp.items {
                diagnostics.extend(it.issues.iter().cloned());
            }
            Some(lp)
        }
        None => None,
    };
    Ok(RateReport {
        eta,
        eta_delta: eta_s(data.delta, data.d)?,
        lambda: beta.lambda,
        beta: beta.beta,
        lower_bound: beta.lower_bound,
        r,
        xi,
        data,
        lax_phillips,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn data(d: usize, delta: f64, s1: f64) -> SpectralData {
        SpectralData::new(d, delta, s1, None).unwrap()
    }

    fn brute_lambda(d: usize, a: f64, b: f64) -> f64 {
        let n = 100_000;
        (0..=n)
            .map(|i| {
                let s = a + (b - a) * i as f64 / n as f64;
                s - d as f64 - (2.0 * s - d as f64).min(1.0)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_s(0.75, 1).unwrap(), 0.5);
        assert_eq!(eta_s(1.9, 2).unwrap(), 1.0);
        assert_eq!(eta_s(1.5, 2).unwrap(), 1.0);
        assert!(eta_s(0.5, 1).is_err());
        assert!((mixing_eta(&data(1, 0.9, 0.6)).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(mixing_eta(&data(3, 3.0, 1.5)).unwrap(), 1.0);
    }

    #[test]
    fn lambda_examples() {
        assert!((lambda_rate(&data(1, 0.9, 0.6), 0.1).unwrap() + 0.7).abs() < 1e-12);
        assert!((lambda_rate(&data(2, 1.9, 1.4), 0.1).unwrap() + 1.1).abs() < 1e-12);
        assert!((lambda_rate(&data(2, 1.9, 1.6), 0.1).unwrap() + 1.1).abs() < 1e-12);
        assert!(lambda_rate(&data(1, 0.9, 0.6), 0.35).is_err());
        assert!((brute_lambda(1, 0.7, 0.9) + 0.7).abs() < 1e-9);
    }

    #[test]
    fn beta_worked_example() {
        let b = beta_rate(&data(1, 0.9, 0.6), 0.05, 0.05).unwrap();
        assert!((b.beta - 0.2).abs() < 1e-12);
        assert!((b.lower_bound - 0.2).abs() < 1e-12);
        assert!((b.terms[0] - 0.8).abs() < 1e-12);
        assert!((b.terms[2] - 0.55).abs() < 1e-12);
    }

    #[test]
    fn lattice_examples() {
        assert!((lattice_eta(&data(2, 2.0, 1.2), false).unwrap() - 0.8).abs() < 1e-15);
        assert!((lattice_eta(&data(3, 3.0, 1.5), false).unwrap() - 1.5).abs() < 1e-15);
        assert!((lattice_eta(&data(2, 2.0, 1.2), true).unwrap() - 0.8).abs() < 1e-15);
        assert!(lattice_eta(&data(2, 1.9, 1.2), false).is_err());
        let b = beta_rate(&data(3, 3.0, 1.5), 0.05, 0.05).unwrap();
        assert!(b.lattice);
        assert!((b.beta - 1.4).abs() < 1e-12);
    }

    #[test]
    fn lax_phillips_checks() {
        let d = SpectralData::new(1, 0.9, 0.6, Some(vec![0.09, 0.24])).unwrap();
        let rep = validate_lax_phillips(&d).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!((rep.items[0].lambda - 0.09).abs() < 1e-15);
        let bad = SpectralData::new(1, 0.9, 0.6, Some(vec![0.09, 0.25])).unwrap();
        let rep = validate_lax_phillips(&bad).unwrap();
        assert!(!rep.pass);
        assert!(!rep.items[1].in_window);
        let unordered = SpectralData::new(2, 1.9, 1.4, Some(vec![0.19, 0.1])).unwrap();
        assert!(!validate_lax_phillips(&unordered).unwrap().pass);
        assert!(validate_lax_phillips(&data(1, 0.9, 0.6)).is_err());
    }

    #[test]
    fn rate_input_defaults() {
        let input: RateInput =
            serde_json::from_str(r#"{"d": 1, "delta": 0.9, "eigenvalues": [0.09, 0.24]}"#).unwrap();
        let rep = rate_report(&input).unwrap();
        assert!((rep.data.s1 - 0.6).abs() < 1e-12);
        assert!((rep.r - 0.05).abs() < 1e-15);
        assert!((rep.beta - 0.2).abs() < 1e-12);
        let bare: RateInput = serde_json::from_str(r#"{"d": 2, "delta": 1.5}"#).unwrap();
        assert_eq!(bare.spectral_data().unwrap().s1, 1.0);
    }

    proptest! {
        #[test]
        fn s_lambda_roundtrip(d in 1usize..4, f in 0.001f64..0.999) {
            let s = d as f64 / 2.0 * (1.0 + f);
            let back = s_of_lambda(lambda_of_s(s, d), d).unwrap();
            prop_assert!((back - s).abs() < 1e-7);
        }

        #[test]
        fn mixing_eta_is_monotone(d in 1usize..4, a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
            let h = d as f64 / 2.0;
            let delta1 = h + h * (0.2 + 0.8 * a);
            let delta2 = delta1 + (d as f64 - delta1) * b;
            let s1 = h + (delta1 - h) * c * 0.99;
            let e1 = mixing_eta(&data(d, delta1, s1)).unwrap();
            let e2 = mixing_eta(&data(d, delta2, s1)).unwrap();
            prop_assert!(e2 >= e1);
            let s1b = s1 + (delta1 - s1) * 0.5;
            prop_assert!(mixing_eta(&data(d, delta1, s1b)).unwrap() <= e1);
        }

        #[test]
        fn eta_s_piecewise_linear(d in 1usize..4, f in 0.01f64..0.99) {
            let h = d as f64 / 2.0;
            let s = h + h * f;
            let e = eta_s(s, d).unwrap();
            let eps = 1e-6;
            let e2 = eta_s(s + eps, d).unwrap();
            let slope = (e2 - e) / eps;
            let bp = (d as f64 + 1.0) / 2.0;
            if s + eps < bp { prop_assert!((slope - 2.0).abs() < 1e-6); }
            if s > bp { prop_assert!(slope.abs() < 1e-6); }
        }
    }
}
