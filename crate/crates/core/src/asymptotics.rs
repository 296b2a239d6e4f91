//! Closed-form quantities: V/L/U, binary entropy and its inverse, the first
//! moment curve, the leading-order prediction, and combinatorial identities.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{choose_u128, ln_choose, pairs};
use crate::error::{domain, LabError, Result};

pub use crate::combinatorics::log_binomial;

/// A formula evaluated inside or outside its regime of definition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum FormulaValue {
    Defined(f64),
    /// The formula needs the square root or entropy inverse of an
    /// out-of-range argument at these parameters.
    Undefined,
}

pub type CurveValue = FormulaValue;

impl FormulaValue {
    pub fn value(self) -> Option<f64> {
        match self {
            FormulaValue::Defined(v) => Some(v),
            FormulaValue::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, FormulaValue::Defined(_))
    }

    fn sqrt_of(x: f64) -> Self {
        if x >= 0.0 {
            FormulaValue::Defined(x.sqrt())
        } else {
            FormulaValue::Undefined
        }
    }
}

fn check_nk(n: u64, k: u64) -> Result<()> {
    if k < 2 || k > n {
        return Err(LabError::InvalidDimension(format!("K = {k} outside [2, n = {n}]")));
    }
    Ok(())
}

/// `V = sqrt(2 C(K,2) log C(n,K))`.
pub fn v_nk(n: u64, k: u64) -> Result<FormulaValue> {
    check_nk(n, k)?;
    Ok(FormulaValue::sqrt_of(2.0 * pairs(k as usize) * ln_choose(n, k)))
}

/// `L = sqrt(2 C(K,2) log(C(n,K)/K))`.
pub fn l_nk(n: u64, k: u64) -> Result<FormulaValue> {
    check_nk(n, k)?;
    Ok(FormulaValue::sqrt_of(2.0 * pairs(k as usize) * (ln_choose(n, k) - (k as f64).ln())))
}

/// `U = sqrt(2 C(K,2) log(C(n,K)/sqrt(K log(n/K))))`.
pub fn u_nk(n: u64, k: u64) -> Result<FormulaValue> {
    check_nk(n, k)?;
    let inner = k as f64 * (n as f64 / k as f64).ln();
    if inner <= 0.0 {
        return Ok(FormulaValue::Undefined);
    }
    Ok(FormulaValue::sqrt_of(2.0 * pairs(k as usize) * (ln_choose(n, k) - 0.5 * inner.ln())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticEstimates {
    pub n: u64,
    pub k: u64,
    pub v: FormulaValue,
    pub l: FormulaValue,
    pub u: FormulaValue,
    /// `K^2/4 + K^{3/2} sqrt(log(n/K))/2`; undefined when `K = n`.
    pub leading: FormulaValue,
}

pub fn estimates(n: u64, k: u64) -> Result<AsymptoticEstimates> {
    Ok(AsymptoticEstimates {
        n,
        k,
        v: v_nk(n, k)?,
        l: l_nk(n, k)?,
        u: u_nk(n, k)?,
        leading: leading_asymptotic(n, k).map_or(FormulaValue::Undefined, FormulaValue::Defined),
    })
}

/// `K^2/4 + K^{3/2} sqrt(log(n/K))/2`.
pub fn leading_asymptotic(n: u64, k: u64) -> Result<f64> {
    if k < 2 {
        return Err(LabError::InvalidDimension(format!("K = {k} < 2")));
    }
    if k >= n {
        return Err(domain(format!("leading term needs K < n (K = {k}, n = {n})")));
    }
    let kf = k as f64;
    Ok(kf * kf / 4.0 + kf.powf(1.5) * (n as f64 / kf).ln().sqrt() / 2.0)
}

/// `h(x) = -x log x - (1-x) log(1-x)`, natural log.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("binary entropy argument {x} outside [0, 1]")));
    }
    let term = |p: f64| if p == 0.0 { 0.0 } else { -p * p.ln() };
    Ok(term(x) + term(1.0 - x))
}

/// The solution `t` in `[1/2, 1]` of `h(t) = y`, by bisection.
pub fn inverse_entropy(y: f64) -> Result<f64> {
    if !(0.0..=LN_2 + 1e-15).contains(&y) {
        return Err(domain(format!("inverse entropy argument {y} outside [0, ln 2]")));
    }
    if y >= LN_2 {
        return Ok(0.5);
    }
    if y == 0.0 {
        return Ok(1.0);
    }
    // h is decreasing on [1/2, 1].
    let (mut lo, mut hi) = (0.5f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if binary_entropy(mid)? > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Third-order expansion of `h^{-1}(log 2 - eps)` about `eps = 0`.
pub fn inverse_entropy_expansion(eps: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(domain(format!("expansion needs eps >= 0, got {eps}")));
    }
    Ok(0.5 + (eps / 2.0).sqrt() - eps.powf(1.5) / (6.0 * std::f64::consts::SQRT_2))
}

/// `log(C(K,z) C(n-K,K-z)) / (C(K,2) - C(z,2))`, the entropy deficit rate.
fn deficit_ratio(n: u64, k: u64, z: u64) -> f64 {
    let span = pairs(k as usize) - pairs(z as usize);
    (ln_choose(k, z) + ln_choose(n - k, k - z)) / span
}

fn check_curve_args(n: u64, k: u64, z: u64) -> Result<()> {
    check_nk(n, k)?;
    let z_min = k * k / n;
    if z < z_min || z > k {
        return Err(domain(format!("overlap {z} outside [{z_min}, {k}]")));
    }
    Ok(())
}

/// `Γ_K(z) = C(z,2) + h^{-1}(log 2 - ratio) (C(K,2) - C(z,2))`, with
/// `Γ_K(K) = C(K,2)`.
pub fn first_moment_curve(n: u64, k: u64, z: u64) -> Result<FormulaValue> {
    check_curve_args(n, k, z)?;
    if z == k {
        return Ok(FormulaValue::Defined(pairs(k as usize)));
    }
    let span = pairs(k as usize) - pairs(z as usize);
    let arg = LN_2 - deficit_ratio(n, k, z);
    if !(0.0..=LN_2).contains(&arg) {
        return Ok(FormulaValue::Undefined);
    }
    Ok(FormulaValue::Defined(pairs(z as usize) + inverse_entropy(arg)? * span))
}

/// `Γ_K(z+1) - Γ_K(z)`.
pub fn curve_increment(n: u64, k: u64, z: u64) -> Result<FormulaValue> {
    if z >= k {
        return Err(domain(format!("increment needs z < K (z = {z})")));
    }
    let a = first_moment_curve(n, k, z)?;
    let b = first_moment_curve(n, k, z + 1)?;
    Ok(match (a, b) {
        (FormulaValue::Defined(a), FormulaValue::Defined(b)) => FormulaValue::Defined(b - a),
        _ => FormulaValue::Undefined,
    })
}

/// Experimental Gaussian variant: `Γ_K(z) + δ (C(K,2) - C(z,2))` with
/// `δ = ratio^{5/4}`.
pub fn gaussian_first_moment_curve(n: u64, k: u64, z: u64) -> Result<FormulaValue> {
    check_curve_args(n, k, z)?;
    if z == k {
        return Err(domain("the Gaussian curve variant is defined for z < K"));
    }
    let base = first_moment_curve(n, k, z)?;
    let Some(base) = base.value() else {
        return Ok(FormulaValue::Undefined);
    };
    let span = pairs(k as usize) - pairs(z as usize);
    let delta = deficit_ratio(n, k, z).powf(1.25);
    Ok(FormulaValue::Defined(base + delta * span))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    /// `Σ_l C(K,l) C(n-K,K-l) = C(n,K)`.
    Vandermonde,
    /// `C(n,l) C(n-l,K-l) C(n-K,K-l) / C(n,K)^2 = C(K,l) C(n-K,K-l) / C(n,K)`.
    BinomRatio,
    /// The entropy-type bound `LHS <= exp(W_{n,K,l})` with `η = l n / K^2`.
    WBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub holds: bool,
    /// Signed slack for inequalities, absolute discrepancy for equalities.
    pub residual: f64,
}

pub fn verify_identity(kind: Identity, n: u64, k: u64, l: Option<u64>) -> Result<IdentityCheck> {
    match kind {
        Identity::Vandermonde => {
            if k > n {
                return Err(domain(format!("K = {k} exceeds n = {n}")));
            }
            let too_big = || LabError::Resource(format!("C({n}, {k}) exceeds exact integer range"));
            let mut sum: u128 = 0;
            for l in 0..=k {
                let term = choose_u128(k, l)
                    .zip(choose_u128(n - k, k - l))
                    .and_then(|(a, b)| a.checked_mul(b))
                    .ok_or_else(too_big)?;
                sum = sum.checked_add(term).ok_or_else(too_big)?;
            }
            let total = choose_u128(n, k).ok_or_else(too_big)?;
            Ok(IdentityCheck { holds: sum == total, residual: sum.abs_diff(total) as f64 })
        }
        Identity::BinomRatio => {
            let l = l.ok_or_else(|| domain("BinomRatio needs l"))?;
            if l > k || k > n {
                return Err(domain(format!("need l <= K <= n, got l = {l}, K = {k}, n = {n}")));
            }
            let lhs = ln_choose(n, l) + ln_choose(n - l, k - l) + ln_choose(n - k, k - l) - 2.0 * ln_choose(n, k);
            let rhs = ln_choose(k, l) + ln_choose(n - k, k - l) - ln_choose(n, k);
            if lhs == f64::NEG_INFINITY && rhs == f64::NEG_INFINITY {
                return Ok(IdentityCheck { holds: true, residual: 0.0 });
            }
            let residual = (lhs - rhs).abs();
            Ok(IdentityCheck { holds: residual <= 1e-9, residual })
        }
        Identity::WBound => {
            let l = l.ok_or_else(|| domain("WBound needs l"))?;
            if !(1 <= l && l < k && k < n) {
                return Err(domain(format!("need 1 <= l < K < n, got l = {l}, K = {k}, n = {n}")));
            }
            let slack = w_bound_log(n, k, l) - w_bound_lhs_log(n, k, l);
            Ok(IdentityCheck { holds: slack >= -1e-9 * (1.0 + slack.abs()), residual: slack })
        }
    }
}

/// Log of `(Ke/l)^l ((n-K)e/(K-l))^{K-l} (K/n)^K ((n-K)/n)^{n-K}`.
pub fn w_bound_lhs_log(n: u64, k: u64, l: u64) -> f64 {
    let (n, k, l) = (n as f64, k as f64, l as f64);
    l * ((k / l).ln() + 1.0)
        + (k - l) * (((n - k) / (k - l)).ln() + 1.0)
        + k * (k / n).ln()
        + (n - k) * ((n - k) / n).ln()
}

/// `W_{n,K,l} = l (-log η + 1 + K/n)` with `η = l n / K^2`.
pub fn w_bound_log(n: u64, k: u64, l: u64) -> f64 {
    let (n, k, l) = (n as f64, k as f64, l as f64);
    let eta = l * n / (k * k);
    l * (-eta.ln() + 1.0 + k / n)
}

/// `K = ceil(n^alpha)`, guarding against `n^alpha` landing just above an
/// integer through rounding.
pub fn k_for_alpha(n: u64, alpha: f64) -> u64 {
    ((n as f64).powf(alpha) - 1e-9).ceil().max(1.0) as u64
}
