//! Tail bounds, concentration inequalities, and first/second moment
//! estimates for the exceedance count `U_γ`.

use std::f64::consts::{PI, SQRT_2};

use libm::erfc;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::combinatorics::{ln_choose, pairs};
use crate::disorder::{DistributionKind, DistributionSpec};
use crate::error::{domain, LabError, Result};

/// Constant in the Rademacher-to-Gaussian tail domination.
pub const THETA: f64 = 15.11;
/// Largest edge count for which Rademacher sums use exact binomial tails.
pub const EXACT_RADEMACHER_EDGES: f64 = 1e4;

/// `P(N(0,1) >= x)` via `erfc`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Natural log of the standard normal density at `x`.
fn ln_phi(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * (2.0 * PI).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MillsBounds {
    pub upper: f64,
    pub lower: f64,
}

/// Mills-ratio bounds `x/(1+x^2) φ(x) <= P(N >= x) <= φ(x)/x`.
pub fn gaussian_tail(x: f64) -> Result<MillsBounds> {
    if !(x > 0.0) {
        return Err(domain(format!("Mills bounds need x > 0, got {x}")));
    }
    let phi = ln_phi(x).exp();
    Ok(MillsBounds { upper: phi / x, lower: x / (1.0 + x * x) * phi })
}

/// `θ P(N(0,1) >= x)`, which dominates `P(S_n >= x sqrt(n))` for a sum of
/// `n` Rademacher variables when `x >= 1`.
pub fn rademacher_gaussian_domination(n: u64, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(LabError::InvalidDimension("need at least one summand".into()));
    }
    if !(x >= 1.0) {
        return Err(domain(format!("domination needs x >= 1, got {x}")));
    }
    Ok(THETA * normal_sf(x))
}

/// `3 (N0 + N̂) exp(-γ^2/(1+ρ))` with `γ = β/sqrt(N0+N̂)`, `ρ = N0/(N0+N̂)`:
/// a bound on `P(X0 + X̂1 >= β, X0 + X̂2 >= β)` for Rademacher sums sharing
/// `N0` terms.
pub fn joint_rademacher_bound(n0: u64, n_hat: u64, beta: f64) -> Result<f64> {
    if n0 == 0 || n_hat == 0 {
        return Err(LabError::InvalidDimension("N0 and N̂ must be positive".into()));
    }
    if !(beta >= 0.0) {
        return Err(domain(format!("β must be nonnegative, got {beta}")));
    }
    let total = (n0 + n_hat) as f64;
    let gamma = beta / total.sqrt();
    let rho = n0 as f64 / total;
    Ok(3.0 * total * (-gamma * gamma / (1.0 + rho)).exp())
}

/// `D(x || p)` in nats; `+inf` when `x` puts mass where `p` has none.
pub fn kl_divergence(x: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("KL arguments ({x}, {p}) outside [0, 1]")));
    }
    let term = |a: f64, b: f64| -> f64 {
        if a == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    };
    Ok(term(x, p) + term(1.0 - x, 1.0 - p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialLowerTail {
    /// `exp(-γ^2/2 - γ^4/(12n)) / sqrt(2n)`.
    pub expansion: f64,
    /// `exp(-n D(λ||1/2)) / sqrt(8 n λ (1-λ))`.
    pub kl_exact: f64,
    /// Lattice point `k/n` with `k` the smallest count of +1 signs reaching
    /// the threshold.
    pub lambda: f64,
}

/// Smallest number of `+1` signs among `n` for which `S_n >= t`.
fn min_heads(n: u64, t: f64) -> f64 {
    ((n as f64 + t) / 2.0 - 1e-9).ceil()
}

/// Two lower bounds on `P(S_n >= γ sqrt(n))` for a sum of `n` Rademacher signs.
pub fn binomial_lower_tail(n: u64, gamma: f64) -> Result<BinomialLowerTail> {
    if n == 0 {
        return Err(LabError::InvalidDimension("need n >= 1".into()));
    }
    let nf = n as f64;
    if !(gamma > 0.0 && gamma < nf.sqrt()) {
        return Err(domain(format!("need 0 < γ < sqrt(n), got γ = {gamma}")));
    }
    let expansion = (-gamma.powi(2) / 2.0 - gamma.powi(4) / (12.0 * nf)).exp() / (2.0 * nf).sqrt();
    let lambda = min_heads(n, gamma * nf.sqrt()) / nf;
    if lambda >= 1.0 {
        return Err(domain(format!("λ = {lambda} >= 1")));
    }
    let kl_exact = (-nf * kl_divergence(lambda, 0.5)?).exp() / (8.0 * nf * lambda * (1.0 - lambda)).sqrt();
    Ok(BinomialLowerTail { expansion, kl_exact, lambda })
}

/// `log Σ exp(x_i)`.
fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `log P(Bin(n, 1/2) >= k)`.
fn ln_binomial_half_tail(n: u64, k: f64) -> f64 {
    if k <= 0.0 {
        return 0.0;
    }
    if k > n as f64 {
        return f64::NEG_INFINITY;
    }
    let k = k as u64;
    let ln2n = n as f64 * std::f64::consts::LN_2;
    // Sum the shorter side for accuracy.
    if 2 * k >= n {
        log_sum_exp((k..=n).map(|j| ln_choose(n, j) - ln2n))
    } else {
        let lower = log_sum_exp((0..k).map(|j| ln_choose(n, j) - ln2n)).exp();
        (-lower).ln_1p()
    }
}

/// Exact `log P(S_n >= t)` for a sum of `n` Rademacher signs.
pub fn ln_rademacher_tail(n: u64, t: f64) -> f64 {
    ln_binomial_half_tail(n, min_heads(n, t))
}

/// `(∏ Δ_i)^{-1} |Σ^{-1}|^{1/2} (2π)^{-d/2} exp(-c^T Σ^{-1} c / 2)` with
/// `Δ = Σ^{-1} c`: an upper bound on `P(X >= c)` for `X ~ N(0, Σ)`.
pub fn savage_bound(sigma: &DMatrix<f64>, c: &DVector<f64>) -> Result<f64> {
    let d = c.len();
    if sigma.nrows() != d || sigma.ncols() != d || d == 0 {
        return Err(LabError::InvalidDimension(format!(
            "covariance {}x{} does not match threshold of length {d}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    if (sigma - sigma.transpose()).abs().max() > 1e-12 * sigma.abs().max().max(1.0) {
        return Err(LabError::HypothesisViolated("covariance is not symmetric".into()));
    }
    let chol = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| LabError::HypothesisViolated("covariance is not positive definite".into()))?;
    let delta = chol.solve(c);
    if let Some(i) = delta.iter().position(|&v| !(v > 0.0)) {
        return Err(LabError::HypothesisViolated(format!("Δ_{i} = {} is not positive", delta[i])));
    }
    let ln_det_sigma: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let quad = c.dot(&delta);
    let ln_prod_delta: f64 = delta.iter().map(|v| v.ln()).sum();
    let ln_bound = -ln_prod_delta - 0.5 * ln_det_sigma - 0.5 * d as f64 * (2.0 * PI).ln() - 0.5 * quad;
    Ok(ln_bound.exp())
}

/// Closed form of the Savage bound for two centered Gaussians with variance
/// `C(K,2)`, covariance `C(l,2)`, and common threshold `γ C(K,2)`.
pub fn bivariate_correlated_bound(k: u64, l: u64, gamma: f64) -> Result<f64> {
    if !(2 <= l && l < k) {
        return Err(domain(format!("need 2 <= l <= K-1, got l = {l}, K = {k}")));
    }
    if !(gamma > 0.0) {
        return Err(domain(format!("need γ > 0, got {gamma}")));
    }
    let a = pairs(k as usize);
    let b = pairs(l as usize);
    let g2 = gamma * gamma;
    Ok((a + b).powi(2) / (2.0 * PI * g2 * a * a * (a * a - b * b).sqrt()) * (-g2 * a * a / (a + b)).exp())
}

/// Threshold factor above which the Talagrand bound is taken to apply.
pub fn talagrand_threshold_factor() -> f64 {
    32.0 * PI.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationBounds {
    /// `min(1, 4 exp(-t^2/(4K^2)))`.
    pub talagrand: f64,
    /// Unclamped `4 exp(-t^2/(4K^2))`.
    pub talagrand_raw: f64,
    /// Whether `t >= 32 sqrt(π) K`, the range where the Talagrand bound is asserted.
    pub talagrand_hypothesis_met: bool,
    /// `min(1, exp(-t^2/(2σ^2)))`.
    pub borell_tis: f64,
}

pub fn concentration_bounds(k: u64, t: f64, sigma_sq: f64) -> Result<ConcentrationBounds> {
    if k == 0 {
        return Err(LabError::InvalidDimension("K must be positive".into()));
    }
    if !(t > 0.0 && sigma_sq > 0.0) {
        return Err(domain(format!("need t > 0 and σ² > 0, got t = {t}, σ² = {sigma_sq}")));
    }
    let kf = k as f64;
    let raw = 4.0 * (-t * t / (4.0 * kf * kf)).exp();
    Ok(ConcentrationBounds {
        talagrand: raw.min(1.0),
        talagrand_raw: raw,
        talagrand_hypothesis_met: t >= talagrand_threshold_factor() * kf,
        borell_tis: (-t * t / (2.0 * sigma_sq)).exp().min(1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    ExactBinomial,
    ExactGaussian,
    /// Rademacher tail replaced by the Gaussian domination bound.
    GaussianDomination,
    /// Hoeffding's inequality for bounded laws without an exact path.
    Hoeffding,
}

impl TailMethod {
    pub fn is_exact(self) -> bool {
        matches!(self, TailMethod::ExactBinomial | TailMethod::ExactGaussian)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsetTail {
    /// `log P(Z_S >= γ C(K,2))` (or of its upper bound).
    pub ln_prob: f64,
    pub method: TailMethod,
}

/// `P(Z_S >= γ C(K,2))` for a single K-set.
pub fn subset_tail(k: u64, gamma: f64, dist: &DistributionSpec) -> Result<SubsetTail> {
    if k < 2 {
        return Err(LabError::InvalidDimension(format!("K = {k} < 2")));
    }
    let edges = pairs(k as usize);
    let m = edges as u64;
    let t = gamma * edges;
    let exact = |ln_prob, method| Ok(SubsetTail { ln_prob, method });
    match &dist.kind {
        DistributionKind::Rademacher => {
            if edges <= EXACT_RADEMACHER_EDGES {
                return exact(ln_rademacher_tail(m, t), TailMethod::ExactBinomial);
            }
            let x = t / edges.sqrt();
            let ln_prob = if x >= 1.0 { rademacher_gaussian_domination(m, x)?.ln().min(0.0) } else { 0.0 };
            exact(ln_prob, TailMethod::GaussianDomination)
        }
        DistributionKind::BernoulliHalf => {
            exact(ln_binomial_half_tail(m, (t - 1e-9).ceil()), TailMethod::ExactBinomial)
        }
        DistributionKind::GaussianStd => exact(normal_sf(t / edges.sqrt()).ln(), TailMethod::ExactGaussian),
        DistributionKind::GaussianHalfQuarter => {
            exact(normal_sf((t - edges / 2.0) / (edges.sqrt() / 2.0)).ln(), TailMethod::ExactGaussian)
        }
        DistributionKind::BoundedCustom { support, .. } => {
            let lo = support.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = support.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let s = t - edges * dist.declared_mean;
            let ln_prob = if t > hi * edges + 1e-9 {
                f64::NEG_INFINITY
            } else if s <= 0.0 || hi == lo {
                0.0
            } else {
                -2.0 * s * s / (edges * (hi - lo).powi(2))
            };
            exact(ln_prob, TailMethod::Hoeffding)
        }
        DistributionKind::Explicit => Err(LabError::InvalidArgument("explicit weights have no tail law".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstMoment {
    /// `log E[U_γ] = log C(n,K) + log P(Z_S >= γ C(K,2))`.
    pub ln_value: f64,
    /// `E[U_γ]` when it fits in a double.
    pub value: Option<f64>,
    pub method: TailMethod,
}

/// `E[U_γ] = C(n,K) P(Z_S >= γ C(K,2))`; an upper bound on `P(U_γ >= 1)`.
pub fn first_moment_upper(n: u64, k: u64, gamma: f64, dist: &DistributionSpec) -> Result<FirstMoment> {
    if k < 2 || k > n {
        return Err(LabError::InvalidDimension(format!("K = {k} outside [2, n = {n}]")));
    }
    let tail = subset_tail(k, gamma, dist)?;
    let ln_value = ln_choose(n, k) + tail.ln_prob;
    let value = if ln_value < 700.0 { Some(ln_value.exp()) } else { None };
    Ok(FirstMoment { ln_value, value, method: tail.method })
}

/// `log S_{n,K,m,l}`, the summand
/// `C(K,l) C(n-K,K-l) / C(n,K) · K^m · exp(γ^2 C(K,2) C(l,2) / (C(K,2) + C(l,2)))`.
pub fn s_term(n: u64, k: u64, m: f64, l: u64, gamma: f64) -> Result<f64> {
    if !(2 <= l && l < k && k <= n) {
        return Err(domain(format!("need 2 <= l <= K-1 and K <= n, got l = {l}, K = {k}, n = {n}")));
    }
    let a = pairs(k as usize);
    let b = pairs(l as usize);
    Ok(ln_choose(k, l) + ln_choose(n - k, k - l) - ln_choose(n, k)
        + m * (k as f64).ln()
        + gamma * gamma * a * b / (a + b))
}

/// The choice `γ = sqrt(2/C(K,2) · (log(C(n,K)/sqrt(K log(n/K))) - log target))`
/// that puts the Gaussian-approximated first moment at `target`, on the
/// centered unit-variance scale.
pub fn auto_gamma(n: u64, k: u64, target: f64) -> Result<f64> {
    if k < 2 || k >= n {
        return Err(LabError::InvalidDimension(format!("need 2 <= K < n, got K = {k}, n = {n}")));
    }
    if !(target > 0.0) {
        return Err(domain(format!("target must be positive, got {target}")));
    }
    let kf = k as f64;
    let inner = ln_choose(n, k) - 0.5 * (kf * (n as f64 / kf).ln()).ln() - target.ln();
    if inner < 0.0 {
        return Err(domain(format!("no real γ for target {target} at n = {n}, K = {k}")));
    }
    Ok((2.0 / pairs(k as usize) * inner).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub n: u64,
    pub k: u64,
    pub gamma: f64,
    /// `E[U_γ]`.
    pub first_moment: f64,
    pub ln_first_moment: f64,
    /// `A(γ)`: the overlap 0, 1, and K contributions to `E[U_γ^2]`.
    pub a_term: f64,
    /// Upper bound on `B(γ)`, the overlaps `2 <= l <= K-1`.
    pub b_upper: f64,
    /// Upper bound on `B̄(γ) = B(γ) / (C(n,K) P)^2`.
    pub b_bar_upper: f64,
    /// Lower bound on `E[U]^2 / E[U^2]`, hence on `P(U_γ >= 1)`.
    pub pz_ratio_lower: f64,
    pub tail_method: TailMethod,
    /// Set when no exact marginal tail or joint bound is available; the
    /// Paley–Zygmund field then carries the trivial value 0.
    pub fallback: bool,
}

/// `P(Z_S, Z_T >= t)` upper bound for overlap `l`, on the centered
/// unit-variance scale with threshold multiplier `gc`.
fn joint_upper(dist: &DistributionSpec, k: u64, l: u64, gc: f64) -> Result<Option<f64>> {
    let a = pairs(k as usize);
    let b = pairs(l as usize);
    Ok(match dist.kind {
        DistributionKind::Rademacher | DistributionKind::BernoulliHalf => {
            let beta = gc * a;
            if beta < 0.0 {
                None
            } else {
                Some(joint_rademacher_bound(b as u64, (a - b) as u64, beta)?)
            }
        }
        DistributionKind::GaussianStd | DistributionKind::GaussianHalfQuarter => {
            if gc > 0.0 {
                Some(bivariate_correlated_bound(k, l, gc)?)
            } else {
                None
            }
        }
        _ => None,
    })
}

/// First and second moment decomposition of `U_γ` with the
/// Paley–Zygmund lower bound on `P(U_γ >= 1)`.
pub fn second_moment_report(n: u64, k: u64, gamma: f64, dist: &DistributionSpec) -> Result<MomentReport> {
    if k < 2 || k > n {
        return Err(LabError::InvalidDimension(format!("K = {k} outside [2, n = {n}]")));
    }
    let tail = subset_tail(k, gamma, dist)?;
    let lp = tail.ln_prob;
    let p = lp.exp();
    let ln_cnk = ln_choose(n, k);
    // Bernoulli and N(1/2, 1/4) weights are affine images of the centered laws.
    let gc = match dist.kind {
        DistributionKind::BernoulliHalf | DistributionKind::GaussianHalfQuarter => 2.0 * gamma - 1.0,
        _ => gamma,
    };
    let fallback = !tail.method.is_exact() || matches!(dist.kind, DistributionKind::BoundedCustom { .. });

    let ln_a = log_sum_exp(
        [
            ln_cnk + ln_choose(n - k, k) + 2.0 * lp,
            (n as f64).ln() + ln_choose(n - 1, k - 1) + ln_choose(n - k, k - 1) + 2.0 * lp,
            ln_cnk + lp,
        ]
        .into_iter(),
    );
    let mut ln_b_terms = Vec::new();
    for l in 2..k {
        let joint = if fallback { None } else { joint_upper(dist, k, l, gc)? };
        let joint = joint.map_or(p, |j| j.min(p));
        ln_b_terms.push(ln_choose(n, l) + ln_choose(n - l, k - l) + ln_choose(n - k, k - l) + joint.ln());
    }
    let ln_b = log_sum_exp(ln_b_terms.into_iter());
    let ln_first = ln_cnk + lp;
    let (b_bar_upper, pz) = if p == 0.0 {
        (0.0, 0.0)
    } else {
        let ln_second = log_sum_exp([ln_a, ln_b].into_iter());
        let pz = if fallback { 0.0 } else { (2.0 * ln_first - ln_second).exp().min(1.0) };
        ((ln_b - 2.0 * ln_first).exp(), pz)
    };
    Ok(MomentReport {
        n,
        k,
        gamma,
        first_moment: ln_first.exp(),
        ln_first_moment: ln_first,
        a_term: ln_a.exp(),
        b_upper: ln_b.exp(),
        b_bar_upper,
        pz_ratio_lower: pz,
        tail_method: tail.method,
        fallback,
    })
}
