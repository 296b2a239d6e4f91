//! Smooth-max interpolation between disorders.
//!
//! `f_β(Z) = (1/β) log Σ_{|S|=K} exp(β Z_S)` is evaluated by exact
//! enumeration, so everything here is limited to small `C(n, K)`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{choose_f64, ln_choose, pairs};
use crate::disorder::{pair_count, pair_index, sample_disorder, DisorderMatrix, DistributionSpec};
use crate::error::{LabError, Result};
use crate::rng::trial_seed;
use crate::solver::{psi_exact, SolverConfig};

/// Largest `C(n, K)` summed exactly.
pub const PARTITION_LIMIT: f64 = 1e7;
/// Largest edge count for the all-orders multiplicity check.
pub const MULTIPLICITY_MAX_EDGES: usize = 7;

/// `(2 K sqrt(log n))^{-1/3}`, the inverse temperature that balances the
/// smoothing error against the interpolation error.
pub fn default_beta(n: u64, k: u64) -> f64 {
    (2.0 * k as f64 * (n as f64).ln().sqrt()).powf(-1.0 / 3.0)
}

fn check(n: usize, k: usize, beta: f64) -> Result<()> {
    if k < 2 || k > n {
        return Err(LabError::InvalidDimension(format!("K = {k} outside [2, n = {n}]")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(LabError::InvalidArgument(format!("β must be positive, got {beta}")));
    }
    let total = choose_f64(n as u64, k as u64);
    if total > PARTITION_LIMIT {
        return Err(LabError::Resource(format!("{total:.3e} subsets exceed the partition-sum limit")));
    }
    Ok(())
}

/// Calls `f(set, Z_S)` for every K-subset of `0..n` in lexicographic order.
fn for_each_subset_value(weights: &[f64], n: usize, k: usize, mut f: impl FnMut(&[usize], f64)) {
    fn rec(
        w: &[f64],
        n: usize,
        k: usize,
        start: usize,
        set: &mut Vec<usize>,
        z: f64,
        f: &mut dyn FnMut(&[usize], f64),
    ) {
        if set.len() == k {
            f(set, z);
            return;
        }
        let remaining = k - set.len();
        for v in start..=n - remaining {
            let add: f64 = set.iter().map(|&u| w[pair_index(n, u, v)]).sum();
            set.push(v);
            rec(w, n, k, v + 1, set, z + add, f);
            set.pop();
        }
    }
    rec(weights, n, k, 0, &mut Vec::with_capacity(k), 0.0, &mut f);
}

fn max_value(weights: &[f64], n: usize, k: usize) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for_each_subset_value(weights, n, k, |_, z| m = m.max(z));
    m
}

/// Partition sum and per-edge restricted sums for one weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsState {
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    /// `log P = log Σ_S exp(β Z_S)`.
    pub log_partition: f64,
    /// `max_S Z_S`.
    pub max_value: f64,
    /// `U(e)/P` per edge, in pair-index order.
    pub edge_weights: Vec<f64>,
}

impl GibbsState {
    /// One streaming pass: every K-set adds `exp(β (Z_S - max))` to `P` and
    /// to `U(e)` for each of its `C(K,2)` edges.
    pub fn from_weights(weights: &[f64], n: usize, k: usize, beta: f64) -> Result<Self> {
        check(n, k, beta)?;
        if weights.len() != pair_count(n) {
            return Err(LabError::InvalidDimension(format!(
                "expected {} weights, got {}",
                pair_count(n),
                weights.len()
            )));
        }
        let max = max_value(weights, n, k);
        let mut p = 0.0;
        let mut u = vec![0.0; pair_count(n)];
        for_each_subset_value(weights, n, k, |set, z| {
            let t = (beta * (z - max)).exp();
            p += t;
            for (a, &i) in set.iter().enumerate() {
                for &j in &set[a + 1..] {
                    u[pair_index(n, i, j)] += t;
                }
            }
        });
        Ok(Self {
            n,
            k,
            beta,
            log_partition: beta * max + p.ln(),
            max_value: max,
            edge_weights: u.into_iter().map(|x| x / p).collect(),
        })
    }

    pub fn new(matrix: &DisorderMatrix, k: usize, beta: f64) -> Result<Self> {
        Self::from_weights(matrix.weights(), matrix.n(), k, beta)
    }

    /// `f_β = log P / β`.
    pub fn smooth_max(&self) -> f64 {
        self.log_partition / self.beta
    }

    /// `|Σ_e U(e)/P - C(K,2)|`.
    pub fn gibbs_residual(&self) -> f64 {
        (self.edge_weights.iter().sum::<f64>() - pairs(self.k)).abs()
    }
}

/// `f_β(Z)` by exact enumeration.
pub fn smooth_max(matrix: &DisorderMatrix, k: usize, beta: f64) -> Result<f64> {
    let (n, w) = (matrix.n(), matrix.weights());
    check(n, k, beta)?;
    let max = max_value(w, n, k);
    let mut p = 0.0;
    for_each_subset_value(w, n, k, |_, z| p += (beta * (z - max)).exp());
    Ok(max + p.ln() / beta)
}

fn check_edge(n: usize, e: (usize, usize)) -> Result<()> {
    let (i, j) = e;
    if i >= n || j >= n {
        return Err(LabError::InvalidVertex { vertex: i.max(j), n });
    }
    if i == j {
        return Err(LabError::InvalidArgument("an edge needs two distinct endpoints".into()));
    }
    Ok(())
}

/// `(U(e), P)` scaled by a common factor, summing `U` only over the
/// `C(n-2, K-2)` sets that contain both endpoints.
fn edge_sums(matrix: &DisorderMatrix, k: usize, beta: f64, e: (usize, usize)) -> (f64, f64) {
    let (n, w) = (matrix.n(), matrix.weights());
    let max = max_value(w, n, k);
    let mut p = 0.0;
    for_each_subset_value(w, n, k, |_, z| p += (beta * (z - max)).exp());
    let (i, j) = e;
    let others: Vec<usize> = (0..n).filter(|&v| v != i && v != j).collect();
    let mut u = 0.0;
    crate::combinatorics::for_each_combination(others.len(), k - 2, |idx| {
        let mut set: Vec<usize> = idx.iter().map(|&a| others[a]).collect();
        set.push(i);
        set.push(j);
        let mut z = 0.0;
        for a in 0..set.len() {
            for b in a + 1..set.len() {
                z += w[pair_index(n, set[a], set[b])];
            }
        }
        u += (beta * (z - max)).exp();
    });
    (u, p)
}

/// Gibbs mass `U(e)/P` of the K-sets containing edge `e`.
pub fn gibbs_edge_weight(matrix: &DisorderMatrix, k: usize, beta: f64, e: (usize, usize)) -> Result<f64> {
    check(matrix.n(), k, beta)?;
    check_edge(matrix.n(), e)?;
    let (u, p) = edge_sums(matrix, k, beta, e);
    Ok(u / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derivatives {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Derivatives {
    /// From the Gibbs mass `π = U/P`: `π`, `β π(1-π)`, `β^2 π(1-π)(1-2π)`.
    pub fn from_mass(pi: f64, beta: f64) -> Self {
        let v = 1.0 - pi;
        Self { d1: pi, d2: beta * pi * v, d3: beta * beta * pi * v * (v - pi) }
    }
}

/// First three partial derivatives of `f_β` in the weight of edge `e`.
pub fn smooth_max_derivatives(matrix: &DisorderMatrix, k: usize, beta: f64, e: (usize, usize)) -> Result<Derivatives> {
    check(matrix.n(), k, beta)?;
    check_edge(matrix.n(), e)?;
    let (u, p) = edge_sums(matrix, k, beta, e);
    let v = (p - u).max(0.0);
    Ok(Derivatives { d1: u / p, d2: beta * u * v / (p * p), d3: beta * beta * u * v * (v - u) / (p * p * p) })
}

/// `|Σ_e U(e)/P - C(K,2)|`.
pub fn gibbs_sum_identity(matrix: &DisorderMatrix, k: usize, beta: f64) -> Result<f64> {
    Ok(GibbsState::new(matrix, k, beta)?.gibbs_residual())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationPlan {
    pub n: usize,
    /// `edge_order[s]` is the pair index switched at step `s + 1`.
    pub edge_order: Vec<usize>,
    /// Source weights (Gaussian), reached at the end of the path.
    pub x_weights: Vec<f64>,
    /// Target-law weights, where the path starts.
    pub y_weights: Vec<f64>,
    pub seed: u64,
}

impl InterpolationPlan {
    pub fn new(n: usize, edge_order: Vec<usize>, x_weights: Vec<f64>, y_weights: Vec<f64>, seed: u64) -> Result<Self> {
        let m = pair_count(n);
        if x_weights.len() != m || y_weights.len() != m || edge_order.len() != m {
            return Err(LabError::InvalidDimension(format!("plan vectors must have length {m}")));
        }
        let mut seen = vec![false; m];
        for &e in &edge_order {
            if e >= m || std::mem::replace(&mut seen[e], true) {
                return Err(LabError::InvalidArgument("edge order is not a permutation".into()));
            }
        }
        Ok(Self { n, edge_order, x_weights, y_weights, seed })
    }

    /// X from N(1/2, 1/4), Y from `target`, and a uniformly random order.
    pub fn sample(n: usize, target: &DistributionSpec, seed: u64) -> Result<Self> {
        let x = sample_disorder(n, &DistributionSpec::gaussian_half_quarter(), trial_seed(seed, 0))?;
        let y = sample_disorder(n, target, trial_seed(seed, 1))?;
        let mut order: Vec<usize> = (0..pair_count(n)).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(trial_seed(seed, 2)));
        Self::new(n, order, x.weights().to_vec(), y.weights().to_vec(), seed)
    }

    /// `W^l`: the first `l` edges of the order carry X, the rest Y.
    pub fn state(&self, l: usize) -> Vec<f64> {
        let mut w = self.y_weights.clone();
        for &e in &self.edge_order[..l] {
            w[e] = self.x_weights[e];
        }
        w
    }
}

/// `f_β(W^0), ..., f_β(W^N)` with `W^0 = Y` and `W^N = X`.
pub fn interpolation_path(plan: &InterpolationPlan, k: usize, beta: f64) -> Result<Vec<f64>> {
    check(plan.n, k, beta)?;
    (0..=plan.edge_order.len())
        .map(|l| Ok(GibbsState::from_weights(&plan.state(l), plan.n, k, beta)?.smooth_max()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityCheck {
    /// Sum over every interpolation order of the two Gibbs masses at each step.
    pub lhs: f64,
    /// The same sum regrouped by state with its transit multiplicities.
    pub rhs: f64,
    pub residual: f64,
    /// Contribution of the all-Y state.
    pub b0: f64,
    /// Contribution of the all-X state.
    pub b_n: f64,
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

/// Visits every permutation of `0..m` (Heap's algorithm).
fn for_each_permutation(m: usize, mut f: impl FnMut(&[usize])) {
    let mut a: Vec<usize> = (0..m).collect();
    let mut c = vec![0usize; m];
    f(&a);
    let mut i = 1;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Checks the regrouping of the order-averaged interpolation sum by
/// enumerating all `N!` orders and all `2^N` mixed states.
pub fn aggregated_multiplicity_check(
    n: usize,
    k: usize,
    beta: f64,
    x_weights: &[f64],
    y_weights: &[f64],
) -> Result<MultiplicityCheck> {
    let m = pair_count(n);
    if m > MULTIPLICITY_MAX_EDGES {
        return Err(LabError::Resource(format!("{m} edges exceed the limit of {MULTIPLICITY_MAX_EDGES}")));
    }
    if x_weights.len() != m || y_weights.len() != m {
        return Err(LabError::InvalidDimension(format!("weight vectors must have length {m}")));
    }
    // Gibbs masses of every state; bit e of the mask set means edge e carries X.
    let states: Vec<Vec<f64>> = (0..1usize << m)
        .map(|mask| {
            let w: Vec<f64> = (0..m).map(|e| if mask >> e & 1 == 1 { x_weights[e] } else { y_weights[e] }).collect();
            GibbsState::from_weights(&w, n, k, beta).map(|g| g.edge_weights)
        })
        .collect::<Result<_>>()?;

    let mut lhs = 0.0;
    for_each_permutation(m, |order| {
        let mut mask = 0usize;
        for &e in order {
            let before = states[mask][e];
            mask |= 1 << e;
            lhs += states[mask][e] + before;
        }
    });

    let mut rhs = 0.0;
    for (mask, masses) in states.iter().enumerate() {
        let p = mask.count_ones() as usize;
        let q = m - p;
        let transits = factorial(p) * factorial(q);
        for (e, &g) in masses.iter().enumerate() {
            rhs += if mask >> e & 1 == 1 { transits / p as f64 * g } else { transits / q as f64 * g };
        }
    }
    let edge_sum = |masses: &[f64]| factorial(m - 1) * masses.iter().sum::<f64>();
    Ok(MultiplicityCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        b0: edge_sum(&states[0]),
        b_n: edge_sum(&states[(1 << m) - 1]),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    pub trials: usize,
    pub seed: u64,
    pub mean_gaussian: f64,
    pub mean_target: f64,
    /// `|mean Ψ^N - mean Ψ^D|`.
    pub gap_estimate: f64,
    /// `1.96 sqrt(s_N^2/T + s_D^2/T)`.
    pub ci_halfwidth: f64,
    /// `K^{4/3} (log n)^{7/6}`.
    pub budget: f64,
    /// `|mean f_β^N - mean f_β^D|` when the partition sums are affordable.
    pub smooth_gap: Option<f64>,
}

/// Largest `C(n, K)` for which the gap run also averages `f_β`.
pub const SMOOTH_GAP_LIMIT: f64 = 1e5;

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let t = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / t;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0) } else { 0.0 };
    (mean, var)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapTrial {
    pub psi_gaussian: f64,
    pub psi_target: f64,
    pub smooth_gaussian: Option<f64>,
    pub smooth_target: Option<f64>,
}

/// One coupled pair: N(1/2, 1/4) and `dist` disorder drawn from the same seed.
pub fn gap_trial(
    n: usize,
    k: usize,
    beta: f64,
    dist: &DistributionSpec,
    seed: u64,
    with_smooth: bool,
) -> Result<GapTrial> {
    let cfg = SolverConfig::default();
    let a = sample_disorder(n, &DistributionSpec::gaussian_half_quarter(), seed)?;
    let b = sample_disorder(n, dist, seed)?;
    let (smooth_gaussian, smooth_target) =
        if with_smooth { (Some(smooth_max(&a, k, beta)?), Some(smooth_max(&b, k, beta)?)) } else { (None, None) };
    Ok(GapTrial {
        psi_gaussian: psi_exact(&a, k, &cfg)?.value,
        psi_target: psi_exact(&b, k, &cfg)?.value,
        smooth_gaussian,
        smooth_target,
    })
}

/// Paired-seed estimate of `|E Ψ^{N(1/2,1/4)} - E Ψ^D|`.
pub fn universality_gap(
    n: usize,
    k: usize,
    beta: f64,
    dist: &DistributionSpec,
    trials: usize,
    seed: u64,
) -> Result<GapEstimate> {
    if !dist.matches_half_quarter_moments() {
        return Err(LabError::HypothesisViolated(format!(
            "{} does not have mean 1/2 and second moment 1/2",
            dist.name()
        )));
    }
    if trials == 0 {
        return Err(LabError::InvalidArgument("need at least one trial".into()));
    }
    if k < 2 || k > n {
        return Err(LabError::InvalidDimension(format!("K = {k} outside [2, n = {n}]")));
    }
    let with_smooth = choose_f64(n as u64, k as u64) <= SMOOTH_GAP_LIMIT;
    let rows: Vec<[f64; 4]> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let g = gap_trial(n, k, beta, dist, trial_seed(seed, t as u64), with_smooth)?;
            Ok([g.psi_gaussian, g.psi_target, g.smooth_gaussian.unwrap_or(0.0), g.smooth_target.unwrap_or(0.0)])
        })
        .collect::<Result<_>>()?;
    let col = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<f64>>();
    let (ma, va) = mean_var(&col(0));
    let (mb, vb) = mean_var(&col(1));
    let t = trials as f64;
    let smooth_gap = with_smooth.then(|| (mean_var(&col(2)).0 - mean_var(&col(3)).0).abs());
    Ok(GapEstimate {
        n,
        k,
        beta,
        trials,
        seed,
        mean_gaussian: ma,
        mean_target: mb,
        gap_estimate: (ma - mb).abs(),
        ci_halfwidth: 1.96 * (va / t + vb / t).sqrt(),
        budget: (k as f64).powf(4.0 / 3.0) * (n as f64).ln().powf(7.0 / 6.0),
        smooth_gap,
    })
}

/// `log C(n, K) / β`, the width of the smooth-max sandwich.
pub fn sandwich_width(n: usize, k: usize, beta: f64) -> f64 {
    ln_choose(n as u64, k as u64) / beta
}
