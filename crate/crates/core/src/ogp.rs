//! Overlap gap experiments on planted-clique instances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{first_moment_curve, FormulaValue};
use crate::combinatorics::pairs;
use crate::disorder::{plant_clique, sample_disorder, DisorderMatrix, DistributionKind, DistributionSpec};
use crate::error::{LabError, Result};
use crate::rng::trial_seed;
use crate::solver::{psi_exact, psi_overlap, psi_profile, OverlapProfile, SolverConfig};

/// Default anchor constant in `z0 = floor(C0 K^2 / n)`.
pub const DEFAULT_C0: f64 = 2.0;
/// Densities within this distance count as equal in witness checks.
const DENSITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OgpParameters {
    pub zeta1: f64,
    pub zeta2: f64,
    pub r1: f64,
    pub r2: f64,
}

impl OgpParameters {
    pub fn new(zeta1: f64, zeta2: f64, r1: f64, r2: f64) -> Result<Self> {
        if !(zeta1 < zeta2) || !(r1 < r2) {
            return Err(LabError::InvalidArgument(format!(
                "need ζ1 < ζ2 and r1 < r2, got ({zeta1}, {zeta2}, {r1}, {r2})"
            )));
        }
        Ok(Self { zeta1, zeta2, r1, r2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    /// Budget-limited or missing solves leave the question open.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OgpDiagnosis {
    pub params: OgpParameters,
    /// Dense sets exist at both low (`z <= ζ1`) and high (`z >= ζ2`) overlap.
    pub part1: Verdict,
    /// Every set with overlap in `[ζ1, ζ2]` has density at most `r1`.
    pub part2: Verdict,
    pub low_witness: Option<usize>,
    pub high_witness: Option<usize>,
    /// Overlaps in `[ζ1, ζ2]` whose density exceeds `r1`.
    pub part2_violations: Vec<usize>,
}

impl OgpDiagnosis {
    pub fn holds(&self) -> Verdict {
        match (self.part1, self.part2) {
            (Verdict::Holds, Verdict::Holds) => Verdict::Holds,
            (Verdict::Fails, _) | (_, Verdict::Fails) => Verdict::Fails,
            _ => Verdict::Indeterminate,
        }
    }
}

/// Checks both conditions of the overlap gap property on one profile.
///
/// A budget-limited solve gives a lower bound on `Ψ_K(z)`: it can witness a
/// dense set but cannot certify that none exists.
pub fn ogp_witness(profile: &OverlapProfile, params: &OgpParameters) -> OgpDiagnosis {
    let z_lo = profile.entries.first().map_or(0, |e| e.z);
    let solved = |pred: &dyn Fn(f64) -> bool| {
        let mut hit = None;
        let mut open = false;
        for e in &profile.entries {
            if !pred(e.z as f64) {
                continue;
            }
            if let Some(s) = &e.solution {
                if s.value >= params.r2 - DENSITY_TOL {
                    hit.get_or_insert(e.z);
                } else if !s.exact {
                    open = true;
                }
            }
        }
        (hit, open)
    };
    let (low_witness, low_open) = solved(&|z| z <= params.zeta1);
    let (high_witness, high_open) = solved(&|z| z >= params.zeta2);
    // Overlaps below the profile's first z were never solved.
    let low_open = low_open || (z_lo as f64) > params.zeta1.max(0.0) && low_witness.is_none();
    let part1 = match (low_witness, high_witness) {
        (Some(_), Some(_)) => Verdict::Holds,
        _ if (low_witness.is_some() || low_open) && (high_witness.is_some() || high_open) => Verdict::Indeterminate,
        _ => Verdict::Fails,
    };

    let mut violations = Vec::new();
    let mut open = (z_lo as f64) > params.zeta1.ceil().max(0.0);
    for e in &profile.entries {
        let z = e.z as f64;
        if z < params.zeta1 || z > params.zeta2 {
            continue;
        }
        if let Some(s) = &e.solution {
            if s.value > params.r1 + DENSITY_TOL {
                violations.push(e.z);
            } else if !s.exact {
                open = true;
            }
        }
    }
    let part2 = if !violations.is_empty() {
        Verdict::Fails
    } else if open {
        Verdict::Indeterminate
    } else {
        Verdict::Holds
    };
    OgpDiagnosis { params: *params, part1, part2, low_witness, high_witness, part2_violations: violations }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dip {
    /// Overlap where the curve is lowest inside the scan window.
    pub z_min: usize,
    pub interval_lo: usize,
    pub interval_hi: usize,
    pub max_gamma_in_interval: f64,
    /// `Γ(z0) - max_{z in interval} Γ(z)`.
    pub margin: f64,
    pub margin_per_k_log_k: f64,
    /// Interval ends in units of `sqrt(K log K)`.
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipReport {
    pub n: u64,
    pub k: u64,
    pub c0: f64,
    pub epsilon: f64,
    pub z0: u64,
    pub gamma_z0: FormulaValue,
    pub window_lo: u64,
    pub window_hi: u64,
    /// Scanned overlaps where the curve is undefined.
    pub undefined_points: usize,
    /// `Γ((1-ε)K)`, the far end of the anchor comparison.
    pub gamma_far: FormulaValue,
    /// `None` when no point in the window lies below `Γ(z0)`.
    pub dip: Option<Dip>,
}

/// Scans the first moment curve for an interval of overlaps near
/// `sqrt(K log K)` where it sits below its value at `z0 = floor(C0 K^2/n)`.
///
/// The window covers `[sqrt(K log K)/10, 10 sqrt(K log K)]` clipped to valid
/// overlaps. The interval is the run of overlaps around the minimum that stay
/// at least half the dip depth below `Γ(z0)`.
pub fn dip_locator(n: u64, k: u64, epsilon: f64, c0: f64) -> Result<DipReport> {
    if k < 3 || k > n {
        return Err(LabError::InvalidDimension(format!("need 3 <= K <= n, got K = {k}, n = {n}")));
    }
    if !(0.0..1.0).contains(&epsilon) || !(c0 >= 1.0) {
        return Err(LabError::InvalidArgument(format!("need ε in [0, 1) and C0 >= 1, got ε = {epsilon}, C0 = {c0}")));
    }
    let kf = k as f64;
    let z_valid = k * k / n;
    let z0 = ((c0 * kf * kf / n as f64).floor() as u64).clamp(z_valid, k);
    let scale = (kf * kf.ln()).sqrt();
    let window_lo = ((scale / 10.0).floor() as u64).max(z_valid);
    let window_hi = ((10.0 * scale).ceil() as u64).min(k);
    let gamma_z0 = first_moment_curve(n, k, z0)?;
    let far = (((1.0 - epsilon) * kf).floor() as u64).max(z_valid);
    let gamma_far = first_moment_curve(n, k, far)?;

    let mut curve = Vec::new();
    let mut undefined_points = 0;
    for z in window_lo..=window_hi {
        match first_moment_curve(n, k, z)? {
            FormulaValue::Defined(g) => curve.push((z, g)),
            FormulaValue::Undefined => undefined_points += 1,
        }
    }
    let mut report =
        DipReport { n, k, c0, epsilon, z0, gamma_z0, window_lo, window_hi, undefined_points, gamma_far, dip: None };
    let Some(anchor) = gamma_z0.value() else {
        return Ok(report);
    };
    let Some(min_at) = curve
        .iter()
        .enumerate()
        .filter(|(_, (z, _))| *z != z0)
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
    else {
        return Ok(report);
    };
    let depth = anchor - curve[min_at].1;
    if !(depth > 0.0) {
        return Ok(report);
    }
    let cut = anchor - depth / 2.0;
    let contiguous = |a: usize, b: usize| curve[b].0 == curve[a].0 + 1;
    let (mut lo, mut hi) = (min_at, min_at);
    while lo > 0 && contiguous(lo - 1, lo) && curve[lo - 1].1 <= cut && curve[lo - 1].0 != z0 {
        lo -= 1;
    }
    while hi + 1 < curve.len() && contiguous(hi, hi + 1) && curve[hi + 1].1 <= cut && curve[hi + 1].0 != z0 {
        hi += 1;
    }
    if lo == hi {
        // Widen to the lower neighbour so the interval is non-degenerate.
        let left = (lo > 0 && contiguous(lo - 1, lo) && curve[lo - 1].0 != z0).then(|| curve[lo - 1].1);
        let right = (hi + 1 < curve.len() && contiguous(hi, hi + 1) && curve[hi + 1].0 != z0).then(|| curve[hi + 1].1);
        match (left, right) {
            (Some(l), Some(r)) if l <= r => lo -= 1,
            (Some(_), None) => lo -= 1,
            (_, Some(_)) => hi += 1,
            _ => return Ok(report),
        }
    }
    let max_in = curve[lo..=hi].iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let margin = anchor - max_in;
    if !(margin > 0.0) {
        return Ok(report);
    }
    report.dip = Some(Dip {
        z_min: curve[min_at].0 as usize,
        interval_lo: curve[lo].0 as usize,
        interval_hi: curve[hi].0 as usize,
        max_gamma_in_interval: max_in,
        margin,
        margin_per_k_log_k: margin / (kf * kf.ln()),
        d1: curve[lo].0 as f64 / scale,
        d2: curve[hi].0 as f64 / scale,
    });
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZDomination {
    pub z: usize,
    pub checked: usize,
    pub dominated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    /// `(instance, z)` pairs compared.
    pub checked: usize,
    pub dominated: usize,
    /// `dominated / checked`.
    pub frequency: f64,
    /// Pairs skipped because the solve hit its node budget.
    pub excluded_budget: usize,
    /// Pairs skipped because the curve is undefined at that overlap.
    pub excluded_undefined: usize,
    pub per_z: Vec<ZDomination>,
    pub profiles: Vec<OverlapProfile>,
}

/// Bernoulli planted instance `trial` of a run with base `seed`.
pub fn planted_bernoulli(n: usize, k: usize, seed: u64, trial: u64) -> Result<DisorderMatrix> {
    let base = sample_disorder(n, &DistributionSpec::bernoulli_half(), trial_seed(seed, trial))?;
    plant_clique(&base, k, 0.0)
}

/// Frequency of `Ψ_K(z) <= Γ_K(z)` over planted Bernoulli instances and
/// overlaps `floor(K^2/n) <= z <= K`.
pub fn curve_dominates_profile(
    n: usize,
    k: usize,
    trials: usize,
    seed: u64,
    config: &SolverConfig,
) -> Result<DominationReport> {
    let profiles: Vec<OverlapProfile> = (0..trials)
        .into_par_iter()
        .map(|t| psi_profile(&planted_bernoulli(n, k, seed, t as u64)?, k, config))
        .collect::<Result<_>>()?;
    let mut per_z: Vec<ZDomination> = Vec::new();
    let (mut checked, mut dominated, mut excluded_budget, mut excluded_undefined) = (0, 0, 0, 0);
    for profile in &profiles {
        for e in &profile.entries {
            let Some(s) = &e.solution else { continue };
            if !s.exact {
                excluded_budget += 1;
                continue;
            }
            let Some(g) = e.gamma.value() else {
                excluded_undefined += 1;
                continue;
            };
            let slot = match per_z.iter().position(|p| p.z == e.z) {
                Some(i) => i,
                None => {
                    per_z.push(ZDomination { z: e.z, checked: 0, dominated: 0 });
                    per_z.len() - 1
                }
            };
            checked += 1;
            per_z[slot].checked += 1;
            if s.value <= g + DENSITY_TOL {
                dominated += 1;
                per_z[slot].dominated += 1;
            }
        }
    }
    per_z.sort_by_key(|p| p.z);
    Ok(DominationReport {
        n,
        k,
        trials,
        seed,
        checked,
        dominated,
        frequency: if checked == 0 { f64::NAN } else { dominated as f64 / checked as f64 },
        excluded_budget,
        excluded_undefined,
        per_z,
        profiles,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantingVariant {
    /// Clique edges forced to 1.
    Bernoulli,
    /// Clique edges shifted; the best m-subset of the clique enters the bound.
    Shifted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCheck {
    pub k: usize,
    pub m: usize,
    pub a_n: f64,
    pub variant: PlantingVariant,
    /// `Ψ_K(m)`.
    pub lhs: f64,
    pub rhs: f64,
    /// `Ψ_{K-m}(G0)` on the non-clique vertices.
    pub psi_rest: f64,
    /// Clique contribution: `C(m,2)` or `Ψ_m` over the clique's own weights.
    pub clique_term: f64,
    /// `None` when a solve stopped on its budget.
    pub holds: Option<bool>,
}

fn psi_or_zero(matrix: &DisorderMatrix, size: usize, config: &SolverConfig) -> Result<(f64, bool)> {
    if size < 2 {
        return Ok((0.0, true));
    }
    let s = psi_exact(matrix, size, config)?;
    Ok((s.value, s.exact))
}

/// Compares `Ψ_K(m)` with
/// `clique_term + Ψ_{K-m}(G0) + (K-m)m/2 - a_n sqrt((K-m)m/4)`.
pub fn decomposition_lower_bound(
    matrix: &DisorderMatrix,
    k: usize,
    m: usize,
    a_n: f64,
    config: &SolverConfig,
) -> Result<DecompositionCheck> {
    let planted = matrix.planted().ok_or(LabError::MissingPlant)?;
    let k_pc = planted.k;
    let n = matrix.n();
    if m == 0 || m > k || m > k_pc {
        return Err(LabError::InvalidArgument(format!("need 0 < m <= min(K, K_pc), got m = {m}")));
    }
    if k - m > n - k_pc {
        return Err(LabError::InfeasibleOverlap { z: m, reason: "too few vertices outside the clique".into() });
    }
    let lhs_sol = psi_overlap(matrix, k, m, config)?;
    let rest: Vec<usize> = (k_pc..n).collect();
    let (psi_rest, rest_exact) =
        if k - m >= 2 { psi_or_zero(&matrix.induced(&rest)?, k - m, config)? } else { (0.0, true) };
    let variant = if matrix.spec().kind == DistributionKind::BernoulliHalf {
        PlantingVariant::Bernoulli
    } else {
        PlantingVariant::Shifted
    };
    let (clique_term, clique_exact) = match variant {
        PlantingVariant::Bernoulli => (pairs(m), true),
        PlantingVariant::Shifted => {
            let clique: Vec<usize> = (0..k_pc).collect();
            if m >= 2 {
                psi_or_zero(&matrix.induced(&clique)?, m, config)?
            } else {
                (0.0, true)
            }
        }
    };
    let cross = ((k - m) * m) as f64;
    let rhs = clique_term + psi_rest + cross / 2.0 - a_n * (cross / 4.0).sqrt();
    let lhs = lhs_sol.value;
    // Budget-limited solves give lower bounds: an inexact lhs can still
    // confirm, an inexact rhs can still refute.
    let rhs_exact = rest_exact && clique_exact;
    let holds = if rhs_exact && lhs >= rhs - DENSITY_TOL {
        Some(true)
    } else if lhs_sol.exact && lhs < rhs - DENSITY_TOL {
        Some(false)
    } else {
        None
    };
    Ok(DecompositionCheck { k, m, a_n, variant, lhs, rhs, psi_rest, clique_term, holds })
}

/// `4 sqrt(log n)`.
pub fn default_a_n(n: usize) -> f64 {
    4.0 * (n as f64).ln().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OgpExperimentConfig {
    pub n: usize,
    pub k: usize,
    #[serde(default = "default_distribution")]
    pub distribution: String,
    /// Clique shift for non-Bernoulli disorder.
    #[serde(default = "default_mu")]
    pub mu: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub node_budget: Option<u64>,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_distribution() -> String {
    "bernoulli".into()
}
fn default_mu() -> f64 {
    1.0
}
fn default_c0() -> f64 {
    DEFAULT_C0
}
fn default_epsilon() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OgpRow {
    pub trial: usize,
    pub seed: u64,
    pub z: usize,
    pub psi: Option<f64>,
    pub gamma: Option<f64>,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OgpInstance {
    pub trial: usize,
    pub seed: u64,
    /// `"ok"` or the error that stopped this instance.
    pub status: String,
    pub witness: Option<OgpDiagnosis>,
    /// `max_{z in I} Ψ_K(z)` over the dip interval.
    pub interval_max: Option<f64>,
    /// `min{Ψ_K(z_low), Ψ_K(floor(K/2))}`, `z_low = floor(K^2/n)`.
    pub anchor_min: Option<f64>,
    /// `anchor_min - interval_max`; positive values match the predicted gap.
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OgpExperiment {
    pub config: OgpExperimentConfig,
    pub dip: Option<DipReport>,
    pub rows: Vec<OgpRow>,
    pub instances: Vec<OgpInstance>,
    pub positive_gap_fraction: Option<f64>,
}

/// Profiles, curve overlay, witness verdicts, and the interval-vs-anchor gap
/// for every trial of `config`.
pub fn run_ogp_experiment(config: &OgpExperimentConfig) -> Result<OgpExperiment> {
    let spec = DistributionSpec::from_name(&config.distribution)?;
    let (n, k) = (config.n, config.k);
    if k < 2 || k > n {
        return Err(LabError::InvalidDimension(format!("K = {k} outside [2, n = {n}]")));
    }
    let dip = if k >= 3 { Some(dip_locator(n as u64, k as u64, config.epsilon, config.c0)?) } else { None };
    let interval =
        dip.as_ref().and_then(|d| d.dip.as_ref().map(|x| (x.interval_lo, x.interval_hi, x.max_gamma_in_interval)));
    let params = match (&dip, interval) {
        (Some(d), Some((lo, hi, max_in))) => {
            d.gamma_z0.value().and_then(|g0| OgpParameters::new(lo as f64, hi as f64, max_in, g0).ok())
        }
        _ => None,
    };
    let solver = SolverConfig { node_budget: config.node_budget, ..SolverConfig::default() };
    let results: Vec<(u64, Result<OverlapProfile>)> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(config.seed, t as u64);
            let profile = sample_disorder(n, &spec, seed)
                .and_then(|m| plant_clique(&m, k, config.mu))
                .and_then(|m| psi_profile(&m, k, &solver));
            (seed, profile)
        })
        .collect();

    let mut rows = Vec::new();
    let mut instances = Vec::new();
    for (trial, (seed, profile)) in results.into_iter().enumerate() {
        let profile = match profile {
            Ok(p) => p,
            Err(e) => {
                instances.push(OgpInstance {
                    trial,
                    seed,
                    status: e.to_string(),
                    witness: None,
                    interval_max: None,
                    anchor_min: None,
                    gap: None,
                });
                continue;
            }
        };
        for e in &profile.entries {
            rows.push(OgpRow {
                trial,
                seed,
                z: e.z,
                psi: e.solution.as_ref().map(|s| s.value),
                gamma: e.gamma.value(),
                exact: e.solution.as_ref().is_some_and(|s| s.exact),
            });
        }
        let value_at =
            |z: usize| profile.entries.iter().find(|e| e.z == z).and_then(|e| e.solution.as_ref()).map(|s| s.value);
        let z_low = k * k / n;
        let anchor_min = match (value_at(z_low), value_at(k / 2)) {
            (Some(a), Some(b)) => Some(a.min(b)),
            _ => None,
        };
        let interval_max = interval.and_then(|(lo, hi, _)| (lo..=hi).filter_map(value_at).reduce(f64::max));
        let gap = anchor_min.zip(interval_max).map(|(a, m)| a - m);
        instances.push(OgpInstance {
            trial,
            seed,
            status: "ok".into(),
            witness: params.map(|p| ogp_witness(&profile, &p)),
            interval_max,
            anchor_min,
            gap,
        });
    }
    let gaps: Vec<f64> = instances.iter().filter_map(|i| i.gap).collect();
    let positive_gap_fraction =
        (!gaps.is_empty()).then(|| gaps.iter().filter(|&&g| g > 0.0).count() as f64 / gaps.len() as f64);
    Ok(OgpExperiment { config: config.clone(), dip, rows, instances, positive_gap_fraction })
}
