//! Random edge-weight instances ("disorder") on the complete graph.
//!
//! Weights live in a flat array indexed by the row-major bijection over
//! pairs `i < j`. Every weight is a pure function of `(seed, pair index)`,
//! so sampling is reproducible and order independent.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::rng;

const MOMENT_TOL: f64 = 1e-12;
pub const MATRIX_FORMAT: &str = "dkslab-matrix";
pub const MATRIX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionKind {
    /// Bern(1/2) on {0, 1}.
    BernoulliHalf,
    /// Uniform on {-1, +1}.
    Rademacher,
    /// N(1/2, 1/4).
    GaussianHalfQuarter,
    /// N(0, 1).
    GaussianStd,
    /// Finite support with the given probabilities.
    BoundedCustom { support: Vec<f64>, probabilities: Vec<f64> },
    /// Weights supplied by the caller rather than sampled.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub kind: DistributionKind,
    pub declared_mean: f64,
    pub declared_variance: f64,
}

impl DistributionSpec {
    pub fn bernoulli_half() -> Self {
        Self { kind: DistributionKind::BernoulliHalf, declared_mean: 0.5, declared_variance: 0.25 }
    }

    pub fn rademacher() -> Self {
        Self { kind: DistributionKind::Rademacher, declared_mean: 0.0, declared_variance: 1.0 }
    }

    pub fn gaussian_half_quarter() -> Self {
        Self { kind: DistributionKind::GaussianHalfQuarter, declared_mean: 0.5, declared_variance: 0.25 }
    }

    pub fn gaussian_std() -> Self {
        Self { kind: DistributionKind::GaussianStd, declared_mean: 0.0, declared_variance: 1.0 }
    }

    pub fn explicit() -> Self {
        Self { kind: DistributionKind::Explicit, declared_mean: f64::NAN, declared_variance: f64::NAN }
    }

    /// Finite-support law; declared moments are computed from the support.
    pub fn bounded_custom(support: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        let kind = DistributionKind::BoundedCustom { support, probabilities };
        let (mean, var) = analytic_moments(&kind)?;
        let spec = Self { kind, declared_mean: mean, declared_variance: var };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses the short names used on the command line.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "bernoulli" | "bernoulli_half" | "bern" => Ok(Self::bernoulli_half()),
            "rademacher" => Ok(Self::rademacher()),
            "gaussian" | "gaussian_half_quarter" | "normal_half_quarter" => Ok(Self::gaussian_half_quarter()),
            "gaussian_std" | "normal" | "std_normal" => Ok(Self::gaussian_std()),
            other => Err(LabError::InvalidArgument(format!("unknown distribution `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DistributionKind::BernoulliHalf => "bernoulli_half",
            DistributionKind::Rademacher => "rademacher",
            DistributionKind::GaussianHalfQuarter => "gaussian_half_quarter",
            DistributionKind::GaussianStd => "gaussian_std",
            DistributionKind::BoundedCustom { .. } => "bounded_custom",
            DistributionKind::Explicit => "explicit",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == DistributionKind::Explicit {
            return Ok(());
        }
        let (mean, var) = analytic_moments(&self.kind)?;
        if (mean - self.declared_mean).abs() > MOMENT_TOL || (var - self.declared_variance).abs() > MOMENT_TOL {
            return Err(LabError::InvalidArgument(format!(
                "declared moments ({}, {}) differ from analytic ({mean}, {var})",
                self.declared_mean, self.declared_variance
            )));
        }
        Ok(())
    }

    /// Mean 1/2 and second moment 1/2: the matched-moment class compared
    /// against N(1/2, 1/4) in universality runs.
    pub fn matches_half_quarter_moments(&self) -> bool {
        match analytic_moments(&self.kind) {
            Ok((mean, var)) => (mean - 0.5).abs() <= MOMENT_TOL && (var + mean * mean - 0.5).abs() <= MOMENT_TOL,
            Err(_) => false,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.kind, DistributionKind::GaussianHalfQuarter | DistributionKind::GaussianStd)
    }

    /// Draw for pair index `pair` under `seed`.
    #[inline]
    fn draw(&self, seed: u64, pair: u64) -> f64 {
        match &self.kind {
            DistributionKind::BernoulliHalf => (rng::hash3(seed, 0, pair) >> 63) as f64,
            DistributionKind::Rademacher => {
                if rng::hash3(seed, 0, pair) >> 63 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            DistributionKind::GaussianHalfQuarter => 0.5 + 0.5 * rng::standard_normal(seed, 0, pair),
            DistributionKind::GaussianStd => rng::standard_normal(seed, 0, pair),
            DistributionKind::BoundedCustom { support, probabilities } => {
                let u = rng::unit_open(rng::hash3(seed, 0, pair));
                let mut acc = 0.0;
                for (x, p) in support.iter().zip(probabilities) {
                    acc += p;
                    if u < acc {
                        return *x;
                    }
                }
                *support.last().expect("validated non-empty support")
            }
            DistributionKind::Explicit => unreachable!("explicit weights are never sampled"),
        }
    }
}

fn analytic_moments(kind: &DistributionKind) -> Result<(f64, f64)> {
    Ok(match kind {
        DistributionKind::BernoulliHalf => (0.5, 0.25),
        DistributionKind::Rademacher => (0.0, 1.0),
        DistributionKind::GaussianHalfQuarter => (0.5, 0.25),
        DistributionKind::GaussianStd => (0.0, 1.0),
        DistributionKind::BoundedCustom { support, probabilities } => {
            if support.is_empty() || support.len() != probabilities.len() {
                return Err(LabError::InvalidArgument(
                    "support and probabilities must be non-empty and of equal length".into(),
                ));
            }
            if probabilities.iter().any(|p| !(*p >= 0.0)) {
                return Err(LabError::InvalidArgument("probabilities must be nonnegative".into()));
            }
            let total: f64 = probabilities.iter().sum();
            if (total - 1.0).abs() > MOMENT_TOL {
                return Err(LabError::InvalidArgument(format!("probabilities sum to {total}, not 1")));
            }
            let mean: f64 = support.iter().zip(probabilities).map(|(x, p)| x * p).sum();
            let second: f64 = support.iter().zip(probabilities).map(|(x, p)| x * x * p).sum();
            (mean, second - mean * mean)
        }
        DistributionKind::Explicit => return Err(LabError::InvalidArgument("explicit weights have no law".into())),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedInfo {
    pub clique_vertices: Vec<usize>,
    pub k: usize,
    pub mu: f64,
}

impl PlantedInfo {
    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        // The clique always occupies the prefix 0..k.
        v < self.k
    }
}

/// Upper-triangular weights `Z_ij`, `i < j`, on `n` vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderMatrix {
    n: usize,
    weights: Vec<f64>,
    spec: DistributionSpec,
    planted: Option<PlantedInfo>,
    seed: u64,
}

/// Number of unordered pairs on `n` vertices.
#[inline]
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Row-major index of the pair `{i, j}`, `i != j`.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    a * n - a * (a + 1) / 2 + (b - a - 1)
}

/// Inverse of [`pair_index`].
pub fn pair_from_index(n: usize, mut idx: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - i - 1;
        if idx < row {
            return (i, i + 1 + idx);
        }
        idx -= row;
        i += 1;
    }
}

impl DisorderMatrix {
    /// Caller-supplied weights in pair-index order.
    pub fn from_weights(n: usize, weights: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(LabError::InvalidDimension(format!("n = {n} < 2")));
        }
        if weights.len() != pair_count(n) {
            return Err(LabError::InvalidDimension(format!(
                "expected {} weights for n = {n}, got {}",
                pair_count(n),
                weights.len()
            )));
        }
        Ok(Self { n, weights, spec: DistributionSpec::explicit(), planted: None, seed: 0 })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut weights = Vec::with_capacity(pair_count(n));
        for i in 0..n {
            for j in i + 1..n {
                weights.push(f(i, j));
            }
        }
        Self::from_weights(n, weights)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn planted(&self) -> Option<&PlantedInfo> {
        self.planted.as_ref()
    }

    /// Weight of the pair `{i, j}`; symmetric by construction.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i != j && i < self.n && j < self.n);
        self.weights[pair_index(self.n, i, j)]
    }

    /// Dense symmetric `n × n` copy with zero diagonal, row-major.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        let mut idx = 0;
        for i in 0..n {
            for j in i + 1..n {
                let w = self.weights[idx];
                out[i * n + j] = w;
                out[j * n + i] = w;
                idx += 1;
            }
        }
        out
    }

    /// `Z_S`: total weight of pairs inside `set`.
    pub fn subset_density(&self, set: &[usize]) -> Result<f64> {
        if set.len() < 2 {
            return Err(LabError::InvalidDimension(format!("subset of size {} < 2", set.len())));
        }
        for &v in set {
            if v >= self.n {
                return Err(LabError::InvalidVertex { vertex: v, n: self.n });
            }
        }
        let distinct: BTreeSet<usize> = set.iter().copied().collect();
        if distinct.len() != set.len() {
            return Err(LabError::InvalidArgument("subset has repeated vertices".into()));
        }
        let mut total = 0.0;
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                total += self.weight(i, j);
            }
        }
        Ok(total)
    }

    /// Weights restricted to `vertices` (relabelled `0..len` in the given
    /// order); the result carries no planting.
    pub fn induced(&self, vertices: &[usize]) -> Result<Self> {
        for &v in vertices {
            if v >= self.n {
                return Err(LabError::InvalidVertex { vertex: v, n: self.n });
            }
        }
        let m = vertices.len();
        let mut sub = Self::from_fn(m, |a, b| self.weight(vertices[a], vertices[b]))?;
        sub.spec = self.spec.clone();
        sub.seed = self.seed;
        Ok(sub)
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        let file =
            MatrixFile { format: MATRIX_FORMAT.to_string(), version: MATRIX_FORMAT_VERSION, matrix: self.clone() };
        serde_json::to_writer(writer, &file)?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let file: MatrixFile = serde_json::from_reader(reader)?;
        if file.format != MATRIX_FORMAT {
            return Err(LabError::Schema(format!("unexpected format `{}`", file.format)));
        }
        if file.version != MATRIX_FORMAT_VERSION {
            return Err(LabError::Schema(format!("unsupported matrix version {}", file.version)));
        }
        let m = file.matrix;
        if m.n < 2 || m.weights.len() != pair_count(m.n) {
            return Err(LabError::Schema("weight count does not match n".into()));
        }
        Ok(m)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    format: String,
    version: u32,
    matrix: DisorderMatrix,
}

/// Draws `n(n-1)/2` i.i.d. weights from `spec`.
pub fn sample_disorder(n: usize, spec: &DistributionSpec, seed: u64) -> Result<DisorderMatrix> {
    if n < 2 {
        return Err(LabError::InvalidDimension(format!("n = {n} < 2")));
    }
    if spec.kind == DistributionKind::Explicit {
        return Err(LabError::InvalidArgument("cannot sample explicit weights".into()));
    }
    spec.validate()?;
    let weights = (0..pair_count(n) as u64).map(|e| spec.draw(seed, e)).collect();
    Ok(DisorderMatrix { n, weights, spec: spec.clone(), planted: None, seed })
}

/// Plants a clique on vertices `0..k`.
///
/// Under Bern(1/2) every inside pair becomes an edge (weight 1). Under any
/// other law the inside weights are shifted by `mu`.
pub fn plant_clique(matrix: &DisorderMatrix, k: usize, mu: f64) -> Result<DisorderMatrix> {
    let n = matrix.n;
    if k < 2 || k > n {
        return Err(LabError::InvalidDimension(format!("clique size {k} outside [2, {n}]")));
    }
    if matrix.planted.is_some() {
        return Err(LabError::InvalidArgument("matrix already carries a planted clique".into()));
    }
    let mut out = matrix.clone();
    let bernoulli = matrix.spec.kind == DistributionKind::BernoulliHalf;
    for i in 0..k {
        for j in i + 1..k {
            let idx = pair_index(n, i, j);
            if bernoulli {
                out.weights[idx] = 1.0;
            } else {
                out.weights[idx] += mu;
            }
        }
    }
    out.planted = Some(PlantedInfo { clique_vertices: (0..k).collect(), k, mu: if bernoulli { 0.0 } else { mu } });
    Ok(out)
}
