//! Exact and heuristic densest K-subset search.
//!
//! The exact solver runs two depth-first passes over K-subsets. The first
//! finds the optimal value, visiting vertices in order of decreasing promise
//! and pruning with an admissible bound. The second walks subsets in
//! lexicographic order and stops at the first one within [`TIE_TOLERANCE`]
//! of that value, which realises the lexicographic tie rule.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{first_moment_curve, CurveValue};
use crate::combinatorics::choose_f64;
use crate::disorder::DisorderMatrix;
use crate::error::{LabError, Result};

/// Densities within this absolute distance count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;
/// Largest subset count the plain enumeration path accepts.
pub const ENUMERATION_LIMIT: f64 = 1e8;
/// Below this many subsets `Strategy::Auto` enumerates instead of branching.
pub const AUTO_ENUMERATION_CUTOFF: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Auto,
    BranchAndBound,
    Enumerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Maximum number of search nodes; `None` means unlimited.
    pub node_budget: Option<u64>,
    pub strategy: Strategy,
    /// Heuristic restarts used to seed the branch-and-bound incumbent.
    pub warm_start_restarts: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { node_budget: None, strategy: Strategy::Auto, warm_start_restarts: 4 }
    }
}

impl SolverConfig {
    pub fn with_budget(budget: u64) -> Self {
        Self { node_budget: Some(budget), ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSolution {
    /// Sorted vertex ids.
    pub vertices: Vec<usize>,
    pub value: f64,
    /// True when the value is certified optimal.
    pub exact: bool,
    pub budget_exhausted: bool,
    pub nodes_explored: u64,
}

/// Restriction on how many vertices come from each side of a vertex split.
#[derive(Debug, Clone)]
struct ClassSplit {
    /// Class (0 or 1) of each vertex.
    class: Vec<u8>,
    need: [usize; 2],
}

impl ClassSplit {
    fn unconstrained(n: usize, k: usize) -> Self {
        Self { class: vec![0; n], need: [k, 0] }
    }

    /// Class 0 is the planted prefix `0..k_pc`, from which `z` vertices are taken.
    fn overlap(n: usize, k_pc: usize, k: usize, z: usize) -> Self {
        let class = (0..n).map(|v| u8::from(v >= k_pc)).collect();
        Self { class, need: [z, k - z] }
    }

    fn subset_count(&self) -> f64 {
        let sizes = [
            self.class.iter().filter(|&&c| c == 0).count() as u64,
            self.class.iter().filter(|&&c| c == 1).count() as u64,
        ];
        choose_f64(sizes[0], self.need[0] as u64) * choose_f64(sizes[1], self.need[1] as u64)
    }
}

/// Largest-`cap` running sum over a stream of scores.
struct TopSum {
    cap: usize,
    items: Vec<f64>,
    sum: f64,
}

impl TopSum {
    fn new(cap: usize) -> Self {
        Self { cap, items: Vec::with_capacity(cap), sum: 0.0 }
    }

    fn push(&mut self, x: f64) {
        if self.cap == 0 {
            return;
        }
        if self.items.len() < self.cap {
            self.items.push(x);
            self.sum += x;
        } else {
            // items[0] holds the current minimum.
            if x <= self.items[0] {
                return;
            }
            self.sum += x - self.items[0];
            self.items[0] = x;
        }
        let mut min_at = 0;
        for (i, v) in self.items.iter().enumerate() {
            if *v < self.items[min_at] {
                min_at = i;
            }
        }
        self.items.swap(0, min_at);
    }

    /// Sum of the top `cap` values, or `-inf` if fewer have been seen.
    fn value(&self) -> f64 {
        if self.items.len() < self.cap {
            f64::NEG_INFINITY
        } else {
            self.sum
        }
    }
}

enum Mode {
    Maximize { best: f64, best_set: Option<Vec<usize>> },
    FindFirst { threshold: f64, found: Option<Vec<usize>> },
    Count { threshold: f64, count: u64 },
}

struct Search<'a> {
    n: usize,
    /// Dense weights in search labelling.
    w: &'a [f64],
    /// Neighbours of each vertex sorted by decreasing weight.
    sorted: &'a [Vec<u32>],
    class: &'a [u8],
    prune: bool,
    budget: Option<u64>,
    nodes: u64,
    exhausted: bool,
    mode: Mode,
    chosen: Vec<usize>,
}

impl Search<'_> {
    #[inline]
    fn fp_slack(x: f64) -> f64 {
        1e-11 * (1.0 + x.abs())
    }

    /// True if a subtree with this bound cannot matter.
    #[inline]
    fn dominated(&self, bound: f64) -> bool {
        if !self.prune {
            return bound == f64::NEG_INFINITY;
        }
        match &self.mode {
            Mode::Maximize { best, .. } => bound <= *best + Self::fp_slack(*best),
            Mode::FindFirst { threshold, .. } | Mode::Count { threshold, .. } => {
                bound < *threshold - Self::fp_slack(*threshold)
            }
        }
    }

    fn finished(&self) -> bool {
        self.exhausted || matches!(self.mode, Mode::FindFirst { found: Some(_), .. })
    }

    fn leaf(&mut self, value: f64, last: usize) {
        match &mut self.mode {
            Mode::Maximize { best, best_set } => {
                if value > *best {
                    *best = value;
                    let mut set = self.chosen.clone();
                    set.push(last);
                    *best_set = Some(set);
                }
            }
            Mode::FindFirst { threshold, found } => {
                if value >= *threshold {
                    let mut set = self.chosen.clone();
                    set.push(last);
                    *found = Some(set);
                }
            }
            Mode::Count { threshold, count } => {
                if value >= *threshold {
                    *count += 1;
                }
            }
        }
    }

    /// Sum of the `take` largest weights from `v` to candidates labelled at
    /// least `min_label`.
    fn top_to_candidates(&self, v: usize, min_label: usize, need: [usize; 2], take: usize) -> f64 {
        if take == 0 {
            return 0.0;
        }
        let row = &self.w[v * self.n..(v + 1) * self.n];
        let mut got = 0;
        let mut sum = 0.0;
        for &u in &self.sorted[v] {
            let u = u as usize;
            if u >= min_label && need[self.class[u] as usize] > 0 {
                sum += row[u];
                got += 1;
                if got == take {
                    break;
                }
            }
        }
        sum
    }

    /// `cands`/`gains`: remaining candidates (increasing label) and their
    /// weight into the chosen set; `z` is the chosen set's density.
    fn descend(&mut self, cands: &[usize], gains: &[f64], z: f64, need: [usize; 2]) {
        if self.finished() {
            return;
        }
        self.nodes += 1;
        if let Some(b) = self.budget {
            if self.nodes > b {
                self.exhausted = true;
                return;
            }
        }
        let r = need[0] + need[1];
        if r == 1 {
            for (i, &c) in cands.iter().enumerate() {
                if need[self.class[c] as usize] == 0 {
                    continue;
                }
                let value = z + gains[i];
                self.leaf(value, c);
                if self.finished() {
                    return;
                }
            }
            return;
        }

        let min_label = self.chosen.last().map_or(0, |&v| v + 1);
        let scores: Vec<f64> = if self.prune {
            cands
                .iter()
                .zip(gains)
                .map(|(&c, &g)| g + 0.5 * self.top_to_candidates(c, min_label, need, r - 1))
                .collect()
        } else {
            vec![0.0; cands.len()]
        };

        // Suffix sums of the best scores per class, for the child's needs.
        let len = cands.len();
        let mut suffix = vec![[[0.0f64; 2]; 2]; len + 1];
        let mut tops: [[TopSum; 2]; 2] = [
            [TopSum::new(need[0]), TopSum::new(need[0].saturating_sub(1))],
            [TopSum::new(need[1]), TopSum::new(need[1].saturating_sub(1))],
        ];
        for i in (0..=len).rev() {
            if i < len {
                let cls = self.class[cands[i]] as usize;
                tops[cls][0].push(scores[i]);
                tops[cls][1].push(scores[i]);
            }
            for cls in 0..2 {
                suffix[i][cls] = [tops[cls][0].value(), tops[cls][1].value()];
            }
        }
        if self.dominated(z + suffix[0][0][0] + suffix[0][1][0]) {
            return;
        }

        let mut next_cands = Vec::with_capacity(len);
        let mut next_gains = Vec::with_capacity(len);
        for i in 0..len {
            let c = cands[i];
            let cls = self.class[c] as usize;
            if need[cls] == 0 {
                continue;
            }
            let other = 1 - cls;
            let rest = suffix[i + 1][cls][1] + suffix[i + 1][other][0];
            if rest == f64::NEG_INFINITY {
                // Too few candidates after c; later children have fewer still.
                break;
            }
            let bound = z + scores[i] + rest;
            if self.prune && self.dominated(bound) {
                continue;
            }
            let mut child_need = need;
            child_need[cls] -= 1;
            let row = &self.w[c * self.n..(c + 1) * self.n];
            next_cands.clear();
            next_gains.clear();
            for j in i + 1..len {
                let u = cands[j];
                if child_need[self.class[u] as usize] > 0 {
                    next_cands.push(u);
                    next_gains.push(gains[j] + row[u]);
                }
            }
            self.chosen.push(c);
            let nc = std::mem::take(&mut next_cands);
            let ng = std::mem::take(&mut next_gains);
            self.descend(&nc, &ng, z + gains[i], child_need);
            next_cands = nc;
            next_gains = ng;
            self.chosen.pop();
            if self.finished() {
                return;
            }
        }
    }
}

/// Weights prepared for search under a vertex relabelling.
struct Prepared {
    n: usize,
    w: Vec<f64>,
    sorted: Vec<Vec<u32>>,
    class: Vec<u8>,
    /// `perm[new] = old`.
    perm: Vec<usize>,
}

impl Prepared {
    fn new(matrix: &DisorderMatrix, split: &ClassSplit, perm: Vec<usize>) -> Self {
        let n = matrix.n();
        let dense = matrix.dense();
        let mut w = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                w[a * n + b] = dense[perm[a] * n + perm[b]];
            }
        }
        let sorted = (0..n)
            .map(|v| {
                let mut nb: Vec<u32> = (0..n as u32).filter(|&u| u as usize != v).collect();
                nb.sort_by(|&a, &b| w[v * n + b as usize].total_cmp(&w[v * n + a as usize]).then(a.cmp(&b)));
                nb
            })
            .collect();
        let class = perm.iter().map(|&old| split.class[old]).collect();
        Self { n, w, sorted, class, perm }
    }

    fn search(&self, prune: bool, budget: Option<u64>, mode: Mode) -> Search<'_> {
        Search {
            n: self.n,
            w: &self.w,
            sorted: &self.sorted,
            class: &self.class,
            prune,
            budget,
            nodes: 0,
            exhausted: false,
            mode,
            chosen: Vec::new(),
        }
    }

    fn run(&self, search: &mut Search<'_>, need: [usize; 2]) {
        let cands: Vec<usize> = (0..self.n).filter(|&v| need[self.class[v] as usize] > 0).collect();
        let gains = vec![0.0; cands.len()];
        search.descend(&cands, &gains, 0.0, need);
    }

    fn to_original(&self, set: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = set.iter().map(|&v| self.perm[v]).collect();
        out.sort_unstable();
        out
    }
}

fn check_k(matrix: &DisorderMatrix, k: usize) -> Result<()> {
    if k < 2 || k > matrix.n() {
        return Err(LabError::InvalidDimension(format!("K = {k} outside [2, {}]", matrix.n())));
    }
    Ok(())
}

/// Sum of the `K - 1` largest weights at each vertex.
fn promise(matrix: &DisorderMatrix, k: usize) -> Vec<f64> {
    let n = matrix.n();
    (0..n)
        .map(|v| {
            let mut row: Vec<f64> = (0..n).filter(|&u| u != v).map(|u| matrix.weight(u, v)).collect();
            row.sort_by(|a, b| b.total_cmp(a));
            row.iter().take(k - 1).sum()
        })
        .collect()
}

fn solve(matrix: &DisorderMatrix, k: usize, split: &ClassSplit, config: &SolverConfig) -> Result<SubsetSolution> {
    let n = matrix.n();
    let total = split.subset_count();
    let enumerate = match config.strategy {
        Strategy::Enumerate => {
            if total > ENUMERATION_LIMIT {
                return Err(LabError::Resource(format!("{total:.3e} subsets exceed the enumeration limit")));
            }
            true
        }
        Strategy::BranchAndBound => false,
        Strategy::Auto => total <= AUTO_ENUMERATION_CUTOFF,
    };
    let prune = !enumerate;
    let budget = if enumerate { None } else { config.node_budget };

    // Pass 1: optimal value.
    let (mut best, mut best_set) = (f64::NEG_INFINITY, None);
    if prune && config.warm_start_restarts > 0 {
        let h = heuristic(matrix, k, split, config.warm_start_restarts, 0x5eed)?;
        best = h.value;
        best_set = Some(h.vertices);
    }
    let perm: Vec<usize> = if prune {
        let p = promise(matrix, k);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
        perm
    } else {
        (0..n).collect()
    };
    let first = Prepared::new(matrix, split, perm);
    let mut s1 = first.search(prune, budget, Mode::Maximize { best, best_set: None });
    first.run(&mut s1, split.need);
    let mut nodes = s1.nodes;
    if let Mode::Maximize { best: b, best_set: Some(set) } = &s1.mode {
        best = *b;
        best_set = Some(first.to_original(set));
    }
    let best_set = best_set.ok_or_else(|| LabError::InvalidArgument("no feasible subset".into()))?;
    if s1.exhausted {
        return Ok(SubsetSolution {
            value: matrix.subset_density(&best_set)?,
            vertices: best_set,
            exact: false,
            budget_exhausted: true,
            nodes_explored: nodes,
        });
    }

    // Pass 2: lexicographically first subset tied with the optimum.
    let natural = Prepared::new(matrix, split, (0..n).collect());
    let remaining = budget.map(|b| b.saturating_sub(nodes));
    let mode = Mode::FindFirst { threshold: best - TIE_TOLERANCE, found: None };
    let mut s2 = natural.search(prune, remaining, mode);
    natural.run(&mut s2, split.need);
    nodes += s2.nodes;
    let (vertices, exact, exhausted) = match s2.mode {
        Mode::FindFirst { found: Some(set), .. } => (natural.to_original(&set), true, false),
        // Only reachable through budget exhaustion.
        _ => (best_set, true, s2.exhausted),
    };
    Ok(SubsetSolution {
        value: matrix.subset_density(&vertices)?,
        vertices,
        exact,
        budget_exhausted: exhausted,
        nodes_explored: nodes,
    })
}

/// `Ψ_K`: the maximum of `Z_S` over K-subsets, ties broken towards the
/// lexicographically smallest set.
pub fn psi_exact(matrix: &DisorderMatrix, k: usize, config: &SolverConfig) -> Result<SubsetSolution> {
    check_k(matrix, k)?;
    solve(matrix, k, &ClassSplit::unconstrained(matrix.n(), k), config)
}

fn check_overlap(matrix: &DisorderMatrix, k: usize, z: usize) -> Result<usize> {
    check_k(matrix, k)?;
    let n = matrix.n();
    let k_pc = matrix.planted().ok_or(LabError::MissingPlant)?.k;
    let infeasible = |reason: String| Err(LabError::InfeasibleOverlap { z, reason });
    if z > k {
        return infeasible(format!("z exceeds K = {k}"));
    }
    if z < k * k / n {
        return infeasible(format!("z below floor(K^2/n) = {}", k * k / n));
    }
    if z > k_pc {
        return infeasible(format!("only {k_pc} planted vertices"));
    }
    if k - z > n - k_pc {
        return infeasible(format!("only {} vertices outside the clique for {} slots", n - k_pc, k - z));
    }
    Ok(k_pc)
}

/// `Ψ_K(z)`: the maximum over K-subsets meeting the planted clique in
/// exactly `z` vertices.
pub fn psi_overlap(matrix: &DisorderMatrix, k: usize, z: usize, config: &SolverConfig) -> Result<SubsetSolution> {
    let k_pc = check_overlap(matrix, k, z)?;
    solve(matrix, k, &ClassSplit::overlap(matrix.n(), k_pc, k, z), config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub z: usize,
    /// `None` when the overlap is infeasible for this instance.
    pub solution: Option<SubsetSolution>,
    pub gamma: CurveValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapProfile {
    pub k: usize,
    pub entries: Vec<ProfileEntry>,
}

impl OverlapProfile {
    pub fn z_values(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.z).collect()
    }

    pub fn psi_values(&self) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.solution.as_ref().map(|s| s.value)).collect()
    }

    /// Overlaps whose solve stopped on the node budget.
    pub fn budget_hits(&self) -> Vec<usize> {
        self.entries.iter().filter(|e| e.solution.as_ref().is_some_and(|s| s.budget_exhausted)).map(|e| e.z).collect()
    }

    pub fn all_exact(&self) -> bool {
        self.entries.iter().all(|e| e.solution.as_ref().is_none_or(|s| s.exact))
    }

    pub fn max_value(&self) -> Option<f64> {
        self.entries.iter().filter_map(|e| e.solution.as_ref().map(|s| s.value)).reduce(f64::max)
    }
}

/// Solves every overlap in `floor(K^2/n)..=K` and overlays the first moment
/// curve.
pub fn psi_profile(matrix: &DisorderMatrix, k: usize, config: &SolverConfig) -> Result<OverlapProfile> {
    check_k(matrix, k)?;
    let z_min = k * k / matrix.n();
    psi_profile_range(matrix, k, z_min, config)
}

/// Like [`psi_profile`] but starting at `z_min`, which may lie below
/// `floor(K^2/n)` so that the profile covers every subset.
pub fn psi_profile_range(
    matrix: &DisorderMatrix,
    k: usize,
    z_min: usize,
    config: &SolverConfig,
) -> Result<OverlapProfile> {
    check_k(matrix, k)?;
    let n = matrix.n();
    let k_pc = matrix.planted().ok_or(LabError::MissingPlant)?.k;
    let mut entries = Vec::new();
    for z in z_min..=k {
        let feasible = z <= k_pc && k - z <= n - k_pc;
        let solution =
            if feasible { Some(solve(matrix, k, &ClassSplit::overlap(n, k_pc, k, z), config)?) } else { None };
        let gamma = first_moment_curve(n as u64, k as u64, z as u64).unwrap_or(CurveValue::Undefined);
        entries.push(ProfileEntry { z, solution, gamma });
    }
    Ok(OverlapProfile { k, entries })
}

fn heuristic(
    matrix: &DisorderMatrix,
    k: usize,
    split: &ClassSplit,
    restarts: usize,
    seed: u64,
) -> Result<SubsetSolution> {
    if restarts == 0 {
        return Err(LabError::InvalidArgument("restarts must be positive".into()));
    }
    let n = matrix.n();
    let w = matrix.dense();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for run in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::rng::trial_seed(seed, run as u64));
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut in_set = vec![false; n];
        let mut taken = [0usize; 2];
        let mut g = vec![0.0; n];
        let mut set = Vec::with_capacity(k);
        let add = |v: usize, set: &mut Vec<usize>, in_set: &mut [bool], g: &mut [f64], taken: &mut [usize; 2]| {
            set.push(v);
            in_set[v] = true;
            taken[split.class[v] as usize] += 1;
            for (x, gx) in g.iter_mut().enumerate() {
                *gx += w[v * n + x];
            }
        };
        let start = order
            .iter()
            .copied()
            .find(|&v| split.need[split.class[v] as usize] > 0)
            .expect("some class has positive need");
        add(start, &mut set, &mut in_set, &mut g, &mut taken);
        while set.len() < k {
            let mut pick: Option<usize> = None;
            for &v in &order {
                let cls = split.class[v] as usize;
                if in_set[v] || taken[cls] >= split.need[cls] {
                    continue;
                }
                if pick.is_none_or(|p| g[v] > g[p]) {
                    pick = Some(v);
                }
            }
            let v = pick.expect("enough vertices in each class");
            add(v, &mut set, &mut in_set, &mut g, &mut taken);
        }
        // Best-improvement swaps within a class.
        loop {
            let mut best_move: Option<(f64, usize, usize)> = None;
            for (si, &u) in set.iter().enumerate() {
                for v in 0..n {
                    if in_set[v] || split.class[v] != split.class[u] {
                        continue;
                    }
                    let delta = g[v] - w[u * n + v] - g[u];
                    if delta > 1e-12 && best_move.is_none_or(|(d, _, _)| delta > d) {
                        best_move = Some((delta, si, v));
                    }
                }
            }
            let Some((_, si, v)) = best_move else { break };
            let u = set[si];
            set[si] = v;
            in_set[u] = false;
            in_set[v] = true;
            for x in 0..n {
                g[x] += w[v * n + x] - w[u * n + x];
            }
        }
        let value = matrix.subset_density(&set)?;
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            set.sort_unstable();
            best = Some((value, set));
        }
    }
    let (value, vertices) = best.expect("restarts > 0");
    Ok(SubsetSolution { vertices, value, exact: false, budget_exhausted: false, nodes_explored: 0 })
}

/// Greedy seeding plus 1-swap local search, best of `restarts` runs.
pub fn psi_lower_heuristic(matrix: &DisorderMatrix, k: usize, restarts: usize, seed: u64) -> Result<SubsetSolution> {
    check_k(matrix, k)?;
    heuristic(matrix, k, &ClassSplit::unconstrained(matrix.n(), k), restarts, seed)
}

/// Same as [`psi_lower_heuristic`] restricted to overlap `z` with the planted clique.
pub fn psi_overlap_heuristic(
    matrix: &DisorderMatrix,
    k: usize,
    z: usize,
    restarts: usize,
    seed: u64,
) -> Result<SubsetSolution> {
    let k_pc = check_overlap(matrix, k, z)?;
    heuristic(matrix, k, &ClassSplit::overlap(matrix.n(), k_pc, k, z), restarts, seed)
}

/// `U`: the number of K-subsets with `Z_S >= threshold`.
pub fn count_exceeding(matrix: &DisorderMatrix, k: usize, threshold: f64) -> Result<u64> {
    check_k(matrix, k)?;
    let total = choose_f64(matrix.n() as u64, k as u64);
    if total > ENUMERATION_LIMIT {
        return Err(LabError::Resource(format!("{total:.3e} subsets exceed the enumeration limit")));
    }
    let split = ClassSplit::unconstrained(matrix.n(), k);
    let prepared = Prepared::new(matrix, &split, (0..matrix.n()).collect());
    let prune = threshold > f64::NEG_INFINITY;
    let mut search = prepared.search(prune, None, Mode::Count { threshold, count: 0 });
    prepared.run(&mut search, split.need);
    match search.mode {
        Mode::Count { count, .. } => Ok(count),
        _ => unreachable!(),
    }
}
