//! Networks, grid instances and the flow player's problem.
//!
//! Node potentials follow the incidence convention `N[i][e] = +1` when arc
//! `e` enters node `i` and `-1` when it leaves, so the dual of the max-flow
//! LP reads `λ_e + υ_head − υ_tail ≥ d_e`, `λ ∈ [0, 1]`, with `υ` fixed to
//! zero at the source and the sink.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Tolerance for comparing capacities and flows.
pub const FLOW_TOL: f64 = 1e-9;

/// Directed s–t network. Arcs entering the source or leaving the sink are
/// rejected, which keeps the combinatorial max-flow equal to the flow LP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    node_count: usize,
    source: usize,
    sink: usize,
    arcs: Vec<(usize, usize)>,
    out_arcs: Vec<Vec<usize>>,
    in_arcs: Vec<Vec<usize>>,
}

impl Network {
    pub fn new(node_count: usize, source: usize, sink: usize, arcs: Vec<(usize, usize)>) -> Result<Self> {
        if source >= node_count || sink >= node_count || source == sink {
            return Err(Error::InvalidInput(alloc::format!(
                "source {source} and sink {sink} must be distinct nodes below {node_count}"
            )));
        }
        let mut out_arcs = vec![Vec::new(); node_count];
        let mut in_arcs = vec![Vec::new(); node_count];
        for (e, &(u, v)) in arcs.iter().enumerate() {
            if u >= node_count || v >= node_count || u == v {
                return Err(Error::InvalidInput(alloc::format!("arc {e} = ({u}, {v}) is invalid")));
            }
            if v == source || u == sink {
                return Err(Error::InvalidInput(alloc::format!(
                    "arc {e} = ({u}, {v}) enters the source or leaves the sink"
                )));
            }
            out_arcs[u].push(e);
            in_arcs[v].push(e);
        }
        Ok(Self {
            node_count,
            source,
            sink,
            arcs,
            out_arcs,
            in_arcs,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn out_arcs(&self, node: usize) -> &[usize] {
        &self.out_arcs[node]
    }

    pub fn in_arcs(&self, node: usize) -> &[usize] {
        &self.in_arcs[node]
    }

    pub fn is_terminal(&self, node: usize) -> bool {
        node == self.source || node == self.sink
    }

    /// Row `node` of the incidence matrix as `(arc, ±1)` pairs.
    pub fn incidence(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.in_arcs[node]
            .iter()
            .map(|&e| (e, 1.0))
            .chain(self.out_arcs[node].iter().map(|&e| (e, -1.0)))
    }

    /// The objective selector `d`: 1 on arcs entering the sink.
    pub fn sink_indicator(&self) -> Vec<f64> {
        self.arcs
            .iter()
            .map(|&(_, v)| if v == self.sink { 1.0 } else { 0.0 })
            .collect()
    }
}

/// Arc capacities of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityVector(Vec<f64>);

impl CapacityVector {
    pub fn new(caps: Vec<f64>) -> Result<Self> {
        if let Some((e, c)) = caps.iter().enumerate().find(|(_, c)| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::InvalidInput(alloc::format!("capacity of arc {e} is {c}")));
        }
        Ok(Self(caps))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A set of removed arcs, kept sorted. Plans order lexicographically by
/// their sorted arc lists, so the empty plan comes first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct InterdictionPlan {
    arcs: Vec<usize>,
}

impl InterdictionPlan {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(mut arcs: Vec<usize>, num_arcs: usize) -> Result<Self> {
        arcs.sort_unstable();
        arcs.dedup();
        if let Some(&e) = arcs.last() {
            if e >= num_arcs {
                return Err(Error::InvalidInput(alloc::format!(
                    "plan removes arc {e} but the network has {num_arcs} arcs"
                )));
            }
        }
        Ok(Self { arcs })
    }

    /// Reads a 0/1 indicator vector, rounding at 1/2.
    pub fn from_indicator(ell: &[f64]) -> Self {
        Self {
            arcs: ell.iter().enumerate().filter(|(_, &v)| v > 0.5).map(|(e, _)| e).collect(),
        }
    }

    pub fn arcs(&self) -> &[usize] {
        &self.arcs
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn contains(&self, arc: usize) -> bool {
        self.arcs.binary_search(&arc).is_ok()
    }

    pub fn indicator(&self, num_arcs: usize) -> Vec<f64> {
        let mut v = vec![0.0; num_arcs];
        for &e in &self.arcs {
            v[e] = 1.0;
        }
        v
    }

    pub fn within_budget(&self, budget: usize) -> bool {
        self.arcs.len() <= budget
    }
}

impl PartialOrd for InterdictionPlan {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for InterdictionPlan {
    fn cmp(&self, other: &Self) -> Ordering {
        self.arcs.cmp(&other.arcs)
    }
}

/// Capacity scenarios `c¹ … cᴷ` over a common arc set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    caps: Vec<CapacityVector>,
}

impl ScenarioSet {
    pub fn new(num_arcs: usize, caps: Vec<Vec<f64>>) -> Result<Self> {
        if caps.is_empty() {
            return Err(Error::EmptyScenarioSet);
        }
        let caps = caps
            .into_iter()
            .map(|c| {
                if c.len() != num_arcs {
                    return Err(Error::DimensionMismatch {
                        what: "scenario capacities",
                        expected: num_arcs,
                        found: c.len(),
                    });
                }
                CapacityVector::new(c)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { caps })
    }

    pub fn len(&self) -> usize {
        self.caps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.caps.is_empty()
    }

    pub fn num_arcs(&self) -> usize {
        self.caps[0].len()
    }

    pub fn get(&self, k: usize) -> &CapacityVector {
        &self.caps[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &CapacityVector> {
        self.caps.iter()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxFlowResult {
    pub value: f64,
    pub flow: Vec<f64>,
    /// Arc duals: 1 on arcs crossing the minimum cut, 0 elsewhere.
    pub lambda: Vec<f64>,
    /// Node potentials: 0 on the source side, −1 on the sink side, 0 at
    /// both terminals.
    pub upsilon: Vec<f64>,
    /// Nodes reachable from the source in the final residual network.
    pub source_side: Vec<bool>,
}

impl MaxFlowResult {
    /// `(1−ℓ)ᵀ C λ`, the dual objective of the certificate.
    pub fn cut_value(&self, cap: &CapacityVector, plan: &InterdictionPlan) -> f64 {
        cap.as_slice()
            .iter()
            .enumerate()
            .filter(|(e, _)| !plan.contains(*e))
            .map(|(e, c)| c * self.lambda[e])
            .sum()
    }
}

struct Residual {
    head: Vec<usize>,
    cap: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

impl Residual {
    fn bfs_levels(&self, s: usize, level: &mut [usize]) {
        level.iter_mut().for_each(|l| *l = usize::MAX);
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &r in &self.adj[u] {
                let v = self.head[r];
                if self.cap[r] > FLOW_TOL && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }

    /// Blocking-flow search along level-increasing residual arcs.
    fn push(&mut self, u: usize, t: usize, limit: f64, level: &[usize], next: &mut [usize]) -> f64 {
        if u == t {
            return limit;
        }
        while next[u] < self.adj[u].len() {
            let r = self.adj[u][next[u]];
            let v = self.head[r];
            if self.cap[r] > FLOW_TOL && level[v] == level[u] + 1 {
                let pushed = self.push(v, t, limit.min(self.cap[r]), level, next);
                if pushed > 0.0 {
                    self.cap[r] -= pushed;
                    self.cap[r ^ 1] += pushed;
                    return pushed;
                }
            }
            next[u] += 1;
        }
        0.0
    }
}

/// Maximum s–t flow with capacities `c_e(1 − ℓ_e)` and a min-cut dual
/// certificate (Dinic's algorithm).
pub fn max_flow(net: &Network, cap: &CapacityVector, plan: &InterdictionPlan) -> Result<MaxFlowResult> {
    let m = net.num_arcs();
    if cap.len() != m {
        return Err(Error::DimensionMismatch {
            what: "capacity vector",
            expected: m,
            found: cap.len(),
        });
    }
    if plan.arcs().last().is_some_and(|&e| e >= m) {
        return Err(Error::InvalidInput(alloc::format!("plan references arcs beyond {m}")));
    }
    let n = net.node_count();
    let mut res = Residual {
        head: Vec::with_capacity(2 * m),
        cap: Vec::with_capacity(2 * m),
        adj: vec![Vec::new(); n],
    };
    for (e, &(u, v)) in net.arcs().iter().enumerate() {
        let c = if plan.contains(e) { 0.0 } else { cap.as_slice()[e] };
        res.adj[u].push(res.head.len());
        res.head.push(v);
        res.cap.push(c);
        res.adj[v].push(res.head.len());
        res.head.push(u);
        res.cap.push(0.0);
    }

    let (s, t) = (net.source(), net.sink());
    let mut level = vec![usize::MAX; n];
    let mut next = vec![0usize; n];
    loop {
        res.bfs_levels(s, &mut level);
        if level[t] == usize::MAX {
            break;
        }
        next.iter_mut().for_each(|x| *x = 0);
        while res.push(s, t, f64::INFINITY, &level, &mut next) > 0.0 {}
    }

    // After the last BFS, `level` marks the residual-reachable set.
    let source_side: Vec<bool> = level.iter().map(|&l| l != usize::MAX).collect();
    let flow: Vec<f64> = (0..m).map(|e| res.cap[2 * e + 1]).collect();
    let value = net.in_arcs(t).iter().map(|&e| flow[e]).sum();
    let lambda = net
        .arcs()
        .iter()
        .map(|&(u, v)| if source_side[u] && !source_side[v] { 1.0 } else { 0.0 })
        .collect();
    let upsilon = (0..n)
        .map(|i| if net.is_terminal(i) || source_side[i] { 0.0 } else { -1.0 })
        .collect();
    Ok(MaxFlowResult {
        value,
        flow,
        lambda,
        upsilon,
        source_side,
    })
}

/// Flow value `f_{ℓ,k}` for every scenario.
pub fn flow_vector(net: &Network, scenarios: &ScenarioSet, plan: &InterdictionPlan) -> Result<Vec<f64>> {
    scenarios.iter().map(|c| max_flow(net, c, plan).map(|r| r.value)).collect()
}

/// Largest uninterdicted max-flow over the scenarios, `ζ̄ = max_k f_{∅,k}`.
pub fn zeta_bar(net: &Network, scenarios: &ScenarioSet) -> Result<f64> {
    if scenarios.is_empty() {
        return Err(Error::EmptyScenarioSet);
    }
    let f = flow_vector(net, scenarios, &InterdictionPlan::empty())?;
    Ok(f.into_iter().fold(0.0, f64::max))
}

/// Node id of grid node `(row, col)` in a generated `m × n` grid.
pub fn grid_node(m: usize, row: usize, col: usize) -> usize {
    1 + col * m + row
}

/// An `m × n` grid: the source feeds every node of the first column, the
/// last column feeds the sink, horizontal arcs point toward the sink and
/// each pair of vertically adjacent nodes gets one arc of random direction.
///
/// Node 0 is the source and node `m·n + 1` the sink. Arcs are listed source
/// arcs first, then column by column (vertical arcs, then the horizontal arcs
/// to the next column), then sink arcs.
pub fn generate_grid(m: usize, n: usize, seed: u64) -> Result<Network> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput(alloc::format!("grid must be at least 1x1, got {m}x{n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s, t) = (0, m * n + 1);
    let mut arcs = Vec::with_capacity(2 * m + m * (n - 1) + (m - 1) * n);
    for r in 0..m {
        arcs.push((s, grid_node(m, r, 0)));
    }
    for c in 0..n {
        for r in 0..m.saturating_sub(1) {
            let (a, b) = (grid_node(m, r, c), grid_node(m, r + 1, c));
            arcs.push(if rng.random::<bool>() { (a, b) } else { (b, a) });
        }
        if c + 1 < n {
            for r in 0..m {
                arcs.push((grid_node(m, r, c), grid_node(m, r, c + 1)));
            }
        }
    }
    for r in 0..m {
        arcs.push((grid_node(m, r, n - 1), t));
    }
    Network::new(m * n + 2, s, t, arcs)
}

/// Number of plans with at most `budget` arcs out of `num_arcs`, empty plan
/// included.
pub fn count_plans(num_arcs: usize, budget: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for j in 0..=budget.min(num_arcs) {
        total = total.saturating_add(binom);
        binom = binom.saturating_mul((num_arcs - j) as u128) / (j as u128 + 1);
    }
    total
}

/// All plans with at most `budget` arcs, in lexicographic order. Refuses when
/// there are more than `cap`.
pub fn enumerate_plans(num_arcs: usize, budget: usize, cap: u128) -> Result<Vec<InterdictionPlan>> {
    let count = count_plans(num_arcs, budget);
    if count > cap {
        return Err(Error::EnumerationCap { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut cur: Vec<usize> = Vec::new();
    fn rec(start: usize, n: usize, budget: usize, cur: &mut Vec<usize>, out: &mut Vec<InterdictionPlan>) {
        out.push(InterdictionPlan { arcs: cur.clone() });
        if cur.len() == budget {
            return;
        }
        for e in start..n {
            cur.push(e);
            rec(e + 1, n, budget, cur, out);
            cur.pop();
        }
    }
    rec(0, num_arcs, budget, &mut cur, &mut out);
    Ok(out)
}
