//! Exact solver for SPLPO and its semi-Lagrangean subproblem.
//!
//! Given an open set `S`, the preference constraints force every customer to
//! its most preferred member of `S`, so both problems reduce to a search over
//! open sets. [`branch_and_bound`] performs a depth-first search over
//! facilities (open branch first) and [`brute_force`] enumerates all sets;
//! both evaluate a leaf with the same arithmetic ([`open_set_cost`]).
//!
//! For the semi-Lagrangean kind the empty set (nobody served, value
//! `sum_i gamma_i`) is an extra candidate. Any non-empty set serves every
//! customer, so its objective `sum (c - gamma) + f + sum gamma` equals its
//! SPLPO cost and is evaluated as such.
//!
//! Ties between equal objective values go to the open set with the
//! lexicographically smallest indicator vector `(y_1, .., y_n)`; the empty set
//! only wins when strictly cheaper.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SplpoError};
use crate::instance::Instance;
use crate::par::{self, Parallelism};
use crate::solution::{heuristic_hc, Solution};

/// Largest `n` accepted by [`brute_force`].
pub const BRUTE_FORCE_MAX_SITES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Splpo,
    Slr,
}

/// What to solve.
#[derive(Debug, Clone)]
pub struct ProblemSpec<'a> {
    pub instance: &'a Instance,
    pub kind: ProblemKind,
    /// Semi-Lagrangean multipliers, `Some` exactly for [`ProblemKind::Slr`].
    pub gamma: Option<Vec<f64>>,
    /// Facilities that must be open (charged their opening cost).
    pub forced_open: Vec<usize>,
    /// `(customer, facility)` pairs whose assignment variable is fixed to 0.
    pub forbidden_x: Vec<(usize, usize)>,
    /// Whether the empty open set is admissible (only for the SLR kind).
    pub allow_empty: bool,
}

impl<'a> ProblemSpec<'a> {
    pub fn splpo(instance: &'a Instance) -> Self {
        Self {
            instance,
            kind: ProblemKind::Splpo,
            gamma: None,
            forced_open: Vec::new(),
            forbidden_x: Vec::new(),
            allow_empty: false,
        }
    }

    pub fn slr(instance: &'a Instance, gamma: Vec<f64>) -> Self {
        Self {
            instance,
            kind: ProblemKind::Slr,
            gamma: Some(gamma),
            forced_open: Vec::new(),
            forbidden_x: Vec::new(),
            allow_empty: true,
        }
    }

    pub fn with_forced_open(mut self, open: impl IntoIterator<Item = usize>) -> Self {
        self.forced_open = open.into_iter().collect();
        self
    }

    pub fn with_forbidden(mut self, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        self.forbidden_x = pairs.into_iter().collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.instance.m(), self.instance.n());
        match (self.kind, &self.gamma) {
            (ProblemKind::Splpo, None) if !self.allow_empty => {}
            (ProblemKind::Splpo, _) => {
                return Err(SplpoError::InvalidArgument(
                    "SPLPO specs take no gamma and never allow the empty set".into(),
                ))
            }
            (ProblemKind::Slr, Some(g)) => {
                if g.len() != m {
                    return Err(SplpoError::InvalidArgument(format!(
                        "gamma has {} entries, expected {m}",
                        g.len()
                    )));
                }
                if g.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(SplpoError::InvalidArgument("gamma must be finite and >= 0".into()));
                }
            }
            (ProblemKind::Slr, None) => {
                return Err(SplpoError::InvalidArgument("SLR spec without gamma".into()))
            }
        }
        if let Some(&j) = self.forced_open.iter().find(|&&j| j >= n) {
            return Err(SplpoError::InvalidArgument(format!("forced facility {j} out of range")));
        }
        if let Some(&(i, j)) = self.forbidden_x.iter().find(|&&(i, j)| i >= m || j >= n) {
            return Err(SplpoError::InvalidArgument(format!("forbidden pair ({i},{j}) out of range")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    pub parallelism: Parallelism,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            node_limit: None,
            time_limit: None,
            parallelism: Parallelism::Sequential,
        }
    }
}

impl Limits {
    pub fn nodes(limit: u64) -> Self {
        Self {
            node_limit: Some(limit),
            ..Self::default()
        }
    }

    pub fn parallel(mut self) -> Self {
        self.parallelism = Parallelism::Parallel;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExactStatus {
    Optimal,
    Incomplete,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub value: f64,
    pub solution: Solution,
    pub status: ExactStatus,
    /// Valid lower bound on the optimum, equal to `value` when optimal.
    pub lower_bound: f64,
    pub nodes: u64,
}

impl ExactResult {
    pub fn is_optimal(&self) -> bool {
        self.status == ExactStatus::Optimal
    }
}

/// Compares open sets by their indicator vectors `(y_1, .., y_n)`.
/// Both slices must be sorted ascending.
pub fn cmp_indicator(a: &[usize], b: &[usize]) -> Ordering {
    let (mut x, mut y) = (a.iter().peekable(), b.iter().peekable());
    loop {
        match (x.peek(), y.peek()) {
            (None, None) => return Ordering::Equal,
            // the first differing facility belongs to the set with a 1 there
            (Some(_), None) => return Ordering::Greater,
            (None, Some(_)) => return Ordering::Less,
            (Some(&&p), Some(&&q)) if p == q => {
                x.next();
                y.next();
            }
            (Some(&&p), Some(&&q)) => return if p < q { Ordering::Greater } else { Ordering::Less },
        }
    }
}

/// SPLPO cost of an open set given each customer's server: service costs
/// summed in customer order, then opening costs in ascending facility order.
pub fn open_set_cost(inst: &Instance, servers: &[usize], open_sorted: &[usize]) -> f64 {
    let service: f64 = servers.iter().enumerate().map(|(i, &j)| inst.c(i, j)).sum();
    service + open_sorted.iter().map(|&j| inst.f(j)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    value: f64,
    open: Vec<usize>,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        match self.value.partial_cmp(&other.value) {
            Some(Ordering::Less) => true,
            Some(Ordering::Greater) | None => false,
            Some(Ordering::Equal) => match (self.open.is_empty(), other.open.is_empty()) {
                (false, true) => true,
                (true, false) => false,
                _ => cmp_indicator(&self.open, &other.open) == Ordering::Less,
            },
        }
    }
}

fn keep_better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.beats(&a) { b } else { a }),
        (a, None) => a,
        (None, b) => b,
    }
}

/// Validated spec in the form the searches need.
struct Problem<'a> {
    inst: &'a Instance,
    forbidden: Option<Vec<bool>>,
    forced: Vec<bool>,
    /// Value of the empty set when admissible.
    empty_value: Option<f64>,
    /// Branching order: ascending `sum_i c_ij + m f_j`, ties by index.
    order: Vec<usize>,
}

impl<'a> Problem<'a> {
    fn new(spec: &ProblemSpec<'a>) -> Result<Self> {
        spec.validate()?;
        let inst = spec.instance;
        let (m, n) = (inst.m(), inst.n());
        let forbidden = if spec.forbidden_x.is_empty() {
            None
        } else {
            let mut mask = vec![false; m * n];
            for &(i, j) in &spec.forbidden_x {
                mask[i * n + j] = true;
            }
            Some(mask)
        };
        let mut forced = vec![false; n];
        for &j in &spec.forced_open {
            forced[j] = true;
        }
        let empty_value = match (spec.kind, spec.allow_empty && spec.forced_open.is_empty()) {
            (ProblemKind::Slr, true) => Some(spec.gamma.as_ref().expect("validated").iter().sum()),
            _ => None,
        };
        let keys: Vec<f64> = (0..n).map(|j| inst.facility_key(j)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
        Ok(Self {
            inst,
            forbidden,
            forced,
            empty_value,
            order,
        })
    }

    #[inline]
    fn is_forbidden(&self, i: usize, j: usize) -> bool {
        self.forbidden
            .as_ref()
            .is_some_and(|mask| mask[i * self.inst.n() + j])
    }

    /// Evaluates a sorted non-empty open set; `None` when a forced
    /// assignment hits a forbidden pair.
    fn evaluate(&self, open_sorted: &[usize]) -> Option<Candidate> {
        let inst = self.inst;
        let mut servers = Vec::with_capacity(inst.m());
        for i in 0..inst.m() {
            let j = inst.most_preferred_in(i, open_sorted)?;
            if self.is_forbidden(i, j) {
                return None;
            }
            servers.push(j);
        }
        Some(Candidate {
            value: open_set_cost(inst, &servers, open_sorted),
            open: open_sorted.to_vec(),
        })
    }

    fn empty_candidate(&self) -> Option<Candidate> {
        self.empty_value.map(|value| Candidate {
            value,
            open: Vec::new(),
        })
    }

    fn to_result(&self, best: Candidate, status: ExactStatus, lower_bound: f64, nodes: u64) -> ExactResult {
        let solution = if best.open.is_empty() {
            Solution {
                open: Vec::new(),
                assign: vec![None; self.inst.m()],
                objective: best.value,
            }
        } else {
            let assign: Vec<usize> = (0..self.inst.m())
                .map(|i| self.inst.most_preferred_in(i, &best.open).expect("non-empty"))
                .collect();
            Solution {
                open: best.open.clone(),
                assign: assign.into_iter().map(Some).collect(),
                objective: best.value,
            }
        };
        let lower_bound = match status {
            ExactStatus::Optimal => best.value,
            ExactStatus::Incomplete => lower_bound.min(best.value),
        };
        ExactResult {
            value: best.value,
            solution,
            status,
            lower_bound,
            nodes,
        }
    }
}

/// Full enumeration of open sets. Verification oracle for small instances.
pub fn brute_force(spec: &ProblemSpec<'_>) -> Result<ExactResult> {
    brute_force_with(spec, Parallelism::Sequential)
}

pub fn brute_force_with(spec: &ProblemSpec<'_>, mode: Parallelism) -> Result<ExactResult> {
    let prob = Problem::new(spec)?;
    let n = prob.inst.n();
    if n > BRUTE_FORCE_MAX_SITES {
        return Err(SplpoError::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_SITES,
        });
    }
    let forced_mask: u64 = prob
        .forced
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .fold(0, |acc, (j, _)| acc | 1 << j);
    let total: u64 = 1 << n;
    let chunks = 64.min(total as usize);
    let per_chunk = total.div_ceil(chunks as u64);
    let bests = par::map_range(mode, chunks, |k| {
        let lo = (k as u64 * per_chunk).max(1);
        let hi = ((k as u64 + 1) * per_chunk).min(total);
        let mut best: Option<Candidate> = None;
        let mut open = Vec::with_capacity(n);
        for mask in lo..hi {
            if mask & forced_mask != forced_mask {
                continue;
            }
            open.clear();
            open.extend((0..n).filter(|j| mask >> j & 1 == 1));
            if let Some(c) = prob.evaluate(&open) {
                if best.as_ref().is_none_or(|b| c.beats(b)) {
                    best = Some(c);
                }
            }
        }
        best
    });
    let best = bests
        .into_iter()
        .fold(prob.empty_candidate(), keep_better)
        .ok_or_else(|| SplpoError::Infeasible("no admissible open set".into()))?;
    let count = total - 1 + u64::from(prob.empty_value.is_some());
    Ok(prob.to_result(best, ExactStatus::Optimal, f64::NEG_INFINITY, count))
}

const UNDECIDED: u8 = 0;
const OPEN: u8 = 1;
const CLOSED: u8 = 2;

/// Incumbent value shared between workers of a parallel search.
struct Shared {
    incumbent: AtomicU64,
    nodes: AtomicU64,
    stop: AtomicBool,
}

impl Shared {
    fn new(value: f64) -> Self {
        Self {
            incumbent: AtomicU64::new(value.to_bits()),
            nodes: AtomicU64::new(0),
            stop: AtomicBool::new(false),
        }
    }

    fn incumbent(&self) -> f64 {
        f64::from_bits(self.incumbent.load(AtomicOrdering::Relaxed))
    }

    fn offer(&self, value: f64) {
        let mut cur = self.incumbent.load(AtomicOrdering::Relaxed);
        while value < f64::from_bits(cur) {
            match self.incumbent.compare_exchange_weak(
                cur,
                value.to_bits(),
                AtomicOrdering::Relaxed,
                AtomicOrdering::Relaxed,
            ) {
                Ok(_) => break,
                Err(actual) => cur = actual,
            }
        }
    }
}

/// Depth-first search state. Customer servers for the forced-open set are
/// maintained incrementally with an undo log.
struct Search<'p, 'a> {
    prob: &'p Problem<'a>,
    limits: Limits,
    start: Instant,
    shared: Option<&'p Shared>,
    state: Vec<u8>,
    best_rank: Vec<u32>,
    best_fac: Vec<usize>,
    undo: Vec<(usize, u32, usize)>,
    open_cost: f64,
    open_count: usize,
    nodes: u64,
    best: Option<Candidate>,
    aborted: bool,
    pending_lb: f64,
}

impl<'p, 'a> Search<'p, 'a> {
    fn new(prob: &'p Problem<'a>, limits: Limits, start: Instant, shared: Option<&'p Shared>) -> Self {
        let (m, n) = (prob.inst.m(), prob.inst.n());
        Self {
            prob,
            limits,
            start,
            shared,
            state: vec![UNDECIDED; n],
            best_rank: vec![u32::MAX; m],
            best_fac: vec![usize::MAX; m],
            undo: Vec::new(),
            open_cost: 0.0,
            open_count: 0,
            nodes: 0,
            best: None,
            aborted: false,
            pending_lb: f64::INFINITY,
        }
    }

    fn open(&mut self, j: usize) -> usize {
        let inst = self.prob.inst;
        let mark = self.undo.len();
        self.state[j] = OPEN;
        self.open_cost += inst.f(j);
        self.open_count += 1;
        for i in 0..inst.m() {
            let r = inst.rank(i, j);
            if r < self.best_rank[i] {
                self.undo.push((i, self.best_rank[i], self.best_fac[i]));
                self.best_rank[i] = r;
                self.best_fac[i] = j;
            }
        }
        mark
    }

    fn unopen(&mut self, j: usize, mark: usize) {
        while self.undo.len() > mark {
            let (i, r, k) = self.undo.pop().expect("undo entry");
            self.best_rank[i] = r;
            self.best_fac[i] = k;
        }
        self.state[j] = UNDECIDED;
        self.open_cost -= self.prob.inst.f(j);
        self.open_count -= 1;
    }

    fn incumbent_value(&self) -> f64 {
        let local = self.best.as_ref().map_or(f64::INFINITY, |b| b.value);
        match self.shared {
            Some(s) => local.min(s.incumbent()),
            None => local,
        }
    }

    fn offer(&mut self, cand: Candidate) {
        if self.best.as_ref().is_none_or(|b| cand.beats(b)) {
            if let Some(s) = self.shared {
                s.offer(cand.value);
            }
            self.best = Some(cand);
        }
    }

    /// Evaluates the current forced-open set as a candidate.
    fn consider_current(&mut self) {
        if self.open_count == 0 {
            return;
        }
        let inst = self.prob.inst;
        if (0..inst.m()).any(|i| self.prob.is_forbidden(i, self.best_fac[i])) {
            return;
        }
        let open: Vec<usize> = (0..inst.n()).filter(|&j| self.state[j] == OPEN).collect();
        let value = open_set_cost(inst, &self.best_fac, &open);
        self.offer(Candidate { value, open });
    }

    /// Lower bound on the cost of every non-empty open set in the subtree.
    fn bound(&self) -> f64 {
        let inst = self.prob.inst;
        let (m, n) = (inst.m(), inst.n());
        if self.open_count == 0 {
            // some undecided facility has to be opened
            let min_f = (0..n)
                .filter(|&j| self.state[j] == UNDECIDED)
                .map(|j| inst.f(j))
                .fold(f64::INFINITY, f64::min);
            if min_f.is_infinite() {
                return f64::INFINITY;
            }
            let service: f64 = (0..m)
                .map(|i| {
                    (0..n)
                        .filter(|&j| self.state[j] != CLOSED)
                        .map(|j| inst.c(i, j))
                        .fold(f64::INFINITY, f64::min)
                })
                .sum();
            return service + min_f;
        }
        // Current servers, minus the most any undecided facility can save by
        // attracting customers that prefer it, net of its opening cost.
        let mut base = self.open_cost;
        // each customer ends at its current server or an undecided facility it prefers
        let mut per_customer = self.open_cost;
        for i in 0..m {
            let cur = inst.c(i, self.best_fac[i]);
            base += cur;
            let rank = self.best_rank[i] as usize;
            per_customer += inst.preference_order(i)[..rank - 1]
                .iter()
                .filter(|&&j| self.state[j] == UNDECIDED)
                .map(|&j| inst.c(i, j))
                .fold(cur, f64::min);
        }
        let mut adjust = 0.0;
        for j in 0..n {
            if self.state[j] != UNDECIDED {
                continue;
            }
            let mut saving = 0.0;
            for i in 0..m {
                if inst.rank(i, j) < self.best_rank[i] {
                    let d = inst.c(i, self.best_fac[i]) - inst.c(i, j);
                    if d > 0.0 {
                        saving += d;
                    }
                }
            }
            let net = inst.f(j) - saving;
            if net < 0.0 {
                adjust += net;
            }
        }
        (base + adjust).max(per_customer)
    }

    /// With forbidden pairs: true when some customer's current server is
    /// forbidden and no undecided, preferred, allowed facility can replace it.
    fn dead_end(&self) -> bool {
        if self.prob.forbidden.is_none() || self.open_count == 0 {
            return false;
        }
        let inst = self.prob.inst;
        (0..inst.m()).any(|i| {
            self.prob.is_forbidden(i, self.best_fac[i])
                && !inst.preference_order(i)[..self.best_rank[i] as usize - 1]
                    .iter()
                    .any(|&j| self.state[j] == UNDECIDED && !self.prob.is_forbidden(i, j))
        })
    }

    fn limit_hit(&mut self) -> bool {
        let total = match self.shared {
            Some(s) => {
                if s.stop.load(AtomicOrdering::Relaxed) {
                    return true;
                }
                s.nodes.fetch_add(1, AtomicOrdering::Relaxed) + 1
            }
            None => self.nodes,
        };
        let hit = self.limits.node_limit.is_some_and(|l| total > l)
            || (total % 256 == 0
                && self
                    .limits
                    .time_limit
                    .is_some_and(|t| self.start.elapsed() >= t));
        if hit {
            if let Some(s) = self.shared {
                s.stop.store(true, AtomicOrdering::Relaxed);
            }
        }
        hit
    }

    fn prune_threshold(&self) -> f64 {
        let inc = self.incumbent_value();
        inc + 1e-9 * inc.abs().max(1.0)
    }

    fn dfs(&mut self, pos: usize) {
        if self.aborted {
            return;
        }
        self.nodes += 1;
        let bound = self.bound();
        if self.limit_hit() {
            self.aborted = true;
            self.pending_lb = self.pending_lb.min(bound);
            return;
        }
        if bound > self.prune_threshold() || self.dead_end() {
            return;
        }
        let order = &self.prob.order;
        let Some(step) = (pos..order.len()).find(|&k| self.state[order[k]] == UNDECIDED) else {
            return;
        };
        let j = order[step];
        let mark = self.open(j);
        self.consider_current();
        self.dfs(step + 1);
        self.unopen(j, mark);
        if self.aborted {
            self.pending_lb = self.pending_lb.min(bound);
            return;
        }
        self.state[j] = CLOSED;
        self.dfs(step + 1);
        self.state[j] = UNDECIDED;
        if self.aborted {
            self.pending_lb = self.pending_lb.min(bound);
        }
    }
}

/// Exact search over open sets.
///
/// Facilities are branched in ascending `sum_i c_ij + m f_j` order, open
/// branch first. A node is pruned when its bound exceeds the incumbent, so
/// equal-valued sets are still visited and the tie-break is independent of
/// the search order. With [`Parallelism::Parallel`] the top of the tree is
/// split into subtrees explored concurrently against a shared incumbent; the
/// optimal value and tie-broken solution match the sequential run.
pub fn branch_and_bound(spec: &ProblemSpec<'_>, limits: Limits) -> Result<ExactResult> {
    let prob = Problem::new(spec)?;
    let inst = prob.inst;
    let start = Instant::now();

    let mut seed = prob.empty_candidate();
    if spec.forced_open.is_empty() && spec.forbidden_x.is_empty() {
        let (hc, _) = heuristic_hc(inst);
        seed = keep_better(seed, prob.evaluate(&hc.open));
    }

    let mut root = Search::new(&prob, limits, start, None);
    for &j in &spec.forced_open {
        if root.state[j] == UNDECIDED {
            root.open(j);
        }
    }
    root.consider_current();
    if let Some(s) = seed {
        root.offer(s);
    }

    let (best, aborted, pending_lb, nodes) = if limits.parallelism.is_parallel() {
        run_parallel(&prob, root, limits, start)
    } else {
        root.dfs(0);
        (root.best, root.aborted, root.pending_lb, root.nodes)
    };

    match best {
        Some(best) => {
            let status = if aborted {
                ExactStatus::Incomplete
            } else {
                ExactStatus::Optimal
            };
            Ok(prob.to_result(best, status, pending_lb, nodes))
        }
        None if aborted => Err(SplpoError::NoIncumbent),
        None => Err(SplpoError::Infeasible("no admissible open set".into())),
    }
}

/// Decision prefix for one parallel subtree.
type Prefix = Vec<(usize, bool)>;

fn run_parallel<'p, 'a>(
    prob: &'p Problem<'a>,
    root: Search<'p, 'a>,
    limits: Limits,
    start: Instant,
) -> (Option<Candidate>, bool, f64, u64) {
    let undecided: Vec<usize> = prob
        .order
        .iter()
        .copied()
        .filter(|&j| root.state[j] == UNDECIDED)
        .collect();
    let depth = undecided.len().min(6);
    let split = &undecided[..depth];
    // enumerate prefixes in DFS order (open before closed)
    let prefixes: Vec<Prefix> = (0..1u32 << depth)
        .map(|code| {
            split
                .iter()
                .enumerate()
                .map(|(k, &j)| (j, code >> (depth - 1 - k) & 1 == 0))
                .collect()
        })
        .collect();

    let shared = Shared::new(root.incumbent_value());
    let root_best = root.best.clone();
    let forced: Vec<usize> = (0..prob.inst.n()).filter(|&j| root.state[j] == OPEN).collect();
    let resume_at = prob
        .order
        .iter()
        .position(|j| !split.contains(j) && root.state[*j] == UNDECIDED)
        .unwrap_or(prob.order.len());

    let outcomes = par::map(Parallelism::Parallel, &prefixes, |prefix| {
        let mut s = Search::new(prob, limits, start, Some(&shared));
        s.best = root_best.clone();
        for &j in &forced {
            s.open(j);
        }
        for &(j, open) in prefix {
            if open {
                s.open(j);
            } else {
                s.state[j] = CLOSED;
            }
        }
        s.consider_current();
        if s.open_count > 0 || prefix.iter().all(|&(_, o)| !o) {
            s.dfs(resume_at);
        }
        (s.best, s.aborted, s.pending_lb, s.nodes)
    });

    let mut best = root_best;
    let mut aborted = false;
    let mut lb = f64::INFINITY;
    let mut nodes = 0;
    for (b, a, p, k) in outcomes {
        best = keep_better(best, b);
        aborted |= a;
        lb = lb.min(p);
        nodes += k;
    }
    (best, aborted, lb, nodes)
}

/// Solves the SPLPO exactly with default limits.
pub fn solve_splpo(inst: &Instance, limits: Limits) -> Result<ExactResult> {
    branch_and_bound(&ProblemSpec::splpo(inst), limits)
}

/// Writes the subproblem in CPLEX LP text format with columns `x_i_j` and
/// `y_j` (1-based), for cross-checking with external MIP solvers.
pub fn write_lp(spec: &ProblemSpec<'_>) -> Result<String> {
    spec.validate()?;
    let inst = spec.instance;
    let (m, n) = (inst.m(), inst.n());
    let gamma = spec.gamma.as_deref();
    let mut out = String::new();
    let _ = writeln!(out, "\\ {:?} subproblem, {m} customers, {n} sites", spec.kind);
    out.push_str("Minimize\n obj:");
    for i in 0..m {
        for j in 0..n {
            let coef = inst.c(i, j) - gamma.map_or(0.0, |g| g[i]);
            let _ = write!(out, " {} {} x_{}_{}", if coef < 0.0 { '-' } else { '+' }, coef.abs(), i + 1, j + 1);
        }
    }
    for j in 0..n {
        let _ = write!(out, " + {} y_{}", inst.f(j), j + 1);
    }
    if let Some(g) = gamma {
        let _ = write!(out, " + {}", g.iter().sum::<f64>());
    }
    out.push_str("\nSubject To\n");
    let sense = if spec.kind == ProblemKind::Slr { "<=" } else { "=" };
    for i in 0..m {
        let terms: Vec<String> = (0..n).map(|j| format!("x_{}_{}", i + 1, j + 1)).collect();
        let _ = writeln!(out, " assign_{}: {} {sense} 1", i + 1, terms.join(" + "));
    }
    for i in 0..m {
        for j in 0..n {
            let _ = writeln!(out, " vub_{0}_{1}: x_{0}_{1} - y_{1} <= 0", i + 1, j + 1);
        }
    }
    for i in 0..m {
        for j in 0..n {
            let terms: Vec<String> = inst
                .weakly_preferred(i, j)
                .iter()
                .map(|k| format!("x_{}_{}", i + 1, k + 1))
                .collect();
            let _ = writeln!(out, " pref_{0}_{1}: {2} - y_{1} >= 0", i + 1, j + 1, terms.join(" + "));
        }
    }
    out.push_str("Bounds\n");
    for i in 0..m {
        for j in 0..n {
            let fixed = spec.forbidden_x.contains(&(i, j));
            let _ = writeln!(out, " 0 <= x_{}_{} <= {}", i + 1, j + 1, if fixed { 0 } else { 1 });
        }
    }
    for &j in &spec.forced_open {
        let _ = writeln!(out, " y_{} = 1", j + 1);
    }
    out.push_str("Binaries\n");
    let ys: Vec<String> = (0..n).map(|j| format!("y_{}", j + 1)).collect();
    let _ = writeln!(out, " {}", ys.join(" "));
    out.push_str("End\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::t1;
    use crate::instance::{generate_instance, GeneratorConfig};
    use crate::solution::check_feasible;

    #[test]
    fn indicator_order() {
        assert_eq!(cmp_indicator(&[1], &[0, 1]), Ordering::Less);
        assert_eq!(cmp_indicator(&[0, 1], &[0]), Ordering::Greater);
        assert_eq!(cmp_indicator(&[2, 3], &[2, 3]), Ordering::Equal);
        assert_eq!(cmp_indicator(&[], &[4]), Ordering::Less);
    }

    #[test]
    fn t1_splpo() {
        let inst = t1();
        for r in [
            branch_and_bound(&ProblemSpec::splpo(&inst), Limits::default()).unwrap(),
            branch_and_bound(&ProblemSpec::splpo(&inst), Limits::default().parallel()).unwrap(),
            brute_force(&ProblemSpec::splpo(&inst)).unwrap(),
        ] {
            assert_eq!(r.value, 8.0);
            assert_eq!(r.solution.open, vec![1]);
            assert!(r.is_optimal());
            assert_eq!(r.lower_bound, 8.0);
        }
    }

    #[test]
    fn t1_slr_below_optimum_picks_empty_set() {
        let inst = t1();
        let spec = ProblemSpec::slr(&inst, vec![2.5, 2.5]);
        let r = branch_and_bound(&spec, Limits::default()).unwrap();
        assert_eq!(r.value, 5.0);
        assert!(r.solution.open.is_empty());
        assert_eq!(r.solution.assign, vec![None, None]);
        assert_eq!(brute_force(&spec).unwrap().value, 5.0);
        let at_cp = ProblemSpec::slr(&inst, vec![6.0, 7.0]);
        assert_eq!(brute_force(&at_cp).unwrap().value, 8.0);
        assert_eq!(branch_and_bound(&at_cp, Limits::default()).unwrap().value, 8.0);
    }

    #[test]
    fn t1_forced_open() {
        let inst = t1();
        let spec = ProblemSpec::splpo(&inst).with_forced_open([0]);
        let r = branch_and_bound(&spec, Limits::default()).unwrap();
        assert_eq!(r.value, 8.0);
        assert_eq!(r.solution.open, vec![0, 1]);
        let bf = brute_force(&spec).unwrap();
        assert_eq!((bf.value, bf.solution), (r.value, r.solution));
    }

    #[test]
    fn uniform_instance_opens_one_facility() {
        let m = 5;
        let p = vec![vec![3, 1, 2, 4]; m];
        let inst = Instance::new(vec![1.0; 4], vec![vec![1.0; 4]; m], p).unwrap();
        let r = brute_force(&ProblemSpec::splpo(&inst)).unwrap();
        assert_eq!(r.value, m as f64 + 1.0);
        assert_eq!(r.solution.open.len(), 1);
        assert_eq!(branch_and_bound(&ProblemSpec::splpo(&inst), Limits::default()).unwrap().value, r.value);
    }

    #[test]
    fn spec_validation() {
        let inst = t1();
        let mut bad = ProblemSpec::splpo(&inst);
        bad.allow_empty = true;
        assert!(bad.validate().is_err());
        assert!(ProblemSpec::slr(&inst, vec![1.0]).validate().is_err());
        assert!(ProblemSpec::slr(&inst, vec![-1.0, 0.0]).validate().is_err());
        assert!(ProblemSpec::splpo(&inst).with_forced_open([5]).validate().is_err());
    }

    #[test]
    fn brute_force_rejects_large_n() {
        let inst = generate_instance(2, 21, 1, &GeneratorConfig::default()).unwrap();
        assert!(matches!(
            brute_force(&ProblemSpec::splpo(&inst)),
            Err(SplpoError::TooLarge { n: 21, .. })
        ));
    }

    #[test]
    fn infeasible_when_every_assignment_is_forbidden() {
        let inst = t1();
        let spec = ProblemSpec::splpo(&inst).with_forbidden([(0, 0), (0, 1)]);
        assert!(matches!(branch_and_bound(&spec, Limits::default()), Err(SplpoError::Infeasible(_))));
        assert!(matches!(brute_force(&spec), Err(SplpoError::Infeasible(_))));
    }

    #[test]
    fn node_limit_gives_valid_bound() {
        for seed in 0..10 {
            let inst = generate_instance(12, 12, seed, &GeneratorConfig::default()).unwrap();
            let opt = brute_force(&ProblemSpec::splpo(&inst)).unwrap().value;
            let r = branch_and_bound(&ProblemSpec::splpo(&inst), Limits::nodes(5)).unwrap();
            assert!(r.lower_bound <= r.value);
            assert!(r.lower_bound <= opt + 1e-9);
            assert!(r.value >= opt);
            if r.status == ExactStatus::Incomplete {
                assert!(r.nodes >= 5);
            }
        }
    }

    #[test]
    fn bnb_matches_brute_force_with_and_without_parallelism() {
        let cfg = GeneratorConfig::default();
        for seed in 0..30 {
            let m = 2 + (seed as usize * 7) % 9;
            let n = 2 + (seed as usize * 5) % 9;
            let inst = generate_instance(m, n, seed, &cfg).unwrap();
            let spec = ProblemSpec::splpo(&inst);
            let bf = brute_force_with(&spec, Parallelism::Parallel).unwrap();
            for limits in [Limits::default(), Limits::default().parallel()] {
                let bb = branch_and_bound(&spec, limits).unwrap();
                assert_eq!(bb.value, bf.value);
                assert_eq!(bb.solution, bf.solution);
                assert!(check_feasible(&inst, &bb.solution).is_empty());
            }
            let ladder = crate::instance::cost_ladder(&inst);
            let gamma: Vec<f64> = (0..m).map(|i| 0.5 * (ladder.lowest(i) + ladder.cp()[i])).collect();
            let slr = ProblemSpec::slr(&inst, gamma);
            let bf = brute_force(&slr).unwrap();
            let bb = branch_and_bound(&slr, Limits::default().parallel()).unwrap();
            assert_eq!((bb.value, &bb.solution), (bf.value, &bf.solution));
        }
    }

    /// Every undecided completion of a partial state costs at least its bound.
    #[test]
    fn node_bounds_are_valid_on_every_partial_state() {
        for seed in 0..6 {
            let inst = generate_instance(6, 5, seed, &GeneratorConfig::default()).unwrap();
            let spec = ProblemSpec::splpo(&inst);
            let prob = Problem::new(&spec).unwrap();
            let n = inst.n();
            // every assignment of {undecided, open, closed} to the facilities
            for code in 0..3usize.pow(n as u32) {
                let mut s = Search::new(&prob, Limits::default(), Instant::now(), None);
                let mut c = code;
                for j in 0..n {
                    match c % 3 {
                        1 => {
                            s.open(j);
                        }
                        2 => s.state[j] = CLOSED,
                        _ => {}
                    }
                    c /= 3;
                }
                let bound = s.bound();
                let mut best = f64::INFINITY;
                for mask in 1u32..1 << n {
                    let fits = (0..n).all(|j| match s.state[j] {
                        OPEN => mask >> j & 1 == 1,
                        CLOSED => mask >> j & 1 == 0,
                        _ => true,
                    });
                    if fits {
                        let open: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
                        best = best.min(prob.evaluate(&open).unwrap().value);
                    }
                }
                assert!(bound <= best + 1e-9, "bound {bound} > subtree best {best}");
            }
        }
    }

    #[test]
    fn forbidden_pairs_agree_with_brute_force() {
        for seed in 0..15 {
            let inst = generate_instance(5, 6, seed, &GeneratorConfig::default()).unwrap();
            let forbidden: Vec<(usize, usize)> = (0..5)
                .flat_map(|i| (0..6).map(move |j| (i, j)))
                .filter(|&(i, j)| (i * 7 + j * 3 + seed as usize).is_multiple_of(4))
                .collect();
            let spec = ProblemSpec::splpo(&inst).with_forbidden(forbidden);
            let a = brute_force(&spec);
            let b = branch_and_bound(&spec, Limits::default());
            match (a, b) {
                (Ok(a), Ok(b)) => assert_eq!((a.value, a.solution), (b.value, b.solution)),
                (Err(SplpoError::Infeasible(_)), Err(SplpoError::Infeasible(_))) => {}
                other => panic!("mismatch: {other:?}"),
            }
        }
    }

    #[test]
    fn lp_export_names_columns() {
        let inst = t1();
        let lp = write_lp(&ProblemSpec::slr(&inst, vec![2.5, 2.5]).with_forced_open([1])).unwrap();
        assert!(lp.contains("assign_1: x_1_1 + x_1_2 <= 1"));
        assert!(lp.contains("pref_1_2: x_1_1 + x_1_2 - y_2 >= 0"));
        assert!(lp.contains("pref_1_1: x_1_1 - y_1 >= 0"));
        assert!(lp.contains(" y_2 = 1"));
        assert!(lp.contains("- 0.5 x_1_1"));
        let lp = write_lp(&ProblemSpec::splpo(&inst)).unwrap();
        assert!(lp.contains("assign_2: x_2_1 + x_2_2 = 1"));
        assert!(lp.ends_with("End\n"));
    }
}
