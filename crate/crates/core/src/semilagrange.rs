//! Semi-Lagrangean relaxation and its dual ascent.
//!
//! `SLR(gamma)` relaxes only the `sum_j x_ij >= 1` half of the assignment
//! constraint. Its dual has no gap, and its useful multipliers live in the box
//! `c_i^1 < gamma_i <= cp_i`. The ascent walks each unserved customer's
//! multiplier up its ladder of sorted service costs until everybody is served.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exact::{branch_and_bound, ExactStatus, Limits, ProblemSpec};
use crate::instance::{CostLadder, Instance};

/// Multipliers placed on the cost ladder. `rung[i]` is the 1-based index
/// `j_i` such that `gamma_i` represents the interval just above `c_i^{j_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaState {
    pub gamma: Vec<f64>,
    pub rung: Vec<usize>,
    pub epsilon: f64,
}

impl GammaState {
    pub fn at_ceiling(&self, ladder: &CostLadder) -> usize {
        self.gamma
            .iter()
            .zip(ladder.cp())
            .filter(|(g, cp)| g >= cp)
            .count()
    }
}

/// Half the smallest positive gap between consecutive sorted costs of any
/// customer; `1e-6 (1 + max cost)` when every ladder is flat.
pub fn default_epsilon(ladder: &CostLadder) -> f64 {
    let mut gap = f64::INFINITY;
    let mut top: f64 = 0.0;
    for i in 0..ladder.m() {
        let row = ladder.sorted_costs(i);
        top = top.max(row[row.len() - 1]);
        for w in row.windows(2) {
            let d = w[1] - w[0];
            if d > 0.0 && d < gap {
                gap = d;
            }
        }
    }
    if gap.is_finite() {
        gap / 2.0
    } else {
        1e-6 * (1.0 + top)
    }
}

/// Snaps a starting vector onto interval representatives.
///
/// Below the first rung a component moves to `c_i^1 + eps`; above the last
/// it becomes `c_i^n` (or `min(c_i^n + eps, cp_i)` with `snap_top`);
/// otherwise it drops to the lower end of its interval plus `eps`.
pub fn place_gamma(ladder: &CostLadder, gamma0: &[f64], epsilon: f64, snap_top: bool) -> GammaState {
    assert!(epsilon > 0.0, "epsilon must be positive");
    assert_eq!(gamma0.len(), ladder.m());
    let n = ladder.n();
    let mut gamma = Vec::with_capacity(gamma0.len());
    let mut rung = Vec::with_capacity(gamma0.len());
    for (i, &g0) in gamma0.iter().enumerate() {
        let cp = ladder.cp()[i];
        let costs = ladder.sorted_costs(i);
        let (g, j) = if g0 <= costs[0] {
            (costs[0] + epsilon, 1)
        } else if g0 > costs[n - 1] {
            let top = if snap_top { costs[n - 1] + epsilon } else { costs[n - 1] };
            (top, n)
        } else {
            let j = costs.partition_point(|&c| c < g0);
            (costs[j - 1] + epsilon, j)
        };
        gamma.push(g.min(cp));
        rung.push(j);
    }
    GammaState { gamma, rung, epsilon }
}

/// Moves every unserved customer (`s_i = 1`) one rung up, capped at `cp_i`.
pub fn ascend(ladder: &CostLadder, state: &GammaState, s: &[u8]) -> GammaState {
    let mut next = state.clone();
    for (i, &si) in s.iter().enumerate() {
        if si == 1 {
            next.rung[i] = (next.rung[i] + 1).min(ladder.n() + 1);
            next.gamma[i] = (ladder.rung(i, next.rung[i]) + state.epsilon).min(ladder.cp()[i]);
        }
    }
    next
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlrSolution {
    pub value: f64,
    pub open: Vec<usize>,
    pub assign: Vec<Option<usize>>,
    pub served: Vec<bool>,
    pub status: ExactStatus,
    pub lower_bound: f64,
}

impl SlrSolution {
    pub fn served_count(&self) -> usize {
        self.served.iter().filter(|&&b| b).count()
    }

    pub fn serves_everyone(&self) -> bool {
        self.served.iter().all(|&b| b)
    }
}

/// Pairs the pre-fixing rule sets to zero: `c_ij - gamma_i > 0`.
pub fn prefixed_pairs(inst: &Instance, gamma: &[f64]) -> Vec<(usize, usize)> {
    (0..inst.m())
        .flat_map(|i| (0..inst.n()).map(move |j| (i, j)))
        .filter(|&(i, j)| inst.c(i, j) - gamma[i] > 0.0)
        .collect()
}

/// Solves `SLR(gamma)` with the exact engine.
pub fn solve_slr(inst: &Instance, gamma: &[f64], prefix: bool, limits: Limits) -> Result<SlrSolution> {
    let mut spec = ProblemSpec::slr(inst, gamma.to_vec());
    if prefix {
        spec = spec.with_forbidden(prefixed_pairs(inst, gamma));
    }
    let r = branch_and_bound(&spec, limits)?;
    let served = r.solution.assign.iter().map(Option::is_some).collect();
    Ok(SlrSolution {
        value: r.value,
        open: r.solution.open,
        assign: r.solution.assign,
        served,
        status: r.status,
        lower_bound: r.lower_bound,
    })
}

/// `s_i = 1` iff customer `i` is unserved.
pub fn slr_subgradient(slr: &SlrSolution) -> Vec<u8> {
    slr.served.iter().map(|&b| u8::from(!b)).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DaConfig {
    /// [`default_epsilon`] when `None`.
    pub epsilon: Option<f64>,
    /// Ascent steps after the initial solve; unbounded when `None`.
    pub max_iter: Option<usize>,
    pub prefix: bool,
    pub snap_top: bool,
    pub limits: Limits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DaStatus {
    Optimal,
    IterLimit,
    Incomplete,
    /// Every unserved customer already sits at its ceiling.
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DaTraceRow {
    pub iteration: usize,
    pub value: f64,
    pub served: usize,
    pub at_ceiling: usize,
}

/// Step-by-step dual ascent, used directly by the ADA pipeline.
#[derive(Debug, Clone)]
pub struct DualAscent<'a> {
    inst: &'a Instance,
    ladder: CostLadder,
    cfg: DaConfig,
    state: GammaState,
    current: SlrSolution,
    iteration: usize,
    best_bound: f64,
    trace: Vec<DaTraceRow>,
}

impl<'a> DualAscent<'a> {
    /// Places `gamma0` on the ladder and solves iteration 0. Components
    /// already at or above their ceiling stay at `cp_i`.
    pub fn start(inst: &'a Instance, gamma0: &[f64], cfg: DaConfig) -> Result<Self> {
        let ladder = CostLadder::new(inst);
        let epsilon = cfg.epsilon.unwrap_or_else(|| default_epsilon(&ladder));
        let mut state = place_gamma(&ladder, gamma0, epsilon, cfg.snap_top);
        for (i, &g0) in gamma0.iter().enumerate() {
            if g0 >= ladder.cp()[i] {
                state.gamma[i] = ladder.cp()[i];
                state.rung[i] = ladder.n() + 1;
            }
        }
        let current = solve_slr(inst, &state.gamma, cfg.prefix, cfg.limits)?;
        let mut da = Self {
            inst,
            ladder,
            cfg,
            state,
            current,
            iteration: 0,
            best_bound: f64::NEG_INFINITY,
            trace: Vec::new(),
        };
        da.record();
        Ok(da)
    }

    fn record(&mut self) {
        self.best_bound = self.best_bound.max(self.current.lower_bound);
        self.trace.push(DaTraceRow {
            iteration: self.iteration,
            value: self.current.value,
            served: self.current.served_count(),
            at_ceiling: self.state.at_ceiling(&self.ladder),
        });
    }

    pub fn state(&self) -> &GammaState {
        &self.state
    }

    pub fn current(&self) -> &SlrSolution {
        &self.current
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Largest valid lower bound seen so far.
    pub fn best_bound(&self) -> f64 {
        self.best_bound
    }

    pub fn trace(&self) -> &[DaTraceRow] {
        &self.trace
    }

    pub fn is_optimal(&self) -> bool {
        self.current.serves_everyone() && self.current.status == ExactStatus::Optimal
    }

    /// True when ascending cannot change any multiplier.
    pub fn is_stalled(&self) -> bool {
        let s = slr_subgradient(&self.current);
        s.iter()
            .enumerate()
            .filter(|(_, &si)| si == 1)
            .all(|(i, _)| self.state.gamma[i] >= self.ladder.cp()[i])
    }

    /// One ascent step followed by a fresh subproblem solve. Does nothing
    /// when everybody is already served.
    pub fn step(&mut self) -> Result<()> {
        let s = slr_subgradient(&self.current);
        if s.iter().all(|&v| v == 0) {
            return Ok(());
        }
        self.state = ascend(&self.ladder, &self.state, &s);
        self.current = solve_slr(self.inst, &self.state.gamma, self.cfg.prefix, self.cfg.limits)?;
        self.iteration += 1;
        self.record();
        Ok(())
    }

    pub fn finish(self, status: DaStatus) -> DaResult {
        DaResult {
            best_value: self.trace.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max),
            best_bound: self.best_bound,
            iterations: self.iteration,
            status,
            state: self.state,
            last: self.current,
            trace: self.trace,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaResult {
    pub state: GammaState,
    /// Largest SLR value in the trace.
    pub best_value: f64,
    /// Largest certified lower bound; equals `best_value` unless a
    /// subproblem solve was cut short.
    pub best_bound: f64,
    pub iterations: usize,
    pub status: DaStatus,
    pub last: SlrSolution,
    pub trace: Vec<DaTraceRow>,
}

pub fn dual_ascent(inst: &Instance, gamma0: &[f64], cfg: &DaConfig) -> Result<DaResult> {
    let max_iter = cfg.max_iter;
    let mut da = DualAscent::start(inst, gamma0, cfg.clone())?;
    let status = loop {
        if da.current().status == ExactStatus::Incomplete {
            break DaStatus::Incomplete;
        }
        if da.current().serves_everyone() {
            break DaStatus::Optimal;
        }
        if max_iter.is_some_and(|k| da.iteration() >= k) {
            break DaStatus::IterLimit;
        }
        if da.is_stalled() {
            break DaStatus::Stalled;
        }
        da.step()?;
    };
    Ok(da.finish(status))
}
