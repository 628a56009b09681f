//! Solutions, feasibility checks, and the greedy upper-bound heuristics.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SplpoError};
use crate::instance::Instance;
use crate::par::{self, Parallelism};

/// Open facilities plus a customer → facility assignment (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Sorted, duplicate free.
    pub open: Vec<usize>,
    pub assign: Vec<Option<usize>>,
    pub objective: f64,
}

impl Solution {
    /// Opens `open` and serves every customer from its most preferred open facility.
    pub fn from_open_set(inst: &Instance, open: &[usize]) -> Result<Self> {
        let mut open = open.to_vec();
        open.sort_unstable();
        open.dedup();
        let assign: Vec<Option<usize>> = assign_most_preferred(inst, &open)?
            .into_iter()
            .map(Some)
            .collect();
        let objective = objective(inst, &open, &assign)?;
        Ok(Self {
            open,
            assign,
            objective,
        })
    }

    /// Nobody served, nothing open.
    pub fn empty(m: usize) -> Self {
        Self {
            open: Vec::new(),
            assign: vec![None; m],
            objective: 0.0,
        }
    }

    pub fn open_count(&self) -> usize {
        self.open.len()
    }

    pub fn serves_everyone(&self) -> bool {
        self.assign.iter().all(Option::is_some)
    }

    pub fn to_document(&self, provenance: Provenance) -> SolutionDocument {
        SolutionDocument {
            open: self.open.iter().map(|j| j + 1).collect(),
            assignment: self.assign.iter().map(|a| a.map(|j| j + 1)).collect(),
            objective: self.objective,
            provenance,
        }
    }
}

/// Serialized form of a [`Solution`]; facility ids are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub open: Vec<usize>,
    pub assignment: Vec<Option<usize>>,
    pub objective: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub algorithm: String,
    pub seed: Option<u64>,
    pub parameters: serde_json::Value,
}

impl SolutionDocument {
    pub fn to_solution(&self, inst: &Instance) -> Result<Solution> {
        let n = inst.n();
        let back = |j: usize| {
            if j == 0 || j > n {
                Err(SplpoError::InvalidArgument(format!("facility id {j} out of range")))
            } else {
                Ok(j - 1)
            }
        };
        let open = self.open.iter().map(|&j| back(j)).collect::<Result<Vec<_>>>()?;
        let assign = self
            .assignment
            .iter()
            .map(|a| a.map(back).transpose())
            .collect::<Result<Vec<_>>>()?;
        Ok(Solution {
            open,
            assign,
            objective: self.objective,
        })
    }
}

/// Serves each customer from its most preferred member of `open`.
///
/// With `sum_j x_ij = 1` and the preference constraints, this is the only
/// feasible assignment for a given open set.
pub fn assign_most_preferred(inst: &Instance, open: &[usize]) -> Result<Vec<usize>> {
    if open.is_empty() {
        return Err(SplpoError::EmptyOpenSet);
    }
    if let Some(&j) = open.iter().find(|&&j| j >= inst.n()) {
        return Err(SplpoError::InvalidArgument(format!("facility {j} out of range")));
    }
    Ok((0..inst.m())
        .map(|i| inst.most_preferred_in(i, open).expect("open is non-empty"))
        .collect())
}

/// Service cost of the served customers plus the opening cost of `open`.
pub fn objective(inst: &Instance, open: &[usize], assign: &[Option<usize>]) -> Result<f64> {
    let mut is_open = vec![false; inst.n()];
    for &j in open {
        is_open[j] = true;
    }
    let mut total = 0.0;
    for (i, a) in assign.iter().enumerate() {
        if let Some(j) = *a {
            if !is_open[j] {
                return Err(SplpoError::ClosedFacility {
                    customer: i,
                    facility: j,
                });
            }
            total += inst.c(i, j);
        }
    }
    Ok(total + open.iter().map(|&j| inst.f(j)).sum::<f64>())
}

/// A violated SPLPO constraint; indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// Assignment constraint: customer not served.
    Unserved { customer: usize },
    /// Variable upper bound: served by a closed facility.
    ClosedFacility { customer: usize, facility: usize },
    /// Preference constraint for `(customer, facility)`: `facility` is open
    /// but the customer is not served by something at least as preferred.
    PreferenceBypassed { customer: usize, facility: usize },
}

impl Violation {
    /// Number of the violated constraint family: (1), (2) or (3).
    pub fn constraint(&self) -> u8 {
        match self {
            Violation::Unserved { .. } => 1,
            Violation::ClosedFacility { .. } => 2,
            Violation::PreferenceBypassed { .. } => 3,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::Unserved { customer } => write!(f, "(1) customer {} unserved", customer + 1),
            Violation::ClosedFacility { customer, facility } => write!(
                f,
                "(2) customer {} served by closed facility {}",
                customer + 1,
                facility + 1
            ),
            Violation::PreferenceBypassed { customer, facility } => write!(
                f,
                "(3) customer {} bypasses preferred open facility {}",
                customer + 1,
                facility + 1
            ),
        }
    }
}

/// Lists every violated constraint of (1)-(3) in indicator form.
pub fn check_feasible(inst: &Instance, sol: &Solution) -> Vec<Violation> {
    let mut is_open = vec![false; inst.n()];
    for &j in &sol.open {
        if j < inst.n() {
            is_open[j] = true;
        }
    }
    let mut out = Vec::new();
    for i in 0..inst.m() {
        let served = sol.assign.get(i).copied().flatten();
        match served {
            None => out.push(Violation::Unserved { customer: i }),
            Some(j) if !is_open[j] => out.push(Violation::ClosedFacility {
                customer: i,
                facility: j,
            }),
            Some(_) => {}
        }
        // sum over k weakly preferred to j of x_ik >= y_j
        for &j in &sol.open {
            let covered = served.is_some_and(|k| inst.rank(i, k) <= inst.rank(i, j));
            if !covered {
                out.push(Violation::PreferenceBypassed {
                    customer: i,
                    facility: j,
                });
            }
        }
    }
    out
}

/// One round of the greedy heuristic.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicRound {
    /// Facility added this round (0-based).
    pub added: usize,
    /// Service cost of the resulting assignment.
    pub service_cost: f64,
    /// Full objective: service plus opening cost of the facilities in use.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HeuristicTrace {
    /// First entry is the seeding step, then one entry per selection round.
    pub rounds: Vec<HeuristicRound>,
    /// Index into `rounds` of the incumbent.
    pub best_round: usize,
}

fn used_solution(inst: &Instance, server: &[usize]) -> Solution {
    let mut open: Vec<usize> = server.to_vec();
    open.sort_unstable();
    open.dedup();
    let assign: Vec<Option<usize>> = server.iter().copied().map(Some).collect();
    let objective = objective(inst, &open, &assign).expect("servers are open");
    Solution {
        open,
        assign,
        objective,
    }
}

fn greedy(inst: &Instance, stop_on_stall: bool, mode: Parallelism) -> (Solution, HeuristicTrace) {
    let (m, n) = (inst.m(), inst.n());
    // Step 1: facility with the smallest total service cost serves everybody.
    let totals: Vec<f64> = (0..n).map(|j| (0..m).map(|i| inst.c(i, j)).sum()).collect();
    let first = argmin(&totals, 0..n);
    let mut server = vec![first; m];
    let mut remaining: Vec<usize> = (0..n).filter(|&j| j != first).collect();
    let mut tc_prev = totals[first];

    let mut best = used_solution(inst, &server);
    let mut trace = HeuristicTrace {
        rounds: vec![HeuristicRound {
            added: first,
            service_cost: tc_prev,
            objective: best.objective,
        }],
        best_round: 0,
    };

    while !remaining.is_empty() {
        // Step 2: each customer keeps the preferred of its server and j.
        let tcs = par::map(mode, &remaining, |&j| {
            (0..m)
                .map(|i| {
                    let k = if inst.prefers(i, j, server[i]) { j } else { server[i] };
                    inst.c(i, k)
                })
                .sum::<f64>()
        });
        // Step 3: lowest TC, ties to the lowest index (`remaining` is ascending).
        let pos = argmin(&tcs, 0..tcs.len());
        let chosen = remaining.remove(pos);
        let tc = tcs[pos];
        for (i, s) in server.iter_mut().enumerate() {
            if inst.prefers(i, chosen, *s) {
                *s = chosen;
            }
        }
        let candidate = used_solution(inst, &server);
        trace.rounds.push(HeuristicRound {
            added: chosen,
            service_cost: tc,
            objective: candidate.objective,
        });
        if candidate.objective < best.objective {
            best = candidate;
            trace.best_round = trace.rounds.len() - 1;
        }
        // Step 4
        if stop_on_stall {
            if tc >= tc_prev {
                break;
            }
            tc_prev = tc;
        }
    }
    (best, trace)
}

fn argmin(values: &[f64], range: std::ops::Range<usize>) -> usize {
    let mut best = range.start;
    for k in range {
        if values[k] < values[best] {
            best = k;
        }
    }
    best
}

/// Greedy heuristic Hc: runs until every facility has been considered and
/// returns the cheapest visited assignment (full objective).
pub fn heuristic_hc(inst: &Instance) -> (Solution, HeuristicTrace) {
    greedy(inst, false, Parallelism::Sequential)
}

/// [`heuristic_hc`] with an explicit parallelism mode for the per-facility
/// evaluations. The result is identical in both modes.
pub fn heuristic_hc_with(inst: &Instance, mode: Parallelism) -> (Solution, HeuristicTrace) {
    greedy(inst, false, mode)
}

/// Greedy heuristic Hs: like Hc but stops as soon as a round fails to lower
/// the service cost.
pub fn heuristic_hs(inst: &Instance) -> (Solution, HeuristicTrace) {
    greedy(inst, true, Parallelism::Sequential)
}
