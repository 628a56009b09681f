//! Lagrangean relaxation of the single-assignment and preference constraints.
//!
//! With multipliers `mu` (free) and `lambda >= 0` the relaxed problem
//! separates by facility and has a closed-form optimum ([`solve_lr`]). The
//! dual is maximised with a subgradient method using a Polyak-type step
//! ([`subgradient_method`]).

use serde::{Deserialize, Serialize};

use crate::error::{Result, SplpoError};
use crate::instance::Instance;
use crate::solution::heuristic_hc;
use crate::DUAL_TOL;

/// `mu` has one entry per customer; `lambda` is row-major `m x n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangeMultipliers {
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl LagrangeMultipliers {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            mu: vec![0.0; m],
            lambda: vec![0.0; m * n],
        }
    }

    /// `mu` given, `lambda = 0`.
    pub fn from_mu(mu: Vec<f64>, n: usize) -> Self {
        let m = mu.len();
        Self {
            mu,
            lambda: vec![0.0; m * n],
        }
    }

    fn check(&self, inst: &Instance) -> Result<()> {
        let (m, n) = (inst.m(), inst.n());
        if self.mu.len() != m || self.lambda.len() != m * n {
            return Err(SplpoError::InvalidArgument(format!(
                "multipliers sized {}/{} for a {m}x{n} instance",
                self.mu.len(),
                self.lambda.len()
            )));
        }
        check_lambda(n, &self.lambda)
    }
}

fn check_lambda(n: usize, lambda: &[f64]) -> Result<()> {
    match lambda.iter().position(|&v| v.is_nan() || v < 0.0) {
        Some(k) => Err(SplpoError::NegativeMultiplier {
            customer: k / n,
            facility: k % n,
            value: lambda[k],
        }),
        None => Ok(()),
    }
}

/// The starting point `mu_i = min_j (c_ij + f_j)`, `lambda = 0`.
pub fn default_start(inst: &Instance) -> LagrangeMultipliers {
    LagrangeMultipliers::from_mu(inst.cheapest_total(), inst.n())
}

/// `Lambda_ij`: sum of `lambda_ik` over facilities `k` that customer `i`
/// ranks no better than `j` (including `j`). Row-major `m x n`.
pub fn capital_lambda(inst: &Instance, lambda: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (inst.m(), inst.n());
    if lambda.len() != m * n {
        return Err(SplpoError::InvalidArgument(format!(
            "lambda has {} entries, expected {}",
            lambda.len(),
            m * n
        )));
    }
    check_lambda(n, lambda)?;
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &lambda[i * n..(i + 1) * n];
        let mut acc = 0.0;
        // suffix sums from the least preferred facility upwards
        for &j in inst.preference_order(i).iter().rev() {
            acc += row[j];
            out[i * n + j] = acc;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSolution {
    pub value: f64,
    /// Row-major `m x n` assignment indicators.
    pub x: Vec<bool>,
    pub y: Vec<bool>,
    pub rho: Vec<f64>,
}

impl LrSolution {
    pub fn x(&self, i: usize, j: usize) -> bool {
        self.x[i * self.y.len() + j]
    }
}

/// Closed-form optimum of the relaxation. Facility `j` opens iff
/// `rho_j < 0` and then serves exactly the customers with negative reduced
/// cost `c_ij - mu_i - Lambda_ij`.
pub fn solve_lr(inst: &Instance, mult: &LagrangeMultipliers) -> Result<LrSolution> {
    mult.check(inst)?;
    let (m, n) = (inst.m(), inst.n());
    let big = capital_lambda(inst, &mult.lambda)?;
    let mut rho = vec![0.0; n];
    let mut x = vec![false; m * n];
    let mut y = vec![false; n];
    for j in 0..n {
        let mut r = inst.f(j);
        for i in 0..m {
            let reduced = inst.c(i, j) - mult.mu[i] - big[i * n + j];
            if reduced < 0.0 {
                r += reduced;
            }
            r += mult.lambda[i * n + j];
        }
        rho[j] = r;
        if r < 0.0 {
            y[j] = true;
            for i in 0..m {
                x[i * n + j] = inst.c(i, j) - mult.mu[i] - big[i * n + j] < 0.0;
            }
        }
    }
    let value = rho.iter().filter(|&&r| r < 0.0).sum::<f64>() + mult.mu.iter().sum::<f64>();
    Ok(LrSolution { value, x, y, rho })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subgradient {
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Subgradient {
    pub fn norm_sq(&self) -> f64 {
        self.mu.iter().chain(&self.lambda).map(|v| v * v).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.mu.iter().chain(&self.lambda).all(|&v| v == 0.0)
    }
}

/// `s_mu_i = 1 - sum_j x_ij`, `s_lambda_ij = y_j - sum_{k weakly preferred to j} x_ik`.
pub fn lr_subgradient(inst: &Instance, lr: &LrSolution) -> Subgradient {
    let (m, n) = (inst.m(), inst.n());
    let mut mu = vec![0.0; m];
    let mut lambda = vec![0.0; m * n];
    for i in 0..m {
        let served = (0..n).filter(|&j| lr.x[i * n + j]).count();
        mu[i] = 1.0 - served as f64;
        let mut prefix = 0.0;
        for &j in inst.preference_order(i) {
            if lr.x[i * n + j] {
                prefix += 1.0;
            }
            lambda[i * n + j] = f64::from(u8::from(lr.y[j])) - prefix;
        }
    }
    Subgradient { mu, lambda }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BetaSchedule {
    /// `beta -= decrement` on every iteration while the stall streak is at
    /// least the window.
    Linear,
    /// `beta *= q` once per full stall window.
    Multiplicative { q: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgConfig {
    pub max_iter: usize,
    pub beta0: f64,
    pub stall_window: usize,
    pub beta_decrement: f64,
    pub schedule: BetaSchedule,
    /// Target value in the step size; Hc's bound when `None`.
    pub lr_aim: Option<f64>,
}

impl Default for SgConfig {
    fn default() -> Self {
        Self {
            max_iter: 1500,
            beta0: 2.0,
            stall_window: 30,
            beta_decrement: 0.005,
            schedule: BetaSchedule::Linear,
            lr_aim: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SgStatus {
    /// Zero subgradient, or the bound met the target.
    Optimal,
    BetaExhausted,
    IterLimit,
    AimExceeded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgTraceRow {
    pub iteration: usize,
    pub lr: f64,
    pub lr_best: f64,
    pub beta: f64,
    pub alpha: f64,
    pub norm_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgResult {
    pub best_value: f64,
    pub best_multipliers: LagrangeMultipliers,
    pub best_iteration: usize,
    /// Number of multiplier updates performed.
    pub iterations: usize,
    pub status: SgStatus,
    pub lr_aim: f64,
    /// One row per evaluated iterate; `alpha` is 0 on the last row.
    pub trace: Vec<SgTraceRow>,
}

pub fn subgradient_method(inst: &Instance, cfg: &SgConfig, start: &LagrangeMultipliers) -> Result<SgResult> {
    if cfg.beta0.is_nan() || cfg.beta0 <= 0.0 {
        return Err(SplpoError::InvalidArgument("beta0 must be positive".into()));
    }
    let aim = match cfg.lr_aim {
        Some(a) => a,
        None => heuristic_hc(inst).0.objective,
    };
    let n = inst.n();
    let mut mult = start.clone();
    let mut lr = solve_lr(inst, &mult)?;
    let mut best_value = lr.value;
    let mut best_multipliers = mult.clone();
    let mut best_iteration = 0;
    let mut beta = cfg.beta0;
    let mut streak = 0;
    let mut iter = 0;
    let mut trace = Vec::new();

    let status = loop {
        let s = lr_subgradient(inst, &lr);
        let norm_sq = s.norm_sq();
        let mut row = SgTraceRow {
            iteration: iter,
            lr: lr.value,
            lr_best: best_value,
            beta,
            alpha: 0.0,
            norm_sq,
        };
        let stop = if norm_sq == 0.0 {
            Some(SgStatus::Optimal)
        } else if aim < lr.value - DUAL_TOL {
            Some(SgStatus::AimExceeded)
        } else if aim - lr.value <= DUAL_TOL {
            Some(SgStatus::Optimal)
        } else if beta <= 0.0 {
            Some(SgStatus::BetaExhausted)
        } else if iter >= cfg.max_iter {
            Some(SgStatus::IterLimit)
        } else {
            None
        };
        if let Some(status) = stop {
            trace.push(row);
            break status;
        }

        let alpha = beta * (aim - lr.value) / norm_sq;
        row.alpha = alpha;
        trace.push(row);
        for (mu, g) in mult.mu.iter_mut().zip(&s.mu) {
            *mu += alpha * g;
        }
        for (l, g) in mult.lambda.iter_mut().zip(&s.lambda) {
            *l = (*l + alpha * g).max(0.0);
        }
        iter += 1;
        lr = solve_lr(inst, &mult)?;

        if lr.value > best_value + DUAL_TOL {
            best_value = lr.value;
            best_multipliers = mult.clone();
            best_iteration = iter;
            streak = 0;
        } else {
            if lr.value > best_value {
                best_value = lr.value;
            }
            streak += 1;
        }
        if streak >= cfg.stall_window {
            match cfg.schedule {
                BetaSchedule::Linear => beta -= cfg.beta_decrement,
                BetaSchedule::Multiplicative { q } => {
                    beta *= q;
                    streak = 0;
                }
            }
        }
    };
    debug_assert_eq!(best_multipliers.lambda.len(), inst.m() * n);

    Ok(SgResult {
        best_value,
        best_multipliers,
        best_iteration,
        iterations: iter,
        status,
        lr_aim: aim,
        trace,
    })
}
