//! Variable fixing heuristic and the accelerated dual ascent pipeline.
//!
//! ADA warm-starts the semi-Lagrangean multipliers from the best subgradient
//! iterate, runs a few ascent steps, then alternates single ascent steps with
//! a restricted exact solve in which a cheap fraction of the currently open
//! facilities is fixed open.

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exact::{branch_and_bound, ExactStatus, Limits, ProblemSpec};
use crate::instance::Instance;
use crate::lagrange::{default_start, subgradient_method, SgConfig, SgResult};
use crate::semilagrange::{DaConfig, DaStatus, DaTraceRow, DualAscent};
use crate::solution::{heuristic_hc, Solution};

/// Iteration budgets of one size class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preset {
    pub name: &'static str,
    pub m: usize,
    pub n: usize,
    pub sg_iter: usize,
    pub da_iter: usize,
    pub vfh_iter: usize,
}

pub const PRESET_PS: f64 = 0.25;

pub const PRESETS: [Preset; 4] = [
    Preset { name: "a75_50", m: 75, n: 50, sg_iter: 50, da_iter: 3, vfh_iter: 2 },
    Preset { name: "a100_75", m: 100, n: 75, sg_iter: 100, da_iter: 7, vfh_iter: 2 },
    Preset { name: "a125_100", m: 125, n: 100, sg_iter: 170, da_iter: 10, vfh_iter: 2 },
    Preset { name: "a150_100", m: 150, n: 100, sg_iter: 170, da_iter: 12, vfh_iter: 2 },
];

pub fn preset(name: &str) -> Option<Preset> {
    PRESETS.iter().copied().find(|p| p.name == name)
}

/// Preset whose `m * n` is closest to the instance's (smaller class on ties).
pub fn preset_for(m: usize, n: usize) -> Preset {
    let size = m * n;
    PRESETS
        .iter()
        .copied()
        .min_by_key(|p| (p.m * p.n).abs_diff(size))
        .expect("presets are non-empty")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaConfig {
    pub sg_iter: usize,
    pub da_iter: usize,
    pub vfh_iter: usize,
    pub ps: f64,
    /// Step-size parameters; `max_iter` is overridden by `sg_iter`.
    pub sg: SgConfig,
    pub epsilon: Option<f64>,
    pub prefix: bool,
    pub snap_top: bool,
    pub limits: Limits,
    pub preset: Option<String>,
}

impl AdaConfig {
    pub fn from_preset(p: Preset) -> Self {
        Self {
            sg_iter: p.sg_iter,
            da_iter: p.da_iter,
            vfh_iter: p.vfh_iter,
            ps: PRESET_PS,
            sg: SgConfig::default(),
            epsilon: None,
            prefix: false,
            snap_top: false,
            limits: Limits::default(),
            preset: Some(p.name.to_string()),
        }
    }

    pub fn for_size(m: usize, n: usize) -> Self {
        Self::from_preset(preset_for(m, n))
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ps) {
            return Err(crate::SplpoError::InvalidArgument(format!("ps = {} is outside [0, 1]", self.ps)));
        }
        Ok(())
    }
}

impl Default for AdaConfig {
    fn default() -> Self {
        Self::from_preset(PRESETS[0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VfhOutcome {
    pub solution: Solution,
    /// Facilities fixed open, in key order.
    pub fixed: Vec<usize>,
    /// True when the restricted solve hit a limit and only an incumbent came back.
    pub heuristic: bool,
}

/// Facilities of `y_gamma` sorted by `sum_i c_ij + m f_j` (index breaks ties).
pub fn vfh_order(inst: &Instance, y_gamma: &[usize]) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = y_gamma.iter().map(|&j| (inst.facility_key(j), j)).collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, j)| j).collect()
}

/// Fixes the first `ceil(ps |Y|)` facilities of `y_gamma` open and solves the
/// rest of the problem exactly.
pub fn vfh(inst: &Instance, y_gamma: &[usize], ps: f64, limits: Limits) -> Result<VfhOutcome> {
    let order = vfh_order(inst, y_gamma);
    let count = ((ps * order.len() as f64).ceil() as usize).min(order.len());
    let fixed = order[..count].to_vec();
    let r = branch_and_bound(&ProblemSpec::splpo(inst).with_forced_open(fixed.iter().copied()), limits)?;
    Ok(VfhOutcome {
        solution: r.solution,
        fixed,
        heuristic: r.status == ExactStatus::Incomplete,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Hc,
    Sg,
    Da,
    Vfh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub completed: bool,
    pub seconds: f64,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaResult {
    pub best: Solution,
    pub best_source: Stage,
    pub upper_bound: f64,
    pub hc_bound: f64,
    pub sg_bound: f64,
    pub da_bound: f64,
    /// `max(sg_bound, da_bound)`.
    pub lower_bound: f64,
    pub sg: Option<SgResult>,
    pub da_trace: Vec<DaTraceRow>,
    pub da_status: Option<DaStatus>,
    pub vfh: Vec<VfhOutcome>,
    pub stages: Vec<StageRecord>,
    pub seconds: f64,
}

struct History {
    best: Solution,
    source: Stage,
}

impl History {
    fn offer(&mut self, sol: &Solution, source: Stage) {
        if sol.objective < self.best.objective {
            self.best = sol.clone();
            self.source = source;
        }
    }
}

fn slr_as_solution(da: &DualAscent<'_>) -> Option<Solution> {
    let cur = da.current();
    cur.serves_everyone().then(|| Solution {
        open: cur.open.clone(),
        assign: cur.assign.clone(),
        objective: cur.value,
    })
}

pub fn ada(inst: &Instance, cfg: &AdaConfig) -> Result<AdaResult> {
    cfg.validate()?;
    let started = Instant::now();
    let mut stages = Vec::new();

    let t = Instant::now();
    let (hc, _) = heuristic_hc(inst);
    stages.push(StageRecord {
        stage: Stage::Hc,
        completed: true,
        seconds: t.elapsed().as_secs_f64(),
        note: None,
    });
    let mut history = History {
        best: hc.clone(),
        source: Stage::Hc,
    };

    let t = Instant::now();
    let start = default_start(inst);
    let sg_cfg = SgConfig {
        max_iter: cfg.sg_iter,
        lr_aim: Some(cfg.sg.lr_aim.unwrap_or(hc.objective)),
        ..cfg.sg.clone()
    };
    let sg = subgradient_method(inst, &sg_cfg, &start);
    let (gamma0, sg_bound, sg_note) = match &sg {
        Ok(r) => (r.best_multipliers.mu.clone(), r.best_value, None),
        Err(e) => (start.mu.clone(), f64::NEG_INFINITY, Some(e.to_string())),
    };
    stages.push(StageRecord {
        stage: Stage::Sg,
        completed: sg.is_ok(),
        seconds: t.elapsed().as_secs_f64(),
        note: sg_note,
    });

    let t = Instant::now();
    let da_cfg = DaConfig {
        epsilon: cfg.epsilon,
        max_iter: None,
        prefix: cfg.prefix,
        snap_top: cfg.snap_top,
        limits: cfg.limits,
    };
    let mut da_note = None;
    let mut da = match DualAscent::start(inst, &gamma0, da_cfg) {
        Ok(da) => Some(da),
        Err(e) => {
            da_note = Some(e.to_string());
            None
        }
    };
    if let Some(da) = da.as_mut() {
        if let Some(s) = slr_as_solution(da) {
            history.offer(&s, Stage::Da);
        }
        while da.iteration() < cfg.da_iter && !da.current().serves_everyone() && !da.is_stalled() {
            if let Err(e) = da.step() {
                da_note = Some(e.to_string());
                break;
            }
            if let Some(s) = slr_as_solution(da) {
                history.offer(&s, Stage::Da);
            }
        }
    }
    stages.push(StageRecord {
        stage: Stage::Da,
        completed: da.is_some() && da_note.is_none(),
        seconds: t.elapsed().as_secs_f64(),
        note: da_note,
    });

    let t = Instant::now();
    let mut vfh_runs = Vec::new();
    let mut vfh_note = None;
    let mut memo: HashMap<Vec<usize>, VfhOutcome> = HashMap::new();
    for _ in 0..cfg.vfh_iter {
        let y_gamma = match da.as_mut() {
            Some(da) => {
                if da.is_optimal() {
                    break;
                }
                if !da.current().serves_everyone() && !da.is_stalled() {
                    if let Err(e) = da.step() {
                        vfh_note = Some(e.to_string());
                    }
                    if let Some(s) = slr_as_solution(da) {
                        history.offer(&s, Stage::Da);
                    }
                }
                da.current().open.clone()
            }
            None => hc.open.clone(),
        };
        let fixed_key = {
            let order = vfh_order(inst, &y_gamma);
            let count = ((cfg.ps * order.len() as f64).ceil() as usize).min(order.len());
            order[..count].to_vec()
        };
        let outcome = match memo.get(&fixed_key) {
            Some(o) => o.clone(),
            None => match vfh(inst, &y_gamma, cfg.ps, cfg.limits) {
                Ok(o) => {
                    memo.insert(fixed_key, o.clone());
                    o
                }
                Err(e) => {
                    vfh_note = Some(e.to_string());
                    continue;
                }
            },
        };
        history.offer(&outcome.solution, Stage::Vfh);
        vfh_runs.push(outcome);
    }
    stages.push(StageRecord {
        stage: Stage::Vfh,
        completed: vfh_note.is_none(),
        seconds: t.elapsed().as_secs_f64(),
        note: vfh_note,
    });

    let (da_bound, da_trace, da_status) = match da {
        Some(da) => {
            let status = if da.current().status == ExactStatus::Incomplete {
                DaStatus::Incomplete
            } else if da.current().serves_everyone() {
                DaStatus::Optimal
            } else if da.is_stalled() {
                DaStatus::Stalled
            } else {
                DaStatus::IterLimit
            };
            (da.best_bound(), da.trace().to_vec(), Some(status))
        }
        None => (f64::NEG_INFINITY, Vec::new(), None),
    };

    // bounds that meet the incumbent only through rounding are clamped to it
    let lower_bound = sg_bound.max(da_bound).min(history.best.objective);
    Ok(AdaResult {
        upper_bound: history.best.objective,
        best: history.best,
        best_source: history.source,
        hc_bound: hc.objective,
        sg_bound,
        da_bound,
        lower_bound,
        sg: sg.ok(),
        da_trace,
        da_status,
        vfh: vfh_runs,
        stages,
        seconds: started.elapsed().as_secs_f64(),
    })
}
