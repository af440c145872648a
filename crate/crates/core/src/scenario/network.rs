//! Ground-truth network models and the supervisory transition.
//!
//! UC1 is a ring of cells; UC2 is a grid of cells, each carrying the same
//! set of slices. Both models are deterministic: a transition is a pure
//! function of the prior state, the action and the disturbance.

use serde::{Deserialize, Serialize};

use crate::contract::{ActionType, ProposedAction};
use crate::verifiers::jain_index;

/// Parses `"c3"` or `"c3s1"` into `(cell, slice)`.
pub fn parse_object(id: &str) -> Option<(usize, Option<usize>)> {
    let rest = id.strip_prefix('c')?;
    match rest.split_once('s') {
        Some((c, s)) => Some((c.parse().ok()?, Some(s.parse().ok()?))),
        None => Some((rest.parse().ok()?, None)),
    }
}

pub fn cell_id(cell: usize) -> String {
    format!("c{cell}")
}

pub fn slice_id(cell: usize, slice: usize) -> String {
    format!("c{cell}s{slice}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellState {
    pub load: f64,
    pub active: bool,
    pub rf_power: f64,
    pub booster: bool,
    /// Capacity lost to an in-progress reconfiguration (fraction).
    pub disruption: f64,
}

impl CellState {
    pub fn capacity(&self, booster_gain: f64) -> f64 {
        if !self.active {
            return 0.0;
        }
        let boost = if self.booster { booster_gain } else { 0.0 };
        (self.rf_power + boost) * (1.0 - self.disruption)
    }
}

/// UC1 physics knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Uc1Physics {
    pub booster_gain: f64,
    pub energy_idle: f64,
    pub energy_rf: f64,
    pub energy_booster: f64,
    pub energy_sleep: f64,
    /// Capacity lost per unit of reconfiguration shift.
    pub reconfig_disruption: f64,
}

impl Default for Uc1Physics {
    fn default() -> Self {
        Self {
            booster_gain: 0.25,
            energy_idle: 0.55,
            energy_rf: 0.45,
            energy_booster: 0.30,
            energy_sleep: 0.15,
            reconfig_disruption: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uc1State {
    pub cells: Vec<CellState>,
}

impl Uc1State {
    /// All cells awake at full power with the given loads.
    pub fn baseline(loads: &[f64]) -> Self {
        Self {
            cells: loads
                .iter()
                .map(|&load| CellState {
                    load,
                    active: true,
                    rf_power: 1.0,
                    booster: false,
                    disruption: 0.0,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> [usize; 2] {
        let n = self.cells.len();
        [(i + n - 1) % n, (i + 1) % n]
    }

    pub fn loads(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.load).collect()
    }

    /// Additive per-cell load disturbance.
    pub fn disturbed(&self, w: &[f64]) -> Self {
        let mut next = self.clone();
        for (cell, dw) in next.cells.iter_mut().zip(w) {
            cell.load = (cell.load + dw).clamp(0.0, 1.5);
        }
        next
    }

    fn add_load(&mut self, i: usize, amount: f64) {
        let cell = &mut self.cells[i];
        cell.load = (cell.load + amount).clamp(0.0, 1.5);
    }

    /// Splits `amount` over `targets` proportionally to spare capacity; an
    /// even split when nobody has spare.
    fn spread(&mut self, amount: f64, targets: &[usize], phys: &Uc1Physics) {
        let spare: Vec<f64> = targets
            .iter()
            .map(|&j| (self.cells[j].capacity(phys.booster_gain) - self.cells[j].load).max(0.0))
            .collect();
        let total: f64 = spare.iter().sum();
        for (k, &j) in targets.iter().enumerate() {
            let share = if total > 0.0 {
                amount * spare[k] / total
            } else {
                amount / targets.len() as f64
            };
            self.add_load(j, share);
        }
    }

    /// The supervisory transition for one action. Unknown targets leave the
    /// state unchanged.
    pub fn apply(&self, t: ActionType, a: &ProposedAction, phys: &Uc1Physics) -> Self {
        let mut next = self.clone();
        let Some((i, _)) = parse_object(&a.target) else {
            return next;
        };
        if i >= next.len() {
            return next;
        }
        match t {
            ActionType::CellSleep => {
                let moved = next.cells[i].load;
                next.cells[i].load = 0.0;
                next.cells[i].active = false;
                next.spread(moved, &self.neighbors(i), phys);
            }
            ActionType::CellWake => {
                next.cells[i].active = true;
                next.cells[i].booster = true;
            }
            ActionType::RfPowerReduce => {
                let factor = a.param("factor").unwrap_or(1.0).clamp(0.0, 1.0);
                next.cells[i].rf_power *= factor;
            }
            ActionType::RfReconfig => {
                let shift = a.param("delta").unwrap_or(0.0).clamp(-1.0, 1.0);
                next.cells[i].disruption = (phys.reconfig_disruption * shift.abs()).min(0.9);
                let nb = self.neighbors(i);
                if shift > 0.0 {
                    let moved = shift * next.cells[i].load;
                    next.cells[i].load -= moved;
                    next.spread(moved, &nb, phys);
                } else {
                    for j in nb {
                        let pulled = -shift * next.cells[j].load / 2.0;
                        next.cells[j].load -= pulled;
                        next.add_load(i, pulled);
                    }
                }
            }
            ActionType::LoadRedirect => {
                let src = a
                    .peer
                    .as_deref()
                    .and_then(parse_object)
                    .map(|(c, _)| c)
                    .filter(|&c| c < self.len() && c != i);
                if let Some(src) = src {
                    let f = a.param("delta").unwrap_or(0.0).clamp(0.0, 1.0);
                    let moved = f * next.cells[src].load;
                    next.cells[src].load -= moved;
                    next.add_load(i, moved);
                }
            }
            _ => {}
        }
        next
    }

    /// Cells whose load or capacity the action can change.
    pub fn affected(&self, t: ActionType, a: &ProposedAction) -> Vec<usize> {
        let Some((i, _)) = parse_object(&a.target) else {
            return Vec::new();
        };
        if i >= self.len() {
            return Vec::new();
        }
        let mut cells = vec![i];
        match t {
            ActionType::CellSleep | ActionType::RfReconfig => cells.extend(self.neighbors(i)),
            ActionType::LoadRedirect => {
                if let Some((src, _)) = a.peer.as_deref().and_then(parse_object) {
                    if src < self.len() && src != i {
                        cells.push(src);
                    }
                }
            }
            _ => {}
        }
        cells
    }

    pub fn served(&self, cells: &[usize], phys: &Uc1Physics) -> f64 {
        cells
            .iter()
            .map(|&j| self.cells[j].load.min(self.cells[j].capacity(phys.booster_gain)))
            .sum()
    }

    pub fn total_served(&self, phys: &Uc1Physics) -> f64 {
        let all: Vec<usize> = (0..self.len()).collect();
        self.served(&all, phys)
    }

    /// Worst load/capacity over active cells in `cells`.
    pub fn max_load_ratio(&self, cells: &[usize], phys: &Uc1Physics) -> f64 {
        cells
            .iter()
            .filter(|&&j| self.cells[j].active)
            .map(|&j| {
                let cap = self.cells[j].capacity(phys.booster_gain);
                if cap > 0.0 {
                    self.cells[j].load / cap
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }

    /// Active cells carrying more load than they can serve.
    pub fn overloaded_cells(&self, phys: &Uc1Physics) -> usize {
        self.cells
            .iter()
            .filter(|c| c.active && c.load > c.capacity(phys.booster_gain) + 1e-12)
            .count()
    }

    pub fn energy(&self, phys: &Uc1Physics) -> f64 {
        self.cells
            .iter()
            .map(|c| {
                if !c.active {
                    phys.energy_sleep
                } else {
                    phys.energy_idle + phys.energy_rf * c.rf_power + if c.booster { phys.energy_booster } else { 0.0 }
                }
            })
            .sum()
    }
}

/// Relative change in served traffic over `cells`; zero when nothing was
/// served before.
pub fn uc1_tput_change(pre: &Uc1State, post: &Uc1State, cells: &[usize], phys: &Uc1Physics) -> f64 {
    let before = pre.served(cells, phys);
    if before <= 0.0 {
        return 0.0;
    }
    (post.served(cells, phys) - before) / before
}

/// φ for UC1: every affected active cell stays within capacity and the
/// served-traffic change stays above `-sla_limit`.
pub fn phi_uc1(pre: &Uc1State, post: &Uc1State, cells: &[usize], sla_limit: f64, phys: &Uc1Physics) -> bool {
    let within = cells.iter().all(|&j| {
        let c = &post.cells[j];
        !c.active || c.load <= c.capacity(phys.booster_gain) + 1e-12
    });
    within && uc1_tput_change(pre, post, cells, phys) >= -sla_limit
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceState {
    pub demand: f64,
    pub allocation: f64,
    pub guarantee: f64,
    pub priority: u32,
    /// Fraction of demand admitted.
    pub admission: f64,
}

impl SliceState {
    pub fn admitted(&self) -> f64 {
        self.demand * self.admission
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceCell {
    pub capacity: f64,
    pub slices: Vec<SliceState>,
}

impl SliceCell {
    /// Served throughput per slice: own allocation first, then leftover
    /// capacity handed out in priority order (ties by index).
    pub fn served(&self) -> Vec<f64> {
        let mut served: Vec<f64> = self.slices.iter().map(|s| s.admitted().min(s.allocation)).collect();
        let used: f64 = served.iter().sum();
        let mut spare = (self.capacity - used).max(0.0);
        let mut order: Vec<usize> = (0..self.slices.len()).collect();
        order.sort_by(|&a, &b| self.slices[b].priority.cmp(&self.slices[a].priority).then(a.cmp(&b)));
        for k in order {
            if spare <= 0.0 {
                break;
            }
            let unmet = (self.slices[k].admitted() - served[k]).max(0.0);
            let give = unmet.min(spare);
            served[k] += give;
            spare -= give;
        }
        served
    }

    /// Unmet share of admitted demand, per slice.
    pub fn violation(&self) -> Vec<f64> {
        self.served()
            .iter()
            .zip(&self.slices)
            .map(|(sv, s)| {
                let adm = s.admitted();
                if adm <= 0.0 {
                    0.0
                } else {
                    ((adm - sv) / adm).max(0.0)
                }
            })
            .collect()
    }

    pub fn allocations(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.allocation).collect()
    }

    pub fn guarantees(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.guarantee).collect()
    }

    /// Jain index over per-slice served throughput; 1 for an idle cell.
    pub fn jain(&self) -> f64 {
        jain_index(&self.served()).unwrap_or(1.0)
    }
}

/// UC2 slice template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Uc2Physics {
    pub allocations: Vec<f64>,
    pub guarantees: Vec<f64>,
    /// Demand of each slice relative to its allocation at unit load.
    pub demand_scale: f64,
}

impl Default for Uc2Physics {
    fn default() -> Self {
        Self {
            allocations: vec![0.45, 0.25, 0.10, 0.20],
            guarantees: vec![0.30, 0.18, 0.05, 0.10],
            demand_scale: 1.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uc2State {
    pub cells: Vec<SliceCell>,
}

impl Uc2State {
    /// Default allocations; `loads[cell][slice]` scales each slice's demand.
    pub fn baseline(loads: &[Vec<f64>], phys: &Uc2Physics) -> Self {
        let n_slices = phys.allocations.len();
        Self {
            cells: loads
                .iter()
                .map(|row| SliceCell {
                    capacity: 1.0,
                    slices: (0..n_slices)
                        .map(|s| SliceState {
                            demand: phys.allocations[s] * phys.demand_scale * row[s],
                            allocation: phys.allocations[s],
                            guarantee: phys.guarantees[s],
                            priority: (n_slices - s) as u32,
                            admission: 1.0,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Multiplicative demand disturbance, `w[cell][slice]`.
    pub fn disturbed(&self, w: &[Vec<f64>]) -> Self {
        let mut next = self.clone();
        for (cell, row) in next.cells.iter_mut().zip(w) {
            for (s, dw) in cell.slices.iter_mut().zip(row) {
                s.demand = (s.demand * (1.0 + dw)).max(0.0);
            }
        }
        next
    }

    fn locate(&self, id: &str) -> Option<(usize, usize)> {
        let (c, s) = parse_object(id)?;
        let s = s?;
        (c < self.cells.len() && s < self.cells[c].slices.len()).then_some((c, s))
    }

    pub fn apply(&self, t: ActionType, a: &ProposedAction) -> Self {
        let mut next = self.clone();
        let Some((c, s)) = self.locate(&a.target) else {
            return next;
        };
        match t {
            ActionType::SlicePriorityBoost => {
                let top = next.cells[c].slices.iter().map(|x| x.priority).max().unwrap_or(0);
                next.cells[c].slices[s].priority = top + 1;
            }
            ActionType::SliceAdmissionRestrict => {
                let factor = a.param("factor").unwrap_or(1.0).clamp(0.0, 1.0);
                next.cells[c].slices[s].admission *= factor;
            }
            ActionType::SliceResourceRealloc => {
                let donor = a.peer.as_deref().and_then(|p| self.locate(p));
                if let Some((dc, ds)) = donor.filter(|&(dc, ds)| dc == c && ds != s) {
                    let m = a
                        .param("delta")
                        .unwrap_or(0.0)
                        .max(0.0)
                        .min(next.cells[dc].slices[ds].allocation);
                    next.cells[dc].slices[ds].allocation -= m;
                    next.cells[c].slices[s].allocation += m;
                }
            }
            ActionType::LoadBalanceUpdate => {
                let peer = a.peer.as_deref().and_then(|p| self.locate(p));
                if let Some((pc, _)) = peer.filter(|&(pc, _)| pc != c) {
                    let f = a.param("delta").unwrap_or(0.0).clamp(0.0, 1.0);
                    let moved = f * next.cells[c].slices[s].demand;
                    next.cells[c].slices[s].demand -= moved;
                    next.cells[pc].slices[s].demand += moved;
                }
            }
            _ => {}
        }
        next
    }

    /// Cells whose slices the action can change.
    pub fn affected(&self, t: ActionType, a: &ProposedAction) -> Vec<usize> {
        let Some((c, _)) = self.locate(&a.target) else {
            return Vec::new();
        };
        let mut cells = vec![c];
        if t == ActionType::LoadBalanceUpdate {
            if let Some((pc, _)) = a.peer.as_deref().and_then(|p| self.locate(p)) {
                if pc != c {
                    cells.push(pc);
                }
            }
        }
        cells
    }

    pub fn total_served(&self) -> f64 {
        self.cells.iter().map(|c| c.served().iter().sum::<f64>()).sum()
    }

    pub fn total_admitted(&self) -> f64 {
        self.cells
            .iter()
            .flat_map(|c| c.slices.iter().map(|s| s.admitted()))
            .sum()
    }

    pub fn total_allocation(&self, cell: usize) -> f64 {
        self.cells[cell].slices.iter().map(|s| s.allocation).sum()
    }

    pub fn mean_jain(&self) -> f64 {
        if self.cells.is_empty() {
            return 1.0;
        }
        self.cells.iter().map(|c| c.jain()).sum::<f64>() / self.cells.len() as f64
    }
}

/// φ for UC2: every slice on every affected cell keeps its violation rate
/// within the contracted threshold.
pub fn phi_uc2(post: &Uc2State, cells: &[usize], threshold: f64) -> bool {
    cells
        .iter()
        .all(|&c| post.cells[c].violation().iter().all(|&v| v <= threshold + 1e-12))
}
