//! Downstream network-side KPIs scored from the truth trajectory.

use serde::{Deserialize, Serialize};

use crate::contract::UseCase;
use crate::scenario::network::{Uc1Physics, Uc1State, Uc2State};

/// One epoch's contribution. Reference fields hold the same epoch with no
/// action applied, so every ratio below is actual against do-nothing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochKpi {
    pub energy: f64,
    pub energy_ref: f64,
    /// Active cells carrying more load than capacity.
    pub overloaded_cells: f64,
    pub served: f64,
    pub served_ref: f64,
    pub unmet: f64,
    pub admitted: f64,
    pub jain: f64,
}

impl EpochKpi {
    pub fn uc1(state: &Uc1State, reference: &Uc1State, phys: &Uc1Physics) -> Self {
        Self {
            energy: state.energy(phys),
            energy_ref: reference.energy(phys),
            overloaded_cells: state.overloaded_cells(phys) as f64,
            served: state.total_served(phys),
            served_ref: reference.total_served(phys),
            ..Self::default()
        }
    }

    pub fn uc2(state: &Uc2State, reference: &Uc2State) -> Self {
        let served = state.total_served();
        let admitted = state.total_admitted();
        Self {
            served,
            served_ref: reference.total_served(),
            unmet: (admitted - served).max(0.0),
            admitted,
            jain: state.mean_jain(),
            ..Self::default()
        }
    }
}

/// Three per-UC columns. UC1: energy saving %, SLA violation minutes,
/// throughput change %. UC2: slice-SLA violation %, Jain index, throughput
/// change %. Throughput change is actual minus do-nothing, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiSummary {
    pub uc: UseCase,
    pub primary: f64,
    pub secondary: f64,
    pub dtput_pct: f64,
}

impl KpiSummary {
    pub fn column_names(uc: UseCase) -> [&'static str; 3] {
        match uc {
            UseCase::Uc1 => ["energy_saving_pct", "sla_violation_min", "dtput_pct"],
            UseCase::Uc2 => ["slice_sla_violation_pct", "jain", "dtput_pct"],
        }
    }
}

fn pct(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        100.0 * num / den
    } else {
        0.0
    }
}

/// Ratio-of-sums aggregation over a run.
pub fn kpi_accumulate(epochs: &[EpochKpi], uc: UseCase) -> KpiSummary {
    let sum = |f: fn(&EpochKpi) -> f64| epochs.iter().map(f).sum::<f64>();
    let served = sum(|k| k.served);
    let served_ref = sum(|k| k.served_ref);
    let dtput_pct = pct(served - served_ref, served_ref);
    match uc {
        UseCase::Uc1 => {
            let energy_ref = sum(|k| k.energy_ref);
            let minutes = uc.epoch_seconds() / 60.0;
            KpiSummary {
                uc,
                primary: pct(energy_ref - sum(|k| k.energy), energy_ref),
                secondary: sum(|k| k.overloaded_cells) * minutes,
                dtput_pct,
            }
        }
        UseCase::Uc2 => KpiSummary {
            uc,
            primary: pct(sum(|k| k.unmet), sum(|k| k.admitted)),
            secondary: if epochs.is_empty() {
                1.0
            } else {
                sum(|k| k.jain) / epochs.len() as f64
            },
            dtput_pct,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idle_run_saves_nothing() {
        let phys = Uc1Physics::default();
        let z = Uc1State::baseline(&[0.3, 1.2, 0.2, 0.4, 0.6, 0.1, 0.3]);
        let k = EpochKpi::uc1(&z, &z, &phys);
        let s = kpi_accumulate(&[k; 12], UseCase::Uc1);
        assert_eq!(s.primary, 0.0);
        assert_eq!(s.dtput_pct, 0.0);
        // one overloaded cell for 12 ten-second epochs
        assert!((s.secondary - 2.0).abs() < 1e-12);
    }

    #[test]
    fn minutes_scale_with_epochs() {
        let phys = Uc1Physics::default();
        let z = Uc1State::baseline(&[1.3; 7]);
        let k = EpochKpi::uc1(&z, &z, &phys);
        let a = kpi_accumulate(&[k; 50], UseCase::Uc1).secondary;
        let b = kpi_accumulate(&[k; 100], UseCase::Uc1).secondary;
        assert!((b - 2.0 * a).abs() < 1e-9);
    }
}
