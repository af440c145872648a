use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use intentgate::audit::MemoryAudit;
use intentgate::campaign::{self, RegimeMode, RunSpec};
use intentgate::comparators::{parse_systems, SystemVariant};
use intentgate::contract::{ThresholdConfig, UseCase};
use intentgate::faults;
use intentgate::scenario::ScenarioPreset;

#[derive(Parser)]
#[command(
    name = "intentgate",
    version,
    about = "Commit/gate/reject contract benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Five-system comparison: metrics, downstream KPIs and pairwise stats.
    Main(MainArgs),
    /// Stale-state campaign: every epoch carries a gap above the bound.
    Stale(CommonArgs),
    /// Regime grid with the delta-of-deltas detector.
    Regime(RegimeArgs),
    /// τ_commit sweep for the full contract.
    Sensitivity(CommonArgs),
    /// Writes the agent-profile descriptor.
    EmitProfile {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct CommonArgs {
    #[arg(long, default_value = "uc1")]
    uc: UseCase,
    /// Inclusive seed range, `a..b`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    epochs: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Threshold configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario preset (JSON).
    #[arg(long)]
    preset: Option<PathBuf>,
    /// Worker threads; 0 lets the pool decide.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct MainArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value = "OURS,FB_INV,ST_INV,BL4_LEGACY,C0_ONLY")]
    systems: String,
    /// Writes per-run audit logs here.
    #[arg(long)]
    audit_dir: Option<PathBuf>,
    /// Also writes every decision record as JSON lines.
    #[arg(long)]
    decisions: bool,
}

#[derive(Args)]
struct RegimeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value = "dense")]
    mode: RegimeMode,
    /// Restrict the grid to one slice (the reference is always included).
    #[arg(long)]
    slice: Option<String>,
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let (a, b) = s.split_once("..").context("seeds must look like a..b")?;
    let a: u64 = a.trim().parse()?;
    let b: u64 = b.trim_start_matches('=').trim().parse()?;
    if a > b {
        bail!("empty seed range {s}");
    }
    Ok((a..=b).collect())
}

struct Setup {
    uc: UseCase,
    preset: ScenarioPreset,
    config: ThresholdConfig,
    out: PathBuf,
}

fn setup(c: &CommonArgs) -> Result<Setup> {
    if c.jobs > 0 {
        intentgate::par::set_threads(c.jobs);
    }
    let preset = match &c.preset {
        Some(p) => ScenarioPreset::load(p).with_context(|| format!("loading preset {}", p.display()))?,
        None => ScenarioPreset::benign(c.uc),
    };
    if preset.uc != c.uc {
        bail!("preset is for {}, not {}", preset.uc, c.uc);
    }
    let config = match &c.config {
        Some(p) => ThresholdConfig::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => ThresholdConfig::for_use_case(c.uc),
    };
    fs::create_dir_all(&c.out)?;
    Ok(Setup {
        uc: c.uc,
        preset,
        config,
        out: c.out.clone(),
    })
}

fn seeds_or(c: &CommonArgs, default: Vec<u64>) -> Result<Vec<u64>> {
    c.seeds.as_deref().map_or(Ok(default), parse_seeds)
}

fn default_seeds() -> Vec<u64> {
    campaign::DEFAULT_SEEDS.collect()
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

fn cmd_main(a: &MainArgs) -> Result<()> {
    let s = setup(&a.common)?;
    let seeds = seeds_or(&a.common, default_seeds())?;
    let epochs = a.common.epochs.unwrap_or(campaign::MAIN_EPOCHS);
    let systems = parse_systems(&a.systems)?;
    let (report, runs) = campaign::run_main(&s.preset, &s.config, &systems, &seeds, epochs);

    let main_csv = s.out.join(format!("main_{}.csv", s.uc));
    campaign::write_main_csv(&main_csv, &report.rows)?;
    announce(&main_csv);
    let kpi_csv = s.out.join(format!("kpi_{}.csv", s.uc));
    campaign::write_kpi_csv(&kpi_csv, s.uc, &report.rows)?;
    announce(&kpi_csv);
    let stats_json = s.out.join(format!("stats_{}.json", s.uc));
    campaign::write_json(&stats_json, &(&report.comparisons, &report.identity))?;
    announce(&stats_json);
    if a.decisions {
        let p = s.out.join(format!("decisions_{}.jsonl", s.uc));
        campaign::write_decisions_jsonl(&p, &runs)?;
        announce(&p);
    }
    if let Some(dir) = &a.audit_dir {
        fs::create_dir_all(dir)?;
        for &system in &systems {
            for &seed in &seeds {
                let mut store = MemoryAudit::default();
                let spec = RunSpec {
                    preset: &s.preset,
                    config: &s.config,
                    system,
                    seed,
                    epochs,
                };
                campaign::run_seed(&spec, Some(&mut store));
                store.write_jsonl(&dir.join(format!("audit_{}_{}_{seed}.jsonl", s.uc, system)))?;
            }
        }
        println!("wrote audit logs under {}", dir.display());
    }
    if let Some(id) = &report.identity {
        if id.decision_mismatches > 0 || !id.kpi_identical {
            bail!("OURS and FB_INV diverged: {id:?}");
        }
    }
    Ok(())
}

fn cmd_stale(c: &CommonArgs) -> Result<()> {
    let s = setup(c)?;
    let seeds = seeds_or(c, default_seeds())?;
    let epochs = c.epochs.unwrap_or(campaign::STALE_EPOCHS);
    let rows = campaign::run_stale(&s.preset, &s.config, &SystemVariant::MAIN, &seeds, epochs);
    let p = s.out.join(format!("stale_{}.csv", s.uc));
    campaign::write_stale_csv(&p, &rows)?;
    announce(&p);
    Ok(())
}

fn cmd_regime(a: &RegimeArgs) -> Result<()> {
    let s = setup(&a.common)?;
    let (n_seeds, default_epochs) = a.mode.resolution();
    let seeds = seeds_or(&a.common, (42..42 + n_seeds).collect())?;
    let epochs = a.common.epochs.unwrap_or(default_epochs);
    let slices = match &a.slice {
        Some(name) => vec![faults::find_slice(name).with_context(|| format!("unknown slice {name}"))?],
        None => a.mode.slices(),
    };
    let rows = campaign::run_regime(&s.preset, &s.config, &slices, &seeds, epochs);
    let mode = match a.mode {
        RegimeMode::Coarse => "coarse",
        RegimeMode::Dense => "dense",
    };
    let p = s.out.join(format!("regime_{}_{mode}.csv", s.uc));
    campaign::write_regime_csv(&p, &rows)?;
    announce(&p);
    Ok(())
}

fn cmd_sensitivity(c: &CommonArgs) -> Result<()> {
    let s = setup(c)?;
    let seeds = seeds_or(c, default_seeds())?;
    let epochs = c.epochs.unwrap_or(campaign::MAIN_EPOCHS);
    let rows = campaign::run_sensitivity(&s.preset, &s.config, &campaign::tau_grid(), &seeds, epochs);
    let p = s.out.join(format!("sensitivity_{}.csv", s.uc));
    campaign::write_sensitivity_csv(&p, &rows)?;
    announce(&p);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Main(a) => cmd_main(&a),
        Command::Stale(c) => cmd_stale(&c),
        Command::Regime(a) => cmd_regime(&a),
        Command::Sensitivity(c) => cmd_sensitivity(&c),
        Command::EmitProfile { out } => {
            fs::create_dir_all(&out)?;
            let p = out.join("profile.json");
            fs::write(&p, campaign::ProfileDescriptor::standard().to_json())?;
            announce(&p);
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seeds("42..44").unwrap(), vec![42, 43, 44]);
        assert_eq!(parse_seeds("1..=2").unwrap(), vec![1, 2]);
        assert!(parse_seeds("5..1").is_err());
        assert!(parse_seeds("7").is_err());
    }
}
