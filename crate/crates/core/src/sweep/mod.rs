//! Replicate batteries over `(r, rho_A)` grids.
//!
//! Every run in a sweep gets its seed from [`derive_seed`], so each cell's
//! result depends only on the configuration and the master seed, never on
//! which worker ran it or in what order.

mod config;
mod format;
mod io;

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

pub use config::{parse_config, Origin, Settings};
pub use format::fmt_sig6;
pub use io::{
    read_run_csv, read_sweep_csv, write_run_csv, write_run_csv_to, write_sweep_csv,
    write_sweep_csv_to, write_sweep_json, RunCsvRow, SweepCsvRow, RUN_CSV_HEADER, SWEEP_CSV_HEADER,
};

use crate::analytics::{
    convergence_summary, extract_critical_r, CriticalPoint, ResponseCurve, RunSummary,
    DEFAULT_TAIL_FRACTION, DEFAULT_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::evolution::{run_observed, RunOptions};
use crate::model::{validate_params, Policy, SimParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Shared run parameters; `r`, `rho_a`, `policy` and `seed` are set per run.
    pub base: SimParams,
    pub r_values: Vec<f64>,
    pub rho_values: Vec<f64>,
    pub policy: Policy,
    pub replicates: usize,
    pub master_seed: u64,
    /// Worker count. Results do not depend on it.
    #[serde(skip)]
    pub parallelism: usize,
    pub tail_fraction: f64,
    pub threshold: f64,
    /// When set, every run's time series is written here as a run CSV.
    #[serde(skip)]
    pub run_csv_dir: Option<PathBuf>,
}

impl SweepConfig {
    pub fn new(base: SimParams, policy: Policy, r_values: Vec<f64>, rho_values: Vec<f64>) -> Self {
        SweepConfig {
            base,
            r_values,
            rho_values,
            policy,
            replicates: 1,
            master_seed: 0,
            parallelism: 1,
            tail_fraction: DEFAULT_TAIL_FRACTION,
            threshold: DEFAULT_THRESHOLD,
            run_csv_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_ascending("r_values", &self.r_values)?;
        check_ascending("rho_values", &self.rho_values)?;
        if self.replicates == 0 {
            return Err(Error::invalid("replicates", "must be at least 1"));
        }
        if self.parallelism == 0 {
            return Err(Error::invalid("parallelism", "must be at least 1"));
        }
        if self.base.generations == 0 {
            return Err(Error::invalid(
                "generations",
                "a sweep needs at least one generation",
            ));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::invalid("tail_fraction", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::invalid("threshold", "out of [0,1]"));
        }
        for (ri, _) in self.r_values.iter().enumerate() {
            for (hi, _) in self.rho_values.iter().enumerate() {
                validate_params(self.cell_params(ri, hi, 0))?;
            }
        }
        Ok(())
    }

    /// Parameters of replicate `replicate` in cell `(r_index, rho_index)`.
    pub fn cell_params(&self, r_index: usize, rho_index: usize, replicate: usize) -> SimParams {
        SimParams {
            r: self.r_values[r_index],
            rho_a: self.rho_values[rho_index],
            policy: self.policy,
            seed: derive_seed(self.master_seed, r_index, rho_index, replicate),
            ..self.base.clone()
        }
    }
}

fn check_ascending(field: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(field, "must not be empty"));
    }
    if !values.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid(field, "must be strictly ascending"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub r: f64,
    #[serde(rename = "rho_A")]
    pub rho_a: f64,
    #[serde(rename = "mean_p_C")]
    pub mean_p_c: f64,
    #[serde(rename = "sd_p_C")]
    pub sd_p_c: f64,
    #[serde(rename = "mean_p_AC")]
    pub mean_p_ac: f64,
    #[serde(rename = "sd_p_AC")]
    pub sd_p_ac: f64,
    #[serde(rename = "mean_coop_freq")]
    pub mean_coop_frequency: f64,
    #[serde(rename = "replicates")]
    pub replicate_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    /// Ordered by `rho_A`, then `r`.
    pub cells: Vec<SweepCell>,
    /// One per `rho_A`, in `rho_values` order.
    pub critical_points: Vec<CriticalPoint>,
}

impl SweepResult {
    pub fn critical_for(&self, rho_a: f64) -> Option<&CriticalPoint> {
        self.critical_points.iter().find(|c| c.rho_a == rho_a)
    }
}

/// Progress notification sent after each finished run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepEvent {
    pub completed: usize,
    pub total: usize,
    pub r_index: usize,
    pub rho_index: usize,
    pub replicate: usize,
}

/// Seed for one run, mixed from the master seed and the run's grid coordinates.
pub fn derive_seed(master_seed: u64, r_index: usize, rho_index: usize, replicate: usize) -> u64 {
    let mut h = splitmix64(master_seed ^ 0x6a09_e667_f3bc_c908);
    for v in [r_index as u64, rho_index as u64, replicate as u64] {
        h = splitmix64(h ^ splitmix64(v.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug)]
struct Task {
    rho_index: usize,
    r_index: usize,
    replicate: usize,
}

/// Runs every replicate of every cell and aggregates the converged values.
pub fn run_sweep<F>(config: &SweepConfig, progress: F) -> Result<SweepResult>
where
    F: Fn(&SweepEvent) + Sync,
{
    config.validate()?;
    if let Some(dir) = &config.run_csv_dir {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
    }
    let tasks: Vec<Task> = (0..config.rho_values.len())
        .flat_map(|rho_index| {
            (0..config.r_values.len()).flat_map(move |r_index| {
                (0..config.replicates).map(move |replicate| Task {
                    rho_index,
                    r_index,
                    replicate,
                })
            })
        })
        .collect();
    let total = tasks.len();
    let completed = AtomicUsize::new(0);
    let execute = |task: &Task| -> Result<RunSummary> {
        let summary = run_task(config, task)?;
        let done = completed.fetch_add(1, Ordering::Relaxed) + 1;
        progress(&SweepEvent {
            completed: done,
            total,
            r_index: task.r_index,
            rho_index: task.rho_index,
            replicate: task.replicate,
        });
        Ok(summary)
    };

    let summaries = execute_all(&tasks, config.parallelism, execute)?;
    Ok(aggregate(config, &summaries))
}

#[cfg(feature = "parallel")]
fn execute_all<F>(tasks: &[Task], parallelism: usize, execute: F) -> Result<Vec<RunSummary>>
where
    F: Fn(&Task) -> Result<RunSummary> + Sync,
{
    use rayon::prelude::*;
    if parallelism <= 1 {
        return tasks.iter().map(execute).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::Argument(format!("cannot start {parallelism} workers: {e}")))?;
    // collect keeps task order, so aggregation sees the same sequence at any parallelism
    pool.install(|| tasks.par_iter().map(&execute).collect())
}

#[cfg(not(feature = "parallel"))]
fn execute_all<F>(tasks: &[Task], _parallelism: usize, execute: F) -> Result<Vec<RunSummary>>
where
    F: Fn(&Task) -> Result<RunSummary>,
{
    tasks.iter().map(execute).collect()
}

fn run_task(config: &SweepConfig, task: &Task) -> Result<RunSummary> {
    let params = config.cell_params(task.r_index, task.rho_index, task.replicate);
    let wrap = |source: Error| Error::Run {
        r: params.r,
        rho_a: params.rho_a,
        replicate: task.replicate,
        source: Box::new(source),
    };
    let options = RunOptions {
        track_lineage: false,
    };
    let run = match &config.run_csv_dir {
        None => run_observed(&params, options, |_| Ok(())),
        Some(dir) => {
            let path = dir.join(format!(
                "run_rho{}_r{}_rep{}.csv",
                task.rho_index, task.r_index, task.replicate
            ));
            io::stream_run_csv(&path, |sink| {
                run_observed(&params, options, |rec| sink(rec))
            })
        }
    }
    .map_err(wrap)?;
    convergence_summary(&run.records, config.tail_fraction)
        .ok_or_else(|| wrap(Error::Logic("run produced no generations".into())))
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn aggregate(config: &SweepConfig, summaries: &[RunSummary]) -> SweepResult {
    let reps = config.replicates;
    let n_r = config.r_values.len();
    let mut cells = Vec::with_capacity(n_r * config.rho_values.len());
    let mut critical_points = Vec::with_capacity(config.rho_values.len());
    for (hi, &rho_a) in config.rho_values.iter().enumerate() {
        let mut curve = Vec::with_capacity(n_r);
        for (ri, &r) in config.r_values.iter().enumerate() {
            let start = (hi * n_r + ri) * reps;
            let block = &summaries[start..start + reps];
            let p_c: Vec<f64> = block.iter().map(|s| s.mean_p_c).collect();
            let p_ac: Vec<f64> = block.iter().map(|s| s.mean_p_ac).collect();
            let coop: Vec<f64> = block.iter().map(|s| s.coop_frequency).collect();
            let (mean_p_c, sd_p_c) = mean_sd(&p_c);
            let (mean_p_ac, sd_p_ac) = mean_sd(&p_ac);
            let (mean_coop_frequency, _) = mean_sd(&coop);
            curve.push((r, mean_p_c.clamp(0.0, 1.0)));
            cells.push(SweepCell {
                r,
                rho_a,
                mean_p_c,
                sd_p_c,
                mean_p_ac,
                sd_p_ac,
                mean_coop_frequency,
                replicate_count: reps,
            });
        }
        let r_critical = if curve.len() >= 2 {
            ResponseCurve::new(curve)
                .and_then(|c| extract_critical_r(&c, config.threshold))
                .expect("validated ascending curve with at least two points")
        } else {
            None
        };
        critical_points.push(CriticalPoint { rho_a, r_critical });
    }
    SweepResult {
        config: config.clone(),
        cells,
        critical_points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn tiny(policy: Policy, r_values: Vec<f64>, rho_values: Vec<f64>) -> SweepConfig {
        let base = SimParams {
            generations: 30,
            ..SimParams::default().with_grid(6, 6)
        };
        let mut c = SweepConfig::new(base, policy, r_values, rho_values);
        c.replicates = 3;
        c.master_seed = 42;
        c
    }

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        assert_eq!(derive_seed(9, 1, 2, 3), derive_seed(9, 1, 2, 3));
        assert_ne!(derive_seed(9, 0, 0, 0), derive_seed(9, 0, 0, 1));
        assert_ne!(derive_seed(9, 1, 0, 0), derive_seed(9, 0, 1, 0));
        assert_ne!(derive_seed(9, 0, 0, 0), derive_seed(10, 0, 0, 0));
    }

    #[test]
    fn no_seed_collisions_in_a_million() {
        let mut seen = HashSet::with_capacity(1_000_000);
        for r in 0..100 {
            for rho in 0..100 {
                for rep in 0..100 {
                    assert!(seen.insert(derive_seed(7, r, rho, rep)));
                }
            }
        }
    }

    #[test]
    fn single_cell_wraps_one_run() {
        let mut c = tiny(Policy::Mimic, vec![3.0], vec![0.5]);
        c.replicates = 1;
        let res = run_sweep(&c, |_| {}).unwrap();
        assert_eq!(res.cells.len(), 1);
        assert_eq!(res.cells[0].sd_p_c, 0.0);
        let run = crate::evolution::run_simulation(&c.cell_params(0, 0, 0)).unwrap();
        let s = convergence_summary(&run.records, c.tail_fraction).unwrap();
        assert_eq!(res.cells[0].mean_p_c, s.mean_p_c);
        assert_eq!(
            res.critical_points,
            vec![CriticalPoint {
                rho_a: 0.5,
                r_critical: None
            }]
        );
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let mut c = tiny(
            Policy::PlayerControlled,
            vec![2.0, 4.0, 6.0],
            vec![0.0, 0.5],
        );
        let a = run_sweep(&c, |_| {}).unwrap();
        c.parallelism = 4;
        let b = run_sweep(&c, |_| {}).unwrap();
        assert_eq!(a.cells, b.cells);
        assert_eq!(a.critical_points, b.critical_points);
        assert_eq!(a.cells.len(), 6);
    }

    #[test]
    fn progress_reports_every_run() {
        let c = tiny(Policy::Mimic, vec![2.0, 3.0], vec![0.5]);
        let count = AtomicUsize::new(0);
        let max_seen = AtomicUsize::new(0);
        run_sweep(&c, |e| {
            count.fetch_add(1, Ordering::Relaxed);
            max_seen.fetch_max(e.completed, Ordering::Relaxed);
            assert_eq!(e.total, 6);
        })
        .unwrap();
        assert_eq!(count.into_inner(), 6);
        assert_eq!(max_seen.into_inner(), 6);
    }

    #[test]
    fn aggregation_matches_two_pass_reference() {
        let c = tiny(Policy::MandatoryCooperation, vec![2.0, 5.0], vec![0.25]);
        let res = run_sweep(&c, |_| {}).unwrap();
        for (ri, cell) in res.cells.iter().enumerate() {
            let vals: Vec<f64> = (0..c.replicates)
                .map(|rep| {
                    let run = crate::evolution::run_simulation(&c.cell_params(ri, 0, rep)).unwrap();
                    convergence_summary(&run.records, c.tail_fraction)
                        .unwrap()
                        .mean_p_c
                })
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var =
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
            assert!((cell.mean_p_c - mean).abs() < 1e-12);
            assert!((cell.sd_p_c - var.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let c = tiny(Policy::Baseline, vec![2.0], vec![0.5]);
        assert!(matches!(
            run_sweep(&c, |_| {}),
            Err(Error::Invalid { field: "rho_A", .. })
        ));
        let c = tiny(Policy::Mimic, vec![3.0, 2.0], vec![0.5]);
        assert!(run_sweep(&c, |_| {}).is_err());
        let mut c = tiny(Policy::Mimic, vec![2.0], vec![0.5]);
        c.replicates = 0;
        assert!(run_sweep(&c, |_| {}).is_err());
    }

    #[test]
    fn per_run_csvs_are_streamed() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny(Policy::Mimic, vec![2.0], vec![0.5]);
        c.run_csv_dir = Some(dir.path().join("runs"));
        run_sweep(&c, |_| {}).unwrap();
        let rows = read_run_csv(&dir.path().join("runs/run_rho0_r0_rep2.csv")).unwrap();
        assert_eq!(rows.len(), 30);
    }
}
