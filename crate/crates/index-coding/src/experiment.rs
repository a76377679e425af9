//! Sweep orchestration: a rate grid crossed with seeds and algorithms,
//! fanned out over a thread pool, with rows emitted in grid order.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::actions::{generate_action_set, ActionSetOptions, TrafficSpec};
use crate::scheduler::{run_simulation, Algorithm, SimConfig, SimError, SimStats};

pub const CSV_HEADER: &str = "lambda,algorithm,seed,frames,total_avg_backlog,max_QR_ratio,wasted";

/// A (rate grid x seeds x algorithms) experiment over one traffic spec.
/// The spec's rate vector acts as the direction scaled by each grid value.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub spec: TrafficSpec,
    pub options: ActionSetOptions,
    pub algorithms: Vec<Algorithm>,
    pub lambda_grid: Vec<f64>,
    pub frames: usize,
    pub seeds: Vec<u64>,
}

impl SweepPlan {
    fn validate(&self) -> Result<&[f64], SimError> {
        let direction = self
            .spec
            .rates()
            .ok_or_else(|| SimError::Config("spec carries no rate direction".into()))?;
        if self.lambda_grid.is_empty() {
            return Err(SimError::Config("rate grid is empty".into()));
        }
        if !self.lambda_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(SimError::Config("rate grid must be strictly increasing".into()));
        }
        if self.seeds.is_empty() {
            return Err(SimError::Config("need at least one seed".into()));
        }
        if self.frames == 0 {
            return Err(SimError::Config("frame count must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(SimError::Config("need at least one algorithm".into()));
        }
        let max_scale = *self.lambda_grid.last().unwrap();
        if direction.iter().any(|d| d * max_scale > 1.0) {
            return Err(SimError::Config(
                "scaled rates exceed one packet per slot".into(),
            ));
        }
        Ok(direction)
    }

    /// Run configs in deterministic (algorithm, lambda, seed) order.
    fn configs(&self) -> Result<Vec<SimConfig>, SimError> {
        let direction = self.validate()?.to_vec();
        let actions = generate_action_set(&self.spec, self.options);
        let mut out = Vec::new();
        for algorithm in &self.algorithms {
            for &scale in &self.lambda_grid {
                for &seed in &self.seeds {
                    out.push(SimConfig {
                        spec: self.spec.clone(),
                        actions: actions.clone(),
                        algorithm: algorithm.clone(),
                        rates: direction.iter().map(|d| d * scale).collect(),
                        frames: self.frames,
                        seed,
                        lambda_label: scale,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// Execute the whole matrix; results come back in grid order regardless of
/// which runs finish first.
pub fn run_sweep(plan: &SweepPlan) -> Result<Vec<SimStats>, SimError> {
    let configs = plan.configs()?;
    configs
        .par_iter()
        .map(run_simulation)
        .collect::<Result<Vec<_>, _>>()
}

/// Format with six significant digits, plain decimal notation.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (5 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn csv_row(s: &SimStats) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        fmt_sig(s.lambda),
        s.algorithm,
        s.seed,
        s.frames,
        fmt_sig(s.total_avg_backlog),
        fmt_sig(s.max_qr_ratio),
        s.wasted
    )
}

/// Append rows to a CSV file, writing the header only when the file is new
/// or empty.
pub fn append_csv(path: &Path, stats: &[SimStats]) -> std::io::Result<()> {
    let need_header = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut out = String::new();
    if need_header {
        out.push_str(CSV_HEADER);
        out.push('\n');
    }
    for s in stats {
        out.push_str(&csv_row(s));
        out.push('\n');
    }
    file.write_all(out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workloads::three_user_broadcast;

    fn tiny_plan() -> SweepPlan {
        SweepPlan {
            spec: three_user_broadcast(),
            options: ActionSetOptions::default().templated(),
            algorithms: vec![Algorithm::Mw2, Algorithm::Uncoded],
            lambda_grid: vec![0.0, 0.2],
            frames: 200,
            seeds: vec![1, 2],
        }
    }

    #[test]
    fn sweep_rows_follow_grid_order() {
        let stats = run_sweep(&tiny_plan()).unwrap();
        assert_eq!(stats.len(), 8);
        let keys: Vec<(String, f64, u64)> = stats
            .iter()
            .map(|s| (s.algorithm.clone(), s.lambda, s.seed))
            .collect();
        assert_eq!(keys[0], ("mw2".to_string(), 0.0, 1));
        assert_eq!(keys[1], ("mw2".to_string(), 0.0, 2));
        assert_eq!(keys[4], ("uncoded".to_string(), 0.0, 1));
    }

    #[test]
    fn sweeps_are_deterministic() {
        let a = run_sweep(&tiny_plan()).unwrap();
        let b = run_sweep(&tiny_plan()).unwrap();
        let rows_a: Vec<String> = a.iter().map(csv_row).collect();
        let rows_b: Vec<String> = b.iter().map(csv_row).collect();
        assert_eq!(rows_a, rows_b);
    }

    #[test]
    fn plan_validation_rejects_bad_grids() {
        let mut p = tiny_plan();
        p.lambda_grid = vec![0.3, 0.2];
        assert!(run_sweep(&p).is_err());
        let mut p = tiny_plan();
        p.seeds.clear();
        assert!(run_sweep(&p).is_err());
        let mut p = tiny_plan();
        p.lambda_grid = vec![9.0];
        assert!(run_sweep(&p).is_err());
    }

    #[test]
    fn csv_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(0.5), "0.500000");
        assert_eq!(fmt_sig(123.456789), "123.457");
        assert_eq!(fmt_sig(0.0001234564), "0.000123456");
        let stats = run_sweep(&SweepPlan {
            lambda_grid: vec![0.0],
            seeds: vec![3],
            algorithms: vec![Algorithm::Mw2],
            ..tiny_plan()
        })
        .unwrap();
        assert_eq!(stats.len(), 1);
        assert_eq!(csv_row(&stats[0]), "0,mw2,3,200,0,0,200");
    }

    #[test]
    fn csv_append_writes_header_once() {
        let dir = std::env::temp_dir().join("ixc-test-csv");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("sweep-{}.csv", std::process::id()));
        let _ = std::fs::remove_file(&path);
        let stats = run_sweep(&tiny_plan()).unwrap();
        append_csv(&path, &stats[..2]).unwrap();
        append_csv(&path, &stats[2..4]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let headers = text.lines().filter(|l| *l == CSV_HEADER).count();
        assert_eq!(headers, 1);
        assert_eq!(text.lines().count(), 5);
        let _ = std::fs::remove_file(&path);
    }
}
