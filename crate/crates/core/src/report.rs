//! Scenario execution and CSV emission.
//!
//! Runs are independent (one per algorithm × seed) and may execute in
//! parallel; results and output files are always ordered by
//! (algorithm name, seed). Floats are written with Rust's shortest
//! round-trip formatting, so re-parsing a CSV reproduces every value
//! bit for bit.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::SimConfig;
use crate::sim::{run_simulation, Algorithm, RoundMetrics, SimError};

pub const ROUNDS_CSV_HEADER: &str =
    "algorithm,seed,round,alive,packets_cum,energy_spent_j,residual_j,rotations,reclusterings";
pub const SUMMARY_CSV_HEADER: &str =
    "algorithm,seed,first_death_round,last_death_round,total_packets,total_energy_j";

/// Whole-run aggregates derived from the round series.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// Round in which the first node died, if any died.
    pub first_death_round: Option<u64>,
    /// Round in which the last node died, if the network died out.
    pub last_death_round: Option<u64>,
    pub total_packets: u64,
    pub total_energy_j: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub rounds: Vec<RoundMetrics>,
    pub summary: RunSummary,
}

/// One run's outcome; failures carry the run identity and leave other runs
/// untouched.
#[derive(Debug)]
pub struct RunOutcome {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub result: Result<RunResult, SimError>,
}

pub fn summarize(n_nodes: usize, rounds: &[RoundMetrics]) -> RunSummary {
    RunSummary {
        first_death_round: rounds
            .iter()
            .find(|m| m.alive_count < n_nodes)
            .map(|m| m.round),
        last_death_round: rounds.iter().find(|m| m.alive_count == 0).map(|m| m.round),
        total_packets: rounds.last().map_or(0, |m| m.packets_delivered_total),
        total_energy_j: rounds.iter().map(|m| m.energy_spent_this_round_j).sum(),
    }
}

/// Executes every (algorithm, seed) combination of the config. Runs execute
/// in parallel; the returned order is the deterministic job order.
pub fn run_scenario(cfg: &SimConfig) -> Vec<RunOutcome> {
    let mut jobs: Vec<(Algorithm, u64)> = Vec::new();
    let mut algorithms = cfg.algorithms.clone();
    algorithms.sort_by_key(|a| a.name());
    for &algorithm in &algorithms {
        for &seed in &cfg.seeds {
            jobs.push((algorithm, seed));
        }
    }
    jobs.into_par_iter()
        .map(|(algorithm, seed)| {
            let params = cfg.sim_params(algorithm);
            let result = run_simulation(&params, seed).map(|rounds| RunResult {
                algorithm,
                seed,
                summary: summarize(cfg.n_nodes, &rounds),
                rounds,
            });
            RunOutcome {
                algorithm,
                seed,
                result,
            }
        })
        .collect()
}

pub fn rounds_csv(results: &[RunResult]) -> String {
    let mut out = String::new();
    out.push_str(ROUNDS_CSV_HEADER);
    out.push('\n');
    for r in results {
        for m in &r.rounds {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.algorithm.name(),
                r.seed,
                m.round,
                m.alive_count,
                m.packets_delivered_total,
                m.energy_spent_this_round_j,
                m.residual_energy_total_j,
                m.head_rotations,
                m.reclusterings
            )
            .expect("writing to a String cannot fail");
        }
    }
    out
}

pub fn summary_csv(results: &[RunResult]) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_CSV_HEADER);
    out.push('\n');
    for r in results {
        let fmt_opt = |v: Option<u64>| v.map_or(String::new(), |x| x.to_string());
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.algorithm.name(),
            r.seed,
            fmt_opt(r.summary.first_death_round),
            fmt_opt(r.summary.last_death_round),
            r.summary.total_packets,
            r.summary.total_energy_j
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Writes `rounds.csv` and `summary.csv` into `out_dir` (created if needed).
pub fn write_csv(results: &[RunResult], out_dir: &Path) -> io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(out_dir)?;
    let rounds_path = out_dir.join("rounds.csv");
    let summary_path = out_dir.join("summary.csv");
    std::fs::write(&rounds_path, rounds_csv(results))?;
    std::fs::write(&summary_path, summary_csv(results))?;
    Ok((rounds_path, summary_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn fixture_result() -> RunResult {
        let rounds = vec![
            RoundMetrics {
                round: 1,
                alive_count: 3,
                packets_delivered_total: 2,
                energy_spent_this_round_j: 0.125,
                residual_energy_total_j: 5.875,
                head_rotations: 0,
                reclusterings: 1,
            },
            RoundMetrics {
                round: 2,
                alive_count: 2,
                packets_delivered_total: 4,
                energy_spent_this_round_j: 0.0625,
                residual_energy_total_j: 5.8125,
                head_rotations: 1,
                reclusterings: 0,
            },
            RoundMetrics {
                round: 3,
                alive_count: 0,
                packets_delivered_total: 5,
                energy_spent_this_round_j: 5.8125,
                residual_energy_total_j: 0.0,
                head_rotations: 0,
                reclusterings: 1,
            },
        ];
        RunResult {
            algorithm: Algorithm::Trajectory,
            seed: 9,
            summary: summarize(3, &rounds),
            rounds,
        }
    }

    #[test]
    fn rounds_csv_matches_fixture() {
        let csv = rounds_csv(&[fixture_result()]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], ROUNDS_CSV_HEADER);
        assert_eq!(lines[1], "trajectory,9,1,3,2,0.125,5.875,0,1");
        assert_eq!(lines[2], "trajectory,9,2,2,4,0.0625,5.8125,1,0");
        assert_eq!(lines[3], "trajectory,9,3,0,5,5.8125,0,0,1");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn rounds_csv_reconstructs_metrics_exactly() {
        let result = fixture_result();
        let csv = rounds_csv(&[result.clone()]);
        for (line, m) in csv.lines().skip(1).zip(&result.rounds) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols[2].parse::<u64>().unwrap(), m.round);
            assert_eq!(cols[3].parse::<usize>().unwrap(), m.alive_count);
            assert_eq!(cols[4].parse::<u64>().unwrap(), m.packets_delivered_total);
            assert_eq!(
                cols[5].parse::<f64>().unwrap(),
                m.energy_spent_this_round_j
            );
            assert_eq!(cols[6].parse::<f64>().unwrap(), m.residual_energy_total_j);
            assert_eq!(cols[7].parse::<u32>().unwrap(), m.head_rotations);
            assert_eq!(cols[8].parse::<u32>().unwrap(), m.reclusterings);
        }
    }

    #[test]
    fn summary_csv_matches_fixture() {
        let csv = summary_csv(&[fixture_result()]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SUMMARY_CSV_HEADER);
        assert_eq!(lines[1], "trajectory,9,2,3,5,6");
    }

    #[test]
    fn summary_handles_no_deaths() {
        let rounds = vec![RoundMetrics {
            round: 1,
            alive_count: 3,
            packets_delivered_total: 1,
            energy_spent_this_round_j: 0.5,
            residual_energy_total_j: 5.5,
            head_rotations: 0,
            reclusterings: 1,
        }];
        let s = summarize(3, &rounds);
        assert_eq!(s.first_death_round, None);
        assert_eq!(s.last_death_round, None);
        let result = RunResult {
            algorithm: Algorithm::Leach,
            seed: 1,
            summary: s,
            rounds,
        };
        let csv = summary_csv(&[result]);
        assert_eq!(csv.lines().nth(1).unwrap(), "leach,1,,,1,0.5");
    }

    #[test]
    fn empty_run_yields_header_only() {
        let result = RunResult {
            algorithm: Algorithm::Leach,
            seed: 0,
            summary: summarize(5, &[]),
            rounds: vec![],
        };
        let csv = rounds_csv(&[result]);
        assert_eq!(csv, format!("{ROUNDS_CSV_HEADER}\n"));
    }

    #[test]
    fn scenario_runs_ordered_by_algorithm_then_seed() {
        let cfg = parse_config(
            "[field]\nn_nodes = 8\n\n[node]\ninitial_energy_j = 0.01\n\n[run]\nseeds = [2, 1]\nmax_rounds = 30\n",
        )
        .unwrap();
        let outcomes = run_scenario(&cfg);
        let ids: Vec<(&str, u64)> = outcomes
            .iter()
            .map(|o| (o.algorithm.name(), o.seed))
            .collect();
        assert_eq!(
            ids,
            vec![
                ("leach", 2),
                ("leach", 1),
                ("trajectory", 2),
                ("trajectory", 1)
            ]
        );
        for o in outcomes {
            let r = o.result.expect("small runs succeed");
            assert!(!r.rounds.is_empty());
            // alive column non-increasing within each run
            let mut prev = usize::MAX;
            for m in &r.rounds {
                assert!(m.alive_count <= prev);
                prev = m.alive_count;
            }
        }
    }

    #[test]
    fn identical_invocations_give_identical_csv() {
        let cfg = parse_config(
            "[field]\nn_nodes = 10\n\n[node]\ninitial_energy_j = 0.02\n\n[run]\nseeds = [3]\nmax_rounds = 100\n",
        )
        .unwrap();
        let a: Vec<RunResult> = run_scenario(&cfg)
            .into_iter()
            .map(|o| o.result.unwrap())
            .collect();
        let b: Vec<RunResult> = run_scenario(&cfg)
            .into_iter()
            .map(|o| o.result.unwrap())
            .collect();
        assert_eq!(rounds_csv(&a), rounds_csv(&b));
        assert_eq!(summary_csv(&a), summary_csv(&b));
    }
}
