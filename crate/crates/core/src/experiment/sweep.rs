//! Sweeps over the Cartesian product of axes and per-point aggregation.

use std::time::Instant;

use rayon::prelude::*;

use super::config::{ScenarioConfig, SweepPoint};
use super::trial::{run_trial, TrialRecord, S1_ML, S1_MUSIC, S2_ML, S2_MUSIC};
use crate::error::{Error, Result};

/// How a metric is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Decibel,
}

/// Metric names in CSV order; values are averaged linearly and dB columns
/// are converted after averaging.
pub const METRICS: [(&str, Scale); 17] = [
    ("nmse_ls", Scale::Decibel),
    ("nmse_mmse", Scale::Decibel),
    ("nmse_jaece", Scale::Decibel),
    ("ber_ls", Scale::Linear),
    ("ber_mmse", Scale::Linear),
    ("ber_jaece", Scale::Linear),
    ("ber_perfect", Scale::Linear),
    ("aoa_mse_s1", Scale::Decibel),
    ("aoa_mse_s2", Scale::Decibel),
    ("range_mse_s1_music", Scale::Decibel),
    ("range_mse_s1_ml", Scale::Decibel),
    ("range_mse_s2_music", Scale::Decibel),
    ("range_mse_s2_ml", Scale::Decibel),
    ("loc_mse_s1_music", Scale::Decibel),
    ("loc_mse_s1_ml", Scale::Decibel),
    ("loc_mse_s2_music", Scale::Decibel),
    ("loc_mse_s2_ml", Scale::Decibel),
];

pub fn metric_index(name: &str) -> Option<usize> {
    METRICS.iter().position(|(n, _)| *n == name)
}

fn trial_metrics(r: &TrialRecord) -> [f64; 17] {
    [
        r.nmse[0],
        r.nmse[1],
        r.nmse[2],
        r.ber(0),
        r.ber(1),
        r.ber(2),
        r.ber(3),
        r.aoa_sq_error(false),
        r.aoa_sq_error(true),
        r.range_sq_error(S1_MUSIC),
        r.range_sq_error(S1_ML),
        r.range_sq_error(S2_MUSIC),
        r.range_sq_error(S2_ML),
        r.position_sq_error(S1_MUSIC),
        r.position_sq_error(S1_ML),
        r.position_sq_error(S2_MUSIC),
        r.position_sq_error(S2_ML),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointMetrics {
    pub point: SweepPoint,
    pub trials: usize,
    /// Linear means in [`METRICS`] order.
    pub mean: Vec<f64>,
    /// 95% confidence half-widths of the linear means.
    pub ci95: Vec<f64>,
    /// Localization MSE inconsistent with range and AoA MSEs by > 10x.
    pub sanity_flag: bool,
    /// Excluded from the CSV so output bytes depend only on config and seed.
    pub wall_time_s: f64,
}

impl PointMetrics {
    pub fn linear(&self, name: &str) -> f64 {
        self.mean[metric_index(name).unwrap_or_else(|| panic!("unknown metric {name}"))]
    }

    pub fn db(&self, name: &str) -> f64 {
        10.0 * self.linear(name).log10()
    }

    /// CSV value: linear or dB according to [`METRICS`].
    pub fn reported(&self, k: usize) -> f64 {
        match METRICS[k].1 {
            Scale::Linear => self.mean[k],
            Scale::Decibel => 10.0 * self.mean[k].log10(),
        }
    }

    /// Half-width in the reported unit; for dB columns the upper offset
    /// `10 log10(1 + ci / mean)`.
    pub fn reported_ci(&self, k: usize) -> f64 {
        match METRICS[k].1 {
            Scale::Linear => self.ci95[k],
            Scale::Decibel if self.mean[k] > 0.0 => 10.0 * (1.0 + self.ci95[k] / self.mean[k]).log10(),
            Scale::Decibel => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricSeries {
    pub rows: Vec<PointMetrics>,
}

impl MetricSeries {
    pub fn find(&self, pred: impl Fn(&SweepPoint) -> bool) -> Vec<&PointMetrics> {
        self.rows.iter().filter(|r| pred(&r.point)).collect()
    }
}

/// Aggregates in trial order, so the result is independent of how the
/// trials were scheduled.
pub fn aggregate(point: SweepPoint, records: &[TrialRecord], wall_time_s: f64) -> PointMetrics {
    let n = records.len();
    let values: Vec<[f64; 17]> = records.iter().map(trial_metrics).collect();
    let mut mean = vec![0.0; METRICS.len()];
    let mut ci95 = vec![0.0; METRICS.len()];
    for k in 0..METRICS.len() {
        let col: Vec<f64> = values.iter().map(|v| v[k]).collect();
        let m = pairwise_sum(&col) / n as f64;
        let var = if n > 1 {
            pairwise_sum(&col.iter().map(|x| (x - m).powi(2)).collect::<Vec<_>>()) / (n - 1) as f64
        } else {
            0.0
        };
        mean[k] = m;
        ci95[k] = 1.96 * (var / n as f64).sqrt();
    }

    let r2 = records.iter().map(|r| r.truth.range_m.powi(2)).sum::<f64>() / n as f64;
    let idx = |s: &str| metric_index(s).expect("metric exists");
    let inconsistent = |loc: &str, range: &str, aoa: &str| mean[idx(loc)] > 10.0 * (mean[idx(range)] + r2 * mean[idx(aoa)]);
    let sanity_flag = inconsistent("loc_mse_s1_music", "range_mse_s1_music", "aoa_mse_s1")
        || inconsistent("loc_mse_s1_ml", "range_mse_s1_ml", "aoa_mse_s1")
        || inconsistent("loc_mse_s2_music", "range_mse_s2_music", "aoa_mse_s2")
        || inconsistent("loc_mse_s2_ml", "range_mse_s2_ml", "aoa_mse_s2");

    PointMetrics { point, trials: n, mean, ci95, sanity_flag, wall_time_s }
}

fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let (a, b) = x.split_at(x.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Runs every sweep point; trials run in parallel, results are collected
/// in trial order.
pub fn sweep(cfg: &ScenarioConfig) -> Result<MetricSeries> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (pi, point) in cfg.points().into_iter().enumerate() {
        let start = Instant::now();
        let records: Vec<TrialRecord> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                run_trial(cfg, &point, t).map_err(|e| Error::Trial { point: pi, trial: t, source: Box::new(e) })
            })
            .collect::<Result<_>>()?;
        let elapsed = start.elapsed().as_secs_f64();
        log::info!(
            "point {pi}: snr {} dB, tau {:e} s, cfo {} Hz, M_s {}, QAM {}: {} trials in {:.2} s",
            point.snr_db,
            point.timing_std_s,
            point.frequency_std_hz,
            point.packets,
            point.qam_order,
            cfg.trials,
            elapsed
        );
        rows.push(aggregate(point, &records, elapsed));
    }
    Ok(MetricSeries { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.waveform.subcarriers = 16;
        cfg.arrays.bs_rows = 4;
        cfg.arrays.bs_cols = 4;
        cfg.trials = 3;
        cfg.sweep.snr_db = vec![10.0];
        cfg.sweep.packets = vec![4];
        cfg
    }

    #[test]
    fn single_point_single_trial_matches_run_trial() {
        let mut cfg = tiny();
        cfg.trials = 1;
        let series = sweep(&cfg).unwrap();
        assert_eq!(series.rows.len(), 1);
        let rec = run_trial(&cfg, &cfg.points()[0], 0).unwrap();
        let row = &series.rows[0];
        assert_eq!(row.linear("nmse_jaece"), rec.nmse[2]);
        assert_eq!(row.linear("range_mse_s1_music"), rec.range_sq_error(S1_MUSIC));
        assert!(row.ci95.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let cfg = tiny();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| sweep(&cfg).unwrap());
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(|| sweep(&cfg).unwrap());
        assert_eq!(one.rows[0].mean, three.rows[0].mean);
        assert_eq!(one.rows[0].ci95, three.rows[0].ci95);
    }

    #[test]
    fn metric_names_are_unique() {
        for (i, (a, _)) in METRICS.iter().enumerate() {
            assert_eq!(metric_index(a), Some(i));
        }
    }
}
