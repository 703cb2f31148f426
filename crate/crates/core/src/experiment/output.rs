//! CSV results, timing sidecar and gnuplot scripts.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::config::Preset;
use super::sweep::{MetricSeries, Scale, METRICS};
use crate::error::{Error, Result};

/// Sweep-axis columns that precede the metrics.
pub const AXIS_COLUMNS: [&str; 6] = ["snr_db", "timing_std_s", "frequency_std_hz", "packets", "qam_order", "trials"];

fn metric_column(k: usize) -> String {
    match METRICS[k].1 {
        Scale::Linear => METRICS[k].0.to_string(),
        Scale::Decibel => format!("{}_db", METRICS[k].0),
    }
}

/// Full header in file order.
pub fn header() -> Vec<String> {
    let mut h: Vec<String> = AXIS_COLUMNS.iter().map(|s| s.to_string()).collect();
    h.extend((0..METRICS.len()).map(metric_column));
    h.extend((0..METRICS.len()).map(|k| format!("{}_ci95", metric_column(k))));
    h.push("sanity_flag".into());
    h
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// One row per sweep point; floats in shortest round-trip scientific form.
pub fn write_results(series: &MetricSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header()).map_err(csv_err(path))?;
    for row in &series.rows {
        let p = &row.point;
        let mut rec = vec![
            format!("{:e}", p.snr_db),
            format!("{:e}", p.timing_std_s),
            format!("{:e}", p.frequency_std_hz),
            p.packets.to_string(),
            p.qam_order.to_string(),
            row.trials.to_string(),
        ];
        rec.extend((0..METRICS.len()).map(|k| format!("{:e}", row.reported(k))));
        rec.extend((0..METRICS.len()).map(|k| format!("{:e}", row.reported_ci(k))));
        rec.push(u8::from(row.sanity_flag).to_string());
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Parsed results file.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ResultTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn read_results(path: &Path) -> Result<ResultTable> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("{}: bad number `{s}`: {e}", path.display()))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(ResultTable { header, rows })
}

/// Wall time per point, kept apart from the deterministic results.
pub fn write_timing(series: &MetricSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["snr_db", "timing_std_s", "frequency_std_hz", "packets", "qam_order", "trials", "wall_time_s"])
        .map_err(csv_err(path))?;
    for row in &series.rows {
        let p = &row.point;
        w.write_record([
            format!("{:e}", p.snr_db),
            format!("{:e}", p.timing_std_s),
            format!("{:e}", p.frequency_std_hz),
            p.packets.to_string(),
            p.qam_order.to_string(),
            row.trials.to_string(),
            format!("{:.3}", row.wall_time_s),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn plotted(preset: Option<Preset>) -> (&'static [&'static str], &'static str, bool) {
    match preset {
        Some(Preset::Fig3) | None => (&["nmse_ls_db", "nmse_mmse_db", "nmse_jaece_db"], "NMSE (dB)", false),
        Some(Preset::Fig4a | Preset::Fig4b) => (&["ber_ls", "ber_mmse", "ber_jaece", "ber_perfect"], "BER", true),
        Some(Preset::Fig5a) => (
            &["range_mse_s1_music_db", "range_mse_s1_ml_db", "range_mse_s2_music_db", "range_mse_s2_ml_db"],
            "range MSE (dB m^2)",
            false,
        ),
        Some(Preset::Fig5b | Preset::Fig5c) => (&["aoa_mse_s1_db", "aoa_mse_s2_db"], "AoA MSE (dB rad^2)", false),
        Some(Preset::Fig5d) => (
            &["loc_mse_s1_music_db", "loc_mse_s1_ml_db", "loc_mse_s2_music_db", "loc_mse_s2_ml_db"],
            "localization MSE (dB m^2)",
            false,
        ),
    }
}

/// Gnuplot script plotting the preset's metrics against SNR from `csv_name`.
pub fn write_plot_script(preset: Option<Preset>, csv_name: &str, path: &Path) -> Result<()> {
    let (cols, ylabel, logscale) = plotted(preset);
    let header = header();
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset key autotitle columnhead\nset grid\n");
    s.push_str("set xlabel 'SNR (dB)'\n");
    s.push_str(&format!("set ylabel '{ylabel}'\n"));
    if logscale {
        s.push_str("set logscale y\n");
    }
    let stem = csv_name.trim_end_matches(".csv");
    s.push_str(&format!("set terminal pngcairo size 800,600\nset output '{stem}.png'\n"));
    let series: Vec<String> = cols
        .iter()
        .map(|c| {
            let k = header.iter().position(|h| h == c).expect("plotted column exists") + 1;
            format!("'{csv_name}' using 1:{k} with linespoints title '{c}'")
        })
        .collect();
    s.push_str(&format!("plot {}\n", series.join(", \\\n     ")));
    let mut f = File::create(path).map_err(io_err(path))?;
    f.write_all(s.as_bytes()).map_err(io_err(path))
}
