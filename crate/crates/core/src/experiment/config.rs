//! Scenario configuration, profiles and figure presets.

use std::fmt;
use std::path::Path as FsPath;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jaece::SearchConfig;
use crate::scene::{ArrayGeometry, Layout, NoiseModel, Panel, Waveform};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformConfig {
    pub carrier_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub subcarriers: usize,
    /// Symbols per packet; also the data symbols per packet used for D-CSI.
    pub symbols_per_packet: usize,
}

impl Default for WaveformConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 28e9,
            subcarrier_spacing_hz: 480e3,
            subcarriers: 64,
            symbols_per_packet: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub bs_rows: usize,
    pub bs_cols: usize,
    pub ue_rows: usize,
    pub ue_cols: usize,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self { bs_rows: 8, bs_cols: 8, ue_rows: 1, ue_cols: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub bs_position: [f64; 3],
    /// UE x is drawn uniformly from this interval each trial.
    pub ue_x_range: [f64; 2],
    pub ue_y: f64,
    pub ue_z: f64,
    pub ue_velocity_kmh: [f64; 3],
    pub scatterers: Vec<[f64; 3]>,
    pub reflection_variance: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            bs_position: [50.0, 4.75, 7.0],
            ue_x_range: [70.0, 150.0],
            ue_y: 0.0,
            ue_z: 2.0,
            ue_velocity_kmh: [-40.0, 0.0, 0.0],
            scatterers: vec![[80.0, 20.0, 1.5], [110.0, -15.0, 3.0], [130.0, 25.0, 2.0]],
            reflection_variance: 1.0,
        }
    }
}

impl LayoutConfig {
    pub fn layout(&self, ue_x: f64) -> Layout {
        Layout {
            bs_position: self.bs_position,
            ue_position: [ue_x, self.ue_y, self.ue_z],
            ue_velocity: self.ue_velocity_kmh.map(|v| v / 3.6),
            scatterers: self.scatterers.clone(),
            reflection_variance: self.reflection_variance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Linear receiver noise factor.
    pub noise_factor: f64,
    pub temperature_k: f64,
    /// Sets transmit power from the SNR as usual but adds no noise.
    pub noiseless: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { noise_factor: 10.0, temperature_k: 290.0, noiseless: false }
    }
}

/// Lists whose Cartesian product forms the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub snr_db: Vec<f64>,
    pub timing_std_s: Vec<f64>,
    pub frequency_std_hz: Vec<f64>,
    pub packets: Vec<usize>,
    pub qam_orders: Vec<usize>,
}

impl Default for SweepAxes {
    fn default() -> Self {
        Self {
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            timing_std_s: vec![15e-9],
            frequency_std_hz: vec![120.0],
            packets: vec![16],
            qam_orders: vec![4],
        }
    }
}

/// One combination of the sweep axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub timing_std_s: f64,
    pub frequency_std_hz: f64,
    pub packets: usize,
    pub qam_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub trials: usize,
    pub waveform: WaveformConfig,
    pub arrays: ArrayConfig,
    pub layout: LayoutConfig,
    pub noise: NoiseConfig,
    pub search: SearchConfig,
    pub sweep: SweepAxes,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 200,
            waveform: WaveformConfig::default(),
            arrays: ArrayConfig::default(),
            layout: LayoutConfig::default(),
            noise: NoiseConfig::default(),
            search: SearchConfig::default(),
            sweep: SweepAxes::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 64 subcarriers: full sweeps in minutes on one core.
    #[default]
    Desk,
    /// 256 subcarriers, 122.88 MHz.
    Paper,
}

impl FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            _ => Err(Error::Config(format!("unknown profile `{s}` (expected desk or paper)"))),
        }
    }
}

/// Named sweep presets; each fixes the sweep axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    Fig3,
    Fig4a,
    Fig4b,
    Fig5a,
    Fig5b,
    Fig5c,
    Fig5d,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Fig3,
        Preset::Fig4a,
        Preset::Fig4b,
        Preset::Fig5a,
        Preset::Fig5b,
        Preset::Fig5c,
        Preset::Fig5d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig3 => "fig3",
            Preset::Fig4a => "fig4a",
            Preset::Fig4b => "fig4b",
            Preset::Fig5a => "fig5a",
            Preset::Fig5b => "fig5b",
            Preset::Fig5c => "fig5c",
            Preset::Fig5d => "fig5d",
        }
    }

    pub fn axes(self) -> SweepAxes {
        let snr = vec![0.0, 5.0, 10.0, 15.0, 20.0];
        let impaired = SweepAxes {
            snr_db: snr.clone(),
            timing_std_s: vec![15e-9],
            frequency_std_hz: vec![120.0],
            packets: vec![16],
            qam_orders: vec![4],
        };
        match self {
            Preset::Fig3 => impaired,
            // Array gain pushes the BER waterfall well below 0 dB per-element SNR.
            Preset::Fig4a => SweepAxes {
                snr_db: (0..=10).map(|k| -20.0 + 2.0 * k as f64).collect(),
                ..impaired
            },
            Preset::Fig4b => SweepAxes {
                snr_db: (0..=10).map(|k| -14.0 + 2.0 * k as f64).collect(),
                qam_orders: vec![16],
                ..impaired
            },
            Preset::Fig5a => SweepAxes { packets: vec![64], ..impaired },
            Preset::Fig5b => SweepAxes {
                timing_std_s: vec![0.0, 15e-9],
                frequency_std_hz: vec![0.0, 120.0],
                ..impaired
            },
            Preset::Fig5c | Preset::Fig5d => SweepAxes { packets: vec![16, 64], ..impaired },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}`")))
    }
}

impl ScenarioConfig {
    pub fn for_profile(profile: Profile) -> Self {
        let mut cfg = Self::default();
        if profile == Profile::Paper {
            cfg.waveform.subcarriers = 256;
        }
        cfg
    }

    /// Parses TOML overrides on top of the profile defaults.
    pub fn from_toml_str(text: &str, profile: Profile) -> Result<Self> {
        let overrides: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        let mut base = toml::Table::try_from(Self::for_profile(profile)).map_err(|e| Error::Config(format!("{e}")))?;
        merge(&mut base, overrides);
        let cfg: Self = base.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &FsPath, profile: Profile) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text, profile)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn with_preset(mut self, preset: Preset) -> Self {
        self.sweep = preset.axes();
        self
    }

    pub fn waveform(&self, packets: usize, tx_power_w: f64) -> Waveform {
        Waveform {
            carrier_hz: self.waveform.carrier_hz,
            subcarrier_spacing_hz: self.waveform.subcarrier_spacing_hz,
            subcarriers: self.waveform.subcarriers,
            symbols_per_packet: self.waveform.symbols_per_packet,
            packets,
            tx_power_w,
        }
    }

    pub fn geometry(&self) -> ArrayGeometry {
        ArrayGeometry::half_wavelength(
            Panel::new(self.arrays.bs_rows, self.arrays.bs_cols),
            Panel::new(self.arrays.ue_rows, self.arrays.ue_cols),
            self.waveform(1, 1.0).wavelength(),
        )
    }

    /// Thermal noise over the occupied bandwidth.
    pub fn thermal_noise(&self) -> NoiseModel {
        NoiseModel::thermal(self.noise.noise_factor, self.noise.temperature_k, self.waveform(1, 1.0).bandwidth())
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        let s = &self.sweep;
        let mut out = Vec::new();
        for &packets in &s.packets {
            for &qam_order in &s.qam_orders {
                for &timing_std_s in &s.timing_std_s {
                    for &frequency_std_hz in &s.frequency_std_hz {
                        for &snr_db in &s.snr_db {
                            out.push(SweepPoint { snr_db, timing_std_s, frequency_std_hz, packets, qam_order });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        let s = &self.sweep;
        if s.snr_db.is_empty() || s.timing_std_s.is_empty() || s.frequency_std_hz.is_empty() || s.packets.is_empty() || s.qam_orders.is_empty() {
            return bad("every sweep axis needs at least one value");
        }
        if s.snr_db.iter().any(|v| !v.is_finite()) {
            return bad("SNR values must be finite");
        }
        if s.timing_std_s.iter().chain(&s.frequency_std_hz).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return bad("clock deviations must be finite and non-negative");
        }
        if s.packets.iter().any(|&m| m == 0) {
            return bad("packet counts must be positive");
        }
        let as_config = |e: Error| Error::Config(e.to_string());
        for &q in &s.qam_orders {
            crate::scene::Constellation::qam(q).map_err(as_config)?;
        }
        self.waveform(1, 1.0).validate().map_err(as_config)?;
        self.geometry().validate().map_err(as_config)?;
        let l = &self.layout;
        if !(l.ue_x_range[0] <= l.ue_x_range[1]) || !(l.reflection_variance >= 0.0) {
            return bad("layout: ue_x_range must be ordered and reflection_variance non-negative");
        }
        if !(self.noise.noise_factor > 0.0 && self.noise.temperature_k > 0.0) {
            return bad("noise factor and temperature must be positive");
        }
        let sc = &self.search;
        if sc.grid_points < 2 || !(sc.tolerance > 0.0) || !(sc.azimuth_range.0 < sc.azimuth_range.1) || !(sc.elevation_range.0 < sc.elevation_range.1) {
            return bad("search: need grid_points >= 2, tolerance > 0 and ordered ranges");
        }
        Ok(())
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
