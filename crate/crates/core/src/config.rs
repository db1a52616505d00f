//! Line-oriented run configuration.
//!
//! ```text
//! # comment
//! [section]
//! key = value
//! ```
//!
//! Sections: `scenario`, `ris`, `link`, `noise`, `phy`, `spgd`. Every key
//! name is unique, so keys before the first header are looked up across
//! all sections. Lists are comma separated; `groups` separates groups with
//! `;`. Generator polynomials are octal. An empty file yields the defaults.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::phy::Modulation;
use crate::ris::{CouplingConfig, ElementResponseModel};
use crate::scenario::ScenarioSpec;

pub const SCHEMA_VERSION: u32 = 1;
pub const HEADER: &str = "# ris-thz config v1";

/// Where the element response curve comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ResponseSource {
    Analytic { phase_span_deg: f64, ripple: f64 },
    File(PathBuf),
}

impl Default for ResponseSource {
    fn default() -> Self {
        ResponseSource::Analytic {
            phase_span_deg: 255.0,
            ripple: 0.15,
        }
    }
}

impl ResponseSource {
    pub fn load(&self) -> Result<ElementResponseModel> {
        match self {
            ResponseSource::Analytic { phase_span_deg, ripple } => {
                if !(*phase_span_deg > 0.0 && *phase_span_deg < 360.0) {
                    return Err(Error::OutOfRange {
                        what: "phase_span_deg",
                        value: *phase_span_deg,
                        range: "(0, 360)",
                    });
                }
                if !(0.0..1.0).contains(ripple) {
                    return Err(Error::OutOfRange {
                        what: "amplitude_ripple",
                        value: *ripple,
                        range: "[0, 1)",
                    });
                }
                Ok(ElementResponseModel::smoothstep(*phase_span_deg, *ripple))
            }
            ResponseSource::File(p) => ElementResponseModel::load(p),
        }
    }
}

/// Everything a CLI run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: ScenarioSpec,
    pub response: ResponseSource,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            spec: ScenarioSpec::default(),
            response: ResponseSource::default(),
            out_dir: PathBuf::from("results"),
        }
    }
}

const SECTIONS: [(&str, &[&str]); 6] = [
    (
        "scenario",
        &[
            "seed",
            "seed_count",
            "feedback_rounds",
            "frames_per_point",
            "image_min_bits",
            "sweep_angles",
            "groups",
            "image_angles",
            "out_dir",
        ],
    ),
    (
        "ris",
        &[
            "element_count",
            "element_period_m",
            "carrier_frequency_hz",
            "incidence_angle_deg",
            "phase_span_deg",
            "amplitude_ripple",
            "response_file",
            "coupling_alpha",
        ],
    ),
    (
        "link",
        &[
            "tx_distance_m",
            "rx_distance_m",
            "rx_angle_deg",
            "tx_gain_db",
            "rx_gain_db",
            "ris_gain_db",
            "horn_beamwidth_deg",
            "tx_power_dbm",
        ],
    ),
    (
        "noise",
        &[
            "noise_floor_dbm",
            "measurement_sigma_db",
            "leakage_floor_db",
            "leakage_beamwidth_deg",
            "measurement_bandwidth_hz",
        ],
    ),
    (
        "phy",
        &[
            "fft_size",
            "cp_length",
            "sample_rate_hz",
            "modulation",
            "constraint_length",
            "generators",
            "rb_count",
            "symbols_per_rb",
            "subcarriers_per_rb",
            "zc_root",
            "zc_length",
            "pilot_symbols",
            "sync_threshold",
        ],
    ),
    (
        "spgd",
        &["gain", "perturbation_v", "max_iterations", "clip_min_v", "clip_max_v"],
    ),
];

fn section_of(key: &str) -> Option<&'static str> {
    SECTIONS.iter().find(|(_, keys)| keys.contains(&key)).map(|(s, _)| *s)
}

fn scalar<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse {v:?}"))
}

fn list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(scalar)
        .collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let s = &mut self.spec;
        match key {
            "seed" => s.master_seed = scalar(v)?,
            "seed_count" => s.seed_count = scalar(v)?,
            "feedback_rounds" => s.feedback_rounds = scalar(v)?,
            "frames_per_point" => s.frames_per_point = scalar(v)?,
            "image_min_bits" => s.image_min_bits = scalar(v)?,
            "sweep_angles" => s.sweep_angles = list(v)?,
            "groups" => {
                s.groups = v
                    .split(';')
                    .map(str::trim)
                    .filter(|g| !g.is_empty())
                    .map(list)
                    .collect::<std::result::Result<_, _>>()?
            }
            "image_angles" => s.image_angles = list(v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),

            "element_count" => s.geometry.element_count = scalar(v)?,
            "element_period_m" => s.geometry.element_period = scalar(v)?,
            "carrier_frequency_hz" => s.geometry.carrier_frequency = scalar(v)?,
            "incidence_angle_deg" => s.geometry.incidence_angle = scalar(v)?,
            "phase_span_deg" | "amplitude_ripple" => {
                let (mut span, mut ripple) = match self.response {
                    ResponseSource::Analytic { phase_span_deg, ripple } => (phase_span_deg, ripple),
                    ResponseSource::File(_) => {
                        return Err("response_file already set; analytic parameters do not apply".into())
                    }
                };
                if key == "phase_span_deg" {
                    span = scalar(v)?;
                } else {
                    ripple = scalar(v)?;
                }
                self.response = ResponseSource::Analytic {
                    phase_span_deg: span,
                    ripple,
                };
            }
            "response_file" => self.response = ResponseSource::File(PathBuf::from(v)),
            "coupling_alpha" => s.coupling = CouplingConfig::new(scalar(v)?).map_err(|e| e.to_string())?,

            "tx_distance_m" => s.link.tx_distance = scalar(v)?,
            "rx_distance_m" => s.link.rx_distance = scalar(v)?,
            "rx_angle_deg" => s.link.rx_angle = scalar(v)?,
            "tx_gain_db" => s.link.tx_gain_db = scalar(v)?,
            "rx_gain_db" => s.link.rx_gain_db = scalar(v)?,
            "ris_gain_db" => s.link.ris_gain_db = scalar(v)?,
            "horn_beamwidth_deg" => s.link.horn_beamwidth = scalar(v)?,
            "tx_power_dbm" => s.link.tx_power_dbm = scalar(v)?,

            "noise_floor_dbm" => s.noise.noise_floor_dbm = scalar(v)?,
            "measurement_sigma_db" => s.noise.measurement_sigma_db = scalar(v)?,
            "leakage_floor_db" => s.noise.leakage_floor_db = scalar(v)?,
            "leakage_beamwidth_deg" => s.noise.leakage_beamwidth_deg = scalar(v)?,
            "measurement_bandwidth_hz" => s.noise.measurement_bandwidth_hz = scalar(v)?,

            "fft_size" => s.phy.fft_size = scalar(v)?,
            "cp_length" => s.phy.cp_length = scalar(v)?,
            "sample_rate_hz" => s.phy.sample_rate = scalar(v)?,
            "modulation" => s.phy.modulation = Modulation::from_str(v).map_err(|e| e.to_string())?,
            "constraint_length" => s.phy.code.constraint_length = scalar(v)?,
            "generators" => {
                let g: Vec<u32> = v
                    .split(',')
                    .map(|x| u32::from_str_radix(x.trim(), 8).map_err(|_| format!("{x:?} is not octal")))
                    .collect::<std::result::Result<_, _>>()?;
                s.phy.code.generators = g
                    .try_into()
                    .map_err(|_| "expected exactly two generators".to_string())?;
            }
            "rb_count" => s.phy.rb_count = scalar(v)?,
            "symbols_per_rb" => s.phy.symbols_per_rb = scalar(v)?,
            "subcarriers_per_rb" => s.phy.subcarriers_per_rb = scalar(v)?,
            "zc_root" => s.phy.pilot.zc_root = scalar(v)?,
            "zc_length" => s.phy.pilot.zc_length = scalar(v)?,
            "pilot_symbols" => {
                s.phy.pilot.symbols = v
                    .split(',')
                    .map(|x| scalar(x.trim()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "sync_threshold" => s.phy.sync_threshold = scalar(v)?,

            "gain" => s.spgd.gain = scalar(v)?,
            "perturbation_v" => s.spgd.perturbation = scalar(v)?,
            "max_iterations" => s.spgd.max_iterations = scalar(v)?,
            "clip_min_v" => s.spgd.clip.0 = scalar(v)?,
            "clip_max_v" => s.spgd.clip.1 = scalar(v)?,
            _ => unreachable!("keys are checked against the section table"),
        }
        Ok(())
    }

    /// Parse config text. `source` names the file in diagnostics; relative
    /// `response_file` paths resolve against `base`.
    pub fn parse(text: &str, source: &str, base: Option<&Path>) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: source.to_string(),
            line,
            message,
        };
        let mut cfg = RunConfig::default();
        let mut section: Option<&str> = None;
        let mut last_line = [0usize; SECTIONS.len()];
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                section = Some(
                    SECTIONS
                        .iter()
                        .map(|(s, _)| *s)
                        .find(|s| *s == name)
                        .ok_or_else(|| err(n, format!("unknown section [{name}]")))?,
                );
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(n, format!("expected `key = value`, found {line:?}")))?;
            let home = section_of(key).ok_or_else(|| err(n, format!("unknown key `{key}`")))?;
            if let Some(s) = section {
                if s != home {
                    return Err(err(n, format!("key `{key}` belongs in [{home}], not [{s}]")));
                }
            }
            cfg.set(key, value).map_err(|m| err(n, format!("{key}: {m}")))?;
            let idx = SECTIONS.iter().position(|(s, _)| *s == home).expect("known section");
            last_line[idx] = n;
        }
        if let (ResponseSource::File(p), Some(base)) = (&cfg.response, base) {
            if p.is_relative() {
                cfg.response = ResponseSource::File(base.join(p));
            }
        }
        let at = |sec: &str| last_line[SECTIONS.iter().position(|(s, _)| *s == sec).expect("known")];
        let wrap = |sec: &str, e: Error| err(at(sec), format!("[{sec}] {e}"));
        cfg.spec.response = cfg.response.load().map_err(|e| wrap("ris", e))?;
        cfg.spec.geometry.validate().map_err(|e| wrap("ris", e))?;
        cfg.spec.link.validate().map_err(|e| wrap("link", e))?;
        cfg.spec.noise.validate().map_err(|e| wrap("noise", e))?;
        cfg.spec.phy.validate().map_err(|e| wrap("phy", e))?;
        cfg.spec.spgd.validate().map_err(|e| wrap("spgd", e))?;
        cfg.spec.validate().map_err(|e| wrap("scenario", e))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string(), path.parent())
    }

    /// Serialize every setting; parsing the output yields an equal config.
    pub fn to_text(&self) -> String {
        let s = &self.spec;
        let mut o = String::new();
        let _ = writeln!(o, "{HEADER}");
        let _ = writeln!(o, "\n[scenario]");
        let _ = writeln!(o, "seed = {}", s.master_seed);
        let _ = writeln!(o, "seed_count = {}", s.seed_count);
        let _ = writeln!(o, "feedback_rounds = {}", s.feedback_rounds);
        let _ = writeln!(o, "frames_per_point = {}", s.frames_per_point);
        let _ = writeln!(o, "image_min_bits = {}", s.image_min_bits);
        let _ = writeln!(o, "sweep_angles = {}", fmt_list(&s.sweep_angles));
        let groups: Vec<String> = s.groups.iter().map(|g| fmt_list(g)).collect();
        let _ = writeln!(o, "groups = {}", groups.join("; "));
        let _ = writeln!(o, "image_angles = {}", fmt_list(&s.image_angles));
        let _ = writeln!(o, "out_dir = {}", self.out_dir.display());

        let _ = writeln!(o, "\n[ris]");
        let _ = writeln!(o, "element_count = {}", s.geometry.element_count);
        let _ = writeln!(o, "element_period_m = {}", s.geometry.element_period);
        let _ = writeln!(o, "carrier_frequency_hz = {}", s.geometry.carrier_frequency);
        let _ = writeln!(o, "incidence_angle_deg = {}", s.geometry.incidence_angle);
        match &self.response {
            ResponseSource::Analytic { phase_span_deg, ripple } => {
                let _ = writeln!(o, "phase_span_deg = {phase_span_deg}");
                let _ = writeln!(o, "amplitude_ripple = {ripple}");
            }
            ResponseSource::File(p) => {
                let _ = writeln!(o, "response_file = {}", p.display());
            }
        }
        let _ = writeln!(o, "coupling_alpha = {}", s.coupling.alpha);

        let l = &s.link;
        let _ = writeln!(o, "\n[link]");
        let _ = writeln!(o, "tx_distance_m = {}", l.tx_distance);
        let _ = writeln!(o, "rx_distance_m = {}", l.rx_distance);
        let _ = writeln!(o, "rx_angle_deg = {}", l.rx_angle);
        let _ = writeln!(o, "tx_gain_db = {}", l.tx_gain_db);
        let _ = writeln!(o, "rx_gain_db = {}", l.rx_gain_db);
        let _ = writeln!(o, "ris_gain_db = {}", l.ris_gain_db);
        let _ = writeln!(o, "horn_beamwidth_deg = {}", l.horn_beamwidth);
        let _ = writeln!(o, "tx_power_dbm = {}", l.tx_power_dbm);

        let n = &s.noise;
        let _ = writeln!(o, "\n[noise]");
        let _ = writeln!(o, "noise_floor_dbm = {}", n.noise_floor_dbm);
        let _ = writeln!(o, "measurement_sigma_db = {}", n.measurement_sigma_db);
        let _ = writeln!(o, "leakage_floor_db = {}", n.leakage_floor_db);
        let _ = writeln!(o, "leakage_beamwidth_deg = {}", n.leakage_beamwidth_deg);
        let _ = writeln!(o, "measurement_bandwidth_hz = {}", n.measurement_bandwidth_hz);

        let p = &s.phy;
        let _ = writeln!(o, "\n[phy]");
        let _ = writeln!(o, "fft_size = {}", p.fft_size);
        let _ = writeln!(o, "cp_length = {}", p.cp_length);
        let _ = writeln!(o, "sample_rate_hz = {}", p.sample_rate);
        let _ = writeln!(o, "modulation = {}", p.modulation);
        let _ = writeln!(o, "constraint_length = {}", p.code.constraint_length);
        let _ = writeln!(o, "generators = {:o}, {:o}", p.code.generators[0], p.code.generators[1]);
        let _ = writeln!(o, "rb_count = {}", p.rb_count);
        let _ = writeln!(o, "symbols_per_rb = {}", p.symbols_per_rb);
        let _ = writeln!(o, "subcarriers_per_rb = {}", p.subcarriers_per_rb);
        let _ = writeln!(o, "zc_root = {}", p.pilot.zc_root);
        let _ = writeln!(o, "zc_length = {}", p.pilot.zc_length);
        let syms: Vec<String> = p.pilot.symbols.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(o, "pilot_symbols = {}", syms.join(", "));
        let _ = writeln!(o, "sync_threshold = {}", p.sync_threshold);

        let g = &s.spgd;
        let _ = writeln!(o, "\n[spgd]");
        let _ = writeln!(o, "gain = {}", g.gain);
        let _ = writeln!(o, "perturbation_v = {}", g.perturbation);
        let _ = writeln!(o, "max_iterations = {}", g.max_iterations);
        let _ = writeln!(o, "clip_min_v = {}", g.clip.0);
        let _ = writeln!(o, "clip_max_v = {}", g.clip.1);
        o
    }
}
