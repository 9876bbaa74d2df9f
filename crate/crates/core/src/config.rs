//! Flat `key = value` run configuration.
//!
//! ```text
//! # signal
//! sample_count = 32
//! filter_window = 1
//! gain = 1.0
//! # rough set
//! bins = 5
//! alpha = 0.5
//! beta = 0.5
//! theta = 0.5
//! dependence_mode = single
//! # pain intervals
//! t_low = 200
//! t_mod = 400
//! t_high = 700
//! # synthetic session
//! seed = 7
//! duration_ms = 60000
//! episodes = 5000-12000:350, 20000-28000:450
//! ```
//!
//! `#` starts a comment. Unknown or repeated keys are errors. Every
//! diagnostic names the source and line of the offending key.

use std::collections::HashMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pipeline::PipelineConfig;
use crate::synth::{Episode, SynthConfig};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub synth: SynthConfig,
}

const KEYS: &[&str] = &[
    "sample_count",
    "filter_window",
    "gain",
    "bins",
    "alpha",
    "beta",
    "theta",
    "dependence_mode",
    "t_low",
    "t_mod",
    "t_high",
    "seed",
    "duration_ms",
    "emg_rate_hz",
    "baseline_adc",
    "noise_amp",
    "episodes",
    "spike_prob",
    "spike_adc",
    "button_compliance",
];

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

struct Parser<'a> {
    origin: &'a str,
    entries: HashMap<&'a str, Entry<'a>>,
}

impl<'a> Parser<'a> {
    fn error(&self, line: usize, msg: impl Display) -> Error {
        Error::Config(format!("{}:{line}: {msg}", self.origin))
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        match self.entries.get(key) {
            None => Ok(default),
            Some(e) => e
                .value
                .parse()
                .map_err(|err| self.error(e.line, format!("{key}: invalid value '{}': {err}", e.value))),
        }
    }

    /// Attaches a source line to a validation error. Messages start with the
    /// name of the field they concern.
    fn locate(&self, err: Error) -> Error {
        let Error::Config(msg) = err else {
            return err;
        };
        let lead = msg.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).next().unwrap_or("");
        let keys: &[&str] = match lead {
            "alpha" => &["alpha", "beta"],
            "thresholds" => &["t_low", "t_mod", "t_high"],
            "episode" | "episodes" => &["episodes", "duration_ms"],
            other => KEYS.iter().find(|&&k| k == other).map_or(&[][..], std::slice::from_ref),
        };
        match keys.iter().map(|k| self.line_of(k)).max() {
            Some(line) if line > 0 => self.error(line, msg),
            _ => Error::Config(format!("{}: {msg}", self.origin)),
        }
    }
}

fn parse_episodes(value: &str) -> std::result::Result<Vec<Episode>, String> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|item| {
            let item = item.trim();
            let bad = || format!("episode '{item}' must look like start_ms-end_ms:intensity_adc");
            let (span, intensity) = item.split_once(':').ok_or_else(bad)?;
            let (start, end) = span.split_once('-').ok_or_else(bad)?;
            Ok(Episode {
                start_ms: start.trim().parse().map_err(|_| bad())?,
                end_ms: end.trim().parse().map_err(|_| bad())?,
                intensity_adc: intensity.trim().parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

impl RunConfig {
    /// Parses configuration text; `origin` labels diagnostics (usually the path).
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut parser = Parser {
            origin,
            entries: HashMap::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| parser.error(line, format!("expected `key = value`, got '{content}'")))?;
            let key = key.trim();
            let Some(&key) = KEYS.iter().find(|&&k| k == key) else {
                return Err(parser.error(line, format!("unknown key '{key}'")));
            };
            if let Some(prev) = parser.entries.get(key) {
                return Err(parser.error(
                    line,
                    format!("duplicate key '{key}' (first set on line {})", prev.line),
                ));
            }
            parser.entries.insert(
                key,
                Entry {
                    line,
                    value: value.trim(),
                },
            );
        }

        let d = RunConfig::default();
        let p = &parser;
        let mut cfg = RunConfig {
            pipeline: PipelineConfig {
                signal: crate::signal::SignalConfig {
                    sample_count: p.get("sample_count", d.pipeline.signal.sample_count)?,
                    filter_window: p.get("filter_window", d.pipeline.signal.filter_window)?,
                    gain: p.get("gain", d.pipeline.signal.gain)?,
                },
                bins: p.get("bins", d.pipeline.bins)?,
                alpha: p.get("alpha", d.pipeline.alpha)?,
                beta: p.get("beta", d.pipeline.beta)?,
                theta: p.get("theta", d.pipeline.theta)?,
                dependence_mode: p.get("dependence_mode", d.pipeline.dependence_mode)?,
                thresholds: crate::pipeline::PainThresholds {
                    t_low: p.get("t_low", d.pipeline.thresholds.t_low)?,
                    t_mod: p.get("t_mod", d.pipeline.thresholds.t_mod)?,
                    t_high: p.get("t_high", d.pipeline.thresholds.t_high)?,
                },
            },
            synth: SynthConfig {
                seed: p.get("seed", d.synth.seed)?,
                duration_ms: p.get("duration_ms", d.synth.duration_ms)?,
                emg_rate_hz: p.get("emg_rate_hz", d.synth.emg_rate_hz)?,
                baseline_adc: p.get("baseline_adc", d.synth.baseline_adc)?,
                noise_amp: p.get("noise_amp", d.synth.noise_amp)?,
                episodes: Vec::new(),
                spike_prob: p.get("spike_prob", d.synth.spike_prob)?,
                spike_adc: p.get("spike_adc", d.synth.spike_adc)?,
                button_compliance: p.get("button_compliance", d.synth.button_compliance)?,
            },
        };
        if let Some(e) = p.entries.get("episodes") {
            cfg.synth.episodes = parse_episodes(e.value).map_err(|m| p.error(e.line, m))?;
        }

        cfg.pipeline
            .validate()
            .and_then(|()| cfg.synth.validate())
            .map_err(|e| p.locate(e))?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> std::result::Result<Self, LoadError> {
        let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string()).map_err(LoadError::Invalid)
    }
}

/// Distinguishes unreadable files from invalid content.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LoadError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Invalid(Error),
}
