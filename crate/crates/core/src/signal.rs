//! EMG windowing and per-window feature extraction.
//!
//! Each window yields two kinds of statistics:
//!
//! - the *trimmed average* of the raw ADC counts, i.e. the window sum with one
//!   minimum and one maximum sample removed, divided by `n - 2`;
//! - the mean and peak of the conditioned signal, where conditioning is an
//!   optional centered moving average followed by a scalar gain.
//!
//! The trimmed average is always taken on raw samples; filtering and gain only
//! affect `mean_emg` and `peak_emg`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound of a 10-bit ADC reading.
pub const ADC_MAX: u16 = 1023;

/// One raw EMG reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EmgSample {
    pub seq: u64,
    pub t_ms: u64,
    pub adc: u16,
}

impl EmgSample {
    pub fn new(seq: u64, t_ms: u64, adc: u16) -> Result<Self> {
        if adc > ADC_MAX {
            return Err(Error::argument(format!("adc {adc} exceeds {ADC_MAX}")));
        }
        Ok(Self { seq, t_ms, adc })
    }
}

/// A fixed-length run of consecutive samples.
///
/// `end_ms` is exclusive: the timestamp of the last sample plus the mean
/// sample interval of the window (at least 1 ms).
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub window_id: usize,
    pub start_ms: u64,
    pub end_ms: u64,
    pub samples: Vec<EmgSample>,
}

impl Window {
    /// Builds a window from ordered samples. Requires at least three samples.
    pub fn new(window_id: usize, samples: Vec<EmgSample>) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::WindowSize { len: samples.len() });
        }
        if samples.windows(2).any(|p| p[1].seq <= p[0].seq) {
            return Err(Error::argument("window samples must be ordered by seq"));
        }
        let first = samples[0].t_ms;
        let last = samples[samples.len() - 1].t_ms;
        let step = (last.saturating_sub(first) / (samples.len() as u64 - 1)).max(1);
        Ok(Self {
            window_id,
            start_ms: first,
            end_ms: last + step,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| f64::from(s.adc)).collect()
    }

    /// `[start_ms, end_ms)` containment.
    pub fn contains_ms(&self, t_ms: u64) -> bool {
        self.start_ms <= t_ms && t_ms < self.end_ms
    }
}

/// Output of [`window_stream`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Windowed {
    pub windows: Vec<Window>,
    /// Samples of the trailing partial group that did not fill a window.
    pub discarded: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalConfig {
    pub sample_count: usize,
    /// Width of the centered moving average; 1 disables filtering.
    pub filter_window: usize,
    pub gain: f64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        // The window length is an arbitrary latency/stability trade-off.
        Self {
            sample_count: 32,
            filter_window: 1,
            gain: 1.0,
        }
    }
}

impl SignalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count < 3 {
            return Err(Error::config(format!(
                "sample_count must be >= 3, got {}",
                self.sample_count
            )));
        }
        check_filter_window(self.filter_window)?;
        check_gain(self.gain)
    }
}

fn check_filter_window(k: usize) -> Result<()> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::config(format!(
            "filter_window must be odd and >= 1, got {k}"
        )));
    }
    Ok(())
}

fn check_gain(gain: f64) -> Result<()> {
    if !(gain.is_finite() && gain > 0.0) {
        return Err(Error::config(format!("gain must be > 0, got {gain}")));
    }
    Ok(())
}

/// Per-window statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowFeatures {
    pub window_id: usize,
    pub min_value: u16,
    pub max_value: u16,
    pub sum: u64,
    pub average_value: f64,
    pub mean_emg: f64,
    pub peak_emg: f64,
}

/// Splits a sample stream into tumbling windows of `sample_count` samples.
pub fn window_stream(samples: &[EmgSample], sample_count: usize) -> Result<Windowed> {
    if sample_count < 3 {
        return Err(Error::config(format!(
            "sample_count must be >= 3, got {sample_count}"
        )));
    }
    let chunks = samples.chunks_exact(sample_count);
    let discarded = chunks.remainder().len();
    let windows = chunks
        .enumerate()
        .map(|(id, chunk)| Window::new(id, chunk.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Windowed { windows, discarded })
}

/// Mean after removing exactly one minimum and one maximum value.
pub fn trimmed_average(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 3 {
        return Err(Error::WindowSize { len: n });
    }
    let mut min = values[0];
    let mut max = values[0];
    let mut sum = 0.0;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
        sum += v;
    }
    let adjusted = sum - min - max;
    // Rounding in the subtraction can push the result a hair outside [min, max].
    Ok((adjusted / (n - 2) as f64).clamp(min, max))
}

/// Centered moving average of odd width `k`; edge windows shrink to the
/// neighbours that exist.
pub fn filter_signal(values: &[f64], filter_window: usize) -> Result<Vec<f64>> {
    check_filter_window(filter_window)?;
    if filter_window == 1 {
        return Ok(values.to_vec());
    }
    let half = filter_window / 2;
    let n = values.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &v in values {
        prefix.push(prefix[prefix.len() - 1] + v);
    }
    let (lo_all, hi_all) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            ((prefix[hi] - prefix[lo]) / (hi - lo) as f64).clamp(lo_all, hi_all)
        })
        .collect())
}

pub fn amplify(values: &[f64], gain: f64) -> Result<Vec<f64>> {
    check_gain(gain)?;
    Ok(values.iter().map(|v| v * gain).collect())
}

/// Computes [`WindowFeatures`] for one window.
pub fn extract_features(window: &Window, config: &SignalConfig) -> Result<WindowFeatures> {
    config.validate()?;
    let raw = window.values();
    let average_value = trimmed_average(&raw)?;
    let conditioned = amplify(&filter_signal(&raw, config.filter_window)?, config.gain)?;

    let mean_emg = conditioned.iter().sum::<f64>() / conditioned.len() as f64;
    let peak_emg = conditioned.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let adc = window.samples.iter().map(|s| s.adc);

    Ok(WindowFeatures {
        window_id: window.window_id,
        min_value: adc.clone().min().unwrap_or(0),
        max_value: adc.clone().max().unwrap_or(0),
        sum: adc.map(u64::from).sum(),
        average_value,
        // Summation order can leave the mean an ulp above the peak.
        mean_emg: mean_emg.min(peak_emg),
        peak_emg,
    })
}
