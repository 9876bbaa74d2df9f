//! Seeded synthetic sensor sessions with ground-truth pain labels.
//!
//! Every random draw comes from a single splitmix64 stream in a fixed order,
//! so a [`SynthConfig`] maps to exactly one byte sequence on every platform:
//!
//! 1. for each episode in start order: one compliance draw, and if the button
//!    is pressed one delay draw;
//! 2. for each EMG sample in time order: one noise draw, one spike draw, then
//!    six draws (`ax ay az gx gy gz`) if an IMU frame is due at that tick.
//!
//! Floating point is used only for the `[0, 1)` uniform built from the top
//! 53 bits, which is exact.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{ButtonFrame, ButtonLevel, Frame, ImuFrame};
use crate::signal::{window_stream, EmgSample, ADC_MAX};

/// Interval between IMU frames.
pub const IMU_PERIOD_MS: u64 = 100;
/// Buttons are pressed up to this long after an episode begins.
pub const BUTTON_DELAY_SPAN_MS: u64 = 300;

const ACCEL_JITTER: i64 = 20;
const GRAVITY_MILLI_G: i32 = 1000;
const GYRO_JITTER: i64 = 50;

/// The splitmix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on `[0, 1)` from the top 53 bits.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[-amp, amp]` by reduction modulo `2 * amp + 1`.
    pub fn next_symmetric(&mut self, amp: u64) -> i64 {
        let span = 2 * amp + 1;
        (self.next_u64() % span) as i64 - amp as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub start_ms: u64,
    pub end_ms: u64,
    pub intensity_adc: u16,
}

impl Episode {
    pub fn contains(&self, t_ms: u64) -> bool {
        self.start_ms <= t_ms && t_ms < self.end_ms
    }

    /// Length of the intersection with `[start, end)`.
    pub fn overlap(&self, start: u64, end: u64) -> u64 {
        end.min(self.end_ms).saturating_sub(start.max(self.start_ms))
    }

    fn button_level(&self) -> ButtonLevel {
        match self.intensity_adc {
            0..=249 => ButtonLevel::Mild,
            250..=499 => ButtonLevel::Moderate,
            _ => ButtonLevel::Severe,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub duration_ms: u64,
    pub emg_rate_hz: u64,
    pub baseline_adc: u16,
    pub noise_amp: u16,
    pub episodes: Vec<Episode>,
    pub spike_prob: f64,
    pub spike_adc: u16,
    pub button_compliance: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            duration_ms: 60_000,
            emg_rate_hz: 100,
            baseline_adc: 120,
            noise_amp: 15,
            episodes: Vec::new(),
            spike_prob: 0.01,
            spike_adc: 1000,
            button_compliance: 0.9,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=1000).contains(&self.emg_rate_hz) {
            return Err(Error::config(format!(
                "emg_rate_hz must be in 1..=1000, got {}",
                self.emg_rate_hz
            )));
        }
        for (name, v) in [
            ("baseline_adc", self.baseline_adc),
            ("noise_amp", self.noise_amp),
            ("spike_adc", self.spike_adc),
        ] {
            if v > ADC_MAX {
                return Err(Error::config(format!("{name} must be <= {ADC_MAX}, got {v}")));
            }
        }
        for (name, p) in [
            ("spike_prob", self.spike_prob),
            ("button_compliance", self.button_compliance),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        let mut sorted = self.episodes.clone();
        sorted.sort_by_key(|e| e.start_ms);
        for e in &sorted {
            if e.start_ms >= e.end_ms || e.end_ms > self.duration_ms {
                return Err(Error::config(format!(
                    "episode {}..{} must be non-empty and within [0, {})",
                    e.start_ms, e.end_ms, self.duration_ms
                )));
            }
            if e.intensity_adc > ADC_MAX {
                return Err(Error::config(format!(
                    "episode intensity must be <= {ADC_MAX}, got {}",
                    e.intensity_adc
                )));
            }
        }
        if let Some(p) = sorted.windows(2).find(|p| p[1].start_ms < p[0].end_ms) {
            return Err(Error::config(format!(
                "episodes {}..{} and {}..{} overlap",
                p[0].start_ms, p[0].end_ms, p[1].start_ms, p[1].end_ms
            )));
        }
        Ok(())
    }

    fn sorted_episodes(&self) -> Vec<Episode> {
        let mut e = self.episodes.clone();
        e.sort_by_key(|e| e.start_ms);
        e
    }
}

/// Ground truth for one analysis window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowTruth {
    pub window_id: usize,
    pub label: bool,
    /// Indices (in start order) of episodes intersecting the window.
    pub episodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub windows: Vec<WindowTruth>,
}

impl GroundTruth {
    pub fn labels(&self) -> Vec<bool> {
        self.windows.iter().map(|w| w.label).collect()
    }

    /// CSV `window_id,label`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "window_id,label")?;
        for w in &self.windows {
            writeln!(out, "{},{}", w.window_id, u8::from(w.label))?;
        }
        Ok(())
    }

    /// Reads `window_id,label` rows. Window ids must run 0, 1, 2, ...
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r
            .headers()
            .map_err(|e| Error::argument(format!("truth csv header: {e}")))?;
        if header != vec!["window_id", "label"] {
            return Err(Error::argument("truth csv header must be `window_id,label`"));
        }
        let mut windows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::argument(format!("truth csv row {}: {e}", i + 2)))?;
            let id: usize = rec[0]
                .parse()
                .map_err(|_| Error::argument(format!("truth csv row {}: bad window_id", i + 2)))?;
            if id != i {
                return Err(Error::argument(format!(
                    "truth csv row {}: expected window_id {i}, got {id}",
                    i + 2
                )));
            }
            let label = match &rec[1] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::argument(format!(
                        "truth csv row {}: label must be 0 or 1, got '{other}'",
                        i + 2
                    )))
                }
            };
            windows.push(WindowTruth {
                window_id: id,
                label,
                episodes: Vec::new(),
            });
        }
        Ok(Self { windows })
    }
}

/// A generated session: frames in emission order plus window labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub frames: Vec<Frame>,
    pub truth: GroundTruth,
}

impl Session {
    /// The wire-format stream, one LF-terminated line per frame.
    pub fn write_stream<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for f in &self.frames {
            writeln!(out, "{f}")?;
        }
        Ok(())
    }
}

/// A window is labelled painful when a single episode covers at least half
/// of its `[start_ms, end_ms)` span.
pub fn window_label(episodes: &[Episode], start_ms: u64, end_ms: u64) -> bool {
    let span = end_ms - start_ms;
    episodes.iter().any(|e| 2 * e.overlap(start_ms, end_ms) >= span)
}

/// Generates a session; labels are computed over windows of `sample_count`
/// EMG samples.
pub fn generate(config: &SynthConfig, sample_count: usize) -> Result<Session> {
    config.validate()?;
    let episodes = config.sorted_episodes();
    let mut rng = SplitMix64::new(config.seed);

    // (t_ms, kind rank, frame); seq is assigned after merging.
    let mut events: Vec<(u64, u8, Frame)> = Vec::new();

    for e in &episodes {
        if rng.next_unit() < config.button_compliance {
            let delay = rng.next_u64() % BUTTON_DELAY_SPAN_MS;
            let t_ms = (e.start_ms + delay).min(e.end_ms - 1);
            events.push((
                t_ms,
                2,
                Frame::Button(ButtonFrame {
                    seq: 0,
                    t_ms,
                    level: e.button_level(),
                }),
            ));
        }
    }

    let n = config.duration_ms * config.emg_rate_hz / 1000;
    let mut samples = Vec::with_capacity(n as usize);
    let mut next_imu = 0u64;
    for i in 0..n {
        let t_ms = i * 1000 / config.emg_rate_hz;
        let noise = rng.next_symmetric(u64::from(config.noise_amp));
        let spike = rng.next_unit() < config.spike_prob;

        let mut level = i64::from(config.baseline_adc) + noise;
        if let Some(e) = episodes.iter().find(|e| e.contains(t_ms)) {
            level += i64::from(e.intensity_adc);
        }
        if spike {
            level += i64::from(config.spike_adc);
        }
        let sample = EmgSample {
            seq: 0,
            t_ms,
            adc: level.clamp(0, i64::from(ADC_MAX)) as u16,
        };
        samples.push(sample);
        events.push((t_ms, 0, Frame::Emg(sample)));

        if t_ms >= next_imu {
            let mut jitter = |amp: i64| rng.next_symmetric(amp as u64) as i32;
            let (ax, ay, az) = (
                jitter(ACCEL_JITTER),
                jitter(ACCEL_JITTER),
                GRAVITY_MILLI_G + jitter(ACCEL_JITTER),
            );
            let (gx, gy, gz) = (jitter(GYRO_JITTER), jitter(GYRO_JITTER), jitter(GYRO_JITTER));
            events.push((
                t_ms,
                1,
                Frame::Imu(ImuFrame { seq: 0, t_ms, ax, ay, az, gx, gy, gz }),
            ));
            next_imu = t_ms + IMU_PERIOD_MS;
        }
    }

    events.sort_by_key(|&(t, rank, _)| (t, rank));
    let frames: Vec<Frame> = events
        .into_iter()
        .enumerate()
        .map(|(seq, (_, _, frame))| {
            let seq = seq as u64;
            match frame {
                Frame::Emg(f) => Frame::Emg(EmgSample { seq, ..f }),
                Frame::Imu(f) => Frame::Imu(ImuFrame { seq, ..f }),
                Frame::Button(f) => Frame::Button(ButtonFrame { seq, ..f }),
            }
        })
        .collect();

    let emg: Vec<EmgSample> = frames
        .iter()
        .filter_map(|f| match f {
            Frame::Emg(s) => Some(*s),
            _ => None,
        })
        .collect();
    let windowed = window_stream(&emg, sample_count)?;
    let truth = GroundTruth {
        windows: windowed
            .windows
            .iter()
            .map(|w| WindowTruth {
                window_id: w.window_id,
                label: window_label(&episodes, w.start_ms, w.end_ms),
                episodes: episodes
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.overlap(w.start_ms, w.end_ms) > 0)
                    .map(|(i, _)| i)
                    .collect(),
            })
            .collect(),
    };
    Ok(Session { frames, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::trimmed_average;

    fn quiet() -> SynthConfig {
        SynthConfig {
            duration_ms: 2_000,
            noise_amp: 0,
            spike_prob: 0.0,
            ..Default::default()
        }
    }

    fn emg(session: &Session) -> Vec<EmgSample> {
        session
            .frames
            .iter()
            .filter_map(|f| match f {
                Frame::Emg(s) => Some(*s),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn splitmix_reference_values() {
        // Reference outputs of splitmix64 seeded with 1234567.
        let mut r = SplitMix64::new(1234567);
        let got: Vec<u64> = (0..5).map(|_| r.next_u64()).collect();
        assert_eq!(
            got,
            vec![
                6457827717110365317,
                3203168211198807973,
                9817491932198370423,
                4593380528125082431,
                16408922859458223821,
            ]
        );
    }

    #[test]
    fn quiet_session_is_flat_baseline() {
        let s = generate(&quiet(), 32).unwrap();
        let e = emg(&s);
        assert_eq!(e.len(), 200);
        assert!(e.iter().all(|x| x.adc == 120));
    }

    #[test]
    fn same_seed_same_stream() {
        let cfg = SynthConfig {
            seed: 99,
            duration_ms: 5_000,
            episodes: vec![Episode { start_ms: 1_000, end_ms: 3_000, intensity_adc: 400 }],
            ..Default::default()
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        generate(&cfg, 32).unwrap().write_stream(&mut a).unwrap();
        generate(&cfg, 32).unwrap().write_stream(&mut b).unwrap();
        assert_eq!(a, b);

        let mut c = Vec::new();
        generate(&SynthConfig { seed: 100, ..cfg }, 32)
            .unwrap()
            .write_stream(&mut c)
            .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn covered_window_has_shifted_trimmed_mean() {
        let cfg = SynthConfig {
            episodes: vec![Episode { start_ms: 320, end_ms: 960, intensity_adc: 300 }],
            ..quiet()
        };
        let s = generate(&cfg, 32).unwrap();
        let w = window_stream(&emg(&s), 32).unwrap();
        let values = w.windows[1].values();
        assert_eq!(trimmed_average(&values).unwrap(), 420.0);
        assert_eq!(
            s.truth.labels()[..4],
            [false, true, true, false]
        );
    }

    #[test]
    fn overlapping_episodes_rejected() {
        let cfg = SynthConfig {
            episodes: vec![
                Episode { start_ms: 0, end_ms: 500, intensity_adc: 300 },
                Episode { start_ms: 400, end_ms: 900, intensity_adc: 300 },
            ],
            ..quiet()
        };
        assert!(matches!(generate(&cfg, 32), Err(Error::Config(_))));
    }

    #[test]
    fn config_validation() {
        for bad in [
            SynthConfig { emg_rate_hz: 0, ..quiet() },
            SynthConfig { spike_prob: 1.5, ..quiet() },
            SynthConfig { button_compliance: -0.1, ..quiet() },
            SynthConfig { baseline_adc: 2000, ..quiet() },
            SynthConfig {
                episodes: vec![Episode { start_ms: 1500, end_ms: 2500, intensity_adc: 1 }],
                ..quiet()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn label_rule_is_half_span() {
        let e = [Episode { start_ms: 160, end_ms: 1000, intensity_adc: 1 }];
        assert!(window_label(&e, 0, 320));
        assert!(!window_label(&e, 0, 319 - 1));
        assert!(!window_label(&e, 1000, 1320));
    }

    #[test]
    fn buttons_follow_compliance() {
        let episodes = vec![
            Episode { start_ms: 200, end_ms: 600, intensity_adc: 200 },
            Episode { start_ms: 800, end_ms: 1200, intensity_adc: 700 },
        ];
        let buttons = |compliance| {
            let cfg = SynthConfig { episodes: episodes.clone(), button_compliance: compliance, ..quiet() };
            generate(&cfg, 32)
                .unwrap()
                .frames
                .into_iter()
                .filter_map(|f| match f {
                    Frame::Button(b) => Some(b),
                    _ => None,
                })
                .collect::<Vec<_>>()
        };
        assert!(buttons(0.0).is_empty());
        let all = buttons(1.0);
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].level, ButtonLevel::Mild);
        assert_eq!(all[1].level, ButtonLevel::Severe);
        assert!(episodes[0].contains(all[0].t_ms) && episodes[1].contains(all[1].t_ms));
    }

    #[test]
    fn seq_increases_and_imu_is_periodic() {
        let s = generate(&SynthConfig { duration_ms: 1_000, ..Default::default() }, 32).unwrap();
        assert!(s.frames.windows(2).all(|p| p[1].seq() == p[0].seq() + 1));
        let imu: Vec<u64> = s
            .frames
            .iter()
            .filter(|f| matches!(f, Frame::Imu(_)))
            .map(Frame::t_ms)
            .collect();
        assert_eq!(imu, (0..10).map(|i| i * 100).collect::<Vec<_>>());
    }

    #[test]
    fn truth_csv_round_trip() {
        let t = GroundTruth {
            windows: vec![
                WindowTruth { window_id: 0, label: false, episodes: vec![] },
                WindowTruth { window_id: 1, label: true, episodes: vec![] },
            ],
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(buf, b"window_id,label\n0,0\n1,1\n");
        assert_eq!(GroundTruth::read_csv(buf.as_slice()).unwrap(), t);
        assert!(GroundTruth::read_csv("window_id,label\n1,0\n".as_bytes()).is_err());
    }
}
