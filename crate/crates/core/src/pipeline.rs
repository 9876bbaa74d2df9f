//! Session pipeline: frames in, pain assessments and therapy commands out.
//!
//! ```text
//! lines -> frames -> EMG windows -> features -> information system
//!       -> attribute weights -> screening -> pain level -> therapy command
//! ```
//!
//! The target set for the rough-set step comes from ground truth when it is
//! supplied and from button presses otherwise. The screened flag annotates
//! assessments; therapy commands depend on the pain level only.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{parse_stream, ButtonFrame, Frame, ImuFrame, StreamStats};
use crate::roughset::{
    attribute_weights, check_mix, screen, AttributeWeights, BuiltSystem, DependenceMode,
    InformationSystem, TargetSet, Warning, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_BINS,
    DEFAULT_THETA,
};
use crate::signal::{extract_features, window_stream, EmgSample, SignalConfig, Window, WindowFeatures};
use crate::synth::GroundTruth;

pub const ATTR_AVERAGE: &str = "average_value";
pub const ATTR_MEAN: &str = "mean_emg";
pub const ATTR_PEAK: &str = "peak_emg";
pub const ATTR_GYRO: &str = "imu_gyro";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PainLevel {
    None,
    Low,
    Moderate,
    High,
}

impl PainLevel {
    pub const ALL: [PainLevel; 4] = [Self::None, Self::Low, Self::Moderate, Self::High];

    pub fn massage_intensity(self) -> u8 {
        self as u8
    }
}

/// Lower bounds, in ADC counts, of the Low, Moderate and High intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PainThresholds {
    pub t_low: f64,
    pub t_mod: f64,
    pub t_high: f64,
}

impl Default for PainThresholds {
    fn default() -> Self {
        Self {
            t_low: 200.0,
            t_mod: 400.0,
            t_high: 700.0,
        }
    }
}

impl PainThresholds {
    pub fn validate(&self) -> Result<()> {
        let ordered = self.t_low < self.t_mod && self.t_mod < self.t_high;
        if !ordered || !self.t_low.is_finite() || !self.t_high.is_finite() {
            return Err(Error::config(format!(
                "thresholds must satisfy t_low < t_mod < t_high, got {} / {} / {}",
                self.t_low, self.t_mod, self.t_high
            )));
        }
        Ok(())
    }

    pub fn level(&self, average_value: f64) -> PainLevel {
        if average_value < self.t_low {
            PainLevel::None
        } else if average_value < self.t_mod {
            PainLevel::Low
        } else if average_value < self.t_high {
            PainLevel::Moderate
        } else {
            PainLevel::High
        }
    }
}

/// Maps a window's trimmed average onto a pain interval.
pub fn assess_pain(features: &WindowFeatures, thresholds: &PainThresholds) -> Result<PainLevel> {
    thresholds.validate()?;
    Ok(thresholds.level(features.average_value))
}

/// Controller state carried between windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TherapyState {
    pub intensity: u8,
    /// Consecutive windows whose level mapped below `intensity`.
    pub lower_run: u8,
    /// Highest mapped intensity seen during the current lower run.
    pub lower_max: u8,
}

/// Windows of lower evidence needed before intensity is reduced.
pub const HYSTERESIS_WINDOWS: u8 = 2;

/// Advances the controller by one window.
///
/// Intensity rises immediately to the level's intensity. It falls only after
/// [`HYSTERESIS_WINDOWS`] consecutive lower windows, and then to the highest
/// intensity requested during that run.
pub fn therapy_decide(level: PainLevel, previous: TherapyState) -> TherapyState {
    let wanted = level.massage_intensity();
    if wanted >= previous.intensity {
        return TherapyState {
            intensity: wanted,
            lower_run: 0,
            lower_max: 0,
        };
    }
    let lower_run = previous.lower_run + 1;
    let lower_max = if previous.lower_run == 0 {
        wanted
    } else {
        previous.lower_max.max(wanted)
    };
    if lower_run >= HYSTERESIS_WINDOWS {
        TherapyState {
            intensity: lower_max,
            lower_run: 0,
            lower_max: 0,
        }
    } else {
        TherapyState {
            intensity: previous.intensity,
            lower_run,
            lower_max,
        }
    }
}

/// Simulated actuator command, serialized as `CMD,<t_ms>,<intensity>,<heat>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TherapyCommand {
    pub t_ms: u64,
    pub massage_intensity: u8,
    pub heat_on: bool,
}

impl TherapyCommand {
    /// Heat follows the held massage intensity: on from Moderate upwards.
    pub fn from_state(t_ms: u64, state: TherapyState) -> Self {
        Self {
            t_ms,
            massage_intensity: state.intensity,
            heat_on: state.intensity >= PainLevel::Moderate.massage_intensity(),
        }
    }
}

impl fmt::Display for TherapyCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "CMD,{},{},{}",
            self.t_ms,
            self.massage_intensity,
            u8::from(self.heat_on)
        )
    }
}

/// Per-window label: 1 iff a button press falls in `[start_ms, end_ms)`.
pub fn align_button_labels(buttons: &[ButtonFrame], windows: &[Window]) -> Vec<bool> {
    windows
        .iter()
        .map(|w| buttons.iter().any(|b| w.contains_ms(b.t_ms)))
        .collect()
}

/// Mean gyro magnitude of the IMU frames inside each window (0 when none).
pub fn imu_gyro_per_window(imu: &[ImuFrame], windows: &[Window]) -> Vec<f64> {
    windows
        .iter()
        .map(|w| {
            let (sum, n) = imu
                .iter()
                .filter(|f| w.contains_ms(f.t_ms))
                .fold((0.0, 0usize), |(s, n), f| (s + f.gyro_magnitude(), n + 1));
            if n == 0 {
                0.0
            } else {
                sum / n as f64
            }
        })
        .collect()
}

/// Builds the decision table over windows: one object per window, the three
/// EMG features plus the optional IMU aggregate as attributes.
pub fn build_information_system(
    features: &[WindowFeatures],
    imu: Option<&[f64]>,
    labels: &[bool],
    bins: usize,
) -> Result<(BuiltSystem, TargetSet)> {
    if labels.len() != features.len() || imu.is_some_and(|g| g.len() != features.len()) {
        return Err(Error::argument(format!(
            "{} feature rows, {} labels, {} IMU rows",
            features.len(),
            labels.len(),
            imu.map_or(features.len(), <[f64]>::len)
        )));
    }
    let objects = features.iter().map(|f| format!("w{}", f.window_id)).collect();
    let mut attributes = vec![ATTR_AVERAGE.to_string(), ATTR_MEAN.into(), ATTR_PEAK.into()];
    let mut columns = vec![
        features.iter().map(|f| f.average_value).collect::<Vec<_>>(),
        features.iter().map(|f| f.mean_emg).collect(),
        features.iter().map(|f| f.peak_emg).collect(),
    ];
    if let Some(g) = imu {
        attributes.push(ATTR_GYRO.into());
        columns.push(g.to_vec());
    }
    let built = InformationSystem::from_columns(objects, attributes, &columns, bins)?;
    Ok((built, TargetSet::from_labels(labels)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub signal: SignalConfig,
    pub bins: usize,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub dependence_mode: DependenceMode,
    pub thresholds: PainThresholds,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            signal: SignalConfig::default(),
            bins: DEFAULT_BINS,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            theta: DEFAULT_THETA,
            dependence_mode: DependenceMode::Single,
            thresholds: PainThresholds::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        if self.bins < 2 {
            return Err(Error::config(format!("bins must be >= 2, got {}", self.bins)));
        }
        check_mix(self.alpha, self.beta)?;
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::config(format!("theta must be in [0, 1], got {}", self.theta)));
        }
        self.thresholds.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PainAssessment {
    pub window_id: usize,
    pub start_ms: u64,
    pub end_ms: u64,
    pub average_value: f64,
    pub mean_emg: f64,
    pub peak_emg: f64,
    pub score: f64,
    pub level: PainLevel,
    pub screened: bool,
    /// Membership in the target set used for weighting.
    pub target: bool,
}

/// Where the target set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSource {
    Buttons,
    GroundTruth,
}

/// A maximal run of consecutive windows assessed above `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub first_window: usize,
    pub last_window: usize,
    pub start_ms: u64,
    pub end_ms: u64,
}

/// Window-level detection quality against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub truth_windows: usize,
    pub detected_windows: usize,
    pub true_positives: usize,
    pub truth_spans: usize,
    /// `None` when ground truth has no positive window.
    pub recall: Option<f64>,
    /// `None` when nothing was detected.
    pub precision: Option<f64>,
}

impl DetectionSummary {
    pub fn compute(truth: &[bool], detected: &[bool]) -> Self {
        let truth_windows = truth.iter().filter(|&&t| t).count();
        let detected_windows = detected.iter().filter(|&&d| d).count();
        let true_positives = truth.iter().zip(detected).filter(|(&t, &d)| t && d).count();
        let truth_spans = truth
            .iter()
            .enumerate()
            .filter(|&(i, &t)| t && (i == 0 || !truth[i - 1]))
            .count();
        let ratio = |n: usize, d: usize| (d > 0).then(|| n as f64 / d as f64);
        Self {
            truth_windows,
            detected_windows,
            true_positives,
            truth_spans,
            recall: ratio(true_positives, truth_windows),
            precision: ratio(true_positives, detected_windows),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub assessments: Vec<PainAssessment>,
    pub commands: Vec<TherapyCommand>,
    pub weights: Option<AttributeWeights>,
    pub stats: StreamStats,
    pub samples_discarded: usize,
    pub warnings: Vec<Warning>,
    pub target_source: TargetSource,
    pub detected_spans: Vec<Span>,
    pub detection: Option<DetectionSummary>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ReportLine<'a> {
    Assessment(&'a PainAssessment),
    Summary {
        windows: usize,
        stats: &'a StreamStats,
        samples_discarded: usize,
        warnings: &'a [Warning],
        target_source: TargetSource,
        detected_spans: &'a [Span],
        detection: &'a Option<DetectionSummary>,
    },
}

impl SessionReport {
    /// JSON Lines: one `assessment` object per window followed by a single
    /// `summary` object.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for a in &self.assessments {
            serde_json::to_writer(&mut out, &ReportLine::Assessment(a))?;
            out.write_all(b"\n")?;
        }
        let summary = ReportLine::Summary {
            windows: self.assessments.len(),
            stats: &self.stats,
            samples_discarded: self.samples_discarded,
            warnings: &self.warnings,
            target_source: self.target_source,
            detected_spans: &self.detected_spans,
            detection: &self.detection,
        };
        serde_json::to_writer(&mut out, &summary)?;
        out.write_all(b"\n")
    }

    /// `attribute,rho,gamma,omega,omega_norm`; header only when no windows
    /// were formed.
    pub fn write_weights_csv<W: Write>(&self, mut out: W) -> Result<()> {
        match &self.weights {
            Some(w) => w.write_csv(out),
            None => writeln!(out, "attribute,rho,gamma,omega,omega_norm")
                .map_err(|e| Error::argument(format!("write failed: {e}"))),
        }
    }

    pub fn write_commands<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for c in &self.commands {
            writeln!(out, "{c}")?;
        }
        Ok(())
    }
}

fn detected_spans(assessments: &[PainAssessment]) -> Vec<Span> {
    let mut spans: Vec<Span> = Vec::new();
    for a in assessments.iter().filter(|a| a.level > PainLevel::None) {
        match spans.last_mut() {
            Some(s) if s.last_window + 1 == a.window_id => {
                s.last_window = a.window_id;
                s.end_ms = a.end_ms;
            }
            _ => spans.push(Span {
                first_window: a.window_id,
                last_window: a.window_id,
                start_ms: a.start_ms,
                end_ms: a.end_ms,
            }),
        }
    }
    spans
}

/// Parses `lines` and runs [`run_frames`].
pub fn run_session<I, S>(
    config: &PipelineConfig,
    lines: I,
    truth: Option<&GroundTruth>,
) -> Result<SessionReport>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let (frames, stats) = parse_stream(lines);
    run_frames(config, &frames, stats, truth)
}

/// Runs the full pipeline over decoded frames.
pub fn run_frames(
    config: &PipelineConfig,
    frames: &[Frame],
    stats: StreamStats,
    truth: Option<&GroundTruth>,
) -> Result<SessionReport> {
    config.validate()?;
    let mut emg: Vec<EmgSample> = Vec::new();
    let mut imu: Vec<ImuFrame> = Vec::new();
    let mut buttons: Vec<ButtonFrame> = Vec::new();
    for f in frames {
        match f {
            Frame::Emg(s) => emg.push(*s),
            Frame::Imu(i) => imu.push(*i),
            Frame::Button(b) => buttons.push(*b),
        }
    }
    // Windows need strictly increasing seq; out-of-order EMG frames are dropped
    // here after having been counted by the decoder.
    let mut last = None;
    emg.retain(|s| {
        let keep = last.is_none_or(|l| s.seq > l);
        if keep {
            last = Some(s.seq);
        }
        keep
    });

    let windowed = window_stream(&emg, config.signal.sample_count)?;
    let windows = &windowed.windows;
    let features = windows
        .iter()
        .map(|w| {
            extract_features(w, &config.signal).map_err(|e| Error::InWindow {
                window_id: w.window_id,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let (labels, target_source) = match truth {
        Some(t) => {
            if t.windows.len() != windows.len() {
                return Err(Error::argument(format!(
                    "ground truth covers {} windows, stream produced {}",
                    t.windows.len(),
                    windows.len()
                )));
            }
            (t.labels(), TargetSource::GroundTruth)
        }
        None => (align_button_labels(&buttons, windows), TargetSource::Buttons),
    };

    let mut report = SessionReport {
        assessments: Vec::with_capacity(windows.len()),
        commands: Vec::with_capacity(windows.len()),
        weights: None,
        stats,
        samples_discarded: windowed.discarded,
        warnings: Vec::new(),
        target_source,
        detected_spans: Vec::new(),
        detection: None,
    };
    if windows.is_empty() {
        report.detection = truth.map(|_| DetectionSummary::compute(&[], &[]));
        return Ok(report);
    }

    let gyro = (!imu.is_empty()).then(|| imu_gyro_per_window(&imu, windows));
    let (built, target) =
        build_information_system(&features, gyro.as_deref(), &labels, config.bins)?;
    let weights = attribute_weights(
        &built.system,
        &target,
        config.alpha,
        config.beta,
        config.dependence_mode,
    )?;
    let screened = screen(&built.system, &weights, config.theta)?;

    let mut state = TherapyState::default();
    for (i, (w, f)) in windows.iter().zip(&features).enumerate() {
        let level = config.thresholds.level(f.average_value);
        state = therapy_decide(level, state);
        report.commands.push(TherapyCommand::from_state(w.end_ms, state));
        report.assessments.push(PainAssessment {
            window_id: w.window_id,
            start_ms: w.start_ms,
            end_ms: w.end_ms,
            average_value: f.average_value,
            mean_emg: f.mean_emg,
            peak_emg: f.peak_emg,
            score: screened.scores[i],
            level,
            screened: screened.selected.binary_search(&i).is_ok(),
            target: labels[i],
        });
    }
    report.detected_spans = detected_spans(&report.assessments);
    if truth.is_some() {
        let detected: Vec<bool> = report
            .assessments
            .iter()
            .map(|a| a.level > PainLevel::None)
            .collect();
        report.detection = Some(DetectionSummary::compute(&labels, &detected));
    }
    report.warnings = built.warnings;
    report.weights = Some(weights);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::ButtonLevel;

    fn features(avg: f64) -> WindowFeatures {
        WindowFeatures {
            window_id: 0,
            min_value: 0,
            max_value: 0,
            sum: 0,
            average_value: avg,
            mean_emg: avg,
            peak_emg: avg,
        }
    }

    fn windows(n: usize, len: usize) -> Vec<Window> {
        let samples: Vec<EmgSample> = (0..n * len)
            .map(|i| EmgSample { seq: i as u64, t_ms: i as u64 * 10, adc: 0 })
            .collect();
        window_stream(&samples, len).unwrap().windows
    }

    fn press(t_ms: u64) -> ButtonFrame {
        ButtonFrame { seq: 0, t_ms, level: ButtonLevel::Mild }
    }

    #[test]
    fn assess_examples() {
        let t = PainThresholds::default();
        assert_eq!(assess_pain(&features(0.0), &t).unwrap(), PainLevel::None);
        assert_eq!(assess_pain(&features(400.0), &t).unwrap(), PainLevel::Moderate);
        assert_eq!(assess_pain(&features(450.0), &t).unwrap(), PainLevel::Moderate);
        assert_eq!(assess_pain(&features(199.9), &t).unwrap(), PainLevel::None);
        assert_eq!(assess_pain(&features(200.0), &t).unwrap(), PainLevel::Low);
        assert_eq!(assess_pain(&features(700.0), &t).unwrap(), PainLevel::High);
        let bad = PainThresholds { t_low: 300.0, t_mod: 300.0, t_high: 700.0 };
        assert!(matches!(assess_pain(&features(1.0), &bad), Err(Error::Config(_))));
    }

    fn trace(levels: &[PainLevel]) -> Vec<u8> {
        let mut s = TherapyState::default();
        levels
            .iter()
            .map(|&l| {
                s = therapy_decide(l, s);
                s.intensity
            })
            .collect()
    }

    #[test]
    fn therapy_examples() {
        use PainLevel::*;
        assert_eq!(trace(&[None, None]), vec![0, 0]);
        let cmd = TherapyCommand::from_state(0, therapy_decide(High, TherapyState::default()));
        assert_eq!((cmd.massage_intensity, cmd.heat_on), (3, true));
        assert_eq!(trace(&[High, Low, Low]), vec![3, 3, 1]);
        assert_eq!(trace(&[High, None, Low]), vec![3, 3, 1]);
        assert_eq!(trace(&[Moderate, Low, Moderate, Low, Low]), vec![2, 2, 2, 2, 1]);
    }

    #[test]
    fn heat_tracks_held_intensity() {
        let on = |i| TherapyCommand::from_state(0, TherapyState { intensity: i, ..Default::default() }).heat_on;
        assert_eq!([on(0), on(1), on(2), on(3)], [false, false, true, true]);
    }

    #[test]
    fn command_wire_format() {
        let c = TherapyCommand { t_ms: 320, massage_intensity: 2, heat_on: true };
        assert_eq!(c.to_string(), "CMD,320,2,1");
    }

    #[test]
    fn button_alignment() {
        let w = windows(3, 32);
        assert_eq!(align_button_labels(&[press(50)], &w), vec![true, false, false]);
        assert_eq!(align_button_labels(&[], &w), vec![false; 3]);
        assert_eq!(align_button_labels(&[press(320)], &w), vec![false, true, false]);
    }

    #[test]
    fn information_system_shape() {
        let f: Vec<_> = (0..6).map(|i| WindowFeatures { window_id: i, ..features(i as f64) }).collect();
        let (b, x) = build_information_system(&f, None, &[false; 6], 5).unwrap();
        assert_eq!((b.system.attribute_count(), b.system.universe_len()), (3, 6));
        assert!(x.is_empty());

        let gyro = vec![1.0; 6];
        let (b, _) = build_information_system(&f, Some(&gyro), &[true; 6], 5).unwrap();
        assert_eq!(b.system.attribute_count(), 4);
        assert_eq!(b.warnings, vec![Warning::ConstantAttribute { attribute: ATTR_GYRO.into() }]);

        assert!(matches!(
            build_information_system(&f, None, &[true; 5], 5),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn empty_session() {
        let r = run_session(&PipelineConfig::default(), Vec::<String>::new(), None).unwrap();
        assert!(r.assessments.is_empty() && r.commands.is_empty() && r.weights.is_none());
        let mut buf = Vec::new();
        r.write_jsonl(&mut buf).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 1);
    }

    #[test]
    fn truth_length_must_match() {
        let lines: Vec<String> = (0..64).map(|i| format!("EMG,{i},{},100", i * 10)).collect();
        let truth = GroundTruth::default();
        assert!(matches!(
            run_session(&PipelineConfig::default(), &lines, Some(&truth)),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn small_session_end_to_end() {
        let mut lines: Vec<String> = Vec::new();
        let mut seq = 0;
        for w in 0..4u64 {
            let adc = if w == 2 { 500 } else { 100 };
            for i in 0..32u64 {
                let t = (w * 32 + i) * 10;
                lines.push(format!("EMG,{seq},{t},{adc}"));
                seq += 1;
            }
        }
        lines.push(format!("BTN,{seq},650,2"));
        lines.push("noise".into());
        let r = run_session(&PipelineConfig::default(), &lines, None).unwrap();
        let levels: Vec<_> = r.assessments.iter().map(|a| a.level).collect();
        assert_eq!(levels, [PainLevel::None, PainLevel::None, PainLevel::Moderate, PainLevel::None]);
        assert_eq!(r.assessments.iter().map(|a| a.target).collect::<Vec<_>>(), [false, false, true, false]);
        assert!(r.assessments[2].screened);
        assert!(!r.assessments[0].screened);
        assert_eq!(r.stats.frames_malformed, 1);
        assert_eq!(r.detected_spans.len(), 1);
        let intensities: Vec<_> = r.commands.iter().map(|c| c.massage_intensity).collect();
        assert_eq!(intensities, [0, 0, 2, 2]);
    }

    #[test]
    fn detection_summary_counts() {
        let s = DetectionSummary::compute(
            &[false, true, true, false, true],
            &[false, true, false, true, true],
        );
        assert_eq!((s.truth_windows, s.detected_windows, s.true_positives, s.truth_spans), (3, 3, 2, 2));
        assert_eq!(s.recall, Some(2.0 / 3.0));
        let s = DetectionSummary::compute(&[false], &[false]);
        assert_eq!((s.recall, s.precision), (None, None));
    }
}
