//! Line-oriented sensor wire format.
//!
//! One frame per LF-terminated ASCII line:
//!
//! ```text
//! EMG,<seq>,<t_ms>,<adc>                          adc in 0..=1023
//! IMU,<seq>,<t_ms>,<ax>,<ay>,<az>,<gx>,<gy>,<gz>  signed, milli-g / milli-deg/s
//! BTN,<seq>,<t_ms>,<level>                        level in 1..=3
//! ```
//!
//! Unsigned fields take no sign and no leading zeros (except the literal `0`).
//! Signed fields may carry a leading `-`, never `+`, and `-0` is rejected, so
//! every frame has exactly one accepted spelling.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{EmgSample, ADC_MAX};

/// Colour-coded pain button.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ButtonLevel {
    /// Green, mild.
    Mild = 1,
    /// Yellow, moderate.
    Moderate = 2,
    /// Red, severe.
    Severe = 3,
}

impl ButtonLevel {
    pub fn from_code(code: u64) -> Option<Self> {
        match code {
            1 => Some(Self::Mild),
            2 => Some(Self::Moderate),
            3 => Some(Self::Severe),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImuFrame {
    pub seq: u64,
    pub t_ms: u64,
    pub ax: i32,
    pub ay: i32,
    pub az: i32,
    pub gx: i32,
    pub gy: i32,
    pub gz: i32,
}

impl ImuFrame {
    /// Euclidean norm of the gyro vector, milli-deg/s.
    pub fn gyro_magnitude(&self) -> f64 {
        let (x, y, z) = (f64::from(self.gx), f64::from(self.gy), f64::from(self.gz));
        (x * x + y * y + z * z).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ButtonFrame {
    pub seq: u64,
    pub t_ms: u64,
    pub level: ButtonLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    Emg(EmgSample),
    Imu(ImuFrame),
    Button(ButtonFrame),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FrameKind {
    Emg,
    Imu,
    Button,
}

impl FrameKind {
    pub fn tag(self) -> &'static str {
        match self {
            FrameKind::Emg => "EMG",
            FrameKind::Imu => "IMU",
            FrameKind::Button => "BTN",
        }
    }

    fn field_count(self) -> usize {
        match self {
            FrameKind::Emg | FrameKind::Button => 4,
            FrameKind::Imu => 9,
        }
    }
}

impl Frame {
    pub fn kind(&self) -> FrameKind {
        match self {
            Frame::Emg(_) => FrameKind::Emg,
            Frame::Imu(_) => FrameKind::Imu,
            Frame::Button(_) => FrameKind::Button,
        }
    }

    pub fn seq(&self) -> u64 {
        match self {
            Frame::Emg(f) => f.seq,
            Frame::Imu(f) => f.seq,
            Frame::Button(f) => f.seq,
        }
    }

    pub fn t_ms(&self) -> u64 {
        match self {
            Frame::Emg(f) => f.t_ms,
            Frame::Imu(f) => f.t_ms,
            Frame::Button(f) => f.t_ms,
        }
    }
}

/// Canonical serialization, see [`serialize_frame`].
impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frame::Emg(e) => write!(f, "EMG,{},{},{}", e.seq, e.t_ms, e.adc),
            Frame::Imu(i) => write!(
                f,
                "IMU,{},{},{},{},{},{},{},{}",
                i.seq, i.t_ms, i.ax, i.ay, i.az, i.gx, i.gy, i.gz
            ),
            Frame::Button(b) => write!(f, "BTN,{},{},{}", b.seq, b.t_ms, b.level.code()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty line")]
    Empty,
    #[error("line contains non-ASCII or control bytes")]
    NotAscii,
    #[error("unknown frame tag '{0}'")]
    UnknownTag(String),
    #[error("{tag} frame needs {expected} fields, found {found}")]
    FieldCount {
        tag: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("field {field} is not a canonical decimal: '{value}'")]
    NotNumeric { field: &'static str, value: String },
    #[error("field {field} value {value} is out of range")]
    OutOfRange { field: &'static str, value: String },
}

fn parse_unsigned(field: &'static str, s: &str) -> Result<u64, ParseError> {
    let canonical = !s.is_empty()
        && s.bytes().all(|b| b.is_ascii_digit())
        && (s == "0" || !s.starts_with('0'));
    if !canonical {
        return Err(ParseError::NotNumeric {
            field,
            value: s.to_string(),
        });
    }
    s.parse().map_err(|_| ParseError::OutOfRange {
        field,
        value: s.to_string(),
    })
}

fn parse_signed(field: &'static str, s: &str) -> Result<i32, ParseError> {
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let canonical = !digits.is_empty()
        && digits.bytes().all(|b| b.is_ascii_digit())
        && (digits == "0" || !digits.starts_with('0'))
        && !(neg && digits == "0");
    if !canonical {
        return Err(ParseError::NotNumeric {
            field,
            value: s.to_string(),
        });
    }
    s.parse().map_err(|_| ParseError::OutOfRange {
        field,
        value: s.to_string(),
    })
}

/// Parses one line (without its terminator).
pub fn parse_line(line: &str) -> Result<Frame, ParseError> {
    if line.is_empty() {
        return Err(ParseError::Empty);
    }
    if !line.bytes().all(|b| b.is_ascii_graphic()) {
        return Err(ParseError::NotAscii);
    }
    let fields: Vec<&str> = line.split(',').collect();
    let kind = match fields[0] {
        "EMG" => FrameKind::Emg,
        "IMU" => FrameKind::Imu,
        "BTN" => FrameKind::Button,
        other => return Err(ParseError::UnknownTag(other.to_string())),
    };
    if fields.len() != kind.field_count() {
        return Err(ParseError::FieldCount {
            tag: kind.tag(),
            expected: kind.field_count(),
            found: fields.len(),
        });
    }
    let seq = parse_unsigned("seq", fields[1])?;
    let t_ms = parse_unsigned("t_ms", fields[2])?;
    Ok(match kind {
        FrameKind::Emg => {
            let adc = parse_unsigned("adc", fields[3])?;
            if adc > u64::from(ADC_MAX) {
                return Err(ParseError::OutOfRange {
                    field: "adc",
                    value: fields[3].to_string(),
                });
            }
            Frame::Emg(EmgSample {
                seq,
                t_ms,
                adc: adc as u16,
            })
        }
        FrameKind::Imu => Frame::Imu(ImuFrame {
            seq,
            t_ms,
            ax: parse_signed("ax", fields[3])?,
            ay: parse_signed("ay", fields[4])?,
            az: parse_signed("az", fields[5])?,
            gx: parse_signed("gx", fields[6])?,
            gy: parse_signed("gy", fields[7])?,
            gz: parse_signed("gz", fields[8])?,
        }),
        FrameKind::Button => {
            let code = parse_unsigned("level", fields[3])?;
            let level = ButtonLevel::from_code(code).ok_or_else(|| ParseError::OutOfRange {
                field: "level",
                value: fields[3].to_string(),
            })?;
            Frame::Button(ButtonFrame { seq, t_ms, level })
        }
    })
}

/// Parses raw bytes from a serial link; anything outside printable ASCII is
/// rejected before tokenizing.
pub fn parse_line_bytes(line: &[u8]) -> Result<Frame, ParseError> {
    match std::str::from_utf8(line) {
        Ok(s) => parse_line(s),
        Err(_) if line.is_empty() => Err(ParseError::Empty),
        Err(_) => Err(ParseError::NotAscii),
    }
}

pub fn serialize_frame(frame: &Frame) -> String {
    frame.to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StreamStats {
    pub frames_ok: u64,
    pub frames_malformed: u64,
    /// Frames whose seq did not increase relative to the previous frame of
    /// the same kind. These frames are still delivered.
    pub frames_out_of_order: u64,
}

/// Incremental stream decoder that tracks [`StreamStats`].
#[derive(Debug, Clone, Default)]
pub struct StreamDecoder {
    stats: StreamStats,
    last_seq: [Option<u64>; 3],
}

impl StreamDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Decodes one line; malformed lines are counted and yield `None`.
    pub fn push_line(&mut self, line: &str) -> Option<Frame> {
        match parse_line(line) {
            Ok(frame) => {
                self.stats.frames_ok += 1;
                let slot = &mut self.last_seq[frame.kind() as usize];
                if slot.is_some_and(|prev| frame.seq() <= prev) {
                    self.stats.frames_out_of_order += 1;
                }
                *slot = Some(frame.seq());
                Some(frame)
            }
            Err(_) => {
                self.stats.frames_malformed += 1;
                None
            }
        }
    }

    pub fn stats(&self) -> StreamStats {
        self.stats
    }
}

/// Decodes every line, skipping malformed ones.
pub fn parse_stream<I, S>(lines: I) -> (Vec<Frame>, StreamStats)
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut decoder = StreamDecoder::new();
    let frames = lines
        .into_iter()
        .filter_map(|l| decoder.push_line(l.as_ref()))
        .collect();
    (frames, decoder.stats())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        assert_eq!(
            parse_line("EMG,42,1000,512"),
            Ok(Frame::Emg(EmgSample { seq: 42, t_ms: 1000, adc: 512 }))
        );
        assert!(matches!(
            parse_line("EMG,42,1000,2048"),
            Err(ParseError::OutOfRange { field: "adc", .. })
        ));
        assert_eq!(
            parse_line("BTN,7,5000,3"),
            Ok(Frame::Button(ButtonFrame { seq: 7, t_ms: 5000, level: ButtonLevel::Severe }))
        );
    }

    #[test]
    fn serialize_examples() {
        let emg = Frame::Emg(EmgSample { seq: 42, t_ms: 1000, adc: 512 });
        assert_eq!(serialize_frame(&emg), "EMG,42,1000,512");
        let imu = Frame::Imu(ImuFrame { seq: 1, t_ms: 10, ax: -5, ay: 0, az: 981, gx: 0, gy: 0, gz: 0 });
        assert_eq!(serialize_frame(&imu), "IMU,1,10,-5,0,981,0,0,0");
        assert_eq!(parse_line("IMU,1,10,-5,0,981,0,0,0"), Ok(imu));
    }

    #[test]
    fn error_variants() {
        use ParseError::*;
        type Case = (&'static str, fn(&ParseError) -> bool);
        let cases: &[Case] = &[
            ("", |e| *e == Empty),
            ("EMG,1,2,3\r", |e| *e == NotAscii),
            ("EMG, 1,2,3", |e| *e == NotAscii),
            ("emg,1,2,3", |e| matches!(e, UnknownTag(_))),
            ("EMG,1,2", |e| matches!(e, FieldCount { expected: 4, found: 3, .. })),
            ("IMU,1,2,3,4,5,6,7", |e| matches!(e, FieldCount { expected: 9, .. })),
            ("EMG,01,2,3", |e| matches!(e, NotNumeric { field: "seq", .. })),
            ("EMG,+1,2,3", |e| matches!(e, NotNumeric { field: "seq", .. })),
            ("EMG,1,x,3", |e| matches!(e, NotNumeric { field: "t_ms", .. })),
            ("EMG,1,2,", |e| matches!(e, NotNumeric { field: "adc", .. })),
            ("EMG,1,2,-3", |e| matches!(e, NotNumeric { field: "adc", .. })),
            ("IMU,1,2,-0,0,0,0,0,0", |e| matches!(e, NotNumeric { field: "ax", .. })),
            ("IMU,1,2,+5,0,0,0,0,0", |e| matches!(e, NotNumeric { field: "ax", .. })),
            ("IMU,1,2,0,0,0,0,0,2147483648", |e| matches!(e, OutOfRange { field: "gz", .. })),
            ("EMG,18446744073709551616,0,0", |e| matches!(e, OutOfRange { field: "seq", .. })),
            ("BTN,1,2,0", |e| matches!(e, OutOfRange { field: "level", .. })),
            ("BTN,1,2,4", |e| matches!(e, OutOfRange { field: "level", .. })),
        ];
        for (line, check) in cases {
            let err = parse_line(line).unwrap_err();
            assert!(check(&err), "{line:?} -> {err:?}");
        }
    }

    #[test]
    fn signed_extremes_round_trip() {
        let line = "IMU,0,0,-2147483648,2147483647,0,-1,1,0";
        assert_eq!(serialize_frame(&parse_line(line).unwrap()), line);
    }

    #[test]
    fn stream_examples() {
        let (frames, stats) = parse_stream(["EMG,1,0,5", "garbage", "EMG,2,4,6"]);
        assert_eq!(frames.len(), 2);
        assert_eq!(stats, StreamStats { frames_ok: 2, frames_malformed: 1, frames_out_of_order: 0 });

        let (frames, stats) = parse_stream(Vec::<String>::new());
        assert!(frames.is_empty());
        assert_eq!(stats, StreamStats::default());

        let (frames, stats) = parse_stream(["EMG,2,4,6", "EMG,1,8,7"]);
        assert_eq!(frames.len(), 2);
        assert_eq!(stats.frames_out_of_order, 1);
    }

    #[test]
    fn out_of_order_is_tracked_per_kind() {
        let (_, stats) = parse_stream(["EMG,5,0,1", "BTN,1,0,1", "IMU,2,0,0,0,0,0,0,0", "EMG,6,10,1"]);
        assert_eq!(stats.frames_out_of_order, 0);
        let (_, stats) = parse_stream(["EMG,5,0,1", "EMG,5,10,1"]);
        assert_eq!(stats.frames_out_of_order, 1);
    }

    #[test]
    fn bytes_entry_point() {
        assert!(parse_line_bytes(b"EMG,1,2,3").is_ok());
        assert_eq!(parse_line_bytes(&[0xff, 0xfe]), Err(ParseError::NotAscii));
        assert_eq!(parse_line_bytes(b""), Err(ParseError::Empty));
    }
}
