use painscreen_core::frame::{
    parse_line, parse_line_bytes, parse_stream, serialize_frame, ButtonFrame, ButtonLevel, Frame,
    ImuFrame,
};
use painscreen_core::signal::EmgSample;
use proptest::prelude::*;

fn frame() -> impl Strategy<Value = Frame> {
    let level = prop_oneof![
        Just(ButtonLevel::Mild),
        Just(ButtonLevel::Moderate),
        Just(ButtonLevel::Severe)
    ];
    prop_oneof![
        (any::<u64>(), any::<u64>(), 0u16..=1023)
            .prop_map(|(seq, t_ms, adc)| Frame::Emg(EmgSample { seq, t_ms, adc })),
        (any::<u64>(), any::<u64>(), prop::array::uniform6(any::<i32>())).prop_map(|(seq, t_ms, v)| {
            Frame::Imu(ImuFrame { seq, t_ms, ax: v[0], ay: v[1], az: v[2], gx: v[3], gy: v[4], gz: v[5] })
        }),
        (any::<u64>(), any::<u64>(), level)
            .prop_map(|(seq, t_ms, level)| Frame::Button(ButtonFrame { seq, t_ms, level })),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn round_trip(f in frame()) {
        let line = serialize_frame(&f);
        prop_assert!(line.bytes().all(|b| b.is_ascii_graphic()));
        prop_assert_eq!(parse_line(&line), Ok(f));
    }

    #[test]
    fn serialization_is_injective(a in frame(), b in frame()) {
        prop_assert_eq!(a == b, serialize_frame(&a) == serialize_frame(&b));
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
        let _ = parse_line_bytes(&bytes);
        let _ = parse_line(&String::from_utf8_lossy(&bytes));
    }

    #[test]
    fn mutated_lines_never_panic(f in frame(), pos in any::<prop::sample::Index>(), byte in any::<u8>()) {
        let mut bytes = serialize_frame(&f).into_bytes();
        let i = pos.index(bytes.len());
        bytes[i] = byte;
        if let Ok(parsed) = parse_line_bytes(&bytes) {
            // anything accepted must re-serialize to the same bytes
            prop_assert_eq!(serialize_frame(&parsed).into_bytes(), bytes);
        }
    }

    #[test]
    fn stream_counts_add_up(lines in prop::collection::vec(prop_oneof![
        frame().prop_map(|f| serialize_frame(&f)),
        "[ -~]{0,20}",
    ], 0..40)) {
        let (frames, stats) = parse_stream(&lines);
        prop_assert_eq!(frames.len() as u64, stats.frames_ok);
        prop_assert_eq!(stats.frames_ok + stats.frames_malformed, lines.len() as u64);
        prop_assert!(stats.frames_out_of_order <= stats.frames_ok);
    }
}
