use std::f64::consts::PI;

use picotx_core::analysis::{aligned_correlation, pearson, spectrogram_ridge};
use picotx_core::io::{encode_u16, read_wav, write_wav};
use picotx_core::morse::{DEFAULT_DT, DEFAULT_TONE};
use picotx_core::receiver::{AUDIO_RATE, DECODER_RATE};
use picotx_core::sources::{live_handoff, strip_export_envelope, ARPEGGIO_RATE, TICK_SECONDS};
use picotx_core::transmitter::AmTransmitter;
use picotx_core::*;

const CARRIER: f64 = 125_000.0;

fn morse_rf(text: &str) -> SignalBuffer {
    let keys = encode_canonical(text, DEFAULT_DT).unwrap();
    let stream = keying_to_stream(&keys, DEFAULT_TONE, 0.5).unwrap();
    am_transmit(&TransmitterConfig::default(), &stream).unwrap()
}

fn decode(rf: &SignalBuffer, center: f64) -> String {
    let audio = tune_am(rf, &TunerConfig::morse(center), AUDIO_RATE).unwrap();
    decode_audio(&resample(&audio, DECODER_RATE).unwrap(), DEFAULT_TONE, Some(DEFAULT_DT)).unwrap()
}

#[test]
fn third_harmonic_carries_the_message() {
    let rf = morse_rf("CQ DE PICO");
    assert_eq!(decode(&rf, 3.0 * CARRIER), "CQ DE PICO");
    let report = harmonic_retune_check(&rf, CARRIER, 3, &TunerConfig::morse(CARRIER)).unwrap();
    assert!(report.correlation > 0.99, "{report:?}");
    // Eight samples per carrier period: the sampled square's third harmonic
    // sits at tan(π/8) of the fundamental rather than 1/3.
    let ratio = (PI / 8.0).tan().powi(2);
    assert!((report.energy_ratio - ratio).abs() < 0.01 * ratio, "{report:?}");
}

#[test]
fn even_harmonics_are_empty_at_half_duty() {
    let rf = morse_rf("SOS");
    {
        let multiple = 2;
        let report = harmonic_retune_check(&rf, CARRIER, multiple, &TunerConfig::morse(CARRIER)).unwrap();
        assert!(report.energy_ratio < 1e-6, "{multiple}: {report:?}");
    }
}

#[test]
fn harmonic_law_holds_with_enough_samples_per_period() {
    // 128 samples per carrier period.
    let cfg = PwmConfig::new(125_000.0, 0.5);
    let buf = generate_pwm(&cfg, 0.002, 16_000_000).unwrap();
    let spec = analyze_spectrum(&buf, buf.len()).unwrap();
    let h1 = measure_harmonic(&spec, cfg.frequency, 1).unwrap();
    for n in [1u32, 3, 5, 7] {
        let m = measure_harmonic(&spec, cfg.frequency, n).unwrap();
        let want = 4.0 / (n as f64 * PI);
        assert!((m - want).abs() / want < 0.02, "n={n}: {m} vs {want}");
    }
    for n in [2u32, 4, 6] {
        let m = measure_harmonic(&spec, cfg.frequency, n).unwrap();
        assert!(20.0 * (m / h1).log10() < -40.0, "n={n}: {m}");
    }
}

#[test]
fn harmonic_law_at_one_megasample_for_slow_carrier() {
    let cfg = PwmConfig::new(1_000.0, 0.5);
    let buf = generate_pwm(&cfg, 0.1, 1_000_000).unwrap();
    let spec = analyze_spectrum(&buf, buf.len()).unwrap();
    for n in [1u32, 3, 5, 7] {
        let m = measure_harmonic(&spec, cfg.frequency, n).unwrap();
        let want = 4.0 / (n as f64 * PI);
        assert!((m - want).abs() / want < 0.02, "n={n}: {m} vs {want}");
    }
}

#[test]
fn exported_sequence_plays_expected_pitches() {
    let export = "Online Sequencer:1234567:0 A4 4 0;4 E5 4 0;8 A4 2 0;8 C#5 2 0;:";
    let events = parse_sequence(strip_export_envelope(export)).unwrap();
    assert_eq!(events.len(), 4);
    assert_eq!(events[1], NoteEvent::new(4, "E5", 4, 0));

    let stream = sequence_to_stream(&events, TICK_SECONDS, ARPEGGIO_RATE).unwrap();
    assert!((stream.duration() - 10.0 * TICK_SECONDS).abs() < 1e-9);
    let rf = am_transmit(&TransmitterConfig::default(), &stream).unwrap();
    let audio = tune_am(&rf, &TunerConfig::wide(CARRIER), AUDIO_RATE).unwrap();

    let ridge = spectrogram_ridge(&audio, 0.1, 0.16, 1 << 16, 100.0, 2000.0).unwrap();
    assert!((ridge[0].frequency - 440.0).abs() < 2.0, "{ridge:?}");
    assert!((ridge[1].frequency - 659.255).abs() < 2.0, "{ridge:?}");
}

#[test]
fn live_samples_reach_the_receiver() {
    let sr = 16_000u32;
    let source: Vec<f64> = (0..sr / 2)
        .map(|i| 0.8 * (2.0 * PI * 440.0 * i as f64 / sr as f64).sin())
        .collect();
    let (tx, rx) = live_handoff(sr, 4);
    let producer = std::thread::spawn(move || {
        for block in encode_u16(&source).chunks(1000) {
            tx.send(block.to_vec()).unwrap();
        }
    });
    let mut stream = rx.next_stream().unwrap().unwrap();
    while let Some(next) = rx.next_stream() {
        stream.append(next.unwrap());
    }
    producer.join().unwrap();
    assert!((stream.duration() - 0.5).abs() < 1e-9);

    let rf = am_transmit(&TransmitterConfig::default(), &stream).unwrap();
    let audio = tune_am(&rf, &TunerConfig::wide(CARRIER), AUDIO_RATE).unwrap();
    let reference: Vec<f64> = (0..audio.len())
        .map(|i| (2.0 * PI * 440.0 * i as f64 / AUDIO_RATE as f64).sin())
        .collect();
    let edge = 2400;
    let (_, r) = aligned_correlation(&reference[edge..], &audio.samples()[edge..audio.len() - edge], 110);
    assert!(r > 0.95, "{r}");
}

#[test]
fn chunked_transmitter_matches_batch() {
    let keys = encode_canonical("E", DEFAULT_DT).unwrap();
    let stream = keying_to_stream(&keys, DEFAULT_TONE, 0.5).unwrap();
    let cfg = TransmitterConfig::default();
    let batch = am_transmit(&cfg, &stream).unwrap();
    let mut tx = AmTransmitter::new(&cfg, &stream).unwrap();
    let mut chunked = Vec::new();
    while let Some(chunk) = tx.next_chunk(7919) {
        chunked.extend(chunk);
    }
    assert_eq!(chunked, batch.samples());
}

#[test]
fn scaled_down_chain_matches_in_shape() {
    // Same message at a 10x lower carrier and rate demodulates to the same audio.
    let keys = encode_canonical("TEST", DEFAULT_DT).unwrap();
    let stream = keying_to_stream(&keys, DEFAULT_TONE, 0.5).unwrap();
    let fast = am_transmit(&TransmitterConfig::scaled(250.0, 1_000_000).unwrap(), &stream).unwrap();
    let slow = am_transmit(&TransmitterConfig::scaled(2500.0, 100_000).unwrap(), &stream).unwrap();
    let tuner = |center| TunerConfig::morse(center);
    let a = tune_am(&fast, &tuner(125_000.0), AUDIO_RATE).unwrap();
    let b = tune_am(&slow, &tuner(12_500.0), AUDIO_RATE).unwrap();
    assert!(pearson(a.samples(), b.samples()) > 0.99);
}

#[test]
fn wav_roundtrip_keeps_decoded_text() {
    let rf = morse_rf("73");
    let audio = tune_am(&rf, &TunerConfig::morse(CARRIER), AUDIO_RATE).unwrap();
    let audio = resample(&audio, DECODER_RATE).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("audio.wav");
    write_wav(&path, &audio).unwrap();
    let back = read_wav(&path).unwrap();
    assert_eq!(back.sample_rate(), DECODER_RATE);
    assert_eq!(decode_audio(&back, DEFAULT_TONE, None).unwrap(), "73");
}
