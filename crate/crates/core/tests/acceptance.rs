//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use picotx_core::analysis::{aligned_correlation, spectrogram_ridge};
use picotx_core::io::encode_u8;
use picotx_core::morse::{decode_audio, encode_canonical, MorseTable, Timing, DEFAULT_DT, DEFAULT_TONE};
use picotx_core::receiver::{AUDIO_RATE, DECODER_RATE};
use picotx_core::sources::{raw_pcm_to_stream, RawAudioConfig, PCM_RATE};
use picotx_core::{
    am_transmit, analyze_spectrum, apply_channel, generate_pwm, harmonic_retune_check, keying_to_stream,
    measure_harmonic, optimal_antenna_length, resample, sweep_stream, tune_am, ChannelConfig, PwmConfig, SignalBuffer,
    TransmitterConfig, TunerConfig,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn carrier() -> f64 {
    TransmitterConfig::default().carrier.frequency
}

fn morse_rf(text: &str) -> SignalBuffer {
    let schedule = encode_canonical(text, DEFAULT_DT).unwrap();
    let stream = keying_to_stream(&schedule, DEFAULT_TONE, 0.5).unwrap();
    am_transmit(&TransmitterConfig::default(), &stream).unwrap()
}

/// Odd harmonics of a 50%-duty carrier at 125 kHz, 1 MS/s follow 4/(nπ);
/// even ones sit 40 dB down.
fn harmonic_law() -> Outcome {
    let start = Instant::now();
    let cfg = PwmConfig::new(125_000.0, 0.5);
    let buf = generate_pwm(&cfg, 0.1, 1_000_000).map_err(|e| e.to_string())?;
    let spec = analyze_spectrum(&buf, buf.len()).map_err(|e| e.to_string())?;
    let mut problems = Vec::new();
    let mut report = Vec::new();
    let fundamental = measure_harmonic(&spec, cfg.frequency, 1).map_err(|e| e.to_string())?;
    for n in [1u32, 3, 5, 7] {
        let expected = 4.0 / (n as f64 * PI);
        match measure_harmonic(&spec, cfg.frequency, n) {
            Ok(m) => {
                let err = (m - expected).abs() / expected;
                report.push(format!("n={n}: {m:.4} vs {expected:.4}"));
                if err > 0.02 {
                    problems.push(format!("n={n} off by {:.1}%", 100.0 * err));
                }
            }
            Err(e) => problems.push(format!("n={n}: {e}")),
        }
    }
    for n in [2u32, 4, 6] {
        match measure_harmonic(&spec, cfg.frequency, n) {
            Ok(m) => {
                let db = 20.0 * (m.max(1e-300) / fundamental).log10();
                if db > -40.0 {
                    problems.push(format!("n={n} only {db:.1} dB down"));
                }
            }
            Err(e) => problems.push(format!("n={n}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(5) {
        problems.push(format!("took {elapsed:?}"));
    }
    if problems.is_empty() {
        Ok(report.join(", "))
    } else {
        Err(problems.join("; "))
    }
}

/// PARIS is 50 units with per-character totals 14/8/10/6/12.
fn paris_timing() -> Outcome {
    let schedule = encode_canonical("PARIS", DEFAULT_DT).map_err(|e| e.to_string())?;
    check(
        schedule.total_units() == Some(50),
        format!("total units {:?}", schedule.total_units()),
    )?;
    check(
        (schedule.total_duration() - 50.0 * DEFAULT_DT).abs() < 1e-12,
        format!("duration {}", schedule.total_duration()),
    )?;
    let totals: Vec<u32> = MorseTable::standard()
        .character_totals("PARIS", Timing::Canonical)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|(_, u)| u)
        .collect();
    check(totals == [14, 8, 10, 6, 12], format!("per-character {totals:?}"))?;
    Ok("50 units; P14 A8 R10 I6 S12".into())
}

/// Full Morse chain with 20 dB SNR decodes exactly.
fn morse_roundtrip() -> Outcome {
    let start = Instant::now();
    let rf = morse_rf("HELLO WORLD!");
    let noisy = apply_channel(&rf, &ChannelConfig::with_snr(1.0, rf.rms(), 20.0, 2025)).map_err(|e| e.to_string())?;
    let audio = tune_am(&noisy, &TunerConfig::morse(carrier()), AUDIO_RATE).map_err(|e| e.to_string())?;
    let audio = resample(&audio, DECODER_RATE).map_err(|e| e.to_string())?;
    let text = decode_audio(&audio, DEFAULT_TONE, None).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(text == "HELLO WORLD!", format!("decoded {text:?}"))?;
    check(elapsed < Duration::from_secs(30), format!("took {elapsed:?}"))?;
    Ok(format!("decoded {text:?} in {:.1} s", elapsed.as_secs_f64()))
}

/// Demodulated sweep ridge climbs 200 → 1190 Hz over one second.
fn sweep_ridge() -> Outcome {
    let stream = sweep_stream(100, 200.0, 10.0, 0.01, 0.5).map_err(|e| e.to_string())?;
    let rf = am_transmit(&TransmitterConfig::default(), &stream).map_err(|e| e.to_string())?;
    let audio = tune_am(&rf, &TunerConfig::wide(carrier()), AUDIO_RATE).map_err(|e| e.to_string())?;
    let ridge = spectrogram_ridge(&audio, 0.02, 0.01, 1 << 16, 100.0, 2000.0).map_err(|e| e.to_string())?;
    let first = ridge.first().ok_or("empty ridge")?;
    let last = ridge.last().ok_or("empty ridge")?;
    check(
        (first.frequency - 200.0).abs() <= 10.0,
        format!("ridge starts at {:.1} Hz", first.frequency),
    )?;
    check(
        (last.frequency - 1190.0).abs() <= 10.0,
        format!("ridge ends at {:.1} Hz", last.frequency),
    )?;
    if let Some(w) = ridge.windows(2).find(|w| w[1].frequency < w[0].frequency) {
        return Err(format!(
            "ridge falls {:.1} → {:.1} Hz at {:.3} s",
            w[0].frequency, w[1].frequency, w[1].time
        ));
    }
    // Least-squares slope of the ridge gives the sweep rate; the ramp spans
    // 990 Hz plus one 10 ms step.
    let n = ridge.len() as f64;
    let mt = ridge.iter().map(|p| p.time).sum::<f64>() / n;
    let mf = ridge.iter().map(|p| p.frequency).sum::<f64>() / n;
    let slope = ridge.iter().map(|p| (p.time - mt) * (p.frequency - mf)).sum::<f64>()
        / ridge.iter().map(|p| (p.time - mt).powi(2)).sum::<f64>();
    let span = 990.0 / slope + 0.01;
    check((span - 1.0).abs() <= 0.02, format!("sweep spans {span:.4} s"))?;
    Ok(format!(
        "{:.1} → {:.1} Hz, monotone over {} frames, span {span:.4} s",
        first.frequency,
        last.frequency,
        ridge.len()
    ))
}

/// Tuning to 3× the carrier recovers the same audio; 2× is silent.
fn harmonic_retune() -> Outcome {
    let rf = morse_rf("HELLO WORLD!");
    let cfg = TunerConfig::morse(carrier());
    let third = harmonic_retune_check(&rf, carrier(), 3, &cfg).map_err(|e| e.to_string())?;
    let second = harmonic_retune_check(&rf, carrier(), 2, &cfg).map_err(|e| e.to_string())?;
    check(
        third.correlation >= 0.9,
        format!("3x correlation {:.4}", third.correlation),
    )?;
    check(
        second.energy_ratio < 0.01,
        format!("2x energy ratio {:.3e}", second.energy_ratio),
    )?;
    Ok(format!(
        "3x correlation {:.4}, 2x energy ratio {:.2e}",
        third.correlation, second.energy_ratio
    ))
}

/// 8-bit PCM of a 440 Hz sine survives the chain; 85 µs pacing sets the
/// output length.
fn audio_fidelity() -> Outcome {
    let seconds = 0.5;
    let n = (seconds * PCM_RATE as f64) as usize;
    let source: Vec<f64> = (0..n)
        .map(|i| 0.8 * (2.0 * PI * 440.0 * i as f64 / PCM_RATE as f64).sin())
        .collect();
    let bytes = encode_u8(&source);
    let tx = TransmitterConfig::default();

    let stream = raw_pcm_to_stream(&bytes, &RawAudioConfig::default()).map_err(|e| e.to_string())?;
    let rf = am_transmit(&tx, &stream).map_err(|e| e.to_string())?;
    let audio = tune_am(&rf, &TunerConfig::wide(carrier()), AUDIO_RATE).map_err(|e| e.to_string())?;
    let reference: Vec<f64> = (0..audio.len())
        .map(|i| (2.0 * PI * 440.0 * i as f64 / AUDIO_RATE as f64).sin())
        .collect();
    let edge = AUDIO_RATE as usize / 20;
    let body = &audio.samples()[edge..audio.len() - edge];
    let (lag, r) = aligned_correlation(&reference[edge..], body, AUDIO_RATE as usize / 440);
    check(r >= 0.95, format!("correlation {r:.4}"))?;

    let paced = raw_pcm_to_stream(&bytes, &RawAudioConfig::listing()).map_err(|e| e.to_string())?;
    let paced_rf = am_transmit(&tx, &paced).map_err(|e| e.to_string())?;
    let expected_len = bytes.len() * 85;
    check(
        paced_rf.len() == expected_len,
        format!("85 µs pacing gave {} samples, want {expected_len}", paced_rf.len()),
    )?;
    check(
        paced_rf.duration() == bytes.len() as f64 * 85e-6,
        format!("85 µs pacing gave {} s", paced_rf.duration()),
    )?;
    Ok(format!(
        "correlation {r:.4} at lag {lag}; paced output {} s for {} bytes",
        paced_rf.duration(),
        bytes.len()
    ))
}

/// Antenna length at 31.25 MHz.
fn antenna() -> Outcome {
    let l = optimal_antenna_length(31.25).map_err(|e| e.to_string())?;
    check((l - 4.5632).abs() < 1e-4, format!("{l}"))?;
    check(format!("{l:.2}") == "4.56", format!("{l:.2}"))?;
    Ok(format!("{l:.4} m"))
}

/// Property suites: roundtrips, resampler tone preservation, harmonic
/// scale invariance, deterministic seeded outputs.
fn properties() -> Outcome {
    // Roundtrip over 200 random strings.
    let table = MorseTable::standard();
    let alphabet = table.alphabet();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..200 {
        let words = rng.random_range(1..=6);
        let text = (0..words)
            .map(|_| {
                let len = rng.random_range(1..=8);
                (0..len)
                    .map(|_| alphabet[rng.random_range(0..alphabet.len())])
                    .collect::<String>()
            })
            .collect::<Vec<_>>()
            .join(" ");
        let schedule = table
            .encode(&text, DEFAULT_DT, Timing::Canonical)
            .map_err(|e| e.to_string())?;
        let back = table.decode_keying(&schedule, Some(DEFAULT_DT)).text;
        check(back == text, format!("case {case}: {text:?} → {back:?}"))?;
    }

    // Resampler keeps tones within 1 Hz.
    for tone in [300.0, 600.0, 1000.0, 3000.0, 8000.0] {
        let sr = 48_000u32;
        let buf = SignalBuffer::new(
            (0..sr)
                .map(|i| (2.0 * PI * tone * i as f64 / sr as f64).sin())
                .collect(),
            sr,
        )
        .map_err(|e| e.to_string())?;
        let out = resample(&buf, 22_000).map_err(|e| e.to_string())?;
        let spec = picotx_core::analyze_spectrum_with(&out, out.len(), picotx_core::Window::Hann)
            .map_err(|e| e.to_string())?;
        let peak = spec.frequency_of(spec.peak_bin());
        check((peak - tone).abs() <= 1.0, format!("{tone} Hz came back at {peak} Hz"))?;
    }

    // Harmonic ratios at (f, sr) and (10f, 10sr).
    let ratios = |f: f64, sr: u32| -> Result<Vec<f64>, String> {
        let buf = generate_pwm(&PwmConfig::new(f, 0.5), 0.1, sr).map_err(|e| e.to_string())?;
        let spec = analyze_spectrum(&buf, buf.len()).map_err(|e| e.to_string())?;
        let h1 = measure_harmonic(&spec, f, 1).map_err(|e| e.to_string())?;
        [3, 5, 7]
            .iter()
            .map(|&n| measure_harmonic(&spec, f, n).map(|m| m / h1).map_err(|e| e.to_string()))
            .collect()
    };
    let a = ratios(1_000.0, 64_000)?;
    let b = ratios(10_000.0, 640_000)?;
    for (x, y) in a.iter().zip(&b) {
        check((x - y).abs() <= 1e-9, format!("ratios {a:?} vs {b:?}"))?;
    }

    // Fixed seeds give bit-identical pipeline outputs.
    let run = || -> Result<Vec<f64>, String> {
        let rf = morse_rf("SOS");
        let noisy = apply_channel(&rf, &ChannelConfig::with_snr(1.0, rf.rms(), 20.0, 77)).map_err(|e| e.to_string())?;
        Ok(tune_am(&noisy, &TunerConfig::morse(carrier()), AUDIO_RATE)
            .map_err(|e| e.to_string())?
            .into_samples())
    };
    let first = run()?;
    let second = run()?;
    check(
        first.iter().map(|x| x.to_bits()).eq(second.iter().map(|x| x.to_bits())),
        "seeded runs differ".into(),
    )?;
    Ok("200 roundtrips, 5 resampled tones, scale-invariant ratios, deterministic seeds".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("AC1 harmonic law 4/(nπ) at 125 kHz / 1 MS/s", harmonic_law),
        ("AC2 PARIS timing", paris_timing),
        ("AC3 Morse roundtrip at 20 dB SNR", morse_roundtrip),
        ("AC4 sweep ridge 200 → 1190 Hz", sweep_ridge),
        ("AC5 harmonic retune 3x / 2x", harmonic_retune),
        ("AC6 8-bit audio fidelity and pacing", audio_fidelity),
        ("AC7 antenna length", antenna),
        ("AC8 property suites", properties),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({secs:.2} s): {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name} ({secs:.2} s): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 8 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
