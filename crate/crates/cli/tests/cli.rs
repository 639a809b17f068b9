use std::f64::consts::PI;
use std::io::{BufRead, BufReader};
use std::net::UdpSocket;
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

use picotx_core::analysis::spectrogram_ridge;
use picotx_core::io::{encode_u8, read_wav};
use picotx_core::{analyze_spectrum_with, Window};

fn picotx() -> Command {
    Command::new(env!("CARGO_BIN_EXE_picotx"))
}

fn run(args: &[&str]) -> Output {
    picotx().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn spectrum_matches_square_wave_series() {
    let o = run(&["spectrum"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("harmonic,measured,theoretical,rel_error\n"));
    let rows = rows(&out);
    assert_eq!(rows.len(), 7);
    let measured = |n: usize| rows[n - 1][1].parse::<f64>().unwrap();
    assert!(rows[0][3].parse::<f64>().unwrap().abs() < 0.02);
    assert_eq!(rows[1][2], "0.000000");
    assert!(measured(2) < 0.01);
    assert!((measured(3) / measured(1) * 3.0 - 1.0).abs() < 0.02);
}

#[test]
fn spectrum_rejects_harmonics_above_nyquist_before_printing() {
    let o = run(&["spectrum", "--rate", "1000000", "--harmonics", "7"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    assert!(stderr(&o).contains("625000"));
}

#[test]
fn spectrum_reads_rf_files() {
    let dir = tempfile::tempdir().unwrap();
    let rf = dir.path().join("rf.wav");
    let o = run(&["sweep", "--steps", "5", "--out", p(&rf)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["spectrum", p(&rf)]);
    assert!(o.status.success(), "{}", stderr(&o));
    // 125 kHz at 1 MS/s: harmonics 1..=4 fit.
    assert_eq!(rows(&stdout(&o)).len(), 4);
    assert_eq!(
        run(&["spectrum", p(&dir.path().join("missing.wav"))]).status.code(),
        Some(2)
    );
}

#[test]
fn verbose_morse_prints_unit_patterns() {
    let o = run(&["morse-tx", "PARIS", "--verbose", "--schedule", "/dev/null"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "P='.--.', 1131311, 3 (14 time units)\n\
         A='.-', 113, 3 (8 time units)\n\
         R='.-.', 11311, 3 (10 time units)\n\
         I='..', 111, 3 (6 time units)\n\
         S='...', 11111, 7 (12 time units)\n"
    );
}

#[test]
fn morse_schedule_csv_and_edge_cases() {
    let o = run(&["morse-tx", "E"]);
    assert!(o.status.success());
    let keys: Vec<(String, f64)> = rows(&stdout(&o))
        .into_iter()
        .map(|r| (r[0].clone(), r[1].parse().unwrap()))
        .collect();
    assert_eq!(keys.len(), 2);
    assert!(keys[0].0 == "1" && (keys[0].1 - 0.05).abs() < 1e-12);
    assert!(keys[1].0 == "0" && (keys[1].1 - 0.35).abs() < 1e-12);

    let o = run(&["morse-tx", ""]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());

    let o = run(&["morse-tx", "A~B"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("'~'"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["sweep", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn rate_mismatch_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rf.wav");
    // 125 kHz ± 500 kHz does not fit a 1 MS/s simulation.
    let o = run(&["sweep", "--bandwidth", "1000000", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
    let o = run(&["sweep", "--scale", "50", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1), "625 kHz carrier at 1 MS/s");
    assert!(!out.exists());
}

#[test]
fn single_step_sweep_is_one_tone() {
    let o = run(&["sweep", "--steps", "1"]);
    assert!(o.status.success());
    let rows = rows(&stdout(&o));
    assert_eq!(rows.len(), 4);
    assert!(rows
        .iter()
        .all(|r| (r[1].parse::<f64>().unwrap() - 0.0025).abs() < 1e-12));
}

#[test]
fn default_sweep_ramps_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.wav"), dir.path().join("b.wav"));
    for path in [&a, &b] {
        let o = run(&["sweep", "--snr-db", "30", "--seed", "4", "--demodulate", p(path)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let audio = read_wav(&a).unwrap();
    let ridge = spectrogram_ridge(&audio, 0.02, 0.01, 1 << 16, 100.0, 2000.0).unwrap();
    assert!((ridge[0].frequency - 200.0).abs() < 10.0);
    assert!((ridge.last().unwrap().frequency - 1190.0).abs() < 10.0);
}

#[test]
fn play_raw_audio_and_pacing() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("tone.raw");
    let sine: Vec<f64> = (0..8000)
        .map(|i| 0.8 * (2.0 * PI * 440.0 * i as f64 / 16_000.0).sin())
        .collect();
    std::fs::write(&raw, encode_u8(&sine)).unwrap();

    let audio_path = dir.path().join("audio.wav");
    let o = run(&["play", p(&raw), "--demodulate", p(&audio_path)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let audio = read_wav(&audio_path).unwrap();
    let spec = analyze_spectrum_with(&audio, audio.len(), Window::Hann).unwrap();
    assert!((spec.frequency_of(spec.peak_bin()) - 440.0).abs() <= 2.0);

    let rf_path = dir.path().join("rf.wav");
    let o = run(&["play", p(&raw), "--pacing-us", "85", "--out", p(&rf_path)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_wav(&rf_path).unwrap().len(), 8000 * 85);
}

#[test]
fn play_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("song.txt");
    std::fs::write(&seq, "Online Sequencer:1234567:0 A4 4 0;4 E5 4 0;:").unwrap();
    let o = run(&["play", p(&seq)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let total: f64 = rows(&stdout(&o)).iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!((total - 0.32).abs() < 1e-9);

    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "").unwrap();
    let wav = dir.path().join("empty.wav");
    let o = run(&["play", p(&empty), "--demodulate", p(&wav)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_wav(&wav).unwrap().len(), 0);

    std::fs::write(&seq, "0 A4 4 0;4 H9 4 0").unwrap();
    let o = run(&["play", p(&seq)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("H9"), "{}", stderr(&o));

    let odd = dir.path().join("odd.u16");
    std::fs::write(&odd, [1u8, 2, 3]).unwrap();
    let o = run(&["play", p(&odd)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("offset 2"), "{}", stderr(&o));

    assert_eq!(run(&["play", p(&dir.path().join("nope.raw"))]).status.code(), Some(2));
}

/// Starts a listener on a free loopback port and waits until it is bound.
fn start_listener(extra: &[&str]) -> (Child, u16, std::thread::JoinHandle<String>) {
    let port = UdpSocket::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = picotx()
        .args([
            "listen",
            "--bind",
            "127.0.0.1",
            "--port",
            &port.to_string(),
            "--idle-timeout",
            "1",
        ])
        .args(["--max-seconds", "60"])
        .args(extra)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut err = BufReader::new(child.stderr.take().unwrap());
    let mut line = String::new();
    err.read_line(&mut line).unwrap();
    assert!(line.starts_with("listening on"), "{line}");
    // Keep draining stderr so the child never blocks on it.
    let log = std::thread::spawn(move || {
        let mut rest = String::new();
        std::io::Read::read_to_string(&mut err, &mut rest).unwrap();
        rest
    });
    (child, port, log)
}

fn send(text: &str, port: u16, extra: &[&str]) {
    let target = format!("127.0.0.1:{port}");
    let o = run(&[&["morse-tx", text, "--udp", &target, "--udp-speed", "8"], extra].concat());
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn loopback_morse_roundtrip() {
    let (child, port, _) = start_listener(&[]);
    send("Hello World!", port, &["--snr-db", "20", "--seed", "11"]);
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out), "HELLO WORLD!\n");
}

#[test]
fn shuffled_table_needs_the_same_seed() {
    let (same, port, _) = start_listener(&["--shuffle-seed", "7"]);
    send("SECRET", port, &["--shuffle-seed", "7"]);
    assert_eq!(stdout(&same.wait_with_output().unwrap()), "SECRET\n");

    let (plain, port, _) = start_listener(&[]);
    send("SECRET", port, &["--shuffle-seed", "7"]);
    assert_ne!(stdout(&plain.wait_with_output().unwrap()), "SECRET\n");
}

#[test]
fn silence_and_malformed_datagrams() {
    let (child, port, log) = start_listener(&[]);
    let socket = UdpSocket::bind("127.0.0.1:0").unwrap();
    for _ in 0..20 {
        socket.send_to(&[0u8; 2048], ("127.0.0.1", port)).unwrap();
    }
    socket.send_to(&[1u8; 3], ("127.0.0.1", port)).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    assert!(log.join().unwrap().contains("skipped 1 malformed"));
}

#[test]
fn listen_bind_failure_is_io() {
    let taken = UdpSocket::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let o = run(&["listen", "--bind", "127.0.0.1", "--port", &port, "--max-seconds", "1"]);
    assert_eq!(o.status.code(), Some(2));
}
