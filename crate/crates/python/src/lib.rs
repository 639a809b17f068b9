//! Python bindings: `import picotx`.
//!
//! Buffers cross the boundary as lists of floats; every stage of the
//! transmit/receive chain is exposed as a function over them.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use picotx_core as core;
use picotx_core::morse::DecodeReport;
use picotx_core::{Agc, Error, MorseTable, Timing, TransmitterConfig, TunerConfig, Window};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Wav(_) => PyOSError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn timing(name: &str) -> PyResult<Timing> {
    match name {
        "canonical" => Ok(Timing::Canonical),
        "listing" => Ok(Timing::Listing),
        other => Err(PyValueError::new_err(format!("unknown timing {other:?}"))),
    }
}

fn agc(name: &str) -> PyResult<Agc> {
    match name {
        "off" => Ok(Agc::Off),
        "slow" => Ok(Agc::Slow),
        "medium" => Ok(Agc::Medium),
        other => Err(PyValueError::new_err(format!("unknown agc {other:?}"))),
    }
}

fn table(shuffle_seed: Option<u64>) -> MorseTable {
    match shuffle_seed {
        Some(seed) => MorseTable::standard().shuffled(seed),
        None => MorseTable::standard(),
    }
}

/// Uniformly sampled real signal.
#[pyclass(name = "SignalBuffer", module = "picotx", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySignal(core::SignalBuffer);

#[pymethods]
impl PySignal {
    #[new]
    fn new(samples: Vec<f64>, sample_rate: u32) -> PyResult<Self> {
        core::SignalBuffer::new(samples, sample_rate).map(Self).map_err(to_py)
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.0.samples().to_vec()
    }

    #[getter]
    fn sample_rate(&self) -> u32 {
        self.0.sample_rate()
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.0.duration()
    }

    fn rms(&self) -> f64 {
        self.0.rms()
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn slice(&self, start: usize, end: usize) -> PyResult<Self> {
        if start > end || end > self.0.len() {
            return Err(PyValueError::new_err(format!(
                "bad range {start}..{end} for {} samples",
                self.0.len()
            )));
        }
        Ok(Self(self.0.slice(start, end)))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "SignalBuffer(len={}, sample_rate={})",
            self.0.len(),
            self.0.sample_rate()
        )
    }
}

/// Single-sided amplitude spectrum.
#[pyclass(name = "Spectrum", module = "picotx", frozen, skip_from_py_object)]
struct PySpectrum(core::Spectrum);

#[pymethods]
impl PySpectrum {
    #[getter]
    fn magnitudes(&self) -> Vec<f64> {
        self.0.bin_magnitudes().to_vec()
    }

    #[getter]
    fn bin_width(&self) -> f64 {
        self.0.bin_width()
    }

    fn peak_frequency(&self) -> f64 {
        self.0.frequency_of(self.0.peak_bin())
    }

    fn power(&self) -> f64 {
        self.0.power()
    }

    /// Magnitude of harmonic `n` of `fundamental`.
    fn harmonic(&self, fundamental: f64, n: u32) -> PyResult<f64> {
        core::measure_harmonic(&self.0, fundamental, n).map_err(to_py)
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }
}

/// Morse on/off intervals.
#[pyclass(name = "KeyingSchedule", module = "picotx", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySchedule(core::KeyingSchedule);

#[pymethods]
impl PySchedule {
    /// `(level, seconds)` pairs, level 1 for tone on.
    #[getter]
    fn keys(&self) -> Vec<(u8, f64)> {
        self.0.keys().iter().map(|k| (k.level as u8, k.duration)).collect()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.0.dt()
    }

    fn total_duration(&self) -> f64 {
        self.0.total_duration()
    }

    fn total_units(&self) -> Option<u64> {
        self.0.total_units()
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Duty/hold commands for the modulator.
#[pyclass(name = "ModulationStream", module = "picotx", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyStream(core::ModulationStream);

#[pymethods]
impl PyStream {
    #[new]
    fn new(commands: Vec<(f64, f64)>) -> PyResult<Self> {
        core::ModulationStream::new(commands.into_iter().map(|(d, h)| core::DutyHold::new(d, h)).collect())
            .map(Self)
            .map_err(to_py)
    }

    /// `(duty, hold_seconds)` pairs.
    #[getter]
    fn commands(&self) -> Vec<(f64, f64)> {
        self.0.commands().iter().map(|c| (c.duty, c.hold)).collect()
    }

    fn duration(&self) -> f64 {
        self.0.duration()
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyfunction]
#[pyo3(signature = (frequency, duty, duration, sample_rate, phase = 0.0))]
fn generate_pwm(frequency: f64, duty: f64, duration: f64, sample_rate: u32, phase: f64) -> PyResult<PySignal> {
    let cfg = core::PwmConfig::new(frequency, duty).with_phase(phase);
    core::generate_pwm(&cfg, duration, sample_rate)
        .map(PySignal)
        .map_err(to_py)
}

#[pyfunction]
fn rect_fourier_coefficient(n: u32) -> PyResult<f64> {
    core::rect_fourier_coefficient(n).map_err(to_py)
}

#[pyfunction]
fn synthesize_partial_sum(frequency: f64, k_max: u32, duration: f64, sample_rate: u32) -> PyResult<PySignal> {
    core::synthesize_partial_sum(frequency, k_max, duration, sample_rate)
        .map(PySignal)
        .map_err(to_py)
}

/// Spectrum of `buf`; `fft_length` defaults to the buffer length.
#[pyfunction]
#[pyo3(signature = (buf, fft_length = None, window = "rect"))]
fn analyze_spectrum(buf: PyRef<'_, PySignal>, fft_length: Option<usize>, window: &str) -> PyResult<PySpectrum> {
    let window = match window {
        "rect" | "rectangular" => Window::Rectangular,
        "hann" => Window::Hann,
        other => return Err(PyValueError::new_err(format!("unknown window {other:?}"))),
    };
    core::analyze_spectrum_with(&buf.0, fft_length.unwrap_or(buf.0.len()), window)
        .map(PySpectrum)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (text, dt = core::morse::DEFAULT_DT, timing = "canonical", shuffle_seed = None))]
fn encode_morse(text: &str, dt: f64, timing: &str, shuffle_seed: Option<u64>) -> PyResult<PySchedule> {
    table(shuffle_seed)
        .encode(text, dt, self::timing(timing)?)
        .map(PySchedule)
        .map_err(to_py)
}

/// Per-character unit totals, e.g. `[('P', 14), ('A', 8), ...]` for PARIS.
#[pyfunction]
#[pyo3(signature = (text, timing = "canonical"))]
fn character_totals(text: &str, timing: &str) -> PyResult<Vec<(char, u32)>> {
    MorseTable::standard()
        .character_totals(text, self::timing(timing)?)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (schedule, dt = None, shuffle_seed = None))]
fn decode_keying(schedule: PyRef<'_, PySchedule>, dt: Option<f64>, shuffle_seed: Option<u64>) -> String {
    table(shuffle_seed).decode_keying(&schedule.0, dt).text
}

/// Detects a keyed `tone` in `audio` and decodes it. Returns the text.
#[pyfunction]
#[pyo3(signature = (audio, tone = core::morse::DEFAULT_TONE, dt = None, shuffle_seed = None))]
fn decode_audio(audio: PyRef<'_, PySignal>, tone: f64, dt: Option<f64>, shuffle_seed: Option<u64>) -> PyResult<String> {
    core::morse::decode_audio_report(&table(shuffle_seed), &audio.0, tone, dt)
        .map(|r: DecodeReport| r.text)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (steps = 100, base = 200.0, increment = 10.0, hold = 0.01, tone_duty = 0.5))]
fn sweep_stream(steps: u32, base: f64, increment: f64, hold: f64, tone_duty: f64) -> PyResult<PyStream> {
    core::sweep_stream(steps, base, increment, hold, tone_duty)
        .map(PyStream)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (schedule, tone = core::morse::DEFAULT_TONE, tone_duty = 0.5))]
fn keying_to_stream(schedule: PyRef<'_, PySchedule>, tone: f64, tone_duty: f64) -> PyResult<PyStream> {
    core::keying_to_stream(&schedule.0, tone, tone_duty)
        .map(PyStream)
        .map_err(to_py)
}

/// Unsigned 8-bit PCM to modulator commands; `pacing_us` overrides the
/// per-sample hold.
#[pyfunction]
#[pyo3(signature = (data, sample_rate = core::sources::PCM_RATE, pacing_us = None))]
fn raw_pcm_to_stream(data: &[u8], sample_rate: u32, pacing_us: Option<f64>) -> PyResult<PyStream> {
    let cfg = match pacing_us {
        Some(us) => core::RawAudioConfig {
            sample_rate,
            pacing: us * 1e-6,
        },
        None => core::RawAudioConfig::faithful(sample_rate),
    };
    core::raw_pcm_to_stream(data, &cfg).map(PyStream).map_err(to_py)
}

/// Sequencer text (export or bare records) to modulator commands.
#[pyfunction]
#[pyo3(signature = (text, tick_seconds = core::sources::TICK_SECONDS, arpeggio_rate = core::sources::ARPEGGIO_RATE))]
fn sequence_to_stream(text: &str, tick_seconds: f64, arpeggio_rate: f64) -> PyResult<PyStream> {
    let text = text.trim_end();
    let body = if text.starts_with("Online Sequencer:") {
        core::sources::strip_export_envelope(text)
    } else {
        text
    };
    let events = core::parse_sequence(body).map_err(to_py)?;
    core::sequence_to_stream(&events, tick_seconds, arpeggio_rate)
        .map(PyStream)
        .map_err(to_py)
}

#[pyfunction]
fn note_to_frequency(pitch: &str) -> PyResult<f64> {
    core::note_to_frequency(pitch).map_err(to_py)
}

/// Renders the stream on a `31.25 MHz / scale` carrier at `rf_rate`.
#[pyfunction]
#[pyo3(signature = (stream, scale = 250.0, rf_rate = 1_000_000, coupling_tau = 1e-3))]
fn am_transmit(stream: PyRef<'_, PyStream>, scale: f64, rf_rate: u32, coupling_tau: f64) -> PyResult<PySignal> {
    let base = TransmitterConfig::scaled(scale, rf_rate).map_err(to_py)?;
    let cfg = TransmitterConfig::new(base.carrier, coupling_tau, rf_rate).map_err(to_py)?;
    core::am_transmit(&cfg, &stream.0).map(PySignal).map_err(to_py)
}

/// Gain plus seeded white noise, either at `noise_rms` or at `snr_db`
/// against the signal after gain.
#[pyfunction]
#[pyo3(signature = (rf, gain = 1.0, noise_rms = 0.0, snr_db = None, seed = 0))]
fn apply_channel(
    rf: PyRef<'_, PySignal>,
    gain: f64,
    noise_rms: f64,
    snr_db: Option<f64>,
    seed: u64,
) -> PyResult<PySignal> {
    let cfg = match snr_db {
        Some(snr) => core::ChannelConfig::with_snr(gain, rf.0.rms(), snr, seed),
        None => core::ChannelConfig::new(gain, noise_rms, seed),
    };
    core::apply_channel(&rf.0, &cfg).map(PySignal).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (rf, center_frequency, bandwidth = 3000.0, audio_rate = 48_000, agc = "off"))]
fn tune_am(
    rf: PyRef<'_, PySignal>,
    center_frequency: f64,
    bandwidth: f64,
    audio_rate: u32,
    agc: &str,
) -> PyResult<PySignal> {
    let cfg = TunerConfig::new(center_frequency, bandwidth, self::agc(agc)?);
    core::tune_am(&rf.0, &cfg, audio_rate).map(PySignal).map_err(to_py)
}

/// `(correlation, energy_ratio)` of the audio at `multiple × base` against
/// the audio at `base`.
#[pyfunction]
#[pyo3(signature = (rf, base, multiple, bandwidth = 3000.0))]
fn harmonic_retune_check(rf: PyRef<'_, PySignal>, base: f64, multiple: u32, bandwidth: f64) -> PyResult<(f64, f64)> {
    let r = core::harmonic_retune_check(&rf.0, base, multiple, &TunerConfig::new(base, bandwidth, Agc::Off))
        .map_err(to_py)?;
    Ok((r.correlation, r.energy_ratio))
}

#[pyfunction]
fn resample(buf: PyRef<'_, PySignal>, out_rate: u32) -> PyResult<PySignal> {
    core::resample(&buf.0, out_rate).map(PySignal).map_err(to_py)
}

#[pyfunction]
fn optimal_antenna_length(carrier_mhz: f64) -> PyResult<f64> {
    core::optimal_antenna_length(carrier_mhz).map_err(to_py)
}

#[pyfunction]
fn read_wav(path: &str) -> PyResult<PySignal> {
    core::io::read_wav(path).map(PySignal).map_err(to_py)
}

#[pyfunction]
fn write_wav(path: &str, buf: PyRef<'_, PySignal>) -> PyResult<()> {
    core::io::write_wav(path, &buf.0).map_err(to_py)
}

#[pymodule]
fn picotx(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySignal>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PySchedule>()?;
    m.add_class::<PyStream>()?;
    m.add_function(wrap_pyfunction!(generate_pwm, m)?)?;
    m.add_function(wrap_pyfunction!(rect_fourier_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_partial_sum, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(encode_morse, m)?)?;
    m.add_function(wrap_pyfunction!(character_totals, m)?)?;
    m.add_function(wrap_pyfunction!(decode_keying, m)?)?;
    m.add_function(wrap_pyfunction!(decode_audio, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_stream, m)?)?;
    m.add_function(wrap_pyfunction!(keying_to_stream, m)?)?;
    m.add_function(wrap_pyfunction!(raw_pcm_to_stream, m)?)?;
    m.add_function(wrap_pyfunction!(sequence_to_stream, m)?)?;
    m.add_function(wrap_pyfunction!(note_to_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(am_transmit, m)?)?;
    m.add_function(wrap_pyfunction!(apply_channel, m)?)?;
    m.add_function(wrap_pyfunction!(tune_am, m)?)?;
    m.add_function(wrap_pyfunction!(harmonic_retune_check, m)?)?;
    m.add_function(wrap_pyfunction!(resample, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_antenna_length, m)?)?;
    m.add_function(wrap_pyfunction!(read_wav, m)?)?;
    m.add_function(wrap_pyfunction!(write_wav, m)?)?;
    m.add("CARRIER_HZ", core::transmitter::CARRIER_HZ)?;
    m.add("AUDIO_RATE", core::receiver::AUDIO_RATE)?;
    m.add("DECODER_RATE", core::receiver::DECODER_RATE)?;
    Ok(())
}
