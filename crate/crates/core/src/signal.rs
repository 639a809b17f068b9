//! Sampled-signal primitives: rectangular PWM synthesis, the closed-form
//! Fourier series of the ±1 square wave, and single-sided amplitude spectra.

use std::f64::consts::PI;
use std::fmt;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{invalid, Error, Result};

/// Uniformly sampled real waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl SignalBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(invalid("sample_rate", "must be positive"));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    /// A buffer of `duration` seconds holding the constant `value`.
    pub fn constant(value: f64, duration: f64, sample_rate: u32) -> Result<Self> {
        let len = sample_count(duration, sample_rate)?;
        Self::new(vec![value; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Length in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|x| x * factor).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    /// Sub-buffer covering `start..end` sample indices, clamped to the buffer.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        let end = end.min(self.samples.len());
        let start = start.min(end);
        Self {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}

pub(crate) fn sample_count(duration: f64, sample_rate: u32) -> Result<usize> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(invalid("duration", format!("must be positive, got {duration}")));
    }
    Ok((duration * sample_rate as f64).round() as usize)
}

/// One rectangular PWM generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PwmConfig {
    pub frequency: f64,
    /// High-time fraction of each period, in `[0, 1]`.
    pub duty: f64,
    pub low_level: f64,
    pub high_level: f64,
    /// Start offset as a fraction of the period, in `[0, 1)`.
    pub phase: f64,
}

impl PwmConfig {
    /// A ±1 generator with zero phase.
    pub fn new(frequency: f64, duty: f64) -> Self {
        Self {
            frequency,
            duty,
            low_level: -1.0,
            high_level: 1.0,
            phase: 0.0,
        }
    }

    pub fn with_levels(mut self, low: f64, high: f64) -> Self {
        self.low_level = low;
        self.high_level = high;
        self
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    /// Converts a 16-bit duty register value (`duty_u16`) to a fraction.
    pub fn duty_from_u16(value: u16) -> f64 {
        value as f64 / 65536.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(invalid(
                "frequency",
                format!("must be positive, got {}", self.frequency),
            ));
        }
        if !(0.0..=1.0).contains(&self.duty) {
            return Err(invalid("duty", format!("must lie in [0, 1], got {}", self.duty)));
        }
        if !(0.0..1.0).contains(&self.phase) {
            return Err(invalid("phase", format!("must lie in [0, 1), got {}", self.phase)));
        }
        let degenerate = self.duty == 0.0 || self.duty == 1.0;
        if !degenerate && self.low_level >= self.high_level {
            return Err(invalid("levels", "low_level must be below high_level"));
        }
        Ok(())
    }

    /// Level of sample `index` at `sample_rate`. A sample is high iff the
    /// fractional period position lies strictly below `duty`.
    #[inline]
    pub fn sample(&self, index: u64, sample_rate: u32) -> f64 {
        let position = (index as f64 * self.frequency) / sample_rate as f64 + self.phase;
        if position - position.floor() < self.duty {
            self.high_level
        } else {
            self.low_level
        }
    }
}

/// Samples the rectangular wave described by `config`.
pub fn generate_pwm(config: &PwmConfig, duration: f64, sample_rate: u32) -> Result<SignalBuffer> {
    config.validate()?;
    check_nyquist(config.frequency, sample_rate)?;
    let len = sample_count(duration, sample_rate)?;
    let samples = (0..len as u64).map(|i| config.sample(i, sample_rate)).collect();
    SignalBuffer::new(samples, sample_rate)
}

pub(crate) fn check_nyquist(frequency: f64, sample_rate: u32) -> Result<()> {
    if sample_rate == 0 || 2.0 * frequency > sample_rate as f64 {
        return Err(Error::RateViolation {
            frequency,
            sample_rate: sample_rate as f64,
        });
    }
    Ok(())
}

/// Sine coefficient `b_n` of the ±1, 50%-duty square wave: `4/(nπ)` for odd
/// `n`, zero for even `n`.
pub fn rect_fourier_coefficient(n: u32) -> Result<f64> {
    match n {
        0 => Err(invalid("n", "harmonic index starts at 1")),
        n if n % 2 == 0 => Ok(0.0),
        n => Ok(4.0 / (n as f64 * PI)),
    }
}

/// Truncated Fourier series of the ±1 square wave at `freq`, keeping the odd
/// harmonics `1, 3, ..., 2·k_max+1`.
pub fn synthesize_partial_sum(freq: f64, k_max: u32, duration: f64, sample_rate: u32) -> Result<SignalBuffer> {
    if !(freq.is_finite() && freq > 0.0) {
        return Err(invalid("freq", format!("must be positive, got {freq}")));
    }
    let top = (2 * k_max as u64 + 1) as f64 * freq;
    check_nyquist(top, sample_rate)?;
    let len = sample_count(duration, sample_rate)?;
    let sr = sample_rate as f64;
    let samples = (0..len)
        .map(|i| {
            // Phase reduced to one period keeps the argument small for long buffers.
            let cycles = (i as f64 * freq) / sr;
            let theta = 2.0 * PI * (cycles - cycles.floor());
            (0..=k_max)
                .map(|k| {
                    let m = (2 * k + 1) as f64;
                    (m * theta).sin() / m
                })
                .sum::<f64>()
                * (4.0 / PI)
        })
        .collect();
    SignalBuffer::new(samples, sample_rate)
}

/// Analysis window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Rectangular,
    /// Periodic Hann.
    Hann,
}

impl Window {
    fn coefficient(self, n: usize, len: usize) -> f64 {
        match self {
            Window::Rectangular => 1.0,
            Window::Hann => 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos(),
        }
    }

    /// Mean window value; divides magnitudes so a bin-exact unit sine reads 1.
    pub fn coherent_gain(self) -> f64 {
        match self {
            Window::Rectangular => 1.0,
            Window::Hann => 0.5,
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Window::Rectangular => f.write_str("rectangular"),
            Window::Hann => f.write_str("hann"),
        }
    }
}

/// Single-sided amplitude spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    bin_magnitudes: Vec<f64>,
    bin_width: f64,
    window: Window,
    fft_length: usize,
}

impl Spectrum {
    pub fn bin_magnitudes(&self) -> &[f64] {
        &self.bin_magnitudes
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn fft_length(&self) -> usize {
        self.fft_length
    }

    pub fn frequency_of(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width
    }

    /// Highest frequency represented (the source's Nyquist frequency).
    pub fn max_frequency(&self) -> f64 {
        self.bin_width * (self.fft_length / 2) as f64
    }

    /// Bin index of the largest magnitude, ignoring DC.
    pub fn peak_bin(&self) -> usize {
        self.bin_magnitudes
            .iter()
            .enumerate()
            .skip(1)
            .fold(
                (0, f64::NEG_INFINITY),
                |best, (i, &m)| if m > best.1 { (i, m) } else { best },
            )
            .0
    }

    /// Mean signal power implied by the amplitudes: DC and Nyquist terms
    /// count fully, every other bin as a sinusoid (`A²/2`).
    pub fn power(&self) -> f64 {
        let last = self.bin_magnitudes.len() - 1;
        let nyquist_is_real = self.fft_length.is_multiple_of(2);
        self.bin_magnitudes
            .iter()
            .enumerate()
            .map(|(k, m)| {
                if k == 0 || (k == last && nyquist_is_real) {
                    m * m
                } else {
                    m * m / 2.0
                }
            })
            .sum()
    }

    /// `frequency_hz,magnitude` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frequency_hz,magnitude\n");
        for (k, m) in self.bin_magnitudes.iter().enumerate() {
            out.push_str(&format!("{},{}\n", self.frequency_of(k), m));
        }
        out
    }
}

/// Rectangular-window amplitude spectrum of the first `fft_length` samples.
pub fn analyze_spectrum(buf: &SignalBuffer, fft_length: usize) -> Result<Spectrum> {
    analyze_spectrum_with(buf, fft_length, Window::Rectangular)
}

pub fn analyze_spectrum_with(buf: &SignalBuffer, fft_length: usize, window: Window) -> Result<Spectrum> {
    if fft_length < 2 {
        return Err(invalid("fft_length", "must be at least 2"));
    }
    if fft_length > buf.len() {
        return Err(Error::FftTooLong {
            fft_length,
            available: buf.len(),
        });
    }
    let mut data: Vec<Complex<f64>> = buf.samples[..fft_length]
        .iter()
        .enumerate()
        .map(|(n, &x)| Complex::new(x * window.coefficient(n, fft_length), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(fft_length).process(&mut data);

    let scale = 1.0 / (fft_length as f64 * window.coherent_gain());
    let half = fft_length / 2;
    let bin_magnitudes = (0..=half)
        .map(|k| {
            let m = data[k].norm() * scale;
            if k == 0 || (k == half && fft_length.is_multiple_of(2)) {
                m
            } else {
                2.0 * m
            }
        })
        .collect();
    Ok(Spectrum {
        bin_magnitudes,
        bin_width: buf.sample_rate as f64 / fft_length as f64,
        window,
        fft_length,
    })
}

/// Magnitude at `n × fundamental`, refined by parabolic interpolation around
/// the strongest bin within one bin of the nominal position.
pub fn measure_harmonic(spec: &Spectrum, fundamental: f64, n: u32) -> Result<f64> {
    if !(fundamental.is_finite() && fundamental > 0.0) || n == 0 {
        return Err(invalid("fundamental", "fundamental and n must be positive"));
    }
    let target = fundamental * n as f64;
    let limit = spec.max_frequency();
    if target > limit {
        return Err(Error::HarmonicOutOfRange {
            frequency: target,
            limit,
        });
    }
    let mags = &spec.bin_magnitudes;
    let last = mags.len() - 1;
    let nominal = ((target / spec.bin_width).round() as usize).min(last);
    let lo = nominal.saturating_sub(1);
    let hi = (nominal + 1).min(last);
    let k = (lo..=hi).fold(nominal, |best, i| if mags[i] > mags[best] { i } else { best });
    if k == 0 || k == last {
        return Ok(mags[k]);
    }
    let (a, b, c) = (mags[k - 1], mags[k], mags[k + 1]);
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return Ok(b);
    }
    let p = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    Ok(b - 0.25 * (a - c) * p)
}
