//! Windowed-sinc FIR design (Kaiser window) and zero-delay filtering helpers
//! shared by the receiver and the resampler.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= (half / k as f64).powi(2);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

pub(crate) fn kaiser_beta(atten_db: f64) -> f64 {
    if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    }
}

/// Odd tap count meeting `atten_db` over a transition band of
/// `transition` cycles/sample.
pub(crate) fn kaiser_length(atten_db: f64, transition: f64) -> usize {
    let n = ((atten_db - 7.95) / (2.285 * 2.0 * PI * transition)).ceil().max(1.0) as usize;
    n | 1
}

/// Kaiser window of `len` points.
pub(crate) fn kaiser_window(len: usize, beta: f64) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = bessel_i0(beta);
    let m = (len - 1) as f64;
    (0..len)
        .map(|n| {
            let r = 2.0 * n as f64 / m - 1.0;
            bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / denom
        })
        .collect()
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Linear-phase low-pass with unity DC gain.
///
/// `cutoff` and `transition` are in cycles/sample; `cutoff` is the
/// passband edge and the stopband starts at `cutoff + transition`.
pub fn design_lowpass(cutoff: f64, transition: f64, atten_db: f64) -> Vec<f64> {
    let len = kaiser_length(atten_db, transition);
    let window = kaiser_window(len, kaiser_beta(atten_db));
    let center = (len / 2) as f64;
    let edge = cutoff + transition / 2.0;
    let mut taps: Vec<f64> = window
        .iter()
        .enumerate()
        .map(|(n, w)| 2.0 * edge * sinc(2.0 * edge * (n as f64 - center)) * w)
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Applies an odd-length linear-phase filter with its delay removed: output
/// sample `n` is centered on input sample `n`. Inputs outside the signal are
/// zero. Long filters go through an FFT.
pub fn filter_centered(input: &[Complex<f64>], taps: &[f64]) -> Vec<Complex<f64>> {
    if input.is_empty() {
        return Vec::new();
    }
    if taps.len() <= 96 {
        return filter_direct(input, taps);
    }
    let full = input.len() + taps.len() - 1;
    let size = full.next_power_of_two();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let mut x: Vec<Complex<f64>> = input.to_vec();
    x.resize(size, Complex::default());
    let mut h: Vec<Complex<f64>> = taps.iter().map(|&t| Complex::new(t, 0.0)).collect();
    h.resize(size, Complex::default());
    forward.process(&mut x);
    forward.process(&mut h);
    let scale = 1.0 / size as f64;
    x.iter_mut().zip(&h).for_each(|(a, b)| *a *= b * scale);
    inverse.process(&mut x);

    let delay = taps.len() / 2;
    x[delay..delay + input.len()].to_vec()
}

fn filter_direct(input: &[Complex<f64>], taps: &[f64]) -> Vec<Complex<f64>> {
    let delay = (taps.len() / 2) as isize;
    let len = input.len() as isize;
    (0..len)
        .map(|n| {
            let mut acc = Complex::default();
            for (k, &t) in taps.iter().enumerate() {
                let idx = n + delay - k as isize;
                if (0..len).contains(&idx) {
                    acc += input[idx as usize] * t;
                }
            }
            acc
        })
        .collect()
}

/// Streaming mixer + decimating low-pass: shifts `center` Hz to DC with a
/// complex oscillator, filters and keeps every `factor`-th sample. Output
/// sample `j` is centered on input sample `j·factor`; state carries across
/// calls to [`Downconverter::process`].
#[derive(Debug, Clone)]
pub struct Downconverter {
    taps: Vec<f64>,
    factor: usize,
    /// Cycles per input sample of the local oscillator.
    step: f64,
    /// Mixed samples still reachable by future outputs.
    history: Vec<Complex<f64>>,
    base: u64,
    consumed: u64,
    next_output: u64,
}

impl Downconverter {
    pub fn new(center: f64, sample_rate: u32, factor: usize, taps: Vec<f64>) -> Self {
        assert!(factor >= 1 && taps.len() % 2 == 1);
        let half = taps.len() / 2;
        Self {
            taps,
            factor,
            step: center / sample_rate as f64,
            history: vec![Complex::default(); half],
            base: 0,
            consumed: 0,
            next_output: 0,
        }
    }

    fn mix(&self, index: u64, x: f64) -> Complex<f64> {
        let cycles = index as f64 * self.step;
        let theta = -2.0 * PI * (cycles - cycles.floor());
        Complex::from_polar(x, theta)
    }

    /// Pushes RF samples and returns every output whose taps are now filled.
    pub fn process(&mut self, input: &[f64]) -> Vec<Complex<f64>> {
        for &x in input {
            let z = self.mix(self.consumed, x);
            self.history.push(z);
            self.consumed += 1;
        }
        self.drain(false)
    }

    /// Flushes outputs that need samples past the end (treated as zero).
    pub fn finish(&mut self) -> Vec<Complex<f64>> {
        self.drain(true)
    }

    fn drain(&mut self, flush: bool) -> Vec<Complex<f64>> {
        // history[i] holds the mixed sample at absolute index base + i - half.
        let half = (self.taps.len() / 2) as u64;
        let mut out = Vec::new();
        loop {
            let center = self.next_output * self.factor as u64;
            if center >= self.consumed || (!flush && center + half >= self.consumed) {
                break;
            }
            let start = (center - self.base) as usize;
            let mut acc = Complex::default();
            for (k, &t) in self.taps.iter().rev().enumerate() {
                if let Some(z) = self.history.get(start + k) {
                    acc += z * t;
                }
            }
            out.push(acc);
            self.next_output += 1;
        }
        let center = self.next_output * self.factor as u64;
        let drop = (center.saturating_sub(self.base) as usize).min(self.history.len());
        if drop > 0 {
            self.history.drain(..drop);
            self.base += drop as u64;
        }
        out
    }
}
