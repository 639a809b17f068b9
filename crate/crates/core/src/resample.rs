//! Rational sample-rate conversion with a Kaiser-windowed sinc prototype.

use crate::error::{invalid, Result};
use crate::fir::design_lowpass;
use crate::signal::SignalBuffer;

const STOPBAND_DB: f64 = 70.0;
/// Passband edge as a fraction of the lower Nyquist frequency.
const PASSBAND_FRACTION: f64 = 0.9;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Converts between two integer sample rates by the ratio `up/down`.
#[derive(Debug, Clone)]
pub struct Resampler {
    in_rate: u32,
    out_rate: u32,
    up: usize,
    down: usize,
    prototype: Vec<f64>,
    /// DC gain of each polyphase branch; outputs are divided by it so a
    /// constant input maps to the same constant.
    branch_gain: Vec<f64>,
}

impl Resampler {
    pub fn new(in_rate: u32, out_rate: u32) -> Result<Self> {
        if in_rate == 0 || out_rate == 0 {
            return Err(invalid("sample_rate", "rates must be positive"));
        }
        let g = gcd(in_rate as u64, out_rate as u64);
        let up = (out_rate as u64 / g) as usize;
        let down = (in_rate as u64 / g) as usize;

        let proto_rate = in_rate as f64 * up as f64;
        let nyquist = 0.5 * in_rate.min(out_rate) as f64;
        let pass = PASSBAND_FRACTION * nyquist;
        let prototype = if up == 1 && down == 1 {
            vec![1.0]
        } else {
            design_lowpass(pass / proto_rate, (nyquist - pass) / proto_rate, STOPBAND_DB)
        };
        let half = prototype.len() / 2;
        let branch_gain = (0..up)
            .map(|phase| {
                let mut sum = 0.0;
                // Taps half + phase - q·up for every integer q in range.
                let mut idx = (half + phase) % up;
                while idx < prototype.len() {
                    sum += prototype[idx];
                    idx += up;
                }
                sum
            })
            .collect();
        Ok(Self {
            in_rate,
            out_rate,
            up,
            down,
            prototype,
            branch_gain,
        })
    }

    /// Interpolation and decimation factors.
    pub fn ratio(&self) -> (usize, usize) {
        (self.up, self.down)
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        let num = input_len as u128 * self.up as u128;
        ((2 * num + self.down as u128) / (2 * self.down as u128)) as usize
    }

    /// Resamples a whole block. Samples beyond either end repeat the edge
    /// value.
    pub fn process(&self, input: &[f64]) -> Vec<f64> {
        if input.is_empty() {
            return Vec::new();
        }
        if self.up == self.down {
            return input.to_vec();
        }
        let up = self.up as i64;
        let half = (self.prototype.len() / 2) as i64;
        let last = input.len() as i64 - 1;
        (0..self.output_len(input.len()))
            .map(|j| {
                let pos = j as i64 * self.down as i64;
                let phase = pos.rem_euclid(up) as usize;
                let m_lo = (pos - half).div_euclid(up) + i64::from((pos - half).rem_euclid(up) != 0);
                let m_hi = (pos + half).div_euclid(up);
                let mut acc = 0.0;
                for m in m_lo..=m_hi {
                    let tap = self.prototype[(half + pos - m * up) as usize];
                    acc += tap * input[m.clamp(0, last) as usize];
                }
                acc / self.branch_gain[phase]
            })
            .collect()
    }

    pub fn in_rate(&self) -> u32 {
        self.in_rate
    }

    pub fn out_rate(&self) -> u32 {
        self.out_rate
    }
}

/// Converts `audio` to `out_rate` with anti-alias filtering.
pub fn resample(audio: &SignalBuffer, out_rate: u32) -> Result<SignalBuffer> {
    let resampler = Resampler::new(audio.sample_rate(), out_rate)?;
    SignalBuffer::new(resampler.process(audio.samples()), out_rate)
}
