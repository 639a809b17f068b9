//! Measurement helpers used to check pipeline outputs: correlation, lag
//! alignment and spectrogram peak tracking.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{invalid, Result};
use crate::signal::SignalBuffer;

/// Pearson correlation over the common prefix of `a` and `b`. Zero when
/// either side has no variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let (a, b) = (&a[..n], &b[..n]);
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Best correlation of `signal` against `reference` over lags
/// `0..=max_lag` samples (signal delayed relative to reference).
/// Returns `(lag, correlation)`.
pub fn aligned_correlation(reference: &[f64], signal: &[f64], max_lag: usize) -> (usize, f64) {
    (0..=max_lag.min(signal.len()))
        .map(|lag| (lag, pearson(reference, &signal[lag..])))
        .fold(
            (0, f64::NEG_INFINITY),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        )
}

/// One spectrogram frame's dominant frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgePoint {
    /// Frame center, seconds.
    pub time: f64,
    pub frequency: f64,
    pub magnitude: f64,
}

/// Peak frequency of each Hann-windowed frame of `window` seconds, advanced
/// by `hop` seconds, searched within `min_freq..=max_freq`. Frames are zero
/// padded to `fft_len` and the peak refined by parabolic interpolation.
pub fn spectrogram_ridge(
    buf: &SignalBuffer,
    window: f64,
    hop: f64,
    fft_len: usize,
    min_freq: f64,
    max_freq: f64,
) -> Result<Vec<RidgePoint>> {
    let rate = buf.sample_rate() as f64;
    let win = (window * rate).round() as usize;
    let step = (hop * rate).round() as usize;
    if win < 2 || step == 0 || fft_len < win {
        return Err(invalid("window", "window, hop and fft length are inconsistent"));
    }
    let fft = FftPlanner::new().plan_fft_forward(fft_len);
    let taper: Vec<f64> = (0..win)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / win as f64).cos())
        .collect();
    let bin_width = rate / fft_len as f64;
    let lo = ((min_freq / bin_width).floor() as usize).max(1);
    let hi = ((max_freq / bin_width).ceil() as usize).min(fft_len / 2 - 1);

    let samples = buf.samples();
    let mut out = Vec::new();
    let mut start = 0;
    let mut frame = vec![Complex::default(); fft_len];
    while start + win <= samples.len() {
        frame.iter_mut().for_each(|z| *z = Complex::default());
        for (n, (z, x)) in frame.iter_mut().zip(&samples[start..start + win]).enumerate() {
            z.re = x * taper[n];
        }
        fft.process(&mut frame);
        let mags: Vec<f64> = frame.iter().map(|z| z.norm()).collect();
        let k = (lo..=hi).fold(lo, |best, i| if mags[i] > mags[best] { i } else { best });
        let (a, b, c) = (mags[k - 1], mags[k], mags[k + 1]);
        let denom = a - 2.0 * b + c;
        let p = if denom < 0.0 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        out.push(RidgePoint {
            time: (start as f64 + win as f64 / 2.0) / rate,
            frequency: (k as f64 + p) * bin_width,
            magnitude: 2.0 * (b - 0.25 * (a - c) * p) / (0.5 * win as f64),
        });
        start += step;
    }
    Ok(out)
}

/// First and last sample whose smoothed magnitude exceeds `fraction` of the
/// smoothed peak; smoothing is a moving average over `smooth` seconds.
pub fn active_span(buf: &SignalBuffer, smooth: f64, fraction: f64) -> Option<(f64, f64)> {
    let rate = buf.sample_rate() as f64;
    let w = ((smooth * rate).round() as usize).max(1);
    let samples = buf.samples();
    if samples.len() < w {
        return None;
    }
    let mut level = Vec::with_capacity(samples.len());
    let mut acc: f64 = samples[..w].iter().map(|x| x.abs()).sum();
    level.push(acc / w as f64);
    for i in w..samples.len() {
        acc += samples[i].abs() - samples[i - w].abs();
        level.push(acc / w as f64);
    }
    let peak = level.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return None;
    }
    let first = level.iter().position(|&l| l > fraction * peak)?;
    let last = level.iter().rposition(|&l| l > fraction * peak)?;
    // Each level value averages samples i..i+w; report window centers.
    let half = w as f64 / 2.0;
    Some(((first as f64 + half) / rate, (last as f64 + half) / rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pearson_basics() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&a, &[2.0, 4.0, 6.0, 8.0]) - 1.0).abs() < 1e-12);
        assert!((pearson(&a, &[-1.0, -2.0, -3.0, -4.0]) + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&a, &[1.0; 4]), 0.0);
        assert_eq!(pearson(&[], &[]), 0.0);
    }

    #[test]
    fn alignment_finds_delay() {
        let x: Vec<f64> = (0..2000).map(|i| ((i * i) % 97) as f64).collect();
        let delayed: Vec<f64> = std::iter::repeat_n(0.0, 37).chain(x.iter().cloned()).collect();
        let (lag, r) = aligned_correlation(&x, &delayed, 100);
        assert_eq!(lag, 37);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ridge_tracks_steady_tone() {
        let sr = 48_000;
        let buf = SignalBuffer::new(
            (0..sr)
                .map(|i| (2.0 * PI * 523.0 * i as f64 / sr as f64).sin())
                .collect(),
            sr as u32,
        )
        .unwrap();
        let ridge = spectrogram_ridge(&buf, 0.02, 0.01, 1 << 15, 100.0, 2000.0).unwrap();
        assert_eq!(ridge.len(), 99);
        assert!(ridge.iter().all(|p| (p.frequency - 523.0).abs() < 3.0));
    }

    #[test]
    fn span_of_burst() {
        let sr = 1000u32;
        let mut s = vec![0.0; 3000];
        s[1000..2000].iter_mut().for_each(|x| *x = 1.0);
        let buf = SignalBuffer::new(s, sr).unwrap();
        let (a, b) = active_span(&buf, 0.01, 0.5).unwrap();
        assert!((a - 1.0).abs() < 0.01 && (b - 2.0).abs() < 0.01, "{a} {b}");
        assert!(active_span(&SignalBuffer::zeros(100, sr).unwrap(), 0.01, 0.5).is_none());
    }
}
