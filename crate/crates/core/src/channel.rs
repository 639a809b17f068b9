//! Propagation bookkeeping between transmitter and receiver.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Result};
use crate::signal::SignalBuffer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// Linear amplitude gain.
    pub gain: f64,
    /// RMS of the additive white Gaussian noise.
    pub noise_rms: f64,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn new(gain: f64, noise_rms: f64, seed: u64) -> Self {
        Self { gain, noise_rms, seed }
    }

    /// Noise level giving `snr_db` against a signal of RMS `signal_rms`
    /// (after gain).
    pub fn with_snr(gain: f64, signal_rms: f64, snr_db: f64, seed: u64) -> Self {
        Self::new(gain, gain * signal_rms / 10f64.powf(snr_db / 20.0), seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(invalid("gain", "must be positive"));
        }
        if !(self.noise_rms.is_finite() && self.noise_rms >= 0.0) {
            return Err(invalid("noise_rms", "must be non-negative"));
        }
        Ok(())
    }
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self::new(1.0, 0.0, 0)
    }
}

/// The seeded noise sequence `apply_channel` adds for `cfg`.
pub fn channel_noise(len: usize, cfg: &ChannelConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if cfg.noise_rms == 0.0 {
        return Ok(vec![0.0; len]);
    }
    let normal = Normal::new(0.0, cfg.noise_rms).map_err(|e| invalid("noise_rms", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok((0..len).map(|_| normal.sample(&mut rng)).collect())
}

/// `gain · rf` plus seeded white Gaussian noise.
pub fn apply_channel(rf: &SignalBuffer, cfg: &ChannelConfig) -> Result<SignalBuffer> {
    let noise = channel_noise(rf.len(), cfg)?;
    let samples = rf.samples().iter().zip(noise).map(|(x, n)| cfg.gain * x + n).collect();
    SignalBuffer::new(samples, rf.sample_rate())
}

/// Half-wave antenna length in meters for a carrier in MHz: `142.6 / f`.
pub fn optimal_antenna_length(carrier_mhz: f64) -> Result<f64> {
    if !(carrier_mhz.is_finite() && carrier_mhz > 0.0) {
        return Err(invalid("carrier", format!("must be positive, got {carrier_mhz}")));
    }
    Ok(142.6 / carrier_mhz)
}
