//! Carrier PWM, modulator commands and their capacitor-coupled AM mix.
//!
//! The coupling is modeled as a first-order low-pass on the modulator duty
//! command whose output scales the carrier waveform sample by sample.

use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::morse::{KeyingSchedule, Level};
use crate::signal::{check_nyquist, PwmConfig, SignalBuffer};

/// Carrier of the hardware transmitter.
pub const CARRIER_HZ: f64 = 31.25e6;
/// Default scale-down of the carrier for desk simulation (31.25 MHz → 125 kHz).
pub const DEFAULT_SCALE: f64 = 250.0;
pub const DEFAULT_RF_RATE: u32 = 1_000_000;
pub const DEFAULT_COUPLING_TAU: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmitterConfig {
    pub carrier: PwmConfig,
    /// Time constant of the coupling capacitor's smoothing, seconds.
    pub coupling_time_constant: f64,
    pub rf_sample_rate: u32,
}

impl TransmitterConfig {
    pub fn new(carrier: PwmConfig, coupling_time_constant: f64, rf_sample_rate: u32) -> Result<Self> {
        let cfg = Self {
            carrier,
            coupling_time_constant,
            rf_sample_rate,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 50%-duty ±1 carrier at `31.25 MHz / scale`, sampled at `rf_sample_rate`.
    pub fn scaled(scale: f64, rf_sample_rate: u32) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(invalid("scale", format!("must be positive, got {scale}")));
        }
        Self::new(
            PwmConfig::new(CARRIER_HZ / scale, 0.5),
            DEFAULT_COUPLING_TAU,
            rf_sample_rate,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.carrier.validate()?;
        check_nyquist(self.carrier.frequency, self.rf_sample_rate)?;
        if !(self.coupling_time_constant.is_finite() && self.coupling_time_constant > 0.0) {
            return Err(invalid("coupling_time_constant", "must be positive"));
        }
        Ok(())
    }
}

impl Default for TransmitterConfig {
    fn default() -> Self {
        Self {
            carrier: PwmConfig::new(CARRIER_HZ / DEFAULT_SCALE, 0.5),
            coupling_time_constant: DEFAULT_COUPLING_TAU,
            rf_sample_rate: DEFAULT_RF_RATE,
        }
    }
}

/// One modulator write: hold `duty` for `hold` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DutyHold {
    pub duty: f64,
    pub hold: f64,
}

impl DutyHold {
    pub fn new(duty: f64, hold: f64) -> Self {
        Self { duty, hold }
    }
}

/// Ordered modulator commands.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModulationStream {
    commands: Vec<DutyHold>,
}

impl ModulationStream {
    pub fn new(commands: Vec<DutyHold>) -> Result<Self> {
        for (i, c) in commands.iter().enumerate() {
            check_command(i, c)?;
        }
        Ok(Self { commands })
    }

    pub fn commands(&self) -> &[DutyHold] {
        &self.commands
    }

    pub fn len(&self) -> usize {
        self.commands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }

    pub fn push(&mut self, command: DutyHold) -> Result<()> {
        check_command(self.commands.len(), &command)?;
        self.commands.push(command);
        Ok(())
    }

    pub fn append(&mut self, other: ModulationStream) {
        self.commands.extend(other.commands);
    }

    /// Total hold time, summed with error compensation.
    pub fn duration(&self) -> f64 {
        compensated_sum(self.commands.iter().map(|c| c.hold))
    }

    /// `duty,hold_seconds` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("duty,hold_seconds\n");
        for c in &self.commands {
            let _ = writeln!(out, "{},{}", c.duty, c.hold);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = crate::io::parse_csv_pairs(text, "duty", "hold_seconds")?;
        Self::new(rows.into_iter().map(|(d, h)| DutyHold::new(d, h)).collect())
    }
}

fn check_command(index: usize, c: &DutyHold) -> Result<()> {
    if !(0.0..=1.0).contains(&c.duty) {
        return Err(invalid("duty", format!("command {index}: {} outside [0, 1]", c.duty)));
    }
    if !(c.hold.is_finite() && c.hold > 0.0) {
        return Err(invalid("hold", format!("command {index}: {} is not positive", c.hold)));
    }
    Ok(())
}

/// Neumaier summation.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Square tone of `freq` Hz at `tone_duty` lasting `duration` seconds, as
/// alternating full-on / off modulator commands. The last period is cut at
/// `duration`.
pub fn tone_commands(freq: f64, tone_duty: f64, duration: f64) -> Vec<DutyHold> {
    tone_commands_at(freq, tone_duty, duration, 0.0).0
}

/// Like [`tone_commands`] but starting `phase` cycles (in `[0, 1)`) into the
/// period. Also returns the phase where the tone stops.
pub(crate) fn tone_commands_at(freq: f64, tone_duty: f64, duration: f64, phase: f64) -> (Vec<DutyHold>, f64) {
    if tone_duty <= 0.0 {
        return (vec![DutyHold::new(0.0, duration)], phase);
    }
    if tone_duty >= 1.0 {
        return (vec![DutyHold::new(1.0, duration)], phase);
    }
    let mut out = Vec::with_capacity((2.0 * duration * freq) as usize + 3);
    let mut ph = phase.rem_euclid(1.0);
    let mut elapsed = 0.0;
    loop {
        let (level, edge) = if ph < tone_duty { (1.0, tone_duty) } else { (0.0, 1.0) };
        let hold = (edge - ph) / freq;
        let end = elapsed + hold;
        if end >= duration * (1.0 - 1e-12) {
            let rest = duration - elapsed;
            if rest > 0.0 {
                out.push(DutyHold::new(level, rest));
            }
            ph += rest * freq;
            break;
        }
        out.push(DutyHold::new(level, hold));
        elapsed = end;
        ph = if edge >= 1.0 { 0.0 } else { edge };
    }
    (out, ph.rem_euclid(1.0))
}

/// Stepped tone sweep: step `n` plays `base + n·increment` Hz for `step_hold`.
pub fn sweep_stream(
    step_count: u32,
    base: f64,
    increment: f64,
    step_hold: f64,
    tone_duty: f64,
) -> Result<ModulationStream> {
    if step_count == 0 {
        return Err(invalid("step_count", "need at least one step"));
    }
    if !(step_hold.is_finite() && step_hold > 0.0) {
        return Err(invalid("step_hold", "must be positive"));
    }
    let mut commands = Vec::new();
    let mut phase = 0.0;
    for n in 0..step_count {
        let freq = base + n as f64 * increment;
        if !(freq.is_finite() && freq > 0.0) {
            return Err(invalid("frequency", format!("step {n} gives {freq} Hz")));
        }
        // Phase carries over so step boundaries add no clicks.
        let (step, end) = tone_commands_at(freq, tone_duty, step_hold, phase);
        commands.extend(step);
        phase = end;
    }
    ModulationStream::new(commands)
}

/// Mark intervals become a `tone` Hz square at `tone_duty`, spaces become
/// duty 0.
pub fn keying_to_stream(schedule: &KeyingSchedule, tone: f64, tone_duty: f64) -> Result<ModulationStream> {
    if schedule.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(tone.is_finite() && tone > 0.0) {
        return Err(invalid("tone", "must be positive"));
    }
    let mut commands = Vec::new();
    for key in schedule.keys() {
        if !(key.duration.is_finite() && key.duration > 0.0) {
            return Err(invalid("duration", format!("{} is not positive", key.duration)));
        }
        match key.level {
            Level::Mark => commands.extend(tone_commands(tone, tone_duty, key.duration)),
            Level::Space => commands.push(DutyHold::new(0.0, key.duration)),
        }
    }
    ModulationStream::new(commands)
}

/// Chunked AM renderer; yields the RF waveform on demand.
#[derive(Debug, Clone)]
pub struct AmTransmitter<'a> {
    cfg: TransmitterConfig,
    commands: &'a [DutyHold],
    /// End time of `commands[current]`.
    boundary: f64,
    boundary_carry: f64,
    current: usize,
    envelope: f64,
    alpha: f64,
    next_index: u64,
    total: u64,
}

impl<'a> AmTransmitter<'a> {
    pub fn new(cfg: &TransmitterConfig, stream: &'a ModulationStream) -> Result<Self> {
        cfg.validate()?;
        if stream.is_empty() {
            return Err(Error::EmptyStream);
        }
        let rate = cfg.rf_sample_rate as f64;
        let total = (stream.duration() * rate).round() as u64;
        Ok(Self {
            cfg: *cfg,
            commands: stream.commands(),
            boundary: stream.commands()[0].hold,
            boundary_carry: 0.0,
            current: 0,
            envelope: 0.0,
            alpha: 1.0 - (-1.0 / (rate * cfg.coupling_time_constant)).exp(),
            next_index: 0,
            total,
        })
    }

    /// Number of RF samples the full stream renders to.
    pub fn total_samples(&self) -> u64 {
        self.total
    }

    fn advance_boundary(&mut self) {
        self.current += 1;
        let hold = self.commands[self.current].hold;
        let t = self.boundary + hold;
        if self.boundary.abs() >= hold {
            self.boundary_carry += (self.boundary - t) + hold;
        } else {
            self.boundary_carry += (hold - t) + self.boundary;
        }
        self.boundary = t;
    }

    /// Renders up to `max` further samples; `None` once the stream is done.
    pub fn next_chunk(&mut self, max: usize) -> Option<Vec<f64>> {
        if self.next_index >= self.total || max == 0 {
            return None;
        }
        let rate = self.cfg.rf_sample_rate;
        let end = (self.next_index + max as u64).min(self.total);
        let mut out = Vec::with_capacity((end - self.next_index) as usize);
        for i in self.next_index..end {
            let t = i as f64 / rate as f64;
            while t >= self.boundary + self.boundary_carry && self.current + 1 < self.commands.len() {
                self.advance_boundary();
            }
            let duty = self.commands[self.current].duty;
            self.envelope += self.alpha * (duty - self.envelope);
            out.push(self.envelope * self.cfg.carrier.sample(i, rate));
        }
        self.next_index = end;
        Some(out)
    }
}

/// Renders the whole transmission of `stream` through the coupling model.
pub fn am_transmit(cfg: &TransmitterConfig, stream: &ModulationStream) -> Result<SignalBuffer> {
    let mut tx = AmTransmitter::new(cfg, stream)?;
    let mut samples = Vec::with_capacity(tx.total_samples() as usize);
    while let Some(chunk) = tx.next_chunk(1 << 16) {
        samples.extend(chunk);
    }
    SignalBuffer::new(samples, cfg.rf_sample_rate)
}
