//! Morse keying: two encoders (the compact tuple-list form used on the
//! microcontroller and the canonical 1/3/7-unit timing), a timing-based
//! decoder, and a tone-detecting audio front end for it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::signal::SignalBuffer;

/// Keying unit used by the transmitter listing, seconds.
pub const DEFAULT_DT: f64 = 0.05;
/// Keyed tone frequency, Hz.
pub const DEFAULT_TONE: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Space = 0,
    Mark = 1,
}

/// A level held for a whole number of units.
pub type Run = (Level, u32);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Key {
    pub level: Level,
    /// Seconds.
    pub duration: f64,
}

impl Key {
    pub fn mark(duration: f64) -> Self {
        Self {
            level: Level::Mark,
            duration,
        }
    }

    pub fn space(duration: f64) -> Self {
        Self {
            level: Level::Space,
            duration,
        }
    }
}

/// Ordered on/off intervals plus the unit they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyingSchedule {
    keys: Vec<Key>,
    dt: f64,
}

impl KeyingSchedule {
    pub fn new(keys: Vec<Key>, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        if let Some(k) = keys.iter().find(|k| !(k.duration.is_finite() && k.duration > 0.0)) {
            return Err(invalid("duration", format!("{} is not positive", k.duration)));
        }
        Ok(Self { keys, dt })
    }

    pub fn empty(dt: f64) -> Self {
        Self { keys: Vec::new(), dt }
    }

    fn from_units(units: &[(Level, u32)], dt: f64) -> Self {
        Self {
            keys: units
                .iter()
                .map(|&(level, n)| Key {
                    level,
                    duration: n as f64 * dt,
                })
                .collect(),
            dt,
        }
    }

    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        crate::transmitter::compensated_sum(self.keys.iter().map(|k| k.duration))
    }

    /// Total length in units of `dt`, if every entry is a whole multiple.
    pub fn total_units(&self) -> Option<u64> {
        self.keys.iter().try_fold(0u64, |acc, k| {
            let units = k.duration / self.dt;
            let rounded = units.round();
            ((units - rounded).abs() < 1e-9 * rounded.max(1.0)).then_some(acc + rounded as u64)
        })
    }

    /// Same schedule with adjacent equal-level entries joined.
    pub fn merged(&self) -> Self {
        let mut keys: Vec<Key> = Vec::with_capacity(self.keys.len());
        for k in &self.keys {
            match keys.last_mut() {
                Some(last) if last.level == k.level => last.duration += k.duration,
                _ => keys.push(*k),
            }
        }
        Self { keys, dt: self.dt }
    }

    /// `level,duration_s` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,duration_s\n");
        for k in &self.keys {
            let _ = writeln!(out, "{},{}", k.level as u8, k.duration);
        }
        out
    }

    pub fn from_csv(text: &str, dt: f64) -> Result<Self> {
        let rows = crate::io::parse_csv_pairs(text, "level", "duration_s")?;
        let keys = rows
            .into_iter()
            .enumerate()
            .map(|(i, (level, duration))| match level {
                0.0 => Ok(Key::space(duration)),
                1.0 => Ok(Key::mark(duration)),
                l => Err(Error::Csv {
                    line: i + 2,
                    reason: format!("level must be 0 or 1, got {l}"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(keys, dt)
    }
}

const STANDARD_CODES: &[(char, &str)] = &[
    ('A', ".-"),
    ('B', "-..."),
    ('C', "-.-."),
    ('D', "-.."),
    ('E', "."),
    ('F', "..-."),
    ('G', "--."),
    ('H', "...."),
    ('I', ".."),
    ('J', ".---"),
    ('K', "-.-"),
    ('L', ".-.."),
    ('M', "--"),
    ('N', "-."),
    ('O', "---"),
    ('P', ".--."),
    ('Q', "--.-"),
    ('R', ".-."),
    ('S', "..."),
    ('T', "-"),
    ('U', "..-"),
    ('V', "...-"),
    ('W', ".--"),
    ('X', "-..-"),
    ('Y', "-.--"),
    ('Z', "--.."),
    ('0', "-----"),
    ('1', ".----"),
    ('2', "..---"),
    ('3', "...--"),
    ('4', "....-"),
    ('5', "....."),
    ('6', "-...."),
    ('7', "--..."),
    ('8', "---.."),
    ('9', "----."),
    ('.', ".-.-.-"),
    (',', "--..--"),
    ('?', "..--.."),
    ('\'', ".----."),
    ('!', "-.-.--"),
    ('/', "-..-."),
    ('(', "-.--."),
    (')', "-.--.-"),
    ('&', ".-..."),
    (':', "---..."),
    (';', "-.-.-."),
    ('=', "-...-"),
    ('+', ".-.-."),
    ('-', "-....-"),
    ('_', "..--.-"),
    ('"', ".-..-."),
    ('$', "...-..-"),
    ('@', ".--.-."),
    (' ', "/"),
];

/// Which gap structure an encoder produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    /// 1 unit between elements, 3 between characters, 7 between words;
    /// the final character of the text also gets the word gap.
    Canonical,
    /// Every element is followed by one unit of space, every character by
    /// two more, and `' '` contributes six.
    Listing,
}

/// Character → code mapping over `.`, `-` and `/` (word space).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MorseTable {
    codes: BTreeMap<char, String>,
}

impl Default for MorseTable {
    fn default() -> Self {
        Self::standard()
    }
}

impl MorseTable {
    pub fn standard() -> Self {
        Self {
            codes: STANDARD_CODES.iter().map(|&(c, code)| (c, code.to_string())).collect(),
        }
    }

    pub fn code(&self, c: char) -> Option<&str> {
        self.codes.get(&c).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, &str)> {
        self.codes.iter().map(|(c, s)| (*c, s.as_str()))
    }

    /// Characters that encode to marks (everything but the word space).
    pub fn alphabet(&self) -> Vec<char> {
        self.codes.keys().copied().filter(|&c| c != ' ').collect()
    }

    /// True when no two characters share a code.
    pub fn is_injective(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.codes.values().all(|code| seen.insert(code.as_str()))
    }

    fn reverse(&self) -> BTreeMap<&str, char> {
        self.codes
            .iter()
            .filter(|(c, _)| **c != ' ')
            .map(|(c, code)| (code.as_str(), *c))
            .collect()
    }

    /// Seeded permutation of the codes among all characters except the word
    /// space.
    pub fn shuffled(&self, seed: u64) -> Self {
        let chars = self.alphabet();
        let mut codes: Vec<String> = chars.iter().map(|c| self.codes[c].clone()).collect();
        codes.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut out: BTreeMap<char, String> = chars.into_iter().zip(codes).collect();
        if let Some(space) = self.codes.get(&' ') {
            out.insert(' ', space.clone());
        }
        Self { codes: out }
    }

    fn lookup(&self, c: char) -> Result<&str> {
        self.code(c).ok_or(Error::UnsupportedCharacter(c))
    }

    /// Per-character `(level, units)` runs in the order they are keyed,
    /// each ending with the character's trailing gap.
    pub fn character_units(&self, text: &str, timing: Timing) -> Result<Vec<(char, Vec<Run>)>> {
        let upper = text.to_uppercase();
        let mut out = Vec::new();
        match timing {
            Timing::Listing => {
                for ch in upper.chars() {
                    let mut units = Vec::new();
                    for element in self.lookup(ch)?.chars() {
                        match element {
                            '-' => units.extend([(Level::Mark, 3), (Level::Space, 1)]),
                            '.' => units.extend([(Level::Mark, 1), (Level::Space, 1)]),
                            '/' => units.push((Level::Space, 6)),
                            _ => {}
                        }
                    }
                    units.push((Level::Space, 2));
                    out.push((ch, units));
                }
            }
            Timing::Canonical => {
                for word in upper.split_whitespace() {
                    let chars: Vec<char> = word.chars().collect();
                    for (i, &ch) in chars.iter().enumerate() {
                        let code = self.lookup(ch)?;
                        let mut units = Vec::new();
                        for (j, element) in code.chars().filter(|e| *e != '/').enumerate() {
                            if j > 0 {
                                units.push((Level::Space, 1));
                            }
                            units.push((Level::Mark, if element == '-' { 3 } else { 1 }));
                        }
                        let gap = if i + 1 == chars.len() { 7 } else { 3 };
                        units.push((Level::Space, gap));
                        out.push((ch, units));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Total units each character occupies, including its trailing gap.
    pub fn character_totals(&self, text: &str, timing: Timing) -> Result<Vec<(char, u32)>> {
        Ok(self
            .character_units(text, timing)?
            .into_iter()
            .map(|(c, units)| (c, units.iter().map(|u| u.1).sum()))
            .collect())
    }

    pub fn encode(&self, text: &str, dt: f64, timing: Timing) -> Result<KeyingSchedule> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        let units: Vec<(Level, u32)> = self
            .character_units(text, timing)?
            .into_iter()
            .flat_map(|(_, u)| u)
            .collect();
        Ok(KeyingSchedule::from_units(&units, dt))
    }

    pub fn decode_keying(&self, schedule: &KeyingSchedule, dt_hint: Option<f64>) -> DecodeReport {
        let merged = schedule.merged();
        let keys: Vec<Key> = merged
            .keys
            .iter()
            .copied()
            .skip_while(|k| k.level == Level::Space)
            .collect();
        if keys.is_empty() {
            return DecodeReport::default();
        }
        let unit = dt_hint.filter(|d| *d > 0.0).unwrap_or_else(|| estimate_unit(&keys));
        let reverse = self.reverse();

        let mut report = DecodeReport::default();
        let mut group = String::new();
        let flush = |group: &mut String, report: &mut DecodeReport| {
            if group.is_empty() {
                return;
            }
            match reverse.get(group.as_str()) {
                Some(&c) => report.text.push(c),
                None => {
                    report.text.push('?');
                    report.unknown_groups.push(group.clone());
                }
            }
            group.clear();
        };
        let last_mark = keys.iter().rposition(|k| k.level == Level::Mark).unwrap_or(0);
        for (i, k) in keys.iter().enumerate() {
            match k.level {
                Level::Mark => group.push(if k.duration < 2.0 * unit { '.' } else { '-' }),
                Level::Space if i > last_mark => break,
                Level::Space => {
                    if k.duration < 1.5 * unit {
                        continue;
                    }
                    flush(&mut group, &mut report);
                    if k.duration >= 5.0 * unit {
                        report.text.push(' ');
                    }
                }
            }
        }
        flush(&mut group, &mut report);
        report
    }
}

/// Unit estimate from the shortest interval class: the median of all
/// marks and inner gaps shorter than twice the shortest one.
///
/// A schedule that stops on a mark was cut off mid-element (a live capture),
/// so that mark is left out when anything else is available.
fn estimate_unit(keys: &[Key]) -> f64 {
    let last_mark = keys.iter().rposition(|k| k.level == Level::Mark).unwrap_or(0);
    let end = if last_mark + 1 == keys.len() && last_mark > 0 {
        last_mark - 1
    } else {
        last_mark
    };
    let mut durations: Vec<f64> = keys[..=end].iter().map(|k| k.duration).collect();
    durations.sort_by(f64::total_cmp);
    let shortest = durations[0];
    let short: Vec<f64> = durations.into_iter().take_while(|d| *d < 2.0 * shortest).collect();
    median(&short)
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecodeReport {
    pub text: String,
    /// Code groups with no table entry; each shows up as `?` in `text`.
    pub unknown_groups: Vec<String>,
}

/// Exact tuple-list encoding of the microcontroller transmitter.
pub fn encode_listing(text: &str, dt: f64) -> Result<KeyingSchedule> {
    MorseTable::standard().encode(text, dt, Timing::Listing)
}

/// Canonical 1/3/7-unit encoding.
pub fn encode_canonical(text: &str, dt: f64) -> Result<KeyingSchedule> {
    MorseTable::standard().encode(text, dt, Timing::Canonical)
}

/// Decodes with the standard table; `dt_hint = None` estimates the unit.
pub fn decode_keying(schedule: &KeyingSchedule, dt_hint: Option<f64>) -> String {
    MorseTable::standard().decode_keying(schedule, dt_hint).text
}

pub fn shuffle_table(table: &MorseTable, seed: u64) -> MorseTable {
    table.shuffled(seed)
}

/// Window length used by the tone detector when no unit hint is given.
const AUTO_DETECTOR_WINDOW: f64 = 0.01;

/// Sliding single-bin tone detector (Goertzel).
#[derive(Debug, Clone)]
pub struct ToneDetector {
    sample_rate: u32,
    tone: f64,
    window: usize,
    hop: usize,
}

impl ToneDetector {
    pub fn new(sample_rate: u32, tone: f64, window_seconds: f64) -> Result<Self> {
        if !(tone.is_finite() && tone > 0.0) {
            return Err(invalid("tone", "must be positive"));
        }
        if 4.0 * tone > sample_rate as f64 {
            return Err(Error::RateViolation {
                frequency: tone,
                sample_rate: sample_rate as f64,
            });
        }
        let window = ((window_seconds * sample_rate as f64).round() as usize).max(4);
        Ok(Self {
            sample_rate,
            tone,
            window,
            hop: (window / 4).max(1),
        })
    }

    /// Seconds between successive detector outputs.
    pub fn hop_seconds(&self) -> f64 {
        self.hop as f64 / self.sample_rate as f64
    }

    /// Tone amplitude in each window, one value per hop.
    pub fn amplitudes(&self, samples: &[f64]) -> Vec<f64> {
        if samples.len() < self.window {
            return Vec::new();
        }
        let w = 2.0 * std::f64::consts::PI * self.tone / self.sample_rate as f64;
        let coeff = 2.0 * w.cos();
        (0..=(samples.len() - self.window) / self.hop)
            .map(|frame| {
                let start = frame * self.hop;
                let (mut s1, mut s2) = (0.0f64, 0.0f64);
                for &x in &samples[start..start + self.window] {
                    let s0 = x + coeff * s1 - s2;
                    s2 = s1;
                    s1 = s0;
                }
                let power = (s1 * s1 + s2 * s2 - coeff * s1 * s2).max(0.0);
                2.0 * power.sqrt() / self.window as f64
            })
            .collect()
    }

    /// Thresholds the amplitude track at half its 95th percentile and turns
    /// it into a keying schedule (leading silence dropped).
    pub fn keying(&self, samples: &[f64], dt: f64) -> KeyingSchedule {
        let amps = self.amplitudes(samples);
        let mut sorted = amps.clone();
        sorted.sort_by(f64::total_cmp);
        let Some(&p95) = sorted.get(((sorted.len() as f64 - 1.0) * 0.95).round() as usize) else {
            return KeyingSchedule::empty(dt);
        };
        if p95 <= 1e-12 {
            return KeyingSchedule::empty(dt);
        }
        let threshold = 0.5 * p95;
        let hop = self.hop_seconds();
        let mut keys: Vec<Key> = Vec::new();
        for a in amps {
            let level = if a > threshold { Level::Mark } else { Level::Space };
            match keys.last_mut() {
                Some(last) if last.level == level => last.duration += hop,
                _ => keys.push(Key { level, duration: hop }),
            }
        }
        KeyingSchedule { keys, dt }
    }
}

/// Detects the keyed `tone` in `audio` and decodes the result.
pub fn decode_audio(audio: &SignalBuffer, tone: f64, dt_hint: Option<f64>) -> Result<String> {
    Ok(decode_audio_report(&MorseTable::standard(), audio, tone, dt_hint)?.text)
}

pub fn decode_audio_report(
    table: &MorseTable,
    audio: &SignalBuffer,
    tone: f64,
    dt_hint: Option<f64>,
) -> Result<DecodeReport> {
    let window = dt_hint.map_or(AUTO_DETECTOR_WINDOW, |dt| dt / 4.0);
    let detector = ToneDetector::new(audio.sample_rate(), tone, window)?;
    let schedule = detector.keying(audio.samples(), dt_hint.unwrap_or(DEFAULT_DT));
    Ok(table.decode_keying(&schedule, dt_hint))
}
