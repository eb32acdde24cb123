//! Session traces: parsing, normalization, windowing and cohort sampling.
//!
//! A session file holds one association interval per line,
//! `node_id<sep>location_id<sep>start_time<sep>end_time`, with `<sep>` either a
//! tab or a comma (detected from the first data line). Lines starting with `#`
//! are comments. Times are integer seconds; fractional inputs are floored.
//!
//! Every [`Trace`] is normalized: sorted by `(node_id, start_time)`, and for
//! each node no two sessions overlap. Overlapping or touching sessions at the
//! same location are merged; an overlap between different locations truncates
//! the earlier session at the later one's start.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Seconds in a day, the default slot length.
pub const DAY: i64 = 86_400;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SessionRecord {
    pub node_id: String,
    pub location_id: String,
    pub start_time: i64,
    pub end_time: i64,
}

impl SessionRecord {
    pub fn new(
        node_id: impl Into<String>,
        location_id: impl Into<String>,
        start_time: i64,
        end_time: i64,
    ) -> Self {
        SessionRecord {
            node_id: node_id.into(),
            location_id: location_id.into(),
            start_time,
            end_time,
        }
    }

    pub fn duration(&self) -> i64 {
        self.end_time - self.start_time
    }
}

/// Half-open interval `[start, start + duration)` split into equal slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: i64,
    pub duration: i64,
    pub slot_length: i64,
}

impl TimeWindow {
    pub fn new(start: i64, duration: i64, slot_length: i64) -> Result<Self> {
        if slot_length <= 0 {
            return Err(Error::arg(format!(
                "slot length must be positive, got {slot_length}"
            )));
        }
        if duration <= 0 || duration % slot_length != 0 {
            return Err(Error::arg(format!(
                "window duration {duration} is not a positive multiple of slot length {slot_length}"
            )));
        }
        Ok(TimeWindow {
            start,
            duration,
            slot_length,
        })
    }

    /// A window of whole days starting at `start`.
    pub fn days(start: i64, days: i64) -> Result<Self> {
        TimeWindow::new(start, days * DAY, DAY)
    }

    pub fn end(&self) -> i64 {
        self.start + self.duration
    }

    pub fn slot_count(&self) -> usize {
        (self.duration / self.slot_length) as usize
    }

    pub fn contains(&self, s: &SessionRecord) -> bool {
        s.start_time >= self.start && s.end_time <= self.end()
    }

    /// Smallest slot-aligned window covering `[min_start, max_end)`.
    ///
    /// The start is floored to a multiple of `slot_length`.
    pub fn covering(min_start: i64, max_end: i64, slot_length: i64) -> Result<Self> {
        let start = min_start.div_euclid(slot_length) * slot_length;
        let span = (max_end - start).max(1);
        let slots = (span + slot_length - 1) / slot_length;
        TimeWindow::new(start, slots * slot_length, slot_length)
    }
}

/// Normalized, windowed collection of sessions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    sessions: Vec<SessionRecord>,
    window: TimeWindow,
}

impl Trace {
    /// Normalizes `sessions` and clips them to `window`.
    pub fn new(sessions: Vec<SessionRecord>, window: TimeWindow) -> Self {
        let sessions = normalize_sessions(sessions)
            .into_iter()
            .filter_map(|s| clip_session(s, &window))
            .collect();
        Trace { sessions, window }
    }

    /// A trace whose window is the slot-aligned hull of its sessions.
    pub fn from_sessions(sessions: Vec<SessionRecord>, slot_length: i64) -> Result<Self> {
        let min_start = sessions.iter().map(|s| s.start_time).min();
        let max_end = sessions.iter().map(|s| s.end_time).max();
        let window = match (min_start, max_end) {
            (Some(lo), Some(hi)) => TimeWindow::covering(lo, hi, slot_length)?,
            _ => TimeWindow::new(0, slot_length, slot_length)?,
        };
        Ok(Trace::new(sessions, window))
    }

    pub fn sessions(&self) -> &[SessionRecord] {
        &self.sessions
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    /// Distinct node ids in sorted order.
    pub fn node_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = Vec::new();
        for s in &self.sessions {
            if ids.last() != Some(&s.node_id) {
                ids.push(s.node_id.clone());
            }
        }
        ids
    }

    /// Contiguous per-node slices, in node order.
    pub fn by_node(&self) -> impl Iterator<Item = (&str, &[SessionRecord])> {
        self.sessions
            .chunk_by(|a, b| a.node_id == b.node_id)
            .map(|chunk| (chunk[0].node_id.as_str(), chunk))
    }

    /// Sessions of the given nodes only; `keep` need not be sorted.
    pub fn restrict_to(&self, keep: &[String]) -> Trace {
        let keep: std::collections::HashSet<&str> = keep.iter().map(String::as_str).collect();
        Trace {
            sessions: self
                .sessions
                .iter()
                .filter(|s| keep.contains(s.node_id.as_str()))
                .cloned()
                .collect(),
            window: self.window,
        }
    }
}

/// Sort and resolve overlaps. See the module docs for the rules.
pub fn normalize_sessions(mut sessions: Vec<SessionRecord>) -> Vec<SessionRecord> {
    sessions.retain(|s| s.end_time > s.start_time);
    sessions.sort_by(|a, b| {
        (&a.node_id, a.start_time, a.end_time, &a.location_id).cmp(&(
            &b.node_id,
            b.start_time,
            b.end_time,
            &b.location_id,
        ))
    });

    let mut out: Vec<SessionRecord> = Vec::with_capacity(sessions.len());
    for s in sessions {
        let mut s = s;
        while let Some(last) = out.last_mut() {
            if last.node_id != s.node_id || last.end_time < s.start_time {
                break;
            }
            if last.location_id == s.location_id {
                // Union, including the touching case.
                s.start_time = last.start_time;
                s.end_time = s.end_time.max(last.end_time);
                out.pop();
                continue;
            }
            if last.end_time == s.start_time {
                break;
            }
            last.end_time = s.start_time;
            if last.end_time <= last.start_time {
                out.pop();
                continue;
            }
            break;
        }
        out.push(s);
    }
    out
}

fn clip_session(mut s: SessionRecord, window: &TimeWindow) -> Option<SessionRecord> {
    s.start_time = s.start_time.max(window.start);
    s.end_time = s.end_time.min(window.end());
    (s.end_time > s.start_time).then_some(s)
}

/// Intersect every session with `window`; sessions fully outside are dropped.
pub fn clip_to_window(trace: &Trace, window: TimeWindow) -> Trace {
    Trace {
        sessions: trace
            .sessions
            .iter()
            .cloned()
            .filter_map(|s| clip_session(s, &window))
            .collect(),
        window,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delimiter {
    Tab,
    Comma,
}

impl Delimiter {
    pub fn as_char(self) -> char {
        match self {
            Delimiter::Tab => '\t',
            Delimiter::Comma => ',',
        }
    }

    fn detect(line: &str) -> Self {
        if line.contains('\t') {
            Delimiter::Tab
        } else {
            Delimiter::Comma
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ParseOptions {
    /// `None` detects the delimiter from the first data line.
    pub delimiter: Option<Delimiter>,
    pub slot_length: i64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            delimiter: None,
            slot_length: DAY,
        }
    }
}

/// Line accounting for one parse.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseStats {
    pub accepted: usize,
    pub rejected: usize,
    pub comments: usize,
}

impl fmt::Display for ParseStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} accepted, {} rejected, {} comment/blank",
            self.accepted, self.rejected, self.comments
        )
    }
}

fn parse_time(field: &str) -> Option<i64> {
    let field = field.trim();
    if let Ok(v) = field.parse::<i64>() {
        return Some(v);
    }
    let v: f64 = field.parse().ok()?;
    if !v.is_finite() || v.abs() > 9.0e15 {
        return None;
    }
    Some(v.floor() as i64)
}

fn parse_line(line: &str, delim: Delimiter) -> Option<SessionRecord> {
    let mut fields = line.split(delim.as_char());
    let node = fields.next()?.trim();
    let loc = fields.next()?.trim();
    let start = parse_time(fields.next()?)?;
    let end = parse_time(fields.next()?)?;
    if fields.next().is_some() || node.is_empty() || loc.is_empty() || end <= start {
        return None;
    }
    Some(SessionRecord::new(node, loc, start, end))
}

/// Parse a session file into a normalized trace.
///
/// Malformed lines (wrong field count, unparsable times, `end <= start`) are
/// tallied in [`ParseStats::rejected`] rather than failing the parse.
pub fn parse_sessions<R: BufRead>(input: R, opts: &ParseOptions) -> Result<(Trace, ParseStats)> {
    let mut stats = ParseStats::default();
    let mut delim = opts.delimiter;
    let mut records = Vec::new();
    for line in input.lines() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            stats.comments += 1;
            continue;
        }
        let d = *delim.get_or_insert_with(|| Delimiter::detect(line));
        match parse_line(line, d) {
            Some(rec) => {
                stats.accepted += 1;
                records.push(rec);
            }
            None => stats.rejected += 1,
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyTrace {
            rejected: stats.rejected,
        });
    }
    Ok((Trace::from_sessions(records, opts.slot_length)?, stats))
}

/// Write sessions in the session-file format, one record per line.
pub fn write_sessions<W: Write>(
    trace: &Trace,
    mut out: W,
    delim: Delimiter,
) -> std::io::Result<()> {
    let d = delim.as_char();
    writeln!(out, "# node_id{d}location_id{d}start_time{d}end_time")?;
    for s in &trace.sessions {
        writeln!(
            out,
            "{}{d}{}{d}{}{d}{}",
            s.node_id, s.location_id, s.start_time, s.end_time
        )?;
    }
    Ok(())
}

/// Positions selected by systematic sampling with an explicit offset.
pub fn systematic_positions(
    population: usize,
    sample_size: usize,
    offset: usize,
) -> Result<Vec<usize>> {
    let step = sampling_step(population, sample_size)?;
    if offset >= step {
        return Err(Error::arg(format!("offset {offset} outside [0, {step})")));
    }
    Ok((0..sample_size).map(|i| offset + i * step).collect())
}

fn sampling_step(population: usize, sample_size: usize) -> Result<usize> {
    if sample_size == 0 || sample_size > population {
        return Err(Error::arg(format!(
            "sample size {sample_size} must be in 1..={population}"
        )));
    }
    Ok(population / sample_size)
}

/// Systematic random sample: every k-th item from a seeded random start,
/// with `k = floor(len / sample_size)`.
pub fn systematic_sample<T: Clone>(items: &[T], sample_size: usize, seed: u64) -> Result<Vec<T>> {
    let step = sampling_step(items.len(), sample_size)?;
    let offset = ChaCha8Rng::seed_from_u64(seed).random_range(0..step);
    Ok(systematic_positions(items.len(), sample_size, offset)?
        .into_iter()
        .map(|i| items[i].clone())
        .collect())
}

/// Ordered set of location ids shared by every matrix of an analysis run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocationUniverse {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    fingerprint: u64,
}

impl LocationUniverse {
    pub fn from_ids<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = Vec::new();
        let mut index = HashMap::new();
        for id in ids {
            let id = id.into();
            if !index.contains_key(&id) {
                index.insert(id.clone(), out.len());
                out.push(id);
            }
        }
        let mut hasher = Sha256::new();
        for id in &out {
            hasher.update(id.as_bytes());
            hasher.update([0u8]);
        }
        let digest = hasher.finalize();
        let fingerprint = u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"));
        LocationUniverse {
            ids: out,
            index,
            fingerprint,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn position(&self, location_id: &str) -> Option<usize> {
        self.index.get(location_id).copied()
    }

    /// Identity of the universe; equal iff the ordered id lists are equal.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
}

/// Distinct locations of `trace` in first-appearance order.
pub fn build_location_universe(trace: &Trace) -> LocationUniverse {
    LocationUniverse::from_ids(trace.sessions.iter().map(|s| s.location_id.as_str()))
}
