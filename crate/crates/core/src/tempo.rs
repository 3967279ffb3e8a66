//! Tick/second conversion through a MIDI tempo map.

use serde::{Deserialize, Serialize};

/// Tempo assumed before the first tempo event (120 BPM).
pub const DEFAULT_US_PER_QUARTER: u32 = 500_000;

/// Tempo change at an absolute tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TempoEvent {
    pub tick: u64,
    pub us_per_quarter: u32,
}

/// A tempo map with precomputed segment start times.
///
/// Segments are half-open `[tick_i, tick_{i+1})`. The map always starts with
/// a segment at tick 0; when the source has no tempo event there the
/// default 500000 µs/quarter applies.
#[derive(Debug, Clone, PartialEq)]
pub struct TempoMap {
    ticks_per_quarter: u16,
    events: Vec<TempoEvent>,
    // (tick, seconds at tick, seconds per tick) for each segment
    segments: Vec<(u64, f64, f64)>,
}

impl TempoMap {
    /// Builds a map from (possibly unsorted, possibly duplicated) events.
    /// When several events share a tick the last one wins.
    pub fn new(ticks_per_quarter: u16, events: impl IntoIterator<Item = TempoEvent>) -> Self {
        assert!(ticks_per_quarter > 0, "ticks_per_quarter must be positive");
        let mut events: Vec<TempoEvent> = events.into_iter().collect();
        events.sort_by_key(|e| e.tick);
        let mut dedup: Vec<TempoEvent> = Vec::with_capacity(events.len());
        for e in events {
            match dedup.last_mut() {
                Some(last) if last.tick == e.tick => *last = e,
                _ => dedup.push(e),
            }
        }
        let mut segments = Vec::with_capacity(dedup.len() + 1);
        let tpq = f64::from(ticks_per_quarter);
        let mut seconds = 0.0;
        let mut current_tick = 0u64;
        let mut current = DEFAULT_US_PER_QUARTER;
        if dedup.first().map(|e| e.tick) != Some(0) {
            segments.push((0, 0.0, f64::from(current) * 1e-6 / tpq));
        }
        for e in &dedup {
            seconds += (e.tick - current_tick) as f64 * f64::from(current) * 1e-6 / tpq;
            current_tick = e.tick;
            current = e.us_per_quarter;
            segments.push((e.tick, seconds, f64::from(current) * 1e-6 / tpq));
        }
        Self { ticks_per_quarter, events: dedup, segments }
    }

    /// Constant-tempo map.
    pub fn constant(ticks_per_quarter: u16, us_per_quarter: u32) -> Self {
        Self::new(ticks_per_quarter, [TempoEvent { tick: 0, us_per_quarter }])
    }

    pub fn ticks_per_quarter(&self) -> u16 {
        self.ticks_per_quarter
    }

    /// The explicit tempo events (sorted, one per tick).
    pub fn events(&self) -> &[TempoEvent] {
        &self.events
    }

    fn segment_for_tick(&self, tick: f64) -> usize {
        // first segment whose start is > tick, minus one
        let idx = self.segments.partition_point(|s| (s.0 as f64) <= tick);
        idx.saturating_sub(1)
    }

    fn segment_for_seconds(&self, seconds: f64) -> usize {
        let idx = self.segments.partition_point(|s| s.1 <= seconds);
        idx.saturating_sub(1)
    }

    /// Seconds at a (possibly fractional) tick position.
    pub fn tick_to_seconds(&self, tick: f64) -> f64 {
        let (start, secs, spt) = self.segments[self.segment_for_tick(tick)];
        secs + (tick - start as f64) * spt
    }

    /// Fractional tick position at a time in seconds.
    pub fn seconds_to_ticks(&self, seconds: f64) -> f64 {
        let (start, secs, spt) = self.segments[self.segment_for_seconds(seconds)];
        start as f64 + (seconds - secs) / spt
    }

    /// Nearest integer tick for a time in seconds (negative times clamp to 0).
    pub fn seconds_to_tick(&self, seconds: f64) -> u64 {
        self.seconds_to_ticks(seconds).round().max(0.0) as u64
    }

    /// Quarter-note beats at a time in seconds.
    pub fn seconds_to_beats(&self, seconds: f64) -> f64 {
        self.seconds_to_ticks(seconds) / f64::from(self.ticks_per_quarter)
    }

    /// Seconds at a quarter-note beat position.
    pub fn beats_to_seconds(&self, beats: f64) -> f64 {
        self.tick_to_seconds(beats * f64::from(self.ticks_per_quarter))
    }
}

impl Default for TempoMap {
    fn default() -> Self {
        Self::new(480, [])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tempo_is_120_bpm() {
        let map = TempoMap::new(480, []);
        assert_eq!(map.tick_to_seconds(480.0), 0.5);
        assert_eq!(map.seconds_to_tick(0.5), 480);
    }

    #[test]
    fn piecewise_conversion() {
        // 120 BPM for one quarter, then 60 BPM
        let map = TempoMap::new(
            480,
            [
                TempoEvent { tick: 0, us_per_quarter: 500_000 },
                TempoEvent { tick: 480, us_per_quarter: 1_000_000 },
            ],
        );
        assert!((map.tick_to_seconds(960.0) - 1.5).abs() < 1e-12);
        assert!((map.seconds_to_ticks(1.0) - 720.0).abs() < 1e-9);
        assert!((map.beats_to_seconds(1.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn later_event_at_same_tick_wins() {
        let map = TempoMap::new(
            96,
            [
                TempoEvent { tick: 0, us_per_quarter: 400_000 },
                TempoEvent { tick: 0, us_per_quarter: 600_000 },
            ],
        );
        assert_eq!(map.events().len(), 1);
        assert!((map.tick_to_seconds(96.0) - 0.6).abs() < 1e-12);
    }
}
