use std::collections::{HashMap, VecDeque};

use super::MidiError;
use crate::note::{duration_until, ControlEvent, Marker, Note, NoteFlags, NoteSequence, SequenceKind};
use crate::tempo::{TempoEvent, TempoMap};

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, reason: impl Into<String>) -> MidiError {
        MidiError::Parse { offset: self.pos, reason: reason.into() }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], MidiError> {
        if self.pos + n > self.bytes.len() {
            return Err(self.err(format!("unexpected end of data (wanted {n} bytes)")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, MidiError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, MidiError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, MidiError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn vlq(&mut self) -> Result<u32, MidiError> {
        let start = self.pos;
        let mut value: u32 = 0;
        for _ in 0..4 {
            let b = self.u8()?;
            value = (value << 7) | u32::from(b & 0x7F);
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(MidiError::Parse { offset: start, reason: "variable-length quantity longer than 4 bytes".into() })
    }
}

struct RawNote {
    on_tick: u64,
    off_tick: u64,
    pitch: u8,
    velocity: u8,
    channel: u8,
    unterminated: bool,
}

#[derive(Default)]
struct TrackEvents {
    notes: Vec<RawNote>,
    tempo: Vec<TempoEvent>,
    markers: Vec<Marker>,
    controls: Vec<ControlEvent>,
}

/// Parses an in-memory Standard MIDI File.
pub fn parse_smf(bytes: &[u8], kind: SequenceKind) -> Result<NoteSequence, MidiError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4).map_err(|_| cur.err("missing MThd header"))? != b"MThd" {
        return Err(MidiError::Parse { offset: 0, reason: "missing MThd header".into() });
    }
    let header_len = cur.u32()? as usize;
    if header_len < 6 {
        return Err(cur.err(format!("header chunk too short ({header_len} bytes)")));
    }
    let format = cur.u16()?;
    let n_tracks = cur.u16()?;
    let division = cur.u16()?;
    cur.take(header_len - 6)?;
    if format > 1 {
        return Err(MidiError::Unsupported(format!("format {format}")));
    }
    if division & 0x8000 != 0 {
        return Err(MidiError::Unsupported("SMPTE time division".into()));
    }
    if division == 0 {
        return Err(MidiError::Parse { offset: 12, reason: "zero ticks per quarter".into() });
    }

    let mut events = TrackEvents::default();
    let mut seen = 0;
    while seen < n_tracks && cur.pos < bytes.len() {
        let chunk_start = cur.pos;
        let id = cur.take(4)?;
        let len = cur.u32()? as usize;
        if cur.pos + len > bytes.len() {
            return Err(MidiError::Parse { offset: chunk_start, reason: format!("chunk length {len} exceeds file size") });
        }
        if id == b"MTrk" {
            let body = Cursor { bytes: &bytes[..cur.pos + len], pos: cur.pos };
            parse_track(body, &mut events)?;
            seen += 1;
        }
        cur.pos += len;
    }
    if seen < n_tracks {
        return Err(cur.err(format!("expected {n_tracks} tracks, found {seen}")));
    }

    let tempo = TempoMap::new(division, events.tempo);
    let tpq = f64::from(division);
    let mut notes: Vec<Note> = events
        .notes
        .iter()
        .map(|r| {
            let on = tempo.tick_to_seconds(r.on_tick as f64);
            let off = tempo.tick_to_seconds(r.off_tick as f64);
            Note {
                pitch: r.pitch,
                onset: on,
                duration: duration_until(on, off),
                velocity: r.velocity,
                channel: r.channel,
                onset_beats: r.on_tick as f64 / tpq,
                duration_beats: (r.off_tick - r.on_tick) as f64 / tpq,
                flags: NoteFlags { unterminated: r.unterminated, ..NoteFlags::default() },
            }
        })
        .collect();
    notes.sort_by(Note::canonical_cmp);
    events.markers.sort_by_key(|m| m.tick);
    events.controls.sort_by_key(|c| c.tick);
    Ok(NoteSequence { notes, tempo, kind, markers: events.markers, controls: events.controls })
}

fn parse_track(mut cur: Cursor<'_>, out: &mut TrackEvents) -> Result<(), MidiError> {
    let end = cur.bytes.len();
    let mut tick: u64 = 0;
    let mut running: Option<u8> = None;
    // open note-ons per (channel, pitch), first-in first-out
    let mut open: HashMap<(u8, u8), VecDeque<(u64, u8)>> = HashMap::new();

    while cur.pos < end {
        tick += u64::from(cur.vlq()?);
        let status_pos = cur.pos;
        let mut status = cur.u8()?;
        let mut first_data = None;
        if status < 0x80 {
            match running {
                Some(s) => {
                    first_data = Some(status);
                    status = s;
                }
                None => {
                    return Err(MidiError::Parse { offset: status_pos, reason: "data byte without running status".into() })
                }
            }
        }
        match status {
            0xFF => {
                let kind = cur.u8()?;
                let len = cur.vlq()? as usize;
                let data = cur.take(len)?;
                match kind {
                    0x2F => break,
                    0x51 => {
                        if len != 3 {
                            return Err(MidiError::Parse { offset: status_pos, reason: "tempo event with length != 3".into() });
                        }
                        let us = u32::from_be_bytes([0, data[0], data[1], data[2]]);
                        if us == 0 {
                            return Err(MidiError::Parse { offset: status_pos, reason: "zero tempo".into() });
                        }
                        out.tempo.push(TempoEvent { tick, us_per_quarter: us });
                    }
                    0x06 => out.markers.push(Marker { tick, text: String::from_utf8_lossy(data).into_owned() }),
                    _ => {}
                }
            }
            0xF0 | 0xF7 => {
                let len = cur.vlq()? as usize;
                cur.take(len)?;
            }
            0x80..=0xEF => {
                running = Some(status);
                let channel = status & 0x0F;
                let a = match first_data {
                    Some(b) => b,
                    None => cur.u8()?,
                };
                let two_bytes = !matches!(status & 0xF0, 0xC0 | 0xD0);
                let b = if two_bytes { cur.u8()? } else { 0 };
                match status & 0xF0 {
                    0x90 if b > 0 => open.entry((channel, a)).or_default().push_back((tick, b)),
                    0x80 | 0x90 => {
                        if let Some((on_tick, velocity)) = open.get_mut(&(channel, a)).and_then(VecDeque::pop_front) {
                            out.notes.push(RawNote {
                                on_tick,
                                off_tick: tick,
                                pitch: a,
                                velocity,
                                channel,
                                unterminated: false,
                            });
                        }
                    }
                    0xB0 => out.controls.push(ControlEvent { tick, channel, controller: a, value: b }),
                    _ => {}
                }
            }
            _ => {
                return Err(MidiError::Parse { offset: status_pos, reason: format!("unexpected status byte 0x{status:02X}") })
            }
        }
    }

    let mut dangling: Vec<_> = open.into_iter().flat_map(|((ch, p), q)| q.into_iter().map(move |(t, v)| (t, ch, p, v))).collect();
    dangling.sort_unstable();
    for (on_tick, channel, pitch, velocity) in dangling {
        out.notes.push(RawNote { on_tick, off_tick: tick.max(on_tick), pitch, velocity, channel, unterminated: true });
    }
    Ok(())
}
