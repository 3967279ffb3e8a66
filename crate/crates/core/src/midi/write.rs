use crate::note::NoteSequence;

fn push_vlq(out: &mut Vec<u8>, mut value: u32) {
    let mut buf = [0u8; 4];
    let mut i = 3;
    buf[i] = (value & 0x7F) as u8;
    value >>= 7;
    while value > 0 {
        i -= 1;
        buf[i] = ((value & 0x7F) as u8) | 0x80;
        value >>= 7;
    }
    out.extend_from_slice(&buf[i..]);
}

/// Timed event body; `class` orders events sharing a tick.
struct Ev {
    tick: u64,
    class: u8,
    seq: usize,
    data: Vec<u8>,
}

fn encode_track(mut events: Vec<Ev>) -> Vec<u8> {
    events.sort_by_key(|e| (e.tick, e.class, e.seq));
    let mut body = Vec::new();
    let mut last = 0u64;
    for e in &events {
        push_vlq(&mut body, u32::try_from(e.tick - last).expect("delta time exceeds 28 bits"));
        body.extend_from_slice(&e.data);
        last = e.tick;
    }
    body.extend_from_slice(&[0x00, 0xFF, 0x2F, 0x00]);
    let mut chunk = b"MTrk".to_vec();
    chunk.extend_from_slice(&(body.len() as u32).to_be_bytes());
    chunk.extend(body);
    chunk
}

/// Serializes a sequence into a format-1 Standard MIDI File.
///
/// Track 0 holds tempo events and markers, track 1 holds control changes
/// and notes. Note times are converted from seconds to the nearest tick of
/// the sequence's own tempo map. At equal ticks note-offs precede note-ons,
/// except for zero-length notes whose off follows their on.
pub fn encode_smf(seq: &NoteSequence) -> Vec<u8> {
    let tpq = seq.ticks_per_quarter();
    let mut out = b"MThd".to_vec();
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&2u16.to_be_bytes());
    out.extend_from_slice(&tpq.to_be_bytes());

    let mut meta = Vec::new();
    for (i, t) in seq.tempo_events().iter().enumerate() {
        let us = t.us_per_quarter.min(0xFF_FFFF);
        meta.push(Ev {
            tick: t.tick,
            class: 0,
            seq: i,
            data: vec![0xFF, 0x51, 0x03, (us >> 16) as u8, (us >> 8) as u8, us as u8],
        });
    }
    for (i, m) in seq.markers.iter().enumerate() {
        let mut data = vec![0xFF, 0x06];
        push_vlq(&mut data, m.text.len() as u32);
        data.extend_from_slice(m.text.as_bytes());
        meta.push(Ev { tick: m.tick, class: 1, seq: i, data });
    }
    out.extend(encode_track(meta));

    let mut evs = Vec::with_capacity(seq.notes.len() * 2 + seq.controls.len());
    for (i, c) in seq.controls.iter().enumerate() {
        evs.push(Ev { tick: c.tick, class: 1, seq: i, data: vec![0xB0 | (c.channel & 0x0F), c.controller & 0x7F, c.value & 0x7F] });
    }
    let mut ordered: Vec<_> = seq.notes.iter().collect();
    ordered.sort_by(|a, b| a.canonical_cmp(b));
    for (i, n) in ordered.into_iter().enumerate() {
        let on = seq.tempo.seconds_to_tick(n.onset);
        let off = seq.tempo.seconds_to_tick(n.onset + n.duration).max(on);
        let ch = n.channel & 0x0F;
        evs.push(Ev { tick: on, class: 2, seq: i, data: vec![0x90 | ch, n.pitch & 0x7F, n.velocity.clamp(1, 127)] });
        let off_class = if off == on { 3 } else { 0 };
        evs.push(Ev { tick: off, class: off_class, seq: i, data: vec![0x80 | ch, n.pitch & 0x7F, 0x40] });
    }
    out.extend(encode_track(evs));
    out
}
