//! Portable alignment container.
//!
//! Layout (all multi-byte values little-endian):
//!
//! ```text
//! PFALIGN <version> rows=<n> n_score=<s> n_perf=<p> stages=<k>\n
//! k × { u8 name length, name bytes (ASCII), f64 recall }
//! column score_index   : n × i64   (-1 = absent)
//! column perf_index    : n × i64   (-1 = absent)
//! column score_pitch   : n × i16   (-1 = absent)
//! column perf_pitch    : n × i16   (-1 = absent)
//! column score_onset   : n × f64   (beats, NaN = absent)
//! column score_offset  : n × f64   (beats, NaN = absent)
//! column perf_onset    : n × f64   (seconds, NaN = absent)
//! column perf_offset   : n × f64   (seconds, NaN = absent)
//! column interpolated  : n × u8    (0 / 1)
//! ```
//!
//! Rows follow the alignment's link order (score order, then insertions).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Alignment, AlignmentError, Link, LinkIssue};
use crate::note::NoteSequence;

pub const FORMAT_MAGIC: &str = "PFALIGN";
pub const FORMAT_VERSION: u32 = 1;

/// Column names of the CSV export, in order.
pub const CSV_COLUMNS: [&str; 9] = [
    "score_index",
    "perf_index",
    "score_pitch",
    "perf_pitch",
    "score_onset_beats",
    "score_offset_beats",
    "perf_onset_sec",
    "perf_offset_sec",
    "interpolated",
];

/// Attributes of one link as stored on disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentRow {
    pub score_index: i64,
    pub perf_index: i64,
    pub score_pitch: i16,
    pub perf_pitch: i16,
    pub score_onset: f64,
    pub score_offset: f64,
    pub perf_onset: f64,
    pub perf_offset: f64,
    pub interpolated: bool,
}

impl AlignmentRow {
    fn bitwise_eq(&self, o: &AlignmentRow) -> bool {
        self.score_index == o.score_index
            && self.perf_index == o.perf_index
            && self.score_pitch == o.score_pitch
            && self.perf_pitch == o.perf_pitch
            && self.score_onset.to_bits() == o.score_onset.to_bits()
            && self.score_offset.to_bits() == o.score_offset.to_bits()
            && self.perf_onset.to_bits() == o.perf_onset.to_bits()
            && self.perf_offset.to_bits() == o.perf_offset.to_bits()
            && self.interpolated == o.interpolated
    }
}

/// An alignment together with the per-link note attributes.
#[derive(Debug, Clone)]
pub struct AlignmentTable {
    pub alignment: Alignment,
    pub rows: Vec<AlignmentRow>,
}

impl PartialEq for AlignmentTable {
    fn eq(&self, other: &Self) -> bool {
        self.alignment == other.alignment
            && self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| a.bitwise_eq(b))
    }
}

impl AlignmentTable {
    /// Fills the attribute columns from the aligned sequences.
    pub fn from_sequences(a: &Alignment, score: &NoteSequence, perf: &NoteSequence) -> Result<Self, AlignmentError> {
        let mut issues = Vec::new();
        if a.n_score() != score.len() || a.n_perf() != perf.len() {
            for (i, l) in a.links().iter().enumerate() {
                if let Some(s) = l.score().filter(|&s| s >= score.len()) {
                    issues.push(LinkIssue::ScoreOutOfBounds { link: i, index: s });
                }
                if let Some(p) = l.perf().filter(|&p| p >= perf.len()) {
                    issues.push(LinkIssue::PerfOutOfBounds { link: i, index: p });
                }
            }
            if issues.is_empty() {
                return Err(AlignmentError::Format(format!(
                    "alignment covers {}x{} notes but sequences have {}x{}",
                    a.n_score(),
                    a.n_perf(),
                    score.len(),
                    perf.len()
                )));
            }
            return Err(AlignmentError::Invalid(issues));
        }
        let rows = a
            .links()
            .iter()
            .map(|l| {
                let (si, pi) = l.to_sentinel();
                let s = l.score().map(|i| &score.notes[i]);
                let p = l.perf().map(|i| &perf.notes[i]);
                AlignmentRow {
                    score_index: si,
                    perf_index: pi,
                    score_pitch: s.map_or(-1, |n| i16::from(n.pitch)),
                    perf_pitch: p.map_or(-1, |n| i16::from(n.pitch)),
                    score_onset: s.map_or(f64::NAN, |n| n.onset_beats),
                    score_offset: s.map_or(f64::NAN, |n| n.offset_beats()),
                    perf_onset: p.map_or(f64::NAN, |n| n.onset),
                    perf_offset: p.map_or(f64::NAN, |n| n.offset()),
                    interpolated: p.is_some_and(|n| n.flags.interpolated),
                }
            })
            .collect();
        Ok(Self { alignment: a.clone(), rows })
    }

    /// Serialized container bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let a = &self.alignment;
        let mut out = format!(
            "{FORMAT_MAGIC} {FORMAT_VERSION} rows={} n_score={} n_perf={} stages={}\n",
            self.rows.len(),
            a.n_score(),
            a.n_perf(),
            a.stage_recalls.len()
        )
        .into_bytes();
        for (name, value) in &a.stage_recalls {
            out.push(name.len() as u8);
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&value.to_le_bytes());
        }
        let r = &self.rows;
        r.iter().for_each(|x| out.extend_from_slice(&x.score_index.to_le_bytes()));
        r.iter().for_each(|x| out.extend_from_slice(&x.perf_index.to_le_bytes()));
        r.iter().for_each(|x| out.extend_from_slice(&x.score_pitch.to_le_bytes()));
        r.iter().for_each(|x| out.extend_from_slice(&x.perf_pitch.to_le_bytes()));
        r.iter().for_each(|x| out.extend_from_slice(&x.score_onset.to_le_bytes()));
        r.iter().for_each(|x| out.extend_from_slice(&x.score_offset.to_le_bytes()));
        r.iter().for_each(|x| out.extend_from_slice(&x.perf_onset.to_le_bytes()));
        r.iter().for_each(|x| out.extend_from_slice(&x.perf_offset.to_le_bytes()));
        r.iter().for_each(|x| out.push(u8::from(x.interpolated)));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AlignmentError> {
        let fmt_err = |m: &str| AlignmentError::Format(m.to_string());
        let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| fmt_err("missing header line"))?;
        let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| fmt_err("header is not ASCII"))?;
        let mut parts = header.split(' ');
        if parts.next() != Some(FORMAT_MAGIC) {
            return Err(fmt_err("bad magic"));
        }
        let version: u32 = parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| fmt_err("missing version"))?;
        if version != FORMAT_VERSION {
            return Err(AlignmentError::UnsupportedVersion(version));
        }
        let mut fields = BTreeMap::new();
        for p in parts {
            let (k, v) = p.split_once('=').ok_or_else(|| fmt_err("bad header field"))?;
            let v: usize = v.parse().map_err(|_| fmt_err("bad header number"))?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| AlignmentError::Format(format!("missing header field {k}")));
        let (n, n_score, n_perf, n_stages) = (get("rows")?, get("n_score")?, get("n_perf")?, get("stages")?);

        let mut pos = nl + 1;
        let mut take = |len: usize| -> Result<&[u8], AlignmentError> {
            let s = bytes.get(pos..pos + len).ok_or_else(|| fmt_err("truncated body"))?;
            pos += len;
            Ok(s)
        };
        let mut stage_recalls = BTreeMap::new();
        for _ in 0..n_stages {
            let len = take(1)?[0] as usize;
            let name = String::from_utf8(take(len)?.to_vec()).map_err(|_| fmt_err("bad stage name"))?;
            let value = f64::from_le_bytes(take(8)?.try_into().unwrap());
            stage_recalls.insert(name, value);
        }
        let i64s = |b: &[u8]| b.chunks_exact(8).map(|c| i64::from_le_bytes(c.try_into().unwrap())).collect::<Vec<_>>();
        let i16s = |b: &[u8]| b.chunks_exact(2).map(|c| i16::from_le_bytes(c.try_into().unwrap())).collect::<Vec<_>>();
        let f64s = |b: &[u8]| b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect::<Vec<_>>();
        let score_index = i64s(take(8 * n)?);
        let perf_index = i64s(take(8 * n)?);
        let score_pitch = i16s(take(2 * n)?);
        let perf_pitch = i16s(take(2 * n)?);
        let score_onset = f64s(take(8 * n)?);
        let score_offset = f64s(take(8 * n)?);
        let perf_onset = f64s(take(8 * n)?);
        let perf_offset = f64s(take(8 * n)?);
        let interpolated = take(n)?.to_vec();
        if pos != bytes.len() {
            return Err(fmt_err("trailing bytes after columns"));
        }

        let mut rows = Vec::with_capacity(n);
        let mut links = Vec::with_capacity(n);
        for i in 0..n {
            let link = Link::from_sentinel(score_index[i], perf_index[i])
                .ok_or_else(|| AlignmentError::Format(format!("row {i}: invalid index pair")))?;
            links.push(link);
            rows.push(AlignmentRow {
                score_index: score_index[i],
                perf_index: perf_index[i],
                score_pitch: score_pitch[i],
                perf_pitch: perf_pitch[i],
                score_onset: score_onset[i],
                score_offset: score_offset[i],
                perf_onset: perf_onset[i],
                perf_offset: perf_offset[i],
                interpolated: interpolated[i] != 0,
            });
        }
        let mut alignment = Alignment::new(links, n_score, n_perf)?;
        alignment.stage_recalls = stage_recalls;
        // rows follow the canonical link order
        let mut keyed: Vec<(Link, AlignmentRow)> =
            rows.into_iter().map(|r| (Link::from_sentinel(r.score_index, r.perf_index).unwrap(), r)).collect();
        keyed.sort_by_key(|(l, _)| l.order_key());
        let rows = keyed.into_iter().map(|(_, r)| r).collect();
        Ok(Self { alignment, rows })
    }

    /// Sets the `interpolated` flag on performance notes from the stored mask.
    pub fn apply_interpolated_flags(&self, perf: &mut NoteSequence) {
        for r in &self.rows {
            if r.perf_index >= 0 {
                if let Some(n) = perf.notes.get_mut(r.perf_index as usize) {
                    n.flags.interpolated = r.interpolated;
                }
            }
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), AlignmentError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    /// Lossless CSV rendering (shortest round-trip float formatting).
    pub fn to_csv(&self) -> String {
        let mut out = CSV_COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{:?},{:?},{:?},{:?},{}\n",
                r.score_index,
                r.perf_index,
                r.score_pitch,
                r.perf_pitch,
                r.score_onset,
                r.score_offset,
                r.perf_onset,
                r.perf_offset,
                u8::from(r.interpolated)
            ));
        }
        out
    }
}

/// Writes the container file for an alignment of the given sequences.
pub fn write_alignment(
    a: &Alignment,
    score: &NoteSequence,
    perf: &NoteSequence,
    path: impl AsRef<Path>,
) -> Result<(), AlignmentError> {
    AlignmentTable::from_sequences(a, score, perf)?.write(path)
}

pub fn read_alignment_table(path: impl AsRef<Path>) -> Result<AlignmentTable, AlignmentError> {
    AlignmentTable::from_bytes(&fs::read(path)?)
}

pub fn read_alignment(path: impl AsRef<Path>) -> Result<Alignment, AlignmentError> {
    Ok(read_alignment_table(path)?.alignment)
}

/// Writes the CSV export.
pub fn write_csv(table: &AlignmentTable, path: impl AsRef<Path>) -> Result<(), AlignmentError> {
    let mut f = fs::File::create(path)?;
    f.write_all(table.to_csv().as_bytes())?;
    Ok(())
}
