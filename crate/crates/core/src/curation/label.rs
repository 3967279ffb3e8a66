use serde::{Deserialize, Serialize};

/// Recall a high-quality file needs to enter the filtered subset.
pub const STAR_MIN_RECALL: f64 = 0.85;

/// How a MIDI file was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    /// Rendered from notation.
    Score,
    /// Captured from an instrument.
    Recorded,
    /// Transcribed from audio.
    Transcribed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Score,
    HighQuality,
    LowQuality,
    Corrupted,
    NoLabel,
}

impl Label {
    pub fn name(&self) -> &'static str {
        match self {
            Label::Score => "score",
            Label::HighQuality => "high_quality",
            Label::LowQuality => "low_quality",
            Label::Corrupted => "corrupted",
            Label::NoLabel => "no_label",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelBasis {
    Heuristic,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityLabel {
    pub label: Label,
    pub basis: LabelBasis,
    pub adjusted_ratio: Option<f64>,
}

/// Soft label from provenance and adjusted alignment ratio.
///
/// | origin      | ratio r         | label       |
/// |-------------|-----------------|-------------|
/// | score       | any             | Score       |
/// | recorded    | any             | HighQuality |
/// | transcribed | r > 0.9         | HighQuality |
/// | transcribed | 0.7 < r < 0.85  | LowQuality  |
/// | transcribed | r < 0.65        | Corrupted   |
/// | transcribed | otherwise/none  | NoLabel     |
pub fn heuristic_label(origin: Origin, adjusted_ratio: Option<f64>) -> QualityLabel {
    let label = match (origin, adjusted_ratio) {
        (Origin::Score, _) => Label::Score,
        (Origin::Recorded, _) => Label::HighQuality,
        (Origin::Transcribed, Some(r)) if r > 0.9 => Label::HighQuality,
        (Origin::Transcribed, Some(r)) if r > 0.7 && r < 0.85 => Label::LowQuality,
        (Origin::Transcribed, Some(r)) if r < 0.65 => Label::Corrupted,
        (Origin::Transcribed, _) => Label::NoLabel,
    };
    QualityLabel { label, basis: LabelBasis::Heuristic, adjusted_ratio }
}

/// High-quality files whose refined alignment covers at least 85% of the
/// score.
pub fn star_filter(label: &QualityLabel, refined_recall: f64) -> bool {
    label.label == Label::HighQuality && refined_recall >= STAR_MIN_RECALL
}
