use super::{Alignment, AlignmentError};

/// Performance-to-score note count ratio, N_p / N_s.
pub fn note_ratio(a: &Alignment) -> Result<f64, AlignmentError> {
    if a.n_score() == 0 {
        return Err(AlignmentError::UndefinedRatio("score note count"));
    }
    Ok(a.n_perf() as f64 / a.n_score() as f64)
}

/// Share of score notes that are matched, N_m / N_s.
pub fn recall(a: &Alignment) -> Result<f64, AlignmentError> {
    if a.n_score() == 0 {
        return Err(AlignmentError::UndefinedRatio("score note count"));
    }
    Ok(a.n_matched() as f64 / a.n_score() as f64)
}

/// Share of performed notes that are matched, N_m / N_p.
pub fn precision(a: &Alignment) -> Result<f64, AlignmentError> {
    if a.n_perf() == 0 {
        return Err(AlignmentError::UndefinedRatio("performance note count"));
    }
    Ok(a.n_matched() as f64 / a.n_perf() as f64)
}

/// N_m / min(N_s, N_p), which equals max(recall, precision).
///
/// Skipped repeats (few performed notes, all matched) and transcription
/// noise (extra performed notes, all score notes present) both score high.
pub fn adjusted_ratio(a: &Alignment) -> Result<f64, AlignmentError> {
    if a.n_score() == 0 {
        return Err(AlignmentError::UndefinedRatio("score note count"));
    }
    if a.n_perf() == 0 {
        return Err(AlignmentError::UndefinedRatio("performance note count"));
    }
    Ok(a.n_matched() as f64 / a.n_score().min(a.n_perf()) as f64)
}
