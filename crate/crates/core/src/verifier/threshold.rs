use super::{pair_similarity, EncoderState, VerifierError};
use crate::types::{IrisPair, PairLabel};

/// Threshold maximizing accuracy of `similarity >= τ ⇒ genuine`.
///
/// Accuracy is piecewise constant in τ between consecutive distinct scores.
/// Among maximal pieces the lowest run of adjacent ones is taken and τ is the
/// midpoint of that run, bounded to `[0, 100]`.
pub fn select_threshold_from_scores(scores: &[(f64, PairLabel)]) -> Result<f64, VerifierError> {
    let genuine_total = scores.iter().filter(|(_, y)| y.is_genuine()).count();
    if genuine_total == 0 || genuine_total == scores.len() {
        return Err(VerifierError::SingleClass);
    }
    let mut sorted: Vec<(f64, PairLabel)> = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    // values[i] with (genuine, synthetic) counts strictly below it
    let mut values: Vec<f64> = Vec::new();
    let mut below: Vec<(usize, usize)> = Vec::new();
    let (mut g_seen, mut s_seen) = (0usize, 0usize);
    for (s, y) in &sorted {
        if values.last() != Some(s) {
            values.push(*s);
            below.push((g_seen, s_seen));
        }
        if y.is_genuine() {
            g_seen += 1;
        } else {
            s_seen += 1;
        }
    }

    // piece i < k: τ in (values[i-1], values[i]]; piece k: τ above every score
    let k = values.len();
    let mut pieces: Vec<(f64, f64, usize)> = Vec::with_capacity(k + 1);
    for i in 0..k {
        let lo = if i == 0 { values[0].min(0.0) } else { values[i - 1] };
        let (g_below, s_below) = below[i];
        let correct = (genuine_total - g_below) + s_below;
        pieces.push((lo, values[i], correct));
    }
    if values[k - 1] < 100.0 {
        pieces.push((values[k - 1], 100.0, s_seen));
    }

    let best = pieces.iter().map(|p| p.2).max().expect("nonempty");
    let first = pieces.iter().position(|p| p.2 == best).unwrap();
    let mut last = first;
    while last + 1 < pieces.len() && pieces[last + 1].2 == best {
        last += 1;
    }
    Ok(0.5 * (pieces[first].0 + pieces[last].1))
}

/// Threshold selected on the encoder's similarities over `validation`.
pub fn select_threshold(
    state: &EncoderState,
    validation: &[(IrisPair, PairLabel)],
) -> Result<f64, VerifierError> {
    let scores = validation
        .iter()
        .map(|(pair, y)| Ok((pair_similarity(state, pair)?, *y)))
        .collect::<Result<Vec<_>, VerifierError>>()?;
    select_threshold_from_scores(&scores)
}
