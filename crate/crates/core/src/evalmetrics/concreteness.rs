use super::MetricError;
use crate::embedstore::{tokenize, ConcretenessLexicon};

/// Mean lexicon score over every token occurrence found in the lexicon.
/// Tokens missing from the lexicon are skipped.
pub fn avg_concreteness<'a>(
    texts: impl IntoIterator<Item = &'a str>,
    lexicon: &ConcretenessLexicon,
) -> Result<f64, MetricError> {
    let (mut sum, mut count) = (0.0, 0usize);
    for text in texts {
        for token in tokenize(text) {
            if let Some(score) = lexicon.get(&token) {
                sum += score;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(MetricError::NoCoveredToken);
    }
    Ok(sum / count as f64)
}
