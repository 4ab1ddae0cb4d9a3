use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{CaptionCorpus, StoreError};

/// A sentence pair with a human similarity judgement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelatednessPair {
    pub index_a: usize,
    pub index_b: usize,
    pub gold_score: f64,
}

/// Parses `caption_id_a \t caption_id_b \t gold_score`, resolving ids
/// against `corpus`.
pub fn parse_relatedness(src: &str, corpus: &CaptionCorpus) -> Result<Vec<RelatednessPair>, StoreError> {
    let mut pairs = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(StoreError::Parse {
                line: line_no,
                reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let resolve = |id: &str| {
            corpus.caption_index(id).ok_or_else(|| StoreError::UnknownCaptionId {
                line: line_no,
                id: id.to_string(),
            })
        };
        let gold_score: f64 = fields[2].trim().parse().map_err(|_| StoreError::Parse {
            line: line_no,
            reason: format!("bad score {:?}", fields[2]),
        })?;
        if !gold_score.is_finite() {
            return Err(StoreError::Parse {
                line: line_no,
                reason: "score is not finite".into(),
            });
        }
        pairs.push(RelatednessPair {
            index_a: resolve(fields[0])?,
            index_b: resolve(fields[1])?,
            gold_score,
        });
    }
    Ok(pairs)
}

pub fn load_relatedness(path: impl AsRef<Path>, corpus: &CaptionCorpus) -> Result<Vec<RelatednessPair>, StoreError> {
    let path = path.as_ref();
    let src = fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    parse_relatedness(&src, corpus)
}

/// Word concreteness ratings on a 0..=5 scale, keyed by lowercased word.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConcretenessLexicon {
    scores: HashMap<String, f64>,
}

impl ConcretenessLexicon {
    pub fn new(entries: impl IntoIterator<Item = (String, f64)>) -> Result<Self, StoreError> {
        let mut scores = HashMap::new();
        for (word, score) in entries {
            if !(0.0..=5.0).contains(&score) {
                return Err(StoreError::InvalidParam(format!(
                    "concreteness of {word:?} is {score}, outside [0, 5]"
                )));
            }
            scores.insert(word.to_lowercase(), score);
        }
        Ok(Self { scores })
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.scores.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

pub fn parse_lexicon(src: &str) -> Result<ConcretenessLexicon, StoreError> {
    let mut entries = Vec::new();
    for (i, line) in src.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (word, score) = line.split_once('\t').ok_or_else(|| StoreError::Parse {
            line: i + 1,
            reason: "expected `word \\t score`".into(),
        })?;
        let score: f64 = score.trim().parse().map_err(|_| StoreError::Parse {
            line: i + 1,
            reason: format!("bad score {score:?}"),
        })?;
        entries.push((word.to_string(), score));
    }
    let lexicon = ConcretenessLexicon::new(entries)?;
    if lexicon.is_empty() {
        return Err(StoreError::InvalidParam("concreteness lexicon is empty".into()));
    }
    Ok(lexicon)
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<ConcretenessLexicon, StoreError> {
    let path = path.as_ref();
    let src = fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    parse_lexicon(&src)
}

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_lowercases_and_splits() {
        let toks: Vec<_> = tokenize("A man's DOG, running-fast!").collect();
        assert_eq!(toks, ["a", "man", "s", "dog", "running", "fast"]);
    }

    #[test]
    fn lexicon_range_enforced() {
        assert!(parse_lexicon("cat\t4.5\ndog\t5.1\n").is_err());
        let lex = parse_lexicon("Cat\t4.5\n").unwrap();
        assert_eq!(lex.get("cat"), Some(4.5));
    }

    #[test]
    fn relatedness_resolves_ids() {
        let corpus = CaptionCorpus::parse("a\tX\nb\tY\n").unwrap();
        let pairs = parse_relatedness("a\tb\t3.5\n", &corpus).unwrap();
        assert_eq!(
            pairs,
            vec![RelatednessPair {
                index_a: 0,
                index_b: 1,
                gold_score: 3.5
            }]
        );
        assert!(matches!(
            parse_relatedness("a\tq\t1\n", &corpus),
            Err(StoreError::UnknownCaptionId { .. })
        ));
    }
}
