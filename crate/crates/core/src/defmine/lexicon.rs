use std::collections::BTreeSet;
use std::path::Path;

use super::DefError;

const BUNDLED_NEGATIVE: &str = include_str!("../../resources/negative-words.txt");
const BUNDLED_POSITIVE: &str = include_str!("../../resources/positive-words.txt");

/// Negative and positive opinion words. Only the negative set filters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpinionLexicon {
    negative: BTreeSet<String>,
    positive: BTreeSet<String>,
}

/// Lines starting with `;` are comments, matching the Hu-Liu file layout.
fn parse_words(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with(';'))
        .map(str::to_lowercase)
        .collect()
}

impl Default for OpinionLexicon {
    fn default() -> Self {
        Self::from_text(BUNDLED_NEGATIVE, BUNDLED_POSITIVE)
    }
}

impl OpinionLexicon {
    /// Words listed in both sets are kept as negative only.
    pub fn new(negative: BTreeSet<String>, mut positive: BTreeSet<String>) -> Self {
        let negative: BTreeSet<String> = negative.into_iter().map(|w| w.to_lowercase()).collect();
        positive = positive.into_iter().map(|w| w.to_lowercase()).collect();
        positive.retain(|w| !negative.contains(w));
        OpinionLexicon { negative, positive }
    }

    pub fn from_text(negative: &str, positive: &str) -> Self {
        Self::new(parse_words(negative), parse_words(positive))
    }

    pub fn from_files(negative: impl AsRef<Path>, positive: Option<&Path>) -> Result<Self, DefError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| DefError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        let neg = read(negative.as_ref())?;
        let pos = positive.map(read).transpose()?.unwrap_or_default();
        Ok(Self::from_text(&neg, &pos))
    }

    pub fn is_negative(&self, word: &str) -> bool {
        self.negative.contains(word)
    }

    pub fn is_positive(&self, word: &str) -> bool {
        self.positive.contains(word)
    }

    pub fn negative_len(&self) -> usize {
        self.negative.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpinionVerdict {
    Keep,
    /// First negative word found.
    Drop(String),
}

/// Drops a sentence if any lowercase whole-word token is a negative word.
pub fn opinion_filter(sentence: &str, lexicon: &OpinionLexicon) -> OpinionVerdict {
    for raw in sentence.split_whitespace() {
        let word = raw
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_lowercase();
        if !word.is_empty() && lexicon.is_negative(&word) {
            return OpinionVerdict::Drop(word);
        }
    }
    OpinionVerdict::Keep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caterpillar_is_dropped() {
        let lex = OpinionLexicon::default();
        assert_eq!(
            opinion_filter("The Caterpillar 797B is the biggest car I've ever seen.", &lex),
            OpinionVerdict::Drop("biggest".into())
        );
    }

    #[test]
    fn neutral_kept() {
        let lex = OpinionLexicon::default();
        assert_eq!(opinion_filter("Statistics is a branch of mathematics.", &lex), OpinionVerdict::Keep);
        assert_eq!(opinion_filter("", &lex), OpinionVerdict::Keep);
    }

    #[test]
    fn whole_words_only() {
        let lex = OpinionLexicon::from_text("bad\n", "");
        assert_eq!(opinion_filter("Badminton is a sport.", &lex), OpinionVerdict::Keep);
        assert_eq!(opinion_filter("It was (BAD).", &lex), OpinionVerdict::Drop("bad".into()));
    }

    #[test]
    fn overlap_resolved_to_negative() {
        let lex = OpinionLexicon::from_text("; comment\nenvious\n", "envious\ngood\n");
        assert!(lex.is_negative("envious"));
        assert!(!lex.is_positive("envious"));
        assert!(lex.is_positive("good"));
    }

    #[test]
    fn bundled_sets_are_disjoint() {
        let lex = OpinionLexicon::default();
        assert!(lex.negative.is_disjoint(&lex.positive));
        assert!(lex.negative_len() > 100);
    }
}
