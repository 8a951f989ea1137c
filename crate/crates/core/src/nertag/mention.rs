use serde::{Deserialize, Serialize};

use super::{is_valid_bio, Label, LabelSet, NerError, ScoreMatrix};
use crate::corpus::{Sentence, Span, Token};
use crate::Scalar;

/// A decoded entity span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mention {
    pub doc_id: String,
    pub sentence_index: usize,
    pub from_title: bool,
    /// Token range `[first, last + 1)`.
    pub token_span: Span,
    /// Byte span into the sentence text.
    pub char_span: Span,
    /// The covered sentence text.
    pub surface: String,
    pub entity_type: String,
    /// Sum of the chosen labels' scores over the span; 0 without scores.
    pub score: f64,
}

/// One mention per maximal `B-t I-t*` run.
pub fn extract_mentions<T: Scalar>(
    sentence: &Sentence,
    tokens: &[Token],
    labels: &[Label],
    label_set: &LabelSet,
    scores: Option<&ScoreMatrix<T>>,
) -> Result<Vec<Mention>, NerError> {
    if tokens.len() != labels.len() {
        return Err(NerError::LengthMismatch {
            expected: tokens.len(),
            got: labels.len(),
        });
    }
    if !is_valid_bio(labels) {
        return Err(NerError::InvalidBio { sentence: sentence.index });
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        let Label::B(t) = labels[i] else {
            i += 1;
            continue;
        };
        let mut j = i + 1;
        while j < labels.len() && labels[j] == Label::I(t) {
            j += 1;
        }
        let char_span = Span::new(tokens[i].char_span.start, tokens[j - 1].char_span.end);
        let score = scores.map_or(0.0, |m| {
            (i..j)
                .map(|r| m.get(r, label_set.ordinal(labels[r])).as_f64())
                .sum()
        });
        out.push(Mention {
            doc_id: sentence.doc_id.clone(),
            sentence_index: sentence.index,
            from_title: sentence.from_title,
            token_span: Span::new(i, j),
            char_span,
            surface: sentence.text[char_span.range()].to_string(),
            entity_type: label_set.types()[t].clone(),
            score,
        });
        i = j;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    fn setup(text: &str) -> (Sentence, Vec<Token>) {
        let s = Sentence {
            doc_id: "d1".into(),
            index: 2,
            char_span: Span::new(0, text.len()),
            text: text.into(),
            from_title: false,
        };
        let t = tokenize(&s);
        (s, t)
    }

    #[test]
    fn single_run() {
        let ls = LabelSet::new(["per", "org"]).unwrap();
        let (s, t) = setup("Alan Turing proposed");
        let m = extract_mentions::<f64>(&s, &t, &[Label::B(0), Label::I(0), Label::O], &ls, None).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].surface, "Alan Turing");
        assert_eq!(m[0].entity_type, "per");
        assert_eq!(m[0].token_span, Span::new(0, 2));
        assert_eq!(m[0].sentence_index, 2);
    }

    #[test]
    fn all_outside() {
        let ls = LabelSet::new(["per"]).unwrap();
        let (s, t) = setup("nothing here");
        assert!(extract_mentions::<f64>(&s, &t, &[Label::O, Label::O], &ls, None).unwrap().is_empty());
    }

    #[test]
    fn adjacent_begins_are_separate() {
        let ls = LabelSet::new(["per", "org"]).unwrap();
        let (s, t) = setup("Contoso Fabrikam");
        let m = extract_mentions::<f64>(&s, &t, &[Label::B(1), Label::B(1)], &ls, None).unwrap();
        assert_eq!(m.iter().map(|m| m.surface.as_str()).collect::<Vec<_>>(), ["Contoso", "Fabrikam"]);
    }

    #[test]
    fn invalid_sequence_rejected() {
        let ls = LabelSet::new(["per"]).unwrap();
        let (s, t) = setup("x y");
        assert!(extract_mentions::<f64>(&s, &t, &[Label::I(0), Label::O], &ls, None).is_err());
        assert!(extract_mentions::<f64>(&s, &t, &[Label::O], &ls, None).is_err());
    }

    #[test]
    fn score_sums_span() {
        let ls = LabelSet::new(["per"]).unwrap();
        let (s, t) = setup("Grace Hopper");
        let m = ScoreMatrix::from_rows(&[vec![0.0, -0.5, -3.0], vec![-2.0, -2.0, -0.25]]).unwrap();
        let out = extract_mentions(&s, &t, &[Label::B(0), Label::I(0)], &ls, Some(&m)).unwrap();
        assert_eq!(out[0].score, -0.75);
    }
}
