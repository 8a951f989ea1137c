use super::{Sentence, Span, Token};

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

/// Whitespace split, then leading and trailing punctuation peeled off one
/// character at a time. Internal hyphens and apostrophes stay in the word.
pub fn tokenize(sentence: &Sentence) -> Vec<Token> {
    let mut spans = Vec::new();
    for (start, end) in whitespace_chunks(&sentence.text) {
        split_chunk(&sentence.text, start, end, &mut spans);
    }
    spans
        .into_iter()
        .enumerate()
        .map(|(word_index, span)| Token {
            sentence_index: sentence.index,
            word_index,
            char_span: span,
            surface: sentence.text[span.range()].to_string(),
        })
        .collect()
}

fn whitespace_chunks(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, text.len()));
    }
    out
}

fn split_chunk(text: &str, mut start: usize, mut end: usize, out: &mut Vec<Span>) {
    while let Some(c) = text[start..end].chars().next() {
        if !is_punct(c) {
            break;
        }
        out.push(Span::new(start, start + c.len_utf8()));
        start += c.len_utf8();
    }
    let mut trailing = Vec::new();
    while let Some(c) = text[start..end].chars().next_back() {
        if !is_punct(c) {
            break;
        }
        trailing.push(Span::new(end - c.len_utf8(), end));
        end -= c.len_utf8();
    }
    if start < end {
        out.push(Span::new(start, end));
    }
    out.extend(trailing.into_iter().rev());
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sentence(text: &str) -> Sentence {
        Sentence {
            doc_id: "d".into(),
            index: 3,
            char_span: Span::new(0, text.len()),
            text: text.into(),
            from_title: false,
        }
    }

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(&sentence(text)).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn plain_words() {
        assert_eq!(surfaces("Turing Test"), ["Turing", "Test"]);
    }

    #[test]
    fn parentheses_detach() {
        assert_eq!(surfaces("(Turing Test)"), ["(", "Turing", "Test", ")"]);
    }

    #[test]
    fn internal_hyphen_and_apostrophe_kept() {
        assert_eq!(surfaces("state-of-the-art"), ["state-of-the-art"]);
        assert_eq!(surfaces("I've seen it."), ["I've", "seen", "it", "."]);
        assert_eq!(surfaces("\"Turing Test\")"), ["\"", "Turing", "Test", "\"", ")"]);
    }

    #[test]
    fn carries_sentence_index() {
        let toks = tokenize(&sentence("a b"));
        assert!(toks.iter().all(|t| t.sentence_index == 3));
        assert_eq!(toks[1].word_index, 1);
    }

    proptest! {
        #[test]
        fn spans_round_trip(text in "[a-zA-Z0-9 .,()'\\-é!?\n]{0,60}") {
            let s = sentence(&text);
            let toks = tokenize(&s);
            let mut prev = 0;
            for t in &toks {
                prop_assert_eq!(&s.text[t.char_span.range()], t.surface.as_str());
                prop_assert!(t.char_span.start >= prev);
                prop_assert!(!t.char_span.is_empty());
                prev = t.char_span.end;
            }
            // every non-whitespace char is covered
            let covered: usize = toks.iter().map(|t| t.surface.chars().count()).sum();
            prop_assert_eq!(covered, text.chars().filter(|c| !c.is_whitespace()).count());
            prop_assert_eq!(toks, tokenize(&s));
        }
    }
}
