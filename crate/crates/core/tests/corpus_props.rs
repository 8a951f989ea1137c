use proptest::prelude::*;

use topicforge::corpus::{read_documents, split_sentences, tokenize, Document};

fn doc(title: String, body: String) -> Document {
    Document {
        doc_id: "d".into(),
        title,
        body,
        author_id: "a".into(),
        timestamp: 1,
        deleted: false,
    }
}

proptest! {
    #[test]
    fn sentences_and_tokens_slice_their_source(
        title in "[A-Za-z ]{0,20}",
        body in "[A-Za-z0-9 .,!?'()\\-\n]{0,200}",
    ) {
        let d = doc(title, body);
        let sentences = split_sentences(&d);
        let mut prev_end = 0;
        for (i, s) in sentences.iter().enumerate() {
            prop_assert_eq!(s.index, i);
            let source = if s.from_title { &d.title } else { &d.body };
            prop_assert_eq!(&source[s.char_span.range()], s.text.as_str());
            if !s.from_title {
                prop_assert!(s.char_span.start >= prev_end);
                prev_end = s.char_span.end;
            }
            for t in tokenize(s) {
                prop_assert_eq!(&s.text[t.char_span.range()], t.surface.as_str());
            }
        }
        prop_assert_eq!(sentences, split_sentences(&d));
    }

    #[test]
    fn ingest_is_idempotent(ids in prop::collection::vec(0u8..6, 1..20)) {
        let lines: String = ids
            .iter()
            .enumerate()
            .map(|(k, id)| format!("{{\"doc_id\":\"d{id}\",\"title\":\"T\",\"body\":\"v{k}\",\"author_id\":\"a\",\"timestamp\":{k}}}\n"))
            .collect();
        let once = read_documents(lines.as_bytes());
        let twice = read_documents(format!("{lines}{lines}").as_bytes());
        prop_assert_eq!(&once.documents, &twice.documents);
        let distinct: std::collections::BTreeSet<_> = ids.iter().collect();
        prop_assert_eq!(once.documents.len(), distinct.len());
    }
}
