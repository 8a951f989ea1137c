use crate::hashing::hash_features;

pub const SENTENCE_START: &str = "<s>";
pub const SENTENCE_END: &str = "</s>";

/// Uppercase to `X`, lowercase to `x`, digits to `9`, other characters kept;
/// runs of the same class collapse to one symbol.
pub fn word_shape(word: &str) -> String {
    let mut out = String::new();
    for c in word.chars() {
        let s = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_numeric() {
            '9'
        } else {
            c
        };
        if !out.ends_with(s) {
            out.push(s);
        }
    }
    out
}

fn affixes(lower: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = lower.chars().collect();
    for n in 1..=3.min(chars.len()) {
        out.push(format!("pre{n}={}", chars[..n].iter().collect::<String>()));
        out.push(format!("suf{n}={}", chars[chars.len() - n..].iter().collect::<String>()));
    }
}

/// Feature strings for the token at `index`.
pub fn feature_strings<S: AsRef<str>>(index: usize, tokens: &[S], from_title: bool) -> Vec<String> {
    assert!(index < tokens.len(), "token index {index} out of range");
    let word = tokens[index].as_ref();
    let lower = word.to_lowercase();
    let mut out = vec![
        "bias".to_string(),
        format!("w={lower}"),
        format!("shape={}", word_shape(word)),
    ];
    affixes(&lower, &mut out);
    let prev = match index {
        0 => SENTENCE_START.to_string(),
        i => tokens[i - 1].as_ref().to_lowercase(),
    };
    let next = tokens
        .get(index + 1)
        .map_or_else(|| SENTENCE_END.to_string(), |t| t.as_ref().to_lowercase());
    out.push(format!("prev={prev}"));
    out.push(format!("next={next}"));
    if from_title {
        out.push("title".to_string());
    }
    out
}

/// Hashed, deduplicated feature indices in `[0, dim)`.
pub fn featurize<S: AsRef<str>>(index: usize, tokens: &[S], from_title: bool, dim: usize) -> Vec<usize> {
    hash_features(&feature_strings(index, tokens, from_title), dim)
}
