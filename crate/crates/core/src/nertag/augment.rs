use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Label, LabelSet, LabeledSentence, NerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentMode {
    Lowercase,
    EntityReplace,
}

/// Replacement surfaces per entity type name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityBank(pub BTreeMap<String, Vec<String>>);

impl EntityBank {
    /// JSON object mapping type name to a list of surfaces.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, NerError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|source| NerError::Io {
            path: path.as_ref().display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| NerError::Format(e.to_string()))
    }
}

/// Returns the input followed by one augmented copy of every sentence.
///
/// `Lowercase` lowercases tokens and keeps labels. `EntityReplace` swaps each
/// mention for a uniformly drawn bank entry of the same type, re-spanning the
/// labels as `B` then `I` over the replacement's whitespace tokens.
pub fn augment(
    data: &[LabeledSentence],
    mode: AugmentMode,
    bank: Option<&EntityBank>,
    labels: &LabelSet,
    seed: u64,
) -> Result<Vec<LabeledSentence>, NerError> {
    let mut out = data.to_vec();
    match mode {
        AugmentMode::Lowercase => out.extend(data.iter().map(|s| LabeledSentence {
            tokens: s.tokens.iter().map(|t| t.to_lowercase()).collect(),
            labels: s.labels.clone(),
            from_title: s.from_title,
        })),
        AugmentMode::EntityReplace => {
            let empty = EntityBank::default();
            let bank = bank.unwrap_or(&empty);
            // every type present must have at least one surface
            let mut resolved: BTreeMap<usize, Vec<Vec<String>>> = BTreeMap::new();
            for s in data {
                for l in &s.labels {
                    if let Label::B(t) = l {
                        if resolved.contains_key(t) {
                            continue;
                        }
                        let name = &labels.types()[*t];
                        let surfaces: Vec<Vec<String>> = bank
                            .0
                            .get(name)
                            .map(|v| {
                                v.iter()
                                    .map(|s| s.split_whitespace().map(String::from).collect::<Vec<_>>())
                                    .filter(|toks| !toks.is_empty())
                                    .collect()
                            })
                            .unwrap_or_default();
                        if surfaces.is_empty() {
                            return Err(NerError::MissingBankType(name.clone()));
                        }
                        resolved.insert(*t, surfaces);
                    }
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for s in data {
                out.push(replace_entities(s, &resolved, &mut rng));
            }
        }
    }
    Ok(out)
}

fn replace_entities(
    s: &LabeledSentence,
    bank: &BTreeMap<usize, Vec<Vec<String>>>,
    rng: &mut ChaCha8Rng,
) -> LabeledSentence {
    let mut tokens = Vec::with_capacity(s.tokens.len());
    let mut labels = Vec::with_capacity(s.labels.len());
    let mut i = 0;
    while i < s.tokens.len() {
        match s.labels[i] {
            Label::B(t) => {
                let mut j = i + 1;
                while j < s.tokens.len() && s.labels[j] == Label::I(t) {
                    j += 1;
                }
                let choices = &bank[&t];
                let pick = &choices[rng.random_range(0..choices.len())];
                for (k, tok) in pick.iter().enumerate() {
                    tokens.push(tok.clone());
                    labels.push(if k == 0 { Label::B(t) } else { Label::I(t) });
                }
                i = j;
            }
            l => {
                tokens.push(s.tokens[i].clone());
                labels.push(l);
                i += 1;
            }
        }
    }
    LabeledSentence {
        tokens,
        labels,
        from_title: s.from_title,
    }
}
