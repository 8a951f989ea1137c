use serde::{Deserialize, Serialize};

use super::NerError;

/// Default entity schema. The eighth type, `event`, is a configurable
/// placeholder.
pub const DEFAULT_ENTITY_TYPES: [&str; 8] = [
    "person",
    "organization",
    "location",
    "product",
    "project",
    "field_of_study",
    "creative_work",
    "event",
];

/// A BIO label with the entity type given as an index into the label set's
/// type list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    O,
    B(usize),
    I(usize),
}

/// `O` plus `B-t`/`I-t` for every entity type, with stable ordinals:
/// `O = 0`, `B-t = 1 + 2t`, `I-t = 2 + 2t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    types: Vec<String>,
}

impl Default for LabelSet {
    fn default() -> Self {
        LabelSet {
            types: DEFAULT_ENTITY_TYPES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl LabelSet {
    pub fn new<I, S>(types: I) -> Result<Self, NerError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let types: Vec<String> = types.into_iter().map(Into::into).collect();
        if types.is_empty() {
            return Err(NerError::InvalidConfig("entity type set is empty".into()));
        }
        for (i, t) in types.iter().enumerate() {
            if t.is_empty() || t.contains(char::is_whitespace) {
                return Err(NerError::InvalidConfig(format!("bad entity type name {t:?}")));
            }
            if types[..i].contains(t) {
                return Err(NerError::InvalidConfig(format!("duplicate entity type {t:?}")));
            }
        }
        Ok(LabelSet { types })
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn type_index(&self, name: &str) -> Option<usize> {
        self.types.iter().position(|t| t == name)
    }

    /// Number of labels, `2 * types + 1`.
    pub fn len(&self) -> usize {
        2 * self.types.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn ordinal(&self, label: Label) -> usize {
        match label {
            Label::O => 0,
            Label::B(t) => 1 + 2 * t,
            Label::I(t) => 2 + 2 * t,
        }
    }

    pub fn label(&self, ordinal: usize) -> Label {
        assert!(ordinal < self.len(), "label ordinal {ordinal} out of range");
        match ordinal {
            0 => Label::O,
            k if k % 2 == 1 => Label::B((k - 1) / 2),
            k => Label::I((k - 2) / 2),
        }
    }

    pub fn name(&self, label: Label) -> String {
        match label {
            Label::O => "O".to_string(),
            Label::B(t) => format!("B-{}", self.types[t]),
            Label::I(t) => format!("I-{}", self.types[t]),
        }
    }

    pub fn parse(&self, name: &str) -> Result<Label, NerError> {
        if name == "O" {
            return Ok(Label::O);
        }
        let unknown = || NerError::UnknownLabel(name.to_string());
        let (prefix, ty) = name.split_once('-').ok_or_else(unknown)?;
        let t = self.type_index(ty).ok_or_else(unknown)?;
        match prefix {
            "B" => Ok(Label::B(t)),
            "I" => Ok(Label::I(t)),
            _ => Err(unknown()),
        }
    }

    /// Whether `next` may follow `prev` under strict BIO; sequence start
    /// counts as following `O`.
    pub fn allowed(prev: Label, next: Label) -> bool {
        match next {
            Label::I(t) => prev == Label::B(t) || prev == Label::I(t),
            _ => true,
        }
    }

    pub fn allowed_ordinals(&self, prev: usize, next: usize) -> bool {
        Self::allowed(self.label(prev), self.label(next))
    }
}

/// True when no `I-t` appears except directly after `B-t` or `I-t`.
pub fn is_valid_bio(labels: &[Label]) -> bool {
    let mut prev = Label::O;
    for &l in labels {
        if !LabelSet::allowed(prev, l) {
            return false;
        }
        prev = l;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_has_17_labels() {
        let ls = LabelSet::default();
        assert_eq!(ls.types().len(), 8);
        assert_eq!(ls.len(), 17);
    }

    #[test]
    fn ordinals_round_trip() {
        let ls = LabelSet::default();
        for k in 0..ls.len() {
            let l = ls.label(k);
            assert_eq!(ls.ordinal(l), k);
            assert_eq!(ls.parse(&ls.name(l)).unwrap(), l);
        }
        assert_eq!(ls.name(Label::B(0)), "B-person");
        assert!(ls.parse("B-alien").is_err());
        assert!(ls.parse("X-person").is_err());
    }

    #[test]
    fn validity() {
        assert!(is_valid_bio(&[Label::B(0), Label::I(0), Label::O]));
        assert!(!is_valid_bio(&[Label::I(0)]));
        assert!(!is_valid_bio(&[Label::B(0), Label::I(1)]));
        assert!(is_valid_bio(&[Label::B(1), Label::B(1)]));
        assert!(is_valid_bio(&[]));
    }

    #[test]
    fn rejects_bad_type_sets() {
        assert!(LabelSet::new(Vec::<String>::new()).is_err());
        assert!(LabelSet::new(["a", "a"]).is_err());
        assert!(LabelSet::new(["a b"]).is_err());
    }
}
