use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DefError;

pub const TOPIC_SLOT: &str = "{topic}";
pub const DESCRIPTION_SLOT: &str = "{description}";

/// Default templates, highest priority first.
pub const DEFAULT_TEMPLATES: [&str; 7] = [
    "{topic} is defined as {description}",
    "{topic} is a {description}",
    "{topic} is an {description}",
    "{topic} refers to {description}",
    "{topic} refer to {description}",
    "{topic} means {description}",
    "{topic} stands for {description}",
];

const DETERMINERS: [&str; 3] = ["a", "an", "the"];
const PRONOUNS: [&str; 16] = [
    "it", "this", "that", "these", "those", "they", "he", "she", "we", "i", "you", "which", "who", "there",
    "here", "what",
];
const DEMONSTRATIVES: [&str; 4] = ["this", "that", "these", "those"];
const MAX_TOPIC_WORDS: usize = 8;

/// `{topic} <connective> {description}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PatternSpec", into = "PatternSpec")]
pub struct DefinitionPattern {
    template: String,
    connective: Vec<String>,
    priority: u32,
}

/// On-disk form: `{"template": "...", "priority": 0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternSpec {
    pub template: String,
    pub priority: u32,
}

impl TryFrom<PatternSpec> for DefinitionPattern {
    type Error = DefError;

    fn try_from(spec: PatternSpec) -> Result<Self, DefError> {
        DefinitionPattern::new(&spec.template, spec.priority)
    }
}

impl From<DefinitionPattern> for PatternSpec {
    fn from(p: DefinitionPattern) -> Self {
        PatternSpec {
            template: p.template,
            priority: p.priority,
        }
    }
}

impl DefinitionPattern {
    pub fn new(template: &str, priority: u32) -> Result<Self, DefError> {
        let bad = |why: &str| DefError::BadPattern(format!("{template:?}: {why}"));
        if template.matches(TOPIC_SLOT).count() != 1 {
            return Err(bad("needs exactly one {topic} slot"));
        }
        let rest = template
            .trim()
            .strip_prefix(TOPIC_SLOT)
            .ok_or_else(|| bad("{topic} must start the template"))?;
        let connective = rest
            .strip_suffix(DESCRIPTION_SLOT)
            .ok_or_else(|| bad("{description} must end the template"))?;
        let words: Vec<String> = connective.split_whitespace().map(str::to_lowercase).collect();
        if words.is_empty() {
            return Err(bad("empty connective"));
        }
        Ok(DefinitionPattern {
            template: template.trim().to_string(),
            connective: words,
            priority,
        })
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    pub fn connective(&self) -> String {
        self.connective.join(" ")
    }

    pub fn priority(&self) -> u32 {
        self.priority
    }
}

/// The default list, in priority order.
pub fn default_patterns() -> Vec<DefinitionPattern> {
    DEFAULT_TEMPLATES
        .iter()
        .enumerate()
        .map(|(i, t)| DefinitionPattern::new(t, i as u32).expect("default templates are valid"))
        .collect()
}

/// Reads a JSON list of `{template, priority}`, sorted by priority (stable).
pub fn load_patterns(path: impl AsRef<Path>) -> Result<Vec<DefinitionPattern>, DefError> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|source| DefError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })?;
    let mut patterns: Vec<DefinitionPattern> =
        serde_json::from_str(&text).map_err(|e| DefError::BadPattern(e.to_string()))?;
    patterns.sort_by_key(|p| p.priority);
    Ok(patterns)
}

/// Result of a successful pattern match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub topic: String,
    pub description: String,
    /// Index into the pattern list that matched.
    pub pattern_id: usize,
}

fn words_with_spans(text: &str) -> Vec<(usize, usize)> {
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

fn trim_punct(s: &str) -> &str {
    s.trim_matches(|c: char| !c.is_alphanumeric())
}

fn clean_topic(prefix: &str) -> Option<String> {
    // keep the clause closest to the connective
    let clause = prefix.rsplit([',', ';', ':']).next().unwrap_or(prefix);
    let mut words: Vec<&str> = clause.split_whitespace().collect();
    while let Some(first) = words.first() {
        if DETERMINERS.contains(&trim_punct(first).to_lowercase().as_str()) {
            words.remove(0);
        } else {
            break;
        }
    }
    let topic = trim_punct(&words.join(" ")).to_string();
    if topic.is_empty() || words.len() > MAX_TOPIC_WORDS {
        return None;
    }
    let lower = topic.to_lowercase();
    let first = lower.split_whitespace().next().unwrap_or("");
    if PRONOUNS.contains(&lower.as_str()) || DEMONSTRATIVES.contains(&first) {
        return None;
    }
    Some(topic)
}

/// Splits a sentence into topic and description using the first pattern
/// (in list order) whose connective occurs as whole words.
pub fn extract_topic(sentence: &str, patterns: &[DefinitionPattern]) -> Option<Extraction> {
    let words = words_with_spans(sentence);
    let lower: Vec<String> = words.iter().map(|&(s, e)| sentence[s..e].to_lowercase()).collect();
    for (pattern_id, p) in patterns.iter().enumerate() {
        let k = p.connective.len();
        if words.len() < k + 2 {
            continue;
        }
        let Some(i) = (1..words.len() - k).find(|&i| lower[i..i + k] == p.connective[..]) else {
            continue;
        };
        let prefix = &sentence[words[0].0..words[i - 1].1];
        let description = sentence[words[i + k].0..]
            .trim()
            .trim_end_matches(['.', '!', '?'])
            .trim_end()
            .to_string();
        let topic = clean_topic(prefix)?;
        if description.is_empty() {
            return None;
        }
        return Some(Extraction {
            topic,
            description,
            pattern_id,
        });
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_parsing() {
        let p = DefinitionPattern::new("{topic} is defined as {description}", 0).unwrap();
        assert_eq!(p.connective(), "is defined as");
        assert!(DefinitionPattern::new("{topic} {description}", 0).is_err());
        assert!(DefinitionPattern::new("is {topic} a {description}", 0).is_err());
        assert!(DefinitionPattern::new("{topic} is {topic} {description}", 0).is_err());
    }

    #[test]
    fn statistics_example() {
        let s = "Statistics is a branch of mathematics dealing with data collection, organization, analysis, interpretation, and presentation.";
        let e = extract_topic(s, &default_patterns()).unwrap();
        assert_eq!(e.topic, "Statistics");
        assert!(e.description.starts_with("branch of mathematics dealing with data collection"));
        assert_eq!(e.pattern_id, 1);
    }

    #[test]
    fn pronoun_subject_yields_nothing() {
        assert_eq!(extract_topic("It is defined as a metric.", &default_patterns()), None);
        assert_eq!(extract_topic("This tool is a helper.", &default_patterns()), None);
    }

    #[test]
    fn no_connective() {
        assert_eq!(extract_topic("No connective here.", &default_patterns()), None);
    }

    #[test]
    fn priority_and_cleanup() {
        let e = extract_topic("The Falcon project is defined as a pilot.", &default_patterns()).unwrap();
        assert_eq!(e.topic, "Falcon project");
        assert_eq!(e.description, "a pilot");
        assert_eq!(e.pattern_id, 0);
        let e = extract_topic("In 2020, Contoso is an analytics company.", &default_patterns()).unwrap();
        assert_eq!(e.topic, "Contoso");
        // "is an" must not match "is a"
        assert_eq!(e.pattern_id, 2);
    }

    #[test]
    fn removing_patterns_only_loses_matches() {
        let mut ps = default_patterns();
        ps.retain(|p| p.connective() != "is a");
        assert_eq!(extract_topic("Statistics is a branch of mathematics.", &ps), None);
    }

    #[test]
    fn json_patterns() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.json");
        std::fs::write(
            &p,
            r#"[{"template":"{topic} means {description}","priority":2},{"template":"{topic} is a {description}","priority":1}]"#,
        )
        .unwrap();
        let ps = load_patterns(&p).unwrap();
        assert_eq!(ps[0].connective(), "is a");
        std::fs::write(&p, r#"[{"template":"no slots","priority":1}]"#).unwrap();
        assert!(load_patterns(&p).is_err());
    }
}
