//! Language-model oracle: weight sampling, range sampling and answerability
//! judgments, behind one trait with a live HTTP client and a seeded mock.

mod live;
mod mock;

pub use live::{LiveOracle, OracleConfig};
pub use mock::{AnswerabilityFn, MockOracle, MockOracleConfig};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::domain::{ConceptCatalog, DifficultyFeedback, NormConstraint, PreferenceWeights, Query};
use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::inference::Interval;

pub const PROMPT_VERSION: &str = "v1";

const SYSTEM: &str = include_str!("../../assets/prompts/v1/system.txt");
const WEIGHTS: &str = include_str!("../../assets/prompts/v1/weights.txt");
const RANGES: &str = include_str!("../../assets/prompts/v1/ranges.txt");
const JUDGE: &str = include_str!("../../assets/prompts/v1/judge.txt");
const GENERATION: &str = include_str!("../../assets/prompts/v1/generation.txt");
const TASK_ROUTING: &str = include_str!("../../assets/prompts/v1/task_routing.txt");
const TASK_HOMEGRID: &str = include_str!("../../assets/prompts/v1/task_homegrid.txt");
const FEWSHOT_ROUTING: &str = include_str!("../../assets/prompts/v1/fewshot_routing.json");
const FEWSHOT_HOMEGRID: &str = include_str!("../../assets/prompts/v1/fewshot_homegrid.json");

/// The oracle interface used by sessions.
///
/// `nonce` distinguishes calls; the mock derives its randomness from it so a
/// session that replays the same nonces gets the same answers.
pub trait LanguageOracle: Send + Sync {
    fn sample_weights(&self, bundle: &PromptBundle, m: usize, nonce: u64) -> Result<Vec<PreferenceWeights>>;

    fn sample_ranges(&self, bundle: &PromptBundle, nonce: u64) -> Result<Vec<Interval>>;

    fn judge_answerable(
        &self,
        bundle: &PromptBundle,
        fq: &[DifficultyFeedback],
        q: &Query,
        rendered: (&str, &str),
        nonce: u64,
    ) -> Result<bool>;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    fn new(role: &str, content: String) -> Self {
        Self { role: role.into(), content }
    }
}

/// Everything a weight or range prompt is built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub version: String,
    pub task_description: String,
    pub catalog: ConceptCatalog,
    pub instruction: String,
    /// Language feedback after the instruction (clarifications, explanations).
    pub feedback: Vec<String>,
    pub fewshot_pairs: Vec<(String, Vec<f64>)>,
    pub generation_instructions: String,
}

#[derive(Deserialize)]
struct FewshotRepr {
    instruction: String,
    weights: std::collections::BTreeMap<String, f64>,
}

impl PromptBundle {
    /// Bundle from the shipped assets for an environment.
    pub fn for_env(env: EnvKind, catalog: &ConceptCatalog, instruction: &str, feedback: &[String]) -> Result<Self> {
        let (task, fewshot) = match env {
            EnvKind::Routing => (TASK_ROUTING, FEWSHOT_ROUTING),
            EnvKind::HomeGrid => (TASK_HOMEGRID, FEWSHOT_HOMEGRID),
        };
        let shots: Vec<FewshotRepr> = serde_json::from_str(fewshot).map_err(|e| Error::Parse(e.to_string()))?;
        let fewshot_pairs = shots
            .into_iter()
            .map(|s| {
                let mut w = vec![0.0; catalog.len()];
                for (name, v) in s.weights {
                    let i = catalog.index_of(&name).ok_or_else(|| Error::Parse(format!("few-shot concept '{name}'")))?;
                    w[i] = v;
                }
                Ok((s.instruction, w))
            })
            .collect::<Result<Vec<_>>>()?;
        let bundle = Self {
            version: PROMPT_VERSION.into(),
            task_description: task.trim().into(),
            catalog: catalog.clone(),
            instruction: instruction.into(),
            feedback: feedback.to_vec(),
            fewshot_pairs,
            generation_instructions: GENERATION.trim().into(),
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn validate(&self) -> Result<()> {
        if self.task_description.trim().is_empty()
            || self.instruction.trim().is_empty()
            || self.generation_instructions.trim().is_empty()
            || self.fewshot_pairs.is_empty()
            || self.catalog.is_empty()
        {
            return Err(Error::Contract("prompt bundle has an empty field".into()));
        }
        if let Some((_, w)) = self.fewshot_pairs.iter().find(|(_, w)| w.len() != self.catalog.len()) {
            return Err(Error::DimensionMismatch { expected: self.catalog.len(), got: w.len() });
        }
        Ok(())
    }

    pub fn concept_list(&self) -> String {
        self.catalog
            .concepts()
            .iter()
            .map(|c| if c.description.is_empty() { format!("- {}", c.name) } else { format!("- {}: {}", c.name, c.description) })
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn weights_json(&self, w: &[f64]) -> String {
        let map: Map<String, Value> = self.catalog.names().zip(w).map(|(n, v)| (n.to_string(), Value::from(*v))).collect();
        Value::Object(map).to_string()
    }

    fn fill(&self, template: &str) -> String {
        let fewshot = self
            .fewshot_pairs
            .iter()
            .map(|(text, w)| format!("Instruction: \"{text}\"\nWeights: {}", self.weights_json(w)))
            .collect::<Vec<_>>()
            .join("\n\n");
        let feedback = if self.feedback.is_empty() {
            String::new()
        } else {
            let lines: Vec<String> = self.feedback.iter().map(|f| format!("- {f}")).collect();
            format!("\nThe person later added:\n{}\n", lines.join("\n"))
        };
        template
            .replace("{{task}}", &self.task_description)
            .replace("{{concepts}}", &self.concept_list())
            .replace("{{fewshot}}", &fewshot)
            .replace("{{instruction}}", &self.instruction)
            .replace("{{feedback}}", &feedback)
            .replace("{{generation}}", &self.generation_instructions)
    }

    pub fn weights_messages(&self) -> Vec<Message> {
        vec![Message::new("system", SYSTEM.trim().into()), Message::new("user", self.fill(WEIGHTS).trim().into())]
    }

    pub fn ranges_messages(&self) -> Vec<Message> {
        vec![Message::new("system", SYSTEM.trim().into()), Message::new("user", self.fill(RANGES).trim().into())]
    }

    pub fn judge_messages(&self, fq: &[DifficultyFeedback], rendered: (&str, &str)) -> Vec<Message> {
        let difficulties = if fq.is_empty() {
            "(nothing yet)".to_string()
        } else {
            fq.iter().map(|d| format!("- {}", d.text)).collect::<Vec<_>>().join("\n")
        };
        let user = JUDGE
            .replace("{{task}}", &self.task_description)
            .replace("{{difficulties}}", &difficulties)
            .replace("{{first}}", rendered.0)
            .replace("{{second}}", rendered.1);
        vec![Message::new("system", SYSTEM.trim().into()), Message::new("user", user.trim().into())]
    }

    /// All prompts as plain text, for inspection without sending anything.
    pub fn dump(&self, example_pair: (&str, &str)) -> String {
        let mut out = String::new();
        for (title, msgs) in [
            ("weights", self.weights_messages()),
            ("ranges", self.ranges_messages()),
            ("judge", self.judge_messages(&[], example_pair)),
        ] {
            out.push_str(&format!("===== {title} (prompt {}) =====\n", self.version));
            for m in msgs {
                out.push_str(&format!("[{}]\n{}\n\n", m.role, m.content));
            }
        }
        out
    }
}

/// First JSON object embedded in `text` (code fences and prose are skipped).
pub fn extract_json_object(text: &str) -> Option<Map<String, Value>> {
    text.match_indices('{').find_map(|(i, _)| {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Object(map))) => Some(map),
            _ => None,
        }
    })
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Concept → weight object; missing concepts are 0, unknown keys are
/// ignored with a warning, the result is projected onto `constraint`.
pub fn parse_weights(text: &str, catalog: &ConceptCatalog, constraint: NormConstraint) -> Result<PreferenceWeights> {
    let map = extract_json_object(text).ok_or_else(|| Error::Parse("no JSON object in completion".into()))?;
    let mut w = vec![0.0; catalog.len()];
    for (key, value) in &map {
        let Some(i) = catalog.index_of_loose(key) else {
            log::warn!("ignoring unknown concept '{key}' in completion");
            continue;
        };
        w[i] = as_number(value).filter(|x| x.is_finite()).ok_or_else(|| Error::Parse(format!("non-numeric weight for '{key}'")))?;
    }
    PreferenceWeights::projected(&w, constraint).map_err(|e| Error::Parse(format!("unusable weights: {e}")))
}

/// Concept → `[min, max]` (or `{"min":…, "max":…}`); missing concepts get
/// `[0, 1]`, reversed bounds are swapped, bounds are clamped to `[0, 1]`.
pub fn parse_ranges(text: &str, catalog: &ConceptCatalog) -> Result<Vec<Interval>> {
    let map = extract_json_object(text).ok_or_else(|| Error::Parse("no JSON object in completion".into()))?;
    let mut out = vec![Interval { min: 0.0, max: 1.0 }; catalog.len()];
    for (key, value) in &map {
        let Some(i) = catalog.index_of_loose(key) else {
            log::warn!("ignoring unknown concept '{key}' in completion");
            continue;
        };
        let (lo, hi) = match value {
            Value::Array(a) if a.len() == 2 => (as_number(&a[0]), as_number(&a[1])),
            Value::Object(o) => (o.get("min").and_then(as_number), o.get("max").and_then(as_number)),
            _ => (None, None),
        };
        let (Some(mut lo), Some(mut hi)) = (lo, hi) else {
            return Err(Error::Parse(format!("bad range for '{key}'")));
        };
        if lo > hi {
            log::warn!("range for '{key}' has min > max; swapping");
            std::mem::swap(&mut lo, &mut hi);
        }
        out[i] = Interval::new(lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0))?;
    }
    Ok(out)
}

/// Lenient YES/NO: case-insensitive, ignoring leading quotes, markup and whitespace.
pub fn parse_yes_no(text: &str) -> Result<bool> {
    let t = text.trim_start_matches(|c: char| c.is_whitespace() || "\"'*`_#>.:-".contains(c)).to_ascii_lowercase();
    if t.starts_with("yes") {
        Ok(true)
    } else if t.starts_with("no") {
        Ok(false)
    } else {
        Err(Error::Parse(format!("expected YES or NO, got '{}'", text.chars().take(40).collect::<String>())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Concept;
    use approx::assert_abs_diff_eq;

    fn cat2() -> ConceptCatalog {
        ConceptCatalog::new(vec![Concept::new("Time", ""), Concept::new("Safety", "")]).unwrap()
    }

    #[test]
    fn weights_from_completion() {
        let w = parse_weights(r#"{"Time": 2, "Safety": 1}"#, &cat2(), NormConstraint::UnitL2Nonnegative).unwrap();
        assert_abs_diff_eq!(w.as_slice()[0], 2.0 / 5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(w.as_slice()[1], 1.0 / 5f64.sqrt(), epsilon = 1e-12);
        let w = parse_weights("Sure!\n```json\n{\"time\": \"1\", \"Colour\": 3}\n```", &cat2(), NormConstraint::UnitL2Nonnegative).unwrap();
        assert_eq!(w.as_slice(), &[1.0, 0.0]);
        assert!(parse_weights("no json here", &cat2(), NormConstraint::UnitL2Nonnegative).is_err());
        assert!(parse_weights(r#"{"Time": 0}"#, &cat2(), NormConstraint::UnitL2Nonnegative).is_err());
    }

    #[test]
    fn ranges_from_completion() {
        let r = parse_ranges(r#"{"Time": [0.8, 0.2], "Safety": {"min": 0.1, "max": 1.5}}"#, &cat2()).unwrap();
        assert_eq!(r[0], Interval { min: 0.2, max: 0.8 });
        assert_eq!(r[1], Interval { min: 0.1, max: 1.0 });
        let r = parse_ranges(r#"{"Safety": [0, 0.5]}"#, &cat2()).unwrap();
        assert_eq!(r[0], Interval { min: 0.0, max: 1.0 });
    }

    #[test]
    fn yes_no_is_lenient() {
        for t in ["YES", "yes.", " Yes, clearly", "**YES**", "\"yes\""] {
            assert!(parse_yes_no(t).unwrap(), "{t}");
        }
        for t in ["NO", "no", "No - too similar"] {
            assert!(!parse_yes_no(t).unwrap(), "{t}");
        }
        assert!(parse_yes_no("maybe").is_err());
    }

    #[test]
    fn prompts_are_deterministic_and_filled() {
        let cat = crate::envs::routing::routing_catalog();
        let b = PromptBundle::for_env(EnvKind::Routing, &cat, "Go safely.", &["I drive an EV.".into()]).unwrap();
        let again = PromptBundle::for_env(EnvKind::Routing, &cat, "Go safely.", &["I drive an EV.".into()]).unwrap();
        assert_eq!(b.weights_messages(), again.weights_messages());
        let dump = b.dump(("A", "B"));
        assert!(!dump.contains("{{"), "unfilled placeholder:\n{dump}");
        assert!(dump.contains("Go safely.") && dump.contains("I drive an EV.") && dump.contains("Charging Station Nearby"));
        for env in [EnvKind::Routing, EnvKind::HomeGrid] {
            let cat = match env {
                EnvKind::Routing => crate::envs::routing::routing_catalog(),
                EnvKind::HomeGrid => crate::envs::homegrid::homegrid_catalog(),
            };
            assert!(PromptBundle::for_env(env, &cat, "x", &[]).is_ok());
        }
        assert!(PromptBundle::for_env(EnvKind::Routing, &cat, "  ", &[]).is_err());
    }
}
