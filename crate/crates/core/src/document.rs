//! JSON interchange for Kripke, action and synthesized models.
//!
//! Output is canonical: fields alphabetical, ids, atoms and relations sorted,
//! so equal models serialize to equal bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{parse, Agent, Formula};
use crate::model::{ActionModel, ActionSpec, KripkeModel, KripkeSpec, ModelError};
use crate::synthesis::SynthesizedModel;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid document: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("bad formula for '{id}': {message}")]
    Formula { id: String, message: String },
    #[error("expected a {expected} document, found {found}")]
    WrongKind { expected: DocumentKind, found: DocumentKind },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocumentKind {
    Kripke,
    Action,
}

impl std::fmt::Display for DocumentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DocumentKind::Kripke => "kripke",
            DocumentKind::Action => "action",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldEntry {
    #[serde(default)]
    pub atoms: Vec<String>,
    pub id: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventEntry {
    pub id: String,
    pub pre: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationEntry {
    pub agent: String,
    pub from: String,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisMeta {
    #[serde(default)]
    pub event_formulas: BTreeMap<String, String>,
    pub root: String,
    pub sink: String,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub agents: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventEntry>,
    pub kind: DocumentKind,
    pub point: String,
    #[serde(default)]
    pub relations: Vec<RelationEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<SynthesisMeta>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub worlds: Vec<WorldEntry>,
}

/// A validated document.
#[derive(Clone, Debug)]
pub enum LoadedModel {
    Kripke(KripkeModel),
    Action(ActionModel),
    Synthesized(SynthesizedModel),
}

impl LoadedModel {
    pub fn action(&self) -> Option<&ActionModel> {
        match self {
            LoadedModel::Action(u) => Some(u),
            LoadedModel::Synthesized(s) => Some(s.action()),
            LoadedModel::Kripke(_) => None,
        }
    }
}

fn relations(list: &[(Agent, String, String)]) -> Vec<RelationEntry> {
    list.iter()
        .map(|(a, from, to)| RelationEntry {
            agent: a.as_str().to_string(),
            from: from.clone(),
            to: to.clone(),
        })
        .collect()
}

fn parse_for(id: &str, text: &str) -> Result<Formula, DocumentError> {
    parse(text).map_err(|e| DocumentError::Formula {
        id: id.to_string(),
        message: e.to_string(),
    })
}

impl ModelDocument {
    pub fn from_kripke(m: &KripkeModel) -> Self {
        let spec = m.to_spec();
        ModelDocument {
            agents: spec.agents.iter().map(|a| a.as_str().to_string()).collect(),
            events: Vec::new(),
            kind: DocumentKind::Kripke,
            point: spec.point,
            relations: relations(&spec.relations),
            synthesis: None,
            worlds: spec
                .worlds
                .into_iter()
                .map(|(id, atoms)| WorldEntry {
                    atoms: atoms.into_iter().collect(),
                    id,
                })
                .collect(),
        }
        .canonical()
    }

    pub fn from_action(u: &ActionModel) -> Self {
        let spec = u.to_spec();
        ModelDocument {
            agents: spec.agents.iter().map(|a| a.as_str().to_string()).collect(),
            events: spec
                .events
                .into_iter()
                .map(|(id, pre)| EventEntry {
                    id,
                    pre: pre.map(|f| f.to_string()),
                })
                .collect(),
            kind: DocumentKind::Action,
            point: spec.point,
            relations: relations(&spec.relations),
            synthesis: None,
            worlds: Vec::new(),
        }
        .canonical()
    }

    pub fn from_synthesized(s: &SynthesizedModel) -> Self {
        let mut doc = ModelDocument::from_action(s.action());
        doc.synthesis = Some(SynthesisMeta {
            event_formulas: s
                .event_formulas()
                .iter()
                .map(|(id, f)| (id.to_string(), f.to_string()))
                .collect(),
            root: s.root().to_string(),
            sink: s.sink().to_string(),
            source: s.source().to_string(),
        });
        doc
    }

    /// Sorts every list; ids compare as strings.
    pub fn canonical(mut self) -> Self {
        self.agents.sort();
        self.agents.dedup();
        for w in &mut self.worlds {
            w.atoms.sort();
            w.atoms.dedup();
        }
        self.worlds.sort_by(|a, b| a.id.cmp(&b.id));
        self.events.sort_by(|a, b| a.id.cmp(&b.id));
        self.relations.sort();
        self.relations.dedup();
        self
    }

    /// Every structural problem; formulas are checked by [`ModelDocument::to_model`].
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self.kind {
            DocumentKind::Kripke => {
                if !self.events.is_empty() {
                    out.push("kripke document has events".to_string());
                }
                if self.synthesis.is_some() {
                    out.push("kripke document has synthesis metadata".to_string());
                }
            }
            DocumentKind::Action => {
                if !self.worlds.is_empty() {
                    out.push("action document has worlds".to_string());
                }
            }
        }
        let spec_issues = match self.kind {
            DocumentKind::Kripke => self.kripke_spec().validate(),
            DocumentKind::Action => match self.action_spec() {
                Ok(spec) => spec.validate(),
                Err(e) => vec![e.to_string()],
            },
        };
        out.extend(spec_issues);
        out
    }

    fn kripke_spec(&self) -> KripkeSpec {
        KripkeSpec {
            agents: self.agents.iter().map(Agent::new).collect(),
            worlds: self
                .worlds
                .iter()
                .map(|w| (w.id.clone(), w.atoms.iter().cloned().collect()))
                .collect(),
            relations: self.spec_relations(),
            point: self.point.clone(),
        }
    }

    fn action_spec(&self) -> Result<ActionSpec, DocumentError> {
        let events = self
            .events
            .iter()
            .map(|e| Ok((e.id.clone(), e.pre.as_deref().map(|p| parse_for(&e.id, p)).transpose()?)))
            .collect::<Result<Vec<_>, DocumentError>>()?;
        Ok(ActionSpec {
            agents: self.agents.iter().map(Agent::new).collect(),
            events,
            relations: self.spec_relations(),
            point: self.point.clone(),
        })
    }

    fn spec_relations(&self) -> Vec<(Agent, String, String)> {
        self.relations
            .iter()
            .map(|r| (Agent::new(&r.agent), r.from.clone(), r.to.clone()))
            .collect()
    }

    pub fn to_model(&self) -> Result<LoadedModel, DocumentError> {
        let issues = self.validate();
        if !issues.is_empty() {
            return Err(DocumentError::Invalid(issues));
        }
        match self.kind {
            DocumentKind::Kripke => Ok(LoadedModel::Kripke(self.kripke_spec().build()?)),
            DocumentKind::Action => {
                let action = self.action_spec()?.build()?;
                let Some(meta) = &self.synthesis else {
                    return Ok(LoadedModel::Action(action));
                };
                if meta.root != "0" || meta.sink != "-1" {
                    return Err(DocumentError::Invalid(vec!["synthesis root must be 0 and sink -1".into()]));
                }
                let mut formulas = BTreeMap::new();
                for (id, text) in &meta.event_formulas {
                    let key = id
                        .parse::<i64>()
                        .map_err(|_| DocumentError::Invalid(vec![format!("event id '{id}' is not an integer")]))?;
                    formulas.insert(key, parse_for(id, text)?);
                }
                let source = parse_for("source", &meta.source)?;
                SynthesizedModel::from_action(action, source, formulas)
                    .map(LoadedModel::Synthesized)
                    .map_err(|e| DocumentError::Invalid(vec![e]))
            }
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.clone().canonical()).expect("documents serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<ModelDocument, DocumentError> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn load_model(text: &str) -> Result<LoadedModel, DocumentError> {
    ModelDocument::from_json(text)?.to_model()
}

pub fn load_kripke(text: &str) -> Result<KripkeModel, DocumentError> {
    match load_model(text)? {
        LoadedModel::Kripke(m) => Ok(m),
        _ => Err(DocumentError::WrongKind {
            expected: DocumentKind::Kripke,
            found: DocumentKind::Action,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bisim::{bisimilar, isomorphic_pointed};
    use crate::fixtures;
    use crate::formula::{classify_dbi, to_dbi_normal};
    use crate::synthesis::synthesize;

    #[test]
    fn kripke_round_trip_is_byte_stable() {
        let m = fixtures::blt_initial();
        let json = ModelDocument::from_kripke(&m).to_json();
        let back = load_kripke(&json).unwrap();
        assert!(isomorphic_pointed(&m, m.point(), &back, back.point()).unwrap().is_some());
        assert_eq!(ModelDocument::from_kripke(&back).to_json(), json);
    }

    #[test]
    fn synthesized_round_trip_keeps_metadata() {
        let goal = to_dbi_normal(&classify_dbi(&fixtures::blt_goal()).unwrap());
        let s = synthesize(&goal, fixtures::blt_initial().frame().agents()).unwrap();
        let json = ModelDocument::from_synthesized(&s).to_json();
        let LoadedModel::Synthesized(back) = load_model(&json).unwrap() else {
            panic!("metadata lost")
        };
        assert_eq!(back.event_ids().len(), 6);
        assert!(back.check_invariants().is_empty());
        assert!(bisimilar(s.action(), s.action().point(), back.action(), back.action().point()).unwrap());
        assert_eq!(ModelDocument::from_synthesized(&back).to_json(), json);
    }

    #[test]
    fn invalid_documents_report_every_problem() {
        let doc = ModelDocument {
            agents: vec!["a".into()],
            events: vec![EventEntry { id: "e".into(), pre: Some("p &".into()) }],
            kind: DocumentKind::Action,
            point: "e".into(),
            relations: vec![],
            synthesis: None,
            worlds: vec![],
        };
        assert!(matches!(doc.to_model(), Err(DocumentError::Invalid(_)) | Err(DocumentError::Formula { .. })));
        let json = r#"{"agents":["a"],"kind":"kripke","point":"x","relations":[{"agent":"b","from":"w","to":"w"}],"worlds":[{"id":"w"},{"id":"w"}]}"#;
        let Err(DocumentError::Invalid(issues)) = load_model(json) else {
            panic!("accepted")
        };
        assert!(issues.len() >= 3, "{issues:?}");
        assert!(matches!(load_model("{\"kind\":\"kripke\""), Err(DocumentError::Json(_))));
        assert!(matches!(load_model(r#"{"agents":[],"kind":"kripke","point":"w","bogus":1}"#), Err(DocumentError::Json(_))));
    }
}
