//! Machine-readable run traces.
//!
//! Every CLI command can emit a single JSON [`TraceDocument`] describing the
//! run: parameters, named state snapshots, channel views, outcomes, and
//! attack reports. Documents round-trip losslessly through serde and contain
//! only decimal integers, so byte-identical output follows from identical
//! inputs. Secret key material is included only on request; by default a
//! trace shows what an adversary on the channel could know.

use serde::{Deserialize, Serialize};

use crate::adversary::{
    AmbiguityWitness, AttackReport, DistinguisherReport, ForgedExhaustiveReport,
    GeneralAttackReport, InvarianceReport,
};
use crate::protocol::{SessionParams, SessionTranscript};

/// Current trace schema version.
pub const SCHEMA_VERSION: &str = "1";

/// One named state snapshot: a list of `[index, value]` basis pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedState {
    pub name: String,
    pub pairs: Vec<(u64, u64)>,
}

/// One named channel view: the sorted value multiset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedMultiset {
    pub name: String,
    pub values: Vec<u64>,
}

/// Parameters as they appear in a trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamsDoc {
    Base {
        p: u64,
        q: u64,
        g: u64,
    },
    General {
        p: u64,
        g: u64,
        r: u64,
        index_set: Vec<u64>,
    },
}

impl From<&SessionParams> for ParamsDoc {
    fn from(session: &SessionParams) -> Self {
        match session {
            SessionParams::Base(params) => ParamsDoc::Base {
                p: params.p(),
                q: params.q(),
                g: params.g(),
            },
            SessionParams::General(gp) => ParamsDoc::General {
                p: gp.p(),
                g: gp.g(),
                r: gp.r(),
                index_set: gp.index_set().to_vec(),
            },
        }
    }
}

/// Secret key material; present only when the run was asked to reveal it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyDoc {
    pub x: u64,
    pub xq_inv: u64,
    pub xp_inv: u64,
}

/// An attack or distinguisher report embedded in a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum ReportDoc {
    ChannelInvariance(InvarianceReport),
    CiphertextInvariance(InvarianceReport),
    KeyCandidates {
        candidates: Vec<u64>,
    },
    Attack(AttackReport),
    ForgedExhaustive(ForgedExhaustiveReport),
    Distinguisher(DistinguisherReport),
    Ambiguity {
        c_prime: u64,
        witnesses: Vec<AmbiguityWitness>,
    },
    General(GeneralAttackReport),
}

/// A complete run trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub schema_version: String,
    pub command: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub params: Option<ParamsDoc>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub key: Option<KeyDoc>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub states: Vec<NamedState>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub channel_views: Vec<NamedMultiset>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub measured: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub recovered: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub reports: Vec<ReportDoc>,
}

impl TraceDocument {
    pub fn new(command: &str, seed: u64) -> Self {
        TraceDocument {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            seed,
            params: None,
            key: None,
            states: Vec::new(),
            channel_views: Vec::new(),
            measured: None,
            recovered: None,
            reports: Vec::new(),
        }
    }

    /// Builds the trace of one full session.
    pub fn from_transcript(command: &str, t: &SessionTranscript, reveal_secrets: bool) -> Self {
        let mut doc = TraceDocument::new(command, t.seed);
        doc.params = Some(ParamsDoc::from(&t.session));
        if reveal_secrets {
            doc.key = Some(KeyDoc {
                x: t.key.x(),
                xq_inv: t.key.xq_inv(),
                xp_inv: t.key.xp_inv(),
            });
        }
        doc.states = vec![
            NamedState {
                name: "phi_A".into(),
                pairs: t.phi_a.clone(),
            },
            NamedState {
                name: "phi_C".into(),
                pairs: t.phi_c.clone(),
            },
            NamedState {
                name: "phi_D1".into(),
                pairs: t.phi_d1.clone(),
            },
            NamedState {
                name: "phi_D2".into(),
                pairs: t.phi_d2.clone(),
            },
            NamedState {
                name: "phi_D3".into(),
                pairs: t.phi_d3.clone(),
            },
        ];
        doc.channel_views = vec![
            NamedMultiset {
                name: "channel_A".into(),
                values: t.channel_a.values().to_vec(),
            },
            NamedMultiset {
                name: "channel_C".into(),
                values: t.channel_c.values().to_vec(),
            },
        ];
        doc.measured = Some(t.measured);
        doc.recovered = Some(t.recovered);
        doc
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trace serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn parse(input: &str) -> serde_json::Result<Self> {
        serde_json::from_str(input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modmath::Params;
    use crate::protocol::{run_session, Message, SecretKey};

    fn demo_doc(reveal: bool) -> TraceDocument {
        let params = Params::new(11, 5, 3).unwrap();
        let key = SecretKey::derive(3, 5, 11).unwrap();
        let msg = Message::new(3, &params).unwrap();
        let t = run_session(&params, &key, msg, 0).unwrap();
        TraceDocument::from_transcript("demo", &t, reveal)
    }

    #[test]
    fn round_trips_losslessly() {
        let doc = demo_doc(true);
        let json = doc.to_json();
        let parsed = TraceDocument::parse(&json).unwrap();
        assert_eq!(parsed, doc);
        assert_eq!(parsed.to_json(), json);
    }

    #[test]
    fn secrets_are_omitted_by_default() {
        let doc = demo_doc(false);
        assert!(doc.key.is_none());
        assert!(!doc.to_json().contains("xq_inv"));
        let doc = demo_doc(true);
        assert_eq!(doc.key, Some(KeyDoc { x: 3, xq_inv: 2, xp_inv: 4 }));
    }

    #[test]
    fn params_doc_forms_distinguish_on_parse() {
        let base = r#"{"p": 11, "q": 5, "g": 3}"#;
        let general = r#"{"p": 11, "g": 3, "r": 5, "index_set": [1, 3]}"#;
        assert!(matches!(
            serde_json::from_str::<ParamsDoc>(base).unwrap(),
            ParamsDoc::Base { p: 11, q: 5, g: 3 }
        ));
        assert!(matches!(
            serde_json::from_str::<ParamsDoc>(general).unwrap(),
            ParamsDoc::General { r: 5, .. }
        ));
    }

    #[test]
    fn report_docs_round_trip() {
        let report = ReportDoc::KeyCandidates {
            candidates: vec![1, 2, 3, 4],
        };
        let json = serde_json::to_string(&report).unwrap();
        assert_eq!(serde_json::from_str::<ReportDoc>(&json).unwrap(), report);
    }
}
