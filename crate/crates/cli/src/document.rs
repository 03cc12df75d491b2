//! Versioned JSON documents: `{"version": 1, "kind": ..., "payload": ...}`.
//! Payloads deserialize through the library types, so every invariant is
//! checked on load.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    BooleanSystem,
    MeasuredSystem,
    MetricSystem,
    TreeIso,
    GridPermutation,
    SystemEmbedding,
    AlgebraEmbedding,
    NormalRefinement,
    ChainDecomposition,
    Normality,
    BooleanAmalgam,
    MeasuredAmalgam,
    MeasuredJoin,
    MetricJoin,
    CheckReport,
    ConstructionTrace,
    GridFactorization,
    TreeAutomorphism,
    ShiftCertificate,
}

impl Kind {
    pub fn tag(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    version: u32,
    kind: Kind,
    payload: T,
}

/// Renders a document as pretty JSON with a trailing newline.
pub fn render<T: Serialize>(kind: Kind, payload: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(&Envelope { version: VERSION, kind, payload })?;
    s.push('\n');
    Ok(s)
}

fn envelope(text: &str) -> Result<Envelope<Value>, String> {
    let doc: Envelope<Value> = serde_json::from_str(text).map_err(|e| format!("not a document: {e}"))?;
    if doc.version != VERSION {
        return Err(format!("unsupported document version {}", doc.version));
    }
    Ok(doc)
}

/// The kind tag of a document.
pub fn kind_of(text: &str) -> Result<Kind, String> {
    Ok(envelope(text)?.kind)
}

/// Parses a document of the expected kind and validates its payload.
pub fn parse<T: DeserializeOwned>(text: &str, expected: Kind) -> Result<T, String> {
    let doc = envelope(text)?;
    if doc.kind != expected {
        return Err(format!("expected a {} document, found {}", expected.tag(), doc.kind.tag()));
    }
    serde_json::from_value(doc.payload).map_err(|e| format!("invalid {} payload: {e}", expected.tag()))
}
