//! Canonical `*.carto.json` reading and writing.
//!
//! The writer sorts elements by `(type, id)`, emits keys in a fixed order
//! and puts one element per line, so equal models always produce identical
//! bytes.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::Deserialize;

use crate::model::{canonical_order, CartographyModel, Element, Locator, MetaValue};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("model parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate element id `{0}`")]
    DuplicateId(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct RawModel {
    #[serde(default)]
    schema_name: String,
    elements: Vec<RawElement>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElement {
    id: String,
    #[serde(rename = "type")]
    type_name: String,
    #[serde(default)]
    name: String,
    #[serde(default)]
    metadata: BTreeMap<String, RawMeta>,
    #[serde(default)]
    locator: Option<RawLocator>,
    #[serde(default)]
    source: Option<String>,
    #[serde(default)]
    target: Option<String>,
    #[serde(default)]
    members: Vec<String>,
    #[serde(default)]
    container: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawMeta {
    Bool(bool),
    Num(f64),
    Str(String),
}

#[derive(Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum RawLocator {
    GeoLocator { lat: f64, lon: f64 },
    Plain { value: String },
}

pub fn parse_model(text: &str) -> Result<CartographyModel, ModelError> {
    let raw: RawModel = serde_json::from_str(text).map_err(|e| ModelError::Parse {
        line: e.line(),
        column: e.column(),
        message: format!("{e}"),
    })?;
    let mut seen = BTreeSet::new();
    let mut elements = Vec::with_capacity(raw.elements.len());
    for r in raw.elements {
        if !seen.insert(r.id.clone()) {
            return Err(ModelError::DuplicateId(r.id));
        }
        elements.push(Element {
            id: r.id,
            type_name: r.type_name,
            name: r.name,
            metadata: r
                .metadata
                .into_iter()
                .map(|(k, v)| {
                    let v = match v {
                        RawMeta::Bool(b) => MetaValue::Bool(b),
                        RawMeta::Num(n) => MetaValue::Num(n),
                        RawMeta::Str(s) => MetaValue::Str(s),
                    };
                    (k, v)
                })
                .collect(),
            locator: r.locator.map(|l| match l {
                RawLocator::GeoLocator { lat, lon } => Locator::Geo { lat, lon },
                RawLocator::Plain { value } => Locator::Plain(value),
            }),
            source: r.source,
            target: r.target,
            members: r.members,
            container: r.container,
        });
    }
    Ok(CartographyModel {
        schema_name: raw.schema_name,
        elements,
    })
}

pub(crate) fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub(crate) fn json_num(n: f64) -> String {
    serde_json::to_string(&n).expect("floats always serialize")
}

pub(crate) fn json_meta(v: &MetaValue) -> String {
    match v {
        MetaValue::Str(s) => json_str(s),
        MetaValue::Num(n) => json_num(*n),
        MetaValue::Bool(b) => if *b { "true" } else { "false" }.into(),
    }
}

fn write_element(out: &mut String, e: &Element) {
    let _ = write!(
        out,
        "{{\"id\": {}, \"type\": {}, \"name\": {}",
        json_str(&e.id),
        json_str(&e.type_name),
        json_str(&e.name)
    );
    if !e.metadata.is_empty() {
        out.push_str(", \"metadata\": {");
        for (i, (k, v)) in e.metadata.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{}: {}", json_str(k), json_meta(v));
        }
        out.push('}');
    }
    match &e.locator {
        None => {}
        Some(Locator::Geo { lat, lon }) => {
            let _ = write!(
                out,
                ", \"locator\": {{\"kind\": \"GeoLocator\", \"lat\": {}, \"lon\": {}}}",
                json_num(*lat),
                json_num(*lon)
            );
        }
        Some(Locator::Plain(value)) => {
            let _ = write!(
                out,
                ", \"locator\": {{\"kind\": \"Plain\", \"value\": {}}}",
                json_str(value)
            );
        }
    }
    if let Some(s) = &e.source {
        let _ = write!(out, ", \"source\": {}", json_str(s));
    }
    if let Some(t) = &e.target {
        let _ = write!(out, ", \"target\": {}", json_str(t));
    }
    if !e.members.is_empty() {
        out.push_str(", \"members\": [");
        for (i, m) in e.members.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(&json_str(m));
        }
        out.push(']');
    }
    if let Some(c) = &e.container {
        let _ = write!(out, ", \"container\": {}", json_str(c));
    }
    out.push('}');
}

pub fn serialize_model(model: &CartographyModel) -> String {
    let mut sorted: Vec<&Element> = model.elements.iter().collect();
    sorted.sort_by(|a, b| canonical_order(a, b));

    let mut out = String::new();
    let _ = writeln!(out, "{{\n  \"schemaName\": {},", json_str(&model.schema_name));
    if sorted.is_empty() {
        out.push_str("  \"elements\": []\n}\n");
        return out;
    }
    out.push_str("  \"elements\": [\n");
    for (i, e) in sorted.iter().enumerate() {
        out.push_str("    ");
        write_element(&mut out, e);
        out.push_str(if i + 1 < sorted.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const SAMPLE: &str = r#"{
  "schemaName": "Tools",
  "elements": [
    {"id": "a\"q", "type": "Entity", "name": "Quote é", "metadata": {"flag": true, "label": "x", "weight": 2.5}, "locator": {"kind": "Plain", "value": "room 4"}, "container": "box"},
    {"id": "box", "type": "Container", "name": "Box"},
    {"id": "g", "type": "Group", "name": "G", "members": ["t1", "a\"q"]},
    {"id": "t1", "type": "Tool", "name": "Alpha", "locator": {"kind": "GeoLocator", "lat": 47.2, "lon": -1.55}},
    {"id": "x", "type": "Export", "name": "", "source": "t1", "target": "box"}
  ]
}
"#;

    #[test]
    fn canonical_text_round_trips() {
        let m = parse_model(SAMPLE).unwrap();
        assert_eq!(m.len(), 5);
        let again = serialize_model(&m);
        assert_eq!(parse_model(&again).unwrap(), m.clone().canonical());
        assert_eq!(serialize_model(&parse_model(&again).unwrap()), again);
    }

    #[test]
    fn writer_output_is_stable() {
        let text = "{\n  \"schemaName\": \"\",\n  \"elements\": [\n    {\"id\": \"b\", \"type\": \"Entity\", \"name\": \"B\", \"metadata\": {\"n\": 3.0}}\n  ]\n}\n";
        assert_eq!(serialize_model(&parse_model(text).unwrap()), text);
    }

    #[test]
    fn empty_model() {
        let m = parse_model(r#"{"schemaName":"","elements":[]}"#).unwrap();
        assert!(m.is_empty());
        assert_eq!(m.schema_name, "");
        assert_eq!(serialize_model(&m), "{\n  \"schemaName\": \"\",\n  \"elements\": []\n}\n");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = parse_model(
            r#"{"schemaName":"","elements":[{"id":"x","type":"Entity","name":"a"},{"id":"x","type":"Entity","name":"b"}]}"#,
        )
        .unwrap_err();
        assert_eq!(err, ModelError::DuplicateId("x".into()));
    }

    #[test]
    fn parse_error_position() {
        let err = parse_model("{\n\"schemaName\": \"\",\n\"elements\": [ {\"id\": 3} ]\n}").unwrap_err();
        match err {
            ModelError::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_model(r#"{"schemaName":"","elements":[{"id":"x","type":"E","name":"n","metadata":{"k":[1]}}]}"#),
            Err(ModelError::Parse { .. })
        ));
    }

    #[test]
    fn ordering_is_by_type_then_id() {
        let m = CartographyModel::with_elements(
            "",
            vec![
                Element::new("b", "Entity", "B"),
                Element::new("a", "Group", "A"),
                Element::new("a", "Entity", "A"),
            ],
        );
        let text = serialize_model(&m);
        let ea = text.find("\"id\": \"a\", \"type\": \"Entity\"").unwrap();
        let eb = text.find("\"id\": \"b\"").unwrap();
        let ga = text.find("\"type\": \"Group\"").unwrap();
        assert!(ea < eb && eb < ga);
    }
}
