//! Merging several cartography models into one central model.
//!
//! Non-relationship elements sharing an identity key `(type, name)` are
//! unified. Relationships are re-pointed at the unified ids and then
//! deduplicated on `(type, source, target, name)`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::model::{CartographyModel, Element};
use crate::schema::{MetamodelSchema, SchemaError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MergeError {
    #[error("model #{index} conforms to schema `{found}`, expected `{expected}`")]
    SchemaMismatch {
        index: usize,
        found: String,
        expected: String,
    },
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("{type_name} `{name}` has different locators in model #{first} and model #{second}")]
    LocatorConflict {
        type_name: String,
        name: String,
        first: usize,
        second: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Merged {
    pub model: CartographyModel,
    pub warnings: Vec<String>,
}

struct Slot {
    element: Element,
    /// Model that supplied the locator, if any.
    locator_from: Option<usize>,
}

#[derive(Default)]
struct Builder {
    slots: Vec<Slot>,
    used_ids: BTreeSet<String>,
    by_key: BTreeMap<(String, String), usize>,
    by_link: BTreeMap<(String, String, String, String), usize>,
    warnings: Vec<String>,
}

impl Builder {
    fn fresh_id(&mut self, id: &str, model: usize) -> String {
        let mut candidate = id.to_string();
        let mut n = 0;
        while self.used_ids.contains(&candidate) {
            candidate = if n == 0 {
                format!("{id}~{model}")
            } else {
                format!("{id}~{model}.{n}")
            };
            n += 1;
        }
        if candidate != id {
            self.warnings
                .push(format!("model #{model}: id `{id}` renamed to `{candidate}`"));
        }
        self.used_ids.insert(candidate.clone());
        candidate
    }

    fn add(&mut self, mut element: Element, model: usize) -> usize {
        element.id = self.fresh_id(&element.id, model);
        let locator_from = element.locator.as_ref().map(|_| model);
        self.slots.push(Slot {
            element,
            locator_from,
        });
        self.slots.len() - 1
    }

    fn union_metadata(&mut self, slot: usize, from: &Element, model: usize) {
        let target = &mut self.slots[slot].element;
        for (k, v) in &from.metadata {
            if let Some(old) = target.metadata.insert(k.clone(), v.clone()) {
                if old != *v {
                    self.warnings.push(format!(
                        "`{}`: metadata `{k}` overridden by model #{model}",
                        target.id
                    ));
                }
            }
        }
    }
}

pub fn merge(models: &[CartographyModel], schema: &MetamodelSchema) -> Result<Merged, MergeError> {
    let mut schema_name = String::new();
    for (index, m) in models.iter().enumerate() {
        if !m.schema_name.is_empty() {
            if m.schema_name != schema.name() {
                return Err(MergeError::SchemaMismatch {
                    index,
                    found: m.schema_name.clone(),
                    expected: schema.name().to_string(),
                });
            }
            schema_name = m.schema_name.clone();
        }
    }

    let mut b = Builder::default();

    for (mi, model) in models.iter().enumerate() {
        let mut elements: Vec<&Element> = model.elements.iter().collect();
        elements.sort_by(|x, y| crate::model::canonical_order(x, y));

        let mut is_link = BTreeMap::new();
        for e in &elements {
            is_link.insert(e.id.as_str(), schema.core_kind_of(&e.type_name)?.is_relationship());
        }

        // old id -> slot in the output
        let mut slot_of: BTreeMap<&str, usize> = BTreeMap::new();

        for e in elements.iter().filter(|e| !is_link[e.id.as_str()]) {
            let key = (e.type_name.clone(), e.name.clone());
            let existing = if e.name.is_empty() {
                None
            } else {
                b.by_key.get(&key).copied()
            };
            let slot = match existing {
                Some(slot) => {
                    unify_locator(&mut b, slot, e, mi)?;
                    b.union_metadata(slot, e, mi);
                    slot
                }
                None => {
                    let mut fresh = (*e).clone();
                    fresh.members.clear();
                    fresh.container = None;
                    let slot = b.add(fresh, mi);
                    if !e.name.is_empty() {
                        b.by_key.insert(key, slot);
                    }
                    slot
                }
            };
            slot_of.insert(e.id.as_str(), slot);
        }

        let remap = |slot_of: &BTreeMap<&str, usize>, b: &Builder, id: &str| -> String {
            slot_of
                .get(id)
                .map(|&s| b.slots[s].element.id.clone())
                .unwrap_or_else(|| id.to_string())
        };

        for e in elements.iter().filter(|e| is_link[e.id.as_str()]) {
            let source = e.source.as_deref().map(|s| remap(&slot_of, &b, s));
            let target = e.target.as_deref().map(|t| remap(&slot_of, &b, t));
            let key = (
                e.type_name.clone(),
                source.clone().unwrap_or_default(),
                target.clone().unwrap_or_default(),
                e.name.clone(),
            );
            let slot = match b.by_link.get(&key).copied() {
                Some(slot) => {
                    b.union_metadata(slot, e, mi);
                    slot
                }
                None => {
                    let mut fresh = (*e).clone();
                    fresh.source = source;
                    fresh.target = target;
                    fresh.members.clear();
                    fresh.container = None;
                    let slot = b.add(fresh, mi);
                    b.by_link.insert(key, slot);
                    slot
                }
            };
            slot_of.insert(e.id.as_str(), slot);
        }

        for e in &elements {
            let slot = slot_of[e.id.as_str()];
            let members: Vec<String> = e.members.iter().map(|m| remap(&slot_of, &b, m)).collect();
            let container = e.container.as_deref().map(|c| remap(&slot_of, &b, c));
            let target = &mut b.slots[slot].element;
            for m in members {
                if !target.members.contains(&m) {
                    target.members.push(m);
                }
            }
            match (&target.container, container) {
                (_, None) => {}
                (None, Some(c)) => target.container = Some(c),
                (Some(old), Some(c)) if *old != c => {
                    let msg = format!(
                        "`{}`: container `{c}` from model #{mi} ignored, keeping `{old}`",
                        target.id
                    );
                    b.warnings.push(msg);
                }
                _ => {}
            }
        }
    }

    let model = CartographyModel {
        schema_name,
        elements: b.slots.into_iter().map(|s| s.element).collect(),
    }
    .canonical();
    Ok(Merged {
        model,
        warnings: b.warnings,
    })
}

fn unify_locator(b: &mut Builder, slot: usize, e: &Element, model: usize) -> Result<(), MergeError> {
    let Some(loc) = &e.locator else {
        return Ok(());
    };
    let s = &mut b.slots[slot];
    match (&s.element.locator, s.locator_from) {
        (None, _) => {
            s.element.locator = Some(loc.clone());
            s.locator_from = Some(model);
            Ok(())
        }
        (Some(existing), _) if existing == loc => Ok(()),
        (Some(_), first) => Err(MergeError::LocatorConflict {
            type_name: e.type_name.clone(),
            name: e.name.clone(),
            first: first.unwrap_or(model),
            second: model,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Locator;
    use crate::schema::load_schema;
    use alloc::vec;

    fn tools() -> MetamodelSchema {
        load_schema(r#"{"name":"Tools","types":[{"name":"Tool","extends":"Entity"},{"name":"Format","extends":"Entity"},{"name":"Export","extends":"DirectedRelationship"},{"name":"Import","extends":"DirectedRelationship"}]}"#).unwrap()
    }

    fn sample() -> CartographyModel {
        CartographyModel::with_elements(
            "Tools",
            vec![
                Element::new("t1", "Tool", "Alpha").with_meta("weight", 1.0),
                Element::new("f1", "Format", "CSV"),
                Element::link("x1", "Export", "t1", "f1"),
            ],
        )
    }

    #[test]
    fn singleton_and_identity() {
        let m = sample();
        let expected = m.clone().canonical();
        assert_eq!(merge(core::slice::from_ref(&m), &tools()).unwrap().model, expected);
        let empty = CartographyModel::new("Tools");
        assert_eq!(merge(&[m.clone(), empty.clone()], &tools()).unwrap().model, expected);
        assert_eq!(merge(&[empty, m], &tools()).unwrap().model, expected);
    }

    #[test]
    fn shared_tool_unifies() {
        let a = CartographyModel::with_elements(
            "Tools",
            vec![Element::new("a1", "Tool", "Alpha"), Element::new("a2", "Format", "CSV")],
        );
        let b = CartographyModel::with_elements(
            "Tools",
            vec![Element::new("b1", "Tool", "Alpha"), Element::new("b2", "Format", "XML")],
        );
        let out = merge(&[a, b], &tools()).unwrap().model;
        let tools_n = out.elements.iter().filter(|e| e.type_name == "Tool").count();
        let formats_n = out.elements.iter().filter(|e| e.type_name == "Format").count();
        assert_eq!((tools_n, formats_n), (1, 2));
    }

    #[test]
    fn relationships_are_repointed_and_deduplicated() {
        let a = sample();
        let b = CartographyModel::with_elements(
            "Tools",
            vec![
                Element::new("tool-a", "Tool", "Alpha"),
                Element::new("fmt", "Format", "CSV"),
                Element::link("exp", "Export", "tool-a", "fmt"),
                Element::link("imp", "Import", "fmt", "tool-a"),
            ],
        );
        let out = merge(&[a, b], &tools()).unwrap().model;
        assert_eq!(out.len(), 4);
        let imp = out.get("imp").unwrap();
        assert_eq!(imp.source.as_deref(), Some("f1"));
        assert_eq!(imp.target.as_deref(), Some("t1"));
        assert!(out.get("exp").is_none());
    }

    #[test]
    fn metadata_later_wins_with_warning() {
        let a = sample();
        let b = CartographyModel::with_elements(
            "Tools",
            vec![Element::new("t9", "Tool", "Alpha").with_meta("weight", 4.0).with_meta("k", "v")],
        );
        let merged = merge(&[a, b], &tools()).unwrap();
        let t = merged.model.get("t1").unwrap();
        assert_eq!(t.metadata["weight"], 4.0.into());
        assert_eq!(t.metadata["k"], "v".into());
        assert_eq!(merged.warnings.len(), 1);
    }

    #[test]
    fn locator_conflict_names_both_models() {
        let geo = |lat| Locator::Geo { lat, lon: 0.0 };
        let a = CartographyModel::with_elements("Tools", vec![Element::new("t", "Tool", "A").with_locator(geo(1.0))]);
        let b = CartographyModel::with_elements("Tools", vec![Element::new("u", "Tool", "A")]);
        let c = CartographyModel::with_elements("Tools", vec![Element::new("v", "Tool", "A").with_locator(geo(2.0))]);
        let err = merge(&[a.clone(), b.clone(), c], &tools()).unwrap_err();
        assert_eq!(
            err,
            MergeError::LocatorConflict {
                type_name: "Tool".into(),
                name: "A".into(),
                first: 0,
                second: 2
            }
        );
        // equal locators and a missing one are fine; first locator kept
        let same = CartographyModel::with_elements("Tools", vec![Element::new("w", "Tool", "A").with_locator(geo(1.0))]);
        let out = merge(&[b, a, same], &tools()).unwrap().model;
        assert_eq!(out.elements[0].locator, Some(geo(1.0)));
    }

    #[test]
    fn id_clash_between_distinct_elements_is_renamed() {
        let a = CartographyModel::with_elements("Tools", vec![Element::new("x", "Tool", "A")]);
        let b = CartographyModel::with_elements(
            "Tools",
            vec![Element::new("x", "Tool", "B"), Element::new("y", "Format", "F"), Element::link("l", "Export", "x", "y")],
        );
        let merged = merge(&[a, b], &tools()).unwrap();
        let out = merged.model;
        assert!(out.get("x~1").is_some());
        assert_eq!(out.get("l").unwrap().source.as_deref(), Some("x~1"));
        assert_eq!(merged.warnings.len(), 1);
    }

    #[test]
    fn groups_and_containers_are_repointed() {
        let core = MetamodelSchema::core();
        let a = CartographyModel::with_elements(
            "",
            vec![
                Element::new("c", "Container", "Site"),
                Element::new("e", "Entity", "E").with_container("c"),
                Element::new("g", "Group", "G").with_members(["e"]),
            ],
        );
        let b = CartographyModel::with_elements(
            "",
            vec![
                Element::new("c2", "Container", "Site"),
                Element::new("e2", "Entity", "E2").with_container("c2"),
                Element::new("g2", "Group", "G").with_members(["e2"]),
            ],
        );
        let out = merge(&[a, b], &core).unwrap().model;
        assert_eq!(out.get("e2").unwrap().container.as_deref(), Some("c"));
        assert_eq!(out.get("g").unwrap().members, vec!["e".to_string(), "e2".to_string()]);
        assert!(crate::validate::validate(&out, &core).ok);
    }

    #[test]
    fn schema_mismatch() {
        let a = CartographyModel::new("Other");
        assert!(matches!(merge(&[a], &tools()), Err(MergeError::SchemaMismatch { index: 0, .. })));
    }
}
