//! Conformance checking of a model against a schema.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::model::{CartographyModel, CoreKind, Element, Locator, MetaValue};
use crate::schema::MetamodelSchema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Issue {
    pub severity: Severity,
    pub element_id: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        if self.element_id.is_empty() {
            write!(f, "{sev}: {}", self.message)
        } else {
            write!(f, "{sev}: {}: {}", self.element_id, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }
}

struct Collector {
    issues: Vec<Issue>,
}

impl Collector {
    fn error(&mut self, id: &str, message: impl Into<String>) {
        self.issues.push(Issue {
            severity: Severity::Error,
            element_id: id.to_string(),
            message: message.into(),
        });
    }
}

/// Reports every violated model invariant. Issues come out sorted so two
/// validations of equal models compare equal.
pub fn validate(model: &CartographyModel, schema: &MetamodelSchema) -> ValidationReport {
    let mut out = Collector { issues: Vec::new() };

    if !model.schema_name.is_empty() && model.schema_name != schema.name() {
        out.error(
            "",
            format!(
                "model conforms to schema `{}` but was checked against `{}`",
                model.schema_name,
                schema.name()
            ),
        );
    }

    let mut by_id: BTreeMap<&str, &Element> = BTreeMap::new();
    for e in &model.elements {
        if e.id.is_empty() {
            out.error("", "element with empty id");
        }
        if by_id.insert(e.id.as_str(), e).is_some() {
            out.error(&e.id, "duplicate id");
        }
    }

    let kind_of = |e: &Element| schema.core_kind_of(&e.type_name).ok();

    for e in &model.elements {
        let Some(kind) = kind_of(e) else {
            out.error(&e.id, format!("unknown type `{}`", e.type_name));
            continue;
        };
        check_facets(e, kind, schema, &mut out);

        if kind.is_relationship() {
            for (label, end) in [("source", &e.source), ("target", &e.target)] {
                match end {
                    None => out.error(&e.id, format!("relationship without {label}")),
                    Some(ref_id) => match by_id.get(ref_id.as_str()) {
                        None => out.error(&e.id, format!("dangling {label} `{ref_id}`")),
                        Some(end) => {
                            if kind_of(end).is_some_and(CoreKind::is_relationship) {
                                out.error(
                                    &e.id,
                                    format!("{label} `{ref_id}` is itself a relationship"),
                                );
                            }
                        }
                    },
                }
            }
        } else if e.source.is_some() || e.target.is_some() {
            out.error(&e.id, "source/target set on a non-relationship element");
        }

        if !e.members.is_empty() {
            if kind != CoreKind::Group {
                out.error(&e.id, "members set on a non-group element");
            }
            let mut seen = BTreeSet::new();
            for m in &e.members {
                if !seen.insert(m.as_str()) {
                    out.error(&e.id, format!("member `{m}` listed twice"));
                }
                if !by_id.contains_key(m.as_str()) {
                    out.error(&e.id, format!("dangling member `{m}`"));
                }
            }
        }

        if let Some(c) = &e.container {
            match by_id.get(c.as_str()) {
                None => out.error(&e.id, format!("dangling container `{c}`")),
                Some(ce) => {
                    if kind_of(ce).is_some_and(|k| k != CoreKind::Container) {
                        out.error(&e.id, format!("container `{c}` is not a Container"));
                    }
                }
            }
        }
    }

    for e in &model.elements {
        if containment_cycle(e, &by_id) {
            out.error(&e.id, "containment cycle");
        }
    }

    let mut issues = out.issues;
    issues.sort();
    issues.dedup();
    let ok = !issues.iter().any(|i| i.severity == Severity::Error);
    ValidationReport { ok, issues }
}

fn check_facets(e: &Element, kind: CoreKind, schema: &MetamodelSchema, out: &mut Collector) {
    if e.name.is_empty() && !kind.is_relationship() {
        out.error(&e.id, "empty name on a non-relationship element");
    }

    match &e.locator {
        None => {}
        Some(_) if kind != CoreKind::Entity => {
            out.error(&e.id, "locator on a non-Entity element");
        }
        Some(Locator::Geo { lat, lon }) => {
            if !(lat.is_finite() && (-90.0..=90.0).contains(lat)) {
                out.error(&e.id, format!("latitude {lat} out of range"));
            }
            if !(lon.is_finite() && (-180.0..=180.0).contains(lon)) {
                out.error(&e.id, format!("longitude {lon} out of range"));
            }
        }
        Some(Locator::Plain(value)) if value.is_empty() => {
            out.error(&e.id, "plain locator with empty value");
        }
        Some(Locator::Plain(_)) => {}
    }

    let declared = schema.attributes(&e.type_name).unwrap_or_default();
    for (key, value) in &e.metadata {
        if let MetaValue::Num(n) = value {
            if !n.is_finite() {
                out.error(&e.id, format!("metadata `{key}` is not a finite number"));
            }
        }
        if let Some(attr) = declared.iter().find(|a| a.name == *key) {
            if !attr.attr_type.admits(value) {
                out.error(
                    &e.id,
                    format!("metadata `{key}` should be a {}", attr.attr_type.name()),
                );
            }
        }
    }
}

fn containment_cycle(start: &Element, by_id: &BTreeMap<&str, &Element>) -> bool {
    let mut seen = BTreeSet::new();
    let mut current = start;
    while let Some(next) = current.container.as_deref() {
        if next == start.id {
            return true;
        }
        if !seen.insert(next) {
            // a cycle further up that does not include `start`
            return false;
        }
        match by_id.get(next) {
            Some(e) => current = e,
            None => return false,
        }
    }
    false
}
