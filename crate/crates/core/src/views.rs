//! View definitions: named cartography-to-cartography transformations
//! paired with the exporter that renders their result.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Deserialize;

use crate::export::ExporterId;
use crate::model::{CartographyModel, CoreKind, Element};
use crate::schema::{MetamodelSchema, SchemaError};
use crate::xform::{execute, parse_transformation, ExecError, ExecOptions, ParseError, TransformationAst};

#[derive(Debug, Clone, PartialEq)]
pub struct ViewDefinition {
    pub id: String,
    pub name: String,
    pub transformation_path: String,
    pub exporter: ExporterId,
    pub icon_path: Option<String>,
    /// Keep parallel relationships of the same type between the same pair.
    pub allow_multi: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ViewRegistry {
    views: Vec<(ViewDefinition, TransformationAst)>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ViewError {
    #[error("registry parse error at {line}:{column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("duplicate view id `{0}`")]
    DuplicateId(String),
    #[error("view `{id}`: cannot read transformation `{path}`: {message}")]
    MissingTransformation { id: String, path: String, message: String },
    #[error("view `{id}`: unknown exporter `{exporter}`")]
    UnknownExporter { id: String, exporter: String },
    #[error("view `{id}`: {error}")]
    Transformation { id: String, error: ParseError },
    #[error("no view with id `{0}`")]
    NotFound(String),
    #[error("view `{id}`: {error}")]
    Run { id: String, error: Box<ExecError> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegistry {
    views: Vec<RawView>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct RawView {
    id: String,
    name: String,
    transformation_path: String,
    exporter: String,
    #[serde(default)]
    icon_path: Option<String>,
    #[serde(default)]
    allow_multi: bool,
}

/// Parses a `views.vd.json` registry. `load` maps a `transformationPath` to
/// the DSL source; every transformation is parsed eagerly so broken entries
/// fail at load time.
pub fn load_view_registry<F>(text: &str, mut load: F) -> Result<ViewRegistry, ViewError>
where
    F: FnMut(&str) -> Result<String, String>,
{
    let raw: RawRegistry = serde_json::from_str(text).map_err(|e| ViewError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut seen = BTreeSet::new();
    let mut views = Vec::with_capacity(raw.views.len());
    for v in raw.views {
        if !seen.insert(v.id.clone()) {
            return Err(ViewError::DuplicateId(v.id));
        }
        let exporter = ExporterId::from_name(&v.exporter).ok_or_else(|| ViewError::UnknownExporter {
            id: v.id.clone(),
            exporter: v.exporter.clone(),
        })?;
        let source = load(&v.transformation_path).map_err(|message| ViewError::MissingTransformation {
            id: v.id.clone(),
            path: v.transformation_path.clone(),
            message,
        })?;
        let ast = parse_transformation(&source).map_err(|error| ViewError::Transformation {
            id: v.id.clone(),
            error,
        })?;
        views.push((
            ViewDefinition {
                id: v.id,
                name: v.name,
                transformation_path: v.transformation_path,
                exporter,
                icon_path: v.icon_path,
                allow_multi: v.allow_multi,
            },
            ast,
        ));
    }
    Ok(ViewRegistry { views })
}

impl ViewRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers an already parsed view.
    pub fn insert(&mut self, view: ViewDefinition, ast: TransformationAst) -> Result<(), ViewError> {
        if self.get(&view.id).is_some() {
            return Err(ViewError::DuplicateId(view.id));
        }
        self.views.push((view, ast));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    /// Definitions in registry order.
    pub fn views(&self) -> impl Iterator<Item = &ViewDefinition> {
        self.views.iter().map(|(v, _)| v)
    }

    pub fn get(&self, id: &str) -> Option<&ViewDefinition> {
        self.views().find(|v| v.id == id)
    }

    pub fn transformation(&self, id: &str) -> Option<&TransformationAst> {
        self.views.iter().find(|(v, _)| v.id == id).map(|(_, t)| t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewResult {
    pub model: CartographyModel,
    pub exporter: ExporterId,
    pub warnings: Vec<String>,
}

/// Runs view `id` over the central model; the result conforms to the same
/// schema as its input.
pub fn run_view(
    registry: &ViewRegistry,
    id: &str,
    central: &CartographyModel,
    schema: &MetamodelSchema,
    options: ExecOptions,
) -> Result<ViewResult, ViewError> {
    let (view, ast) = registry
        .views
        .iter()
        .find(|(v, _)| v.id == id)
        .ok_or_else(|| ViewError::NotFound(id.to_string()))?;
    let outcome = execute(ast, central, schema, schema, options).map_err(|error| ViewError::Run {
        id: id.to_string(),
        error: Box::new(error),
    })?;
    let mut model = outcome.model;
    if !view.allow_multi {
        dedup_parallel(&mut model, schema);
    }
    Ok(ViewResult {
        model,
        exporter: view.exporter,
        warnings: outcome.warnings,
    })
}

/// Drops every relationship that repeats the (type, source, target) of an
/// earlier one in canonical order. Dropped ids are also removed from groups.
fn dedup_parallel(model: &mut CartographyModel, schema: &MetamodelSchema) {
    model.canonicalize();
    let mut seen = BTreeSet::new();
    let mut dropped = BTreeSet::new();
    for e in &model.elements {
        let rel = schema.core_kind_of(&e.type_name).is_ok_and(CoreKind::is_relationship);
        if rel && !seen.insert((e.type_name.clone(), e.source.clone(), e.target.clone())) {
            dropped.insert(e.id.clone());
        }
    }
    if dropped.is_empty() {
        return;
    }
    model.elements.retain(|e| !dropped.contains(&e.id));
    for e in &mut model.elements {
        e.members.retain(|m| !dropped.contains(m));
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ComposeError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("`{type_name}` must be of kind {expected}, but is {found}")]
    WrongKind {
        type_name: String,
        expected: CoreKind,
        found: CoreKind,
    },
}

fn require_kind(schema: &MetamodelSchema, type_name: &str, expected: CoreKind) -> Result<(), ComposeError> {
    let found = schema.core_kind_of(type_name)?;
    if found.is(expected) {
        Ok(())
    } else {
        Err(ComposeError::WrongKind {
            type_name: type_name.to_string(),
            expected,
            found,
        })
    }
}

/// Replaces every `via` element by direct `link` relationships: one per
/// pair of an incoming `in_rel` and an outgoing `out_rel`, from the source
/// of the former to the target of the latter. `via` elements and all their
/// incident relationships are removed. Unless `allow_multi`, links are
/// collapsed by (source, target), keeping the first in canonical order.
/// Links are named after the element they bypass.
pub fn compose_via(
    model: &CartographyModel,
    schema: &MetamodelSchema,
    via: &str,
    in_rel: &str,
    out_rel: &str,
    link: &str,
    allow_multi: bool,
) -> Result<CartographyModel, ComposeError> {
    require_kind(schema, via, CoreKind::Entity)?;
    for t in [in_rel, out_rel, link] {
        require_kind(schema, t, CoreKind::DirectedRelationship)?;
    }
    let sorted = model.clone().canonical();
    let is = |e: &Element, t: &str| schema.is_subtype(&e.type_name, t);
    let removed: BTreeSet<&str> = sorted
        .elements
        .iter()
        .filter(|e| is(e, via))
        .map(|e| e.id.as_str())
        .collect();
    let touches = |e: &Element| {
        [&e.source, &e.target]
            .into_iter()
            .flatten()
            .any(|id| removed.contains(id.as_str()))
    };

    let mut ids: BTreeSet<String> = sorted.elements.iter().map(|e| e.id.clone()).collect();
    let mut links = Vec::new();
    let mut pairs = BTreeSet::new();
    for v in sorted.elements.iter().filter(|e| is(e, via)) {
        let ins = sorted
            .elements
            .iter()
            .filter(|r| is(r, in_rel) && r.target.as_deref() == Some(v.id.as_str()));
        let outs: Vec<&Element> = sorted
            .elements
            .iter()
            .filter(|r| is(r, out_rel) && r.source.as_deref() == Some(v.id.as_str()))
            .collect();
        let mut k = 0usize;
        for r_in in ins {
            for r_out in &outs {
                let (Some(s), Some(t)) = (r_in.source.clone(), r_out.target.clone()) else {
                    continue;
                };
                let n = k;
                k += 1;
                if removed.contains(s.as_str()) || removed.contains(t.as_str()) {
                    continue;
                }
                if !allow_multi && !pairs.insert((s.clone(), t.clone())) {
                    continue;
                }
                let mut id = format!("link/{}/{n}", v.id);
                let mut clash = 1;
                while ids.contains(&id) {
                    id = format!("link/{}/{n}~{clash}", v.id);
                    clash += 1;
                }
                ids.insert(id.clone());
                links.push(Element::link(id, link, s, t).with_name(v.name.clone()));
            }
        }
    }

    let mut out: Vec<Element> = sorted
        .elements
        .iter()
        .filter(|e| !removed.contains(e.id.as_str()) && !touches(e))
        .cloned()
        .collect();
    let dropped: BTreeSet<&str> = sorted
        .elements
        .iter()
        .filter(|e| removed.contains(e.id.as_str()) || touches(e))
        .map(|e| e.id.as_str())
        .collect();
    for e in &mut out {
        e.members.retain(|m| !dropped.contains(m.as_str()));
    }
    out.extend(links);
    Ok(CartographyModel::with_elements(sorted.schema_name, out).canonical())
}
