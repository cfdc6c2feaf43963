//! Metamodel-driven cartography models: schemas, validation, merging,
//! model-to-model transformations, views and graph exports.
//!
//! Everything here is `no_std` + `alloc`; file and network IO live in the
//! `cartopipe` crate.

#![no_std]

extern crate alloc;

pub mod export;
pub mod json;
pub mod merge;
pub mod model;
pub mod schema;
pub mod spreadsheet;
pub mod validate;
pub mod views;
pub mod xform;
pub mod xml;

pub use json::{parse_model, serialize_model, ModelError};
pub use merge::{merge, MergeError, Merged};
pub use model::{CartographyModel, CoreKind, Element, Locator, MetaValue};
pub use schema::{load_schema, AttrType, MetamodelSchema, SchemaError, TypeDef};
pub use validate::{validate, Issue, Severity, ValidationReport};
pub use export::ExporterId;
pub use views::{compose_via, load_view_registry, run_view, ViewDefinition, ViewError, ViewRegistry, ViewResult};
