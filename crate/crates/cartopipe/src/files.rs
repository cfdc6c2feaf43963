//! Loading and saving the on-disk artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use cartopipe_core::schema::{load_schema, MetamodelSchema};
use cartopipe_core::spreadsheet::{spreadsheet_schema, SPREADSHEET_SCHEMA};
use cartopipe_core::views::{load_view_registry, ViewRegistry};
use cartopipe_core::xml::{xml_schema, XML_SCHEMA};
use cartopipe_core::{parse_model, serialize_model, CartographyModel};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read `{}`", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create `{}`", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write `{}`", path.display()))
}

/// Built-in schemas addressable by name: `Core` (or the empty name), `Xml`
/// and `Spreadsheet`.
pub fn builtin_schema(name: &str) -> Option<MetamodelSchema> {
    match name {
        "" | "Core" => Some(MetamodelSchema::core()),
        XML_SCHEMA => Some(xml_schema()),
        SPREADSHEET_SCHEMA => Some(spreadsheet_schema()),
        _ => None,
    }
}

/// Loads a schema file, or a built-in schema when `arg` names one and no
/// such file exists.
pub fn load_schema_arg(arg: &str) -> Result<(MetamodelSchema, String)> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(s) = builtin_schema(arg) {
            return Ok((s, String::new()));
        }
    }
    let text = read_text(path)?;
    let schema = load_schema(&text).with_context(|| format!("invalid schema `{}`", path.display()))?;
    Ok((schema, text))
}

/// Resolves a schema by name: `configured` wins, then the built-ins.
pub fn resolve_schema(name: &str, configured: &MetamodelSchema) -> Result<MetamodelSchema> {
    if configured.name() == name {
        return Ok(configured.clone());
    }
    match builtin_schema(name) {
        Some(s) => Ok(s),
        None => bail!(
            "unknown schema `{name}` (expected `{}`, `Core`, `Xml` or `Spreadsheet`)",
            configured.name()
        ),
    }
}

pub fn load_model(path: &Path) -> Result<CartographyModel> {
    let text = read_text(path)?;
    parse_model(&text).with_context(|| format!("invalid model `{}`", path.display()))
}

pub fn save_model(path: &Path, model: &CartographyModel) -> Result<()> {
    write_text(path, &serialize_model(model))
}

/// Loads a view registry; transformation paths are relative to the
/// registry file.
pub fn load_registry(path: &Path) -> Result<ViewRegistry> {
    let text = read_text(path)?;
    let base: PathBuf = path.parent().map(Path::to_path_buf).unwrap_or_default();
    load_view_registry(&text, |p| fs::read_to_string(base.join(p)).map_err(|e| e.to_string()))
        .with_context(|| format!("invalid view registry `{}`", path.display()))
}
