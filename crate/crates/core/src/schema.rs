//! Domain metamodel schemas layered over the core kinds.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Deserialize;

use crate::model::{CoreKind, MetaValue};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("schema parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("type `{0}` is declared more than once")]
    DuplicateType(String),
    #[error("type `{0}` redeclares a core kind")]
    RedeclaredCoreKind(String),
    #[error("type `{type_name}` extends unknown type `{extends}`")]
    UnknownExtends { type_name: String, extends: String },
    #[error("type `{0}` is part of an inheritance cycle")]
    InheritanceCycle(String),
    #[error("type `{type_name}` declares attribute `{attribute}` twice in its inheritance chain")]
    DuplicateAttribute { type_name: String, attribute: String },
    #[error("unknown type `{0}`")]
    UnknownType(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrType {
    String,
    Number,
    Boolean,
}

impl AttrType {
    pub fn admits(self, value: &MetaValue) -> bool {
        matches!(
            (self, value),
            (AttrType::String, MetaValue::Str(_))
                | (AttrType::Number, MetaValue::Num(_))
                | (AttrType::Boolean, MetaValue::Bool(_))
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            AttrType::String => "string",
            AttrType::Number => "number",
            AttrType::Boolean => "boolean",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeDef {
    pub name: String,
    #[serde(rename = "type")]
    pub attr_type: AttrType,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeDef {
    pub name: String,
    pub extends: String,
    #[serde(default)]
    pub attributes: Vec<AttributeDef>,
}

impl TypeDef {
    pub fn new(name: impl Into<String>, extends: impl Into<String>) -> Self {
        TypeDef {
            name: name.into(),
            extends: extends.into(),
            attributes: Vec::new(),
        }
    }

    pub fn with_attribute(mut self, name: impl Into<String>, attr_type: AttrType) -> Self {
        self.attributes.push(AttributeDef {
            name: name.into(),
            attr_type,
        });
        self
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaFile {
    #[serde(default)]
    name: String,
    #[serde(default)]
    types: Vec<TypeDef>,
}

/// A checked schema. The five core kinds are always implicitly present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetamodelSchema {
    name: String,
    types: Vec<TypeDef>,
    index: BTreeMap<String, usize>,
}

impl Default for MetamodelSchema {
    fn default() -> Self {
        MetamodelSchema::core()
    }
}

impl MetamodelSchema {
    /// The core-only schema (empty name, no declared types).
    pub fn core() -> Self {
        MetamodelSchema {
            name: String::new(),
            types: Vec::new(),
            index: BTreeMap::new(),
        }
    }

    pub fn new(name: impl Into<String>, types: Vec<TypeDef>) -> Result<Self, SchemaError> {
        let mut index = BTreeMap::new();
        for (i, t) in types.iter().enumerate() {
            if CoreKind::from_name(&t.name).is_some() {
                return Err(SchemaError::RedeclaredCoreKind(t.name.clone()));
            }
            if index.insert(t.name.clone(), i).is_some() {
                return Err(SchemaError::DuplicateType(t.name.clone()));
            }
        }
        for t in &types {
            if CoreKind::from_name(&t.extends).is_none() && !index.contains_key(&t.extends) {
                return Err(SchemaError::UnknownExtends {
                    type_name: t.name.clone(),
                    extends: t.extends.clone(),
                });
            }
        }
        let schema = MetamodelSchema {
            name: name.into(),
            types,
            index,
        };
        for t in &schema.types {
            schema.check_chain(&t.name)?;
        }
        for t in &schema.types {
            let mut seen = BTreeSet::new();
            for attr in schema.attributes(&t.name)? {
                if !seen.insert(attr.name.as_str()) {
                    return Err(SchemaError::DuplicateAttribute {
                        type_name: t.name.clone(),
                        attribute: attr.name.clone(),
                    });
                }
            }
        }
        Ok(schema)
    }

    fn check_chain(&self, start: &str) -> Result<(), SchemaError> {
        let mut seen = BTreeSet::new();
        let mut current = start;
        while let Some(&i) = self.index.get(current) {
            if !seen.insert(current) {
                return Err(SchemaError::InheritanceCycle(start.to_string()));
            }
            current = &self.types[i].extends;
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn types(&self) -> &[TypeDef] {
        &self.types
    }

    pub fn type_def(&self, name: &str) -> Option<&TypeDef> {
        self.index.get(name).map(|&i| &self.types[i])
    }

    /// True for declared types and for the core kind names.
    pub fn contains(&self, type_name: &str) -> bool {
        CoreKind::from_name(type_name).is_some() || self.index.contains_key(type_name)
    }

    /// Names of every type the schema knows, core kinds first.
    pub fn type_names(&self) -> impl Iterator<Item = &str> {
        CoreKind::ALL
            .iter()
            .map(|k| k.name())
            .chain(self.types.iter().map(|t| t.name.as_str()))
    }

    /// The `extends` chain from `type_name` up to and including its core kind.
    pub fn ancestry<'a>(&'a self, type_name: &'a str) -> Result<Vec<&'a str>, SchemaError> {
        let mut chain = Vec::new();
        let mut current = type_name;
        loop {
            chain.push(current);
            if CoreKind::from_name(current).is_some() {
                return Ok(chain);
            }
            match self.index.get(current) {
                Some(&i) => current = &self.types[i].extends,
                None => return Err(SchemaError::UnknownType(current.to_string())),
            }
        }
    }

    pub fn core_kind_of(&self, type_name: &str) -> Result<CoreKind, SchemaError> {
        let chain = self.ancestry(type_name)?;
        let root = chain.last().expect("ancestry is never empty");
        Ok(CoreKind::from_name(root).expect("ancestry ends at a core kind"))
    }

    /// Type test used by rule matching and `kindOf`: `sub` is `sup`, one of
    /// its declared ancestors, or a core kind its root kind falls under.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        let Ok(chain) = self.ancestry(sub) else {
            return false;
        };
        if chain.contains(&sup) {
            return true;
        }
        match (CoreKind::from_name(chain[chain.len() - 1]), CoreKind::from_name(sup)) {
            (Some(kind), Some(sup_kind)) => kind.is(sup_kind),
            _ => false,
        }
    }

    /// Attributes of `type_name` flattened over its inheritance chain,
    /// root-most first.
    pub fn attributes(&self, type_name: &str) -> Result<Vec<&AttributeDef>, SchemaError> {
        let chain = self.ancestry(type_name)?;
        Ok(chain
            .iter()
            .rev()
            .filter_map(|t| self.type_def(t))
            .flat_map(|t| t.attributes.iter())
            .collect())
    }
}

/// Parses a `*.cartoschema.json` document and checks every schema invariant.
pub fn load_schema(text: &str) -> Result<MetamodelSchema, SchemaError> {
    let file: SchemaFile = serde_json::from_str(text).map_err(|e| SchemaError::Parse {
        line: e.line(),
        column: e.column(),
        message: format!("{e}"),
    })?;
    MetamodelSchema::new(file.name, file.types)
}
