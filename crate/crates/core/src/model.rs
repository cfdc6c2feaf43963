//! Core cartography model: elements, facets and the five core kinds.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// The visualization-motivated base kinds every domain type descends from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CoreKind {
    Entity,
    Relationship,
    DirectedRelationship,
    Group,
    Container,
}

impl CoreKind {
    pub const ALL: [CoreKind; 5] = [
        CoreKind::Entity,
        CoreKind::Relationship,
        CoreKind::DirectedRelationship,
        CoreKind::Group,
        CoreKind::Container,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CoreKind::Entity => "Entity",
            CoreKind::Relationship => "Relationship",
            CoreKind::DirectedRelationship => "DirectedRelationship",
            CoreKind::Group => "Group",
            CoreKind::Container => "Container",
        }
    }

    pub fn from_name(name: &str) -> Option<CoreKind> {
        CoreKind::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Kind-level subsumption: every kind is itself, and a directed
    /// relationship is also a relationship.
    pub fn is(self, other: CoreKind) -> bool {
        self == other
            || (self == CoreKind::DirectedRelationship && other == CoreKind::Relationship)
    }

    pub fn is_relationship(self) -> bool {
        self.is(CoreKind::Relationship)
    }
}

impl fmt::Display for CoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Scalar metadata value attached to an element.
#[derive(Debug, Clone, PartialEq)]
pub enum MetaValue {
    Str(String),
    Num(f64),
    Bool(bool),
}

impl fmt::Display for MetaValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetaValue::Str(s) => f.write_str(s),
            MetaValue::Num(n) => write!(f, "{n}"),
            MetaValue::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl From<&str> for MetaValue {
    fn from(s: &str) -> Self {
        MetaValue::Str(s.into())
    }
}

impl From<String> for MetaValue {
    fn from(s: String) -> Self {
        MetaValue::Str(s)
    }
}

impl From<f64> for MetaValue {
    fn from(n: f64) -> Self {
        MetaValue::Num(n)
    }
}

impl From<bool> for MetaValue {
    fn from(b: bool) -> Self {
        MetaValue::Bool(b)
    }
}

/// Positional facet of an element.
#[derive(Debug, Clone, PartialEq)]
pub enum Locator {
    /// WGS84 degrees.
    Geo { lat: f64, lon: f64 },
    Plain(String),
}

impl Locator {
    pub fn is_geo(&self) -> bool {
        matches!(self, Locator::Geo { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Element {
    pub id: String,
    pub type_name: String,
    pub name: String,
    pub metadata: BTreeMap<String, MetaValue>,
    pub locator: Option<Locator>,
    pub source: Option<String>,
    pub target: Option<String>,
    pub members: Vec<String>,
    pub container: Option<String>,
}

impl Element {
    pub fn new(id: impl Into<String>, type_name: impl Into<String>, name: impl Into<String>) -> Self {
        Element {
            id: id.into(),
            type_name: type_name.into(),
            name: name.into(),
            ..Element::default()
        }
    }

    /// Convenience constructor for relationship-kind elements.
    pub fn link(
        id: impl Into<String>,
        type_name: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
    ) -> Self {
        Element {
            id: id.into(),
            type_name: type_name.into(),
            source: Some(source.into()),
            target: Some(target.into()),
            ..Element::default()
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<MetaValue>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn with_locator(mut self, locator: Locator) -> Self {
        self.locator = Some(locator);
        self
    }

    pub fn with_container(mut self, container: impl Into<String>) -> Self {
        self.container = Some(container.into());
        self
    }

    pub fn with_members<I, S>(mut self, members: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.members = members.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// The central typed graph. Element order is insignificant; use
/// [`CartographyModel::canonicalize`] before comparing two models.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CartographyModel {
    pub schema_name: String,
    pub elements: Vec<Element>,
}

impl CartographyModel {
    pub fn new(schema_name: impl Into<String>) -> Self {
        CartographyModel {
            schema_name: schema_name.into(),
            elements: Vec::new(),
        }
    }

    pub fn with_elements(schema_name: impl Into<String>, elements: Vec<Element>) -> Self {
        CartographyModel {
            schema_name: schema_name.into(),
            elements,
        }
    }

    pub fn push(&mut self, element: Element) {
        self.elements.push(element);
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.id == id)
    }

    /// Id → position map. Later duplicates shadow earlier ones.
    pub fn index(&self) -> BTreeMap<&str, usize> {
        self.elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.as_str(), i))
            .collect()
    }

    /// Sorts elements by `(type, id)` and member lists are left as written.
    pub fn canonicalize(&mut self) {
        self.elements.sort_by(canonical_order);
    }

    pub fn canonical(mut self) -> Self {
        self.canonicalize();
        self
    }
}

pub fn canonical_order(a: &Element, b: &Element) -> core::cmp::Ordering {
    (a.type_name.as_str(), a.id.as_str()).cmp(&(b.type_name.as_str(), b.id.as_str()))
}
