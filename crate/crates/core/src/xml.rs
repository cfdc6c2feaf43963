//! Generic XML tree model and its cartography encoding.
//!
//! The tree itself is produced by a text injector living outside this crate;
//! here we only hold the structure and move it in and out of the `Xml`
//! schema so transformations can consume it like any other model.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::model::{CartographyModel, Element, MetaValue};
use crate::schema::{AttrType, MetamodelSchema, TypeDef};

pub const XML_SCHEMA: &str = "Xml";
pub const XML_ELEMENT: &str = "XmlElement";
pub const XML_ATTRIBUTE: &str = "XmlAttribute";
pub const XML_TEXT: &str = "XmlText";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XmlNode {
    Element { name: String, children: Vec<XmlNode> },
    Attribute { name: String, value: String },
    Text(String),
}

impl XmlNode {
    pub fn element(name: impl Into<String>, children: Vec<XmlNode>) -> Self {
        XmlNode::Element {
            name: name.into(),
            children,
        }
    }

    pub fn attribute(name: impl Into<String>, value: impl Into<String>) -> Self {
        XmlNode::Attribute {
            name: name.into(),
            value: value.into(),
        }
    }

    pub fn text(value: impl Into<String>) -> Self {
        XmlNode::Text(value.into())
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            XmlNode::Element { name, .. } | XmlNode::Attribute { name, .. } => Some(name),
            XmlNode::Text(_) => None,
        }
    }

    /// Tag name with any namespace prefix removed.
    pub fn local_name(&self) -> Option<&str> {
        self.name().map(local_name)
    }

    pub fn children(&self) -> &[XmlNode] {
        match self {
            XmlNode::Element { children, .. } => children,
            _ => &[],
        }
    }

    pub fn is_element(&self) -> bool {
        matches!(self, XmlNode::Element { .. })
    }

    pub fn child_elements(&self) -> impl Iterator<Item = &XmlNode> {
        self.children().iter().filter(|c| c.is_element())
    }

    /// Attribute value looked up by local name, ignoring the prefix.
    pub fn attr(&self, local: &str) -> Option<&str> {
        self.children().iter().find_map(|c| match c {
            XmlNode::Attribute { name, value } if local_name(name) == local => Some(value.as_str()),
            _ => None,
        })
    }

    /// Concatenated text of this node and all its descendants.
    pub fn text_content(&self) -> String {
        let mut out = String::new();
        self.collect_text(&mut out);
        out
    }

    fn collect_text(&self, out: &mut String) {
        match self {
            XmlNode::Text(t) => out.push_str(t),
            XmlNode::Element { children, .. } => children.iter().for_each(|c| c.collect_text(out)),
            XmlNode::Attribute { .. } => {}
        }
    }

    pub fn count(&self) -> usize {
        1 + self.children().iter().map(XmlNode::count).sum::<usize>()
    }

    pub fn count_elements(&self) -> usize {
        usize::from(self.is_element())
            + self.children().iter().map(XmlNode::count_elements).sum::<usize>()
    }
}

pub fn local_name(name: &str) -> &str {
    name.rsplit_once(':').map_or(name, |(_, local)| local)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum XmlModelError {
    #[error("the root node must be an element")]
    RootNotElement,
    #[error("model is not an Xml model: {0}")]
    NotXml(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlModel {
    root: XmlNode,
}

impl XmlModel {
    pub fn new(root: XmlNode) -> Result<Self, XmlModelError> {
        if !root.is_element() {
            return Err(XmlModelError::RootNotElement);
        }
        Ok(XmlModel { root })
    }

    pub fn root(&self) -> &XmlNode {
        &self.root
    }

    pub fn into_root(self) -> XmlNode {
        self.root
    }
}

pub fn xml_schema() -> MetamodelSchema {
    MetamodelSchema::new(
        XML_SCHEMA,
        alloc::vec![
            TypeDef::new(XML_ELEMENT, "Container"),
            TypeDef::new(XML_ATTRIBUTE, "Entity").with_attribute("value", AttrType::String),
            TypeDef::new(XML_TEXT, "Entity").with_attribute("value", AttrType::String),
        ],
    )
    .expect("built-in schema is well formed")
}

fn id_width(total: usize) -> usize {
    let mut digits = 1;
    let mut n = total;
    while n >= 10 {
        n /= 10;
        digits += 1;
    }
    digits.max(6)
}

/// Encodes the tree as an `Xml` cartography model. Ids follow document order
/// (`n000000`, `n000001`, ...), so canonical ordering preserves it.
pub fn xml_to_model(xml: &XmlModel) -> CartographyModel {
    let width = id_width(xml.root.count());
    let mut out = CartographyModel::new(XML_SCHEMA);
    let mut counter = 0usize;
    encode(&xml.root, None, width, &mut counter, &mut out);
    out
}

fn encode(node: &XmlNode, parent: Option<&str>, width: usize, counter: &mut usize, out: &mut CartographyModel) {
    let id = format!("n{:0width$}", *counter, width = width);
    *counter += 1;
    let mut e = match node {
        XmlNode::Element { name, .. } => Element::new(&id, XML_ELEMENT, name.as_str()),
        XmlNode::Attribute { name, value } => {
            Element::new(&id, XML_ATTRIBUTE, name.as_str()).with_meta("value", value.as_str())
        }
        XmlNode::Text(value) => Element::new(&id, XML_TEXT, "#text").with_meta("value", value.as_str()),
    };
    e.container = parent.map(ToString::to_string);
    out.push(e);
    for child in node.children() {
        encode(child, Some(&id), width, counter, out);
    }
}

/// Rebuilds the tree from an `Xml` cartography model. Sibling order is
/// recovered from id order.
pub fn model_to_xml(model: &CartographyModel) -> Result<XmlModel, XmlModelError> {
    if model.schema_name != XML_SCHEMA {
        return Err(XmlModelError::NotXml(format!(
            "schema is `{}`",
            model.schema_name
        )));
    }
    let mut children: BTreeMap<Option<&str>, Vec<&Element>> = BTreeMap::new();
    for e in &model.elements {
        children.entry(e.container.as_deref()).or_default().push(e);
    }
    for list in children.values_mut() {
        list.sort_by(|a, b| a.id.cmp(&b.id));
    }
    let roots = children.get(&None).map(Vec::as_slice).unwrap_or_default();
    let [root] = roots else {
        return Err(XmlModelError::NotXml(format!("{} root nodes", roots.len())));
    };
    let root = decode(root, &children, 0)?;
    XmlModel::new(root)
}

fn decode(
    e: &Element,
    children: &BTreeMap<Option<&str>, Vec<&Element>>,
    depth: usize,
) -> Result<XmlNode, XmlModelError> {
    if depth > 4096 {
        return Err(XmlModelError::NotXml("nesting too deep".into()));
    }
    let value = || match e.metadata.get("value") {
        Some(MetaValue::Str(s)) => Ok(s.clone()),
        _ => Err(XmlModelError::NotXml(format!("`{}` has no string value", e.id))),
    };
    let kids = children.get(&Some(e.id.as_str()));
    match e.type_name.as_str() {
        XML_ELEMENT => {
            let list = kids
                .map(|k| k.iter().map(|c| decode(c, children, depth + 1)).collect())
                .transpose()?
                .unwrap_or_default();
            Ok(XmlNode::element(e.name.as_str(), list))
        }
        XML_ATTRIBUTE | XML_TEXT if kids.is_some() => {
            Err(XmlModelError::NotXml(format!("`{}` cannot have children", e.id)))
        }
        XML_ATTRIBUTE => Ok(XmlNode::attribute(e.name.as_str(), value()?)),
        XML_TEXT => Ok(XmlNode::Text(value()?)),
        other => Err(XmlModelError::NotXml(format!("unexpected type `{other}`"))),
    }
}
