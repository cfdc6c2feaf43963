//! Raw XML text to [`XmlModel`].

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use cartopipe_core::xml::{XmlModel, XmlNode};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InjectError {
    #[error("empty document")]
    Empty,
    #[error("malformed XML at {line}:{column}: {message}")]
    Malformed { line: usize, column: usize, message: String },
}

/// 1-based line and column (in characters) of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let mut offset = offset.min(text.len());
    while !text.is_char_boundary(offset) {
        offset -= 1;
    }
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

struct Builder<'t> {
    text: &'t str,
    stack: Vec<(String, Vec<XmlNode>)>,
    pending: String,
    root: Option<XmlNode>,
}

impl Builder<'_> {
    fn error(&self, offset: u64, message: impl Into<String>) -> InjectError {
        let (line, column) = line_column(self.text, offset as usize);
        InjectError::Malformed {
            line,
            column,
            message: message.into(),
        }
    }

    /// Turns accumulated character data into a text node, dropping it if it
    /// is whitespace only.
    fn flush_text(&mut self, offset: u64) -> Result<(), InjectError> {
        let text = std::mem::take(&mut self.pending);
        if text.trim().is_empty() {
            return Ok(());
        }
        match self.stack.last_mut() {
            Some((_, children)) => {
                children.push(XmlNode::Text(text));
                Ok(())
            }
            None => Err(self.error(offset, "text outside the root element")),
        }
    }

    fn open(&mut self, start: &BytesStart<'_>, offset: u64) -> Result<(), InjectError> {
        if self.stack.is_empty() && self.root.is_some() {
            return Err(self.error(offset, "more than one root element"));
        }
        let name = String::from_utf8_lossy(start.name().as_ref()).into_owned();
        let mut children = Vec::new();
        for attr in start.attributes().with_checks(true) {
            let attr = attr.map_err(|e| self.error(offset, e.to_string()))?;
            let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
            let raw = std::str::from_utf8(&attr.value).map_err(|e| self.error(offset, e.to_string()))?;
            // Attribute-value normalization: literal whitespace becomes a
            // space before references are expanded, so `&#10;` survives.
            let raw = raw.replace("\r\n", " ").replace(['\t', '\n', '\r'], " ");
            let value = quick_xml::escape::unescape(&raw)
                .map_err(|e| self.error(offset, format!("attribute `{key}`: {e}")))?;
            children.push(XmlNode::attribute(key, value.into_owned()));
        }
        self.stack.push((name, children));
        Ok(())
    }

    fn close(&mut self) {
        let (name, children) = self.stack.pop().expect("close follows open");
        let node = XmlNode::element(name, children);
        match self.stack.last_mut() {
            Some((_, siblings)) => siblings.push(node),
            None => self.root = Some(node),
        }
    }
}

/// Parses well-formed XML into a structure-preserving tree. Comments,
/// processing instructions and the DOCTYPE are discarded, whitespace-only
/// text is dropped, and only the five predefined entities plus character
/// references are expanded.
pub fn inject_xml(text: &str) -> Result<XmlModel, InjectError> {
    if text.trim().is_empty() {
        return Err(InjectError::Empty);
    }
    let mut reader = Reader::from_str(text);
    reader.config_mut().check_end_names = true;
    let mut b = Builder {
        text,
        stack: Vec::new(),
        pending: String::new(),
        root: None,
    };
    loop {
        let at = reader.buffer_position();
        let event = reader
            .read_event()
            .map_err(|e| b.error(reader.error_position(), e.to_string()))?;
        match event {
            Event::Start(start) => {
                b.flush_text(at)?;
                b.open(&start, at)?;
            }
            Event::Empty(start) => {
                b.flush_text(at)?;
                b.open(&start, at)?;
                b.close();
            }
            Event::End(_) => {
                b.flush_text(at)?;
                b.close();
            }
            Event::Text(t) => {
                let s = t.xml_content().map_err(|e| b.error(at, e.to_string()))?;
                b.pending.push_str(&s);
            }
            Event::CData(t) => {
                let s = t.decode().map_err(|e| b.error(at, e.to_string()))?;
                b.pending.push_str(&s);
            }
            Event::GeneralRef(r) => {
                if let Some(c) = r.resolve_char_ref().map_err(|e| b.error(at, e.to_string()))? {
                    b.pending.push(c);
                } else {
                    let name = r.decode().map_err(|e| b.error(at, e.to_string()))?;
                    match quick_xml::escape::resolve_predefined_entity(&name) {
                        Some(s) => b.pending.push_str(s),
                        None => return Err(b.error(at, format!("undefined entity `&{name};`"))),
                    }
                }
            }
            Event::Comment(_) | Event::PI(_) | Event::Decl(_) | Event::DocType(_) => b.flush_text(at)?,
            Event::Eof => {
                b.flush_text(at)?;
                if let Some((name, _)) = b.stack.last() {
                    return Err(b.error(at, format!("unclosed element `{name}`")));
                }
                break;
            }
        }
    }
    let root = b.root.ok_or(InjectError::Empty)?;
    Ok(XmlModel::new(root).expect("root is an element"))
}
