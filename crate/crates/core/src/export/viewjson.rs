use alloc::string::String;
use core::fmt::Write;

use super::{num, weight, Graph};
use crate::json::json_str;
use crate::model::{CartographyModel, CoreKind, Locator};
use crate::schema::MetamodelSchema;

/// Compact JSON consumed by the web viewer.
pub fn to_view_json(model: &CartographyModel, schema: &MetamodelSchema) -> String {
    let g = Graph::new(model, schema);
    let mut out = String::from("{\"nodes\":[");
    for (i, (e, kind)) in g.nodes().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let kind = kind.map_or("", CoreKind::name);
        let _ = write!(
            out,
            "{{\"id\":{},\"name\":{},\"type\":{},\"kind\":{}",
            json_str(&e.id),
            json_str(&e.name),
            json_str(&e.type_name),
            json_str(kind)
        );
        if let Some(group) = g.group_of(&e.id) {
            let _ = write!(out, ",\"group\":{}", json_str(group));
        }
        if let Some(container) = g.container_name(e) {
            let _ = write!(out, ",\"container\":{}", json_str(container));
        }
        if let Some(Locator::Geo { lat, lon }) = e.locator {
            let _ = write!(out, ",\"lat\":{},\"lon\":{}", num(lat), num(lon));
        }
        if let Some(w) = weight(e) {
            let _ = write!(out, ",\"weight\":{}", num(w));
        }
        out.push('}');
    }
    out.push_str("],\"edges\":[");
    for (i, (e, kind)) in g.edges().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "{{\"id\":{},\"source\":{},\"target\":{},\"type\":{},\"directed\":{},\"name\":{}}}",
            json_str(&e.id),
            json_str(e.source.as_deref().unwrap_or_default()),
            json_str(e.target.as_deref().unwrap_or_default()),
            json_str(&e.type_name),
            kind == Some(CoreKind::DirectedRelationship),
            json_str(&e.name)
        );
    }
    out.push_str("]}");
    out
}
