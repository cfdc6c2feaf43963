use alloc::string::String;
use core::fmt::Write;

use super::{meta_text, num, xml_escape, Graph, XML_DECL};
use crate::model::{CartographyModel, Locator};
use crate::schema::MetamodelSchema;

/// KML 2.2: one Placemark per geo-located element.
pub fn to_kml(model: &CartographyModel, schema: &MetamodelSchema) -> String {
    let g = Graph::new(model, schema);
    let mut out = String::from(XML_DECL);
    out.push_str("<kml xmlns=\"http://www.opengis.net/kml/2.2\">\n  <Document>\n");
    let title = if g.model.schema_name.is_empty() { "Cartography" } else { &g.model.schema_name };
    let _ = writeln!(out, "    <name>{}</name>", xml_escape(title));
    for (e, _) in g.all() {
        let Some(Locator::Geo { lat, lon }) = e.locator else { continue };
        let mut description = e.type_name.clone();
        for (k, v) in &e.metadata {
            let _ = write!(description, "\n{k}={}", meta_text(v));
        }
        out.push_str("    <Placemark>\n");
        let _ = writeln!(out, "      <name>{}</name>", xml_escape(&e.name));
        let _ = writeln!(out, "      <description>{}</description>", xml_escape(&description));
        let _ = writeln!(
            out,
            "      <Point><coordinates>{},{},0</coordinates></Point>",
            num(lon),
            num(lat)
        );
        out.push_str("    </Placemark>\n");
    }
    out.push_str("  </Document>\n</kml>\n");
    out
}
