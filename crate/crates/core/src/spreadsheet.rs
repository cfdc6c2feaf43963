//! SpreadsheetML (Excel 2003 XML) workbook model.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::model::{CartographyModel, Element};
use crate::schema::{AttrType, MetamodelSchema, TypeDef};
use crate::xml::{XmlModel, XmlNode};

pub const SPREADSHEET_SCHEMA: &str = "Spreadsheet";
pub const WORKSHEET: &str = "Worksheet";
pub const ROW: &str = "Row";
pub const CELL: &str = "Cell";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub value: String,
    /// 1-based.
    pub column: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Row {
    /// 1-based.
    pub index: u32,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Worksheet {
    pub name: String,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpreadsheetModel {
    pub worksheets: Vec<Worksheet>,
}

impl SpreadsheetModel {
    pub fn cell_count(&self) -> usize {
        self.worksheets
            .iter()
            .flat_map(|w| &w.rows)
            .map(|r| r.cells.len())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpreadsheetError {
    #[error("root element is `{0}`, expected Workbook")]
    NotWorkbook(String),
    #[error("Cell element outside of a Row (worksheet `{0}`)")]
    CellOutsideRow(String),
    #[error("invalid ss:Index `{value}` in worksheet `{sheet}`")]
    BadIndex { sheet: String, value: String },
}

/// Walks a SpreadsheetML document. Element names are matched on their local
/// part, so any namespace prefix is accepted.
pub fn xml_to_spreadsheet(xml: &XmlModel) -> Result<SpreadsheetModel, SpreadsheetError> {
    let root = xml.root();
    let root_name = root.local_name().unwrap_or_default();
    if root_name != "Workbook" {
        return Err(SpreadsheetError::NotWorkbook(root_name.to_string()));
    }
    let mut book = SpreadsheetModel::default();
    for (i, ws) in root
        .child_elements()
        .filter(|n| n.local_name() == Some("Worksheet"))
        .enumerate()
    {
        let name = ws
            .attr("Name")
            .map(ToString::to_string)
            .unwrap_or_else(|| format!("Sheet{}", i + 1));
        let mut sheet = Worksheet {
            name,
            rows: Vec::new(),
        };
        let mut last_row = 0;
        scan(ws, &mut sheet, &mut last_row)?;
        book.worksheets.push(sheet);
    }
    Ok(book)
}

fn parse_index(sheet: &str, raw: &str, after: u32) -> Result<u32, SpreadsheetError> {
    match raw.trim().parse::<u32>() {
        Ok(i) if i > after => Ok(i),
        _ => Err(SpreadsheetError::BadIndex {
            sheet: sheet.to_string(),
            value: raw.to_string(),
        }),
    }
}

fn span(sheet: &str, node: &XmlNode, attr: &str) -> Result<u32, SpreadsheetError> {
    node.attr(attr).map_or(Ok(0), |raw| {
        raw.trim().parse::<u32>().map_err(|_| SpreadsheetError::BadIndex {
            sheet: sheet.to_string(),
            value: raw.to_string(),
        })
    })
}

fn scan(node: &XmlNode, sheet: &mut Worksheet, last_row: &mut u32) -> Result<(), SpreadsheetError> {
    for child in node.child_elements() {
        match child.local_name() {
            Some("Row") => {
                let index = match child.attr("Index") {
                    Some(raw) => parse_index(&sheet.name, raw, *last_row)?,
                    None => *last_row + 1,
                };
                let mut row = Row {
                    index,
                    cells: Vec::new(),
                };
                let mut last_col = 0;
                for cell in child.child_elements() {
                    if cell.local_name() != Some("Cell") {
                        continue;
                    }
                    let column = match cell.attr("Index") {
                        Some(raw) => parse_index(&sheet.name, raw, last_col)?,
                        None => last_col + 1,
                    };
                    let value = cell
                        .child_elements()
                        .find(|d| d.local_name() == Some("Data"))
                        .map(XmlNode::text_content)
                        .unwrap_or_default();
                    row.cells.push(Cell { value, column });
                    last_col = column + span(&sheet.name, cell, "MergeAcross")?;
                }
                *last_row = index + span(&sheet.name, child, "Span")?;
                sheet.rows.push(row);
            }
            Some("Cell") => return Err(SpreadsheetError::CellOutsideRow(sheet.name.clone())),
            _ => scan(child, sheet, last_row)?,
        }
    }
    Ok(())
}

pub fn spreadsheet_schema() -> MetamodelSchema {
    MetamodelSchema::new(
        SPREADSHEET_SCHEMA,
        alloc::vec![
            TypeDef::new(WORKSHEET, "Container"),
            TypeDef::new(ROW, "Container").with_attribute("index", AttrType::Number),
            TypeDef::new(CELL, "Entity")
                .with_attribute("row", AttrType::Number)
                .with_attribute("column", AttrType::Number)
                .with_attribute("value", AttrType::String),
        ],
    )
    .expect("built-in schema is well formed")
}

/// Encodes the workbook as a `Spreadsheet` cartography model: worksheets and
/// rows are containers, cells are entities named in R1C1 notation.
pub fn spreadsheet_to_model(book: &SpreadsheetModel) -> CartographyModel {
    let mut out = CartographyModel::new(SPREADSHEET_SCHEMA);
    for (w, ws) in book.worksheets.iter().enumerate() {
        let ws_id = format!("ws{:03}", w + 1);
        out.push(Element::new(&ws_id, WORKSHEET, ws.name.as_str()));
        for row in &ws.rows {
            let row_id = format!("{ws_id}/r{:06}", row.index);
            out.push(
                Element::new(&row_id, ROW, format!("{}", row.index))
                    .with_meta("index", f64::from(row.index))
                    .with_container(ws_id.as_str()),
            );
            for cell in &row.cells {
                out.push(
                    Element::new(
                        format!("{row_id}/c{:05}", cell.column),
                        CELL,
                        format!("R{}C{}", row.index, cell.column),
                    )
                    .with_meta("row", f64::from(row.index))
                    .with_meta("column", f64::from(cell.column))
                    .with_meta("value", cell.value.as_str())
                    .with_container(row_id.as_str()),
                );
            }
        }
    }
    out
}
