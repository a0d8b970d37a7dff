//! Fixed-schema tables serialized as CSV or JSON. Reals use 17 significant
//! digits, lines end in LF, and rows are validated before anything is written.

use std::path::Path;

use serde_json::{json, Value};

use crate::config::Format;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Real,
    Text,
}

#[derive(Debug, Clone, Copy)]
pub struct Column {
    pub name: &'static str,
    /// Empty for labels and dimensionless columns.
    pub unit: &'static str,
    pub kind: Kind,
}

const fn col(name: &'static str, unit: &'static str, kind: Kind) -> Column {
    Column { name, unit, kind }
}

#[derive(Debug, Clone, Copy)]
pub struct Schema {
    pub name: &'static str,
    pub columns: &'static [Column],
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "true" } else { "false" }.to_string())
    }
}

/// Builds a row from anything convertible to cells.
#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$($crate::table::Cell::from($v)),*] };
}

use Kind::{Int, Real, Text};

pub const EIGEN: Schema = Schema {
    name: "eigen",
    columns: &[col("parity", "", Text), col("m", "", Int), col("k", "1/length", Real), col("E", "energy", Real)],
};

pub const EVOLVE: Schema = Schema {
    name: "evolve",
    columns: &[
        col("x", "length", Real),
        col("re", "length^-1/2", Real),
        col("im", "length^-1/2", Real),
        col("t", "time", Real),
    ],
};

pub const GREEN: Schema = Schema {
    name: "green",
    columns: &[
        col("x", "length", Real),
        col("x0", "length", Real),
        col("t", "time", Real),
        col("re", "1/length", Real),
        col("im", "1/length", Real),
        col("error_budget", "1/length", Real),
        col("method", "", Text),
        col("sector", "", Text),
    ],
};

pub const APPLY_OP: Schema = Schema {
    name: "apply-op",
    columns: &[
        col("x", "length", Real),
        col("psi_re", "length^-1/2", Real),
        col("psi_im", "length^-1/2", Real),
        col("re", "energy length^-1/2", Real),
        col("im", "energy length^-1/2", Real),
    ],
};

pub const APPENDIX_K: Schema = Schema {
    name: "appendix-k",
    columns: &[
        col("m", "", Int),
        col("alpha", "", Real),
        col("x", "length", Real),
        col("re", "", Real),
        col("im", "", Real),
        col("residue_re", "", Real),
        col("residue_im", "", Real),
        col("exact_re", "", Real),
        col("exact_im", "", Real),
        col("diff_residue", "", Real),
        col("diff_exact", "", Real),
        col("error_budget", "", Real),
        col("pass", "", Text),
    ],
};

pub const APPENDIX_EIGEN: Schema = Schema {
    name: "appendix-eigen",
    columns: &[
        col("m", "", Int),
        col("alpha", "", Real),
        col("mean", "energy", Real),
        col("closed_form", "energy", Real),
        col("max_rel_deviation", "", Real),
        col("rel_spread", "", Real),
        col("pass", "", Text),
    ],
};

pub const CK: Schema = Schema {
    name: "ck",
    columns: &[
        col("alpha", "", Real),
        col("t", "time", Real),
        col("residual", "", Real),
        col("pass", "", Text),
    ],
};

pub const DOS: Schema = Schema {
    name: "dos",
    columns: &[col("E", "energy", Real), col("rho", "1/energy", Real)],
};

pub const WALLS: Schema = Schema {
    name: "walls",
    columns: &[
        col("m", "", Int),
        col("n", "", Int),
        col("e_min", "energy", Real),
        col("e_max", "energy", Real),
        col("center", "energy", Real),
        col("half_width_first_order", "energy", Real),
    ],
};

fn validate(schema: &Schema, rows: &[Vec<Cell>]) -> CliResult<()> {
    let fail = |row: usize, reason: String| CliError::Table {
        table: schema.name.to_string(),
        row,
        reason,
    };
    for (i, row) in rows.iter().enumerate() {
        if row.len() != schema.columns.len() {
            return Err(fail(i, format!("{} cells for {} columns", row.len(), schema.columns.len())));
        }
        for (cell, column) in row.iter().zip(schema.columns) {
            let ok = match (cell, column.kind) {
                (Cell::Int(_), Int) => true,
                (Cell::Real(v), Real) => {
                    if !v.is_finite() {
                        return Err(fail(i, format!("non-finite value {v} in column {}", column.name)));
                    }
                    true
                }
                (Cell::Text(s), Text) => !s.contains([',', '"', '\n', '\r']),
                _ => false,
            };
            if !ok {
                return Err(fail(i, format!("cell {cell:?} does not fit column {}", column.name)));
            }
        }
    }
    Ok(())
}

fn header(column: &Column) -> String {
    if column.unit.is_empty() {
        column.name.to_string()
    } else {
        format!("{}[{}]", column.name, column.unit)
    }
}

fn csv_cell(cell: &Cell) -> String {
    match cell {
        Cell::Int(v) => v.to_string(),
        Cell::Real(v) => format!("{v:.16e}"),
        Cell::Text(s) => s.clone(),
    }
}

fn json_cell(cell: &Cell) -> Value {
    match cell {
        Cell::Int(v) => json!(v),
        Cell::Real(v) => json!(v),
        Cell::Text(s) => json!(s),
    }
}

/// Serializes validated rows; no I/O.
pub fn render(schema: &Schema, rows: &[Vec<Cell>], format: Format) -> CliResult<Vec<u8>> {
    validate(schema, rows)?;
    let text = match format {
        Format::Csv => {
            let mut out = schema.columns.iter().map(header).collect::<Vec<_>>().join(",");
            out.push('\n');
            for row in rows {
                out.push_str(&row.iter().map(csv_cell).collect::<Vec<_>>().join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let columns: Vec<Value> = schema
                .columns
                .iter()
                .map(|c| json!({ "name": c.name, "unit": c.unit }))
                .collect();
            let rows: Vec<Value> = rows.iter().map(|r| Value::Array(r.iter().map(json_cell).collect())).collect();
            let doc = json!({ "table": schema.name, "columns": columns, "rows": rows });
            let mut s = serde_json::to_string_pretty(&doc).expect("json values always serialize");
            s.push('\n');
            s
        }
    };
    Ok(text.into_bytes())
}

/// Renders then writes `rows` to `path`, returning the bytes written.
pub fn write_table(path: &Path, schema: &Schema, rows: &[Vec<Cell>], format: Format) -> CliResult<Vec<u8>> {
    let bytes = render(schema, rows, format)?;
    std::fs::write(path, &bytes).map_err(|e| CliError::io(path, e))?;
    Ok(bytes)
}
