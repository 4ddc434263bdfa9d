//! Versioned tabular output.
//!
//! CSV files start with the line `# semiclassical-jc schema v1`, then a
//! header row. A complex column `x` becomes the pair `re_x`, `im_x`. JSON
//! documents are `{config, schema_version, rows}` with each row an object
//! keyed by the same flattened column names.

use num_complex::Complex64 as C64;
use serde_json::{json, Map, Value};
use std::io::Write;

use crate::dopa::ComplexTrajectory;
use crate::error::{JcError, Result};
use crate::model::Method;

pub const SCHEMA_VERSION: u32 = 1;
pub const SCHEMA_LINE: &str = "# semiclassical-jc schema v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Real,
    Complex,
    Integer,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Complex(C64),
    Integer(i64),
    Text(String),
}

impl Cell {
    fn kind(&self) -> Kind {
        match self {
            Cell::Real(_) => Kind::Real,
            Cell::Complex(_) => Kind::Complex,
            Cell::Integer(_) => Kind::Integer,
            Cell::Text(_) => Kind::Text,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<C64> for Cell {
    fn from(z: C64) -> Self {
        Cell::Complex(z)
    }
}

impl From<Method> for Cell {
    fn from(m: Method) -> Self {
        Cell::Text(m.tag().to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<(String, Kind)>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[(&str, Kind)]) -> Self {
        Self { columns: columns.iter().map(|(n, k)| (n.to_string(), *k)).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(JcError::Export(format!(
                "row has {} cells, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        for (cell, (name, kind)) in row.iter().zip(&self.columns) {
            if cell.kind() != *kind {
                return Err(JcError::Export(format!("column {name} expects {kind:?}, got {:?}", cell.kind())));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    /// Column names after splitting complex columns.
    pub fn flat_columns(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, kind) in &self.columns {
            if *kind == Kind::Complex {
                out.push(format!("re_{name}"));
                out.push(format!("im_{name}"));
            } else {
                out.push(name.clone());
            }
        }
        out
    }

    fn flat_row(row: &[Cell]) -> Vec<Value> {
        let mut out = Vec::new();
        for cell in row {
            match cell {
                Cell::Real(x) => out.push(json!(x)),
                Cell::Complex(z) => {
                    out.push(json!(z.re));
                    out.push(json!(z.im));
                }
                Cell::Integer(i) => out.push(json!(i)),
                Cell::Text(s) => out.push(json!(s)),
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{SCHEMA_LINE}").map_err(|e| JcError::Export(e.to_string()))?;
        let mut csv = csv::Writer::from_writer(w);
        let err = |e: csv::Error| JcError::Export(e.to_string());
        csv.write_record(self.flat_columns()).map_err(err)?;
        for row in &self.rows {
            let mut fields = Vec::new();
            for cell in row {
                // Debug gives the shortest round-trip form, with NaN and inf spelled out
                match cell {
                    Cell::Real(x) => fields.push(format!("{x:?}")),
                    Cell::Complex(z) => fields.extend([format!("{:?}", z.re), format!("{:?}", z.im)]),
                    Cell::Integer(i) => fields.push(i.to_string()),
                    Cell::Text(t) => fields.push(t.clone()),
                }
            }
            csv.write_record(fields).map_err(err)?;
        }
        csv.flush().map_err(|e| JcError::Export(e.to_string()))
    }

    pub fn to_json(&self, config: Value) -> Value {
        let names = self.flat_columns();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let map: Map<String, Value> = names.iter().cloned().zip(Self::flat_row(r)).collect();
                Value::Object(map)
            })
            .collect();
        json!({ "config": config, "schema_version": SCHEMA_VERSION, "rows": rows })
    }
}

/// Trajectory rows: t, α, β, ζ, η (direct chart), N and C drift, plus the
/// method tag and the achieved residual against its tolerance.
pub fn trajectory_table(traj: &ComplexTrajectory, method: Method, residual: f64, tolerance: f64) -> Result<Table> {
    let mut table = Table::new(&[
        ("t", Kind::Real),
        ("alpha", Kind::Complex),
        ("beta", Kind::Complex),
        ("zeta", Kind::Complex),
        ("eta", Kind::Complex),
        ("n_drift", Kind::Real),
        ("c_drift", Kind::Real),
        ("method", Kind::Text),
        ("residual", Kind::Real),
        ("tolerance", Kind::Real),
    ]);
    for (i, p) in traj.points.iter().enumerate() {
        let d = p.to_direct();
        table.push(vec![
            traj.times[i].into(),
            d.alpha.into(),
            d.beta.into(),
            d.zeta.into(),
            d.eta.into(),
            traj.n_drift[i].into(),
            traj.c_drift[i].into(),
            method.into(),
            residual.into(),
            tolerance.into(),
        ])?;
    }
    Ok(table)
}
