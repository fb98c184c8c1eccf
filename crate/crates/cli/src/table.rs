//! Tabular output: CSV (17 significant digits, scientific) or a JSON records
//! array with the same field names.

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Float(f64),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(i) => Value::Number((*i).into()),
            Cell::Float(x) => Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as u64)
    }
}

impl From<u32> for Cell {
    fn from(i: u32) -> Self {
        Cell::Int(u64::from(i))
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Scientific notation with 17 significant digits; round-trips any `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    pub fn to_json_value(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let record: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| ((*c).to_owned(), v.json()))
                        .collect();
                    Value::Object(record)
                })
                .collect(),
        )
    }
}

/// One or more named tables, rendered as a single document.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub datasets: Vec<(String, Table)>,
}

impl Report {
    pub fn single(name: &str, table: Table) -> Self {
        Self {
            datasets: vec![(name.to_owned(), table)],
        }
    }

    /// A lone table prints as plain CSV; several are separated by a blank
    /// line and introduced by a `# name` comment.
    pub fn render(&self, json: bool) -> String {
        if json {
            let value = if self.datasets.len() == 1 {
                self.datasets[0].1.to_json_value()
            } else {
                Value::Object(
                    self.datasets
                        .iter()
                        .map(|(name, t)| (name.clone(), t.to_json_value()))
                        .collect(),
                )
            };
            let mut s = serde_json::to_string_pretty(&value).expect("json");
            s.push('\n');
            return s;
        }
        if self.datasets.len() == 1 {
            return self.datasets[0].1.to_csv();
        }
        self.datasets
            .iter()
            .map(|(name, t)| format!("# {name}\n{}", t.to_csv()))
            .collect::<Vec<_>>()
            .join("\n")
    }
}
