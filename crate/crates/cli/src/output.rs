//! CSV and JSON emission with the resolved configuration echoed up front.

use lightcone::fit::LinearFit;
use serde_json::{json, Map, Value as Json};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    /// Shortest decimal text that parses back to the same `f64`.
    fn to_csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn to_json(&self) -> Json {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(n) => json!(n),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n as i64)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as i64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

pub const FIT_COLUMNS: [&str; 4] = ["quantity", "slope", "intercept", "r_squared"];

pub fn fit_table(fits: &[(String, LinearFit)]) -> Table {
    let mut t = Table::new(&FIT_COLUMNS);
    for (name, fit) in fits {
        t.push(vec![name.clone().into(), fit.slope.into(), fit.intercept.into(), fit.r_squared.into()]);
    }
    t
}

pub fn render_csv(config: &[(String, String)], table: &Table) -> String {
    let mut out = String::new();
    for (k, v) in config {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Cell::to_csv).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn rows_json(table: &Table) -> Json {
    Json::Array(
        table
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (col, cell) in table.columns.iter().zip(row) {
                    obj.insert((*col).to_string(), cell.to_json());
                }
                Json::Object(obj)
            })
            .collect(),
    )
}

pub fn render_json(config: &[(String, String)], table: &Table, fits: Option<&Table>) -> String {
    let cfg: Map<String, Json> = config.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let mut doc = Map::new();
    doc.insert("config".into(), Json::Object(cfg));
    doc.insert("columns".into(), json!(table.columns));
    doc.insert("rows".into(), rows_json(table));
    if let Some(f) = fits {
        doc.insert("fits".into(), rows_json(f));
    }
    let mut s = serde_json::to_string_pretty(&Json::Object(doc)).expect("JSON values serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_numbers_round_trip() {
        for x in [0.1, 1e-300, 123456.789, -2.5e17, 1.0 / 3.0] {
            let text = Cell::Num(x).to_csv();
            assert_eq!(text.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.5.into(), "x".into()]);
        let text = render_csv(&[("seed".into(), "42".into())], &t);
        assert_eq!(text, "# seed = 42\na,b\n1.5,x\n");
    }

    #[test]
    fn json_mirrors_columns() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![2.0.into(), true.into()]);
        let doc: Json = serde_json::from_str(&render_json(&[("k".into(), "v".into())], &t, None)).unwrap();
        assert_eq!(doc["rows"][0]["a"], json!(2.0));
        assert_eq!(doc["rows"][0]["b"], json!(true));
        assert_eq!(doc["config"]["k"], json!("v"));
    }
}
