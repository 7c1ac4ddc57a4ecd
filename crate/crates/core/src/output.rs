//! Result tables and their CSV / JSON serialisation.

use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, OutputFormat};

pub const TOOL_NAME: &str = "fso-geoloss";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const CONFIG_BEGIN: &str = "# --- effective config ---";
const CONFIG_END: &str = "# --- end config ---";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    /// A loss in dB; `+∞` is written as `inf`.
    Db(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Num(x) | Cell::Db(x) => fmt_f64(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => csv_escape(s),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) | Cell::Db(x) if x.is_finite() => json!(x),
            Cell::Num(x) | Cell::Db(x) => Value::String(fmt_f64(*x)),
            Cell::Int(n) => json!(n),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Shortest round-trip decimal form; non-finite values as `inf`, `-inf`, `nan`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Column name with its unit (`"-"` for dimensionless).
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[(&str, &str)]) -> Self {
        Self {
            columns: columns.iter().map(|(n, u)| Column { name: n.to_string(), unit: u.to_string() }).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

/// Output of one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    /// Scalar results and diagnostics, in emission order.
    pub metadata: Vec<(String, String)>,
    pub table: Table,
    /// `Some(false)` when a validation run found failures.
    pub passed: Option<bool>,
}

impl Report {
    pub fn new(command: &str, table: Table) -> Self {
        Self { command: command.into(), metadata: Vec::new(), table, passed: None }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.into(), value.to_string()));
    }

    pub fn render(&self, cfg: &ExperimentConfig, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(cfg),
            OutputFormat::Json => self.to_json(cfg),
        }
    }

    pub fn to_csv(&self, cfg: &ExperimentConfig) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {TOOL_NAME} {TOOL_VERSION}\n"));
        out.push_str(&format!("# command = {}\n", self.command));
        out.push_str(&format!("# seed = {}\n", cfg.seed));
        out.push_str(&format!("# config_hash = {}\n", cfg.hash()));
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(CONFIG_BEGIN);
        out.push('\n');
        for line in cfg.to_text().lines() {
            out.push_str(&format!("# {line}\n"));
        }
        out.push_str(CONFIG_END);
        out.push('\n');
        let header: Vec<String> = self
            .table
            .columns
            .iter()
            .map(|c| if c.unit == "-" { c.name.clone() } else { format!("{}_{}", c.name, c.unit) })
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.table.rows {
            out.push_str(&row.iter().map(Cell::to_csv).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, cfg: &ExperimentConfig) -> String {
        let meta: Map<String, Value> = self.metadata.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        let rows: Vec<Value> = self.table.rows.iter().map(|r| Value::Array(r.iter().map(Cell::to_json).collect())).collect();
        let v = json!({
            "tool": TOOL_NAME,
            "version": TOOL_VERSION,
            "command": self.command,
            "seed": cfg.seed,
            "config_hash": cfg.hash(),
            "effective_config": cfg.to_text(),
            "metadata": meta,
            "columns": self.table.columns.iter().map(|c| c.name.clone()).collect::<Vec<_>>(),
            "units": self.table.columns.iter().map(|c| c.unit.clone()).collect::<Vec<_>>(),
            "rows": rows,
            "passed": self.passed,
        });
        let mut s = serde_json::to_string_pretty(&v).unwrap_or_default();
        s.push('\n');
        s
    }
}

/// Recovers the effective-config block from emitted CSV or JSON text.
pub fn extract_effective_config(text: &str) -> Option<String> {
    if let Ok(v) = serde_json::from_str::<Value>(text) {
        return v.get("effective_config")?.as_str().map(str::to_string);
    }
    let start = text.lines().position(|l| l == CONFIG_BEGIN)?;
    let body: Vec<&str> = text
        .lines()
        .skip(start + 1)
        .take_while(|l| *l != CONFIG_END)
        .map(|l| l.strip_prefix("# ").unwrap_or(l))
        .collect();
    Some(body.join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut t = Table::new(&[("alpha", "rad"), ("exact", "db"), ("label", "-")]);
        t.push(vec![Cell::Num(0.5), Cell::Db(f64::INFINITY), Cell::Text("a,b".into())]);
        t.push(vec![Cell::Num(1e-3), Cell::Db(1.25), Cell::Text("plain".into())]);
        let mut r = Report::new("bounds", t);
        r.meta("a0", 0.0787);
        r
    }

    #[test]
    fn csv_layout() {
        let cfg = ExperimentConfig::default();
        let csv = sample().to_csv(&cfg);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# fso-geoloss "));
        assert!(lines.contains(&"# seed = 1"));
        assert!(lines.iter().any(|l| l.starts_with("# config_hash = ")));
        let header = lines.iter().position(|l| !l.starts_with('#')).unwrap();
        assert_eq!(lines[header], "alpha_rad,exact_db,label");
        assert_eq!(lines[header + 1], "0.5,inf,\"a,b\"");
        assert_eq!(lines[header + 2], "0.001,1.25,plain");
    }

    #[test]
    fn effective_config_round_trips_through_both_formats() {
        let cfg = ExperimentConfig { seed: 77, alpha: 0.1234567890123, ..ExperimentConfig::default() };
        for fmt in [OutputFormat::Csv, OutputFormat::Json] {
            let text = sample().render(&cfg, fmt);
            let block = extract_effective_config(&text).unwrap();
            assert_eq!(ExperimentConfig::parse_str(&block).unwrap(), cfg);
        }
    }

    #[test]
    fn json_encodes_infinity_as_string() {
        let v: Value = serde_json::from_str(&sample().to_json(&ExperimentConfig::default())).unwrap();
        assert_eq!(v["rows"][0][1], json!("inf"));
        assert_eq!(v["units"][1], json!("db"));
    }
}
