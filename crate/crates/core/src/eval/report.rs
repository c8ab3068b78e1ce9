use serde::{Deserialize, Serialize};

/// Column headers of every result table.
pub const COLUMNS: [&str; 5] = ["F_prep", "F_resp", "F_post", "F_eng", "F_avg"];

/// Fixed six-decimal rendering used in every CSV artifact.
pub fn format_fixed(x: f64) -> String {
    format!("{x:.6}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub label: String,
    pub values: [f64; 5],
}

/// One row per representation, columns [`COLUMNS`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub title: String,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new(title: impl Into<String>) -> Self {
        ResultTable {
            title: title.into(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, values: [f64; 5]) {
        self.rows.push(ResultRow {
            label: label.into(),
            values,
        });
    }

    pub fn labels(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.label.as_str()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("representation,{}\n", COLUMNS.join(","));
        for r in &self.rows {
            let vals: Vec<String> = r.values.iter().map(|&v| format_fixed(v)).collect();
            s.push_str(&format!("{},{}\n", r.label, vals.join(",")));
        }
        s
    }

    /// Aligned plain text with three decimals.
    pub fn render(&self) -> String {
        let w = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(14);
        let mut s = format!("{}\n{:<w$}", self.title, "");
        for c in COLUMNS {
            s.push_str(&format!("{c:>8}"));
        }
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!("{:<w$}", r.label));
            for v in r.values {
                s.push_str(&format!("{v:>8.3}"));
            }
            s.push('\n');
        }
        s
    }
}
