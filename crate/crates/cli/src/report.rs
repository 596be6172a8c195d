//! Report emission: a versioned machine format and aligned text tables.
//!
//! Every run produces one report with a fixed envelope: format version,
//! command, verdict, and exit code, plus a command-specific body. The
//! machine form is deterministic JSON (maps in key order, no timestamps,
//! no environment), so identical inputs and flags yield byte-identical
//! output. The text form renders the same content as aligned tables for
//! reading in a terminal.

use paretolab_core::conditions::{ConditionId, Diagnosis};
use serde::Serialize;
use serde_json::Value;

/// Version stamped into every machine report.
pub const REPORT_FORMAT_VERSION: u32 = 1;

/// The fixed envelope around a command's body.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub format_version: u32,
    pub command: String,
    pub verdict: String,
    pub exit_code: i32,
    pub body: Value,
}

impl Report {
    pub fn new(command: &str, verdict: impl Into<String>, exit_code: i32, body: Value) -> Self {
        Report {
            format_version: REPORT_FORMAT_VERSION,
            command: command.to_string(),
            verdict: verdict.into(),
            exit_code,
            body,
        }
    }

    /// The machine form: pretty-printed JSON with a trailing newline.
    pub fn machine(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Serialize a body value; panics only on non-serializable types, which
/// the report structs rule out.
pub fn body<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("report bodies serialize")
}

/// The failure-mode name of each condition, the vocabulary diagnoses are
/// phrased in.
pub fn failure_mode(id: ConditionId) -> &'static str {
    match id {
        ConditionId::OntologicalClarity => "ontological ambiguity",
        ConditionId::RightsCompleteness => "rights incompleteness",
        ConditionId::DelegationFidelity => "delegation divergence",
        ConditionId::ExternalityInternalization => "autonomy externality",
        ConditionId::VerificationAdequacy => "verification bottleneck",
        ConditionId::PriceTaking => "price-making power",
        ConditionId::Regularity => "degenerate analysis data",
    }
}

/// One row of an aligned text table.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<const N: usize>(header: [&str; N]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<const N: usize>(&mut self, cells: [String; N]) {
        assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells.into_iter().collect());
    }

    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(String::len).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let mut push_row = |cells: &[String]| {
            let mut line = String::new();
            for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
                if i > 0 {
                    line.push_str("  ");
                }
                line.push_str(cell);
                if i + 1 < cells.len() {
                    for _ in cell.len()..*w {
                        line.push(' ');
                    }
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        };
        push_row(&self.header);
        for row in &self.rows {
            push_row(row);
        }
        out
    }
}

/// Text rendering of a diagnosis: one row per condition in their fixed
/// order, with margins and failure modes, then any findings indented
/// under the table.
pub fn diagnosis_text(d: &Diagnosis) -> String {
    let mut table = Table::new(["#", "condition", "verdict", "margin", "failure mode"]);
    for report in &d.conditions {
        table.row([
            report.id.ordinal().to_string(),
            report.id.as_str().to_string(),
            if report.holds { "pass" } else { "FAIL" }.to_string(),
            report.margin.map_or("-".to_string(), |m| format!("{m}")),
            if report.holds {
                "-".to_string()
            } else {
                failure_mode(report.id).to_string()
            },
        ]);
    }
    let mut out = table.render();
    for report in &d.conditions {
        for finding in &report.findings {
            out.push_str(&format!("  {}: {finding}\n", report.id));
        }
    }
    out
}

/// Machine body for a diagnosis: the per-condition reports with ordinals
/// and failure-mode names attached.
pub fn diagnosis_body(d: &Diagnosis) -> Value {
    #[derive(Serialize)]
    struct Row<'a> {
        ordinal: usize,
        id: ConditionId,
        holds: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        margin: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        failure_mode: Option<&'static str>,
        findings: &'a [String],
    }
    let rows: Vec<Row<'_>> = d
        .conditions
        .iter()
        .map(|r| Row {
            ordinal: r.id.ordinal(),
            id: r.id,
            holds: r.holds,
            margin: r.margin,
            failure_mode: (!r.holds).then(|| failure_mode(r.id)),
            findings: &r.findings,
        })
        .collect();
    serde_json::json!({ "state": d.state, "conditions": body(&rows) })
}
