//! Run reports. The structured JSON document is the canonical form; the text
//! table is rendered from that same document.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskReport {
    pub name: String,
    pub kind: String,
    pub status: Status,
    pub value: Value,
    /// Largest deviation that decided the status, when one exists.
    pub deviation: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: Option<String>,
    pub elapsed_ms: f64,
}

impl TaskReport {
    pub fn to_json(&self, timing: bool) -> Value {
        let mut v = json!({
            "name": self.name,
            "kind": self.kind,
            "status": self.status,
            "value": self.value,
            "deviation": self.deviation.filter(|d| d.is_finite()),
            "tolerance": self.tolerance,
            "detail": self.detail,
        });
        if timing {
            v["elapsed_ms"] = json!(self.elapsed_ms);
        }
        v
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub tasks: Vec<TaskReport>,
}

impl Report {
    fn count(&self, s: Status) -> usize {
        self.tasks.iter().filter(|t| t.status == s).count()
    }

    pub fn passed(&self) -> usize {
        self.count(Status::Pass)
    }

    pub fn failed(&self) -> usize {
        self.count(Status::Fail)
    }

    pub fn errors(&self) -> usize {
        self.count(Status::Error)
    }

    /// 0 when every task passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.passed() != self.tasks.len())
    }

    /// The report document. With `timing = false` the output depends only on the
    /// scenario, which is what determinism checks compare.
    pub fn to_json(&self, timing: bool) -> Value {
        json!({
            "summary": {
                "tasks": self.tasks.len(),
                "passed": self.passed(),
                "failed": self.failed(),
                "errors": self.errors(),
                "exit_status": self.exit_code(),
            },
            "tasks": self.tasks.iter().map(|t| t.to_json(timing)).collect::<Vec<_>>(),
        })
    }

    pub fn render(&self, format: Format) -> String {
        let doc = self.to_json(true);
        match format {
            Format::Structured => serde_json::to_string_pretty(&doc).expect("report serializes") + "\n",
            Format::Text => render_text(&doc),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Structured,
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x:.3e}"),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

fn render_text(doc: &Value) -> String {
    let header = ["task", "kind", "status", "deviation", "ms", "detail"];
    let fields = ["name", "kind", "status", "deviation", "elapsed_ms", "detail"];
    let rows: Vec<Vec<String>> = doc["tasks"]
        .as_array()
        .map(|ts| {
            ts.iter()
                .map(|t| {
                    fields
                        .iter()
                        .map(|f| match *f {
                            "elapsed_ms" => t[f].as_f64().map_or("-".into(), |x| format!("{x:.1}")),
                            _ => cell(&t[f]),
                        })
                        .collect()
                })
                .collect()
        })
        .unwrap_or_default();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r).take(header.len() - 1) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let last = cells.len() - 1;
        for (i, c) in cells.iter().enumerate() {
            if i == last {
                let _ = write!(out, "{c}");
            } else {
                let _ = write!(out, "{c:<w$}  ", w = widths[i]);
            }
        }
        out.push('\n');
    };
    line(&mut out, &header.map(String::from));
    for r in &rows {
        line(&mut out, r);
    }
    let s = &doc["summary"];
    let _ =
        writeln!(out, "\n{} tasks: {} passed, {} failed, {} errors", s["tasks"], s["passed"], s["failed"], s["errors"]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(name: &str, status: Status, deviation: Option<f64>) -> TaskReport {
        TaskReport {
            name: name.into(),
            kind: "validate".into(),
            status,
            value: json!(true),
            deviation,
            tolerance: None,
            detail: None,
            elapsed_ms: 1.25,
        }
    }

    #[test]
    fn exit_code_and_counts() {
        let mut r = Report { tasks: vec![task("a", Status::Pass, None), task("b", Status::Pass, Some(0.0))] };
        assert_eq!(r.exit_code(), 0);
        r.tasks.push(task("c", Status::Error, None));
        assert_eq!((r.passed(), r.failed(), r.errors(), r.exit_code()), (2, 0, 1, 1));
    }

    #[test]
    fn infinite_deviation_serializes_as_null() {
        let r = Report { tasks: vec![task("a", Status::Fail, Some(f64::INFINITY))] };
        assert_eq!(r.to_json(false)["tasks"][0]["deviation"], Value::Null);
        assert!(r.to_json(false)["tasks"][0].get("elapsed_ms").is_none());
    }

    #[test]
    fn text_table_lists_every_task() {
        let r = Report { tasks: vec![task("first", Status::Pass, Some(2e-12)), task("second", Status::Fail, None)] };
        let text = r.render(Format::Text);
        assert!(text.contains("first") && text.contains("2.000e-12"));
        assert!(text.contains("second") && text.contains("fail"));
        assert!(text.contains("2 tasks: 1 passed, 1 failed, 0 errors"));
    }
}
