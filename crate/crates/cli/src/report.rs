use std::fmt::Write as _;

use indexmap::IndexMap;
use jlm_core::JlmError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// A check ran and did not pass.
    Fail,
    Error,
}

/// One command's outcome. The JSON form is the stable machine interface.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub model: String,
    pub status: Status,
    pub expressions: IndexMap<String, String>,
    pub residuals: IndexMap<String, String>,
    pub constraints: Vec<String>,
    pub metrics: IndexMap<String, f64>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub exit_code: i32,
}

impl Report {
    pub fn new(command: &str, model: &str) -> Self {
        Report {
            command: command.to_string(),
            model: model.to_string(),
            status: Status::Ok,
            expressions: IndexMap::new(),
            residuals: IndexMap::new(),
            constraints: Vec::new(),
            metrics: IndexMap::new(),
            notes: Vec::new(),
            error: None,
            exit_code: 0,
        }
    }

    pub fn failed(command: &str, model: &str, err: &JlmError) -> Self {
        Report {
            status: Status::Error,
            error: Some(err.to_string()),
            exit_code: err.exit_code(),
            ..Report::new(command, model)
        }
    }

    pub fn expr(&mut self, key: impl Into<String>, value: impl ToString) {
        self.expressions.insert(key.into(), value.to_string());
    }

    pub fn residual(&mut self, key: impl Into<String>, value: impl ToString) {
        self.residuals.insert(key.into(), value.to_string());
    }

    pub fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Mark a failed comparison or check.
    pub fn fail(&mut self) {
        if self.status == Status::Ok {
            self.status = Status::Fail;
            self.exit_code = 3;
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let status = match self.status {
            Status::Ok => "ok",
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
        };
        let _ = writeln!(out, "{} [{}]: {status}", self.command, self.model);
        for (k, v) in &self.expressions {
            let _ = writeln!(out, "  {k} = {v}");
        }
        for (k, v) in &self.residuals {
            let _ = writeln!(out, "  residual {k}: {v}");
        }
        for c in &self.constraints {
            let _ = writeln!(out, "  constraint: {c}");
        }
        for (k, v) in &self.metrics {
            if v.fract() == 0.0 && v.abs() < 1e12 {
                let _ = writeln!(out, "  {k}: {v}");
            } else {
                let _ = writeln!(out, "  {k}: {v:e}");
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        if let Some(e) = &self.error {
            let _ = writeln!(out, "  error: {e}");
        }
        out
    }
}
