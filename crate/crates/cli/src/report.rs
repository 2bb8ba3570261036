use std::fmt;

use serde::Serialize;

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 1;

/// One rejected input, tied to the parameter that caused it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    pub field: String,
    pub message: String,
}

impl Issue {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { experiment: None, field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Usage,
    Validation,
    Numeric,
    Io,
}

/// Failure of a whole run, rendered as a JSON report on stderr.
#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: Kind,
    pub exit_code: i32,
    pub issues: Vec<Issue>,
}

impl CliError {
    pub fn validation(issues: Vec<Issue>) -> Self {
        Self { kind: Kind::Validation, exit_code: EXIT_VALIDATION, issues }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self { kind: Kind::Usage, exit_code: EXIT_VALIDATION, issues: vec![Issue::new("", message)] }
    }

    pub fn io(context: impl Into<String>, err: &std::io::Error) -> Self {
        Self { kind: Kind::Io, exit_code: EXIT_IO, issues: vec![Issue::new(context, err.to_string())] }
    }

    /// Maps a core error raised while computing `context`.
    pub fn core(context: &str, err: collapse_core::Error) -> Self {
        let issue = Issue::new(context, err.to_string());
        if err.is_validation() {
            Self::validation(vec![issue])
        } else {
            Self { kind: Kind::Numeric, exit_code: EXIT_NUMERIC, issues: vec![issue] }
        }
    }

    pub fn in_experiment(mut self, name: &str) -> Self {
        for i in &mut self.issues {
            i.experiment.get_or_insert_with(|| name.to_string());
        }
        self
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            status: &'static str,
            #[serde(flatten)]
            error: &'a CliError,
        }
        serde_json::to_string_pretty(&Report { status: "error", error: self }).expect("report serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.issues {
            writeln!(f, "{}: {}", i.field, i.message)?;
        }
        Ok(())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Lifts a core result, attributing failures to `context`.
pub trait Context<T> {
    fn ctx(self, context: &str) -> CliResult<T>;
}

impl<T> Context<T> for collapse_core::Result<T> {
    fn ctx(self, context: &str) -> CliResult<T> {
        self.map_err(|e| CliError::core(context, e))
    }
}

/// Accumulates issues so every problem is reported in one pass.
#[derive(Debug, Default)]
pub struct Checks {
    pub issues: Vec<Issue>,
}

impl Checks {
    pub fn require(&mut self, ok: bool, field: &str, message: impl FnOnce() -> String) {
        if !ok {
            self.issues.push(Issue::new(field, message()));
        }
    }

    pub fn positive(&mut self, field: &str, v: f64) {
        self.require(v > 0.0 && v.is_finite(), field, || format!("must be positive and finite, got {v}"));
    }

    pub fn at_least(&mut self, field: &str, v: u64, min: u64) {
        self.require(v >= min, field, || format!("must be at least {min}, got {v}"));
    }

    pub fn core<T>(&mut self, field: &str, r: collapse_core::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.issues.push(Issue::new(field, e.to_string()));
                None
            }
        }
    }

    pub fn push(&mut self, field: &str, message: impl Into<String>) {
        self.issues.push(Issue::new(field, message));
    }

    pub fn finish(self) -> CliResult<()> {
        if self.issues.is_empty() {
            Ok(())
        } else {
            Err(CliError::validation(self.issues))
        }
    }
}
