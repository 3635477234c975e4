use serde::Serialize;

/// One measured quantity against its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    /// Passes when `measured` is finite and at most `tolerance`.
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self { name: name.into(), measured, tolerance, passed: measured.is_finite() && measured <= tolerance, note: None }
    }

    /// Passes when `measured` is finite and strictly above `tolerance`.
    pub fn above(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self { name: name.into(), measured, tolerance, passed: measured.is_finite() && measured > tolerance, note: None }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub model: String,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn new(model: impl Into<String>) -> Self {
        Self { model: model.into(), checks: Vec::new() }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_semantics() {
        assert!(Check::at_most("a", 1e-6, 1e-5).passed);
        assert!(!Check::at_most("a", f64::NAN, 1e-5).passed);
        assert!(!Check::above("b", 0.001, 0.005).passed);
        let mut r = VerifyReport::new("m");
        r.push(Check::at_most("a", 1.0, 2.0));
        assert!(r.passed());
        r.push(Check::at_most("c", 3.0, 2.0));
        assert_eq!(r.failures().count(), 1);
    }
}
