//! Machine-readable verification reports.
//!
//! A report names the command that produced it, carries a digest of every
//! input it consumed, and records one entry per check with both sides of the
//! comparison, their difference, and the tolerance that was applied. Reports
//! serialize through the canonical JSON writer, so identical inputs yield
//! byte-identical reports. Wall time is optional precisely because it would
//! break that determinism; callers opt in when they want timings.

use sha2::{Digest, Sha256};

use crate::io::Json;

/// Hex digest used to pin report provenance to exact input bytes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// One verified comparison. `pass` is always `diff <= tolerance`; a NaN
/// difference therefore fails.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Two-sided comparison: `|lhs - rhs| <= tolerance`. Bitwise-equal
    /// values, including equal infinities, count as zero difference.
    pub fn compare(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Check {
        let diff = if lhs == rhs { 0.0 } else { (lhs - rhs).abs() };
        Check::from_diff(name, lhs, rhs, diff, tolerance)
    }

    /// One-sided comparison: `value >= bound - tolerance`. The recorded
    /// difference is the shortfall, clamped at zero when the bound holds.
    pub fn lower_bound(name: impl Into<String>, value: f64, bound: f64, tolerance: f64) -> Check {
        let diff = if value >= bound { 0.0 } else { bound - value };
        Check::from_diff(name, value, bound, diff, tolerance)
    }

    /// Boolean predicate recorded as a 0/1 comparison with zero tolerance.
    pub fn flag(name: impl Into<String>, pass: bool) -> Check {
        Check::compare(name, if pass { 1.0 } else { 0.0 }, 1.0, 0.0)
    }

    fn from_diff(name: impl Into<String>, lhs: f64, rhs: f64, diff: f64, tolerance: f64) -> Check {
        Check { name: name.into(), lhs, rhs, diff, tolerance, pass: diff <= tolerance }
    }

    fn to_json(&self) -> Json {
        Json::Obj(vec![
            ("name".into(), Json::Str(self.name.clone())),
            ("lhs".into(), Json::Num(self.lhs)),
            ("rhs".into(), Json::Num(self.rhs)),
            ("diff".into(), Json::Num(self.diff)),
            ("tolerance".into(), Json::Num(self.tolerance)),
            ("pass".into(), Json::Bool(self.pass)),
        ])
    }
}

/// The report emitted by every batch command.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    command: String,
    inputs: Vec<(String, String)>,
    checks: Vec<Check>,
    wall_time_seconds: Option<f64>,
}

impl RunReport {
    pub fn new(command: impl Into<String>) -> RunReport {
        RunReport { command: command.into(), ..RunReport::default() }
    }

    /// Records an input under a sha256 digest of its exact bytes.
    pub fn record_input(&mut self, name: impl Into<String>, bytes: &[u8]) {
        self.inputs.push((name.into(), sha256_hex(bytes)));
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        self.checks.extend(checks);
    }

    /// Opt-in timing; omitted from emission when unset to keep reports
    /// byte-deterministic.
    pub fn set_wall_time(&mut self, seconds: f64) {
        self.wall_time_seconds = Some(seconds);
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    /// True when every recorded check passed. An empty report passes.
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Json {
        let inputs = self
            .inputs
            .iter()
            .map(|(name, digest)| {
                Json::Obj(vec![
                    ("name".into(), Json::Str(name.clone())),
                    ("sha256".into(), Json::Str(digest.clone())),
                ])
            })
            .collect();
        let mut fields = vec![
            ("command".into(), Json::Str(self.command.clone())),
            ("inputs".into(), Json::Arr(inputs)),
            ("checks".into(), Json::Arr(self.checks.iter().map(Check::to_json).collect())),
            ("pass".into(), Json::Bool(self.pass())),
        ];
        if let Some(seconds) = self.wall_time_seconds {
            fields.push(("wall_time_seconds".into(), Json::Num(seconds)));
        }
        Json::Obj(fields)
    }

    pub fn to_canonical_string(&self) -> String {
        self.to_json().to_canonical_string()
    }
}
