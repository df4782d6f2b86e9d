//! Report assembly and rendering.
//!
//! JSON layout (`schema_version` 1):
//!
//! ```text
//! { "meta":    { schema_version, tool, version, seed, prng, fd, points_per_target,
//!                strategy, convention, orientation_rule, notes[] },
//!   "targets": [ { name, kind, dim, domain_lo, domain_hi, points } ],
//!   "checks":  [ { target, check, point_index, point, kind, value, tolerance, verdict, note } ],
//!   "summary": { total, pass, fail, inapplicable, by_check: { name: { pass, fail, inapplicable, worst } } } }
//! ```
//!
//! Records are sorted by target, check name and point index.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::chart::CONVENTION;
use crate::config::{Format, Strategy, SuiteConfig};
use crate::fd::FdSpec;
use crate::hypersurface::ORIENTATION_RULE;
use crate::suite::{CheckKind, CheckRecord, SuiteResult, TargetRecord, Verdict};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = "verify";
pub const PRNG: &str = "ChaCha8 (rand_chacha), seeded with seed_from_u64(seed); stream = FNV-1a 64 of the target name";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

pub const SCALED_SCHOUTEN_NOTE: &str =
    "eigenvalue_formulas: sectional curvature is checked against lambda_i + lambda_j (Schouten eigenvalues); \
the form (n-2)^-1 (lambda_i + lambda_j) disagrees with the Ricci-eigenvalue formula for n != 3, \
its residual is reported in each eigenvalue_formulas note";
pub const THETA_NOTE: &str =
    "bridging_identities: theta = X(x)Y + Y(x)X for an orthonormal pair, so g(R(theta), theta) = 2 sec(X, Y)";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub prng: &'static str,
    pub fd: FdSpec,
    pub points_per_target: usize,
    pub strategy: Strategy,
    pub convention: &'static str,
    pub orientation_rule: &'static str,
    pub notes: Vec<&'static str>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CheckSummary {
    pub pass: usize,
    pub fail: usize,
    pub inapplicable: usize,
    /// Largest `|value|` for equalities, smallest gap for inequalities.
    pub worst: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub inapplicable: usize,
    pub by_check: BTreeMap<String, CheckSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub meta: Meta,
    pub targets: Vec<TargetRecord>,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl CheckReport {
    pub fn new(cfg: &SuiteConfig, result: SuiteResult) -> Self {
        let summary = summarize(&result.records);
        CheckReport {
            meta: Meta {
                schema_version: SCHEMA_VERSION,
                tool: TOOL,
                version: env!("CARGO_PKG_VERSION"),
                seed: cfg.sampling.seed,
                prng: PRNG,
                fd: cfg.fd,
                points_per_target: cfg.sampling.points_per_target,
                strategy: cfg.sampling.strategy,
                convention: CONVENTION,
                orientation_rule: ORIENTATION_RULE,
                notes: vec![SCALED_SCHOUTEN_NOTE, THETA_NOTE],
            },
            targets: result.targets,
            checks: result.records,
            summary,
        }
    }

    /// Runs the suite and assembles the report.
    pub fn run(cfg: &SuiteConfig) -> crate::Result<Self> {
        Ok(Self::new(cfg, crate::suite::run_suite(cfg)?))
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|r| r.verdict == Verdict::Fail)
    }

    pub fn exit_code(&self) -> i32 {
        if self.summary.fail == 0 {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are finite");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let m = &self.meta;
        let _ = writeln!(out, "{} {} (schema {})", m.tool, m.version, m.schema_version);
        let _ = writeln!(
            out,
            "seed {}  points/target {}  step {}  field_step {}  richardson {}",
            m.seed, m.points_per_target, m.fd.step, m.fd.field_step, m.fd.richardson
        );
        let _ = writeln!(out, "convention: {}", m.convention);
        let _ = writeln!(out, "orientation: {}", m.orientation_rule);
        for n in &m.notes {
            let _ = writeln!(out, "note: {n}");
        }
        let _ = writeln!(out);

        let _ = writeln!(
            out,
            "{:<34} {:<26} {:>6} {:>6} {:>6} {:>12}",
            "target", "check", "pass", "fail", "n/a", "worst"
        );
        let mut groups: BTreeMap<(&str, &str), CheckSummary> = BTreeMap::new();
        for r in &self.checks {
            tally(groups.entry((r.target.as_str(), r.check.name())).or_default(), r);
        }
        for ((target, check), s) in &groups {
            let worst = s.worst.map_or("-".to_string(), |w| format!("{w:.3e}"));
            let _ = writeln!(
                out,
                "{:<34} {:<26} {:>6} {:>6} {:>6} {:>12}",
                target, check, s.pass, s.fail, s.inapplicable, worst
            );
        }

        let failures: Vec<_> = self.failures().collect();
        if !failures.is_empty() {
            let _ = writeln!(out, "\nfailures:");
            for r in failures {
                let value = r.value.map_or("-".to_string(), |v| format!("{v:.6e}"));
                let _ = writeln!(
                    out,
                    "  {} {} #{} at {:?}: value {} tolerance {:e} {}",
                    r.target, r.check, r.point_index, r.point, value, r.tolerance, r.note
                );
            }
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "\ntotal {}  pass {}  fail {}  inapplicable {}",
            s.total, s.pass, s.fail, s.inapplicable
        );
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Text => self.to_text(),
        }
    }
}

fn tally(s: &mut CheckSummary, r: &CheckRecord) {
    match r.verdict {
        Verdict::Pass => s.pass += 1,
        Verdict::Fail => s.fail += 1,
        Verdict::Inapplicable => s.inapplicable += 1,
    }
    if let Some(v) = r.value {
        s.worst = Some(match (s.worst, r.kind) {
            (None, CheckKind::Equality) => v.abs(),
            (None, CheckKind::Inequality) => v,
            (Some(w), CheckKind::Equality) => w.max(v.abs()),
            (Some(w), CheckKind::Inequality) => w.min(v),
        });
    }
}

pub fn summarize(records: &[CheckRecord]) -> Summary {
    let mut s = Summary {
        total: records.len(),
        ..Summary::default()
    };
    for r in records {
        match r.verdict {
            Verdict::Pass => s.pass += 1,
            Verdict::Fail => s.fail += 1,
            Verdict::Inapplicable => s.inapplicable += 1,
        }
        tally(s.by_check.entry(r.check.name().to_string()).or_default(), r);
    }
    s
}
