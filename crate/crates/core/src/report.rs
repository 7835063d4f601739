//! Machine-readable verification reports.
//!
//! Two row shapes exist: the generic per-check row written by every suite
//! (`check, mu, sample_id, value, bound, pass`) and the stability row with
//! the iteration diagnostics (`sample_id, x_norm, residual, bound_app,
//! bound_phitilde, n_used, certified, pass`).
//!
//! CSV output uses '.' decimals, 17 significant digits, and LF line endings
//! so that identical runs produce byte-identical files.

use serde::Serialize;

use crate::scalar::Scalar;

/// Format a float with 17 significant digits, locale-independent.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Format a scalar for the `mu` report column.
pub fn fmt_scalar(s: Scalar) -> String {
    format!(
        "{}{}{}i",
        fmt_f64(s.re),
        if s.im < 0.0 { "" } else { "+" },
        fmt_f64(s.im)
    )
}

/// One verification check on one sample.
#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub mu: String,
    pub sample_id: u64,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

/// An ordered collection of check rows.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub rows: Vec<CheckRow>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, check: &str, sample_id: u64, value: f64, bound: f64) {
        self.rows.push(CheckRow {
            check: check.to_string(),
            mu: String::new(),
            sample_id,
            value,
            bound,
            pass: value <= bound,
        });
    }

    pub fn push_with_mu(
        &mut self,
        check: &str,
        mu: Scalar,
        sample_id: u64,
        value: f64,
        bound: f64,
    ) {
        self.rows.push(CheckRow {
            check: check.to_string(),
            mu: fmt_scalar(mu),
            sample_id,
            value,
            bound,
            pass: value <= bound,
        });
    }

    pub fn extend(&mut self, other: Report) {
        self.rows.extend(other.rows);
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count()
    }

    /// Largest recorded value among rows whose check name starts with `prefix`.
    pub fn max_value(&self, prefix: &str) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.check.starts_with(prefix))
            .map(|r| r.value)
            .fold(0.0, f64::max)
    }

    /// Stable order: by check name, then sample id, then mu.
    pub fn sort_rows(&mut self) {
        self.rows
            .sort_by(|a, b| (&a.check, a.sample_id, &a.mu).cmp(&(&b.check, b.sample_id, &b.mu)));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,mu,sample_id,value,bound,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.check,
                r.mu,
                r.sample_id,
                fmt_f64(r.value),
                fmt_f64(r.bound),
                r.pass
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("report rows always serialize")
    }

    /// Per-check aggregation: `(check, passed, total)` in name order.
    pub fn summary(&self) -> Vec<(String, usize, usize)> {
        let mut names: Vec<&str> = self.rows.iter().map(|r| r.check.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        names
            .into_iter()
            .map(|name| {
                let total = self.rows.iter().filter(|r| r.check == name).count();
                let passed = self
                    .rows
                    .iter()
                    .filter(|r| r.check == name && r.pass)
                    .count();
                (name.to_string(), passed, total)
            })
            .collect()
    }
}

/// Stability verification row with iteration diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityRow {
    pub sample_id: u64,
    pub x_norm: f64,
    pub residual: f64,
    pub bound_app: f64,
    pub bound_phitilde: f64,
    pub n_used: u32,
    pub certified: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
}

impl StabilityReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "sample_id,x_norm,residual,bound_app,bound_phitilde,n_used,certified,pass\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.sample_id,
                fmt_f64(r.x_norm),
                fmt_f64(r.residual),
                fmt_f64(r.bound_app),
                fmt_f64(r.bound_phitilde),
                r.n_used,
                r.certified,
                r.pass
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("stability rows always serialize")
    }

    /// Fold into generic check rows for the combined suite report.
    pub fn to_check_rows(&self, check: &str) -> Report {
        let mut report = Report::new();
        for r in &self.rows {
            report.rows.push(CheckRow {
                check: check.to_string(),
                mu: String::new(),
                sample_id: r.sample_id,
                value: r.residual,
                bound: r.bound_app,
                pass: r.pass,
            });
        }
        report
    }
}
