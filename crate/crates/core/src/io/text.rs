//! Aligned-text rendering of reports for human consumption; the JSON side of
//! every report is handled by serde in [`super`].

use std::fmt::Write as _;

use crate::harnack::{
    ChainCheckRow, DiffHarnackReport, HarnackReport, RecursionReport, StepHarnackReport,
    ThresholdTable,
};
use crate::jko::ConvergenceRow;

use super::TrajectoryManifest;

/// A right-aligned plain-text table.
pub struct TextTable {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl TextTable {
    pub fn new<I, S>(headers: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row; short rows are padded with empty cells.
    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut row: Vec<String> = cells.into_iter().map(Into::into).collect();
        row.resize(self.headers.len(), String::new());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(String::len).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let write_row = |out: &mut String, cells: &[String]| {
            for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
                if i > 0 {
                    out.push_str("  ");
                }
                let _ = write!(out, "{cell:>w$}");
            }
            out.push('\n');
        };
        write_row(&mut out, &self.headers);
        let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len().saturating_sub(1));
        out.push_str(&"-".repeat(total));
        out.push('\n');
        for row in &self.rows {
            write_row(&mut out, row);
        }
        out
    }
}

/// Reports that can render themselves as an aligned-text table.
pub trait TextReport {
    fn text_table(&self) -> String;
}

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

fn flag(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Rows beyond this are elided from text output (JSON keeps everything).
const MAX_TEXT_ROWS: usize = 24;

fn elision_note(shown: usize, total: usize) -> String {
    if total > shown {
        format!("({} of {} rows shown)\n", shown, total)
    } else {
        String::new()
    }
}

impl TextReport for DiffHarnackReport {
    fn text_table(&self) -> String {
        let mut table = TextTable::new(["k", "t", "a_k", "bound", "slack"]);
        for row in self.rows.iter().take(MAX_TEXT_ROWS) {
            table.row([
                row.k.to_string(),
                sci(row.t),
                sci(row.a_k),
                sci(row.bound),
                sci(row.slack),
            ]);
        }
        let feasible = match self.smallest_feasible_c {
            Some(c) => format!("{c:.4}"),
            None => "none".into(),
        };
        format!(
            "Hessian lower bound a_k >= -C/(tau(k+1)), C = {}\n{}{}pass: {}  smallest feasible C: {}\n",
            self.c,
            table.render(),
            elision_note(self.rows.len().min(MAX_TEXT_ROWS), self.rows.len()),
            flag(self.pass),
            feasible,
        )
    }
}

impl TextReport for RecursionReport {
    fn text_table(&self) -> String {
        let mut table = TextTable::new(["k", "a_prev", "a_k", "lhs", "rhs", "ok"]);
        for row in self.rows.iter().take(MAX_TEXT_ROWS) {
            table.row([
                row.k.to_string(),
                sci(row.a_prev),
                sci(row.a_k),
                row.lhs.map(sci).unwrap_or_else(|| "skip".into()),
                sci(row.rhs),
                flag(row.satisfied).into(),
            ]);
        }
        format!(
            "One-step eigenvalue recursion\n{}{}pass: {}  skipped: {}\n",
            table.render(),
            elision_note(self.rows.len().min(MAX_TEXT_ROWS), self.rows.len()),
            flag(self.pass),
            self.skipped_count,
        )
    }
}

impl TextReport for ThresholdTable {
    fn text_table(&self) -> String {
        let mut table = TextTable::new(["k", "lhs", "rhs", "holds", "reached", "agree"]);
        for row in self.rows.iter().take(MAX_TEXT_ROWS) {
            table.row([
                row.k.to_string(),
                sci(row.lhs),
                sci(row.rhs),
                flag(row.inequality_holds).into(),
                flag(row.threshold_reached).into(),
                flag(row.agree).into(),
            ]);
        }
        format!(
            "Scalar threshold equivalence, C = {}, threshold (1-C)^2/(2C-1) = {:.4}\n{}{}all agree: {}\n",
            self.c,
            self.threshold,
            table.render(),
            elision_note(self.rows.len().min(MAX_TEXT_ROWS), self.rows.len()),
            flag(self.all_agree),
        )
    }
}

impl TextReport for StepHarnackReport {
    fn text_table(&self) -> String {
        let mut table = TextTable::new(["x", "y", "lhs", "rhs", "ratio", "ok"]);
        let mut shown = 0;
        for v in self.verdicts.iter().filter(|v| !v.pass).take(MAX_TEXT_ROWS) {
            table.row([
                v.x_node.to_string(),
                v.y_node.to_string(),
                sci(v.lhs),
                sci(v.rhs),
                sci(v.ratio),
                flag(v.pass).into(),
            ]);
            shown += 1;
        }
        let body = if shown == 0 {
            String::new()
        } else {
            table.render()
        };
        format!(
            "One-step Harnack bound, k = {}, tau = {}, C = {}\n{}pairs: {}  worst ratio: {}  pass: {}\n",
            self.k,
            self.tau,
            self.c,
            body,
            self.pairs_checked,
            sci(self.worst_ratio),
            flag(self.pass),
        )
    }
}

impl TextReport for HarnackReport {
    fn text_table(&self) -> String {
        let mut table = TextTable::new(["x", "y", "t1", "t2", "lhs", "rhs", "ratio", "ok"]);
        for t in self.recorded.iter().take(MAX_TEXT_ROWS) {
            table.row([
                t.x_node.to_string(),
                t.y_node.to_string(),
                sci(t.t1),
                sci(t.t2),
                sci(t.lhs),
                sci(t.rhs),
                sci(t.ratio),
                flag(t.pass).into(),
            ]);
        }
        format!(
            "Two-time Harnack bound (tightest tuples first)\n{}{}tuples: {}  failures: {}  worst ratio: {}  pass: {}\n",
            table.render(),
            elision_note(self.recorded.len().min(MAX_TEXT_ROWS), self.recorded.len()),
            self.tuples_checked,
            self.failures,
            sci(self.worst_ratio),
            flag(self.pass),
        )
    }
}

impl TextReport for [ChainCheckRow] {
    fn text_table(&self) -> String {
        // Show the rows with the least margin first.
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self[b]
                .worst_leg_ratio
                .total_cmp(&self[a].worst_leg_ratio)
                .then(a.cmp(&b))
        });
        let mut table =
            TextTable::new(["k1", "k2", "x", "y", "lhs", "chained", "final", "worst leg", "ok"]);
        for &i in order.iter().take(MAX_TEXT_ROWS) {
            let row = &self[i];
            table.row([
                row.k1.to_string(),
                row.k2.to_string(),
                row.x_node.to_string(),
                row.y_node.to_string(),
                sci(row.lhs),
                sci(row.chained_rhs),
                sci(row.final_rhs),
                sci(row.worst_leg_ratio),
                flag(row.pass).into(),
            ]);
        }
        let failures = self.iter().filter(|r| !r.pass).count();
        format!(
            "Chained one-step bounds vs direct two-time bound\n{}{}rows: {}  failures: {}\n",
            table.render(),
            elision_note(self.len().min(MAX_TEXT_ROWS), self.len()),
            self.len(),
            failures,
        )
    }
}

impl TextReport for [ConvergenceRow] {
    fn text_table(&self) -> String {
        let mut table = TextTable::new(["N", "tau", "l1_gap", "linf_gap", "runtime_ms"]);
        for row in self {
            table.row([
                row.n_steps.to_string(),
                sci(row.tau),
                sci(row.l1_gap),
                sci(row.linf_gap),
                format!("{:.1}", row.runtime_ms),
            ]);
        }
        format!("Endpoint gaps against the spectral heat solution\n{}", table.render())
    }
}

impl TextReport for TrajectoryManifest {
    fn text_table(&self) -> String {
        let mut table = TextTable::new([
            "k",
            "entropy",
            "objective",
            "descent",
            "ma_max",
            "opt_max",
            "transfer_max",
        ]);
        for k in 0..self.n_steps.min(MAX_TEXT_ROWS) {
            table.row([
                (k + 1).to_string(),
                sci(self.entropies[k]),
                sci(self.objectives[k]),
                sci(self.descent_residuals[k]),
                sci(self.ma_residual_max[k]),
                sci(self.optimality_residual_max[k]),
                sci(self.hessian_transfer_residual_max[k]),
            ]);
        }
        format!(
            "Trajectory: n = {}, M = {}, K = {}, N = {}, tau = {}\n{}{}",
            self.dim,
            self.points_per_dim,
            self.horizon,
            self.n_steps,
            self.tau,
            table.render(),
            elision_note(self.n_steps.min(MAX_TEXT_ROWS), self.n_steps),
        )
    }
}
