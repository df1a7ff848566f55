use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

/// Display names for `k` classes: the three maturity stages when `k == 3`,
/// `Class 1..k` otherwise.
pub fn class_names(k: usize) -> Vec<String> {
    if k == 3 {
        ["Unripe", "Intermediate", "Ripe"].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=k).map(|i| format!("Class {i}")).collect()
    }
}

/// K×K counts of (reference, target) label pairs plus the row-normalized
/// percentages. Rows without any pair stay all zero and are flagged in
/// `empty_rows`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
    pub normalized: Vec<Vec<f64>>,
    pub empty_rows: Vec<bool>,
}

impl ConfusionMatrix {
    /// Builds the matrix from 1-based (reference, target) label pairs.
    pub fn from_pairs(k: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("confusion matrix needs at least one class"));
        }
        let mut counts = vec![vec![0u64; k]; k];
        for (r, c) in pairs {
            if r == 0 || r > k || c == 0 || c > k {
                return Err(Error::domain(format!("label pair ({r}, {c}) outside 1..={k}")));
            }
            counts[r - 1][c - 1] += 1;
        }
        Ok(Self::from_counts(counts))
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Self {
        let mut normalized = Vec::with_capacity(counts.len());
        let mut empty_rows = Vec::with_capacity(counts.len());
        for row in &counts {
            let total: u64 = row.iter().sum();
            empty_rows.push(total == 0);
            normalized.push(
                row.iter()
                    .map(|&c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 })
                    .collect(),
            );
        }
        ConfusionMatrix { counts, normalized, empty_rows }
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Diagonal percentage for 1-based class `k`.
    pub fn diagonal(&self, k: usize) -> f64 {
        self.normalized[k - 1][k - 1]
    }

    /// Number of pairs whose labels differ by more than one class.
    pub fn non_adjacent_count(&self) -> u64 {
        let mut n = 0;
        for (r, row) in self.counts.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if r.abs_diff(c) > 1 {
                    n += v;
                }
            }
        }
        n
    }

    /// Aligned text table: rows are the reference source, columns the
    /// target, values in percent.
    pub fn to_table(&self, reference: &str, target: &str) -> String {
        let names = class_names(self.num_classes());
        let label_w = names.iter().map(|n| n.len()).max().unwrap_or(0).max(reference.len()) + 2;
        let col_w = names.iter().map(|n| n.len()).max().unwrap_or(0).max(7) + 2;
        let mut out = String::new();
        let _ = writeln!(out, "{reference} (rows) vs {target} (columns), %");
        let _ = write!(out, "{:<label_w$}", "");
        for n in &names {
            let _ = write!(out, "{n:>col_w$}");
        }
        out.push('\n');
        for (i, row) in self.normalized.iter().enumerate() {
            let _ = write!(out, "{:<label_w$}", names[i]);
            for v in row {
                let _ = write!(out, "{:>col_w$}", format!("{v:.1}"));
            }
            if self.empty_rows[i] {
                out.push_str("  (no pairs)");
            }
            out.push('\n');
        }
        out
    }

    /// CSV with one row per reference class: counts then percentages.
    pub fn to_csv(&self) -> String {
        let names = class_names(self.num_classes());
        let mut out = String::from("reference");
        for n in &names {
            let _ = write!(out, ",count_{n}");
        }
        for n in &names {
            let _ = write!(out, ",pct_{n}");
        }
        out.push_str(",empty\n");
        for (i, n) in names.iter().enumerate() {
            out.push_str(n);
            for c in &self.counts[i] {
                let _ = write!(out, ",{c}");
            }
            for v in &self.normalized[i] {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{}", self.empty_rows[i]);
        }
        out
    }
}
