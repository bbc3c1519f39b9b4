//! Moment estimators for the growth parameters.
//!
//! From observable counts at time t:
//!
//! - lambda_hat = |T_t| / |E_t|   (trees per edge),
//! - p_hat = (|V_t| - |T_t| - 1) / |E_t|.
//!
//! Both are undefined while the graph has no edges. p_hat can land outside
//! [0, 1] on real data (and early in runs, where |V| - |T| - 1 can be
//! negative); the raw value is reported along with a range flag rather than
//! clamped. The superstar weight q does not appear in any of the tracked
//! counts, so it is not estimable this way and callers pick it directly.

use crate::progression::{Progression, ProgressionRow};
use std::io::Write;

/// lambda_hat at one point in time; None while the graph has no edges.
pub fn estimate_lambda(trees: u64, edges: u64) -> Option<f64> {
    if edges == 0 {
        return None;
    }
    Some(trees as f64 / edges as f64)
}

/// p_hat with its range flag; None while the graph has no edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PEstimate {
    pub value: f64,
    pub in_unit_interval: bool,
}

pub fn estimate_p(nodes: u64, trees: u64, edges: u64) -> Option<PEstimate> {
    if edges == 0 {
        return None;
    }
    let value = (nodes as f64 - trees as f64 - 1.0) / edges as f64;
    Some(PEstimate {
        value,
        in_unit_interval: (0.0..=1.0).contains(&value),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRow {
    pub t: u64,
    pub lambda_hat: Option<f64>,
    pub p_hat: Option<PEstimate>,
}

impl EstimateRow {
    pub fn from_progression_row(row: &ProgressionRow) -> Self {
        Self {
            t: row.t,
            lambda_hat: estimate_lambda(row.trees, row.edges),
            p_hat: estimate_p(row.nodes, row.trees, row.edges),
        }
    }

    pub fn defined(&self) -> bool {
        self.lambda_hat.is_some() && self.p_hat.is_some()
    }
}

/// Estimates at every checkpoint of a progression.
pub fn estimate_series(progression: &Progression) -> Vec<EstimateRow> {
    progression
        .rows()
        .iter()
        .map(EstimateRow::from_progression_row)
        .collect()
}

/// CSV export: `t,lambda_hat,p_hat,defined` with empty value fields while
/// the estimates are undefined.
pub fn write_estimates_csv<W: Write>(rows: &[EstimateRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,lambda_hat,p_hat,defined")?;
    for r in rows {
        match (r.lambda_hat, r.p_hat) {
            (Some(l), Some(p)) => {
                writeln!(w, "{},{:.6},{:.6},true", r.t, l, p.value)?;
            }
            _ => writeln!(w, "{},,,false", r.t)?,
        }
    }
    Ok(())
}
