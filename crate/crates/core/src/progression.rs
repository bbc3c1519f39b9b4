//! Time series of graph-level statistics.
//!
//! One row per checkpoint: raw counts plus three derived ratios (edge
//! density, largest-component density, largest-component fraction). Counts
//! are stored and ratios computed on demand, so the ratios are always the
//! exact quotients of the stated integers. Densification is the first
//! checkpoint where the largest component has strictly more edges than
//! nodes, evaluated with the integer comparison rather than the float ratio.

use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressionRow {
    pub t: u64,
    pub nodes: u64,
    pub edges: u64,
    pub trees: u64,
    pub lcc_nodes: u64,
    pub lcc_edges: u64,
}

impl ProgressionRow {
    /// |E| / |V|.
    pub fn edge_density(&self) -> f64 {
        self.edges as f64 / self.nodes as f64
    }

    /// |E_LCC| / |V_LCC|.
    pub fn lcc_density(&self) -> f64 {
        self.lcc_edges as f64 / self.lcc_nodes as f64
    }

    /// |V_LCC| / |V|.
    pub fn lcc_fraction(&self) -> f64 {
        self.lcc_nodes as f64 / self.nodes as f64
    }
}

/// Checkpoint rows in increasing step order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progression {
    rows: Vec<ProgressionRow>,
}

impl Progression {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> &[ProgressionRow] {
        &self.rows
    }

    pub fn last(&self) -> Option<&ProgressionRow> {
        self.rows.last()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: ProgressionRow) {
        if let Some(prev) = self.rows.last() {
            assert!(prev.t < row.t, "checkpoint steps must increase");
        }
        self.rows.push(row);
    }

    /// First checkpoint step at which the largest component is denser than a
    /// tree, i.e. has strictly more edges than nodes.
    pub fn densification_time(&self) -> Option<u64> {
        self.rows
            .iter()
            .find(|r| r.lcc_edges > r.lcc_nodes)
            .map(|r| r.t)
    }

    /// Writes the fixed CSV schema; ratios with six decimals.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,V,E,T,V_lcc,E_lcc,edge_density,lcc_density,lcc_fraction")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{:.6},{:.6},{:.6}",
                r.t,
                r.nodes,
                r.edges,
                r.trees,
                r.lcc_nodes,
                r.lcc_edges,
                r.edge_density(),
                r.lcc_density(),
                r.lcc_fraction()
            )?;
        }
        Ok(())
    }
}

/// Checkpoint cadence: record every k-th step (and step 0). The recorder
/// itself never sees rows out of order because the state applies events
/// sequentially.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Checkpoints {
    /// Record rows where t is a multiple of k, plus the final row.
    Every(u64),
    /// Record nothing until the final row.
    FinalOnly,
}

impl Checkpoints {
    pub fn every(k: u64) -> Self {
        assert!(k >= 1, "checkpoint interval must be at least 1");
        Checkpoints::Every(k)
    }

    pub fn wants(&self, t: u64) -> bool {
        match self {
            Checkpoints::Every(k) => t.is_multiple_of(*k),
            Checkpoints::FinalOnly => false,
        }
    }
}
