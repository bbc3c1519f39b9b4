//! Output-file plumbing: tracked creation with cleanup on failure, plus the
//! serializable summaries the subcommands write.

use anyhow::{Context, Result};
use retweet_graph::experiments::{ReplayReport, RunMetrics, SummaryStat};
use serde::Serialize;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Tracks files created during a command so that a failure part-way through
/// leaves no partial outputs behind. Call [`OutputGuard::defuse`] once every
/// artifact is complete.
pub struct OutputGuard {
    files: Vec<PathBuf>,
    created_dir: Option<PathBuf>,
    defused: bool,
}

impl OutputGuard {
    pub fn new() -> Self {
        Self {
            files: Vec::new(),
            created_dir: None,
            defused: false,
        }
    }

    /// Creates the output directory if needed, remembering whether it was
    /// fresh so cleanup can remove it again.
    pub fn ensure_dir(&mut self, dir: &Path) -> Result<()> {
        if !dir.exists() {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating output directory {}", dir.display()))?;
            self.created_dir = Some(dir.to_path_buf());
        } else if !dir.is_dir() {
            anyhow::bail!("output path {} exists and is not a directory", dir.display());
        }
        Ok(())
    }

    pub fn create(&mut self, path: &Path) -> Result<BufWriter<File>> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                self.ensure_dir(parent)?;
            }
        }
        let file =
            File::create(path).with_context(|| format!("creating {}", path.display()))?;
        self.files.push(path.to_path_buf());
        Ok(BufWriter::new(file))
    }

    pub fn defuse(mut self) {
        self.defused = true;
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if self.defused {
            return;
        }
        for path in &self.files {
            let _ = fs::remove_file(path);
        }
        if let Some(dir) = &self.created_dir {
            let _ = fs::remove_dir(dir);
        }
    }
}

/// Graph measurements as they appear in the JSON summaries.
#[derive(Serialize)]
pub struct FinalStats {
    pub nodes: u64,
    pub edges: u64,
    pub trees: u64,
    pub components: u64,
    pub lcc_nodes: u64,
    pub lcc_edges: u64,
    pub edge_density: f64,
    pub lcc_density: f64,
    pub lcc_fraction: f64,
}

impl FinalStats {
    pub fn from_metrics(m: &RunMetrics) -> Self {
        Self {
            nodes: m.nodes,
            edges: m.edges,
            trees: m.trees,
            components: m.components,
            lcc_nodes: m.lcc_nodes,
            lcc_edges: m.lcc_edges,
            edge_density: m.edge_density(),
            lcc_density: m.lcc_density(),
            lcc_fraction: m.lcc_fraction(),
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopJson {
    Steps(u64),
    Nodes(u64),
}

#[derive(Serialize)]
pub struct SimulateSummary {
    pub lambda: f64,
    pub p: f64,
    pub q: f64,
    pub seed: u64,
    pub stop: StopJson,
    pub trees_grow_on_t3: bool,
    pub checkpoint_every: Option<u64>,
    #[serde(rename = "final")]
    pub final_stats: FinalStats,
    pub densification_time: Option<u64>,
    pub tau_n: Option<u64>,
}

#[derive(Serialize)]
pub struct ReplayAggregates {
    pub edge_density: SummaryStat,
    pub lcc_density: SummaryStat,
    pub lcc_fraction: SummaryStat,
    pub p5_lcc_density: f64,
    pub p95_lcc_density: f64,
}

#[derive(Serialize)]
pub struct ReplaySummary {
    pub lambda: f64,
    pub p: f64,
    pub q: f64,
    pub estimated: bool,
    pub branch_step: u64,
    pub branch_nodes: u64,
    pub target_nodes: u64,
    pub runs: u64,
    pub seed: u64,
    pub reference: FinalStats,
    pub replays: ReplayAggregates,
}

#[derive(Serialize)]
pub struct AnalyzeSummary {
    pub t_final: Option<u64>,
    pub densification_time: Option<u64>,
    #[serde(rename = "final")]
    pub final_stats: Option<FinalStats>,
}

#[derive(Serialize)]
pub struct IngestSummary {
    pub counters: retweet_graph::ingest::IngestCounters,
    pub events: u64,
    pub densification_time: Option<u64>,
    #[serde(rename = "final")]
    pub final_stats: Option<FinalStats>,
}

pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Side-by-side table of the reference run and every replay.
pub fn write_comparison_csv<W: Write>(report: &ReplayReport, mut w: W) -> Result<()> {
    writeln!(
        w,
        "role,run,V,E,T,V_lcc,E_lcc,edge_density,lcc_density,lcc_fraction"
    )?;
    let mut row = |role: &str, run: Option<usize>, m: &RunMetrics| -> std::io::Result<()> {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{:.6},{:.6},{:.6}",
            role,
            run.map_or(String::new(), |r| r.to_string()),
            m.nodes,
            m.edges,
            m.trees,
            m.lcc_nodes,
            m.lcc_edges,
            m.edge_density(),
            m.lcc_density(),
            m.lcc_fraction()
        )
    };
    row("reference", None, &report.reference)?;
    for (i, m) in report.per_run.iter().enumerate() {
        row("replay", Some(i), m)?;
    }
    Ok(())
}
