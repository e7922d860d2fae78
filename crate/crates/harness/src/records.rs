use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use sdd::search::Termination;

use crate::config::PlannerKind;
use crate::error::{HarnessError, Result};

/// Settings a run was made with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsSnapshot {
    pub eps0: f64,
    pub eps_max: f64,
    pub radius: f64,
    pub boundary: f64,
    pub depth: usize,
    pub overlap_radius: f64,
    pub node_budget: u64,
    pub timeout: f64,
    pub goal_bias: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub scenario: String,
    pub map: String,
    pub planner: String,
    pub mode: PlannerKind,
    pub run_seed: Option<u64>,
    pub success: bool,
    pub status: Termination,
    pub wall_time: f64,
    pub cost: Option<f64>,
    pub expansions: u64,
    pub subtree_expansions: u64,
    pub generated: u64,
    pub params: ParamsSnapshot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visited: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<[f64; 3]>>,
}

impl RunRecord {
    pub fn total_expansions(&self) -> u64 {
        self.expansions + self.subtree_expansions
    }
}

/// Mean and standard error of a sample. The error uses the n−1 standard
/// deviation and is absent below two samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub n: usize,
    pub mean: Option<f64>,
    pub std_err: Option<f64>,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                n,
                mean: None,
                std_err: None,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_err = (n > 1).then(|| {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            var.sqrt() / (n as f64).sqrt()
        });
        Self {
            n,
            mean: Some(mean),
            std_err,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerSummary {
    pub planner: String,
    pub mode: PlannerKind,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Over successful runs only.
    pub wall_time: Stat,
    pub cost: Stat,
    pub expansions: Stat,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub planners: Vec<PlannerSummary>,
}

impl Summary {
    pub fn get(&self, planner: &str) -> Option<&PlannerSummary> {
        self.planners.iter().find(|p| p.planner == planner)
    }
}

/// Per-planner statistics, planners in order of first appearance.
pub fn summarize(records: &[RunRecord]) -> Summary {
    let mut order: Vec<(&str, PlannerKind)> = Vec::new();
    for r in records {
        if !order.iter().any(|(p, _)| *p == r.planner) {
            order.push((&r.planner, r.mode));
        }
    }
    let planners = order
        .into_iter()
        .map(|(name, mode)| {
            let mine: Vec<&RunRecord> = records.iter().filter(|r| r.planner == name).collect();
            let ok: Vec<&RunRecord> = mine.iter().copied().filter(|r| r.success).collect();
            let col = |f: fn(&RunRecord) -> f64| Stat::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            PlannerSummary {
                planner: name.to_string(),
                mode,
                runs: mine.len(),
                successes: ok.len(),
                success_rate: ok.len() as f64 / mine.len() as f64,
                wall_time: col(|r| r.wall_time),
                cost: col(|r| r.cost.unwrap_or(f64::NAN)),
                expansions: col(|r| r.expansions as f64),
            }
        })
        .collect();
    Summary { planners }
}

pub fn write_jsonl(path: &Path, records: &[RunRecord]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(f);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| HarnessError::io(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<RunRecord>> {
    let f = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let text = serde_json::to_string_pretty(summary)?;
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Serialize)]
struct RecordRow<'a> {
    id: &'a str,
    scenario: &'a str,
    map: &'a str,
    planner: &'a str,
    run_seed: Option<u64>,
    success: bool,
    status: Termination,
    wall_time: f64,
    cost: Option<f64>,
    expansions: u64,
    subtree_expansions: u64,
    generated: u64,
    depth: usize,
    overlap_radius: f64,
    boundary: f64,
}

pub fn write_records_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(RecordRow {
            id: &r.id,
            scenario: &r.scenario,
            map: &r.map,
            planner: &r.planner,
            run_seed: r.run_seed,
            success: r.success,
            status: r.status,
            wall_time: r.wall_time,
            cost: r.cost,
            expansions: r.expansions,
            subtree_expansions: r.subtree_expansions,
            generated: r.generated,
            depth: r.params.depth,
            overlap_radius: r.params.overlap_radius,
            boundary: r.params.boundary,
        })?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_summary_csv(path: &Path, summary: &Summary) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "planner",
        "runs",
        "success_rate",
        "time_mean",
        "time_se",
        "cost_mean",
        "cost_se",
        "expansions_mean",
        "expansions_se",
    ])?;
    let f = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for p in &summary.planners {
        w.write_record([
            p.planner.clone(),
            p.runs.to_string(),
            p.success_rate.to_string(),
            f(p.wall_time.mean),
            f(p.wall_time.std_err),
            f(p.cost.mean),
            f(p.cost.std_err),
            f(p.expansions.mean),
            f(p.expansions.std_err),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}
