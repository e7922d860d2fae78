use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sdd::{DynamicsModel, ModelKind, OverlapParams, OverlapTable};

use crate::bench::{check_table, run_workload, Workload};
use crate::config::{Config, PlannerKind};
use crate::error::{HarnessError, Result};
use crate::records::{RunRecord, Stat};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub depth: usize,
    pub overlap_radius: f64,
    pub boundary: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub depth: usize,
    pub overlap_radius: f64,
    pub boundary: f64,
    pub planner: String,
    pub runs: usize,
    pub success_rate: f64,
    pub time_mean: Option<f64>,
    pub time_se: Option<f64>,
    pub expansions_mean: Option<f64>,
    pub expansions_se: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    pub records: Vec<RunRecord>,
    pub rows: Vec<SweepRow>,
    /// Tables built during this sweep, as opposed to read from the cache.
    pub tables_built: usize,
}

/// Cartesian product of the sweep lists. An empty list stands for the
/// single value already in the config.
pub fn grid(cfg: &Config) -> Result<Vec<SweepPoint>> {
    let base = cfg.overlap_params();
    let c0 = cfg.duplicity.boundary.unwrap_or(0.5);
    let s = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| HarnessError::Config("config has no [sweep] section".into()))?;
    let or = |v: &[f64], d: f64| if v.is_empty() { vec![d] } else { v.to_vec() };
    let depths = if s.depth.is_empty() {
        vec![base.depth]
    } else {
        s.depth.clone()
    };
    let mut out = Vec::new();
    for &depth in &depths {
        for &overlap_radius in &or(&s.overlap_radius, base.overlap_radius) {
            for &boundary in &or(&s.boundary, c0) {
                out.push(SweepPoint {
                    depth,
                    overlap_radius,
                    boundary,
                });
            }
        }
    }
    Ok(out)
}

/// Cache file name; everything that shapes the table is in it.
pub fn table_file(kind: ModelKind, p: &OverlapParams) -> String {
    let tag = match kind {
        ModelKind::Car3 => "car3",
        ModelKind::Uav5 => "uav5",
    };
    let r = &p.resolution;
    format!(
        "{tag}_H{}_r{}_R{}_res{}-{}-{:.6}-{}.sovt",
        p.depth, p.overlap_radius, p.query_radius, r.xy, r.z, r.heading, r.speed
    )
}

/// Loads the table at `path` when it was built with `params`, otherwise
/// builds and saves it. Returns whether a build happened.
pub fn cached_table(
    path: &Path,
    model: &DynamicsModel,
    params: &OverlapParams,
) -> Result<(OverlapTable, bool)> {
    if path.is_file() {
        if let Ok(t) = OverlapTable::load(path) {
            if t.params() == params && check_table(&t, model, params).is_ok() {
                return Ok((t, false));
            }
        }
    }
    let t = OverlapTable::precompute(model, params)?;
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    t.save(path)?;
    Ok((t, true))
}

pub fn point_config(cfg: &Config, p: &SweepPoint) -> Config {
    let mut c = cfg.clone();
    c.overlap.depth = Some(p.depth);
    c.overlap.overlap_radius = Some(p.overlap_radius);
    c.duplicity.boundary = Some(p.boundary);
    c
}

pub fn table_dir(cfg: &Config) -> PathBuf {
    let dir = cfg
        .sweep
        .as_ref()
        .map(|s| s.table_dir.clone())
        .unwrap_or_else(|| PathBuf::from("tables"));
    cfg.resolve(&dir)
}

/// Runs the benchmark at every grid point on one shared set of scenarios.
pub fn run_sensitivity(cfg: &Config) -> Result<SweepOutput> {
    cfg.validate()?;
    let points = grid(cfg)?;
    let work = Workload::prepare(cfg)?;
    let dir = table_dir(cfg);
    let wants_table = cfg.planners.iter().any(|p| p.mode == PlannerKind::SubtreeTable);
    let mut records = Vec::new();
    let mut rows = Vec::new();
    let mut tables_built = 0;
    for p in &points {
        let pc = point_config(cfg, p);
        pc.validate()?;
        let table = if wants_table {
            let op = pc.overlap_params();
            let path = dir.join(table_file(work.model.kind(), &op));
            let (t, built) = cached_table(&path, &work.model, &op)?;
            tables_built += built as usize;
            Some(t)
        } else {
            None
        };
        let out = run_workload(&pc, &work, table.as_ref())?;
        for s in &out.summary.planners {
            rows.push(row(p, &s.planner, s.runs, s.success_rate, &s.wall_time, &s.expansions));
        }
        records.extend(out.records);
    }
    Ok(SweepOutput {
        records,
        rows,
        tables_built,
    })
}

fn row(p: &SweepPoint, planner: &str, runs: usize, rate: f64, t: &Stat, e: &Stat) -> SweepRow {
    SweepRow {
        depth: p.depth,
        overlap_radius: p.overlap_radius,
        boundary: p.boundary,
        planner: planner.to_string(),
        runs,
        success_rate: rate,
        time_mean: t.mean,
        time_se: t.std_err,
        expansions_mean: e.mean,
        expansions_se: e.std_err,
    }
}

pub fn write_outputs(dir: &Path, out: &SweepOutput) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    crate::records::write_jsonl(&dir.join("sweep_records.jsonl"), &out.records)?;
    let path = dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for r in &out.rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(&path, e))?;
    let text = serde_json::to_string_pretty(&out.rows)?;
    std::fs::write(dir.join("sweep.json"), text).map_err(|e| HarnessError::io(dir, e))
}
