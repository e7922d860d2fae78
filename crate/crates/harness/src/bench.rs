use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;

use sdd::duplicity::OverlapSource;
use sdd::rrt::{plan_rrt, RrtConfig};
use sdd::search::{plan, Outcome, Problem, SearchConfig};
use sdd::{DistanceField, DynamicsModel, GridMap, OverlapParams, OverlapTable};

use crate::config::{Config, PlannerConfig, PlannerKind};
use crate::error::{HarnessError, Result};
use crate::records::{self, ParamsSnapshot, RunRecord, Summary};
use crate::scenario::{generate_scenarios, Scenario};

/// Maps, scenarios and their heuristic fields, shared by every planner.
pub struct Workload {
    pub model: DynamicsModel,
    pub maps: Vec<(String, GridMap)>,
    pub scenarios: Vec<Scenario>,
    fields: Vec<DistanceField>,
    map_of: Vec<usize>,
}

impl Workload {
    /// Loads the configured maps and draws `scenarios.count` pairs on each.
    pub fn prepare(cfg: &Config) -> Result<Self> {
        let model = cfg.model()?;
        let maps = cfg.load_maps()?;
        let mut scenarios = Vec::new();
        for (i, (name, map)) in maps.iter().enumerate() {
            scenarios.extend(generate_scenarios(
                map,
                name,
                &model,
                cfg.scenarios.count,
                cfg.scenarios.seed.wrapping_add(i as u64),
                cfg.scenarios.min_separation,
            )?);
        }
        Self::from_parts(model, maps, scenarios)
    }

    pub fn from_parts(
        model: DynamicsModel,
        maps: Vec<(String, GridMap)>,
        scenarios: Vec<Scenario>,
    ) -> Result<Self> {
        let mut fields = Vec::with_capacity(scenarios.len());
        let mut map_of = Vec::with_capacity(scenarios.len());
        for s in &scenarios {
            let idx = maps.iter().position(|(n, _)| *n == s.map).ok_or_else(|| {
                HarnessError::Scenario(format!("scenario `{}` names unknown map `{}`", s.id, s.map))
            })?;
            fields.push(DistanceField::build(&maps[idx].1, s.goal.center)?);
            map_of.push(idx);
        }
        Ok(Self {
            model,
            maps,
            scenarios,
            fields,
            map_of,
        })
    }

    pub fn map_for(&self, scenario: usize) -> &GridMap {
        &self.maps[self.map_of[scenario]].1
    }

    pub fn problem(&self, scenario: usize) -> Problem<'_> {
        let s = &self.scenarios[scenario];
        Problem::new(
            &self.model,
            self.map_for(scenario),
            &self.fields[scenario],
            s.start,
            s.goal,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchOutput {
    pub records: Vec<RunRecord>,
    pub summary: Summary,
}

fn needs_table(cfg: &Config) -> bool {
    cfg.planners.iter().any(|p| p.mode == PlannerKind::SubtreeTable)
}

/// Checks a loaded table against the configured model and overlap settings.
pub fn check_table(table: &OverlapTable, model: &DynamicsModel, want: &OverlapParams) -> Result<()> {
    if !table.matches_model(model) {
        return Err(HarnessError::Config(
            "overlap table was built for a different vehicle".into(),
        ));
    }
    let got = table.params();
    if got.depth != want.depth
        || got.overlap_radius != want.overlap_radius
        || got.query_radius != want.query_radius
    {
        return Err(HarnessError::Config(format!(
            "overlap table has H={} r={} R={}, config asks for H={} r={} R={}",
            got.depth,
            got.overlap_radius,
            got.query_radius,
            want.depth,
            want.overlap_radius,
            want.query_radius
        )));
    }
    Ok(())
}

/// The table named in the config, when some planner needs one.
pub fn load_table(cfg: &Config) -> Result<Option<OverlapTable>> {
    if !needs_table(cfg) {
        return Ok(None);
    }
    let path = cfg.overlap.table.as_ref().ok_or_else(|| {
        HarnessError::Config("subtree_table planner configured without overlap.table".into())
    })?;
    let path = cfg.resolve(path);
    if !path.is_file() {
        return Err(HarnessError::Config(format!(
            "overlap table {} does not exist; run `precompute` first",
            path.display()
        )));
    }
    let table = OverlapTable::load(&path)?;
    check_table(&table, &cfg.model()?, &cfg.overlap_params())?;
    Ok(Some(table))
}

pub fn run_benchmark(cfg: &Config) -> Result<BenchOutput> {
    cfg.validate()?;
    let table = load_table(cfg)?;
    let work = Workload::prepare(cfg)?;
    run_workload(cfg, &work, table.as_ref())
}

struct Job<'a> {
    scenario: usize,
    planner: &'a PlannerConfig,
    seed: Option<u64>,
}

/// Runs every planner on every scenario. Records come back ordered by
/// scenario, then planner, then seed, whatever the worker count.
pub fn run_workload(
    cfg: &Config,
    work: &Workload,
    table: Option<&OverlapTable>,
) -> Result<BenchOutput> {
    if needs_table(cfg) && table.is_none() {
        return Err(HarnessError::Config("subtree_table planner needs a table".into()));
    }
    let mut jobs = Vec::new();
    for scenario in 0..work.scenarios.len() {
        for planner in &cfg.planners {
            if planner.mode == PlannerKind::Rrt {
                for &seed in &planner.seeds {
                    jobs.push(Job {
                        scenario,
                        planner,
                        seed: Some(seed),
                    });
                }
            } else {
                jobs.push(Job {
                    scenario,
                    planner,
                    seed: None,
                });
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
    let records: Vec<RunRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|j| run_one(cfg, work, j.scenario, j.planner, j.seed, table))
            .collect::<Result<_>>()
    })?;
    let summary = records::summarize(&records);
    Ok(BenchOutput { records, summary })
}

/// RRT seed actually used for one scenario, so scenarios do not share
/// sample streams.
pub fn run_seed(seed: u64, scenario: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(scenario as u64)
}

pub fn run_one(
    cfg: &Config,
    work: &Workload,
    scenario: usize,
    planner: &PlannerConfig,
    seed: Option<u64>,
    table: Option<&OverlapTable>,
) -> Result<RunRecord> {
    let problem = work.problem(scenario);
    let dparams = cfg.duplicity_params(planner);
    let oparams = cfg.overlap_params();
    let budget = planner.node_budget.unwrap_or(cfg.node_budget);
    let timeout = planner.timeout.unwrap_or(cfg.timeout);
    let limit = Duration::from_secs_f64(timeout);
    let used_seed = seed.map(|s| run_seed(s, scenario));

    let outcome: Outcome = match planner.mode {
        PlannerKind::Rrt => {
            let rc = RrtConfig::new(used_seed.unwrap_or(0))
                .with_goal_bias(planner.goal_bias)
                .with_budget(budget)
                .with_timeout(limit)
                .recording(cfg.record_visited);
            let rc = match cfg.duplicity.weights {
                Some(w) => RrtConfig { weights: w, ..rc },
                None => rc,
            };
            plan_rrt(&problem, &rc)?
        }
        mode => {
            let source = match mode {
                PlannerKind::SubtreeOnline => Some(OverlapSource::Online {
                    model: &work.model,
                    params: oparams,
                }),
                PlannerKind::SubtreeTable => table.map(OverlapSource::Table),
                _ => None,
            };
            let sc = SearchConfig::new(dparams)
                .with_budget(budget)
                .with_timeout(limit)
                .recording(cfg.record_visited);
            plan(&problem, &sc, source)?
        }
    };

    let sc = &work.scenarios[scenario];
    let id = match seed {
        Some(s) => format!("{}/{}/{s}", sc.id, planner.name()),
        None => format!("{}/{}", sc.id, planner.name()),
    };
    let stats = &outcome.stats;
    Ok(RunRecord {
        id,
        scenario: sc.id.clone(),
        map: sc.map.clone(),
        planner: planner.name(),
        mode: planner.mode,
        run_seed: used_seed,
        success: outcome.success(),
        status: outcome.status,
        wall_time: stats.wall_time,
        cost: outcome.solution.as_ref().map(|s| s.cost),
        expansions: stats.expansions,
        subtree_expansions: stats.subtree_expansions,
        generated: stats.generated,
        params: ParamsSnapshot {
            eps0: dparams.eps0,
            eps_max: dparams.eps_max,
            radius: dparams.radius,
            boundary: dparams.boundary,
            depth: oparams.depth,
            overlap_radius: oparams.overlap_radius,
            node_budget: budget,
            timeout,
            goal_bias: (planner.mode == PlannerKind::Rrt).then_some(planner.goal_bias),
        },
        visited: cfg.record_visited.then(|| outcome.visited.clone()),
        path: if cfg.record_visited {
            outcome
                .solution
                .as_ref()
                .map(|s| s.path.iter().map(|p| p.position()).collect())
        } else {
            None
        },
    })
}

/// Writes records.jsonl, summary.json and CSV copies of both into `dir`.
pub fn write_outputs(dir: &Path, out: &BenchOutput) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    records::write_jsonl(&dir.join("records.jsonl"), &out.records)?;
    records::write_summary(&dir.join("summary.json"), &out.summary)?;
    records::write_records_csv(&dir.join("records.csv"), &out.records)?;
    records::write_summary_csv(&dir.join("summary.csv"), &out.summary)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn config(planners: &str, extra: &str) -> Config {
        let text = format!(
            r#"
name = "unit"
timeout = 20.0
node_budget = 200000
workers = 2
{extra}
[dynamics]
model = "car3"
[duplicity]
radius = 2.0
[scenarios]
count = 2
seed = 3
min_separation = 6.0
[[maps]]
name = "open"
generator = {{ kind = "open", width = 16, height = 16 }}
{planners}
"#
        );
        Config::parse(&text, Path::new(".")).unwrap()
    }

    #[test]
    fn one_scenario_one_planner_one_record() {
        let mut cfg = config("[[planners]]\nmode = \"euclidean\"\n", "");
        cfg.scenarios.count = 1;
        let out = run_benchmark(&cfg).unwrap();
        assert_eq!(out.records.len(), 1);
        let r = &out.records[0];
        assert!(r.success);
        assert!(r.cost.unwrap() > 0.0);
        assert_eq!(out.summary.planners.len(), 1);
    }

    #[test]
    fn records_are_ordered_and_repeatable() {
        let planners = "[[planners]]\nmode = \"none\"\n[[planners]]\nmode = \"rrt\"\nseeds = [1, 2]\n";
        let cfg = config(planners, "");
        let a = run_benchmark(&cfg).unwrap();
        assert_eq!(a.records.len(), 2 * 3);
        let ids: Vec<&str> = a.records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids[0], "open-000/none");
        assert_eq!(ids[1], "open-000/rrt/1");
        assert_eq!(ids[3], "open-001/none");

        let mut serial = cfg.clone();
        serial.workers = 1;
        let b = run_benchmark(&serial).unwrap();
        let strip = |rs: &[RunRecord]| {
            rs.iter()
                .map(|r| RunRecord {
                    wall_time: 0.0,
                    ..r.clone()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a.records), strip(&b.records));
    }

    #[test]
    fn missing_table_fails_before_running() {
        let cfg = config(
            "[[planners]]\nmode = \"subtree_table\"\n",
            "",
        );
        assert!(matches!(run_benchmark(&cfg), Err(HarnessError::Config(_))));
        let mut cfg = cfg;
        cfg.overlap.table = Some("/nonexistent/t.sovt".into());
        let err = run_benchmark(&cfg).unwrap_err();
        assert!(err.to_string().contains("does not exist"));
    }

    #[test]
    fn table_params_must_match() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config("[[planners]]\nmode = \"subtree_table\"\n", "");
        let mut p = cfg.overlap_params();
        p.depth = 1;
        let t = OverlapTable::precompute(&cfg.model().unwrap(), &p).unwrap();
        let path = dir.path().join("t.sovt");
        t.save(&path).unwrap();
        cfg.overlap.table = Some(path);
        assert!(matches!(load_table(&cfg), Err(HarnessError::Config(_))));
        cfg.overlap.depth = Some(1);
        assert!(load_table(&cfg).unwrap().is_some());
    }

    #[test]
    fn visited_positions_are_kept_on_request() {
        let mut cfg = config("[[planners]]\nmode = \"euclidean\"\n", "record_visited = true");
        cfg.scenarios.count = 1;
        let out = run_benchmark(&cfg).unwrap();
        let r = &out.records[0];
        assert_eq!(r.visited.as_ref().unwrap().len() as u64, r.expansions);
        assert!(r.path.as_ref().unwrap().len() >= 2);
    }

    #[test]
    fn outputs_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config("[[planners]]\nmode = \"euclidean\"\n", "");
        cfg.scenarios.count = 1;
        let out = run_benchmark(&cfg).unwrap();
        write_outputs(dir.path(), &out).unwrap();
        for f in ["records.jsonl", "summary.json", "records.csv", "summary.csv"] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        assert_eq!(records::read_jsonl(&dir.path().join("records.jsonl")).unwrap(), out.records);
    }
}
