use std::path::PathBuf;

use sdd::search::Termination;
use sdd::OverlapTable;
use sdd_harness::bench::{run_workload, Workload};
use sdd_harness::{Config, PlannerKind};

// maze8 of the suite: plain weighted A* runs out of nodes, the table mode does not
#[test]
fn plain_wastar_runs_out_where_table_mode_solves() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/maze_suite.toml");
    let mut cfg = Config::load(&path).unwrap();
    cfg.planners
        .retain(|p| matches!(p.mode, PlannerKind::None | PlannerKind::SubtreeTable));
    let table = OverlapTable::precompute(&cfg.model().unwrap(), &cfg.overlap_params()).unwrap();
    let all = Workload::prepare(&cfg).unwrap();
    let scenarios = all.scenarios.into_iter().filter(|s| s.map == "maze8").collect();
    let work = Workload::from_parts(all.model, all.maps, scenarios).unwrap();
    let out = run_workload(&cfg, &work, Some(&table)).unwrap();

    let get = |m: PlannerKind| out.records.iter().find(|r| r.mode == m).unwrap();
    let none = get(PlannerKind::None);
    let tab = get(PlannerKind::SubtreeTable);
    assert!(!none.success);
    assert!(matches!(none.status, Termination::Budget | Termination::Timeout));
    assert!(tab.success);
    assert!(tab.expansions * 100 < none.expansions);
}
