use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use sdd::search::GoalRegion;
use sdd::{DistanceField, DynamicsModel, GridMap, State};

use crate::error::{HarnessError, Result};

/// Consecutive rejected draws tolerated before giving up on one scenario.
pub const MAX_REJECTIONS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub map: String,
    pub start: State,
    pub goal: GoalRegion,
    pub seed: u64,
}

/// Start/goal pairs drawn uniformly over free cells.
///
/// A pair is kept when the goal is at least `min_separation` away, the BFS
/// field reaches the start, and the start has at least one collision-free
/// successor. Headings (and UAV speeds) are drawn uniformly too.
pub fn generate_scenarios(
    map: &GridMap,
    map_name: &str,
    model: &DynamicsModel,
    n: usize,
    seed: u64,
    min_separation: f64,
) -> Result<Vec<Scenario>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let free: Vec<usize> = (0..map.len()).filter(|&i| !map.blocked_at(i)).collect();
    if free.len() < 2 {
        return Err(HarnessError::Scenario(format!(
            "map `{map_name}` has fewer than two free cells"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut rejections = 0;
        let (start, goal) = loop {
            if rejections == MAX_REJECTIONS {
                return Err(HarnessError::Scenario(format!(
                    "map `{map_name}`: no pair {min_separation} m apart after {MAX_REJECTIONS} draws"
                )));
            }
            rejections += 1;
            let a = free[rng.gen_range(0..free.len())];
            let b = free[rng.gen_range(0..free.len())];
            let heading = rng.gen_range(0.0..std::f64::consts::TAU);
            let speed = model.speed_bounds().map(|(lo, hi)| rng.gen_range(lo..=hi));
            let (sx, sy, sz) = map.coords(a);
            let p = map.cell_center(sx, sy, sz);
            let (gx, gy, gz) = map.coords(b);
            let g = map.cell_center(gx, gy, gz);
            let sep = (0..3).map(|k| (p[k] - g[k]).powi(2)).sum::<f64>().sqrt();
            if a == b || sep < min_separation {
                continue;
            }
            let start = match speed {
                Some(v) => State::uav(p[0], p[1], p[2], heading, v),
                None => State::car(p[0], p[1], heading),
            };
            if !map.state_valid(&start) || map.valid_successor_ratio(model, &start) == 0.0 {
                continue;
            }
            let field = DistanceField::build(map, g)?;
            if !field.value_at(p).is_finite() {
                continue;
            }
            break (start, GoalRegion::for_map(map, g));
        };
        out.push(Scenario {
            id: format!("{map_name}-{i:03}"),
            map: map_name.to_string(),
            start,
            goal,
            seed,
        });
    }
    Ok(out)
}

pub fn save_scenarios(path: &Path, scenarios: &[Scenario]) -> Result<()> {
    let text = serde_json::to_string_pretty(scenarios)?;
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> DynamicsModel {
        DynamicsModel::default_car()
    }

    #[test]
    fn zero_count_is_empty() {
        let map = GridMap::new(10, 10, 1, 1.0);
        assert!(generate_scenarios(&map, "m", &model(), 0, 1, 0.0).unwrap().is_empty());
    }

    #[test]
    fn seeded_generation_repeats() {
        let map = GridMap::maze(3, 3, 5, 1, 1.0, 4);
        let a = generate_scenarios(&map, "m", &model(), 6, 9, 5.0).unwrap();
        let b = generate_scenarios(&map, "m", &model(), 6, 9, 5.0).unwrap();
        assert_eq!(a, b);
        let c = generate_scenarios(&map, "m", &model(), 6, 10, 5.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pairs_are_separated_and_reachable() {
        let map = GridMap::random_blocks(30, 30, 25, 4, 1.0, 2);
        let sc = generate_scenarios(&map, "blocks", &model(), 10, 3, 12.0).unwrap();
        assert_eq!(sc.len(), 10);
        for s in &sc {
            let p = s.start.position();
            let d = ((p[0] - s.goal.center[0]).powi(2) + (p[1] - s.goal.center[1]).powi(2)).sqrt();
            assert!(d >= 12.0);
            assert!(map.state_valid(&s.start));
            let field = DistanceField::build(&map, s.goal.center).unwrap();
            assert!(field.value_at(p).is_finite());
        }
    }

    #[test]
    fn split_map_never_pairs_across_the_wall() {
        let mut map = GridMap::new(21, 10, 1, 1.0);
        for y in 0..10 {
            map.set_blocked(10, y, 0, true);
        }
        let sc = generate_scenarios(&map, "split", &model(), 8, 5, 3.0).unwrap();
        for s in &sc {
            let left = s.start.position()[0] < 10.0;
            assert_eq!(left, s.goal.center[0] < 10.0);
        }
    }

    #[test]
    fn impossible_separation_is_an_error() {
        let map = GridMap::new(5, 5, 1, 1.0);
        let err = generate_scenarios(&map, "tiny", &model(), 1, 0, 50.0).unwrap_err();
        assert!(matches!(err, HarnessError::Scenario(_)));
    }

    #[test]
    fn uav_scenarios_carry_speed() {
        let base = GridMap::new(12, 12, 1, 1.0);
        let map = GridMap::extrude(&base, 4, 0, 1, 0);
        let m = DynamicsModel::default_uav();
        let sc = generate_scenarios(&map, "vox", &m, 3, 1, 4.0).unwrap();
        for s in &sc {
            let v = s.start.speed().unwrap();
            assert!((0.5..=3.0).contains(&v));
        }
    }

    #[test]
    fn json_round_trip() {
        let map = GridMap::new(10, 10, 1, 1.0);
        let sc = generate_scenarios(&map, "open", &model(), 4, 2, 3.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        save_scenarios(&path, &sc).unwrap();
        assert_eq!(load_scenarios(&path).unwrap(), sc);
    }
}
