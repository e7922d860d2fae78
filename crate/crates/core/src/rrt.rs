//! Kinodynamic RRT over the same motion primitives as the search.
//!
//! Each iteration draws a free-space sample (or the goal, with probability
//! `goal_bias`), finds the nearest tree node under the weighted metric and
//! extends it by the collision-free primitive whose endpoint lands closest
//! to the sample. A node never repeats a primitive it has already used;
//! nodes with nothing left to try are skipped by the nearest-node query.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::geometry::{metric, DynamicsModel, MetricWeights, MotionPrimitive, State};
use crate::kdtree::KdTree;
use crate::search::{Outcome, Problem, SearchStats, Solution, Termination};
use crate::world::GridMap;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RrtConfig {
    pub seed: u64,
    pub goal_bias: f64,
    pub weights: MetricWeights,
    /// Maximum number of samples drawn.
    pub sample_budget: u64,
    pub timeout: Option<Duration>,
    pub record_visited: bool,
}

impl RrtConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            goal_bias: 0.05,
            weights: MetricWeights::default(),
            sample_budget: 5_000_000,
            timeout: None,
            record_visited: false,
        }
    }

    pub fn with_goal_bias(mut self, p: f64) -> Self {
        self.goal_bias = p;
        self
    }

    pub fn with_budget(mut self, samples: u64) -> Self {
        self.sample_budget = samples;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = Some(timeout);
        self
    }

    pub fn recording(mut self, on: bool) -> Self {
        self.record_visited = on;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RrtNode {
    pub state: State,
    pub parent: Option<u32>,
    pub control: Option<u8>,
    pub cost: f64,
    used: u32,
}

#[derive(Clone, Debug, Default)]
pub struct RrtTree {
    nodes: Vec<RrtNode>,
    index: KdTree,
}

impl RrtTree {
    fn new(root: State) -> Self {
        let mut t = Self::default();
        t.push(RrtNode {
            state: root,
            parent: None,
            control: None,
            cost: 0.0,
            used: 0,
        });
        t
    }

    fn push(&mut self, node: RrtNode) -> usize {
        let id = self.nodes.len();
        self.index.insert(node.state.position(), id as u32);
        self.nodes.push(node);
        id
    }

    pub fn nodes(&self) -> &[RrtNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nearest node under `w` that still has untried primitives.
    fn nearest_open(&self, q: &State, w: &MetricWeights, full: u32) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (id, dp) in self.index.nearest_iter(&q.position()) {
            if let Some((_, bd)) = best {
                if w.position * dp >= bd {
                    break;
                }
            }
            let n = &self.nodes[id as usize];
            if n.used == full {
                continue;
            }
            let d = metric(q, &n.state, w);
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((id as usize, d));
            }
        }
        best.map(|(id, _)| id)
    }

    /// Path and primitives from the root to `id`.
    pub fn path_to(
        &self,
        model: &DynamicsModel,
        id: usize,
    ) -> Result<(Vec<State>, Vec<MotionPrimitive>), PlanError> {
        let mut chain = vec![id];
        let mut at = id;
        while let Some(p) = self.nodes[at].parent {
            at = p as usize;
            if chain.len() > self.nodes.len() {
                return Err(PlanError::BrokenChain(at));
            }
            chain.push(at);
        }
        chain.reverse();
        let path = chain.iter().map(|&i| self.nodes[i].state).collect();
        let mut prims = Vec::with_capacity(chain.len() - 1);
        for w in chain.windows(2) {
            let k = self.nodes[w[1]]
                .control
                .ok_or(PlanError::BrokenChain(w[1]))? as usize;
            prims.push(model.primitive(&self.nodes[w[0]].state, &model.control_set()[k]));
        }
        Ok((path, prims))
    }
}

/// Uniform state over the free cells of the map; `None` after many misses.
fn sample_free(rng: &mut ChaCha8Rng, model: &DynamicsModel, map: &GridMap) -> Option<State> {
    let cs = map.cell_size();
    let (w, h, d) = (
        map.width() as f64 * cs,
        map.height() as f64 * cs,
        map.depth() as f64 * cs,
    );
    for _ in 0..10_000 {
        let x = rng.gen_range(0.0..w);
        let y = rng.gen_range(0.0..h);
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let s = match model.speed_bounds() {
            None => State::car(x, y, theta),
            Some((lo, hi)) => {
                let z = if map.is_3d() { rng.gen_range(0.0..d) } else { 0.0 };
                State::uav(x, y, z, theta, rng.gen_range(lo..=hi))
            }
        };
        if map.state_valid(&s) {
            return Some(s);
        }
    }
    None
}

fn goal_sample(rng: &mut ChaCha8Rng, model: &DynamicsModel, center: [f64; 3]) -> State {
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    match model.speed_bounds() {
        None => State::car(center[0], center[1], theta),
        Some((lo, hi)) => State::uav(center[0], center[1], center[2], theta, rng.gen_range(lo..=hi)),
    }
}

pub fn plan_rrt(problem: &Problem<'_>, config: &RrtConfig) -> Result<Outcome, PlanError> {
    plan_rrt_with_tree(problem, config).map(|(out, _)| out)
}

/// Runs the planner and also hands back the final tree.
pub fn plan_rrt_with_tree(
    problem: &Problem<'_>,
    config: &RrtConfig,
) -> Result<(Outcome, RrtTree), PlanError> {
    problem.validate()?;
    if !(0.0..=1.0).contains(&config.goal_bias) {
        return Err(PlanError::InvalidConfig(format!(
            "goal bias {} outside [0, 1]",
            config.goal_bias
        )));
    }
    if model_branching_too_large(problem.model) {
        return Err(PlanError::InvalidConfig(
            "control sets above 32 entries are not supported".into(),
        ));
    }
    let started = Instant::now();
    let Problem {
        model, map, start, goal, ..
    } = *problem;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let full: u32 = if model.branching() == 32 {
        u32::MAX
    } else {
        (1u32 << model.branching()) - 1
    };
    let mut tree = RrtTree::new(start);
    let mut stats = SearchStats {
        unique_states: 1,
        ..SearchStats::default()
    };
    let mut visited = Vec::new();
    let mut status = Termination::Budget;
    let mut reached = goal.contains(&start).then_some(0usize);
    if reached.is_some() {
        status = Termination::Solved;
    }

    let position_only = MetricWeights {
        position: config.weights.position,
        ..MetricWeights::position_only()
    };
    let mut samples = 0u64;
    while reached.is_none() {
        if samples >= config.sample_budget {
            status = Termination::Budget;
            break;
        }
        if let Some(limit) = config.timeout {
            if samples % 64 == 0 && started.elapsed() >= limit {
                status = Termination::Timeout;
                break;
            }
        }
        samples += 1;
        // the goal region ignores heading and speed, so goal samples do too
        let (target, weights) = if rng.gen_bool(config.goal_bias) {
            (goal_sample(&mut rng, model, goal.center), &position_only)
        } else {
            match sample_free(&mut rng, model, map) {
                Some(s) => (s, &config.weights),
                None => {
                    status = Termination::Exhausted;
                    break;
                }
            }
        };
        if config.record_visited {
            visited.push(target.position());
        }
        let Some(near) = tree.nearest_open(&target, weights, full) else {
            status = Termination::Exhausted;
            break;
        };
        stats.expansions += 1;
        let from = tree.nodes[near].state;
        let mut best: Option<(usize, MotionPrimitive, f64)> = None;
        for (k, u) in model.control_set().iter().enumerate() {
            if tree.nodes[near].used & (1 << k) != 0 {
                continue;
            }
            let prim = model.primitive(&from, u);
            if !map.edge_valid(&prim) {
                // never useful from this node
                tree.nodes[near].used |= 1 << k;
                stats.rejected += 1;
                continue;
            }
            let d = metric(prim.endpoint(), &target, weights);
            if best.as_ref().map_or(true, |b| d < b.2) {
                best = Some((k, prim, d));
            }
        }
        let Some((k, prim, _)) = best else {
            continue;
        };
        tree.nodes[near].used |= 1 << k;
        let child = *prim.endpoint();
        let id = tree.push(RrtNode {
            state: child,
            parent: Some(near as u32),
            control: Some(k as u8),
            cost: tree.nodes[near].cost + prim.cost,
            used: 0,
        });
        stats.generated += 1;
        stats.pushed += 1;
        stats.unique_states += 1;
        if goal.contains(&child) {
            reached = Some(id);
            status = Termination::Solved;
        }
    }

    stats.wall_time = started.elapsed().as_secs_f64();
    let solution = match reached {
        Some(id) => {
            stats.success = true;
            let (path, primitives) = tree.path_to(model, id)?;
            let cost = primitives.iter().map(|p| p.cost).sum();
            Some(Solution {
                path,
                primitives,
                cost,
                stats: stats.clone(),
            })
        }
        None => None,
    };
    Ok((
        Outcome {
            status,
            solution,
            stats,
            visited,
        },
        tree,
    ))
}

fn model_branching_too_large(model: &DynamicsModel) -> bool {
    model.branching() > 32
}
