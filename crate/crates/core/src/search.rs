//! Weighted A* with soft duplicate detection.
//!
//! Every collision-free successor that has not been generated before (by
//! exact bitwise identity) gets an inflation factor from its duplicity
//! against `U = OPEN ∪ CLOSED`, fixed at the start of the iteration. The
//! factor never changes afterwards; only `g` and `f` are updated when a
//! cheaper path to the same state turns up. OPEN is a binary heap with lazy
//! deletion of stale entries.

use std::cmp::Ordering;
use std::collections::hash_map::Entry as MapEntry;
use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::duplicity::{DuplicityEngine, DuplicityParams, OverlapSource};
use crate::error::PlanError;
use crate::geometry::{DynamicsModel, MotionPrimitive, State};
use crate::heuristic::DistanceField;
use crate::world::GridMap;

/// Position ball; heading and speed are unconstrained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalRegion {
    pub center: [f64; 3],
    pub radius: f64,
}

impl GoalRegion {
    pub fn new(center: [f64; 3], radius: f64) -> Self {
        Self { center, radius }
    }

    /// Ball of half a cell around `center`.
    pub fn for_map(map: &GridMap, center: [f64; 3]) -> Self {
        Self::new(center, 0.5 * map.cell_size())
    }

    pub fn contains(&self, s: &State) -> bool {
        let p = s.position();
        let d2: f64 = (0..3).map(|k| (p[k] - self.center[k]).powi(2)).sum();
        d2 <= self.radius * self.radius
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Solved,
    /// OPEN ran empty (or the RRT ran out of samples to try).
    Exhausted,
    Budget,
    Timeout,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    /// States popped from OPEN and expanded, re-expansions included.
    pub expansions: u64,
    /// States built only for online subtree construction.
    pub subtree_expansions: u64,
    /// Collision-free successors produced by expansions.
    pub generated: u64,
    /// Successors rejected by the collision check.
    pub rejected: u64,
    pub pushed: u64,
    /// Successors identical to a known state that did not improve its g.
    pub not_improved: u64,
    /// Distinct states ever inserted into OPEN.
    pub unique_states: u64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub wall_time: f64,
    pub success: bool,
}

impl SearchStats {
    /// Expansions including the states built for subtrees.
    pub fn total_expansions(&self) -> u64 {
        self.expansions + self.subtree_expansions
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub path: Vec<State>,
    pub primitives: Vec<MotionPrimitive>,
    pub cost: f64,
    pub stats: SearchStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub status: Termination,
    pub solution: Option<Solution>,
    pub stats: SearchStats,
    /// Positions of expanded (or sampled, for RRT) states, when recorded.
    pub visited: Vec<[f64; 3]>,
}

impl Outcome {
    pub fn success(&self) -> bool {
        self.solution.is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub duplicity: DuplicityParams,
    /// Stop after this many generated states.
    pub node_budget: u64,
    pub timeout: Option<Duration>,
    pub record_visited: bool,
}

impl SearchConfig {
    pub const DEFAULT_BUDGET: u64 = 5_000_000;

    pub fn new(duplicity: DuplicityParams) -> Self {
        Self {
            duplicity,
            node_budget: Self::DEFAULT_BUDGET,
            timeout: None,
            record_visited: false,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.node_budget = budget;
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

/// Everything a planner needs to know about one query.
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a> {
    pub model: &'a DynamicsModel,
    pub map: &'a GridMap,
    pub field: &'a DistanceField,
    pub start: State,
    pub goal: GoalRegion,
}

impl<'a> Problem<'a> {
    pub fn new(
        model: &'a DynamicsModel,
        map: &'a GridMap,
        field: &'a DistanceField,
        start: State,
        goal: GoalRegion,
    ) -> Self {
        Self {
            model,
            map,
            field,
            start,
            goal,
        }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        self.model
            .check_state(&self.start)
            .map_err(|e| PlanError::InvalidStart(e.to_string()))?;
        if !self.map.state_valid(&self.start) {
            return Err(PlanError::InvalidStart(format!(
                "{:?} is outside the map or in collision",
                self.start.position()
            )));
        }
        if !(self.goal.radius > 0.0) {
            return Err(PlanError::InvalidGoal(format!(
                "radius {} must be positive",
                self.goal.radius
            )));
        }
        if !self.map.position_free(self.goal.center) {
            return Err(PlanError::InvalidGoal(format!(
                "center {:?} is not free",
                self.goal.center
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchNode {
    pub state: State,
    pub g: f64,
    pub eps: f64,
    pub h: f64,
    pub f: f64,
    pub parent: Option<u32>,
    /// Index into the model's control set of the primitive from the parent.
    pub control: Option<u8>,
    /// Valid successor ratio, known once the node has been expanded.
    pub gamma: Option<f64>,
}

/// Priority of an OPEN entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpenKey {
    pub f: f64,
    pub g: f64,
    pub seq: u64,
}

/// Smaller `f` first, then larger `g`, then earlier insertion.
pub fn tie_break(a: &OpenKey, b: &OpenKey) -> Ordering {
    a.f.total_cmp(&b.f)
        .then_with(|| b.g.total_cmp(&a.g))
        .then_with(|| a.seq.cmp(&b.seq))
}

#[derive(Debug)]
struct HeapEntry {
    key: OpenKey,
    node: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        tie_break(&other.key, &self.key)
    }
}

/// Walks parent links from `goal` back to the root and rebuilds the
/// primitives, checking that consecutive states link up.
pub fn reconstruct(
    model: &DynamicsModel,
    nodes: &[SearchNode],
    goal: usize,
) -> Result<(Vec<State>, Vec<MotionPrimitive>, f64), PlanError> {
    let mut chain = vec![goal];
    let mut at = goal;
    while let Some(p) = nodes.get(at).ok_or(PlanError::BrokenChain(at))?.parent {
        at = p as usize;
        if chain.len() > nodes.len() {
            return Err(PlanError::BrokenChain(at));
        }
        chain.push(at);
    }
    chain.reverse();
    let path: Vec<State> = chain.iter().map(|&i| nodes[i].state).collect();
    let mut prims = Vec::with_capacity(chain.len().saturating_sub(1));
    for w in chain.windows(2) {
        let (from, to) = (&nodes[w[0]], &nodes[w[1]]);
        let idx = to.control.ok_or(PlanError::BrokenChain(w[1]))? as usize;
        let u = model
            .control_set()
            .get(idx)
            .ok_or(PlanError::BrokenChain(w[1]))?;
        let prim = model.primitive(&from.state, u);
        if !links(prim.endpoint(), &to.state) {
            return Err(PlanError::BrokenChain(w[1]));
        }
        prims.push(prim);
    }
    let cost = prims.iter().map(|p| p.cost).sum();
    Ok((path, prims, cost))
}

fn links(a: &State, b: &State) -> bool {
    let (pa, pb) = (a.position(), b.position());
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-9;
    (0..3).all(|k| close(pa[k], pb[k]))
        && crate::geometry::angdiff(a.theta(), b.theta()) <= 1e-9
        && match (a.speed(), b.speed()) {
            (Some(x), Some(y)) => close(x, y),
            (None, None) => true,
            _ => false,
        }
}

/// Runs the search. `source` is required by the subtree modes and ignored
/// otherwise.
pub fn plan(
    problem: &Problem<'_>,
    config: &SearchConfig,
    source: Option<OverlapSource<'_>>,
) -> Result<Outcome, PlanError> {
    problem.validate()?;
    let started = Instant::now();
    let Problem {
        model,
        map,
        field,
        start,
        goal,
    } = *problem;
    let mut engine = DuplicityEngine::new(config.duplicity, source)?;
    let dparams = config.duplicity;

    let mut stats = SearchStats {
        eps_min: f64::INFINITY,
        eps_max: f64::NEG_INFINITY,
        ..SearchStats::default()
    };
    let mut visited = Vec::new();
    let mut nodes: Vec<SearchNode> = Vec::new();
    let mut index: HashMap<[u64; 5], u32> = HashMap::new();
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;

    // the start has no parent, so its own successor ratio stands in
    let start_gamma = map.valid_successor_ratio(model, &start);
    let start_dup = engine.duplicity(&start, start_gamma);
    let start_eps = engine.inflation(start_dup);
    let h0 = field.h(&start);
    nodes.push(SearchNode {
        state: start,
        g: 0.0,
        eps: start_eps,
        h: h0,
        f: start_eps * h0,
        parent: None,
        control: None,
        gamma: None,
    });
    index.insert(start.bits(), 0);
    engine.insert(start, start_gamma);
    stats.eps_min = start_eps;
    stats.eps_max = start_eps;
    open.push(HeapEntry {
        key: OpenKey {
            f: nodes[0].f,
            g: 0.0,
            seq,
        },
        node: 0,
    });
    seq += 1;
    stats.pushed = 1;
    stats.unique_states = 1;

    let mut fresh: Vec<u32> = Vec::with_capacity(model.branching());
    let mut status = Termination::Exhausted;
    let mut goal_node = None;

    while let Some(HeapEntry { key, node }) = open.pop() {
        let id = node as usize;
        if key.g > nodes[id].g {
            continue;
        }
        let s = nodes[id].state;
        if goal.contains(&s) {
            goal_node = Some(id);
            status = Termination::Solved;
            break;
        }
        if stats.generated >= config.node_budget {
            status = Termination::Budget;
            break;
        }
        if let Some(limit) = config.timeout {
            if stats.expansions % 64 == 0 && started.elapsed() >= limit {
                status = Termination::Timeout;
                break;
            }
        }
        stats.expansions += 1;
        if config.record_visited {
            visited.push(s.position());
        }

        let prims: Vec<(usize, MotionPrimitive)> = model
            .control_set()
            .iter()
            .enumerate()
            .map(|(k, u)| (k, model.primitive(&s, u)))
            .collect();
        let valid: Vec<bool> = prims.iter().map(|(_, p)| map.edge_valid(p)).collect();
        let n_valid = valid.iter().filter(|v| **v).count();
        let gamma = n_valid as f64 / model.branching() as f64;
        nodes[id].gamma = Some(gamma);
        stats.rejected += (prims.len() - n_valid) as u64;

        let g_s = nodes[id].g;
        fresh.clear();
        for ((k, prim), ok) in prims.into_iter().zip(valid) {
            if !ok {
                continue;
            }
            stats.generated += 1;
            let child = *prim.endpoint();
            let g_new = g_s + prim.cost;
            let cid = match index.entry(child.bits()) {
                MapEntry::Occupied(e) => *e.get(),
                MapEntry::Vacant(e) => {
                    let dup = engine.duplicity(&child, gamma);
                    let eps = crate::duplicity::inflation(dup, &dparams);
                    stats.eps_min = stats.eps_min.min(eps);
                    stats.eps_max = stats.eps_max.max(eps);
                    let cid = nodes.len() as u32;
                    nodes.push(SearchNode {
                        state: child,
                        g: f64::INFINITY,
                        eps,
                        h: field.h(&child),
                        f: f64::INFINITY,
                        parent: None,
                        control: None,
                        gamma: None,
                    });
                    e.insert(cid);
                    fresh.push(cid);
                    cid
                }
            };
            let n = &mut nodes[cid as usize];
            if n.g > g_new {
                n.g = g_new;
                n.f = g_new + n.eps * n.h;
                n.parent = Some(node);
                n.control = Some(k as u8);
                open.push(HeapEntry {
                    key: OpenKey {
                        f: n.f,
                        g: n.g,
                        seq,
                    },
                    node: cid,
                });
                seq += 1;
                stats.pushed += 1;
            } else {
                stats.not_improved += 1;
            }
        }
        // siblings join U only after all of them have been scored
        for &cid in &fresh {
            engine.insert(nodes[cid as usize].state, gamma);
        }
        stats.unique_states += fresh.len() as u64;
    }

    stats.subtree_expansions = engine.subtree_states();
    stats.wall_time = started.elapsed().as_secs_f64();
    let solution = match goal_node {
        Some(gid) => {
            stats.success = true;
            let (path, primitives, cost) = reconstruct(model, &nodes, gid)?;
            Some(Solution {
                path,
                primitives,
                cost,
                stats: stats.clone(),
            })
        }
        None => None,
    };
    Ok(Outcome {
        status,
        solution,
        stats,
        visited,
    })
}
