//! Duplicity of a new state with respect to the states already seen, and
//! the heuristic inflation derived from it.
//!
//! All duplicity values are clamped to `[0, 1]`, so the inflation
//! `max(ε_max · dup, ε₀)` always lies in `[ε₀, ε_max]`.
//!
//! Set queries visit seen states nearest-first by position and stop as soon
//! as no farther state can beat the best value found so far. The bound uses
//! `w_pos · d_pos ≤ d` and the fact that the overlap is zero beyond the
//! subtree reach, so the result equals the maximum over the whole
//! neighbourhood.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::geometry::{metric, DynamicsModel, MetricWeights, State};
use crate::kdtree::KdTree;
use crate::overlap::{overlap_fraction, OverlapParams, OverlapTable, Reach, Subtree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplicityMode {
    /// Plain weighted A*: duplicity is always zero.
    None,
    Euclidean,
    SubtreeOnline,
    SubtreeTable,
}

impl DuplicityMode {
    pub fn label(self) -> &'static str {
        match self {
            DuplicityMode::None => "none",
            DuplicityMode::Euclidean => "euclidean",
            DuplicityMode::SubtreeOnline => "subtree_online",
            DuplicityMode::SubtreeTable => "subtree_table",
        }
    }
}

impl std::str::FromStr for DuplicityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "wastar" => Ok(DuplicityMode::None),
            "euclidean" => Ok(DuplicityMode::Euclidean),
            "subtree_online" | "online" => Ok(DuplicityMode::SubtreeOnline),
            "subtree_table" | "table" => Ok(DuplicityMode::SubtreeTable),
            other => Err(format!("unknown duplicity mode `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuplicityParams {
    pub mode: DuplicityMode,
    /// Distance normalisation and neighbourhood radius `R`.
    pub radius: f64,
    /// Decision boundary `c`.
    pub boundary: f64,
    pub eps0: f64,
    pub eps_max: f64,
    pub weights: MetricWeights,
}

impl DuplicityParams {
    pub fn new(mode: DuplicityMode) -> Self {
        Self {
            mode,
            radius: 10.0,
            boundary: 0.5,
            eps0: 1.0,
            eps_max: 2.0,
            weights: MetricWeights::default(),
        }
    }

    /// Plain search with a constant inflation of `eps`.
    pub fn uniform(eps: f64) -> Self {
        Self {
            eps0: eps,
            eps_max: eps,
            ..Self::new(DuplicityMode::None)
        }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: String| Err(PlanError::InvalidConfig(m));
        if !(self.eps0 >= 1.0) {
            return bad(format!("eps0 = {} must be at least 1", self.eps0));
        }
        if !(self.eps_max >= self.eps0) {
            return bad(format!(
                "eps_max = {} must not be below eps0 = {}",
                self.eps_max, self.eps0
            ));
        }
        if !(0.0..=1.0).contains(&self.boundary) {
            return bad(format!("c = {} outside [0, 1]", self.boundary));
        }
        if !(self.radius > 0.0) {
            return bad(format!("R = {} must be positive", self.radius));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeenEntry {
    pub state: State,
    pub parent_gamma: f64,
}

/// Every state in OPEN ∪ CLOSED, indexed by position.
#[derive(Clone, Debug, Default)]
pub struct SeenSet {
    tree: KdTree,
    entries: Vec<SeenEntry>,
}

impl SeenSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, state: State, parent_gamma: f64) -> usize {
        let id = self.entries.len();
        self.tree.insert(state.position(), id as u32);
        self.entries.push(SeenEntry {
            state,
            parent_gamma,
        });
        id
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: usize) -> &SeenEntry {
        &self.entries[id]
    }

    /// Ids and position distances of all entries within `radius`.
    pub fn within(&self, s: &State, radius: f64) -> Vec<(usize, f64)> {
        self.tree
            .within(&s.position(), radius)
            .into_iter()
            .map(|(id, d)| (id as usize, d))
            .collect()
    }

    /// Entries by increasing position distance.
    pub fn nearest_first<'a>(&'a self, s: &State) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.tree
            .nearest_iter(&s.position())
            .map(|(id, d)| (id as usize, d))
    }
}

fn clamp01(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Distance-based duplicity: `1 - d_NN / (R · γ)`, clamped.
pub fn dup_euclid(s: &State, seen: &SeenSet, gamma_parent: f64, params: &DuplicityParams) -> f64 {
    if gamma_parent <= 0.0 {
        return 0.0;
    }
    let scale = params.radius * gamma_parent;
    let wp = params.weights.position;
    let mut best = f64::INFINITY;
    for (id, dp) in seen.nearest_first(s) {
        if dp > params.radius || wp * dp >= best.min(scale) {
            break;
        }
        best = best.min(metric(s, &seen.get(id).state, &params.weights));
    }
    if best.is_infinite() {
        return 0.0;
    }
    clamp01(1.0 - best / scale)
}

/// Scaled distance `d · (1 + c - η)`.
pub fn derived_distance(d: f64, eta: f64, boundary: f64) -> f64 {
    d * (1.0 + boundary - eta)
}

/// Pairwise subtree duplicity for a known distance `d`.
pub fn dup_subtree_at(d: f64, eta: f64, gamma_parent: f64, params: &DuplicityParams) -> f64 {
    if gamma_parent <= 0.0 {
        return 0.0;
    }
    clamp01(1.0 - derived_distance(d, eta, params.boundary) / (params.radius * gamma_parent))
}

/// Pairwise subtree duplicity `1 - d(s, s2)·(1 + c - η) / (R · γ)`, clamped.
pub fn dup_subtree_pair(
    s: &State,
    s2: &State,
    eta: f64,
    gamma_parent: f64,
    params: &DuplicityParams,
) -> f64 {
    dup_subtree_at(metric(s, s2, &params.weights), eta, gamma_parent, params)
}

/// Maximum pairwise subtree duplicity over seen states within `R`.
///
/// `eta(id, state)` supplies the overlap of `s` with a seen state; it is only
/// called for states closer than `zero_beyond`, past which the overlap is
/// known to vanish.
pub fn dup_subtree_set(
    s: &State,
    seen: &SeenSet,
    gamma_parent: f64,
    params: &DuplicityParams,
    zero_beyond: f64,
    mut eta: impl FnMut(usize, &State) -> f64,
) -> f64 {
    if gamma_parent <= 0.0 {
        return 0.0;
    }
    let scale = params.radius * gamma_parent;
    let c = params.boundary;
    let wp = params.weights.position;
    let mut best = 0.0f64;
    for (id, dp) in seen.nearest_first(s) {
        if dp > params.radius {
            break;
        }
        let near = dp < zero_beyond;
        let factor = if near { c } else { 1.0 + c };
        let upper = 1.0 - wp * dp * factor / scale;
        if upper <= best {
            break;
        }
        let other = &seen.get(id).state;
        let e = if near { eta(id, other) } else { 0.0 };
        let v = dup_subtree_pair(s, other, e, gamma_parent, params);
        if v > best {
            best = v;
            if best >= 1.0 {
                break;
            }
        }
    }
    best
}

/// `max(ε_max · dup, ε₀)`.
pub fn inflation(dup: f64, params: &DuplicityParams) -> f64 {
    (params.eps_max * dup).max(params.eps0)
}

/// Where overlap values come from in the subtree modes.
#[derive(Clone, Copy, Debug)]
pub enum OverlapSource<'a> {
    Online {
        model: &'a DynamicsModel,
        params: OverlapParams,
    },
    Table(&'a OverlapTable),
}

/// Seen set plus whatever the configured duplicity mode needs, owned by one
/// search.
pub struct DuplicityEngine<'a> {
    params: DuplicityParams,
    source: Option<OverlapSource<'a>>,
    seen: SeenSet,
    subtrees: Vec<Option<Subtree>>,
    pending: HashMap<[u64; 5], Subtree>,
    subtree_states: u64,
    zero_beyond: f64,
}

impl<'a> DuplicityEngine<'a> {
    pub fn new(
        params: DuplicityParams,
        source: Option<OverlapSource<'a>>,
    ) -> Result<Self, PlanError> {
        params.validate()?;
        let zero_beyond = match (params.mode, &source) {
            (DuplicityMode::SubtreeOnline, Some(OverlapSource::Online { model, params })) => {
                Reach::of(model, params).radius()
            }
            (DuplicityMode::SubtreeTable, Some(OverlapSource::Table(t))) => {
                // a state past the reach can still round onto a lattice point inside it
                let res = t.params().resolution;
                let half_diag = 0.5 * (2.0 * res.xy * res.xy + res.z * res.z).sqrt();
                t.reach().radius() + half_diag
            }
            (DuplicityMode::SubtreeOnline, _) => {
                return Err(PlanError::InvalidConfig(
                    "online subtree mode needs a dynamics model and overlap parameters".into(),
                ))
            }
            (DuplicityMode::SubtreeTable, _) => {
                return Err(PlanError::InvalidConfig(
                    "table subtree mode needs an overlap table".into(),
                ))
            }
            _ => f64::INFINITY,
        };
        Ok(Self {
            params,
            source,
            seen: SeenSet::new(),
            subtrees: Vec::new(),
            pending: HashMap::new(),
            subtree_states: 0,
            zero_beyond,
        })
    }

    pub fn params(&self) -> &DuplicityParams {
        &self.params
    }

    pub fn seen(&self) -> &SeenSet {
        &self.seen
    }

    /// States generated only to build subtrees (online mode).
    pub fn subtree_states(&self) -> u64 {
        self.subtree_states
    }

    /// Duplicity of `s` against everything inserted so far.
    pub fn duplicity(&mut self, s: &State, gamma_parent: f64) -> f64 {
        match self.params.mode {
            DuplicityMode::None => 0.0,
            DuplicityMode::Euclidean => dup_euclid(s, &self.seen, gamma_parent, &self.params),
            DuplicityMode::SubtreeTable => {
                let Some(OverlapSource::Table(table)) = self.source else {
                    unreachable!("checked in new")
                };
                let (sin, cos) = s.theta().sin_cos();
                dup_subtree_set(
                    s,
                    &self.seen,
                    gamma_parent,
                    &self.params,
                    self.zero_beyond,
                    |_, other| table.lookup_with(s, sin, cos, other),
                )
            }
            DuplicityMode::SubtreeOnline => {
                let Some(OverlapSource::Online { model, params }) = self.source else {
                    unreachable!("checked in new")
                };
                let mut own: Option<Subtree> = self.pending.remove(&s.bits());
                let Self {
                    seen,
                    subtrees,
                    subtree_states,
                    params: dparams,
                    zero_beyond,
                    ..
                } = self;
                let v = dup_subtree_set(
                    s,
                    seen,
                    gamma_parent,
                    dparams,
                    *zero_beyond,
                    |id, other| {
                        let mine = own.get_or_insert_with(|| {
                            let t = Subtree::build(model, s, params.depth);
                            *subtree_states += t.len() as u64;
                            t
                        });
                        let theirs = subtrees[id].get_or_insert_with(|| {
                            let t = Subtree::build(model, other, params.depth);
                            *subtree_states += t.len() as u64;
                            t
                        });
                        overlap_fraction(mine, theirs, params.overlap_radius, params.metric)
                    },
                );
                if let Some(t) = own {
                    self.pending.insert(s.bits(), t);
                }
                v
            }
        }
    }

    pub fn inflation(&self, dup: f64) -> f64 {
        inflation(dup, &self.params)
    }

    pub fn insert(&mut self, s: State, parent_gamma: f64) -> usize {
        let id = self.seen.insert(s, parent_gamma);
        let cached = self.pending.remove(&s.bits());
        self.subtrees.push(cached);
        id
    }
}
