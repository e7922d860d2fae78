//! Subtree overlap between two states and its offline lookup table.
//!
//! The subtree of a state holds every state reachable by one to `H`
//! primitives, grouped by depth and ignoring obstacles. The overlap of `s`
//! with `s2` is the fraction of subtree(s) states that have a same-depth
//! state of subtree(s2) closer than `r`. It depends only on the pose of `s2`
//! relative to `s` (plus the UAV speeds), so it can be tabulated once per
//! vehicle on a lattice of relative configurations.
//!
//! Outside a reach bound (twice the distance `H` primitives can cover, plus
//! `r`) two subtrees cannot touch and the overlap is exactly zero; the table
//! only stores lattice points inside both that bound and the query radius.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::TableError;
use crate::geometry::{
    compose, metric, relative_config_with, wrap_angle, Dynamics, DynamicsModel, MetricWeights,
    ModelKind, RelConfig, State,
};

/// States reachable from `root` by exactly `d` primitives, for `d = 1..=H`.
#[derive(Clone, Debug, PartialEq)]
pub struct Subtree {
    pub root: State,
    pub levels: Vec<Vec<State>>,
}

impl Subtree {
    pub fn build(model: &DynamicsModel, root: &State, depth: usize) -> Self {
        assert!(depth >= 1, "subtree depth must be at least 1");
        let mut levels: Vec<Vec<State>> = Vec::with_capacity(depth);
        let first: Vec<State> = model.successor_endpoints(root).collect();
        levels.push(first);
        for d in 1..depth {
            let next: Vec<State> = levels[d - 1]
                .iter()
                .flat_map(|s| model.successor_endpoints(s).collect::<Vec<_>>())
                .collect();
            levels.push(next);
        }
        Self {
            root: *root,
            levels,
        }
    }

    pub fn from_levels(root: State, levels: Vec<Vec<State>>) -> Self {
        Self { root, levels }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How two subtree states are compared against the overlap radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMetric {
    Position,
    Weighted(MetricWeights),
}

/// Number of states of `a` with a same-depth neighbour in `b` closer than `r`.
pub fn overlap_count(a: &Subtree, b: &Subtree, r: f64, m: OverlapMetric) -> usize {
    let mut count = 0;
    for (la, lb) in a.levels.iter().zip(&b.levels) {
        for u in la {
            let hit = match m {
                OverlapMetric::Position => {
                    let p = u.position();
                    let r2 = r * r;
                    lb.iter().any(|v| {
                        let q = v.position();
                        let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
                        d2 < r2
                    })
                }
                OverlapMetric::Weighted(w) => lb.iter().any(|v| metric(u, v, &w) < r),
            };
            if hit {
                count += 1;
            }
        }
    }
    count
}

/// Fraction of `a`'s states that overlap `b` at the same depth.
pub fn overlap_fraction(a: &Subtree, b: &Subtree, r: f64, m: OverlapMetric) -> f64 {
    let total = a.len();
    if total == 0 {
        return 0.0;
    }
    overlap_count(a, b, r, m) as f64 / total as f64
}

/// Lattice steps used to discretise relative configurations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub xy: f64,
    pub z: f64,
    pub heading: f64,
    pub speed: f64,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            xy: 0.25,
            z: 0.25,
            heading: std::f64::consts::PI / 8.0,
            speed: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapParams {
    /// Subtree depth `H`.
    pub depth: usize,
    /// Overlap radius `r`.
    pub overlap_radius: f64,
    /// Query radius `R` of the duplicity neighbourhood.
    pub query_radius: f64,
    pub resolution: Resolution,
    pub metric: OverlapMetric,
}

impl OverlapParams {
    pub fn car_default() -> Self {
        Self {
            depth: 2,
            overlap_radius: 0.3,
            query_radius: 10.0,
            resolution: Resolution::default(),
            metric: OverlapMetric::Position,
        }
    }

    pub fn uav_default() -> Self {
        Self {
            depth: 1,
            overlap_radius: 0.1,
            query_radius: 30.0,
            resolution: Resolution::default(),
            metric: OverlapMetric::Position,
        }
    }

    pub fn validate(&self) -> Result<(), TableError> {
        let bad = |m: &str| Err(TableError::InvalidParams(m.to_string()));
        if self.depth == 0 {
            return bad("depth must be at least 1");
        }
        if !(self.overlap_radius > 0.0) {
            return bad("overlap radius must be positive");
        }
        if !(self.query_radius > self.overlap_radius) {
            return bad("query radius must exceed the overlap radius");
        }
        let r = &self.resolution;
        if !(r.xy > 0.0 && r.z > 0.0 && r.heading > 0.0 && r.speed > 0.0) {
            return bad("resolutions must be positive");
        }
        let bins = (std::f64::consts::TAU / r.heading).round();
        if (bins * r.heading - std::f64::consts::TAU).abs() > 1e-9 || bins < 1.0 {
            return bad("heading resolution must divide 2π");
        }
        Ok(())
    }

    /// Radius within which the overlap test can pass, in position units.
    fn position_radius(&self) -> f64 {
        match self.metric {
            OverlapMetric::Position => self.overlap_radius,
            OverlapMetric::Weighted(w) if w.position > 0.0 => self.overlap_radius / w.position,
            OverlapMetric::Weighted(_) => f64::INFINITY,
        }
    }
}

/// Offsets beyond which two subtrees cannot overlap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reach {
    pub horizontal: f64,
    pub vertical: f64,
}

impl Reach {
    pub fn of(model: &DynamicsModel, params: &OverlapParams) -> Self {
        let h = params.depth as f64;
        let r = params.position_radius();
        Self {
            horizontal: 2.0 * h * model.max_step_length() + r,
            vertical: 2.0 * h * model.max_climb() + r,
        }
    }

    /// Single euclidean radius outside of which the overlap is zero.
    pub fn radius(&self) -> f64 {
        self.horizontal.hypot(self.vertical)
    }

    pub fn excludes(&self, offset: [f64; 3]) -> bool {
        offset[0].hypot(offset[1]) >= self.horizontal || offset[2].abs() >= self.vertical
    }
}

/// Overlap of `s` with `s2`, building both subtrees.
pub fn subtree_overlap(
    model: &DynamicsModel,
    s: &State,
    s2: &State,
    params: &OverlapParams,
) -> Result<f64, crate::error::GeometryError> {
    model.check_state(s)?;
    model.check_state(s2)?;
    let a = Subtree::build(model, s, params.depth);
    let b = Subtree::build(model, s2, params.depth);
    Ok(overlap_fraction(&a, &b, params.overlap_radius, params.metric))
}

const ABSENT: u16 = u16::MAX;
const MAGIC: &[u8; 4] = b"SOVT";
const VERSION: u16 = 1;
const KEY_BITS: u32 = 10;
const KEY_LIMIT: i32 = (1 << (KEY_BITS - 1)) - 1;

/// Integer lattice key of a relative configuration. Car keys use the first
/// three slots `(ix, iy, iθ)`; UAV keys use `(ix, iy, iz, iθ, iv, iv2)`.
pub type TableKey = [i32; 6];

#[derive(Clone, Debug, PartialEq)]
struct Layout {
    kind: ModelKind,
    /// Inclusive lower bound and extent of each key slot.
    lo: [i32; 6],
    extent: [usize; 6],
    heading_bins: i32,
    speed_min: f64,
    speed_bins: i32,
}

impl Layout {
    fn dims(&self) -> usize {
        match self.kind {
            ModelKind::Car3 => 3,
            ModelKind::Uav5 => 6,
        }
    }

    fn index(&self, key: &TableKey) -> Option<usize> {
        let mut idx = 0usize;
        for k in 0..self.dims() {
            let off = key[k] - self.lo[k];
            if off < 0 || off as usize >= self.extent[k] {
                return None;
            }
            idx = idx * self.extent[k] + off as usize;
        }
        Some(idx)
    }

    fn key_of(&self, mut idx: usize) -> TableKey {
        let mut key = [0; 6];
        for k in (0..self.dims()).rev() {
            key[k] = (idx % self.extent[k]) as i32 + self.lo[k];
            idx /= self.extent[k];
        }
        key
    }

    fn size(&self) -> usize {
        self.extent[..self.dims()].iter().product()
    }
}

/// Overlap values on a lattice of relative configurations, stored as
/// overlap counts so lookups reproduce the online fraction exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapTable {
    dynamics: Dynamics,
    primitive_duration: f64,
    substep: f64,
    params: OverlapParams,
    reach: Reach,
    subtree_size: u32,
    layout: Layout,
    counts: Vec<u16>,
    stored: usize,
}

impl OverlapTable {
    /// Evaluates the overlap for every stored lattice key.
    pub fn precompute(model: &DynamicsModel, params: &OverlapParams) -> Result<Self, TableError> {
        params.validate()?;
        let layout = Self::layout(model, params)?;
        let reach = Reach::of(model, params);
        let res = params.resolution;
        let origins: Vec<(State, Subtree)> = match model.speed_bounds() {
            None => vec![State::car(0.0, 0.0, 0.0)],
            Some(_) => (0..layout.speed_bins)
                .map(|i| State::uav(0.0, 0.0, 0.0, 0.0, layout.speed_min + i as f64 * res.speed))
                .collect(),
        }
        .into_iter()
        .map(|o| {
            let t = Subtree::build(model, &o, params.depth);
            (o, t)
        })
        .collect();
        let subtree_size = origins[0].1.len();
        if subtree_size >= ABSENT as usize {
            return Err(TableError::InvalidParams(format!(
                "subtree of {subtree_size} states is too large to tabulate"
            )));
        }
        let size = layout.size();
        let counts: Vec<u16> = (0..size)
            .into_par_iter()
            .map(|idx| {
                let key = layout.key_of(idx);
                let rel = Self::key_config(&layout, &res, &key);
                if !Self::stores(params, &reach, &rel) {
                    return ABSENT;
                }
                let (origin, tree) = match layout.kind {
                    ModelKind::Car3 => &origins[0],
                    ModelKind::Uav5 => &origins[key[4] as usize],
                };
                let other = compose(origin, &rel).expect("kinds agree by construction");
                let other_tree = Subtree::build(model, &other, params.depth);
                overlap_count(tree, &other_tree, params.overlap_radius, params.metric) as u16
            })
            .collect();
        let stored = counts.iter().filter(|c| **c != ABSENT).count();
        Ok(Self {
            dynamics: *model.dynamics(),
            primitive_duration: model.primitive_duration(),
            substep: model.substep(),
            params: *params,
            reach,
            subtree_size: subtree_size as u32,
            layout,
            counts,
            stored,
        })
    }

    fn layout(model: &DynamicsModel, params: &OverlapParams) -> Result<Layout, TableError> {
        let reach = Reach::of(model, params);
        let res = params.resolution;
        let heading_bins = (std::f64::consts::TAU / res.heading).round() as i32;
        let nxy = (params.query_radius.min(reach.horizontal) / res.xy).floor() as i32;
        let too_big = |n: i32| n > KEY_LIMIT;
        if too_big(nxy) || heading_bins > KEY_LIMIT {
            return Err(TableError::InvalidParams(
                "lattice too fine for the packed key format".into(),
            ));
        }
        Ok(match model.speed_bounds() {
            None => Layout {
                kind: ModelKind::Car3,
                lo: [-nxy, -nxy, 0, 0, 0, 0],
                extent: [
                    (2 * nxy + 1) as usize,
                    (2 * nxy + 1) as usize,
                    heading_bins as usize,
                    1,
                    1,
                    1,
                ],
                heading_bins,
                speed_min: 0.0,
                speed_bins: 1,
            },
            Some((v_min, v_max)) => {
                let nz = (params.query_radius.min(reach.vertical) / res.z).floor() as i32;
                let speed_bins = ((v_max - v_min) / res.speed + 1e-9).floor() as i32 + 1;
                if too_big(nz) || speed_bins > KEY_LIMIT {
                    return Err(TableError::InvalidParams(
                        "lattice too fine for the packed key format".into(),
                    ));
                }
                Layout {
                    kind: ModelKind::Uav5,
                    lo: [-nxy, -nxy, -nz, 0, 0, 0],
                    extent: [
                        (2 * nxy + 1) as usize,
                        (2 * nxy + 1) as usize,
                        (2 * nz + 1) as usize,
                        heading_bins as usize,
                        speed_bins as usize,
                        speed_bins as usize,
                    ],
                    heading_bins,
                    speed_min: v_min,
                    speed_bins,
                }
            }
        })
    }

    fn key_config(layout: &Layout, res: &Resolution, key: &TableKey) -> RelConfig {
        match layout.kind {
            ModelKind::Car3 => RelConfig::car(
                key[0] as f64 * res.xy,
                key[1] as f64 * res.xy,
                key[2] as f64 * res.heading,
            ),
            ModelKind::Uav5 => RelConfig::uav(
                key[0] as f64 * res.xy,
                key[1] as f64 * res.xy,
                key[2] as f64 * res.z,
                key[3] as f64 * res.heading,
                layout.speed_min + key[4] as f64 * res.speed,
                layout.speed_min + key[5] as f64 * res.speed,
            ),
        }
    }

    fn stores(params: &OverlapParams, reach: &Reach, rel: &RelConfig) -> bool {
        let o = rel.offset();
        let norm = (o[0] * o[0] + o[1] * o[1] + o[2] * o[2]).sqrt();
        norm <= params.query_radius
            && o[0].hypot(o[1]) <= reach.horizontal
            && o[2].abs() <= reach.vertical
    }

    pub fn kind(&self) -> ModelKind {
        self.layout.kind
    }

    pub fn params(&self) -> &OverlapParams {
        &self.params
    }

    pub fn reach(&self) -> Reach {
        self.reach
    }

    pub fn subtree_size(&self) -> usize {
        self.subtree_size as usize
    }

    /// Number of stored keys.
    pub fn len(&self) -> usize {
        self.stored
    }

    pub fn is_empty(&self) -> bool {
        self.stored == 0
    }

    /// True if the table was built for this dynamics model.
    pub fn matches_model(&self, model: &DynamicsModel) -> bool {
        self.dynamics == *model.dynamics()
            && self.primitive_duration == model.primitive_duration()
            && self.substep == model.substep()
    }

    /// Stored `(key, η)` pairs in key order.
    pub fn entries(&self) -> impl Iterator<Item = (TableKey, f64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != ABSENT)
            .map(|(i, c)| (self.layout.key_of(i), *c as f64 / self.subtree_size as f64))
    }

    /// Rounded lattice key of a relative configuration.
    pub fn key_for(&self, rel: &RelConfig) -> TableKey {
        let res = &self.params.resolution;
        let l = &self.layout;
        let heading = |dt: f64| -> i32 {
            let b = (wrap_angle(dt) / res.heading).round() as i32;
            b.rem_euclid(l.heading_bins)
        };
        let speed = |v: f64| -> i32 {
            (((v - l.speed_min) / res.speed).round() as i32).clamp(0, l.speed_bins - 1)
        };
        let o = rel.offset();
        let ix = (o[0] / res.xy).round() as i32;
        let iy = (o[1] / res.xy).round() as i32;
        match rel.speeds() {
            None => [ix, iy, heading(rel.dtheta()), 0, 0, 0],
            Some((va, vb)) => [
                ix,
                iy,
                (o[2] / res.z).round() as i32,
                heading(rel.dtheta()),
                speed(va),
                speed(vb),
            ],
        }
    }

    /// Stored value of a key, `None` if the key is not in the table.
    pub fn get(&self, key: &TableKey) -> Option<f64> {
        self.layout
            .index(key)
            .map(|i| self.counts[i])
            .filter(|c| *c != ABSENT)
            .map(|c| c as f64 / self.subtree_size as f64)
    }

    pub fn lookup(&self, s: &State, s2: &State) -> f64 {
        let (sin, cos) = s.theta().sin_cos();
        self.lookup_with(s, sin, cos, s2)
    }

    /// [`lookup`](Self::lookup) with the heading trigonometry of `s` supplied.
    pub fn lookup_with(&self, s: &State, sin: f64, cos: f64, s2: &State) -> f64 {
        let rel = relative_config_with(s, s2, sin, cos);
        self.lookup_rel(&rel)
    }

    pub fn lookup_rel(&self, rel: &RelConfig) -> f64 {
        let key = self.key_for(rel);
        if let Some(v) = self.get(&key) {
            return v;
        }
        let res = &self.params.resolution;
        let lattice = Self::key_config(&self.layout, res, &key).offset();
        if self.reach.excludes(lattice) {
            return 0.0;
        }
        // Rounded past the query radius: walk inward to the nearest stored key.
        let o = rel.offset();
        let norm = (o[0] * o[0] + o[1] * o[1] + o[2] * o[2]).sqrt();
        let step = res.xy.min(res.z);
        let mut radius = self.params.query_radius.min(norm);
        while radius > 0.0 {
            let shrunk = shrink(rel, radius / norm);
            if let Some(v) = self.get(&self.key_for(&shrunk)) {
                return v;
            }
            radius -= 0.5 * step;
        }
        let mut origin = self.key_for(rel);
        origin[0] = 0;
        origin[1] = 0;
        if self.layout.kind == ModelKind::Uav5 {
            origin[2] = 0;
        }
        self.get(&origin).unwrap_or(0.0)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), TableError> {
        let mut buf = Vec::with_capacity(128 + self.stored * 12);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.push(self.layout.kind.tag());
        let (metric_tag, weights) = match self.params.metric {
            OverlapMetric::Position => (0u8, MetricWeights::position_only()),
            OverlapMetric::Weighted(w) => (1u8, w),
        };
        buf.push(metric_tag);
        let dyn_params: Vec<f64> = match self.dynamics {
            Dynamics::Car(p) => vec![p.speed, p.omega_max],
            Dynamics::Uav(p) => vec![p.v_min, p.v_max, p.a_max, p.vz_max, p.omega_max],
        };
        let res = self.params.resolution;
        let floats = dyn_params.into_iter().chain([
            self.primitive_duration,
            self.substep,
            self.params.overlap_radius,
            self.params.query_radius,
            res.xy,
            res.z,
            res.heading,
            res.speed,
            weights.position,
            weights.heading,
            weights.speed,
        ]);
        for f in floats {
            buf.extend_from_slice(&f.to_le_bytes());
        }
        buf.extend_from_slice(&(self.params.depth as u32).to_le_bytes());
        buf.extend_from_slice(&self.subtree_size.to_le_bytes());
        buf.extend_from_slice(&(self.stored as u64).to_le_bytes());
        let n = self.subtree_size as f64;
        for (i, c) in self.counts.iter().enumerate() {
            if *c == ABSENT {
                continue;
            }
            let key = self.layout.key_of(i);
            buf.extend_from_slice(&pack_key(&key).to_le_bytes());
            let eta = (*c as f64 / n) as f32;
            buf.extend_from_slice(&eta.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, TableError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut cur = Cursor { bytes: &bytes, at: 0 };
        if cur.take(4)? != MAGIC {
            return Err(TableError::Format("bad magic".into()));
        }
        let version = u16::from_le_bytes(cur.array()?);
        if version != VERSION {
            return Err(TableError::Format(format!("unsupported version {version}")));
        }
        let tag = cur.array::<1>()?[0];
        let kind = ModelKind::from_tag(tag)
            .ok_or_else(|| TableError::Format(format!("unknown model tag {tag}")))?;
        let metric_tag = cur.array::<1>()?[0];
        let dynamics = match kind {
            ModelKind::Car3 => Dynamics::Car(crate::geometry::CarParams {
                speed: cur.f64()?,
                omega_max: cur.f64()?,
            }),
            ModelKind::Uav5 => Dynamics::Uav(crate::geometry::UavParams {
                v_min: cur.f64()?,
                v_max: cur.f64()?,
                a_max: cur.f64()?,
                vz_max: cur.f64()?,
                omega_max: cur.f64()?,
            }),
        };
        let primitive_duration = cur.f64()?;
        let substep = cur.f64()?;
        let overlap_radius = cur.f64()?;
        let query_radius = cur.f64()?;
        let resolution = Resolution {
            xy: cur.f64()?,
            z: cur.f64()?,
            heading: cur.f64()?,
            speed: cur.f64()?,
        };
        let weights = MetricWeights {
            position: cur.f64()?,
            heading: cur.f64()?,
            speed: cur.f64()?,
        };
        let metric = match metric_tag {
            0 => OverlapMetric::Position,
            1 => OverlapMetric::Weighted(weights),
            t => return Err(TableError::Format(format!("unknown overlap metric {t}"))),
        };
        let depth = u32::from_le_bytes(cur.array()?) as usize;
        let subtree_size = u32::from_le_bytes(cur.array()?);
        let stored = u64::from_le_bytes(cur.array()?) as usize;
        let params = OverlapParams {
            depth,
            overlap_radius,
            query_radius,
            resolution,
            metric,
        };
        params.validate()?;
        if !(primitive_duration > 0.0 && substep > 0.0) {
            return Err(TableError::Format("invalid primitive timing".into()));
        }
        let model = DynamicsModel::from_dynamics(dynamics, primitive_duration, substep);
        let expected_size = (1..=depth as u32)
            .map(|d| (model.branching() as u32).pow(d))
            .sum::<u32>();
        if subtree_size != expected_size || subtree_size == 0 {
            return Err(TableError::Format(format!(
                "subtree size {subtree_size} does not match the model ({expected_size})"
            )));
        }
        let layout = Self::layout(&model, &params)?;
        let reach = Reach::of(&model, &params);
        let mut counts = vec![ABSENT; layout.size()];
        let n = subtree_size as f64;
        for _ in 0..stored {
            let key = unpack_key(u64::from_le_bytes(cur.array()?));
            let eta = f32::from_le_bytes(cur.array()?);
            let idx = layout
                .index(&key)
                .ok_or_else(|| TableError::Format(format!("key {key:?} outside the lattice")))?;
            if !(0.0..=1.0).contains(&eta) {
                return Err(TableError::Format(format!("overlap {eta} outside [0, 1]")));
            }
            let c = (eta as f64 * n).round();
            if ((eta as f64) - (c / n) as f32 as f64).abs() > 0.0 {
                return Err(TableError::Format(format!(
                    "overlap {eta} is not a multiple of 1/{subtree_size}"
                )));
            }
            if counts[idx] != ABSENT {
                return Err(TableError::Format(format!("duplicate key {key:?}")));
            }
            counts[idx] = c as u16;
        }
        if cur.at != bytes.len() {
            return Err(TableError::Format("trailing bytes".into()));
        }
        let expected = (0..layout.size())
            .filter(|&i| {
                let rel = Self::key_config(&layout, &resolution, &layout.key_of(i));
                Self::stores(&params, &reach, &rel)
            })
            .count();
        if expected != stored {
            return Err(TableError::Format(format!(
                "expected {expected} entries, found {stored}"
            )));
        }
        Ok(Self {
            dynamics,
            primitive_duration,
            substep,
            params,
            reach,
            subtree_size,
            layout,
            counts,
            stored,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), TableError> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, TableError> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

fn shrink(rel: &RelConfig, f: f64) -> RelConfig {
    let o = rel.offset();
    match rel.speeds() {
        None => RelConfig::car(o[0] * f, o[1] * f, rel.dtheta()),
        Some((a, b)) => RelConfig::uav(o[0] * f, o[1] * f, o[2] * f, rel.dtheta(), a, b),
    }
}

/// Packs six signed key slots into 10-bit two's-complement fields.
pub fn pack_key(key: &TableKey) -> u64 {
    let mask = (1u64 << KEY_BITS) - 1;
    key.iter()
        .enumerate()
        .fold(0u64, |acc, (i, k)| acc | (((*k as i64 as u64) & mask) << (i as u32 * KEY_BITS)))
}

pub fn unpack_key(packed: u64) -> TableKey {
    let mask = (1u64 << KEY_BITS) - 1;
    let mut key = [0; 6];
    for (i, slot) in key.iter_mut().enumerate() {
        let raw = ((packed >> (i as u32 * KEY_BITS)) & mask) as i64;
        let sign = 1i64 << (KEY_BITS - 1);
        *slot = ((raw ^ sign) - sign) as i32;
    }
    key
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TableError> {
        if self.at + n > self.bytes.len() {
            return Err(TableError::Format("unexpected end of file".into()));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], TableError> {
        let mut a = [0u8; N];
        a.copy_from_slice(self.take(N)?);
        Ok(a)
    }

    fn f64(&mut self) -> Result<f64, TableError> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}
