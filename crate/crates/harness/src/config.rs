//! Experiment configuration, read from a single TOML file.
//!
//! Relative paths inside the file are resolved against the directory that
//! holds it. Anything left out falls back to the per-vehicle defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sdd::duplicity::{DuplicityMode, DuplicityParams};
use sdd::geometry::{CarParams, UavParams};
use sdd::overlap::{OverlapMetric, Resolution};
use sdd::{DynamicsModel, GridMap, MetricWeights, ModelKind, OverlapParams};

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Car3,
    Uav5,
}

impl ModelChoice {
    pub fn kind(self) -> ModelKind {
        match self {
            ModelChoice::Car3 => ModelKind::Car3,
            ModelChoice::Uav5 => ModelKind::Uav5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub model: ModelChoice,
    #[serde(default = "one")]
    pub primitive_duration: f64,
    #[serde(default = "tenth")]
    pub substep: f64,
    /// Car forward speed.
    pub speed: Option<f64>,
    /// Car: defaults to a 3 m minimum turning radius. UAV: defaults to π/4.
    pub omega_max: Option<f64>,
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
    pub a_max: Option<f64>,
    pub vz_max: Option<f64>,
}

impl DynamicsConfig {
    pub fn car() -> Self {
        Self {
            model: ModelChoice::Car3,
            primitive_duration: 1.0,
            substep: 0.1,
            speed: None,
            omega_max: None,
            v_min: None,
            v_max: None,
            a_max: None,
            vz_max: None,
        }
    }

    pub fn uav() -> Self {
        Self {
            model: ModelChoice::Uav5,
            ..Self::car()
        }
    }

    pub fn build(&self) -> Result<DynamicsModel> {
        if !(self.primitive_duration > 0.0 && self.substep > 0.0) {
            return Err(HarnessError::Config(
                "primitive_duration and substep must be positive".into(),
            ));
        }
        let model = match self.model {
            ModelChoice::Car3 => {
                let mut p = CarParams::default();
                if let Some(v) = self.speed {
                    p.speed = v;
                    p.omega_max = v / 3.0;
                }
                if let Some(w) = self.omega_max {
                    p.omega_max = w;
                }
                if !(p.speed > 0.0 && p.omega_max > 0.0) {
                    return Err(HarnessError::Config("car speed and omega_max must be positive".into()));
                }
                DynamicsModel::car(p, self.primitive_duration, self.substep)
            }
            ModelChoice::Uav5 => {
                let d = UavParams::default();
                let p = UavParams {
                    v_min: self.v_min.unwrap_or(d.v_min),
                    v_max: self.v_max.unwrap_or(d.v_max),
                    a_max: self.a_max.unwrap_or(d.a_max),
                    vz_max: self.vz_max.unwrap_or(d.vz_max),
                    omega_max: self.omega_max.unwrap_or(d.omega_max),
                };
                if !(p.v_min >= 0.0 && p.v_max > p.v_min) {
                    return Err(HarnessError::Config("need 0 <= v_min < v_max".into()));
                }
                DynamicsModel::uav(p, self.primitive_duration, self.substep)
            }
        };
        Ok(model)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuplicityConfig {
    /// Defaults to ten single-primitive displacements.
    pub radius: Option<f64>,
    pub boundary: Option<f64>,
    pub eps0: Option<f64>,
    /// 2 for the car, 5 for the UAV unless set.
    pub eps_max: Option<f64>,
    pub weights: Option<MetricWeights>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapConfig {
    pub depth: Option<usize>,
    pub overlap_radius: Option<f64>,
    pub resolution: Option<Resolution>,
    pub metric: Option<OverlapMetric>,
    /// Precomputed table used by the `subtree_table` planner.
    pub table: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Scenarios per map.
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub min_separation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapGenerator {
    Open {
        width: usize,
        height: usize,
    },
    Maze {
        cols: usize,
        rows: usize,
        corridor: usize,
        #[serde(default = "one_usize")]
        wall: usize,
        #[serde(default)]
        seed: u64,
    },
    Blocks {
        width: usize,
        height: usize,
        count: usize,
        max_side: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Maze extruded into a voxel grid with random no-fly boxes.
    VoxelMaze {
        cols: usize,
        rows: usize,
        corridor: usize,
        #[serde(default = "one_usize")]
        wall: usize,
        depth: usize,
        #[serde(default)]
        boxes: usize,
        #[serde(default = "one_usize")]
        max_side: usize,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub name: String,
    /// Moving AI `.map` file, or a voxel file for any other extension.
    pub file: Option<PathBuf>,
    pub generator: Option<MapGenerator>,
    #[serde(default = "one")]
    pub cell_size: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    None,
    Euclidean,
    SubtreeOnline,
    SubtreeTable,
    Rrt,
}

impl PlannerKind {
    pub fn duplicity_mode(self) -> Option<DuplicityMode> {
        match self {
            PlannerKind::None => Some(DuplicityMode::None),
            PlannerKind::Euclidean => Some(DuplicityMode::Euclidean),
            PlannerKind::SubtreeOnline => Some(DuplicityMode::SubtreeOnline),
            PlannerKind::SubtreeTable => Some(DuplicityMode::SubtreeTable),
            PlannerKind::Rrt => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PlannerKind::None => "none",
            PlannerKind::Euclidean => "euclidean",
            PlannerKind::SubtreeOnline => "subtree_online",
            PlannerKind::SubtreeTable => "subtree_table",
            PlannerKind::Rrt => "rrt",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    pub mode: PlannerKind,
    pub label: Option<String>,
    /// Overrides of the shared inflation bounds for this planner only.
    pub eps0: Option<f64>,
    pub eps_max: Option<f64>,
    pub node_budget: Option<u64>,
    pub timeout: Option<f64>,
    #[serde(default = "default_goal_bias")]
    pub goal_bias: f64,
    /// RRT seeds; each one is a separate run per scenario.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

impl PlannerConfig {
    pub fn new(mode: PlannerKind) -> Self {
        Self {
            mode,
            label: None,
            eps0: None,
            eps_max: None,
            node_budget: None,
            timeout: None,
            goal_bias: default_goal_bias(),
            seeds: default_seeds(),
        }
    }

    pub fn name(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.mode.label().to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub depth: Vec<usize>,
    #[serde(default)]
    pub overlap_radius: Vec<f64>,
    #[serde(default)]
    pub boundary: Vec<f64>,
    /// Where tables for each grid point are cached.
    #[serde(default = "default_table_dir")]
    pub table_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub name: String,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Seconds per run.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    #[serde(default = "default_budget")]
    pub node_budget: u64,
    /// Worker threads; 0 picks the number of cores.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub record_visited: bool,
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub duplicity: DuplicityConfig,
    #[serde(default)]
    pub overlap: OverlapConfig,
    pub scenarios: ScenarioConfig,
    pub maps: Vec<MapConfig>,
    pub planners: Vec<PlannerConfig>,
    pub sweep: Option<SweepConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn one() -> f64 {
    1.0
}
fn tenth() -> f64 {
    0.1
}
fn one_usize() -> usize {
    1
}
fn default_goal_bias() -> f64 {
    0.05
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_table_dir() -> PathBuf {
    PathBuf::from("tables")
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_timeout() -> f64 {
    120.0
}
fn default_budget() -> u64 {
    sdd::search::SearchConfig::DEFAULT_BUDGET
}

impl Config {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: Config = toml::from_str(text).map_err(|e| HarnessError::Toml {
            path: base_dir.join("<config>"),
            source: e,
        })?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let mut cfg: Config = toml::from_str(&text).map_err(|e| HarnessError::Toml {
            path: path.to_path_buf(),
            source: e,
        })?;
        cfg.base_dir = base;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.maps.is_empty() {
            return bad("no maps configured".into());
        }
        if self.planners.is_empty() {
            return bad("no planners configured".into());
        }
        if !(self.timeout > 0.0) {
            return bad(format!("timeout {} must be positive", self.timeout));
        }
        for m in &self.maps {
            if m.file.is_some() == m.generator.is_some() {
                return bad(format!("map `{}` needs exactly one of file or generator", m.name));
            }
            if !(m.cell_size > 0.0) {
                return bad(format!("map `{}` has a non-positive cell size", m.name));
            }
        }
        for p in &self.planners {
            if p.mode == PlannerKind::Rrt {
                if p.seeds.is_empty() {
                    return bad(format!("planner `{}` has no seeds", p.name()));
                }
                if !(0.0..=1.0).contains(&p.goal_bias) {
                    return bad(format!("planner `{}`: goal_bias outside [0, 1]", p.name()));
                }
            }
            self.duplicity_params(p).validate()?;
        }
        if let Some(s) = &self.sweep {
            let n = s.depth.len().max(1) * s.overlap_radius.len().max(1) * s.boundary.len().max(1);
            if n == 0 {
                return bad("empty sweep grid".into());
            }
        }
        self.overlap_params().validate()?;
        self.dynamics.build()?;
        Ok(())
    }

    pub fn model(&self) -> Result<DynamicsModel> {
        self.dynamics.build()
    }

    fn is_car(&self) -> bool {
        self.dynamics.model == ModelChoice::Car3
    }

    pub fn query_radius(&self) -> f64 {
        self.duplicity.radius.unwrap_or_else(|| {
            let step = self
                .dynamics
                .build()
                .map(|m| m.max_step_length())
                .unwrap_or(1.0);
            10.0 * step
        })
    }

    /// Shared duplicity settings with the planner's own overrides applied.
    pub fn duplicity_params(&self, planner: &PlannerConfig) -> DuplicityParams {
        let mode = planner.mode.duplicity_mode().unwrap_or(DuplicityMode::None);
        let mut p = DuplicityParams::new(mode);
        p.radius = self.query_radius();
        p.boundary = self.duplicity.boundary.unwrap_or(0.5);
        p.eps0 = planner.eps0.or(self.duplicity.eps0).unwrap_or(1.0);
        p.eps_max = planner
            .eps_max
            .or(self.duplicity.eps_max)
            .unwrap_or(if self.is_car() { 2.0 } else { 5.0 });
        if let Some(w) = self.duplicity.weights {
            p.weights = w;
        }
        p
    }

    pub fn overlap_params(&self) -> OverlapParams {
        let mut p = if self.is_car() {
            OverlapParams::car_default()
        } else {
            OverlapParams::uav_default()
        };
        p.query_radius = self.query_radius();
        if let Some(h) = self.overlap.depth {
            p.depth = h;
        }
        if let Some(r) = self.overlap.overlap_radius {
            p.overlap_radius = r;
        }
        if let Some(res) = self.overlap.resolution {
            p.resolution = res;
        }
        if let Some(m) = self.overlap.metric {
            p.metric = m;
        }
        p
    }

    pub fn load_maps(&self) -> Result<Vec<(String, GridMap)>> {
        self.maps
            .iter()
            .map(|m| Ok((m.name.clone(), load_map(m, &self.base_dir)?)))
            .collect()
    }
}

pub fn load_map(m: &MapConfig, base_dir: &Path) -> Result<GridMap> {
    if let Some(file) = &m.file {
        let path = if file.is_absolute() {
            file.clone()
        } else {
            base_dir.join(file)
        };
        let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
        let parsed = if path.extension().is_some_and(|e| e == "map") {
            GridMap::parse_movingai(&text, m.cell_size)
        } else {
            GridMap::parse_voxel(&text)
        };
        return parsed.map_err(|source| HarnessError::MapParse { path, source });
    }
    let cs = m.cell_size;
    Ok(match m.generator.as_ref().expect("validated") {
        MapGenerator::Open { width, height } => GridMap::new(*width, *height, 1, cs),
        MapGenerator::Maze {
            cols,
            rows,
            corridor,
            wall,
            seed,
        } => GridMap::maze(*cols, *rows, *corridor, *wall, cs, *seed),
        MapGenerator::Blocks {
            width,
            height,
            count,
            max_side,
            seed,
        } => GridMap::random_blocks(*width, *height, *count, *max_side, cs, *seed),
        MapGenerator::VoxelMaze {
            cols,
            rows,
            corridor,
            wall,
            depth,
            boxes,
            max_side,
            seed,
        } => {
            let base = GridMap::maze(*cols, *rows, *corridor, *wall, cs, *seed);
            GridMap::extrude(&base, *depth, *boxes, *max_side, seed.wrapping_add(1))
        }
    })
}
