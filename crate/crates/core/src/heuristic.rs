//! Breadth-first distance field over the position cells of a grid.

use std::collections::VecDeque;

use crate::error::HeuristicError;
use crate::geometry::State;
use crate::world::GridMap;

/// Hop count from every free cell to the goal cell, scaled by the cell size.
/// Diagonal hops are charged one cell, so values never exceed the shortest
/// euclidean path length between cell centres.
#[derive(Clone, Debug)]
pub struct DistanceField {
    width: usize,
    height: usize,
    depth: usize,
    cell_size: f64,
    goal_cell: usize,
    values: Vec<f64>,
}

impl DistanceField {
    /// 8-connected flood for 2D maps, 26-connected for voxel maps.
    pub fn build(map: &GridMap, goal: [f64; 3]) -> Result<Self, HeuristicError> {
        let goal_cell = map
            .cell_index_of(goal)
            .filter(|&i| !map.blocked_at(i))
            .ok_or(HeuristicError::InvalidGoal(goal))?;
        let (w, h, d) = (map.width(), map.height(), map.depth());
        let mut hops = vec![u32::MAX; map.len()];
        hops[goal_cell] = 0;
        let mut queue = VecDeque::from([goal_cell]);
        let dz_range: &[i64] = if d > 1 { &[-1, 0, 1] } else { &[0] };
        while let Some(cur) = queue.pop_front() {
            let (x, y, z) = map.coords(cur);
            let next = hops[cur] + 1;
            for &dz in dz_range {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 && dz == 0 {
                            continue;
                        }
                        let (nx, ny, nz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                        if nx < 0
                            || ny < 0
                            || nz < 0
                            || nx >= w as i64
                            || ny >= h as i64
                            || nz >= d as i64
                        {
                            continue;
                        }
                        let ni = map.index(nx as usize, ny as usize, nz as usize);
                        if map.blocked_at(ni) || hops[ni] != u32::MAX {
                            continue;
                        }
                        hops[ni] = next;
                        queue.push_back(ni);
                    }
                }
            }
        }
        let cs = map.cell_size();
        let values = hops
            .into_iter()
            .map(|n| {
                if n == u32::MAX {
                    f64::INFINITY
                } else {
                    n as f64 * cs
                }
            })
            .collect();
        Ok(Self {
            width: w,
            height: h,
            depth: d,
            cell_size: cs,
            goal_cell,
            values,
        })
    }

    pub fn goal_cell(&self) -> usize {
        self.goal_cell
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at_cell(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[x + self.width * (y + self.height * z)]
    }

    pub fn value_at(&self, p: [f64; 3]) -> f64 {
        let cs = self.cell_size;
        let fx = (p[0] / cs).floor();
        let fy = (p[1] / cs).floor();
        let fz = if self.depth == 1 { 0.0 } else { (p[2] / cs).floor() };
        if !(fx >= 0.0 && fy >= 0.0 && fz >= 0.0) {
            return f64::INFINITY;
        }
        let (x, y, z) = (fx as usize, fy as usize, fz as usize);
        if x >= self.width || y >= self.height || z >= self.depth {
            return f64::INFINITY;
        }
        self.value_at_cell(x, y, z)
    }

    /// Heuristic of a state: the field value of the cell holding its position.
    pub fn h(&self, s: &State) -> f64 {
        self.value_at(s.position())
    }
}
