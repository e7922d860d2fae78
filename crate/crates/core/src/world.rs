//! Occupancy grids, map file formats and collision checking.
//!
//! Two text formats are read and written:
//!
//! * Moving AI `.map` files: `type octile`, `height N`, `width M`, `map`,
//!   then N rows of M characters. `.` and `G` are free; `@`, `O`, `T` and `W`
//!   are blocked.
//! * Voxel files: `voxel W H D cell_size`, then D slabs of H rows of W
//!   characters using the same code. Blank lines between slabs are ignored.
//!
//! Row `j` of a file is cell row `y = j`; slab `k` is `z = k`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ParseError;
use crate::geometry::{DynamicsModel, MotionPrimitive, State};

#[derive(Clone, Debug, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    depth: usize,
    cell_size: f64,
    /// `true` = blocked, indexed `x + width * (y + height * z)`.
    occupancy: Vec<bool>,
}

/// Numerator and denominator of the valid successor ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ValidityReport {
    pub total: usize,
    pub free: usize,
}

impl ValidityReport {
    pub fn ratio(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.free as f64 / self.total as f64
        }
    }
}

impl GridMap {
    pub fn new(width: usize, height: usize, depth: usize, cell_size: f64) -> Self {
        assert!(width > 0 && height > 0 && depth > 0, "empty grid");
        assert!(cell_size > 0.0, "cell size must be positive");
        Self {
            width,
            height,
            depth,
            cell_size,
            occupancy: vec![false; width * height * depth],
        }
    }

    pub fn from_occupancy(
        width: usize,
        height: usize,
        depth: usize,
        cell_size: f64,
        occupancy: Vec<bool>,
    ) -> Self {
        assert_eq!(width * height * depth, occupancy.len());
        assert!(cell_size > 0.0);
        Self {
            width,
            height,
            depth,
            cell_size,
            occupancy,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn is_3d(&self) -> bool {
        self.depth > 1
    }

    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.width * (y + self.height * z)
    }

    pub fn coords(&self, index: usize) -> (usize, usize, usize) {
        let x = index % self.width;
        let rest = index / self.width;
        (x, rest % self.height, rest / self.height)
    }

    pub fn blocked(&self, x: usize, y: usize, z: usize) -> bool {
        self.occupancy[self.index(x, y, z)]
    }

    pub fn blocked_at(&self, index: usize) -> bool {
        self.occupancy[index]
    }

    pub fn set_blocked(&mut self, x: usize, y: usize, z: usize, blocked: bool) {
        let i = self.index(x, y, z);
        self.occupancy[i] = blocked;
    }

    pub fn free_count(&self) -> usize {
        self.occupancy.iter().filter(|b| !**b).count()
    }

    /// Cell containing a metric position, using floor so a point on a shared
    /// face belongs to the cell with the larger index.
    pub fn cell_of(&self, p: [f64; 3]) -> Option<(usize, usize, usize)> {
        let cs = self.cell_size;
        let fx = (p[0] / cs).floor();
        let fy = (p[1] / cs).floor();
        let fz = if self.depth == 1 { 0.0 } else { (p[2] / cs).floor() };
        if !(fx >= 0.0 && fy >= 0.0 && fz >= 0.0) {
            return None;
        }
        let (x, y, z) = (fx as usize, fy as usize, fz as usize);
        if x >= self.width || y >= self.height || z >= self.depth {
            return None;
        }
        Some((x, y, z))
    }

    pub fn cell_index_of(&self, p: [f64; 3]) -> Option<usize> {
        self.cell_of(p).map(|(x, y, z)| self.index(x, y, z))
    }

    /// Metric centre of a cell.
    pub fn cell_center(&self, x: usize, y: usize, z: usize) -> [f64; 3] {
        let cs = self.cell_size;
        let zc = if self.depth == 1 {
            0.0
        } else {
            (z as f64 + 0.5) * cs
        };
        [(x as f64 + 0.5) * cs, (y as f64 + 0.5) * cs, zc]
    }

    pub fn position_free(&self, p: [f64; 3]) -> bool {
        self.cell_index_of(p).is_some_and(|i| !self.occupancy[i])
    }

    pub fn state_valid(&self, s: &State) -> bool {
        self.position_free(s.position())
    }

    /// True iff every sample of the primitive, endpoint included, is valid.
    pub fn edge_valid(&self, prim: &MotionPrimitive) -> bool {
        prim.samples.iter().all(|s| self.state_valid(s))
    }

    pub fn validity_report(&self, model: &DynamicsModel, s: &State) -> ValidityReport {
        let succ = model.successors(s);
        ValidityReport {
            total: succ.len(),
            free: succ.iter().filter(|(_, p)| self.edge_valid(p)).count(),
        }
    }

    /// Fraction of the successors of `s` whose edges are collision free.
    pub fn valid_successor_ratio(&self, model: &DynamicsModel, s: &State) -> f64 {
        self.validity_report(model, s).ratio()
    }

    pub fn parse_movingai(text: &str, cell_size: f64) -> Result<Self, ParseError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
        let mut header = |expect: &str| -> Result<(usize, String), ParseError> {
            match lines.next() {
                Some((n, l)) => {
                    let mut parts = l.split_whitespace();
                    if parts.next() != Some(expect) {
                        return Err(ParseError::new(n, format!("expected `{expect}` header")));
                    }
                    Ok((n, parts.collect::<Vec<_>>().join(" ")))
                }
                None => Err(ParseError::new(0, format!("missing `{expect}` header"))),
            }
        };
        let (n, kind) = header("type")?;
        if kind.is_empty() {
            return Err(ParseError::new(n, "missing map type"));
        }
        let (n, h) = header("height")?;
        let height: usize = h
            .parse()
            .map_err(|_| ParseError::new(n, format!("invalid height `{h}`")))?;
        let (n, w) = header("width")?;
        let width: usize = w
            .parse()
            .map_err(|_| ParseError::new(n, format!("invalid width `{w}`")))?;
        let (n, rest) = header("map")?;
        if !rest.is_empty() {
            return Err(ParseError::new(n, "unexpected text after `map`"));
        }
        if width == 0 || height == 0 {
            return Err(ParseError::new(n, "map dimensions must be positive"));
        }
        if !(cell_size > 0.0) {
            return Err(ParseError::new(0, "cell size must be positive"));
        }
        let mut occupancy = Vec::with_capacity(width * height);
        let mut rows = 0;
        let mut last_line = n;
        for (n, line) in lines {
            last_line = n;
            if rows == height {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(ParseError::new(
                    n,
                    format!("row {} exceeds declared height {height}", rows + 1),
                ));
            }
            parse_row(line, width, n, &mut occupancy)?;
            rows += 1;
        }
        if rows != height {
            return Err(ParseError::new(
                last_line,
                format!("expected {height} rows, found {rows}"),
            ));
        }
        Ok(Self::from_occupancy(width, height, 1, cell_size, occupancy))
    }

    /// Moving AI text for a 2D map (slab `z = 0` for voxel maps).
    pub fn to_movingai(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height + 40);
        let _ = write!(
            out,
            "type octile\nheight {}\nwidth {}\nmap\n",
            self.height, self.width
        );
        self.write_slab(&mut out, 0);
        out
    }

    pub fn parse_voxel(text: &str) -> Result<Self, ParseError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
            .filter(|(_, l)| !l.trim().is_empty());
        let (n, head) = lines
            .next()
            .ok_or_else(|| ParseError::new(0, "empty voxel file"))?;
        let parts: Vec<&str> = head.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "voxel" {
            return Err(ParseError::new(n, "expected `voxel W H D cell_size`"));
        }
        let dim = |s: &str| -> Result<usize, ParseError> {
            s.parse::<usize>()
                .ok()
                .filter(|v| *v > 0)
                .ok_or_else(|| ParseError::new(n, format!("invalid dimension `{s}`")))
        };
        let (width, height, depth) = (dim(parts[1])?, dim(parts[2])?, dim(parts[3])?);
        let cell_size: f64 = parts[4]
            .parse()
            .ok()
            .filter(|c: &f64| *c > 0.0)
            .ok_or_else(|| ParseError::new(n, format!("invalid cell size `{}`", parts[4])))?;
        let mut occupancy = Vec::with_capacity(width * height * depth);
        let expected = height * depth;
        let mut rows = 0;
        let mut last_line = n;
        for (n, line) in lines {
            last_line = n;
            if rows == expected {
                return Err(ParseError::new(n, "more rows than H·D"));
            }
            parse_row(line, width, n, &mut occupancy)?;
            rows += 1;
        }
        if rows != expected {
            return Err(ParseError::new(
                last_line,
                format!("expected {expected} rows, found {rows}"),
            ));
        }
        Ok(Self::from_occupancy(width, height, depth, cell_size, occupancy))
    }

    pub fn to_voxel(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "voxel {} {} {} {}",
            self.width, self.height, self.depth, self.cell_size
        );
        for z in 0..self.depth {
            self.write_slab(&mut out, z);
        }
        out
    }

    fn write_slab(&self, out: &mut String, z: usize) {
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if self.blocked(x, y, z) { '@' } else { '.' });
            }
            out.push('\n');
        }
    }

    /// Perfect maze on a `cols × rows` lattice of open rooms `corridor` cells
    /// wide separated by walls `wall` cells thick (recursive backtracker).
    pub fn maze(
        cols: usize,
        rows: usize,
        corridor: usize,
        wall: usize,
        cell_size: f64,
        seed: u64,
    ) -> Self {
        assert!(cols > 0 && rows > 0 && corridor > 0);
        let pitch = corridor + wall;
        let width = cols * pitch + wall;
        let height = rows * pitch + wall;
        let mut map = Self::new(width, height, 1, cell_size);
        map.occupancy.iter_mut().for_each(|b| *b = true);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut visited = vec![false; cols * rows];
        let mut stack = vec![(0usize, 0usize)];
        visited[0] = true;
        map.carve(wall, wall, corridor, corridor);
        while let Some(&(cx, cy)) = stack.last() {
            let mut options = Vec::with_capacity(4);
            if cx > 0 && !visited[cy * cols + cx - 1] {
                options.push((cx - 1, cy));
            }
            if cx + 1 < cols && !visited[cy * cols + cx + 1] {
                options.push((cx + 1, cy));
            }
            if cy > 0 && !visited[(cy - 1) * cols + cx] {
                options.push((cx, cy - 1));
            }
            if cy + 1 < rows && !visited[(cy + 1) * cols + cx] {
                options.push((cx, cy + 1));
            }
            if options.is_empty() {
                stack.pop();
                continue;
            }
            let (nx, ny) = options[rng.gen_range(0..options.len())];
            visited[ny * cols + nx] = true;
            map.carve(wall + nx * pitch, wall + ny * pitch, corridor, corridor);
            // open the wall between the two rooms
            let (x0, y0) = (cx.min(nx), cy.min(ny));
            if nx != cx {
                map.carve(wall + x0 * pitch + corridor, wall + y0 * pitch, wall, corridor);
            } else {
                map.carve(wall + x0 * pitch, wall + y0 * pitch + corridor, corridor, wall);
            }
            stack.push((nx, ny));
        }
        map
    }

    /// Empty map with a one-cell border and `count` random rectangular blocks.
    pub fn random_blocks(
        width: usize,
        height: usize,
        count: usize,
        max_side: usize,
        cell_size: f64,
        seed: u64,
    ) -> Self {
        let mut map = Self::new(width, height, 1, cell_size);
        for x in 0..width {
            map.set_blocked(x, 0, 0, true);
            map.set_blocked(x, height - 1, 0, true);
        }
        for y in 0..height {
            map.set_blocked(0, y, 0, true);
            map.set_blocked(width - 1, y, 0, true);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..count {
            let w = rng.gen_range(1..=max_side);
            let h = rng.gen_range(1..=max_side);
            let x0 = rng.gen_range(0..width.saturating_sub(w).max(1));
            let y0 = rng.gen_range(0..height.saturating_sub(h).max(1));
            for y in y0..(y0 + h).min(height) {
                for x in x0..(x0 + w).min(width) {
                    map.set_blocked(x, y, 0, true);
                }
            }
        }
        map
    }

    /// Extrudes a 2D map `depth` cells high, closes floor and ceiling, and
    /// adds `boxes` random no-fly boxes.
    pub fn extrude(base: &GridMap, depth: usize, boxes: usize, max_side: usize, seed: u64) -> Self {
        assert!(depth >= 3, "need room between floor and ceiling");
        let (w, h) = (base.width, base.height);
        let mut map = Self::new(w, h, depth, base.cell_size);
        for z in 0..depth {
            for y in 0..h {
                for x in 0..w {
                    let solid = z == 0 || z == depth - 1 || base.blocked(x, y, 0);
                    map.set_blocked(x, y, z, solid);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..boxes {
            let sx = rng.gen_range(1..=max_side);
            let sy = rng.gen_range(1..=max_side);
            let sz = rng.gen_range(1..=max_side.min(depth - 2));
            let x0 = rng.gen_range(0..w.saturating_sub(sx).max(1));
            let y0 = rng.gen_range(0..h.saturating_sub(sy).max(1));
            let z0 = rng.gen_range(1..(depth - 1).saturating_sub(sz).max(2));
            for z in z0..(z0 + sz).min(depth - 1) {
                for y in y0..(y0 + sy).min(h) {
                    for x in x0..(x0 + sx).min(w) {
                        map.set_blocked(x, y, z, true);
                    }
                }
            }
        }
        map
    }

    fn carve(&mut self, x0: usize, y0: usize, w: usize, h: usize) {
        for y in y0..(y0 + h).min(self.height) {
            for x in x0..(x0 + w).min(self.width) {
                self.set_blocked(x, y, 0, false);
            }
        }
    }
}

fn parse_row(line: &str, width: usize, n: usize, out: &mut Vec<bool>) -> Result<(), ParseError> {
    let start = out.len();
    for (col, ch) in line.chars().enumerate() {
        let blocked = match ch {
            '.' | 'G' | 'S' => false,
            '@' | 'O' | 'T' | 'W' => true,
            other => {
                out.truncate(start);
                return Err(ParseError::new(
                    n,
                    format!("unknown terrain `{other}` at column {}", col + 1),
                ));
            }
        };
        out.push(blocked);
    }
    if out.len() - start != width {
        let len = out.len() - start;
        out.truncate(start);
        return Err(ParseError::new(
            n,
            format!("row has {len} cells, expected {width}"),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ControlInput, MotionPrimitive};

    const SMALL: &str = "type octile\nheight 3\nwidth 3\nmap\n...\n.@.\n...\n";

    #[test]
    fn counts_free_cells() {
        let m = GridMap::parse_movingai(SMALL, 1.0).unwrap();
        assert_eq!(m.free_count(), 8);
        assert!(m.blocked(1, 1, 0));
        assert_eq!(m.depth(), 1);
    }

    #[test]
    fn too_many_rows_is_located() {
        let err = GridMap::parse_movingai("type octile\nheight 2\nwidth 3\nmap\n...\n...\n...\n", 1.0)
            .unwrap_err();
        assert_eq!(err.line, 7);
        assert!(err.message.contains("row 3"), "{}", err.message);
    }

    #[test]
    fn movingai_round_trip() {
        let m = GridMap::maze(3, 2, 3, 1, 1.0, 7);
        let back = GridMap::parse_movingai(&m.to_movingai(), 1.0).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn voxel_round_trip() {
        let base = GridMap::maze(2, 2, 3, 1, 0.5, 1);
        let v = GridMap::extrude(&base, 4, 3, 2, 9);
        let back = GridMap::parse_voxel(&v.to_voxel()).unwrap();
        assert_eq!(back, v);
        assert!(GridMap::parse_voxel("voxel 2 1 2 1\n..\n").is_err());
    }

    #[test]
    fn state_validity() {
        let m = GridMap::parse_movingai("type octile\nheight 1\nwidth 2\nmap\n.@\n", 1.0).unwrap();
        assert!(m.state_valid(&State::car(0.5, 0.5, 0.0)));
        assert!(!m.state_valid(&State::car(-0.1, 0.5, 0.0)));
        // on the shared face: belongs to the blocked cell at x = 1
        assert!(!m.state_valid(&State::car(1.0, 0.5, 0.0)));
        assert!(!m.state_valid(&State::car(f64::NAN, 0.5, 0.0)));
        assert!(!m.state_valid(&State::car(0.5, 1.0, 0.0)));
    }

    fn prim(samples: Vec<State>) -> MotionPrimitive {
        MotionPrimitive {
            control: ControlInput::Car { omega: 0.0 },
            duration: 1.0,
            samples,
            cost: 1.0,
        }
    }

    #[test]
    fn edge_validity_uses_every_sample() {
        let m = GridMap::parse_movingai("type octile\nheight 2\nwidth 3\nmap\n...\n.@.\n", 1.0)
            .unwrap();
        let ok = prim(vec![State::car(0.5, 0.5, 0.0), State::car(2.5, 0.5, 0.0)]);
        assert!(m.edge_valid(&ok));
        let bad = prim(vec![
            State::car(0.5, 1.5, 0.0),
            State::car(1.5, 1.5, 0.0),
            State::car(2.5, 1.5, 0.0),
        ]);
        assert!(!m.edge_valid(&bad));
        assert!(m.state_valid(bad.samples.last().unwrap()));
    }

    #[test]
    fn successor_ratio_examples() {
        let model = DynamicsModel::default_car();
        let open = GridMap::new(20, 20, 1, 1.0);
        let s = State::car(10.0, 10.0, 0.3);
        assert_eq!(open.valid_successor_ratio(&model, &s), 1.0);

        let mut boxed = GridMap::new(20, 20, 1, 1.0);
        for y in 0..20 {
            boxed.set_blocked(11, y, 0, true);
        }
        let s = State::car(10.5, 10.5, 0.0);
        assert_eq!(boxed.valid_successor_ratio(&model, &s), 0.0);

        // just below a wall: the two left turns climb into row 6, the rest stay in row 5
        let mut m = GridMap::new(20, 20, 1, 1.0);
        for x in 0..20 {
            m.set_blocked(x, 6, 0, true);
        }
        let s = State::car(5.0, 5.95, 0.0);
        let report = m.validity_report(&model, &s);
        assert_eq!(report, ValidityReport { total: 5, free: 3 });
        assert_eq!(m.valid_successor_ratio(&model, &s), 0.6);
    }

    #[test]
    fn maze_is_connected_and_bordered() {
        let m = GridMap::maze(4, 4, 5, 2, 1.0, 3);
        assert_eq!(m.width(), 4 * 7 + 2);
        assert!(m.blocked(0, 0, 0));
        assert!(!m.blocked(2, 2, 0));
    }
}
