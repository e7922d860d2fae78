//! Incremental bucket kd-tree over 3D points.
//!
//! Leaves hold up to [`BUCKET`] points and split at the median of their
//! widest axis when they overflow, which keeps the tree shallow even when
//! points arrive in spatially coherent order (as search frontiers do).
//! Every node keeps the bounding box of its points so queries can prune
//! with exact box distances.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const BUCKET: usize = 24;

type Point = [f64; 3];

#[derive(Clone, Debug)]
struct Bounds {
    min: Point,
    max: Point,
}

impl Bounds {
    fn empty() -> Self {
        Self {
            min: [f64::INFINITY; 3],
            max: [f64::NEG_INFINITY; 3],
        }
    }

    fn grow(&mut self, p: &Point) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(p[k]);
            self.max[k] = self.max[k].max(p[k]);
        }
    }

    fn dist2(&self, q: &Point) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let e = if q[k] < self.min[k] {
                self.min[k] - q[k]
            } else if q[k] > self.max[k] {
                q[k] - self.max[k]
            } else {
                0.0
            };
            d += e * e;
        }
        d
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf {
        bounds: Bounds,
        points: Vec<(Point, u32)>,
    },
    Split {
        bounds: Bounds,
        axis: usize,
        value: f64,
        left: u32,
        right: u32,
    },
}

impl Node {
    fn bounds(&self) -> &Bounds {
        match self {
            Node::Leaf { bounds, .. } | Node::Split { bounds, .. } => bounds,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KdTree {
    nodes: Vec<Node>,
    len: usize,
}

impl Default for KdTree {
    fn default() -> Self {
        Self::new()
    }
}

fn dist2(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

impl KdTree {
    pub fn new() -> Self {
        Self {
            nodes: vec![Node::Leaf {
                bounds: Bounds::empty(),
                points: Vec::new(),
            }],
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn insert(&mut self, p: Point, id: u32) {
        self.len += 1;
        let mut at = 0usize;
        loop {
            match &mut self.nodes[at] {
                Node::Split {
                    bounds,
                    axis,
                    value,
                    left,
                    right,
                } => {
                    bounds.grow(&p);
                    at = if p[*axis] < *value {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
                Node::Leaf { bounds, points } => {
                    bounds.grow(&p);
                    points.push((p, id));
                    if points.len() > BUCKET {
                        self.split(at);
                    }
                    return;
                }
            }
        }
    }

    fn split(&mut self, at: usize) {
        let (bounds, mut points) = match &mut self.nodes[at] {
            Node::Leaf { bounds, points } => (bounds.clone(), std::mem::take(points)),
            Node::Split { .. } => unreachable!(),
        };
        let axis = (0..3)
            .max_by(|&a, &b| {
                (bounds.max[a] - bounds.min[a]).total_cmp(&(bounds.max[b] - bounds.min[b]))
            })
            .unwrap_or(0);
        if bounds.max[axis] - bounds.min[axis] <= 0.0 {
            // all points coincide; keep a fat leaf
            self.nodes[at] = Node::Leaf { bounds, points };
            return;
        }
        let mid = points.len() / 2;
        points.select_nth_unstable_by(mid, |a, b| a.0[axis].total_cmp(&b.0[axis]));
        let mut value = points[mid].0[axis];
        if value <= bounds.min[axis] {
            // median equals the minimum: split just above it instead
            value = points
                .iter()
                .map(|p| p.0[axis])
                .filter(|v| *v > bounds.min[axis])
                .fold(f64::INFINITY, f64::min);
        }
        let (lo, hi): (Vec<_>, Vec<_>) = points.into_iter().partition(|p| p.0[axis] < value);
        let mut lb = Bounds::empty();
        lo.iter().for_each(|p| lb.grow(&p.0));
        let mut rb = Bounds::empty();
        hi.iter().for_each(|p| rb.grow(&p.0));
        let left = self.nodes.len() as u32;
        self.nodes.push(Node::Leaf {
            bounds: lb,
            points: lo,
        });
        let right = self.nodes.len() as u32;
        self.nodes.push(Node::Leaf {
            bounds: rb,
            points: hi,
        });
        self.nodes[at] = Node::Split {
            bounds,
            axis,
            value,
            left,
            right,
        };
    }

    /// Calls `f(id, distance)` for every point within `radius` of `q`.
    pub fn for_each_within(&self, q: &Point, radius: f64, mut f: impl FnMut(u32, f64)) {
        if self.len == 0 {
            return;
        }
        let r2 = radius * radius;
        let mut stack = vec![0u32];
        while let Some(at) = stack.pop() {
            let node = &self.nodes[at as usize];
            if node.bounds().dist2(q) > r2 {
                continue;
            }
            match node {
                Node::Leaf { points, .. } => {
                    for (p, id) in points {
                        let d2 = dist2(p, q);
                        if d2 <= r2 {
                            f(*id, d2.sqrt());
                        }
                    }
                }
                Node::Split { left, right, .. } => {
                    stack.push(*left);
                    stack.push(*right);
                }
            }
        }
    }

    pub fn within(&self, q: &Point, radius: f64) -> Vec<(u32, f64)> {
        let mut out = Vec::new();
        self.for_each_within(q, radius, |id, d| out.push((id, d)));
        out
    }

    pub fn nearest(&self, q: &Point) -> Option<(u32, f64)> {
        self.nearest_iter(q).next()
    }

    /// Points in non-decreasing distance from `q`, produced lazily.
    pub fn nearest_iter(&self, q: &Point) -> NearestIter<'_> {
        let mut heap = BinaryHeap::new();
        if self.len > 0 {
            heap.push(Entry {
                d2: self.nodes[0].bounds().dist2(q),
                item: Item::Node(0),
            });
        }
        NearestIter {
            tree: self,
            q: *q,
            heap,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Item {
    Node(u32),
    Point(u32),
}

#[derive(Debug)]
struct Entry {
    d2: f64,
    item: Item,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // min-heap on distance; points before nodes at equal distance
    fn cmp(&self, other: &Self) -> Ordering {
        other.d2.total_cmp(&self.d2).then_with(|| {
            let rank = |i: &Item| match i {
                Item::Point(_) => 1,
                Item::Node(_) => 0,
            };
            rank(&self.item).cmp(&rank(&other.item))
        })
    }
}

pub struct NearestIter<'a> {
    tree: &'a KdTree,
    q: Point,
    heap: BinaryHeap<Entry>,
}

impl Iterator for NearestIter<'_> {
    type Item = (u32, f64);

    fn next(&mut self) -> Option<Self::Item> {
        while let Some(Entry { d2, item }) = self.heap.pop() {
            match item {
                Item::Point(id) => return Some((id, d2.sqrt())),
                Item::Node(at) => match &self.tree.nodes[at as usize] {
                    Node::Leaf { points, .. } => {
                        for (p, id) in points {
                            self.heap.push(Entry {
                                d2: dist2(p, &self.q),
                                item: Item::Point(*id),
                            });
                        }
                    }
                    Node::Split { left, right, .. } => {
                        for child in [*left, *right] {
                            self.heap.push(Entry {
                                d2: self.tree.nodes[child as usize].bounds().dist2(&self.q),
                                item: Item::Node(child),
                            });
                        }
                    }
                },
            }
        }
        None
    }
}
