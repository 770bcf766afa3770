//! Exact nearest-neighbour search over small fixed-dimension point sets.
//!
//! Ties are resolved by the lowest point index, so the answer is identical to
//! a linear scan that keeps the first minimum.

/// Squared Euclidean distance, summed in dimension order.
#[inline]
pub fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut acc = 0.0;
    for i in 0..D {
        let d = a[i] - b[i];
        acc += d * d;
    }
    acc
}

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree<const D: usize> {
    points: Vec<[f64; D]>,
    /// Point indices, grouped by leaf.
    order: Vec<u32>,
    nodes: Vec<Node>,
}

/// A search hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub index: usize,
    pub dist2: f64,
}

fn better(a: (f64, u32), b: (f64, u32)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

impl<const D: usize> KdTree<D> {
    pub fn new(points: Vec<[f64; D]>) -> Self {
        let mut tree = Self { order: (0..points.len() as u32).collect(), points, nodes: Vec::new() };
        if !tree.points.is_empty() {
            let n = tree.points.len();
            tree.build(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; D]] {
        &self.points
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let dim = (0..D)
            .max_by(|&a, &b| {
                let spread = |d: usize| {
                    let (lo, hi) = self.order[start..end].iter().fold((f64::MAX, f64::MIN), |(lo, hi), &i| {
                        let v = self.points[i as usize][d];
                        (lo.min(v), hi.max(v))
                    });
                    hi - lo
                };
                spread(a).total_cmp(&spread(b)).then(b.cmp(&a))
            })
            .expect("D > 0");
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end]
            .select_nth_unstable_by(mid - start, |&a, &b| points[a as usize][dim].total_cmp(&points[b as usize][dim]));
        let value = self.points[self.order[mid] as usize][dim];
        self.nodes.push(Node::Split { dim, value, left: 0, right: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { dim, value, left, right };
        id
    }

    /// Closest point to `query`; `None` on an empty tree.
    pub fn nearest(&self, query: &[f64; D]) -> Option<Hit> {
        if self.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, u32::MAX);
        self.nearest_in(0, query, &mut best);
        Some(Hit { index: best.1 as usize, dist2: best.0 })
    }

    fn nearest_in(&self, node: usize, q: &[f64; D], best: &mut (f64, u32)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let cand = (dist2(&self.points[i as usize], q), i);
                    if better(cand, *best) {
                        *best = cand;
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.nearest_in(near, q, best);
                if diff * diff <= best.0 {
                    self.nearest_in(far, q, best);
                }
            }
        }
    }

    /// The `k` closest points in increasing `(distance, index)` order.
    pub fn k_nearest(&self, query: &[f64; D], k: usize) -> Vec<Hit> {
        let mut found: Vec<(f64, u32)> = Vec::with_capacity(k + 1);
        if k > 0 && !self.is_empty() {
            self.k_nearest_in(0, query, k, &mut found);
        }
        found.into_iter().map(|(d, i)| Hit { index: i as usize, dist2: d }).collect()
    }

    fn k_nearest_in(&self, node: usize, q: &[f64; D], k: usize, found: &mut Vec<(f64, u32)>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let cand = (dist2(&self.points[i as usize], q), i);
                    if found.len() < k || better(cand, *found.last().expect("full")) {
                        let pos = found.partition_point(|&f| better(f, cand));
                        found.insert(pos, cand);
                        found.truncate(k);
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.k_nearest_in(near, q, k, found);
                if found.len() < k || diff * diff <= found.last().expect("full").0 {
                    self.k_nearest_in(far, q, k, found);
                }
            }
        }
    }
}

/// Reference answer by exhaustive scan.
pub fn linear_nearest<const D: usize>(points: &[[f64; D]], query: &[f64; D]) -> Option<Hit> {
    let mut best: Option<(f64, u32)> = None;
    for (i, p) in points.iter().enumerate() {
        let cand = (dist2(p, query), i as u32);
        if best.map_or(true, |b| better(cand, b)) {
            best = Some(cand);
        }
    }
    best.map(|(d, i)| Hit { index: i as usize, dist2: d })
}
