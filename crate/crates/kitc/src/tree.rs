//! Hierarchical clustering of particles into axis-aligned rectangular boxes.
//!
//! The root box is the smallest rectangle enclosing all particles. Each
//! cluster is bisected at its box midpoint in every coordinate direction
//! whose side length exceeds `l_max / sqrt(2)` (with `l_max` the cluster's
//! own longest side), so a cluster has 8, 4, or 2 children; empty children
//! are discarded. Splitting stops once a cluster holds at most `N0`
//! particles. Particles are reordered so every cluster owns a contiguous
//! index range; the permutation back to input order is recorded.

use crate::{Error, Result};

/// Recursion cap; a cluster still above `N0` particles at this depth is kept
/// as an oversized leaf (this only happens with coincident particles).
pub const MAX_DEPTH: usize = 64;

/// Particle coordinates plus per-particle weight vectors, stored flat.
#[derive(Debug, Clone)]
pub struct ParticleSystem {
    pub positions: Vec<[f64; 3]>,
    /// N × m weights, row-major.
    pub weights: Vec<f64>,
    pub weight_dim: usize,
}

impl ParticleSystem {
    pub fn new(positions: Vec<[f64; 3]>, weights: Vec<f64>, weight_dim: usize) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::EmptySystem);
        }
        if weights.len() != positions.len() * weight_dim {
            return Err(Error::InvalidParameter(format!(
                "weight storage {} does not match {} particles x dim {}",
                weights.len(),
                positions.len(),
                weight_dim
            )));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite particle position".into()));
        }
        Ok(Self { positions, weights, weight_dim })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn weight(&self, i: usize) -> &[f64] {
        &self.weights[i * self.weight_dim..(i + 1) * self.weight_dim]
    }
}

/// Axis-aligned box with center and half-diagonal radius, owning the
/// contiguous particle range `[lo, hi)`.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub box_min: [f64; 3],
    pub box_max: [f64; 3],
    pub center: [f64; 3],
    pub radius: f64,
    pub lo: usize,
    pub hi: usize,
    /// Indices into the tree's cluster arena; empty for leaves.
    pub children: Vec<usize>,
}

impl Cluster {
    pub fn particle_count(&self) -> usize {
        self.hi - self.lo
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Radius of a box: the Euclidean norm of its half-extent vector, the
/// tightest bound putting every contained point within `r` of the center.
pub fn cluster_radius(box_min: [f64; 3], box_max: [f64; 3]) -> f64 {
    let hx = 0.5 * (box_max[0] - box_min[0]);
    let hy = 0.5 * (box_max[1] - box_min[1]);
    let hz = 0.5 * (box_max[2] - box_min[2]);
    (hx * hx + hy * hy + hz * hz).sqrt()
}

/// The cluster hierarchy. Cluster 0 is the root; children always follow
/// their parent in the arena.
#[derive(Debug)]
pub struct ClusterTree {
    pub clusters: Vec<Cluster>,
    /// `permutation[slot] = original index` of the particle now stored at
    /// `slot` in the reordered system.
    pub permutation: Vec<usize>,
    pub max_leaf: usize,
    pub shrink: bool,
    pub depth: usize,
    pub leaf_count: usize,
    /// Leaves above `max_leaf` particles, only possible when the depth cap
    /// or a zero-extent box stopped subdivision (coincident particles).
    pub oversized_leaves: usize,
}

impl ClusterTree {
    pub fn root(&self) -> &Cluster {
        &self.clusters[0]
    }

    /// Total number of modified-weight scalars a degree-`n` moment table
    /// over this tree stores: `(n+1)^3 * m` per cluster.
    pub fn moment_storage(&self, degree: usize, weight_dim: usize) -> usize {
        let per_axis = degree + 1;
        self.clusters.len() * per_axis * per_axis * per_axis * weight_dim
    }
}

struct Builder<'a> {
    positions: &'a [[f64; 3]],
    order: &'a mut [usize],
    max_leaf: usize,
    shrink: bool,
    clusters: Vec<Cluster>,
    depth: usize,
    leaf_count: usize,
    oversized_leaves: usize,
}

fn bounding_box(positions: &[[f64; 3]], idx: &[usize]) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in idx {
        for d in 0..3 {
            lo[d] = lo[d].min(positions[i][d]);
            hi[d] = hi[d].max(positions[i][d]);
        }
    }
    (lo, hi)
}

impl Builder<'_> {
    /// Builds the cluster for `order[lo..hi]` with the given box; returns its
    /// arena index.
    fn build(
        &mut self,
        lo: usize,
        hi: usize,
        box_min: [f64; 3],
        box_max: [f64; 3],
        depth: usize,
    ) -> usize {
        self.depth = self.depth.max(depth);
        let count = hi - lo;
        let center = [
            0.5 * (box_min[0] + box_max[0]),
            0.5 * (box_min[1] + box_max[1]),
            0.5 * (box_min[2] + box_max[2]),
        ];
        let idx = self.clusters.len();
        self.clusters.push(Cluster {
            box_min,
            box_max,
            center,
            radius: cluster_radius(box_min, box_max),
            lo,
            hi,
            children: Vec::new(),
        });

        let sides = [
            box_max[0] - box_min[0],
            box_max[1] - box_min[1],
            box_max[2] - box_min[2],
        ];
        let l_max = sides[0].max(sides[1]).max(sides[2]);
        let split_dims: Vec<usize> = (0..3)
            .filter(|&d| sides[d] > l_max / std::f64::consts::SQRT_2)
            .collect();

        if count <= self.max_leaf || depth >= MAX_DEPTH || split_dims.is_empty() {
            self.leaf_count += 1;
            if count > self.max_leaf {
                self.oversized_leaves += 1;
            }
            return idx;
        }

        // Partition order[lo..hi] into up to 2^k cells, splitting at the box
        // midpoint of each chosen dimension in turn.
        let mut cells: Vec<(usize, usize, [f64; 3], [f64; 3])> = vec![(lo, hi, box_min, box_max)];
        for &d in &split_dims {
            let mid = center[d];
            let mut next = Vec::with_capacity(cells.len() * 2);
            for (clo, chi, cmin, cmax) in cells {
                let split = partition_by(self.positions, &mut self.order[clo..chi], d, mid) + clo;
                let mut lo_max = cmax;
                lo_max[d] = mid;
                let mut hi_min = cmin;
                hi_min[d] = mid;
                next.push((clo, split, cmin, lo_max));
                next.push((split, chi, hi_min, cmax));
            }
            cells = next;
        }

        let mut children = Vec::new();
        for (clo, chi, cmin, cmax) in cells {
            if clo == chi {
                continue;
            }
            let (cmin, cmax) = if self.shrink {
                bounding_box(self.positions, &self.order[clo..chi])
            } else {
                (cmin, cmax)
            };
            children.push(self.build(clo, chi, cmin, cmax, depth + 1));
        }
        self.clusters[idx].children = children;
        idx
    }
}

/// Reorders `order` so entries with coordinate `d` strictly below `mid` come
/// first; returns the split point.
fn partition_by(positions: &[[f64; 3]], order: &mut [usize], d: usize, mid: f64) -> usize {
    let mut i = 0;
    for j in 0..order.len() {
        if positions[order[j]][d] < mid {
            order.swap(i, j);
            i += 1;
        }
    }
    i
}

/// Builds the cluster tree, reordering `system` in place so each cluster owns
/// a contiguous particle range. The returned tree records the permutation
/// back to the original ordering.
pub fn build_tree(system: &mut ParticleSystem, max_leaf: usize, shrink: bool) -> Result<ClusterTree> {
    if max_leaf < 1 {
        return Err(Error::InvalidParameter("max leaf size must be at least 1".into()));
    }
    let n = system.len();
    if n == 0 {
        return Err(Error::EmptySystem);
    }
    let mut order: Vec<usize> = (0..n).collect();
    let all: Vec<usize> = order.clone();
    let (box_min, box_max) = bounding_box(&system.positions, &all);

    let mut builder = Builder {
        positions: &system.positions,
        order: &mut order,
        max_leaf,
        shrink,
        clusters: Vec::new(),
        depth: 0,
        leaf_count: 0,
        oversized_leaves: 0,
    };
    builder.build(0, n, box_min, box_max, 0);
    let clusters = builder.clusters;
    let depth = builder.depth;
    let leaf_count = builder.leaf_count;
    let oversized_leaves = builder.oversized_leaves;

    // Apply the permutation to positions and weights.
    let m = system.weight_dim;
    let mut new_pos = Vec::with_capacity(n);
    let mut new_w = Vec::with_capacity(n * m);
    for &old in &order {
        new_pos.push(system.positions[old]);
        new_w.extend_from_slice(&system.weights[old * m..(old + 1) * m]);
    }
    system.positions = new_pos;
    system.weights = new_w;

    Ok(ClusterTree {
        clusters,
        permutation: order,
        max_leaf,
        shrink,
        depth,
        leaf_count,
        oversized_leaves,
    })
}
