//! Per-cluster modified weights.
//!
//! For a cluster with sources `y_j` and weights `f_j`, the modified weights
//! are `f̂_k = Σ_j L_k1(y_j1) L_k2(y_j2) L_k3(y_j3) f_j`, where the 1D
//! Lagrange basis factors are evaluated in barycentric form on Chebyshev
//! grids mapped to the cluster box. A target well separated from the cluster
//! then interacts with the `(n+1)^3` grid points carrying `f̂_k` instead of
//! the `N_c` particles. Every cluster's moments are computed eagerly right
//! after the tree is built; traversal is read-only.

use rayon::prelude::*;

use crate::chebyshev::ChebyshevGrid1d;
use crate::tree::{Cluster, ClusterTree, ParticleSystem};
use crate::Result;

/// Modified weights for one cluster, together with the mapped grids that
/// define the interpolation points.
#[derive(Debug, Clone)]
pub struct ClusterMoments {
    pub grids: [ChebyshevGrid1d; 3],
    /// The `(n+1)^3` tensor-product grid points, flattened in the same
    /// `(k1, k2, k3)` lexicographic order as `fhat`; stored so the far-field
    /// evaluation runs over one flat array like a direct sum.
    pub grid_points: Vec<[f64; 3]>,
    /// `(n+1)^3 * m` scalars, indexed `((k1*(n+1) + k2)*(n+1) + k3)*m + c`.
    pub fhat: Vec<f64>,
}

/// Moments for every cluster in a tree, indexed like the cluster arena.
#[derive(Debug)]
pub struct MomentTable {
    pub degree: usize,
    pub weight_dim: usize,
    pub per_cluster: Vec<ClusterMoments>,
}

impl MomentTable {
    /// Total stored modified-weight scalars.
    pub fn storage_scalars(&self) -> usize {
        self.per_cluster.iter().map(|c| c.fhat.len()).sum()
    }
}

/// Chebyshev grid spanning one axis of a cluster box. A zero-width axis
/// (all particles sharing the coordinate) is padded so the nodes stay
/// distinct; every particle then coincides with the midpoint node region and
/// the coincidence branch of the basis evaluation takes over as needed.
fn axis_grid(degree: usize, a: f64, b: f64) -> Result<ChebyshevGrid1d> {
    if b > a {
        ChebyshevGrid1d::new(degree, a, b)
    } else {
        let c = 0.5 * (a + b);
        let half = 0.5 * f64::max(1e-12, 1e-12 * c.abs());
        ChebyshevGrid1d::new(degree, c - half, c + half)
    }
}

/// Computes the modified weights for one cluster's particles on the given
/// grids. `positions` and `weights` cover exactly the cluster's range.
pub fn compute_modified_weights(
    positions: &[[f64; 3]],
    weights: &[f64],
    weight_dim: usize,
    grids: &[ChebyshevGrid1d; 3],
) -> Vec<f64> {
    let np = grids[0].degree() + 1;
    let mut fhat = vec![0.0; np * np * np * weight_dim];
    // Per-particle scratch for the three 1D basis vectors, reused across the
    // particle loop.
    let mut lx = vec![0.0; np];
    let mut ly = vec![0.0; np];
    let mut lz = vec![0.0; np];
    for (j, pos) in positions.iter().enumerate() {
        grids[0].eval_basis_into(pos[0], &mut lx);
        grids[1].eval_basis_into(pos[1], &mut ly);
        grids[2].eval_basis_into(pos[2], &mut lz);
        let f = &weights[j * weight_dim..(j + 1) * weight_dim];
        for (k1, &a1) in lx.iter().enumerate() {
            if a1 == 0.0 {
                continue;
            }
            for (k2, &a2) in ly.iter().enumerate() {
                if a2 == 0.0 {
                    continue;
                }
                let a12 = a1 * a2;
                let row = ((k1 * np + k2) * np) * weight_dim;
                for (k3, &a3) in lz.iter().enumerate() {
                    let w = a12 * a3;
                    let base = row + k3 * weight_dim;
                    for c in 0..weight_dim {
                        fhat[base + c] += w * f[c];
                    }
                }
            }
        }
    }
    fhat
}

fn cluster_moments(
    cluster: &Cluster,
    system: &ParticleSystem,
    degree: usize,
) -> Result<ClusterMoments> {
    let grids = [
        axis_grid(degree, cluster.box_min[0], cluster.box_max[0])?,
        axis_grid(degree, cluster.box_min[1], cluster.box_max[1])?,
        axis_grid(degree, cluster.box_min[2], cluster.box_max[2])?,
    ];
    let m = system.weight_dim;
    let fhat = compute_modified_weights(
        &system.positions[cluster.lo..cluster.hi],
        &system.weights[cluster.lo * m..cluster.hi * m],
        m,
        &grids,
    );
    let np = degree + 1;
    let mut grid_points = Vec::with_capacity(np * np * np);
    for &x in &grids[0].points()[..np] {
        for &y in &grids[1].points()[..np] {
            for &z in &grids[2].points()[..np] {
                grid_points.push([x, y, z]);
            }
        }
    }
    Ok(ClusterMoments { grids, grid_points, fhat })
}

/// Computes modified weights for every cluster in the tree, in parallel over
/// clusters.
pub fn compute_all_moments(
    tree: &ClusterTree,
    system: &ParticleSystem,
    degree: usize,
) -> Result<MomentTable> {
    let per_cluster: Vec<ClusterMoments> = tree
        .clusters
        .par_iter()
        .map(|c| cluster_moments(c, system, degree))
        .collect::<Result<_>>()?;
    Ok(MomentTable { degree, weight_dim: system.weight_dim, per_cluster })
}
