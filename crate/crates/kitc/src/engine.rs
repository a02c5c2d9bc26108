//! Treecode evaluation: MAC test, far-field approximation, leaf direct sums,
//! recursive traversal, and the O(N^2) direct-sum reference.
//!
//! Each target descends the cluster tree from the root. A cluster whose
//! radius-to-distance ratio satisfies `r/R <= theta` is handled by one
//! far-field approximation against its `(n+1)^3` interpolation points;
//! a rejected leaf is summed directly; otherwise the children are visited.
//! Targets are independent, so the loop over targets parallelizes with no
//! shared mutable state and the result is identical for any thread count.

use rayon::prelude::*;

use crate::kernels::Kernel;
use crate::moments::{ClusterMoments, MomentTable};
use crate::tree::{ClusterTree, ParticleSystem};
use crate::{Error, Result};

/// User-facing treecode parameters.
#[derive(Debug, Clone, Copy)]
pub struct TreecodeParams {
    /// MAC parameter theta in (0, 1].
    pub theta: f64,
    /// Interpolation degree n >= 1.
    pub degree: usize,
    /// Maximum leaf size N0 >= 1.
    pub max_leaf: usize,
}

impl TreecodeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in (0, 1], got {}",
                self.theta
            )));
        }
        if self.degree < 1 {
            return Err(Error::InvalidParameter("degree must be at least 1".into()));
        }
        if self.max_leaf < 1 {
            return Err(Error::InvalidParameter("max leaf size must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for TreecodeParams {
    fn default() -> Self {
        Self { theta: 0.7, degree: 7, max_leaf: 2000 }
    }
}

/// Traversal counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InteractionStats {
    pub approx_interactions: u64,
    pub leaf_direct_interactions: u64,
    pub kernel_evals: u64,
}

impl InteractionStats {
    fn merge(self, other: Self) -> Self {
        Self {
            approx_interactions: self.approx_interactions + other.approx_interactions,
            leaf_direct_interactions: self.leaf_direct_interactions + other.leaf_direct_interactions,
            kernel_evals: self.kernel_evals + other.kernel_evals,
        }
    }
}

/// Multipole acceptance criterion: `r <= theta * R` with
/// `R = |target - center|`. A target sitting exactly at the center is only
/// accepted if the cluster has zero radius.
pub fn mac_accept(target: [f64; 3], center: [f64; 3], radius: f64, theta: f64) -> bool {
    let dx = target[0] - center[0];
    let dy = target[1] - center[1];
    let dz = target[2] - center[2];
    let dist2 = dx * dx + dy * dy + dz * dz;
    // r <= theta * R, squared to avoid the sqrt.
    radius * radius <= theta * theta * dist2 || radius == 0.0
}

/// Far-field particle-cluster approximation: the kernel evaluated at the
/// cluster's mapped Chebyshev grid points with the modified weights as
/// sources. O(n^3) per target.
pub fn approx_interaction<K: Kernel + ?Sized>(
    target: [f64; 3],
    moments: &ClusterMoments,
    kernel: &K,
    out: &mut [f64],
) {
    let m = kernel.weight_dim();
    for (j, &point) in moments.grid_points.iter().enumerate() {
        kernel.accumulate(target, point, &moments.fhat[j * m..(j + 1) * m], out);
    }
}

/// Direct particle-cluster interaction over a contiguous particle range,
/// honoring the kernel's self-interaction policy when the target coincides
/// with a source.
pub fn direct_interaction<K: Kernel + ?Sized>(
    target: [f64; 3],
    positions: &[[f64; 3]],
    weights: &[f64],
    kernel: &K,
    out: &mut [f64],
) -> u64 {
    let m = kernel.weight_dim();
    let include_self = kernel.include_self_interaction();
    let mut evals = 0;
    for (j, &src) in positions.iter().enumerate() {
        if !include_self && src == target {
            continue;
        }
        kernel.accumulate(target, src, &weights[j * m..(j + 1) * m], out);
        evals += 1;
    }
    evals
}

/// Recursive single-target traversal (Algorithm "compute_velocity").
pub fn compute_velocity<K: Kernel + ?Sized>(
    target: [f64; 3],
    cluster_idx: usize,
    system: &ParticleSystem,
    tree: &ClusterTree,
    moments: &MomentTable,
    theta: f64,
    kernel: &K,
    out: &mut [f64],
    stats: &mut InteractionStats,
) {
    let cluster = &tree.clusters[cluster_idx];
    if mac_accept(target, cluster.center, cluster.radius, theta) {
        approx_interaction(target, &moments.per_cluster[cluster_idx], kernel, out);
        stats.approx_interactions += 1;
        let np = (moments.degree + 1) as u64;
        stats.kernel_evals += np * np * np;
    } else if cluster.is_leaf() {
        let m = system.weight_dim;
        stats.kernel_evals += direct_interaction(
            target,
            &system.positions[cluster.lo..cluster.hi],
            &system.weights[cluster.lo * m..cluster.hi * m],
            kernel,
            out,
        );
        stats.leaf_direct_interactions += 1;
    } else {
        for &child in &cluster.children {
            compute_velocity(target, child, system, tree, moments, theta, kernel, out, stats);
        }
    }
}

fn build_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Evaluates the treecode sum at every particle of the (tree-ordered)
/// system, returning outputs in the ORIGINAL particle order plus traversal
/// statistics. Deterministic for any thread count.
pub fn evaluate_all<K: Kernel + ?Sized>(
    system: &ParticleSystem,
    tree: &ClusterTree,
    moments: &MomentTable,
    params: &TreecodeParams,
    kernel: &K,
    threads: usize,
) -> Result<(Vec<f64>, InteractionStats)> {
    params.validate()?;
    let n = system.len();
    let p = kernel.output_dim();
    let mut out_tree = vec![0.0; n * p];
    let pool = build_pool(threads)?;
    let stats = pool.install(|| {
        out_tree
            .par_chunks_mut(p)
            .enumerate()
            .fold(InteractionStats::default, |mut st, (i, chunk)| {
                compute_velocity(
                    system.positions[i],
                    0,
                    system,
                    tree,
                    moments,
                    params.theta,
                    kernel,
                    chunk,
                    &mut st,
                );
                st
            })
            .reduce(InteractionStats::default, InteractionStats::merge)
    });
    // Un-permute back to input order.
    let mut out = vec![0.0; n * p];
    for (slot, &orig) in tree.permutation.iter().enumerate() {
        out[orig * p..(orig + 1) * p].copy_from_slice(&out_tree[slot * p..(slot + 1) * p]);
    }
    Ok((out, stats))
}

/// O(N^2) reference: every target against every source, parallel over
/// targets. Outputs are aligned with the order of `system`.
pub fn direct_sum<K: Kernel + ?Sized>(
    system: &ParticleSystem,
    kernel: &K,
    threads: usize,
) -> Result<Vec<f64>> {
    let p = kernel.output_dim();
    let mut out = vec![0.0; system.len() * p];
    let pool = build_pool(threads)?;
    pool.install(|| {
        out.par_chunks_mut(p).enumerate().for_each(|(i, chunk)| {
            direct_interaction(
                system.positions[i],
                &system.positions,
                &system.weights,
                kernel,
                chunk,
            );
        });
    });
    Ok(out)
}

/// Direct sums for a subset of target slots (indices into `system`'s current
/// order); used when a full O(N^2) reference is out of budget.
pub fn direct_sum_targets<K: Kernel + ?Sized>(
    system: &ParticleSystem,
    kernel: &K,
    target_slots: &[usize],
    threads: usize,
) -> Result<Vec<f64>> {
    let p = kernel.output_dim();
    let mut out = vec![0.0; target_slots.len() * p];
    let pool = build_pool(threads)?;
    pool.install(|| {
        out.par_chunks_mut(p).zip(target_slots.par_iter()).for_each(|(chunk, &slot)| {
            direct_interaction(
                system.positions[slot],
                &system.positions,
                &system.weights,
                kernel,
                chunk,
            );
        });
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{stokeslet_velocity, Coulomb, Stokeslet};
    use crate::moments::compute_all_moments;
    use crate::tree::build_tree;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mac_cases() {
        assert!(mac_accept([1.0, 0.0, 0.0], [0.0; 3], 0.5, 0.7));
        assert!(!mac_accept([1.0, 0.0, 0.0], [0.0; 3], 0.8, 0.7));
        // Target at the center: reject unless the cluster is a point.
        assert!(!mac_accept([0.0; 3], [0.0; 3], 0.5, 0.7));
        assert!(mac_accept([0.0; 3], [0.0; 3], 0.0, 0.7));
    }

    fn random_system(rng: &mut ChaCha8Rng, n: usize, m: usize, scale: f64) -> ParticleSystem {
        let positions: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                [
                    rng.gen::<f64>() * scale,
                    rng.gen::<f64>() * scale,
                    rng.gen::<f64>() * scale,
                ]
            })
            .collect();
        let weights: Vec<f64> = (0..n * m).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        ParticleSystem::new(positions, weights, m).unwrap()
    }

    #[test]
    fn coulomb_point_source_approximation() {
        // One unit charge at the cluster center; a target at 10x the cluster
        // radius must see q/R to 1e-6 for n >= 4.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut positions = vec![[0.5, 0.5, 0.5]];
        let mut weights = vec![1.0];
        // Zero-weight fillers pin the box to the unit cube.
        for _ in 0..20 {
            positions.push([rng.gen(), rng.gen(), rng.gen()]);
            weights.push(0.0);
        }
        positions.push([0.0; 3]);
        positions.push([1.0; 3]);
        weights.push(0.0);
        weights.push(0.0);
        let mut sys = ParticleSystem::new(positions, weights, 1).unwrap();
        let tree = build_tree(&mut sys, 1000, false).unwrap();
        let radius = tree.root().radius;
        let target = [0.5 + 10.0 * radius, 0.5, 0.5];
        for n in 4..=8 {
            let table = compute_all_moments(&tree, &sys, n).unwrap();
            let mut out = [0.0];
            approx_interaction(target, &table.per_cluster[0], &Coulomb, &mut out);
            let exact = 1.0 / (10.0 * radius);
            assert_relative_eq!(out[0], exact, max_relative = 1e-6);
        }
    }

    /// A kernel polynomial in each source coordinate (degree <= n) is
    /// reproduced exactly by the far-field approximation.
    struct PolyKernel;
    impl Kernel for PolyKernel {
        fn weight_dim(&self) -> usize {
            1
        }
        fn output_dim(&self) -> usize {
            1
        }
        fn include_self_interaction(&self) -> bool {
            true
        }
        fn name(&self) -> &'static str {
            "poly-test"
        }
        fn accumulate(&self, t: [f64; 3], s: [f64; 3], w: &[f64], out: &mut [f64]) {
            // Degree 3 in each source coordinate.
            let v = (s[0].powi(3) + t[0] * s[0]) * (1.0 + s[1] * s[1]) * (2.0 + s[2].powi(3));
            out[0] += v * w[0];
        }
    }

    #[test]
    fn polynomial_kernel_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut sys = random_system(&mut rng, 60, 1, 1.0);
        let tree = build_tree(&mut sys, 1000, false).unwrap();
        let table = compute_all_moments(&tree, &sys, 3).unwrap();
        let target = [5.0, -2.0, 3.0];
        let mut approx = [0.0];
        approx_interaction(target, &table.per_cluster[0], &PolyKernel, &mut approx);
        let mut direct = [0.0];
        direct_interaction(target, &sys.positions, &sys.weights, &PolyKernel, &mut direct);
        assert_relative_eq!(approx[0], direct[0], max_relative = 1e-12);
    }

    #[test]
    fn stokeslet_far_field_accuracy() {
        // 500 sources in the unit cube, theta=0.7-separated target, n = 7.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut sys = random_system(&mut rng, 500, 3, 1.0);
        let tree = build_tree(&mut sys, 1000, false).unwrap();
        let table = compute_all_moments(&tree, &sys, 7).unwrap();
        let kernel = Stokeslet { epsilon: 0.02 };
        let c = tree.root().center;
        let r = tree.root().radius;
        let target = [c[0] + r / 0.7, c[1], c[2]];
        assert!(mac_accept(target, c, r, 0.7));
        let mut approx = [0.0; 3];
        approx_interaction(target, &table.per_cluster[0], &kernel, &mut approx);
        let mut direct = [0.0; 3];
        direct_interaction(target, &sys.positions, &sys.weights, &kernel, &mut direct);
        let err = (0..3)
            .map(|i| (approx[i] - direct[i]).powi(2))
            .sum::<f64>()
            .sqrt()
            / (0..3).map(|i| direct[i].powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-4, "far-field relative deviation {err:e}");
    }

    #[test]
    fn direct_interaction_edge_cases() {
        let kernel = Stokeslet { epsilon: 1.0 };
        let mut out = [0.0; 3];
        let evals = direct_interaction([0.0; 3], &[], &[], &kernel, &mut out);
        assert_eq!(evals, 0);
        assert_eq!(out, [0.0; 3]);

        let src = [[1.0, 0.0, 0.0]];
        let w = [1.0, 0.0, 0.0];
        direct_interaction([0.0; 3], &src, &w, &kernel, &mut out);
        let expect = stokeslet_velocity([0.0; 3], src[0], [1.0, 0.0, 0.0], 1.0);
        assert_eq!(out, expect);
    }

    fn treecode_vs_direct(n: usize, theta: f64, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sys = random_system(&mut rng, n, 3, 10.0);
        let kernel = Stokeslet { epsilon: 0.05 };
        let tree = build_tree(&mut sys, 50, false).unwrap();
        let params = TreecodeParams { theta, degree: 7, max_leaf: 50 };
        let table = compute_all_moments(&tree, &sys, params.degree).unwrap();
        let (tc, _) = evaluate_all(&sys, &tree, &table, &params, &kernel, 1).unwrap();
        let direct = direct_sum(&sys, &kernel, 1).unwrap();
        // direct is in tree order; un-permute for comparison.
        let mut direct_orig = vec![0.0; direct.len()];
        for (slot, &orig) in tree.permutation.iter().enumerate() {
            direct_orig[orig * 3..orig * 3 + 3].copy_from_slice(&direct[slot * 3..slot * 3 + 3]);
        }
        let num: f64 = tc.iter().zip(&direct_orig).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = direct_orig.iter().map(|v| v * v).sum();
        (num / den).sqrt()
    }

    #[test]
    fn tiny_theta_matches_direct_sum() {
        let err = treecode_vs_direct(800, 1e-12, 41);
        assert!(err <= 1e-12, "error {err:e}");
    }

    #[test]
    fn single_leaf_tree_is_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let mut sys = random_system(&mut rng, 100, 3, 1.0);
        let kernel = Stokeslet { epsilon: 0.1 };
        let tree = build_tree(&mut sys, 200, false).unwrap();
        assert_eq!(tree.clusters.len(), 1);
        let params = TreecodeParams { theta: 0.7, degree: 5, max_leaf: 200 };
        let table = compute_all_moments(&tree, &sys, 5).unwrap();
        let (tc, stats) = evaluate_all(&sys, &tree, &table, &params, &kernel, 1).unwrap();
        let direct = direct_sum(&sys, &kernel, 1).unwrap();
        let mut direct_orig = vec![0.0; direct.len()];
        for (slot, &orig) in tree.permutation.iter().enumerate() {
            direct_orig[orig * 3..orig * 3 + 3].copy_from_slice(&direct[slot * 3..slot * 3 + 3]);
        }
        assert_eq!(stats.approx_interactions, 0);
        for (a, b) in tc.iter().zip(&direct_orig) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn two_stokeslets_hand_computed() {
        let eps = 0.5;
        let x0 = [0.0; 3];
        let x1 = [1.0, 0.0, 0.0];
        let f0 = [1.0, 0.0, 0.0];
        let f1 = [0.0, 1.0, 0.0];
        let sys = ParticleSystem::new(
            vec![x0, x1],
            vec![f0[0], f0[1], f0[2], f1[0], f1[1], f1[2]],
            3,
        )
        .unwrap();
        let kernel = Stokeslet { epsilon: eps };
        let out = direct_sum(&sys, &kernel, 1).unwrap();
        let u0 = stokeslet_velocity(x0, x0, f0, eps);
        let u0b = stokeslet_velocity(x0, x1, f1, eps);
        for i in 0..3 {
            assert_relative_eq!(out[i], u0[i] + u0b[i], max_relative = 1e-15);
        }
    }

    #[test]
    fn thread_counts_are_bitwise_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let mut sys = random_system(&mut rng, 2000, 3, 10.0);
        let kernel = Stokeslet { epsilon: 0.05 };
        let tree = build_tree(&mut sys, 100, false).unwrap();
        let params = TreecodeParams { theta: 0.7, degree: 4, max_leaf: 100 };
        let table = compute_all_moments(&tree, &sys, 4).unwrap();
        let (out1, st1) = evaluate_all(&sys, &tree, &table, &params, &kernel, 1).unwrap();
        let (out8, st8) = evaluate_all(&sys, &tree, &table, &params, &kernel, 8).unwrap();
        assert_eq!(out1, out8);
        assert_eq!(st1, st8);
    }

    #[test]
    fn direct_sum_permutation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let sys = random_system(&mut rng, 50, 3, 1.0);
        let kernel = Stokeslet { epsilon: 0.1 };
        let base = direct_sum(&sys, &kernel, 1).unwrap();
        // Reverse the particle order.
        let rev_pos: Vec<[f64; 3]> = sys.positions.iter().rev().copied().collect();
        let mut rev_w = Vec::new();
        for i in (0..sys.len()).rev() {
            rev_w.extend_from_slice(sys.weight(i));
        }
        let rev = ParticleSystem::new(rev_pos, rev_w, 3).unwrap();
        let out_rev = direct_sum(&rev, &kernel, 1).unwrap();
        let n = sys.len();
        let scale: f64 = base.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for i in 0..n {
            for c in 0..3 {
                let a = base[i * 3 + c];
                let b = out_rev[(n - 1 - i) * 3 + c];
                assert!((a - b).abs() <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn zero_weights_zero_output() {
        let sys = ParticleSystem::new(vec![[0.0; 3], [1.0; 3]], vec![0.0; 6], 3).unwrap();
        let out = direct_sum(&sys, &Stokeslet { epsilon: 0.1 }, 1).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn self_term_only() {
        let sys =
            ParticleSystem::new(vec![[3.0, -1.0, 2.0]], vec![0.0, 1.0, 0.0], 3).unwrap();
        let out = direct_sum(&sys, &Stokeslet { epsilon: 1.0 }, 1).unwrap();
        assert_relative_eq!(out[1], 1.0 / (4.0 * std::f64::consts::PI), max_relative = 1e-15);
        assert_eq!(out[0], 0.0);
        assert_eq!(out[2], 0.0);
    }

    #[test]
    fn parent_and_children_agree_in_far_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let mut sys = random_system(&mut rng, 300, 1, 1.0);
        let tree = build_tree(&mut sys, 50, false).unwrap();
        assert!(!tree.root().is_leaf());
        let table = compute_all_moments(&tree, &sys, 8).unwrap();
        let target = [30.0, 20.0, -15.0];
        let kernel = Coulomb;
        let mut via_parent = [0.0];
        approx_interaction(target, &table.per_cluster[0], &kernel, &mut via_parent);
        let mut via_children = [0.0];
        for &c in &tree.root().children {
            approx_interaction(target, &table.per_cluster[c], &kernel, &mut via_children);
        }
        let mut direct = [0.0];
        direct_interaction(target, &sys.positions, &sys.weights, &kernel, &mut direct);
        assert_relative_eq!(via_parent[0], direct[0], max_relative = 1e-9);
        assert_relative_eq!(via_children[0], direct[0], max_relative = 1e-9);
    }

    #[test]
    fn params_validation() {
        assert!(TreecodeParams { theta: 1.5, degree: 7, max_leaf: 10 }.validate().is_err());
        assert!(TreecodeParams { theta: 0.0, degree: 7, max_leaf: 10 }.validate().is_err());
        assert!(TreecodeParams { theta: 0.7, degree: 0, max_leaf: 10 }.validate().is_err());
        assert!(TreecodeParams { theta: 0.7, degree: 7, max_leaf: 0 }.validate().is_err());
        assert!(TreecodeParams::default().validate().is_ok());
    }
}
