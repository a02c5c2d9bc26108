//! Experiment generators, error metric, timing, and run reporting.
//!
//! Two benchmark configurations are provided. Example 1 scatters pairs of
//! particles (force dipoles of unit magnitude) uniformly in a cube of side
//! 10 and evaluates the regularized Stokeslet velocity. Example 2 places
//! helical rods on a square grid in a flat slab and evaluates the combined
//! Stokeslet/rotlet linear and angular velocities with random forces and
//! torques in [-1, 1].

use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::engine::{
    direct_sum, direct_sum_targets, evaluate_all, InteractionStats, TreecodeParams,
};
use crate::kernels::{Coulomb, Kernel, Stokeslet, StokesletRotlet};
use crate::moments::compute_all_moments;
use crate::tree::{build_tree, ParticleSystem};
use crate::{Error, Result};

/// Force-dipole suspension in a cube (Example 1).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Example1Config {
    /// Total particle count; must be even (particles come in pairs).
    pub n_particles: usize,
    /// Cube side length.
    pub cube_side: f64,
    /// Separation of the two particles of a dipole.
    pub organism_length: f64,
    /// MRS regularization parameter.
    pub epsilon: f64,
    pub seed: u64,
}

impl Example1Config {
    pub fn with_n(n_particles: usize, seed: u64) -> Self {
        Self { n_particles, cube_side: 10.0, organism_length: 0.02, epsilon: 0.02, seed }
    }
}

/// Helical rod array in a slab (Example 2).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Example2Config {
    /// Rods per grid side; the rod count is `g^2`.
    pub rods_per_side: usize,
    /// Segments per rod; each rod has `segments + 1` particles.
    pub segments: usize,
    /// Grid spacing of the rod base points. The default 16/15 reproduces
    /// the reference 15 x 15 layout tiling [-8, 8]^2 and keeps rod density
    /// constant for other grid sizes.
    pub spacing: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Example2Config {
    pub fn with_grid(rods_per_side: usize, segments: usize, seed: u64) -> Self {
        Self { rods_per_side, segments, spacing: 16.0 / 15.0, epsilon: 0.3, seed }
    }

    pub fn n_particles(&self) -> usize {
        self.rods_per_side * self.rods_per_side * (self.segments + 1)
    }
}

/// Generates the dipole suspension: `N/2` pairs with centers uniform in the
/// cube, orientations uniform on the sphere, and unit forces of opposite
/// sign along the pair axis.
pub fn gen_example1(cfg: &Example1Config) -> Result<ParticleSystem> {
    if cfg.n_particles == 0 || cfg.n_particles % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "example 1 needs an even positive particle count, got {}",
            cfg.n_particles
        )));
    }
    if cfg.organism_length <= 0.0 {
        return Err(Error::InvalidParameter("organism length must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pairs = cfg.n_particles / 2;
    let mut positions = Vec::with_capacity(cfg.n_particles);
    let mut weights = Vec::with_capacity(cfg.n_particles * 3);
    let half = 0.5 * cfg.organism_length;
    for _ in 0..pairs {
        let center = [
            rng.gen::<f64>() * cfg.cube_side,
            rng.gen::<f64>() * cfg.cube_side,
            rng.gen::<f64>() * cfg.cube_side,
        ];
        let dir: [f64; 3] = UnitSphere.sample(&mut rng);
        positions.push([
            center[0] + half * dir[0],
            center[1] + half * dir[1],
            center[2] + half * dir[2],
        ]);
        positions.push([
            center[0] - half * dir[0],
            center[1] - half * dir[1],
            center[2] - half * dir[2],
        ]);
        weights.extend_from_slice(&dir);
        weights.extend_from_slice(&[-dir[0], -dir[1], -dir[2]]);
    }
    ParticleSystem::new(positions, weights, 3)
}

/// Generates the helical rod array: base points on a centered `g x g` grid,
/// rod points `(x0 + 0.3 cos 2z, y0 + 0.3 sin 2z, z)` for z = 0..9, and
/// force/torque components uniform in [-1, 1].
pub fn gen_example2(cfg: &Example2Config) -> Result<ParticleSystem> {
    let g = cfg.rods_per_side;
    let m_seg = cfg.segments;
    if g == 0 || m_seg == 0 {
        return Err(Error::InvalidParameter(
            "example 2 needs at least one rod and one segment".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_particles();
    let mut positions = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n * 6);
    let offset = 0.5 * (g as f64 - 1.0) * cfg.spacing;
    for i in 0..g {
        for j in 0..g {
            let x0 = i as f64 * cfg.spacing - offset;
            let y0 = j as f64 * cfg.spacing - offset;
            for s in 0..=m_seg {
                let z = 9.0 * s as f64 / m_seg as f64;
                positions.push([x0 + 0.3 * (2.0 * z).cos(), y0 + 0.3 * (2.0 * z).sin(), z]);
                for _ in 0..6 {
                    weights.push(rng.gen::<f64>() * 2.0 - 1.0);
                }
            }
        }
    }
    ParticleSystem::new(positions, weights, 6)
}

/// Relative L2 error between a reference field and an approximation,
/// flattened over all particles and output components.
pub fn relative_error(reference: &[f64], approx: &[f64]) -> Result<f64> {
    if reference.len() != approx.len() {
        return Err(Error::InvalidParameter(format!(
            "shape mismatch: {} vs {}",
            reference.len(),
            approx.len()
        )));
    }
    let den: f64 = reference.iter().map(|v| v * v).sum();
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    let num: f64 = reference.iter().zip(approx).map(|(r, a)| (r - a) * (r - a)).sum();
    Ok((num / den).sqrt())
}

/// Which benchmark instance to run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum ExperimentConfig {
    Example1(Example1Config),
    Example2(Example2Config),
}

impl ExperimentConfig {
    pub fn generate(&self) -> Result<ParticleSystem> {
        match self {
            ExperimentConfig::Example1(c) => gen_example1(c),
            ExperimentConfig::Example2(c) => gen_example2(c),
        }
    }

    pub fn example_number(&self) -> u8 {
        match self {
            ExperimentConfig::Example1(_) => 1,
            ExperimentConfig::Example2(_) => 2,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            ExperimentConfig::Example1(c) => c.epsilon,
            ExperimentConfig::Example2(c) => c.epsilon,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::Example1(c) => c.seed,
            ExperimentConfig::Example2(c) => c.seed,
        }
    }

    /// The kernel the configuration was designed for.
    pub fn default_kernel(&self) -> &'static str {
        match self {
            ExperimentConfig::Example1(_) => "stokeslet",
            ExperimentConfig::Example2(_) => "stokeslet-rotlet",
        }
    }
}

/// Largest N for which the full O(N^2) reference is computed; above it the
/// error uses a sampled target subset.
pub const DIRECT_SUM_BUDGET: usize = 200_000;

/// Size of the sampled target subset used above the budget.
pub const ERROR_SAMPLE_SIZE: usize = 2000;

/// One benchmark run: parameters in, error/timings/counters out.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    pub example: u8,
    pub kernel: String,
    pub n_particles: usize,
    pub theta: f64,
    pub degree: usize,
    pub max_leaf: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub threads: usize,
    pub error: f64,
    pub t_tree_s: f64,
    pub t_moments_s: f64,
    pub t_treecode_s: f64,
    pub t_direct_s: f64,
    pub speedup: f64,
    pub kernel_evals: u64,
    pub moment_scalars: usize,
    /// True when the error was computed on a sampled target subset.
    pub sampled: bool,
}

impl RunReport {
    pub fn csv_header() -> &'static str {
        "example,kernel,N,theta,n,N0,eps,seed,threads,E,t_tree_s,t_moments_s,t_treecode_s,t_direct_s,speedup,kernel_evals,moment_scalars,sampled"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{:e},{},{},{},{},{},{},{},{}",
            self.example,
            self.kernel,
            self.n_particles,
            self.theta,
            self.degree,
            self.max_leaf,
            self.epsilon,
            self.seed,
            self.threads,
            self.error,
            self.t_tree_s,
            self.t_moments_s,
            self.t_treecode_s,
            self.t_direct_s,
            self.speedup,
            self.kernel_evals,
            self.moment_scalars,
            self.sampled,
        )
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let fields: Vec<&str> = row.trim().split(',').collect();
        if fields.len() != 18 {
            return Err(Error::MalformedReport(format!(
                "expected 18 fields, got {}",
                fields.len()
            )));
        }
        let bad = |what: &str| Error::MalformedReport(format!("bad field {what}: {row}"));
        Ok(Self {
            example: fields[0].parse().map_err(|_| bad("example"))?,
            kernel: fields[1].to_string(),
            n_particles: fields[2].parse().map_err(|_| bad("N"))?,
            theta: fields[3].parse().map_err(|_| bad("theta"))?,
            degree: fields[4].parse().map_err(|_| bad("n"))?,
            max_leaf: fields[5].parse().map_err(|_| bad("N0"))?,
            epsilon: fields[6].parse().map_err(|_| bad("eps"))?,
            seed: fields[7].parse().map_err(|_| bad("seed"))?,
            threads: fields[8].parse().map_err(|_| bad("threads"))?,
            error: fields[9].parse().map_err(|_| bad("E"))?,
            t_tree_s: fields[10].parse().map_err(|_| bad("t_tree_s"))?,
            t_moments_s: fields[11].parse().map_err(|_| bad("t_moments_s"))?,
            t_treecode_s: fields[12].parse().map_err(|_| bad("t_treecode_s"))?,
            t_direct_s: fields[13].parse().map_err(|_| bad("t_direct_s"))?,
            speedup: fields[14].parse().map_err(|_| bad("speedup"))?,
            kernel_evals: fields[15].parse().map_err(|_| bad("kernel_evals"))?,
            moment_scalars: fields[16].parse().map_err(|_| bad("moment_scalars"))?,
            sampled: fields[17].parse().map_err(|_| bad("sampled"))?,
        })
    }
}

/// Detailed outcome of one run, for callers that need the raw fields.
pub struct RunOutcome {
    pub report: RunReport,
    pub stats: InteractionStats,
}

fn run_generic<K: Kernel>(
    config: &ExperimentConfig,
    params: &TreecodeParams,
    kernel: &K,
    threads: usize,
    mut system: ParticleSystem,
) -> Result<RunOutcome> {
    params.validate()?;
    let n = system.len();

    let t0 = Instant::now();
    let tree = build_tree(&mut system, params.max_leaf, false)?;
    let t_tree = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let table = compute_all_moments(&tree, &system, params.degree)?;
    let t_moments = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let (treecode_out, stats) = evaluate_all(&system, &tree, &table, params, kernel, threads)?;
    let t_treecode = t0.elapsed().as_secs_f64();

    let p = kernel.output_dim();
    let sampled = n > DIRECT_SUM_BUDGET;
    let t0 = Instant::now();
    let error = if sampled {
        // Uniform sample of targets, deterministic in the seed.
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed().wrapping_add(0x5eed));
        let slots: Vec<usize> = sample(&mut rng, n, ERROR_SAMPLE_SIZE.min(n)).into_vec();
        let reference = direct_sum_targets(&system, kernel, &slots, threads)?;
        let mut approx = Vec::with_capacity(reference.len());
        for &slot in &slots {
            let orig = tree.permutation[slot];
            approx.extend_from_slice(&treecode_out[orig * p..(orig + 1) * p]);
        }
        relative_error(&reference, &approx)?
    } else {
        let direct_tree_order = direct_sum(&system, kernel, threads)?;
        let mut reference = vec![0.0; n * p];
        for (slot, &orig) in tree.permutation.iter().enumerate() {
            reference[orig * p..(orig + 1) * p]
                .copy_from_slice(&direct_tree_order[slot * p..(slot + 1) * p]);
        }
        relative_error(&reference, &treecode_out)?
    };
    let t_direct = t0.elapsed().as_secs_f64();

    let full_phase = t_tree + t_moments + t_treecode;
    let report = RunReport {
        example: config.example_number(),
        kernel: kernel.name().to_string(),
        n_particles: n,
        theta: params.theta,
        degree: params.degree,
        max_leaf: params.max_leaf,
        epsilon: config.epsilon(),
        seed: config.seed(),
        threads,
        error,
        t_tree_s: t_tree,
        t_moments_s: t_moments,
        t_treecode_s: t_treecode,
        t_direct_s: t_direct,
        speedup: if full_phase > 0.0 { t_direct / full_phase } else { 0.0 },
        kernel_evals: stats.kernel_evals,
        moment_scalars: table.storage_scalars(),
        sampled,
    };
    Ok(RunOutcome { report, stats })
}

/// Runs a full experiment: generate, build, compute moments, evaluate,
/// compare against direct summation, and report. `kernel_name` must be
/// compatible with the configuration's weight layout.
pub fn run_experiment(
    config: &ExperimentConfig,
    params: &TreecodeParams,
    kernel_name: &str,
    threads: usize,
) -> Result<RunOutcome> {
    let system = config.generate()?;
    run_system(config, params, kernel_name, threads, system)
}

/// Like [`run_experiment`] but with a caller-supplied particle system (e.g.
/// loaded from a file).
pub fn run_system(
    config: &ExperimentConfig,
    params: &TreecodeParams,
    kernel_name: &str,
    threads: usize,
    system: ParticleSystem,
) -> Result<RunOutcome> {
    let eps = config.epsilon();
    let m = system.weight_dim;
    let check = |need: usize, kernel: &str| {
        if m == need {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "kernel {kernel} needs weight dimension {need}, system has {m}"
            )))
        }
    };
    match kernel_name {
        "stokeslet" => {
            check(3, kernel_name)?;
            run_generic(config, params, &Stokeslet { epsilon: eps }, threads, system)
        }
        "stokeslet-rotlet" => {
            check(6, kernel_name)?;
            run_generic(config, params, &StokesletRotlet { epsilon: eps }, threads, system)
        }
        "coulomb" => {
            check(1, kernel_name)?;
            run_generic(config, params, &Coulomb, threads, system)
        }
        other => Err(Error::InvalidParameter(format!("unknown kernel: {other}"))),
    }
}
