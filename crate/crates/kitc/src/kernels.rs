//! Pluggable interaction kernels.
//!
//! The treecode core only ever calls [`Kernel::accumulate`], a black-box
//! point-pair evaluation that is linear in the weight vector; that linearity
//! is what allows per-cluster modified weights to stand in for the source
//! particles. Regularized Stokeslet and Stokeslet+rotlet kernels from the
//! method of regularized Stokeslets are provided, plus a scalar Coulomb
//! kernel used as a singular test case.

use crate::{Error, Result};

const EIGHT_PI: f64 = 8.0 * std::f64::consts::PI;

/// The five scalar radial functions of the regularized Stokes kernels,
/// evaluated at separation `r` with regularization `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrsScalars {
    pub h1: f64,
    pub h2: f64,
    pub q: f64,
    pub d1: f64,
    pub d2: f64,
}

fn mrs_scalars_from_r2(r2: f64, eps: f64) -> MrsScalars {
    let e2 = eps * eps;
    let s2 = r2 + e2;
    let s = s2.sqrt();
    let p3 = s2 * s; // (r^2 + eps^2)^(3/2)
    let p5 = p3 * s2;
    let p7 = p5 * s2;
    MrsScalars {
        h1: (2.0 * e2 + r2) / (EIGHT_PI * p3),
        h2: 1.0 / (EIGHT_PI * p3),
        q: (5.0 * e2 + 2.0 * r2) / (EIGHT_PI * p5),
        d1: (10.0 * e2 * e2 - 7.0 * e2 * r2 - 2.0 * r2 * r2) / (EIGHT_PI * p7),
        d2: (21.0 * e2 + 6.0 * r2) / (EIGHT_PI * p7),
    }
}

/// Evaluates H1, H2, Q, D1, D2 at separation `r`. Rejects `r = eps = 0`,
/// where the singular limit is undefined.
pub fn mrs_scalars(r: f64, eps: f64) -> Result<MrsScalars> {
    if r == 0.0 && eps == 0.0 {
        return Err(Error::SingularAtOrigin);
    }
    Ok(mrs_scalars_from_r2(r * r, eps))
}

#[inline]
fn sub(x: [f64; 3], y: [f64; 3]) -> [f64; 3] {
    [x[0] - y[0], x[1] - y[1], x[2] - y[2]]
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Velocity at `x` induced by a regularized Stokeslet of strength `f` at `y`:
/// `f H1(r) + [f · (x-y)] (x-y) H2(r)`.
pub fn stokeslet_velocity(x: [f64; 3], y: [f64; 3], f: [f64; 3], eps: f64) -> [f64; 3] {
    let d = sub(x, y);
    let sc = mrs_scalars_from_r2(dot(d, d), eps);
    let fd = dot(f, d);
    [
        f[0] * sc.h1 + fd * d[0] * sc.h2,
        f[1] * sc.h1 + fd * d[1] * sc.h2,
        f[2] * sc.h1 + fd * d[2] * sc.h2,
    ]
}

/// Linear and angular velocity at `x` induced by a regularized Stokeslet of
/// strength `f` and rotlet of strength `n` at `y`. Returns `(u, w)` packed as
/// a 6-vector.
///
/// The D2 term is taken as `¼ [n · (x-y)] (x-y) D2(r)`; the scalar form
/// without the trailing `(x-y)` factor is dimensionally inconsistent.
pub fn stokeslet_rotlet_velocity(
    x: [f64; 3],
    y: [f64; 3],
    f: [f64; 3],
    n: [f64; 3],
    eps: f64,
) -> [f64; 6] {
    let d = sub(x, y);
    let sc = mrs_scalars_from_r2(dot(d, d), eps);
    let fd = dot(f, d);
    let nd = dot(n, d);
    let nxd = cross(n, d);
    let fxd = cross(f, d);
    let mut out = [0.0; 6];
    for i in 0..3 {
        out[i] = f[i] * sc.h1 + fd * d[i] * sc.h2 + 0.5 * nxd[i] * sc.q;
        out[3 + i] = 0.5 * fxd[i] * sc.q + 0.25 * n[i] * sc.d1 + 0.25 * nd * d[i] * sc.d2;
    }
    out
}

/// Coulomb potential `q / |x - y|`; rejects coincident points.
pub fn coulomb_potential(x: [f64; 3], y: [f64; 3], q: f64) -> Result<f64> {
    let d = sub(x, y);
    let r = dot(d, d).sqrt();
    if r == 0.0 {
        return Err(Error::SingularAtOrigin);
    }
    Ok(q / r)
}

/// Black-box point-pair interaction, linear in the weight vector.
///
/// `accumulate` adds `k(target, source) · weight` into `out`; the treecode
/// never looks past this surface, which is what makes it kernel-independent.
pub trait Kernel: Sync {
    /// Dimension m of the per-particle weight vector.
    fn weight_dim(&self) -> usize;
    /// Dimension p of the output vector.
    fn output_dim(&self) -> usize;
    /// Whether the i = j term is part of the sum. Regularized kernels are
    /// finite at r = 0 and include it; singular kernels omit it.
    fn include_self_interaction(&self) -> bool;
    fn name(&self) -> &'static str;
    fn accumulate(&self, target: [f64; 3], source: [f64; 3], weight: &[f64], out: &mut [f64]);
}

/// Regularized Stokeslet kernel: 3-vector forces to 3-vector velocities.
#[derive(Debug, Clone, Copy)]
pub struct Stokeslet {
    pub epsilon: f64,
}

impl Kernel for Stokeslet {
    fn weight_dim(&self) -> usize {
        3
    }
    fn output_dim(&self) -> usize {
        3
    }
    fn include_self_interaction(&self) -> bool {
        self.epsilon > 0.0
    }
    fn name(&self) -> &'static str {
        "stokeslet"
    }
    fn accumulate(&self, target: [f64; 3], source: [f64; 3], weight: &[f64], out: &mut [f64]) {
        let u = stokeslet_velocity(target, source, [weight[0], weight[1], weight[2]], self.epsilon);
        out[0] += u[0];
        out[1] += u[1];
        out[2] += u[2];
    }
}

/// Regularized Stokeslet + rotlet kernel: (force, torque) 6-vectors to
/// (linear, angular) velocity 6-vectors.
#[derive(Debug, Clone, Copy)]
pub struct StokesletRotlet {
    pub epsilon: f64,
}

impl Kernel for StokesletRotlet {
    fn weight_dim(&self) -> usize {
        6
    }
    fn output_dim(&self) -> usize {
        6
    }
    fn include_self_interaction(&self) -> bool {
        self.epsilon > 0.0
    }
    fn name(&self) -> &'static str {
        "stokeslet-rotlet"
    }
    fn accumulate(&self, target: [f64; 3], source: [f64; 3], weight: &[f64], out: &mut [f64]) {
        let uw = stokeslet_rotlet_velocity(
            target,
            source,
            [weight[0], weight[1], weight[2]],
            [weight[3], weight[4], weight[5]],
            self.epsilon,
        );
        for i in 0..6 {
            out[i] += uw[i];
        }
    }
}

/// Singular Coulomb kernel `q / |x - y|`; the self term is omitted.
#[derive(Debug, Clone, Copy)]
pub struct Coulomb;

impl Kernel for Coulomb {
    fn weight_dim(&self) -> usize {
        1
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn include_self_interaction(&self) -> bool {
        false
    }
    fn name(&self) -> &'static str {
        "coulomb"
    }
    fn accumulate(&self, target: [f64; 3], source: [f64; 3], weight: &[f64], out: &mut [f64]) {
        let d = sub(target, source);
        out[0] += weight[0] / dot(d, d).sqrt();
    }
}

/// Kernel names accepted on the CLI.
pub const KERNEL_NAMES: [&str; 3] = ["stokeslet", "stokeslet-rotlet", "coulomb"];
