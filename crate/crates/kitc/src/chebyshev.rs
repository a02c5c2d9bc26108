//! Chebyshev points of the 2nd kind and stable barycentric Lagrange
//! interpolation in 1D.
//!
//! The interpolation nodes are `s_k = cos(kπ/n)`, k = 0..n, stored in that
//! natural (descending) order. The associated barycentric weights reduce to
//! the simple alternating values `(-1)^k δ_k` with `δ_k = 1/2` at the
//! endpoints and 1 inside. Because the barycentric form is invariant under a
//! common scaling of the weights, the same simple weights are valid on any
//! interval `[a, b]` together with the linearly mapped nodes; this is what
//! lets the treecode reuse one weight vector across clusters of every size.

use crate::{Error, Result};

/// Tolerance below which an evaluation point is considered to coincide with
/// an interpolation node, triggering the exact `L_k(s_j) = δ_jk` branch.
/// This is the smallest positive normal IEEE double (DBL_MIN).
pub const NODE_COINCIDENCE_TOL: f64 = f64::MIN_POSITIVE;

/// Chebyshev points of the 2nd kind on `[-1, 1]`: `cos(kπ/n)` for k = 0..n,
/// descending from +1 to -1 with both endpoints exact.
pub fn chebyshev_points(n: usize) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(Error::DegenerateDegree);
    }
    let mut pts = Vec::with_capacity(n + 1);
    for k in 0..=n {
        pts.push((k as f64 * std::f64::consts::PI / n as f64).cos());
    }
    pts[0] = 1.0;
    pts[n] = -1.0;
    if n % 2 == 0 {
        pts[n / 2] = 0.0;
    }
    Ok(pts)
}

/// Simple barycentric weights for Chebyshev points of the 2nd kind:
/// `w_k = (-1)^k`, halved at k = 0 and k = n.
pub fn simple_weights(n: usize) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(Error::DegenerateDegree);
    }
    let mut w = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let delta = if k == 0 || k == n { 0.5 } else { 1.0 };
        w.push(sign * delta);
    }
    Ok(w)
}

/// Degree-n Chebyshev grid on an interval, with the simple barycentric
/// weights. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ChebyshevGrid1d {
    n: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    a: f64,
    b: f64,
}

impl ChebyshevGrid1d {
    /// Grid of `n + 1` mapped Chebyshev points on `[a, b]`. The points stay
    /// in descending order, so `points()[0] == b` and `points()[n] == a`
    /// exactly.
    pub fn new(n: usize, a: f64, b: f64) -> Result<Self> {
        if a >= b {
            return Err(Error::InvalidInterval { a, b });
        }
        let mut points = chebyshev_points(n)?;
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        for p in points.iter_mut() {
            *p = mid + half * *p;
        }
        points[0] = b;
        points[n] = a;
        let weights = simple_weights(n)?;
        Ok(Self { n, points, weights, a, b })
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Evaluates all Lagrange basis polynomials `L_k(t)` in the 2nd
    /// barycentric form, writing them into `out` (length n + 1).
    ///
    /// If `t` lies within [`NODE_COINCIDENCE_TOL`] of a node `s_j`, the
    /// removable singularity is resolved exactly: `out` becomes the unit
    /// vector `e_j`. Arguments outside `[a, b]` are permitted and evaluate
    /// the same formula.
    pub fn eval_basis_into(&self, t: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n + 1);
        let mut flagged = None;
        let mut denom = 0.0;
        for k in 0..=self.n {
            let d = t - self.points[k];
            if d.abs() <= NODE_COINCIDENCE_TOL {
                flagged = Some(k);
                break;
            }
            let a = self.weights[k] / d;
            out[k] = a;
            denom += a;
        }
        if let Some(j) = flagged {
            out.fill(0.0);
            out[j] = 1.0;
        } else {
            let inv = 1.0 / denom;
            for v in out.iter_mut() {
                *v *= inv;
            }
        }
    }

    pub fn eval_basis(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n + 1];
        self.eval_basis_into(t, &mut out);
        out
    }
}
