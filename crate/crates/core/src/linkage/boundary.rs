//! Exponents where two M1 merge comparisons swap order.
//!
//! For fixed distances the sign of `d1^a + d2^a - d1'^a - d2'^a` changes at
//! most once on `a > 0`, so each 4-tuple contributes at most one boundary.

use crate::error::{Error, Result};
use crate::instances::{combine_distance, ClusteringInstance, Simplex};

/// Absolute bisection tolerance on the exponent.
pub const ROOT_TOL: f64 = 1e-10;
/// Roots closer than this are merged by [`enumerate_boundaries_m1`].
pub const DEDUP_TOL: f64 = 1e-9;
/// Largest instance accepted by [`enumerate_boundaries_m1`].
pub const ENUMERATION_MAX_N: usize = 12;

/// `g(a) / m^a` with `m` the largest distance; same sign as `g`, no overflow.
/// Zero distances contribute `0^a = 0` for `a > 0`.
fn g_scaled(d: [f64; 4], alpha: f64) -> f64 {
    let m = d.iter().cloned().fold(0.0, f64::max);
    let p = |x: f64| if x == 0.0 { 0.0 } else { (alpha * (x / m).ln()).exp() };
    (p(d[0]) + p(d[1])) - (p(d[2]) + p(d[3]))
}

fn same_multiset(d: [f64; 4]) -> bool {
    let (a, b) = (d[0].min(d[1]), d[0].max(d[1]));
    let (c, e) = (d[2].min(d[3]), d[2].max(d[3]));
    a == c && b == e
}

fn root_in(d: [f64; 4], lo: f64, hi: f64) -> Option<f64> {
    if same_multiset(d) {
        return None;
    }
    let (mut a, mut b) = (lo, hi);
    let (ga, gb) = (g_scaled(d, a), g_scaled(d, b));
    if ga == 0.0 {
        return None;
    }
    if gb == 0.0 || ga.signum() == gb.signum() {
        return None;
    }
    while b - a > ROOT_TOL {
        let mid = 0.5 * (a + b);
        let gm = g_scaled(d, mid);
        if gm == 0.0 {
            return Some(mid);
        }
        if gm.signum() == ga.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

/// Root of `d1^a + d2^a = d1'^a + d2'^a` strictly inside `(alpha_lo, alpha_hi)`.
///
/// Returns `None` when `g` has no sign change on the interval or when the two
/// sides are the same multiset (equal for every `a`).
pub fn boundary_root_m1(
    d1: f64,
    d2: f64,
    d1p: f64,
    d2p: f64,
    alpha_lo: f64,
    alpha_hi: f64,
) -> Result<Option<f64>> {
    for (name, v) in [("d1", d1), ("d2", d2), ("d1'", d1p), ("d2'", d2p)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(name, format!("distance must be positive and finite, got {v}")));
        }
    }
    if !(alpha_lo > 0.0 && alpha_lo < alpha_hi && alpha_hi.is_finite()) {
        return Err(Error::invalid(
            "alpha range",
            format!("need 0 < lo < hi < inf, got ({alpha_lo}, {alpha_hi})"),
        ));
    }
    Ok(root_in([d1, d2, d1p, d2p], alpha_lo, alpha_hi))
}

/// Sorted, deduplicated roots of every 4-tuple equation over the distinct
/// entries of the combined matrix. A superset of the exponents at which the
/// M1 tree (and therefore the clustering utility) can change.
pub fn enumerate_boundaries_m1(
    instance: &ClusteringInstance,
    beta: &Simplex,
    alpha_lo: f64,
    alpha_hi: f64,
) -> Result<Vec<f64>> {
    let n = instance.n();
    if n > ENUMERATION_MAX_N {
        let estimate = (n as f64).powi(8);
        return Err(Error::GuardExceeded {
            what: format!("boundary enumeration over n = {n} points"),
            estimate,
            limit: (ENUMERATION_MAX_N as f64).powi(8),
        });
    }
    if !(alpha_lo > 0.0 && alpha_lo < alpha_hi && alpha_hi.is_finite()) {
        return Err(Error::invalid(
            "alpha range",
            format!("need 0 < lo < hi < inf, got ({alpha_lo}, {alpha_hi})"),
        ));
    }
    let d = combine_distance(beta, &instance.distances)?;
    let mut values = d.upper_entries();
    values.sort_by(f64::total_cmp);
    values.dedup();
    // unordered pairs with repetition: the (min, max) of a merge comparison
    let mut pairs = Vec::new();
    for i in 0..values.len() {
        for j in i..values.len() {
            pairs.push((values[i], values[j]));
        }
    }
    let mut roots = Vec::new();
    for a in 0..pairs.len() {
        for b in (a + 1)..pairs.len() {
            let t = [pairs[a].0, pairs[a].1, pairs[b].0, pairs[b].1];
            if let Some(r) = root_in(t, alpha_lo, alpha_hi) {
                roots.push(r);
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(roots.len());
    for r in roots {
        if out.last().is_none_or(|&last| r - last > DEDUP_TOL) {
            out.push(r);
        }
    }
    Ok(out)
}
