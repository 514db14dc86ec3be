//! Stability of the midpoint map: a constructive splitter for Δ_p, a
//! generic LP splitter for polytopes, the unit-ball measure bound with an
//! LP adversary, and hull continuity near the sphere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::hull::{co_f_search, HullConfig, HullError, ObjectiveFunction};
use crate::lp::{LinearProgram, Sense};
use crate::spaces::{
    dot, norm_of, random_unit_vector, Point, SetDescriptor, SetFamily, SpaceError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Hull(#[from] HullError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("split reached {achieved:e}, not below the requested {eps:e}")]
    NotAchieved { achieved: f64, eps: f64 },
    #[error("internal failure: {0}")]
    Internal(String),
}

/// Internal membership slack for constructed points.
const SPLIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitResult {
    pub x: Point,
    pub y: Point,
    pub tau: f64,
    /// Number of leading coordinates split explicitly; the rest are scaled
    /// copies `(1±τ) z`.
    pub head_dim: usize,
    /// `max(‖x − a‖_p, ‖y − b‖_p)`.
    pub achieved_eps: f64,
    pub head_dist_x: f64,
    pub head_dist_y: f64,
    pub tail_norm_a: f64,
    pub tail_norm_b: f64,
    /// Multiplier of the head sum constraint (0 when inactive).
    pub lambda: f64,
}

fn in_simplex(v: &[f64]) -> bool {
    v.iter().all(|c| *c >= -SPLIT_TOL) && v.iter().sum::<f64>() <= 1.0 + SPLIT_TOL
}

/// Adjusts a split `x + y ≈ 2z` so that the floating-point sum is exactly
/// `2z`: the larger part is rounded, the smaller one is the exact
/// difference (Sterbenz), so the change is at most one rounding.
fn exact_pair(x: f64, z: f64) -> (f64, f64) {
    let target = 2.0 * z;
    if x >= z {
        (x, target - x)
    } else {
        let y = target - x;
        (target - y, y)
    }
}

/// Minimiser over `[0, 2z]` of `|t − a|^p + |t − m|^p + λt` where
/// `m = 2z − b`.
fn head_coordinate(a: f64, m: f64, hi: f64, p: f64, lambda: f64) -> f64 {
    if hi <= 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        return (0.5 * (a + m) - 0.25 * lambda).clamp(0.0, hi);
    }
    let dphi = |t: f64| {
        let da = t - a;
        let dm = t - m;
        p * (da.signum() * da.abs().powf(p - 1.0) + dm.signum() * dm.abs().powf(p - 1.0)) + lambda
    };
    if dphi(0.0) >= 0.0 {
        return 0.0;
    }
    if dphi(hi) <= 0.0 {
        return hi;
    }
    let (mut lo, mut up) = (0.0, hi);
    for _ in 0..80 {
        let mid = 0.5 * (lo + up);
        if mid <= lo || mid >= up {
            break;
        }
        if dphi(mid) < 0.0 {
            lo = mid;
        } else {
            up = mid;
        }
    }
    0.5 * (lo + up)
}

/// Splits `2z` on the head coordinates as `x + y` with `0 ≤ x ≤ 2z`, close
/// to `(a, b)` in `Σ|x − a|^p + |y − b|^p`, subject to `Σx ≤ 1`, `Σy ≤ 1`.
/// Returns `(x, λ)`.
fn split_head(a: &[f64], b: &[f64], z: &[f64], p: f64) -> (Vec<f64>, f64) {
    let m: Vec<f64> = z.iter().zip(b).map(|(zk, bk)| 2.0 * zk - bk).collect();
    let solve = |lambda: f64| -> Vec<f64> {
        (0..z.len())
            .map(|k| head_coordinate(a[k], m[k], 2.0 * z[k], p, lambda))
            .collect()
    };
    let total_z2: f64 = z.iter().map(|v| 2.0 * v).sum();
    let upper = 1.0;
    let lower = total_z2 - 1.0;
    let x0 = solve(0.0);
    let s0: f64 = x0.iter().sum();
    if s0 <= upper && s0 >= lower {
        return (x0, 0.0);
    }
    // Σx(λ) is nonincreasing in λ; bracket and bisect toward the active
    // bound, keeping the feasible end
    let (target, sign) = if s0 > upper {
        (upper, 1.0)
    } else {
        (lower, -1.0)
    };
    let feasible = |s: f64| if sign > 0.0 { s <= target } else { s >= target };
    let mut hi = 1.0;
    while !feasible(solve(sign * hi).iter().sum()) {
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(solve(sign * mid).iter().sum()) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (solve(sign * hi), sign * hi)
}

/// Constructs `x, y ∈ Δ_p` with `(x + y)/2 = z` exactly and both close to
/// `a, b`: an explicit split of the leading coordinates and `(1 ± τ)z` on
/// the tail, `τ` chosen so both coordinate sums stay at most one.
pub fn delta_p_split(
    p: f64,
    a: &Point,
    b: &Point,
    z: &Point,
    eps: f64,
) -> Result<SplitResult, StabilityError> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(SpaceError::BadExponent(p).into());
    }
    let n = z.dim();
    if a.dim() != n || b.dim() != n {
        return Err(SpaceError::DimensionMismatch {
            expected: n,
            got: a.dim().min(b.dim()),
        }
        .into());
    }
    if !(eps > 0.0) {
        return Err(StabilityError::Precondition(format!(
            "eps must be positive, got {eps}"
        )));
    }
    for (name, v) in [("a", a), ("b", b), ("z", z)] {
        if !in_simplex(v.coords()) {
            return Err(StabilityError::Precondition(format!(
                "{name} is not in Δ_p"
            )));
        }
    }
    let (ac, bc, zc) = (a.coords(), b.coords(), z.coords());
    let retag = |v: Vec<f64>| Point::from_vec_unchecked(v, p);
    if (0..n).all(|k| ac[k] + bc[k] == 2.0 * zc[k]) {
        return Ok(SplitResult {
            x: retag(ac.to_vec()),
            y: retag(bc.to_vec()),
            tau: 0.0,
            head_dim: 0,
            achieved_eps: 0.0,
            head_dist_x: 0.0,
            head_dist_y: 0.0,
            tail_norm_a: norm_of(ac, p),
            tail_norm_b: norm_of(bc, p),
            lambda: 0.0,
        });
    }
    let c: Vec<f64> = (0..n).map(|k| 0.5 * (ac[k] + bc[k])).collect();
    let dist: f64 = norm_of(
        &zc.iter().zip(&c).map(|(u, v)| u - v).collect::<Vec<_>>(),
        p,
    );
    let delta = eps / 6.0;
    if !(dist < delta) {
        return Err(StabilityError::Precondition(format!(
            "‖z − (a+b)/2‖_p = {dist:e} is not below eps/6 = {delta:e}"
        )));
    }

    // smallest N whose tails of a and b are both below eps/6
    let suffix = |v: &[f64]| {
        let mut s = vec![0.0; n + 1];
        for k in (0..n).rev() {
            s[k] = s[k + 1] + v[k].abs().powf(p);
        }
        s
    };
    let (sa, sb) = (suffix(ac), suffix(bc));
    let bound = delta.powf(p);
    let head_dim = (0..=n)
        .find(|&k| sa[k] < bound && sb[k] < bound)
        .unwrap_or(n);
    let tail_norm_a = sa[head_dim].powf(1.0 / p);
    let tail_norm_b = sb[head_dim].powf(1.0 / p);

    let (head_x, lambda) = split_head(&ac[..head_dim], &bc[..head_dim], &zc[..head_dim], p);
    let sx: f64 = head_x.iter().sum();
    let sy: f64 = (0..head_dim).map(|k| 2.0 * zc[k] - head_x[k]).sum();
    let tail: f64 = zc[head_dim..].iter().sum();

    let sums = |tau: f64| (sx + (1.0 + tau) * tail, sy + (1.0 - tau) * tail);
    let ok = |tau: f64| {
        let (u, v) = sums(tau);
        u <= 1.0 + SPLIT_TOL && v <= 1.0 + SPLIT_TOL
    };
    let tau = if tail == 0.0 || ok(0.0) {
        0.0
    } else {
        let g = |tau: f64| {
            let (u, v) = sums(tau);
            u - v
        };
        if g(-1.0) >= 0.0 {
            -1.0
        } else if g(1.0) <= 0.0 {
            1.0
        } else {
            let (mut lo, mut hi) = (-1.0, 1.0);
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                if g(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if ok(lo) {
                lo
            } else {
                hi
            }
        }
    };
    if !ok(tau) {
        return Err(StabilityError::Internal(format!(
            "no admissible τ (head sums {sx}, {sy})"
        )));
    }

    let mut x = head_x;
    x.extend(zc[head_dim..].iter().map(|v| (1.0 + tau) * v));
    let mut y = Vec::with_capacity(n);
    for k in 0..n {
        let (xk, yk) = exact_pair(x[k].clamp(0.0, 2.0 * zc[k]), zc[k]);
        x[k] = xk;
        y.push(yk);
    }
    if (0..n).any(|k| (x[k] + y[k]) * 0.5 != zc[k]) {
        return Err(StabilityError::Internal("midpoint is not exact".into()));
    }
    if !in_simplex(&x) || !in_simplex(&y) {
        return Err(StabilityError::Internal("split left Δ_p".into()));
    }
    let diff = |u: &[f64], v: &[f64]| -> Vec<f64> { u.iter().zip(v).map(|(s, t)| s - t).collect() };
    let head_dist_x = norm_of(&diff(&x[..head_dim], &ac[..head_dim]), p);
    let head_dist_y = norm_of(&diff(&y[..head_dim], &bc[..head_dim]), p);
    let achieved_eps = norm_of(&diff(&x, ac), p).max(norm_of(&diff(&y, bc), p));
    if !(achieved_eps < eps) {
        return Err(StabilityError::NotAchieved {
            achieved: achieved_eps,
            eps,
        });
    }
    Ok(SplitResult {
        x: retag(x),
        y: retag(y),
        tau,
        head_dim,
        achieved_eps,
        head_dist_x,
        head_dist_y,
        tail_norm_a,
        tail_norm_b,
        lambda,
    })
}

/// Splits `2z` inside a polytope by linear programming: minimise
/// `Σ|x − a| + Σ|y − b|` over `x, y = 2z − x` in the set.
fn lp_split(
    desc: &SetDescriptor,
    a: &[f64],
    b: &[f64],
    z: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), StabilityError> {
    let n = z.len();
    let mut lp = LinearProgram::minimize();
    let x: Vec<usize> = (0..n)
        .map(|_| lp.var(0.0, f64::NEG_INFINITY, f64::INFINITY))
        .collect();
    let u: Vec<usize> = (0..n).map(|_| lp.var(1.0, 0.0, f64::INFINITY)).collect();
    let v: Vec<usize> = (0..n).map(|_| lp.var(1.0, 0.0, f64::INFINITY)).collect();
    for k in 0..n {
        // u ≥ |x − a|, v ≥ |2z − x − b|
        lp.constraint(&[(u[k], 1.0), (x[k], -1.0)], Sense::Ge, -a[k]);
        lp.constraint(&[(u[k], 1.0), (x[k], 1.0)], Sense::Ge, a[k]);
        lp.constraint(&[(v[k], 1.0), (x[k], 1.0)], Sense::Ge, 2.0 * z[k] - b[k]);
        lp.constraint(&[(v[k], 1.0), (x[k], -1.0)], Sense::Ge, b[k] - 2.0 * z[k]);
    }
    match desc.family() {
        SetFamily::L1ConeBounded
        | SetFamily::SimplexDeltaP { .. }
        | SetFamily::StandardTruncatedSimplex => {
            let all: Vec<(usize, f64)> = x.iter().map(|i| (*i, 1.0)).collect();
            lp.constraint(&all, Sense::Le, 1.0);
            lp.constraint(&all, Sense::Ge, 2.0 * z.iter().sum::<f64>() - 1.0);
            for k in 0..n {
                lp.constraint(&[(x[k], 1.0)], Sense::Ge, 0.0);
                lp.constraint(&[(x[k], 1.0)], Sense::Le, 2.0 * z[k]);
            }
        }
        SetFamily::HilbertCube { a: w } => {
            for k in 0..n {
                lp.constraint(&[(x[k], 1.0)], Sense::Le, w[k].min(2.0 * z[k] + w[k]));
                lp.constraint(&[(x[k], 1.0)], Sense::Ge, (-w[k]).max(2.0 * z[k] - w[k]));
            }
        }
        _ => {
            return Err(StabilityError::Precondition(format!(
                "no LP splitter for {}",
                desc.family().name()
            )))
        }
    }
    let sol = lp
        .solve()
        .map_err(|e| StabilityError::Internal(format!("LP splitter: {e}")))?;
    let mut xs: Vec<f64> = x.iter().map(|i| sol.x[*i]).collect();
    let mut ys = Vec::with_capacity(n);
    for k in 0..n {
        if desc.is_simplex_like() {
            xs[k] = xs[k].clamp(0.0, 2.0 * z[k]);
        }
        let (xk, yk) = exact_pair(xs[k], z[k]);
        xs[k] = xk;
        ys.push(yk);
    }
    Ok((xs, ys))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRecord {
    /// `‖z_k − (a+b)/2‖` in the ambient norm.
    pub dist: f64,
    pub eps: f64,
    pub achieved: Option<f64>,
    pub success: bool,
    pub method: &'static str,
    pub error: Option<String>,
}

/// Attempts a split of every `z_k` around `(a, b)` with tolerance
/// `eps_schedule[k]` (the last entry repeats if the schedule is short).
/// Failures are recorded, never raised.
pub fn midpoint_openness_probe(
    desc: &SetDescriptor,
    a: &Point,
    b: &Point,
    z_seq: &[Point],
    eps_schedule: &[f64],
) -> Vec<ProbeRecord> {
    let p = desc.ambient_p();
    let c: Vec<f64> = a
        .coords()
        .iter()
        .zip(b.coords())
        .map(|(u, v)| 0.5 * (u + v))
        .collect();
    z_seq
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let eps = eps_schedule
                .get(k)
                .or(eps_schedule.last())
                .copied()
                .unwrap_or(f64::NAN);
            let dist = if z.dim() == c.len() {
                norm_of(
                    &z.coords()
                        .iter()
                        .zip(&c)
                        .map(|(u, v)| u - v)
                        .collect::<Vec<_>>(),
                    p,
                )
            } else {
                f64::NAN
            };
            let fail = |method, msg: String| ProbeRecord {
                dist,
                eps,
                achieved: None,
                success: false,
                method,
                error: Some(msg),
            };
            match desc.family() {
                SetFamily::SimplexDeltaP { p } => match delta_p_split(*p, a, b, z, eps) {
                    Ok(s) => ProbeRecord {
                        dist,
                        eps,
                        achieved: Some(s.achieved_eps),
                        success: true,
                        method: "delta-p-split",
                        error: None,
                    },
                    Err(e) => fail("delta-p-split", e.to_string()),
                },
                _ if desc.is_polyhedral() => {
                    if z.dim() != desc.dim() || a.dim() != desc.dim() || b.dim() != desc.dim() {
                        return fail("lp-split", "dimension mismatch".into());
                    }
                    match lp_split(desc, a.coords(), b.coords(), z.coords()) {
                        Ok((x, y)) => {
                            let exact = (0..x.len()).all(|i| (x[i] + y[i]) * 0.5 == z.coords()[i]);
                            let inside = desc.contains_slice(&x, SPLIT_TOL)
                                && desc.contains_slice(&y, SPLIT_TOL);
                            let dx = norm_of(
                                &x.iter()
                                    .zip(a.coords())
                                    .map(|(s, t)| s - t)
                                    .collect::<Vec<_>>(),
                                p,
                            );
                            let dy = norm_of(
                                &y.iter()
                                    .zip(b.coords())
                                    .map(|(s, t)| s - t)
                                    .collect::<Vec<_>>(),
                                p,
                            );
                            let achieved = dx.max(dy);
                            ProbeRecord {
                                dist,
                                eps,
                                achieved: Some(achieved),
                                success: exact && inside && achieved < eps,
                                method: "lp-split",
                                error: if exact && inside {
                                    None
                                } else {
                                    Some("split check failed".into())
                                },
                            }
                        }
                        Err(e) => fail("lp-split", e.to_string()),
                    }
                }
                fam => fail("none", format!("no splitter for {}", fam.name())),
            }
        })
        .collect()
}

/// `r(δ, z) = (δ² − (1 − ‖z‖²)) / (δ² − (1 − ‖z‖)²)`: lower bound on the
/// mass any measure on the unit ball with barycenter `z` gives to the
/// δ-ball around `z`.
pub fn ball_bound(z: &Point, delta: f64) -> Result<f64, StabilityError> {
    ball_bound_from_norm(norm_of(z.coords(), 2.0), delta)
}

pub fn ball_bound_from_norm(n: f64, delta: f64) -> Result<f64, StabilityError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(StabilityError::Precondition(format!(
            "δ must be positive, got {delta}"
        )));
    }
    if !(n <= 1.0 + 1e-12) {
        return Err(StabilityError::Precondition(format!("‖z‖ = {n} exceeds 1")));
    }
    let n = n.min(1.0);
    if !(n > 1.0 - delta) {
        return Err(StabilityError::Precondition(format!(
            "‖z‖ = {n} is not above 1 − δ = {}",
            1.0 - delta
        )));
    }
    let d2 = delta * delta;
    Ok((d2 - (1.0 - n * n)) / (d2 - (1.0 - n) * (1.0 - n)))
}

/// Near-extremal measure for the ball bound: weight on the pole `z/‖z‖` and
/// two atoms on the sphere just outside the δ-ball (latitude `h − η`,
/// `h = (1 + ‖z‖² − δ²)/(2‖z‖)`), weighted so the barycenter is `z`.
/// Needs `dim ≥ 2`. Returns `(atoms, weights)`.
pub fn ball_tight_configuration(
    z: &[f64],
    delta: f64,
    eta: f64,
    u: &[f64],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = norm_of(z, 2.0);
    let zb: Vec<f64> = z.iter().map(|v| v / n).collect();
    let h = (1.0 + n * n - delta * delta) / (2.0 * n);
    let lat = (h - eta).max(-1.0);
    let side = (1.0 - lat * lat).max(0.0).sqrt();
    let ring = |s: f64| -> Vec<f64> {
        zb.iter()
            .zip(u)
            .map(|(a, b)| lat * a + s * side * b)
            .collect()
    };
    let w_pole = (n - lat) / (1.0 - lat);
    let (plus, minus) = (ring(1.0), ring(-1.0));
    (
        vec![zb, plus, minus],
        vec![w_pole, 0.5 * (1.0 - w_pole), 0.5 * (1.0 - w_pole)],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversaryReport {
    pub max_outside_mass: f64,
    /// `1 − r(δ, z)`.
    pub bound: f64,
    pub trials: usize,
    pub skipped: usize,
}

/// Maximises, over `trials` random atom sets in the unit ball of `R^dim`,
/// the mass a measure with barycenter `z` can put outside the δ-ball
/// around `z`. Each trial solves one LP.
pub fn ball_bound_adversary(
    z: &Point,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<AdversaryReport, StabilityError> {
    let r = ball_bound(z, delta)?;
    let dim = z.dim();
    let zc = z.coords();
    let n = norm_of(zc, 2.0);
    let results: Vec<Option<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            adversary_trial(zc, n, delta, dim, &mut rng)
        })
        .collect();
    let skipped = results.iter().filter(|r| r.is_none()).count();
    let max_outside_mass = results.into_iter().flatten().fold(0.0, f64::max);
    Ok(AdversaryReport {
        max_outside_mass,
        bound: 1.0 - r,
        trials,
        skipped,
    })
}

fn adversary_trial<R: Rng + ?Sized>(
    z: &[f64],
    n: f64,
    delta: f64,
    dim: usize,
    rng: &mut R,
) -> Option<f64> {
    let mut atoms: Vec<Vec<f64>> = vec![z.to_vec()];
    for _ in 0..24 {
        atoms.push(random_unit_vector(dim, rng));
    }
    for _ in 0..12 {
        let u = random_unit_vector(dim, rng);
        let s = rng.gen::<f64>().powf(1.0 / dim as f64);
        atoms.push(u.iter().map(|v| v * s).collect());
    }
    if n > 0.0 && dim >= 2 {
        // the near-extremal ring along a random orthogonal direction
        let zb: Vec<f64> = z.iter().map(|v| v / n).collect();
        let g = random_unit_vector(dim, rng);
        let proj = dot(&g, &zb);
        let mut u: Vec<f64> = g.iter().zip(&zb).map(|(a, b)| a - proj * b).collect();
        let un = norm_of(&u, 2.0);
        if un > 1e-9 {
            u.iter_mut().for_each(|v| *v /= un);
            let eta = 10f64.powf(-rng.gen_range(3.0..9.0));
            let (ring, _) = ball_tight_configuration(z, delta, eta, &u);
            atoms.extend(ring);
        }
    }
    for a in atoms.iter_mut() {
        let s = norm_of(a, 2.0);
        if s > 1.0 {
            a.iter_mut().for_each(|v| *v /= s);
        }
    }
    let outside: Vec<bool> = atoms
        .iter()
        .map(|a| {
            norm_of(
                &a.iter().zip(z).map(|(u, v)| u - v).collect::<Vec<_>>(),
                2.0,
            ) > delta
        })
        .collect();
    let mut lp = LinearProgram::maximize();
    let w: Vec<usize> = outside
        .iter()
        .map(|o| lp.var(if *o { 1.0 } else { 0.0 }, 0.0, f64::INFINITY))
        .collect();
    for j in 0..dim {
        let row: Vec<(usize, f64)> = w.iter().zip(&atoms).map(|(v, a)| (*v, a[j])).collect();
        lp.constraint(&row, Sense::Eq, z[j]);
    }
    let ones: Vec<(usize, f64)> = w.iter().map(|v| (*v, 1.0)).collect();
    lp.constraint(&ones, Sense::Eq, 1.0);
    let sol = lp.solve().ok()?;
    let weights: Vec<f64> = w.iter().map(|v| sol.x[*v].max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    // recompute from the weights rather than trusting the LP objective
    Some(
        weights
            .iter()
            .zip(&outside)
            .filter(|(_, o)| **o)
            .map(|(w, _)| w)
            .sum::<f64>()
            / total,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityRecord {
    pub z_norm: f64,
    pub dist: f64,
    /// δ minimising the bound.
    pub delta: f64,
    pub r: f64,
    /// `ε r + N(1 − r)` with `ε = 2Lδ`.
    pub bound: f64,
    /// `|f(x) − co f(z)|` from the hull solver.
    pub gap: f64,
    pub within_bound: bool,
}

/// For each `z_k` near the sphere point `x`, compares the solver gap
/// `|f(x) − co f(z_k)|` with `ε r(δ, z_k) + N(1 − r(δ, z_k))`, where
/// `ε = 2Lδ` for an `L`-Lipschitz `f` and `N = sup |f|` (declared bounds
/// combined with sampled values). `δ` is optimised on a geometric grid.
pub fn ball_hull_continuity(
    f: &ObjectiveFunction,
    x: &Point,
    z_seq: &[Point],
    lipschitz: f64,
    cfg: &HullConfig,
) -> Result<Vec<ContinuityRecord>, StabilityError> {
    let dim = x.dim();
    if (norm_of(x.coords(), 2.0) - 1.0).abs() > 1e-12 {
        return Err(StabilityError::Precondition(
            "x must lie on the unit sphere".into(),
        ));
    }
    if !(lipschitz >= 0.0) {
        return Err(StabilityError::Precondition(
            "Lipschitz constant must be nonnegative".into(),
        ));
    }
    let desc = SetDescriptor::unit_ball(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sup = 0.0_f64;
    let (lo, hi) = f.bounds();
    if lo.is_finite() && hi.is_finite() {
        sup = lo.abs().max(hi.abs());
    } else {
        for _ in 0..cfg.samples.max(1) {
            sup = sup.max(f.eval_slice(&desc.sample_point(&mut rng)).abs());
        }
        for e in desc.extreme_candidates(cfg.samples, &mut rng) {
            sup = sup.max(f.eval_slice(&e).abs());
        }
    }
    let fx = f.eval(x);
    z_seq
        .iter()
        .map(|z| {
            if z.dim() != dim {
                return Err(SpaceError::DimensionMismatch {
                    expected: dim,
                    got: z.dim(),
                }
                .into());
            }
            let z_norm = norm_of(z.coords(), 2.0);
            let dist = z.sub(x).norm();
            let mut best = (f64::INFINITY, f64::NAN, f64::NAN);
            for i in 0..=400 {
                let delta = dist.max(1e-300) * 10f64.powf(i as f64 * 0.02) * (1.0 + 1e-9);
                if delta > 2.0 {
                    break;
                }
                if let Ok(r) = ball_bound_from_norm(z_norm, delta) {
                    let r = r.clamp(0.0, 1.0);
                    let bound = 2.0 * lipschitz * delta * r + sup * (1.0 - r);
                    if bound < best.0 {
                        best = (bound, delta, r);
                    }
                }
            }
            let (bound, delta, r) = best;
            let hull = co_f_search(
                &desc,
                f,
                &Point::from_vec_unchecked(z.coords().to_vec(), 2.0),
                cfg,
            )?;
            let gap = (fx - hull.value).abs();
            Ok(ContinuityRecord {
                z_norm,
                dist,
                delta,
                r,
                bound,
                gap,
                within_bound: gap <= bound + 1e-9,
            })
        })
        .collect()
}

/// Concave function `f = −a²`, `a(y) = ⟨y, x1 − x2⟩`, showing that the
/// midpoint `x0` of `x1 ≠ x2` is not extreme:
/// `f(x0) − ½(f(x1) + f(x2)) = ‖x1 − x2‖⁴/4 > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Separator {
    pub slope: Vec<f64>,
    pub gap: f64,
}

impl Separator {
    pub fn affine(&self, y: &[f64]) -> f64 {
        dot(&self.slope, y)
    }

    pub fn concave(&self, y: &[f64]) -> f64 {
        -self.affine(y).powi(2)
    }
}

pub fn extreme_point_separator(
    x0: &Point,
    x1: &Point,
    x2: &Point,
) -> Result<Separator, StabilityError> {
    let d = x0.dim();
    if x1.dim() != d || x2.dim() != d {
        return Err(SpaceError::DimensionMismatch {
            expected: d,
            got: x1.dim().min(x2.dim()),
        }
        .into());
    }
    if x1 == x2 {
        return Err(StabilityError::Precondition("x1 and x2 coincide".into()));
    }
    let scale = 1.0 + norm_of(x1.coords(), f64::INFINITY).max(norm_of(x2.coords(), f64::INFINITY));
    let mid_err = (0..d)
        .map(|i| (x0.coords()[i] - 0.5 * (x1.coords()[i] + x2.coords()[i])).abs())
        .fold(0.0, f64::max);
    if mid_err > 1e-12 * scale {
        return Err(StabilityError::Precondition(format!(
            "x0 is {mid_err:e} away from the midpoint"
        )));
    }
    let slope: Vec<f64> = x1
        .coords()
        .iter()
        .zip(x2.coords())
        .map(|(a, b)| a - b)
        .collect();
    let mut s = Separator { slope, gap: 0.0 };
    s.gap = s.concave(x0.coords()) - 0.5 * (s.concave(x1.coords()) + s.concave(x2.coords()));
    Ok(s)
}
