//! Convex hulls of functions on truncated sets:
//! `co f(x) = inf { Σ π_i f(x_i) : Σ π_i x_i = x }` over finitely supported
//! decompositions, searched by linear programming over proposed supports.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lp::{LinearProgram, LpError, Sense};
use crate::measures::{barycenter, FiniteMeasure};
use crate::spaces::{dot, norm_of, Point, SetDescriptor, SpaceError, MEMBERSHIP_TOL};

/// Largest accepted barycenter residual of a returned decomposition.
pub const BARYCENTER_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HullError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("point is not in the set")]
    NotInSet,
    #[error("{0}")]
    BadInput(String),
    #[error("objective returned a non-finite value at {0:?}")]
    NonFiniteValue(Vec<f64>),
    #[error("no proposed support contains the point in its convex hull after {rounds} rounds ({pool} candidate atoms)")]
    Infeasible { rounds: usize, pool: usize },
    #[error("decomposition barycenter misses the point by {0:e}")]
    Inaccurate(f64),
    #[error("sequence distances to the limit increase at index {0}")]
    NotConverging(usize),
}

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A real function on the target set, with the shape facts the caller
/// vouches for.
#[derive(Clone)]
pub struct ObjectiveFunction {
    name: String,
    eval: Evaluator,
    concave: bool,
    convex: bool,
    bounds: (f64, f64),
    table: Option<Arc<Vec<Vec<f64>>>>,
}

impl fmt::Debug for ObjectiveFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveFunction")
            .field("name", &self.name)
            .field("concave", &self.concave)
            .field("convex", &self.convex)
            .field("bounds", &self.bounds)
            .finish()
    }
}

impl ObjectiveFunction {
    pub fn new<F>(name: &str, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Arc::new(f),
            concave: false,
            convex: false,
            bounds: (f64::NEG_INFINITY, f64::INFINITY),
            table: None,
        }
    }

    pub fn declare_concave(mut self) -> Self {
        self.concave = true;
        self
    }

    pub fn declare_convex(mut self) -> Self {
        self.convex = true;
        self
    }

    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Self {
        self.bounds = (lower, upper);
        self
    }

    /// `1 − ‖x‖_p`.
    pub fn one_minus_norm(p: f64) -> Self {
        Self::new(&format!("one-minus-norm:{p}"), move |x| 1.0 - norm_of(x, p))
            .declare_concave()
            .with_bounds(f64::NEG_INFINITY, 1.0)
    }

    /// `‖x‖_2²`.
    pub fn sq_norm() -> Self {
        Self::new("sq-norm", |x| dot(x, x))
            .declare_convex()
            .with_bounds(0.0, f64::INFINITY)
    }

    /// `−‖x‖_2²`.
    pub fn neg_sq_norm() -> Self {
        Self::new("neg-sq-norm", |x| -dot(x, x))
            .declare_concave()
            .with_bounds(f64::NEG_INFINITY, 0.0)
    }

    /// `⟨slope, x⟩ + offset`.
    pub fn affine(slope: Vec<f64>, offset: f64) -> Self {
        Self::new("affine", move |x| dot(&slope, x) + offset)
            .declare_concave()
            .declare_convex()
    }

    /// A function known only on a point cloud. Hull searches use the table
    /// points as the only admissible atoms, which makes the search an exact
    /// linear program; evaluation elsewhere returns the nearest tabulated
    /// value.
    pub fn table(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self, HullError> {
        if points.is_empty() || points.len() != values.len() {
            return Err(HullError::BadInput(format!(
                "table needs matching non-empty point and value lists ({} points, {} values)",
                points.len(),
                values.len()
            )));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) || values.iter().any(|v| !v.is_finite()) {
            return Err(HullError::BadInput(
                "table points must share one dimension and values must be finite".into(),
            ));
        }
        let pts = Arc::new(points);
        let lookup = Arc::clone(&pts);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut f = Self::new("table", move |x| {
            let mut best = (f64::INFINITY, 0);
            for (i, p) in lookup.iter().enumerate() {
                let d: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best.0 {
                    best = (d, i);
                }
            }
            values[best.1]
        })
        .with_bounds(lo, hi);
        f.table = Some(pts);
        Ok(f)
    }

    /// Builtins by name: `one-minus-norm[:p]` (default `p` = `ambient_p`),
    /// `sq-norm`, `neg-sq-norm`.
    pub fn builtin(name: &str, ambient_p: f64) -> Result<Self, HullError> {
        let (head, arg) = match name.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (name, None),
        };
        match (head, arg) {
            ("one-minus-norm", None) => Ok(Self::one_minus_norm(ambient_p)),
            ("one-minus-norm", Some(a)) => {
                let p: f64 = a
                    .parse()
                    .map_err(|_| HullError::BadInput(format!("bad exponent in {name:?}")))?;
                if !(p >= 1.0) {
                    return Err(SpaceError::BadExponent(p).into());
                }
                Ok(Self::one_minus_norm(p))
            }
            ("sq-norm", None) => Ok(Self::sq_norm()),
            ("neg-sq-norm", None) => Ok(Self::neg_sq_norm()),
            _ => Err(HullError::BadInput(format!(
                "unknown builtin function {name:?}"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_concave(&self) -> bool {
        self.concave
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn is_table(&self) -> bool {
        self.table.is_some()
    }

    pub fn eval(&self, x: &Point) -> f64 {
        (self.eval)(x.coords())
    }

    pub fn eval_slice(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }
}

#[derive(Debug, Clone)]
pub struct HullConfig {
    pub restarts: usize,
    pub seed: u64,
    /// A round that improves the value by less than this counts as a stall.
    pub tol: f64,
    pub max_rounds: usize,
    /// Consecutive stalled rounds before a restart stops.
    pub patience: usize,
    /// Sampled extreme points per round on sets with infinitely many.
    pub extreme_samples: usize,
    pub perturbations_per_atom: usize,
    /// Initial standard deviation of atom perturbations; halves every round.
    pub initial_step: f64,
    /// Random points used to validate affine minorants.
    pub samples: usize,
    pub compute_lower_bound: bool,
}

impl Default for HullConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            seed: 0x5EED,
            tol: 1e-10,
            max_rounds: 25,
            patience: 2,
            extreme_samples: 32,
            perturbations_per_atom: 4,
            initial_step: 0.25,
            samples: 2000,
            compute_lower_bound: true,
        }
    }
}

/// Affine function `a(y) = ⟨slope, y⟩ + offset` certified (by sampling) to
/// stay below `f`, together with its value at the query point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineLowerBound {
    pub value: f64,
    pub slope: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullSolution {
    /// Upper bound on `co f(x)` realised by `decomposition`.
    pub value: f64,
    pub decomposition: FiniteMeasure,
    pub lower_bound: Option<AffineLowerBound>,
    /// Rounds run by the winning restart.
    pub iterations: usize,
    /// Set when `f` is declared neither concave nor convex: the value is
    /// then only a search result and `lower_bound` is the sole optimality
    /// evidence.
    pub heuristic: bool,
}

/// `Σ λ_i f(v_i)`: the hull of a concave function on a simplex at the point
/// with barycentric coordinates `λ`.
pub fn co_f_simplex_exact(vertex_values: &[f64], barycentric: &[f64]) -> Result<f64, HullError> {
    if vertex_values.len() != barycentric.len() || vertex_values.is_empty() {
        return Err(HullError::BadInput(format!(
            "{} vertex values but {} barycentric coordinates",
            vertex_values.len(),
            barycentric.len()
        )));
    }
    if barycentric.iter().any(|l| !(*l >= -1e-12)) {
        return Err(HullError::BadInput(
            "barycentric coordinates must be nonnegative".into(),
        ));
    }
    let s: f64 = barycentric.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(HullError::BadInput(format!(
            "barycentric coordinates sum to {s}"
        )));
    }
    Ok(vertex_values
        .iter()
        .zip(barycentric)
        .map(|(v, l)| v * l)
        .sum())
}

pub fn co_f_search(
    desc: &SetDescriptor,
    f: &ObjectiveFunction,
    x: &Point,
    cfg: &HullConfig,
) -> Result<HullSolution, HullError> {
    co_f_search_seeded(desc, f, x, cfg, &[])
}

/// [`co_f_search`] with extra atoms added to every restart's initial pool,
/// e.g. the atoms of a known decomposition of `x`.
pub fn co_f_search_seeded(
    desc: &SetDescriptor,
    f: &ObjectiveFunction,
    x: &Point,
    cfg: &HullConfig,
    seed_atoms: &[Point],
) -> Result<HullSolution, HullError> {
    if x.dim() != desc.dim() {
        return Err(SpaceError::DimensionMismatch {
            expected: desc.dim(),
            got: x.dim(),
        }
        .into());
    }
    if !desc.contains_slice(x.coords(), MEMBERSHIP_TOL) {
        return Err(HullError::NotInSet);
    }
    if let Some(t) = &f.table {
        if t[0].len() != desc.dim() {
            return Err(SpaceError::DimensionMismatch {
                expected: desc.dim(),
                got: t[0].len(),
            }
            .into());
        }
        if t.iter().any(|p| !desc.contains_slice(p, MEMBERSHIP_TOL)) {
            return Err(HullError::BadInput("table point outside the set".into()));
        }
    }
    let seeds: Vec<Vec<f64>> = seed_atoms
        .iter()
        .filter(|a| a.dim() == desc.dim() && desc.contains_slice(a.coords(), MEMBERSHIP_TOL))
        .map(|a| a.coords().to_vec())
        .collect();
    let restarts = cfg.restarts.max(1);
    let runs: Vec<Result<Run, HullError>> = (0..restarts)
        .into_par_iter()
        .map(|r| run_restart(desc, f, x.coords(), cfg, r as u64, &seeds))
        .collect();
    let mut best: Option<(Run, String)> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(run) => {
                let key = serde_json::to_string(&run.measure).expect("measure serialises");
                let better = match &best {
                    None => true,
                    Some((b, bkey)) => run.value < b.value || (run.value == b.value && key < *bkey),
                };
                if better {
                    best = Some((run, key));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some((run, _)) = best else {
        return Err(first_err.expect("at least one restart ran"));
    };
    let lower_bound = if cfg.compute_lower_bound {
        lower_bound_for(desc, f, x, cfg, &run)
    } else {
        None
    };
    Ok(HullSolution {
        value: run.value,
        decomposition: run.measure,
        lower_bound,
        iterations: run.rounds,
        heuristic: !(f.concave || f.convex || f.table.is_some()),
    })
}

struct Run {
    value: f64,
    measure: FiniteMeasure,
    rounds: usize,
}

fn restart_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn curved(desc: &SetDescriptor) -> bool {
    !desc.is_polyhedral()
}

fn run_restart(
    desc: &SetDescriptor,
    f: &ObjectiveFunction,
    x: &[f64],
    cfg: &HullConfig,
    restart: u64,
    seeds: &[Vec<f64>],
) -> Result<Run, HullError> {
    let mut rng = restart_rng(cfg.seed, restart);
    let n = x.len();
    let mut pool: Vec<Vec<f64>> = match &f.table {
        Some(t) => t.as_ref().clone(),
        None => {
            let mut v = vec![x.to_vec()];
            v.extend(desc.extreme_candidates(cfg.extreme_samples, &mut rng));
            if restart > 0 {
                v.extend((0..n).map(|_| desc.sample_point(&mut rng)));
            }
            v
        }
    };
    pool.extend(seeds.iter().cloned());

    let mut best: Option<(f64, Vec<Vec<f64>>, Vec<f64>)> = None;
    let mut stalls = 0;
    let mut rounds = 0;
    let normal = StandardNormal;
    for round in 0..cfg.max_rounds.max(1) {
        rounds = round + 1;
        let values = pool
            .iter()
            .map(|a| {
                let v = f.eval_slice(a);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(HullError::NonFiniteValue(a.clone()))
                }
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let Some((atoms, weights, fvals)) = solve_support(&pool, &values, x) else {
            if best.is_none() {
                return Err(HullError::Infeasible {
                    rounds,
                    pool: pool.len(),
                });
            }
            break;
        };
        let (atoms, weights, fvals) = caratheodory_prune(atoms, weights, fvals);
        let weights = polish(&atoms, weights, x);
        let value: f64 = weights.iter().zip(&fvals).map(|(w, v)| w * v).sum();
        let previous = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        if value < previous {
            best = Some((value, atoms, weights));
        }
        if previous - value < cfg.tol {
            stalls += 1;
            if stalls >= cfg.patience.max(1) {
                break;
            }
        } else {
            stalls = 0;
        }
        if f.table.is_some() {
            break;
        }

        let (_, support, _) = best.as_ref().expect("set above");
        let sigma = cfg.initial_step * 0.5_f64.powi(round as i32);
        let mut next = support.clone();
        next.push(x.to_vec());
        let fresh = if curved(desc) {
            cfg.extreme_samples / 4
        } else {
            0
        };
        next.extend(desc.extreme_candidates(fresh, &mut rng));
        for a in support {
            for _ in 0..cfg.perturbations_per_atom {
                let y: Vec<f64> = a
                    .iter()
                    .map(|c| c + sigma * Distribution::<f64>::sample(&normal, &mut rng))
                    .collect();
                if curved(desc) {
                    if let Some(b) = desc.scale_to_boundary(&y) {
                        next.push(b);
                    }
                }
                next.push(desc.project_by_scaling(&y));
            }
        }
        next.extend(seeds.iter().cloned());
        pool = next;
    }

    let (_, atoms, weights) = best.expect("first round succeeded");
    let p = desc.ambient_p();
    let atoms: Vec<Point> = atoms
        .into_iter()
        .map(|a| Point::from_vec_unchecked(a, p))
        .collect();
    let measure = FiniteMeasure::normalized(atoms, weights)
        .map_err(|e| HullError::BadInput(e.to_string()))?;
    let b = barycenter(&measure);
    let err = norm_of(
        &b.sub(&Point::from_vec_unchecked(x.to_vec(), p))
            .into_coords(),
        2.0,
    );
    if err > BARYCENTER_TOL {
        return Err(HullError::Inaccurate(err));
    }
    let value = measure.integrate(|a| f.eval(a));
    Ok(Run {
        value,
        measure,
        rounds,
    })
}

/// `min Σ π_i v_i` s.t. `Σ π_i a_i = x`, `Σ π_i = 1`, `π ≥ 0`, returning the
/// atoms with positive weight.
fn solve_support(
    pool: &[Vec<f64>],
    values: &[f64],
    x: &[f64],
) -> Option<(Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    let mut lp = LinearProgram::minimize();
    let vars: Vec<usize> = values
        .iter()
        .map(|v| lp.var(*v, 0.0, f64::INFINITY))
        .collect();
    for (j, xj) in x.iter().enumerate() {
        let row: Vec<(usize, f64)> = vars.iter().zip(pool).map(|(v, a)| (*v, a[j])).collect();
        lp.constraint(&row, Sense::Eq, *xj);
    }
    let ones: Vec<(usize, f64)> = vars.iter().map(|v| (*v, 1.0)).collect();
    lp.constraint(&ones, Sense::Eq, 1.0);
    let sol = lp.solve().ok()?;
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    let mut fvals = Vec::new();
    for (i, w) in sol.x.iter().enumerate() {
        if *w > 1e-14 {
            atoms.push(pool[i].clone());
            weights.push(*w);
            fvals.push(values[i]);
        }
    }
    if atoms.is_empty() {
        return None;
    }
    Some((atoms, weights, fvals))
}

/// A nonzero `v` with `M v = 0` for the `rows × cols` matrix `m`, if the
/// columns are dependent (Gaussian elimination with partial pivoting).
fn null_vector(m: &[Vec<f64>]) -> Option<Vec<f64>> {
    let rows = m.len();
    let cols = m[0].len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0_f64, |s, v| s.max(v.abs()))
        .max(1.0);
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (pr, pv) = (r..rows)
            .map(|i| (i, a[i][c].abs()))
            .fold((r, -1.0), |b, t| if t.1 > b.1 { t } else { b });
        if pv <= 1e-12 * scale {
            continue;
        }
        a.swap(r, pr);
        let piv = a[r][c];
        for v in a[r].iter_mut() {
            *v /= piv;
        }
        for i in 0..rows {
            if i != r && a[i][c] != 0.0 {
                let factor = a[i][c];
                let (src, dst) = if i < r {
                    let (lo, hi) = a.split_at_mut(r);
                    (&hi[0], &mut lo[i])
                } else {
                    let (lo, hi) = a.split_at_mut(i);
                    (&lo[r], &mut hi[0])
                };
                for (d, s) in dst.iter_mut().zip(src.iter()) {
                    *d -= factor * s;
                }
            }
        }
        pivots.push((r, c));
        r += 1;
    }
    let pivot_cols: Vec<usize> = pivots.iter().map(|p| p.1).collect();
    let free = (0..cols).find(|c| !pivot_cols.contains(c))?;
    let mut v = vec![0.0; cols];
    v[free] = 1.0;
    for (r, c) in pivots {
        v[c] = -a[r][free];
    }
    Some(v)
}

/// Reduces a decomposition to at most `dim + 1` atoms without increasing
/// `Σ π_i v_i`.
fn caratheodory_prune(
    mut atoms: Vec<Vec<f64>>,
    mut weights: Vec<f64>,
    mut fvals: Vec<f64>,
) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let dim = atoms[0].len();
    while atoms.len() > dim + 1 {
        let mut m: Vec<Vec<f64>> = (0..dim)
            .map(|j| atoms.iter().map(|a| a[j]).collect())
            .collect();
        m.push(vec![1.0; atoms.len()]);
        let Some(mut v) = null_vector(&m) else { break };
        if dot(&v, &fvals) > 0.0 {
            for c in v.iter_mut() {
                *c = -*c;
            }
        }
        let mut t = f64::INFINITY;
        let mut hit = 0;
        for (i, (w, vi)) in weights.iter().zip(&v).enumerate() {
            if *vi < 0.0 && w / -vi < t {
                t = w / -vi;
                hit = i;
            }
        }
        if !t.is_finite() {
            break;
        }
        for (w, vi) in weights.iter_mut().zip(&v) {
            *w = (*w + t * vi).max(0.0);
        }
        weights[hit] = 0.0;
        let keep: Vec<bool> = weights.iter().map(|w| *w > 0.0).collect();
        let mut k = keep.iter();
        atoms.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        fvals.retain(|_| *k.next().unwrap());
        weights.retain(|w| *w > 0.0);
    }
    (atoms, weights, fvals)
}

/// Minimum-norm correction of the weights so that the barycenter and total
/// mass equations hold to rounding; kept only if weights stay nonnegative
/// and the residual shrinks.
fn polish(atoms: &[Vec<f64>], weights: Vec<f64>, x: &[f64]) -> Vec<f64> {
    let dim = x.len();
    let k = atoms.len();
    let m = DMatrix::from_fn(dim + 1, k, |i, j| if i < dim { atoms[j][i] } else { 1.0 });
    let w = DVector::from_vec(weights.clone());
    let mut target = DVector::from_vec(x.to_vec());
    target = target.push(1.0);
    let residual = &target - &m * &w;
    let before = residual.norm();
    if before == 0.0 {
        return weights;
    }
    let svd = m.clone().svd(true, true);
    let Ok(delta) = svd.solve(&residual, 1e-13) else {
        return weights;
    };
    let fixed = &w + delta;
    if fixed.iter().any(|v| *v < 0.0) {
        return weights;
    }
    let after = (&target - &m * &fixed).norm();
    if after < before {
        fixed.iter().copied().collect()
    } else {
        weights
    }
}

/// Checks `a(y) = ⟨slope, y⟩ + offset ≤ f(y)` on sampled points of `desc`
/// (extreme candidates, random points and `x`) and returns `a(x)`.
pub fn affine_minorant_bound(
    desc: &SetDescriptor,
    f: &ObjectiveFunction,
    x: &Point,
    slope: &Point,
    offset: f64,
    cfg: &HullConfig,
) -> Result<f64, MinorantRejection> {
    assert_eq!(
        slope.dim(),
        desc.dim(),
        "slope dimension must match the set"
    );
    let mut rng = restart_rng(cfg.seed, u64::MAX);
    let a = |y: &[f64]| dot(slope.coords(), y) + offset;
    let mut probes: Vec<Vec<f64>> = match &f.table {
        Some(t) => t.as_ref().clone(),
        None => {
            let mut v = desc.extreme_candidates(cfg.samples / 4, &mut rng);
            v.extend((0..cfg.samples).map(|_| desc.sample_point(&mut rng)));
            v
        }
    };
    probes.push(x.coords().to_vec());
    let scale = 1.0 + offset.abs() + norm_of(slope.coords(), 1.0);
    let tol = cfg.tol.max(1e-12) * scale;
    for y in probes {
        let violation = a(&y) - f.eval_slice(&y);
        if violation > tol {
            return Err(MinorantRejection {
                witness: Point::from_vec_unchecked(y, desc.ambient_p()),
                violation,
            });
        }
    }
    Ok(a(x.coords()))
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("affine function exceeds the objective by {violation:e} at {witness:?}")]
pub struct MinorantRejection {
    pub witness: Point,
    pub violation: f64,
}

fn lower_bound_for(
    desc: &SetDescriptor,
    f: &ObjectiveFunction,
    x: &Point,
    cfg: &HullConfig,
    run: &Run,
) -> Option<AffineLowerBound> {
    let (slope, offset) = if f.convex && f.table.is_none() {
        tangent(f, desc, x)
    } else {
        dual_minorant(desc, f, x, cfg, run)?
    };
    let slope_pt = Point::from_vec_unchecked(slope.clone(), desc.ambient_p());
    let value = affine_minorant_bound(desc, f, x, &slope_pt, offset, cfg).ok()?;
    Some(AffineLowerBound {
        value: value.min(run.value),
        slope,
        offset,
    })
}

/// Central-difference tangent plane of `f` at `x`.
fn tangent(f: &ObjectiveFunction, desc: &SetDescriptor, x: &Point) -> (Vec<f64>, f64) {
    let h = 1e-6;
    let xs = x.coords();
    let mut g = vec![0.0; desc.dim()];
    for (i, gi) in g.iter_mut().enumerate() {
        let mut up = xs.to_vec();
        let mut dn = xs.to_vec();
        up[i] += h;
        dn[i] -= h;
        *gi = (f.eval_slice(&up) - f.eval_slice(&dn)) / (2.0 * h);
    }
    let offset = f.eval_slice(xs) - dot(&g, xs);
    (g, offset)
}

/// The dual of the support LP over vertices/extreme candidates, the final
/// support and `x`: `max ⟨s, x⟩ + c` s.t. `⟨s, a⟩ + c ≤ f(a)` on that pool.
fn dual_minorant(
    desc: &SetDescriptor,
    f: &ObjectiveFunction,
    x: &Point,
    cfg: &HullConfig,
    run: &Run,
) -> Option<(Vec<f64>, f64)> {
    let mut rng = restart_rng(cfg.seed, 0);
    let mut pool: Vec<Vec<f64>> = match &f.table {
        Some(t) => t.as_ref().clone(),
        None => desc.extreme_candidates(cfg.extreme_samples, &mut rng),
    };
    pool.extend(run.measure.atoms().iter().map(|a| a.coords().to_vec()));
    if f.table.is_none() {
        pool.push(x.coords().to_vec());
    }
    let n = desc.dim();
    let mut lp = LinearProgram::maximize();
    let s: Vec<usize> = x.coords().iter().map(|xi| lp.var(*xi, -1e6, 1e6)).collect();
    let c = lp.var(1.0, -1e6, 1e6);
    for a in &pool {
        let mut row: Vec<(usize, f64)> = (0..n).map(|j| (s[j], a[j])).collect();
        row.push((c, 1.0));
        lp.constraint(&row, Sense::Le, f.eval_slice(a));
    }
    match lp.solve() {
        Ok(sol) => Some((s.iter().map(|i| sol.x[*i]).collect(), sol.x[c])),
        Err(LpError::Infeasible | LpError::Unbounded) => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LscReport {
    /// `co f(limit) − min` of the tail values; positive means the hull jumps
    /// up at the limit.
    pub gap: f64,
    pub limit_value: f64,
    pub tail_min: f64,
    /// Index of the first sequence element counted as tail.
    pub tail_start: usize,
    pub values: Vec<f64>,
}

/// Numerical lower-semicontinuity probe of `co f` at `limit` along a
/// sequence converging to it. The tail is the second half of the sequence.
pub fn lsc_probe(
    desc: &SetDescriptor,
    f: &ObjectiveFunction,
    sequence: &[Point],
    limit: &Point,
    cfg: &HullConfig,
) -> Result<LscReport, HullError> {
    if sequence.is_empty() {
        return Err(HullError::BadInput("empty sequence".into()));
    }
    let dists: Vec<f64> = sequence.iter().map(|p| p.dist(limit)).collect();
    if let Some(i) = (1..dists.len()).find(|&i| dists[i] > dists[i - 1] * (1.0 + 1e-12) + 1e-15) {
        return Err(HullError::NotConverging(i));
    }
    let cfg = HullConfig {
        compute_lower_bound: false,
        ..cfg.clone()
    };
    let limit_value = co_f_search(desc, f, limit, &cfg)?.value;
    let tail_start = sequence.len() / 2;
    let values = sequence
        .iter()
        .map(|p| co_f_search(desc, f, p, &cfg).map(|s| s.value))
        .collect::<Result<Vec<f64>, _>>()?;
    let tail_min = values[tail_start..]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(LscReport {
        gap: limit_value - tail_min,
        limit_value,
        tail_min,
        tail_start,
        values,
    })
}

/// The uniform point `(1/k, …, 1/k, 0, …, 0)` with `k` nonzero entries.
pub fn uniform_prefix_point(k: usize, dim: usize, ambient_p: f64) -> Result<Point, SpaceError> {
    if k == 0 || k > dim {
        return Err(SpaceError::IndexOutOfRange { index: k, dim });
    }
    let mut c = vec![0.0; dim];
    for v in c.iter_mut().take(k) {
        *v = 1.0 / k as f64;
    }
    Point::with_ambient(c, ambient_p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::mix;
    use crate::spaces::canonical_basis;
    use proptest::prelude::*;
    use rand::Rng;

    fn quick() -> HullConfig {
        HullConfig {
            restarts: 4,
            samples: 300,
            ..HullConfig::default()
        }
    }

    fn check_solution(desc: &SetDescriptor, f: &ObjectiveFunction, x: &Point, s: &HullSolution) {
        let b = barycenter(&s.decomposition);
        assert!(
            b.sub(x).coords().iter().all(|d| d.abs() <= BARYCENTER_TOL),
            "barycenter {b:?}"
        );
        let recomputed = s.decomposition.integrate(|a| f.eval(a));
        assert!(
            (recomputed - s.value).abs() <= 1e-10,
            "{recomputed} vs {}",
            s.value
        );
        assert!(s.value <= f.eval(x) + 1e-12);
        assert!(s.decomposition.len() <= desc.dim() + 1);
        for a in s.decomposition.atoms() {
            assert!(desc.contains_slice(a.coords(), MEMBERSHIP_TOL));
        }
        if let Some(lb) = &s.lower_bound {
            assert!(lb.value <= s.value + 1e-9);
        }
    }

    #[test]
    fn simplex_exact_examples() {
        // vertices 0, e_1, …, e_4 with f = 1 − ‖·‖_2
        let vals = [1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(
            co_f_simplex_exact(&vals, &[0.0, 0.25, 0.25, 0.25, 0.25]).unwrap(),
            0.0
        );
        assert_eq!(
            co_f_simplex_exact(&vals, &[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap(),
            1.0
        );
        assert_eq!(
            co_f_simplex_exact(&vals, &[0.5, 0.5, 0.0, 0.0, 0.0]).unwrap(),
            0.5
        );
        assert!(co_f_simplex_exact(&vals, &[0.5, 0.5]).is_err());
        assert!(co_f_simplex_exact(&vals, &[1.5, -0.5, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn uniform_prefix_on_a2_has_zero_hull() {
        let desc = SetDescriptor::lp_cone(2.0, 8).unwrap();
        let f = ObjectiveFunction::one_minus_norm(2.0);
        let x = uniform_prefix_point(8, 8, 2.0).unwrap();
        let s = co_f_search(&desc, &f, &x, &quick()).unwrap();
        check_solution(&desc, &f, &x, &s);
        assert!(s.value <= 1e-8, "{}", s.value);
        assert!(!s.heuristic);
    }

    #[test]
    fn convex_function_is_its_own_hull() {
        let desc = SetDescriptor::unit_ball(3);
        let f = ObjectiveFunction::sq_norm();
        let x = Point::new(vec![0.2, -0.3, 0.1]).unwrap();
        let s = co_f_search(&desc, &f, &x, &quick()).unwrap();
        check_solution(&desc, &f, &x, &s);
        assert!((s.value - f.eval(&x)).abs() <= 1e-12);
        assert_eq!(s.decomposition.len(), 1);
        let lb = s.lower_bound.expect("tangent validates for convex f");
        assert!((lb.value - f.eval(&x)).abs() <= 1e-8);
    }

    #[test]
    fn concave_hull_matches_vertex_interpolation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let desc = SetDescriptor::standard_simplex(4);
        let f = ObjectiveFunction::neg_sq_norm();
        for _ in 0..20 {
            let x = Point::new(desc.sample_point(&mut rng)).unwrap();
            let s = co_f_search(&desc, &f, &x, &quick()).unwrap();
            check_solution(&desc, &f, &x, &s);
            let slack = 1.0 - x.coords().iter().sum::<f64>();
            let mut lambda = vec![slack];
            lambda.extend_from_slice(x.coords());
            let exact = co_f_simplex_exact(&[0.0, -1.0, -1.0, -1.0, -1.0], &lambda).unwrap();
            assert!((s.value - exact).abs() <= 1e-9);
            let lb = s.lower_bound.expect("dual bound validates on a polytope");
            assert!((lb.value - exact).abs() <= 1e-8);
        }
    }

    #[test]
    fn extreme_points_keep_their_value() {
        let desc = SetDescriptor::l1_cone(5);
        let f = ObjectiveFunction::one_minus_norm(2.0);
        for i in 1..=5 {
            let e = canonical_basis(i, 5).unwrap();
            let s = co_f_search(&desc, &f, &e, &quick()).unwrap();
            assert!((s.value - f.eval(&e)).abs() <= 1e-8);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let desc = SetDescriptor::unit_ball(3);
        let f = ObjectiveFunction::new("bumpy", |x| (3.0 * x[0]).sin() + x[1] * x[2]);
        let x = Point::new(vec![0.1, 0.2, -0.3]).unwrap();
        let a = co_f_search(&desc, &f, &x, &quick()).unwrap();
        let b = co_f_search(&desc, &f, &x, &quick()).unwrap();
        assert_eq!(a, b);
        assert!(a.heuristic);
        check_solution(&desc, &f, &x, &a);
    }

    #[test]
    fn table_function_is_exact_lp() {
        // f on the square's corners and centre; the centre value lies above
        // the average of the corners, so the hull there is the average
        let pts = vec![
            vec![-1.0, -1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
            vec![1.0, 1.0],
            vec![0.0, 0.0],
        ];
        let vals = vec![0.0, 2.0, 2.0, 0.0, 5.0];
        let f = ObjectiveFunction::table(pts, vals).unwrap();
        let desc = SetDescriptor::hilbert_cube(vec![1.0, 1.0]).unwrap();
        let x = Point::new(vec![0.0, 0.0]).unwrap();
        let s = co_f_search(&desc, &f, &x, &quick()).unwrap();
        assert!((s.value - 0.0).abs() <= 1e-12);
        assert!(!s.heuristic);
        let outside = Point::new(vec![0.0, 0.0]).unwrap();
        let tiny = ObjectiveFunction::table(vec![vec![1.0, 1.0]], vec![1.0]).unwrap();
        assert!(matches!(
            co_f_search(&desc, &tiny, &outside, &quick()),
            Err(HullError::Infeasible { .. })
        ));
    }

    #[test]
    fn rejects_points_outside() {
        let desc = SetDescriptor::l1_cone(2);
        let f = ObjectiveFunction::sq_norm();
        let x = Point::new(vec![0.9, 0.9]).unwrap();
        assert_eq!(
            co_f_search(&desc, &f, &x, &quick()).unwrap_err(),
            HullError::NotInSet
        );
    }

    #[test]
    fn minorant_examples() {
        let desc = SetDescriptor::lp_cone(2.0, 6).unwrap();
        let f = ObjectiveFunction::one_minus_norm(2.0);
        let cfg = quick();
        let zero = Point::zeros(6);
        let x = uniform_prefix_point(3, 6, 2.0).unwrap();
        // f ≥ 0 on A_2, so the zero function is a minorant
        assert_eq!(
            affine_minorant_bound(&desc, &f, &x, &zero, 0.0, &cfg).unwrap(),
            0.0
        );
        let hull = co_f_search(&desc, &f, &x, &cfg).unwrap();
        assert!(hull.value <= 1e-8);
        // the constant 0.5 is not
        let rej = affine_minorant_bound(&desc, &f, &x, &zero, 0.5, &cfg).unwrap_err();
        assert!(rej.violation > 0.4);

        let ball = SetDescriptor::unit_ball(2);
        let g = ObjectiveFunction::sq_norm();
        let y = Point::new(vec![0.3, -0.4]).unwrap();
        let slope = Point::new(vec![0.6, -0.8]).unwrap();
        let v = affine_minorant_bound(&ball, &g, &y, &slope, -0.25, &cfg).unwrap();
        assert!((v - g.eval(&y)).abs() < 1e-15);
    }

    #[test]
    fn lsc_examples() {
        let dim = 8;
        let desc = SetDescriptor::lp_cone(2.0, dim).unwrap();
        let f = ObjectiveFunction::one_minus_norm(2.0);
        let seq: Vec<Point> = (1..=dim)
            .map(|k| uniform_prefix_point(k, dim, 2.0).unwrap())
            .collect();
        let limit = Point::zeros(dim).retag(2.0);
        let r = lsc_probe(&desc, &f, &seq, &limit, &quick()).unwrap();
        assert!((r.gap - 1.0).abs() <= 1e-9, "{r:?}");

        let aff = ObjectiveFunction::affine(vec![1.0; dim], 0.5);
        let r = lsc_probe(&desc, &aff, &seq, &limit, &quick()).unwrap();
        assert!(r.gap <= 1e-9);

        let x = uniform_prefix_point(3, dim, 2.0).unwrap();
        let constant = vec![x.clone(); 4];
        let r = lsc_probe(&desc, &f, &constant, &x, &quick()).unwrap();
        assert!(r.gap.abs() <= 1e-12);

        let mut backwards = seq.clone();
        backwards.reverse();
        assert!(matches!(
            lsc_probe(&desc, &f, &backwards, &limit, &quick()),
            Err(HullError::NotConverging(_))
        ));
    }

    #[test]
    fn builtin_names() {
        assert!(ObjectiveFunction::builtin("one-minus-norm", 2.0)
            .unwrap()
            .is_concave());
        let f = ObjectiveFunction::builtin("one-minus-norm:1", 2.0).unwrap();
        assert_eq!(f.eval_slice(&[0.25, 0.25]), 0.5);
        assert!(ObjectiveFunction::builtin("sq-norm", 2.0)
            .unwrap()
            .is_convex());
        assert!(ObjectiveFunction::builtin("one-minus-norm:0.5", 2.0).is_err());
        assert!(ObjectiveFunction::builtin("cosh", 2.0).is_err());
    }

    #[test]
    fn null_vector_and_pruning() {
        let m = vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]];
        let v = null_vector(&m).unwrap();
        for row in &m {
            assert!(dot(row, &v).abs() < 1e-14);
        }
        // five atoms in the plane reduced to three, cost not increased
        let atoms = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.5, 0.5],
            vec![0.2, 0.2],
        ];
        let w = vec![0.2; 5];
        let fv = vec![1.0, 0.0, 0.0, 0.3, 0.9];
        let cost: f64 = w.iter().zip(&fv).map(|(a, b)| a * b).sum();
        let (a2, w2, f2) = caratheodory_prune(atoms.clone(), w.clone(), fv);
        assert!(a2.len() <= 3);
        let cost2: f64 = w2.iter().zip(&f2).map(|(a, b)| a * b).sum();
        assert!(cost2 <= cost + 1e-15);
        let mut b = [0.0; 2];
        for (a, w) in a2.iter().zip(&w2) {
            b[0] += w * a[0];
            b[1] += w * a[1];
        }
        assert!((b[0] - 0.34).abs() < 1e-12 && (b[1] - 0.34).abs() < 1e-12);
    }

    #[test]
    fn midpoint_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let desc = SetDescriptor::unit_ball(2);
        let f = ObjectiveFunction::new("saddle", |x| x[0] * x[0] - x[1] * x[1] + 0.3 * x[0]);
        let cfg = quick();
        for _ in 0..5 {
            let x = Point::new(desc.sample_point(&mut rng)).unwrap();
            let y = Point::new(desc.sample_point(&mut rng)).unwrap();
            let sx = co_f_search(&desc, &f, &x, &cfg).unwrap();
            let sy = co_f_search(&desc, &f, &y, &cfg).unwrap();
            let merged = mix(&sx.decomposition, &sy.decomposition, 0.5).unwrap();
            let mid = barycenter(&merged);
            let sm = co_f_search_seeded(&desc, &f, &mid, &cfg, merged.atoms()).unwrap();
            assert!(sm.value <= 0.5 * (sx.value + sy.value) + 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn value_never_exceeds_f(seed in 0u64..1000, dim in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let desc = SetDescriptor::lp_cone(1.0 + rng.gen::<f64>() * 3.0, dim).unwrap();
            let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = ObjectiveFunction::new("wave", move |x| {
                x.iter().zip(&c).map(|(a, b)| (4.0 * a * b).cos()).sum::<f64>()
            });
            let x = Point::new(desc.sample_point(&mut rng)).unwrap();
            let cfg = HullConfig { restarts: 2, samples: 100, seed, ..HullConfig::default() };
            let s = co_f_search(&desc, &f, &x, &cfg).unwrap();
            prop_assert!(s.value <= f.eval(&x) + 1e-12);
            let b = barycenter(&s.decomposition);
            prop_assert!(b.sub(&x).coords().iter().all(|d| d.abs() <= BARYCENTER_TOL));
            prop_assert!((s.decomposition.integrate(|a| f.eval(a)) - s.value).abs() <= 1e-10);
        }
    }
}
