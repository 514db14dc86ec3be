//! Certificates and refutations of μ-compactness: the tail-mass (Markov)
//! criterion, explicit non-μ-compact constructions in Δ_p and A_p, the
//! Hilbert cube dichotomy, and pointedness of finitely generated cones.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::lp::{LinearProgram, Sense};
use crate::measures::{barycenter, mass_outside, FiniteMeasure, MeasureError};
use crate::spaces::{dot, norm_of, Point, SetDescriptor, SpaceError, MEMBERSHIP_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("{0}")]
    BadInput(String),
    #[error("certificate function is negative ({value:e}) at atom {index}")]
    NegativeValue { index: usize, value: f64 },
    #[error("certificate function {label:?} is negative ({value:e}) at a sampled point")]
    NegativeMember {
        label: String,
        value: f64,
        point: Vec<f64>,
    },
    #[error("measure barycenter differs from the point by {0:e}")]
    BarycenterMismatch(f64),
    #[error("truncation dimension {have} too small, need at least {needed}")]
    Resize { needed: usize, have: usize },
    #[error("construction check failed: {0}")]
    Construction(String),
    #[error("equivalent properties disagree: {0:?}")]
    EquivalenceViolated(Box<EquivalenceReport>),
}

/// `y ↦ ⟨h, y⟩ + offset`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineFunctional {
    pub h: Vec<f64>,
    pub offset: f64,
}

impl AffineFunctional {
    pub fn linear(h: Vec<f64>) -> Self {
        Self { h, offset: 0.0 }
    }

    /// `h_i = i` (one-based), unbounded along the basis.
    pub fn index_weighted(dim: usize) -> Self {
        Self::linear((1..=dim).map(|i| i as f64).collect())
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        dot(&self.h, y) + self.offset
    }
}

/// Labelled nonnegative affine functionals on a set.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateFamily {
    pub members: Vec<(String, AffineFunctional)>,
}

impl CertificateFamily {
    /// Checks nonnegativity on the set's extreme candidates and `samples`
    /// random points.
    pub fn validate<R: Rng + ?Sized>(
        &self,
        desc: &SetDescriptor,
        samples: usize,
        rng: &mut R,
    ) -> Result<(), CertError> {
        let mut probes = desc.extreme_candidates(samples, rng);
        probes.extend((0..samples).map(|_| desc.sample_point(rng)));
        for (label, f) in &self.members {
            if f.h.len() != desc.dim() {
                return Err(SpaceError::DimensionMismatch {
                    expected: desc.dim(),
                    got: f.h.len(),
                }
                .into());
            }
            for y in &probes {
                let v = f.eval(y);
                if v < -MEMBERSHIP_TOL {
                    return Err(CertError::NegativeMember {
                        label: label.clone(),
                        value: v,
                        point: y.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// A decomposition that puts too much mass outside a compact candidate.
/// Coordinates are local to a window `[window_start, window_start + len)`
/// of an `ambient_dim`-dimensional truncation; everything outside the
/// window is zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub window_start: usize,
    pub ambient_dim: usize,
    pub point: Point,
    pub decomposition: FiniteMeasure,
    /// Atoms `e_i` with one-based `i` above this index count as outside.
    pub excluded_prefix: usize,
    pub outside_mass: f64,
}

impl Witness {
    /// The point and decomposition in full `ambient_dim` coordinates.
    pub fn embed(&self) -> (Point, FiniteMeasure) {
        let lift = |p: &Point| {
            let mut c = vec![0.0; self.ambient_dim];
            c[self.window_start..self.window_start + p.dim()].copy_from_slice(p.coords());
            Point::from_vec_unchecked(c, p.ambient_p())
        };
        let atoms = self.decomposition.atoms().iter().map(lift).collect();
        let mu = FiniteMeasure::new(atoms, self.decomposition.weights().to_vec())
            .expect("weights already validated");
        (lift(&self.point), mu)
    }
}

/// One-based index of `a` as a canonical basis vector in ambient
/// coordinates, if it is one (to rounding).
fn basis_index(a: &Point, window_start: usize) -> Option<usize> {
    let mut hit = None;
    for (i, c) in a.coords().iter().enumerate() {
        if (c - 1.0).abs() <= 1e-12 {
            if hit.is_some() {
                return None;
            }
            hit = Some(i);
        } else if c.abs() > 1e-12 {
            return None;
        }
    }
    hit.map(|i| window_start + i + 1)
}

fn basis_mass_beyond(mu: &FiniteMeasure, window_start: usize, prefix: usize) -> f64 {
    mass_outside(mu, |a| {
        basis_index(a, window_start).is_none_or(|i| i <= prefix)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TailVerdict {
    Pass {
        outside_mass: f64,
        threshold: f64,
    },
    Fail {
        outside_mass: f64,
        threshold: f64,
        witness: Box<FiniteMeasure>,
    },
}

/// Markov-type tail check: with `c = f(x)`, the sublevel set
/// `{f ≤ c/ε}` must carry all but at most `ε` of the mass of `μ`.
pub fn tail_certificate_check(
    f: &AffineFunctional,
    x: &Point,
    mu: &FiniteMeasure,
    eps: f64,
) -> Result<TailVerdict, CertError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(CertError::BadInput(format!(
            "eps must be positive, got {eps}"
        )));
    }
    if f.h.len() != x.dim() || mu.dim() != x.dim() {
        return Err(SpaceError::DimensionMismatch {
            expected: x.dim(),
            got: mu.dim(),
        }
        .into());
    }
    let b = barycenter(mu);
    let err = norm_of(b.sub(x).coords(), f64::INFINITY);
    if err > 1e-9 {
        return Err(CertError::BarycenterMismatch(err));
    }
    let values: Vec<f64> = mu.atoms().iter().map(|a| f.eval(a.coords())).collect();
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| **v < -1e-12) {
        return Err(CertError::NegativeValue { index, value });
    }
    let threshold = f.eval(x.coords()) / eps;
    // relative slack for rounding in ⟨h, a⟩
    let slack = 1e-12 * threshold.abs().max(1.0);
    let outside: f64 = mu
        .weights()
        .iter()
        .zip(&values)
        .filter(|(_, v)| **v > threshold + slack)
        .map(|(w, _)| w)
        .sum();
    let outside_mass = outside / mu.weights().iter().sum::<f64>();
    if outside_mass <= eps + 1e-12 {
        Ok(TailVerdict::Pass {
            outside_mass,
            threshold,
        })
    } else {
        Ok(TailVerdict::Fail {
            outside_mass,
            threshold,
            witness: Box::new(mu.clone()),
        })
    }
}

/// Block layout used by the Δ_p construction: block `ρ` has length
/// `L_ρ = ⌈ρ^{1/(p−1)}⌉` and starts at one-based index `n_ρ`, `n_1 = 1`.
pub fn delta_p_block_length(p: f64, rho: usize) -> usize {
    let rho_f = rho as f64;
    let mut l = rho_f.powf(1.0 / (p - 1.0)).ceil().max(1.0) as usize;
    // correct rounding of the real power so that L is the least integer
    // with L^{p-1} ≥ ρ
    while l > 1 && ((l - 1) as f64).powf(p - 1.0) >= rho_f {
        l -= 1;
    }
    while (l as f64).powf(p - 1.0) < rho_f {
        l += 1;
    }
    l
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaPWitness {
    pub witness: Witness,
    /// Block index actually used (`≥ r`).
    pub block: usize,
    /// One-based first index of the block.
    pub block_start: usize,
    pub block_len: usize,
    /// `Σ z_i^p` over the block.
    pub power_sum: f64,
    pub eps: f64,
}

/// A point of the compact `K = {y : Σ_{i ≥ n_ρ} y_i^p ≤ 1/ρ ∀ρ} ⊂ Δ_p` whose
/// only decomposition into extreme points puts all mass on basis vectors
/// beyond `prefix_n`: the uniform vector on the first block `ρ ≥ r` that
/// starts after `prefix_n`.
pub fn delta_p_refute(
    p: f64,
    r: usize,
    eps: f64,
    prefix_n: usize,
    dim: usize,
) -> Result<DeltaPWitness, CertError> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(CertError::BadInput(format!("need finite p > 1, got {p}")));
    }
    if r == 0 {
        return Err(CertError::BadInput("block index r starts at 1".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CertError::BadInput(format!(
            "eps must lie in (0, 1), got {eps}"
        )));
    }
    let mut rho = 1;
    let mut start = 1;
    let mut len = delta_p_block_length(p, rho);
    while rho < r || start <= prefix_n {
        start += len;
        rho += 1;
        len = delta_p_block_length(p, rho);
    }
    let end = start + len - 1;
    if end > dim {
        return Err(CertError::Resize {
            needed: end,
            have: dim,
        });
    }
    let z = 1.0 / len as f64;
    let power_sum = len as f64 * z.powf(p);
    if power_sum > 1.0 / rho as f64 + 1e-12 {
        return Err(CertError::Construction(format!(
            "block {rho}: Σz^p = {power_sum} exceeds 1/{rho}"
        )));
    }
    let point = Point::with_ambient(vec![z; len], p)?;
    let atoms: Vec<Point> = (0..len)
        .map(|i| {
            let mut c = vec![0.0; len];
            c[i] = 1.0;
            Point::from_vec_unchecked(c, p)
        })
        .collect();
    let decomposition = FiniteMeasure::normalized(atoms, vec![z; len])?;
    let window_start = start - 1;
    let outside_mass = basis_mass_beyond(&decomposition, window_start, prefix_n);
    Ok(DeltaPWitness {
        witness: Witness {
            window_start,
            ambient_dim: dim,
            point,
            decomposition,
            excluded_prefix: prefix_n,
            outside_mass,
        },
        block: rho,
        block_start: start,
        block_len: len,
        power_sum,
        eps,
    })
}

/// Whether `y` (dense, ambient coordinates) satisfies the block tail
/// constraints `Σ_{i ≥ n_ρ} y_i^p ≤ 1/ρ` for every block start inside the
/// truncation.
pub fn in_delta_p_compact(p: f64, y: &[f64], tol: f64) -> bool {
    if y.iter().any(|v| *v < -tol) || y.iter().sum::<f64>() > 1.0 + tol {
        return false;
    }
    let mut suffix = vec![0.0; y.len() + 1];
    for i in (0..y.len()).rev() {
        suffix[i] = suffix[i + 1] + y[i].max(0.0).powf(p);
    }
    let mut rho = 1;
    let mut start = 1;
    while start <= y.len() {
        if suffix[start - 1] > 1.0 / rho as f64 + tol {
            return false;
        }
        start += delta_p_block_length(p, rho);
        rho += 1;
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApWitness {
    pub witness: Witness,
    /// Scale of the harmonic point `x = c·(1/i)`.
    pub scale: f64,
    pub point_norm: f64,
    /// One-based indices of the split-off block.
    pub block_start: usize,
    pub block_end: usize,
    /// `s = Σ_{block} x_i`.
    pub block_sum: f64,
}

/// Splits `x = c·(1/i)_{i ≤ dim}` (with `‖x‖_p < 1/3`) as
/// `(1−s)·x̄/(1−s) + Σ_{i ∈ block} x_i e_i`, where the block follows
/// `prefix_n` and its sum `s` lies in `(1/3, 2/3)`. `scale` defaults to
/// `0.2` when that keeps `‖x‖_p < 1/3`, else to `0.3/‖(1/i)‖_p`.
pub fn ap_refute(
    p: f64,
    prefix_n: usize,
    dim: usize,
    scale: Option<f64>,
) -> Result<ApWitness, CertError> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(CertError::BadInput(format!("need finite p > 1, got {p}")));
    }
    if dim <= prefix_n {
        return Err(CertError::Resize {
            needed: prefix_n + 1,
            have: dim,
        });
    }
    let harmonic: Vec<f64> = (1..=dim).map(|i| 1.0 / i as f64).collect();
    let hnorm = norm_of(&harmonic, p);
    let c = match scale {
        Some(c) => {
            if !(c > 0.0) || c * hnorm >= 1.0 / 3.0 {
                return Err(CertError::BadInput(format!(
                    "scale {c} gives ‖x‖_p = {} (need 0 < ‖x‖_p < 1/3)",
                    c * hnorm
                )));
            }
            c
        }
        None if 0.2 * hnorm < 1.0 / 3.0 => 0.2,
        None => 0.3 / hnorm,
    };
    let x: Vec<f64> = harmonic.iter().map(|h| c * h).collect();
    let point_norm = norm_of(&x, p);
    let mut s = 0.0;
    let mut end = prefix_n;
    while s <= 1.0 / 3.0 {
        if end == dim {
            // c·ln(needed/prefix) ≈ 1/3 estimates the missing length
            let needed = ((prefix_n.max(1) as f64) * (1.0 / (3.0 * c)).exp()).ceil() as usize;
            return Err(CertError::Resize {
                needed: needed.max(dim + 1),
                have: dim,
            });
        }
        s += x[end];
        end += 1;
    }
    if !(s < 2.0 / 3.0) {
        return Err(CertError::Construction(format!(
            "block sum {s} not below 2/3"
        )));
    }
    let mut rest = x.clone();
    for v in &mut rest[prefix_n..end] {
        *v = 0.0;
    }
    let rest: Vec<f64> = rest.iter().map(|v| v / (1.0 - s)).collect();
    let rest_norm = norm_of(&rest, p);
    if rest_norm > 1.0 {
        return Err(CertError::Construction(format!(
            "‖x̄/(1−s)‖_p = {rest_norm} > 1"
        )));
    }
    let mut atoms = vec![Point::with_ambient(rest, p)?];
    let mut weights = vec![1.0 - s];
    for i in prefix_n..end {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        atoms.push(Point::from_vec_unchecked(e, p));
        weights.push(x[i]);
    }
    let decomposition = FiniteMeasure::normalized(atoms, weights)?;
    let outside_mass = basis_mass_beyond(&decomposition, 0, prefix_n);
    Ok(ApWitness {
        witness: Witness {
            window_start: 0,
            ambient_dim: dim,
            point: Point::with_ambient(x, p)?,
            decomposition,
            excluded_prefix: prefix_n,
            outside_mass,
        },
        scale: c,
        point_norm,
        block_start: prefix_n + 1,
        block_end: end,
        block_sum: s,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubeBlock {
    /// One-based inclusive index range.
    pub start: usize,
    pub end: usize,
    pub sum_sq: f64,
    /// `‖Σ_{i ∈ block} a_i e_i‖_2`.
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CubeVerdict {
    /// `Σ a_i²` converges numerically; `tail_norms` lists
    /// `(k, (Σ_{i ≥ k} a_i²)^{1/2})` at powers of two.
    CompactCertificate {
        tail_norms: Vec<(usize, f64)>,
    },
    /// Consecutive blocks with `Σ a_i² ≥ 1`: the vectors `b_n` are far apart
    /// points of `H_a`, so no compact set can carry their decompositions.
    RefutationBlocks {
        blocks: Vec<CubeBlock>,
    },
    Inconclusive {
        reason: String,
    },
}

/// Second-half tail sum of `a_i²` at least this large is taken as
/// divergence (the sum keeps growing by a fixed amount per doubling).
pub const CUBE_DIVERGENCE_FLOOR: f64 = 0.5;

/// Decides between a compactness certificate and refutation blocks for the
/// brick `H_a = {|x_i| ≤ a_i}` from its first `a.len()` half-widths.
/// Compact when `Σ_{i > N/2} a_i² < tol`; refuted when at least two greedy
/// blocks close and the second half still carries at least
/// [`CUBE_DIVERGENCE_FLOOR`]; otherwise inconclusive.
pub fn hilbert_cube_classify(a: &[f64], tol: f64) -> Result<CubeVerdict, CertError> {
    if a.is_empty() {
        return Err(SpaceError::Empty.into());
    }
    if a.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(CertError::BadInput(
            "half-widths must be finite and positive".into(),
        ));
    }
    let n = a.len();
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + a[i] * a[i];
    }
    let half_tail = suffix[n / 2];
    if half_tail < tol {
        let mut tail_norms = Vec::new();
        let mut k = 1;
        while k <= n {
            tail_norms.push((k, suffix[k - 1].sqrt()));
            k *= 2;
        }
        return Ok(CubeVerdict::CompactCertificate { tail_norms });
    }
    let mut blocks = Vec::new();
    let mut start = 0;
    let mut acc = 0.0;
    for (i, v) in a.iter().enumerate() {
        acc += v * v;
        if acc >= 1.0 {
            let norm = acc.sqrt();
            if norm < 1.0 {
                return Err(CertError::Construction(format!("block norm {norm} < 1")));
            }
            blocks.push(CubeBlock {
                start: start + 1,
                end: i + 1,
                sum_sq: acc,
                norm,
            });
            start = i + 1;
            acc = 0.0;
        }
    }
    if blocks.len() >= 2 && half_tail >= CUBE_DIVERGENCE_FLOOR {
        Ok(CubeVerdict::RefutationBlocks { blocks })
    } else {
        Ok(CubeVerdict::Inconclusive {
            reason: format!(
                "{} complete blocks, second-half tail Σa² = {half_tail:e}: neither summable below {tol:e} nor growing by {CUBE_DIVERGENCE_FLOOR} per doubling",
                blocks.len()
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ConeVerdict {
    /// `⟨ĝ, axis⟩ ≥ 1` for every normalised generator.
    Pointed {
        axis: Vec<f64>,
        min_inner: f64,
    },
    /// `direction` and its negative are both conic combinations of the
    /// generators with the given coefficients.
    ContainsLine {
        direction: Vec<f64>,
        plus: Vec<f64>,
        minus: Vec<f64>,
    },
    Inconclusive {
        reason: String,
    },
}

/// `K_ε = {x ∈ C : ⟨x, a⟩ ≤ r/ε}`, the compact truncation of a pointed
/// cone used as the tail-mass candidate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedCone {
    pub axis: Vec<f64>,
    pub level: f64,
}

impl TruncatedCone {
    pub fn new(axis: Vec<f64>, r: f64, eps: f64) -> Self {
        Self {
            axis,
            level: r / eps,
        }
    }

    /// Membership for a point already known to lie in the cone.
    pub fn contains_cone_point(&self, x: &[f64]) -> bool {
        dot(&self.axis, x) <= self.level * (1.0 + 1e-12)
    }
}

const CONE_TOL: f64 = 1e-9;

fn normalized_generators(generators: &[Point]) -> Result<Vec<Vec<f64>>, CertError> {
    if generators.is_empty() {
        return Err(CertError::BadInput("need at least one generator".into()));
    }
    let d = generators[0].dim();
    generators
        .iter()
        .map(|g| {
            if g.dim() != d {
                return Err(SpaceError::DimensionMismatch {
                    expected: d,
                    got: g.dim(),
                }
                .into());
            }
            let n = norm_of(g.coords(), 2.0);
            if n <= 1e-12 {
                return Err(CertError::BadInput("generators must be nonzero".into()));
            }
            Ok(g.coords().iter().map(|c| c / n).collect())
        })
        .collect()
}

/// Decides whether `cone(generators)` is pointed, returning an axis `a` with
/// `⟨ĝ_j, a⟩ ≥ 1` or a line direction with conic certificates for `±v`.
pub fn pointed_cone_classify(generators: &[Point]) -> Result<ConeVerdict, CertError> {
    let g = normalized_generators(generators)?;
    let d = g[0].len();
    // max t s.t. ⟨ĝ_j, a⟩ ≥ t, |a_i| ≤ 1, t ≤ 1
    let mut lp = LinearProgram::maximize();
    let a: Vec<usize> = (0..d).map(|_| lp.var(0.0, -1.0, 1.0)).collect();
    let t = lp.var(1.0, f64::NEG_INFINITY, 1.0);
    for gj in &g {
        let mut row: Vec<(usize, f64)> = a.iter().zip(gj).map(|(v, c)| (*v, *c)).collect();
        row.push((t, -1.0));
        lp.constraint(&row, Sense::Ge, 0.0);
    }
    let Ok(sol) = lp.solve() else {
        return Ok(ConeVerdict::Inconclusive {
            reason: "axis LP failed".into(),
        });
    };
    if sol.objective > CONE_TOL {
        let axis: Vec<f64> = a.iter().map(|v| sol.x[*v] / sol.objective).collect();
        let min_inner = g
            .iter()
            .map(|gj| dot(gj, &axis))
            .fold(f64::INFINITY, f64::min);
        if min_inner > 0.0 {
            return Ok(ConeVerdict::Pointed { axis, min_inner });
        }
        return Ok(ConeVerdict::Inconclusive {
            reason: format!("axis check gave {min_inner:e}"),
        });
    }
    // λ ≥ 0, Σλ = 1, Σ λ_j ĝ_j = 0
    let mut lp = LinearProgram::minimize();
    let lam: Vec<usize> = g.iter().map(|_| lp.var(0.0, 0.0, f64::INFINITY)).collect();
    for i in 0..d {
        let row: Vec<(usize, f64)> = lam.iter().zip(&g).map(|(v, gj)| (*v, gj[i])).collect();
        lp.constraint(&row, Sense::Eq, 0.0);
    }
    let ones: Vec<(usize, f64)> = lam.iter().map(|v| (*v, 1.0)).collect();
    lp.constraint(&ones, Sense::Eq, 1.0);
    let Ok(sol) = lp.solve() else {
        return Ok(ConeVerdict::Inconclusive {
            reason: "no pointed axis and no line found".into(),
        });
    };
    let weights: Vec<f64> = lam.iter().map(|v| sol.x[*v].max(0.0)).collect();
    let k = (0..weights.len()).fold(0, |b, i| if weights[i] > weights[b] { i } else { b });
    let direction = g[k].clone();
    let scale = norm_of(generators[k].coords(), 2.0);
    let mut plus = vec![0.0; g.len()];
    plus[k] = 1.0 / scale;
    let minus: Vec<f64> = (0..g.len())
        .map(|j| {
            if j == k {
                0.0
            } else {
                weights[j] / weights[k] / norm_of(generators[j].coords(), 2.0)
            }
        })
        .collect();
    let rebuild = |coef: &[f64]| -> Vec<f64> {
        let mut v = vec![0.0; d];
        for (c, gj) in coef.iter().zip(generators) {
            for (vi, gi) in v.iter_mut().zip(gj.coords()) {
                *vi += c * gi;
            }
        }
        v
    };
    let p = rebuild(&plus);
    let m = rebuild(&minus);
    let err_p = p
        .iter()
        .zip(&direction)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let err_m = m
        .iter()
        .zip(&direction)
        .map(|(a, b)| (a + b).abs())
        .fold(0.0, f64::max);
    if err_p > 1e-8 || err_m > 1e-8 {
        return Ok(ConeVerdict::Inconclusive {
            reason: format!("line certificate residuals {err_p:e}, {err_m:e}"),
        });
    }
    Ok(ConeVerdict::ContainsLine {
        direction,
        plus,
        minus,
    })
}

/// Four independently computed properties of `offset + cone(generators)`
/// that hold or fail together.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    /// The set lies in a translated pointed cone (axis LP).
    pub in_pointed_cone: bool,
    /// The set has an extreme point (the apex is a vertex: no `−ĝ_k` lies
    /// in the cone).
    pub has_extreme_point: bool,
    /// The set contains no line (Gordan alternative: `Σ μ_j ĝ_j = 0` forces
    /// `μ = 0`).
    pub line_free: bool,
    /// The polar set has an interior point (Chebyshev-ball LP).
    pub polar_has_interior: bool,
}

impl EquivalenceReport {
    pub fn agree(&self) -> bool {
        let v = self.in_pointed_cone;
        self.has_extreme_point == v && self.line_free == v && self.polar_has_interior == v
    }
}

pub fn polyhedral_equivalence_check(
    generators: &[Point],
    offset: &Point,
) -> Result<EquivalenceReport, CertError> {
    let g = normalized_generators(generators)?;
    let d = g[0].len();
    if offset.dim() != d {
        return Err(SpaceError::DimensionMismatch {
            expected: d,
            got: offset.dim(),
        }
        .into());
    }
    let in_pointed_cone = match pointed_cone_classify(generators)? {
        ConeVerdict::Pointed { .. } => true,
        ConeVerdict::ContainsLine { .. } => false,
        ConeVerdict::Inconclusive { reason } => return Err(CertError::Construction(reason)),
    };

    let mut has_extreme_point = true;
    for k in 0..g.len() {
        // is −ĝ_k = Σ ν_j ĝ_j with ν ≥ 0 ?
        let mut lp = LinearProgram::minimize();
        let nu: Vec<usize> = g.iter().map(|_| lp.var(0.0, 0.0, f64::INFINITY)).collect();
        for i in 0..d {
            let row: Vec<(usize, f64)> = nu.iter().zip(&g).map(|(v, gj)| (*v, gj[i])).collect();
            lp.constraint(&row, Sense::Eq, -g[k][i]);
        }
        if lp.solve().is_ok() {
            has_extreme_point = false;
            break;
        }
    }

    // max Σ μ s.t. Σ μ_j ĝ_j = 0, 0 ≤ μ ≤ 1
    let mut lp = LinearProgram::maximize();
    let mu: Vec<usize> = g.iter().map(|_| lp.var(1.0, 0.0, 1.0)).collect();
    for i in 0..d {
        let row: Vec<(usize, f64)> = mu.iter().zip(&g).map(|(v, gj)| (*v, gj[i])).collect();
        lp.constraint(&row, Sense::Eq, 0.0);
    }
    let line_free = match lp.solve() {
        Ok(sol) => sol.objective <= CONE_TOL,
        Err(_) => return Err(CertError::Construction("Gordan LP failed".into())),
    };

    // polar: {y : ⟨y, offset⟩ ≤ 1, ⟨y, ĝ_j⟩ ≤ 0}; largest inscribed ball
    // centred in the box |y_i| ≤ 1
    let mut lp = LinearProgram::maximize();
    let y: Vec<usize> = (0..d).map(|_| lp.var(0.0, -1.0, 1.0)).collect();
    let rho = lp.var(1.0, 0.0, 1.0);
    for gj in &g {
        let mut row: Vec<(usize, f64)> = y.iter().zip(gj).map(|(v, c)| (*v, *c)).collect();
        row.push((rho, 1.0));
        lp.constraint(&row, Sense::Le, 0.0);
    }
    let mut row: Vec<(usize, f64)> = y
        .iter()
        .zip(offset.coords())
        .map(|(v, c)| (*v, *c))
        .collect();
    row.push((rho, norm_of(offset.coords(), 2.0)));
    lp.constraint(&row, Sense::Le, 1.0);
    let polar_has_interior = match lp.solve() {
        Ok(sol) => sol.objective > CONE_TOL,
        Err(_) => return Err(CertError::Construction("polar LP failed".into())),
    };

    let report = EquivalenceReport {
        in_pointed_cone,
        has_extreme_point,
        line_free,
        polar_has_interior,
    };
    if report.agree() {
        Ok(report)
    } else {
        Err(CertError::EquivalenceViolated(Box::new(report)))
    }
}
