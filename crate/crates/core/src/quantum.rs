//! Density matrices, partial traces, the `f_α` family and a convex-roof
//! optimiser over pure-state ensembles.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;

/// Hermiticity, positivity and trace slack for density matrices.
pub const STATE_TOL: f64 = 1e-10;
/// Ensemble components lighter than this are dropped.
pub const ZERO_WEIGHT: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("matrix is not square ({rows}×{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("factor dimensions {dh}×{dk} do not match matrix size {size}")]
    FactorMismatch { dh: usize, dk: usize, size: usize },
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix has eigenvalue {0:e} below zero")]
    NotPositive(f64),
    #[error("trace is {0}, not 1")]
    BadTrace(f64),
    #[error("state is not bipartite")]
    NotBipartite,
    #[error("alpha must exceed 1, got {0}")]
    BadAlpha(f64),
    #[error("ensemble size {m} is below the rank {rank}")]
    EnsembleTooSmall { m: usize, rank: usize },
    #[error("bad weights: {0}")]
    BadWeights(String),
    #[error("decomposition does not reconstruct the state (deviation {0:e})")]
    Reconstruction(f64),
    #[error("malformed matrix JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
    dims: (usize, usize),
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect()
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity and unit trace to [`STATE_TOL`].
    pub fn new(entries: CMatrix, dims: (usize, usize)) -> Result<Self, QuantumError> {
        let (rows, cols) = entries.shape();
        if rows != cols {
            return Err(QuantumError::NotSquare { rows, cols });
        }
        if dims.0 * dims.1 != rows || rows == 0 {
            return Err(QuantumError::FactorMismatch {
                dh: dims.0,
                dk: dims.1,
                size: rows,
            });
        }
        let herm = (&entries - entries.adjoint())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if herm > STATE_TOL {
            return Err(QuantumError::NotHermitian(herm));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(QuantumError::BadTrace(tr.re));
        }
        let min = eigenvalues(&entries)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < -STATE_TOL {
            return Err(QuantumError::NotPositive(min));
        }
        Ok(Self {
            entries: hermitian_part(&entries),
            dims,
        })
    }

    /// Single-system state.
    pub fn single(entries: CMatrix) -> Result<Self, QuantumError> {
        let d = entries.nrows();
        Self::new(entries, (d, 1))
    }

    /// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`.
    pub fn from_pure(psi: &[Complex64], dims: (usize, usize)) -> Result<Self, QuantumError> {
        let v = nalgebra::DVector::from_column_slice(psi);
        let n = v.norm_squared();
        if !(n > 0.0 && n.is_finite()) {
            return Err(QuantumError::BadTrace(n));
        }
        Self::new((&v * v.adjoint()).unscale(n), dims)
    }

    /// Computational-basis product state `|i⟩|j⟩`.
    pub fn basis_product(i: usize, j: usize, dims: (usize, usize)) -> Result<Self, QuantumError> {
        let mut psi = vec![Complex64::new(0.0, 0.0); dims.0 * dims.1];
        if i >= dims.0 || j >= dims.1 {
            return Err(QuantumError::FactorMismatch {
                dh: i + 1,
                dk: j + 1,
                size: psi.len(),
            });
        }
        psi[i * dims.1 + j] = Complex64::new(1.0, 0.0);
        Self::from_pure(&psi, dims)
    }

    /// `Σ w_i ρ_i` for weights on the simplex.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self, QuantumError> {
        check_weights(parts.iter().map(|(w, _)| *w))?;
        let first = parts
            .first()
            .ok_or_else(|| QuantumError::BadWeights("empty mixture".into()))?
            .1;
        let mut acc = CMatrix::zeros(first.size(), first.size());
        for (w, rho) in parts {
            if rho.dims != first.dims {
                return Err(QuantumError::FactorMismatch {
                    dh: rho.dims.0,
                    dk: rho.dims.1,
                    size: first.size(),
                });
            }
            acc += rho.entries.scale(*w);
        }
        Self::new(acc, first.dims)
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_bipartite(&self) -> bool {
        self.dims.0 > 1 && self.dims.1 > 1
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev = eigenvalues(&self.entries);
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        self.eigenvalues()[0] > 1.0 - tol
    }

    /// `‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        eigenvalues(&(&self.entries - &other.entries))
            .iter()
            .map(|v| v.abs())
            .sum()
    }

    /// Parses `[[ [re, im], … ], …]`.
    pub fn from_json(value: &Value, dims: (usize, usize)) -> Result<Self, QuantumError> {
        Self::new(parse_complex_matrix(value)?, dims)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("DensityMatrix", 2)?;
        st.serialize_field("dims", &[self.dims.0, self.dims.1])?;
        st.serialize_field("entries", &MatrixJson(&self.entries))?;
        st.end()
    }
}

/// Serialises a complex matrix as rows of `[re, im]` pairs.
pub struct MatrixJson<'a>(pub &'a CMatrix);

impl Serialize for MatrixJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.0.nrows())
            .map(|i| {
                (0..self.0.ncols())
                    .map(|j| [self.0[(i, j)].re, self.0[(i, j)].im])
                    .collect()
            })
            .collect();
        let mut seq = s.serialize_seq(Some(rows.len()))?;
        for r in &rows {
            seq.serialize_element(r)?;
        }
        seq.end()
    }
}

pub fn parse_complex_matrix(value: &Value) -> Result<CMatrix, QuantumError> {
    let bad = |m: &str| QuantumError::Json(m.to_string());
    let rows = value
        .as_array()
        .ok_or_else(|| bad("expected an array of rows"))?;
    let n = rows.len();
    let mut m = CMatrix::zeros(
        n,
        rows.first()
            .and_then(|r| r.as_array())
            .map_or(0, |r| r.len()),
    );
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| bad("row is not an array"))?;
        if row.len() != m.ncols() {
            return Err(bad("ragged rows"));
        }
        for (j, c) in row.iter().enumerate() {
            let z = match c {
                Value::Number(x) => {
                    Complex64::new(x.as_f64().ok_or_else(|| bad("bad number"))?, 0.0)
                }
                Value::Array(pair) if pair.len() == 2 => {
                    let re = pair[0].as_f64().ok_or_else(|| bad("bad real part"))?;
                    let im = pair[1].as_f64().ok_or_else(|| bad("bad imaginary part"))?;
                    Complex64::new(re, im)
                }
                _ => return Err(bad("entry must be [re, im] or a number")),
            };
            m[(i, j)] = z;
        }
    }
    Ok(m)
}

fn check_weights(ws: impl Iterator<Item = f64>) -> Result<(), QuantumError> {
    let mut total = 0.0;
    for w in ws {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(QuantumError::BadWeights(format!(
                "weight {w} is not a nonnegative number"
            )));
        }
        total += w;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(QuantumError::BadWeights(format!("weights sum to {total}")));
    }
    Ok(())
}

fn trace_out(m: &CMatrix, (dh, dk): (usize, usize)) -> CMatrix {
    CMatrix::from_fn(dh, dh, |a, b| {
        (0..dk).map(|k| m[(a * dk + k, b * dk + k)]).sum()
    })
}

/// `Tr_K ω`, the reduced state on the first factor.
pub fn partial_trace(omega: &DensityMatrix) -> Result<DensityMatrix, QuantumError> {
    if !omega.is_bipartite() {
        return Err(QuantumError::NotBipartite);
    }
    let dh = omega.dims.0;
    Ok(DensityMatrix {
        entries: hermitian_part(&trace_out(&omega.entries, omega.dims)),
        dims: (dh, 1),
    })
}

fn f_alpha_spectrum(ev: &[f64], alpha: f64) -> f64 {
    2.0 * (1.0 - ev.iter().map(|l| l.max(0.0).powf(alpha)).sum::<f64>())
}

fn entropy_spectrum(ev: &[f64]) -> f64 {
    -ev.iter()
        .filter(|l| **l > 0.0)
        .map(|l| l * l.log2())
        .sum::<f64>()
}

/// `2(1 − Tr ρ^α)`.
pub fn f_alpha(rho: &DensityMatrix, alpha: f64) -> Result<f64, QuantumError> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(QuantumError::BadAlpha(alpha));
    }
    Ok(f_alpha_spectrum(&rho.eigenvalues(), alpha))
}

/// `−Tr ρ log₂ ρ`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_spectrum(&rho.eigenvalues())
}

/// Unitarily invariant function of the reduced state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RoofFunction {
    Alpha { alpha: f64 },
    Entropy,
}

impl RoofFunction {
    /// Parses `alpha:<α>` or `entropy`.
    pub fn parse(s: &str) -> Result<Self, QuantumError> {
        if s == "entropy" {
            return Ok(RoofFunction::Entropy);
        }
        let alpha = s
            .strip_prefix("alpha:")
            .and_then(|a| a.parse::<f64>().ok())
            .ok_or_else(|| QuantumError::Json(format!("unknown function {s:?}")))?;
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(QuantumError::BadAlpha(alpha));
        }
        Ok(RoofFunction::Alpha { alpha })
    }

    fn of_matrix(&self, rho: &CMatrix) -> f64 {
        match *self {
            // Tr ρ² is the squared Frobenius norm; no spectrum needed
            RoofFunction::Alpha { alpha: 2.0 } => {
                2.0 * (1.0 - rho.iter().map(|c| c.norm_sqr()).sum::<f64>())
            }
            RoofFunction::Alpha { alpha } => f_alpha_spectrum(&eigenvalues(rho), alpha),
            RoofFunction::Entropy => entropy_spectrum(&eigenvalues(rho)),
        }
    }

    pub fn eval(&self, rho: &DensityMatrix) -> f64 {
        self.of_matrix(&rho.entries)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoofConfig {
    /// Ensemble size; defaults to `min(rank², 16)`, at least the rank.
    pub m: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
    /// Search stops once the rotation step falls below this.
    pub tol: f64,
    pub initial_step: f64,
    pub max_sweeps: usize,
}

impl Default for RoofConfig {
    fn default() -> Self {
        Self {
            m: None,
            restarts: 16,
            seed: 0x5EED,
            tol: 1e-9,
            initial_step: 0.5,
            max_sweeps: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoofResult {
    pub upper_bound: f64,
    pub decomposition: Vec<(f64, DensityMatrix)>,
    pub restarts_used: usize,
    /// Restart that produced the reported decomposition.
    pub best_restart: Option<usize>,
    /// Objective after each sweep, per restart.
    pub trajectories: Vec<Vec<f64>>,
    /// Isometry of the best restart, `m × rank`.
    #[serde(skip)]
    pub isometry: Option<CMatrix>,
}

/// Eigen-ensemble `√λ_j e_j` of ω as the columns of a `d × rank` matrix.
fn eigen_ensemble(omega: &DensityMatrix) -> CMatrix {
    let eig = omega.entries.clone().symmetric_eigen();
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&j| eig.eigenvalues[j] > ZERO_WEIGHT)
        .collect();
    let d = omega.size();
    CMatrix::from_fn(d, keep.len(), |i, c| {
        let j = keep[c];
        eig.eigenvectors[(i, j)] * eig.eigenvalues[j].sqrt()
    })
}

struct Ensemble<'a> {
    psi: &'a CMatrix,
    dims: (usize, usize),
    f: RoofFunction,
}

impl Ensemble<'_> {
    /// Unnormalised component `φ_i = Σ_j V_ij ψ_j`.
    fn component(&self, v: &CMatrix, i: usize) -> Vec<Complex64> {
        let d = self.psi.nrows();
        (0..d)
            .map(|a| (0..v.ncols()).map(|j| v[(i, j)] * self.psi[(a, j)]).sum())
            .collect()
    }

    /// `(π_i, ρ_i)` with `ρ_i` the reduced state of `φ_i / √π_i`.
    fn reduced(&self, phi: &[Complex64]) -> (f64, CMatrix) {
        let pi: f64 = phi.iter().map(|c| c.norm_sqr()).sum();
        let (dh, dk) = self.dims;
        if pi < ZERO_WEIGHT {
            return (pi, CMatrix::zeros(dh, dh));
        }
        let rho = CMatrix::from_fn(dh, dh, |a, b| {
            (0..dk)
                .map(|k| phi[a * dk + k] * phi[b * dk + k].conj())
                .sum::<Complex64>()
                / pi
        });
        (pi, rho)
    }

    fn contribution(&self, v: &CMatrix, i: usize) -> f64 {
        let (pi, rho) = self.reduced(&self.component(v, i));
        if pi < ZERO_WEIGHT {
            0.0
        } else {
            pi * self.f.of_matrix(&rho)
        }
    }
}

/// Applies `G = [[c, −e^{iφ}s], [e^{−iφ}s, c]]` to rows `p, q` of `v`.
fn rotate_rows(v: &mut CMatrix, p: usize, q: usize, theta: f64, phase: f64) {
    let (s, c) = theta.sin_cos();
    let e = Complex64::from_polar(1.0, phase);
    for j in 0..v.ncols() {
        let (a, b) = (v[(p, j)], v[(q, j)]);
        v[(p, j)] = a * c - e * b * s;
        v[(q, j)] = e.conj() * a * s + b * c;
    }
}

fn random_isometry<R: Rng + ?Sized>(m: usize, r: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(m, r, |_, _| {
        Complex64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    });
    g.qr().q()
}

fn eigen_isometry(m: usize, r: usize) -> CMatrix {
    CMatrix::from_fn(m, r, |i, j| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Appends `extra` zero rows; the padded isometry describes the same
/// ensemble plus empty components.
pub fn embed_isometry(v: &CMatrix, extra: usize) -> CMatrix {
    let mut out = CMatrix::zeros(v.nrows() + extra, v.ncols());
    out.view_mut((0, 0), v.shape()).copy_from(v);
    out
}

/// Coordinate search over left Givens rotations of the isometry. Returns
/// the final isometry and the per-sweep objective trajectory.
fn local_search(ens: &Ensemble, mut v: CMatrix, cfg: &RoofConfig) -> (CMatrix, Vec<f64>) {
    let m = v.nrows();
    let mut parts: Vec<f64> = (0..m).map(|i| ens.contribution(&v, i)).collect();
    let mut value: f64 = parts.iter().sum();
    let mut trajectory = vec![value];
    let mut step = cfg.initial_step;
    let mut sweeps = 0;
    while step >= cfg.tol && sweeps < cfg.max_sweeps {
        sweeps += 1;
        let mut improved = false;
        for p in 0..m {
            for q in p + 1..m {
                for phase in [0.0, std::f64::consts::FRAC_PI_2] {
                    for theta in [step, -step] {
                        let mut trial = v.clone();
                        rotate_rows(&mut trial, p, q, theta, phase);
                        let (cp, cq) = (ens.contribution(&trial, p), ens.contribution(&trial, q));
                        let delta = cp + cq - parts[p] - parts[q];
                        if delta < -1e-15 * (1.0 + value.abs()) {
                            v = trial;
                            parts[p] = cp;
                            parts[q] = cq;
                            value = parts.iter().sum();
                            improved = true;
                            break;
                        }
                    }
                }
            }
        }
        trajectory.push(value);
        if !improved {
            step *= 0.5;
        }
    }
    (v, trajectory)
}

fn decomposition_from(
    ens: &Ensemble,
    v: &CMatrix,
) -> Result<Vec<(f64, DensityMatrix)>, QuantumError> {
    let mut out = Vec::new();
    for i in 0..v.nrows() {
        let phi = ens.component(v, i);
        let pi: f64 = phi.iter().map(|c| c.norm_sqr()).sum();
        if pi < ZERO_WEIGHT {
            continue;
        }
        out.push((pi, DensityMatrix::from_pure(&phi, ens.dims)?));
    }
    let total: f64 = out.iter().map(|(w, _)| w).sum();
    out.iter_mut().for_each(|(w, _)| *w /= total);
    Ok(out)
}

fn decomposition_value(f: RoofFunction, decomposition: &[(f64, DensityMatrix)]) -> f64 {
    decomposition
        .iter()
        .map(|(w, rho)| w * f.of_matrix(&trace_out(&rho.entries, rho.dims)))
        .sum()
}

/// Largest entry deviation between `Σ w_i ρ_i` and ω.
pub fn reconstruction_error(omega: &DensityMatrix, decomposition: &[(f64, DensityMatrix)]) -> f64 {
    let mut acc = CMatrix::zeros(omega.size(), omega.size());
    for (w, rho) in decomposition {
        acc += rho.entries.scale(*w);
    }
    (acc - &omega.entries)
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

/// Upper bound on the convex roof of `f ∘ Tr_K` at ω by local search over
/// size-`m` pure ensembles. Restart 0 starts from the eigen-ensemble, the
/// others from seeded random isometries.
pub fn roof_optimize(
    omega: &DensityMatrix,
    f: RoofFunction,
    cfg: &RoofConfig,
) -> Result<RoofResult, QuantumError> {
    roof_optimize_from(omega, f, cfg, &[])
}

/// As [`roof_optimize`], with extra restarts started from the given
/// isometries (each `m × rank`), run after the seeded ones.
pub fn roof_optimize_from(
    omega: &DensityMatrix,
    f: RoofFunction,
    cfg: &RoofConfig,
    starts: &[CMatrix],
) -> Result<RoofResult, QuantumError> {
    if !omega.is_bipartite() {
        return Err(QuantumError::NotBipartite);
    }
    if let RoofFunction::Alpha { alpha } = f {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(QuantumError::BadAlpha(alpha));
        }
    }
    let psi = eigen_ensemble(omega);
    let rank = psi.ncols();
    let m = cfg.m.unwrap_or_else(|| (rank * rank).min(16).max(rank));
    if m < rank {
        return Err(QuantumError::EnsembleTooSmall { m, rank });
    }
    if rank == 1 {
        // a pure state has only the trivial decomposition
        let value = f.of_matrix(&trace_out(&omega.entries, omega.dims));
        return Ok(RoofResult {
            upper_bound: value,
            decomposition: vec![(1.0, omega.clone())],
            restarts_used: 0,
            best_restart: None,
            trajectories: Vec::new(),
            isometry: None,
        });
    }
    for s in starts {
        if s.shape() != (m, rank) {
            return Err(QuantumError::EnsembleTooSmall {
                m: s.nrows(),
                rank: s.ncols(),
            });
        }
    }
    let ens = Ensemble {
        psi: &psi,
        dims: omega.dims,
        f,
    };
    let total = cfg.restarts.max(1) + starts.len();
    let runs: Vec<(CMatrix, Vec<f64>)> = (0..total)
        .into_par_iter()
        .map(|k| {
            let v0 = if k < cfg.restarts.max(1) {
                if k == 0 {
                    eigen_isometry(m, rank)
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(k as u64);
                    random_isometry(m, rank, &mut rng)
                }
            } else {
                starts[k - cfg.restarts.max(1)].clone()
            };
            local_search(&ens, v0, cfg)
        })
        .collect();
    let best = (0..total)
        .min_by(|&a, &b| {
            let (va, vb) = (runs[a].1.last().unwrap(), runs[b].1.last().unwrap());
            va.total_cmp(vb).then(a.cmp(&b))
        })
        .expect("at least one restart");
    let decomposition = decomposition_from(&ens, &runs[best].0)?;
    let err = reconstruction_error(omega, &decomposition);
    if err > 1e-8 {
        return Err(QuantumError::Reconstruction(err));
    }
    let isometry = Some(runs[best].0.clone());
    Ok(RoofResult {
        upper_bound: decomposition_value(f, &decomposition),
        decomposition,
        restarts_used: total,
        best_restart: Some(best),
        trajectories: runs.into_iter().map(|(_, t)| t).collect(),
        isometry,
    })
}

/// Concatenates the decompositions of `ω_i` with weights `w_i` into a
/// decomposition of `Σ w_i ω_i`; its value bounds the roof of the mixture.
pub fn roof_convexity_certificate(
    f: RoofFunction,
    parts: &[(f64, &RoofResult)],
) -> Result<RoofResult, QuantumError> {
    check_weights(parts.iter().map(|(w, _)| *w))?;
    let dims = parts
        .iter()
        .flat_map(|(_, r)| r.decomposition.first().map(|(_, rho)| rho.dims))
        .next()
        .ok_or_else(|| QuantumError::BadWeights("no components".into()))?;
    let mut decomposition = Vec::new();
    for (w, r) in parts {
        for (pi, rho) in &r.decomposition {
            if rho.dims != dims {
                return Err(QuantumError::FactorMismatch {
                    dh: rho.dims.0,
                    dk: rho.dims.1,
                    size: dims.0 * dims.1,
                });
            }
            if w * pi >= ZERO_WEIGHT {
                decomposition.push((w * pi, rho.clone()));
            }
        }
    }
    let total: f64 = decomposition.iter().map(|(w, _)| w).sum();
    decomposition.iter_mut().for_each(|(w, _)| *w /= total);
    Ok(RoofResult {
        upper_bound: decomposition_value(f, &decomposition),
        decomposition,
        restarts_used: 0,
        best_restart: None,
        trajectories: Vec::new(),
        isometry: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bell(sign: f64) -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::from_pure(&[c(s), c(0.0), c(0.0), c(sign * s)], (2, 2)).unwrap()
    }

    fn diag(v: &[f64]) -> DensityMatrix {
        DensityMatrix::single(CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            v.len(),
            v.iter().map(|x| c(*x)),
        )))
        .unwrap()
    }

    #[test]
    fn validation() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.6), c(0.6), c(0.5)]);
        assert!(matches!(
            DensityMatrix::single(m),
            Err(QuantumError::NotPositive(_))
        ));
        let m = CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.1), c(0.0), c(0.5)]);
        assert!(matches!(
            DensityMatrix::single(m),
            Err(QuantumError::NotHermitian(_))
        ));
        let m = CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.0), c(0.0), c(0.6)]);
        assert!(matches!(
            DensityMatrix::single(m),
            Err(QuantumError::BadTrace(_))
        ));
        assert!(matches!(
            DensityMatrix::new(CMatrix::identity(4, 4).unscale(4.0), (2, 3)),
            Err(QuantumError::FactorMismatch { .. })
        ));
    }

    #[test]
    fn partial_trace_examples() {
        let p00 = DensityMatrix::basis_product(0, 0, (2, 2)).unwrap();
        let r = partial_trace(&p00).unwrap();
        assert_eq!(r.entries()[(0, 0)], c(1.0));
        assert_eq!(r.entries()[(1, 1)], c(0.0));
        let r = partial_trace(&bell(1.0)).unwrap();
        assert!((r.entries() - CMatrix::identity(2, 2).scale(0.5)).norm() < 1e-15);
        let p11 = DensityMatrix::basis_product(1, 1, (2, 2)).unwrap();
        let mix = DensityMatrix::mixture(&[(0.5, &p00), (0.5, &p11)]).unwrap();
        let r = partial_trace(&mix).unwrap();
        assert_eq!(r.entries(), diag(&[0.5, 0.5]).entries());
        assert!(matches!(
            partial_trace(&diag(&[0.5, 0.5])),
            Err(QuantumError::NotBipartite)
        ));
    }

    #[test]
    fn spectral_function_examples() {
        assert!((f_alpha(&diag(&[0.5, 0.5]), 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(f_alpha(&diag(&[1.0, 0.0]), 3.5).unwrap().abs() < 1e-15);
        assert!((f_alpha(&diag(&[0.75, 0.25]), 2.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(matches!(
            f_alpha(&diag(&[1.0, 0.0]), 1.0),
            Err(QuantumError::BadAlpha(_))
        ));
        assert_eq!(von_neumann_entropy(&diag(&[1.0, 0.0])), 0.0);
        assert!((von_neumann_entropy(&diag(&[0.5, 0.5])) - 1.0).abs() < 1e-15);
        let h = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((von_neumann_entropy(&diag(&[0.75, 0.25])) - h).abs() < 1e-15);
        assert!((h - 0.8113).abs() < 1e-4);
    }

    #[test]
    fn roof_examples() {
        let f2 = RoofFunction::Alpha { alpha: 2.0 };
        let cfg = RoofConfig::default();
        let p00 = DensityMatrix::basis_product(0, 0, (2, 2)).unwrap();
        assert_eq!(roof_optimize(&p00, f2, &cfg).unwrap().upper_bound, 0.0);
        let r = roof_optimize(&bell(1.0), f2, &cfg).unwrap();
        assert!((r.upper_bound - 1.0).abs() < 1e-12);
        assert_eq!(r.restarts_used, 0);

        let p11 = DensityMatrix::basis_product(1, 1, (2, 2)).unwrap();
        let sep = DensityMatrix::mixture(&[(0.5, &p00), (0.5, &p11)]).unwrap();
        let r = roof_optimize(&sep, f2, &cfg).unwrap();
        assert!(r.upper_bound <= 1e-8, "{}", r.upper_bound);

        let w = DensityMatrix::mixture(&[(0.75, &bell(1.0)), (0.25, &bell(-1.0))]).unwrap();
        let r = roof_optimize(
            &w,
            f2,
            &RoofConfig {
                m: Some(4),
                ..cfg.clone()
            },
        )
        .unwrap();
        assert!((r.upper_bound - 0.25).abs() < 1e-6, "{}", r.upper_bound);
        assert!(reconstruction_error(&w, &r.decomposition) < 1e-8);
        assert!((decomposition_value(f2, &r.decomposition) - r.upper_bound).abs() < 1e-10);
        for (_, rho) in &r.decomposition {
            assert!(rho.is_pure(1e-8));
        }
        for t in &r.trajectories {
            assert!(t.windows(2).all(|p| p[1] <= p[0]));
        }
        assert!(matches!(
            roof_optimize(&w, f2, &RoofConfig { m: Some(1), ..cfg }),
            Err(QuantumError::EnsembleTooSmall { .. })
        ));
    }

    #[test]
    fn entropy_roof_on_separable_mixture() {
        let p00 = DensityMatrix::basis_product(0, 0, (2, 2)).unwrap();
        let p11 = DensityMatrix::basis_product(1, 1, (2, 2)).unwrap();
        let sep = DensityMatrix::mixture(&[(0.3, &p00), (0.7, &p11)]).unwrap();
        let r = roof_optimize(&sep, RoofFunction::Entropy, &RoofConfig::default()).unwrap();
        assert!(r.upper_bound <= 1e-8);
    }

    #[test]
    fn monotone_in_restarts_and_ensemble_size() {
        let f2 = RoofFunction::Alpha { alpha: 2.0 };
        let p01 = DensityMatrix::basis_product(0, 1, (2, 2)).unwrap();
        let w = DensityMatrix::mixture(&[(0.6, &bell(1.0)), (0.4, &p01)]).unwrap();
        let base = RoofConfig {
            m: Some(3),
            restarts: 2,
            max_sweeps: 40,
            ..RoofConfig::default()
        };
        let few = roof_optimize(&w, f2, &base).unwrap();
        let more = roof_optimize(
            &w,
            f2,
            &RoofConfig {
                restarts: 4,
                ..base.clone()
            },
        )
        .unwrap();
        assert!(more.upper_bound <= few.upper_bound);
        let start = embed_isometry(few.isometry.as_ref().unwrap(), 1);
        let bigger =
            roof_optimize_from(&w, f2, &RoofConfig { m: Some(4), ..base }, &[start]).unwrap();
        assert!(bigger.upper_bound <= few.upper_bound + 1e-12);
    }

    #[test]
    fn convexity_certificate_examples() {
        let f2 = RoofFunction::Alpha { alpha: 2.0 };
        let cfg = RoofConfig::default();
        let phi = roof_optimize(&bell(1.0), f2, &cfg).unwrap();
        let single = roof_convexity_certificate(f2, &[(1.0, &phi)]).unwrap();
        assert_eq!(single.upper_bound, phi.upper_bound);
        assert_eq!(single.decomposition, phi.decomposition);

        let p00 = DensityMatrix::basis_product(0, 0, (2, 2)).unwrap();
        let p11 = DensityMatrix::basis_product(1, 1, (2, 2)).unwrap();
        let (r00, r11) = (
            roof_optimize(&p00, f2, &cfg).unwrap(),
            roof_optimize(&p11, f2, &cfg).unwrap(),
        );
        assert_eq!(
            roof_convexity_certificate(f2, &[(0.5, &r00), (0.5, &r11)])
                .unwrap()
                .upper_bound,
            0.0
        );

        let cert = roof_convexity_certificate(f2, &[(0.5, &phi), (0.5, &r00)]).unwrap();
        assert!((cert.upper_bound - 0.5).abs() < 1e-12);
        let mix = DensityMatrix::mixture(&[(0.5, &bell(1.0)), (0.5, &p00)]).unwrap();
        assert!(reconstruction_error(&mix, &cert.decomposition) < 1e-12);
        let direct = roof_optimize(&mix, f2, &cfg).unwrap();
        assert!(direct.upper_bound <= cert.upper_bound + 1e-9);

        let q = DensityMatrix::from_pure(&[c(1.0), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0)], (2, 3))
            .unwrap();
        let rq = roof_optimize(&q, f2, &cfg).unwrap();
        assert!(matches!(
            roof_convexity_certificate(f2, &[(0.5, &phi), (0.5, &rq)]),
            Err(QuantumError::FactorMismatch { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let w = DensityMatrix::mixture(&[(0.75, &bell(1.0)), (0.25, &bell(-1.0))]).unwrap();
        let v = serde_json::to_value(&w).unwrap();
        let back = DensityMatrix::from_json(&v["entries"], (2, 2)).unwrap();
        assert_eq!(back, w);
        assert!(parse_complex_matrix(&serde_json::json!([[1, [0, 1]], [2]])).is_err());
        assert_eq!(
            RoofFunction::parse("alpha:2").unwrap(),
            RoofFunction::Alpha { alpha: 2.0 }
        );
        assert_eq!(
            RoofFunction::parse("entropy").unwrap(),
            RoofFunction::Entropy
        );
        assert!(RoofFunction::parse("alpha:0.5").is_err());
    }

    fn random_state(seed: u64, d: usize) -> DensityMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMatrix::from_fn(d, d, |_, _| {
            Complex64::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            )
        });
        let m = &g * g.adjoint();
        let tr = m.trace().re;
        DensityMatrix::new(m.unscale(tr), (2, d / 2)).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn f_alpha_unitarily_invariant(seed in 0u64..1000, alpha in 1.1f64..4.0) {
            let rho = random_state(seed, 4);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
            let u = random_isometry(4, 4, &mut rng);
            let rotated = DensityMatrix::new(&u * rho.entries() * u.adjoint(), (2, 2)).unwrap();
            let (a, b) = (f_alpha(&rho, alpha).unwrap(), f_alpha(&rotated, alpha).unwrap());
            prop_assert!((a - b).abs() < 1e-10);
            prop_assert!(a >= -1e-10);
            prop_assert_eq!(a < 1e-8, rho.eigenvalues()[0] > 1.0 - 1e-8);
        }

        #[test]
        fn partial_trace_is_linear_and_positive(s1 in 0u64..1000, s2 in 0u64..1000, w in 0.0f64..1.0) {
            let (a, b) = (random_state(s1, 6), random_state(s2, 6));
            let mix = DensityMatrix::mixture(&[(w, &a), (1.0 - w, &b)]).unwrap();
            let lhs = partial_trace(&mix).unwrap();
            let (ra, rb) = (partial_trace(&a).unwrap(), partial_trace(&b).unwrap());
            let rhs = ra.entries().scale(w) + rb.entries().scale(1.0 - w);
            prop_assert!((lhs.entries() - rhs).norm() < 1e-10);
            prop_assert!((lhs.entries().trace().re - 1.0).abs() < 1e-10);
            prop_assert!(lhs.eigenvalues().iter().all(|l| *l >= -1e-10));
        }

        #[test]
        fn pure_roof_is_exact(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi: Vec<Complex64> = (0..6)
                .map(|_| Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
                .collect();
            let omega = DensityMatrix::from_pure(&psi, (2, 3)).unwrap();
            let f2 = RoofFunction::Alpha { alpha: 2.0 };
            let r = roof_optimize(&omega, f2, &RoofConfig::default()).unwrap();
            let direct = f_alpha(&partial_trace(&omega).unwrap(), 2.0).unwrap();
            prop_assert!((r.upper_bound - direct).abs() < 1e-12);
        }
    }
}
