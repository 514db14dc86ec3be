//! Truncated sequence spaces and the concrete convex sets the rest of the
//! crate works on.
//!
//! Every "infinite" sequence is stored at an explicit truncation dimension
//! `N`. Phenomena that only exist in the limit (tails escaping to infinity,
//! divergent sums) are emulated by growing `N`, so every constructor that
//! builds such a set takes the dimension as a parameter.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Default absolute slack on each defining inequality in [`contains`].
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("norm exponent must satisfy p >= 1, got {0}")]
    BadExponent(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("points must have at least one coordinate")]
    Empty,
    #[error("non-finite coordinate at position {0}")]
    NonFinite(usize),
    #[error("invalid set descriptor: {0}")]
    InvalidDescriptor(String),
}

/// A finite real vector tagged with the exponent of its ambient ℓ_p space.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
    ambient_p: f64,
}

impl Point {
    /// Point in ℓ_2.
    pub fn new(coords: Vec<f64>) -> Result<Self, SpaceError> {
        Self::with_ambient(coords, 2.0)
    }

    pub fn with_ambient(coords: Vec<f64>, ambient_p: f64) -> Result<Self, SpaceError> {
        if coords.is_empty() {
            return Err(SpaceError::Empty);
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(SpaceError::NonFinite(i));
        }
        if !(ambient_p >= 1.0) {
            return Err(SpaceError::BadExponent(ambient_p));
        }
        Ok(Self { coords, ambient_p })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "points must have at least one coordinate");
        Self {
            coords: vec![0.0; dim],
            ambient_p: 2.0,
        }
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>, ambient_p: f64) -> Self {
        debug_assert!(!coords.is_empty() && coords.iter().all(|c| c.is_finite()));
        Self { coords, ambient_p }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn ambient_p(&self) -> f64 {
        self.ambient_p
    }

    pub fn retag(mut self, ambient_p: f64) -> Self {
        self.ambient_p = ambient_p;
        self
    }

    /// Norm of the ambient space.
    pub fn norm(&self) -> f64 {
        norm_of(&self.coords, self.ambient_p)
    }

    pub fn dot(&self, other: &Point) -> f64 {
        dot(&self.coords, &other.coords)
    }

    pub fn scaled(&self, t: f64) -> Point {
        Point::from_vec_unchecked(self.coords.iter().map(|c| c * t).collect(), self.ambient_p)
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point::from_vec_unchecked(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
            self.ambient_p,
        )
    }

    pub fn add(&self, other: &Point) -> Point {
        Point::from_vec_unchecked(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
            self.ambient_p,
        )
    }

    /// Distance in the ambient norm.
    pub fn dist(&self, other: &Point) -> f64 {
        let diff: Vec<f64> = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a - b)
            .collect();
        norm_of(&diff, self.ambient_p)
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coords.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(d)?;
        Point::new(coords).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(Σ|x_i|^p)^{1/p}`, or `max |x_i|` for `p = ∞`. No validation of `p`.
pub(crate) fn norm_of(x: &[f64], p: f64) -> f64 {
    if p == f64::INFINITY {
        x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        x.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        // scaled to avoid overflow on large coordinates
        let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
    } else {
        let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        scale
            * x.iter()
                .map(|v| (v.abs() / scale).powf(p))
                .sum::<f64>()
                .powf(1.0 / p)
    }
}

pub fn lp_norm(x: &Point, p: f64) -> Result<f64, SpaceError> {
    if !(p >= 1.0) {
        return Err(SpaceError::BadExponent(p));
    }
    Ok(norm_of(x.coords(), p))
}

/// `e_i` in `R^dim`, one-based like the sequence-space notation.
pub fn canonical_basis(i: usize, dim: usize) -> Result<Point, SpaceError> {
    if i == 0 || i > dim {
        return Err(SpaceError::IndexOutOfRange { index: i, dim });
    }
    let mut coords = vec![0.0; dim];
    coords[i - 1] = 1.0;
    Ok(Point::from_vec_unchecked(coords, 2.0))
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetFamily {
    /// `{x ≥ 0, Σ x ≤ 1}` in ℓ_1: the bounded part of the positive cone.
    L1ConeBounded,
    /// `A_p = {x ≥ 0, ‖x‖_p ≤ 1}`.
    LpConeBounded { p: f64 },
    /// `Δ_p = {x ≥ 0, Σ x ≤ 1}` carrying the ℓ_p topology.
    SimplexDeltaP { p: f64 },
    /// `H_a = {|x_i| ≤ a_i}` in ℓ_2.
    HilbertCube { a: Vec<f64> },
    /// Closed Euclidean unit ball.
    UnitBall,
    /// `conv{0, e_1, …, e_N}` in `R^N`.
    StandardTruncatedSimplex,
}

impl SetFamily {
    pub fn name(&self) -> &'static str {
        match self {
            SetFamily::L1ConeBounded => "L1ConeBounded",
            SetFamily::LpConeBounded { .. } => "LpConeBounded",
            SetFamily::SimplexDeltaP { .. } => "SimplexDeltaP",
            SetFamily::HilbertCube { .. } => "HilbertCube",
            SetFamily::UnitBall => "UnitBall",
            SetFamily::StandardTruncatedSimplex => "StandardTruncatedSimplex",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetDescriptor {
    family: SetFamily,
    dim: usize,
}

impl SetDescriptor {
    pub fn new(family: SetFamily, dim: usize) -> Result<Self, SpaceError> {
        if dim == 0 {
            return Err(SpaceError::Empty);
        }
        match &family {
            SetFamily::LpConeBounded { p } | SetFamily::SimplexDeltaP { p } => {
                if !(*p >= 1.0) {
                    return Err(SpaceError::BadExponent(*p));
                }
            }
            SetFamily::HilbertCube { a } => {
                if a.len() != dim {
                    return Err(SpaceError::DimensionMismatch {
                        expected: dim,
                        got: a.len(),
                    });
                }
                if a.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(SpaceError::InvalidDescriptor(
                        "Hilbert cube half-widths must be finite and strictly positive".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(Self { family, dim })
    }

    pub fn l1_cone(dim: usize) -> Self {
        Self::new(SetFamily::L1ConeBounded, dim).expect("dim >= 1")
    }

    pub fn lp_cone(p: f64, dim: usize) -> Result<Self, SpaceError> {
        Self::new(SetFamily::LpConeBounded { p }, dim)
    }

    pub fn delta_p(p: f64, dim: usize) -> Result<Self, SpaceError> {
        Self::new(SetFamily::SimplexDeltaP { p }, dim)
    }

    pub fn hilbert_cube(a: Vec<f64>) -> Result<Self, SpaceError> {
        let dim = a.len();
        Self::new(SetFamily::HilbertCube { a }, dim)
    }

    pub fn unit_ball(dim: usize) -> Self {
        Self::new(SetFamily::UnitBall, dim).expect("dim >= 1")
    }

    pub fn standard_simplex(dim: usize) -> Self {
        Self::new(SetFamily::StandardTruncatedSimplex, dim).expect("dim >= 1")
    }

    pub fn family(&self) -> &SetFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Exponent of the norm the family is topologised with.
    pub fn ambient_p(&self) -> f64 {
        match &self.family {
            SetFamily::L1ConeBounded => 1.0,
            SetFamily::LpConeBounded { p } | SetFamily::SimplexDeltaP { p } => *p,
            SetFamily::HilbertCube { .. } | SetFamily::UnitBall => 2.0,
            SetFamily::StandardTruncatedSimplex => 2.0,
        }
    }

    /// Families whose extreme set is `{0, e_1, …, e_N}`.
    pub fn is_simplex_like(&self) -> bool {
        matches!(
            self.family,
            SetFamily::L1ConeBounded
                | SetFamily::SimplexDeltaP { .. }
                | SetFamily::StandardTruncatedSimplex
        )
    }

    /// Families described by finitely many linear inequalities.
    pub fn is_polyhedral(&self) -> bool {
        self.is_simplex_like() || matches!(self.family, SetFamily::HilbertCube { .. })
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), SpaceError> {
        if x.len() != self.dim {
            return Err(SpaceError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn contains_slice(&self, x: &[f64], tol: f64) -> bool {
        let nonneg = || x.iter().all(|v| *v >= -tol);
        match &self.family {
            SetFamily::L1ConeBounded
            | SetFamily::SimplexDeltaP { .. }
            | SetFamily::StandardTruncatedSimplex => nonneg() && x.iter().sum::<f64>() <= 1.0 + tol,
            SetFamily::LpConeBounded { p } => nonneg() && norm_of(x, *p) <= 1.0 + tol,
            SetFamily::HilbertCube { a } => x.iter().zip(a).all(|(v, ai)| v.abs() <= ai + tol),
            SetFamily::UnitBall => norm_of(x, 2.0) <= 1.0 + tol,
        }
    }

    /// Minkowski gauge of the set at a sign-admissible `y`.
    fn gauge(&self, y: &[f64]) -> f64 {
        match &self.family {
            SetFamily::L1ConeBounded
            | SetFamily::SimplexDeltaP { .. }
            | SetFamily::StandardTruncatedSimplex => y.iter().sum::<f64>(),
            SetFamily::LpConeBounded { p } => norm_of(y, *p),
            SetFamily::UnitBall => norm_of(y, 2.0),
            SetFamily::HilbertCube { a } => y
                .iter()
                .zip(a)
                .fold(0.0_f64, |m, (v, ai)| m.max(v.abs() / ai)),
        }
    }

    /// Largest `t ∈ [0, 1]` with `t·y` in the set; `y` must already satisfy
    /// the sign constraints of the family.
    fn radial_limit(&self, y: &[f64]) -> f64 {
        let g = self.gauge(y);
        if g <= 1.0 {
            1.0
        } else {
            1.0 / g
        }
    }

    /// Maps an arbitrary vector into the set: clips sign constraints, then
    /// scales toward the origin (every family is star-shaped about 0).
    pub fn project_by_scaling(&self, y: &[f64]) -> Vec<f64> {
        let mut v: Vec<f64> = y.to_vec();
        match &self.family {
            SetFamily::L1ConeBounded
            | SetFamily::SimplexDeltaP { .. }
            | SetFamily::StandardTruncatedSimplex
            | SetFamily::LpConeBounded { .. } => {
                for c in v.iter_mut() {
                    *c = c.max(0.0);
                }
            }
            SetFamily::HilbertCube { a } => {
                for (c, ai) in v.iter_mut().zip(a) {
                    *c = c.clamp(-ai, *ai);
                }
                return v;
            }
            SetFamily::UnitBall => {}
        }
        let t = self.radial_limit(&v);
        if t < 1.0 {
            // shave a few ulps so rounding cannot push the result outside
            let t = t * (1.0 - 4.0 * f64::EPSILON);
            for c in v.iter_mut() {
                *c *= t;
            }
        }
        v
    }

    /// Radially rescales a sign-admissible nonzero `y` onto the boundary of
    /// the set; `None` if `y` projects to the origin.
    pub(crate) fn scale_to_boundary(&self, y: &[f64]) -> Option<Vec<f64>> {
        let v = self.project_by_scaling(y);
        if v.iter().all(|c| *c == 0.0) {
            return None;
        }
        let t = (1.0 - 4.0 * f64::EPSILON) / self.gauge(&v);
        Some(v.iter().map(|c| c * t).collect())
    }

    /// Extreme points used as the seed support of hull searches. Finite
    /// extreme sets are listed completely when small; curved boundaries and
    /// large vertex sets are sampled.
    pub fn extreme_candidates<R: Rng + ?Sized>(
        &self,
        samples: usize,
        rng: &mut R,
    ) -> Vec<Vec<f64>> {
        let n = self.dim;
        let basis = |i: usize| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        };
        let mut out = Vec::new();
        match &self.family {
            SetFamily::L1ConeBounded
            | SetFamily::SimplexDeltaP { .. }
            | SetFamily::StandardTruncatedSimplex => {
                out.push(vec![0.0; n]);
                out.extend((0..n).map(basis));
            }
            SetFamily::LpConeBounded { p } => {
                out.push(vec![0.0; n]);
                out.extend((0..n).map(basis));
                for _ in 0..samples {
                    let g: Vec<f64> = (0..n)
                        .map(|_| rng.sample::<f64, _>(StandardNormal).abs())
                        .collect();
                    let s = norm_of(&g, *p);
                    if s > 0.0 {
                        out.push(g.iter().map(|v| v / s).collect());
                    }
                }
            }
            SetFamily::HilbertCube { a } => {
                if n <= 10 {
                    for mask in 0u32..(1u32 << n) {
                        out.push(
                            a.iter()
                                .enumerate()
                                .map(|(i, ai)| if mask >> i & 1 == 1 { -ai } else { *ai })
                                .collect(),
                        );
                    }
                } else {
                    for _ in 0..samples.max(2 * n) {
                        out.push(
                            a.iter()
                                .map(|ai| if rng.gen::<bool>() { *ai } else { -ai })
                                .collect(),
                        );
                    }
                }
            }
            SetFamily::UnitBall => {
                for i in 0..n {
                    let e = basis(i);
                    out.push(e.iter().map(|v| -v).collect());
                    out.push(e);
                }
                for _ in 0..samples {
                    out.push(random_unit_vector(n, rng));
                }
            }
        }
        out
    }

    /// A random point of the set (not uniform; spread over faces and interior).
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.dim;
        match &self.family {
            SetFamily::L1ConeBounded
            | SetFamily::SimplexDeltaP { .. }
            | SetFamily::StandardTruncatedSimplex => {
                // Dirichlet(1,…,1) over N+1 barycentric slots, slack dropped
                let e: Vec<f64> = (0..=n)
                    .map(|_| -rng.gen::<f64>().max(1e-300).ln())
                    .collect();
                let s: f64 = e.iter().sum();
                e[..n].iter().map(|v| v / s).collect()
            }
            SetFamily::LpConeBounded { p } => {
                let g: Vec<f64> = (0..n)
                    .map(|_| rng.sample::<f64, _>(StandardNormal).abs())
                    .collect();
                let s = norm_of(&g, *p);
                let r: f64 = rng.gen::<f64>().powf(1.0 / n as f64);
                if s == 0.0 {
                    return vec![0.0; n];
                }
                self.project_by_scaling(&g.iter().map(|v| r * v / s).collect::<Vec<_>>())
            }
            SetFamily::HilbertCube { a } => {
                a.iter().map(|ai| ai * rng.gen_range(-1.0..=1.0)).collect()
            }
            SetFamily::UnitBall => {
                let u = random_unit_vector(n, rng);
                let r: f64 = rng.gen::<f64>().powf(1.0 / n as f64);
                self.project_by_scaling(&u.iter().map(|v| r * v).collect::<Vec<_>>())
            }
        }
    }
}

pub fn contains(desc: &SetDescriptor, x: &Point, tol: f64) -> Result<bool, SpaceError> {
    desc.check_dim(x.coords())?;
    Ok(desc.contains_slice(x.coords(), tol))
}

pub(crate) fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let s = norm_of(&g, 2.0);
        if s > 1e-12 {
            return g.iter().map(|v| v / s).collect();
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DescriptorJson {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<Vec<f64>>,
    dim: usize,
}

impl Serialize for SetDescriptor {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let (p, a) = match &self.family {
            SetFamily::LpConeBounded { p } | SetFamily::SimplexDeltaP { p } => (Some(*p), None),
            SetFamily::HilbertCube { a } => (None, Some(a.clone())),
            _ => (None, None),
        };
        DescriptorJson {
            family: self.family.name().to_string(),
            p,
            a,
            dim: self.dim,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SetDescriptor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = DescriptorJson::deserialize(d)?;
        let need_p = || {
            raw.p
                .ok_or_else(|| D::Error::custom(format!("{} needs \"p\"", raw.family)))
        };
        let family = match raw.family.as_str() {
            "L1ConeBounded" => SetFamily::L1ConeBounded,
            "LpConeBounded" => SetFamily::LpConeBounded { p: need_p()? },
            "SimplexDeltaP" => SetFamily::SimplexDeltaP { p: need_p()? },
            "HilbertCube" => SetFamily::HilbertCube {
                a: raw
                    .a
                    .clone()
                    .ok_or_else(|| D::Error::custom("HilbertCube needs \"a\""))?,
            },
            "UnitBall" => SetFamily::UnitBall,
            "StandardTruncatedSimplex" => SetFamily::StandardTruncatedSimplex,
            other => return Err(D::Error::custom(format!("unknown set family {other:?}"))),
        };
        SetDescriptor::new(family, raw.dim).map_err(D::Error::custom)
    }
}
