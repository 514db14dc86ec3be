//! Finitely supported probability measures on a truncated space, their
//! barycenters, and a test-family version of the Choquet order.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::spaces::{random_unit_vector, Point, SetDescriptor};

/// Atoms closer than this are merged by [`FiniteMeasure::deduplicated`].
pub const MERGE_DISTANCE: f64 = 1e-10;
const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("measure has no atoms")]
    Empty,
    #[error("{atoms} atoms but {weights} weights")]
    LengthMismatch { atoms: usize, weights: usize },
    #[error("weight {index} is negative or not finite: {value}")]
    BadWeight { index: usize, value: f64 },
    #[error("weights sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("atom {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("mixing parameter {0} outside [0, 1]")]
    BadMixing(f64),
}

/// `{π_i, x_i}`: atoms with simplex weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasure {
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

impl FiniteMeasure {
    pub fn new(atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self, MeasureError> {
        Self::check_shape(&atoms, &weights)?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(MeasureError::NotNormalized(total));
        }
        Ok(Self { atoms, weights })
    }

    /// Like [`FiniteMeasure::new`] but rescales the weights to sum to one.
    pub fn normalized(atoms: Vec<Point>, mut weights: Vec<f64>) -> Result<Self, MeasureError> {
        Self::check_shape(&atoms, &weights)?;
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(MeasureError::NotNormalized(total));
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
        Ok(Self { atoms, weights })
    }

    pub fn dirac(x: Point) -> Self {
        Self {
            atoms: vec![x],
            weights: vec![1.0],
        }
    }

    /// Equal weights on the given atoms.
    pub fn uniform(atoms: Vec<Point>) -> Result<Self, MeasureError> {
        let n = atoms.len();
        Self::normalized(atoms, vec![1.0; n])
    }

    fn check_shape(atoms: &[Point], weights: &[f64]) -> Result<(), MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::Empty);
        }
        if atoms.len() != weights.len() {
            return Err(MeasureError::LengthMismatch {
                atoms: atoms.len(),
                weights: weights.len(),
            });
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(MeasureError::BadWeight { index, value });
        }
        let expected = atoms[0].dim();
        if let Some((index, a)) = atoms.iter().enumerate().find(|(_, a)| a.dim() != expected) {
            return Err(MeasureError::DimensionMismatch {
                index,
                expected,
                got: a.dim(),
            });
        }
        Ok(())
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].dim()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Point)> {
        self.weights.iter().copied().zip(self.atoms.iter())
    }

    /// `∫ f dμ`.
    pub fn integrate<F: Fn(&Point) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(w, a)| w * f(a)).sum()
    }

    /// Drops atoms whose weight is at most `threshold` and renormalises.
    pub fn pruned(&self, threshold: f64) -> Self {
        let (atoms, weights): (Vec<_>, Vec<_>) = self
            .iter()
            .filter(|(w, _)| *w > threshold)
            .map(|(w, a)| (a.clone(), w))
            .unzip();
        if atoms.is_empty() {
            return self.clone();
        }
        Self::normalized(atoms, weights).expect("pruned measure keeps positive mass")
    }

    /// Merges atoms within [`MERGE_DISTANCE`] of each other, summing weights.
    /// The first atom of each cluster is kept.
    pub fn deduplicated(&self) -> Self {
        let mut atoms: Vec<Point> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (w, a) in self.iter() {
            match atoms
                .iter()
                .position(|b| euclid(a.coords(), b.coords()) < MERGE_DISTANCE)
            {
                Some(j) => weights[j] += w,
                None => {
                    atoms.push(a.clone());
                    weights.push(w);
                }
            }
        }
        Self { atoms, weights }
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl fmt::Display for FiniteMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (w, a)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({w}, {:?})", a.coords())?;
        }
        write!(f, "}}")
    }
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl Serialize for FiniteMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MeasureJson {
            atoms: self.atoms.iter().map(|a| a.coords().to_vec()).collect(),
            weights: self.weights.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteMeasure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = MeasureJson::deserialize(d)?;
        let atoms = raw
            .atoms
            .into_iter()
            .map(Point::new)
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        FiniteMeasure::new(atoms, raw.weights).map_err(D::Error::custom)
    }
}

/// `b(μ) = Σ π_i x_i`.
pub fn barycenter(mu: &FiniteMeasure) -> Point {
    let mut out = vec![0.0; mu.dim()];
    for (w, a) in mu.iter() {
        for (o, c) in out.iter_mut().zip(a.coords()) {
            *o += w * c;
        }
    }
    Point::from_vec_unchecked(out, mu.atoms[0].ambient_p())
}

/// `λμ + (1−λ)ν`; atoms are concatenated, zero weights are kept.
pub fn mix(
    mu: &FiniteMeasure,
    nu: &FiniteMeasure,
    lambda: f64,
) -> Result<FiniteMeasure, MeasureError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(MeasureError::BadMixing(lambda));
    }
    if mu.dim() != nu.dim() {
        return Err(MeasureError::DimensionMismatch {
            index: mu.len(),
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    let atoms = mu.atoms.iter().chain(&nu.atoms).cloned().collect();
    let weights = mu
        .weights
        .iter()
        .map(|w| lambda * w)
        .chain(nu.weights.iter().map(|w| (1.0 - lambda) * w))
        .collect();
    FiniteMeasure::normalized(atoms, weights)
}

/// Weight of the atoms failing `inside`, as a fraction of the total mass.
pub fn mass_outside<P: Fn(&Point) -> bool>(mu: &FiniteMeasure, inside: P) -> f64 {
    let total: f64 = mu.weights.iter().sum();
    let out: f64 = mu.iter().filter(|(_, a)| !inside(a)).map(|(w, _)| w).sum();
    out / total
}

/// A named continuous function the caller declares convex.
pub struct TestFunction {
    pub label: String,
    pub eval: Box<dyn Fn(&Point) -> f64 + Send + Sync>,
}

/// Finite stand-in for the cone of continuous bounded convex functions.
pub struct ConvexTestFamily {
    functions: Vec<TestFunction>,
}

impl ConvexTestFamily {
    pub fn new(functions: Vec<TestFunction>) -> Option<Self> {
        if functions.is_empty() {
            None
        } else {
            Some(Self { functions })
        }
    }

    pub fn single<F: Fn(&Point) -> f64 + Send + Sync + 'static>(label: &str, f: F) -> Self {
        Self {
            functions: vec![TestFunction {
                label: label.into(),
                eval: Box::new(f),
            }],
        }
    }

    /// Squared coordinates and squared norm.
    pub fn quadratics(dim: usize) -> Self {
        let mut functions: Vec<TestFunction> = (0..dim)
            .map(|i| TestFunction {
                label: format!("x{}^2", i + 1),
                eval: Box::new(move |p: &Point| p.coords()[i].powi(2)),
            })
            .collect();
        functions.push(TestFunction {
            label: "|x|^2".into(),
            eval: Box::new(|p: &Point| p.coords().iter().map(|c| c * c).sum()),
        });
        Self { functions }
    }

    pub fn functions(&self) -> &[TestFunction] {
        &self.functions
    }
}

/// Verdict of [`choquet_compare`], relative to the supplied family only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChoquetVerdict {
    DominatesOnFamily,
    DominatedOnFamily,
    EqualOnFamily,
    IncomparableOnFamily,
}

pub fn choquet_compare(
    mu: &FiniteMeasure,
    nu: &FiniteMeasure,
    fam: &ConvexTestFamily,
    tol: f64,
) -> ChoquetVerdict {
    if mu.dim() != nu.dim() {
        return ChoquetVerdict::IncomparableOnFamily;
    }
    let (bm, bn) = (barycenter(mu), barycenter(nu));
    if bm
        .coords()
        .iter()
        .zip(bn.coords())
        .any(|(a, b)| (a - b).abs() > tol)
    {
        return ChoquetVerdict::IncomparableOnFamily;
    }
    let diffs: Vec<f64> = fam
        .functions
        .iter()
        .map(|f| mu.integrate(|p| (f.eval)(p)) - nu.integrate(|p| (f.eval)(p)))
        .collect();
    let ge = diffs.iter().all(|d| *d >= -tol);
    let le = diffs.iter().all(|d| *d <= tol);
    match (ge, le) {
        (true, true) => ChoquetVerdict::EqualOnFamily,
        (true, false) => ChoquetVerdict::DominatesOnFamily,
        (false, true) => ChoquetVerdict::DominatedOnFamily,
        (false, false) => ChoquetVerdict::IncomparableOnFamily,
    }
}

/// Largest `t ≥ 0` (capped at `cap`) with `x + t·d` in the set, by bisection
/// on membership.
fn max_step(desc: &SetDescriptor, x: &[f64], d: &[f64], cap: f64) -> f64 {
    let at = |t: f64| -> Vec<f64> { x.iter().zip(d).map(|(a, b)| a + t * b).collect() };
    if desc.contains_slice(&at(cap), 0.0) {
        return cap;
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if desc.contains_slice(&at(mid), 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// A random decomposition of `x` inside `desc`, produced by repeatedly
/// splitting an atom `a` into `a + s₁d` and `a − s₂d` with weights chosen
/// so the barycenter is unchanged. `x` must belong to `desc`.
pub fn random_split_decomposition<R: Rng + ?Sized>(
    desc: &SetDescriptor,
    x: &Point,
    splits: usize,
    rng: &mut R,
) -> FiniteMeasure {
    let n = x.dim();
    let mut atoms: Vec<Vec<f64>> = vec![x.coords().to_vec()];
    let mut weights = vec![1.0];
    let cap = 4.0;
    for _ in 0..splits {
        let k = rng.gen_range(0..atoms.len());
        let a = atoms[k].clone();
        let d = if rng.gen_bool(0.5) {
            random_unit_vector(n, rng)
        } else {
            // sparse moves reach the vertices and far-out basis directions
            let mut d = vec![0.0; n];
            d[rng.gen_range(0..n)] = 1.0;
            if n > 1 && rng.gen_bool(0.5) {
                d[rng.gen_range(0..n)] -= 1.0;
            }
            d
        };
        let neg: Vec<f64> = d.iter().map(|v| -v).collect();
        let up = max_step(desc, &a, &d, cap);
        let down = max_step(desc, &a, &neg, cap);
        if up <= 1e-12 || down <= 1e-12 {
            continue;
        }
        // full steps with probability 1/2 put atoms on the boundary
        let s1 = if rng.gen_bool(0.5) {
            up
        } else {
            up * rng.gen::<f64>()
        };
        let s2 = if rng.gen_bool(0.5) {
            down
        } else {
            down * rng.gen::<f64>()
        };
        if s1 <= 1e-12 || s2 <= 1e-12 {
            continue;
        }
        let alpha = s2 / (s1 + s2);
        let w = weights[k];
        atoms[k] = a.iter().zip(&d).map(|(c, v)| c + s1 * v).collect();
        weights[k] = w * alpha;
        atoms.push(a.iter().zip(&d).map(|(c, v)| c - s2 * v).collect());
        weights.push(w * (1.0 - alpha));
    }
    let p = x.ambient_p();
    let atoms = atoms
        .into_iter()
        .map(|c| Point::from_vec_unchecked(c, p))
        .collect();
    FiniteMeasure::normalized(atoms, weights).expect("split weights are positive")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::canonical_basis;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn barycenter_examples() {
        let e1 = canonical_basis(1, 2).unwrap();
        let e2 = canonical_basis(2, 2).unwrap();
        let mu = FiniteMeasure::new(vec![e1, e2], vec![0.5, 0.5]).unwrap();
        assert_eq!(barycenter(&mu).coords(), &[0.5, 0.5]);
        let x = pt(&[0.3, -2.0, 7.0]);
        assert_eq!(barycenter(&FiniteMeasure::dirac(x.clone())), x);
        let n = 9;
        let mu = FiniteMeasure::uniform((1..=n).map(|i| canonical_basis(i, n).unwrap()).collect())
            .unwrap();
        for c in barycenter(&mu).coords() {
            assert!((c - 1.0 / n as f64).abs() < 1e-16);
        }
    }

    #[test]
    fn construction_errors() {
        assert_eq!(FiniteMeasure::new(vec![], vec![]), Err(MeasureError::Empty));
        assert!(matches!(
            FiniteMeasure::new(vec![pt(&[1.0])], vec![0.5]),
            Err(MeasureError::NotNormalized(_))
        ));
        assert!(matches!(
            FiniteMeasure::new(vec![pt(&[1.0]), pt(&[2.0])], vec![1.5, -0.5]),
            Err(MeasureError::BadWeight { index: 1, .. })
        ));
        assert!(matches!(
            FiniteMeasure::new(vec![pt(&[1.0]), pt(&[2.0, 1.0])], vec![0.5, 0.5]),
            Err(MeasureError::DimensionMismatch { index: 1, .. })
        ));
    }

    #[test]
    fn mix_examples() {
        let (x, y) = (pt(&[0.0, 1.0]), pt(&[2.0, 3.0]));
        let m = mix(
            &FiniteMeasure::dirac(x.clone()),
            &FiniteMeasure::dirac(y.clone()),
            0.5,
        )
        .unwrap();
        assert_eq!(m.atoms(), &[x.clone(), y.clone()]);
        assert_eq!(m.weights(), &[0.5, 0.5]);

        let mu = FiniteMeasure::uniform(vec![x.clone(), y.clone()]).unwrap();
        let nu = FiniteMeasure::uniform(vec![pt(&[5.0, 5.0]), pt(&[-1.0, 0.0])]).unwrap();
        assert_eq!(mix(&mu, &nu, 1.0).unwrap().pruned(0.0), mu);
        let m = mix(&mu, &nu, 0.25).unwrap();
        assert_eq!(m.len(), 4);
        for (w, e) in m.weights().iter().zip([0.125, 0.125, 0.375, 0.375]) {
            assert!((w - e).abs() < 1e-15);
        }
        assert_eq!(mix(&mu, &nu, 1.5), Err(MeasureError::BadMixing(1.5)));
    }

    #[test]
    fn choquet_examples() {
        let fam = ConvexTestFamily::single("t^2", |p| p.coords()[0].powi(2));
        let spread = FiniteMeasure::uniform(vec![pt(&[0.0]), pt(&[1.0])]).unwrap();
        let point = FiniteMeasure::dirac(pt(&[0.5]));
        assert_eq!(
            choquet_compare(&spread, &point, &fam, 1e-12),
            ChoquetVerdict::DominatesOnFamily
        );
        assert_eq!(
            choquet_compare(&point, &spread, &fam, 1e-12),
            ChoquetVerdict::DominatedOnFamily
        );
        let q = ConvexTestFamily::quadratics(2);
        assert_eq!(
            choquet_compare(&spread, &spread, &fam, 1e-12),
            ChoquetVerdict::EqualOnFamily
        );
        let d1 = FiniteMeasure::dirac(canonical_basis(1, 2).unwrap());
        let d2 = FiniteMeasure::dirac(canonical_basis(2, 2).unwrap());
        assert_eq!(
            choquet_compare(&d1, &d2, &q, 1e-12),
            ChoquetVerdict::IncomparableOnFamily
        );
    }

    #[test]
    fn mass_outside_examples() {
        let (a, b) = (pt(&[0.0]), pt(&[1.0]));
        let mu = FiniteMeasure::new(vec![a.clone(), b.clone()], vec![0.3, 0.7]).unwrap();
        assert_eq!(mass_outside(&mu, |_| true), 0.0);
        assert_eq!(
            mass_outside(&FiniteMeasure::dirac(b.clone()), |p| p.coords()[0] < 0.5),
            1.0
        );
        assert_eq!(mass_outside(&mu, |p| p.coords()[0] < 0.5), 0.7);
    }

    #[test]
    fn dedup_merges_near_atoms() {
        let mu = FiniteMeasure::new(
            vec![pt(&[1.0, 0.0]), pt(&[1.0 + 1e-12, 0.0]), pt(&[0.0, 1.0])],
            vec![0.25, 0.25, 0.5],
        )
        .unwrap();
        let d = mu.deduplicated();
        assert_eq!(d.len(), 2);
        assert_eq!(d.weights(), &[0.5, 0.5]);
        let (bd, bm) = (barycenter(&d), barycenter(&mu));
        assert!(bd.dist(&bm) <= MERGE_DISTANCE);
    }

    #[test]
    fn measure_json_shape() {
        let mu =
            FiniteMeasure::new(vec![pt(&[1.0, 0.0]), pt(&[0.0, 1.0])], vec![0.25, 0.75]).unwrap();
        let s = serde_json::to_string(&mu).unwrap();
        assert_eq!(
            s,
            r#"{"atoms":[[1.0,0.0],[0.0,1.0]],"weights":[0.25,0.75]}"#
        );
        assert_eq!(serde_json::from_str::<FiniteMeasure>(&s).unwrap(), mu);
        assert!(
            serde_json::from_str::<FiniteMeasure>(r#"{"atoms":[[1]],"weights":[0.5]}"#).is_err()
        );
    }

    #[test]
    fn split_decompositions_stay_in_set_and_keep_barycenter() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for desc in [
            SetDescriptor::l1_cone(8),
            SetDescriptor::unit_ball(3),
            SetDescriptor::lp_cone(2.0, 5).unwrap(),
        ] {
            for _ in 0..50 {
                let x = Point::new(desc.sample_point(&mut rng)).unwrap();
                let mu = random_split_decomposition(&desc, &x, 25, &mut rng);
                assert!(mu.len() > 1);
                for a in mu.atoms() {
                    assert!(desc.contains_slice(a.coords(), 1e-12));
                }
                let b = barycenter(&mu);
                assert!(b
                    .coords()
                    .iter()
                    .zip(x.coords())
                    .all(|(u, v)| (u - v).abs() < 1e-12));
            }
        }
    }

    fn arb_measure(dim: usize) -> impl Strategy<Value = FiniteMeasure> {
        prop::collection::vec(
            (prop::collection::vec(-5.0f64..5.0, dim), 0.01f64..1.0),
            1..6,
        )
        .prop_map(|v| {
            let (atoms, w): (Vec<_>, Vec<_>) = v
                .into_iter()
                .map(|(a, w)| (Point::new(a).unwrap(), w))
                .unzip();
            FiniteMeasure::normalized(atoms, w).unwrap()
        })
    }

    proptest! {
        #[test]
        fn mixing_is_affine_on_barycenters(mu in arb_measure(3), nu in arb_measure(3), l in 0.0f64..=1.0) {
            let m = mix(&mu, &nu, l).unwrap();
            let lhs = barycenter(&m);
            let (bm, bn) = (barycenter(&mu), barycenter(&nu));
            for i in 0..3 {
                let rhs = l * bm.coords()[i] + (1.0 - l) * bn.coords()[i];
                prop_assert!((lhs.coords()[i] - rhs).abs() <= 1e-12);
            }
        }

        #[test]
        fn mutual_domination_means_equal(mu in arb_measure(2), nu in arb_measure(2)) {
            let fam = ConvexTestFamily::quadratics(2);
            let a = choquet_compare(&mu, &nu, &fam, 1e-9);
            let b = choquet_compare(&nu, &mu, &fam, 1e-9);
            if a == ChoquetVerdict::DominatesOnFamily {
                prop_assert_ne!(b, ChoquetVerdict::DominatesOnFamily);
            }
            if a == ChoquetVerdict::EqualOnFamily {
                prop_assert_eq!(b, ChoquetVerdict::EqualOnFamily);
            }
        }

        #[test]
        fn mass_outside_is_a_probability(mu in arb_measure(2), c in -5.0f64..5.0) {
            let m = mass_outside(&mu, |p| p.coords()[0] < c);
            prop_assert!((0.0..=1.0).contains(&m));
            prop_assert_eq!(mass_outside(&mu, |_| true), 0.0);
        }
    }
}
