//! Named regression scenarios, each running one construction end to end and
//! comparing selected outputs with declared expectations.

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use mu_kit_core::hull::{
    co_f_search, co_f_simplex_exact, lsc_probe, uniform_prefix_point, HullConfig, ObjectiveFunction,
};
use mu_kit_core::measures::{
    choquet_compare, random_split_decomposition, ConvexTestFamily, FiniteMeasure,
};
use mu_kit_core::mucert::{
    ap_refute, delta_p_refute, hilbert_cube_classify, pointed_cone_classify,
    polyhedral_equivalence_check, tail_certificate_check, AffineFunctional, ConeVerdict,
    CubeVerdict, TailVerdict,
};
use mu_kit_core::quantum::{
    roof_convexity_certificate, roof_optimize, DensityMatrix, RoofConfig, RoofFunction,
};
use mu_kit_core::spaces::{canonical_basis, Point, SetDescriptor};
use mu_kit_core::stability::{
    ball_bound, ball_bound_adversary, ball_hull_continuity, delta_p_split, extreme_point_separator,
    midpoint_openness_probe,
};

use crate::report::{num, Check, Expect, Report};

/// Settings shared by every scenario run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunContext {
    pub seed: u64,
    /// Replaces the declared tolerance of every `Near` and `AtMost` check.
    pub tol: Option<f64>,
}

pub struct Scenario {
    pub name: &'static str,
    pub module: &'static str,
    /// What the scenario demonstrates.
    pub claim: &'static str,
    pub params: fn() -> Value,
    pub expected: &'static [(&'static str, Expect)],
    pub run: fn(&RunContext, &Value) -> Result<Value>,
}

impl Scenario {
    pub fn matches(&self, filter: &str) -> bool {
        self.name.contains(filter) || self.module.contains(filter)
    }

    pub fn summary(&self) -> Value {
        let expected: Map<String, Value> = self
            .expected
            .iter()
            .map(|(k, e)| {
                (
                    k.to_string(),
                    serde_json::to_value(e).expect("expectation serialises"),
                )
            })
            .collect();
        json!({
            "name": self.name,
            "module": self.module,
            "claim": self.claim,
            "parameters": (self.params)(),
            "expected": expected,
        })
    }
}

fn f(params: &Value, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| anyhow!("parameter {key:?} must be a number"))
}

fn u(params: &Value, key: &str) -> Result<usize> {
    params
        .get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| anyhow!("parameter {key:?} must be a nonnegative integer"))
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library types serialise")
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn bell(sign: f64) -> Result<DensityMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(DensityMatrix::from_pure(
        &[c(s), c(0.0), c(0.0), c(sign * s)],
        (2, 2),
    )?)
}

fn roof_cfg(ctx: &RunContext, params: &Value) -> RoofConfig {
    RoofConfig {
        m: params.get("m").and_then(Value::as_u64).map(|m| m as usize),
        restarts: params
            .get("restarts")
            .and_then(Value::as_u64)
            .map_or(16, |r| r as usize),
        seed: ctx.seed,
        ..RoofConfig::default()
    }
}

fn roof_alpha(params: &Value) -> Result<RoofFunction> {
    Ok(RoofFunction::Alpha {
        alpha: f(params, "alpha")?,
    })
}

fn lsc_gap(ctx: &RunContext, params: &Value) -> Result<Value> {
    let dim = u(params, "dim")?;
    let p = f(params, "p")?;
    let desc = SetDescriptor::lp_cone(p, dim)?;
    let fun = ObjectiveFunction::one_minus_norm(p);
    let seq = (1..=dim)
        .map(|k| uniform_prefix_point(k, dim, p))
        .collect::<Result<Vec<_>, _>>()?;
    let limit = Point::zeros(dim).retag(p);
    let cfg = HullConfig {
        seed: ctx.seed,
        restarts: 4,
        samples: 300,
        ..HullConfig::default()
    };
    let r = lsc_probe(&desc, &fun, &seq, &limit, &cfg)?;
    Ok(to_json(&r))
}

fn hull_concave_simplex(ctx: &RunContext, params: &Value) -> Result<Value> {
    let dim = u(params, "dim")?;
    let desc = SetDescriptor::standard_simplex(dim);
    let fun = ObjectiveFunction::neg_sq_norm();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let x = Point::new(desc.sample_point(&mut rng))?;
    // vertex values: f(0) = 0 and f(e_i) = −1
    let mut vals = vec![0.0];
    let mut lambda = vec![1.0 - x.coords().iter().sum::<f64>()];
    vals.resize(dim + 1, -1.0);
    lambda.extend_from_slice(x.coords());
    let exact = co_f_simplex_exact(&vals, &lambda)?;
    let cfg = HullConfig {
        seed: ctx.seed,
        ..HullConfig::default()
    };
    let s = co_f_search(&desc, &fun, &x, &cfg)?;
    Ok(json!({
        "x": x.coords(),
        "value": num(s.value),
        "exact": num(exact),
        "error": num((s.value - exact).abs()),
        "lower_bound": s.lower_bound.map(|b| num(b.value)),
        "support_size": s.decomposition.len(),
    }))
}

fn choquet_split(ctx: &RunContext, params: &Value) -> Result<Value> {
    let dim = u(params, "dim")?;
    let desc = SetDescriptor::standard_simplex(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let x = Point::new(desc.sample_point(&mut rng))?;
    let mu = random_split_decomposition(&desc, &x, u(params, "splits")?, &mut rng);
    let nu = FiniteMeasure::dirac(x.clone());
    let verdict = choquet_compare(&mu, &nu, &ConvexTestFamily::quadratics(dim), 1e-12);
    Ok(json!({ "x": x.coords(), "atoms": mu.len(), "verdict": to_json(&verdict) }))
}

fn deltap_refute(_: &RunContext, params: &Value) -> Result<Value> {
    let w = delta_p_refute(
        f(params, "p")?,
        u(params, "r")?,
        f(params, "eps")?,
        u(params, "prefix")?,
        u(params, "dim")?,
    )?;
    Ok(json!({
        "outside_mass": num(w.witness.outside_mass),
        "block": w.block,
        "block_start": w.block_start,
        "block_len": w.block_len,
        "power_sum": num(w.power_sum),
    }))
}

fn ap_refutation(_: &RunContext, params: &Value) -> Result<Value> {
    let w = ap_refute(
        f(params, "p")?,
        u(params, "prefix")?,
        u(params, "dim")?,
        None,
    )?;
    Ok(json!({
        "outside_mass": num(w.witness.outside_mass),
        "scale": num(w.scale),
        "point_norm": num(w.point_norm),
        "block_start": w.block_start,
        "block_end": w.block_end,
        "block_sum": num(w.block_sum),
    }))
}

fn l1_tail(ctx: &RunContext, params: &Value) -> Result<Value> {
    let cases = u(params, "cases")?;
    let max_dim = u(params, "max_dim")?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let (mut failures, mut worst) = (0usize, 0.0f64);
    for _ in 0..cases {
        let dim = rand::Rng::gen_range(&mut rng, 1..=max_dim);
        let desc = SetDescriptor::l1_cone(dim);
        let x = Point::new(desc.sample_point(&mut rng))?.retag(1.0);
        let mu = random_split_decomposition(&desc, &x, 12, &mut rng);
        let eps = rand::Rng::gen_range(&mut rng, 0.01..0.99);
        match tail_certificate_check(&AffineFunctional::index_weighted(dim), &x, &mu, eps)? {
            TailVerdict::Pass { outside_mass, .. } => worst = worst.max(outside_mass / eps),
            TailVerdict::Fail { .. } => failures += 1,
        }
    }
    Ok(json!({ "cases": cases, "failures": failures, "max_outside_over_eps": num(worst) }))
}

fn cube_verdict_name(v: &CubeVerdict) -> &'static str {
    match v {
        CubeVerdict::CompactCertificate { .. } => "CompactCertificate",
        CubeVerdict::RefutationBlocks { .. } => "RefutationBlocks",
        CubeVerdict::Inconclusive { .. } => "Inconclusive",
    }
}

fn hilbert_cube(_: &RunContext, params: &Value) -> Result<Value> {
    let dim = u(params, "dim")?;
    let exponent = f(params, "exponent")?;
    let a: Vec<f64> = match params.get("decay").and_then(Value::as_str) {
        Some("geometric") => (1..=dim).map(|i| exponent.powi(-(i as i32))).collect(),
        Some("power") => (1..=dim).map(|i| (i as f64).powf(-exponent)).collect(),
        other => bail!("decay must be \"geometric\" or \"power\", got {other:?}"),
    };
    let v = hilbert_cube_classify(&a, 1e-12)?;
    Ok(json!({ "verdict": cube_verdict_name(&v), "detail": to_json(&v) }))
}

fn points(params: &Value, key: &str) -> Result<Vec<Point>> {
    let rows: Vec<Vec<f64>> =
        serde_json::from_value(params.get(key).cloned().unwrap_or(Value::Null))
            .context(format!("parameter {key:?}"))?;
    Ok(rows
        .into_iter()
        .map(Point::new)
        .collect::<Result<Vec<_>, _>>()?)
}

fn cone(_: &RunContext, params: &Value) -> Result<Value> {
    let gens = points(params, "generators")?;
    let offset = Point::zeros(gens.first().map_or(0, Point::dim));
    let v = pointed_cone_classify(&gens)?;
    let name = match v {
        ConeVerdict::Pointed { .. } => "Pointed",
        ConeVerdict::ContainsLine { .. } => "ContainsLine",
        ConeVerdict::Inconclusive { .. } => "Inconclusive",
    };
    let eq = polyhedral_equivalence_check(&gens, &offset)?;
    Ok(
        json!({ "verdict": name, "detail": to_json(&v), "equivalences": to_json(&eq), "agree": eq.agree() }),
    )
}

fn ball_bound_closed_form(_: &RunContext, params: &Value) -> Result<Value> {
    let z = Point::new(vec![f(params, "norm")?, 0.0, 0.0])?;
    Ok(json!({ "r": num(ball_bound(&z, f(params, "delta")?)?) }))
}

fn ball_bound_lp_adversary(ctx: &RunContext, params: &Value) -> Result<Value> {
    let dim = u(params, "dim")?;
    let mut coords = vec![0.0; dim];
    coords[0] = f(params, "norm")?;
    let rep = ball_bound_adversary(
        &Point::new(coords)?,
        f(params, "delta")?,
        u(params, "trials")?,
        ctx.seed,
    )?;
    Ok(to_json(&rep))
}

fn split_stability(ctx: &RunContext, params: &Value) -> Result<Value> {
    let dim = u(params, "dim")?;
    let eps = f(params, "eps")?;
    let desc = SetDescriptor::delta_p(2.0, dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let a = desc.sample_point(&mut rng);
    let b = desc.sample_point(&mut rng);
    // move the midpoint by eps/12 along e_1 − e_2, staying inside Δ_2
    let mut z: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
    let t = (eps / 12.0 / std::f64::consts::SQRT_2).min(z[1]);
    z[0] += t;
    z[1] -= t;
    let s = delta_p_split(
        2.0,
        &Point::new(a)?,
        &Point::new(b)?,
        &Point::new(z.clone())?,
        eps,
    )?;
    let exact = (0..dim).all(|i| (s.x.coords()[i] + s.y.coords()[i]) * 0.5 == z[i]);
    Ok(json!({
        "eps": num(eps),
        "achieved_eps": num(s.achieved_eps),
        "achieved_below_eps": s.achieved_eps < eps,
        "exact_midpoint": exact,
        "head_dim": s.head_dim,
        "tau": num(s.tau),
        "lambda": num(s.lambda),
    }))
}

fn openness_probe(ctx: &RunContext, params: &Value) -> Result<Value> {
    let dim = u(params, "dim")?;
    let desc = SetDescriptor::standard_simplex(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let a = Point::new(desc.sample_point(&mut rng))?;
    let b = Point::new(desc.sample_point(&mut rng))?;
    let c = a.add(&b).scaled(0.5);
    let dir: Vec<f64> = (0..dim)
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let steps = u(params, "steps")?;
    let zs: Vec<Point> = (1..=steps)
        .map(|k| {
            let t =
                0.5f64.powi(k as i32) * c.coords().iter().copied().fold(f64::INFINITY, f64::min);
            Point::new(
                c.coords()
                    .iter()
                    .zip(&dir)
                    .map(|(v, d)| v + t * d)
                    .collect(),
            )
        })
        .collect::<Result<_, _>>()?;
    let eps: Vec<f64> = zs.iter().map(|z| 10.0 * z.dist(&c)).collect();
    let recs = midpoint_openness_probe(&desc, &a, &b, &zs, &eps);
    Ok(json!({ "all_success": recs.iter().all(|r| r.success), "records": to_json(&recs) }))
}

fn continuity(ctx: &RunContext, params: &Value) -> Result<Value> {
    let dim = u(params, "dim")?;
    let x = canonical_basis(1, dim)?;
    let zs: Vec<Point> = (1..=u(params, "steps")?)
        .map(|k| x.scaled(1.0 - 0.5f64.powi(k as i32)))
        .collect();
    let cfg = HullConfig {
        seed: ctx.seed,
        restarts: 2,
        samples: 200,
        ..HullConfig::default()
    };
    let recs = ball_hull_continuity(&ObjectiveFunction::one_minus_norm(2.0), &x, &zs, 1.0, &cfg)?;
    Ok(json!({
        "all_within_bound": recs.iter().all(|r| r.within_bound),
        "final_bound": num(recs.last().map_or(f64::NAN, |r| r.bound)),
        "records": to_json(&recs),
    }))
}

fn separator(_: &RunContext, _: &Value) -> Result<Value> {
    let e1 = canonical_basis(1, 2)?;
    let e2 = canonical_basis(2, 2)?;
    let mid = e1.add(&e2).scaled(0.5);
    let s = extreme_point_separator(&mid, &e1, &e2)?;
    Ok(to_json(&s))
}

fn roof_state(ctx: &RunContext, params: &Value, omega: &DensityMatrix) -> Result<Value> {
    let r = roof_optimize(omega, roof_alpha(params)?, &roof_cfg(ctx, params))?;
    Ok(json!({
        "upper_bound": num(r.upper_bound),
        "components": r.decomposition.len(),
        "restarts_used": r.restarts_used,
    }))
}

fn phi_plus(ctx: &RunContext, params: &Value) -> Result<Value> {
    roof_state(ctx, params, &bell(1.0)?)
}

fn product_state(ctx: &RunContext, params: &Value) -> Result<Value> {
    roof_state(ctx, params, &DensityMatrix::basis_product(0, 1, (2, 2))?)
}

fn separable_mixture(ctx: &RunContext, params: &Value) -> Result<Value> {
    let p00 = DensityMatrix::basis_product(0, 0, (2, 2))?;
    let p11 = DensityMatrix::basis_product(1, 1, (2, 2))?;
    roof_state(
        ctx,
        params,
        &DensityMatrix::mixture(&[(0.5, &p00), (0.5, &p11)])?,
    )
}

fn bell_mixture(ctx: &RunContext, params: &Value) -> Result<Value> {
    let w = f(params, "weight")?;
    let omega = DensityMatrix::mixture(&[(w, &bell(1.0)?), (1.0 - w, &bell(-1.0)?)])?;
    roof_state(ctx, params, &omega)
}

fn roof_convexity(ctx: &RunContext, params: &Value) -> Result<Value> {
    let fun = roof_alpha(params)?;
    let cfg = roof_cfg(ctx, params);
    let phi = bell(1.0)?;
    let p00 = DensityMatrix::basis_product(0, 0, (2, 2))?;
    let (r1, r2) = (
        roof_optimize(&phi, fun, &cfg)?,
        roof_optimize(&p00, fun, &cfg)?,
    );
    let cert = roof_convexity_certificate(fun, &[(0.5, &r1), (0.5, &r2)])?;
    let mix = DensityMatrix::mixture(&[(0.5, &phi), (0.5, &p00)])?;
    let direct = roof_optimize(&mix, fun, &cfg)?;
    Ok(json!({
        "certificate": num(cert.upper_bound),
        "optimizer": num(direct.upper_bound),
        "optimizer_minus_certificate": num(direct.upper_bound - cert.upper_bound),
    }))
}

const EMPTY: fn() -> Value = || json!({});

pub static SCENARIOS: &[Scenario] = &[
    Scenario {
        name: "example-1-lsc-gap",
        module: "hull_solver",
        claim: "on A_2 the hull of 1 − ‖x‖ is 0 at (1/k, …, 1/k) but 1 at the extreme point 0",
        params: || json!({ "dim": 16, "p": 2.0 }),
        expected: &[("gap", Expect::Near { value: 1.0, tol: 1e-9 })],
        run: lsc_gap,
    },
    Scenario {
        name: "hull-concave-simplex",
        module: "hull_solver",
        claim: "the hull search reproduces the vertex formula for a concave function on a simplex",
        params: || json!({ "dim": 6 }),
        expected: &[("error", Expect::AtMost { value: 0.0, tol: 1e-6 })],
        run: hull_concave_simplex,
    },
    Scenario {
        name: "choquet-split-dominates",
        module: "measures",
        claim: "splitting atoms moves a measure up in the Choquet order",
        params: || json!({ "dim": 4, "splits": 8 }),
        expected: &[("verdict", Expect::Verdict { value: "DominatesOnFamily" })],
        run: choquet_split,
    },
    Scenario {
        name: "deltap-not-mu-compact",
        module: "mu_cert",
        claim: "points of a compact subset of Δ_2 have decompositions with all mass past any prefix",
        params: || json!({ "p": 2.0, "r": 4, "eps": 0.5, "prefix": 100, "dim": 400 }),
        expected: &[
            ("outside_mass", Expect::Near { value: 1.0, tol: 0.0 }),
            ("power_sum", Expect::AtMost { value: 0.25, tol: 1e-12 }),
        ],
        run: deltap_refute,
    },
    Scenario {
        name: "ap-not-pointwise-mu-compact",
        module: "mu_cert",
        claim: "a small point of A_2 keeps a third of its mass on basis vectors past any prefix",
        params: || json!({ "p": 2.0, "prefix": 10, "dim": 200 }),
        expected: &[("outside_mass", Expect::Between { lo: 1.0 / 3.0, hi: 2.0 / 3.0 })],
        run: ap_refutation,
    },
    Scenario {
        name: "l1-cone-tail-certificate",
        module: "mu_cert",
        claim: "h_i = i controls the tail mass of every decomposition in the ℓ_1 cone",
        params: || json!({ "cases": 500, "max_dim": 128 }),
        expected: &[("failures", Expect::Near { value: 0.0, tol: 0.0 })],
        run: l1_tail,
    },
    Scenario {
        name: "hilbert-cube-compact",
        module: "mu_cert",
        claim: "a square-summable box is compact",
        params: || json!({ "dim": 64, "decay": "geometric", "exponent": 2.0 }),
        expected: &[("verdict", Expect::Verdict { value: "CompactCertificate" })],
        run: hilbert_cube,
    },
    Scenario {
        name: "hilbert-cube-not-compact",
        module: "mu_cert",
        claim: "half-widths i^{-1/2} give far-apart points and no compact carrier",
        params: || json!({ "dim": 4096, "decay": "power", "exponent": 0.5 }),
        expected: &[("verdict", Expect::Verdict { value: "RefutationBlocks" })],
        run: hilbert_cube,
    },
    Scenario {
        name: "cone-orthant-pointed",
        module: "mu_cert",
        claim: "the positive orthant is pointed and all four characterisations agree",
        params: || json!({ "generators": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] }),
        expected: &[("verdict", Expect::Verdict { value: "Pointed" }), ("agree", Expect::Holds)],
        run: cone,
    },
    Scenario {
        name: "cone-with-line",
        module: "mu_cert",
        claim: "a half-plane contains a line and all four characterisations agree",
        params: || json!({ "generators": [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] }),
        expected: &[("verdict", Expect::Verdict { value: "ContainsLine" }), ("agree", Expect::Holds)],
        run: cone,
    },
    Scenario {
        name: "lemma-2-ball-bound",
        module: "stability",
        claim: "closed form of the unit-ball mass bound at ‖z‖ = 0.9, δ = 0.5",
        params: || json!({ "norm": 0.9, "delta": 0.5 }),
        expected: &[("r", Expect::Near { value: 0.25, tol: 1e-15 })],
        run: ball_bound_closed_form,
    },
    Scenario {
        name: "lemma-2-adversary-d3",
        module: "stability",
        claim: "no LP-optimised measure beats the unit-ball mass bound",
        params: || json!({ "norm": 0.9, "delta": 0.5, "dim": 3, "trials": 200 }),
        expected: &[("max_outside_mass", Expect::AtMost { value: 0.75, tol: 1e-7 })],
        run: ball_bound_lp_adversary,
    },
    Scenario {
        name: "deltap-split-stability",
        module: "stability",
        claim: "Δ_2 splits a perturbed midpoint exactly with both parts close to the originals",
        params: || json!({ "dim": 64, "eps": 0.05 }),
        expected: &[("exact_midpoint", Expect::Holds), ("achieved_below_eps", Expect::Holds)],
        run: split_stability,
    },
    Scenario {
        name: "simplex-midpoint-openness",
        module: "stability",
        claim: "the LP splitter keeps up with a converging sequence of midpoints in a simplex",
        params: || json!({ "dim": 6, "steps": 10 }),
        expected: &[("all_success", Expect::Holds)],
        run: openness_probe,
    },
    Scenario {
        name: "ball-hull-continuity",
        module: "stability",
        claim: "the hull of 1 − ‖x‖ on the unit ball stays within the mass-bound estimate near the sphere",
        params: || json!({ "dim": 3, "steps": 20 }),
        expected: &[
            ("all_within_bound", Expect::Holds),
            ("final_bound", Expect::AtMost { value: 0.05, tol: 0.0 }),
        ],
        run: continuity,
    },
    Scenario {
        name: "extreme-point-separator",
        module: "stability",
        claim: "−⟨y, e_1 − e_2⟩² separates the midpoint of e_1 and e_2 by ‖e_1 − e_2‖⁴/4",
        params: EMPTY,
        expected: &[("gap", Expect::Near { value: 1.0, tol: 1e-15 })],
        run: separator,
    },
    Scenario {
        name: "phi-plus-f2",
        module: "quantum_roof",
        claim: "the maximally entangled qubit pair has f_2 roof 1",
        params: || json!({ "alpha": 2.0 }),
        expected: &[("upper_bound", Expect::Near { value: 1.0, tol: 1e-8 })],
        run: phi_plus,
    },
    Scenario {
        name: "product-state-f2",
        module: "quantum_roof",
        claim: "a product pure state has roof 0",
        params: || json!({ "alpha": 2.0 }),
        expected: &[("upper_bound", Expect::Near { value: 0.0, tol: 1e-12 })],
        run: product_state,
    },
    Scenario {
        name: "separable-mixture-f2",
        module: "quantum_roof",
        claim: "an equal mixture of |00⟩ and |11⟩ is separable",
        params: || json!({ "alpha": 2.0 }),
        expected: &[("upper_bound", Expect::AtMost { value: 0.0, tol: 1e-8 })],
        run: separable_mixture,
    },
    Scenario {
        name: "bell-mixture-f2",
        module: "quantum_roof",
        claim: "3/4 Φ+ + 1/4 Φ− has f_2 roof 0.25 (checked against brute-force sampling)",
        params: || json!({ "alpha": 2.0, "weight": 0.75, "m": 4, "restarts": 64 }),
        expected: &[("upper_bound", Expect::Near { value: 0.25, tol: 1e-3 })],
        run: bell_mixture,
    },
    Scenario {
        name: "roof-convexity-certificate",
        module: "quantum_roof",
        claim: "concatenated decompositions bound the roof of a mixture by the mixed bounds",
        params: || json!({ "alpha": 2.0 }),
        expected: &[
            ("certificate", Expect::Near { value: 0.5, tol: 1e-12 }),
            ("optimizer_minus_certificate", Expect::AtMost { value: 0.0, tol: 1e-8 }),
        ],
        run: roof_convexity,
    },
];

pub fn find(name: &str) -> Option<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name == name)
}

/// Applies `key=value` overrides; values parse as JSON, else as strings.
pub fn apply_overrides(mut params: Value, overrides: &[String]) -> Result<Value> {
    let map = params
        .as_object_mut()
        .ok_or_else(|| anyhow!("scenario parameters are not an object"))?;
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| anyhow!("override {o:?} is not key=value"))?;
        if !map.contains_key(k) {
            bail!(
                "unknown parameter {k:?}; known: {}",
                map.keys().cloned().collect::<Vec<_>>().join(", ")
            );
        }
        let v = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        map.insert(k.to_string(), v);
    }
    Ok(params)
}

/// Runs a scenario and compares its outputs with the expectations.
pub fn run(s: &Scenario, ctx: &RunContext, overrides: &[String]) -> Result<Report> {
    let params = apply_overrides((s.params)(), overrides)?;
    let expected: Vec<(&str, Expect)> = s
        .expected
        .iter()
        .map(|(k, e)| (*k, ctx.tol.map_or(*e, |t| e.with_tol(t))))
        .collect();
    let outputs = (s.run)(ctx, &params).with_context(|| format!("scenario {}", s.name))?;
    let checks: Vec<Check> = expected
        .iter()
        .map(|(k, e)| {
            let measured = outputs.get(*k).cloned().unwrap_or(Value::Null);
            Check {
                quantity: k.to_string(),
                pass: e.check(&measured),
                measured,
                expected: *e,
            }
        })
        .collect();
    let tolerances: Map<String, Value> = expected
        .iter()
        .map(|(k, e)| {
            (
                k.to_string(),
                serde_json::to_value(e).expect("expectation serialises"),
            )
        })
        .collect();
    let mut inputs = params;
    inputs["seed"] = json!(ctx.seed);
    let mut report = Report::new(inputs, outputs, Value::Object(tolerances));
    report.scenario = Some(s.name.to_string());
    report.pass = Some(checks.iter().all(|c| c.pass));
    report.checks = checks;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn registry_is_well_formed() {
        assert!(SCENARIOS.len() >= 12);
        let names: HashSet<_> = SCENARIOS.iter().map(|s| s.name).collect();
        assert_eq!(names.len(), SCENARIOS.len());
        let modules: HashSet<_> = SCENARIOS.iter().map(|s| s.module).collect();
        for m in [
            "hull_solver",
            "measures",
            "mu_cert",
            "stability",
            "quantum_roof",
        ] {
            assert!(modules.contains(m), "{m} has no scenario");
        }
        for s in SCENARIOS {
            let p = (s.params)();
            assert!(p.is_object(), "{}", s.name);
            assert!(!s.expected.is_empty(), "{}", s.name);
        }
    }

    #[test]
    fn overrides() {
        let p = json!({ "dim": 4, "decay": "power" });
        let q = apply_overrides(p.clone(), &["dim=8".into(), "decay=geometric".into()]).unwrap();
        assert_eq!(q, json!({ "dim": 8, "decay": "geometric" }));
        assert!(apply_overrides(p.clone(), &["nope=1".into()]).is_err());
        assert!(apply_overrides(p, &["dim".into()]).is_err());
    }

    #[test]
    fn every_scenario_passes() {
        let ctx = RunContext {
            seed: 0x5EED,
            tol: None,
        };
        for s in SCENARIOS {
            let r = run(s, &ctx, &[]).unwrap();
            assert_eq!(r.pass, Some(true), "{}: {:?}", s.name, r.checks);
        }
    }
}
