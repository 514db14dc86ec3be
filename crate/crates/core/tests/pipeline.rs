use mu_kit_core::hull::{co_f_search, HullConfig, ObjectiveFunction};
use mu_kit_core::measures::{barycenter, FiniteMeasure};
use mu_kit_core::mucert::{ap_refute, delta_p_refute};
use mu_kit_core::quantum::{
    reconstruction_error, roof_optimize, DensityMatrix, RoofConfig, RoofFunction,
};
use mu_kit_core::spaces::{contains, Point, SetDescriptor};
use num_complex::Complex64;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn hull_from_json_descriptor() {
    let desc: SetDescriptor =
        serde_json::from_str(r#"{"family":"LpConeBounded","p":2,"dim":5}"#).unwrap();
    let f = ObjectiveFunction::builtin("one-minus-norm", desc.ambient_p()).unwrap();
    let x = Point::with_ambient(vec![0.1, 0.05, 0.2, 0.0, 0.1], 2.0).unwrap();
    let cfg = HullConfig {
        restarts: 2,
        ..HullConfig::default()
    };
    let sol = co_f_search(&desc, &f, &x, &cfg).unwrap();
    // every atom lies in the set and the measure is centred at x
    for a in sol.decomposition.atoms() {
        assert!(contains(&desc, a, 1e-9).unwrap());
    }
    assert!(close(
        barycenter(&sol.decomposition).coords(),
        x.coords(),
        1e-9
    ));
    let direct: f64 = sol.decomposition.iter().map(|(w, a)| w * f.eval(a)).sum();
    assert!((direct - sol.value).abs() < 1e-12);
    // the measure survives a JSON round trip
    let text = serde_json::to_string(&sol.decomposition).unwrap();
    let back: FiniteMeasure = serde_json::from_str(&text).unwrap();
    assert_eq!(back, sol.decomposition);
}

#[test]
fn embedded_witnesses_decompose_their_points() {
    for w in [
        delta_p_refute(2.0, 3, 0.5, 40, 400).unwrap().witness,
        ap_refute(2.0, 40, 400, None).map(|w| w.witness).unwrap(),
    ] {
        let (x, mu) = w.embed();
        assert_eq!(x.dim(), 400);
        assert!(close(barycenter(&mu).coords(), x.coords(), 1e-12));
        let outside: f64 = mu
            .iter()
            .filter(|(_, a)| {
                let nz: Vec<usize> = (0..a.dim()).filter(|&i| a.coords()[i] != 0.0).collect();
                nz.len() == 1 && nz[0] + 1 > w.excluded_prefix && a.coords()[nz[0]] == 1.0
            })
            .map(|(wt, _)| wt)
            .sum();
        assert!((outside - w.outside_mass).abs() < 1e-12);
    }
}

#[test]
fn roof_decomposition_reconstructs_the_state() {
    let s = 0.5f64.sqrt();
    let c = |r: f64| Complex64::new(r, 0.0);
    let phi = DensityMatrix::from_pure(&[c(s), c(0.0), c(0.0), c(s)], (2, 2)).unwrap();
    let p01 = DensityMatrix::basis_product(0, 1, (2, 2)).unwrap();
    let omega = DensityMatrix::mixture(&[(0.6, &phi), (0.4, &p01)]).unwrap();
    let r = roof_optimize(
        &omega,
        RoofFunction::Alpha { alpha: 2.0 },
        &RoofConfig::default(),
    )
    .unwrap();
    assert!(reconstruction_error(&omega, &r.decomposition) < 1e-8);
    assert!(r.decomposition.iter().all(|(_, rho)| rho.is_pure(1e-8)));
    // mixing the pure roofs bounds the optimum from above
    assert!(r.upper_bound <= 0.6 + 1e-8);
    let text = serde_json::to_string(&omega).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let back = DensityMatrix::from_json(&v["entries"], (2, 2)).unwrap();
    assert!(back.trace_distance(&omega) < 1e-15);
}
