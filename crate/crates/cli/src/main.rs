use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use mu_kit::report::{format_json, num, Report};
use mu_kit::scenarios::{self, RunContext, SCENARIOS};
use mu_kit_core::hull::{co_f_search, lsc_probe, HullConfig, ObjectiveFunction};
use mu_kit_core::measures::FiniteMeasure;
use mu_kit_core::mucert::{
    ap_refute, delta_p_refute, hilbert_cube_classify, pointed_cone_classify,
    polyhedral_equivalence_check, tail_certificate_check, AffineFunctional,
};
use mu_kit_core::quantum::{roof_optimize, DensityMatrix, RoofConfig, RoofFunction};
use mu_kit_core::spaces::{Point, SetDescriptor};
use mu_kit_core::stability::{
    ball_bound, ball_bound_adversary, delta_p_split, midpoint_openness_probe,
};

#[derive(Parser)]
#[command(
    name = "mu-kit",
    version,
    about = "Convex hulls, μ-compactness certificates and convex roofs"
)]
struct Cli {
    /// Root seed, decimal or 0x-prefixed hex.
    #[arg(long, global = true, env = "MUKIT_SEED", default_value = "0x5EED", value_parser = parse_seed)]
    seed: u64,
    /// Numeric tolerance; for scenarios it replaces every declared value tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Emit the report as compact JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Run independent scenarios concurrently.
    #[arg(long, global = true)]
    parallel: bool,
    /// Omit elapsed_ms so that reports are byte-identical across runs.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Upper bound on the convex hull of a function at a point.
    Hull(HullArgs),
    /// Lower-semicontinuity probe of the hull along a converging sequence.
    Lsc(LscArgs),
    /// μ-compactness certificates and refutations.
    #[command(subcommand)]
    Mucert(Mucert),
    /// Split a perturbed midpoint in Δ_p.
    Split(SplitArgs),
    /// Unit-ball mass bound, optionally stress-tested by the LP adversary.
    Ballbound(BallArgs),
    /// Midpoint-openness probe along a sequence of midpoints.
    ProbeOpenness(ProbeArgs),
    /// Pointedness of a finitely generated cone.
    Cone(ConeArgs),
    /// Convex-roof upper bound for a bipartite state.
    Roof(RoofArgs),
    /// Regression scenarios.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
}

#[derive(Args)]
struct HullArgs {
    /// Set descriptor, e.g. {"family":"LpConeBounded","p":2,"dim":8}.
    #[arg(long = "set")]
    set: String,
    /// Builtin name (one-minus-norm[:p], sq-norm, neg-sq-norm) or a table {"points":[…],"values":[…]}.
    #[arg(long = "fn")]
    function: String,
    /// Query point as a JSON array.
    #[arg(long)]
    point: String,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
}

#[derive(Args)]
struct LscArgs {
    #[arg(long = "set")]
    set: String,
    #[arg(long = "fn")]
    function: String,
    /// JSON array of points converging to the limit.
    #[arg(long)]
    sequence: String,
    #[arg(long)]
    limit: String,
    #[arg(long, default_value_t = 4)]
    restarts: usize,
}

#[derive(Subcommand)]
enum Mucert {
    /// Tail check of a decomposition in the ℓ_1 cone against h_i = i.
    Certify {
        #[arg(long)]
        point: String,
        /// Measure {"atoms":[…],"weights":[…]}.
        #[arg(long)]
        measure: String,
        #[arg(long)]
        eps: f64,
    },
    /// Witness that a compact subset of Δ_p is not μ-compact.
    RefuteDeltap {
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 4)]
        r: usize,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long)]
        prefix: usize,
        #[arg(long)]
        dim: usize,
    },
    /// Witness that A_p is not pointwise μ-compact.
    RefuteAp {
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        prefix: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        scale: Option<f64>,
    },
    /// Hilbert cube with the given half-widths.
    Cube {
        /// JSON array of half-widths a_i.
        #[arg(long)]
        a: String,
    },
    /// Same as the top-level `cone` command.
    Cone(ConeArgs),
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    #[arg(long)]
    z: String,
    #[arg(long)]
    eps: f64,
}

#[derive(Args)]
struct BallArgs {
    /// Centre z as a JSON array.
    #[arg(long)]
    z: String,
    #[arg(long)]
    delta: f64,
    /// Number of adversary trials; 0 skips the adversary.
    #[arg(long, default_value_t = 0)]
    trials: usize,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long = "set")]
    set: String,
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    /// JSON array of midpoints.
    #[arg(long)]
    z_seq: String,
    /// JSON array of target distances, one per midpoint.
    #[arg(long)]
    eps: String,
}

#[derive(Args)]
struct ConeArgs {
    /// JSON array of generators.
    #[arg(long)]
    generators: String,
    /// Apex of the translated cone; defaults to the origin.
    #[arg(long)]
    offset: Option<String>,
}

#[derive(Args)]
struct RoofArgs {
    /// Density matrix as rows of numbers or [re, im] pairs.
    #[arg(long)]
    state: String,
    #[arg(long, num_args = 2, value_names = ["DH", "DK"])]
    dims: Vec<usize>,
    /// alpha:<α> or entropy.
    #[arg(long = "f", default_value = "alpha:2")]
    function: String,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Run one scenario by name, or `all`.
    Run {
        name: String,
        /// Parameter override key=value; the value is parsed as JSON.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List registered scenarios.
    List {
        /// Keep scenarios whose name or module contains this string.
        #[arg(long)]
        filter: Option<String>,
    },
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

fn parse<T: DeserializeOwned>(what: &str, s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| anyhow!("--{what}: {e}"))
}

fn objective(name: &str, ambient_p: f64) -> Result<ObjectiveFunction> {
    if name.trim_start().starts_with('{') {
        #[derive(serde::Deserialize)]
        struct Table {
            points: Vec<Vec<f64>>,
            values: Vec<f64>,
        }
        let t: Table = parse("fn", name)?;
        Ok(ObjectiveFunction::table(t.points, t.values)?)
    } else {
        Ok(ObjectiveFunction::builtin(name, ambient_p)?)
    }
}

fn raw(s: &str) -> Value {
    serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string()))
}

struct Out {
    report: Report,
    code: ExitCode,
}

fn plain(inputs: Value, outputs: Value, tolerances: Value) -> Out {
    Out {
        report: Report::new(inputs, outputs, tolerances),
        code: ExitCode::SUCCESS,
    }
}

fn hull_config(cli: &Cli, restarts: usize) -> HullConfig {
    let mut cfg = HullConfig {
        restarts,
        seed: cli.seed,
        ..HullConfig::default()
    };
    if let Some(t) = cli.tol {
        cfg.tol = t;
    }
    cfg
}

fn execute(cli: &Cli) -> Result<Out> {
    let tol = cli.tol.unwrap_or(1e-12);
    Ok(match &cli.command {
        Command::Hull(a) => {
            let desc: SetDescriptor = parse("set", &a.set)?;
            let f = objective(&a.function, desc.ambient_p())?;
            let x: Point = parse::<Point>("point", &a.point)?.retag(desc.ambient_p());
            let cfg = hull_config(cli, a.restarts);
            let sol = co_f_search(&desc, &f, &x, &cfg)?;
            plain(
                json!({ "set": desc, "fn": raw(&a.function), "point": x, "restarts": a.restarts, "seed": cli.seed }),
                serde_json::to_value(&sol)?,
                json!({ "tol": num(cfg.tol) }),
            )
        }
        Command::Lsc(a) => {
            let desc: SetDescriptor = parse("set", &a.set)?;
            let p = desc.ambient_p();
            let f = objective(&a.function, p)?;
            let seq: Vec<Point> = parse::<Vec<Point>>("sequence", &a.sequence)?
                .into_iter()
                .map(|x| x.retag(p))
                .collect();
            let limit = parse::<Point>("limit", &a.limit)?.retag(p);
            let cfg = hull_config(cli, a.restarts);
            let r = lsc_probe(&desc, &f, &seq, &limit, &cfg)?;
            plain(
                json!({ "set": desc, "fn": raw(&a.function), "sequence": seq, "limit": limit, "seed": cli.seed }),
                serde_json::to_value(&r)?,
                json!({ "tol": num(cfg.tol) }),
            )
        }
        Command::Mucert(m) => match m {
            Mucert::Certify {
                point,
                measure,
                eps,
            } => {
                let x: Point = parse::<Point>("point", point)?.retag(1.0);
                let mu: FiniteMeasure = parse("measure", measure)?;
                let v = tail_certificate_check(
                    &AffineFunctional::index_weighted(x.dim()),
                    &x,
                    &mu,
                    *eps,
                )?;
                plain(
                    json!({ "point": x, "measure": mu, "eps": eps }),
                    json!({ "verdict": v }),
                    json!({}),
                )
            }
            Mucert::RefuteDeltap {
                p,
                r,
                eps,
                prefix,
                dim,
            } => {
                let w = delta_p_refute(*p, *r, *eps, *prefix, *dim)?;
                plain(
                    json!({ "p": p, "r": r, "eps": eps, "prefix": prefix, "dim": dim }),
                    serde_json::to_value(&w)?,
                    json!({ "power_sum": num(1.0 / *r as f64 + 1e-12) }),
                )
            }
            Mucert::RefuteAp {
                p,
                prefix,
                dim,
                scale,
            } => {
                let w = ap_refute(*p, *prefix, *dim, *scale)?;
                plain(
                    json!({ "p": p, "prefix": prefix, "dim": dim, "scale": scale.map(num) }),
                    serde_json::to_value(&w)?,
                    json!({}),
                )
            }
            Mucert::Cube { a } => {
                let a: Vec<f64> = parse("a", a)?;
                let v = hilbert_cube_classify(&a, tol)?;
                plain(
                    json!({ "a": a }),
                    json!({ "verdict": v }),
                    json!({ "tol": num(tol) }),
                )
            }
            Mucert::Cone(c) => cone(c)?,
        },
        Command::Split(a) => {
            let pt =
                |what: &str, s: &str| -> Result<Point> { Ok(parse::<Point>(what, s)?.retag(a.p)) };
            let (x, y, z) = (pt("a", &a.a)?, pt("b", &a.b)?, pt("z", &a.z)?);
            let s = delta_p_split(a.p, &x, &y, &z, a.eps)?;
            plain(
                json!({ "p": a.p, "a": x, "b": y, "z": z, "eps": a.eps }),
                serde_json::to_value(&s)?,
                json!({ "split": num(1e-12) }),
            )
        }
        Command::Ballbound(a) => {
            let z: Point = parse("z", &a.z)?;
            let r = ball_bound(&z, a.delta)?;
            let mut outputs = json!({ "r": num(r), "outside_bound": num(1.0 - r) });
            let mut code = ExitCode::SUCCESS;
            if a.trials > 0 {
                let rep = ball_bound_adversary(&z, a.delta, a.trials, cli.seed)?;
                if rep.max_outside_mass > 1.0 - r + 1e-7 {
                    code = ExitCode::from(1);
                }
                outputs["adversary"] = serde_json::to_value(&rep)?;
            }
            let mut out = plain(
                json!({ "z": z, "delta": a.delta, "trials": a.trials, "seed": cli.seed }),
                outputs,
                json!({ "adversary": num(1e-7) }),
            );
            out.code = code;
            out
        }
        Command::ProbeOpenness(a) => {
            let desc: SetDescriptor = parse("set", &a.set)?;
            let p = desc.ambient_p();
            let (x, y): (Point, Point) = (parse("a", &a.a)?, parse("b", &a.b)?);
            let zs: Vec<Point> = parse::<Vec<Point>>("z-seq", &a.z_seq)?
                .into_iter()
                .map(|z| z.retag(p))
                .collect();
            let eps: Vec<f64> = parse("eps", &a.eps)?;
            if eps.len() != zs.len() {
                bail!("{} midpoints but {} eps values", zs.len(), eps.len());
            }
            let recs = midpoint_openness_probe(&desc, &x.retag(p), &y.retag(p), &zs, &eps);
            plain(
                json!({ "set": desc, "a": parse::<Value>("a", &a.a)?, "b": parse::<Value>("b", &a.b)?, "z_seq": zs, "eps": eps }),
                json!({ "all_success": recs.iter().all(|r| r.success), "records": recs }),
                json!({}),
            )
        }
        Command::Cone(c) => cone(c)?,
        Command::Roof(a) => {
            let [dh, dk] = a.dims[..] else {
                bail!("--dims needs two values")
            };
            let state: Value = parse("state", &a.state)?;
            let omega =
                DensityMatrix::from_json(&state, (dh, dk)).map_err(|e| anyhow!("--state: {e}"))?;
            let f = RoofFunction::parse(&a.function).map_err(|e| anyhow!("--f: {e}"))?;
            let mut cfg = RoofConfig {
                m: a.m,
                restarts: a.restarts,
                seed: cli.seed,
                ..RoofConfig::default()
            };
            if let Some(t) = cli.tol {
                cfg.tol = t;
            }
            let r = roof_optimize(&omega, f, &cfg)?;
            plain(
                json!({ "state": omega, "f": f, "m": a.m, "restarts": a.restarts, "seed": cli.seed }),
                serde_json::to_value(&r)?,
                json!({ "step": num(cfg.tol), "reconstruction": num(1e-8) }),
            )
        }
        Command::Scenario(ScenarioCmd::List { filter }) => {
            let list: Vec<Value> = SCENARIOS
                .iter()
                .filter(|s| filter.as_deref().is_none_or(|f| s.matches(f)))
                .map(|s| s.summary())
                .collect();
            plain(
                json!({ "filter": filter }),
                json!({ "scenarios": list }),
                json!({}),
            )
        }
        Command::Scenario(ScenarioCmd::Run { name, overrides }) => {
            run_scenarios(cli, name, overrides)?
        }
    })
}

fn cone(c: &ConeArgs) -> Result<Out> {
    let gens: Vec<Point> = parse("generators", &c.generators)?;
    let d = gens.first().map_or(0, Point::dim);
    let offset = match &c.offset {
        Some(o) => parse("offset", o)?,
        None => Point::zeros(d),
    };
    let v = pointed_cone_classify(&gens)?;
    let eq = polyhedral_equivalence_check(&gens, &offset)?;
    let mut out = plain(
        json!({ "generators": gens, "offset": offset }),
        json!({ "verdict": v, "equivalences": eq, "agree": eq.agree() }),
        json!({ "lp_feasibility": num(1e-9) }),
    );
    out.report.pass = Some(eq.agree());
    if !eq.agree() {
        out.code = ExitCode::from(1);
    }
    Ok(out)
}

fn run_scenarios(cli: &Cli, name: &str, overrides: &[String]) -> Result<Out> {
    let ctx = RunContext {
        seed: cli.seed,
        tol: cli.tol,
    };
    let selected: Vec<_> = if name == "all" {
        if !overrides.is_empty() {
            bail!("--set applies to a single scenario");
        }
        SCENARIOS.iter().collect()
    } else {
        vec![scenarios::find(name)
            .ok_or_else(|| anyhow!("unknown scenario {name:?}; see `mu-kit scenario list`"))?]
    };
    let timed = |s: &scenarios::Scenario| -> Result<Report> {
        let t = Instant::now();
        let mut r = scenarios::run(s, &ctx, overrides)?;
        if !cli.no_timing {
            r.elapsed_ms = Some(t.elapsed().as_secs_f64() * 1e3);
        }
        Ok(r)
    };
    let reports: Vec<Report> = if cli.parallel {
        selected
            .par_iter()
            .map(|s| timed(s))
            .collect::<Result<_>>()?
    } else {
        selected.iter().map(|s| timed(s)).collect::<Result<_>>()?
    };
    let pass = reports.iter().all(|r| r.pass == Some(true));
    let code = if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    };
    let report = if name == "all" {
        let mut r = Report::new(
            json!({ "seed": cli.seed, "scenarios": selected.iter().map(|s| s.name).collect::<Vec<_>>() }),
            json!({ "reports": reports.iter().map(Report::to_value).collect::<Vec<_>>() }),
            json!({}),
        );
        r.scenario = Some("all".into());
        r.pass = Some(pass);
        r
    } else {
        reports.into_iter().next().expect("one scenario selected")
    };
    Ok(Out { report, code })
}

fn print_text(cli: &Cli, report: &Report) {
    let reports: Vec<&Value>;
    let doc = report.to_value();
    match &cli.command {
        Command::Scenario(ScenarioCmd::List { .. }) => {
            for s in doc["outputs"]["scenarios"].as_array().into_iter().flatten() {
                println!(
                    "{:<30} {:<12} {}",
                    s["name"].as_str().unwrap_or(""),
                    s["module"].as_str().unwrap_or(""),
                    s["claim"].as_str().unwrap_or("")
                );
            }
        }
        Command::Scenario(ScenarioCmd::Run { .. }) => {
            reports = if report.scenario.as_deref() == Some("all") {
                doc["outputs"]["reports"]
                    .as_array()
                    .map(|v| v.iter().collect())
                    .unwrap_or_default()
            } else {
                vec![&doc]
            };
            for r in reports {
                let pass = r["pass"].as_bool() == Some(true);
                let time = r
                    .get("elapsed_ms")
                    .and_then(Value::as_f64)
                    .map(|t| format!(" {t:.1}ms"))
                    .unwrap_or_default();
                println!(
                    "{} {}{}",
                    if pass { "PASS" } else { "FAIL" },
                    r["scenario"].as_str().unwrap_or(""),
                    time
                );
                for c in r["checks"].as_array().into_iter().flatten() {
                    if c["pass"].as_bool() != Some(true) {
                        println!(
                            "  {}: measured {} expected {}",
                            c["quantity"].as_str().unwrap_or(""),
                            c["measured"],
                            c["expected"]
                        );
                    }
                }
            }
        }
        _ => println!("{}", format_json(&doc, true)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let t = Instant::now();
    match execute(&cli) {
        Ok(Out { mut report, code }) => {
            if !cli.no_timing && report.elapsed_ms.is_none() {
                report.elapsed_ms = Some(t.elapsed().as_secs_f64() * 1e3);
            }
            if cli.json {
                println!("{}", format_json(&report.to_value(), false));
            } else {
                print_text(&cli, &report);
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
