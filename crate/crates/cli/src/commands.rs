use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use jetext::extension::{Extension, ExtensionPlan, PlanConfig};
use jetext::geometry::{bounding_cube, Cube, Point};
use jetext::io::{fmt_f64, to_json};
use jetext::jets::JetField;
use jetext::lacunae::{self, LacunaConstants};
use jetext::metrics::{DensityField, L1pExtension, LipschitzExtension, MetricSample, PreMetric};
use jetext::multiindex::{table, MAX_ORDER};
use jetext::random;
use jetext::seminorms::{
    extension_lp_norm, phi_psi_m1, sharp_max_lp, sobolev_seminorm, trace_norm_bruteforce, wmp_depth,
    wmp_norm_parts, QuadSpec, BRUTE_FORCE_MAX,
};
use jetext::sparse_graph::{build_graph, graph_seminorm, verify_sparse, SparseGraph};
use jetext::verify::{verify, VerifyConfig};
use jetext::whitney::{default_window, CoverConfig, WhitneyCover};
use jetext::{Error, Result};

use crate::{Cli, Command, GraphFormat, PlanArgs};

/// Named outputs go to files in `dir`, or one after another to stdout.
struct Sink<'a> {
    dir: Option<&'a Path>,
}

impl Sink<'_> {
    fn emit(&self, name: &str, text: &str) -> Result<()> {
        match self.dir {
            Some(d) => {
                std::fs::create_dir_all(d)?;
                std::fs::write(d.join(name), text)?;
            }
            None => {
                let mut out = std::io::stdout().lock();
                match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                    // a closed pipe (`| head`) is not an error
                    Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                    r => r?,
                }
            }
        }
        Ok(())
    }
}

fn consts(args: &PlanArgs) -> Result<LacunaConstants> {
    LacunaConstants::with_tau(args.tau)
}

fn plan_config(args: &PlanArgs) -> Result<PlanConfig> {
    Ok(PlanConfig {
        cover: CoverConfig {
            inflate: args.inflate,
            depth_cap: args.depth_cap,
            max_cubes: args.max_cubes,
        },
        consts: consts(args)?,
    })
}

fn gamma(args: &PlanArgs) -> Result<f64> {
    let g = match args.gamma {
        Some(g) => g,
        None => consts(args)?.gamma,
    };
    if !(g >= 1.0) || !g.is_finite() {
        return Err(Error::Config(format!("gamma = {g} must be at least 1")));
    }
    Ok(g)
}

fn cube_json(c: &Cube) -> Value {
    json!({"center": c.center.coords(), "half_side": c.r})
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn csv_text(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of ASCII fields"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `k^n` points spread evenly over a cube, corners included.
fn grid_points(c: &Cube, k: usize) -> Result<Vec<Point>> {
    if k < 2 {
        return Err(Error::Config("grid needs at least 2 points per axis".into()));
    }
    let n = c.dim();
    let total = k
        .checked_pow(n as u32)
        .filter(|&t| t <= 1 << 24)
        .ok_or_else(|| Error::Capacity(format!("{k}^{n} grid points")))?;
    let mut out = Vec::with_capacity(total);
    for g in 0..total {
        let mut rest = g;
        let mut x = Point::zero(n);
        for i in 0..n {
            let j = rest % k;
            rest /= k;
            x.coords_mut()[i] = c.lower(i) + 2.0 * c.r * j as f64 / (k - 1) as f64;
        }
        out.push(x);
    }
    Ok(out)
}

pub fn run(cli: &Cli) -> Result<u8> {
    let sink = Sink {
        dir: cli.out_dir.as_deref(),
    };
    match &cli.command {
        Command::Gen {
            seed,
            n,
            m,
            p,
            points,
            poly,
            min_sep,
        } => {
            let p = p.unwrap_or(2.0 * *n as f64);
            let mut r = random::rng(*seed);
            let pts = random::random_points(&mut r, *n, *points, *min_sep)?;
            let f = if *poly {
                random::polynomial_field(&mut r, &pts, *m, p)?
            } else {
                random::random_field(&mut r, &pts, *m, p)?
            };
            sink.emit("instance.json", &to_json(&f.to_json())?)?;
        }
        Command::Decompose { input, plan } => {
            let f = JetField::load(input)?;
            let cfg = plan_config(plan)?;
            let cover = jetext::whitney::whitney_decompose(f.points(), &cfg.cover)?;
            sink.emit("cover.json", &to_json(&cover_json(&cover))?)?;
        }
        Command::Lacunae { input, plan } => {
            let f = JetField::load(input)?;
            let p = ExtensionPlan::build(f.points(), &plan_config(plan)?)?;
            sink.emit("lacunae.json", &to_json(&lacunae_json(&p))?)?;
        }
        Command::Graph { input, plan, format } => {
            let f = JetField::load(input)?;
            let p = ExtensionPlan::build(f.points(), &plan_config(plan)?)?;
            let g = build_graph(&p.cover, &p.lacunae);
            match (format, sink.dir) {
                (GraphFormat::Dot, None) => sink.emit("graph.dot", &dot(&g, f.points()))?,
                (GraphFormat::Json, None) => sink.emit("graph.json", &to_json(&graph_json(&g, &p, gamma(plan)?))?)?,
                (_, Some(_)) => {
                    sink.emit("graph.json", &to_json(&graph_json(&g, &p, gamma(plan)?))?)?;
                    sink.emit("graph.dot", &dot(&g, f.points()))?;
                }
            }
        }
        Command::Seminorm { input, plan, order } => {
            let f = JetField::load(input)?;
            let report = seminorm_report(&f, plan, *order)?;
            sink.emit("seminorm.json", &to_json(&report)?)?;
        }
        Command::Extend {
            input,
            plan,
            grid,
            deriv,
            epsilon,
        } => {
            let f = JetField::load(input)?;
            let p = ExtensionPlan::build(f.points(), &plan_config(plan)?)?;
            let ext = match epsilon {
                Some(e) => Extension::truncated(&p, &f, *e)?,
                None => Extension::new(&p, &f)?,
            };
            let order = deriv.unwrap_or(f.m - 1);
            if order > (f.m + 1).min(MAX_ORDER) {
                return Err(Error::Config(format!(
                    "derivative order {order} above m + 1 = {}",
                    f.m + 1
                )));
            }
            let (csv, skipped) = grid_csv(&ext, p.cover.window(), *grid, order)?;
            if skipped > 0 {
                eprintln!("skipped {skipped} grid points in the unresolved collar");
            }
            sink.emit("extension.csv", &csv)?;
        }
        Command::Wmp {
            input,
            plan,
            epsilon,
            grid,
            numeric,
        } => {
            let f = JetField::load(input)?;
            let mut cfg = plan_config(plan)?;
            let window = default_window(f.points(), cfg.cover.inflate)?;
            cfg.cover.depth_cap = Some(plan.depth_cap.unwrap_or_else(|| wmp_depth(&window, *epsilon)));
            let p = ExtensionPlan::build(f.points(), &cfg)?;
            let ext = Extension::truncated(&p, &f, *epsilon)?;
            let parts = wmp_norm_parts(&p, &f, *epsilon, gamma(plan)?)?;
            let mut report = json!({
                "epsilon": epsilon,
                "delta": ext.delta(),
                "depth_cap": p.cover.depth_cap(),
                "parts": parts,
            });
            if *numeric {
                let quad = QuadSpec::for_m(f.m);
                let s = jetext::seminorms::sobolev_seminorm(&ext, f.p, &quad)?;
                let l = extension_lp_norm(&ext, f.p, &quad)?;
                report["numeric"] = json!({
                    "seminorm": s,
                    "lp_norm": l,
                    "total": s.value + l.value,
                    "ratio": parts.total / (s.value + l.value),
                });
            }
            sink.emit("wmp.json", &to_json(&report)?)?;
            let (csv, skipped) = grid_csv(&ext, p.cover.window(), *grid, 0)?;
            if skipped > 0 {
                eprintln!("skipped {skipped} grid points in the unresolved collar");
            }
            sink.emit("wmp_grid.csv", &csv)?;
        }
        Command::Metric {
            density,
            points,
            count,
            seed,
            radius,
        } => {
            let h = DensityField::load(density)?;
            let pts = match points {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    let raw: Vec<Vec<f64>> = serde_json::from_str(&text)?;
                    raw.iter().map(|c| Point::new(c)).collect::<Result<Vec<_>>>()?
                }
                None => random::points_in(&mut random::rng(*seed), h.domain(), *count),
            };
            let s = MetricSample::build(PreMetric::new(h), &pts, *radius)?;
            if !s.is_connected() {
                return Err(Error::Invariant("metric sample graph is disconnected".into()));
            }
            let mut w = csv_writer();
            w.write_record(["i", "j", "rho", "d"]).map_err(csv_err)?;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    let (a, b) = (s.extra(i), s.extra(j));
                    w.write_record([
                        i.to_string(),
                        j.to_string(),
                        fmt_f64(s.rho(a, b)),
                        fmt_f64(s.geodesic(a, b)),
                    ])
                    .map_err(csv_err)?;
                }
            }
            sink.emit("metric.csv", &csv_text(w)?)?;
        }
        Command::Mcshane {
            input,
            grid,
            res,
            lipschitz,
        } => {
            let f = JetField::load(input)?;
            if f.m != 1 {
                return Err(Error::Config(format!("mcshane takes m = 1 data, got m = {}", f.m)));
            }
            let vals = f.values();
            let b = bounding_cube(f.points())?;
            let domain = Cube::new(b.center, 1.5 * if b.r > 0.0 { b.r } else { 1.0 })?;
            let eval: Box<dyn Fn(&Point) -> Result<f64>> = if *lipschitz {
                let e = LipschitzExtension::new(f.points(), &vals)?;
                Box::new(move |x| Ok(e.eval(x)))
            } else {
                let e = L1pExtension::new(f.points(), &vals, f.p, domain, *res)?;
                Box::new(move |x| e.eval(x))
            };
            let mut on_e: f64 = 0.0;
            for (x, v) in f.points().iter().zip(&vals) {
                on_e = on_e.max((eval(x)? - v).abs());
            }
            let mut w = csv_writer();
            let n = f.dim();
            let mut head: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
            head.push("value".into());
            w.write_record(&head).map_err(csv_err)?;
            for x in grid_points(&domain, *grid)? {
                let mut row: Vec<String> = x.coords().iter().map(|&c| fmt_f64(c)).collect();
                row.push(fmt_f64(eval(&x)?));
                w.write_record(&row).map_err(csv_err)?;
            }
            let report = json!({
                "method": if *lipschitz { "lipschitz" } else { "l1p" },
                "domain": cube_json(&domain),
                "max_error_on_e": on_e,
            });
            sink.emit("mcshane.json", &to_json(&report)?)?;
            sink.emit("mcshane.csv", &csv_text(w)?)?;
        }
        Command::Verify {
            input,
            plan,
            samples,
            seed,
        } => {
            let f = JetField::load(input)?;
            let mut pc = plan_config(plan)?;
            pc.consts.gamma = gamma(plan)?;
            let cfg = VerifyConfig {
                plan: pc,
                samples: *samples,
                seed: *seed,
            };
            let rep = verify(&f, &cfg)?;
            sink.emit("verify.json", &to_json(&rep)?)?;
            if !rep.passed {
                eprintln!("failed suites: {}", rep.failed().join(", "));
                return Ok(3);
            }
        }
    }
    Ok(0)
}

fn cover_json(cover: &WhitneyCover) -> Value {
    let cubes: Vec<Value> = (0..cover.len())
        .map(|k| {
            let c = cover.cube(k);
            let nb: Vec<u32> = cover
                .touching_cubes(k)
                .iter()
                .copied()
                .filter(|&q| q as usize != k)
                .collect();
            json!({
                "center": c.cube.center.coords(),
                "half_side": c.cube.r,
                "level": c.level,
                "neighbors": nb,
            })
        })
        .collect();
    let collar: Vec<Value> = cover.collar().iter().map(|c| cube_json(&c.cube)).collect();
    json!({
        "window": cube_json(cover.window()),
        "depth_cap": cover.depth_cap(),
        "cubes": cubes,
        "collar": collar,
        "report": cover.check(),
    })
}

fn lacunae_json(p: &ExtensionPlan) -> Value {
    let lac: Vec<Value> = p
        .lacunae
        .all()
        .iter()
        .map(|l| {
            json!({
                "kind": l.kind,
                "cubes": l.cubes.len(),
                "v": l.v,
                "diam_q_min": p.cover.cube(l.q_min as usize).diam(),
                "diam_q_max": l.q_max.map(|q| p.cover.cube(q as usize).diam()),
                "center": l.center,
            })
        })
        .collect();
    json!({
        "constants": p.lacunae.consts,
        "lacunae": lac,
        "contacts": p.lacunae.contacts().len(),
        "warnings": p.lacunae.warnings,
        "report": lacunae::check(&p.cover, &p.lacunae),
    })
}

fn graph_json(g: &SparseGraph, p: &ExtensionPlan, gamma: f64) -> Value {
    let pts = p.points();
    let edges: Vec<Value> = g
        .edges
        .iter()
        .map(|e| {
            json!({
                "u": e.u,
                "v": e.v,
                "witness": e.witness,
                "certificate": cube_json(&e.cert),
            })
        })
        .collect();
    json!({
        "vertices": pts.iter().map(|x| x.coords().to_vec()).collect::<Vec<_>>(),
        "edges": edges,
        "connected": g.is_connected(),
        "max_degree": g.max_degree(),
        "stretch": g.stretch(pts),
        "sparsity": verify_sparse(g, pts, gamma),
    })
}

fn dot(g: &SparseGraph, pts: &[Point]) -> String {
    let mut s = String::from("graph E {\n");
    for (i, x) in pts.iter().enumerate() {
        let c = x.coords();
        let (a, b) = (c[0], if c.len() > 1 { c[1] } else { 0.0 });
        s += &format!("  {i} [pos=\"{a},{b}!\"];\n");
    }
    for e in &g.edges {
        s += &format!("  {} -- {};\n", e.u, e.v);
    }
    s += "}\n";
    s
}

fn seminorm_report(f: &JetField, plan: &PlanArgs, order: Option<usize>) -> Result<Value> {
    let p = ExtensionPlan::build(f.points(), &plan_config(plan)?)?;
    let gamma = gamma(plan)?;
    let mut quad = QuadSpec::for_m(f.m);
    if let Some(o) = order {
        quad.order = o;
        quad.check_order = Some(o + 2);
    }
    let g = build_graph(&p.cover, &p.lacunae);
    let gs = graph_seminorm(&g, f, f.p)?;
    let ext = Extension::new(&p, f)?;
    let sob = sobolev_seminorm(&ext, f.p, &quad)?;
    let sharp = sharp_max_lp(f, &p.cover, quad.order)?;
    let mut report = json!({
        "n": f.dim(),
        "m": f.m,
        "p": f.p,
        "points": f.len(),
        "gamma": gamma,
        "quadrature": quad,
        "graph_seminorm": gs,
        "sobolev_seminorm": sob,
        "sharp_max_lp": sharp,
        "ratios": {
            "sobolev_over_graph": sob.value / gs,
            "sharp_over_graph": sharp.value / gs,
        },
    });
    if f.len() <= BRUTE_FORCE_MAX {
        report["trace_norm_bruteforce"] = json!(trace_norm_bruteforce(f, f.p, gamma)?);
    }
    if f.m == 1 {
        let vals = f.values();
        let pp = phi_psi_m1(&p, &vals, f.p, gamma, quad.order)?;
        report["phi"] = json!(pp.phi);
        report["phi_exhaustive"] = json!(pp.phi_exhaustive);
        report["psi"] = json!(pp.psi);
    }
    Ok(report)
}

fn grid_csv(ext: &Extension<'_>, window: &Cube, k: usize, order: usize) -> Result<(String, usize)> {
    let n = window.dim();
    let t = table(n, order);
    let mut w = csv_writer();
    let mut head: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    head.push("alpha".into());
    head.push("value".into());
    w.write_record(&head).map_err(csv_err)?;
    let mut skipped = 0;
    for x in grid_points(window, k)? {
        let d = match ext.derivs(&x, order) {
            Ok(d) => d,
            Err(Error::Collar(..)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        for (a, v) in t.list().iter().zip(&d) {
            let mut row: Vec<String> = x.coords().iter().map(|&c| fmt_f64(c)).collect();
            row.push(a.key());
            row.push(fmt_f64(*v));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    Ok((csv_text(w)?, skipped))
}
