//! The invariant suite run by `jetext verify`.

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;
use crate::extension::{Extension, ExtensionPlan, PlanConfig};
use crate::geometry::Point;
use crate::jets::JetField;
use crate::lacunae;
use crate::multiindex::table;
use crate::random::{polynomial_field, random_field, rng};
use crate::sparse_graph::{build_graph, verify_sparse};
use crate::whitney::{bump::STAR, bump_derivs, Location, PouTable};

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub plan: PlanConfig,
    /// Random evaluation points per suite.
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            plan: PlanConfig::default(),
            samples: 1000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Suite {
    pub name: &'static str,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub suites: Vec<Suite>,
}

impl VerifyReport {
    pub fn failed(&self) -> Vec<&'static str> {
        self.suites.iter().filter(|s| !s.passed).map(|s| s.name).collect()
    }
}

/// Random points of the window lying in Whitney cubes.
fn cube_samples(plan: &ExtensionPlan, count: usize, seed: u64) -> Vec<(usize, Point)> {
    let w = *plan.cover.window();
    let n = plan.dim();
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count * 20 {
        if out.len() == count {
            break;
        }
        let c: Vec<f64> = (0..n).map(|i| w.lower(i) + 2.0 * w.r * r.gen::<f64>()).collect();
        let x = Point::new(&c).expect("finite sample");
        if let Location::Cube(k) = plan.cover.locate(&x) {
            out.push((k, x));
        }
    }
    out
}

pub fn verify(field: &JetField, cfg: &VerifyConfig) -> Result<VerifyReport> {
    let plan = ExtensionPlan::build(field.points(), &cfg.plan)?;
    let mut suites = Vec::new();
    let samples = cube_samples(&plan, cfg.samples, cfg.seed);

    let cover = plan.cover.check();
    suites.push(Suite {
        name: "cover",
        passed: cover.is_clean(),
        detail: serde_json::to_value(&cover)?,
    });

    // Σφ = 1, and a bump that the table leaves out really vanishes there.
    let mut sum_err: f64 = 0.0;
    let mut support = 0usize;
    let n = plan.dim();
    let t0 = table(n, 0);
    let mut buf = [0.0];
    for (k, x) in &samples {
        let tab = PouTable::at_home(&plan.cover, *k, x, 0);
        let s: f64 = (0..tab.cubes.len()).map(|j| tab.row(j)[0]).sum();
        sum_err = sum_err.max((s - 1.0).abs());
        for &q in plan.cover.touching_cubes(*k) {
            let c = &plan.cover.cube(q as usize).cube;
            bump_derivs(&plan.cover, q as usize, x, t0, &mut buf);
            if buf[0] != 0.0 && c.center.dist(x) >= c.r * STAR {
                support += 1;
            }
        }
    }
    suites.push(Suite {
        name: "partition_of_unity",
        passed: sum_err <= 1e-9 && support == 0,
        detail: json!({"samples": samples.len(), "max_sum_error": sum_err, "support_violations": support}),
    });

    let lac = lacunae::check(&plan.cover, &plan.lacunae);
    suites.push(Suite {
        name: "lacunae",
        passed: lac.is_clean(),
        detail: serde_json::to_value(&lac)?,
    });

    let proj = plan.check();
    suites.push(Suite {
        name: "projector",
        passed: proj.center_violations == 0,
        detail: serde_json::to_value(&proj)?,
    });

    let g = build_graph(&plan.cover, &plan.lacunae);
    let sp = verify_sparse(&g, plan.points(), cfg.plan.consts.gamma);
    suites.push(Suite {
        name: "graph",
        passed: g.is_connected() && sp.violations() == 0,
        detail: json!({"connected": g.is_connected(), "sparsity": sp}),
    });

    // A global polynomial must come back exactly.
    let m = field.m;
    let mut r = rng(cfg.seed ^ 0x5eed);
    let g0 = polynomial_field(&mut r, field.points(), m, field.p)?.jet(0).clone();
    // Jets expanded at their own points, so the blend is exercised.
    let jets = field.points().iter().map(|x| g0.rebase(x)).collect();
    let poly = JetField::new(field.points().to_vec(), jets, m, field.p)?;
    let ext = Extension::new(&plan, &poly)?;
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut want = vec![0.0; table(n, m - 1).len()];
    for (k, x) in &samples {
        let got = ext.derivs_in(*k, x, m - 1);
        crate::extension::poly_derivs(&g0, x, &mut want);
        for (a, b) in got.iter().zip(&want) {
            err = err.max((a - b).abs());
            scale = scale.max(b.abs());
        }
    }
    let rel = err / scale.max(f64::MIN_POSITIVE);
    suites.push(Suite {
        name: "reproduction",
        passed: rel <= 1e-9,
        detail: json!({"max_relative_error": rel}),
    });

    // F[f + 2g] = F[f] + 2 F[g].
    let other = random_field(&mut r, field.points(), m, field.p)?;
    let mix = field.combine(1.0, &other, 2.0)?;
    let (ef, eg, em) = (
        Extension::new(&plan, field)?,
        Extension::new(&plan, &other)?,
        Extension::new(&plan, &mix)?,
    );
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (k, x) in &samples {
        let (a, b, c) = (ef.derivs_in(*k, x, m - 1), eg.derivs_in(*k, x, m - 1), em.derivs_in(*k, x, m - 1));
        for j in 0..a.len() {
            err = err.max((c[j] - a[j] - 2.0 * b[j]).abs());
            scale = scale.max(a[j].abs() + 2.0 * b[j].abs());
        }
    }
    let rel = err / scale.max(f64::MIN_POSITIVE);
    suites.push(Suite {
        name: "linearity",
        passed: rel <= 1e-12,
        detail: json!({"max_relative_error": rel}),
    });

    Ok(VerifyReport {
        passed: suites.iter().all(|s| s.passed),
        suites,
    })
}
