//! Acceptance gate. Each test prints one `PASS`/`FAIL` line for its
//! criterion, followed by indented lines with the recorded constants.
//!
//! Run with `cargo test -p jetext --test acceptance`.

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;

use jetext::extension::{Extension, ExtensionPlan, PlanConfig};
use jetext::geometry::{Cube, Point};
use jetext::jets::JetField;
use jetext::lacunae::LacunaConstants;
use jetext::metrics::{lipschitz_constant, LipschitzExtension, MetricSample, PreMetric};
use jetext::multiindex::table;
use jetext::random::{polynomial_field, random_density, random_field, random_instance, random_points, rng};
use jetext::seminorms::{
    extension_lp_norm, phi_m1, psi_m1, sharp_max_lp, sobolev_seminorm, sobolev_seminorms,
    trace_norm_bruteforce, wmp_depth, wmp_norm_parts, QuadSpec,
};
use jetext::sparse_graph::{build_graph, graph_seminorm, verify_sparse};
use jetext::whitney::bump::{profile_derivs, STAR};
use jetext::whitney::{default_window, whitney_decompose, CoverConfig, Location, PouTable, WhitneyCover};

// Pinned tolerances.
const C1_INSTANCES: u64 = 200;
const C1_MAX_POINTS: usize = 30;
const C1_SECONDS: f64 = 10.0;
const C2_SAMPLES: usize = 1000;
const C2_SUM_TOL: f64 = 1e-9;
const C3_GAMMA_TILDE: f64 = 180.0;
const C4_SPREAD: f64 = 0.20;
const C5_REL: f64 = 1e-9;
const C5_FLOOR: f64 = 1e-8;
const C5_SECONDS: f64 = 5.0;
const BANK_INSTANCES: u64 = 50;
/// Allowed growth of a ratio window when `|E|` doubles; same band as the
/// stability tolerance of criterion 4.
const WINDOW_GROWTH: f64 = 1.20;
const C9_FACTOR: f64 = 16.0;
const C9_SLACK: f64 = 0.05;
const C9_PAIRS: usize = 1000;
const C9_RES: usize = 32;
const C9_SECONDS: f64 = 60.0;
const C10_LIP: f64 = 1e-6;
const C12_REL: f64 = 1e-12;

fn verdict(id: u32, title: &str, pass: bool, detail: &str, records: &[String]) {
    let mut out = std::io::stdout().lock();
    let tag = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "criterion {id:>2} {tag}: {title}: {detail}");
    for r in records {
        let _ = writeln!(out, "    {r}");
    }
    let _ = out.flush();
    assert!(pass, "criterion {id} failed: {detail}");
}

fn points(seed: u64, n: usize, count: usize) -> Vec<Point> {
    random_points(&mut rng(seed), n, count, 1e-3).expect("random points")
}

fn plan_for(pts: &[Point]) -> ExtensionPlan {
    ExtensionPlan::build(pts, &PlanConfig::default()).expect("plan")
}

/// Uniform random points of the window that fall into Whitney cubes.
fn covered_samples(cover: &WhitneyCover, count: usize, seed: u64) -> Vec<(usize, Point)> {
    let w = *cover.window();
    let n = cover.dim();
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let c: Vec<f64> = (0..n).map(|i| w.lower(i) + 2.0 * w.r * r.gen::<f64>()).collect();
        let x = Point::new(&c).unwrap();
        if let Location::Cube(k) = cover.locate(&x) {
            out.push((k, x));
        }
    }
    out
}

/// `[lo, hi]` of a list of ratios and the constant `C = max(hi, 1/lo)`.
#[derive(Clone, Copy, Debug)]
struct Window {
    lo: f64,
    hi: f64,
}

impl Window {
    fn of(v: &[f64]) -> Window {
        Window {
            lo: v.iter().copied().fold(f64::INFINITY, f64::min),
            hi: v.iter().copied().fold(0.0, f64::max),
        }
    }

    fn c(&self) -> f64 {
        self.hi.max(1.0 / self.lo)
    }

    fn finite(&self) -> bool {
        self.lo > 0.0 && self.hi.is_finite()
    }
}

fn exponents(n: usize) -> Vec<f64> {
    let mut ps = vec![n as f64 + 1.0, 2.0 * n as f64, 4.0 * n as f64];
    ps.dedup();
    ps
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_01_whitney_cover() {
    let t0 = Instant::now();
    let (mut cubes, mut dqe, mut nine) = (0usize, 0usize, 0usize);
    for seed in 0..C1_INSTANCES {
        let n = 1 + (seed % 3) as usize;
        let count = 1 + (seed as usize * 7) % C1_MAX_POINTS;
        let pts = points(seed, n, count);
        let cover = whitney_decompose(&pts, &CoverConfig::default()).unwrap();
        for c in cover.cubes() {
            let d = pts.iter().map(|x| c.cube.dist_point(x)).fold(f64::INFINITY, f64::min);
            if !(c.cube.diam() <= d && d <= 4.0 * c.cube.diam()) {
                dqe += 1;
            }
            let q9 = c.cube.dilate(9.0);
            if !pts.iter().any(|x| q9.contains(x)) {
                nine += 1;
            }
        }
        cubes += cover.len();
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(
        1,
        "Whitney cover",
        dqe == 0 && nine == 0 && secs < C1_SECONDS,
        &format!("{C1_INSTANCES} instances, {cubes} cubes, {dqe} size violations, {nine} 9Q violations, {secs:.2}s"),
        &[],
    );
}

#[test]
fn criterion_02_partition_of_unity() {
    let (mut worst, mut support, mut missing, mut total) = (0.0f64, 0usize, 0usize, 0usize);
    for (seed, (n, count)) in [(1, 6), (1, 20), (2, 6), (2, 15), (3, 4), (3, 8)].into_iter().enumerate() {
        let pts = points(200 + seed as u64, n, count);
        let cover = whitney_decompose(&pts, &CoverConfig::default()).unwrap();
        for (k, x) in covered_samples(&cover, C2_SAMPLES, seed as u64) {
            let tab = PouTable::at_home(&cover, k, &x, 0);
            let s: f64 = (0..tab.cubes.len()).map(|j| tab.row(j)[0]).sum();
            worst = worst.max((s - 1.0).abs());
            total += 1;
            // Every cube of the cover, bump evaluated from the 1-d profile.
            let mut prof = [0.0; 1];
            for (q, c) in cover.cubes().iter().enumerate() {
                let psi: f64 = (0..n)
                    .map(|i| {
                        profile_derivs((x[i] - c.cube.center[i]) / c.cube.r, 0, &mut prof);
                        prof[0]
                    })
                    .product();
                let inside = c.cube.center.dist(&x) < STAR * c.cube.r;
                if psi != 0.0 && !inside {
                    support += 1;
                }
                if psi != 0.0 && !tab.cubes.contains(&(q as u32)) {
                    missing += 1;
                }
            }
        }
    }
    verdict(
        2,
        "partition of unity",
        worst <= C2_SUM_TOL && support == 0 && missing == 0,
        &format!("{total} points, max |sum - 1| = {worst:.2e}, {support} bumps outside (9/8)Q, {missing} nonzero bumps missed"),
        &[],
    );
}

#[test]
fn criterion_03_projector() {
    let (mut containment, mut singletons, mut separation, mut lacunae) = (0usize, 0usize, 0usize, 0usize);
    let mut worst: f64 = 0.0;
    for seed in 0..60u64 {
        let n = 1 + (seed % 3) as usize;
        let count = 1 + (seed as usize * 11) % 20;
        let pts = points(300 + seed, n, count);
        let plan = plan_for(&pts);
        let (cover, lac) = (&plan.cover, &plan.lacunae);
        lacunae += lac.len();
        let mut has_singleton = vec![false; pts.len()];
        for l in lac.all() {
            let c = &pts[l.center as usize];
            for &q in &l.cubes {
                if !cover.cube(q as usize).cube.dilate(C3_GAMMA_TILDE).contains(c) {
                    containment += 1;
                }
            }
            if l.v.len() == 1 {
                if l.center == l.v[0] {
                    has_singleton[l.v[0] as usize] = true;
                } else {
                    singletons += 1;
                }
            }
        }
        singletons += has_singleton.iter().filter(|s| !**s).count();
        for c in lac.contacts() {
            let (a, b) = (lac.get(c.a as usize).center as usize, lac.get(c.b as usize).center as usize);
            if a == b {
                continue;
            }
            let sum = cover.cube(c.qa as usize).diam() + cover.cube(c.qb as usize).diam();
            let gap = pts[a].dist(&pts[b]);
            worst = worst.max(sum / gap);
            if sum > C3_GAMMA_TILDE * gap {
                separation += 1;
            }
        }
    }
    verdict(
        3,
        "lacunary projector",
        containment == 0 && singletons == 0 && separation == 0,
        &format!(
            "{lacunae} lacunae, {containment} centers outside 180Q, {singletons} singleton failures, \
             {separation} separation violations, max (diam Q + diam Q')/|Pr L - Pr L'| = {worst:.3}"
        ),
        &[],
    );
}

#[test]
fn criterion_04_graph() {
    let gamma = LacunaConstants::default().gamma;
    let mut ok = true;
    let mut records = Vec::new();
    let (mut disconnected, mut violations) = (0usize, 0usize);
    for n in 1..=3usize {
        let count = if n == 3 { 10 } else { 16 };
        let mut degs = Vec::new();
        let mut stretches = Vec::new();
        for batch in 0..3u64 {
            let (mut deg, mut st) = (0usize, 0.0f64);
            for k in 0..40u64 {
                let pts = points(400_000 + 10_000 * n as u64 + 1000 * batch + k, n, count);
                let plan = plan_for(&pts);
                let g = build_graph(&plan.cover, &plan.lacunae);
                if !g.is_connected() {
                    disconnected += 1;
                }
                violations += verify_sparse(&g, &pts, gamma).violations();
                deg = deg.max(g.max_degree());
                st = st.max(g.stretch(&pts));
            }
            degs.push(deg as f64);
            stretches.push(st);
        }
        let spread = |v: &[f64]| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x / mean - 1.0).abs()).fold(0.0, f64::max)
        };
        let (sd, ss) = (spread(&degs), spread(&stretches));
        ok &= sd < C4_SPREAD && ss < C4_SPREAD;
        records.push(format!(
            "n={n} |E|={count}: max degree per batch {degs:?} (spread {:.1}%), max stretch per batch {:?} (spread {:.1}%)",
            100.0 * sd,
            stretches.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>(),
            100.0 * ss
        ));
    }
    ok &= disconnected == 0 && violations == 0;
    verdict(
        4,
        "sparse graph",
        ok,
        &format!("{disconnected} disconnected graphs, {violations} certificate violations, batch maxima within ±20%: {ok}"),
        &records,
    );
}

#[test]
fn criterion_05_polynomial_reproduction() {
    let mut ok = true;
    let mut records = Vec::new();
    let cases = [(1usize, 1usize, 8usize, 257usize), (1, 3, 8, 257), (2, 1, 6, 33), (2, 2, 6, 33), (2, 3, 4, 33), (3, 2, 3, 9)];
    for (n, m, count, grid) in cases {
        let t0 = Instant::now();
        let mut r = rng(500 + 10 * n as u64 + m as u64);
        let pts = random_points(&mut r, n, count, 1e-3).unwrap();
        let f = polynomial_field(&mut r, &pts, m, 2.0 * n as f64).unwrap();
        let g = f.jet(0).clone();
        // The same field with every jet expanded at its own point, so the
        // blend of differently rounded jets is exercised too.
        let rebased = JetField::new(pts.clone(), pts.iter().map(|x| g.rebase(x)).collect(), m, f.p).unwrap();
        let plan = plan_for(&pts);
        let ext = Extension::new(&plan, &f).unwrap();
        let ext_r = Extension::new(&plan, &rebased).unwrap();
        let t = table(n, m - 1);
        let w = *plan.cover.window();
        let (mut err, mut err_r, mut scale, mut skipped) = (0.0f64, 0.0f64, 0.0f64, 0usize);
        let mut want = vec![0.0; t.len()];
        let total = grid.pow(n as u32);
        for idx in 0..total {
            let mut rest = idx;
            let c: Vec<f64> = (0..n)
                .map(|i| {
                    let k = rest % grid;
                    rest /= grid;
                    w.lower(i) + 2.0 * w.r * k as f64 / (grid - 1) as f64
                })
                .collect();
            let x = Point::new(&c).unwrap();
            let (Ok(got), Ok(got_r)) = (ext.derivs(&x, m - 1), ext_r.derivs(&x, m - 1)) else {
                skipped += 1;
                continue;
            };
            g.derivs_at(&x, &mut want);
            for k in 0..t.len() {
                err = err.max((got[k] - want[k]).abs());
                err_r = err_r.max((got_r[k] - want[k]).abs());
                scale = scale.max(want[k].abs());
            }
        }
        let sob = sobolev_seminorm(&ext, f.p, &QuadSpec::for_m(m)).unwrap();
        let secs = t0.elapsed().as_secs_f64();
        let (rel, rel_r) = (err / scale, err_r / scale);
        let pass = rel <= C5_REL && rel_r <= C5_REL && sob.value <= C5_FLOOR && secs < C5_SECONDS;
        ok &= pass;
        records.push(format!(
            "n={n} m={m} |E|={count}: grid {total} ({skipped} in collar), max rel error {rel:.2e} \
             (rebased jets {rel_r:.2e}), seminorm {:.2e}, {secs:.2}s",
            sob.value
        ));
    }
    verdict(5, "polynomial reproduction", ok, "grid error, seminorm and runtime per instance", &records);
}

// ---------------------------------------------------------------------------
// Instance bank shared by criteria 6 and 7.

struct BankRow {
    n: usize,
    m: usize,
    count: usize,
    ps: Vec<f64>,
    /// `sobolev / graph` per instance and exponent.
    sobolev: Vec<Vec<f64>>,
    /// `‖P^♯‖_{L_p} / graph` per instance and exponent.
    sharp: Vec<Vec<f64>>,
    checked: usize,
    errors: Vec<String>,
}

fn bank() -> &'static Vec<BankRow> {
    static BANK: OnceLock<Vec<BankRow>> = OnceLock::new();
    BANK.get_or_init(|| {
        let mut rows = Vec::new();
        for n in 1..=2usize {
            let base = if n == 1 { 8 } else { 4 };
            for m in 1..=3usize {
                for count in [base, 2 * base] {
                    rows.push(bank_row(n, m, count));
                }
            }
        }
        rows
    })
}

fn bank_row(n: usize, m: usize, count: usize) -> BankRow {
    let ps = exponents(n);
    let mut row = BankRow {
        n,
        m,
        count,
        ps: ps.clone(),
        sobolev: Vec::new(),
        sharp: Vec::new(),
        checked: 0,
        errors: Vec::new(),
    };
    for k in 0..BANK_INSTANCES {
        let seed = 600_000 + 100_000 * n as u64 + 10_000 * m as u64 + 1000 * count as u64 + k;
        let f = random_instance(seed, n, m, ps[0], count).unwrap();
        let plan = plan_for(f.points());
        let g = build_graph(&plan.cover, &plan.lacunae);
        let ext = Extension::new(&plan, &f).unwrap();
        // The order-disagreement check runs on the first instances only.
        let mut quad = QuadSpec::for_m(m);
        if k >= 3 {
            quad.check_order = None;
        } else {
            row.checked += 1;
        }
        let sob = match sobolev_seminorms(&ext, &ps, &quad) {
            Ok(s) => s,
            Err(e) => {
                row.errors.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let (mut rs, mut rm) = (Vec::new(), Vec::new());
        for (j, &p) in ps.iter().enumerate() {
            let gs = graph_seminorm(&g, &f, p).unwrap();
            let mut fp = f.clone();
            fp.p = p;
            let sm = sharp_max_lp(&fp, &plan.cover, quad.order).unwrap().value;
            rs.push(sob[j].value / gs);
            rm.push(sm / gs);
        }
        row.sobolev.push(rs);
        row.sharp.push(rm);
    }
    row
}

/// Checks windows per `(n, m, p)` and their growth from `|E|` to `2|E|`.
fn window_table(pick: impl Fn(&BankRow) -> &Vec<Vec<f64>>) -> (bool, Vec<String>) {
    let rows = bank();
    let mut ok = true;
    let mut records = Vec::new();
    for pair in rows.chunks(2) {
        let (a, b) = (&pair[0], &pair[1]);
        ok &= a.errors.is_empty() && b.errors.is_empty();
        for e in a.errors.iter().chain(&b.errors) {
            records.push(format!("error: {e}"));
        }
        for (j, p) in a.ps.iter().enumerate() {
            let wa = Window::of(&pick(a).iter().map(|r| r[j]).collect::<Vec<_>>());
            let wb = Window::of(&pick(b).iter().map(|r| r[j]).collect::<Vec<_>>());
            let pass = wa.finite() && wb.finite() && wb.c() <= WINDOW_GROWTH * wa.c();
            ok &= pass;
            records.push(format!(
                "n={} m={} p={p}: |E|={} [{:.3e}, {:.3e}] C={:.3e}; |E|={} [{:.3e}, {:.3e}] C={:.3e}; growth {:.3}{}",
                a.n,
                a.m,
                a.count,
                wa.lo,
                wa.hi,
                wa.c(),
                b.count,
                wb.lo,
                wb.hi,
                wb.c(),
                wb.c() / wa.c(),
                if pass { "" } else { "  <-- FAIL" }
            ));
        }
    }
    (ok, records)
}

#[test]
fn criterion_06_two_sided_equivalence() {
    let (ok, records) = window_table(|r| &r.sobolev);
    let checked: usize = bank().iter().map(|r| r.checked).sum();
    let instances: usize = bank().iter().map(|r| r.sobolev.len()).sum();
    verdict(
        6,
        "sobolev / graph ratio windows",
        ok,
        &format!("{instances} instances, {checked} with the quadrature order check, window growth under doubling <= {WINDOW_GROWTH}"),
        &records,
    );
}

#[test]
fn criterion_07_sharp_maximal() {
    let (ok, records) = window_table(|r| &r.sharp);
    verdict(
        7,
        "sharp maximal / graph ratio windows",
        ok,
        &format!("same bank, window growth under doubling <= {WINDOW_GROWTH}"),
        &records,
    );
}

#[test]
fn criterion_08_m1_consistency() {
    let mut ok = true;
    let mut records = Vec::new();
    let mut mismatches = 0usize;
    let mut compared = 0usize;
    let gammas = [1.0, 3.0, LacunaConstants::default().gamma];
    for n in 1..=2usize {
        for &p in &exponents(n) {
            let mut windows = Vec::new();
            for count in [3usize, 6] {
                let mut ratios = Vec::new();
                for k in 0..20u64 {
                    let seed = 800_000 + 10_000 * n as u64 + 100 * count as u64 + k + (p as u64) * 1000;
                    let f = random_instance(seed, n, 1, p, count).unwrap();
                    let vals = f.values();
                    for &gamma in &gammas {
                        let a = trace_norm_bruteforce(&f, p, gamma).unwrap();
                        let b = phi_m1(f.points(), &vals, p, gamma).unwrap();
                        compared += 1;
                        if a.value != b.value {
                            mismatches += 1;
                        }
                    }
                    let phi = phi_m1(f.points(), &vals, p, LacunaConstants::default().gamma).unwrap().value;
                    let plan = plan_for(f.points());
                    let psi = psi_m1(f.points(), &vals, p, &plan.cover, QuadSpec::for_m(1).order).unwrap().value;
                    ratios.push(phi / psi);
                }
                windows.push(Window::of(&ratios));
            }
            let (wa, wb) = (windows[0], windows[1]);
            let pass = wa.finite() && wb.finite() && wb.c() <= WINDOW_GROWTH * wa.c();
            ok &= pass;
            records.push(format!(
                "n={n} p={p}: Phi/Psi |E|=3 [{:.3}, {:.3}], |E|=6 [{:.3}, {:.3}], C {:.3} -> {:.3}",
                wa.lo,
                wa.hi,
                wb.lo,
                wb.hi,
                wa.c(),
                wb.c()
            ));
        }
    }
    ok &= mismatches == 0;
    verdict(
        8,
        "m = 1 consistency",
        ok,
        &format!("{compared} brute-force/Phi comparisons, {mismatches} mismatches"),
        &records,
    );
}

#[test]
fn criterion_09_metric_factor() {
    let t0 = Instant::now();
    let mut ok = true;
    let mut records = Vec::new();
    for n in 1..=2usize {
        let mut r = rng(900 + n as u64);
        let dom = Cube::new(Point::new(&vec![0.5; n]).unwrap(), 0.5).unwrap();
        let h = random_density(&mut r, dom, C9_RES, n as f64, 0.3).unwrap();
        let qs: Vec<Point> = (0..2 * C9_PAIRS)
            .map(|_| Point::new(&(0..n).map(|_| r.gen::<f64>()).collect::<Vec<_>>()).unwrap())
            .collect();
        let mut slack = Vec::new();
        for factor in [1usize, 2] {
            let s = MetricSample::build(PreMetric::new(h.refine(factor).unwrap()), &qs, 4.0).unwrap();
            let mut worst: f64 = 0.0;
            for k in 0..C9_PAIRS {
                let (i, j) = (s.extra(2 * k), s.extra(2 * k + 1));
                let d = s.geodesic(i, j);
                if d > 0.0 {
                    worst = worst.max(s.rho(i, j) / d);
                }
            }
            slack.push((worst, (worst / C9_FACTOR - 1.0).max(0.0)));
        }
        let pass = slack[0].0 <= C9_FACTOR * (1.0 + C9_SLACK) && slack[1].1 <= slack[0].1;
        ok &= pass;
        records.push(format!(
            "n={n}: worst rho/d at {}^n = {:.4} (slack needed {:.3}), at {}^n = {:.4} (slack needed {:.3})",
            C9_RES, slack[0].0, slack[0].1, 2 * C9_RES, slack[1].0, slack[1].1
        ));
    }
    let secs = t0.elapsed().as_secs_f64();
    ok &= secs < C9_SECONDS;
    verdict(
        9,
        "metric factor 16",
        ok,
        &format!("{C9_PAIRS} pairs per dimension, slack {C9_SLACK}, {secs:.2}s"),
        &records,
    );
}

#[test]
fn criterion_10_mcshane() {
    let mut ok = true;
    let (mut worst, mut moved) = (0.0f64, 0usize);
    for k in 0..20u64 {
        let n = 1 + (k % 3) as usize;
        let mut r = rng(1000 + k);
        let pts = random_points(&mut r, n, 4 + k as usize % 10, 1e-3).unwrap();
        let f: Vec<f64> = pts.iter().map(|_| r.gen::<f64>() * 2.0 - 1.0).collect();
        let e = LipschitzExtension::new(&pts, &f).unwrap();
        let lip = lipschitz_constant(&pts, &f);
        moved += pts.iter().zip(&f).filter(|(x, v)| e.eval(x) != **v).count();
        let samples: Vec<Point> = (0..400)
            .map(|_| Point::new(&(0..n).map(|_| r.gen::<f64>() * 1.5 - 0.25).collect::<Vec<_>>()).unwrap())
            .collect();
        let vals: Vec<f64> = samples.iter().map(|x| e.eval(x)).collect();
        for a in 0..samples.len() {
            for b in a + 1..samples.len() {
                let q = (vals[a] - vals[b]).abs() / samples[a].dist_euclid(&samples[b]);
                worst = worst.max(q / lip);
            }
        }
    }
    ok &= moved == 0 && worst <= 1.0 + C10_LIP;
    verdict(
        10,
        "McShane exactness",
        ok,
        &format!("{moved} points with F != f, max sampled Lip(F)/Lip(f) = {worst:.9}"),
        &[],
    );
}

#[test]
fn criterion_11_truncated_extension() {
    let mut ok = true;
    let mut records = Vec::new();
    let (mut inner, mut outer, mut inner_bad, mut outer_bad) = (0usize, 0usize, 0usize, 0usize);
    for (m, p) in [(1usize, 2.0), (2, 2.0), (2, 4.0)] {
        let mut windows = Vec::new();
        for count in [4usize, 8] {
            let mut ratios = Vec::new();
            for k in 0..8u64 {
                let eps = [0.5, 0.05][k as usize % 2];
                let seed = 1_100_000 + 1000 * m as u64 + 100 * count as u64 + k;
                let f = random_instance(seed, 1, m, p, count).unwrap();
                let mut cfg = PlanConfig::default();
                let window = default_window(f.points(), cfg.cover.inflate).unwrap();
                cfg.cover.depth_cap = Some(wmp_depth(&window, eps));
                let plan = ExtensionPlan::build(f.points(), &cfg).unwrap();
                let full = Extension::new(&plan, &f).unwrap();
                let ext = Extension::truncated(&plan, &f, eps).unwrap();
                let delta = ext.delta().unwrap();
                let mut r = rng(seed);
                for a in f.points() {
                    for _ in 0..50 {
                        let x = Point::new(&[a[0] + (r.gen::<f64>() - 0.5) * 0.5 * delta]).unwrap();
                        let (Ok(u), Ok(v)) = (full.derivs(&x, m - 1), ext.derivs(&x, m - 1)) else {
                            continue;
                        };
                        inner += 1;
                        if u != v {
                            inner_bad += 1;
                        }
                    }
                }
                for _ in 0..500 {
                    let x = Point::new(&[window.lower(0) + 2.0 * window.r * r.gen::<f64>()]).unwrap();
                    let d = f.points().iter().map(|a| a.dist(&x)).fold(f64::INFINITY, f64::min);
                    if d < 20.0 * delta {
                        continue;
                    }
                    outer += 1;
                    if ext.derivs(&x, m - 1).unwrap().iter().any(|v| *v != 0.0) {
                        outer_bad += 1;
                    }
                }
                let parts = wmp_norm_parts(&plan, &f, eps, LacunaConstants::default().gamma).unwrap();
                let quad = QuadSpec::for_m(m);
                let s = sobolev_seminorm(&ext, p, &quad).unwrap().value;
                let l = extension_lp_norm(&ext, p, &quad).unwrap().value;
                ratios.push(parts.total / (s + l));
            }
            windows.push(Window::of(&ratios));
        }
        let (wa, wb) = (windows[0], windows[1]);
        let pass = wa.finite() && wb.finite() && wb.c() <= WINDOW_GROWTH * wa.c();
        ok &= pass;
        records.push(format!(
            "n=1 m={m} p={p}: total/numeric |E|=4 [{:.3e}, {:.3e}], |E|=8 [{:.3e}, {:.3e}], C {:.3e} -> {:.3e}",
            wa.lo,
            wa.hi,
            wb.lo,
            wb.hi,
            wa.c(),
            wb.c()
        ));
    }
    ok &= inner_bad == 0 && outer_bad == 0 && inner > 0 && outer > 0;
    verdict(
        11,
        "truncated extension",
        ok,
        &format!("{inner} points within delta/4 ({inner_bad} differ), {outer} points beyond 20 delta ({outer_bad} nonzero)"),
        &records,
    );
}

#[test]
fn criterion_12_linearity() {
    let mut worst_lin: f64 = 0.0;
    let mut worst_hom: f64 = 0.0;
    let mut families_moved = 0usize;
    let mut records = Vec::new();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    for (n, m, count) in [(1, 1, 6), (1, 3, 6), (2, 1, 5), (2, 2, 5), (2, 3, 4), (3, 2, 3)] {
        let p = 2.0 * n as f64;
        let mut r = rng(1200 + 10 * n as u64 + m as u64);
        let pts = random_points(&mut r, n, count, 1e-3).unwrap();
        let f = random_field(&mut r, &pts, m, p).unwrap();
        let g = random_field(&mut r, &pts, m, p).unwrap();
        let (a, b) = (0.75, -2.5);
        let mix = f.combine(a, &g, b).unwrap();
        let plan = plan_for(&pts);
        let (ef, eg, em) = (
            Extension::new(&plan, &f).unwrap(),
            Extension::new(&plan, &g).unwrap(),
            Extension::new(&plan, &mix).unwrap(),
        );
        let mut scale: f64 = 0.0;
        let mut err: f64 = 0.0;
        for (k, x) in covered_samples(&plan.cover, 300, 12) {
            let (u, v, w) = (ef.derivs_in(k, &x, m), eg.derivs_in(k, &x, m), em.derivs_in(k, &x, m));
            for j in 0..u.len() {
                err = err.max((w[j] - a * u[j] - b * v[j]).abs());
                scale = scale.max((a * u[j]).abs() + (b * v[j]).abs());
            }
        }
        worst_lin = worst_lin.max(err / scale);

        // Homogeneity of every functional under f -> c f.
        let c = -3.25;
        let fc = f.scale(c);
        let graph = build_graph(&plan.cover, &plan.lacunae);
        let quad = QuadSpec { check_order: None, ..QuadSpec::for_m(m) };
        let ec = Extension::new(&plan, &fc).unwrap();
        let gamma = LacunaConstants::default().gamma;
        let mut pairs: Vec<(&str, f64, f64)> = vec![
            ("graph", graph_seminorm(&graph, &f, p).unwrap(), graph_seminorm(&graph, &fc, p).unwrap()),
            (
                "wmp",
                wmp_norm_parts(&plan, &f, 0.5, gamma).unwrap().total,
                wmp_norm_parts(&plan, &fc, 0.5, gamma).unwrap().total,
            ),
        ];
        // Quadrature over a 3-d cover takes minutes; the functionals below
        // are checked in one and two dimensions.
        if n < 3 {
            pairs.push((
                "sobolev",
                sobolev_seminorm(&ef, p, &quad).unwrap().value,
                sobolev_seminorm(&ec, p, &quad).unwrap().value,
            ));
            pairs.push((
                "sharp",
                sharp_max_lp(&f, &plan.cover, quad.order).unwrap().value,
                sharp_max_lp(&fc, &plan.cover, quad.order).unwrap().value,
            ));
        }
        let (bf, bc) = (trace_norm_bruteforce(&f, p, gamma).unwrap(), trace_norm_bruteforce(&fc, p, gamma).unwrap());
        let bp = trace_norm_bruteforce(&f.scale(2.0), p, gamma).unwrap();
        if bp.pairs != bf.pairs {
            families_moved += 1;
        }
        pairs.push(("bruteforce", bf.value, bc.value));
        if m == 1 {
            let vals = f.values();
            let valc: Vec<f64> = vals.iter().map(|v| c * v).collect();
            pairs.push((
                "psi",
                psi_m1(&pts, &vals, p, &plan.cover, quad.order).unwrap().value,
                psi_m1(&pts, &valc, p, &plan.cover, quad.order).unwrap().value,
            ));
        }
        for (name, u, v) in pairs {
            let e = rel(c.abs() * u, v);
            worst_hom = worst_hom.max(e);
            records.push(format!("n={n} m={m} {name}: {e:.2e}"));
        }
    }
    verdict(
        12,
        "linearity",
        worst_lin <= C12_REL && worst_hom <= C12_REL && families_moved == 0,
        &format!(
            "max relative linearity error {worst_lin:.2e}, max relative homogeneity error {worst_hom:.2e}, \
             {families_moved} brute-force maximizers changed under scaling"
        ),
        &records,
    );
}
