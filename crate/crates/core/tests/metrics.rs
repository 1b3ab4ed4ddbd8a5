use jetext::geometry::{Cube, Point};
use jetext::metrics::{
    geodesic_dq, lipschitz_constant, mcshane_extend, sharp_max_m1, DensityField, L1pExtension, LipschitzExtension,
    PreMetric,
};
use jetext::random::{random_density, random_points, rng};
use jetext::seminorms::phi_m1;
use rand::Rng;

fn pt(c: &[f64]) -> Point {
    Point::new(c).unwrap()
}

fn unit_box(n: usize) -> Cube {
    Cube::new(pt(&vec![0.5; n]), 0.5).unwrap()
}

fn random_in(r: &mut impl Rng, c: &Cube) -> Point {
    let v: Vec<f64> = (0..c.dim()).map(|i| c.lower(i) + 2.0 * c.r * r.gen::<f64>()).collect();
    pt(&v)
}

#[test]
fn constant_density_gives_a_scaled_norm() {
    let h = DensityField::constant(unit_box(2), 8, 2.0, 3.0).unwrap();
    let pre = PreMetric::new(h.clone());
    let mut r = rng(1);
    for _ in 0..50 {
        let (x, y) = (random_in(&mut r, &unit_box(2)), random_in(&mut r, &unit_box(2)));
        let want = 3.0 * x.dist(&y);
        assert!((pre.rho(&x, &y).unwrap() - want).abs() <= 1e-12 * want.max(1.0));
        assert_eq!(pre.rho(&x, &x).unwrap(), 0.0);
    }
    let (x, y) = (pt(&[0.1, 0.2]), pt(&[0.8, 0.5]));
    let d = geodesic_dq(&x, &y, &h, 2.0).unwrap();
    assert!((d - 3.0 * 0.7).abs() <= 1e-12);
}

/// `|Q ∩ [0,1]^2| / |Q|` for the square with lower corner `a` and side `s`.
fn unit_square_fraction(a: [f64; 2], s: f64) -> f64 {
    let overlap = |lo: f64| (lo + s).min(1.0).max(0.0) - lo.max(0.0).min(1.0);
    overlap(a[0]).max(0.0) * overlap(a[1]).max(0.0) / (s * s)
}

#[test]
fn indicator_of_the_unit_square() {
    // box [-2, 4]^2 with unit cells, h = 1 on [0, 1]^2
    let dom = Cube::new(pt(&[1.0, 1.0]), 3.0).unwrap();
    let h = DensityField::from_fn(dom, 6, 2.0, |x| f64::from(x[0] < 1.0 && x[0] > 0.0 && x[1] < 1.0 && x[1] > 0.0))
        .unwrap();
    let (x, y) = (pt(&[0.0, 0.0]), pt(&[2.0, 0.0]));
    let got = PreMetric::new(h).rho(&x, &y).unwrap();

    // every square on a grid four times finer that holds x and y
    let step = 0.25;
    let mut best: f64 = 0.0;
    for i in 0..24 {
        for j in 0..24 {
            let a = [-2.0 + i as f64 * step, -2.0 + j as f64 * step];
            for k in 1..=24 {
                let s = k as f64 * step;
                let inside = |p: &Point| (0..2).all(|d| p[d] >= a[d] && p[d] <= a[d] + s);
                if a[0] + s > 4.0 || a[1] + s > 4.0 || !inside(&x) || !inside(&y) {
                    continue;
                }
                best = best.max(unit_square_fraction(a, s).sqrt());
            }
        }
    }
    let want = 2.0 * best;
    assert_eq!(want, 1.0);
    assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
}

#[test]
fn profile_of_a_constant() {
    let h = DensityField::constant(unit_box(2), 16, 2.0, 1.5).unwrap();
    let pre = PreMetric::new(h);
    let prof = pre.profile(&pt(&[0.5, 0.5]), 6).unwrap();
    for ((t, v), w) in prof.t.iter().zip(&prof.v).zip(&prof.omega) {
        assert!((v - 1.5 * t).abs() <= 1e-12 && (w - 1.5 * t).abs() <= 1e-12);
    }
}

#[test]
fn rho_is_sandwiched_by_the_profile() {
    let ratio: f64 = 1.01;
    for (n, q) in [(1usize, 1.0), (2, 2.0), (2, 3.0)] {
        let mut r = rng(20 + n as u64);
        let h = random_density(&mut r, unit_box(n), 16, q, 0.3).unwrap();
        let pre = PreMetric::new(h);
        for _ in 0..200 {
            let (x, y) = (random_in(&mut r, &unit_box(n)), random_in(&mut r, &unit_box(n)));
            let d = x.dist(&y);
            let rho = pre.rho(&x, &y).unwrap();
            let below = pre.v_at(&x, d, 2.0).unwrap();
            let fine = pre.v_at(&x, d, ratio).unwrap();
            assert!(below <= rho * (1.0 + 1e-12));
            assert!(rho <= 2.0 * ratio.powf(n as f64 / q) * fine * (1.0 + 1e-12), "{rho} vs {fine}");
        }
    }
}

#[test]
fn sampled_profiles_are_monotone() {
    let mut r = rng(5);
    for _ in 0..10 {
        let h = random_density(&mut r, unit_box(2), 16, 2.0, 0.5).unwrap();
        let pre = PreMetric::new(h);
        let x = random_in(&mut r, &unit_box(2));
        let rep = pre.profile(&x, 8).unwrap().check();
        assert!(rep.is_clean(), "{rep:?}");
    }
}

#[test]
fn pre_metric_is_controlled_by_chains() {
    const SLACK: f64 = 0.05;
    let mut r = rng(9);
    let h = random_density(&mut r, unit_box(2), 16, 2.0, 0.3).unwrap();
    let pre = PreMetric::new(h.clone());
    for _ in 0..100 {
        let mut chain = vec![random_in(&mut r, &unit_box(2))];
        for _ in 0..r.gen_range(1..6) {
            chain.push(random_in(&mut r, &unit_box(2)));
        }
        let (x, y) = (chain[0], *chain.last().unwrap());
        let sum: f64 = chain.windows(2).map(|w| pre.rho(&w[0], &w[1]).unwrap()).sum();
        assert!(pre.rho(&x, &y).unwrap() <= 16.0 * sum * (1.0 + SLACK));
    }
    for _ in 0..5 {
        let (x, y) = (random_in(&mut r, &unit_box(2)), random_in(&mut r, &unit_box(2)));
        let d = geodesic_dq(&x, &y, &h, 3.0).unwrap();
        assert!(pre.rho(&x, &y).unwrap() <= 16.0 * d * (1.0 + SLACK));
    }
}

#[test]
fn mcshane_on_the_set_and_between_two_points() {
    let e = vec![pt(&[0.0]), pt(&[1.0])];
    let f = [0.0, 1.0];
    for (i, x) in e.iter().enumerate() {
        assert_eq!(mcshane_extend(&f, |k| x.dist(&e[k])).unwrap(), f[i]);
    }
    for k in 0..=20 {
        let x = pt(&[k as f64 / 20.0]);
        let v = mcshane_extend(&f, |j| x.dist(&e[j])).unwrap();
        assert!((v - x[0]).abs() <= 1e-15);
    }
}

#[test]
fn lipschitz_extension_keeps_the_constant() {
    let mut r = rng(12);
    let e = random_points(&mut r, 2, 8, 1e-2).unwrap();
    let f: Vec<f64> = (0..8).map(|_| r.gen_range(-1.0..1.0)).collect();
    let ext = LipschitzExtension::new(&e, &f).unwrap();
    let lip = lipschitz_constant(&e, &f);
    for (x, v) in e.iter().zip(&f) {
        assert_eq!(ext.eval(x), *v);
    }
    let box2 = Cube::new(pt(&[0.5, 0.5]), 1.0).unwrap();
    let samples: Vec<Point> = (0..400).map(|_| random_in(&mut r, &box2)).collect();
    let vals: Vec<f64> = samples.iter().map(|x| ext.eval(x)).collect();
    let sampled = lipschitz_constant(&samples, &vals);
    assert!(sampled <= lip * (1.0 + 1e-9));
}

#[test]
fn l1p_of_a_constant() {
    let e = vec![pt(&[0.2, 0.3]), pt(&[0.7, 0.6]), pt(&[0.4, 0.9])];
    let f = [2.0; 3];
    assert_eq!(sharp_max_m1(&e, &f, &pt(&[0.5, 0.5])), 0.0);
    let ext = L1pExtension::new(&e, &f, 3.0, unit_box(2), 16).unwrap();
    assert!(ext.density().values().iter().all(|&v| v == 0.0));
    let mut r = rng(2);
    for _ in 0..50 {
        assert_eq!(ext.eval(&random_in(&mut r, &unit_box(2))).unwrap(), 2.0);
    }
}

#[test]
fn l1p_extends_the_data() {
    let mut r = rng(31);
    let e = random_points(&mut r, 2, 6, 1e-2).unwrap();
    let f: Vec<f64> = (0..6).map(|_| r.gen_range(-1.0..1.0)).collect();
    let ext = L1pExtension::new(&e, &f, 3.0, unit_box(2), 16).unwrap();
    let back: Vec<f64> = e.iter().map(|x| ext.eval(x).unwrap()).collect();
    for (a, b) in back.iter().zip(&f) {
        assert!((a - b).abs() <= 1e-12);
    }
    let gamma = 1.8e6;
    let phi_f = phi_m1(&e, &f, 3.0, gamma).unwrap().value;
    let phi_back = phi_m1(&e, &back, 3.0, gamma).unwrap().value;
    assert!((phi_f - phi_back).abs() <= 1e-9 * phi_f);
}
