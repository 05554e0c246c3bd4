use super::*;
use crate::kernels::{mittag_leffler, MittagLefflerParams};
use proptest::prelude::*;

fn order(a: f64) -> FractionalOrder {
    FractionalOrder::new(a).unwrap()
}

fn bump(x: f64, c: f64, w: f64) -> f64 {
    let s = (x - c) / w;
    if s.abs() < 1.0 {
        (1.0 - s * s).powi(2)
    } else {
        0.0
    }
}

fn spec_1d(cells: usize, m: usize, t_end: f64) -> ProblemSpec {
    let space = SpaceGrid::new_1d(0.0, 1.0, cells).unwrap();
    let time = TimeGrid::covering(t_end, m).unwrap();
    let coeff = CoefficientField::constant(&space, 1.0).unwrap();
    let u0 = ProblemSpec::u0_from_fn(&space, |p| bump(p[0], 0.5, 0.3));
    ProblemSpec::new(order(0.5), space, time, u0, coeff)
}

#[test]
fn constants_are_preserved() {
    for space in [
        SpaceGrid::new_1d(-1.0, 2.0, 9).unwrap(),
        SpaceGrid::new_2d((0.0, 1.0, 6), (0.0, 2.0, 7)).unwrap(),
    ] {
        let time = TimeGrid::covering(1.0, 20).unwrap();
        let coeff = checkerboard_coefficients(&space, 2, 1.0, 5.0, Some(3)).unwrap();
        let u0 = vec![2.5; space.cells()];
        let spec = ProblemSpec::new(order(0.3), space, time, u0, coeff)
            .with_boundary(constant_field(2.5));
        let r = solve_subdiffusion(&spec).unwrap();
        for level in &r.u {
            assert!(level.iter().all(|v| (v - 2.5).abs() < 1e-12));
        }
    }
}

fn backward_euler_heat(cells: usize, m: usize, t_end: f64, u0: &[f64]) -> Vec<f64> {
    // standard cell-centred Laplacian with ghost-free Dirichlet rows, dense elimination
    let h = 1.0 / cells as f64;
    let dt = t_end / m as f64;
    let n = cells;
    let mut u = u0.to_vec();
    for _ in 0..m {
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            let left = if i == 0 { 2.0 } else { 1.0 };
            let right = if i == n - 1 { 2.0 } else { 1.0 };
            a[i][i] = 1.0 / dt + (left + right) / (h * h);
            if i > 0 {
                a[i][i - 1] = -1.0 / (h * h);
            }
            if i + 1 < n {
                a[i][i + 1] = -1.0 / (h * h);
            }
        }
        let mut b: Vec<f64> = u.iter().map(|v| v / dt).collect();
        for k in 0..n {
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                if f == 0.0 {
                    continue;
                }
                let (top, bottom) = a.split_at_mut(i);
                for (x, y) in bottom[0][k..].iter_mut().zip(&top[k][k..]) {
                    *x -= f * y;
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        u = x;
    }
    u
}

#[test]
fn near_classical_order_matches_heat_equation() {
    let mut spec = spec_1d(40, 200, 0.05);
    spec.alpha = order(0.999);
    let r = solve_subdiffusion(&spec).unwrap();
    let heat = backward_euler_heat(40, 200, 0.05, &spec.u0);
    let last = r.level(200);
    let max = heat.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = (0..40).map(|i| (last[i + 1] - heat[i]).abs()).fold(0.0, f64::max);
    assert!(diff / max < 0.02, "relative discrepancy {}", diff / max);
}

#[test]
fn scalar_relaxation_examples() {
    let time = TimeGrid::covering(1.0, 100).unwrap();
    let p = solve_scalar_relaxation(order(0.5), 0.0, 3.0, time).unwrap();
    assert!(p.values().iter().all(|v| *v == 3.0));

    let err = |m: usize| {
        let time = TimeGrid::covering(1.0, m).unwrap();
        let p = solve_scalar_relaxation(FractionalOrder::classical(), 2.0, 1.0, time).unwrap();
        (p.values()[m] - (-2.0f64).exp()).abs()
    };
    assert!(err(200) < 5e-3 && err(400) < err(200));

    let time = TimeGrid::covering(1.0, 256).unwrap();
    let p = solve_scalar_relaxation(order(0.5), 1.0, 1.0, time).unwrap();
    let exact = std::f64::consts::E * crate::special::erfc(1.0);
    assert!((p.values()[256] - exact).abs() < 2e-3);
}

#[test]
fn scalar_relaxation_order() {
    let exact = mittag_leffler(MittagLefflerParams::new(0.5, 1.0).unwrap(), -1.0).unwrap();
    let err = |m: usize| {
        let time = TimeGrid::covering(1.0, m).unwrap();
        let p = solve_scalar_relaxation(order(0.5), 1.0, 1.0, time).unwrap();
        (p.values()[m] - exact).abs()
    };
    let (e1, e2, e3) = (err(64), err(128), err(256));
    for o in [(e1 / e2).log2(), (e2 / e3).log2()] {
        assert!((1.2..=1.8).contains(&o), "order {o}");
    }
}

#[test]
fn spatially_uniform_relaxation_through_pde() {
    let params = MittagLefflerParams::new(0.5, 1.0).unwrap();
    let err = |m: usize| {
        let space = SpaceGrid::new_1d(0.0, 1.0, 8).unwrap();
        let time = TimeGrid::covering(1.0, m).unwrap();
        let coeff = CoefficientField::constant(&space, 1.0).unwrap();
        let exact: ScalarField =
            Arc::new(move |t, _| mittag_leffler(params, -t.sqrt()).unwrap());
        let spec = ProblemSpec::new(order(0.5), space, time, vec![1.0; 8], coeff)
            .with_reaction(1.0)
            .with_boundary(exact)
            .with_variant(L1Variant::Corrected);
        let r = solve_subdiffusion(&spec).unwrap();
        let e = mittag_leffler(params, -1.0).unwrap();
        (r.level(m)[4] - e).abs() / e
    };
    let (a, b, c) = (err(64), err(128), err(256));
    let o1 = (a / b).log2();
    let o2 = (b / c).log2();
    assert!(o1 > 1.2 && o2 > 1.2, "orders {o1} {o2}");
}

fn random_spec(seed: u64, two_d: bool) -> ProblemSpec {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let space = if two_d {
        SpaceGrid::new_2d((0.0, 1.0, rng.gen_range(4..9)), (0.0, 1.0, rng.gen_range(4..9))).unwrap()
    } else {
        SpaceGrid::new_1d(0.0, 1.0, rng.gen_range(4..30)).unwrap()
    };
    let time = TimeGrid::covering(rng.gen_range(0.1..2.0), rng.gen_range(2..25)).unwrap();
    let low = rng.gen_range(0.1..2.0);
    let high = low * rng.gen_range(1.0..10.0);
    let coeff = checkerboard_coefficients(&space, rng.gen_range(1..4), low, high, Some(rng.gen_range(1..5))).unwrap();
    let u0: Vec<f64> = (0..space.cells()).map(|_| rng.gen_range(-1.0..3.0)).collect();
    let g: f64 = rng.gen_range(-1.0..3.0);
    let alpha = order(rng.gen_range(0.05..0.95));
    ProblemSpec::new(alpha, space, time, u0, coeff)
        .with_boundary(Arc::new(move |t, p| g * (1.0 + t).sin().abs() + 0.1 * p[0]))
}

#[test]
fn discrete_maximum_principle_random_runs() {
    for seed in 0..40 {
        let spec = random_spec(seed, seed % 2 == 1);
        let r = solve_subdiffusion(&spec).unwrap();
        let (lo, hi) = r.data_bounds();
        for level in &r.u {
            for v in level {
                assert!(*v >= lo - 1e-10 && *v <= hi + 1e-10, "seed {seed}: {v} not in [{lo}, {hi}]");
            }
        }
    }
}

#[test]
fn monotone_in_initial_data() {
    let spec = random_spec(3, false);
    let mut bigger = spec.clone();
    bigger.u0.iter_mut().enumerate().for_each(|(i, v)| *v += 0.1 * (i % 3) as f64);
    let a = solve_subdiffusion(&spec).unwrap();
    let b = solve_subdiffusion(&bigger).unwrap();
    for (la, lb) in a.u.iter().zip(&b.u) {
        for (x, y) in la.iter().zip(lb) {
            assert!(*y >= *x - 1e-10);
        }
    }
}

#[test]
fn scaling_covariance() {
    let alpha = 0.6;
    for r in [0.5f64, 2.0] {
        let base_space = SpaceGrid::new_1d(0.0, 1.0, 12).unwrap();
        let base_time = TimeGrid::covering(0.5, 15).unwrap();
        let coeff = checkerboard_coefficients(&base_space, 3, 1.0, 4.0, None).unwrap();
        let u0 = ProblemSpec::u0_from_fn(&base_space, |p| bump(p[0], 0.4, 0.3));
        let base = ProblemSpec::new(order(alpha), base_space, base_time, u0.clone(), coeff.clone())
            .with_boundary(Arc::new(|t, _| t));
        // x = x0 + r y, t = r^{2/α} s; here the scaled problem lives in the x variables
        let ts = r.powf(2.0 / alpha);
        let scaled_space = SpaceGrid::new_1d(0.0, r, 12).unwrap();
        let scaled_time = TimeGrid::covering(0.5 * ts, 15).unwrap();
        let scaled_coeff = coeff.transported([0.0, 0.0], 1.0 / r);
        let scaled = ProblemSpec::new(order(alpha), scaled_space, scaled_time, u0, scaled_coeff)
            .with_boundary(Arc::new(move |t, _| t / ts));
        let a = solve_subdiffusion(&base).unwrap();
        let b = solve_subdiffusion(&scaled).unwrap();
        for (la, lb) in a.u.iter().zip(&b.u) {
            for (x, y) in la.iter().zip(lb) {
                assert!((x - y).abs() < 1e-12, "r={r}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn weak_form_consistency_and_sign() {
    let base = spec_1d(16, 40, 1.0);
    let r0 = solve_subdiffusion(&base).unwrap();
    let rep0 = weak_form_values(&r0);
    assert!(rep0.min() >= -1e-10, "{}", rep0.min());
    assert!(rep0.consistency_error() < 1e-10);

    let r1 = solve_subdiffusion(&base.clone().with_forcing(constant_field(1.0))).unwrap();
    let rep1 = weak_form_values(&r1);
    assert!(rep1.min() >= -1e-10 && rep1.max() > 0.0);
    assert!(rep1.consistency_error() < 1e-10);

    let rm = solve_subdiffusion(&base.with_forcing(constant_field(-1.0))).unwrap();
    assert!(supersolution_residual(&rm) < 0.0);
}

#[test]
fn weak_form_2d_with_time_dependent_coefficients() {
    let space = SpaceGrid::new_2d((0.0, 1.0, 8), (0.0, 1.0, 8)).unwrap();
    let time = TimeGrid::covering(1.0, 12).unwrap();
    let coeff = checkerboard_coefficients(&space, 2, 1.0, 5.0, Some(4)).unwrap();
    let u0 = ProblemSpec::u0_from_fn(&space, |p| bump(p[0], 0.5, 0.4) * bump(p[1], 0.5, 0.4));
    let spec = ProblemSpec::new(order(0.4), space, time, u0, coeff).with_forcing(constant_field(0.5));
    let r = solve_subdiffusion(&spec).unwrap();
    let rep = weak_form_values(&r);
    assert!(rep.consistency_error() < 1e-10, "{}", rep.consistency_error());
    assert!(rep.min() > 0.0);
}

#[test]
fn export_formats() {
    let spec = spec_1d(4, 2, 1.0);
    let r = solve_subdiffusion(&spec).unwrap();
    let mut csv = Vec::new();
    r.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,u"));
    assert_eq!(lines.next(), Some("0,0,0"));
    assert_eq!(text.lines().count(), 1 + 3 * 6);

    let mut bin = Vec::new();
    r.write_binary(&mut bin).unwrap();
    assert_eq!(bin.len(), 76 + 8 * 3 * 6);
    assert_eq!(&bin[..4], b"SHSR");
    let back = read_binary(bin.as_slice()).unwrap();
    assert_eq!(back.nt, 3);
    assert_eq!(back.nx, 6);
    assert_eq!(back.ny, 1);
    assert_eq!(back.value(2, 3, 0), r.level(2)[3]);
    assert_eq!(back, r.to_array());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn nonnegative_data_gives_nonnegative_solution(seed in 0u64..10_000, f in 0.0f64..2.0) {
        let mut spec = random_spec(seed, seed % 3 == 0);
        spec.u0.iter_mut().for_each(|v| *v = v.abs());
        let spec = spec
            .with_boundary(Arc::new(|t, p| (t + p[0]).cos().abs()))
            .with_forcing(constant_field(f));
        let r = solve_subdiffusion(&spec).unwrap();
        prop_assert!(r.u.iter().flatten().all(|v| *v >= -1e-10));
    }
}
