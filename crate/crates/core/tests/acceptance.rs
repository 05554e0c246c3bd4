//! Acceptance checks, one line per criterion. Runs as a plain binary and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use subharnack::cli::{run_seed, DEFAULT_SEED};
use subharnack::fracops::{
    commutation_report_1, commutation_residual_2, fundamental_identity_report, SampledPath, TimeGrid,
};
use subharnack::fundsol::{
    critical_exponent, default_epsilons, divergence_exponent, optimality_with_profile,
    FundamentalSolutionEvaluator, Regime,
};
use subharnack::harnack::{
    checkerboard_benchmark, continuity_check, harnack_ratio_sweep, max_principle_check,
    random_max_principle_problem, ramp_benchmark, weighted_poincare_check, ClampedCone, HarnackConfig,
};
use subharnack::kernels::{mittag_leffler, yosida_identity_residual, yosida_kernels};
use subharnack::solver::{constant_field, solve_scalar_relaxation, solve_subdiffusion, ProblemSpec, SpaceGrid};
use subharnack::special::erfc;
use subharnack::{FractionalOrder, KernelTable, MittagLefflerParams, Result};

type Outcome = Result<(bool, String)>;

fn order(a: f64) -> FractionalOrder {
    FractionalOrder::new(a).unwrap()
}

fn rate(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn kernel_inverse() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for a in [0.25, 0.5, 0.75] {
        let ga = KernelTable::convolution_weights(a, 1.0 / 512.0, 512)?;
        let gb = KernelTable::convolution_weights(1.0 - a, 1.0 / 512.0, 512)?;
        let c = ga.convolve(&gb)?;
        worst = c[1..].iter().fold(worst, |m, v| m.max((v - 1.0).abs()));
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((worst <= 1e-12 && secs < 1.0, format!("max deviation {worst:e}, {secs:.3}s")))
}

fn yosida_suite() -> Outcome {
    let start = Instant::now();
    let a = order(0.5);
    let dt = 1.0 / 1024.0;
    let rl = KernelTable::riemann_liouville(0.5, dt, 1024)?;
    let mut dists = Vec::new();
    for n in [1, 4, 16, 64, 256] {
        let (g, _) = yosida_kernels(a, n, dt, 1024)?;
        dists.push(g.l1_distance(&rl)?);
    }
    let decreasing = dists.windows(2).all(|w| w[1] < w[0]);
    let last = dists[4];
    let mut worst = f64::INFINITY;
    for n in [1, 4] {
        let e1 = yosida_identity_residual(a, n, 128, 0.1)?;
        let e2 = yosida_identity_residual(a, n, 256, 0.1)?;
        worst = worst.min(rate(e1, e2));
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        decreasing && last < 0.05 && worst >= 0.8 && secs < 10.0,
        format!("L1 distances decreasing={decreasing}, n=256 {last:.4}, identity order {worst:.2}, {secs:.2}s"),
    ))
}

fn mittag_leffler_checks() -> Outcome {
    let p = MittagLefflerParams::new(1.0, 1.0)?;
    let mut worst = 0.0f64;
    for k in 0..100 {
        let z = -20.0 + 40.0 * k as f64 / 99.0;
        worst = worst.max((mittag_leffler(p, z)? - z.exp()).abs() / z.exp());
    }
    let half = mittag_leffler(MittagLefflerParams::new(0.5, 1.0)?, -1.0)?;
    let err = (half - std::f64::consts::E * erfc(1.0)).abs();
    Ok((worst <= 1e-10 && err <= 1e-8, format!("exp rel {worst:e}, erfc abs {err:e}")))
}

fn relaxation_order() -> Outcome {
    let a = order(0.5);
    let exact = mittag_leffler(MittagLefflerParams::new(0.5, 1.0)?, -1.0)?;
    let mut err = Vec::new();
    for m in [64, 128, 256] {
        let path = solve_scalar_relaxation(a, 1.0, 1.0, TimeGrid::covering(1.0, m)?)?;
        err.push((path.values()[m] - exact).abs());
    }
    let (o1, o2) = (rate(err[0], err[1]), rate(err[1], err[2]));
    let ok = [o1, o2].iter().all(|o| (o - 1.5).abs() <= 0.3);
    Ok((ok, format!("orders {o1:.3}, {o2:.3}")))
}

fn identity_and_commutators() -> Outcome {
    let a = order(0.5);
    let fund = |m: usize| -> Result<(f64, f64)> {
        let g = TimeGrid::covering(1.0, m)?;
        let (k, _) = yosida_kernels(a, 4, g.dt(), m)?;
        let u = SampledPath::from_fn(g, |t| 1.0 + (2.0 * t).sin());
        let r = fundamental_identity_report(&u, &k, |y| y * y, |y| 2.0 * y)?;
        Ok((r.max_residual, r.min_history()))
    };
    let ((f1, h1), (f2, h2)) = (fund(64)?, fund(128)?);
    let c1 = |m: usize| -> Result<f64> {
        let g = TimeGrid::covering(1.0, m)?;
        let v = SampledPath::from_fn(g, |t| t);
        Ok(commutation_report_1(&v, &SampledPath::from_fn(g, |t| t), a)?.max_residual)
    };
    let c2 = |m: usize| -> Result<f64> {
        let g = TimeGrid::covering(1.0, m)?;
        let (k, _) = yosida_kernels(a, 2, g.dt(), m)?;
        let v = SampledPath::from_fn(g, |t| (3.0 * t).cos());
        commutation_residual_2(&k, &v, &SampledPath::from_fn(g, |t| t * t + t))
    };
    let (o1, o2) = (rate(c1(64)?, c1(128)?), rate(c2(64)?, c2(128)?));
    let hist = h1.min(h2);
    Ok((
        f1 / f2 >= 1.7 && hist >= -1e-12 && o1 >= 0.8 && o2 >= 0.8,
        format!("identity factor {:.2}, history min {hist:e}, commutator orders {o1:.2}, {o2:.2}", f1 / f2),
    ))
}

fn max_principle() -> Outcome {
    let rows = (0..200)
        .into_par_iter()
        .map(|i| {
            let nonneg = i % 4 >= 2;
            let spec = random_max_principle_problem(run_seed(DEFAULT_SEED, i), i % 2 == 1, nonneg)?;
            let rep = max_principle_check(&solve_subdiffusion(&spec)?)?;
            Ok((nonneg, rep.worst_violation, rep.u_min))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let low = rows.iter().filter(|r| r.0).map(|r| r.2).fold(f64::INFINITY, f64::min);
    Ok((worst <= 1e-10 && low >= -1e-10, format!("200 runs, worst violation {worst:e}, min over nonnegative data {low:e}")))
}

fn exponent_algebra() -> Outcome {
    let mut worst = 0.0f64;
    for k in 1..=9 {
        let a = order(k as f64 / 10.0);
        for n in 1..=3 {
            worst = worst.max((divergence_exponent(a, n, critical_exponent(a, n)) + 1.0).abs());
        }
    }
    let lim = (1..=3)
        .map(|n| (critical_exponent(order(0.999), n) - (1.0 + 2.0 / n as f64)).abs())
        .fold(0.0, f64::max);
    Ok((worst <= 1e-12 && lim <= 1e-2, format!("|e(p*)+1| {worst:e}, classical gap {lim:.2e}")))
}

fn optimality() -> Outcome {
    let start = Instant::now();
    let ev = FundamentalSolutionEvaluator::new(order(0.5), 1)?;
    let eps = default_epsilons();
    let mut profile = Vec::new();
    let below = optimality_with_profile(&ev, 1.0, &eps, &mut profile)?;
    let at = optimality_with_profile(&ev, 5.0 / 3.0, &eps, &mut profile)?;
    let above = optimality_with_profile(&ev, 2.0, &eps, &mut profile)?;
    let secs = start.elapsed().as_secs_f64();
    let ok = below.regime == Regime::Convergent
        && below.last_decade_change < 0.02
        && at.regime == Regime::Logarithmic
        && at.log_fit_residual < 0.05
        && at.log_slope > 0.0
        && above.regime == Regime::Power
        && (above.power_slope - 0.25).abs() <= 0.05
        && secs < 60.0;
    Ok((
        ok,
        format!(
            "p=1 change {:.1e}, p=5/3 log residual {:.1e}, p=2 slope {:.4}, {secs:.1}s",
            below.last_decade_change, at.log_fit_residual, above.power_slope
        ),
    ))
}

fn harnack_stability() -> Outcome {
    let hc = HarnackConfig::new(0.5, 2.0, 1.0, 0.0, [0.0; 2], 1.0, order(0.5))?;
    let p = [0.5, 1.0, 1.5];
    let sweep = |spec: &ProblemSpec| harnack_ratio_sweep(&solve_subdiffusion(spec)?, &hc, &p);
    let coarse = checkerboard_benchmark(&hc, 1, (-3.0, 3.0), 60, 100, 0.2, 1.0, 5.0)?;
    let fine = checkerboard_benchmark(&hc, 1, (-3.0, 3.0), 120, 200, 0.2, 1.0, 5.0)?;
    let constant = ProblemSpec::new(
        coarse.alpha,
        coarse.space.clone(),
        coarse.time,
        vec![1.0; coarse.u0.len()],
        coarse.coefficients.clone(),
    )
    .with_boundary(constant_field(1.0));
    let (a, b, k) = (sweep(&coarse)?, sweep(&fine)?, sweep(&constant)?);
    let finite = a.iter().chain(&b).all(|r| r.ratio.is_finite() && r.essinf_plus > 0.0);
    let change = a.iter().zip(&b).map(|(x, y)| ((x.ratio - y.ratio) / y.ratio).abs()).fold(0.0, f64::max);
    let dev = k.iter().map(|r| (r.ratio - 1.0).abs()).fold(0.0, f64::max);
    let ratios: Vec<String> = b.iter().map(|r| format!("{:.3}", r.ratio)).collect();
    Ok((
        finite && change < 0.05 && dev <= 1e-12,
        format!("ratios [{}], two-grid change {change:.2e}, constant deviation {dev:.1e}", ratios.join(", ")),
    ))
}

fn continuity() -> Outcome {
    let (r0, eta) = (0.5f64, 1.0);
    let spec = ramp_benchmark(order(0.5), (-1.0, 1.0), 200, eta * r0.powi(4), 8192, 0.01)?;
    let result = solve_subdiffusion(&spec)?;
    let radii = [r0, r0 / 2.0, r0 / 4.0, r0 / 8.0];
    let rep = continuity_check(&result, [0.0; 2], &radii, eta)?;
    Ok((
        rep.pass,
        format!(
            "slope {:.2}, monotone {}, sup on Q(r0/8) {:.2e} vs extrapolation {:.2e}",
            rep.decay.slope,
            rep.decay.is_monotone(),
            rep.smallest_sup,
            rep.extrapolated
        ),
    ))
}

fn poincare() -> Outcome {
    let space = SpaceGrid::new_2d((0.0, 1.0, 48), (0.0, 1.0, 48))?;
    let cells = space.interior();
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut worst = 0.0f64;
    let mut all = true;
    for _ in 0..50 {
        let modes: Vec<[f64; 4]> = (0..4)
            .map(|_| {
                [rng.gen_range(-1.0..1.0), rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0), rng.gen_range(0.0..6.3)]
            })
            .collect();
        let shift: f64 = rng.gen_range(-2.0..2.0);
        let u: Vec<f64> = cells
            .iter()
            .map(|&i| {
                let p = space.point(i);
                shift + modes.iter().map(|m| m[0] * (m[1] * p[0] + m[2] * p[1] + m[3]).sin()).sum::<f64>()
            })
            .collect();
        let center = [rng.gen_range(0.4..0.6), rng.gen_range(0.4..0.6)];
        let cone = ClampedCone::new(center, rng.gen_range(0.15..0.35), rng.gen_range(1.0..4.0))?;
        let rep = weighted_poincare_check(&space, &u, &cone)?;
        all &= rep.pass;
        worst = worst.max(rep.lhs / rep.rhs);
    }
    Ok((all, format!("50 fields, max lhs/rhs {worst:.3}")))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("kernel inverse identity", kernel_inverse),
        ("Yosida kernel suite", yosida_suite),
        ("Mittag-Leffler", mittag_leffler_checks),
        ("scalar relaxation convergence", relaxation_order),
        ("fundamental identity and commutators", identity_and_commutators),
        ("discrete maximum principle", max_principle),
        ("critical-exponent algebra", exponent_algebra),
        ("optimality experiment", optimality),
        ("Harnack ratio stability", harnack_stability),
        ("continuity at t=0", continuity),
        ("weighted Poincare", poincare),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!("criterion {:2} {}: {name}: {detail}", k + 1, if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of 11 criteria pass", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
