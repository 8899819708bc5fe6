//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Set `POLLING_LONG_RUN=1` to add the
//! 10^8-cycle check of example 1 with the tighter tolerance.

use std::process::ExitCode;
use std::time::Instant;

use polling_core::distributions::DistributionSpec::{self, *};
use polling_core::experiments::scenarios::{exact_fluid_probe, example_interarrival, example_params, WEIBULL_SHAPES};
use polling_core::experiments::{repro, ReproReport, Scenario};
use polling_core::fluid::{
    gated_exhaustive_rates, integrate, lyapunov_drift, region_rates, FluidState, Rate, RateSolution, Termination,
};
use polling_core::sim::{CumulativeRecord, Event, Observer, SimState};
use polling_core::stability::{check, divergence_rates};
use polling_core::{derive_quantities, run, DerivedQuantities, Discipline, Limits, ModelParams, Simulator, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CYCLES: u64 = 10_000_000;
const LONG_CYCLES: u64 = 100_000_000;
const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, detail: Vec::new() }
    }

    fn require(&mut self, ok: bool, what: String) {
        self.detail.push(format!("{} {what}", if ok { "ok  " } else { "FAIL" }));
        self.pass &= ok;
    }
}

fn report_rows(out: &mut Outcome, report: &ReproReport) {
    for r in &report.rows {
        out.require(
            r.pass,
            format!(
                "{} {}: {:.4} ± {:.4} (reference {} ± {})",
                r.case, r.quantity, r.estimate, r.half_width, r.reference, r.tolerance
            ),
        );
    }
}

fn estimate_p(report: &ReproReport) -> f64 {
    report.estimates[0].1.p
}

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    report_rows(&mut out, &repro(Scenario::Example(1), CYCLES, SEED).unwrap());
    out
}

fn criterion_1_long() -> Outcome {
    let mut out = Outcome::new();
    let (e, _) = run(&example_params(1), LONG_CYCLES + LONG_CYCLES / 100, LONG_CYCLES / 100, SEED).unwrap();
    out.require((e.p - 0.1825).abs() <= 0.001, format!("p = {:.4} (reference 0.1825 ± 0.001)", e.p));
    out.require((e.u4 - 0.0466).abs() <= 0.001, format!("u4 = {:.4} (reference 0.0466 ± 0.001)", e.u4));
    out
}

/// Runs examples 2 to 5 and returns their reports for reuse.
fn criterion_2() -> (Outcome, Vec<ReproReport>) {
    let mut out = Outcome::new();
    let reports: Vec<ReproReport> = (2..=5).map(|n| repro(Scenario::Example(n), CYCLES, SEED).unwrap()).collect();
    for r in &reports {
        report_rows(&mut out, r);
    }
    (out, reports)
}

/// Raw moments by direct formulas, independent of the library.
fn moment_oracle(spec: DistributionSpec, k: i32) -> f64 {
    match spec {
        Exponential { mean } => (1..=k).map(f64::from).product::<f64>() * mean.powi(k),
        Pareto { xmin, shape } => shape * xmin.powi(k) / (shape - k as f64),
        TwoPoint { x1, p1, x2 } => p1 * x1.powi(k) + (1.0 - p1) * x2.powi(k),
        other => panic!("no oracle for {other:?}"),
    }
}

fn criterion_3(reports: &[ReproReport]) -> Outcome {
    let mut out = Outcome::new();
    let (e3, e4, e5) = (example_interarrival(3), example_interarrival(4), example_interarrival(5));
    for (other, orders, name) in [(e4, 2, "example 4"), (e5, 3, "example 5")] {
        for k in 1..=orders {
            let (a, b) = (e3.moment(k as u32).unwrap(), other.moment(k as u32).unwrap());
            let oracle = moment_oracle(other, k);
            let ok = ((a - b) / a).abs() < 1e-9 && ((b - oracle) / oracle).abs() < 1e-9;
            out.require(ok, format!("moment {k} of {name} = {b} matches the exponential's {a}"));
        }
    }
    let p = |n: usize| estimate_p(&reports[n - 2]);
    out.require((p(3) - p(4)).abs() > 0.05, format!("|p3 - p4| = {:.4} > 0.05", (p(3) - p(4)).abs()));
    out.require((p(3) - p(5)).abs() > 0.005, format!("|p3 - p5| = {:.4} > 0.005", (p(3) - p(5)).abs()));
    out
}

fn criterion_4() -> Outcome {
    let mut out = Outcome::new();
    let table = repro(Scenario::Table1, CYCLES, SEED).unwrap();
    const SPOTS: [f64; 5] = [0.18, 0.5, 1.0, 2.0, 10.0];
    for r in table.rows.iter().filter(|r| r.quantity.to_string() == "p") {
        let a: f64 = r.case.trim_start_matches("table1/a=").parse().unwrap();
        if SPOTS.contains(&a) {
            out.require(
                r.pass,
                format!("a = {a}: p = {:.4} ± {:.4} (reference {} ± {})", r.estimate, r.half_width, r.reference, r.tolerance),
            );
        }
    }
    assert_eq!(table.estimates.len(), WEIBULL_SHAPES.len());
    let mut monotone = true;
    for (w, a) in table.estimates.windows(2).zip(WEIBULL_SHAPES.windows(2)) {
        let (lo, hi) = (&w[0].1, &w[1].1);
        let ok = hi.p < lo.p || hi.p - lo.p <= lo.half_width.p + hi.half_width.p;
        if !ok {
            out.require(false, format!("p rises from a = {} ({:.4}) to a = {} ({:.4})", a[0], lo.p, a[1], hi.p));
        }
        monotone &= ok;
    }
    out.require(monotone, "p decreases in a up to confidence-interval overlap".into());
    let fig = repro(Scenario::Fig1Limit, CYCLES, SEED).unwrap();
    report_rows(&mut out, &fig);
    out
}

fn limited(lambda: [f64; 3], svc: [f64; 3], walks: [f64; 4]) -> DerivedQuantities {
    DerivedQuantities::from_means(lambda, svc, walks, Discipline::Limited, [false; 3])
}

fn criterion_5() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut indeterminate = 0;
    for _ in 0..10_000 {
        let lambda = [0; 3].map(|_| rng.random_range(0.01..0.6));
        let svc = [0; 3].map(|_| rng.random_range(0.0..2.0));
        let walks = [0; 4].map(|_| rng.random_range(0.0..2.0));
        let l = Limits([rng.random_range(1..8), 1, rng.random_range(1..8)]);
        let v = check(&limited(lambda, svc, walks), &l).unwrap();
        if v.verdict == Verdict::Indeterminate {
            indeterminate += 1;
        }
    }
    out.require(indeterminate == 0, format!("{indeterminate} of 10000 random sets with l2 = 1 are indeterminate"));

    // Worked examples: left-hand sides by direct arithmetic, in condition order.
    let cases = [
        (limited([0.1; 3], [1.0; 3], [1.0; 4]), Limits([1, 1, 1]), Verdict::Stable, [0.6, 0.6, 0.6], "stable example"),
        (
            limited([0.1, 0.3, 0.1], [1.0; 3], [1.0; 4]),
            Limits([1, 1, 1]),
            Verdict::Unstable { transient: true },
            [1.4, 0.5 + 0.1 * 2.5 + 0.3 * 0.5, 0.5 + 0.1 * 2.5 + 0.3 * 0.5],
            "unstable example",
        ),
        (
            limited([0.2, 0.2, 0.02], [1.0; 3], [1.0, 1.0, 1.0, 0.0]),
            Limits([1, 4, 1]),
            Verdict::Indeterminate,
            [0.57, 0.87, 0.51],
            "indeterminate example",
        ),
    ];
    for (d, l, expected, lhs, name) in cases {
        let v = check(&d, &l).unwrap();
        let conds = if expected == Verdict::Stable { &v.report.stability } else { &v.report.instability };
        let lhs_ok = conds.iter().zip(lhs).all(|(c, x)| (c.lhs - x).abs() < 1e-12);
        out.require(
            v.verdict == expected && lhs_ok,
            format!("{name}: {} with {:?}", v.verdict, conds.iter().map(|c| c.lhs).collect::<Vec<_>>()),
        );
    }
    let third = check(&cases_indeterminate(), &Limits([1, 4, 1])).unwrap();
    out.require(
        (third.report.stability[1].lhs - 1.02).abs() < 1e-12,
        format!("indeterminate example fails the queue-1 stability condition at {}", third.report.stability[1].lhs),
    );
    out
}

fn cases_indeterminate() -> DerivedQuantities {
    limited([0.2, 0.2, 0.02], [1.0; 3], [1.0, 1.0, 1.0, 0.0])
}

/// Saturated queue 1 with zero service, queue 2 limit 1: in the region where
/// only queue 1 is positive, standard cycles that serve queue 2 occur at rate
/// lambda_2 and every other standard cycle is followed by a reduced one.
fn fluid_oracle(p: &ModelParams) -> (f64, f64) {
    let mean = |s: DistributionSpec| s.mean().unwrap();
    let lambda2 = 1.0 / mean(p.interarrival[1].unwrap());
    let lambda3 = 1.0 / mean(p.interarrival[2].unwrap());
    let busy = lambda2 * mean(p.service[1]) + lambda3 * mean(p.service[2]);
    let x = p.switchover.map(mean);
    // standard walks e1 = lambda2 + e4; time: e1 (x1 + x2) + (e1 + e4) x3 + e4 x4 + busy = 1
    let e4 = (1.0 - busy - lambda2 * (x[0] + x[1] + x[2])) / (x[0] + x[1] + 2.0 * x[2] + x[3]);
    let e1 = lambda2 + e4;
    (e4 / (e1 + e4), e4 * x[3])
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new();
    let params = exact_fluid_probe();
    let (p, u4) = fluid_oracle(&params);
    let (e, _) = run(&params, CYCLES + CYCLES / 100, CYCLES / 100, SEED).unwrap();
    out.require(((e.p - p) / p).abs() <= 0.01, format!("p = {:.5}, fluid {:.5}", e.p, p));
    out.require(((e.u4 - u4) / u4).abs() <= 0.01, format!("u4 = {:.5}, fluid {:.5}", e.u4, u4));
    out
}

struct Invariants {
    l2: i64,
    limited: bool,
    violations: u64,
    first: Option<String>,
}

impl Invariants {
    fn flag(&mut self, what: String) {
        self.violations += 1;
        self.first.get_or_insert(what);
    }
}

impl Observer for Invariants {
    fn on_event(&mut self, event: &Event, _state: &SimState, r: &CumulativeRecord) {
        let e = r.walks.map(|x| x as i64);
        if (e[0] + e[3] - e[2]).abs() > 1 {
            self.flag(format!("walk counts {e:?}"));
        }
        if !matches!(event, Event::Arrival { .. }) {
            let accounted = r.busy.iter().sum::<f64>() + r.walking.iter().sum::<f64>();
            if (accounted - r.elapsed).abs() > 1e-9 * r.elapsed.max(1.0) {
                self.flag(format!("clock {accounted} vs {}", r.elapsed));
            }
        }
        if self.limited {
            let standard = e[0] - e[3];
            let visits = r.queue2_service_visits as i64;
            let d2 = r.services[1] as i64;
            if !(standard - 1 <= visits && visits <= d2 && d2 <= self.l2 * (standard + 1)) {
                self.flag(format!("dispatch {standard} {visits} {d2}"));
            }
        }
    }
}

fn random_law(rng: &mut ChaCha8Rng, mean: f64) -> DistributionSpec {
    match rng.random_range(0..4) {
        0 => Exponential { mean },
        1 => Uniform { mean },
        2 => Deterministic { value: mean },
        _ => Weibull { shape: rng.random_range(0.5..3.0), mean },
    }
}

fn random_exact_residuals(d: &DerivedQuantities, l: &Limits, sol: &RateSolution) -> f64 {
    let x = |r: Rate| r.exact().unwrap();
    let t = sol.busy.map(x);
    let u = sol.walking.map(x);
    let q = sol.level.map(x);
    let ex = d.mean_switchover;
    let es = d.mean_service;
    let rate = |time: f64, mean: f64| time / mean;
    let mut res = vec![t.iter().sum::<f64>() + u.iter().sum::<f64>() - 1.0];
    res.push(rate(u[0], ex[0]) - rate(u[1], ex[1]));
    res.push(rate(u[2], ex[2]) - rate(u[0], ex[0]) - rate(u[3], ex[3]));
    let visits = [rate(u[0], ex[0]) + rate(u[3], ex[3]), rate(u[1], ex[1]), rate(u[2], ex[2])];
    for k in 0..3 {
        res.push(q[k] - (d.lambda[k] - t[k] / es[k]));
        if sol.region.contains(k) {
            res.push(t[k] / es[k] - l.get(k) * visits[k]);
        } else {
            res.push(q[k]);
        }
        // per-visit cap, as a violation amount
        res.push((t[k] / es[k] - l.get(k) * visits[k]).max(0.0));
    }
    if sol.region.contains(1) {
        res.push(u[3]);
    } else {
        res.push(rate(u[0], ex[0]) - rate(u[3], ex[3]) - t[1] / es[1]);
    }
    res.iter().fold(0.0f64, |m, r| m.max(r.abs()))
}

fn criterion_7() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    for discipline in [Discipline::Limited, Discipline::Gated, Discipline::Exhaustive] {
        for rep in 0..3 {
            let load = rng.random_range(0.3..0.9);
            let params = ModelParams {
                interarrival: [0; 3].map(|_| {
                    let m = 3.0 / load;
                    Some(random_law(&mut rng, m))
                }),
                service: [0; 3].map(|_| random_law(&mut rng, 1.0)),
                switchover: [0.6, 0.4, 0.5, 0.3].map(|m| random_law(&mut rng, m)),
                discipline,
                limits: Limits([0; 3].map(|_| rng.random_range(1..5))),
                saturated: [false; 3],
            };
            let mut sim = Simulator::new(&params, SEED + rep).unwrap();
            let mut inv = Invariants {
                l2: params.limits.0[1] as i64,
                limited: discipline == Discipline::Limited,
                violations: 0,
                first: None,
            };
            for _ in 0..1_000_000 {
                sim.step(&mut inv).unwrap();
            }
            out.require(
                inv.violations == 0,
                format!(
                    "{discipline:?} run {rep}: {} violations over 10^6 events {}",
                    inv.violations,
                    inv.first.unwrap_or_default()
                ),
            );
        }
    }

    // Exact fluid rates with l2 = 1 satisfy the fluid equations.
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..2_000 {
        let d = limited(
            [0; 3].map(|_| rng.random_range(0.01..0.3)),
            [0; 3].map(|_| rng.random_range(0.2..2.0)),
            [0; 4].map(|_| rng.random_range(0.1..1.5)),
        );
        let l = Limits([rng.random_range(1..5), 1, rng.random_range(1..5)]);
        let q = [0; 3].map(|_| if rng.random_bool(0.5) { rng.random_range(0.1..1.0) } else { 0.0 });
        if let Ok(sol) = region_rates(&d, &l, &FluidState::new(q).unwrap()) {
            if sol.tight {
                worst = worst.max(random_exact_residuals(&d, &l, &sol));
                checked += 1;
            }
        }
    }
    out.require(worst <= 1e-12 && checked > 500, format!("max fluid residual {worst:e} over {checked} exact solutions"));

    // Drain within the certified deadline.
    let (mut drained, mut late) = (0, 0);
    while drained < 500 {
        let x = [0; 3].map(|_| rng.random_range(0.1..1.5));
        let walks = [x[0], x[1], x[2], rng.random_range(0.0..0.95) * (x[0] + x[1])];
        let d = limited([0; 3].map(|_| rng.random_range(0.01..0.3)), [0; 3].map(|_| rng.random_range(0.2..2.0)), walks);
        let l = Limits([rng.random_range(1..4), 1, rng.random_range(1..4)]);
        let raw = [0; 3].map(|_| rng.random_range(0.0..1.0));
        let scale = raw.iter().sum::<f64>().max(1.0);
        let q0 = raw.map(|v| v / scale);
        let Ok(cert) = lyapunov_drift(&d, &l, &FluidState::new(q0).unwrap()) else { continue };
        let tr = integrate(&d, &l, q0, 2.0 * cert.deadline + 1.0).unwrap();
        match tr.termination {
            Termination::Drained { at } if at <= cert.deadline => {}
            _ => late += 1,
        }
        drained += 1;
    }
    out.require(late == 0, format!("{late} of {drained} stable fluid trajectories missed their deadline"));

    // Gated and exhaustive drift.
    let mut bad = 0;
    for i in 0..1_000 {
        let discipline = if i % 2 == 0 { Discipline::Gated } else { Discipline::Exhaustive };
        let d = DerivedQuantities::from_means(
            [0; 3].map(|_| rng.random_range(0.01..0.6)),
            [0; 3].map(|_| rng.random_range(0.1..2.0)),
            [0; 4].map(|_| rng.random_range(0.0..2.0)),
            discipline,
            [false; 3],
        );
        let q = [0; 3].map(|_| if rng.random_bool(0.6) { rng.random_range(0.01..2.0) } else { 0.0 });
        if q.iter().all(|&x| x == 0.0) {
            continue;
        }
        let sol = gated_exhaustive_rates(&d, &FluidState::new(q).unwrap());
        let ok = match sol {
            Ok(s) => matches!(s.lyapunov_derivative(d.rho0), Rate::Exact(w) if (w - (d.rho0 - 1.0)).abs() < 1e-12),
            Err(_) => false,
        };
        bad += usize::from(!ok);
    }
    out.require(bad == 0, format!("{bad} gated/exhaustive states with drift other than rho0 - 1"));
    out
}

fn criterion_8() -> Outcome {
    let mut out = Outcome::new();
    let params = ModelParams {
        interarrival: [10.0, 1.0 / 0.3, 10.0].map(|mean| Some(Exponential { mean })),
        service: [Exponential { mean: 1.0 }; 3],
        switchover: [Exponential { mean: 1.0 }; 4],
        discipline: Discipline::Limited,
        limits: Limits([1, 1, 1]),
        saturated: [false; 3],
    };
    let d = derive_quantities(&params).unwrap();
    let bound = divergence_rates(&d, &params.limits).unwrap().into_iter().fold(0.0, f64::max);
    let mut sim = Simulator::new(&params, SEED).unwrap();
    sim.run_until_cycle(1_000_000, &mut ()).unwrap();
    let s = sim.state();
    let growth = s.q.iter().sum::<u64>() as f64 / s.clock;
    out.require(bound > 0.0 && growth >= 0.9 * bound, format!("|Q(t)|/t = {growth:.4}, bound {bound:.4}"));
    out
}

fn main() -> ExitCode {
    let long = std::env::var("POLLING_LONG_RUN").is_ok_and(|v| v == "1");
    let mut results: Vec<(String, Outcome, f64)> = Vec::new();
    let mut timed = |name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        results.push((name.to_string(), o, t.elapsed().as_secs_f64()));
    };
    timed("1 example 1", &mut criterion_1);
    let mut reports = Vec::new();
    timed("2 examples 2-5", &mut || {
        let (o, r) = criterion_2();
        reports = r;
        o
    });
    timed("3 distribution sensitivity", &mut || criterion_3(&reports));
    timed("4 Weibull sweep and deterministic limit", &mut criterion_4);
    timed("5 classifier exactness at l2 = 1", &mut criterion_5);
    timed("6 simulation against exact fluid rates", &mut criterion_6);
    timed("7 invariants", &mut criterion_7);
    timed("8 divergence", &mut criterion_8);
    if long {
        timed("1 example 1 long run", &mut criterion_1_long);
    }

    let mut all = true;
    println!();
    for (name, o, secs) in &results {
        println!("criterion {name}: {} ({secs:.1}s)", if o.pass { "PASS" } else { "FAIL" });
        for line in &o.detail {
            println!("    {line}");
        }
        all &= o.pass;
    }
    println!();
    for (name, o, _) in &results {
        println!("{} criterion {name}", if o.pass { "PASS" } else { "FAIL" });
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
