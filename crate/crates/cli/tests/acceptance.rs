//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without any external evaluator.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use optabc_core::colony::phases::{move_dimension, probabilities_from_fitness, selection_probabilities};
use optabc_core::colony::{Colony, IterationStats};
use optabc_core::kmeans::{cluster, seed_population, DEFAULT_MAX_ITERS};
use optabc_core::prelude::*;
use optabc_core::trace::ConvergenceTrace;
use optabc_harness::DEFAULT_SEEDS;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let held: bool = $cond;
        if !held {
            return Err(format!($($msg)+));
        }
    };
}

fn within(start: Instant, limit: Duration, detail: String) -> Check {
    let took = start.elapsed();
    ensure!(took < limit, "{detail}; took {took:.2?}, limit {limit:?}");
    Ok(format!("{detail}; {took:.2?}"))
}

fn sphere(p: &[Value]) -> f64 {
    p.iter().map(|v| v.as_f64().powi(2)).sum()
}

fn counting(calls: &Arc<AtomicUsize>) -> Evaluator {
    let calls = Arc::clone(calls);
    Evaluator::single(move |p: &[Value]| {
        calls.fetch_add(1, Ordering::SeqCst);
        sphere(p)
    })
}

/// Steps a colony by hand, checking the ledger against the closed-form
/// count after every iteration. Scout events are counted from the sources
/// themselves, evaluations from a counter inside the objective.
fn accounting(variant: Variant, seed: u64) -> Result<(usize, usize, usize), String> {
    let space = SearchSpace::uniform_box(5, -5.12, 5.12).unwrap();
    let config = ColonyConfig::new(variant, 100).k(10).limit(5).max_iterations(60).seed(seed);
    let n = config.working_size();
    let per_scout = if config.uses_opposition() { 2 } else { 1 };
    let calls = Arc::new(AtomicUsize::new(0));
    let mut ev = counting(&calls);
    let mut colony = Colony::new(config, &space, &mut ev).map_err(|e| e.to_string())?;
    colony.initialize().map_err(|e| e.to_string())?;
    ensure!(colony.ledger().count() == n, "{variant}: init issued {} evaluations, expected {n}", colony.ledger().count());

    let mut expected = n;
    let mut total_scouts = 0;
    while !colony.finished() {
        colony.begin_iteration();
        let employed = colony.employed_phase().map_err(|e| e.to_string())?;
        let onlooker = colony.onlooker_phase().map_err(|e| e.to_string())?;
        let exhausted = colony.sources().iter().filter(|s| s.trials >= 5).count();
        let scouts = colony.scout_phase().map_err(|e| e.to_string())?;
        colony.end_iteration(IterationStats { employed, onlooker, scouts });
        ensure!(employed == n, "{variant} iteration {}: {employed} employed bees", colony.iteration());
        ensure!(scouts == exhausted, "{variant}: {scouts} scouts for {exhausted} exhausted sources");
        expected += n + onlooker + per_scout * scouts;
        total_scouts += scouts;
        let it = colony.iteration();
        ensure!(
            colony.ledger().count() == expected,
            "{variant} iteration {it}: ledger {} != formula {expected}",
            colony.ledger().count()
        );
        ensure!(calls.load(Ordering::SeqCst) == expected, "{variant} iteration {it}: objective called {} times", calls.load(Ordering::SeqCst));
        ensure!(
            colony.ledger().count_in(it, Phase::Onlooker) == onlooker
                && colony.ledger().count_in(it, Phase::Scout) == per_scout * scouts,
            "{variant} iteration {it}: per-phase ledger counts disagree"
        );
        ensure!(colony.trace().last().unwrap().evaluations == expected, "{variant}: trace row disagrees");
    }
    Ok((colony.iteration(), expected, total_scouts))
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let seed = DEFAULT_SEEDS[0];
    let (it_o, evals_o, scouts_o) = accounting(Variant::OptAbc, seed)?;
    let (it_a, evals_a, scouts_a) = accounting(Variant::Abc, seed)?;
    ensure!(scouts_o > 0 && scouts_a > 0, "no scout events exercised ({scouts_o}, {scouts_a})");
    within(
        start,
        Duration::from_secs(1),
        format!(
            "optabc {it_o} iterations, {evals_o} evaluations, {scouts_o} scout pairs; \
             abc {it_a} iterations, {evals_a} evaluations, {scouts_a} scouts"
        ),
    )
}

const COST: [f64; 5] = [0.7, 0.2, 1.3, 0.0, 0.9];

fn discrete_objective(a: i64, b: i64, c: usize) -> f64 {
    let (a, b) = (a as f64, b as f64);
    (a - 3.0).powi(2) * (1.0 + 0.3 * b.abs()) + 0.8 * (b + 1.0).powi(2) + COST[c] + 0.4 * ((1.7 * a + b).sin() + 1.0)
}

fn criterion_2() -> Check {
    let start = Instant::now();
    // oracle: plain enumeration over the integer lattice and category indices
    let mut table = Vec::new();
    for a in 0..=4i64 {
        for b in -2..=2i64 {
            for c in 0..5usize {
                table.push(((a, b, c), discrete_objective(a, b, c)));
            }
        }
    }
    table.sort_by(|x, y| x.1.total_cmp(&y.1));
    let ((a, b, c), best) = table[0];
    ensure!(table.len() == 125, "oracle enumerated {} configurations", table.len());
    ensure!(table[1].1 > best, "oracle optimum is not unique");
    let optimum = vec![Value::Int(a), Value::Int(b), Value::Cat(c)];

    let space = SearchSpace::new(vec![
        ParamSpec::integer("a", 0, 4).unwrap(),
        ParamSpec::integer("b", -2, 2).unwrap(),
        ParamSpec::categorical("c", ["p", "q", "r", "s", "t"]).unwrap(),
    ])
    .unwrap();
    let mut hits = 0;
    for &seed in &DEFAULT_SEEDS {
        let config = ColonyConfig::new(Variant::OptAbc, 20).k(10).limit(5).budget(400).seed(seed);
        let mut ev = Evaluator::single(|p: &[Value]| match (p[0], p[1], p[2]) {
            (Value::Int(a), Value::Int(b), Value::Cat(c)) => discrete_objective(a, b, c),
            _ => f64::NAN,
        });
        let out = run(&config, &space, &mut ev).map_err(|e| e.to_string())?;
        ensure!(out.ledger.count() <= 400, "seed {seed}: {} evaluations", out.ledger.count());
        if out.best.position == optimum && out.best.objective() == Some(best) {
            hits += 1;
        }
    }
    ensure!(hits >= 9, "optimum {optimum:?} found in {hits}/10 seeds");
    within(start, Duration::from_secs(5), format!("optimum (a={a}, b={b}, c={c}) = {best:.6} found in {hits}/10 seeds"))
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let space = SearchSpace::uniform_box(5, -5.12, 5.12).unwrap();
    let mut parts = Vec::new();
    for variant in [Variant::OptAbc, Variant::HypAbc] {
        let mut worst = 0.0f64;
        let mut ok = 0;
        for &seed in &DEFAULT_SEEDS {
            let config = ColonyConfig::new(variant, 30).k(10).limit(20).budget(5000).seed(seed);
            let out = run(&config, &space, &mut Evaluator::single(sphere)).map_err(|e| e.to_string())?;
            let best = out.best.objective().unwrap();
            worst = worst.max(best);
            ok += usize::from(best <= 1e-2);
        }
        ensure!(ok >= 9, "{variant}: {ok}/10 seeds reached 1e-2 (worst {worst:.3e})");
        parts.push(format!("{variant} {ok}/10 (worst {worst:.2e})"));
    }
    within(start, Duration::from_secs(5), parts.join(", "))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

fn criterion_4() -> Check {
    for (f, expected) in [(0.0, 1.0), (1.0, 0.5), (-0.5, 1.5)] {
        let got = fitness(f).map_err(|e| e.to_string())?;
        ensure!(close(got, expected), "fitness({f}) = {got}, expected {expected}");
    }
    for variant in [Variant::OptAbc, Variant::HypAbc] {
        let p = probabilities_from_fitness(&[2.0, 4.0, 6.0], variant);
        ensure!(p.len() == 3 && close(p[0], 0.0) && close(p[1], 0.5) && close(p[2], 1.0), "{variant} min-max gave {p:?}");
    }
    let sources: Vec<FoodSource> =
        [3.0, 0.25, 8.0].iter().map(|&f| FoodSource::evaluated(vec![Value::Real(f)], f)).collect();
    let p = selection_probabilities(&sources, Variant::Abc);
    ensure!(close(p[1], 1.0), "best source probability {}", p[1]);
    ensure!(p.iter().all(|&q| q > 0.1 - 1e-12 && q <= 1.0 + 1e-12), "probabilities out of range: {p:?}");

    let space = SearchSpace::new(vec![
        ParamSpec::continuous("x", -3.0, 7.0).unwrap(),
        ParamSpec::continuous("y", 0.5, 1.5).unwrap(),
    ])
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEEDS[1]);
    for _ in 0..1000 {
        let x = space.sample_uniform(&mut rng);
        let back = space.oppose(&space.oppose(&x));
        for (a, b) in x.iter().zip(&back) {
            ensure!(close(a.as_f64(), b.as_f64()), "opposition involution broke: {x:?} -> {back:?}");
        }
        let partner = space.sample_uniform(&mut rng);
        let dim = rng.random_range(0..2);
        let moved = move_dimension(&space, &x, &partner, dim, 0.0, false);
        ensure!(moved == x, "phi = 0 moved {x:?} to {moved:?}");
    }
    let centre = vec![Value::Real(2.0), Value::Real(1.0)];
    let image = space.oppose(&centre);
    ensure!(
        close(image[0].as_f64(), 2.0) && close(image[1].as_f64(), 1.0),
        "midpoint maps to {image:?}"
    );
    ensure!(space.is_centre(&centre), "midpoint not recognised as the fixed point");
    Ok("fitness, min-max, best-source P, opposition involution and fixed point, phi=0 identity".into())
}

fn fuzz_space(rng: &mut ChaCha8Rng) -> SearchSpace {
    let dims = rng.random_range(1..=5);
    let params = (0..dims)
        .map(|i| {
            let name = format!("p{i}");
            match rng.random_range(0..3) {
                0 => {
                    let lo = rng.random_range(-100.0..100.0);
                    ParamSpec::continuous(name, lo, lo + rng.random_range(0.01..50.0)).unwrap()
                }
                1 => {
                    let lo = rng.random_range(-20..20);
                    ParamSpec::integer(name, lo, lo + rng.random_range(1..30)).unwrap()
                }
                _ => ParamSpec::categorical(name, (0..rng.random_range(1..6)).map(|c| format!("c{c}"))).unwrap(),
            }
        })
        .collect();
    SearchSpace::new(params).unwrap()
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEEDS[2]);
    let mut lloyd_steps = 0;
    for instance in 0..100 {
        let space = fuzz_space(&mut rng);
        let pn = rng.random_range(2..=80);
        let k = rng.random_range(1..=pn);
        let points: Vec<Vec<f64>> = (0..pn).map(|_| space.embed(&space.sample_uniform(&mut rng))).collect();
        let c = cluster(&points, k, &mut rng, DEFAULT_MAX_ITERS).map_err(|e| e.to_string())?;
        lloyd_steps += c.iterations_used;
        for w in c.wcss_history.windows(2) {
            ensure!(w[1] <= w[0] + 1e-12, "instance {instance}: WCSS rose {} -> {}", w[0], w[1]);
        }
        for centroid in &c.centroids {
            ensure!(centroid.len() == space.embedded_width(), "instance {instance}: centroid width");
            ensure!(centroid.iter().all(|x| (0.0..=1.0).contains(x)), "instance {instance}: centroid {centroid:?} outside unit box");
        }

        let seeded = seed_population(&space, pn, k, &mut rng).map_err(|e| e.to_string())?;
        ensure!(seeded.len() == k, "instance {instance}: {} seeds for k={k}", seeded.len());
        ensure!(seeded.iter().all(|p| space.validate(p).is_ok()), "instance {instance}: invalid seed");
    }

    // seeding costs nothing: the objective only sees the k centroids
    let space = SearchSpace::uniform_box(5, -5.12, 5.12).unwrap();
    let calls = Arc::new(AtomicUsize::new(0));
    let mut ev = counting(&calls);
    let mut colony = Colony::new(ColonyConfig::new(Variant::OptAbc, 100).k(10).max_iterations(1), &space, &mut ev)
        .map_err(|e| e.to_string())?;
    colony.initialize().map_err(|e| e.to_string())?;
    ensure!(calls.load(Ordering::SeqCst) == 10, "initialisation made {} objective calls", calls.load(Ordering::SeqCst));

    let points = vec![vec![0.0], vec![0.1], vec![0.9], vec![1.0]];
    for &seed in &DEFAULT_SEEDS {
        let c = cluster(&points, 2, &mut ChaCha8Rng::seed_from_u64(seed), DEFAULT_MAX_ITERS).map_err(|e| e.to_string())?;
        let mut cs: Vec<f64> = c.centroids.iter().map(|v| v[0]).collect();
        cs.sort_by(f64::total_cmp);
        ensure!(close(cs[0], 0.05) && close(cs[1], 0.95), "seed {seed}: 1-D example gave {cs:?}");
    }
    Ok(format!("100 fuzzed instances ({lloyd_steps} Lloyd steps), 0 seeding evaluations, 1-D example -> {{0.05, 0.95}}"))
}

fn bench_trace(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_optabc"))
        .arg("bench")
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "bench {args:?} exited with {}", out.status);
    let stdout = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    let trace = ConvergenceTrace::from_csv(&stdout).map_err(|e| e.to_string())?;
    Ok(trace.to_csv(false))
}

fn criterion_6() -> Check {
    let cases: [&[&str]; 5] = [
        &["sphere", "--variant", "optabc", "--pn", "30", "--k", "6", "--limit", "5", "--budget", "800", "--seed", "11"],
        &["rastrigin", "--variant", "hyp-abc", "--pn", "20", "--budget", "600", "--seed", "23"],
        &["rosenbrock", "--variant", "abc", "--pn", "16", "--limit", "4", "--budget", "500", "--seed", "37"],
        &["noisy-sphere", "--variant", "optabc", "--pn", "24", "--budget", "500", "--seed", "101", "--dim", "3"],
        &["sphere", "--variant", "optabc", "--pn", "20", "--k", "20", "--no-opposition", "--budget", "400", "--seed", "257"],
    ];
    for args in cases {
        let first = bench_trace(args)?;
        let second = bench_trace(args)?;
        ensure!(first == second, "bench {args:?} is not reproducible");
        ensure!(first.lines().count() > 2, "bench {args:?} produced a trivial trace");
    }
    let a = bench_trace(&["sphere", "--variant", "abc", "--pn", "10", "--budget", "300", "--seed", "1"])?;
    let b = bench_trace(&["sphere", "--variant", "abc", "--pn", "10", "--budget", "300", "--seed", "2"])?;
    ensure!(a != b, "different seeds gave identical traces");
    Ok(format!("{} bench invocations repeated byte-identically", cases.len()))
}

fn criterion_7() -> Check {
    let space = SearchSpace::new(vec![
        ParamSpec::continuous("x", -5.12, 5.12).unwrap(),
        ParamSpec::continuous("y", -5.12, 5.12).unwrap(),
        ParamSpec::integer("n", -3, 3).unwrap(),
        ParamSpec::categorical("c", ["a", "b", "c"]).unwrap(),
    ])
    .unwrap();
    let mut runs = 0;
    for &seed in &DEFAULT_SEEDS {
        for pn in [10usize, 25] {
            let opt = ColonyConfig::new(Variant::OptAbc, pn).k(pn).opposition(false).limit(5).budget(1500).seed(seed);
            let hyp = ColonyConfig::new(Variant::HypAbc, pn).limit(5).budget(1500).seed(seed);
            let a = run(&opt, &space, &mut Evaluator::single(sphere)).map_err(|e| e.to_string())?;
            let b = run(&hyp, &space, &mut Evaluator::single(sphere)).map_err(|e| e.to_string())?;
            ensure!(a.trace.to_csv(false) == b.trace.to_csv(false), "seed {seed}, pn {pn}: traces differ");
            ensure!(a.best.position == b.best.position, "seed {seed}, pn {pn}: best positions differ");
            runs += 1;
        }
    }
    Ok(format!("{runs} seed/PN pairs give identical traces"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("budget accounting", criterion_1),
        ("oracle equivalence on a discrete space", criterion_2),
        ("convergence on sphere 5-D", criterion_3),
        ("equation unit suite", criterion_4),
        ("k-means suite", criterion_5),
        ("bench determinism", criterion_6),
        ("reduction to hyp-abc", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", 7 - failed, 7);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
