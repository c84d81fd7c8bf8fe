//! Acceptance suite: one PASS/FAIL line per criterion, each under its
//! time limit. Exits nonzero when any criterion fails.

mod common;

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use fekete_ca::analysis::{
    lambda_estimate, loss, surjectivity_report, loss_threshold, CountMethod, Counter, Limits,
    SurjectivityVerdict, ThresholdQuery,
};
use fekete_ca::automaton::{translate_support, CellularAutomaton, RightPolytope};
use fekete_ca::counting::{
    out_size_bruteforce, out_size_on, out_size_transfer_1d, verify_orphan, DEFAULT_BUDGET,
    DEFAULT_MAX_SUBSETS,
};
use fekete_ca::index::diagonal;
use fekete_ca::subadditive::{
    check_subadditivity, decomposition_bound, from_fn, running_infimum, CheckOptions, SubadditiveFn,
    TableFn,
};
use fekete_ca::MultiIndex;
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

/// `(id, name, time limit, check)`.
type Criterion = (u8, &'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn mi(c: &[u64]) -> MultiIndex {
    MultiIndex::new(c.to_vec()).unwrap()
}

fn builtin(name: &str) -> CellularAutomaton {
    CellularAutomaton::builtin(name).unwrap()
}

fn to_u64(v: &BigUint) -> u64 {
    v.to_u64().unwrap()
}

/// Images of AND on adjacent pairs, straight from all `2^{n+1}` inputs.
fn and1d_oracle(n: u32) -> u64 {
    let mut seen = HashSet::new();
    for input in 0u64..(1 << (n + 1)) {
        seen.insert(input & (input >> 1) & ((1 << n) - 1));
    }
    seen.len() as u64
}

/// and1d counts from `a(n) = 2a(n-1) - a(n-2) + a(n-3)`, whose
/// characteristic polynomial is `x³ - 2x² + x - 1`.
fn and1d_recurrence(n_max: usize) -> Vec<BigUint> {
    let mut a: Vec<BigUint> = [2u32, 4, 7].iter().map(|&v| BigUint::from(v)).collect();
    while a.len() < n_max {
        let k = a.len();
        a.push(&a[k - 1] * 2u32 + &a[k - 3] - &a[k - 2]);
    }
    a.truncate(n_max);
    a
}

/// Real root of `x³ - 2x² + x - 1` by bisection on [1, 2].
fn growth_root() -> f64 {
    let p = |x: f64| x * x * x - 2.0 * x * x + x - 1.0;
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if p(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Images of and2d on an `a x b` box, enumerating the whole
/// `(a+1) x (b+1)` bounding box of `E + N` (its far corner is never read).
fn and2d_oracle(a: usize, b: usize) -> u64 {
    let (h, w) = (a + 1, b + 1);
    let mut seen = HashSet::new();
    for input in 0u64..(1 << (h * w)) {
        let cell = |i: usize, j: usize| (input >> (i * w + j)) & 1;
        let mut image = 0u64;
        for i in 0..a {
            for j in 0..b {
                image = image << 1 | (cell(i, j) & cell(i + 1, j) & cell(i, j + 1));
            }
        }
        seen.insert(image);
    }
    seen.len() as u64
}

fn criterion_1() -> Outcome {
    let expected = [2u64, 4, 7, 12, 21, 37];
    let oracle: Vec<u64> = (1..=6).map(and1d_oracle).collect();
    ensure(oracle == expected, || format!("oracle gave {oracle:?}"))?;
    let and = builtin("and1d");
    let brute: Vec<u64> = (1..=6)
        .map(|n| to_u64(&out_size_bruteforce(&and, &mi(&[n]), DEFAULT_BUDGET).unwrap().out_size))
        .collect();
    let transfer: Vec<u64> = out_size_transfer_1d(&and, 6, DEFAULT_MAX_SUBSETS)
        .unwrap()
        .iter()
        .map(|r| to_u64(&r.out_size))
        .collect();
    ensure(brute == expected, || format!("brute force gave {brute:?}"))?;
    ensure(transfer == expected, || format!("transfer gave {transfer:?}"))?;
    Ok("Out(1..6) = 2,4,7,12,21,37 by oracle, brute force and transfer".into())
}

fn criterion_2() -> Outcome {
    let shift = builtin("shift");
    ensure(
        matches!(surjectivity_report(&shift, Limits::default()), SurjectivityVerdict::ProvedSurjective { .. }),
        || "shift not proved surjective".into(),
    )?;
    for method in [CountMethod::Brute, CountMethod::Transfer] {
        let counter = Counter::new(&shift, Limits { method, ..Limits::default() });
        for n in 1..=10 {
            let l = loss(&counter.out(&mi(&[n])).unwrap());
            ensure(l.lambda_loss == 0.0, || format!("shift loss {} at n = {n}", l.lambda_loss))?;
        }
    }
    let and = builtin("and1d");
    let cert = match surjectivity_report(&and, Limits::default()) {
        SurjectivityVerdict::Nonsurjective { certificate } => certificate,
        other => return Err(format!("and1d verdict {other}")),
    };
    ensure(cert.pattern.cells() == [1, 0, 1], || format!("orphan {:?}", cert.pattern.cells()))?;
    ensure(verify_orphan(&and, &cert, DEFAULT_BUDGET).unwrap(), || "certificate not verified".into())?;
    // no 4-cell input maps onto 101
    ensure(
        (0u64..16).all(|u| u & (u >> 1) & 0b111 != 0b101),
        || "independent enumeration found a preimage of 101".into(),
    )?;
    Ok("shift PROVED_SURJECTIVE with zero loss for n ≤ 10; and1d NONSURJECTIVE, orphan 101 verified".into())
}

fn criterion_3() -> Outcome {
    let rules = common::random_rules(100, common::CORPUS_SEED);
    let mut pairs = 0;
    let mut violations = 0;
    for ca in &rules {
        let out: Vec<BigUint> = out_size_transfer_1d(ca, 12, DEFAULT_MAX_SUBSETS)
            .unwrap()
            .into_iter()
            .map(|r| r.out_size)
            .collect();
        for x in 1..12usize {
            for y in 1..=12 - x {
                pairs += 1;
                if out[x + y - 1] > &out[x - 1] * &out[y - 1] {
                    violations += 1;
                }
            }
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok(format!("{} rules, {pairs} (x, y) pairs with x+y ≤ 12, 0 violations", rules.len()))
}

fn criterion_4() -> Outcome {
    let and2 = builtin("and2d");
    let frozen = [[2u64, 4, 8], [4, 16, 58], [8, 58, 340]];
    let boxes = mi(&[3, 3]).boxes_below();
    let mut table = TableFn::new(2);
    for x in &boxes {
        let record = out_size_bruteforce(&and2, x, 1 << 30).map_err(|e| e.to_string())?;
        let (a, b) = (x.get(0) as usize, x.get(1) as usize);
        let got = to_u64(&record.out_size);
        let oracle = and2d_oracle(a, b);
        ensure(got == oracle && got == frozen[a - 1][b - 1], || {
            format!("Out({x}) = {got}, oracle {oracle}, frozen {}", frozen[a - 1][b - 1])
        })?;
        let l = loss(&record);
        ensure(l.lambda_loss >= 0.0, || format!("negative loss at {x}"))?;
        table.insert(x.clone(), l.log_out).unwrap();
    }
    let report = check_subadditivity(&table, &mi(&[3, 3]), &CheckOptions::default()).unwrap();
    ensure(report.passed() && report.exhaustive && report.skipped == 0, || format!("{report:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..20 {
        let sides = mi(&[rng.gen_range(1..=3), rng.gen_range(1..=3)]);
        let by = [rng.gen_range(-100..=100), rng.gen_range(-100..=100)];
        let support = RightPolytope::at_origin(sides.clone());
        let moved = translate_support(&support, &by).unwrap();
        let here = out_size_on(&and2, &support, 1 << 30).unwrap().out_size;
        let there = out_size_on(&and2, &moved, 1 << 30).unwrap().out_size;
        ensure(here == there, || format!("{sides} moved by {by:?}: {here} vs {there}"))?;
    }
    Ok(format!(
        "3x3 table matches oracle, loss ≥ 0, {} subadditivity triples hold, 20 translations agree",
        report.tested
    ))
}

fn criterion_5() -> Outcome {
    let and = builtin("and1d");
    let recurrence = and1d_recurrence(2000);
    let counts = out_size_transfer_1d(&and, 2000, DEFAULT_MAX_SUBSETS).unwrap();
    let mismatches = counts.iter().zip(&recurrence).filter(|(r, a)| r.out_size != **a).count();
    ensure(mismatches == 0, || format!("{mismatches} counts differ from the recurrence"))?;

    let est = lambda_estimate(&and, &diagonal(1, 1, 2000), Limits::default(), &CheckOptions::default())
        .map_err(|e| e.to_string())?;
    let b = &est.bracket;
    let oracle = growth_root().log2();
    ensure(b.contains(0.8114), || format!("[{}, {}] misses 0.8114", b.lower, b.upper))?;
    ensure(b.contains(oracle), || format!("[{}, {}] misses {oracle}", b.lower, b.upper))?;
    ensure(b.width() <= 0.02, || format!("width {}", b.width()))?;
    ensure(est.subadditivity.passed(), || "log-subadditivity violated".into())?;
    Ok(format!(
        "bracket [{:.6}, {:.6}], width {:.2e}, contains log2 λ = {oracle:.6}",
        b.lower,
        b.upper,
        b.width()
    ))
}

fn criterion_6() -> Outcome {
    let and = builtin("and1d");
    let query = ThresholdQuery {
        k: 1.0,
        r: vec![2],
        delta: Some(0.9),
        search_box: mi(&[64]),
        limits: Limits::default(),
        assume_nonsurjective: false,
    };
    let report = loss_threshold(&and, &query).map_err(|e| e.to_string())?;
    let t = report.threshold.ok_or("no threshold in [1, 64]")?.get(0);
    // exact Λ(n) = n - log2 a(n) from the recurrence
    let counts = and1d_recurrence(64);
    for n in t..=64 {
        let lam = n as f64 - counts[n as usize - 1].to_f64().unwrap().log2();
        ensure(lam >= 3.0, || format!("Λ({n}) = {lam} < 3"))?;
    }
    let before = (t - 1) as f64 - counts[t as usize - 2].to_f64().unwrap().log2();
    ensure(t == 1 || before < 3.0, || format!("threshold {t} not minimal"))?;
    Ok(format!("t = {t}; Λ(n) ≥ 3 for all n in [{t}, 64]"))
}

fn criterion_7() -> Outcome {
    let f = from_fn(2, |x| (x[0] * x[1] + x[0] + x[1]) as f64);
    let report = check_subadditivity(&f, &mi(&[10, 10]), &CheckOptions::default()).unwrap();
    ensure(report.passed() && report.exhaustive, || format!("{report:?}"))?;
    let est = running_infimum(&f, &diagonal(2, 1, 1000)).unwrap();
    ensure((est.running_inf - 1.0).abs() <= 5e-3, || format!("running inf {}", est.running_inf))?;
    let grid = mi(&[6, 6]).boxes_below();
    let mut sweeps = 0;
    for t in &grid {
        for x in &grid {
            let bound = decomposition_bound(&f, t, x).unwrap();
            let value = f.eval(x).unwrap();
            ensure(bound >= value, || format!("bound {bound} < f({x}) = {value} at t = {t}"))?;
            sweeps += 1;
        }
    }
    Ok(format!(
        "{} triples exhaustive, running inf {:.6}, bound ≥ f on {sweeps} (t, x) pairs",
        report.tested, est.running_inf
    ))
}

fn criterion_8() -> Outcome {
    let xor = builtin("xor1d");
    for r in out_size_transfer_1d(&xor, 12, DEFAULT_MAX_SUBSETS).unwrap() {
        let brute = out_size_bruteforce(&xor, &r.sides, DEFAULT_BUDGET).unwrap();
        ensure(r.is_full() && brute.is_full(), || format!("xor1d not full at {}", r.sides))?;
    }
    ensure(
        matches!(surjectivity_report(&xor, Limits::default()), SurjectivityVerdict::ProvedSurjective { .. }),
        || "xor1d not proved surjective".into(),
    )?;
    let corpus = common::corpus();
    let mut compared = 0;
    let mut mismatches = 0;
    for ca in &corpus {
        for r in out_size_transfer_1d(ca, 12, DEFAULT_MAX_SUBSETS).unwrap() {
            let brute = out_size_bruteforce(ca, &r.sides, DEFAULT_BUDGET).unwrap();
            compared += 1;
            if brute.out_size != r.out_size {
                mismatches += 1;
            }
        }
    }
    ensure(mismatches == 0, || format!("{mismatches} mismatches"))?;
    Ok(format!("xor1d full to n = 12 and surjective; {} rules, {compared} counts, 0 mismatches", corpus.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "and1d counts", Duration::from_secs(1), criterion_1),
        (2, "shift and and1d verdicts", Duration::from_secs(1), criterion_2),
        (3, "log-subadditivity on random rules", Duration::from_secs(60), criterion_3),
        (4, "and2d table", Duration::from_secs(300), criterion_4),
        (5, "and1d λ bracket", Duration::from_secs(30), criterion_5),
        (6, "and1d loss threshold", Duration::from_secs(30), criterion_6),
        (7, "Fekete engine", Duration::from_secs(10), criterion_7),
        (8, "cross-method agreement", Duration::from_secs(60), criterion_8),
    ];
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; over the {limit:?} limit")),
            other => other,
        };
        let secs = elapsed.as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id} ({name}): PASS [{secs:.3}s] {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {id} ({name}): FAIL [{secs:.3}s] {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
