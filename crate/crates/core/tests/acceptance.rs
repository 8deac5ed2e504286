//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Tolerances are fixed here, not tuned per run.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;

use subdet::anticoncentration::{
    check_global_tail, estimate_lower_tail_grid, ns_success_probability, simulate_ns_sampler, vertex_opt,
    DistanceObjective, VolumeObjective,
};
use subdet::instances::{gen_graphic_regular, gen_ns_hard, gen_random_partition, FactorMode};
use subdet::numkernel::{det_logmag, gram_volume_logmag, RealMatrix, Sign};
use subdet::oracle::{bigint_log_abs, brute_force_partition, brute_force_regular, cauchy_binet_sum, exact_int_det};
use subdet::partition::{eval_fv, reduce_to_unit_quotas, round_to_vertex, solve_partition, trials_for_confidence};
use subdet::regular::{eval_h, round_hypercube, shrink_support, solve_regular, HypercubePoint, RegularInstance};
use subdet::simplex::{sample_uniform, vertex_to_point};
use subdet::{LogMag, PartitionProblem, SeedStream};

const DELTA: f64 = 0.01;
const SLACK: f64 = 1e-9;
const CB_REL_TOL: f64 = 1e-9;
const DET_REL_TOL: f64 = 1e-9;
const BASIS_TOL: f64 = 1e-6;
const SIGMAS: f64 = 4.0;
const PARTITION_BUDGET: Duration = Duration::from_secs(60);
const REGULAR_BUDGET: Duration = Duration::from_secs(120);

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Random partition instance: `m <= 10`, `t <= 4` parts, rank `r` in
/// `r_range`, `d <= 6`.
fn random_partition(rng: &mut impl Rng, r_range: std::ops::RangeInclusive<usize>) -> PartitionProblem {
    loop {
        let t = rng.random_range(1..=4);
        let m = rng.random_range(t.max(3)..=10);
        let r = rng.random_range(r_range.clone());
        let d = rng.random_range(r..=6.min(m));
        let min_part = m / t;
        let mut quotas = vec![0; t];
        for _ in 0..r {
            quotas[rng.random_range(0..t)] += 1;
        }
        if quotas.iter().any(|&b| b > min_part) || d < r {
            continue;
        }
        if let Ok(inst) = gen_random_partition(m, t, &quotas, d, rng) {
            return inst;
        }
    }
}

fn random_graphic(rng: &mut impl Rng, max_edges: usize) -> RegularInstance<f64> {
    let nodes = rng.random_range(3..=5);
    let edges = rng.random_range(nodes..=max_edges);
    gen_graphic_regular(nodes, edges, rng, FactorMode::Gaussian).expect("connected draw")
}

fn partition_oracle() -> Outcome {
    let mut rng = SeedStream::new(1001).fork(0);
    let start = Instant::now();
    let mut ok = 0;
    let mut worst = f64::INFINITY;
    for k in 0..100 {
        let inst = random_partition(&mut rng, 1..=3);
        let trials = trials_for_confidence(inst.rank(), DELTA).unwrap();
        let report = solve_partition(&inst, trials, SeedStream::new(k)).unwrap();
        let exact = brute_force_partition(&inst).unwrap();
        let feasible = inst.is_feasible(&report.chosen_set);
        let ratio_log = report.objective_log.unwrap_or(f64::NEG_INFINITY) - exact.best_log.log_abs;
        worst = worst.min(ratio_log - report.certified_factor_log);
        if feasible && ratio_log >= report.certified_factor_log - SLACK {
            ok += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        ok == 100 && elapsed < PARTITION_BUDGET,
        format!(
            "{ok}/100 within factor, min log-margin {worst:.3}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn is_unit(b: &LogMag) -> bool {
    !b.is_zero() && (b.value().abs() - 1.0).abs() <= BASIS_TOL
}

fn regular_oracle() -> Outcome {
    let mut rng = SeedStream::new(1002).fork(0);
    let start = Instant::now();
    let mut ok = 0;
    let mut worst = f64::INFINITY;
    for k in 0..100 {
        let inst = random_graphic(&mut rng, 10);
        let trials = trials_for_confidence(inst.ground_size().max(2), DELTA).unwrap();
        let report = solve_regular(&inst, trials, SeedStream::new(k)).unwrap();
        let exact = brute_force_regular(&inst).unwrap();
        let (_, b_minor) = inst.minors(&report.chosen_set).unwrap();
        let ratio_log = report.objective_log.unwrap_or(f64::NEG_INFINITY) - exact.best_log.log_abs;
        worst = worst.min(ratio_log - report.certified_factor_log);
        if is_unit(&b_minor) && ratio_log >= report.certified_factor_log - SLACK {
            ok += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        ok == 100 && elapsed < REGULAR_BUDGET,
        format!(
            "{ok}/100 valid bases within factor, min log-margin {worst:.3}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn cauchy_binet() -> Outcome {
    let mut rng = SeedStream::new(1003).fork(0);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let inst = random_graphic(&mut rng, 12);
        let x = HypercubePoint::uniform(inst.ground_size(), &mut rng);
        let h = eval_h(&inst, &x).unwrap().value();
        let cb = cauchy_binet_sum(&inst, &x).unwrap();
        let scale = h.abs().max(cb.abs());
        if scale > 0.0 {
            worst = worst.max((h - cb).abs() / scale);
        }
    }
    outcome(worst <= CB_REL_TOL, format!("500 pairs, max relative gap {worst:.2e}"))
}

fn not_below(after: &LogMag, before: &LogMag) -> bool {
    before.is_zero() || (!after.is_zero() && after.log_abs >= before.log_abs + (1.0 - SLACK).ln())
}

fn monotone_chain(chain: &[LogMag]) -> bool {
    chain.windows(2).all(|w| not_below(&w[1], &w[0]))
}

fn rounding_monotonicity() -> Outcome {
    let mut rng = SeedStream::new(1004).fork(0);
    let mut bad_partition = 0;
    let mut bad_regular = 0;
    let mut bad_shrink = 0;
    let mut shrink_steps = 0;
    for _ in 0..1000 {
        let inst = random_partition(&mut rng, 1..=3);
        let unit = reduce_to_unit_quotas(&inst);
        let x = sample_uniform(unit.shape(), &mut rng);
        let run = round_to_vertex(&unit, &x).unwrap();
        let end = eval_fv(&unit, &vertex_to_point(unit.shape(), &run.vertex).unwrap()).unwrap();
        let start = eval_fv(&unit, &x).unwrap();
        let consistent = (end.log_abs - run.chain.last().unwrap().log_abs).abs() < 1e-9 || end.is_zero();
        if !monotone_chain(&run.chain) || !not_below(&end, &start) || !consistent {
            bad_partition += 1;
        }
    }
    for _ in 0..1000 {
        let inst = random_graphic(&mut rng, 10);
        let d = inst.dim();
        let x = HypercubePoint::uniform(inst.ground_size(), &mut rng);
        let run = round_hypercube(&inst, &x).unwrap();
        if !monotone_chain(&run.chain) {
            bad_regular += 1;
        }
        let support = run.point.support();
        if support.len() < d {
            continue;
        }
        let shrunk = shrink_support(&inst, &support).unwrap();
        for step in &shrunk.steps {
            shrink_steps += 1;
            let ratio = (step.size - d) as f64 / step.size as f64;
            let floor = ratio * step.before.value().abs();
            if step.after.value().abs() < floor - SLACK * step.before.value().abs() {
                bad_shrink += 1;
            }
        }
    }
    outcome(
        bad_partition == 0 && bad_regular == 0 && bad_shrink == 0,
        format!(
            "violations: partition {bad_partition}/1000, regular {bad_regular}/1000, shrink {bad_shrink}/{shrink_steps} steps"
        ),
    )
}

fn ns_reproduction() -> Outcome {
    let p = ns_success_probability(3).unwrap();
    let exact_ok = (p - 27.0 / 84.0).abs() < 1e-15;
    let sim = simulate_ns_sampler(3, 100_000, SeedStream::new(1005)).unwrap();
    let sigma = (p * (1.0 - p) / sim.samples as f64).sqrt();
    let sim_ok = (sim.empirical_prob - p).abs() <= SIGMAS * sigma;
    let mut hits = Vec::new();
    for r in [3usize, 4] {
        let inst: PartitionProblem = gen_ns_hard(r).unwrap();
        let trials = trials_for_confidence(r, DELTA).unwrap();
        let ok = (0..100)
            .filter(|&seed| {
                let report = solve_partition(&inst, trials, SeedStream::new(seed)).unwrap();
                (report.objective_det - 1.0).abs() < 1e-9
            })
            .count();
        hits.push(ok);
    }
    outcome(
        exact_ok && sim_ok && hits.iter().all(|&h| h >= 99),
        format!(
            "r^r/C(r^2,r) at 3 = {p:.6}, simulated {:.5} (4sigma {:.5}), optimum reached r=3 {}/100, r=4 {}/100",
            sim.empirical_prob,
            SIGMAS * sigma,
            hits[0],
            hits[1]
        ),
    )
}

fn global_tail() -> Outcome {
    let mut rng = SeedStream::new(1006).fork(0);
    let mut done = 0;
    let mut passed = 0;
    let mut min_empirical = f64::INFINITY;
    let mut max_bound = 0.0f64;
    while done < 10 {
        let inst = random_partition(&mut rng, 2..=4);
        let unit = reduce_to_unit_quotas(&inst);
        if unit.shape().log_vertex_count() > 1e4f64.ln() {
            continue;
        }
        let f = VolumeObjective::new(&unit);
        let (_, opt) = vertex_opt(&f).unwrap();
        let check = check_global_tail(&f, opt, 2.0, 100_000, SeedStream::new(2000 + done)).unwrap();
        let e = &check.estimate;
        min_empirical = min_empirical.min(e.empirical_prob);
        max_bound = max_bound.max(e.bound);
        if check.passes {
            passed += 1;
        }
        done += 1;
    }
    outcome(
        passed == 10,
        format!("{passed}/10 pass, min empirical {min_empirical:.4}, max bound {max_bound:.4}"),
    )
}

fn distance_tail() -> Outcome {
    let mut rng = SeedStream::new(1007).fork(0);
    let cs = [0.05, 0.1, 0.2];
    let mut rows = 0;
    let mut passed = 0;
    let mut worst_gap = f64::NEG_INFINITY;
    for k in 0..10 {
        let t = rng.random_range(2..=5);
        let d = rng.random_range(1..=6);
        let vectors: Vec<Vec<f64>> = (0..t)
            .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let f = DistanceObjective::new(vectors).unwrap();
        let (_, opt) = vertex_opt(&f).unwrap();
        for est in estimate_lower_tail_grid(&f, opt, &cs, 2.0, 100_000, SeedStream::new(3000 + k)).unwrap() {
            rows += 1;
            worst_gap = worst_gap.max(est.empirical_prob - est.bound);
            if est.below_bound() {
                passed += 1;
            }
        }
    }
    outcome(
        passed == rows,
        format!("{passed}/{rows} rows under 2tc + 4sigma, max empirical - bound {worst_gap:.4}"),
    )
}

fn numeric_kernels() -> Outcome {
    let mut rng = SeedStream::new(1008).fork(0);
    let mut bad_det = 0;
    let mut bad_gram = 0;
    let mut singular = 0;
    for _ in 0..10_000 {
        let n = rng.random_range(1..=5);
        let data = (0..n * n).map(|_| rng.random_range(-3i32..=3) as f64).collect();
        let a = RealMatrix::new(n, n, data).unwrap();
        let exact = exact_int_det(&a).unwrap();
        let lu = det_logmag(&a).unwrap();
        let gram = gram_volume_logmag(&a).unwrap();
        if exact == 0.into() {
            singular += 1;
            bad_det += usize::from(!lu.is_zero());
            bad_gram += usize::from(!gram.is_zero());
            continue;
        }
        let log = bigint_log_abs(&exact);
        let tol = DET_REL_TOL * log.abs().max(1.0);
        let sign = if exact > 0.into() {
            Sign::Positive
        } else {
            Sign::Negative
        };
        if lu.sign != sign || (lu.log_abs - log).abs() > tol {
            bad_det += 1;
        }
        if gram.sign != Sign::Positive || (gram.log_abs - log).abs() > tol {
            bad_gram += 1;
        }
    }
    outcome(
        bad_det == 0 && bad_gram == 0,
        format!("10000 matrices ({singular} singular), mismatches: det {bad_det}, gram {bad_gram}"),
    )
}

fn cli(args: &[&str], threads: Option<&str>) -> (i32, Vec<u8>) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_subdet"));
    cmd.args(args).env_remove("SUBDET_THREADS");
    if let Some(n) = threads {
        cmd.args(["--threads", n]);
    }
    let out = cmd.output().expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let gens: [(&str, &[&str]); 3] = [
        (
            "p.json",
            &[
                "--kind",
                "random-psd-partition",
                "--m",
                "9",
                "--d",
                "5",
                "--quotas",
                "2,1,1",
                "--seed",
                "5",
            ],
        ),
        (
            "g.json",
            &[
                "--kind",
                "graphic-regular",
                "--nodes",
                "5",
                "--edges",
                "9",
                "--seed",
                "5",
            ],
        ),
        ("ns.json", &["--kind", "ns-hard", "--r", "3"]),
    ];
    let mut runs = 0;
    let mut mismatches = Vec::new();
    for (name, flags) in gens {
        let file = path(name);
        let mut args = vec!["gen"];
        args.extend_from_slice(flags);
        args.extend_from_slice(&["--out", &file]);
        let (code, _) = cli(&args, None);
        if code != 0 || !Path::new(&file).exists() {
            return outcome(false, format!("gen {name} exited {code}"));
        }
        let commands: [Vec<&str>; 2] = [
            vec!["solve", "--instance", &file, "--seed", "42"],
            vec![
                "anticoncentration",
                "--instance",
                &file,
                "--samples",
                "20000",
                "--seed",
                "42",
            ],
        ];
        for args in &commands {
            let outputs: Vec<(i32, Vec<u8>)> = [Some("1"), Some("1"), Some("4"), Some("4")]
                .iter()
                .map(|t| cli(args, *t))
                .collect();
            runs += outputs.len();
            if outputs.iter().any(|o| o != &outputs[0]) || outputs[0].1.is_empty() {
                mismatches.push(format!("{} {name}", args[0]));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!("{runs} runs byte-identical across repeats and --threads 1/4")
        } else {
            format!("differing outputs: {}", mismatches.join(", "))
        },
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("partition solver vs exhaustive optimum", partition_oracle),
        ("regular solver vs exhaustive optimum", regular_oracle),
        ("multilinear h vs Cauchy-Binet expansion", cauchy_binet),
        ("rounding and shrink monotonicity", rounding_monotonicity),
        ("repeated-unit-vector instance", ns_reproduction),
        ("global tail of the volume relaxation", global_tail),
        ("distance-function lower tail", distance_tail),
        ("numeric kernels vs exact integer determinant", numeric_kernels),
        ("CLI determinism", determinism),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        if !result.pass {
            failures += 1;
        }
        println!(
            "{} {}. {name}: {} [{:.1}s]",
            if result.pass { "PASS" } else { "FAIL" },
            k + 1,
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
