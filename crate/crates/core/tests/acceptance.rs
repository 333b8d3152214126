//! Acceptance suite. Each criterion is its own test, run one at a time, and
//! writes a single PASS/FAIL line to stdout (bypassing output capture).

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use hashcount::counter::{approx_count, compute_params};
use hashcount::formula::{CnfFormula, Lit, ProjectedWitness, Var, Witness};
use hashcount::hashing::{apply_hash, draw_hash, draw_target, hash_to_constraints, CellTarget, XorHash};
use hashcount::indsupport::{is_independent_support, minimize_support};
use hashcount::oracle::{
    enumerate_solutions, exact_count, exact_uniform_sample, exact_weighted_count, two_sample_report,
    DEFAULT_CAP,
};
use hashcount::rng::{derive_seed, seeded};
use hashcount::sampler::{parallel_sample, sampler_params, unigen_sample, SampleMode};
use hashcount::solver::bounded_enumerate;
use hashcount::weighted::{
    chain_formula, reduce_wmc_to_umc, weighted_sample, DyadicWeight, WeightedCnf, DEFAULT_PRECISION,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use statrs::distribution::{Beta, ContinuousCDF};

static SERIAL: Mutex<()> = Mutex::new(());

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {id:>2} [{verdict}] {name}: {detail}");
    let _ = out.flush();
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

/// Random 3-CNF with three distinct variables per clause.
fn random_3cnf<R: Rng>(n: u32, m: usize, rng: &mut R) -> CnfFormula {
    let vars: Vec<i64> = (1..=n as i64).collect();
    let clauses: Vec<Vec<i64>> = (0..m)
        .map(|_| {
            vars.choose_multiple(rng, 3)
                .map(|&v| if rng.random::<bool>() { v } else { -v })
                .collect()
        })
        .collect();
    CnfFormula::from_clauses(n, clauses).unwrap()
}

/// Model count by evaluating every assignment with clause bitmasks.
fn naive_count(f: &CnfFormula) -> u64 {
    let masks: Vec<(u64, u64)> = f
        .clauses()
        .iter()
        .map(|c| {
            c.iter().fold((0u64, 0u64), |(p, q), l| {
                let bit = 1u64 << l.var().index();
                if l.is_positive() {
                    (p | bit, q)
                } else {
                    (p, q | bit)
                }
            })
        })
        .collect();
    (0..1u64 << f.num_vars())
        .filter(|&x| masks.iter().all(|&(p, q)| x & p != 0 || !x & q != 0))
        .count() as u64
}

fn clopper_pearson_lower(k: u64, n: u64, alpha: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    Beta::new(k as f64, (n - k + 1) as f64).unwrap().inverse_cdf(alpha)
}

#[test]
fn criterion_01_three_universality() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let members: Vec<XorHash> = (0..16u32)
        .map(|bits| {
            let row: Vec<bool> = (0..4).map(|k| bits >> k & 1 == 1).collect();
            XorHash::from_rows(3, &[row]).unwrap()
        })
        .collect();
    let inputs: Vec<Vec<bool>> = (0..8u32).map(|y| (0..3).map(|k| y >> k & 1 == 1).collect()).collect();
    let mut checked = 0;
    let mut ok = true;
    for a in 0..8 {
        for b in a + 1..8 {
            for c in b + 1..8 {
                for t in 0..8u32 {
                    let target = [t & 1 == 1, t >> 1 & 1 == 1, t >> 2 & 1 == 1];
                    let hits = members
                        .iter()
                        .filter(|h| {
                            [a, b, c]
                                .iter()
                                .zip(target)
                                .all(|(&y, want)| apply_hash(h, &inputs[y]).unwrap()[0] == want)
                        })
                        .count();
                    ok &= hits == 2;
                    checked += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = ok && members.len() == 16 && within(elapsed, Duration::from_secs(1));
    report(
        1,
        "3-universality of H_xor(3,1)",
        pass,
        &format!("{checked} (triple, target) cases, each realized by exactly 2 of 16 members: {ok}; {elapsed:.2?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_counter_accuracy() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut gen = seeded(2024);
    let mut total = 0u64;
    let mut good = 0u64;
    let mut hashed_runs = 0u64;
    let mut rel_errors = Vec::new();
    for _ in 0..100 {
        let n = gen.random_range(8..=16u32);
        let ratio = gen.random_range(1.0..=3.0f64);
        let f = random_3cnf(n, (ratio * n as f64).round() as usize, &mut gen);
        let truth = exact_count(&f, &f.support(), DEFAULT_CAP).unwrap() as f64;
        for s in 0..20u64 {
            let est = approx_count(&f, &f.support(), 0.75, 0.2, &mut seeded(derive_seed(n as u64, s) ^ gen.random::<u64>()))
                .unwrap();
            let v = est.value.to_f64().unwrap();
            total += 1;
            if !est.exact {
                hashed_runs += 1;
            }
            if v >= truth / 1.75 && v <= truth * 1.75 {
                good += 1;
            }
            if truth > 0.0 {
                rel_errors.push((v - truth).abs() / truth);
            }
        }
    }
    rel_errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_err = rel_errors[rel_errors.len() / 2];
    let lower = clopper_pearson_lower(good, total, 0.05);
    let elapsed = start.elapsed();
    let pass = lower >= 0.8 && within(elapsed, Duration::from_secs(15 * 60));
    report(
        2,
        "counter accuracy (eps 0.75, delta 0.2)",
        pass,
        &format!(
            "{good}/{total} within factor 1.75 ({hashed_runs} hashed runs), 95% lower bound {lower:.4}; median relative error {:.2}% (informational); {elapsed:.2?}",
            100.0 * median_err
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_exact_shortcut() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut gen = seeded(303);
    let mut corpus = vec![
        CnfFormula::from_clauses(1, [vec![1], vec![-1]]).unwrap(),
        CnfFormula::from_clauses(3, [vec![1], vec![2], vec![3]]).unwrap(),
        CnfFormula::new(5),
    ];
    while corpus.len() < 120 {
        let n = gen.random_range(4..=14u32);
        let m = (gen.random_range(1.5..=6.0f64) * n as f64) as usize;
        let mut f = random_3cnf(n, m, &mut gen);
        if gen.random_range(0..4) == 0 {
            let k = gen.random_range(1..=n);
            let mut vs: Vec<Var> = f.support();
            vs.shuffle(&mut gen);
            f.set_sampling_set(vs.into_iter().take(k as usize)).unwrap();
        }
        if exact_count(&f, &f.projection_vars(), DEFAULT_CAP).unwrap() <= 52 {
            corpus.push(f);
        }
    }
    let mut runs = 0;
    let mut exact_hits = 0;
    for (i, f) in corpus.iter().enumerate() {
        let truth = exact_count(f, &f.projection_vars(), DEFAULT_CAP).unwrap();
        for (eps, delta) in [(0.8, 0.2), (0.75, 0.2), (0.8, 0.05)] {
            let pivot = compute_params(eps, delta).unwrap().pivot as u128;
            assert!(truth <= pivot);
            for s in 0..3 {
                let est = approx_count(f, &f.projection_vars(), eps, delta, &mut seeded(i as u64 * 7 + s)).unwrap();
                runs += 1;
                if est.exact && est.value == truth.into() {
                    exact_hits += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = exact_hits == runs && within(elapsed, Duration::from_secs(60));
    report(
        3,
        "exact shortcut below the pivot",
        pass,
        &format!("{exact_hits}/{runs} runs on {} formulas returned the exact count; {elapsed:.2?}", corpus.len()),
    );
    assert!(pass);
}

/// A random 3-CNF with a projected count in `[lo, hi]`, found by scanning seeds.
fn instance_with_count(lo: u64, hi: u64, n: u32, seed: u64) -> CnfFormula {
    let mut gen = seeded(seed);
    loop {
        let m = gen.random_range(n as usize..=3 * n as usize);
        let f = random_3cnf(n, m, &mut gen);
        let c = naive_count(&f);
        if (lo..=hi).contains(&c) {
            return f;
        }
    }
}

#[test]
fn criterion_04_sampler_uniformity() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let f = instance_with_count(100, 200, 12, 44);
    let vars = f.support();
    let reference = enumerate_solutions(&f, &vars, DEFAULT_CAP).unwrap();
    let r = reference.len();
    let n_samples = 100 * r;
    let eps = 16.0;
    let mut not_rejected = 0;
    let mut worst_ratio: f64 = 1.0;
    let mut ratio_ok = true;
    let expected = n_samples as f64 / r as f64;
    let rel_sigma = 1.0 / expected.sqrt();
    let ratio_limit = (1.0 + eps) * (1.0 + eps) * (1.0 + 3.0 * rel_sigma) / (1.0 - 3.0 * rel_sigma);
    let mut hashed = true;
    for rep in 0..20u64 {
        let batch = unigen_sample(&f, &vars, eps, n_samples, SampleMode::Single, &mut seeded(1000 + rep)).unwrap();
        hashed &= !batch.exact;
        let uniform = exact_uniform_sample(&f, &vars, &mut seeded(5000 + rep), n_samples, DEFAULT_CAP).unwrap();
        let two = two_sample_report(&batch.witnesses, &uniform, &reference).unwrap();
        if two.chi_square.p_value > 0.01 {
            not_rejected += 1;
        }
        match two.first.freq_ratio {
            Some(x) => {
                worst_ratio = worst_ratio.max(x);
                ratio_ok &= x <= ratio_limit;
            }
            None => ratio_ok = false,
        }
    }
    let elapsed = start.elapsed();
    let pass = not_rejected >= 18 && ratio_ok && hashed && within(elapsed, Duration::from_secs(20 * 60));
    report(
        4,
        "sampler uniformity vs exact uniform sampler",
        pass,
        &format!(
            "|R| = {r}, {n_samples} samples per side; two-sample test not rejected at 0.01 in {not_rejected}/20; worst freq ratio {worst_ratio:.3} (limit {ratio_limit:.1}); hashing path used: {hashed}; {elapsed:.2?}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_05_cell_partition() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut rng = seeded(55);
    let mut ok = true;
    for _ in 0..100 {
        let n = rng.random_range(1..=6usize);
        let m = rng.random_range(0..=3usize);
        let h = draw_hash(n, m, &mut rng);
        let points: Vec<Vec<bool>> = (0..1u32 << n).map(|y| (0..n).map(|k| y >> k & 1 == 1).collect()).collect();
        let mut cells: HashMap<Vec<bool>, Vec<usize>> = HashMap::new();
        for (i, y) in points.iter().enumerate() {
            cells.entry(apply_hash(&h, y).unwrap()).or_default().push(i);
        }
        // Disjoint by construction of the map; check coverage and compare
        // every cell with the solver's enumeration of the XOR constraints.
        let covered: usize = cells.values().map(|c| c.len()).sum();
        ok &= covered == 1 << n;
        let free = CnfFormula::new(n as u32);
        let vars = free.support();
        let mut union = HashSet::new();
        for a in 0..1u32 << m {
            let alpha = CellTarget::new((0..m).map(|k| a >> k & 1 == 1).collect());
            let xs = hash_to_constraints(&h, &alpha, &vars).unwrap();
            let got: HashSet<ProjectedWitness> = bounded_enumerate(&free, &xs, &vars, usize::MAX).into_witnesses().into_iter().collect();
            let want: HashSet<ProjectedWitness> = cells
                .get(alpha.bits())
                .map(|c| c.iter().map(|&i| Witness::new(points[i].clone()).project(&vars).unwrap()).collect())
                .unwrap_or_default();
            ok &= got == want;
            for w in got {
                ok &= union.insert(w);
            }
        }
        ok &= union.len() == 1 << n;
        let _ = draw_target(0, &mut rng);
    }
    let elapsed = start.elapsed();
    let pass = ok && within(elapsed, Duration::from_secs(60));
    report(
        5,
        "cells partition the cube",
        pass,
        &format!("100 random hashes (n <= 6, m <= 3), brute force and solver cells agree and partition: {ok}; {elapsed:.2?}"),
    );
    assert!(pass);
}

/// Inputs plus Tseitin-encoded gates over earlier variables, with a few
/// random clauses over the inputs; variables are randomly renumbered.
fn planted_formula(seed: u64) -> (CnfFormula, usize) {
    let mut rng = seeded(seed);
    loop {
        let k = rng.random_range(4..=7usize);
        let g = rng.random_range(3..=6usize);
        let n = k + g;
        let mut perm: Vec<i64> = (1..=n as i64).collect();
        perm.shuffle(&mut rng);
        let lit = |v: usize, pos: bool| if pos { perm[v] } else { -perm[v] };
        let mut clauses: Vec<Vec<i64>> = Vec::new();
        for o in k..n {
            let ab: Vec<usize> = (0..o).collect::<Vec<_>>().choose_multiple(&mut rng, 2).copied().collect();
            let (a, b) = (ab[0], ab[1]);
            match rng.random_range(0..3) {
                0 => {
                    clauses.push(vec![lit(o, false), lit(a, true)]);
                    clauses.push(vec![lit(o, false), lit(b, true)]);
                    clauses.push(vec![lit(o, true), lit(a, false), lit(b, false)]);
                }
                1 => {
                    clauses.push(vec![lit(o, true), lit(a, false)]);
                    clauses.push(vec![lit(o, true), lit(b, false)]);
                    clauses.push(vec![lit(o, false), lit(a, true), lit(b, true)]);
                }
                _ => {
                    clauses.push(vec![lit(o, false), lit(a, true), lit(b, true)]);
                    clauses.push(vec![lit(o, false), lit(a, false), lit(b, false)]);
                    clauses.push(vec![lit(o, true), lit(a, false), lit(b, true)]);
                    clauses.push(vec![lit(o, true), lit(a, true), lit(b, false)]);
                }
            }
        }
        for _ in 0..rng.random_range(0..=2) {
            let vs: Vec<usize> = (0..k).collect::<Vec<_>>().choose_multiple(&mut rng, 3).copied().collect();
            clauses.push(vs.iter().map(|&v| lit(v, rng.random())).collect());
        }
        let f = CnfFormula::from_clauses(n as u32, clauses).unwrap();
        if exact_count(&f, &f.support(), DEFAULT_CAP).unwrap() > 0 {
            return (f, k);
        }
    }
}

fn mean_row_width(vars: usize, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    let h = draw_hash(vars, 200, &mut rng);
    (0..200).map(|i| h.row_weight(i) as f64).sum::<f64>() / 200.0
}

#[test]
fn criterion_06_mis_correctness() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut all_ok = true;
    let mut width_i = 0.0;
    let mut width_x = 0.0;
    let mut failures = Vec::new();
    let (mut size_i, mut size_inputs) = (0, 0);
    for seed in 0..20u64 {
        let (f, inputs) = planted_formula(seed);
        let x = f.support();
        let i = minimize_support(&f, &x, None, None).unwrap();
        let full = exact_count(&f, &x, DEFAULT_CAP).unwrap();
        let independent = is_independent_support(&f, &i).unwrap().independent;
        let minimal = i.iter().all(|&v| {
            let rest: Vec<Var> = i.iter().copied().filter(|&u| u != v).collect();
            !is_independent_support(&f, &rest).unwrap().independent
                && exact_count(&f, &rest, DEFAULT_CAP).unwrap() < full
        });
        let same_count = exact_count(&f, &i, DEFAULT_CAP).unwrap() == full;
        let ok = independent && minimal && same_count;
        size_i += i.len();
        size_inputs += inputs;
        if !ok {
            failures.push(seed);
        }
        all_ok &= ok;
        width_i += mean_row_width(i.len(), seed);
        width_x += mean_row_width(x.len(), seed);
    }
    let elapsed = start.elapsed();
    let pass = all_ok && within(elapsed, Duration::from_secs(5 * 60));
    report(
        6,
        "independent support minimization",
        pass,
        &format!(
            "20 planted formulas: independent, minimal and count-preserving: {all_ok} (failing seeds {failures:?}); total |I| {size_i} vs {size_inputs} planted inputs; mean XOR width over I {:.2} vs over X {:.2} (informational); {elapsed:.2?}",
            width_i / 20.0,
            width_x / 20.0
        ),
    );
    assert!(pass);
}

fn weighted_corpus() -> Vec<WeightedCnf> {
    let mut rng = seeded(77);
    let mut out = Vec::new();
    while out.len() < 40 {
        let n = rng.random_range(2..=10u32);
        let m = rng.random_range(0..=2 * n as usize);
        let mut w = WeightedCnf::unweighted(random_3cnf(n.max(3), m, &mut rng));
        let n = w.formula.num_vars();
        let mut budget = 24 - n as i64;
        let mut order: Vec<u32> = (1..=n).collect();
        order.shuffle(&mut rng);
        for v in order {
            let bits = rng.random_range(0..=4u32);
            if budget < bits as i64 || rng.random_range(0..5) == 0 {
                continue;
            }
            budget -= bits as i64;
            let var = Var::new(v);
            let pos = DyadicWeight::new(rng.random_range(0..=1u64 << bits), bits).unwrap();
            if rng.random_range(0..3) == 0 {
                let nb = rng.random_range(0..=bits);
                let mut neg = DyadicWeight::new(rng.random_range(0..=1u64 << nb), nb).unwrap();
                if pos.k == 0 && neg.k == 0 {
                    neg = DyadicWeight::one();
                }
                w.weights.insert(var.pos(), pos);
                w.weights.insert(var.neg(), neg);
            } else {
                w.set_weight(var, pos).unwrap();
            }
        }
        out.push(w);
    }
    out
}

fn brute_weight(w: &WeightedCnf) -> BigRational {
    let n = w.formula.num_vars();
    let mut total = BigRational::from_integer(0.into());
    for b in 0..1u64 << n {
        let wit = Witness::from_bits(b, n);
        if !hashcount::formula::evaluate(&w.formula, &wit).unwrap() {
            continue;
        }
        let mut p = BigRational::from_integer(1.into());
        for i in 1..=n {
            let v = Var::new(i);
            p *= w.literal_weight(v.lit(wit.value(v).unwrap())).value();
        }
        total += p;
    }
    total
}

#[test]
fn criterion_07_wmc_to_umc_exactness() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut ok_red = 0;
    let corpus = weighted_corpus();
    let mut max_vars = 0;
    for w in &corpus {
        let r = reduce_wmc_to_umc(w).unwrap();
        max_vars = max_vars.max(r.formula.num_vars());
        let lhs = BigRational::from_integer(BigInt::from(naive_count(&r.formula)));
        let weight = brute_weight(w);
        let rhs = &weight * BigRational::from_integer(BigInt::from(1u64) << r.scale_log2);
        if lhs == rhs && weight == exact_weighted_count(w, DEFAULT_CAP).unwrap() {
            ok_red += 1;
        }
    }
    let mut ok_chain = 0;
    let mut chains = 0;
    for m in 0..=10u32 {
        for k in 0..=1u64 << m {
            chains += 1;
            if naive_count(&chain_formula(k, m).unwrap()) == k {
                ok_chain += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = ok_red == corpus.len() && ok_chain == chains && within(elapsed, Duration::from_secs(5 * 60));
    report(
        7,
        "weighted to unweighted reduction is exact",
        pass,
        &format!(
            "{ok_red}/{} weighted instances exact (reduced formulas up to {max_vars} vars); {ok_chain}/{chains} chain formulas exact; {elapsed:.2?}",
            corpus.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_weighted_sampling_proportionality() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let f = hashcount::formula::parse_dimacs(b"c p weight 1 0.75 0\np cnf 1 0\n").unwrap();
    let (w, _) = WeightedCnf::from_formula(f, DEFAULT_PRECISION).unwrap();
    let eps = 16.0;
    let n = 20_000usize;
    let (batch, red) = weighted_sample(&w, eps, n, SampleMode::Single, 1, 808).unwrap();
    let ones = batch.witnesses.iter().filter(|s| s.value(Var::new(1)) == Some(true)).count();
    let p_hat = ones as f64 / n as f64;
    let sigma = (0.75f64 * 0.25 / n as f64).sqrt();
    // Almost-uniform sampling over the reduced formula keeps each model's
    // probability within a factor (1 + eps) of uniform.
    let lower = 0.75 / (1.0 + eps) - 3.0 * sigma;
    let upper = (0.75 * (1.0 + eps)).min(1.0) + 3.0 * sigma;
    let band_lo = 1.0 - lower / 0.75;
    let band_hi = upper / 0.75 - 1.0;
    let elapsed = start.elapsed();
    let pass = p_hat >= lower && p_hat <= upper && !batch.exact && within(elapsed, Duration::from_secs(5 * 60));
    report(
        8,
        "weighted sampling proportional to weight",
        pass,
        &format!(
            "Pr[v=1] = {p_hat:.4} over {n} samples (band [-{band_lo:.3}, +{band_hi:.3}] around 0.75; within 3 sigma of 0.75: {}); {} reduced vars, hashing path: {}; {elapsed:.2?}",
            (p_hat - 0.75).abs() <= 3.0 * sigma,
            red.formula.num_vars(),
            !batch.exact
        ),
    );
    assert!(pass);
}

fn parallel_instance() -> CnfFormula {
    instance_with_count(1500, 4000, 16, 909)
}

#[test]
fn criterion_09a_parallel_determinism() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let f = parallel_instance();
    let vars = f.support();
    let mut ok = true;
    for mode in [SampleMode::Single, SampleMode::Multi] {
        let base = parallel_sample(&f, &vars, 16.0, 120, mode, 1, 4242).unwrap();
        for workers in [2, 4] {
            let other = parallel_sample(&f, &vars, 16.0, 120, mode, workers, 4242).unwrap();
            let mut a = base.witnesses.clone();
            let mut b = other.witnesses.clone();
            ok &= a == b && base == other;
            a.sort();
            b.sort();
            ok &= a == b;
        }
    }
    let seq = unigen_sample(&f, &vars, 16.0, 50, SampleMode::Single, &mut seeded(9)).unwrap();
    let master = rand::RngCore::next_u64(&mut seeded(9));
    ok &= seq == parallel_sample(&f, &vars, 16.0, 50, SampleMode::Single, 1, master).unwrap();
    let elapsed = start.elapsed();
    let pass = ok && within(elapsed, Duration::from_secs(10 * 60));
    report(
        9,
        "parallel sampling determinism (workers 1, 2, 4)",
        pass,
        &format!("identical outputs in single and multi mode: {ok}; {elapsed:.2?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_09b_parallel_speedup() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let f = parallel_instance();
    let vars = f.support();
    let samples = 1500;
    let timed = |workers: usize| {
        let t = Instant::now();
        let b = parallel_sample(&f, &vars, 16.0, samples, SampleMode::Single, workers, 77).unwrap();
        (t.elapsed(), b)
    };
    let (t1, b1) = timed(1);
    let (t4, b4) = timed(4);
    let speedup = t1.as_secs_f64() / t4.as_secs_f64();
    let cpus = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let elapsed = start.elapsed();
    let pass = speedup >= 2.0 && b1 == b4 && within(elapsed, Duration::from_secs(10 * 60));
    report(
        9,
        "parallel sampling speedup with 4 workers",
        pass,
        &format!(
            "{samples} samples: 1 worker {t1:.2?}, 4 workers {t4:.2?}, speedup {speedup:.2}x (need 2x; {cpus} CPU(s) available); {elapsed:.2?}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_reproducibility() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let dir = std::env::temp_dir().join(format!("hashcount-acc-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let medium = dir.join("medium.cnf");
    std::fs::write(&medium, hashcount::formula::emit_dimacs(&instance_with_count(200, 600, 12, 10))).unwrap();
    let small = dir.join("small.cnf");
    std::fs::write(&small, "p cnf 3 2\n1 2 0\n-2 3 0\n").unwrap();
    let weighted = dir.join("weighted.cnf");
    std::fs::write(&weighted, "c p weight 1 0.75 0\nc p weight 2 0.4 0\np cnf 3 1\n1 2 3 0\n").unwrap();
    let (m, s, w) = (medium.to_str().unwrap(), small.to_str().unwrap(), weighted.to_str().unwrap());
    let commands: Vec<Vec<&str>> = vec![
        vec!["count", "--seed", "11", m],
        vec!["count", "--seed", "11", "--use-mis", m],
        vec!["sample", "--seed", "11", "--samples", "40", m],
        vec!["sample", "--seed", "11", "--samples", "40", "--mode", "multi", m],
        vec!["mis", "--seed", "11", m],
        vec!["wcount", "--seed", "11", w],
        vec!["wsample", "--seed", "11", "--samples", "40", w],
        vec!["exact", "--seed", "11", w],
        vec!["validate", "--seed", "11", s],
    ];
    let bin = env!("CARGO_BIN_EXE_hashcount");
    let mut identical = 0;
    let mut total = 0;
    for args in &commands {
        for format in ["text", "json"] {
            let run = |extra: &[&str]| {
                Command::new(bin)
                    .args(["--format", format])
                    .args(args)
                    .args(extra)
                    .output()
                    .unwrap()
            };
            let a = run(&[]);
            let b = run(&[]);
            total += 1;
            if a.status.success() && a.stdout == b.stdout && !a.stdout.is_empty() {
                identical += 1;
            }
            if args[0].ends_with("sample") {
                total += 1;
                let c = run(&["--workers", "3"]);
                if c.stdout == a.stdout {
                    identical += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = identical == total && within(elapsed, Duration::from_secs(60));
    report(
        10,
        "byte-identical output for a fixed seed",
        pass,
        &format!("{identical}/{total} command runs reproduced byte for byte; {elapsed:.2?}"),
    );
    assert!(pass);
}

#[test]
fn sampler_thresholds_used_by_suite() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let p = sampler_params(16.0).unwrap();
    assert_eq!((p.lo_thresh, p.hi_thresh), (11, 64));
    let _ = Lit::from_dimacs(1);
}
