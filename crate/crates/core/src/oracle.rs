//! Brute-force ground truth for small formulas.
//!
//! A plain DPLL search with clause-scanning unit propagation enumerates or
//! counts projected solutions exactly. On top of it sit an exactly uniform
//! sampler, exact weighted sums and tilt, and chi-square comparisons of
//! sample histograms.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::formula::{CnfFormula, FormulaError, Lit, ProjectedWitness, Var};
use crate::weighted::WeightedCnf;

pub const DEFAULT_CAP: u32 = 20;
pub const MAX_CAP: u32 = 127;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("formula has {n} variables, above the oracle cap of {cap}")]
    TooManyVars { n: u32, cap: u32 },
    #[error("oracle cap must be at most {MAX_CAP}, got {0}")]
    CapTooLarge(u32),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("formula is unsatisfiable")]
    Unsatisfiable,
    #[error("reference solution set is empty")]
    EmptyReference,
    #[error("sample {0} is not a reference solution")]
    OutsideReference(ProjectedWitness),
}

fn check_cap(f: &CnfFormula, cap: u32) -> Result<(), OracleError> {
    if cap > MAX_CAP {
        return Err(OracleError::CapTooLarge(cap));
    }
    if f.num_vars() > cap {
        return Err(OracleError::TooManyVars { n: f.num_vars(), cap });
    }
    Ok(())
}

struct Search<'a> {
    clauses: &'a [Vec<Lit>],
    s_vars: Vec<Var>,
}

type Assign = Vec<Option<bool>>;

fn lit_value(a: &Assign, l: Lit) -> Option<bool> {
    a[l.var().index()].map(|b| l.eval(b))
}

impl Search<'_> {
    fn new<'a>(f: &'a CnfFormula, vars: &[Var]) -> Search<'a> {
        let mut s_vars = vars.to_vec();
        s_vars.sort();
        s_vars.dedup();
        Search {
            clauses: f.clauses(),
            s_vars,
        }
    }

    /// Unit propagation to fixpoint; `false` on conflict.
    fn propagate(&self, a: &mut Assign) -> bool {
        loop {
            let mut changed = false;
            for c in self.clauses {
                let mut open = None;
                let mut n_open = 0;
                let mut sat = false;
                for &l in c {
                    match lit_value(a, l) {
                        Some(true) => {
                            sat = true;
                            break;
                        }
                        Some(false) => {}
                        None => {
                            n_open += 1;
                            open = Some(l);
                        }
                    }
                }
                if sat {
                    continue;
                }
                match (n_open, open) {
                    (0, _) => return false,
                    (1, Some(l)) => {
                        a[l.var().index()] = Some(l.is_positive());
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn first_open_clause_var(&self, a: &Assign) -> Option<Var> {
        self.clauses
            .iter()
            .find(|c| !c.iter().any(|&l| lit_value(a, l) == Some(true)))
            .and_then(|c| c.iter().find(|l| a[l.var().index()].is_none()).map(|l| l.var()))
    }

    fn satisfiable(&self, mut a: Assign) -> bool {
        if !self.propagate(&mut a) {
            return false;
        }
        let Some(v) = self.first_open_clause_var(&a) else {
            return true;
        };
        [false, true].into_iter().any(|b| {
            let mut next = a.clone();
            next[v.index()] = Some(b);
            self.satisfiable(next)
        })
    }

    fn open_s(&self, a: &Assign) -> Vec<Var> {
        self.s_vars.iter().copied().filter(|v| a[v.index()].is_none()).collect()
    }

    fn count(&self, mut a: Assign) -> u128 {
        if !self.propagate(&mut a) {
            return 0;
        }
        let open = self.open_s(&a);
        if self.first_open_clause_var(&a).is_none() {
            return 1u128 << open.len();
        }
        match open.first() {
            Some(&v) => [false, true]
                .into_iter()
                .map(|b| {
                    let mut next = a.clone();
                    next[v.index()] = Some(b);
                    self.count(next)
                })
                .sum(),
            None => self.satisfiable(a) as u128,
        }
    }

    fn enumerate(&self, mut a: Assign, out: &mut Vec<Vec<bool>>) {
        if !self.propagate(&mut a) {
            return;
        }
        let open = self.open_s(&a);
        if self.first_open_clause_var(&a).is_none() {
            let fixed: Vec<Option<bool>> = self.s_vars.iter().map(|v| a[v.index()]).collect();
            for bits in 0..1u128 << open.len() {
                let mut k = 0;
                out.push(
                    fixed
                        .iter()
                        .map(|x| {
                            x.unwrap_or_else(|| {
                                let b = bits >> k & 1 == 1;
                                k += 1;
                                b
                            })
                        })
                        .collect(),
                );
            }
            return;
        }
        match open.first() {
            Some(&v) => {
                for b in [false, true] {
                    let mut next = a.clone();
                    next[v.index()] = Some(b);
                    self.enumerate(next, out);
                }
            }
            None => {
                if self.satisfiable(a.clone()) {
                    out.push(self.s_vars.iter().map(|v| a[v.index()].expect("assigned")).collect());
                }
            }
        }
    }
}

/// `|R(f)↓vars|` by exhaustive search.
pub fn exact_count(f: &CnfFormula, vars: &[Var], cap: u32) -> Result<u128, OracleError> {
    check_cap(f, cap)?;
    f.check_subset(vars)?;
    let s = Search::new(f, vars);
    Ok(s.count(vec![None; f.num_vars() as usize]))
}

/// All projected solutions, sorted.
pub fn enumerate_solutions(f: &CnfFormula, vars: &[Var], cap: u32) -> Result<Vec<ProjectedWitness>, OracleError> {
    check_cap(f, cap)?;
    f.check_subset(vars)?;
    let s = Search::new(f, vars);
    let mut raw = Vec::new();
    s.enumerate(vec![None; f.num_vars() as usize], &mut raw);
    let mut out: Vec<ProjectedWitness> = raw
        .into_iter()
        .map(|bits| ProjectedWitness::from_lits(s.s_vars.iter().zip(bits).map(|(v, b)| v.lit(b)).collect()))
        .collect();
    out.sort();
    Ok(out)
}

/// `count` independent uniform draws from `R(f)↓vars`.
pub fn exact_uniform_sample<R: Rng + ?Sized>(
    f: &CnfFormula,
    vars: &[Var],
    rng: &mut R,
    count: usize,
    cap: u32,
) -> Result<Vec<ProjectedWitness>, OracleError> {
    let all = enumerate_solutions(f, vars, cap)?;
    if all.is_empty() {
        return Err(OracleError::Unsatisfiable);
    }
    Ok((0..count).map(|_| all[rng.random_range(0..all.len())].clone()).collect())
}

fn model_weight(w: &WeightedCnf, m: &ProjectedWitness) -> BigRational {
    m.lits()
        .iter()
        .fold(BigRational::from_integer(1.into()), |acc, &l| acc * w.literal_weight(l).value())
}

fn full_models(w: &WeightedCnf, cap: u32) -> Result<Vec<ProjectedWitness>, OracleError> {
    enumerate_solutions(&w.formula, &w.formula.support(), cap)
}

/// Sum over models of the product of their literal weights.
pub fn exact_weighted_count(w: &WeightedCnf, cap: u32) -> Result<BigRational, OracleError> {
    Ok(full_models(w, cap)?
        .iter()
        .fold(BigRational::from_integer(BigInt::from(0)), |acc, m| acc + model_weight(w, m)))
}

/// Largest over smallest model weight; `None` when the smallest is zero.
pub fn exact_tilt(w: &WeightedCnf, cap: u32) -> Result<Option<BigRational>, OracleError> {
    let ws: Vec<BigRational> = full_models(w, cap)?.iter().map(|m| model_weight(w, m)).collect();
    let max = ws.iter().max().ok_or(OracleError::Unsatisfiable)?;
    let min = ws.iter().min().expect("nonempty");
    if *min == BigRational::from_integer(0.into()) {
        return Ok(None);
    }
    Ok(Some(max / min))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: u64,
    pub p_value: f64,
}

fn chi_square(statistic: f64, df: u64) -> ChiSquare {
    let p_value = if df == 0 {
        1.0
    } else {
        ChiSquared::new(df as f64).expect("positive degrees of freedom").sf(statistic)
    };
    ChiSquare { statistic, df, p_value }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityReport {
    /// Counts per reference solution, in reference order.
    pub histogram: Vec<(ProjectedWitness, u64)>,
    pub sample_count: u64,
    pub chi_square: ChiSquare,
    /// Largest over smallest count; `None` when some solution was never drawn.
    pub freq_ratio: Option<f64>,
}

fn histogram(samples: &[ProjectedWitness], reference: &[ProjectedWitness]) -> Result<Vec<u64>, OracleError> {
    if reference.is_empty() {
        return Err(OracleError::EmptyReference);
    }
    let index: HashMap<&ProjectedWitness, usize> = reference.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let mut counts = vec![0u64; reference.len()];
    for s in samples {
        let i = index.get(s).ok_or_else(|| OracleError::OutsideReference(s.clone()))?;
        counts[*i] += 1;
    }
    Ok(counts)
}

fn freq_ratio(counts: &[u64]) -> Option<f64> {
    let max = *counts.iter().max()?;
    let min = *counts.iter().min()?;
    (min > 0).then(|| max as f64 / min as f64)
}

/// Goodness of fit of `samples` against the uniform distribution on `reference`.
pub fn uniformity_report(samples: &[ProjectedWitness], reference: &[ProjectedWitness]) -> Result<UniformityReport, OracleError> {
    let counts = histogram(samples, reference)?;
    let n = samples.len() as f64;
    let expected = n / reference.len() as f64;
    let statistic = if n == 0.0 {
        0.0
    } else {
        counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
    };
    Ok(UniformityReport {
        histogram: reference.iter().cloned().zip(counts.iter().copied()).collect(),
        sample_count: samples.len() as u64,
        chi_square: chi_square(statistic, reference.len() as u64 - 1),
        freq_ratio: freq_ratio(&counts),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoSampleReport {
    pub first: UniformityReport,
    pub second: UniformityReport,
    /// Homogeneity test of the two histograms over bins hit by either.
    pub chi_square: ChiSquare,
}

/// Tests whether two sample sets come from the same distribution on `reference`.
pub fn two_sample_report(
    first: &[ProjectedWitness],
    second: &[ProjectedWitness],
    reference: &[ProjectedWitness],
) -> Result<TwoSampleReport, OracleError> {
    let a = uniformity_report(first, reference)?;
    let b = uniformity_report(second, reference)?;
    let (na, nb) = (first.len() as f64, second.len() as f64);
    let (k1, k2) = if na > 0.0 && nb > 0.0 {
        ((nb / na).sqrt(), (na / nb).sqrt())
    } else {
        (1.0, 1.0)
    };
    let mut statistic = 0.0;
    let mut bins = 0u64;
    for ((_, x), (_, y)) in a.histogram.iter().zip(&b.histogram) {
        if x + y == 0 {
            continue;
        }
        bins += 1;
        statistic += (k1 * *x as f64 - k2 * *y as f64).powi(2) / (x + y) as f64;
    }
    Ok(TwoSampleReport {
        first: a,
        second: b,
        chi_square: chi_square(statistic, bins.saturating_sub(1)),
    })
}
