//! Literal-weighted counting and sampling through an unweighted encoding.
//!
//! A weighted variable `v` with dyadic weights `k⁺/2^m` and `k⁻/2^m` gets a
//! block `B_v` of `m` fresh variables constrained by `v → C_{k⁺}(B_v)` and
//! `¬v → C_{k⁻}(B_v)`, where the chain formula `C_k` has exactly `k` models.
//! Every model `σ` of the input then has `2^{Σ m} · weight(σ)` extensions.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use thiserror::Error;

use crate::counter::{approx_count, CountError, CountEstimate};
use crate::formula::{CnfFormula, FormulaError, Lit, Var};
use crate::sampler::{parallel_sample, SampleBatch, SampleError, SampleMode};

pub const DEFAULT_PRECISION: u32 = 8;
pub const MAX_PRECISION: u32 = 62;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeightError {
    #[error("malformed weight line `{0}`")]
    Malformed(String),
    #[error("weight `{0}` must be a decimal in [0, 1]")]
    OutOfRange(String),
    #[error("literal {0} is weighted twice")]
    Duplicate(i64),
    #[error("variable {0} has weight 0 on both literals")]
    ZeroWeight(u32),
    #[error("precision must lie in 0..={MAX_PRECISION}, got {0}")]
    Precision(u32),
    #[error("chain formula needs 0 <= k <= 2^m, got k = {k}, m = {m}")]
    ChainRange { k: u64, m: u32 },
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// The weight `k / 2^bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicWeight {
    pub k: u64,
    pub bits: u32,
}

impl DyadicWeight {
    pub fn new(k: u64, bits: u32) -> Result<DyadicWeight, WeightError> {
        if bits > MAX_PRECISION {
            return Err(WeightError::Precision(bits));
        }
        if k > 1u64 << bits {
            return Err(WeightError::ChainRange { k, m: bits });
        }
        Ok(DyadicWeight { k, bits })
    }

    pub fn one() -> DyadicWeight {
        DyadicWeight { k: 1, bits: 0 }
    }

    pub fn value(&self) -> BigRational {
        BigRational::new(BigInt::from(self.k), BigInt::from(1u64) << self.bits)
    }

    pub fn complement(&self) -> DyadicWeight {
        DyadicWeight {
            k: (1u64 << self.bits) - self.k,
            bits: self.bits,
        }
    }

    /// Numerator at a precision of `bits >= self.bits`.
    pub fn numerator_at(&self, bits: u32) -> u64 {
        self.k << (bits - self.bits)
    }

    /// Rounds the decimal `text` to the nearest multiple of `2^-precision`.
    pub fn parse_decimal(text: &str, precision: u32) -> Result<(DyadicWeight, f64), WeightError> {
        if precision > MAX_PRECISION {
            return Err(WeightError::Precision(precision));
        }
        let exact = parse_decimal(text).ok_or_else(|| WeightError::OutOfRange(text.to_string()))?;
        if exact > BigRational::from_integer(1.into()) {
            return Err(WeightError::OutOfRange(text.to_string()));
        }
        let scaled = &exact * BigRational::from_integer(BigInt::from(1u64) << precision);
        let half = BigRational::new(1.into(), 2.into());
        let k: u64 = (scaled + half).floor().to_integer().try_into().expect("k <= 2^precision");
        let w = DyadicWeight { k, bits: precision };
        let err = ratio_to_f64(&(w.value() - exact)).abs();
        Ok((w, err))
    }
}

fn parse_decimal(text: &str) -> Option<BigRational> {
    let (int, frac) = match text.split_once('.') {
        Some((a, b)) => (a, b),
        None => (text, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = if digits.is_empty() { 0.into() } else { digits.parse().ok()? };
    Some(BigRational::new(num, BigInt::from(10u32).pow(frac.len() as u32)))
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// One weight rounded when read from text.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundingNote {
    pub lit: i64,
    pub text: String,
    pub weight: DyadicWeight,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCnf {
    pub formula: CnfFormula,
    /// Literal weights; a missing literal has weight 1.
    pub weights: BTreeMap<Lit, DyadicWeight>,
}

impl WeightedCnf {
    pub fn unweighted(formula: CnfFormula) -> WeightedCnf {
        WeightedCnf {
            formula,
            weights: BTreeMap::new(),
        }
    }

    pub fn literal_weight(&self, l: Lit) -> DyadicWeight {
        self.weights.get(&l).copied().unwrap_or_else(DyadicWeight::one)
    }

    /// Sets `w(v) = pos` and `w(¬v) = 1 - pos`.
    pub fn set_weight(&mut self, v: Var, pos: DyadicWeight) -> Result<(), WeightError> {
        self.formula.check_subset(&[v])?;
        self.weights.insert(v.pos(), pos);
        self.weights.insert(v.neg(), pos.complement());
        Ok(())
    }

    /// Variables with an explicit weight on either literal, ascending.
    pub fn weighted_vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self.weights.keys().map(|l| l.var()).collect();
        vs.dedup();
        vs
    }

    /// Reads `p weight <lit> <decimal> 0` comment lines. A literal whose
    /// complement is weighted but which is not gets the complement's
    /// remainder to 1.
    pub fn from_formula(formula: CnfFormula, precision: u32) -> Result<(WeightedCnf, Vec<RoundingNote>), WeightError> {
        if precision > MAX_PRECISION {
            return Err(WeightError::Precision(precision));
        }
        let mut weights = BTreeMap::new();
        let mut notes = Vec::new();
        for c in formula.comments() {
            let toks: Vec<&str> = c.split_whitespace().collect();
            if toks.len() < 2 || toks[0] != "p" || toks[1] != "weight" {
                continue;
            }
            if toks.len() != 5 || toks[4] != "0" {
                return Err(WeightError::Malformed(c.clone()));
            }
            let lit: i64 = toks[2].parse().map_err(|_| WeightError::Malformed(c.clone()))?;
            if lit == 0 || lit.unsigned_abs() > formula.num_vars() as u64 {
                return Err(WeightError::Malformed(c.clone()));
            }
            let (w, error) = DyadicWeight::parse_decimal(toks[3], precision)?;
            let l = Lit::from_dimacs(lit);
            if weights.insert(l, w).is_some() {
                return Err(WeightError::Duplicate(lit));
            }
            notes.push(RoundingNote {
                lit,
                text: toks[3].to_string(),
                weight: w,
                error,
            });
        }
        let explicit: Vec<Lit> = weights.keys().copied().collect();
        for l in explicit {
            if !weights.contains_key(&!l) {
                let c = weights[&l].complement();
                weights.insert(!l, c);
            }
        }
        Ok((WeightedCnf { formula, weights }, notes))
    }
}

/// Clauses over `vars` (most significant first) satisfied exactly by the
/// `k` assignments whose binary value is below `k`.
pub fn chain_clauses(k: u64, vars: &[Var]) -> Result<Vec<Vec<Lit>>, WeightError> {
    let m = vars.len() as u32;
    if m > MAX_PRECISION || k > 1u64 << m {
        return Err(WeightError::ChainRange { k, m });
    }
    if k == 1u64 << m {
        return Ok(Vec::new());
    }
    if k == 0 {
        return Ok(vec![Vec::new()]);
    }
    let bit = |i: usize| k >> (m as usize - 1 - i) & 1 == 1;
    let mut clauses = Vec::new();
    let mut ones_above: Vec<Lit> = Vec::new();
    for (i, &v) in vars.iter().enumerate() {
        if bit(i) {
            ones_above.push(v.neg());
        } else {
            let mut c = ones_above.clone();
            c.push(v.neg());
            clauses.push(c);
        }
    }
    // Excludes b == k.
    clauses.push(ones_above);
    Ok(clauses)
}

/// A formula over `m` variables with exactly `k` models.
pub fn chain_formula(k: u64, m: u32) -> Result<CnfFormula, WeightError> {
    let vars: Vec<Var> = (1..=m).map(Var::new).collect();
    let mut f = CnfFormula::new(m);
    for c in chain_clauses(k, &vars)? {
        f.add_clause(c)?;
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionResult {
    pub formula: CnfFormula,
    pub scale_log2: u32,
    /// Projection of the input: its sampling set, or all its variables.
    pub original_vars: Vec<Var>,
    pub blocks: Vec<(Var, Vec<Var>)>,
}

/// Encodes the weights of `w` so that `|R(F')| = 2^scale_log2 · W(F)`.
///
/// The reduced sampling set is the input's projection plus every block. An
/// input sampling set is taken to be an independent support.
pub fn reduce_wmc_to_umc(w: &WeightedCnf) -> Result<ReductionResult, WeightError> {
    let mut f = w.formula.clone();
    let mut blocks = Vec::new();
    let mut scale = 0u32;
    for v in w.weighted_vars() {
        let pos = w.literal_weight(v.pos());
        let neg = w.literal_weight(v.neg());
        if pos.k == 0 && neg.k == 0 {
            return Err(WeightError::ZeroWeight(v.get()));
        }
        let m = pos.bits.max(neg.bits);
        let block: Vec<Var> = (0..m).map(|_| f.new_var()).collect();
        for c in chain_clauses(pos.numerator_at(m), &block)? {
            f.add_clause(std::iter::once(v.neg()).chain(c))?;
        }
        for c in chain_clauses(neg.numerator_at(m), &block)? {
            f.add_clause(std::iter::once(v.pos()).chain(c))?;
        }
        scale += m;
        blocks.push((v, block));
    }
    let original_vars = w.formula.projection_vars();
    let had_set = w.formula.sampling_set().is_some();
    if had_set || blocks.iter().any(|(_, b)| !b.is_empty()) {
        let mut s = original_vars.clone();
        s.extend(blocks.iter().flat_map(|(_, b)| b.iter().copied()));
        f.set_sampling_set(s)?;
    }
    Ok(ReductionResult {
        formula: f,
        scale_log2: scale,
        original_vars,
        blocks,
    })
}

/// `Π max(w(v), w(¬v)) / Π min(w(v), w(¬v))` over weighted variables;
/// `None` when some minimum is zero.
pub fn tilt_bound(w: &WeightedCnf) -> Option<BigRational> {
    let mut hi = BigRational::from_integer(1.into());
    let mut lo = BigRational::from_integer(1.into());
    for v in w.weighted_vars() {
        let a = w.literal_weight(v.pos()).value();
        let b = w.literal_weight(v.neg()).value();
        let (mn, mx) = if a <= b { (a, b) } else { (b, a) };
        if mn == BigRational::from_integer(0.into()) {
            return None;
        }
        hi *= mx;
        lo *= mn;
    }
    Some(hi / lo)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEstimate {
    pub value: BigRational,
    pub scale_log2: u32,
    pub unweighted: CountEstimate,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightedError {
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

pub fn weighted_count<R: Rng + ?Sized>(
    w: &WeightedCnf,
    epsilon: f64,
    delta: f64,
    rng: &mut R,
) -> Result<WeightedEstimate, WeightedError> {
    let red = reduce_wmc_to_umc(w)?;
    let est = approx_count(&red.formula, &red.formula.projection_vars(), epsilon, delta, rng)?;
    let value = BigRational::new(BigInt::from(est.value.clone()), BigInt::from(BigUint::from(1u32) << red.scale_log2));
    Ok(WeightedEstimate {
        value,
        scale_log2: red.scale_log2,
        unweighted: est,
    })
}

/// Samples models of the reduced formula and projects them back onto the
/// input's variables; the batch's `sampling_vars` are the input's.
pub fn weighted_sample(
    w: &WeightedCnf,
    epsilon: f64,
    num_samples: usize,
    mode: SampleMode,
    workers: usize,
    master_seed: u64,
) -> Result<(SampleBatch, ReductionResult), WeightedError> {
    let red = reduce_wmc_to_umc(w)?;
    let mut batch = parallel_sample(
        &red.formula,
        &red.formula.projection_vars(),
        epsilon,
        num_samples,
        mode,
        workers,
        master_seed,
    )?;
    for s in batch.witnesses.iter_mut() {
        *s = s.restrict(&red.original_vars).map_err(WeightError::from)?;
    }
    batch.sampling_vars = red.original_vars.clone();
    Ok((batch, red))
}
