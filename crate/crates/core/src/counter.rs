//! (ε, δ) approximate projected model counting.
//!
//! Each round draws a random hash over the projection variables and looks for
//! the smallest number of XOR rows `m` whose cell holds between 1 and
//! `pivot` projected solutions; the round estimate is `cell_count * 2^m`.
//! The final estimate is the median over rounds. Formulas with at most
//! `pivot` projected solutions are counted exactly.
//!
//! Within a round the rows form one growing hash: the cell for `m` rows is
//! the cell for `m - 1` rows cut by one more XOR. Cell sizes are therefore
//! non-increasing in `m`, and the first `m` under the pivot is found with a
//! galloping search that starts from the previous round's answer.

use std::f64::consts::E;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::formula::{CnfFormula, FormulaError, Var};
use crate::hashing::{CellTarget, XorHash};
use crate::rng::StreamRng;
use crate::solver::{count_projections, Solver, XorConstraint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CountError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("all {rounds} counting rounds failed")]
    AllRoundsFailed { rounds: usize, outcomes: Vec<RoundOutcome> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterParams {
    pub epsilon: f64,
    pub delta: f64,
    pub pivot: u64,
    pub rounds: u32,
}

/// `pivot = 2 * ceil(3 * sqrt(e) * (1 + 1/ε)^2)`, `rounds` = smallest odd
/// integer `>= 35 * log2(3/δ)`.
pub fn compute_params(epsilon: f64, delta: f64) -> Result<CounterParams, CountError> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(CountError::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CountError::InvalidParams(format!("delta must lie in (0, 1), got {delta}")));
    }
    let base = 3.0 * E.sqrt() * (1.0 + 1.0 / epsilon).powi(2);
    let pivot = 2 * base.ceil() as u64;
    let mut rounds = (35.0 * (3.0 / delta).log2()).ceil() as u32;
    if rounds % 2 == 0 {
        rounds += 1;
    }
    Ok(CounterParams {
        epsilon,
        delta,
        pivot,
        rounds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundOutcome {
    Cell { m: u32, cell_count: u64 },
    Fail,
}

impl RoundOutcome {
    /// `cell_count * 2^m`, or `None` for a failed round.
    pub fn estimate(&self) -> Option<BigUint> {
        match *self {
            RoundOutcome::Cell { m, cell_count } => Some(BigUint::from(cell_count) << m),
            RoundOutcome::Fail => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountEstimate {
    /// Estimate of the number of solutions projected onto the hashed variables.
    pub value: BigUint,
    /// Set when the count was obtained by full enumeration.
    pub exact: bool,
    pub rounds: Vec<RoundOutcome>,
    pub params: CounterParams,
}

/// Outcome of one successful round, with the hash that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMeasurement {
    pub m: usize,
    pub cell_count: u64,
    /// The `m` rows defining the cell.
    pub hash: XorHash,
    pub target: CellTarget,
}

/// Measures nested cells of one hash over a fixed formula.
struct RoundSearch<'a> {
    base: &'a Solver,
    vars: &'a [Var],
    pivot: u64,
}

struct RoundState {
    rng: StreamRng,
    hash: XorHash,
    target: CellTarget,
    constraints: Vec<XorConstraint>,
    counts: Vec<Option<u64>>,
}

impl RoundSearch<'_> {
    fn max_m(&self) -> usize {
        self.vars.len().saturating_sub(1)
    }

    fn count(&self, st: &mut RoundState, m: usize) -> u64 {
        if let Some(c) = st.counts[m] {
            return c;
        }
        while st.hash.m() < m {
            st.hash.push_random_row(&mut st.rng);
            let bit = st.rng.random::<bool>();
            st.target.push(bit);
            let i = st.hash.m() - 1;
            st.constraints.push(st.hash.row_constraint(i, bit, self.vars));
        }
        let mut s = self.base.clone();
        for x in &st.constraints[..m] {
            s.add_xor(x);
        }
        let c = count_projections(&mut s, self.vars, self.pivot as usize + 1) as u64;
        st.counts[m] = Some(c);
        c
    }

    /// Smallest `m` in `1..=max_m` whose cell holds at most `pivot`
    /// solutions; a failure when there is none or that cell is empty.
    fn run(&self, round_seed: u64, hint: usize) -> Option<CellMeasurement> {
        let max_m = self.max_m();
        if max_m == 0 {
            return None;
        }
        let mut st = RoundState {
            rng: StreamRng::seed_from_u64(round_seed),
            hash: XorHash::empty(self.vars.len()),
            target: CellTarget::default(),
            constraints: Vec::new(),
            counts: vec![None; max_m + 1],
        };
        let pivot = self.pivot;
        let small = |st: &mut RoundState, m: usize| self.count(st, m) <= pivot;

        // Invariant: cell(lo) > pivot (m = 0 is the whole space), cell(hi) <= pivot.
        let mut lo = 0usize;
        let mut hi;
        let start = hint.clamp(1, max_m);
        if small(&mut st, start) {
            hi = start;
            let mut step = 1;
            while hi - lo > 1 {
                let cand = hi.saturating_sub(step).max(lo + 1);
                if small(&mut st, cand) {
                    hi = cand;
                    step *= 2;
                } else {
                    lo = cand;
                    break;
                }
            }
        } else {
            lo = start;
            let mut step = 1;
            loop {
                if lo == max_m {
                    return None;
                }
                let cand = (lo + step).min(max_m);
                if small(&mut st, cand) {
                    hi = cand;
                    break;
                }
                lo = cand;
                step *= 2;
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if small(&mut st, mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let cell_count = self.count(&mut st, hi);
        if cell_count == 0 {
            return None;
        }
        Some(CellMeasurement {
            m: hi,
            cell_count,
            hash: st.hash.prefix(hi),
            target: CellTarget::new(st.target.bits()[..hi].to_vec()),
        })
    }
}

fn normalize_vars(f: &CnfFormula, vars: &[Var]) -> Result<Vec<Var>, FormulaError> {
    f.check_subset(vars)?;
    let mut v = vars.to_vec();
    v.sort();
    v.dedup();
    Ok(v)
}

/// One counting round over the projection `vars`: the first `m` (searching
/// from 1) whose cell holds between 1 and `pivot` solutions, or `None`.
///
/// Assumes the projected count exceeds `pivot`.
pub fn approxmc_round<R: Rng + ?Sized>(
    f: &CnfFormula,
    vars: &[Var],
    pivot: u64,
    rng: &mut R,
) -> Result<Option<CellMeasurement>, CountError> {
    let vars = normalize_vars(f, vars)?;
    let base = Solver::from_formula(f);
    let search = RoundSearch {
        base: &base,
        vars: &vars,
        pivot,
    };
    Ok(search.run(rng.next_u64(), 1))
}

/// Lower median of the successful round estimates.
pub fn median_estimate(outcomes: &[RoundOutcome]) -> Option<BigUint> {
    let mut ests: Vec<BigUint> = outcomes.iter().filter_map(|o| o.estimate()).collect();
    if ests.is_empty() {
        return None;
    }
    ests.sort();
    Some(ests.swap_remove((ests.len() - 1) / 2))
}

/// Approximates `|R(f)↓vars|` within a factor `1 + epsilon` with probability
/// at least `1 - delta`.
pub fn approx_count<R: Rng + ?Sized>(
    f: &CnfFormula,
    vars: &[Var],
    epsilon: f64,
    delta: f64,
    rng: &mut R,
) -> Result<CountEstimate, CountError> {
    let params = compute_params(epsilon, delta)?;
    let vars = normalize_vars(f, vars)?;
    let base = Solver::from_formula(f);

    let small = count_projections(&mut base.clone(), &vars, params.pivot as usize + 1) as u64;
    if small <= params.pivot {
        return Ok(CountEstimate {
            value: BigUint::from(small),
            exact: true,
            rounds: Vec::new(),
            params,
        });
    }

    let search = RoundSearch {
        base: &base,
        vars: &vars,
        pivot: params.pivot,
    };
    let mut hint = 1;
    let mut outcomes = Vec::with_capacity(params.rounds as usize);
    for _ in 0..params.rounds {
        let outcome = match search.run(rng.next_u64(), hint) {
            Some(cell) => {
                hint = cell.m;
                RoundOutcome::Cell {
                    m: cell.m as u32,
                    cell_count: cell.cell_count,
                }
            }
            None => RoundOutcome::Fail,
        };
        outcomes.push(outcome);
    }
    match median_estimate(&outcomes) {
        Some(value) => Ok(CountEstimate {
            value,
            exact: false,
            rounds: outcomes,
            params,
        }),
        None => Err(CountError::AllRoundsFailed {
            rounds: outcomes.len(),
            outcomes,
        }),
    }
}
