//! Almost-uniform sampling of projected solutions.
//!
//! A coarse approximate count centers a small window of hash sizes. Each
//! sampling slot walks the window, draws a random cell, enumerates it up to
//! `hi_thresh + 1` solutions, and accepts the cell when its size lies in
//! `[lo_thresh, hi_thresh]`. Single mode keeps one uniform pick per accepted
//! cell; multi mode keeps `lo_thresh` distinct picks.
//!
//! Slot `i` draws from `stream(master, i)` and preprocessing from
//! `stream(master, u64::MAX)`, so the output does not depend on how slots
//! are spread across worker threads.

use num_bigint::BigUint;
use rand::seq::index;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::counter::{approx_count, CountError};
use crate::formula::{CnfFormula, FormulaError, ProjectedWitness, SolutionSet, Var, Witness};
use crate::hashing::{draw_hash, draw_target, hash_to_constraints};
use crate::rng::stream;
use crate::solver::{enumerate_projections, extend_witness, Solver};

/// Tolerances at or below this value admit no valid `kappa`.
pub const EPSILON_MIN: f64 = 6.832;
/// Consecutive all-window failures tolerated per slot.
pub const FAILURE_BUDGET: usize = 10;

const PRE_EPSILON: f64 = 0.8;
const PRE_DELTA: f64 = 0.2;
const PREPROCESS_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("formula is unsatisfiable")]
    Unsatisfiable,
    #[error("slot {slot}: {failures} consecutive rounds found no usable cell")]
    FailureBudgetExhausted {
        slot: usize,
        failures: usize,
        window: Vec<usize>,
        cells: Vec<CellRecord>,
    },
    #[error("preprocessing count failed: {0}")]
    Count(#[from] CountError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    Single,
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplerParams {
    pub epsilon: f64,
    pub kappa: f64,
    pub pivot: u64,
    pub lo_thresh: usize,
    pub hi_thresh: usize,
}

/// Tolerance reached by slack `kappa`: `(1+κ)(7.44 + 0.392/(1-κ)^2) - 1`.
pub fn epsilon_of_kappa(kappa: f64) -> f64 {
    (1.0 + kappa) * (7.44 + 0.392 / (1.0 - kappa).powi(2)) - 1.0
}

pub fn sampler_params(epsilon: f64) -> Result<SamplerParams, SampleError> {
    if !epsilon.is_finite() || epsilon <= EPSILON_MIN {
        return Err(SampleError::InvalidParams(format!(
            "epsilon must be finite and greater than {EPSILON_MIN}, got {epsilon}"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if epsilon_of_kappa(mid) <= epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= 0.0 {
        return Err(SampleError::InvalidParams(format!("epsilon {epsilon} too small")));
    }
    Ok(params_from_kappa(epsilon, lo))
}

/// Thresholds for a given `kappa` in `(0, 1)`.
pub fn params_from_kappa(epsilon: f64, kappa: f64) -> SamplerParams {
    let pivot = (4.03 * (1.0 + 1.0 / kappa).powi(2)).ceil() as u64;
    let scale = std::f64::consts::SQRT_2 * (1.0 + kappa);
    let hi_thresh = (1.0 + scale * pivot as f64).ceil() as usize;
    let lo_thresh = ((pivot as f64 / scale).floor() as usize).max(1);
    SamplerParams {
        epsilon,
        kappa,
        pivot,
        lo_thresh,
        hi_thresh,
    }
}

/// Size of one drawn cell (capped at `hi_thresh + 1`) and what it yielded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CellRecord {
    pub slot: usize,
    pub m: usize,
    pub cell_count: usize,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundSample {
    pub m: usize,
    pub cell_count: usize,
    /// `None` when the cell size falls outside `[lo_thresh, hi_thresh]`.
    pub picks: Option<Vec<ProjectedWitness>>,
}

fn pick<R: Rng + ?Sized>(cell: SolutionSet, params: &SamplerParams, mode: SampleMode, rng: &mut R) -> Vec<ProjectedWitness> {
    let mut all = cell.into_witnesses();
    match mode {
        SampleMode::Single => {
            let i = rng.random_range(0..all.len());
            vec![all.swap_remove(i)]
        }
        SampleMode::Multi => {
            let idx = index::sample(rng, all.len(), params.lo_thresh.min(all.len()));
            idx.iter().map(|i| all[i].clone()).collect()
        }
    }
}

fn round_on<R: Rng + ?Sized>(
    base: &Solver,
    vars: &[Var],
    m: usize,
    params: &SamplerParams,
    rng: &mut R,
    mode: SampleMode,
) -> RoundSample {
    let h = draw_hash(vars.len(), m, rng);
    let alpha = draw_target(m, rng);
    let mut s = base.clone();
    for x in hash_to_constraints(&h, &alpha, vars).expect("hash sized to vars") {
        s.add_xor(&x);
    }
    let mut cell = SolutionSet::new(Some(vars.to_vec()));
    enumerate_projections(&mut s, vars, params.hi_thresh + 1, &mut cell);
    let cell_count = cell.len();
    let picks = (params.lo_thresh..=params.hi_thresh)
        .contains(&cell_count)
        .then(|| pick(cell, params, mode, rng));
    RoundSample { m, cell_count, picks }
}

/// One sampling round with `m` XOR rows over `vars`.
pub fn sample_round<R: Rng + ?Sized>(
    f: &CnfFormula,
    vars: &[Var],
    m: usize,
    params: &SamplerParams,
    rng: &mut R,
    mode: SampleMode,
) -> Result<RoundSample, SampleError> {
    let vars = normalize_vars(f, vars)?;
    if m > vars.len() {
        return Err(SampleError::InvalidParams(format!("m = {m} exceeds {} sampling variables", vars.len())));
    }
    Ok(round_on(&Solver::from_formula(f), &vars, m, params, rng, mode))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub witnesses: Vec<ProjectedWitness>,
    pub sampling_vars: Vec<Var>,
    pub params: SamplerParams,
    pub mode: SampleMode,
    /// Samples were drawn uniformly from a full enumeration.
    pub exact: bool,
    /// Preprocessing count, absent on the exact path.
    pub count_estimate: Option<BigUint>,
    pub window: Vec<usize>,
    pub cells: Vec<CellRecord>,
    /// Rejected cells.
    pub failed: usize,
    /// Samples beyond the request (multi mode returns whole rounds).
    pub overshoot: usize,
}

impl SampleBatch {
    /// Extends every sample to a full model of `f`.
    pub fn full_witnesses(&self, f: &CnfFormula) -> Vec<Witness> {
        self.witnesses
            .iter()
            .map(|w| extend_witness(f, w).expect("sampled projection extends to a model"))
            .collect()
    }
}

fn normalize_vars(f: &CnfFormula, vars: &[Var]) -> Result<Vec<Var>, FormulaError> {
    f.check_subset(vars)?;
    let mut v = vars.to_vec();
    v.sort();
    v.dedup();
    Ok(v)
}

fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return (x.iter_u64_digits().next().unwrap_or(0) as f64).log2();
    }
    let shift = bits - 64;
    let top: u64 = (x >> shift).try_into().expect("fits in 64 bits");
    (top as f64).log2() + shift as f64
}

/// Hash sizes tried by every slot, in order: `q, q-1, q+1, q+2` clamped to
/// `[0, n - 1]` with duplicates removed.
pub fn search_window(count: &BigUint, params: &SamplerParams, n: usize) -> Vec<usize> {
    let target = ((params.lo_thresh * params.hi_thresh) as f64).sqrt().log2();
    let q = (log2_big(count) - target).ceil() as i64;
    let top = n.saturating_sub(1) as i64;
    let mut window = Vec::with_capacity(4);
    for d in [0, -1, 1, 2] {
        let m = (q + d).clamp(0, top) as usize;
        if !window.contains(&m) {
            window.push(m);
        }
    }
    window
}

enum Plan {
    Exact(Vec<ProjectedWitness>),
    Hashed { window: Vec<usize>, count: BigUint },
}

struct Job<'a> {
    base: Solver,
    vars: &'a [Var],
    params: SamplerParams,
    mode: SampleMode,
    plan: Plan,
    master: u64,
}

struct SlotResult {
    picks: Vec<ProjectedWitness>,
    cells: Vec<CellRecord>,
    exhausted: bool,
}

impl Job<'_> {
    fn run_slot(&self, slot: usize) -> SlotResult {
        let mut rng = stream(self.master, slot as u64);
        let window = match &self.plan {
            Plan::Exact(all) => {
                let i = rng.random_range(0..all.len());
                return SlotResult {
                    picks: vec![all[i].clone()],
                    cells: Vec::new(),
                    exhausted: false,
                };
            }
            Plan::Hashed { window, .. } => window,
        };
        let mut cells = Vec::new();
        for _ in 0..FAILURE_BUDGET {
            for &m in window {
                let r = round_on(&self.base, self.vars, m, &self.params, &mut rng, self.mode);
                cells.push(CellRecord {
                    slot,
                    m,
                    cell_count: r.cell_count,
                    accepted: r.picks.is_some(),
                });
                if let Some(picks) = r.picks {
                    return SlotResult {
                        picks,
                        cells,
                        exhausted: false,
                    };
                }
            }
        }
        SlotResult {
            picks: Vec::new(),
            cells,
            exhausted: true,
        }
    }
}

/// Draws `num_samples` samples projected on `vars` using `workers` threads.
///
/// The result depends only on `(f, vars, epsilon, num_samples, mode,
/// master_seed)`.
pub fn parallel_sample(
    f: &CnfFormula,
    vars: &[Var],
    epsilon: f64,
    num_samples: usize,
    mode: SampleMode,
    workers: usize,
    master_seed: u64,
) -> Result<SampleBatch, SampleError> {
    if num_samples == 0 {
        return Err(SampleError::InvalidParams("number of samples must be positive".into()));
    }
    if workers == 0 {
        return Err(SampleError::InvalidParams("workers must be positive".into()));
    }
    let params = sampler_params(epsilon)?;
    let vars = normalize_vars(f, vars)?;
    let base = Solver::from_formula(f);

    let mut small = SolutionSet::new(Some(vars.clone()));
    enumerate_projections(&mut base.clone(), &vars, params.hi_thresh + 1, &mut small);
    let (plan, slots) = if small.len() <= params.hi_thresh {
        if small.is_empty() {
            return Err(SampleError::Unsatisfiable);
        }
        (Plan::Exact(small.into_witnesses()), num_samples)
    } else {
        let mut pre = stream(master_seed, PREPROCESS_STREAM);
        let count = approx_count(f, &vars, PRE_EPSILON, PRE_DELTA, &mut pre)?.value;
        let window = search_window(&count, &params, vars.len());
        let slots = match mode {
            SampleMode::Single => num_samples,
            SampleMode::Multi => num_samples.div_ceil(params.lo_thresh),
        };
        (Plan::Hashed { window, count }, slots)
    };

    let job = Job {
        base,
        vars: &vars,
        params,
        mode,
        plan,
        master: master_seed,
    };
    let mut results: Vec<Option<SlotResult>> = (0..slots).map(|_| None).collect();
    if workers == 1 {
        for (s, r) in results.iter_mut().enumerate() {
            *r = Some(job.run_slot(s));
        }
    } else {
        let job = &job;
        let per_worker: Vec<Vec<(usize, SlotResult)>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers.min(slots))
                .map(|w| scope.spawn(move || (w..slots).step_by(workers).map(|s| (s, job.run_slot(s))).collect()))
                .collect();
            handles.into_iter().map(|h| h.join().expect("sampling worker panicked")).collect()
        });
        for (s, r) in per_worker.into_iter().flatten() {
            results[s] = Some(r);
        }
    }

    let mut witnesses = Vec::new();
    let mut cells = Vec::new();
    for (slot, r) in results.into_iter().enumerate() {
        let r = r.expect("every slot ran");
        if r.exhausted {
            let window = match &job.plan {
                Plan::Hashed { window, .. } => window.clone(),
                Plan::Exact(_) => Vec::new(),
            };
            return Err(SampleError::FailureBudgetExhausted {
                slot,
                failures: FAILURE_BUDGET,
                window,
                cells: r.cells,
            });
        }
        witnesses.extend(r.picks);
        cells.extend(r.cells);
    }
    let failed = cells.iter().filter(|c| !c.accepted).count();
    let (exact, count_estimate, window) = match job.plan {
        Plan::Exact(_) => (true, None, Vec::new()),
        Plan::Hashed { window, count } => (false, Some(count), window),
    };
    Ok(SampleBatch {
        overshoot: witnesses.len() - num_samples,
        witnesses,
        sampling_vars: vars,
        params,
        mode,
        exact,
        count_estimate,
        window,
        cells,
        failed,
    })
}

/// Sequential sampling seeded from `rng`.
pub fn unigen_sample<R: Rng + ?Sized>(
    f: &CnfFormula,
    vars: &[Var],
    epsilon: f64,
    num_samples: usize,
    mode: SampleMode,
    rng: &mut R,
) -> Result<SampleBatch, SampleError> {
    parallel_sample(f, vars, epsilon, num_samples, mode, 1, rng.next_u64())
}
