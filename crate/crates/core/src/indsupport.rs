//! Independent supports: checking and deletion-based minimization.
//!
//! A set `I` is independent when any two models agreeing on `I` are equal.
//! The check solves one query over two copies of the formula: variable `v`
//! of the second copy is `v + n`, selector `s_v = v + 2n` forces `v ↔ v'`,
//! and `d_v = v + 3n` witnesses `v ≠ v'`, with one clause demanding some
//! difference. Asserting the selectors of `I` as assumptions makes the
//! query unsatisfiable exactly when `I` is independent, so one solver serves
//! every check during minimization.
//!
//! Restricting the difference clause to a target set `T` asks instead
//! whether `I` determines the values of `T`, which is what projected
//! counting over a sampling set needs.

use thiserror::Error;

use crate::formula::{CnfFormula, FormulaError, Lit, Var, Witness};
use crate::solver::{SolveStatus, Solver};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SupportError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("the starting set is not an independent support")]
    NotIndependent(Box<(Witness, Witness)>),
    #[error("elimination order must be a permutation of the starting set")]
    InvalidOrder,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportCertificate {
    pub independent: bool,
    /// Two distinct models agreeing on the tested set, present iff not independent.
    pub witness_pair: Option<(Witness, Witness)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Independent,
    Dependent,
    Unknown,
}

/// Reusable two-copy independence query for one formula.
pub struct IndependenceChecker {
    solver: Solver,
    n: u32,
}

impl IndependenceChecker {
    pub fn new(f: &CnfFormula) -> IndependenceChecker {
        IndependenceChecker::with_target(f, &f.support())
    }

    /// Checks whether tested sets determine the variables of `target`.
    pub fn with_target(f: &CnfFormula, target: &[Var]) -> IndependenceChecker {
        let n = f.num_vars();
        let mut q = CnfFormula::new(4 * n);
        q.extend_shifted(f, 0);
        q.extend_shifted(f, n);
        let mut solver = Solver::from_formula(&q);
        let mut any_diff = Vec::with_capacity(n as usize);
        for i in 1..=n {
            let (v, v2, s, d) = (Var::new(i), Var::new(i + n), Var::new(i + 2 * n), Var::new(i + 3 * n));
            solver.add_clause(&[s.neg(), v.neg(), v2.pos()]);
            solver.add_clause(&[s.neg(), v.pos(), v2.neg()]);
            solver.add_clause(&[d.neg(), v.pos(), v2.pos()]);
            solver.add_clause(&[d.neg(), v.neg(), v2.neg()]);
        }
        for v in target {
            any_diff.push(Var::new(v.get() + 3 * n).pos());
        }
        solver.add_clause(&any_diff);
        IndependenceChecker { solver, n }
    }

    /// Limits each query to `budget` conflicts; exceeding it gives `Unknown`.
    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.solver.set_conflict_budget(budget);
    }

    fn assumptions(&self, vars: &[Var]) -> Vec<Lit> {
        vars.iter().map(|v| Var::new(v.get() + 2 * self.n).pos()).collect()
    }

    pub fn verdict(&mut self, vars: &[Var]) -> Verdict {
        let a = self.assumptions(vars);
        match self.solver.solve_with(&a) {
            SolveStatus::Unsat => Verdict::Independent,
            SolveStatus::Sat => Verdict::Dependent,
            SolveStatus::Unknown => Verdict::Unknown,
        }
    }

    /// Full check with a counterexample pair; ignores the conflict budget.
    pub fn certificate(&mut self, vars: &[Var]) -> SupportCertificate {
        let a = self.assumptions(vars);
        let saved = self.solver.clone();
        self.solver.set_conflict_budget(None);
        let status = self.solver.solve_with(&a);
        let cert = match status {
            SolveStatus::Sat => {
                let model = self.solver.model().expect("model after SAT");
                let n = self.n as usize;
                SupportCertificate {
                    independent: false,
                    witness_pair: Some((Witness::new(model[..n].to_vec()), Witness::new(model[n..2 * n].to_vec()))),
                }
            }
            _ => SupportCertificate {
                independent: true,
                witness_pair: None,
            },
        };
        self.solver = saved;
        cert
    }
}

pub fn is_independent_support(f: &CnfFormula, vars: &[Var]) -> Result<SupportCertificate, SupportError> {
    f.check_subset(vars)?;
    Ok(IndependenceChecker::new(f).certificate(vars))
}

/// Variables of `vars` by descending clause occurrence, ties by index.
pub fn default_order(f: &CnfFormula, vars: &[Var]) -> Vec<Var> {
    let occ = f.occurrence_counts();
    let mut order = vars.to_vec();
    order.sort();
    order.dedup();
    order.sort_by_key(|v| std::cmp::Reverse(occ[v.index()]));
    order
}

/// Shrinks the independent support `start` to a minimal one, trying to drop
/// variables in `order` (default [`default_order`]). Checks that run out of
/// `conflict_budget` keep their variable, so the result stays independent
/// but may then not be minimal.
pub fn minimize_support(
    f: &CnfFormula,
    start: &[Var],
    order: Option<&[Var]>,
    conflict_budget: Option<u64>,
) -> Result<Vec<Var>, SupportError> {
    minimize_support_for(f, &f.support(), start, order, conflict_budget)
}

/// Like [`minimize_support`], but only requires the result to determine the
/// variables of `target` rather than every variable.
pub fn minimize_support_for(
    f: &CnfFormula,
    target: &[Var],
    start: &[Var],
    order: Option<&[Var]>,
    conflict_budget: Option<u64>,
) -> Result<Vec<Var>, SupportError> {
    f.check_subset(start)?;
    f.check_subset(target)?;
    let mut current = start.to_vec();
    current.sort();
    current.dedup();
    let order = match order {
        Some(o) => {
            let mut sorted = o.to_vec();
            sorted.sort();
            if sorted != current {
                return Err(SupportError::InvalidOrder);
            }
            o.to_vec()
        }
        None => default_order(f, &current),
    };

    let mut checker = IndependenceChecker::with_target(f, target);
    let cert = checker.certificate(&current);
    if let Some(pair) = cert.witness_pair {
        return Err(SupportError::NotIndependent(Box::new(pair)));
    }
    checker.set_conflict_budget(conflict_budget);
    for v in order {
        let trial: Vec<Var> = current.iter().copied().filter(|&u| u != v).collect();
        if checker.verdict(&trial) == Verdict::Independent {
            current = trial;
        }
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::evaluate;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn v(i: u32) -> Var {
        Var::new(i)
    }

    fn models(f: &CnfFormula) -> Vec<Witness> {
        (0..1u64 << f.num_vars())
            .map(|b| Witness::from_bits(b, f.num_vars()))
            .filter(|w| evaluate(f, w).unwrap())
            .collect()
    }

    fn brute_independent(f: &CnfFormula, vars: &[Var]) -> bool {
        let ms = models(f);
        let proj: HashSet<_> = ms.iter().map(|w| w.project(vars).unwrap()).collect();
        proj.len() == ms.len()
    }

    fn iff() -> CnfFormula {
        CnfFormula::from_clauses(2, [vec![1, -2], vec![-1, 2]]).unwrap()
    }

    #[test]
    fn equivalence_examples() {
        let f = iff();
        assert!(is_independent_support(&f, &[v(1)]).unwrap().independent);
        assert!(is_independent_support(&f, &[v(2)]).unwrap().independent);
        assert!(is_independent_support(&f, &[v(1), v(2)]).unwrap().independent);
        let c = is_independent_support(&f, &[]).unwrap();
        assert!(!c.independent);
        let (a, b) = c.witness_pair.unwrap();
        let mut pair = [a.values().to_vec(), b.values().to_vec()];
        pair.sort();
        assert_eq!(pair, [vec![false, false], vec![true, true]]);
    }

    #[test]
    fn minimize_examples() {
        let f = iff();
        assert_eq!(minimize_support(&f, &[v(1), v(2)], None, None).unwrap(), vec![v(2)]);
        assert_eq!(
            minimize_support(&f, &[v(1), v(2)], Some(&[v(2), v(1)]), None).unwrap(),
            vec![v(1)]
        );
        let g = CnfFormula::new(1);
        assert_eq!(minimize_support(&g, &[v(1)], None, None).unwrap(), vec![v(1)]);
        assert!(matches!(
            minimize_support(&g, &[], None, None),
            Err(SupportError::NotIndependent(_))
        ));
        assert_eq!(
            minimize_support(&f, &[v(1), v(2)], Some(&[v(1)]), None),
            Err(SupportError::InvalidOrder)
        );
        assert!(is_independent_support(&g, &[v(2)]).is_err());
    }

    fn gates() -> CnfFormula {
        // x6 = x1 ∧ x2, x7 = x3 ⊕ x4, x8 = x5 ∨ x6.
        CnfFormula::from_clauses(
            8,
            [
                vec![-6, 1],
                vec![-6, 2],
                vec![6, -1, -2],
                vec![-7, 3, 4],
                vec![-7, -3, -4],
                vec![7, -3, 4],
                vec![7, 3, -4],
                vec![8, -5],
                vec![8, -6],
                vec![-8, 5, 6],
            ],
        )
        .unwrap()
    }

    #[test]
    fn gate_outputs_are_removed() {
        let f = gates();
        let all = f.support();
        let order: Vec<Var> = (1..=8).rev().map(v).collect();
        let inputs: Vec<Var> = (1..=5).map(v).collect();
        assert_eq!(minimize_support(&f, &all, Some(&order), None).unwrap(), inputs);
        let d = minimize_support(&f, &all, None, None).unwrap();
        assert_eq!(d.len(), 5);
        assert!(brute_independent(&f, &d));
        for &x in &d {
            let rest: Vec<Var> = d.iter().copied().filter(|&u| u != x).collect();
            assert!(!brute_independent(&f, &rest));
        }
    }

    #[test]
    fn tiny_budget_keeps_result_independent() {
        let f = gates();
        let r = minimize_support(&f, &f.support(), None, Some(0)).unwrap();
        assert!(brute_independent(&f, &r));
    }

    fn arb_formula() -> impl Strategy<Value = CnfFormula> {
        (2u32..8).prop_flat_map(|n| {
            let lit = (1..=n as i64, any::<bool>()).prop_map(|(v, s)| if s { v } else { -v });
            prop::collection::vec(prop::collection::vec(lit, 1..4), 0..12)
                .prop_map(move |cs| CnfFormula::from_clauses(n, cs).unwrap())
        })
    }

    #[test]
    fn target_restricted_check() {
        // x3 = x1 ∧ x2 with x4 free: {x1, x2} determines {x1, x2, x3} only.
        let f = CnfFormula::from_clauses(4, [vec![-3, 1], vec![-3, 2], vec![3, -1, -2]]).unwrap();
        let target = [v(1), v(2), v(3)];
        assert_eq!(
            minimize_support_for(&f, &target, &target, Some(&[v(3), v(2), v(1)]), None).unwrap(),
            vec![v(1), v(2)]
        );
        assert!(!is_independent_support(&f, &[v(1), v(2)]).unwrap().independent);
        assert!(IndependenceChecker::with_target(&f, &target).certificate(&[v(1), v(2)]).independent);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn check_matches_brute_force(f in arb_formula(), mask in any::<u8>()) {
            let vars: Vec<Var> = (1..=f.num_vars()).filter(|i| mask >> (i - 1) & 1 == 1).map(v).collect();
            let c = is_independent_support(&f, &vars).unwrap();
            prop_assert_eq!(c.independent, brute_independent(&f, &vars));
            if let Some((a, b)) = c.witness_pair {
                prop_assert!(evaluate(&f, &a).unwrap() && evaluate(&f, &b).unwrap());
                prop_assert_eq!(a.project(&vars).unwrap(), b.project(&vars).unwrap());
                prop_assert_ne!(a, b);
            }
        }

        #[test]
        fn minimized_support_is_minimal(f in arb_formula()) {
            let s = minimize_support(&f, &f.support(), None, None).unwrap();
            prop_assert!(brute_independent(&f, &s));
            for &x in &s {
                let rest: Vec<Var> = s.iter().copied().filter(|&u| u != x).collect();
                prop_assert!(!brute_independent(&f, &rest));
            }
        }
    }
}
