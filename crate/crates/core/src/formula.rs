//! CNF formulas over dense, 1-based variables, DIMACS input/output and
//! assignment evaluation.
//!
//! Two comment annotations are understood by the parser:
//!
//! * `c ind v1 v2 ... 0` declares (part of) the sampling set. Multiple lines
//!   are unioned.
//! * `c p weight <lit> <value> 0` declares a literal weight. The parser keeps
//!   these lines verbatim in [`CnfFormula::comments`]; the `weighted` module
//!   interprets them.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::ops::Not;

use serde::{Serialize, Serializer};
use thiserror::Error;

/// A propositional variable, numbered from 1 as in DIMACS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

impl Var {
    /// Creates a variable from its DIMACS number.
    ///
    /// Panics if `number` is zero.
    pub fn new(number: u32) -> Var {
        assert!(number >= 1, "variable numbers start at 1");
        Var(number)
    }

    /// Creates a variable from a 0-based array index.
    pub fn from_index(index: usize) -> Var {
        Var(index as u32 + 1)
    }

    /// DIMACS number of the variable.
    pub fn get(self) -> u32 {
        self.0
    }

    /// 0-based index, suitable for indexing per-variable arrays.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn lit(self, positive: bool) -> Lit {
        Lit::new(self, positive)
    }

    pub fn pos(self) -> Lit {
        Lit::new(self, true)
    }

    pub fn neg(self) -> Lit {
        Lit::new(self, false)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A literal. Internally `2 * index + sign`, with sign 1 for negative
/// literals, so literals can index watch lists directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Lit {
        Lit(((var.index() as u32) << 1) | (!positive as u32))
    }

    /// Parses a non-zero DIMACS literal.
    pub fn from_dimacs(value: i64) -> Lit {
        assert!(value != 0, "0 is not a literal");
        Lit::new(Var::new(value.unsigned_abs() as u32), value > 0)
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var().get() as i64;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }

    pub fn var(self) -> Var {
        Var((self.0 >> 1) + 1)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    /// Dense code in `0..2 * num_vars`.
    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn from_code(code: usize) -> Lit {
        Lit(code as u32)
    }

    /// Truth value of the literal under a value for its variable.
    pub fn eval(self, var_value: bool) -> bool {
        var_value == self.is_positive()
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("variable {var} exceeds the declared variable count {num_vars}")]
    VarOutOfRange { var: u32, num_vars: u32 },
    #[error("assignment covers {len} variables but the formula declares {num_vars}")]
    IncompleteAssignment { len: usize, num_vars: u32 },
    #[error("variable {0} is not part of the assignment's support")]
    NotInSupport(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("missing `p cnf` header")]
    MissingHeader,
    #[error("invalid token `{0}`")]
    InvalidToken(String),
    #[error("literal {lit} exceeds the declared variable count {num_vars}")]
    LiteralOutOfRange { lit: i64, num_vars: u32 },
    #[error("clause not terminated by 0")]
    UnterminatedClause,
    #[error("sampling-set annotation not terminated by 0")]
    UnterminatedAnnotation,
    #[error("header declares {declared} clauses but {found} were read")]
    ClauseCountMismatch { declared: usize, found: usize },
    #[error("input is not valid UTF-8")]
    Encoding,
}

/// A CNF formula: the declared variables `1..=num_vars`, a list of clauses,
/// an optional sampling set and preserved comment lines.
///
/// Variables that occur in no clause are still part of the support and
/// double the model count.
#[derive(Debug, Clone, Default)]
pub struct CnfFormula {
    num_vars: u32,
    clauses: Vec<Vec<Lit>>,
    sampling_set: Option<Vec<Var>>,
    comments: Vec<String>,
}

impl PartialEq for CnfFormula {
    fn eq(&self, other: &Self) -> bool {
        let mut a: Vec<&String> = self.comments.iter().collect();
        let mut b: Vec<&String> = other.comments.iter().collect();
        a.sort();
        b.sort();
        self.num_vars == other.num_vars
            && self.clauses == other.clauses
            && self.sampling_set == other.sampling_set
            && a == b
    }
}

impl Eq for CnfFormula {}

impl CnfFormula {
    pub fn new(num_vars: u32) -> CnfFormula {
        CnfFormula {
            num_vars,
            ..Default::default()
        }
    }

    /// Builds a formula from DIMACS-style integer clauses.
    pub fn from_clauses<C, I>(num_vars: u32, clauses: C) -> Result<CnfFormula, FormulaError>
    where
        C: IntoIterator<Item = I>,
        I: IntoIterator<Item = i64>,
    {
        let mut f = CnfFormula::new(num_vars);
        for clause in clauses {
            f.add_clause(clause.into_iter().map(Lit::from_dimacs))?;
        }
        Ok(f)
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn comments(&self) -> &[String] {
        &self.comments
    }

    pub fn add_comment(&mut self, text: impl Into<String>) {
        self.comments.push(text.into());
    }

    /// Adds a fresh variable and returns it.
    pub fn new_var(&mut self) -> Var {
        self.num_vars += 1;
        Var::new(self.num_vars)
    }

    pub fn add_clause<I: IntoIterator<Item = Lit>>(&mut self, lits: I) -> Result<(), FormulaError> {
        let clause: Vec<Lit> = lits.into_iter().collect();
        for l in &clause {
            self.check_var(l.var())?;
        }
        self.clauses.push(clause);
        Ok(())
    }

    fn check_var(&self, v: Var) -> Result<(), FormulaError> {
        if v.get() > self.num_vars {
            Err(FormulaError::VarOutOfRange {
                var: v.get(),
                num_vars: self.num_vars,
            })
        } else {
            Ok(())
        }
    }

    pub fn sampling_set(&self) -> Option<&[Var]> {
        self.sampling_set.as_deref()
    }

    /// Sets the sampling set; the stored set is sorted and deduplicated.
    pub fn set_sampling_set<I: IntoIterator<Item = Var>>(&mut self, vars: I) -> Result<(), FormulaError> {
        let set: BTreeSet<Var> = vars.into_iter().collect();
        for &v in &set {
            self.check_var(v)?;
        }
        self.sampling_set = Some(set.into_iter().collect());
        Ok(())
    }

    pub fn clear_sampling_set(&mut self) {
        self.sampling_set = None;
    }

    /// All declared variables, `1..=num_vars`.
    pub fn support(&self) -> Vec<Var> {
        (1..=self.num_vars).map(Var::new).collect()
    }

    /// The sampling set when one is declared, otherwise the full support.
    pub fn projection_vars(&self) -> Vec<Var> {
        match &self.sampling_set {
            Some(s) => s.clone(),
            None => self.support(),
        }
    }

    /// Checks that every variable of `vars` belongs to the support.
    pub fn check_subset(&self, vars: &[Var]) -> Result<(), FormulaError> {
        vars.iter().try_for_each(|&v| self.check_var(v))
    }

    /// Number of clauses each variable occurs in, indexed by `Var::index`.
    pub fn occurrence_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_vars as usize];
        for clause in &self.clauses {
            for l in clause {
                counts[l.var().index()] += 1;
            }
        }
        counts
    }

    /// Appends a copy of `other`'s clauses with every variable shifted by
    /// `offset`. Used to build the two-copy independence query.
    pub(crate) fn extend_shifted(&mut self, other: &CnfFormula, offset: u32) {
        for clause in &other.clauses {
            self.clauses.push(
                clause
                    .iter()
                    .map(|l| Lit::new(Var::new(l.var().get() + offset), l.is_positive()))
                    .collect(),
            );
        }
    }
}

/// Parses DIMACS CNF text.
pub fn parse_dimacs(input: &[u8]) -> Result<CnfFormula, ParseError> {
    let text = std::str::from_utf8(input).map_err(|_| ParseError {
        line: 1,
        kind: ParseErrorKind::Encoding,
    })?;

    let mut header: Option<(u32, usize, usize)> = None;
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    let mut comments = Vec::new();
    let mut ind: Vec<(usize, i64)> = Vec::new();
    let mut has_ind = false;
    let mut pending: Vec<Lit> = Vec::new();
    let mut pending_line = 0;

    let err = |line: usize, kind: ParseErrorKind| ParseError { line, kind };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "%" {
            break;
        }
        if let Some(rest) = line.strip_prefix('c') {
            if !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
                return Err(err(line_no, ParseErrorKind::InvalidToken(line.to_string())));
            }
            let rest = rest.trim();
            let mut tokens = rest.split_whitespace();
            if tokens.next() == Some("ind") {
                has_ind = true;
                let mut terminated = false;
                for tok in tokens {
                    let v: i64 = tok
                        .parse()
                        .map_err(|_| err(line_no, ParseErrorKind::InvalidToken(tok.to_string())))?;
                    if v == 0 {
                        terminated = true;
                        break;
                    }
                    if v < 0 {
                        return Err(err(line_no, ParseErrorKind::InvalidToken(tok.to_string())));
                    }
                    ind.push((line_no, v));
                }
                if !terminated {
                    return Err(err(line_no, ParseErrorKind::UnterminatedAnnotation));
                }
            } else {
                comments.push(rest.to_string());
            }
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(err(line_no, ParseErrorKind::MalformedHeader("duplicate header".into())));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(err(line_no, ParseErrorKind::MalformedHeader(line.to_string())));
            }
            let nv: u32 = parts[2]
                .parse()
                .map_err(|_| err(line_no, ParseErrorKind::MalformedHeader(line.to_string())))?;
            let nc: usize = parts[3]
                .parse()
                .map_err(|_| err(line_no, ParseErrorKind::MalformedHeader(line.to_string())))?;
            header = Some((nv, nc, line_no));
            continue;
        }
        let (num_vars, _, _) = header.ok_or_else(|| err(line_no, ParseErrorKind::MissingHeader))?;
        for tok in line.split_whitespace() {
            let v: i64 = tok
                .parse()
                .map_err(|_| err(line_no, ParseErrorKind::InvalidToken(tok.to_string())))?;
            if v == 0 {
                clauses.push(std::mem::take(&mut pending));
                continue;
            }
            if v.unsigned_abs() > num_vars as u64 {
                return Err(err(line_no, ParseErrorKind::LiteralOutOfRange { lit: v, num_vars }));
            }
            if pending.is_empty() {
                pending_line = line_no;
            }
            pending.push(Lit::from_dimacs(v));
        }
    }

    let last_line = text.lines().count().max(1);
    if !pending.is_empty() {
        return Err(err(pending_line, ParseErrorKind::UnterminatedClause));
    }
    let (num_vars, declared, header_line) =
        header.ok_or_else(|| err(last_line, ParseErrorKind::MissingHeader))?;
    if declared != clauses.len() {
        return Err(err(
            header_line,
            ParseErrorKind::ClauseCountMismatch {
                declared,
                found: clauses.len(),
            },
        ));
    }
    for &(line_no, v) in &ind {
        if v as u64 > num_vars as u64 {
            return Err(err(line_no, ParseErrorKind::LiteralOutOfRange { lit: v, num_vars }));
        }
    }

    let mut f = CnfFormula {
        num_vars,
        clauses,
        sampling_set: None,
        comments,
    };
    if has_ind {
        f.set_sampling_set(ind.iter().map(|&(_, v)| Var::new(v as u32)))
            .expect("sampling set checked against header");
    }
    Ok(f)
}

/// Renders a formula as DIMACS text: header, sampling set, comments, clauses.
pub fn emit_dimacs(f: &CnfFormula) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "p cnf {} {}", f.num_vars, f.clauses.len()).unwrap();
    if let Some(s) = &f.sampling_set {
        out.push_str(&format_ind_line(s));
        out.push('\n');
    }
    for c in &f.comments {
        if c.is_empty() {
            out.push_str("c\n");
        } else {
            writeln!(out, "c {c}").unwrap();
        }
    }
    for clause in &f.clauses {
        for l in clause {
            write!(out, "{l} ").unwrap();
        }
        out.push_str("0\n");
    }
    out
}

/// `c ind v1 ... 0`
pub fn format_ind_line(vars: &[Var]) -> String {
    let mut s = String::from("c ind");
    for v in vars {
        s.push(' ');
        s.push_str(&v.to_string());
    }
    s.push_str(" 0");
    s
}

/// A total assignment over variables `1..=len`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Witness {
    values: Vec<bool>,
}

impl Witness {
    pub fn new(values: Vec<bool>) -> Witness {
        Witness { values }
    }

    /// Assignment whose bit `i` gives the value of variable `i + 1`.
    pub fn from_bits(bits: u64, num_vars: u32) -> Witness {
        Witness::new((0..num_vars).map(|i| bits >> i & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn value(&self, v: Var) -> Option<bool> {
        self.values.get(v.index()).copied()
    }

    pub fn satisfies(&self, lit: Lit) -> Option<bool> {
        self.value(lit.var()).map(|b| lit.eval(b))
    }

    pub fn project(&self, vars: &[Var]) -> Result<ProjectedWitness, FormulaError> {
        project(self, vars)
    }
}

/// An assignment restricted to a set of variables, stored as literals sorted
/// by variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ProjectedWitness {
    lits: Vec<Lit>,
}

impl ProjectedWitness {
    /// Builds a projection from literals over distinct variables.
    pub fn from_lits(mut lits: Vec<Lit>) -> ProjectedWitness {
        lits.sort_by_key(|l| l.var());
        lits.dedup_by_key(|l| l.var());
        ProjectedWitness { lits }
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn vars(&self) -> Vec<Var> {
        self.lits.iter().map(|l| l.var()).collect()
    }

    pub fn value(&self, v: Var) -> Option<bool> {
        self.lits
            .binary_search_by_key(&v, |l| l.var())
            .ok()
            .map(|i| self.lits[i].is_positive())
    }

    /// Restricts this projection further. Errors when `vars` leaves the
    /// projection's support.
    pub fn restrict(&self, vars: &[Var]) -> Result<ProjectedWitness, FormulaError> {
        let mut out = Vec::with_capacity(vars.len());
        for &v in vars {
            let b = self.value(v).ok_or(FormulaError::NotInSupport(v.get()))?;
            out.push(v.lit(b));
        }
        Ok(ProjectedWitness::from_lits(out))
    }

    /// The literals as DIMACS integers followed by a terminating 0.
    pub fn to_dimacs_line(&self) -> String {
        let mut s = String::new();
        for l in &self.lits {
            s.push_str(&l.to_string());
            s.push(' ');
        }
        s.push('0');
        s
    }
}

impl Serialize for ProjectedWitness {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.lits.iter().map(|l| l.to_dimacs()))
    }
}

impl fmt::Display for ProjectedWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dimacs_line())
    }
}

/// Distinct (projected) witnesses in discovery order.
#[derive(Debug, Clone, Default)]
pub struct SolutionSet {
    projected_onto: Option<Vec<Var>>,
    witnesses: Vec<ProjectedWitness>,
    seen: HashSet<ProjectedWitness>,
}

impl SolutionSet {
    pub fn new(projected_onto: Option<Vec<Var>>) -> SolutionSet {
        SolutionSet {
            projected_onto,
            ..Default::default()
        }
    }

    /// Inserts a witness; returns false when it was already present.
    pub fn insert(&mut self, w: ProjectedWitness) -> bool {
        if self.seen.contains(&w) {
            return false;
        }
        self.seen.insert(w.clone());
        self.witnesses.push(w);
        true
    }

    pub fn contains(&self, w: &ProjectedWitness) -> bool {
        self.seen.contains(w)
    }

    pub fn projected_onto(&self) -> Option<&[Var]> {
        self.projected_onto.as_deref()
    }

    pub fn witnesses(&self) -> &[ProjectedWitness] {
        &self.witnesses
    }

    pub fn into_witnesses(self) -> Vec<ProjectedWitness> {
        self.witnesses
    }

    pub fn len(&self) -> usize {
        self.witnesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.witnesses.is_empty()
    }
}

/// True iff every clause of `f` has a literal satisfied by `w`.
pub fn evaluate(f: &CnfFormula, w: &Witness) -> Result<bool, FormulaError> {
    if w.len() < f.num_vars as usize {
        return Err(FormulaError::IncompleteAssignment {
            len: w.len(),
            num_vars: f.num_vars,
        });
    }
    Ok(f
        .clauses
        .iter()
        .all(|c| c.iter().any(|&l| l.eval(w.values[l.var().index()]))))
}

/// Restriction of `w` to `vars`.
pub fn project(w: &Witness, vars: &[Var]) -> Result<ProjectedWitness, FormulaError> {
    let mut lits = Vec::with_capacity(vars.len());
    for &v in vars {
        let b = w.value(v).ok_or(FormulaError::NotInSupport(v.get()))?;
        lits.push(v.lit(b));
    }
    Ok(ProjectedWitness::from_lits(lits))
}
