//! The `H_xor(n, m)` family: `h(y)[i] = a[i][0] ^ XOR_k a[i][k] & y[k]`.
//!
//! Row `i` of the coefficient matrix is packed into 64-bit words with bit `k`
//! holding `a[i][k]`; bit 0 is the offset. Applying a row to an input is an
//! AND with the input (whose bit 0 is forced to 1) followed by a popcount
//! parity.

use rand::Rng;
use thiserror::Error;

use crate::formula::Var;
use crate::solver::XorConstraint;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HashError {
    #[error("expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// A member of `H_xor(n, m)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct XorHash {
    n: usize,
    m: usize,
    words: usize,
    bits: Vec<u64>,
}

/// The target cell `alpha` in `{0,1}^m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CellTarget {
    bits: Vec<bool>,
}

impl CellTarget {
    pub fn new(bits: Vec<bool>) -> CellTarget {
        CellTarget { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }
}

fn words_for(n: usize) -> usize {
    (n + 1).div_ceil(64)
}

fn pack(y: &[bool]) -> Vec<u64> {
    let mut out = vec![0u64; words_for(y.len())];
    out[0] = 1;
    for (k, &b) in y.iter().enumerate() {
        if b {
            out[(k + 1) / 64] |= 1 << ((k + 1) % 64);
        }
    }
    out
}

impl XorHash {
    /// The hash with no output bits.
    pub fn empty(n: usize) -> XorHash {
        XorHash {
            n,
            m: 0,
            words: words_for(n),
            bits: Vec::new(),
        }
    }

    /// Builds a hash from explicit rows of `n + 1` coefficients each.
    pub fn from_rows(n: usize, rows: &[Vec<bool>]) -> Result<XorHash, HashError> {
        let mut h = XorHash::empty(n);
        for row in rows {
            if row.len() != n + 1 {
                return Err(HashError::LengthMismatch {
                    expected: n + 1,
                    got: row.len(),
                });
            }
            let mut words = vec![0u64; h.words];
            for (k, &b) in row.iter().enumerate() {
                if b {
                    words[k / 64] |= 1 << (k % 64);
                }
            }
            h.bits.extend(words);
            h.m += 1;
        }
        Ok(h)
    }

    /// Appends one row of independent fair coin flips.
    pub fn push_random_row<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let tail = (self.n + 1) % 64;
        for w in 0..self.words {
            let mut word = rng.next_u64();
            if w + 1 == self.words && tail != 0 {
                word &= (1u64 << tail) - 1;
            }
            self.bits.push(word);
        }
        self.m += 1;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    /// Coefficient `a[i][k]`, with `i` in `0..m` and `k` in `0..=n`.
    pub fn coeff(&self, i: usize, k: usize) -> bool {
        self.row(i)[k / 64] >> (k % 64) & 1 == 1
    }

    /// Number of input variables in row `i` (offset excluded).
    pub fn row_weight(&self, i: usize) -> usize {
        let ones: u32 = self.row(i).iter().map(|w| w.count_ones()).sum();
        ones as usize - self.coeff(i, 0) as usize
    }

    /// Row `i` as a constraint over `vars` selecting output bit `alpha_i`.
    pub fn row_constraint(&self, i: usize, alpha_i: bool, vars: &[Var]) -> XorConstraint {
        let members = (1..=self.n).filter(|&k| self.coeff(i, k)).map(|k| vars[k - 1]);
        XorConstraint::new(members, alpha_i ^ self.coeff(i, 0))
    }

    /// The hash restricted to its first `m` rows.
    pub fn prefix(&self, m: usize) -> XorHash {
        let m = m.min(self.m);
        XorHash {
            n: self.n,
            m,
            words: self.words,
            bits: self.bits[..m * self.words].to_vec(),
        }
    }

    fn apply_packed(&self, y: &[u64]) -> Vec<bool> {
        (0..self.m)
            .map(|i| {
                let ones: u32 = self.row(i).iter().zip(y).map(|(a, b)| (a & b).count_ones()).sum();
                ones & 1 == 1
            })
            .collect()
    }
}

/// Draws `h` from `H_xor(n, m)`: each of the `m(n+1)` coefficients is an
/// independent fair bit from `rng`.
pub fn draw_hash<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> XorHash {
    let mut h = XorHash::empty(n);
    for _ in 0..m {
        h.push_random_row(rng);
    }
    h
}

/// Draws a uniformly random target in `{0,1}^m`.
pub fn draw_target<R: Rng + ?Sized>(m: usize, rng: &mut R) -> CellTarget {
    CellTarget::new((0..m).map(|_| rng.random::<bool>()).collect())
}

/// Evaluates `h(y)`.
pub fn apply_hash(h: &XorHash, y: &[bool]) -> Result<Vec<bool>, HashError> {
    if y.len() != h.n {
        return Err(HashError::LengthMismatch {
            expected: h.n,
            got: y.len(),
        });
    }
    Ok(h.apply_packed(&pack(y)))
}

/// Translates the cell `{y : h(y) = alpha}` over the ordered variables `vars`
/// into one XOR constraint per hash row.
pub fn hash_to_constraints(h: &XorHash, alpha: &CellTarget, vars: &[Var]) -> Result<Vec<XorConstraint>, HashError> {
    if vars.len() != h.n {
        return Err(HashError::LengthMismatch {
            expected: h.n,
            got: vars.len(),
        });
    }
    if alpha.len() != h.m {
        return Err(HashError::LengthMismatch {
            expected: h.m,
            got: alpha.len(),
        });
    }
    Ok((0..h.m).map(|i| h.row_constraint(i, alpha.bits[i], vars)).collect())
}
