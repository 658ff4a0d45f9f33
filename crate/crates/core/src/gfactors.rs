//! g-factor tables: the combinatorial coefficients behind matrix elements
//! of powers of `H`.
//!
//! For a fixed source state `k`, the table entry `g(n, l)` is the exact
//! coefficient multiplying `tau^{n-k+2l}` in the evolution series of the
//! rescaled amplitude between `|Psi_k>` and `|Psi_n>`.  Three routes compute
//! it:
//!
//! * [`g_recursive`] — the two-term recursion in `(n, l)`;
//! * [`g_nested_sum`] — the explicit nested sum over beta products,
//!   evaluated level by level (used as an oracle);
//! * [`g_hessenberg`] — repeated lower-Hessenberg matrix-vector products
//!   `B^l (T e_k)`.
//!
//! All three must agree exactly; tests enforce it.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::model::LadderModel;
use crate::Result;

/// Dense table of `g(n, l)` for one source state `k`, all `0 <= n <= N` and
/// `0 <= l <= max_l`.  Entries in the zero region `l < max(k - n, 0)` are
/// stored as exact zeros.
#[derive(Debug, Clone)]
pub struct GFactorTable {
    k: usize,
    dim: usize,
    max_l: usize,
    /// Row-major by `l`: entry `(n, l)` lives at `l * dim + n`.
    values: Vec<BigRational>,
}

impl GFactorTable {
    /// The table entry `g(n, l)`.
    ///
    /// Panics if `n > N` or `l > max_l`.
    pub fn value(&self, n: usize, l: usize) -> &BigRational {
        assert!(n < self.dim, "state index {n} out of range");
        assert!(l <= self.max_l, "order {l} beyond table depth {}", self.max_l);
        &self.values[l * self.dim + n]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_l(&self) -> usize {
        self.max_l
    }

    /// Grows the table to `new_max_l` rows by continuing the recursion.
    /// `model` must be the model the table was built from.
    pub fn extend(&mut self, model: &LadderModel, new_max_l: usize) {
        debug_assert_eq!(model.dim(), self.dim);
        let betas = model.betas();
        self.values.reserve(self.dim * new_max_l.saturating_sub(self.max_l));
        for l in self.max_l + 1..=new_max_l {
            let prev = (l - 1) * self.dim;
            for n in 0..self.dim {
                let above = if n + 1 < self.dim {
                    &betas[n] * &self.values[prev + n + 1]
                } else {
                    // beta_N = 0 makes the out-of-ladder term vanish.
                    BigRational::zero()
                };
                let left = if n > 0 {
                    self.values[l * self.dim + n - 1].clone()
                } else {
                    BigRational::zero()
                };
                self.values.push(left + above);
            }
        }
        self.max_l = self.max_l.max(new_max_l);
    }
}

/// Builds the table for source state `k` via the recursion
/// `g(n, l) = g(n-1, l) + beta_n * g(n+1, l-1)`, seeded by
/// `g(n, 0) = [n >= k]`.
pub fn g_recursive(model: &LadderModel, k: usize, max_l: usize) -> Result<GFactorTable> {
    model.check_index(k)?;
    let dim = model.dim();
    let mut values = Vec::with_capacity(dim * (max_l + 1));
    for n in 0..dim {
        values.push(if n >= k { BigRational::one() } else { BigRational::zero() });
    }
    let mut table = GFactorTable { k, dim, max_l: 0, values };
    table.extend(model, max_l);
    Ok(table)
}

/// Evaluates one `g(n, l)` as the nested sum
///
/// ```text
/// sum_{s_1 = k-l}^{n} beta_{s_1} sum_{s_2 = k-l+1}^{s_1 + 1} beta_{s_2}
///   ... sum_{s_l = k-1}^{s_{l-1} + 1} beta_{s_l}
/// ```
///
/// with empty ranges contributing nothing.  Each inner sum depends on its
/// enclosing index only through the upper bound `s_{j-1} + 1`, so the nest
/// is evaluated innermost-first with one prefix-sum pass per level instead
/// of enumerating index tuples.  Independent oracle for the table builders.
pub fn g_nested_sum(model: &LadderModel, n: usize, k: usize, l: usize) -> Result<BigRational> {
    model.check_index(n)?;
    model.check_index(k)?;
    if l == 0 {
        return Ok(if n >= k { BigRational::one() } else { BigRational::zero() });
    }
    let betas = model.betas();
    let len = betas.len();
    // inner[u] = value of level j+1 with upper bound u; seeded with the
    // empty product for the innermost level.
    let mut inner: Vec<BigRational> = vec![BigRational::one(); len + 2];
    for j in (1..=l).rev() {
        let lower = (k as isize - l as isize + j as isize - 1).max(0) as usize;
        let mut current = Vec::with_capacity(len + 2);
        let mut acc = BigRational::zero();
        for s in 0..len + 2 {
            if s >= lower && s < len && !betas[s].is_zero() {
                acc += &betas[s] * &inner[s + 1];
            }
            current.push(acc.clone());
        }
        inner = current;
    }
    Ok(inner[n].clone())
}

/// Builds the table for source state `k` as `g(., l) = B^l T e_k`, where
/// `B` is the lower-Hessenberg matrix with `B[n][s+1] = beta_s` for
/// `s <= n` and `T` is the lower-triangular all-ones matrix.
pub fn g_hessenberg(model: &LadderModel, k: usize, max_l: usize) -> Result<GFactorTable> {
    model.check_index(k)?;
    let dim = model.dim();
    let betas = model.betas();
    // v = T e_k
    let mut v: Vec<BigRational> = (0..dim)
        .map(|n| if n >= k { BigRational::one() } else { BigRational::zero() })
        .collect();
    let mut values = Vec::with_capacity(dim * (max_l + 1));
    values.extend(v.iter().cloned());
    for _ in 1..=max_l {
        // Literal matrix-vector product; columns 1..=min(n+1, N) carry
        // beta_{c-1}.
        let w: Vec<BigRational> = (0..dim)
            .map(|n| {
                let mut acc = BigRational::zero();
                let top = (n + 1).min(dim - 1);
                for c in 1..=top {
                    acc += &betas[c - 1] * &v[c];
                }
                acc
            })
            .collect();
        values.extend(w.iter().cloned());
        v = w;
    }
    Ok(GFactorTable { k, dim, max_l, values })
}

/// Coefficients of `H^m` applied to `|Psi_k>` in the rescaled basis
/// `phi_j = (A^dag)^j |Psi_0> / (prefactors)`: returns the map
/// `j -> g((k + m - j)/2 ; j, k)` over the reachable `j` of the right
/// parity.  Targets `j > N` are dropped: the corresponding basis vector is
/// annihilated by the `beta_N = 0` rung.
pub fn expand_a_power(
    model: &LadderModel,
    m: usize,
    k: usize,
) -> Result<BTreeMap<usize, BigRational>> {
    model.check_index(k)?;
    let max_l = (k + m) / 2;
    let table = g_recursive(model, k, max_l)?;
    let mut coeffs = BTreeMap::new();
    for l in 0..=max_l {
        let j = k + m - 2 * l;
        if j < model.dim() {
            coeffs.insert(j, table.value(j, l).clone());
        }
    }
    Ok(coeffs)
}
