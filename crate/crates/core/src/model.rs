//! Beta-sequences for the solvable ladder model families.
//!
//! Each family fixes a finite invariant subspace `|Psi_0>, ..., |Psi_N>` and
//! the non-negative rationals `beta_0, ..., beta_N` with `beta_N = 0` that
//! define `H = A + A^dag` on it:
//!
//! ```text
//! A^dag |Psi_n> = sqrt(beta_n)     |Psi_{n+1}>
//! A     |Psi_n> = sqrt(beta_{n-1}) |Psi_{n-1}>
//! ```

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::rat;
use crate::{Error, Result};

/// Which constructor produced a model, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Pump mode depleted `m` photons at a time into a `k`-photon signal
    /// mode, starting from `m_total` pump photons and `ell` signal photons
    /// (`0 <= ell <= k-1`).
    TwoMode { m: u32, k: u32, m_total: u64, ell: u32 },
    /// One pump mode feeding several signal modes at once.
    MultiMode { m: u32, ks: Vec<u32>, ells: Vec<u32>, m_total: u64 },
    /// Single-mode `k`-photon absorption/emission on the `N+1`-dimensional
    /// subspace; equals `TwoMode { m: 1, k, m_total: N, ell: 0 }`.
    KPhoton { k: u32, n_top: u64 },
    /// Nondegenerate parametric down-conversion: `beta_n = (N-n)(n+1)^2`.
    ThreeMode { n_top: u64 },
    /// User-supplied beta-sequence.
    Custom,
}

impl Family {
    /// Short human-readable form used in file headers and error messages.
    pub fn describe(&self) -> String {
        match self {
            Family::TwoMode { m, k, m_total, ell } => {
                format!("two_mode(m={m}, k={k}, M={m_total}, ell={ell})")
            }
            Family::MultiMode { m, ks, ells, m_total } => {
                format!("multi_mode(m={m}, ks={ks:?}, ells={ells:?}, M={m_total})")
            }
            Family::KPhoton { k, n_top } => format!("k_photon(k={k}, N={n_top})"),
            Family::ThreeMode { n_top } => format!("three_mode(N={n_top})"),
            Family::Custom => String::from("custom"),
        }
    }
}

/// A ladder model: its family tag plus the exact beta-sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderModel {
    family: Family,
    betas: Vec<BigRational>,
}

/// Two coupled modes: pump photons consumed `m` at a time, `k` signal
/// photons created per step, from `m_total` pump and `ell` signal photons.
///
/// The subspace has `N = floor(m_total / m)` steps and
///
/// ```text
/// beta_n = [ prod_{i=0}^{m-1} (M - m n - i) ] * prod_{j=1}^{k} (k n + ell + j)
/// ```
pub fn make_two_mode(m: u32, k: u32, m_total: u64, ell: u32) -> Result<LadderModel> {
    if m == 0 {
        return Err(Error::InvalidParameter("two_mode requires m >= 1"));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("two_mode requires k >= 1"));
    }
    if ell >= k {
        return Err(Error::InvalidParameter("two_mode requires 0 <= ell <= k-1"));
    }
    let n_top = m_total / m as u64;
    let betas = (0..=n_top)
        .map(|n| {
            let mut b = pump_factor(m, m_total, n);
            b *= signal_factor(k, ell, n);
            BigRational::from_integer(b)
        })
        .collect();
    Ok(LadderModel { family: Family::TwoMode { m, k, m_total, ell }, betas })
}

/// One pump mode driving several signal modes simultaneously; each signal
/// mode `s` gains `ks[s]` photons per step starting from `ells[s]`.
pub fn make_multi_mode(m: u32, ks: &[u32], ells: &[u32], m_total: u64) -> Result<LadderModel> {
    if m == 0 {
        return Err(Error::InvalidParameter("multi_mode requires m >= 1"));
    }
    if ks.is_empty() {
        return Err(Error::InvalidParameter("multi_mode requires at least one signal mode"));
    }
    if ks.len() != ells.len() {
        return Err(Error::InvalidParameter("multi_mode requires one ell per signal mode"));
    }
    for (&k, &ell) in ks.iter().zip(ells) {
        if k == 0 {
            return Err(Error::InvalidParameter("multi_mode requires every k_s >= 1"));
        }
        if ell >= k {
            return Err(Error::InvalidParameter("multi_mode requires 0 <= ell_s <= k_s-1"));
        }
    }
    let n_top = m_total / m as u64;
    let betas = (0..=n_top)
        .map(|n| {
            let mut b = pump_factor(m, m_total, n);
            for (&k, &ell) in ks.iter().zip(ells) {
                b *= signal_factor(k, ell, n);
            }
            BigRational::from_integer(b)
        })
        .collect();
    let family = Family::MultiMode { m, ks: ks.to_vec(), ells: ells.to_vec(), m_total };
    Ok(LadderModel { family, betas })
}

/// Single-mode `k`-photon model on `N+1` states:
/// `beta_n = (N - n) * prod_{j=1}^{k} (k n + j)`.
pub fn make_k_photon(k: u32, n_top: u64) -> Result<LadderModel> {
    if k == 0 {
        return Err(Error::InvalidParameter("k_photon requires k >= 1"));
    }
    let betas = (0..=n_top)
        .map(|n| {
            let b = BigInt::from(n_top - n) * signal_factor(k, 0, n);
            BigRational::from_integer(b)
        })
        .collect();
    Ok(LadderModel { family: Family::KPhoton { k, n_top }, betas })
}

/// Nondegenerate down-conversion of a pump photon into a signal/idler pair:
/// `beta_n = (N - n)(n + 1)^2`.
pub fn make_three_mode(n_top: u64) -> LadderModel {
    let betas = (0..=n_top)
        .map(|n| {
            let np1 = BigInt::from(n + 1);
            BigRational::from_integer(BigInt::from(n_top - n) * (&np1 * &np1))
        })
        .collect();
    LadderModel { family: Family::ThreeMode { n_top }, betas }
}

/// A model from an explicit beta-sequence.  The sequence must be non-empty,
/// non-negative, and end in zero.
pub fn make_custom(betas: Vec<BigRational>) -> Result<LadderModel> {
    match betas.last() {
        None => return Err(Error::InvalidParameter("custom model needs at least one beta")),
        Some(last) if !last.is_zero() => {
            return Err(Error::InvalidParameter("the final beta must be zero"))
        }
        _ => {}
    }
    if betas.iter().any(|b| b.is_negative()) {
        return Err(Error::InvalidParameter("betas must be non-negative"));
    }
    Ok(LadderModel { family: Family::Custom, betas })
}

/// `prod_{i=0}^{m-1} (M - m n - i)`; zero once the pump cannot donate a
/// full group of `m` photons.
fn pump_factor(m: u32, m_total: u64, n: u64) -> BigInt {
    let base = m_total as i128 - (m as u64 * n) as i128;
    let mut acc = BigInt::one();
    for i in 0..m as i128 {
        acc *= BigInt::from(base - i);
    }
    acc
}

/// `prod_{j=1}^{k} (k n + ell + j)`, the bosonic enhancement of the signal
/// mode.
fn signal_factor(k: u32, ell: u32, n: u64) -> BigInt {
    let base = k as u128 * n as u128 + ell as u128;
    let mut acc = BigInt::one();
    for j in 1..=k as u128 {
        acc *= BigInt::from(base + j);
    }
    acc
}

impl LadderModel {
    /// Dimension `N + 1` of the invariant subspace.
    pub fn dim(&self) -> usize {
        self.betas.len()
    }

    /// The top state index `N`.
    pub fn n_max(&self) -> usize {
        self.betas.len() - 1
    }

    /// The exact beta-sequence, `beta_N = 0` included.
    pub fn betas(&self) -> &[BigRational] {
        &self.betas
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// True when some beta before `beta_N` vanishes: the ladder then splits
    /// into blocks that never exchange amplitude.
    pub fn is_reducible(&self) -> bool {
        self.betas[..self.n_max()].iter().any(|b| b.is_zero())
    }

    /// Beta-sequence rounded to f64.
    pub fn betas_f64(&self) -> Vec<f64> {
        self.betas.iter().map(rat::rational_to_f64).collect()
    }

    /// Largest beta (exact).
    pub fn max_beta(&self) -> &BigRational {
        self.betas
            .iter()
            .max()
            .expect("beta-sequence is non-empty")
    }

    /// `sqrt(max beta)` — the natural frequency scale of the model, used to
    /// express dimensionless times and to scale spectra.
    pub fn frequency_scale(&self) -> f64 {
        num_traits::Float::sqrt(rat::rational_to_f64(self.max_beta()))
    }

    /// Upward-rounded f64 of `sum_n beta_n`, an upper bound used by series
    /// truncation estimates.
    pub(crate) fn sum_beta_f64_up(&self) -> f64 {
        rat::rational_to_f64_up(&rat::sum(&self.betas))
    }

    /// Exact `prod_{s in range} beta_s`.
    pub fn beta_product(&self, range: core::ops::Range<usize>) -> BigRational {
        rat::product(&self.betas, range)
    }

    /// Guard helper: error unless `index <= N`.
    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index < self.dim() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index, dim: self.dim() })
        }
    }
}
