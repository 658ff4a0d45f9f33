//! Spectral side of the ladder models: leading principal minors of
//! `lambda - J`, the characteristic polynomial in closed combinatorial
//! form, Sturm-count eigenvalue bisection, eigenvectors from the three-term
//! recurrence, Moebius-product continued fractions, and the zero-energy
//! stationary state.
//!
//! `J` is the real symmetric tridiagonal matrix with off-diagonals
//! `sqrt(beta_n)`.  Everything here works on the scaled matrix
//! `J / sqrt(max beta)` internally: its spectrum lies in `[-2, 2]` by
//! Gershgorin, which keeps the minor recurrences far from f64 overflow for
//! any model size.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
// Needed for f64 math in no_std builds; test builds link std, whose
// inherent methods shadow the trait's.
#[allow(unused_imports)]
use num_traits::Float;

use crate::model::{Family, LadderModel};
use crate::rat;
use crate::{Error, Result};

/// Eigenpair residuals above this reject the input as "not an eigenvalue".
const RESIDUAL_REJECT: f64 = 1e-5;

/// Leading principal minors `Y_0 = 1, Y_1 = lambda, ...,
/// Y_{n+1} = lambda Y_n - beta_{n-1} Y_{n-1}` up to `Y_{N+1}`, the
/// characteristic polynomial of `J`.
///
/// Raw, unscaled values: fine for moderate models, but the caller should
/// prefer the scaled routines for large `N`.
pub fn minor_sequence(model: &LadderModel, lambda: f64) -> Vec<f64> {
    let betas = model.betas_f64();
    let mut ys = Vec::with_capacity(model.dim() + 1);
    ys.push(1.0);
    ys.push(lambda);
    for j in 1..=model.n_max() {
        let next = lambda * ys[j] - betas[j - 1] * ys[j - 1];
        ys.push(next);
    }
    ys
}

/// Exact-rational twin of [`minor_sequence`].
pub fn minor_sequence_exact(model: &LadderModel, lambda: &BigRational) -> Vec<BigRational> {
    let betas = model.betas();
    let mut ys = Vec::with_capacity(model.dim() + 1);
    ys.push(BigRational::one());
    ys.push(lambda.clone());
    for j in 1..=model.n_max() {
        let next = lambda * &ys[j] - &betas[j - 1] * &ys[j - 1];
        ys.push(next);
    }
    ys
}

/// `det(lambda - J)` expanded in powers of lambda:
///
/// ```text
/// Y_{N+1}(lambda) = sum_l (-1)^l  G(l)  lambda^{N+1-2l}
/// ```
///
/// The `G(l)` are sums of products of `l` betas with pairwise index gaps of
/// at least two; for the built-in families they are positive integers.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPolynomial {
    degree: usize,
    coeffs: Vec<BigRational>,
}

impl CharPolynomial {
    /// Polynomial degree, `N + 1`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// The exact `G(l)`, `l = 0 ..= floor((N+1)/2)`; `G(0) = 1`.
    /// The coefficient of `lambda^{N+1-2l}` is `(-1)^l G(l)`.
    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Exact evaluation at a rational point.
    pub fn evaluate_exact(&self, lambda: &BigRational) -> BigRational {
        let l2 = lambda * lambda;
        // Horner over lambda^2, then one final lambda for odd degrees.
        let mut acc = BigRational::zero();
        for (l, g) in self.coeffs.iter().enumerate() {
            let signed = if l % 2 == 1 { -g.clone() } else { g.clone() };
            acc = acc * &l2 + signed;
        }
        if self.degree % 2 == 1 {
            acc *= lambda;
        }
        acc
    }

    /// `Y_{N+1}(scale * x) / scale^{N+1}` in f64 — the polynomial of the
    /// scaled matrix, safe from overflow for `|x| <~ 2` at any size.
    pub fn evaluate_scaled(&self, x: f64, scale: f64) -> f64 {
        let x2 = x * x;
        let mut acc = 0.0f64;
        for (l, g) in self.coeffs.iter().enumerate() {
            // G(l) / scale^{2l}
            let (m, e) = rat::rational_to_f64_exp(g);
            let term = rat::ldexp(m, e) / scale.powi(2 * l as i32);
            acc = acc * x2 + if l % 2 == 1 { -term } else { term };
        }
        if self.degree % 2 == 1 {
            acc *= x;
        }
        acc
    }
}

/// Builds the characteristic polynomial from the gap-two recursion
/// `G(l; j+1) = G(l; j) + beta_{j-1} G(l-1; j-1)` on the minor index `j`.
pub fn char_poly(model: &LadderModel) -> CharPolynomial {
    let dim = model.dim();
    let betas = model.betas();
    let lmax = (dim) / 2 + 1; // enough rows for degree dim
    // rows[j][l] = G(l) of minor Y_j; j runs 0..=dim.
    let mut prev2: Vec<BigRational> = vec![BigRational::one()]; // Y_0 = 1
    let mut prev: Vec<BigRational> = vec![BigRational::one()]; // Y_1 = lambda
    if dim == 0 {
        unreachable!("models have at least one state");
    }
    for j in 1..dim {
        let mut row = Vec::with_capacity(lmax);
        for l in 0..=(j + 1) / 2 {
            let keep = prev.get(l).cloned().unwrap_or_else(BigRational::zero);
            let add = if l >= 1 {
                prev2
                    .get(l - 1)
                    .map(|g| &betas[j - 1] * g)
                    .unwrap_or_else(BigRational::zero)
            } else {
                BigRational::zero()
            };
            row.push(keep + add);
        }
        prev2 = core::mem::replace(&mut prev, row);
    }
    CharPolynomial { degree: dim, coeffs: prev }
}

/// One `G(l)` evaluated as the literal nested sum over index tuples
/// `s_1 < s_2 - 1 < s_3 - 2 < ...` (gaps of at least two), the expansion
/// the recursion is supposed to reproduce.  Exponential; oracle use only.
pub fn char_coeff_nested_sum(model: &LadderModel, l: usize) -> BigRational {
    if l == 0 {
        return BigRational::one();
    }
    fn level(betas: &[BigRational], depth: usize, from: usize, top: usize) -> BigRational {
        let mut acc = BigRational::zero();
        let mut s = from;
        while s < top {
            if !betas[s].is_zero() {
                if depth == 1 {
                    acc += &betas[s];
                } else {
                    acc += &betas[s] * level(betas, depth - 1, s + 2, top);
                }
            }
            s += 1;
        }
        acc
    }
    level(model.betas(), l, 0, model.n_max())
}

/// All `N + 1` eigenvalues of `J`, ascending, each bracketed by Sturm
/// bisection to an interval of width `tol` (an absolute width in the raw
/// eigenvalue units).
pub fn eigenvalues(model: &LadderModel, tol: f64) -> Result<Vec<f64>> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive and finite"));
    }
    let dim = model.dim();
    let scale = model.frequency_scale();
    if scale == 0.0 {
        // H = 0 on this subspace.
        return Ok(vec![0.0; dim]);
    }
    let sb = scaled_sqrt_betas(model);
    let tol_scaled = tol / scale;
    let mut out = Vec::with_capacity(dim);
    for j in 0..dim {
        // Gershgorin for the scaled matrix: |lambda| <= 2.
        let (mut lo, mut hi) = (-2.125f64, 2.125f64);
        for _ in 0..120 {
            if hi - lo <= tol_scaled {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break; // f64 resolution reached
            }
            if count_below(&sb, mid) <= j {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(0.5 * (lo + hi) * scale);
    }
    Ok(out)
}

/// Sturm count for the scaled matrix: the number of eigenvalues strictly
/// below `lambda`, read off as sign agreements between consecutive minors.
/// A vanishing minor acts as if it had the opposite sign of its
/// predecessor.
fn count_below(sqrt_betas: &[f64], lambda: f64) -> usize {
    let n_max = sqrt_betas.len() - 1;
    let mut prev = 1.0f64; // Y_0
    let mut cur = lambda; // Y_1
    let mut count = 0;
    let mut cur_sign = eff_sign(cur, 1);
    if cur_sign == 1 {
        count += 1;
    }
    for j in 1..=n_max {
        let b = sqrt_betas[j - 1] * sqrt_betas[j - 1];
        let next = lambda * cur - b * prev;
        let next_sign = eff_sign(next, cur_sign);
        if next_sign == cur_sign {
            count += 1;
        }
        prev = cur;
        cur = next;
        cur_sign = next_sign;
        // Renormalize to dodge overflow; signs are all that matter.
        if cur.abs() > 1e140 || prev.abs() > 1e140 {
            prev = rat::ldexp(prev, -480);
            cur = rat::ldexp(cur, -480);
        }
    }
    count
}

fn eff_sign(y: f64, prev_sign: i8) -> i8 {
    if y > 0.0 {
        1
    } else if y < 0.0 {
        -1
    } else {
        -prev_sign
    }
}

/// How the eigenvector / stationary-state routines normalize their output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Euclidean norm 1, first nonzero component positive.
    Unit,
    /// First component exactly 1.
    Psi0,
}

/// The eigenvector of `J` for eigenvalue `lambda`, from the three-term
/// recurrence seeded by `psi_0 = 1`, plus the max-norm residual
/// `|| (J - lambda) psi ||_inf` of the unit-normalized pair in scaled
/// units.  Rejects `lambda` when that residual exceeds 1e-5.
///
/// The f64 recurrence loses the eigenvector whenever its components decay
/// towards the top rung (the wanted solution is then subdominant and
/// roundoff feeds the growing one).  When the fast pass leaves a residual
/// above roundoff level the routine re-derives the components from exact
/// minor values at a root refined in rational arithmetic, which has no such
/// contamination.
pub fn eigenvector(
    model: &LadderModel,
    lambda: f64,
    normalize: Normalization,
) -> Result<(Vec<f64>, f64)> {
    if model.is_reducible() {
        return Err(Error::ReducibleModel);
    }
    let scale = model.frequency_scale();
    let sb = scaled_sqrt_betas(model);
    let x = if scale == 0.0 { lambda } else { lambda / scale };
    let dim = model.dim();
    let mut psi = Vec::with_capacity(dim);
    psi.push(1.0f64);
    if dim > 1 {
        psi.push(x / sb[0]);
        for n in 1..dim - 1 {
            let next = (x * psi[n] - sb[n - 1] * psi[n - 1]) / sb[n];
            psi.push(next);
        }
    }
    let norm = psi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut unit: Vec<f64> = psi.iter().map(|v| v / norm).collect();
    let mut residual = scaled_residual(&unit, x, &sb);
    if residual.is_finite() && residual > EXACT_PATH_TRIGGER && dim > 1 {
        if let Some(refined) = exact_minor_eigenvector(model, lambda) {
            let r = scaled_residual(&refined, x, &sb);
            if r < residual && refined[0] != 0.0 {
                psi = refined.iter().map(|v| v / refined[0]).collect();
                unit = refined;
                residual = r;
            }
        }
    }
    if !residual.is_finite() || residual > RESIDUAL_REJECT {
        return Err(Error::NotAnEigenvalue { lambda, residual });
    }
    Ok(match normalize {
        Normalization::Unit => (unit, residual),
        Normalization::Psi0 => (psi, residual),
    })
}

/// Fast-pass residuals above this are worth the exact-arithmetic retry.
const EXACT_PATH_TRIGGER: f64 = 1e-11;

/// Fractional bits kept when rounding Newton iterates; the leftover root
/// error `~2^-384` stays negligible even after the recurrence amplifies it.
const REFINE_FRAC_BITS: usize = 384;

fn scaled_residual(unit: &[f64], x: f64, sb: &[f64]) -> f64 {
    let dim = unit.len();
    let mut residual = 0.0f64;
    for n in 0..dim {
        let mut row = -x * unit[n];
        if n > 0 {
            row += sb[n - 1] * unit[n - 1];
        }
        if n + 1 < dim {
            row += sb[n] * unit[n + 1];
        }
        residual = residual.max(row.abs());
    }
    residual
}

/// Unit eigenvector from exact minors at a rationally refined root near
/// `lambda`; `None` when the refinement fails to land on a root.
///
/// `psi_n = Y_n / prod sqrt(beta)` carries an irrational normalization, so
/// the exact quantity tracked per component is `q_n = Y_n^2 / prod beta`
/// together with the sign of `Y_n`; the square root is taken only after an
/// exponent-split conversion, which keeps components of any magnitude
/// finite until the final normalization.
fn exact_minor_eigenvector(model: &LadderModel, lambda: f64) -> Option<Vec<f64>> {
    if !lambda.is_finite() {
        return None;
    }
    let lam0 = rat::f64_to_rational(lambda).ok()?;
    let lam = refine_root(model, &lam0)?;
    let ys = minor_sequence_exact(model, &lam);
    let dim = model.dim();
    let betas = model.betas();
    let mut prod = BigRational::one();
    let mut split = Vec::with_capacity(dim);
    for n in 0..dim {
        if n > 0 {
            prod *= &betas[n - 1];
        }
        let q = &ys[n] * &ys[n] / &prod;
        let (m, e) = rat::rational_to_f64_exp(&q);
        split.push((m, e, if ys[n].is_negative() { -1.0 } else { 1.0 }));
    }
    let top = split
        .iter()
        .filter(|(m, _, _)| *m != 0.0)
        .map(|&(_, e, _)| e)
        .max()?;
    let mut comps = Vec::with_capacity(dim);
    for &(m, e, sign) in &split {
        if m == 0.0 {
            comps.push(0.0);
            continue;
        }
        let mut mantissa = m;
        let mut shift = e - top;
        if shift.rem_euclid(2) != 0 {
            mantissa *= 2.0;
            shift -= 1;
        }
        comps.push(sign * rat::ldexp(mantissa.sqrt(), shift / 2));
    }
    let norm = comps.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return None;
    }
    for c in &mut comps {
        *c /= norm;
    }
    Some(comps)
}

/// A few dyadically rounded Newton steps on the exact characteristic
/// polynomial, starting from the (exactly representable) f64 input.  Gives
/// up rather than wander: the result must stay within `1e-4 * scale` of the
/// start, so only genuine near-roots refine.
fn refine_root(model: &LadderModel, lam0: &BigRational) -> Option<BigRational> {
    let scale = model.frequency_scale();
    let cap = rat::f64_to_rational(1e-4 * scale.max(f64::MIN_POSITIVE)).ok()?;
    let settle = BigRational::new(BigInt::one(), BigInt::one() << (REFINE_FRAC_BITS - 4));
    let mut lam = lam0.clone();
    for _ in 0..8 {
        let (p, d) = char_poly_and_derivative(model, &lam);
        if p.is_zero() {
            return Some(lam);
        }
        if d.is_zero() {
            return None;
        }
        let next = round_dyadic(&(&lam - &(p / d)), REFINE_FRAC_BITS);
        if (&next - lam0).abs() > cap {
            return None;
        }
        let moved = (&next - &lam).abs();
        lam = next;
        if moved <= settle {
            break;
        }
    }
    Some(lam)
}

/// `Y_{N+1}(lambda)` and its lambda-derivative in one exact pass.
fn char_poly_and_derivative(
    model: &LadderModel,
    lambda: &BigRational,
) -> (BigRational, BigRational) {
    let betas = model.betas();
    let mut y_prev = BigRational::one();
    let mut y = lambda.clone();
    let mut d_prev = BigRational::zero();
    let mut d = BigRational::one();
    for j in 1..=model.n_max() {
        let y_next = lambda * &y - &betas[j - 1] * &y_prev;
        let d_next = &y + lambda * &d - &betas[j - 1] * &d_prev;
        y_prev = y;
        y = y_next;
        d_prev = d;
        d = d_next;
    }
    (y, d)
}

/// Nearest rational with denominator `2^bits`.
fn round_dyadic(r: &BigRational, bits: usize) -> BigRational {
    let two_pow = BigInt::one() << bits;
    let scaled = r * BigRational::from_integer(two_pow.clone());
    BigRational::new(scaled.round().to_integer(), two_pow)
}

/// Which end of the ladder a continued-fraction expansion is anchored at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Product `M_n ... M_1 M_0` — the ratio in terms of minors below `n`.
    Upward,
    /// Product `M_n ... M_{N-1}` — the tail fraction from the top rung.
    Downward,
}

/// A projective `(P, Q)` pair representing the ratio `R_n = -P/Q`; poles
/// of the continued fraction are the honest point `Q = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectivePair {
    pub p: f64,
    pub q: f64,
}

impl ProjectivePair {
    /// `R_n = -P/Q`; `inf` at a pole.
    pub fn ratio(&self) -> f64 {
        -self.p / self.q
    }

    pub fn is_pole(&self) -> bool {
        self.q == 0.0
    }
}

/// The ratio `R_n = beta_n psi_n / psi_{n+1}`-style continued fraction as
/// a product of Moebius matrices `M_s = [[0, -beta_s], [1, lambda]]`
/// applied to `(0, 1)`, renormalized by powers of two so no intermediate
/// overflows.  `n` must be below `N`.  Upward expands from the bottom of
/// the ladder (`R_n = -P/Q = beta_n Y_n / Y_{n+1}`); downward from the
/// top (the tail fraction `lambda - beta_{n+1}/(lambda - ...)`, with the
/// same `-P/Q` convention).
pub fn ratio_continued_fraction(
    model: &LadderModel,
    n: usize,
    lambda: f64,
    direction: Direction,
) -> Result<ProjectivePair> {
    if model.is_reducible() {
        // With an interior zero beta the Moebius product collapses to the
        // zero matrix and the pair stops carrying information.
        return Err(Error::ReducibleModel);
    }
    if n >= model.n_max() {
        return Err(Error::IndexOutOfRange { index: n, dim: model.n_max() });
    }
    let betas = model.betas_f64();
    let (mut p, mut q) = (0.0f64, 1.0f64);
    let apply = |s: usize, p: &mut f64, q: &mut f64| {
        let (np, nq) = (-betas[s] * *q, *p + lambda * *q);
        *p = np;
        *q = nq;
        // Keep the pair in a sane dyadic window; ratios are unaffected.
        let mag = np.abs().max(nq.abs());
        if mag > 1e120 || (mag > 0.0 && mag < 1e-120) {
            let (_, e) = rat::frexp2(mag);
            *p = rat::ldexp(*p, -e);
            *q = rat::ldexp(*q, -e);
        }
    };
    match direction {
        Direction::Upward => {
            for s in 0..=n {
                apply(s, &mut p, &mut q);
            }
            Ok(ProjectivePair { p, q })
        }
        Direction::Downward => {
            for s in (n..model.n_max()).rev() {
                apply(s, &mut p, &mut q);
            }
            // Rebase so that -P/Q is R_n itself rather than -beta_n/R_n.
            Ok(ProjectivePair { p: betas[n] * q, q: p })
        }
    }
}

/// The zero-energy eigenstate, which exists exactly when `N` is even:
/// odd components vanish and
/// `psi_{2p} = (-1)^p sqrt( prod_{s<p} beta_{2s} / beta_{2s+1} )`.
#[derive(Debug, Clone)]
pub struct StationaryState {
    /// Components `psi_0 ..= psi_N` under the requested normalization.
    pub psi: Vec<f64>,
    /// Exact squared amplitudes under the same normalization.
    pub psi_squared: Vec<BigRational>,
    /// Max-norm residual of `J psi` (unit-normalized, scaled units).
    pub residual: f64,
}

/// Builds the stationary state; errors on odd `N` (no zero eigenvalue) and
/// on reducible models (the amplitude ratio divides by a zero beta).
pub fn stationary_state(model: &LadderModel, normalize: Normalization) -> Result<StationaryState> {
    if model.n_max() % 2 == 1 {
        return Err(Error::NoStationaryState);
    }
    if model.is_reducible() {
        return Err(Error::ReducibleModel);
    }
    let betas = model.betas();
    let pairs = model.n_max() / 2; // number of even steps above psi_0
    // Exact squared amplitudes relative to psi_0.
    let mut q = Vec::with_capacity(pairs + 1);
    q.push(BigRational::one());
    for p in 0..pairs {
        let next = q[p].clone() * &betas[2 * p] / &betas[2 * p + 1];
        q.push(next);
    }
    if let Family::KPhoton { k, n_top } = model.family() {
        for (p, general) in q.iter().enumerate() {
            let closed = k_photon_stationary_squared(*k, n_top / 2, p as u64);
            if closed != *general {
                return Err(Error::SelfCheck("k-photon closed-form stationary amplitudes"));
            }
        }
    }
    let norm2 = rat::sum(&q);
    let dim = model.dim();
    let mut psi = vec![0.0f64; dim];
    let mut psi_squared = vec![BigRational::zero(); dim];
    for (p, qp) in q.iter().enumerate() {
        let (sq, flip) = match normalize {
            Normalization::Psi0 => (qp.clone(), p % 2 == 1),
            Normalization::Unit => (qp / &norm2, p % 2 == 1),
        };
        let amp = rat::rational_to_f64(&sq).sqrt();
        psi[2 * p] = if flip { -amp } else { amp };
        psi_squared[2 * p] = sq;
    }
    // Residual of the unit-normalized vector against the scaled matrix.
    let sb = scaled_sqrt_betas(model);
    let unit_norm = rat::rational_to_f64(&norm2).sqrt();
    let mut residual = 0.0f64;
    for n in (1..dim).step_by(2) {
        let lo = psi[n - 1];
        let hi = if n + 1 < dim { psi[n + 1] } else { 0.0 };
        let scale_back = match normalize {
            Normalization::Psi0 => 1.0 / unit_norm,
            Normalization::Unit => 1.0,
        };
        let row = (sb[n - 1] * lo + sb[n] * hi) * scale_back;
        residual = residual.max(row.abs());
    }
    Ok(StationaryState { psi, psi_squared, residual })
}

/// Closed form of the k-photon stationary squared amplitude:
///
/// ```text
/// psi_{2p}^2 = (M)_p / (M - 1/2)_p * prod_{s=1}^{p} ((2s-1)k)!^2 / ( ((2s-2)k)! (2s k)! )
/// ```
///
/// with falling factorials and `M = N/2`.
pub fn k_photon_stationary_squared(k: u32, m_pairs: u64, p: u64) -> BigRational {
    let mut acc = BigRational::one();
    // (M)_p / (M - 1/2)_p, falling: prod_i (M - i) / (M - 1/2 - i).
    for i in 0..p {
        let num = BigInt::from(m_pairs - i);
        let den = BigRational::new(BigInt::from(2 * (m_pairs - i) as i128 - 1), BigInt::from(2));
        acc *= BigRational::from_integer(num) / den;
    }
    for s in 1..=p {
        let k = k as u64;
        let a = factorial((2 * s - 1) * k);
        let b = factorial((2 * s - 2) * k);
        let c = factorial(2 * s * k);
        acc *= BigRational::new(&a * &a, b * c);
    }
    acc
}

fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for j in 2..=n {
        acc *= BigInt::from(j);
    }
    acc
}

/// Off-diagonals of the scaled matrix: `sqrt(beta_n / max beta)`.
fn scaled_sqrt_betas(model: &LadderModel) -> Vec<f64> {
    let bmax = model.max_beta().clone();
    model
        .betas()
        .iter()
        .map(|b| {
            if b.is_zero() {
                0.0
            } else {
                rat::rational_to_f64(&(b / &bmax)).sqrt()
            }
        })
        .collect()
}
