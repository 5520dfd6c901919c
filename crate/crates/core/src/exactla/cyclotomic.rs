use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::matrix::IntegerMatrix;
use super::poly::{IntPolynomial, Poly, RatPolynomial};
use super::ExactLaError;

pub fn euler_phi(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut m = n;
    let mut result = n;
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            while m.is_multiple_of(p) {
                m /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if m > 1 {
        result -= result / m;
    }
    result
}

fn mobius(n: u64) -> i8 {
    let mut m = n;
    let mut sign = 1;
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            m /= p;
            if m.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if m > 1 {
        sign = -sign;
    }
    sign
}

/// The `n`-th cyclotomic polynomial, `∏_{d | n} (x^d - 1)^{μ(n/d)}`.
pub fn cyclotomic_polynomial(n: u64) -> IntPolynomial {
    assert!(n >= 1, "cyclotomic order must be positive");
    let x_pow_minus_one = |d: u64| &IntPolynomial::monomial(BigInt::one(), d as usize) - &IntPolynomial::from_i64(&[1]);
    let mut num = IntPolynomial::from_i64(&[1]);
    let mut den = IntPolynomial::from_i64(&[1]);
    for d in (1..=n).filter(|d| n.is_multiple_of(*d)) {
        match mobius(n / d) {
            1 => num = &num * &x_pow_minus_one(d),
            -1 => den = &den * &x_pow_minus_one(d),
            _ => {}
        }
    }
    let (q, r) = num.div_rem_monic(&den).expect("monic denominator");
    debug_assert!(r.is_zero());
    q
}

/// All `d` with `φ(d) ≤ degree`. Since `φ(d) ≥ sqrt(d/2)`, `d ≤ 2·degree²` suffices.
pub fn orders_with_phi_at_most(degree: u64) -> Vec<u64> {
    let bound = 2 * degree * degree + 2;
    (1..=bound).filter(|&d| euler_phi(d) <= degree).collect()
}

/// Orders `d` for which `Φ_d` divides `p`; `d = 1` only when `include_trivial`.
pub fn cyclotomic_factor_scan(p: &IntPolynomial, include_trivial: bool) -> Result<Vec<u64>, ExactLaError> {
    let deg = p.degree().ok_or(ExactLaError::ZeroPolynomial)? as u64;
    let mut found = Vec::new();
    for d in orders_with_phi_at_most(deg) {
        if d == 1 && !include_trivial {
            continue;
        }
        let (_, r) = p
            .div_rem_monic(&cyclotomic_polynomial(d))
            .expect("cyclotomic polynomials are monic");
        if r.is_zero() {
            found.push(d);
        }
    }
    Ok(found)
}

/// Whether the matrix has a root of unity other than 1 among its eigenvalues,
/// returning the witnessing orders.
pub fn nontrivial_root_of_unity_orders(m: &IntegerMatrix) -> Result<Vec<u64>, ExactLaError> {
    cyclotomic_factor_scan(&m.char_poly()?, false)
}

/// Least common multiple of all `d` with `φ(d) ≤ degree`.
pub fn root_of_unity_exponent(degree: u64) -> BigInt {
    orders_with_phi_at_most(degree)
        .into_iter()
        .fold(BigInt::one(), |l, d| l.lcm(&BigInt::from(d)))
}

/// Number of distinct real roots of `p` in the open interval `(0, ∞)`, via Sturm sequences.
pub fn positive_real_root_count(p: &IntPolynomial) -> Result<usize, ExactLaError> {
    if p.is_zero() {
        return Err(ExactLaError::ZeroPolynomial);
    }
    let q = p.to_rational();
    let g = q.gcd(&q.derivative());
    let (sq, _) = q.div_rem(&g)?;
    let mut seq: Vec<RatPolynomial> = vec![sq.clone(), sq.derivative()];
    loop {
        let n = seq.len();
        if seq[n - 1].is_zero() {
            seq.pop();
            break;
        }
        let (_, r) = seq[n - 2].div_rem(&seq[n - 1])?;
        seq.push(-&r);
    }
    // sign changes at 0+ (lowest nonzero coefficient) and at +∞ (leading coefficient)
    let at_zero: Vec<i8> = seq.iter().map(sign_near_zero).collect();
    let at_inf: Vec<i8> = seq
        .iter()
        .map(|s| s.leading().map_or(0, |l| if l.is_positive() { 1 } else { -1 }))
        .collect();
    let v0 = sign_changes(&at_zero);
    let vi = sign_changes(&at_inf);
    Ok(v0 - vi)
}

/// Every complex root of `p` is real and strictly positive.
pub fn all_roots_real_positive(p: &IntPolynomial) -> Result<bool, ExactLaError> {
    let deg = p.degree().ok_or(ExactLaError::ZeroPolynomial)?;
    if deg == 0 {
        return Ok(true);
    }
    // count with multiplicity: peel off the squarefree parts one at a time
    let mut remaining = p.to_rational();
    let mut total = 0usize;
    while remaining.degree().unwrap_or(0) > 0 {
        let g = remaining.gcd(&remaining.derivative());
        let (sq, _) = remaining.div_rem(&g)?;
        let ints = sq.to_primitive_integer();
        let distinct = positive_real_root_count(&ints)?;
        if distinct != sq.degree().unwrap_or(0) {
            return Ok(false);
        }
        total += distinct;
        remaining = g;
    }
    Ok(total == deg)
}

fn sign_near_zero(p: &RatPolynomial) -> i8 {
    match p.coeffs().iter().find(|c| !c.is_zero()) {
        None => 0,
        Some(c) if c.is_positive() => 1,
        Some(_) => -1,
    }
}

fn sign_changes(signs: &[i8]) -> usize {
    let nz: Vec<i8> = signs.iter().copied().filter(|&s| s != 0).collect();
    nz.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Substitutes a primitive `d`-th root of unity in `p`, working modulo `Φ_d`.
pub fn vanishes_at_primitive_root(p: &IntPolynomial, d: u64) -> bool {
    let (_, r) = p
        .div_rem_monic(&cyclotomic_polynomial(d))
        .expect("cyclotomic polynomials are monic");
    r.is_zero()
}

pub fn x_minus(c: i64) -> IntPolynomial {
    Poly::from_i64(&[-c, 1])
}
