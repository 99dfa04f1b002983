//! Exact arithmetic on logarithms of positive rationals.
//!
//! A [`LogMonomial`] is a formal sum `Σ e_i · ln(b_i)` with integer bases
//! `b_i > 1` and rational exponents `e_i`. Sign and zero tests are decided
//! exactly by clearing denominators and comparing the two big-integer
//! products `Π b_i^{D e_i}` over positive and negative exponents.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num::bigint::Sign;
use num::{BigInt, BigRational, BigUint, Integer, One, Signed, ToPrimitive, Zero};

/// Natural log of a positive big integer, accurate for any size.
pub fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().expect("64-bit prefix fits");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_rational(r: &BigRational) -> f64 {
    assert!(r.is_positive(), "ln of non-positive rational");
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    ln_biguint(num) - ln_biguint(den)
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let sign = if r.is_negative() { -1.0 } else { 1.0 };
        sign * ln_rational(&r.abs()).exp()
    })
}

pub fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"3"`, `"-2/7"` or a decimal like `"0.25"` into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let t = text.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let n: BigInt = digits.parse().ok()?;
        let d = num::pow(BigInt::from(10u32), frac.len());
        let r = BigRational::new(n, d);
        return Some(if neg { -r } else { r });
    }
    t.parse::<BigInt>().ok().map(BigRational::from_integer)
}

/// Limit on the bit size of the products formed by exact comparisons.
const MAX_PRODUCT_BITS: u64 = 1 << 26;

#[derive(Clone, PartialEq, Eq, Default)]
pub struct LogMonomial {
    terms: BTreeMap<BigUint, BigRational>,
}

impl fmt::Debug for LogMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(b, e)| format!("{e}*ln({b})"))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl LogMonomial {
    pub fn zero() -> Self {
        LogMonomial::default()
    }

    /// `ln(n)` for a positive integer.
    pub fn ln_uint(n: &BigUint) -> Self {
        assert!(!n.is_zero(), "ln(0)");
        let mut m = LogMonomial::zero();
        if !n.is_one() {
            m.terms.insert(n.clone(), BigRational::one());
        }
        m
    }

    /// `ln(r)` for a positive rational.
    pub fn ln_rational(r: &BigRational) -> Self {
        assert!(r.is_positive(), "ln of non-positive rational");
        let num = LogMonomial::ln_uint(r.numer().magnitude());
        let den = LogMonomial::ln_uint(r.denom().magnitude());
        num.sub(&den)
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BigUint, &BigRational)> {
        self.terms.iter()
    }

    fn add_term(&mut self, base: &BigUint, e: &BigRational) {
        if e.is_zero() {
            return;
        }
        let slot = self
            .terms
            .entry(base.clone())
            .or_insert_with(BigRational::zero);
        *slot += e;
        if slot.is_zero() {
            self.terms.remove(base);
        }
    }

    pub fn add(&self, other: &LogMonomial) -> LogMonomial {
        let mut out = self.clone();
        for (b, e) in &other.terms {
            out.add_term(b, e);
        }
        out
    }

    pub fn sub(&self, other: &LogMonomial) -> LogMonomial {
        let mut out = self.clone();
        for (b, e) in &other.terms {
            out.add_term(b, &-e);
        }
        out
    }

    pub fn scale(&self, k: &BigRational) -> LogMonomial {
        if k.is_zero() {
            return LogMonomial::zero();
        }
        LogMonomial {
            terms: self.terms.iter().map(|(b, e)| (b.clone(), e * k)).collect(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(b, e)| rational_to_f64(e) * ln_biguint(b))
            .sum()
    }

    /// Exact sign of the represented real number; `None` if the required
    /// products would exceed the size limit.
    pub fn signum(&self) -> Option<Ordering> {
        if self.terms.is_empty() {
            return Some(Ordering::Equal);
        }
        let denom_lcm = self
            .terms
            .values()
            .fold(BigInt::one(), |acc, e| acc.lcm(e.denom()));
        let mut pos = BigUint::one();
        let mut neg = BigUint::one();
        let mut budget = 0u64;
        for (b, e) in &self.terms {
            let k = (e.numer() * (&denom_lcm / e.denom())).clone();
            let mag = k.magnitude().to_u32()?;
            budget = budget.saturating_add(b.bits().saturating_mul(mag as u64));
            if budget > MAX_PRODUCT_BITS {
                return None;
            }
            let p = num::pow(b.clone(), mag as usize);
            match k.sign() {
                Sign::Plus => pos *= p,
                Sign::Minus => neg *= p,
                Sign::NoSign => {}
            }
        }
        Some(pos.cmp(&neg))
    }

    pub fn is_zero(&self) -> Option<bool> {
        self.signum().map(|s| s == Ordering::Equal)
    }

    /// Text form such as `ln(2)`, `-1/2*ln(3)` or `ln(2) - 2*ln(5)`; `0` when empty.
    pub fn to_expr(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (b, e)) in self.terms.iter().enumerate() {
            let neg = e.is_negative();
            let mag = e.abs();
            match (i, neg) {
                (0, true) => out.push('-'),
                (0, false) => {}
                (_, true) => out.push_str(" - "),
                (_, false) => out.push_str(" + "),
            }
            if !mag.is_one() {
                out.push_str(&format!("{mag}*"));
            }
            out.push_str(&format!("ln({b})"));
        }
        out
    }

    /// Parses the output of [`to_expr`](Self::to_expr); arguments of `ln`
    /// may also be fractions `p/q`.
    pub fn parse_expr(text: &str) -> Option<LogMonomial> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if compact == "0" {
            return Some(LogMonomial::zero());
        }
        let mut out = LogMonomial::zero();
        let mut rest = compact.as_str();
        let mut first = true;
        while !rest.is_empty() {
            let neg = match rest.as_bytes()[0] {
                b'-' => {
                    rest = &rest[1..];
                    true
                }
                b'+' if !first => {
                    rest = &rest[1..];
                    false
                }
                _ if first => false,
                _ => return None,
            };
            first = false;
            let start = rest.find("ln(")?;
            let coef = if start == 0 {
                BigRational::one()
            } else {
                parse_rational(rest[..start].strip_suffix('*')?)?
            };
            let close = rest[start..].find(')')? + start;
            let arg = parse_rational(&rest[start + 3..close])?;
            if !arg.is_positive() {
                return None;
            }
            let term = LogMonomial::ln_rational(&arg).scale(&coef);
            out = if neg { out.sub(&term) } else { out.add(&term) };
            rest = &rest[close + 1..];
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn log_identities_are_exact() {
        // ln 8 - 3 ln 2 = 0 even though the bases differ
        let l8 = LogMonomial::ln_uint(&u(8));
        let l2 = LogMonomial::ln_uint(&u(2));
        let diff = l8.sub(&l2.scale(&ratio(3, 1)));
        assert!(!diff.is_structurally_zero());
        assert_eq!(diff.is_zero(), Some(true));
        // (1/2) ln 9 = ln 3
        let half9 = LogMonomial::ln_uint(&u(9)).scale(&ratio(1, 2));
        assert_eq!(half9.sub(&LogMonomial::ln_uint(&u(3))).is_zero(), Some(true));
    }

    #[test]
    fn signs() {
        let l3 = LogMonomial::ln_uint(&u(3));
        let l2 = LogMonomial::ln_uint(&u(2));
        assert_eq!(l3.sub(&l2).signum(), Some(Ordering::Greater));
        // 5 ln 2 = ln 32 > ln 31
        let d = l2.scale(&ratio(5, 1)).sub(&LogMonomial::ln_uint(&u(31)));
        assert_eq!(d.signum(), Some(Ordering::Greater));
        assert!((d.to_f64() - (32f64 / 31.0).ln()).abs() < 1e-15);
        assert_eq!(LogMonomial::ln_uint(&u(1)).signum(), Some(Ordering::Equal));
    }

    #[test]
    fn rationals() {
        let r = LogMonomial::ln_rational(&ratio(2, 3));
        assert!((r.to_f64() - (2f64 / 3.0).ln()).abs() < 1e-15);
        assert_eq!(r.signum(), Some(Ordering::Less));
        assert_eq!(parse_rational("1/3"), Some(ratio(1, 3)));
        assert_eq!(parse_rational("0.25"), Some(ratio(1, 4)));
        assert_eq!(parse_rational("-0.5"), Some(-ratio(1, 2)));
        assert_eq!(parse_rational("2"), Some(ratio(2, 1)));
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn expressions_round_trip() {
        let m = LogMonomial::ln_uint(&u(2))
            .sub(&LogMonomial::ln_uint(&u(5)).scale(&ratio(1, 2)));
        assert_eq!(m.to_expr(), "ln(2) - 1/2*ln(5)");
        assert_eq!(LogMonomial::parse_expr(&m.to_expr()), Some(m));
        assert_eq!(LogMonomial::parse_expr("0"), Some(LogMonomial::zero()));
        let third = LogMonomial::parse_expr("-ln(1/3)").unwrap();
        assert_eq!(third, LogMonomial::ln_uint(&u(3)));
        assert_eq!(LogMonomial::parse_expr("ln(0)"), None);
        assert_eq!(LogMonomial::parse_expr("2ln(3)"), None);
    }

    #[test]
    fn large_integer_logs() {
        let big = num::pow(u(3), 2000);
        let l = ln_biguint(&big);
        assert!((l - 2000.0 * 3f64.ln()).abs() < 1e-9);
    }
}
