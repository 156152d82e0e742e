//! Exact greedy recursion for double-precision inputs on a common integer
//! grid.
//!
//! Every coefficient `a_n` and every double `v = m·2^e` is an integer
//! multiple of `1 / (L·2^K)`, where `L` is the lcm of the coefficient
//! denominators and `K` covers the smallest binary exponent in the batch.
//! The recursion then only needs integer subtraction and comparison on the
//! remainder `R = v - s_{n-1}`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::coefficients::CoefficientSequence;
use crate::rational::{big_to_f64_parts, f64_parts, ldexp, next_down, next_up, Rational};

#[derive(Debug, Clone)]
pub struct LevelTable {
    coeffs: Vec<Rational>,
    unit_den: BigInt,
    shift: u32,
    scaled: Vec<BigInt>,
    den_parts: (f64, i64),
}

/// Result of expanding one double.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueExpansion {
    /// Packed membership bits, bit `n-1` for level `n`.
    pub bits: Vec<u64>,
    /// Some threshold `a_n + s_{n-1}` lies within one ulp of the value, so
    /// rounding in `f` could have flipped a bit.
    pub fragile: bool,
}

impl ValueExpansion {
    pub fn bit(&self, level: usize) -> bool {
        let i = level - 1;
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }
}

fn set_bit(words: &mut [u64], i: usize) {
    words[i / 64] |= 1 << (i % 64);
}

impl LevelTable {
    /// Table for `levels` coefficients, able to represent any double whose
    /// binary exponent is at least `-shift`.
    pub fn new(seq: &CoefficientSequence, levels: usize, shift: u32) -> Self {
        Self::from_coefficients(seq.values(levels), shift)
    }

    pub fn from_coefficients(coeffs: Vec<Rational>, shift: u32) -> Self {
        let unit_den = coeffs
            .iter()
            .fold(BigInt::one(), |acc, a| acc.lcm(a.denom()));
        let scaled = coeffs
            .iter()
            .map(|a| (a.numer() * (&unit_den / a.denom())) << shift)
            .collect();
        let den_parts = big_to_f64_parts(&unit_den);
        Self {
            coeffs,
            unit_den,
            shift,
            scaled,
            den_parts,
        }
    }

    /// Smallest shift that makes every value in `values` representable.
    pub fn required_shift(values: &[f64]) -> u32 {
        values
            .iter()
            .filter(|v| **v > 0.0)
            .map(|&v| {
                // Include the neighbours used by the fragility test.
                let (_, e) = f64_parts(next_down(v).max(0.0));
                let (_, e2) = f64_parts(v);
                (-e.min(e2)).max(0) as u32
            })
            .max()
            .unwrap_or(0)
    }

    pub fn levels(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn scaled_coefficient(&self, level: usize) -> &BigInt {
        &self.scaled[level - 1]
    }

    pub fn words(&self) -> usize {
        self.coeffs.len().div_ceil(64)
    }

    /// `v·L·2^K` as an integer.
    pub fn scale_value(&self, v: f64) -> BigInt {
        assert!(v.is_finite() && v >= 0.0, "value must be finite and nonnegative");
        let (m, e) = f64_parts(v);
        if m == 0 {
            return BigInt::zero();
        }
        let exp = e + self.shift as i32;
        assert!(exp >= 0, "table shift too small for {v:e}");
        (BigInt::from(m) * &self.unit_den) << exp as usize
    }

    /// `r·L·2^K` when that is an integer.
    pub fn scale_rational(&self, r: &Rational) -> Option<BigInt> {
        let num = r.numer() * &self.unit_den * (BigInt::one() << self.shift);
        let (q, rem) = num.div_rem(r.denom());
        rem.is_zero().then_some(q)
    }

    pub fn unscale(&self, n: &BigInt) -> Rational {
        Rational::new(n.clone(), &self.unit_den << self.shift)
    }

    /// Monotone double approximation of `n / (L·2^K)` for `n >= 0`.
    pub fn to_f64(&self, n: &BigInt) -> f64 {
        if n.is_negative() {
            return -self.to_f64(&-n);
        }
        let (mant, exp) = big_to_f64_parts(n);
        let (den_mant, den_exp) = self.den_parts;
        ldexp(mant / den_mant, exp - den_exp - self.shift as i64)
    }

    /// Greedy bits for `v` plus the one-ulp fragility flag.
    pub fn expand(&self, v: f64) -> ValueExpansion {
        let mut bits = vec![0u64; self.words()];
        if v == 0.0 {
            // Every threshold is at least a_n > 0.
            return ValueExpansion { bits, fragile: false };
        }
        let lo_v = next_down(v);
        let hi_v = next_up(v);
        let hi_ok = hi_v.is_finite();
        let mut lo = self.scale_value(lo_v);
        let mut hi = if hi_ok { self.scale_value(hi_v) } else { lo.clone() };
        // While the neighbours agree, v agrees with them too; `rem` is only
        // materialized once they split.
        let mut rem: Option<BigInt> = None;
        for (i, a) in self.scaled.iter().enumerate() {
            let fire = match rem.as_mut() {
                Some(r) => {
                    let fire = &*r > a;
                    if fire {
                        *r -= a;
                    }
                    fire
                }
                None => {
                    let lo_fire = &lo > a;
                    let hi_fire = &hi > a;
                    if lo_fire == hi_fire {
                        if lo_fire {
                            lo -= a;
                            hi -= a;
                        }
                        lo_fire
                    } else {
                        let mut r = &lo + (self.scale_value(v) - self.scale_value(lo_v));
                        let fire = &r > a;
                        if fire {
                            r -= a;
                        }
                        rem = Some(r);
                        fire
                    }
                }
            };
            if fire {
                set_bit(&mut bits, i);
            }
        }
        ValueExpansion {
            bits,
            fragile: rem.is_some(),
        }
    }

    /// Greedy bits of the right limit `v⁺` (threshold test `>=`).
    pub fn expand_right_limit(&self, v: f64) -> Vec<u64> {
        let mut bits = vec![0u64; self.words()];
        let mut r = self.scale_value(v);
        for (i, a) in self.scaled.iter().enumerate() {
            if &r >= a {
                r -= a;
                set_bit(&mut bits, i);
            }
        }
        bits
    }

    /// Derived uniform bound at each level for values `<= m` (scaled units).
    pub fn derived_bound_scaled(&self, m: &BigInt) -> Vec<BigInt> {
        let mut out = Vec::with_capacity(self.scaled.len());
        let mut prefix = BigInt::zero();
        let mut best: Option<BigInt> = None;
        for a in &self.scaled {
            prefix += a;
            let mut bound = a.clone();
            if let Some(b) = &best {
                bound = bound.max(b - &prefix);
            }
            bound = bound.max(m - &prefix);
            out.push(bound);
            let candidate = a + &prefix;
            if best.as_ref().is_none_or(|b| &candidate > b) {
                best = Some(candidate);
            }
        }
        out
    }
}
