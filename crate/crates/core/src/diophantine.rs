//! Linear Diophantine equations `p·x − q·y = r` over the integers.

use num_bigint::BigInt;
use thiserror::Error;

use crate::int::Int;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiophantineError {
    #[error("both coefficients are zero")]
    Degenerate,
}

/// The integer solutions of `p·x − q·y = r`:
/// `x = x0 + t·step_x`, `y = y0 + t·step_y` for every integer `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearFamily<T = BigInt> {
    pub x0: T,
    pub y0: T,
    pub step_x: T,
    pub step_y: T,
}

impl<T: Int> LinearFamily<T> {
    pub fn at(&self, t: &T) -> (T, T) {
        (self.x0.add_ref(&t.mul_ref(&self.step_x)), self.y0.add_ref(&t.mul_ref(&self.step_y)))
    }

    /// Whether `(x, y)` is a member of the family.
    pub fn contains(&self, x: &T, y: &T) -> bool {
        let dx = x.sub_ref(&self.x0);
        let dy = y.sub_ref(&self.y0);
        match (self.step_x.is_zero(), self.step_y.is_zero()) {
            (true, true) => dx.is_zero() && dy.is_zero(),
            (true, false) => dx.is_zero() && dy.is_multiple_of(&self.step_y),
            (false, true) => dy.is_zero() && dx.is_multiple_of(&self.step_x),
            (false, false) => {
                let (t, rem) = dx.div_rem(&self.step_x);
                rem.is_zero() && t.mul_ref(&self.step_y) == dy
            }
        }
    }
}

/// Extended Euclid: returns `(g, u, v)` with `u·a + v·b = g = gcd(a, b) >= 0`.
pub fn extended_gcd<T: Int>(a: &T, b: &T) -> (T, T, T) {
    let (mut old_r, mut r) = (a.clone(), b.clone());
    let (mut old_s, mut s) = (T::one(), T::zero());
    let (mut old_t, mut t) = (T::zero(), T::one());
    while !r.is_zero() {
        let q = old_r.div_floor(&r);
        let next_r = old_r.sub_ref(&q.mul_ref(&r));
        old_r = std::mem::replace(&mut r, next_r);
        let next_s = old_s.sub_ref(&q.mul_ref(&s));
        old_s = std::mem::replace(&mut s, next_s);
        let next_t = old_t.sub_ref(&q.mul_ref(&t));
        old_t = std::mem::replace(&mut t, next_t);
    }
    if old_r.is_negative() {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Solves `p·x − q·y = r`. `Ok(None)` when `gcd(p, q)` does not divide `r`.
///
/// The particular solution is normalised so that `x0` is the least
/// non-negative residue modulo `|step_x|` (or `y0` modulo `|step_y|` when
/// `p = 0`).
pub fn solve_linear<T: Int>(p: &T, q: &T, r: &T) -> Result<Option<LinearFamily<T>>, DiophantineError> {
    if p.is_zero() && q.is_zero() {
        return Err(DiophantineError::Degenerate);
    }
    // u·p + v·(−q) = g
    let (g, u, v) = extended_gcd(p, &-q.clone());
    let (scale, rem) = r.div_rem(&g);
    if !rem.is_zero() {
        return Ok(None);
    }
    let mut x0 = u.mul_ref(&scale);
    let mut y0 = v.mul_ref(&scale);
    let step_x = q.div_floor(&g);
    let step_y = p.div_floor(&g);
    if !step_x.is_zero() {
        let t = x0.div_floor(&step_x.abs()).mul_ref(&step_x.signum());
        x0 = x0.sub_ref(&t.mul_ref(&step_x));
        y0 = y0.sub_ref(&t.mul_ref(&step_y));
    } else if !step_y.is_zero() {
        let t = y0.div_floor(&step_y.abs()).mul_ref(&step_y.signum());
        y0 = y0.sub_ref(&t.mul_ref(&step_y));
    }
    Ok(Some(LinearFamily { x0, y0, step_x, step_y }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_integer::Integer;
    use num_traits::{Signed, Zero};
    use proptest::prelude::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn small_backend_agrees() {
        let fam = solve_linear(&13i128, &21, &3).unwrap().unwrap();
        assert_eq!((fam.x0, fam.y0, fam.step_x, fam.step_y), (18, 11, 21, 13));
    }

    #[test]
    fn thirteen_twentyone() {
        let fam = solve_linear(&big(13), &big(21), &big(3)).unwrap().unwrap();
        assert_eq!((fam.step_x.clone(), fam.step_y.clone()), (big(21), big(13)));
        assert_eq!((fam.x0.clone(), fam.y0.clone()), (big(18), big(11)));
        // the parametrisation x = 39 + 21t, y = 24 + 13t describes the same set
        assert!(fam.contains(&big(39), &big(24)));
        assert!(fam.contains(&big(-3), &big(-2)));
        assert!(!fam.contains(&big(40), &big(24)));
    }

    #[test]
    fn no_solution_when_gcd_does_not_divide() {
        assert_eq!(solve_linear(&big(2), &big(4), &big(3)).unwrap(), None);
    }

    #[test]
    fn identity_line() {
        let fam = solve_linear(&big(1), &big(1), &big(0)).unwrap().unwrap();
        for t in -3..=3 {
            let (x, y) = fam.at(&big(t));
            assert_eq!(x, y);
        }
        assert_eq!(fam.step_x.abs(), big(1));
    }

    #[test]
    fn zero_coefficients() {
        assert_eq!(solve_linear(&big(0), &big(0), &big(1)), Err(DiophantineError::Degenerate));
        // 0·x − 3·y = 6  →  y = −2, x free
        let fam = solve_linear(&big(0), &big(3), &big(6)).unwrap().unwrap();
        assert_eq!(fam.y0, big(-2));
        assert_eq!(fam.step_y, big(0));
        assert_eq!(fam.step_x.abs(), big(1));
        assert_eq!(solve_linear(&big(0), &big(3), &big(5)).unwrap(), None);
    }

    proptest! {
        #[test]
        fn every_member_solves_the_equation(p in -500i64..500, q in -500i64..500, r in -2000i64..2000, t in -50i64..50) {
            prop_assume!(p != 0 || q != 0);
            let (p, q, r) = (big(p), big(q), big(r));
            match solve_linear(&p, &q, &r).unwrap() {
                Some(fam) => {
                    let (x, y) = fam.at(&big(t));
                    prop_assert_eq!(&p * &x - &q * &y, r);
                }
                None => {
                    let (g, _, _) = extended_gcd(&p, &q);
                    prop_assert!(!(&r % &g).is_zero());
                }
            }
        }

        #[test]
        fn bezout_identity(a in -10_000i64..10_000, b in -10_000i64..10_000) {
            let (g, u, v) = extended_gcd(&big(a), &big(b));
            prop_assert_eq!(&u * big(a) + &v * big(b), g.clone());
            prop_assert_eq!(g, big(a).gcd(&big(b)));
        }
    }
}
