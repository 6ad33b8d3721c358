//! Real roots of low-degree polynomials on an interval.

use crate::scalar::{lit, Real};

/// Evaluates a polynomial given by ascending coefficients.
pub fn eval<T: Real>(coeffs: &[T], x: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
}

pub fn derivative<T: Real>(coeffs: &[T]) -> Vec<T> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * T::from_usize(k))
        .collect()
}

/// All real roots in `[a, b]`, sorted. Roots are isolated between the
/// critical points of the polynomial (found recursively) and refined by
/// bisection, so every monotone piece contributes at most one root.
pub fn roots_in<T: Real>(coeffs: &[T], a: T, b: T) -> Vec<T> {
    let mut c: Vec<T> = coeffs.to_vec();
    while c.len() > 1 && *c.last().unwrap() == T::zero() {
        c.pop();
    }
    match c.len() {
        0 | 1 => return Vec::new(),
        2 => {
            let r = -c[0] / c[1];
            return if r >= a && r <= b { vec![r] } else { Vec::new() };
        }
        _ => {}
    }
    let mut knots = vec![a];
    knots.extend(roots_in(&derivative(&c), a, b));
    knots.push(b);
    let mut out: Vec<T> = Vec::new();
    for w in knots.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (eval(&c, lo), eval(&c, hi));
        if flo == T::zero() {
            push_unique(&mut out, lo);
            continue;
        }
        if fhi == T::zero() {
            push_unique(&mut out, hi);
            continue;
        }
        if (flo < T::zero()) == (fhi < T::zero()) {
            continue;
        }
        let neg_at_lo = flo < T::zero();
        for _ in 0..200 {
            let mid = (lo + hi) * lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = eval(&c, mid);
            if fm == T::zero() {
                lo = mid;
                hi = mid;
                break;
            }
            if (fm < T::zero()) == neg_at_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        push_unique(&mut out, (lo + hi) * lit(0.5));
    }
    out
}

fn push_unique<T: Real>(out: &mut Vec<T>, r: T) {
    if out.last().map_or(true, |&l| l != r) {
        out.push(r);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_roots() {
        // (x - 0.2)(x - 0.5)(x - 0.9)
        let c: [f64; 4] = [-0.09, 0.73, -1.6, 1.0];
        let r = roots_in(&c, 0.0, 1.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([0.2f64, 0.5, 0.9]) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn no_roots_outside_interval() {
        let c = [1.0, 0.0, 1.0];
        assert!(roots_in(&c, -5.0, 5.0).is_empty());
        assert_eq!(roots_in(&[-2.0, 1.0], 0.0, 1.0).len(), 0);
    }
}
