//! Points are plain `Vec<f64>` / `&[f64]`; the helpers here are the small
//! amount of vector arithmetic the hot loops need without pulling a full
//! linear-algebra type through every signature.

use std::cmp::Ordering;

/// A d-dimensional coordinate vector.
pub type Point = Vec<f64>;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn add_scaled(a: &[f64], s: f64, b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// `out = a + s * b`, reusing the output buffer.
#[inline]
pub fn add_scaled_into(a: &[f64], s: f64, b: &[f64], out: &mut [f64]) {
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o = x + s * y;
    }
}

#[inline]
pub fn scale(a: &[f64], s: f64) -> Point {
    a.iter().map(|x| x * s).collect()
}

/// Total lexicographic order used for deterministic tie-breaking.
/// NaN sorts last; equal-up-to-bits points compare equal.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) => continue,
            Some(ord) => return ord,
            None => {
                let xn = x.is_nan();
                let yn = y.is_nan();
                match (xn, yn) {
                    (true, false) => return Ordering::Greater,
                    (false, true) => return Ordering::Less,
                    _ => continue,
                }
            }
        }
    }
    a.len().cmp(&b.len())
}

/// Cosine of the angle between two vectors; `None` when either is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        None
    } else {
        Some(dot(a, b) / (na * nb))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lex_order_is_total_on_plain_values() {
        assert_eq!(lex_cmp(&[1.0, 2.0], &[1.0, 3.0]), Ordering::Less);
        assert_eq!(lex_cmp(&[2.0], &[1.0]), Ordering::Greater);
        assert_eq!(lex_cmp(&[1.0, 2.0], &[1.0, 2.0]), Ordering::Equal);
    }

    #[test]
    fn cosine_of_parallel_vectors_is_one() {
        let c = cosine(&[1.0, 2.0], &[2.0, 4.0]).unwrap();
        assert!((c - 1.0).abs() < 1e-15);
    }
}
