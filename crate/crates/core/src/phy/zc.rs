use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zadoff-Chu sequence of the given root and length.
///
/// Odd lengths use `exp(−jπ·u·n(n+1)/L)`, even lengths `exp(−jπ·u·n²/L)`.
pub fn zc_sequence(root: u32, length: usize) -> Result<Vec<Complex64>> {
    if length == 0 {
        return Err(Error::invalid("zc length", "must be at least 1"));
    }
    let l = length as u64;
    let u = u64::from(root);
    if u == 0 || gcd(u, l) != 1 {
        return Err(Error::invalid(
            "zc root",
            format!("root {root} is not coprime with length {length}"),
        ));
    }
    let odd = l % 2 == 1;
    Ok((0..l)
        .map(|n| {
            // reduce the quadratic term mod 2L to keep the argument small
            let q = if odd { n * (n + 1) } else { n * n };
            let r = (u * (q % (2 * l))) % (2 * l);
            Complex64::from_polar(1.0, -PI * r as f64 / l as f64)
        })
        .collect())
}
