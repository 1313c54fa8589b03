//! Orthonormal DCT-II / DCT-III pair used to parameterize search signals in
//! the frequency domain. Direct evaluation against a cached cosine basis;
//! at the signal lengths involved (d ≤ a few hundred) this beats FFT-based
//! detours and keeps the transform exactly orthonormal.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

thread_local! {
    static BASIS: RefCell<HashMap<usize, Rc<Vec<f64>>>> = RefCell::new(HashMap::new());
}

/// Cosine table `basis[q * n + t] = s_q · cos(π (2t + 1) q / (2n))` with
/// orthonormal scaling `s_0 = √(1/n)`, `s_q = √(2/n)`.
fn basis(n: usize) -> Rc<Vec<f64>> {
    BASIS.with(|cell| {
        cell.borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let mut table = Vec::with_capacity(n * n);
                for q in 0..n {
                    let s = if q == 0 {
                        (1.0 / n as f64).sqrt()
                    } else {
                        (2.0 / n as f64).sqrt()
                    };
                    for t in 0..n {
                        let ang = std::f64::consts::PI * (2 * t + 1) as f64 * q as f64
                            / (2 * n) as f64;
                        table.push(s * ang.cos());
                    }
                }
                Rc::new(table)
            })
            .clone()
    })
}

/// Orthonormal DCT-II coefficients of `x`.
pub fn dct_forward(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert!(n >= 1, "dct of an empty vector");
    let b = basis(n);
    (0..n)
        .map(|q| {
            let row = &b[q * n..(q + 1) * n];
            row.iter().zip(x).map(|(c, v)| c * v).sum()
        })
        .collect()
}

/// Orthonormal DCT-III (inverse of [`dct_forward`]).
pub fn dct_inverse(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    assert!(n >= 1, "dct of an empty vector");
    let b = basis(n);
    (0..n)
        .map(|t| (0..n).map(|q| b[q * n + t] * c[q]).sum())
        .collect()
}
