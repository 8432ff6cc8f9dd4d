//! Hadamard matrices of the orders used by the AR(1) fixtures.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const SUPPORTED_ORDERS: [usize; 5] = [1, 2, 4, 8, 12];

/// `H` with entries ±1 and `H Hᵀ = p I`.
///
/// Powers of two use the Sylvester doubling `[[H, H], [H, -H]]`; order 12 is
/// the Paley type I matrix over GF(11).
pub fn hadamard(p: usize) -> Result<DMatrix<i32>> {
    match p {
        1 => Ok(DMatrix::from_element(1, 1, 1)),
        2 | 4 | 8 => {
            let h = hadamard(p / 2)?;
            let q = p / 2;
            Ok(DMatrix::from_fn(p, p, |i, j| {
                let s = h[(i % q, j % q)];
                if i >= q && j >= q {
                    -s
                } else {
                    s
                }
            }))
        }
        12 => Ok(paley(11)),
        _ => Err(Error::InvalidParameter(format!(
            "no Hadamard matrix of order {p}; supported orders are {SUPPORTED_ORDERS:?}"
        ))),
    }
}

/// Quadratic character of `a` modulo the prime `q`.
fn legendre(a: i64, q: i64) -> i32 {
    let a = a.rem_euclid(q);
    if a == 0 {
        0
    } else if (1..q).any(|x| x * x % q == a) {
        1
    } else {
        -1
    }
}

/// Paley I construction for a prime `q ≡ 3 (mod 4)`: `H = I + S` with
/// `S = [[0, 1ᵀ], [-1, Q]]` and `Q` the Jacobsthal matrix.
fn paley(q: usize) -> DMatrix<i32> {
    let p = q + 1;
    DMatrix::from_fn(p, p, |i, j| {
        let s = match (i, j) {
            (0, 0) => 0,
            (0, _) => 1,
            (_, 0) => -1,
            _ => legendre(j as i64 - i as i64, q as i64),
        };
        s + i32::from(i == j)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_orders() {
        assert_eq!(hadamard(1).unwrap(), DMatrix::from_element(1, 1, 1));
        assert_eq!(
            hadamard(2).unwrap(),
            DMatrix::from_row_slice(2, 2, &[1, 1, 1, -1])
        );
    }

    #[test]
    fn orthogonality_is_exact() {
        for p in SUPPORTED_ORDERS {
            let h = hadamard(p).unwrap();
            assert!(h.iter().all(|&x| x == 1 || x == -1));
            let g = &h * h.transpose();
            assert_eq!(g, DMatrix::identity(p, p) * p as i32, "order {p}");
        }
    }

    #[test]
    fn unsupported_order() {
        for p in [0, 3, 6, 16] {
            assert!(hadamard(p).is_err());
        }
    }
}
