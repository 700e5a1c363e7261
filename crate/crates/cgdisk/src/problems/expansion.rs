//! Real partial derivatives in terms of Wirtinger derivatives.
//!
//! `d_x = d + dbar` and `d_y = i (d - dbar)`, so
//! `d_x^mu d_y^nu = i^nu sum_j A_j d^j dbar^(mu + nu - j)`.

use crate::C64;

fn binomial(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    let mut b: i64 = 1;
    for i in 0..k {
        b = b * (n - i) as i64 / (i + 1) as i64;
    }
    b
}

/// `i^nu sum_j coeffs[j] d^j dbar^(m - j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorCoefficients {
    pub m: usize,
    /// Exponent of the `i` prefactor, reduced mod 4.
    pub i_power: usize,
    pub coeffs: Vec<i64>,
}

impl OperatorCoefficients {
    pub fn prefactor(&self) -> C64 {
        [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][self.i_power % 4]
    }

    /// Coefficients with the prefactor applied.
    pub fn complex(&self) -> Vec<C64> {
        let p = self.prefactor();
        self.coeffs.iter().map(|&a| p * a as f64).collect()
    }
}

/// `A_j = sum_l C(mu, j - l) C(nu, l) (-1)^(nu - l)`.
pub fn real_to_complex(mu: usize, nu: usize) -> OperatorCoefficients {
    let m = mu + nu;
    let coeffs: Vec<i64> = (0..=m)
        .map(|j| {
            let lo = j.saturating_sub(mu);
            let hi = nu.min(j);
            (lo..=hi)
                .map(|l| {
                    let sign = if (nu - l) % 2 == 0 { 1 } else { -1 };
                    binomial(mu, j - l) * binomial(nu, l) * sign
                })
                .sum()
        })
        .collect();
    let sign = if nu % 2 == 0 { 1 } else { -1 };
    debug_assert!((0..=m).all(|j| coeffs[j] == sign * coeffs[m - j]));
    OperatorCoefficients {
        m,
        i_power: nu % 4,
        coeffs,
    }
}

/// Expands `(d + dbar)^mu (d - dbar)^nu` by walking all `2^(mu + nu)`
/// choices of one term per factor.
pub fn expand_brute_force(mu: usize, nu: usize) -> Vec<i64> {
    let m = mu + nu;
    let mut out = vec![0i64; m + 1];
    for mask in 0u32..(1u32 << m) {
        let mut power = 0;
        let mut sign = 1;
        for f in 0..m {
            let pick_d = mask >> f & 1 == 1;
            if pick_d {
                power += 1;
            } else if f >= mu {
                sign = -sign;
            }
        }
        out[power] += sign;
    }
    out
}

/// `C_p = sum_{k + l = m} a_kl i^l sum_q C(k, p - q) C(l, q) (-1)^(l - q)`,
/// the coefficient of `d^p dbar^(m - p)` in `sum a_kl d_x^k d_y^l`.
///
/// `a[k]` is `a_{k, m - k}`.
pub fn cp_coefficients(a: &[C64]) -> CpCoefficients {
    let m = a.len().saturating_sub(1);
    let ipow = |l: usize| [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][l % 4];
    let values: Vec<C64> = (0..=m)
        .map(|p| {
            (0..=m)
                .map(|k| {
                    let l = m - k;
                    let lo = p.saturating_sub(k);
                    let hi = l.min(p);
                    let inner: i64 = (lo..=hi)
                        .map(|q| {
                            let sign = if (l - q) % 2 == 0 { 1 } else { -1 };
                            binomial(k, p - q) * binomial(l, q) * sign
                        })
                        .sum();
                    a[k] * ipow(l) * inner as f64
                })
                .sum()
        })
        .collect();
    let nonzero: Vec<usize> = (0..=m).filter(|&p| values[p] != C64::new(0.0, 0.0)).collect();
    CpCoefficients {
        p0: (nonzero.len() == 1).then(|| nonzero[0]),
        values,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CpCoefficients {
    pub values: Vec<C64>,
    /// The single index with a nonzero value, when there is exactly one.
    pub p0: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(real_to_complex(2, 0).coeffs, vec![1, 2, 1]);
        let yy = real_to_complex(0, 2);
        assert_eq!((yy.coeffs.clone(), yy.prefactor()), (vec![1, -2, 1], C64::new(-1.0, 0.0)));
        assert_eq!(real_to_complex(1, 1).coeffs, vec![-1, 0, 1]);
    }

    #[test]
    fn laplacian() {
        let c = cp_coefficients(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        assert_eq!(c.values, vec![C64::new(0.0, 0.0), C64::new(4.0, 0.0), C64::new(0.0, 0.0)]);
        assert_eq!(c.p0, Some(1));
        let xx = cp_coefficients(&[C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        assert_eq!(xx.p0, None);
    }
}
