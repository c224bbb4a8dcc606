use nalgebra::DMatrix;
use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Kronecker product; the first factor is the most significant index.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::wrap(a.as_dmatrix().kronecker(b.as_dmatrix()))
}

/// `A ⊗ A ⊗ … ⊗ A` (`n` factors); `n = 0` gives the 1×1 identity.
pub fn tensor_power(a: &ComplexMatrix, n: usize) -> ComplexMatrix {
    (0..n).fold(ComplexMatrix::identity(1), |acc, _| tensor(&acc, a))
}

/// Traces out every subsystem not listed in `keep`.
///
/// `dims` lists subsystem dimensions with subsystem 0 most significant.
/// The kept subsystems appear in the output in ascending index order.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    m.require_square()?;
    let total: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || total != m.nrows() {
        return Err(Error::shape(format!(
            "subsystem dimensions {dims:?} do not match matrix dimension {}",
            m.nrows()
        )));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::Index(format!("subsystem {bad} out of range for {} subsystems", dims.len())));
    }
    let mut kept = vec![false; dims.len()];
    for &k in keep {
        kept[k] = true;
    }

    let kept_dims: Vec<usize> = dims.iter().zip(&kept).filter(|(_, &k)| k).map(|(&d, _)| d).collect();
    let traced_dims: Vec<usize> = dims.iter().zip(&kept).filter(|(_, &k)| !k).map(|(&d, _)| d).collect();
    let out_dim: usize = kept_dims.iter().product();
    let traced_dim: usize = traced_dims.iter().product();

    // Full index from (kept multi-index, traced multi-index), both packed mixed-radix.
    let compose = |kept_idx: usize, traced_idx: usize| -> usize {
        let mut kept_digits = digits(kept_idx, &kept_dims);
        let mut traced_digits = digits(traced_idx, &traced_dims);
        kept_digits.reverse();
        traced_digits.reverse();
        let mut full = 0;
        for (s, &d) in dims.iter().enumerate() {
            let digit = if kept[s] { kept_digits.pop() } else { traced_digits.pop() }.unwrap_or(0);
            full = full * d + digit;
        }
        full
    };

    let index_table: Vec<Vec<usize>> = (0..out_dim)
        .map(|a| (0..traced_dim).map(|t| compose(a, t)).collect())
        .collect();

    let src = m.as_dmatrix();
    let mut out = DMatrix::<Complex64>::zeros(out_dim, out_dim);
    for a in 0..out_dim {
        for b in 0..out_dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..traced_dim {
                acc += src[(index_table[a][t], index_table[b][t])];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(ComplexMatrix::wrap(out))
}

/// Mixed-radix digits of `idx`, most significant first.
pub(crate) fn digits(mut idx: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for (slot, &r) in out.iter_mut().zip(radices).rev() {
        *slot = idx % r;
        idx /= r;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::c;

    fn diag(v: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(v)
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(tensor(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)), ComplexMatrix::identity(4));
        assert_eq!(tensor(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0])), diag(&[0.0, 1.0, 0.0, 0.0]));
        let r = tensor(&diag(&[1.0, 0.0]), &ComplexMatrix::identity(2).scale(0.5));
        assert_eq!(r, diag(&[0.5, 0.5, 0.0, 0.0]));
        assert_eq!(tensor_power(&diag(&[1.0, 2.0]), 0), ComplexMatrix::identity(1));
    }

    #[test]
    fn product_state_factorizes() {
        let rho = ComplexMatrix::new(2, 2, vec![c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]).unwrap();
        let sigma = diag(&[0.2, 0.5, 0.3]);
        let prod = tensor(&rho, &sigma);
        assert!(partial_trace(&prod, &[2, 3], &[0]).unwrap().max_abs_diff(&rho) < 1e-15);
        assert!(partial_trace(&prod, &[2, 3], &[1]).unwrap().max_abs_diff(&sigma) < 1e-15);
        assert_eq!(partial_trace(&prod, &[2, 3], &[0, 1]).unwrap(), prod);
    }

    #[test]
    fn bell_state_marginals_are_mixed() {
        let s = 0.5;
        let mut e = vec![c(0.0, 0.0); 16];
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            e[i * 4 + j] = c(s, 0.0);
        }
        let bell = ComplexMatrix::new(4, 4, e).unwrap();
        let half = ComplexMatrix::identity(2).scale(0.5);
        for keep in [0, 1] {
            assert!(partial_trace(&bell, &[2, 2], &[keep]).unwrap().max_abs_diff(&half) < 1e-15);
        }
    }

    #[test]
    fn middle_subsystem_of_three() {
        let a = diag(&[1.0, 0.0]);
        let b = diag(&[0.25, 0.75]);
        let cc = diag(&[0.0, 0.5, 0.5]);
        let abc = tensor(&tensor(&a, &b), &cc);
        assert!(partial_trace(&abc, &[2, 2, 3], &[1]).unwrap().max_abs_diff(&b) < 1e-15);
        let ac = partial_trace(&abc, &[2, 2, 3], &[2, 0]).unwrap();
        assert!(ac.max_abs_diff(&tensor(&a, &cc)) < 1e-15);
    }

    #[test]
    fn errors() {
        let m = ComplexMatrix::identity(4);
        assert!(matches!(partial_trace(&m, &[2, 3], &[0]), Err(Error::Shape(_))));
        assert!(matches!(partial_trace(&m, &[2, 2], &[2]), Err(Error::Index(_))));
    }

    #[test]
    fn digits_are_most_significant_first() {
        assert_eq!(digits(5, &[2, 3]), vec![1, 2]);
        assert_eq!(digits(0, &[]), Vec::<usize>::new());
    }
}
