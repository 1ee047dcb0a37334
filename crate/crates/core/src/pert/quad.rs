use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Golub-Welsch).
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut out: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], 2.0 * v0 * v0)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let q = gauss_legendre(8);
        let sum_w: f64 = q.iter().map(|p| p.1).sum();
        assert!((sum_w - 2.0).abs() < 1e-13);
        // degree 14 monomial: 2/15
        let v: f64 = q.iter().map(|(x, w)| w * x.powi(14)).sum();
        assert!((v - 2.0 / 15.0).abs() < 1e-13);
    }

    #[test]
    fn smooth_function() {
        let q = gauss_legendre(32);
        let v: f64 = q.iter().map(|(x, w)| w * x.exp()).sum();
        assert!((v - (1f64.exp() - (-1f64).exp())).abs() < 1e-13);
    }
}
