use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::graph::Graph;

/// Above this node count the spectral gap is computed with Lanczos.
pub const DENSE_LIMIT: usize = 3_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenSolver {
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// Sorted eigenvalues of the normalized Laplacian (dense solve).
pub fn normalized_spectrum(g: &Graph) -> Vec<f64> {
    let eig = SymmetricEigen::new(g.normalized_laplacian());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Second-smallest eigenvalue `λ2` of the normalized Laplacian.
///
/// Disconnected graphs and graphs with fewer than two nodes report exactly 0.
pub fn spectral_gap(g: &Graph) -> f64 {
    spectral_gap_with(g, EigenSolver::Auto)
}

pub fn spectral_gap_with(g: &Graph, solver: EigenSolver) -> f64 {
    let n = g.n();
    if n < 2 {
        return 0.0;
    }
    let dense = match solver {
        EigenSolver::Auto => n <= DENSE_LIMIT,
        EigenSolver::Dense => true,
        EigenSolver::Lanczos => false,
    };
    if !g.is_connected() {
        return 0.0;
    }
    if dense {
        return normalized_spectrum(g)[1].clamp(0.0, 2.0);
    }
    lanczos_gap(g)
}

/// Largest eigenvalue of `2I - L_norm` on the complement of the known null
/// vector `D^{1/2} 1`, via Lanczos with full reorthogonalisation.
fn lanczos_gap(g: &Graph) -> f64 {
    let n = g.n();
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / (g.degree(i) as f64).sqrt()).collect();
    // y = (2I - L) x = x + D^{-1/2} A D^{-1/2} x
    let apply = |x: &DVector<f64>| -> DVector<f64> {
        DVector::from_fn(n, |i, _| {
            x[i] + inv_sqrt[i]
                * g.neighbors(i)
                    .iter()
                    .map(|&j| inv_sqrt[j] * x[j])
                    .sum::<f64>()
        })
    };
    let mut null = DVector::from_fn(n, |i, _| (g.degree(i) as f64).sqrt());
    null /= null.norm();
    let deflate = |v: &mut DVector<f64>| {
        let c = null.dot(v);
        v.axpy(-c, &null, 1.0);
    };

    let mut start = DVector::from_fn(n, |i, _| 1.0 + ((i * 7919) % 104_729) as f64 / 104_729.0);
    deflate(&mut start);
    start /= start.norm();

    let max_steps = n.saturating_sub(1).max(1);
    let mut basis: Vec<DVector<f64>> = vec![start];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut best = 0.0;
    for step in 0..max_steps {
        let mut w = apply(&basis[step]);
        deflate(&mut w);
        let a = basis[step].dot(&w);
        alpha.push(a);
        // full reorthogonalisation (twice is enough)
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let b = w.norm();
        let k = alpha.len();
        if k.is_multiple_of(10) || b < 1e-12 || step + 1 == max_steps {
            let t = DMatrix::from_fn(k, k, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j {
                    beta[i]
                } else if j + 1 == i {
                    beta[j]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let (idx, &theta) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("nonempty tridiagonal");
            let residual = b * eig.eigenvectors[(k - 1, idx)].abs();
            best = theta;
            if residual < 1e-11 || b < 1e-12 {
                break;
            }
        }
        beta.push(b);
        basis.push(w / b);
    }
    (2.0 - best).clamp(0.0, 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graphs() {
        for n in 2..12 {
            let want = n as f64 / (n as f64 - 1.0);
            assert!((spectral_gap(&Graph::complete(n)) - want).abs() < 1e-9);
        }
    }

    #[test]
    fn disconnected_is_zero() {
        let g = Graph::from_pairs(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        assert!(spectral_gap(&g).abs() < 1e-9);
        assert_eq!(spectral_gap_with(&g, EigenSolver::Lanczos), 0.0);
    }

    #[test]
    fn lanczos_matches_dense_on_cycle_and_path() {
        for g in [Graph::cycle(40), Graph::path(30), Graph::complete(9)] {
            let a = spectral_gap_with(&g, EigenSolver::Dense);
            let b = spectral_gap_with(&g, EigenSolver::Lanczos);
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn trivial_sizes() {
        assert_eq!(spectral_gap(&Graph::empty(1)), 0.0);
        assert_eq!(spectral_gap(&Graph::empty(0)), 0.0);
    }
}
