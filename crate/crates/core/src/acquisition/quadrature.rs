//! Gaussian quadrature rules from the Golub–Welsch eigenproblem.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn golub_welsch(n: usize, off_diag: impl Fn(usize) -> f64, mu0: f64) -> Rule {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j {
            off_diag(j)
        } else if j + 1 == i {
            off_diag(i)
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // symmetric rules: enforce exact symmetry of nodes and weights
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let node = 0.5 * (pairs[j].0 - pairs[i].0);
        let weight = 0.5 * (pairs[j].1 + pairs[i].1);
        pairs[i] = (-node, weight);
        pairs[j] = (node, weight);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    Rule { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() }
}

/// Gauss–Hermite rule for `∫ φ(θ) f(θ) dθ` with `φ` the standard normal density,
/// i.e. the probabilists' form: `Σ w_i f(θ_i)` with `Σ w_i = 1`.
pub fn gauss_hermite_normal(n: usize) -> Rule {
    // probabilists' Hermite recurrence: β_k = k
    golub_welsch(n, |k| (k as f64).sqrt(), 1.0)
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    golub_welsch(
        n,
        |k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        },
        2.0,
    )
}

/// Composite Gauss–Legendre nodes over `[lo, hi]` split into equal panels.
pub fn composite_legendre(lo: f64, hi: f64, panels: usize, per_panel: &Rule) -> Rule {
    let width = (hi - lo) / panels as f64;
    let half = 0.5 * width;
    let mut nodes = Vec::with_capacity(panels * per_panel.nodes.len());
    let mut weights = Vec::with_capacity(nodes.capacity());
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        for (t, w) in per_panel.nodes.iter().zip(&per_panel.weights) {
            nodes.push(mid + half * t);
            weights.push(half * w);
        }
    }
    Rule { nodes, weights }
}
