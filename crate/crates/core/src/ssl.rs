//! Gaussian RBF graphs over combined metrics and the harmonic label solver.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::instances::{combine_distance, Simplex, SslInstance};

/// Largest node count handled by the dense solver.
pub const DENSE_MAX_N: usize = 2000;
/// Solves with a larger condition estimate are rejected.
pub const CONDITION_LIMIT: f64 = 1e14;

/// Complete graph with labeled nodes first, then unlabeled, in instance order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    pub w: DMatrix<f64>,
    pub n_labeled: usize,
    /// Instance index of each graph node.
    pub order: Vec<usize>,
}

impl WeightedGraph {
    pub fn n(&self) -> usize {
        self.w.nrows()
    }
}

pub fn build_rbf_graph(instance: &SslInstance, sigma: f64, beta: &Simplex) -> Result<WeightedGraph> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
    }
    let n = instance.n();
    if n > DENSE_MAX_N {
        return Err(Error::GuardExceeded {
            what: "dense harmonic solve".into(),
            estimate: n as f64,
            limit: DENSE_MAX_N as f64,
        });
    }
    let d = combine_distance(beta, &instance.distances)?;
    let order: Vec<usize> = instance
        .labeled
        .iter()
        .map(|&(i, _)| i)
        .chain(instance.unlabeled.iter().copied())
        .collect();
    let s2 = sigma * sigma;
    let w = DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            0.0
        } else {
            (-d.get(order[a], order[b]) / s2).exp()
        }
    });
    Ok(WeightedGraph {
        w,
        n_labeled: instance.labeled.len(),
        order,
    })
}

/// Pieces of the unlabeled block system `A f_U = rhs`.
pub fn harmonic_system(graph: &WeightedGraph, f_l: &[f64]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (n, nl) = (graph.n(), graph.n_labeled);
    if nl == 0 {
        return Err(Error::invalid("labeled", "need at least one labeled node"));
    }
    if f_l.len() != nl {
        return Err(Error::invalid(
            "f_L",
            format!("{} values for {nl} labeled nodes", f_l.len()),
        ));
    }
    let nu = n - nl;
    let w = &graph.w;
    let degree: Vec<f64> = (nl..n).map(|u| w.row(u).sum()).collect();
    let a = DMatrix::from_fn(nu, nu, |i, j| {
        if i == j {
            degree[i] - w[(nl + i, nl + j)]
        } else {
            -w[(nl + i, nl + j)]
        }
    });
    let rhs = DVector::from_fn(nu, |i, _| (0..nl).map(|l| w[(nl + i, l)] * f_l[l]).sum());
    Ok((a, rhs))
}

/// Harmonic values on the unlabeled nodes, by Cholesky factorization.
pub fn harmonic_solve(graph: &WeightedGraph, f_l: &[f64]) -> Result<Vec<f64>> {
    let (a, rhs) = harmonic_system(graph, f_l)?;
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Numerical("harmonic system is not positive definite (weights underflowed?)".into()))?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v.abs()), hi.max(v.abs())));
    let condition = (hi / lo).powi(2);
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::Numerical(format!(
            "harmonic system condition estimate {condition:e} exceeds {CONDITION_LIMIT:e}"
        )));
    }
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// Rounds harmonic values: label 1 iff `f >= 0.5`.
pub fn ssl_predict(f_u: &[f64]) -> Vec<u8> {
    f_u.iter().map(|&f| u8::from(f >= 0.5)).collect()
}

/// Predictions for the instance's unlabeled indices, in instance order.
pub fn ssl_predictions(instance: &SslInstance, sigma: f64, beta: &Simplex) -> Result<Vec<u8>> {
    let graph = build_rbf_graph(instance, sigma, beta)?;
    let f_l: Vec<f64> = instance.labeled.iter().map(|&(_, l)| f64::from(l)).collect();
    Ok(ssl_predict(&harmonic_solve(&graph, &f_l)?))
}

/// Fraction of unlabeled nodes predicted wrongly.
pub fn ssl_loss(instance: &SslInstance, sigma: f64, beta: &Simplex) -> Result<f64> {
    if instance.unlabeled.is_empty() {
        return Ok(0.0);
    }
    let pred = ssl_predictions(instance, sigma, beta)?;
    let wrong = pred
        .iter()
        .zip(&instance.eval_labels)
        .filter(|(p, t)| p != t)
        .count();
    Ok(wrong as f64 / instance.unlabeled.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_ssl, DistanceMatrix};

    fn graph(w: Vec<Vec<f64>>, n_labeled: usize) -> WeightedGraph {
        let n = w.len();
        WeightedGraph {
            w: DMatrix::from_fn(n, n, |i, j| w[i][j]),
            n_labeled,
            order: (0..n).collect(),
        }
    }

    #[test]
    fn rbf_weights() {
        let inst = SslInstance {
            labeled: vec![(0, 1)],
            unlabeled: vec![1, 2],
            distances: vec![DistanceMatrix::from_rows(&[vec![0.0, 0.0, 4.0], vec![0.0, 0.0, 1.0], vec![4.0, 1.0, 0.0]], 4.0).unwrap()],
            eval_labels: vec![1, 0],
            r: 4.0,
        };
        let g = build_rbf_graph(&inst, 2.0, &Simplex::uniform(1)).unwrap();
        assert_eq!(g.w[(0, 1)], 1.0);
        assert!((g.w[(0, 2)] - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(g.w[(0, 0)], 0.0);
        assert!(build_rbf_graph(&inst, 0.0, &Simplex::uniform(1)).is_err());
    }

    #[test]
    fn rbf_matches_scalar_loop() {
        let inst = gen_ssl(3, 2, 3, 2, 1.0).unwrap();
        let beta = Simplex::new(vec![0.25, 0.75]).unwrap();
        let g = build_rbf_graph(&inst, 0.7, &beta).unwrap();
        for a in 0..5 {
            for b in 0..5 {
                let (i, j) = (g.order[a], g.order[b]);
                let d = 0.25 * inst.distances[0].get(i, j) + 0.75 * inst.distances[1].get(i, j);
                let expect = if a == b { 0.0 } else { (-d / 0.49f64).exp() };
                assert!((g.w[(a, b)] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_unlabeled_node() {
        let g = graph(vec![vec![0.0, 0.3], vec![0.3, 0.0]], 1);
        assert!((harmonic_solve(&g, &[1.0]).unwrap()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_unlabeled_chain() {
        let g = graph(
            vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]],
            1,
        );
        let f = harmonic_solve(&g, &[1.0]).unwrap();
        assert!((f[0] - 1.0).abs() < 1e-12 && (f[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_labels_propagate() {
        let inst = gen_ssl(11, 4, 6, 1, 1.0).unwrap();
        let g = build_rbf_graph(&inst, 0.5, &Simplex::uniform(1)).unwrap();
        let f = harmonic_solve(&g, &[0.3; 4]).unwrap();
        assert!(f.iter().all(|v| (v - 0.3).abs() < 1e-12));
    }

    #[test]
    fn underflowed_weights_are_a_numerical_error() {
        let inst = gen_ssl(2, 2, 4, 1, 1.0).unwrap();
        let g = build_rbf_graph(&inst, 1e-4, &Simplex::uniform(1)).unwrap();
        match harmonic_solve(&g, &[0.0, 1.0]) {
            Err(Error::Numerical(_)) => {}
            other => panic!("expected numerical error, got {other:?}"),
        }
    }

    #[test]
    fn rounding_rule() {
        assert_eq!(ssl_predict(&[0.5, 0.4999, 0.1, 0.9]), vec![1, 0, 0, 1]);
    }

    #[test]
    fn loss_extremes() {
        let mut inst = gen_ssl(5, 4, 6, 1, 1.0).unwrap();
        let beta = Simplex::uniform(1);
        let pred = ssl_predictions(&inst, 0.5, &beta).unwrap();
        inst.eval_labels = pred.clone();
        assert_eq!(ssl_loss(&inst, 0.5, &beta).unwrap(), 0.0);
        inst.eval_labels = pred.iter().map(|p| 1 - p).collect();
        assert_eq!(ssl_loss(&inst, 0.5, &beta).unwrap(), 1.0);
    }

    #[test]
    fn separable_blobs_are_labeled_correctly() {
        // two blobs, intra-distance 0.1, inter-distance 1.0
        let n = 8;
        let blob = |i: usize| i % 2;
        let d = DistanceMatrix::from_fn(n, |i, j| if blob(i) == blob(j) { 0.1 } else { 1.0 });
        let inst = SslInstance {
            labeled: vec![(0, 0), (1, 1)],
            unlabeled: (2..n).collect(),
            distances: vec![d],
            eval_labels: (2..n).map(|i| blob(i) as u8).collect(),
            r: 1.0,
        };
        assert_eq!(ssl_loss(&inst, 0.3, &Simplex::uniform(1)).unwrap(), 0.0);
    }
}
