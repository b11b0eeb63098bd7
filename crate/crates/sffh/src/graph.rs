//! Area adjacency graph, the intrinsic CAR precision structure, and exact
//! Gaussian sampling under the sum-to-zero constraint.
//!
//! The precision skeleton D_w - W of a connected graph has rank n-1 with
//! null space spanned by the ones vector, so the spatial effects are only
//! identified once sum(u) = 0 is enforced. Sampling under the constraint
//! uses conditioning by kriging: draw unconstrained, then apply a rank-one
//! correction, which is exact and costs one factorization.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Undirected adjacency over n areas. Immutable once built.
#[derive(Debug, Clone)]
pub struct AreaGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    w_plus: Vec<usize>,
}

impl AreaGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Unordered edges as (i, j) with i < j, sorted, no duplicates.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbor counts w_i+.
    pub fn w_plus(&self) -> &[usize] {
        &self.w_plus
    }

    /// Symmetric 0/1 adjacency matrix with zero diagonal.
    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            w[(i, j)] = 1.0;
            w[(j, i)] = 1.0;
        }
        w
    }

    /// D_w - W. Row sums are exactly zero.
    pub fn precision_skeleton(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            m[(i, i)] = self.w_plus[i] as f64;
        }
        for &(i, j) in &self.edges {
            m[(i, j)] = -1.0;
            m[(j, i)] = -1.0;
        }
        m
    }
}

/// Build and validate an adjacency graph.
///
/// Rejects self-loops, out-of-range indices, isolated areas, and
/// disconnected graphs (the error lists the components).
pub fn build_graph(n: usize, edge_list: &[(usize, usize)]) -> Result<AreaGraph> {
    if n < 2 {
        return Err(Error::validation(format!(
            "graph needs at least 2 areas, got {n}"
        )));
    }
    let mut set = BTreeSet::new();
    for &(a, b) in edge_list {
        if a >= n || b >= n {
            return Err(Error::validation(format!(
                "edge ({a}, {b}) out of range for n={n}"
            )));
        }
        if a == b {
            return Err(Error::validation(format!("self-loop at area {a}")));
        }
        set.insert((a.min(b), a.max(b)));
    }
    let edges: Vec<(usize, usize)> = set.into_iter().collect();
    let mut w_plus = vec![0usize; n];
    for &(i, j) in &edges {
        w_plus[i] += 1;
        w_plus[j] += 1;
    }
    if let Some(i) = w_plus.iter().position(|&w| w == 0) {
        return Err(Error::validation(format!(
            "area {i} has no neighbors; every area must have at least one"
        )));
    }

    // BFS connectivity
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in &edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut component = vec![usize::MAX; n];
    let mut n_comp = 0;
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let mut queue = vec![start];
        component[start] = n_comp;
        while let Some(v) = queue.pop() {
            for &w in &adj[v] {
                if component[w] == usize::MAX {
                    component[w] = n_comp;
                    queue.push(w);
                }
            }
        }
        n_comp += 1;
    }
    if n_comp > 1 {
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n_comp];
        for (i, &c) in component.iter().enumerate() {
            groups[c].push(i);
        }
        let desc: Vec<String> = groups.iter().map(|g| format!("{g:?}")).collect();
        return Err(Error::validation(format!(
            "graph is disconnected into {n_comp} components: {}",
            desc.join(", ")
        )));
    }

    Ok(AreaGraph { n, edges, w_plus })
}

/// Load `adjacency.csv` (`area_a,area_b`, one undirected edge per row) and
/// resolve the ids against the survey area ordering.
pub fn load_adjacency_csv(path: impl AsRef<Path>, area_ids: &[String]) -> Result<AreaGraph> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "area_a" || &headers[1] != "area_b" {
        return Err(Error::validation(format!(
            "{}: expected header area_a,area_b",
            path.display()
        )));
    }
    let index_of = |id: &str, row: usize| -> Result<usize> {
        area_ids.iter().position(|a| a == id).ok_or_else(|| {
            Error::validation(format!(
                "{} row {row}: unknown area '{id}' not present in the survey file",
                path.display()
            ))
        })
    };
    let mut edges = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let row = idx + 2;
        let a = index_of(record[0].trim(), row)?;
        let b = index_of(record[1].trim(), row)?;
        edges.push((a, b));
    }
    build_graph(area_ids.len(), &edges)
}

/// The ICAR quadratic form u'(D_w - W)u = sum over edges of (u_i - u_j)^2.
pub fn icar_quadform(graph: &AreaGraph, u: &DVector<f64>) -> f64 {
    assert_eq!(u.len(), graph.n(), "dimension mismatch in icar_quadform");
    graph
        .edges
        .iter()
        .map(|&(i, j)| {
            let d = u[i] - u[j];
            d * d
        })
        .sum()
}

/// Exact draw from N(mu, Omega) restricted to the hyperplane sum(u) = 0.
///
/// The conditional is given in canonical form: `precision` = Omega^-1
/// (must be symmetric positive definite) and `mean_term` = h with
/// mu = Omega h. Draws x ~ N(mu, Omega) unconstrained, then returns
/// u = x - Omega 1 (1' Omega 1)^-1 (1' x).
pub fn sample_constrained_gmrf(
    precision: &DMatrix<f64>,
    mean_term: &DVector<f64>,
    rng: &mut (impl Rng + ?Sized),
) -> Result<DVector<f64>> {
    let n = precision.nrows();
    if precision.ncols() != n || mean_term.len() != n {
        return Err(Error::validation(format!(
            "precision is {}x{}, mean term has length {}",
            n,
            precision.ncols(),
            mean_term.len()
        )));
    }
    let chol = Cholesky::new(precision.clone()).ok_or_else(|| {
        Error::numerical(
            "conditional precision is not positive definite (check variance parameters)"
                .to_string(),
        )
    })?;

    let mu = chol.solve(mean_term);
    let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    // x = mu + L^-T z has covariance (L L')^-1
    let lt = chol.l().transpose();
    let w = lt
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::numerical("triangular solve failed".to_string()))?;
    let x = mu + w;

    let omega_one = chol.solve(&DVector::from_element(n, 1.0));
    let denom: f64 = omega_one.sum();
    if !crate::stats::is_positive(denom) {
        return Err(Error::numerical(
            "1' Omega 1 is not positive; conditional covariance is corrupt".to_string(),
        ));
    }
    let shift = x.sum() / denom;
    Ok(x - omega_one * shift)
}
