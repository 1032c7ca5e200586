//! Edge-indexed bipartite factor graph and Gaussian message storage.
//!
//! The graph couples RRH check nodes to user variable nodes through the
//! retained channel links. Messages live on directed edges and are stored
//! per edge (not per dense (n,k) pair), which is what makes each iteration
//! linear in the number of edges. Edges are kept in a canonical user-major
//! order so downstream operator matrices are reproducible.

use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::SparseChannel;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("factor graph has no edges")]
    Empty,
    #[error("duplicate edge (rrh {rrh}, user {user})")]
    DuplicateEdge { rrh: usize, user: usize },
    #[error("edge (rrh {rrh}, user {user}) out of range for {num_rrhs} RRHs x {num_users} users")]
    IndexOutOfRange {
        rrh: usize,
        user: usize,
        num_rrhs: usize,
        num_users: usize,
    },
    #[error("edge (rrh {rrh}, user {user}) carries a zero coefficient")]
    ZeroCoefficient { rrh: usize, user: usize },
}

/// One retained link with its channel coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub rrh: usize,
    pub user: usize,
    pub coeff: Complex64,
}

/// Immutable bipartite structure shared by every message-passing variant.
#[derive(Debug, Clone)]
pub struct FactorGraph {
    edges: Vec<Edge>,
    user_edges: Vec<Vec<usize>>,
    rrh_edges: Vec<Vec<usize>>,
    num_rrhs: usize,
    num_users: usize,
}

impl FactorGraph {
    pub fn from_sparse(sparse: &SparseChannel) -> Result<Self, GraphError> {
        Self::from_edge_list(
            sparse.num_rrhs,
            sparse.num_users,
            sparse.edges.iter().copied(),
        )
    }

    /// Builds the graph from raw `(rrh, user, coefficient)` triples; the edge
    /// order is canonicalized to user-major `(user, rrh)`.
    pub fn from_edge_list(
        num_rrhs: usize,
        num_users: usize,
        list: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Result<Self, GraphError> {
        let mut edges: Vec<Edge> = list
            .into_iter()
            .map(|(rrh, user, coeff)| Edge { rrh, user, coeff })
            .collect();
        if edges.is_empty() {
            return Err(GraphError::Empty);
        }
        for e in &edges {
            if e.rrh >= num_rrhs || e.user >= num_users {
                return Err(GraphError::IndexOutOfRange {
                    rrh: e.rrh,
                    user: e.user,
                    num_rrhs,
                    num_users,
                });
            }
            if e.coeff == Complex64::new(0.0, 0.0) {
                return Err(GraphError::ZeroCoefficient {
                    rrh: e.rrh,
                    user: e.user,
                });
            }
        }
        edges.sort_by_key(|e| (e.user, e.rrh));
        for pair in edges.windows(2) {
            if pair[0].user == pair[1].user && pair[0].rrh == pair[1].rrh {
                return Err(GraphError::DuplicateEdge {
                    rrh: pair[0].rrh,
                    user: pair[0].user,
                });
            }
        }
        let mut user_edges = vec![Vec::new(); num_users];
        let mut rrh_edges = vec![Vec::new(); num_rrhs];
        for (i, e) in edges.iter().enumerate() {
            user_edges[e.user].push(i);
            rrh_edges[e.rrh].push(i);
        }
        Ok(FactorGraph {
            edges,
            user_edges,
            rrh_edges,
            num_rrhs,
            num_users,
        })
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_rrhs(&self) -> usize {
        self.num_rrhs
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge ids incident to user `k`, sorted by RRH index.
    pub fn user_edges(&self, k: usize) -> &[usize] {
        &self.user_edges[k]
    }

    /// Edge ids incident to RRH `n`, sorted by user index.
    pub fn rrh_edges(&self, n: usize) -> &[usize] {
        &self.rrh_edges[n]
    }

    pub fn edge_index(&self, rrh: usize, user: usize) -> Option<usize> {
        let list = self.user_edges.get(user)?;
        list.binary_search_by_key(&rrh, |&e| self.edges[e].rrh)
            .ok()
            .map(|pos| list[pos])
    }
}

/// Per-directed-edge Gaussian messages for both directions.
///
/// Check-to-variable slots are overwritten before their first read, so their
/// initial contents are placeholders; variable-to-check messages start at the
/// unit prior (mean 0, variance 1).
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    pub rrh_to_user_mean: Vec<Complex64>,
    pub rrh_to_user_var: Vec<f64>,
    pub user_to_rrh_mean: Vec<Complex64>,
    pub user_to_rrh_var: Vec<f64>,
}

impl MessageState {
    pub fn init(graph: &FactorGraph) -> Self {
        let e = graph.num_edges();
        MessageState {
            rrh_to_user_mean: vec![Complex64::new(0.0, 0.0); e],
            rrh_to_user_var: vec![1.0; e],
            user_to_rrh_mean: vec![Complex64::new(0.0, 0.0); e],
            user_to_rrh_var: vec![1.0; e],
        }
    }

    /// Number of stored message slots: one mean and one variance per
    /// direction per edge.
    pub fn slot_count(&self) -> usize {
        4 * self.rrh_to_user_mean.len()
    }
}
