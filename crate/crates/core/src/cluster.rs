//! Agglomerative hierarchical clustering on a dissimilarity matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Linkage {
    Single,
    Average,
}

/// One agglomeration step. Cluster ids follow the usual convention: leaves are
/// `0..p`, the cluster created by merge `k` has id `p + k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Merge {
    /// Child containing the lower leaf index.
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dendrogram {
    pub leaf_count: usize,
    pub merges: Vec<Merge>,
}

/// Agglomerates `d` with the given linkage.
///
/// Ties are broken towards the pair whose clusters have the lowest leaf
/// indices, so the result does not depend on iteration order details.
pub fn agglomerate(d: &DMatrix<f64>, linkage: Linkage) -> Result<Dendrogram> {
    let p = d.nrows();
    if p == 0 || d.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "dissimilarity must be square and non-empty, got {}x{}",
            d.nrows(),
            d.ncols()
        )));
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("dissimilarity has non-finite entries".into()));
    }

    // Slot k holds the cluster whose smallest leaf is k.
    let mut dist = d.clone();
    let mut active = vec![true; p];
    let mut ids: Vec<usize> = (0..p).collect();
    let mut sizes = vec![1usize; p];
    let mut merges = Vec::with_capacity(p.saturating_sub(1));

    for step in 0..p.saturating_sub(1) {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for a in (0..p).filter(|&a| active[a]) {
            for b in ((a + 1)..p).filter(|&b| active[b]) {
                if dist[(a, b)] < best.2 {
                    best = (a, b, dist[(a, b)]);
                }
            }
        }
        let (a, b, height) = best;
        let (na, nb) = (sizes[a] as f64, sizes[b] as f64);
        for k in (0..p).filter(|&k| active[k] && k != a && k != b) {
            let updated = match linkage {
                Linkage::Single => dist[(k, a)].min(dist[(k, b)]),
                Linkage::Average => (na * dist[(k, a)] + nb * dist[(k, b)]) / (na + nb),
            };
            dist[(k, a)] = updated;
            dist[(a, k)] = updated;
        }
        active[b] = false;
        sizes[a] += sizes[b];
        merges.push(Merge {
            left: ids[a],
            right: ids[b],
            height,
            size: sizes[a],
        });
        ids[a] = p + step;
    }

    Ok(Dendrogram {
        leaf_count: p,
        merges,
    })
}

impl Dendrogram {
    fn children(&self, id: usize) -> Option<(usize, usize)> {
        (id >= self.leaf_count).then(|| {
            let m = &self.merges[id - self.leaf_count];
            (m.left, m.right)
        })
    }

    /// Leaves under every cluster id (leaves and merges).
    fn members(&self) -> Vec<Vec<usize>> {
        let p = self.leaf_count;
        let mut members: Vec<Vec<usize>> = (0..p).map(|i| vec![i]).collect();
        for m in &self.merges {
            let mut joined = members[m.left].clone();
            joined.extend_from_slice(&members[m.right]);
            members.push(joined);
        }
        members
    }

    /// Cophenetic matrix: entry (i, j) is the height at which i and j first
    /// share a cluster, zero on the diagonal.
    pub fn cophenetic(&self) -> DMatrix<f64> {
        let p = self.leaf_count;
        let members = self.members();
        let mut c = DMatrix::zeros(p, p);
        for m in &self.merges {
            for &i in &members[m.left] {
                for &j in &members[m.right] {
                    c[(i, j)] = m.height;
                    c[(j, i)] = m.height;
                }
            }
        }
        c
    }

    /// Leaf order from recursively expanding clusters, smaller child first
    /// and then the child holding the lowest leaf index.
    pub fn leaf_order(&self) -> Vec<usize> {
        let p = self.leaf_count;
        if p == 1 {
            return vec![0];
        }
        let members = self.members();
        let size = |id: usize| members[id].len();
        let min_leaf = |id: usize| *members[id].iter().min().unwrap();
        let mut order = Vec::with_capacity(p);
        let mut stack = vec![p + self.merges.len() - 1];
        while let Some(id) = stack.pop() {
            match self.children(id) {
                None => order.push(id),
                Some((a, b)) => {
                    let (first, second) = if (size(a), min_leaf(a)) <= (size(b), min_leaf(b)) {
                        (a, b)
                    } else {
                        (b, a)
                    };
                    stack.push(second);
                    stack.push(first);
                }
            }
        }
        order
    }
}
