//! User-centric clusters and the bipartite UE-RU association.

use crate::pathloss::{LsfcMatrix, SnrCalibration};

/// Bipartite association between UEs and RUs.
///
/// `serving[k]` is the cluster `C_k` (sorted RU indices), `served[l]` is
/// `U_l` (sorted UE indices). Edges carry a dense id, numbered UE by UE.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterGraph {
    num_rus: usize,
    num_ues: usize,
    serving: Vec<Vec<usize>>,
    served: Vec<Vec<usize>>,
    edge_id: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

const NO_EDGE: usize = usize::MAX;

impl ClusterGraph {
    /// Builds the graph from per-UE serving sets.
    pub fn from_serving_sets(num_rus: usize, mut serving: Vec<Vec<usize>>) -> Self {
        let num_ues = serving.len();
        let mut served = vec![Vec::new(); num_rus];
        let mut edge_id = vec![NO_EDGE; num_rus * num_ues];
        let mut edges = Vec::new();
        for (k, c) in serving.iter_mut().enumerate() {
            c.sort_unstable();
            c.dedup();
            for &l in c.iter() {
                assert!(l < num_rus, "RU index {l} out of range");
                served[l].push(k);
                edge_id[l * num_ues + k] = edges.len();
                edges.push((l, k));
            }
        }
        ClusterGraph { num_rus, num_ues, serving, served, edge_id, edges }
    }

    pub fn num_rus(&self) -> usize {
        self.num_rus
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn serving(&self, k: usize) -> &[usize] {
        &self.serving[k]
    }

    pub fn served(&self, l: usize) -> &[usize] {
        &self.served[l]
    }

    #[inline]
    pub fn is_assoc(&self, l: usize, k: usize) -> bool {
        self.edge_id[l * self.num_ues + k] != NO_EDGE
    }

    #[inline]
    pub fn edge(&self, l: usize, k: usize) -> Option<usize> {
        let e = self.edge_id[l * self.num_ues + k];
        (e != NO_EDGE).then_some(e)
    }

    /// Edges as `(l, k)` in id order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_served(&self, k: usize) -> bool {
        !self.serving[k].is_empty()
    }

    pub fn unserved_count(&self) -> usize {
        self.serving.iter().filter(|c| c.is_empty()).count()
    }

    /// Mean `|C_k|` over all UEs, unserved ones included.
    pub fn mean_cluster_size(&self) -> f64 {
        self.num_edges() as f64 / self.num_ues as f64
    }

    /// Copy without the edges for which `remove(l, k)` holds.
    pub fn without(&self, mut remove: impl FnMut(usize, usize) -> bool) -> ClusterGraph {
        let serving = self
            .serving
            .iter()
            .enumerate()
            .map(|(k, c)| c.iter().copied().filter(|&l| !remove(l, k)).collect())
            .collect();
        ClusterGraph::from_serving_sets(self.num_rus, serving)
    }

    /// Checks that the three views of the association agree.
    pub fn is_consistent(&self) -> bool {
        let mut count = 0;
        for l in 0..self.num_rus {
            for k in 0..self.num_ues {
                let a = self.is_assoc(l, k);
                if a != self.serving[k].contains(&l) || a != self.served[l].contains(&k) {
                    return false;
                }
                count += a as usize;
            }
        }
        count == self.edges.len()
    }
}

/// Each UE keeps up to `c_max` RUs with the largest LSFC among those at or
/// above `eta / (M SNR)`. Ties go to the lower RU index.
pub fn form_clusters(lsfc: &LsfcMatrix, snr: &SnrCalibration, eta: f64, antennas: usize, c_max: usize) -> ClusterGraph {
    let threshold = snr.threshold(eta, antennas);
    let serving = (0..lsfc.num_ues())
        .map(|k| {
            let mut cand: Vec<usize> = (0..lsfc.num_rus()).filter(|&l| lsfc.get(l, k) >= threshold).collect();
            cand.sort_by(|&a, &b| lsfc.get(b, k).total_cmp(&lsfc.get(a, k)).then(a.cmp(&b)));
            cand.truncate(c_max);
            cand
        })
        .collect();
    ClusterGraph::from_serving_sets(lsfc.num_rus(), serving)
}
