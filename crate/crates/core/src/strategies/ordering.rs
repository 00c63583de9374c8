use serde::{Deserialize, Serialize};

use crate::bounds::{self, SLACK};
use crate::error::{ArwError, Result};
use crate::lattice::{SiteSet, Topology};

/// Sites `x_1..x_k` in greedy order with the gaps `ℓ_j = d(x_j, x_{j+1})`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderedSet {
    pub sites: Vec<usize>,
    pub gaps: Vec<u64>,
}

impl OrderedSet {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

/// Starts at the lowest-index site and repeatedly appends the remaining site
/// closest to the last one, ties going to the lowest index. Each gap is
/// then `ℓ_j = min_{i>j} d(x_j, x_i)`.
pub fn greedy_order(set: &SiteSet, topo: &Topology) -> Result<OrderedSet> {
    if set.volume() != topo.volume() {
        return Err(ArwError::param("site set belongs to a different lattice"));
    }
    let mut remaining: Vec<usize> = set.members().to_vec();
    if remaining.is_empty() {
        return Err(ArwError::param("cannot order an empty set"));
    }
    let mut sites = vec![remaining.remove(0)];
    let mut gaps = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let last = *sites.last().unwrap();
        // `remaining` stays sorted, so the first minimum is the lowest index.
        let (pos, gap) = remaining
            .iter()
            .enumerate()
            .map(|(i, &y)| (i, topo.distance_unchecked(last, y)))
            .min_by_key(|&(_, dist)| dist)
            .unwrap();
        sites.push(remaining.remove(pos));
        gaps.push(gap);
    }
    Ok(OrderedSet { sites, gaps })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductBound {
    /// `Σ ln ℓ_j`.
    pub log_product: f64,
    /// `n^d ln κ_d`.
    pub log_bound: f64,
    pub satisfied: bool,
}

/// Checks `∏ ℓ_j ≤ κ_d^{n^d}` in the log domain.
pub fn product_bound_check(ordered: &OrderedSet, topo: &Topology) -> Result<ProductBound> {
    let log_product: f64 = ordered.gaps.iter().map(|&l| (l as f64).ln()).sum();
    let log_bound = topo.volume() as f64 * bounds::kappa(topo.d())?.log;
    Ok(ProductBound {
        log_product,
        log_bound,
        satisfied: log_product <= log_bound + SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let t = Topology::torus(6, 1).unwrap();
        let o = greedy_order(&SiteSet::from_sites(6, [0, 2, 3]), &t).unwrap();
        assert_eq!(o.sites, vec![0, 2, 3]);
        assert_eq!(o.gaps, vec![2, 1]);

        let t = Topology::torus(4, 1).unwrap();
        let o = greedy_order(&SiteSet::from_sites(4, [0, 2]), &t).unwrap();
        assert_eq!(o.gaps, vec![2]);

        let o = greedy_order(&t.all_sites(), &t).unwrap();
        assert_eq!(o.gaps, vec![1, 1, 1]);
        let p = product_bound_check(&o, &t).unwrap();
        assert_eq!(p.log_product, 0.0);
        assert!(p.satisfied);

        let o = greedy_order(&SiteSet::from_sites(4, [3]), &t).unwrap();
        assert!(o.gaps.is_empty());
        assert!(greedy_order(&SiteSet::empty(4), &t).is_err());
    }
}
