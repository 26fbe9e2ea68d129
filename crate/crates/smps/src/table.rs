//! Dense probability tables over `d^N` configurations.
//!
//! Configurations are indexed with site 1 as the most significant digit in
//! base `d`, so for `d = 2, N = 3` the index of `(i_1, i_2, i_3)` is
//! `4 i_1 + 2 i_2 + i_3`.

use crate::error::{Result, SmpsError};

/// Tolerance on the total mass of a table flagged as normalized.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Largest table (in entries) the library will materialize.
pub const MAX_TABLE_ENTRIES: u128 = 1 << 26;

/// A nonnegative weight table over all configurations of `N` sites with
/// local dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    local_dim: usize,
    num_sites: usize,
    weights: Vec<f64>,
    normalized: bool,
}

/// Number of configurations `d^n`, or a capacity error past `limit`.
pub(crate) fn config_count(d: usize, n: usize, limit: u128, what: &'static str) -> Result<usize> {
    let requested = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if requested > limit {
        return Err(SmpsError::Capacity {
            what,
            requested,
            limit,
        });
    }
    Ok(requested as usize)
}

impl ProbabilityTable {
    /// Wraps raw weights. The table is flagged normalized iff the weights sum
    /// to one within [`NORMALIZATION_TOL`].
    pub fn new(local_dim: usize, num_sites: usize, weights: Vec<f64>) -> Result<Self> {
        if local_dim < 2 {
            return Err(SmpsError::Argument(format!(
                "local dimension must be at least 2, got {local_dim}"
            )));
        }
        if num_sites == 0 {
            return Err(SmpsError::Argument(
                "a table needs at least one site".into(),
            ));
        }
        let len = config_count(local_dim, num_sites, MAX_TABLE_ENTRIES, "probability table")?;
        if weights.len() != len {
            return Err(SmpsError::Structure(format!(
                "expected {len} weights for d={local_dim}, N={num_sites}, got {}",
                weights.len()
            )));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0)) {
            return Err(SmpsError::Argument(format!(
                "weight {i} is {w}, weights must be nonnegative"
            )));
        }
        let total: f64 = weights.iter().sum();
        Ok(Self {
            local_dim,
            num_sites,
            weights,
            normalized: (total - 1.0).abs() <= NORMALIZATION_TOL,
        })
    }

    /// Builds a table and rescales it to unit mass.
    pub fn from_unnormalized(
        local_dim: usize,
        num_sites: usize,
        weights: Vec<f64>,
    ) -> Result<Self> {
        Self::new(local_dim, num_sites, weights)?.normalize()
    }

    /// The product distribution `q_1 ⊗ q_2 ⊗ …` of per-site distributions.
    pub fn product(site_probs: &[Vec<f64>]) -> Result<Self> {
        let d = site_probs
            .first()
            .map(Vec::len)
            .ok_or_else(|| SmpsError::Argument("no sites given".into()))?;
        if site_probs.iter().any(|q| q.len() != d) {
            return Err(SmpsError::Structure(
                "sites have differing local dimension".into(),
            ));
        }
        let mut weights = vec![1.0];
        for q in site_probs {
            weights = weights
                .iter()
                .flat_map(|w| q.iter().map(move |qi| w * qi))
                .collect();
        }
        Self::new(d, site_probs.len(), weights)
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Rescales to unit mass. Fails on an all-zero table.
    pub fn normalize(mut self) -> Result<Self> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(SmpsError::Degenerate("table has zero total weight".into()));
        }
        self.weights.iter_mut().for_each(|w| *w /= total);
        self.normalized = true;
        Ok(self)
    }

    /// Weight of a configuration given as per-site symbols.
    pub fn get(&self, config: &[usize]) -> f64 {
        self.weights[self.index_of(config)]
    }

    /// Index of a configuration, site 1 most significant.
    pub fn index_of(&self, config: &[usize]) -> usize {
        assert_eq!(config.len(), self.num_sites);
        config.iter().fold(0, |acc, &s| {
            assert!(s < self.local_dim);
            acc * self.local_dim + s
        })
    }

    /// Per-site symbols of a configuration index.
    pub fn config_of(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.num_sites];
        for slot in out.iter_mut().rev() {
            *slot = index % self.local_dim;
            index /= self.local_dim;
        }
        out
    }

    /// Marginal over the given sites (0-based), kept in increasing site order.
    pub fn marginal(&self, sites: &[usize]) -> Result<ProbabilityTable> {
        if !self.normalized {
            return Err(SmpsError::Precondition(
                "marginal of an unnormalized table".into(),
            ));
        }
        if sites.is_empty() {
            return Err(SmpsError::Argument(
                "marginal over an empty set of sites".into(),
            ));
        }
        let mut keep = sites.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if let Some(&s) = keep.iter().find(|&&s| s >= self.num_sites) {
            return Err(SmpsError::Argument(format!(
                "site {s} out of range for {} sites",
                self.num_sites
            )));
        }
        let d = self.local_dim;
        // place value of each kept site inside the marginal index
        let strides: Vec<(usize, usize)> = keep
            .iter()
            .enumerate()
            .map(|(pos, &site)| {
                let src = d.pow((self.num_sites - 1 - site) as u32);
                let dst = d.pow((keep.len() - 1 - pos) as u32);
                (src, dst)
            })
            .collect();
        let mut out = vec![0.0; d.pow(keep.len() as u32)];
        for (idx, &w) in self.weights.iter().enumerate() {
            let target: usize = strides
                .iter()
                .map(|&(src, dst)| (idx / src) % d * dst)
                .sum();
            out[target] += w;
        }
        let mut table = ProbabilityTable::new(d, keep.len(), out)?;
        table.normalized = true;
        Ok(table)
    }

    /// Joint weights as a `|A| x |B|` row-major block matrix for the cut after
    /// `cut` sites.
    pub fn bipartite_view(&self, cut: usize) -> Result<(usize, usize)> {
        if cut == 0 || cut >= self.num_sites {
            return Err(SmpsError::Argument(format!(
                "cut {cut} out of range 1..{}",
                self.num_sites
            )));
        }
        let rows = self.local_dim.pow(cut as u32);
        Ok((rows, self.weights.len() / rows))
    }
}

/// `Σ |a - b|` over all configurations.
pub fn l1_distance(a: &ProbabilityTable, b: &ProbabilityTable) -> Result<f64> {
    if a.local_dim != b.local_dim || a.num_sites != b.num_sites {
        return Err(SmpsError::Structure(format!(
            "shape mismatch: (d={}, N={}) vs (d={}, N={})",
            a.local_dim, a.num_sites, b.local_dim, b.num_sites
        )));
    }
    Ok(a.weights
        .iter()
        .zip(&b.weights)
        .map(|(x, y)| (x - y).abs())
        .sum())
}
