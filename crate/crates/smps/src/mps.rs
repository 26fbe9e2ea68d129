//! Stochastic matrix product states.
//!
//! A [`StochasticMps`] stores, for every site `k` and local symbol `i`, an
//! elementwise nonnegative matrix `B^k_i` of shape `D_k x D_{k+1}`. The
//! boundary vectors are always absorbed into the edge sites, so `D_1` and
//! `D_{N+1}` are both one and the weight of a configuration is the 1x1 matrix
//! product `B^1_{i_1} B^2_{i_2} … B^N_{i_N}`.
//!
//! Sites are addressed 0-based in the API. A cut `k` (with `1 <= k < N`)
//! separates the first `k` sites (block A) from the remaining `N - k`
//! (block B); the bond it crosses is the column index of site `k - 1`.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Result, SmpsError};
use crate::table::{config_count, ProbabilityTable, MAX_TABLE_ENTRIES};

/// Tolerance on the full contraction of an MPS flagged as normalized.
pub const MPS_NORMALIZATION_TOL: f64 = 1e-10;

/// Largest block (in configurations) tabulated by [`StochasticMps::factorize_at_cut`].
pub const MAX_BLOCK_ENTRIES: u128 = 1 << 22;

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMps {
    local_dim: usize,
    sites: Vec<Vec<Array2<f64>>>,
    normalized: bool,
}

impl StochasticMps {
    /// Validates shapes and nonnegativity. The result is not flagged
    /// normalized; see [`normalize`](Self::normalize) and
    /// [`mark_normalized`](Self::mark_normalized).
    pub fn new(local_dim: usize, sites: Vec<Vec<Array2<f64>>>) -> Result<Self> {
        if local_dim < 2 {
            return Err(SmpsError::Argument(format!(
                "local dimension must be at least 2, got {local_dim}"
            )));
        }
        if sites.is_empty() {
            return Err(SmpsError::Argument("an MPS needs at least one site".into()));
        }
        let mut left = 1;
        for (k, site) in sites.iter().enumerate() {
            if site.len() != local_dim {
                return Err(SmpsError::Structure(format!(
                    "site {k} has {} matrices, expected {local_dim}",
                    site.len()
                )));
            }
            let right = site[0].ncols();
            for (i, m) in site.iter().enumerate() {
                if m.nrows() != left || m.ncols() != right {
                    return Err(SmpsError::Structure(format!(
                        "site {k} symbol {i} has shape {}x{}, expected {left}x{right}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                if let Some(v) = m.iter().find(|v| !(**v >= 0.0)) {
                    return Err(SmpsError::Argument(format!(
                        "site {k} symbol {i} has entry {v}, entries must be nonnegative"
                    )));
                }
            }
            left = right;
        }
        if left != 1 {
            return Err(SmpsError::Structure(format!(
                "last site has {left} columns, boundary vectors must be absorbed"
            )));
        }
        Ok(Self {
            local_dim,
            sites,
            normalized: false,
        })
    }

    /// Builds an MPS from bulk site matrices and explicit boundary vectors
    /// `<L|` and `|R>`, absorbing them into the first and last site.
    pub fn with_boundaries(
        local_dim: usize,
        left: &[f64],
        mut bulk: Vec<Vec<Array2<f64>>>,
        right: &[f64],
    ) -> Result<Self> {
        if bulk.is_empty() {
            return Err(SmpsError::Argument("an MPS needs at least one site".into()));
        }
        if left.iter().chain(right).any(|v| !(*v >= 0.0)) {
            return Err(SmpsError::Argument(
                "boundary vectors must be nonnegative".into(),
            ));
        }
        let lv = Array2::from_shape_vec((1, left.len()), left.to_vec())
            .map_err(|e| SmpsError::Structure(e.to_string()))?;
        let rv = Array2::from_shape_vec((right.len(), 1), right.to_vec())
            .map_err(|e| SmpsError::Structure(e.to_string()))?;
        let n = bulk.len();
        for (k, site) in bulk.iter_mut().enumerate() {
            for m in site.iter_mut() {
                if k == 0 {
                    if m.nrows() != left.len() {
                        return Err(SmpsError::Structure("left boundary length mismatch".into()));
                    }
                    *m = lv.dot(m);
                }
                if k == n - 1 {
                    if m.ncols() != right.len() {
                        return Err(SmpsError::Structure(
                            "right boundary length mismatch".into(),
                        ));
                    }
                    *m = m.dot(&rv);
                }
            }
        }
        Self::new(local_dim, bulk)
    }

    /// Bond-dimension-one MPS of the product distribution `Π_k q_k(i_k)`.
    pub fn product(site_probs: &[Vec<f64>]) -> Result<Self> {
        let d = site_probs
            .first()
            .map(Vec::len)
            .ok_or_else(|| SmpsError::Argument("no sites given".into()))?;
        let sites = site_probs
            .iter()
            .map(|q| {
                if q.len() != d {
                    return Err(SmpsError::Structure(
                        "sites have differing local dimension".into(),
                    ));
                }
                Ok(q.iter().map(|&p| Array2::from_elem((1, 1), p)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(d, sites)?.normalize()
    }

    /// A random normalized sMPS with interior bond dimensions drawn from
    /// `1..=max_bond`. Roughly one entry in five is exactly zero.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        num_sites: usize,
        local_dim: usize,
        max_bond: usize,
    ) -> Self {
        assert!(num_sites >= 1 && local_dim >= 2 && max_bond >= 1);
        loop {
            let mut dims = vec![1; num_sites + 1];
            for d in dims.iter_mut().take(num_sites).skip(1) {
                *d = rng.random_range(1..=max_bond);
            }
            let sites = (0..num_sites)
                .map(|k| {
                    (0..local_dim)
                        .map(|_| {
                            Array2::from_shape_fn((dims[k], dims[k + 1]), |_| {
                                if rng.random_bool(0.2) {
                                    0.0
                                } else {
                                    rng.random::<f64>()
                                }
                            })
                        })
                        .collect()
                })
                .collect();
            let mps = Self::new(local_dim, sites).expect("shapes are consistent by construction");
            if let Ok(mps) = mps.normalize() {
                return mps;
            }
        }
    }

    /// Divides the first site by the full contraction and flags the result
    /// normalized.
    pub fn normalize(mut self) -> Result<Self> {
        let total = self.total_mass();
        if !(total > 0.0) || !total.is_finite() {
            return Err(SmpsError::Degenerate(format!("MPS has total mass {total}")));
        }
        self.sites[0].iter_mut().for_each(|m| *m /= total);
        self.normalized = true;
        Ok(self)
    }

    /// Flags the MPS normalized after checking that it contracts to one.
    pub fn mark_normalized(mut self) -> Result<Self> {
        let total = self.total_mass();
        if (total - 1.0).abs() > MPS_NORMALIZATION_TOL {
            return Err(SmpsError::Precondition(format!(
                "MPS contracts to {total}, not 1"
            )));
        }
        self.normalized = true;
        Ok(self)
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    /// Matrices of site `k`, one per local symbol.
    pub fn site(&self, k: usize) -> &[Array2<f64>] {
        &self.sites[k]
    }

    pub fn sites(&self) -> &[Vec<Array2<f64>>] {
        &self.sites
    }

    pub fn into_sites(self) -> Vec<Vec<Array2<f64>>> {
        self.sites
    }

    /// `[D_1, …, D_{N+1}]`, with both ends equal to one.
    pub fn bond_dims(&self) -> Vec<usize> {
        std::iter::once(1)
            .chain(self.sites.iter().map(|s| s[0].ncols()))
            .collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// `C^[k] = Σ_i B^k_i`.
    pub fn transfer_matrix(&self, k: usize) -> Array2<f64> {
        let site = &self.sites[k];
        site.iter().skip(1).fold(site[0].clone(), |acc, m| acc + m)
    }

    /// Left environments `l^(k) = C^[1] … C^[k]` for `k = 0..=N`, as vectors of
    /// length `D_{k+1}` (`l^(0) = (1)`).
    pub fn left_environments(&self) -> Vec<Array1<f64>> {
        let mut envs = Vec::with_capacity(self.num_sites() + 1);
        envs.push(Array1::ones(1));
        for k in 0..self.num_sites() {
            let next = envs[k].dot(&self.transfer_matrix(k));
            envs.push(next);
        }
        envs
    }

    /// Right environments `r^(k) = C^[k+1] … C^[N]` for `k = 0..=N`, as vectors
    /// of length `D_{k+1}` (`r^(N) = (1)`).
    pub fn right_environments(&self) -> Vec<Array1<f64>> {
        let n = self.num_sites();
        let mut envs = vec![Array1::ones(1); n + 1];
        for k in (0..n).rev() {
            envs[k] = self.transfer_matrix(k).dot(&envs[k + 1]);
        }
        envs
    }

    /// Sum of all configuration weights.
    pub fn total_mass(&self) -> f64 {
        self.left_environments().last().map(|v| v[0]).unwrap_or(0.0)
    }

    /// Weight of one configuration.
    pub fn evaluate(&self, config: &[usize]) -> f64 {
        assert_eq!(config.len(), self.num_sites());
        let mut v = Array1::ones(1);
        for (site, &s) in self.sites.iter().zip(config) {
            v = v.dot(&site[s]);
        }
        v[0]
    }

    /// One-site marginals `P(i_k = s)`, computed through environments.
    pub fn site_marginals(&self) -> Vec<Vec<f64>> {
        let left = self.left_environments();
        let right = self.right_environments();
        let total = left[self.num_sites()][0];
        (0..self.num_sites())
            .map(|k| {
                self.sites[k]
                    .iter()
                    .map(|m| left[k].dot(&m.dot(&right[k + 1])) / total)
                    .collect()
            })
            .collect()
    }

    /// Dense table of all `d^N` configuration weights.
    pub fn contract_to_table(&self) -> Result<ProbabilityTable> {
        let n = self.num_sites();
        let d = self.local_dim;
        config_count(d, n, MAX_TABLE_ENTRIES, "probability table")?;
        let weights = if n == 1 {
            self.sites[0].iter().map(|m| m[[0, 0]]).collect()
        } else {
            let f = self.factorize_unchecked(n / 2);
            let mut out = Vec::with_capacity(f.left_count * f.right_count);
            for a in 0..f.left_count {
                let u = f.left_vector(a);
                for b in 0..f.right_count {
                    out.push(dot(u, f.right_vector(b)));
                }
            }
            out
        };
        let table = ProbabilityTable::new(d, n, weights)?;
        let total = table.total();
        if (total - 1.0).abs() <= MPS_NORMALIZATION_TOL {
            return table.normalize();
        }
        Ok(table)
    }

    /// Splits the MPS at cut `k` into left-block vectors `u(x_A)` and
    /// right-block vectors `w(x_B)` with `p(x_A, x_B) = u(x_A) · w(x_B)`.
    pub fn factorize_at_cut(&self, k: usize) -> Result<BipartiteFactorization> {
        let n = self.num_sites();
        if k == 0 || k >= n {
            return Err(SmpsError::Argument(format!("cut {k} out of range 1..{n}")));
        }
        config_count(self.local_dim, k, MAX_BLOCK_ENTRIES, "left block")?;
        config_count(self.local_dim, n - k, MAX_BLOCK_ENTRIES, "right block")?;
        Ok(self.factorize_unchecked(k))
    }

    fn factorize_unchecked(&self, k: usize) -> BipartiteFactorization {
        let d = self.local_dim;
        let n = self.num_sites();
        let bond = self.sites[k - 1][0].ncols();

        // left block: grow prefixes site by site, new index = old * d + symbol
        let mut left = vec![1.0];
        let mut width = 1;
        for site in &self.sites[..k] {
            let next_width = site[0].ncols();
            let mut next = Vec::with_capacity(left.len() / width * d * next_width);
            for u in left.chunks_exact(width) {
                for m in site {
                    let row = Array1::from(u.to_vec()).dot(m);
                    next.extend(row.iter());
                }
            }
            left = next;
            width = next_width;
        }

        // right block: grow suffixes leftwards, new index = symbol * d^len + old
        let mut right = vec![1.0];
        let mut height = 1;
        for site in self.sites[k..].iter().rev() {
            let next_height = site[0].nrows();
            let count = right.len() / height;
            let mut next = Vec::with_capacity(count * d * next_height);
            for m in site {
                for w in right.chunks_exact(height) {
                    let col = m.dot(&Array1::from(w.to_vec()));
                    next.extend(col.iter());
                }
            }
            right = next;
            height = next_height;
        }

        BipartiteFactorization {
            cut: k,
            local_dim: d,
            bond,
            left_count: d.pow(k as u32),
            right_count: d.pow((n - k) as u32),
            left,
            right,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The joint distribution at one cut written as `p(x_A, x_B) = u(x_A) · w(x_B)`.
///
/// Block configurations use the same digit order as [`ProbabilityTable`], so
/// the full index of `(x_A, x_B)` is `x_A * d^{|B|} + x_B`.
#[derive(Debug, Clone)]
pub struct BipartiteFactorization {
    cut: usize,
    local_dim: usize,
    bond: usize,
    left_count: usize,
    right_count: usize,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl BipartiteFactorization {
    pub fn cut(&self) -> usize {
        self.cut
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn bond_dim(&self) -> usize {
        self.bond
    }

    /// Number of left-block configurations `d^k`.
    pub fn left_count(&self) -> usize {
        self.left_count
    }

    /// Number of right-block configurations `d^{N-k}`.
    pub fn right_count(&self) -> usize {
        self.right_count
    }

    pub fn left_vector(&self, x_a: usize) -> &[f64] {
        &self.left[x_a * self.bond..(x_a + 1) * self.bond]
    }

    pub fn right_vector(&self, x_b: usize) -> &[f64] {
        &self.right[x_b * self.bond..(x_b + 1) * self.bond]
    }

    pub fn joint(&self, x_a: usize, x_b: usize) -> f64 {
        dot(self.left_vector(x_a), self.right_vector(x_b))
    }

    /// `Σ_{x_B} w(x_B)`.
    pub fn right_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.bond];
        for w in self.right.chunks_exact(self.bond) {
            s.iter_mut().zip(w).for_each(|(a, b)| *a += b);
        }
        s
    }

    /// `Σ_{x_A} u(x_A)`.
    pub fn left_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.bond];
        for u in self.left.chunks_exact(self.bond) {
            s.iter_mut().zip(u).for_each(|(a, b)| *a += b);
        }
        s
    }

    /// Marginal of block A, `p_A(x_A) = u(x_A) · Σ w`.
    pub fn left_marginal(&self) -> Vec<f64> {
        let ws = self.right_sum();
        self.left
            .chunks_exact(self.bond)
            .map(|u| dot(u, &ws))
            .collect()
    }

    /// Marginal of block B, `p_B(x_B) = Σ u · w(x_B)`.
    pub fn right_marginal(&self) -> Vec<f64> {
        let us = self.left_sum();
        self.right
            .chunks_exact(self.bond)
            .map(|w| dot(&us, w))
            .collect()
    }

    /// `Σ_{x_A, x_B} u(x_A) · w(x_B)`.
    pub fn total(&self) -> f64 {
        dot(&self.left_sum(), &self.right_sum())
    }

    /// Visits every joint weight in row-major `(x_A, x_B)` order.
    pub fn for_each_joint(&self, mut f: impl FnMut(usize, usize, f64)) {
        for a in 0..self.left_count {
            let u = self.left_vector(a);
            for b in 0..self.right_count {
                f(a, b, dot(u, self.right_vector(b)));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn product_mps_contracts_to_product_table() {
        let q = vec![vec![0.3, 0.7], vec![0.5, 0.5], vec![0.9, 0.1]];
        let mps = StochasticMps::product(&q).unwrap();
        let table = mps.contract_to_table().unwrap();
        let expect = ProbabilityTable::product(&q).unwrap();
        assert!(crate::table::l1_distance(&table, &expect).unwrap() < 1e-15);
        assert!(table.is_normalized());
    }

    #[test]
    fn product_factorization_is_rank_one() {
        let q = vec![vec![0.3, 0.7], vec![0.5, 0.5], vec![0.9, 0.1]];
        let mps = StochasticMps::product(&q).unwrap();
        let f = mps.factorize_at_cut(1).unwrap();
        assert_eq!(f.bond_dim(), 1);
        for a in 0..2 {
            for b in 0..4 {
                let pa = q[0][a];
                let pb = q[1][b / 2] * q[2][b % 2];
                assert!((f.joint(a, b) - pa * pb).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn factorization_matches_dense_contraction_on_all_cuts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mps = StochasticMps::random(&mut rng, 6, 2, 4);
            let table = mps.contract_to_table().unwrap();
            for k in 1..6 {
                let f = mps.factorize_at_cut(k).unwrap();
                let rows = f.right_count();
                f.for_each_joint(|a, b, w| {
                    assert!((w - table.weights()[a * rows + b]).abs() <= 1e-12);
                });
                assert!((f.total() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dense_table_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mps = StochasticMps::random(&mut rng, 5, 3, 3);
        let table = mps.contract_to_table().unwrap();
        for idx in 0..table.weights().len() {
            let cfg = table.config_of(idx);
            assert!((mps.evaluate(&cfg) - table.weights()[idx]).abs() < 1e-14);
        }
    }

    #[test]
    fn boundary_vectors_are_absorbed() {
        let m0 = array![[1.0, 0.0], [0.5, 1.0]];
        let m1 = array![[0.0, 2.0], [1.0, 0.0]];
        let bulk = vec![vec![m0.clone(), m1.clone()], vec![m0, m1]];
        let mps = StochasticMps::with_boundaries(2, &[1.0, 2.0], bulk, &[1.0, 1.0]).unwrap();
        assert_eq!(mps.bond_dims(), vec![1, 2, 1]);
        // <L|m0 m1|R> = (2,2)·m1·(1,1)^T = (2,4)·(1,1) = 6
        assert!((mps.evaluate(&[0, 1]) - 6.0).abs() < 1e-15);
        assert!(!mps.is_normalized());
    }

    #[test]
    fn shape_mismatch_is_structural() {
        let sites = vec![
            vec![Array2::ones((1, 2)), Array2::ones((1, 2))],
            vec![Array2::ones((3, 1)), Array2::ones((3, 1))],
        ];
        assert!(matches!(
            StochasticMps::new(2, sites),
            Err(SmpsError::Structure(_))
        ));
    }

    #[test]
    fn negative_entry_rejected() {
        let sites = vec![vec![array![[0.5]], array![[-0.5]]]];
        assert!(StochasticMps::new(2, sites).is_err());
    }

    #[test]
    fn cut_out_of_range() {
        let mps = StochasticMps::product(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(
            mps.factorize_at_cut(0),
            Err(SmpsError::Argument(_))
        ));
        assert!(matches!(
            mps.factorize_at_cut(2),
            Err(SmpsError::Argument(_))
        ));
    }

    #[test]
    fn table_flag_follows_contraction_mass() {
        let sites = vec![vec![array![[1.5]], array![[0.5]]]];
        let mps = StochasticMps::new(2, sites).unwrap();
        assert!(!mps.contract_to_table().unwrap().is_normalized());
        assert!(mps.clone().mark_normalized().is_err());
        let mps = mps.normalize().unwrap();
        let table = mps.contract_to_table().unwrap();
        assert!(table.is_normalized());
        assert_eq!(table.weights(), &[0.75, 0.25]);
    }

    #[test]
    fn site_marginals_match_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mps = StochasticMps::random(&mut rng, 5, 2, 3);
        let table = mps.contract_to_table().unwrap();
        let marg = mps.site_marginals();
        for (k, site) in marg.iter().enumerate() {
            let m = table.marginal(&[k]).unwrap();
            assert!((m.weights()[1] - site[1]).abs() < 1e-12);
        }
    }
}
