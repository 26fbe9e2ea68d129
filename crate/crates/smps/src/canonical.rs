//! Cut spectra, channel decompositions, the natural form and certified
//! truncation.
//!
//! For a normalized sMPS the left and right environments at cut `k`,
//! `l^(k) = C^[1] … C^[k]` and `r^(k) = C^[k+1] … C^[N]`, define the bond
//! distribution `p_λ = l^(k)_λ r^(k)_λ`. Every joint weight then splits as
//! `p(x_A, x_B) = Σ_λ P_A(x_A | λ) p_λ P_B(x_B | λ)` with
//! `P_A(x_A | λ) = u(x_A)_λ / l^(k)_λ` and `P_B(x_B | λ) = w(x_B)_λ / r^(k)_λ`.
//!
//! The natural form rescales every site matrix so that the bond
//! distributions appear explicitly between sites:
//!
//! ```text
//! A^[k]_i[λ, μ] = B^k_i[λ, μ] / (r^(k-1)_λ · l^(k)_μ)
//! P^[k]         = diag(l^(k) ∘ r^(k))     (sorted, zero entries pruned)
//! ```
//!
//! In this gauge `P^[k-1] C^[k]` is column-stochastic and `C^[k] P^[k]` is
//! row-stochastic, where `C^[k] = Σ_i A^[k]_i`.

use ndarray::{Array1, Array2};

use crate::error::{Result, SmpsError};
use crate::mps::StochasticMps;
use crate::table::ProbabilityTable;

/// Spectrum entries at or below this are treated as exact zeros in checks.
pub const ZERO_PROB_TOL: f64 = 1e-12;

/// `C^[k] = Σ_i B^k_i` for site `k` (0-based).
pub fn transfer_matrix(mps: &StochasticMps, k: usize) -> Result<Array2<f64>> {
    if k >= mps.num_sites() {
        return Err(SmpsError::Argument(format!(
            "site {k} out of range for {} sites",
            mps.num_sites()
        )));
    }
    Ok(mps.transfer_matrix(k))
}

/// The bond distribution `{p_λ}` at one cut, sorted in decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct CutSpectrum {
    pub cut: usize,
    /// All `D` bond probabilities including zeros, largest first.
    pub probs: Vec<f64>,
    /// Bond dimension at the cut before any pruning.
    pub source_dim: usize,
}

impl CutSpectrum {
    /// Number of entries above [`ZERO_PROB_TOL`].
    pub fn support(&self) -> usize {
        self.probs.iter().filter(|&&p| p > ZERO_PROB_TOL).count()
    }

    /// Shannon entropy of the spectrum in bits.
    pub fn entropy(&self) -> f64 {
        crate::info::entropy_bits(&self.probs)
    }

    /// `Σ_{λ > cap} p_λ`.
    pub fn tail(&self, cap: usize) -> f64 {
        self.probs.iter().skip(cap).sum()
    }
}

fn check_cut(mps: &StochasticMps, k: usize) -> Result<()> {
    let n = mps.num_sites();
    if k == 0 || k >= n {
        return Err(SmpsError::Argument(format!("cut {k} out of range 1..{n}")));
    }
    Ok(())
}

fn require_normalized(mps: &StochasticMps) -> Result<()> {
    if !mps.is_normalized() {
        return Err(SmpsError::Precondition(
            "bond spectra are only defined for a normalized sMPS".into(),
        ));
    }
    Ok(())
}

/// Indices `0..len` ordered by decreasing value, ties kept in index order.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

fn spectrum_from_envs(cut: usize, l: &Array1<f64>, r: &Array1<f64>) -> CutSpectrum {
    let raw: Vec<f64> = l.iter().zip(r).map(|(a, b)| a * b).collect();
    let probs = descending_order(&raw).into_iter().map(|i| raw[i]).collect();
    CutSpectrum {
        cut,
        probs,
        source_dim: raw.len(),
    }
}

/// `p_λ = l^(k)_λ r^(k)_λ` at cut `k`, sorted in decreasing order.
pub fn cut_spectrum(mps: &StochasticMps, k: usize) -> Result<CutSpectrum> {
    require_normalized(mps)?;
    check_cut(mps, k)?;
    let l = mps.left_environments();
    let r = mps.right_environments();
    Ok(spectrum_from_envs(k, &l[k], &r[k]))
}

/// Spectra at every cut `1..N`.
pub fn all_cut_spectra(mps: &StochasticMps) -> Result<Vec<CutSpectrum>> {
    require_normalized(mps)?;
    let l = mps.left_environments();
    let r = mps.right_environments();
    Ok((1..mps.num_sites())
        .map(|k| spectrum_from_envs(k, &l[k], &r[k]))
        .collect())
}

/// Conditional block distributions `P_A(x_A | λ)`, `P_B(x_B | λ)` at one cut,
/// with zero-mass bond indices pruned and the rest sorted by decreasing `p_λ`.
#[derive(Debug, Clone)]
pub struct ChannelPair {
    pub spectrum: CutSpectrum,
    /// Retained bond probabilities, aligned with `left` and `right`.
    pub weights: Vec<f64>,
    /// `left[λ][x_A] = P_A(x_A | λ)`.
    pub left: Vec<Vec<f64>>,
    /// `right[λ][x_B] = P_B(x_B | λ)`.
    pub right: Vec<Vec<f64>>,
}

impl ChannelPair {
    /// `Σ_λ P_A(x_A | λ) p_λ P_B(x_B | λ)` as a row-major `(x_A, x_B)` table.
    pub fn reconstruct(&self) -> Vec<f64> {
        let rows = self.left.first().map_or(0, Vec::len);
        let cols = self.right.first().map_or(0, Vec::len);
        let mut out = vec![0.0; rows * cols];
        for ((pa, pb), &p) in self.left.iter().zip(&self.right).zip(&self.weights) {
            for (a, &x) in pa.iter().enumerate() {
                let row = &mut out[a * cols..(a + 1) * cols];
                row.iter_mut().zip(pb).for_each(|(o, &y)| *o += x * p * y);
            }
        }
        out
    }
}

/// Channel decomposition of the joint distribution at cut `k`.
pub fn channel_decomposition(mps: &StochasticMps, k: usize) -> Result<ChannelPair> {
    require_normalized(mps)?;
    let f = mps.factorize_at_cut(k)?;
    let l = &mps.left_environments()[k];
    let r = &mps.right_environments()[k];
    let spectrum = spectrum_from_envs(k, l, r);
    let raw: Vec<f64> = l.iter().zip(r).map(|(a, b)| a * b).collect();
    let kept: Vec<usize> = descending_order(&raw)
        .into_iter()
        .filter(|&i| raw[i] > 0.0)
        .collect();
    if kept.is_empty() {
        return Err(SmpsError::Degenerate(format!(
            "all bond mass at cut {k} is zero"
        )));
    }
    let left = kept
        .iter()
        .map(|&lam| {
            (0..f.left_count())
                .map(|a| f.left_vector(a)[lam] / l[lam])
                .collect()
        })
        .collect();
    let right = kept
        .iter()
        .map(|&lam| {
            (0..f.right_count())
                .map(|b| f.right_vector(b)[lam] / r[lam])
                .collect()
        })
        .collect();
    Ok(ChannelPair {
        spectrum,
        weights: kept.iter().map(|&i| raw[i]).collect(),
        left,
        right,
    })
}

/// An sMPS in the natural gauge: site matrices `A^[k]` interleaved with
/// diagonal bond distributions `P^[k]`.
#[derive(Debug, Clone)]
pub struct NaturalForm {
    local_dim: usize,
    sites: Vec<Vec<Array2<f64>>>,
    bonds: Vec<Vec<f64>>,
}

/// Brings a normalized sMPS into the natural form with a single left-to-right
/// sweep over precomputed environments. Bond indices that carry no mass are
/// dropped, so bond dimensions can shrink.
pub fn to_natural_form(mps: &StochasticMps) -> Result<NaturalForm> {
    require_normalized(mps)?;
    let n = mps.num_sites();
    let l = mps.left_environments();
    let r = mps.right_environments();

    // kept[k] lists surviving indices of bond k (k = 0..=N), in sorted order
    let mut kept: Vec<Vec<usize>> = Vec::with_capacity(n + 1);
    let mut bonds = Vec::with_capacity(n.saturating_sub(1));
    kept.push(vec![0]);
    for k in 1..n {
        let raw: Vec<f64> = l[k].iter().zip(&r[k]).map(|(a, b)| a * b).collect();
        let order: Vec<usize> = descending_order(&raw)
            .into_iter()
            .filter(|&i| raw[i] > 0.0)
            .collect();
        if order.is_empty() {
            return Err(SmpsError::Degenerate(format!(
                "all bond mass at cut {k} is zero"
            )));
        }
        bonds.push(order.iter().map(|&i| raw[i]).collect());
        kept.push(order);
    }
    kept.push(vec![0]);

    let sites = (0..n)
        .map(|k| {
            let rows = &kept[k];
            let cols = &kept[k + 1];
            mps.site(k)
                .iter()
                .map(|b| {
                    Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| {
                        let (lam, mu) = (rows[i], cols[j]);
                        let v = b[[lam, mu]] / (r[k][lam] * l[k + 1][mu]);
                        assert!(v >= 0.0, "natural form produced a negative entry");
                        v
                    })
                })
                .collect()
        })
        .collect();

    Ok(NaturalForm {
        local_dim: mps.local_dim(),
        sites,
        bonds,
    })
}

impl NaturalForm {
    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    /// `A^[k]_i` for site `k` (0-based).
    pub fn site(&self, k: usize) -> &[Array2<f64>] {
        &self.sites[k]
    }

    /// Diagonal of `P^[k]` for cut `k` in `1..N`, largest first.
    pub fn bond(&self, k: usize) -> &[f64] {
        &self.bonds[k - 1]
    }

    pub fn bonds(&self) -> &[Vec<f64>] {
        &self.bonds
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bonds.iter().map(Vec::len).max().unwrap_or(1)
    }

    /// `C^[k] = Σ_i A^[k]_i`.
    pub fn transfer_matrix(&self, k: usize) -> Array2<f64> {
        let site = &self.sites[k];
        site.iter().skip(1).fold(site[0].clone(), |acc, m| acc + m)
    }

    /// Largest deviation from one among the column sums of `P^[k-1] C^[k]`
    /// over all sites (with `P^[0] = 1`).
    pub fn column_stochastic_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.num_sites() {
            let c = self.transfer_matrix(k);
            let p: Vec<f64> = if k == 0 {
                vec![1.0]
            } else {
                self.bonds[k - 1].clone()
            };
            for col in c.columns() {
                let s: f64 = col.iter().zip(&p).map(|(x, w)| x * w).sum();
                worst = worst.max((s - 1.0).abs());
            }
        }
        worst
    }

    /// Largest deviation from one among the row sums of `C^[k] P^[k]` (with
    /// `P^[N] = 1`).
    pub fn row_stochastic_defect(&self) -> f64 {
        let n = self.num_sites();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let c = self.transfer_matrix(k);
            let p: Vec<f64> = if k + 1 == n {
                vec![1.0]
            } else {
                self.bonds[k].clone()
            };
            for row in c.rows() {
                let s: f64 = row.iter().zip(&p).map(|(x, w)| x * w).sum();
                worst = worst.max((s - 1.0).abs());
            }
        }
        worst
    }

    /// Absorbs each `P^[k]` into the site on its left, giving back an sMPS.
    pub fn to_mps(&self) -> Result<StochasticMps> {
        self.absorb(usize::MAX)?.mark_normalized()
    }

    /// Sites with `P^[k]` truncated to its `cap` largest entries absorbed to
    /// the left. Not normalized.
    fn absorb(&self, cap: usize) -> Result<StochasticMps> {
        let n = self.num_sites();
        let keep = |k: usize| -> usize {
            if k == 0 || k == n {
                1
            } else {
                self.bonds[k - 1].len().min(cap)
            }
        };
        let sites = (0..n)
            .map(|k| {
                let (rows, cols) = (keep(k), keep(k + 1));
                self.sites[k]
                    .iter()
                    .map(|a| {
                        Array2::from_shape_fn((rows, cols), |(i, j)| {
                            let w = if k + 1 == n { 1.0 } else { self.bonds[k][j] };
                            a[[i, j]] * w
                        })
                    })
                    .collect()
            })
            .collect();
        StochasticMps::new(self.local_dim, sites)
    }

    /// Dense reconstruction `A^[1] P^[1] A^[2] … P^[N-1] A^[N]`.
    pub fn reconstruct(&self) -> Result<ProbabilityTable> {
        self.absorb(usize::MAX)?.contract_to_table()
    }
}

/// Result of capping every bond of a natural form.
#[derive(Debug, Clone)]
pub struct Truncation {
    pub mps: StochasticMps,
    /// `2 Σ_k ε_k(D)`, an upper bound on the L1 error.
    pub err_bound: f64,
    /// `ε_k(D) = Σ_{λ > D} p^[k]_λ` for `k = 1..N`.
    pub tails: Vec<f64>,
}

/// Drops all bond probabilities past the `cap` largest at every cut and
/// renormalizes. The L1 distance between the original and the truncated
/// distribution is at most `2 Σ_k ε_k(cap)`.
pub fn truncate(nf: &NaturalForm, cap: usize) -> Result<Truncation> {
    if cap == 0 {
        return Err(SmpsError::Argument("bond cap must be at least 1".into()));
    }
    let tails: Vec<f64> = nf.bonds.iter().map(|p| p.iter().skip(cap).sum()).collect();
    let err_bound = 2.0 * tails.iter().sum::<f64>();
    let mps = nf.absorb(cap)?.normalize()?;
    Ok(Truncation {
        mps,
        err_bound,
        tails,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::l1_distance;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn product3() -> StochasticMps {
        StochasticMps::product(&[vec![0.3, 0.7], vec![0.5, 0.5], vec![0.9, 0.1]]).unwrap()
    }

    #[test]
    fn transfer_matrix_of_product_is_one() {
        let mps = product3();
        for k in 0..3 {
            let c = transfer_matrix(&mps, k).unwrap();
            assert_eq!(c.shape(), &[1, 1]);
        }
        // first site carries the normalization 1/total = 1
        assert!((transfer_matrix(&mps, 1).unwrap()[[0, 0]] - 1.0).abs() < 1e-15);
        assert!(transfer_matrix(&mps, 3).is_err());
    }

    #[test]
    fn transfer_matrix_is_entrywise_sum() {
        let b0 = array![[0.1, 0.2], [0.3, 0.4]];
        let b1 = array![[0.5, 0.0], [0.7, 0.8]];
        let sites = vec![
            vec![array![[1.0, 0.5]], array![[0.2, 0.1]]],
            vec![b0.clone(), b1.clone()],
            vec![array![[1.0], [0.0]], array![[0.5], [1.0]]],
        ];
        let mps = StochasticMps::new(2, sites).unwrap();
        let c = transfer_matrix(&mps, 1).unwrap();
        assert_eq!(c, &b0 + &b1);
    }

    #[test]
    fn product_spectrum_is_point_mass() {
        let s = cut_spectrum(&product3(), 1).unwrap();
        assert_eq!(s.probs, vec![1.0]);
        assert_eq!(s.source_dim, 1);
    }

    #[test]
    fn unnormalized_spectrum_is_rejected() {
        let sites = vec![
            vec![array![[1.5]], array![[0.5]]],
            vec![array![[1.0]], array![[1.0]]],
        ];
        let mps = StochasticMps::new(2, sites).unwrap();
        assert!(matches!(
            cut_spectrum(&mps, 1),
            Err(SmpsError::Precondition(_))
        ));
        assert!(matches!(
            to_natural_form(&mps),
            Err(SmpsError::Precondition(_))
        ));
    }

    #[test]
    fn spectra_sum_to_one_and_are_sorted() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let mps = StochasticMps::random(&mut rng, 5, 2, 4);
            for s in all_cut_spectra(&mps).unwrap() {
                assert!((s.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                assert!(s.probs.windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }

    #[test]
    fn product_channels_are_marginals() {
        let mps = product3();
        let ch = channel_decomposition(&mps, 1).unwrap();
        assert_eq!(ch.weights.len(), 1);
        assert!((ch.left[0][0] - 0.3).abs() < 1e-15);
        assert!((ch.right[0][0] - 0.45).abs() < 1e-15);
    }

    #[test]
    fn channels_are_conditional_distributions_and_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let mps = StochasticMps::random(&mut rng, 6, 2, 4);
            let table = mps.contract_to_table().unwrap();
            for k in 1..6 {
                let ch = channel_decomposition(&mps, k).unwrap();
                for cond in ch.left.iter().chain(&ch.right) {
                    assert!((cond.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                }
                let rec = ch.reconstruct();
                let err: f64 = rec
                    .iter()
                    .zip(table.weights())
                    .map(|(a, b)| (a - b).abs())
                    .sum();
                assert!(err < 1e-10, "cut {k}: {err}");
            }
        }
    }

    #[test]
    fn natural_form_of_product_is_trivial() {
        let nf = to_natural_form(&product3()).unwrap();
        for k in 1..3 {
            assert_eq!(nf.bond(k), &[1.0]);
        }
        assert!(nf.column_stochastic_defect() < 1e-15);
    }

    #[test]
    fn natural_form_invariants_on_random_mps() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mps = StochasticMps::random(&mut rng, 5, 2, 3);
            let table = mps.contract_to_table().unwrap();
            let nf = to_natural_form(&mps).unwrap();
            let rec = nf.reconstruct().unwrap();
            assert!(l1_distance(&table, &rec).unwrap() <= 1e-10);
            assert!(nf.column_stochastic_defect() <= 1e-10);
            assert!(nf.row_stochastic_defect() <= 1e-10);
            for p in nf.bonds() {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                assert!(p.iter().all(|&x| x > 0.0));
            }
        }
    }

    #[test]
    fn spectra_are_gauge_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..30 {
            let mps = StochasticMps::random(&mut rng, 6, 2, 4);
            let nf = to_natural_form(&mps).unwrap();
            let back = nf.to_mps().unwrap();
            for k in 1..6 {
                let a = cut_spectrum(&mps, k).unwrap();
                let b = cut_spectrum(&back, k).unwrap();
                let nonzero = |s: &CutSpectrum| -> Vec<f64> {
                    s.probs.iter().copied().filter(|&p| p > 0.0).collect()
                };
                let (a, b) = (nonzero(&a), nonzero(&b));
                assert_eq!(a.len(), b.len());
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() < 1e-10);
                }
                for (x, y) in b.iter().zip(nf.bond(k)) {
                    assert!((x - y).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn truncation_at_full_dimension_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mps = StochasticMps::random(&mut rng, 6, 2, 4);
        let nf = to_natural_form(&mps).unwrap();
        let t = truncate(&nf, nf.max_bond_dim()).unwrap();
        assert_eq!(t.err_bound, 0.0);
        let d = l1_distance(
            &mps.contract_to_table().unwrap(),
            &t.mps.contract_to_table().unwrap(),
        );
        assert!(d.unwrap() < 1e-12);
        assert!(truncate(&nf, 0).is_err());
    }

    #[test]
    fn truncation_error_is_within_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let mps = StochasticMps::random(&mut rng, 6, 2, 4);
            let table = mps.contract_to_table().unwrap();
            let nf = to_natural_form(&mps).unwrap();
            let t = truncate(&nf, 2).unwrap();
            assert!(t.mps.max_bond_dim() <= 2);
            let err = l1_distance(&table, &t.mps.contract_to_table().unwrap()).unwrap();
            assert!(err <= t.err_bound + 1e-12, "{err} > {}", t.err_bound);
        }
    }
}
