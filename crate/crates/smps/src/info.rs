//! Entropies, mutual information and entropy-cost bounds. All quantities are
//! in bits, with `0 · log 0 = 0`.

use crate::canonical::cut_spectrum;
use crate::error::{Result, SmpsError};
use crate::mps::{BipartiteFactorization, StochasticMps};
use crate::table::{config_count, ProbabilityTable};

/// Tolerance on the total of a probability vector passed to
/// [`shannon_entropy`].
pub const ENTROPY_SUM_TOL: f64 = 1e-9;

/// Candidates are compared densely up to this many configurations.
const DENSE_CONSISTENCY_LIMIT: u128 = 1 << 16;

/// Tolerance for candidate representations encoding the same distribution.
pub const CONSISTENCY_TOL: f64 = 1e-8;

pub(crate) fn entropy_bits(p: &[f64]) -> f64 {
    // rounding can push a point mass slightly above one
    let h = -p
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>();
    h.max(0.0)
}

/// `-Σ p log2 p` of a probability vector.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    if let Some(x) = p.iter().find(|x| !(**x >= 0.0)) {
        return Err(SmpsError::Argument(format!("probability {x} is negative")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > ENTROPY_SUM_TOL {
        return Err(SmpsError::Argument(format!("probabilities sum to {total}")));
    }
    Ok(entropy_bits(p))
}

/// A joint distribution over two blocks that can be scanned cell by cell.
pub trait BipartiteJoint {
    /// `(p_A, p_B)`.
    fn marginals(&self) -> (Vec<f64>, Vec<f64>);

    /// Calls `f(x_A, x_B, p(x_A, x_B))` for every cell.
    fn for_each_cell(&self, f: &mut dyn FnMut(usize, usize, f64));
}

/// A dense table viewed as a bipartite joint at a cut.
#[derive(Debug, Clone, Copy)]
pub struct TableCut<'a> {
    table: &'a ProbabilityTable,
    rows: usize,
    cols: usize,
}

impl<'a> TableCut<'a> {
    pub fn new(table: &'a ProbabilityTable, cut: usize) -> Result<Self> {
        if !table.is_normalized() {
            return Err(SmpsError::Precondition(
                "joint table is not normalized".into(),
            ));
        }
        let (rows, cols) = table.bipartite_view(cut)?;
        Ok(Self { table, rows, cols })
    }
}

impl BipartiteJoint for TableCut<'_> {
    fn marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let w = self.table.weights();
        let mut pa = vec![0.0; self.rows];
        let mut pb = vec![0.0; self.cols];
        for (a, row) in w.chunks_exact(self.cols).enumerate() {
            for (b, &x) in row.iter().enumerate() {
                pa[a] += x;
                pb[b] += x;
            }
        }
        (pa, pb)
    }

    fn for_each_cell(&self, f: &mut dyn FnMut(usize, usize, f64)) {
        for (a, row) in self.table.weights().chunks_exact(self.cols).enumerate() {
            for (b, &x) in row.iter().enumerate() {
                f(a, b, x);
            }
        }
    }
}

impl BipartiteJoint for BipartiteFactorization {
    fn marginals(&self) -> (Vec<f64>, Vec<f64>) {
        (self.left_marginal(), self.right_marginal())
    }

    fn for_each_cell(&self, f: &mut dyn FnMut(usize, usize, f64)) {
        self.for_each_joint(f)
    }
}

/// `I(A:B) = Σ p_AB log2(p_AB / (p_A p_B))`.
///
/// Evaluated cell by cell, which stays accurate when the distribution is
/// close to a product. Rounding can leave a result of order `-1e-16`; such
/// values are reported as zero.
pub fn mutual_information<J: BipartiteJoint + ?Sized>(joint: &J) -> f64 {
    let (pa, pb) = joint.marginals();
    let mut acc = 0.0;
    joint.for_each_cell(&mut |a, b, p| {
        if p > 0.0 {
            acc += p * (p / (pa[a] * pb[b])).log2();
        }
    });
    acc.max(0.0)
}

/// Mutual information of a dense table at `cut`.
pub fn table_mutual_information(table: &ProbabilityTable, cut: usize) -> Result<f64> {
    Ok(mutual_information(&TableCut::new(table, cut)?))
}

/// Mutual information of a normalized sMPS at `cut`, through the bipartite
/// factorization (no dense table is built).
pub fn mps_mutual_information(mps: &StochasticMps, cut: usize) -> Result<f64> {
    if !mps.is_normalized() {
        return Err(SmpsError::Precondition("sMPS is not normalized".into()));
    }
    Ok(mutual_information(&mps.factorize_at_cut(cut)?))
}

/// Both sides of `‖p_AB − p_A p_B‖₁² ≤ 2 ln 2 · I(A:B)`.
pub fn pinsker_gap<J: BipartiteJoint + ?Sized>(joint: &J) -> (f64, f64) {
    let (pa, pb) = joint.marginals();
    let mut l1 = 0.0;
    let mut mi = 0.0;
    joint.for_each_cell(&mut |a, b, p| {
        let q = pa[a] * pb[b];
        l1 += (p - q).abs();
        if p > 0.0 {
            mi += p * (p / q).log2();
        }
    });
    let mi: f64 = mi.max(0.0);
    (l1 * l1, 2.0 * std::f64::consts::LN_2 * mi)
}

/// Lower and upper bounds on the entropy cost at one cut.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyCostBracket {
    pub cut: usize,
    /// `I(A:B)` in bits.
    pub lower_bound: f64,
    /// Smallest spectrum entropy among the candidate representations.
    pub upper_bound: f64,
    /// Label of the candidate attaining `upper_bound`.
    pub decomposition_label: String,
}

/// Brackets the entropy cost of `mps` at `cut`: the mutual information from
/// below and the best candidate's spectrum entropy from above.
///
/// Every candidate must encode the same distribution as `mps`. Small systems
/// are compared densely; larger ones through their one-site marginals.
pub fn entropy_cost_bracket(
    mps: &StochasticMps,
    cut: usize,
    candidates: &[(&str, &StochasticMps)],
) -> Result<EntropyCostBracket> {
    if candidates.is_empty() {
        return Err(SmpsError::Argument(
            "no candidate decompositions given".into(),
        ));
    }
    let lower_bound = mps_mutual_information(mps, cut)?;
    let dense = config_count(
        mps.local_dim(),
        mps.num_sites(),
        DENSE_CONSISTENCY_LIMIT,
        "",
    )
    .is_ok();
    let reference_table = if dense {
        Some(mps.contract_to_table()?)
    } else {
        None
    };
    let reference_marg = mps.site_marginals();

    let mut best: Option<(f64, &str)> = None;
    for &(label, cand) in candidates {
        if cand.num_sites() != mps.num_sites() || cand.local_dim() != mps.local_dim() {
            return Err(SmpsError::Inconsistent(format!(
                "candidate {label} has a different shape"
            )));
        }
        let mismatch = match &reference_table {
            Some(t) => crate::table::l1_distance(t, &cand.contract_to_table()?)?,
            None => cand
                .site_marginals()
                .iter()
                .flatten()
                .zip(reference_marg.iter().flatten())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        };
        if mismatch > CONSISTENCY_TOL {
            return Err(SmpsError::Inconsistent(format!(
                "candidate {label} differs from the target by {mismatch:e}"
            )));
        }
        let s = cut_spectrum(cand, cut)?.entropy();
        if best.is_none_or(|(b, _)| s < b) {
            best = Some((s, label));
        }
    }
    let (upper_bound, label) = best.expect("candidates is nonempty");
    Ok(EntropyCostBracket {
        cut,
        lower_bound,
        upper_bound,
        decomposition_label: label.to_string(),
    })
}
