//! Brute-force ground truth for the ASEP: the master-equation generator on
//! all `2^N` configurations and its stationary distribution.
//!
//! The generator uses the column convention `dp/dt = Q p`, so `Q[to, from]`
//! holds the rate of `from → to` and every column sums to zero.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SmpsError};
use crate::info::table_mutual_information;
use crate::models::AsepParams;
use crate::table::ProbabilityTable;

/// Largest chain the generator is built for.
pub const MAX_ORACLE_SITES: usize = 14;

/// Chains up to this length are solved with a dense LU factorization.
pub const DENSE_SOLVE_SITES: usize = 10;

/// Required `‖Q p‖_∞` of a returned steady state.
pub const RESIDUAL_TOL: f64 = 1e-11;

const MAX_ITERATIONS: usize = 5_000_000;

#[derive(Debug, Clone)]
pub struct MarkovGenerator {
    num_sites: usize,
    /// Off-diagonal `(to, from, rate)` triplets.
    transitions: Vec<(usize, usize, f64)>,
    /// Total exit rate of every state; `Q[s, s] = -exit[s]`.
    exit: Vec<f64>,
}

impl MarkovGenerator {
    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn num_states(&self) -> usize {
        self.exit.len()
    }

    pub fn transitions(&self) -> &[(usize, usize, f64)] {
        &self.transitions
    }

    /// All entries of `Q` as `(row, col, value)` triplets, diagonal included.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = self.transitions.clone();
        out.extend(self.exit.iter().enumerate().map(|(s, &e)| (s, s, -e)));
        out
    }

    /// `Q p`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = p.iter().zip(&self.exit).map(|(x, e)| -x * e).collect();
        for &(to, from, rate) in &self.transitions {
            out[to] += rate * p[from];
        }
        out
    }

    /// Column sums of `Q`; all zero up to rounding.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums: Vec<f64> = self.exit.iter().map(|e| -e).collect();
        for &(_, from, rate) in &self.transitions {
            sums[from] += rate;
        }
        sums
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.num_states();
        let mut q = DMatrix::zeros(n, n);
        for (r, c, v) in self.triplets() {
            q[(r, c)] += v;
        }
        q
    }
}

/// Generator of the open ASEP: hops `10 → 01` at rate 1, injection into an
/// empty first site at rate `α`, extraction from an occupied last site at
/// rate `β`. Configurations are indexed with site 1 most significant.
pub fn asep_generator(params: AsepParams) -> Result<MarkovGenerator> {
    let n = params.num_sites;
    if n > MAX_ORACLE_SITES {
        return Err(SmpsError::Capacity {
            what: "master-equation generator",
            requested: 1u128 << n,
            limit: 1u128 << MAX_ORACLE_SITES,
        });
    }
    let states = 1usize << n;
    let first = 1usize << (n - 1);
    let mut transitions = Vec::new();
    let mut exit = vec![0.0; states];
    for (s, out_rate) in exit.iter_mut().enumerate() {
        let mut push = |to: usize, rate: f64| {
            transitions.push((to, s, rate));
            *out_rate += rate;
        };
        if s & first == 0 {
            push(s | first, params.alpha);
        }
        if s & 1 == 1 {
            push(s & !1, params.beta);
        }
        // site k sits on bit n-1-k; a particle on bit b hops to bit b-1
        for b in 1..n {
            if (s >> b) & 1 == 1 && (s >> (b - 1)) & 1 == 0 {
                push(s ^ (0b11 << (b - 1)), 1.0);
            }
        }
    }
    Ok(MarkovGenerator {
        num_sites: n,
        transitions,
        exit,
    })
}

fn residual(gen: &MarkovGenerator, p: &[f64]) -> f64 {
    gen.apply(p).iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Stationary distribution `Q p = 0`, `p ≥ 0`, `Σ p = 1`.
///
/// Up to [`DENSE_SOLVE_SITES`] sites the last balance equation is replaced by
/// the normalization and the system is solved by LU. Larger chains use
/// power iteration on the uniformized chain `I + Q/Λ`.
pub fn steady_state(gen: &MarkovGenerator) -> Result<ProbabilityTable> {
    let mut p = if gen.num_sites <= DENSE_SOLVE_SITES {
        dense_null_vector(gen)?
    } else {
        uniformized_power(gen)?
    };
    // clip rounding-level negatives before the table checks signs
    p.iter_mut().for_each(|x| *x = x.max(0.0));
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    let res = residual(gen, &p);
    if res > RESIDUAL_TOL {
        return Err(SmpsError::Numerical {
            message: format!("steady state for N = {} did not converge", gen.num_sites),
            residual: res,
        });
    }
    ProbabilityTable::new(2, gen.num_sites, p)?.normalize()
}

fn dense_null_vector(gen: &MarkovGenerator) -> Result<Vec<f64>> {
    let n = gen.num_states();
    let mut q = gen.to_dense();
    for c in 0..n {
        q[(n - 1, c)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let sol = q.lu().solve(&rhs).ok_or_else(|| SmpsError::Numerical {
        message: "singular balance system".into(),
        residual: f64::INFINITY,
    })?;
    Ok(sol.iter().copied().collect())
}

fn uniformized_power(gen: &MarkovGenerator) -> Result<Vec<f64>> {
    let n = gen.num_states();
    // P = I + Q / Λ with Λ above every exit rate has self-loops everywhere,
    // hence is aperiodic and the iteration converges to the stationary law
    let lambda = 1.05 * gen.exit.iter().fold(0.0, |m: f64, &e| m.max(e));
    let mut p = vec![1.0 / n as f64; n];
    let mut res = f64::INFINITY;
    for it in 0..MAX_ITERATIONS {
        let qp = gen.apply(&p);
        if it % 64 == 0 {
            res = qp.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
            if res <= RESIDUAL_TOL / 100.0 {
                return Ok(p);
            }
        }
        p.iter_mut().zip(&qp).for_each(|(x, d)| *x += d / lambda);
    }
    Err(SmpsError::Numerical {
        message: format!("power iteration did not converge in {MAX_ITERATIONS} steps"),
        residual: res,
    })
}

/// Steady-state table of the ASEP computed from the master equation.
pub fn asep_steady_state(params: AsepParams) -> Result<ProbabilityTable> {
    steady_state(&asep_generator(params)?)
}

/// Exact block mutual information of the ASEP steady state at `cut`.
pub fn exact_mutual_information(params: AsepParams, cut: usize) -> Result<f64> {
    table_mutual_information(&asep_steady_state(params)?, cut)
}
