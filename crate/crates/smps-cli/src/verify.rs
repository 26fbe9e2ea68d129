//! Cross-checks of the library against brute force and the closed forms.

use std::io::{self, Write};

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use smps::canonical::{cut_spectrum, to_natural_form, truncate};
use smps::info::{mps_mutual_information, pinsker_gap, shannon_entropy};
use smps::models::{
    asep_candidates, asep_mps, asep_representation, asep_representation_in,
    ising_entropy_cost_exact, ising_mps, AsepParams, IsingParams, Regime,
};
use smps::oracle::asep_steady_state;
use smps::{l1_distance, StochasticMps};

/// One verified inequality `measured <= bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub bound: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.measured <= self.bound
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Builds the ASEP steady state checked against the master equation.
    pub asep: fn(AsepParams) -> StochasticMps,
    /// Number of random sMPS in the property corpus.
    pub corpus_size: usize,
    pub seed: u64,
    /// Longest chain compared with the master equation.
    pub max_oracle_sites: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            asep: asep_mps,
            corpus_size: 200,
            seed: 7,
            max_oracle_sites: 6,
        }
    }
}

const RATES: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

fn rate_grid() -> Vec<(f64, f64)> {
    RATES
        .iter()
        .flat_map(|&a| RATES.iter().map(move |&b| (a, b)))
        .collect()
}

fn params(a: f64, b: f64, n: usize) -> AsepParams {
    AsepParams::new(a, b, n).expect("grid rates lie in (0, 1]")
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::NEG_INFINITY, f64::max)
}

/// Random sMPS with `2 <= N <= 6`, `d = 2` and bond dimensions up to 4.
pub fn random_corpus(size: usize, seed: u64) -> Vec<StochasticMps> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|_| {
            let n = rng.random_range(2..=6);
            StochasticMps::random(&mut rng, n, 2, 4)
        })
        .collect()
}

fn oracle_equivalence(opts: &VerifyOptions) -> Result<f64> {
    let cases: Vec<(f64, f64, usize)> = rate_grid()
        .into_iter()
        .flat_map(|(a, b)| (1..=opts.max_oracle_sites).map(move |n| (a, b, n)))
        .collect();
    let errs = cases
        .par_iter()
        .map(|&(a, b, n)| {
            let p = params(a, b, n);
            let exact = asep_steady_state(p)?;
            let table = (opts.asep)(p).contract_to_table()?;
            Ok(l1_distance(&table, &exact)? / exact.total())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(max_of(errs.into_iter()))
}

fn asep_algebra() -> f64 {
    max_of(rate_grid().into_iter().flat_map(|(a, b)| {
        let p = params(a, b, 4);
        smps::models::applicable_regimes(&p)
            .into_iter()
            .map(move |r| {
                let rep = asep_representation_in(p, r).expect("regime is applicable");
                rep.corner_identity_defect()
                    + rep.eigenvector_defect()
                    + (-rep.min_entry()).max(0.0)
            })
    }))
}

fn mi_below_entropy(corpus: &[StochasticMps]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for mps in corpus {
        for k in 1..mps.num_sites() {
            let gap = mps_mutual_information(mps, k)? - cut_spectrum(mps, k)?.entropy();
            worst = worst.max(gap);
        }
    }
    Ok(worst)
}

fn truncation_certificate(corpus: &[StochasticMps]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for mps in corpus {
        let table = mps.contract_to_table()?;
        let nf = to_natural_form(mps)?;
        for cap in 1..=nf.max_bond_dim().max(1) {
            let t = truncate(&nf, cap)?;
            let err = l1_distance(&table, &t.mps.contract_to_table()?)?;
            worst = worst.max(err - t.err_bound);
        }
    }
    Ok(worst)
}

fn pinsker(corpus: &[StochasticMps], asep: fn(AsepParams) -> StochasticMps) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    let asep_cases: Vec<StochasticMps> = rate_grid()
        .into_iter()
        .map(|(a, b)| asep(params(a, b, 6)))
        .collect();
    for mps in corpus.iter().chain(&asep_cases) {
        for k in 1..mps.num_sites() {
            let (lhs, rhs) = pinsker_gap(&mps.factorize_at_cut(k)?);
            worst = worst.max(lhs - rhs);
        }
    }
    Ok(worst)
}

fn natural_form(corpus: &[StochasticMps]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for mps in corpus {
        let nf = to_natural_form(mps)?;
        let rec = l1_distance(&mps.contract_to_table()?, &nf.reconstruct()?)?;
        worst = worst
            .max(nf.column_stochastic_defect())
            .max(nf.row_stochastic_defect())
            .max(rec);
    }
    Ok(worst)
}

/// Mutual information and entropy-cost bound on `α + β = 1` at `N = 20`,
/// evaluated on the full-dimensional representation.
fn mean_field_line() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 1..=9 {
        let a = i as f64 / 10.0;
        let p = params(a, 1.0 - a, 20);
        let embedded = asep_representation_in(p, Regime::III)?.to_mps();
        let mi = mps_mutual_information(&embedded, 10)?;
        let mut ub = f64::INFINITY;
        for (_, m) in asep_candidates(p) {
            ub = ub.min(cut_spectrum(&m, 10)?.entropy());
        }
        worst = worst.max(mi).max(ub);
    }
    Ok(worst)
}

fn ising_closed_form() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..=20 {
        let beta = i as f64 * 0.25;
        let nf = to_natural_form(&ising_mps(IsingParams::new(beta, 2)?)?)?;
        let s = shannon_entropy(nf.bond(1))?;
        worst = worst.max((s - ising_entropy_cost_exact(beta)).abs());
    }
    Ok(worst)
}

fn log_bound() -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for (a, b) in rate_grid() {
        for n in 2..=12 {
            let mps = asep_representation(params(a, b, n)).to_embedded_mps();
            for k in 1..n {
                let s = cut_spectrum(&mps, k)?.entropy();
                worst = worst.max(s - ((n + 1) as f64).log2());
            }
        }
    }
    Ok(worst)
}

/// Largest bond probability beyond the eleven leading ones at the middle
/// cut of `N = 20`.
fn spectrum_support() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (a, b) in rate_grid() {
        let mps = asep_representation(params(a, b, 20)).to_embedded_mps();
        let s = cut_spectrum(&mps, 10)?;
        worst = worst.max(max_of(s.probs[11..].iter().copied()));
    }
    Ok(worst)
}

/// Runs every check. Numerical failures inside a check are reported as
/// errors; violated inequalities are reported through [`Check::passed`].
pub fn run_checks(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let corpus = random_corpus(opts.corpus_size, opts.seed);
    let check = |name, measured, bound| Check {
        name,
        measured,
        bound,
    };
    Ok(vec![
        check("oracle_equivalence", oracle_equivalence(opts)?, 1e-9),
        check("asep_algebra", asep_algebra(), 1e-12),
        check("natural_form", natural_form(&corpus)?, 1e-10),
        check(
            "mi_below_spectrum_entropy",
            mi_below_entropy(&corpus)?,
            1e-9,
        ),
        check(
            "truncation_certificate",
            truncation_certificate(&corpus)?,
            1e-9,
        ),
        check("pinsker", pinsker(&corpus, opts.asep)?, 1e-9),
        check("mean_field_line", mean_field_line()?, 1e-10),
        check("ising_closed_form", ising_closed_form()?, 1e-9),
        check("log_bound", log_bound()?, 1e-12),
        check("spectrum_support", spectrum_support()?, 1e-12),
    ])
}

/// Prints one line per check and returns whether all passed.
pub fn report<W: Write>(checks: &[Check], mut out: W) -> io::Result<bool> {
    for c in checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "{:<26} measured={:<12.3e} bound={:<8.1e} {status}",
            c.name, c.measured, c.bound
        )?;
    }
    let ok = checks.iter().all(Check::passed);
    writeln!(
        out,
        "{}",
        if ok {
            "all checks passed"
        } else {
            "verification FAILED"
        }
    )?;
    Ok(ok)
}
