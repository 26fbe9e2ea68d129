//! Continuous-time kinetic Monte Carlo for the open ASEP and plug-in
//! estimation of block mutual information.
//!
//! Trajectories are exact next-event (Gillespie) simulations. Configurations
//! are `u32` bit patterns in the same order as [`ProbabilityTable`] indices:
//! site `k` (0-based) lives on bit `N - 1 - k`.
//!
//! Sampling is split into independent batches. Batch `i` runs its own
//! trajectory from the empty chain, with a ChaCha8 generator seeded from the
//! run seed and switched to stream `i`; results therefore do not depend on
//! how batches are scheduled across threads.
//!
//! [`ProbabilityTable`]: crate::table::ProbabilityTable

use std::collections::HashMap;
use std::io::{self, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, SmpsError};
use crate::models::AsepParams;

/// Name of the random number generator, recorded alongside results.
pub const RNG_ALGORITHM: &str =
    "ChaCha8 (rand_chacha 0.9), seed_from_u64(seed), stream = batch index";

/// Longest chain the simulator and estimator accept.
pub const MAX_MC_SITES: usize = 24;

pub const DEFAULT_BATCHES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub params: AsepParams,
    /// Simulated time discarded at the start of every batch.
    pub burn_in_time: f64,
    pub sample_count: usize,
    /// Simulated time between recorded samples.
    pub sample_interval: f64,
    pub seed: u64,
    /// Number of independent batches, at least 20.
    pub batches: usize,
}

impl McConfig {
    /// Defaults: burn-in `20 N`, interval `N`, 20 batches.
    pub fn new(params: AsepParams, sample_count: usize, seed: u64) -> Self {
        let n = params.num_sites as f64;
        Self {
            params,
            burn_in_time: 20.0 * n,
            sample_count,
            sample_interval: n,
            seed,
            batches: DEFAULT_BATCHES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.num_sites > MAX_MC_SITES {
            return Err(SmpsError::Capacity {
                what: "Monte Carlo chain",
                requested: self.params.num_sites as u128,
                limit: MAX_MC_SITES as u128,
            });
        }
        if !(self.burn_in_time >= 0.0) || !(self.sample_interval > 0.0) {
            return Err(SmpsError::Argument("times must be positive".into()));
        }
        if self.batches < DEFAULT_BATCHES {
            return Err(SmpsError::Argument(format!(
                "need at least {DEFAULT_BATCHES} batches, got {}",
                self.batches
            )));
        }
        if self.sample_count < self.batches {
            return Err(SmpsError::Argument(format!(
                "{} samples cannot fill {} batches",
                self.sample_count, self.batches
            )));
        }
        Ok(())
    }

    fn batch_size(&self, i: usize) -> usize {
        self.sample_count / self.batches + usize::from(i < self.sample_count % self.batches)
    }
}

/// Exact continuous-time ASEP trajectory.
#[derive(Debug, Clone)]
pub struct AsepSampler {
    num_sites: usize,
    alpha: f64,
    beta: f64,
    state: u32,
    time: f64,
    next_event: f64,
    rng: ChaCha8Rng,
    injections: u64,
    extractions: u64,
}

impl AsepSampler {
    /// A trajectory starting at time zero in `initial`. Rates may be zero,
    /// in which case the corresponding boundary is closed.
    pub fn new(num_sites: usize, alpha: f64, beta: f64, initial: u32, rng: ChaCha8Rng) -> Self {
        assert!((1..=MAX_MC_SITES).contains(&num_sites));
        assert!(alpha >= 0.0 && beta >= 0.0);
        let mut s = Self {
            num_sites,
            alpha,
            beta,
            state: initial,
            time: 0.0,
            next_event: 0.0,
            rng,
            injections: 0,
            extractions: 0,
        };
        s.schedule();
        s
    }

    pub fn state(&self) -> u32 {
        self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Particles injected at the left boundary so far.
    pub fn injections(&self) -> u64 {
        self.injections
    }

    /// Particles removed at the right boundary so far.
    pub fn extractions(&self) -> u64 {
        self.extractions
    }

    fn first_bit(&self) -> u32 {
        1 << (self.num_sites - 1)
    }

    fn hop_mask(&self) -> u32 {
        let full = if self.num_sites == 32 {
            u32::MAX
        } else {
            (1u32 << self.num_sites) - 1
        };
        self.state & !(self.state << 1) & !1 & full
    }

    fn rates(&self) -> (f64, f64, u32) {
        let inject = if self.state & self.first_bit() == 0 {
            self.alpha
        } else {
            0.0
        };
        let extract = if self.state & 1 == 1 { self.beta } else { 0.0 };
        (inject, extract, self.hop_mask().count_ones())
    }

    fn schedule(&mut self) {
        let (i, e, h) = self.rates();
        let total = i + e + f64::from(h);
        self.next_event = if total > 0.0 {
            let u: f64 = self.rng.random();
            self.time - (1.0 - u).ln() / total
        } else {
            f64::INFINITY
        };
    }

    fn fire(&mut self) {
        self.time = self.next_event;
        let (inject, extract, hops) = self.rates();
        let x = self.rng.random::<f64>() * (inject + extract + f64::from(hops));
        if x < inject {
            self.state |= self.first_bit();
            self.injections += 1;
        } else if x < inject + extract || hops == 0 {
            self.state &= !1;
            self.extractions += 1;
        } else {
            let mut mask = self.hop_mask();
            for _ in 0..self.rng.random_range(0..hops) {
                mask &= mask - 1;
            }
            let b = mask.trailing_zeros();
            self.state ^= 0b11 << (b - 1);
        }
        self.schedule();
    }

    /// Runs the dynamics up to absolute time `t`.
    pub fn advance_to(&mut self, t: f64) {
        while self.next_event <= t {
            self.fire();
        }
        self.time = self.time.max(t);
    }

    /// Discards `burn_in` time units, then records `count` configurations
    /// spaced `interval` apart.
    pub fn sample(&mut self, burn_in: f64, interval: f64, count: usize) -> Vec<u32> {
        let start = self.time + burn_in;
        (0..count)
            .map(|j| {
                self.advance_to(start + j as f64 * interval);
                self.state
            })
            .collect()
    }
}

fn batch_rng(seed: u64, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    rng
}

/// Recorded configurations, grouped by batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub num_sites: usize,
    pub batches: Vec<Vec<u32>>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.batches.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.batches.iter().flatten().copied()
    }
}

/// Runs all batches (in parallel) and returns their samples in batch order.
pub fn simulate(cfg: &McConfig) -> Result<SampleSet> {
    cfg.validate()?;
    let p = cfg.params;
    let batches = (0..cfg.batches)
        .into_par_iter()
        .map(|i| {
            let mut s = AsepSampler::new(p.num_sites, p.alpha, p.beta, 0, batch_rng(cfg.seed, i));
            s.sample(cfg.burn_in_time, cfg.sample_interval, cfg.batch_size(i))
        })
        .collect();
    Ok(SampleSet {
        num_sites: p.num_sites,
        batches,
    })
}

/// Plug-in estimate of block mutual information.
#[derive(Debug, Clone, PartialEq)]
pub struct MiEstimate {
    /// Plug-in `I(A:B)` over all samples, bits.
    pub estimate: f64,
    /// Standard error from batch means, bits.
    pub std_error: f64,
    pub sample_count: usize,
    pub cut: usize,
    /// Number of distinct `(x_A, x_B)` pairs observed.
    pub observed_support: usize,
    /// Set when fewer than 100 samples per observed joint cell were drawn;
    /// the estimate then carries a noticeable positive bias.
    pub undersampled: bool,
}

fn counts<'a>(samples: impl Iterator<Item = &'a u32>) -> HashMap<u32, u64> {
    let mut c = HashMap::new();
    for &s in samples {
        *c.entry(s).or_insert(0) += 1;
    }
    c
}

/// Plug-in mutual information (bits) of empirical configuration counts,
/// with block A the first `cut` of `num_sites` sites.
pub fn plug_in_mutual_information(counts: &HashMap<u32, u64>, num_sites: usize, cut: usize) -> f64 {
    let shift = num_sites - cut;
    let mask = (1u32 << shift) - 1;
    let total: u64 = counts.values().sum();
    let mut ca: HashMap<u32, u64> = HashMap::new();
    let mut cb: HashMap<u32, u64> = HashMap::new();
    for (&s, &c) in counts {
        *ca.entry(s >> shift).or_insert(0) += c;
        *cb.entry(s & mask).or_insert(0) += c;
    }
    let n = total as f64;
    // fixed summation order keeps the estimate bit-reproducible
    let mut cells: Vec<(u32, u64)> = counts.iter().map(|(&s, &c)| (s, c)).collect();
    cells.sort_unstable();
    let mi: f64 = cells
        .into_iter()
        .map(|(s, c)| {
            let c = c as f64;
            let a = ca[&(s >> shift)] as f64;
            let b = cb[&(s & mask)] as f64;
            c / n * (c * n / (a * b)).log2()
        })
        .sum();
    mi.max(0.0)
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Mutual information at `cut` estimated from simulated samples.
pub fn estimate_mutual_information(cfg: &McConfig, cut: usize) -> Result<MiEstimate> {
    let samples = simulate(cfg)?;
    mutual_information_from_samples(&samples, cut)
}

/// Mutual information at `cut` from an existing sample set.
pub fn mutual_information_from_samples(samples: &SampleSet, cut: usize) -> Result<MiEstimate> {
    let n = samples.num_sites;
    if cut == 0 || cut >= n {
        return Err(SmpsError::Argument(format!(
            "cut {cut} out of range 1..{n}"
        )));
    }
    if samples.batches.len() < 2 {
        return Err(SmpsError::Argument(
            "batch means need at least two batches".into(),
        ));
    }
    let per_batch: Vec<f64> = samples
        .batches
        .par_iter()
        .map(|b| plug_in_mutual_information(&counts(b.iter()), n, cut))
        .collect();
    let all = counts(samples.batches.iter().flatten());
    let (_, std_error) = mean_and_stderr(&per_batch);
    let sample_count = samples.len();
    Ok(MiEstimate {
        estimate: plug_in_mutual_information(&all, n, cut),
        std_error,
        sample_count,
        cut,
        observed_support: all.len(),
        undersampled: sample_count < 100 * all.len(),
    })
}

/// Per-site occupation densities with batch-means standard errors.
pub fn site_densities(samples: &SampleSet) -> Vec<(f64, f64)> {
    let n = samples.num_sites;
    (0..n)
        .map(|k| {
            let bit = n - 1 - k;
            let per_batch: Vec<f64> = samples
                .batches
                .iter()
                .map(|b| b.iter().filter(|&&s| (s >> bit) & 1 == 1).count() as f64 / b.len() as f64)
                .collect();
            let (_, se) = mean_and_stderr(&per_batch);
            let hits = samples.iter().filter(|&s| (s >> bit) & 1 == 1).count();
            (hits as f64 / samples.len() as f64, se)
        })
        .collect()
}

/// Binary sample file.
///
/// Layout (little endian): magic `SMPSRUN1`, `u32` sites, `f64` alpha,
/// `f64` beta, `u64` seed, `f64` burn-in, `f64` interval, `u32` batches, then
/// per batch a `u64` sample count followed by that many configurations packed
/// into `ceil(N / 8)` bytes each.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFile {
    pub config: McConfig,
    pub samples: SampleSet,
}

const RUN_MAGIC: &[u8; 8] = b"SMPSRUN1";

impl RunFile {
    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        let c = &self.config;
        out.write_all(RUN_MAGIC)?;
        out.write_all(&(c.params.num_sites as u32).to_le_bytes())?;
        out.write_all(&c.params.alpha.to_le_bytes())?;
        out.write_all(&c.params.beta.to_le_bytes())?;
        out.write_all(&c.seed.to_le_bytes())?;
        out.write_all(&c.burn_in_time.to_le_bytes())?;
        out.write_all(&c.sample_interval.to_le_bytes())?;
        out.write_all(&(self.samples.batches.len() as u32).to_le_bytes())?;
        let width = c.params.num_sites.div_ceil(8);
        for batch in &self.samples.batches {
            out.write_all(&(batch.len() as u64).to_le_bytes())?;
            for s in batch {
                out.write_all(&s.to_le_bytes()[..width])?;
            }
        }
        out.flush()
    }

    pub fn read_from<R: Read>(mut input: R) -> io::Result<Self> {
        fn take<const K: usize>(r: &mut impl Read) -> io::Result<[u8; K]> {
            let mut b = [0u8; K];
            r.read_exact(&mut b)?;
            Ok(b)
        }
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        if &take::<8>(&mut input)? != RUN_MAGIC {
            return Err(bad("not an smps run file"));
        }
        let n = u32::from_le_bytes(take(&mut input)?) as usize;
        let alpha = f64::from_le_bytes(take(&mut input)?);
        let beta = f64::from_le_bytes(take(&mut input)?);
        let seed = u64::from_le_bytes(take(&mut input)?);
        let burn_in = f64::from_le_bytes(take(&mut input)?);
        let interval = f64::from_le_bytes(take(&mut input)?);
        let nb = u32::from_le_bytes(take(&mut input)?) as usize;
        let params = AsepParams::new(alpha, beta, n).map_err(|e| bad(&e.to_string()))?;
        if n > MAX_MC_SITES {
            return Err(bad("chain too long"));
        }
        let width = n.div_ceil(8);
        let mut batches = Vec::with_capacity(nb);
        for _ in 0..nb {
            let len = u64::from_le_bytes(take(&mut input)?) as usize;
            let mut raw = vec![0u8; len * width];
            input.read_exact(&mut raw)?;
            batches.push(
                raw.chunks_exact(width)
                    .map(|c| {
                        let mut b = [0u8; 4];
                        b[..width].copy_from_slice(c);
                        u32::from_le_bytes(b)
                    })
                    .collect::<Vec<_>>(),
            );
        }
        let samples = SampleSet {
            num_sites: n,
            batches,
        };
        Ok(Self {
            config: McConfig {
                params,
                burn_in_time: burn_in,
                sample_count: samples.len(),
                sample_interval: interval,
                seed,
                batches: nb,
            },
            samples,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn asep(a: f64, b: f64, n: usize) -> AsepParams {
        AsepParams::new(a, b, n).unwrap()
    }

    #[test]
    fn closed_entrance_keeps_chain_empty() {
        let mut s = AsepSampler::new(5, 0.0, 0.7, 0, batch_rng(1, 0));
        let samples = s.sample(10.0, 1.0, 100);
        assert!(samples.iter().all(|&c| c == 0));
    }

    #[test]
    fn particles_only_move_right() {
        let mut s = AsepSampler::new(6, 0.5, 0.5, 0, batch_rng(2, 0));
        let mut prev = s.state();
        for _ in 0..10_000 {
            s.fire();
            let cur = s.state();
            let diff = prev ^ cur;
            // injection (top bit), extraction (bit 0) or a hop (two adjacent bits)
            assert!(
                diff == 1 << 5
                    || diff == 1
                    || (diff.count_ones() == 2
                        && diff.is_multiple_of(3)
                        && (diff / 3).is_power_of_two())
            );
            prev = cur;
        }
    }

    #[test]
    fn single_site_occupation_law() {
        let (a, b) = (0.3, 0.6);
        let mut cfg = McConfig::new(asep(a, b, 1), 200_000, 9);
        cfg.sample_interval = 2.0;
        let s = simulate(&cfg).unwrap();
        let (rho, se) = site_densities(&s)[0];
        assert!(
            (rho - a / (a + b)).abs() <= 3.0 * se.max(1e-3),
            "{rho} ± {se}"
        );
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = McConfig::new(asep(0.3, 0.3, 6), 2000, 42);
        assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
        let a = estimate_mutual_information(&cfg, 3).unwrap();
        let b = estimate_mutual_information(&cfg, 3).unwrap();
        assert_eq!(a, b);
        let other = McConfig { seed: 43, ..cfg };
        assert_ne!(
            simulate(&other).unwrap(),
            simulate(&McConfig::new(asep(0.3, 0.3, 6), 2000, 42)).unwrap()
        );
    }

    #[test]
    fn boundary_fluxes_balance() {
        let mut s = AsepSampler::new(8, 0.4, 0.7, 0, batch_rng(5, 0));
        s.advance_to(50_000.0);
        let (i, e) = (s.injections() as f64, s.extractions() as f64);
        // the difference is the current particle count, at most N
        assert!((i - e).abs() <= 8.0);
        assert!(i > 1000.0);
    }

    #[test]
    fn plug_in_examples() {
        // perfectly correlated two-site samples
        let c: HashMap<u32, u64> = [(0b00, 50), (0b11, 50)].into_iter().collect();
        assert!((plug_in_mutual_information(&c, 2, 1) - 1.0).abs() < 1e-15);
        let c: HashMap<u32, u64> = [(0b00, 25), (0b01, 25), (0b10, 25), (0b11, 25)]
            .into_iter()
            .collect();
        assert_eq!(plug_in_mutual_information(&c, 2, 1), 0.0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = McConfig::new(asep(0.5, 0.5, 4), 100, 0);
        cfg.batches = 5;
        assert!(cfg.validate().is_err());
        let cfg = McConfig::new(asep(0.5, 0.5, 25), 100, 0);
        assert!(matches!(cfg.validate(), Err(SmpsError::Capacity { .. })));
        let cfg = McConfig::new(asep(0.5, 0.5, 4), 10, 0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn run_file_round_trip() {
        let cfg = McConfig::new(asep(0.3, 0.4, 10), 500, 7);
        let samples = simulate(&cfg).unwrap();
        let run = RunFile {
            config: cfg,
            samples,
        };
        let mut buf = Vec::new();
        run.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 8 * 5 + 4 + 20 * 8 + 500 * 2);
        let back = RunFile::read_from(&buf[..]).unwrap();
        assert_eq!(back, run);
        assert!(RunFile::read_from(&b"garbage!"[..]).is_err());
    }
}
