use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use smps::canonical::{cut_spectrum, to_natural_form, truncate as truncate_natural};
use smps::info::{entropy_cost_bracket, mps_mutual_information};
use smps::mcsim::{self, McConfig, RunFile, RNG_ALGORITHM};
use smps::models::{
    asep_candidates, asep_representation, ising_entropy_cost_exact, ising_mps, AsepParams,
    IsingParams,
};
use smps::{l1_distance, StochasticMps};

use crate::grid::Grid;

/// Largest chain for which the sweep evaluates mutual information.
pub const MAX_SWEEP_MI_SITES: usize = 26;

/// Largest chain for which `truncate` contracts both distributions densely.
pub const MAX_DENSE_L1_SITES: usize = 20;

fn header<W: Write>(out: &mut W, command: &str, params: &[(&str, String)]) -> Result<()> {
    writeln!(out, "# smps-cli {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# command: {command}")?;
    for (k, v) in params {
        writeln!(out, "# {k}: {v}")?;
    }
    Ok(())
}

/// Shortest round-trip decimal, switching to exponent form for very small
/// or large magnitudes. Negative zero prints as `0`.
pub fn num(x: f64) -> String {
    let x = x + 0.0;
    if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e7) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn default_cut(n: usize, cut: Option<usize>) -> Result<usize> {
    let k = cut.unwrap_or(n / 2);
    if k == 0 || k >= n {
        bail!("cut {k} out of range 1..{n}");
    }
    Ok(k)
}

/// Columns the phase sweep can compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Mi,
    EntropyCostUb,
    Spectrum,
    L1Truncation,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Mi => "mi",
            Quantity::EntropyCostUb => "entropy_cost_ub",
            Quantity::Spectrum => "spectrum",
            Quantity::L1Truncation => "l1_truncation",
        }
    }
}

impl FromStr for Quantity {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mi" => Quantity::Mi,
            "entropy_cost_ub" => Quantity::EntropyCostUb,
            "spectrum" => Quantity::Spectrum,
            "l1_truncation" => Quantity::L1Truncation,
            _ => bail!("unknown quantity '{s}'"),
        })
    }
}

/// A rectangular `(α, β)` sweep at fixed chain length.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub alpha: Grid,
    pub beta: Grid,
    pub num_sites: usize,
    /// Defaults to `N / 2`.
    pub cut: Option<usize>,
    pub quantities: Vec<Quantity>,
    /// Needed by `l1_truncation`.
    pub bond_cap: Option<usize>,
}

impl SweepSpec {
    /// The phase-map grid: `α, β ∈ {0.05, 0.10, …, 0.95}` at `N = 20`.
    pub fn phase_map() -> Self {
        let grid: Grid = "0.05:0.95:0.05".parse().expect("literal grid");
        SweepSpec {
            alpha: grid.clone(),
            beta: grid,
            num_sites: 20,
            cut: None,
            quantities: vec![Quantity::Mi, Quantity::EntropyCostUb],
            bond_cap: None,
        }
    }

    fn wants(&self, q: Quantity) -> bool {
        self.quantities.contains(&q)
    }

    pub fn validate(&self) -> Result<()> {
        self.alpha.check_within(0.0, 1.0)?;
        self.beta.check_within(0.0, 1.0)?;
        if self.alpha.is_empty() || self.beta.is_empty() {
            bail!("empty parameter grid");
        }
        default_cut(self.num_sites, self.cut)?;
        if self.wants(Quantity::Mi) && self.num_sites > MAX_SWEEP_MI_SITES {
            bail!(
                "mutual information needs N <= {MAX_SWEEP_MI_SITES}, got {}",
                self.num_sites
            );
        }
        if self.wants(Quantity::L1Truncation) && self.bond_cap.is_none() {
            bail!("l1_truncation needs --bond-cap");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
struct SweepRow {
    regime: &'static str,
    mi: Option<f64>,
    ub: Option<f64>,
    support: Option<usize>,
    l1_bound: Option<f64>,
}

fn sweep_point(spec: &SweepSpec, alpha: f64, beta: f64, cut: usize) -> Result<SweepRow> {
    let params = AsepParams::new(alpha, beta, spec.num_sites)?;
    let rep = asep_representation(params);
    let mps = rep.to_mps();
    let mut row = SweepRow {
        regime: rep.regime.label(),
        ..Default::default()
    };
    if spec.wants(Quantity::EntropyCostUb) {
        let candidates = asep_candidates(params);
        let labelled: Vec<(&str, &StochasticMps)> =
            candidates.iter().map(|(r, m)| (r.label(), m)).collect();
        if spec.wants(Quantity::Mi) {
            let bracket = entropy_cost_bracket(&mps, cut, &labelled)?;
            row.mi = Some(bracket.lower_bound);
            row.ub = Some(bracket.upper_bound);
        } else {
            let mut best = f64::INFINITY;
            for (_, m) in &labelled {
                best = best.min(cut_spectrum(m, cut)?.entropy());
            }
            row.ub = Some(best);
        }
    } else if spec.wants(Quantity::Mi) {
        row.mi = Some(mps_mutual_information(&mps, cut)?);
    }
    if spec.wants(Quantity::Spectrum) {
        row.support = Some(cut_spectrum(&rep.to_embedded_mps(), cut)?.support());
    }
    if let (true, Some(cap)) = (spec.wants(Quantity::L1Truncation), spec.bond_cap) {
        let nf = to_natural_form(&rep.to_embedded_mps())?;
        row.l1_bound = Some(truncate_natural(&nf, cap)?.err_bound);
    }
    Ok(row)
}

/// Writes one row per `(α, β)`, `α` varying slowest. Rows are computed in
/// parallel and emitted in grid order.
pub fn phase_sweep<W: Write>(spec: &SweepSpec, mut out: W) -> Result<()> {
    spec.validate()?;
    let cut = default_cut(spec.num_sites, spec.cut)?;
    let points: Vec<(f64, f64)> = spec
        .alpha
        .values()
        .iter()
        .flat_map(|&a| spec.beta.values().iter().map(move |&b| (a, b)))
        .collect();
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|&(a, b)| sweep_point(spec, a, b, cut))
        .collect::<Result<_>>()?;

    let quantities: Vec<&str> = spec.quantities.iter().map(|q| q.name()).collect();
    header(
        &mut out,
        "phase-sweep",
        &[
            ("alpha", spec.alpha.to_string()),
            ("beta", spec.beta.to_string()),
            ("n", spec.num_sites.to_string()),
            ("cut", cut.to_string()),
            ("quantities", quantities.join(",")),
            ("bond_cap", spec.bond_cap.map(|c| c.to_string()).unwrap_or("none".into())),
            ("seed", "none (deterministic)".into()),
            ("units", "bits; entropy_cost_ub is the smallest cut-spectrum entropy over the applicable exact representations".into()),
        ],
    )?;
    let mut w = csv::Writer::from_writer(&mut out);
    let mut cols = vec![
        "alpha",
        "beta",
        "N",
        "cut",
        "mi_bits",
        "entropy_cost_ub_bits",
        "regime",
    ];
    if spec.wants(Quantity::Spectrum) {
        cols.push("spectrum_support");
    }
    if spec.wants(Quantity::L1Truncation) {
        cols.push("l1_truncation_bound");
    }
    w.write_record(&cols)?;
    for (&(a, b), row) in points.iter().zip(&rows) {
        let mut rec = vec![
            num(a),
            num(b),
            spec.num_sites.to_string(),
            cut.to_string(),
            fmt_opt(row.mi),
            fmt_opt(row.ub),
            row.regime.to_string(),
        ];
        if spec.wants(Quantity::Spectrum) {
            rec.push(row.support.map(|s| s.to_string()).unwrap_or_default());
        }
        if spec.wants(Quantity::L1Truncation) {
            rec.push(fmt_opt(row.l1_bound));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Cut spectrum of the ASEP steady state in its preferred representation,
/// largest first, ranks counted from 1.
pub fn spectrum<W: Write>(params: AsepParams, cut: Option<usize>, mut out: W) -> Result<()> {
    let cut = default_cut(params.num_sites, cut)?;
    let rep = asep_representation(params);
    let spec = cut_spectrum(&rep.to_mps(), cut)?;
    header(
        &mut out,
        "spectrum",
        &[
            ("alpha", num(params.alpha)),
            ("beta", num(params.beta)),
            ("n", params.num_sites.to_string()),
            ("cut", cut.to_string()),
            ("regime", rep.regime.label().into()),
            ("seed", "none (deterministic)".into()),
            (
                "lambda",
                "rank from 1 in decreasing order; rank r is bond label r-1 of the basis |0>..|N>"
                    .into(),
            ),
        ],
    )?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(["lambda", "p_lambda"])?;
    for (i, p) in spec.probs.iter().enumerate() {
        w.write_record([(i + 1).to_string(), num(*p)])?;
    }
    w.flush()?;
    Ok(())
}

/// Two-site Ising entropy cost: closed form against the natural-form
/// spectrum of the exact bond-dimension-two representation.
pub fn ising<W: Write>(betas: &Grid, mut out: W) -> Result<()> {
    betas.check_at_least(0.0)?;
    header(
        &mut out,
        "ising",
        &[
            ("beta", betas.to_string()),
            ("n", "2".into()),
            ("seed", "none (deterministic)".into()),
            ("units", "bits".into()),
        ],
    )?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(["beta", "sc_exact", "sc_from_mps"])?;
    for &beta in betas.values() {
        let nf = to_natural_form(&ising_mps(IsingParams::new(beta, 2)?)?)?;
        let from_mps = smps::info::shannon_entropy(nf.bond(1))?;
        w.write_record([
            num(beta),
            num(ising_entropy_cost_exact(beta)),
            num(from_mps),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Monte Carlo estimates of block mutual information for several lengths.
#[derive(Debug, Clone)]
pub struct McSpec {
    pub sizes: Vec<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub samples: usize,
    pub seed: u64,
    /// Defaults to `20 N`.
    pub burn_in: Option<f64>,
    /// Defaults to `N / 2` for each size.
    pub cut: Option<usize>,
    /// Directory receiving one run file per size.
    pub save_runs: Option<PathBuf>,
}

pub fn mc<W: Write>(spec: &McSpec, mut out: W) -> Result<()> {
    if spec.sizes.is_empty() {
        bail!("no chain lengths given");
    }
    let configs: Vec<McConfig> = spec
        .sizes
        .iter()
        .map(|&n| {
            let mut cfg = McConfig::new(
                AsepParams::new(spec.alpha, spec.beta, n)?,
                spec.samples,
                spec.seed,
            );
            if let Some(b) = spec.burn_in {
                cfg.burn_in_time = b;
            }
            cfg.validate()?;
            default_cut(n, spec.cut)?;
            Ok(cfg)
        })
        .collect::<Result<_>>()?;
    let sizes: Vec<String> = spec.sizes.iter().map(|n| n.to_string()).collect();
    header(
        &mut out,
        "mc",
        &[
            ("alpha", num(spec.alpha)),
            ("beta", num(spec.beta)),
            ("n", sizes.join(",")),
            (
                "cut",
                spec.cut.map(|c| c.to_string()).unwrap_or("N/2".into()),
            ),
            ("samples", spec.samples.to_string()),
            ("burn_in", spec.burn_in.map(num).unwrap_or("20N".into())),
            ("interval", "N".into()),
            ("batches", configs[0].batches.to_string()),
            ("seed", spec.seed.to_string()),
            ("rng", RNG_ALGORITHM.into()),
            (
                "mi_estimate",
                "plug-in block mutual information in bits".into(),
            ),
            ("stderr", "standard error of the batch means in bits".into()),
            (
                "exp_mi",
                "exp(mi_estimate * ln 2), the exponential of the mutual information in nats".into(),
            ),
        ],
    )?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record([
        "N",
        "alpha",
        "beta",
        "mi_estimate",
        "stderr",
        "exp_mi",
        "undersampled",
    ])?;
    for cfg in &configs {
        let n = cfg.params.num_sites;
        let samples = mcsim::simulate(cfg)?;
        let est = mcsim::mutual_information_from_samples(&samples, default_cut(n, spec.cut)?)?;
        if let Some(dir) = &spec.save_runs {
            let path = dir.join(format!("asep_n{n}_seed{}.run", cfg.seed));
            let file =
                File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            RunFile {
                config: cfg.clone(),
                samples,
            }
            .write_to(BufWriter::new(file))?;
        }
        w.write_record([
            n.to_string(),
            num(spec.alpha),
            num(spec.beta),
            num(est.estimate),
            num(est.std_error),
            num((est.estimate * std::f64::consts::LN_2).exp()),
            est.undersampled.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Certified and measured L1 error of capping every bond of the ASEP
/// natural form. `caps` defaults to `1..=N+1`.
pub fn truncate<W: Write>(params: AsepParams, caps: &[usize], mut out: W) -> Result<()> {
    let n = params.num_sites;
    let caps: Vec<usize> = if caps.is_empty() {
        (1..=n + 1).collect()
    } else {
        caps.to_vec()
    };
    let rep = asep_representation(params);
    let mps = rep.to_embedded_mps();
    let nf = to_natural_form(&mps)?;
    let dense = n <= MAX_DENSE_L1_SITES;
    let reference = if dense {
        Some(mps.contract_to_table()?)
    } else {
        None
    };
    let cap_list: Vec<String> = caps.iter().map(|c| c.to_string()).collect();
    header(
        &mut out,
        "truncate",
        &[
            ("alpha", num(params.alpha)),
            ("beta", num(params.beta)),
            ("n", n.to_string()),
            ("bond_cap", cap_list.join(",")),
            ("regime", rep.regime.label().into()),
            ("seed", "none (deterministic)".into()),
            (
                "err_bound",
                "2 * sum over cuts of the discarded bond probability".into(),
            ),
            (
                "l1_measured",
                format!("dense L1 distance, empty for N > {MAX_DENSE_L1_SITES}"),
            ),
        ],
    )?;
    let rows: Vec<(usize, f64, Option<f64>)> = caps
        .par_iter()
        .map(|&cap| {
            let t = truncate_natural(&nf, cap)?;
            let measured = match &reference {
                Some(r) => Some(l1_distance(r, &t.mps.contract_to_table()?)?),
                None => None,
            };
            Ok((cap, t.err_bound, measured))
        })
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(["bond_cap", "err_bound", "l1_measured"])?;
    for (cap, bound, measured) in rows {
        w.write_record([cap.to_string(), num(bound), fmt_opt(measured)])?;
    }
    w.flush()?;
    Ok(())
}
