//! Closed-form model states: the classical Ising chain and the open-boundary
//! asymmetric exclusion process (ASEP).
//!
//! Local symbols: for Ising, symbol 0 is spin `+1` and symbol 1 is spin `-1`;
//! for the ASEP, symbol 0 is an empty site and symbol 1 an occupied one.

use ndarray::{array, Array2};

use crate::error::{Result, SmpsError};
use crate::mps::StochasticMps;

/// Rates within this distance of `α + β = 1` are treated as on the line.
pub const MEAN_FIELD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsingParams {
    /// Inverse temperature.
    pub beta: f64,
    pub num_sites: usize,
}

impl IsingParams {
    pub fn new(beta: f64, num_sites: usize) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(SmpsError::Argument(format!(
                "inverse temperature {beta} must be finite and >= 0"
            )));
        }
        if num_sites < 2 {
            return Err(SmpsError::Argument(
                "an Ising chain needs at least two sites".into(),
            ));
        }
        Ok(Self { beta, num_sites })
    }
}

/// Bond-dimension-two sMPS of `exp(-β Σ s_i s_{i+1}) / Z`.
///
/// The pair weight `e^{-β s s'}` is split as `Σ_λ g(s, λ) h(λ, s')` with
///
/// ```text
/// g(+, ·) = (e^{-β}, 1)      h(0, ·) = (1, e^{-2β})
/// g(-, ·) = (e^{β},  0)      h(1, ·) = (0, e^{β} - e^{-3β})
/// ```
///
/// and site `k` carries `h(λ_{k-1}, s_k) g(s_k, λ_k)`. For two sites the bond
/// distribution of this decomposition is `{e^{-β} cosh β, e^{-β} sinh β}`.
pub fn ising_mps(params: IsingParams) -> Result<StochasticMps> {
    let b = params.beta;
    let g = array![[(-b).exp(), 1.0], [b.exp(), 0.0]];
    let h = array![[1.0, (-2.0 * b).exp()], [0.0, b.exp() - (-3.0 * b).exp()]];
    let n = params.num_sites;
    let sites = (0..n)
        .map(|k| {
            (0..2)
                .map(|s| {
                    let g_row = g.row(s);
                    let h_col = h.column(s);
                    if k == 0 {
                        g_row.to_owned().insert_axis(ndarray::Axis(0))
                    } else if k == n - 1 {
                        h_col.to_owned().insert_axis(ndarray::Axis(1))
                    } else {
                        Array2::from_shape_fn((2, 2), |(l, m)| h_col[l] * g_row[m])
                    }
                })
                .collect()
        })
        .collect();
    StochasticMps::new(2, sites)?.normalize()
}

/// Entropy in bits of `{e^{-β} cosh β, e^{-β} sinh β}`, the two-site Ising
/// bond distribution. Zero at `β = 0`, tending to one as `β → ∞`.
pub fn ising_entropy_cost_exact(beta: f64) -> f64 {
    let t = (-2.0 * beta).exp();
    crate::info::entropy_bits(&[(1.0 + t) / 2.0, (1.0 - t) / 2.0])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsepParams {
    /// Injection rate at the left end.
    pub alpha: f64,
    /// Extraction rate at the right end.
    pub beta: f64,
    pub num_sites: usize,
}

impl AsepParams {
    pub fn new(alpha: f64, beta: f64, num_sites: usize) -> Result<Self> {
        for (name, r) in [("alpha", alpha), ("beta", beta)] {
            if !(r > 0.0 && r <= 1.0) {
                return Err(SmpsError::Argument(format!(
                    "{name} = {r} must lie in (0, 1]"
                )));
            }
        }
        if num_sites == 0 {
            return Err(SmpsError::Argument(
                "the chain needs at least one site".into(),
            ));
        }
        Ok(Self {
            alpha,
            beta,
            num_sites,
        })
    }

    pub fn on_mean_field_line(&self) -> bool {
        (self.alpha + self.beta - 1.0).abs() <= MEAN_FIELD_TOL
    }
}

/// Which closed-form representation is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `α + β ≤ 1`, `β ≤ α`.
    I,
    /// `α + β ≤ 1`, `β ≥ α`.
    II,
    /// `α + β ≥ 1`.
    III,
    /// `α + β = 1`, scalar representation.
    MeanField,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::I => "I",
            Regime::II => "II",
            Regime::III => "III",
            Regime::MeanField => "MF",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A truncated `(N+1)`-dimensional representation of the ASEP algebra.
///
/// The `2 x 2` corner matrices `A` and `B` satisfy `AB + |1⟩⟨1| = A + B`, with
/// `wB = w/α` and `Av = v/β`. They are embedded as
///
/// ```text
/// ℰ = B ⊕ Σ_{n=2..N} (|n⟩⟨n| + |n⟩⟨n-1|)
/// 𝒟 = A ⊕ Σ_{n=2..N} (|n⟩⟨n| + |n-1⟩⟨n|)
/// ```
///
/// and the steady-state weight of a configuration is `⟨w| X_1 … X_N |v⟩` with
/// `X = ℰ` for an empty site and `X = 𝒟` for an occupied one.
#[derive(Debug, Clone)]
pub struct AsepRepresentation {
    pub params: AsepParams,
    pub regime: Regime,
    pub a_corner: Array2<f64>,
    pub b_corner: Array2<f64>,
    /// Left boundary (row) vector.
    pub w: [f64; 2],
    /// Right boundary (column) vector.
    pub v: [f64; 2],
    pub e_mat: Array2<f64>,
    pub d_mat: Array2<f64>,
    /// `a` for regimes III and MF, `b` for regimes I and II.
    pub aux: f64,
}

/// Regimes whose closed-form solution is valid (nonnegative) at `params`.
pub fn applicable_regimes(params: &AsepParams) -> Vec<Regime> {
    let s = params.alpha + params.beta;
    let mut out = Vec::new();
    if params.on_mean_field_line() {
        out.push(Regime::MeanField);
    }
    if s <= 1.0 + MEAN_FIELD_TOL {
        out.push(Regime::I);
        out.push(Regime::II);
    }
    if s >= 1.0 - MEAN_FIELD_TOL {
        out.push(Regime::III);
    }
    out
}

/// The preferred representation: MF on the line `α + β = 1`, otherwise I when
/// `β ≤ α`, II when `β > α`, and III above the line.
pub fn asep_representation(params: AsepParams) -> AsepRepresentation {
    let regime = if params.on_mean_field_line() {
        Regime::MeanField
    } else if params.alpha + params.beta < 1.0 {
        if params.beta <= params.alpha {
            Regime::I
        } else {
            Regime::II
        }
    } else {
        Regime::III
    };
    build_representation(params, regime)
}

/// The representation of a specific regime, if it applies at `params`.
pub fn asep_representation_in(params: AsepParams, regime: Regime) -> Result<AsepRepresentation> {
    if !applicable_regimes(&params).contains(&regime) {
        return Err(SmpsError::Argument(format!(
            "regime {regime} does not apply at alpha = {}, beta = {}",
            params.alpha, params.beta
        )));
    }
    Ok(build_representation(params, regime))
}

fn build_representation(params: AsepParams, regime: Regime) -> AsepRepresentation {
    let (al, be) = (params.alpha, params.beta);
    let (a_corner, b_corner, w, v, aux) = match regime {
        Regime::I => {
            let b = (1.0 - al - be).max(0.0).sqrt();
            (
                array![[1.0 / be, 0.0], [0.0, 1.0]],
                array![[1.0 / (1.0 - be), 0.0], [b, 1.0 / al]],
                [al * (1.0 - be), b],
                [1.0, 0.0],
                b,
            )
        }
        Regime::II => {
            // regime I with α and β exchanged, then A ↔ Bᵀ and w ↔ vᵀ
            let b = (1.0 - al - be).max(0.0).sqrt();
            (
                array![[1.0 / (1.0 - al), b], [0.0, 1.0 / be]],
                array![[1.0 / al, 0.0], [0.0, 1.0]],
                [1.0, 0.0],
                [be * (1.0 - al), b],
                b,
            )
        }
        Regime::III | Regime::MeanField => {
            let a = ((al + be - 1.0) / (al * be)).max(0.0).sqrt();
            let a = if regime == Regime::MeanField { 0.0 } else { a };
            (
                array![[1.0 / be, a], [0.0, 1.0]],
                array![[1.0 / al, 0.0], [a, 1.0]],
                [1.0, 0.0],
                [1.0, 0.0],
                a,
            )
        }
    };
    let dim = params.num_sites + 1;
    let mut e_mat = Array2::zeros((dim, dim));
    let mut d_mat = Array2::zeros((dim, dim));
    e_mat.slice_mut(ndarray::s![..2, ..2]).assign(&b_corner);
    d_mat.slice_mut(ndarray::s![..2, ..2]).assign(&a_corner);
    for n in 2..dim {
        e_mat[[n, n]] = 1.0;
        e_mat[[n, n - 1]] = 1.0;
        d_mat[[n, n]] = 1.0;
        d_mat[[n - 1, n]] = 1.0;
    }
    AsepRepresentation {
        params,
        regime,
        a_corner,
        b_corner,
        w,
        v,
        e_mat,
        d_mat,
        aux,
    }
}

impl AsepRepresentation {
    /// Largest entry of `|AB + |1⟩⟨1| − A − B|`.
    pub fn corner_identity_defect(&self) -> f64 {
        let mut lhs = self.a_corner.dot(&self.b_corner);
        lhs[[1, 1]] += 1.0;
        let rhs = &self.a_corner + &self.b_corner;
        (&lhs - &rhs).iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest entry of `|wB − w/α|` and `|Av − v/β|`.
    pub fn eigenvector_defect(&self) -> f64 {
        let (al, be) = (self.params.alpha, self.params.beta);
        let b = &self.b_corner;
        let a = &self.a_corner;
        let wb = [
            self.w[0] * b[[0, 0]] + self.w[1] * b[[1, 0]],
            self.w[0] * b[[0, 1]] + self.w[1] * b[[1, 1]],
        ];
        let av = [
            a[[0, 0]] * self.v[0] + a[[0, 1]] * self.v[1],
            a[[1, 0]] * self.v[0] + a[[1, 1]] * self.v[1],
        ];
        (0..2)
            .map(|i| {
                (wb[i] - self.w[i] / al)
                    .abs()
                    .max((av[i] - self.v[i] / be).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Smallest entry across `A`, `B`, `v`, `w`, `ℰ`, `𝒟`.
    pub fn min_entry(&self) -> f64 {
        self.a_corner
            .iter()
            .chain(&self.b_corner)
            .chain(&self.w)
            .chain(&self.v)
            .chain(&self.e_mat)
            .chain(&self.d_mat)
            .fold(f64::INFINITY, |m, &x| m.min(x))
    }

    /// Normalized sMPS with `B_0 = ℰ`, `B_1 = 𝒟` on every site. The mean-field
    /// regime uses the scalar representation `ℰ = 1/α`, `𝒟 = 1/β`.
    pub fn to_mps(&self) -> StochasticMps {
        if self.regime == Regime::MeanField {
            return scalar_mps(self.params);
        }
        self.to_embedded_mps()
    }

    /// Normalized sMPS built from the `(N+1)`-dimensional matrices regardless
    /// of regime.
    pub fn to_embedded_mps(&self) -> StochasticMps {
        let dim = self.params.num_sites + 1;
        let mut left = vec![0.0; dim];
        let mut right = vec![0.0; dim];
        left[..2].copy_from_slice(&self.w);
        right[..2].copy_from_slice(&self.v);
        let bulk = vec![vec![self.e_mat.clone(), self.d_mat.clone()]; self.params.num_sites];
        StochasticMps::with_boundaries(2, &left, bulk, &right)
            .and_then(StochasticMps::normalize)
            .expect("closed-form representations are nonnegative with positive mass")
    }
}

fn scalar_mps(params: AsepParams) -> StochasticMps {
    let q = [params.beta, params.alpha];
    let q: Vec<f64> = q.iter().map(|x| x / (params.alpha + params.beta)).collect();
    StochasticMps::product(&vec![q; params.num_sites]).expect("valid product measure")
}

/// Exact steady state of the open ASEP as a normalized sMPS of bond
/// dimension at most `N + 1`, using the preferred representation.
pub fn asep_mps(params: AsepParams) -> StochasticMps {
    asep_representation(params).to_mps()
}

/// The bond-dimension-one steady state on the line `α + β = 1`: independent
/// sites occupied with probability `α`.
pub fn asep_scalar_mps(params: AsepParams) -> Result<StochasticMps> {
    if !params.on_mean_field_line() {
        return Err(SmpsError::Argument(format!(
            "scalar representation needs alpha + beta = 1, got {}",
            params.alpha + params.beta
        )));
    }
    Ok(scalar_mps(params))
}

/// Normalized sMPS for every applicable regime, labelled by regime.
pub fn asep_candidates(params: AsepParams) -> Vec<(Regime, StochasticMps)> {
    applicable_regimes(&params)
        .into_iter()
        .map(|r| (r, build_representation(params, r).to_mps()))
        .collect()
}
