//! The nonlocal problem `u' + (1 + γ∂_t^α)Au = f`, `u(t₀) = βu(0) + φ`,
//! solved mode by mode.
//!
//! Each coefficient splits as `u_k(t) = h_k B(λ_k, t) + ω_k(t)`, where `ω_k`
//! is the Duhamel term with zero initial value and `h_k` is fixed by the
//! nonlocal condition `h_k (B(λ_k, t₀) − β) = φ_k − ω_k(t₀) = ψ_k`.
//! Modes with `B(λ_k, t₀) = β` form the resonant set K₀; there `ψ_k` must
//! vanish and `h_k` is free.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{domain, Error, OffendingMode, Result};
use crate::kernel::{duhamel, duhamel_on_grid, eval_b, FracParams, QuadConfig};
use crate::oracle::{rl_derivative, TimeGrid, TimeSeries};
use crate::spectrum::{CoeffVector, Spectrum};

/// Relative tolerance for `ψ_k = 0` on resonant modes, against `‖ψ‖`.
pub const ORTHOGONALITY_RTOL: f64 = 1e-8;

/// One term `coeff · t^power` of a forcing profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTerm {
    pub coeff: f64,
    pub power: f64,
}

/// Time profile `f_k(t)` of one forcing coefficient.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeForcing {
    #[default]
    Zero,
    /// `Σ c_i t^{p_i}` with `p_i ≥ 0`.
    PowerSeries { terms: Vec<PowerTerm> },
    /// Linear interpolation of samples; constant beyond the end points.
    Samples { times: Vec<f64>, values: Vec<f64> },
}

impl ModeForcing {
    pub fn constant(c: f64) -> Self {
        Self::PowerSeries {
            terms: vec![PowerTerm {
                coeff: c,
                power: 0.0,
            }],
        }
    }

    /// `c₀ + c₁t + c₂t² + …`
    pub fn polynomial(coeffs: &[f64]) -> Self {
        Self::PowerSeries {
            terms: coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| PowerTerm {
                    coeff: c,
                    power: i as f64,
                })
                .collect(),
        }
    }

    /// The forcing for which `y(t) = t` solves `y' + λ(1 + γ∂^α)y = f`,
    /// `y(0) = 0`: `f = 1 + λt + λγ t^{1−α}/Γ(2−α)`.
    pub fn manufactured_linear(params: &FracParams, lambda: f64) -> Self {
        let a = params.alpha();
        Self::PowerSeries {
            terms: vec![
                PowerTerm {
                    coeff: 1.0,
                    power: 0.0,
                },
                PowerTerm {
                    coeff: lambda,
                    power: 1.0,
                },
                PowerTerm {
                    coeff: lambda * params.gamma() / gamma(2.0 - a),
                    power: 1.0 - a,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Zero => Ok(()),
            Self::PowerSeries { terms } => {
                for t in terms {
                    if !t.coeff.is_finite() || !(t.power >= 0.0 && t.power.is_finite()) {
                        return domain(format!(
                            "power term needs a finite coefficient and power >= 0, got {} t^{}",
                            t.coeff, t.power
                        ));
                    }
                }
                Ok(())
            }
            Self::Samples { times, values } => {
                if times.len() != values.len() {
                    return Err(Error::LengthMismatch {
                        expected: times.len(),
                        got: values.len(),
                    });
                }
                if times.len() < 2 {
                    return domain("sampled forcing needs at least 2 samples");
                }
                if times.iter().chain(values).any(|v| !v.is_finite()) {
                    return domain("sampled forcing must be finite");
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return domain("sample times must be strictly increasing");
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::PowerSeries { terms } => terms.iter().all(|t| t.coeff == 0.0),
            Self::Samples { values, .. } => values.iter().all(|&v| v == 0.0),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::PowerSeries { terms } => terms
                .iter()
                .map(|p| {
                    if p.power == 0.0 {
                        p.coeff
                    } else {
                        p.coeff * t.powf(p.power)
                    }
                })
                .sum(),
            Self::Samples { times, values } => {
                let n = times.len();
                if t <= times[0] {
                    return values[0];
                }
                if t >= times[n - 1] {
                    return values[n - 1];
                }
                let j = times.partition_point(|&s| s <= t) - 1;
                let w = (t - times[j]) / (times[j + 1] - times[j]);
                (1.0 - w) * values[j] + w * values[j + 1]
            }
        }
    }
}

/// Forcing coefficients `f_k(t)`, one profile per mode. Modes beyond the
/// stored list are unforced.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Forcing {
    modes: Vec<ModeForcing>,
}

impl Forcing {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(modes: Vec<ModeForcing>) -> Result<Self> {
        for m in &modes {
            m.validate()?;
        }
        Ok(Self { modes })
    }

    /// Forcing acting on mode `k` (1-based) only.
    pub fn single(k: usize, profile: ModeForcing) -> Result<Self> {
        if k == 0 {
            return domain("mode indices start at 1");
        }
        let mut modes = vec![ModeForcing::Zero; k];
        modes[k - 1] = profile;
        Self::new(modes)
    }

    /// Profile of mode `k` (1-based).
    pub fn mode(&self, k: usize) -> &ModeForcing {
        static ZERO: ModeForcing = ModeForcing::Zero;
        self.modes.get(k.wrapping_sub(1)).unwrap_or(&ZERO)
    }

    pub fn n_stored(&self) -> usize {
        self.modes.len()
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(ModeForcing::is_zero)
    }

    /// `(f_1(t), …, f_len(t))`.
    pub fn coeffs_at(&self, t: f64, len: usize) -> Result<CoeffVector> {
        CoeffVector::new((1..=len).map(|k| self.mode(k).eval(t)).collect())
    }

    /// `max_j ‖f(t_j)‖_{D(A^ε)}` over the nodes of `grid`. A finite-truncation
    /// diagnostic for the regularity the Duhamel estimate asks of `f`.
    pub fn max_sobolev_norm(&self, spectrum: &Spectrum, grid: &TimeGrid, eps: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for t in grid.nodes() {
            let c = self.coeffs_at(t, spectrum.len())?;
            worst = worst.max(spectrum.sobolev_norm(&c, eps)?);
        }
        Ok(worst)
    }
}

/// A full problem instance in coefficient space.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalSpec {
    pub params: FracParams,
    pub beta: f64,
    pub t0: f64,
    pub t_end: f64,
    pub phi: CoeffVector,
    pub forcing: Forcing,
}

impl NonlocalSpec {
    pub fn new(
        params: FracParams,
        beta: f64,
        t0: f64,
        t_end: f64,
        phi: CoeffVector,
        forcing: Forcing,
    ) -> Result<Self> {
        if !beta.is_finite() {
            return domain(format!("beta must be finite, got {beta}"));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return domain(format!("T must be positive, got {t_end}"));
        }
        if !(t0 > 0.0 && t0 <= t_end) {
            return domain(format!("t0 must lie in (0, T] = (0, {t_end}], got {t0}"));
        }
        for k in 1..=forcing.n_stored() {
            forcing.mode(k).validate()?;
        }
        Ok(Self {
            params,
            beta,
            t0,
            t_end,
            phi,
            forcing,
        })
    }

    fn check_spectrum(&self, spectrum: &Spectrum) -> Result<()> {
        if self.phi.len() != spectrum.len() {
            return Err(Error::LengthMismatch {
                expected: spectrum.len(),
                got: self.phi.len(),
            });
        }
        if (spectrum.len() + 1..=self.forcing.n_stored()).any(|k| !self.forcing.mode(k).is_zero()) {
            return domain("forcing acts on modes beyond the truncated spectrum");
        }
        Ok(())
    }

    fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        if (grid.t_end() - self.t_end).abs() > 1e-12 * self.t_end {
            return domain(format!(
                "time grid ends at {}, problem at T = {}",
                grid.t_end(),
                self.t_end
            ));
        }
        Ok(())
    }
}

/// Tolerances for the nonlocal solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub quad: QuadConfig,
    /// `k ∈ K₀` iff `|B(λ_k, t₀) − β| ≤ k0_tol`.
    pub k0_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let quad = QuadConfig::default();
        Self {
            k0_tol: 10.0 * quad.rel_tol,
            quad,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.quad.validate()?;
        if !(self.k0_tol > 0.0 && self.k0_tol.is_finite()) {
            return domain(format!("k0_tol must be positive, got {}", self.k0_tol));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeTag {
    UniquelySolvable,
    /// `β = 0`: solvable but unstable.
    BackwardIllPosed,
    ResonantK0,
}

/// A mode whose gap lies in `(k0_tol, 10·k0_tol]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearResonance {
    pub k: usize,
    pub gap: f64,
    pub amplification: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    /// Resonant mode indices, 1-based.
    pub k0_set: Vec<usize>,
    /// `min_k |B(λ_k, t₀) − β|`.
    pub min_gap: f64,
    pub k0_tol: f64,
    /// `B(λ_k, t₀)` per mode.
    pub b_at_t0: Vec<f64>,
    pub warnings: Vec<NearResonance>,
}

impl Regime {
    pub fn is_resonant(&self, k: usize) -> bool {
        self.k0_set.binary_search(&k).is_ok()
    }
}

fn kernel_at(params: &FracParams, lambdas: &[f64], t: f64, cfg: &QuadConfig) -> Result<Vec<f64>> {
    lambdas
        .par_iter()
        .map(|&l| Ok(eval_b(params, l, t, cfg)?.value))
        .collect()
}

/// Evaluates `B(λ_k, t₀)` on every mode and sorts the problem into one of the
/// three regimes.
pub fn classify(spec: &NonlocalSpec, spectrum: &Spectrum, cfg: &SolverConfig) -> Result<Regime> {
    cfg.validate()?;
    let b = kernel_at(&spec.params, &spectrum.lambdas(), spec.t0, &cfg.quad)?;
    let beta = spec.beta;
    let gaps: Vec<f64> = b.iter().map(|&x| (x - beta).abs()).collect();
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    // 0 < B < 1, so only β in (0, 1) can meet the spectrum
    let may_resonate = beta > 0.0 && beta < 1.0;
    let k0_set: Vec<usize> = if may_resonate {
        (1..=gaps.len())
            .filter(|&k| gaps[k - 1] <= cfg.k0_tol)
            .collect()
    } else {
        Vec::new()
    };
    let warnings = (1..=gaps.len())
        .filter(|&k| gaps[k - 1] > cfg.k0_tol && gaps[k - 1] <= 10.0 * cfg.k0_tol)
        .map(|k| NearResonance {
            k,
            gap: gaps[k - 1],
            amplification: 1.0 / gaps[k - 1],
        })
        .collect();
    let tag = if beta == 0.0 {
        RegimeTag::BackwardIllPosed
    } else if k0_set.is_empty() {
        RegimeTag::UniquelySolvable
    } else {
        RegimeTag::ResonantK0
    };
    Ok(Regime {
        tag,
        k0_set,
        min_gap,
        k0_tol: cfg.k0_tol,
        b_at_t0: b,
        warnings,
    })
}

/// The Duhamel parts `ω_k` on the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaTable {
    grid: TimeGrid,
    values: Vec<Vec<f64>>,
    at_t0: Vec<f64>,
}

impl OmegaTable {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    /// `ω_k` on the grid nodes, `k` 1-based.
    pub fn mode(&self, k: usize) -> &[f64] {
        &self.values[k - 1]
    }

    /// `ω_k(t₀)`, the value entering `ψ_k`.
    pub fn at_t0(&self, k: usize) -> f64 {
        self.at_t0[k - 1]
    }
}

/// Computes `ω_k(t) = ∫₀^t B(λ_k, t−τ) f_k(τ) dτ` for every mode on every node
/// of `grid`, plus `ω_k(t₀)`.
pub fn solve_inhomogeneous(
    spec: &NonlocalSpec,
    spectrum: &Spectrum,
    grid: &TimeGrid,
    cfg: &SolverConfig,
) -> Result<OmegaTable> {
    cfg.validate()?;
    spec.check_spectrum(spectrum)?;
    spec.check_grid(grid)?;
    let t0_node = grid.index_of(spec.t0);
    let per_mode: Vec<(Vec<f64>, f64)> = spectrum
        .modes()
        .par_iter()
        .map(|m| {
            let f = spec.forcing.mode(m.k);
            if f.is_zero() {
                return Ok((vec![0.0; grid.n_steps() + 1], 0.0));
            }
            let values = duhamel_on_grid(&spec.params, m.lambda, grid, |t| f.eval(t), &cfg.quad)?;
            let w0 = match t0_node {
                Some(j) => values[j],
                None => duhamel(&spec.params, m.lambda, spec.t0, |t| f.eval(t), &cfg.quad)?,
            };
            Ok((values, w0))
        })
        .collect::<Result<_>>()?;
    let (values, at_t0) = per_mode.into_iter().unzip();
    Ok(OmegaTable {
        grid: *grid,
        values,
        at_t0,
    })
}

/// Per-mode data of the solution: `u_k(t) = h_k B(λ_k, t) + ω_k(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSeries {
    params: FracParams,
    quad: QuadConfig,
    lambdas: Vec<f64>,
    h: Vec<f64>,
    free_indices: Vec<usize>,
    forcing: Forcing,
    b_cache: Option<(TimeGrid, Vec<Vec<f64>>)>,
}

impl SolutionSeries {
    /// `h_k = T_k(0)` for all modes.
    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// Resonant modes whose `h_k` came from the caller (1-based).
    pub fn free_indices(&self) -> &[usize] {
        &self.free_indices
    }

    pub fn params(&self) -> &FracParams {
        &self.params
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    pub fn quad_config(&self) -> &QuadConfig {
        &self.quad
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Samples `B(λ_k, ·)` on `grid` for the modes with `h_k ≠ 0`, so that
    /// later evaluations on grid nodes avoid quadrature.
    pub fn cache_kernel(&mut self, grid: &TimeGrid) -> Result<()> {
        let nodes: Vec<f64> = grid.nodes().collect();
        let cache = self
            .lambdas
            .par_iter()
            .zip(&self.h)
            .map(|(&l, &h)| {
                if h == 0.0 {
                    return Ok(Vec::new());
                }
                nodes
                    .iter()
                    .map(|&t| Ok(eval_b(&self.params, l, t, &self.quad)?.value))
                    .collect()
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        self.b_cache = Some((*grid, cache));
        Ok(())
    }

    fn kernel(&self, k: usize, t: f64) -> Result<f64> {
        if let Some((grid, cache)) = &self.b_cache {
            if let Some(j) = grid.index_of(t) {
                if let Some(&v) = cache[k - 1].get(j) {
                    return Ok(v);
                }
            }
        }
        Ok(eval_b(&self.params, self.lambdas[k - 1], t, &self.quad)?.value)
    }

    fn omega(&self, omega: Option<&OmegaTable>, k: usize, t: f64) -> Result<f64> {
        let Some(table) = omega else { return Ok(0.0) };
        let f = self.forcing.mode(k);
        if f.is_zero() || t == 0.0 {
            return Ok(0.0);
        }
        if let Some(j) = table.grid.index_of(t) {
            return Ok(table.values[k - 1][j]);
        }
        duhamel(
            &self.params,
            self.lambdas[k - 1],
            t,
            |s| f.eval(s),
            &self.quad,
        )
    }

    /// `u_k(t)`. Without an ω table this is the homogeneous part only.
    pub fn coefficient(&self, omega: Option<&OmegaTable>, k: usize, t: f64) -> Result<f64> {
        if k == 0 || k > self.len() {
            return domain(format!("mode {k} outside 1..={}", self.len()));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return domain(format!("t must be non-negative, got {t}"));
        }
        let h = self.h[k - 1];
        let w = if h == 0.0 {
            0.0
        } else {
            h * self.kernel(k, t)?
        };
        Ok(w + self.omega(omega, k, t)?)
    }

    pub fn coefficients(&self, omega: Option<&OmegaTable>, t: f64) -> Result<CoeffVector> {
        let v = (1..=self.len())
            .map(|k| self.coefficient(omega, k, t))
            .collect::<Result<Vec<f64>>>()?;
        CoeffVector::new(v)
    }

    /// `u_k` on every node of `grid`.
    pub fn trajectory(
        &self,
        omega: Option<&OmegaTable>,
        k: usize,
        grid: &TimeGrid,
    ) -> Result<Vec<f64>> {
        grid.nodes()
            .map(|t| self.coefficient(omega, k, t))
            .collect()
    }
}

/// Where to evaluate a solution.
#[derive(Debug, Clone, Copy)]
pub enum Probe<'a> {
    Mode(usize),
    Point(&'a Spectrum, &'a [f64]),
}

/// `u_k(t)` for a mode, or `u(t, x)` synthesized from the eigenfunctions.
pub fn evaluate(
    sol: &SolutionSeries,
    omega: Option<&OmegaTable>,
    t: f64,
    probe: Probe<'_>,
) -> Result<f64> {
    match probe {
        Probe::Mode(k) => sol.coefficient(omega, k, t),
        Probe::Point(spectrum, x) => spectrum.synthesize(&sol.coefficients(omega, t)?, x),
    }
}

/// Solves the homogeneous nonlocal problem `w(t₀) = βw(0) + ψ`.
///
/// `free_values` sets `h_k` on resonant modes (default 0).
pub fn solve_homogeneous(
    psi: &CoeffVector,
    spec: &NonlocalSpec,
    spectrum: &Spectrum,
    regime: &Regime,
    free_values: &[(usize, f64)],
    cfg: &SolverConfig,
) -> Result<SolutionSeries> {
    if psi.len() != spectrum.len() {
        return Err(Error::LengthMismatch {
            expected: spectrum.len(),
            got: psi.len(),
        });
    }
    if regime.b_at_t0.len() != spectrum.len() {
        return domain("regime was computed for a different spectrum");
    }
    for &(k, v) in free_values {
        if !regime.is_resonant(k) {
            return Err(Error::FreeValueOutsideKernel(k));
        }
        if !v.is_finite() {
            return domain(format!("free value for mode {k} is not finite"));
        }
    }
    let tolerance = ORTHOGONALITY_RTOL * psi.norm();
    let offending: Vec<OffendingMode> = regime
        .k0_set
        .iter()
        .map(|&k| OffendingMode { k, psi: psi.get(k) })
        .filter(|m| m.psi.abs() > tolerance)
        .collect();
    if !offending.is_empty() {
        return Err(Error::OrthogonalityViolation {
            modes: offending,
            tolerance,
        });
    }
    let h = (1..=spectrum.len())
        .map(|k| {
            if regime.is_resonant(k) {
                free_values
                    .iter()
                    .rev()
                    .find(|&&(j, _)| j == k)
                    .map_or(0.0, |&(_, v)| v)
            } else {
                // + 0.0 turns -0.0 into 0.0
                psi.get(k) / (regime.b_at_t0[k - 1] - spec.beta) + 0.0
            }
        })
        .collect();
    let mut free_indices: Vec<usize> = free_values.iter().map(|&(k, _)| k).collect();
    free_indices.sort_unstable();
    free_indices.dedup();
    Ok(SolutionSeries {
        params: spec.params,
        quad: cfg.quad,
        lambdas: spectrum.lambdas(),
        h,
        free_indices,
        forcing: spec.forcing.clone(),
        b_cache: None,
    })
}

/// Everything [`solve_nonlocal`] produces.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalSolution {
    pub series: SolutionSeries,
    pub omega: OmegaTable,
    pub regime: Regime,
    /// `ψ = φ − ω(t₀)`.
    pub psi: CoeffVector,
}

impl NonlocalSolution {
    pub fn coefficient(&self, k: usize, t: f64) -> Result<f64> {
        self.series.coefficient(Some(&self.omega), k, t)
    }

    pub fn trajectory(&self, k: usize) -> Result<Vec<f64>> {
        self.series
            .trajectory(Some(&self.omega), k, &self.omega.grid)
    }
}

/// Solves the full problem on `grid`: ω by Duhamel, then the homogeneous
/// nonlocal problem for `ψ = φ − ω(t₀)`.
pub fn solve_nonlocal(
    spec: &NonlocalSpec,
    spectrum: &Spectrum,
    grid: &TimeGrid,
    cfg: &SolverConfig,
    free_values: &[(usize, f64)],
) -> Result<NonlocalSolution> {
    let regime = classify(spec, spectrum, cfg)?;
    let omega = solve_inhomogeneous(spec, spectrum, grid, cfg)?;
    let psi = CoeffVector::new(
        (1..=spectrum.len())
            .map(|k| spec.phi.get(k) - omega.at_t0(k))
            .collect(),
    )?;
    let mut series = solve_homogeneous(&psi, spec, spectrum, &regime, free_values, cfg)?;
    series.cache_kernel(grid)?;
    Ok(NonlocalSolution {
        series,
        omega,
        regime,
        psi,
    })
}

/// Refinement check on `sup_t ‖u(t)‖` for continuity in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityCheck {
    pub sup_norm: f64,
    pub sup_norm_refined: f64,
    pub relative_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `max_k |u_k(t₀) − βu_k(0) − φ_k|`.
    pub nonlocal_residual: f64,
    /// The same, each mode scaled by `max(1, |φ_k|)`.
    pub nonlocal_residual_scaled: f64,
    /// Interior max of the discrete equation residual, per mode.
    pub equation_residual: Vec<f64>,
    /// As above on the grid with half the step.
    pub equation_residual_refined: Vec<f64>,
    pub n_steps: usize,
    pub continuity: ContinuityCheck,
}

impl ResidualReport {
    pub fn max_equation_residual(&self) -> f64 {
        self.equation_residual.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_equation_residual_refined(&self) -> f64 {
        self.equation_residual_refined
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }
}

/// Trajectories of every mode on `grid`, with ω recomputed there when
/// `forced`.
fn trajectories_on(
    sol: &SolutionSeries,
    spec: &NonlocalSpec,
    spectrum: &Spectrum,
    grid: &TimeGrid,
    forced: bool,
) -> Result<Vec<Vec<f64>>> {
    let omega = if forced {
        let cfg = SolverConfig {
            quad: sol.quad,
            ..SolverConfig::default()
        };
        Some(solve_inhomogeneous(spec, spectrum, grid, &cfg)?)
    } else {
        None
    };
    let mut local = sol.clone();
    local.cache_kernel(grid)?;
    (1..=sol.len())
        .map(|k| local.trajectory(omega.as_ref(), k, grid))
        .collect()
}

/// `max_{t_j ≥ T/10} |δu_j + λ(u_j + γ ∂^α u_j) − f(t_j)|` with a backward
/// difference and the Grünwald-Letnikov derivative.
fn equation_residual(
    params: &FracParams,
    lambda: f64,
    forcing: &ModeForcing,
    grid: &TimeGrid,
    u: Vec<f64>,
) -> Result<f64> {
    let h = grid.step();
    let series = TimeSeries::new(*grid, u)?;
    let frac = rl_derivative(&series, params.alpha())?;
    let u = series.values();
    let first = grid.n_steps().div_ceil(10).max(1);
    Ok((first..=grid.n_steps())
        .map(|j| {
            let du = (u[j] - u[j - 1]) / h;
            let r = du + lambda * (u[j] + params.gamma() * frac.values()[j])
                - forcing.eval(grid.node(j));
            r.abs()
        })
        .fold(0.0, f64::max))
}

fn sup_norm(traj: &[Vec<f64>]) -> f64 {
    let n = traj.first().map_or(0, Vec::len);
    (0..n)
        .map(|j| traj.iter().map(|u| u[j] * u[j]).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Checks a computed solution against the problem it claims to solve.
///
/// Without an ω table the solution is taken as homogeneous: `spec.phi` then
/// plays the role of `ψ` and the forcing is ignored.
pub fn verify_solution(
    sol: &SolutionSeries,
    omega: Option<&OmegaTable>,
    spec: &NonlocalSpec,
    spectrum: &Spectrum,
    oracle_grid: &TimeGrid,
) -> Result<ResidualReport> {
    if oracle_grid.n_steps() < 1024 {
        return domain(format!(
            "verification grid needs at least 1024 steps, got {}",
            oracle_grid.n_steps()
        ));
    }
    spec.check_spectrum(spectrum)?;
    if sol.len() != spectrum.len() {
        return Err(Error::LengthMismatch {
            expected: spectrum.len(),
            got: sol.len(),
        });
    }
    let mut nonlocal: f64 = 0.0;
    let mut scaled: f64 = 0.0;
    for k in 1..=sol.len() {
        let phi = spec.phi.get(k);
        let r = (sol.coefficient(omega, k, spec.t0)?
            - spec.beta * sol.coefficient(omega, k, 0.0)?
            - phi)
            .abs();
        nonlocal = nonlocal.max(r);
        scaled = scaled.max(r / phi.abs().max(1.0));
    }
    let fine = oracle_grid.refined();
    let mut per_grid = Vec::with_capacity(2);
    let mut sups = Vec::with_capacity(2);
    for grid in [oracle_grid, &fine] {
        let traj = trajectories_on(sol, spec, spectrum, grid, omega.is_some())?;
        sups.push(sup_norm(&traj));
        let res = traj
            .into_par_iter()
            .enumerate()
            .map(|(i, u)| {
                let f = if omega.is_some() {
                    spec.forcing.mode(i + 1).clone()
                } else {
                    ModeForcing::Zero
                };
                equation_residual(&spec.params, sol.lambdas[i], &f, grid, u)
            })
            .collect::<Result<Vec<f64>>>()?;
        per_grid.push(res);
    }
    let refined = per_grid.pop().unwrap_or_default();
    let coarse = per_grid.pop().unwrap_or_default();
    let change = (sups[1] - sups[0]).abs();
    Ok(ResidualReport {
        nonlocal_residual: nonlocal,
        nonlocal_residual_scaled: scaled,
        equation_residual: coarse,
        equation_residual_refined: refined,
        n_steps: oracle_grid.n_steps(),
        continuity: ContinuityCheck {
            sup_norm: sups[0],
            sup_norm_refined: sups[1],
            relative_change: if sups[1] > 0.0 { change / sups[1] } else { 0.0 },
        },
    })
}
