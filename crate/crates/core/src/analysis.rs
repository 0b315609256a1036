//! Batch checks of the kernel bounds, conditioning of the nonlocal solve
//! across β, sign scans for `∂_λ B`, and fitted coercive constants.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{domain, Result};
use crate::kernel::{
    duhamel_on_grid, eval_b, eval_db_dlambda, eval_db_dt, lower_bound_constant, time_integral_b,
    FracParams, QuadConfig,
};
use crate::nonlocal::{Forcing, ModeForcing, NonlocalSpec, SolutionSeries, SolverConfig};
use crate::oracle::{rl_derivative, TimeGrid, TimeSeries};
use crate::spectrum::{CoeffVector, Spectrum};

/// Absolute slack on bounds with explicit constants.
pub const BOUND_SLACK: f64 = 1e-8;

/// Largest relative change of a fitted constant under one grid refinement.
pub const MAX_FIT_DRIFT: f64 = 0.1;

/// Outcome of checking one inequality over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub id: String,
    pub statement: String,
    pub grid: String,
    pub points: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    /// The explicit constant of the bound, when it has one.
    pub constant: Option<f64>,
    /// Empirical constant for bounds without an explicit one.
    pub fitted_constant: Option<f64>,
    /// The same fit on the refined grid.
    pub fitted_constant_refined: Option<f64>,
    pub pass: bool,
}

impl BoundReport {
    fn hard(
        id: &str,
        statement: &str,
        grid: String,
        points: usize,
        violation: f64,
        constant: Option<f64>,
    ) -> Self {
        Self {
            id: id.into(),
            statement: statement.into(),
            grid,
            points,
            max_violation: violation,
            tolerance: BOUND_SLACK,
            constant,
            fitted_constant: None,
            fitted_constant_refined: None,
            pass: violation <= BOUND_SLACK,
        }
    }

    fn fitted(
        id: &str,
        statement: &str,
        grid: String,
        points: usize,
        coarse: f64,
        fine: Option<f64>,
    ) -> Self {
        let drift = match fine {
            Some(f) if coarse > 0.0 => (f - coarse).abs() / coarse,
            Some(0.0) => 0.0,
            Some(_) => f64::INFINITY,
            None => 0.0,
        };
        let drift = if coarse.is_finite() {
            drift
        } else {
            f64::INFINITY
        };
        Self {
            id: id.into(),
            statement: statement.into(),
            grid,
            points,
            max_violation: drift,
            tolerance: if fine.is_some() { MAX_FIT_DRIFT } else { 0.0 },
            constant: None,
            fitted_constant: Some(coarse),
            fitted_constant_refined: fine,
            pass: drift <= if fine.is_some() { MAX_FIT_DRIFT } else { 0.0 },
        }
    }

    /// Relative change of the fitted constant under refinement.
    pub fn drift(&self) -> Option<f64> {
        self.fitted_constant_refined.map(|_| self.max_violation)
    }
}

fn describe(values: &[f64]) -> String {
    match values {
        [] => "[]".into(),
        [x] => format!("[{x}]"),
        [a, .., b] => format!("{} points in [{a}, {b}]", values.len()),
    }
}

fn check_grid(name: &str, grid: &[f64], min: f64) -> Result<()> {
    if grid.is_empty() {
        return domain(format!("{name} grid is empty"));
    }
    if grid.iter().any(|&x| !(x >= min && x.is_finite())) {
        return domain(format!("{name} grid must be finite and >= {min}"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return domain(format!("{name} grid must be strictly increasing"));
    }
    Ok(())
}

/// The default λ grid: 25 log-spaced points on `[1, 10⁴]`.
pub fn default_lambda_grid() -> Vec<f64> {
    log_grid(1.0, 1e4, 25)
}

/// The default t grid.
pub fn default_t_grid() -> Vec<f64> {
    vec![0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0]
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            i if i + 1 == n => hi,
            i => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// Checks the kernel bounds on the product grid `lambda_grid × t_grid`.
///
/// `t_end` is the horizon of the integral bound and of the lower bound; the
/// lower-bound constant is taken with `λ₁ = min(lambda_grid)`.
pub fn verify_kernel_bounds(
    params: &FracParams,
    lambda_grid: &[f64],
    t_grid: &[f64],
    t_end: f64,
    cfg: &QuadConfig,
) -> Result<Vec<BoundReport>> {
    check_grid("lambda", lambda_grid, f64::MIN_POSITIVE)?;
    check_grid("t", t_grid, 0.0)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return domain(format!("T must be positive, got {t_end}"));
    }
    let alpha = params.alpha();
    // (B, ∂_t B) per λ row, ∂_t B = NaN at t = 0
    let rows: Vec<Vec<(f64, f64)>> = lambda_grid
        .par_iter()
        .map(|&l| {
            t_grid
                .iter()
                .map(|&t| {
                    let b = eval_b(params, l, t, cfg)?.value;
                    let d = if t > 0.0 {
                        eval_db_dt(params, l, t, cfg)?.value
                    } else {
                        f64::NAN
                    };
                    Ok((b, d))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let integrals: Vec<f64> = lambda_grid
        .par_iter()
        .map(|&l| Ok(time_integral_b(params, l, t_end, cfg)?.value))
        .collect::<Result<_>>()?;
    let grid = format!("lambda {} x t {}", describe(lambda_grid), describe(t_grid));
    let points = lambda_grid.len() * t_grid.len();

    let mut range: f64 = 0.0;
    let mut sign: f64 = 0.0;
    let mut shape: f64 = 0.0;
    let mut slope: f64 = 0.0;
    let c33 = gamma(2.0 - alpha) / (params.gamma() * std::f64::consts::PI * params.sin_alpha_pi());
    let lambda1 = lambda_grid[0];
    let c34 = lower_bound_constant(params, lambda1, t_end, cfg)?;
    let mut lower: f64 = 0.0;
    for (&l, row) in lambda_grid.iter().zip(&rows) {
        for (i, (&t, &(b, d))) in t_grid.iter().zip(row).enumerate() {
            if t == 0.0 {
                range = range.max((b - 1.0).abs());
            } else {
                range = range.max(-b).max(b - 1.0);
                sign = sign.max(d);
                shape = shape.max(l * b / t.recip().min(t.powf(alpha - 1.0)));
                slope = slope.max(d.abs() * l * t.powf(2.0 - alpha) - c33);
            }
            if i > 0 {
                sign = sign.max(b - row[i - 1].0);
            }
            if t <= t_end {
                lower = lower.max(c34 / l - b);
            }
        }
    }
    let integral = lambda_grid
        .iter()
        .zip(&integrals)
        .map(|(&l, &i)| i - 1.0 / l)
        .fold(0.0, f64::max);
    Ok(vec![
        BoundReport::hard(
            "lemma-3.1-1",
            "B(lambda,0) = 1 and 0 < B(lambda,t) < 1 for t > 0",
            grid.clone(),
            points,
            range,
            None,
        ),
        BoundReport::hard(
            "lemma-3.1-2",
            "dB/dt < 0 and B decreasing in t",
            grid.clone(),
            points,
            sign,
            None,
        ),
        BoundReport::fitted(
            "lemma-3.1-3",
            "lambda B(lambda,t) < C min(1/t, t^(alpha-1))",
            grid.clone(),
            points,
            shape,
            None,
        ),
        BoundReport::hard(
            "lemma-3.1-4",
            "int_0^T B(lambda,t) dt <= 1/lambda",
            format!("lambda {}, T = {t_end}", describe(lambda_grid)),
            lambda_grid.len(),
            integral,
            None,
        ),
        BoundReport::hard(
            "lemma-3.3",
            "|dB/dt| <= C / (lambda t^(2-alpha)), C = Gamma(2-alpha)/(gamma pi sin(alpha pi))",
            grid.clone(),
            points,
            slope,
            Some(c33),
        ),
        BoundReport::hard(
            "lemma-3.4",
            "B(lambda,t) >= C(alpha,gamma,lambda_1)/lambda on [0,T]",
            grid,
            points,
            lower,
            Some(c34),
        ),
    ])
}

/// One row of a [`ConditioningTable`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditioningRow {
    pub k: usize,
    pub lambda: f64,
    pub b_at_t0: f64,
    /// `B(λ_k, t₀) − β`.
    pub gap: f64,
    /// `1/|gap|`; infinite on resonant rows.
    pub amplification: f64,
    pub resonant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningTable {
    pub beta: f64,
    pub t0: f64,
    pub rows: Vec<ConditioningRow>,
    /// Least-squares slope of `ln amplification` against `ln λ_k`, for `β = 0`.
    pub loglog_slope: Option<f64>,
}

impl ConditioningTable {
    /// Largest amplification over the non-resonant rows.
    pub fn max_amplification(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| !r.resonant)
            .map(|r| r.amplification)
            .fold(0.0, f64::max)
    }
}

fn slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Per-mode conditioning `1/|B(λ_k, t₀) − β|` of the nonlocal solve.
pub fn amplification_spectrum(
    beta: f64,
    t0: f64,
    spectrum: &Spectrum,
    params: &FracParams,
    cfg: &SolverConfig,
) -> Result<ConditioningTable> {
    cfg.validate()?;
    if !beta.is_finite() {
        return domain(format!("beta must be finite, got {beta}"));
    }
    if !(t0 > 0.0 && t0.is_finite()) {
        return domain(format!("t0 must be positive, got {t0}"));
    }
    let b: Vec<f64> = spectrum
        .modes()
        .par_iter()
        .map(|m| Ok(eval_b(params, m.lambda, t0, &cfg.quad)?.value))
        .collect::<Result<_>>()?;
    let may_resonate = beta > 0.0 && beta < 1.0;
    let rows: Vec<ConditioningRow> = spectrum
        .modes()
        .iter()
        .zip(&b)
        .map(|(m, &b)| {
            let gap = b - beta;
            let resonant = may_resonate && gap.abs() <= cfg.k0_tol;
            ConditioningRow {
                k: m.k,
                lambda: m.lambda,
                b_at_t0: b,
                gap,
                amplification: if resonant {
                    f64::INFINITY
                } else {
                    1.0 / gap.abs()
                },
                resonant,
            }
        })
        .collect();
    let loglog_slope = if beta == 0.0 {
        let x: Vec<f64> = rows.iter().map(|r| r.lambda.ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.amplification.ln()).collect();
        slope(&x, &y)
    } else {
        None
    };
    Ok(ConditioningTable {
        beta,
        t0,
        rows,
        loglog_slope,
    })
}

/// Result of a sign scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Located {
    Found(f64),
    NotFound,
}

impl Located {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Found(v) => Some(v),
            Self::NotFound => None,
        }
    }
}

/// First index from which every flag is set.
fn suffix_start(flags: &[bool]) -> Option<usize> {
    let tail = flags.iter().rev().take_while(|&&f| f).count();
    (tail > 0).then(|| flags.len() - tail)
}

/// The smallest grid point from which `∂_λ B(λ, t₀) < 0` at every larger grid
/// point.
pub fn locate_lambda0(
    params: &FracParams,
    t0: f64,
    lambda_grid: &[f64],
    cfg: &QuadConfig,
) -> Result<Located> {
    check_grid("lambda", lambda_grid, f64::MIN_POSITIVE)?;
    if !(t0 > 0.0 && t0.is_finite()) {
        return domain(format!("t0 must be positive, got {t0}"));
    }
    if lambda_grid.len() < 2 {
        return Ok(Located::NotFound);
    }
    let negative: Vec<bool> = lambda_grid
        .par_iter()
        .map(|&l| Ok(eval_db_dlambda(params, l, t0, cfg)?.value < 0.0))
        .collect::<Result<_>>()?;
    Ok(suffix_start(&negative).map_or(Located::NotFound, |i| Located::Found(lambda_grid[i])))
}

/// The smallest `t ≥ 1` on the grid from which `∂_λ B(λ, t) < 0` for every
/// `λ ≥ λ₁` of `lambda_grid`, at that and every later grid time.
pub fn locate_t0(
    params: &FracParams,
    lambda1: f64,
    t_grid: &[f64],
    lambda_grid: &[f64],
    cfg: &QuadConfig,
) -> Result<Located> {
    check_grid("t", t_grid, f64::MIN_POSITIVE)?;
    if lambda_grid.is_empty() {
        return domain("lambda grid is empty");
    }
    check_grid("lambda", lambda_grid, f64::MIN_POSITIVE)?;
    if !(lambda1 > 0.0 && lambda1.is_finite()) {
        return domain(format!("lambda1 must be positive, got {lambda1}"));
    }
    if t_grid[t_grid.len() - 1] < 1.0 {
        return domain("t grid must reach t = 1");
    }
    let lambdas: Vec<f64> = lambda_grid
        .iter()
        .copied()
        .filter(|&l| l >= lambda1)
        .collect();
    if lambdas.is_empty() {
        return domain(format!("no grid point at or above lambda1 = {lambda1}"));
    }
    let times: Vec<f64> = t_grid.iter().copied().filter(|&t| t >= 1.0).collect();
    let ok: Vec<bool> = times
        .par_iter()
        .map(|&t| {
            for &l in &lambdas {
                if eval_db_dlambda(params, l, t, cfg)?.value >= 0.0 {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect::<Result<_>>()?;
    Ok(suffix_start(&ok).map_or(Located::NotFound, |i| Located::Found(times[i])))
}

/// Power of `t` in the coercive bounds for `w` and `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoerciveExponent {
    /// `t^{−2(1−α)}`, as stated for `w` alone.
    Stated,
    /// `t^{−2(2−α)}`, as stated for `u` and carried by the `∂_t w` estimate.
    Weak,
}

impl CoerciveExponent {
    pub fn power(self, alpha: f64) -> f64 {
        match self {
            Self::Stated => 2.0 * (1.0 - alpha),
            Self::Weak => 2.0 * (2.0 - alpha),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::Stated => "2(1-alpha)",
            Self::Weak => "2(2-alpha)",
        }
    }
}

/// What a coercive estimate is checked on.
#[derive(Debug, Clone, Copy)]
pub enum CoerciveInput<'a> {
    /// `w = Σ h_k B(λ_k, t) v_k` with data `ψ`:
    /// `‖∂_t w‖² + ‖Aw‖² + ‖∂^α Aw‖² ≤ C t^{−p} ‖ψ‖²`.
    Homogeneous {
        series: &'a SolutionSeries,
        psi: &'a CoeffVector,
        exponent: CoerciveExponent,
    },
    /// The Duhamel part of the forcing of `spec`:
    /// `‖∂_t ω‖² + ‖∂^α Aω‖² ≤ C max_t ‖f(t)‖²_ε`.
    Forced {
        spec: &'a NonlocalSpec,
        spectrum: &'a Spectrum,
        eps: f64,
        cfg: &'a QuadConfig,
    },
    /// The full solution `u = w + ω` of `spec`, with one constant for both
    /// data terms: `‖∂_t u‖² + ‖Au‖² + ‖∂^α Au‖² ≤ C (t^{−p} ‖φ‖² + max_t ‖f(t)‖²_ε)`.
    Full {
        series: &'a SolutionSeries,
        spec: &'a NonlocalSpec,
        spectrum: &'a Spectrum,
        eps: f64,
        exponent: CoerciveExponent,
    },
}

/// `|∂_t u_k|² + |λu_k|² + |λ∂^α u_k|²` at the grid nodes for
/// `u_k = h B(λ, t) + ω_k(t)`, with `∂_t B` exact and `∂_t ω` differenced.
fn mode_quantity(
    series: &SolutionSeries,
    lambda: f64,
    h: f64,
    forcing: Option<&ModeForcing>,
    grid: &TimeGrid,
) -> Result<Vec<f64>> {
    let params = series.params();
    let cfg = series.quad_config();
    let n = grid.n_steps();
    let mut u = vec![0.0; n + 1];
    let mut du = vec![0.0; n + 1];
    if h != 0.0 {
        for (j, t) in grid.nodes().enumerate() {
            u[j] = h * eval_b(params, lambda, t, cfg)?.value;
            if j > 0 {
                du[j] = h * eval_db_dt(params, lambda, t, cfg)?.value;
            }
        }
    }
    if let Some(f) = forcing.filter(|f| !f.is_zero()) {
        let omega = duhamel_on_grid(params, lambda, grid, |t| f.eval(t), cfg)?;
        for j in 1..=n {
            u[j] += omega[j];
            du[j] += (omega[j] - omega[j - 1]) / grid.step();
        }
    }
    let frac = rl_derivative(&TimeSeries::new(*grid, u.clone())?, params.alpha())?;
    Ok((0..=n)
        .map(|j| {
            if j == 0 {
                return 0.0;
            }
            let (au, fa) = (lambda * u[j], lambda * frac.values()[j]);
            du[j] * du[j] + au * au + fa * fa
        })
        .collect())
}

/// `max_t Σ_k q_k(t) / (t^{−p} data + extra)` over the grid nodes `t > 0`.
fn solution_fit(
    series: &SolutionSeries,
    forcing: Option<&Forcing>,
    data: f64,
    extra: f64,
    power: f64,
    grid: &TimeGrid,
) -> Result<f64> {
    let per_mode: Vec<Vec<f64>> = series
        .lambdas()
        .par_iter()
        .zip(series.h())
        .enumerate()
        .map(|(i, (&l, &h))| mode_quantity(series, l, h, forcing.map(|f| f.mode(i + 1)), grid))
        .collect::<Result<_>>()?;
    Ok((1..=grid.n_steps())
        .map(|j| {
            let q: f64 = per_mode.iter().map(|m| m[j]).sum();
            if q == 0.0 {
                return 0.0;
            }
            q / (grid.node(j).powf(-power) * data + extra)
        })
        .fold(0.0, f64::max))
}

fn forced_fit(
    spec: &NonlocalSpec,
    spectrum: &Spectrum,
    eps: f64,
    cfg: &QuadConfig,
    grid: &TimeGrid,
) -> Result<f64> {
    let fmax = spec.forcing.max_sobolev_norm(spectrum, grid, eps)?;
    if fmax == 0.0 {
        return Ok(0.0);
    }
    let params = &spec.params;
    let h = grid.step();
    let n = grid.n_steps();
    let per_mode: Vec<Vec<f64>> = spectrum
        .modes()
        .par_iter()
        .map(|m| {
            let f = spec.forcing.mode(m.k);
            if f.is_zero() {
                return Ok(vec![0.0; n + 1]);
            }
            let w = duhamel_on_grid(params, m.lambda, grid, |t| f.eval(t), cfg)?;
            let frac = rl_derivative(&TimeSeries::new(*grid, w.clone())?, params.alpha())?;
            let mut q = vec![0.0; n + 1];
            for (j, slot) in q.iter_mut().enumerate().skip(1) {
                let dt = (w[j] - w[j - 1]) / h;
                let fa = m.lambda * frac.values()[j];
                *slot = dt * dt + fa * fa;
            }
            Ok(q)
        })
        .collect::<Result<_>>()?;
    Ok((1..=n)
        .map(|j| per_mode.iter().map(|m| m[j]).sum::<f64>())
        .fold(0.0, f64::max)
        / (fmax * fmax))
}

/// Fits the constant of a coercive estimate on `grid` and on its refinement.
/// The report passes when the two fits differ by at most 10%.
pub fn coercive_report(input: CoerciveInput<'_>, grid: &TimeGrid) -> Result<BoundReport> {
    let fine = grid.refined();
    let desc = format!(
        "t in (0, {}], {} and {} steps",
        grid.t_end(),
        grid.n_steps(),
        fine.n_steps()
    );
    match input {
        CoerciveInput::Homogeneous {
            series,
            psi,
            exponent,
        } => {
            if psi.len() != series.len() {
                return Err(crate::Error::LengthMismatch {
                    expected: series.len(),
                    got: psi.len(),
                });
            }
            let norm2 = psi.norm().powi(2);
            let power = exponent.power(series.params().alpha());
            let fit = |g: &TimeGrid| solution_fit(series, None, norm2, 0.0, power, g);
            Ok(BoundReport::fitted(
                &format!("coercive-homogeneous-{exponent:?}").to_lowercase(),
                &format!(
                    "|w'|^2 + |Aw|^2 + |d^alpha Aw|^2 <= C t^(-{}) |psi|^2",
                    exponent.label()
                ),
                desc,
                grid.n_steps(),
                fit(grid)?,
                Some(fit(&fine)?),
            ))
        }
        CoerciveInput::Forced {
            spec,
            spectrum,
            eps,
            cfg,
        } => {
            if !(eps >= 0.0 && eps.is_finite()) {
                return domain(format!("epsilon must be non-negative, got {eps}"));
            }
            let c = forced_fit(spec, spectrum, eps, cfg, grid)?;
            let f = forced_fit(spec, spectrum, eps, cfg, &fine)?;
            Ok(BoundReport::fitted(
                "coercive-forced",
                "|omega'|^2 + |d^alpha A omega|^2 <= C max_t |f(t)|_eps^2",
                desc,
                grid.n_steps(),
                c,
                Some(f),
            ))
        }
        CoerciveInput::Full {
            series,
            spec,
            spectrum,
            eps,
            exponent,
        } => {
            if !(eps >= 0.0 && eps.is_finite()) {
                return domain(format!("epsilon must be non-negative, got {eps}"));
            }
            if series.len() != spectrum.len() {
                return Err(crate::Error::LengthMismatch {
                    expected: spectrum.len(),
                    got: series.len(),
                });
            }
            let norm2 = spec.phi.norm().powi(2);
            let power = exponent.power(spec.params.alpha());
            let fit = |g: &TimeGrid| {
                let fmax = spec.forcing.max_sobolev_norm(spectrum, g, eps)?;
                solution_fit(series, Some(&spec.forcing), norm2, fmax * fmax, power, g)
            };
            Ok(BoundReport::fitted(
                &format!("coercive-full-{exponent:?}").to_lowercase(),
                &format!(
                    "|u'|^2 + |Au|^2 + |d^alpha Au|^2 <= C (t^(-{}) |phi|^2 + max_t |f(t)|_eps^2)",
                    exponent.label()
                ),
                desc,
                grid.n_steps(),
                fit(grid)?,
                Some(fit(&fine)?),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlocal::{solve_nonlocal, Forcing, ModeForcing};

    fn params() -> FracParams {
        FracParams::new(0.5, 1.0).unwrap()
    }

    fn interval(k: usize) -> Spectrum {
        Spectrum::dirichlet_interval(std::f64::consts::PI, k).unwrap()
    }

    #[test]
    fn default_grid_bounds_pass() {
        let lambdas: Vec<f64> = (1..=100).map(f64::from).collect();
        let mut t = default_t_grid();
        t.insert(0, 0.0);
        let reports =
            verify_kernel_bounds(&params(), &lambdas, &t, 2.0, &QuadConfig::default()).unwrap();
        let ids: Vec<&str> = reports.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(
            ids,
            [
                "lemma-3.1-1",
                "lemma-3.1-2",
                "lemma-3.1-3",
                "lemma-3.1-4",
                "lemma-3.3",
                "lemma-3.4"
            ]
        );
        for r in &reports {
            assert!(r.pass, "{r:?}");
        }
        assert_eq!(reports[0].max_violation, 0.0);
        assert!(reports[5].constant.unwrap() > 0.0);
        assert!(reports[2].fitted_constant.unwrap().is_finite());
    }

    #[test]
    fn bad_grids_are_rejected() {
        let cfg = QuadConfig::default();
        assert!(verify_kernel_bounds(&params(), &[], &[1.0], 1.0, &cfg).is_err());
        assert!(verify_kernel_bounds(&params(), &[2.0, 1.0], &[1.0], 1.0, &cfg).is_err());
        assert!(verify_kernel_bounds(&params(), &[1.0], &[-1.0], 1.0, &cfg).is_err());
    }

    #[test]
    fn log_grid_end_points() {
        let g = log_grid(1.0, 1e4, 25);
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[24], 1e4);
        assert!((g[6] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn well_posed_amplification() {
        let sp = interval(20);
        let cfg = SolverConfig::default();
        let t = amplification_spectrum(2.0, 0.5, &sp, &params(), &cfg).unwrap();
        assert!(t.rows.iter().all(|r| r.amplification <= 1.0 && !r.resonant));
        assert!(t.loglog_slope.is_none());
        let t = amplification_spectrum(-1.0, 0.5, &sp, &params(), &cfg).unwrap();
        assert!(t.max_amplification() <= 1.0);
        let t = amplification_spectrum(1.0, 0.5, &sp, &params(), &cfg).unwrap();
        let bmax = t.rows.iter().map(|r| r.b_at_t0).fold(0.0, f64::max);
        assert!(t.max_amplification() <= 1.0 / (1.0 - bmax) * (1.0 + 1e-12));
    }

    #[test]
    fn backward_amplification_grows_linearly() {
        let sp = interval(50);
        let t = amplification_spectrum(0.0, 0.5, &sp, &params(), &SolverConfig::default()).unwrap();
        let s = t.loglog_slope.unwrap();
        assert!((0.9..=1.1).contains(&s), "{s}");
        let c = lower_bound_constant(&params(), 1.0, 0.5, &QuadConfig::default()).unwrap();
        for r in &t.rows {
            assert!(
                r.amplification >= 1.0 && r.amplification <= r.lambda / c,
                "{r:?}"
            );
        }
    }

    #[test]
    fn constructed_resonance_is_flagged() {
        let sp = interval(5);
        let beta = eval_b(&params(), 1.0, 0.5, &QuadConfig::default())
            .unwrap()
            .value;
        let t =
            amplification_spectrum(beta, 0.5, &sp, &params(), &SolverConfig::default()).unwrap();
        assert!(t.rows[0].resonant);
        assert!(t.rows[0].amplification.is_infinite());
        assert!(t.rows[1..]
            .iter()
            .all(|r| !r.resonant && r.amplification.is_finite()));
    }

    #[test]
    fn suffix_scan() {
        assert_eq!(suffix_start(&[false, true, false, true, true]), Some(3));
        assert_eq!(suffix_start(&[true, true]), Some(0));
        assert_eq!(suffix_start(&[true, false]), None);
        assert_eq!(suffix_start(&[]), None);
    }

    #[test]
    fn sign_scans() {
        let cfg = QuadConfig::default();
        let grid = log_grid(1.0, 1e5, 11);
        let l0 = locate_lambda0(&params(), 1.0, &grid, &cfg).unwrap();
        let v = l0.value().unwrap();
        assert!(grid.contains(&v));
        for &l in grid.iter().filter(|&&l| l >= v) {
            assert!(eval_db_dlambda(&params(), l, 1.0, &cfg).unwrap().value < 0.0);
        }
        assert_eq!(
            locate_lambda0(&params(), 1.0, &[3.0], &cfg).unwrap(),
            Located::NotFound
        );
        let times = [0.5, 1.0, 2.0, 4.0];
        let t0 = locate_t0(&params(), 1.0, &times, &grid, &cfg)
            .unwrap()
            .value()
            .unwrap();
        assert!(t0 >= 1.0);
        assert_eq!(
            locate_lambda0(&params(), t0, &grid, &cfg).unwrap(),
            Located::Found(1.0)
        );
        assert!(locate_t0(&params(), 1.0, &times, &[], &cfg).is_err());
    }

    #[test]
    fn coercive_fits() {
        let sp = interval(4);
        let cfg = SolverConfig::default();
        let grid = TimeGrid::new(1.0, 1024).unwrap();
        let coarse = TimeGrid::new(1.0, 10).unwrap();
        let zero = NonlocalSpec::new(
            params(),
            2.0,
            0.5,
            1.0,
            CoeffVector::zeros(4),
            Forcing::zero(),
        )
        .unwrap();
        let sol = solve_nonlocal(&zero, &sp, &coarse, &cfg, &[]).unwrap();
        let r = coercive_report(
            CoerciveInput::Homogeneous {
                series: &sol.series,
                psi: &sol.psi,
                exponent: CoerciveExponent::Weak,
            },
            &grid,
        )
        .unwrap();
        assert_eq!(r.fitted_constant, Some(0.0));
        assert!(r.pass);

        let single = NonlocalSpec::new(
            params(),
            2.0,
            0.5,
            1.0,
            CoeffVector::unit(4, 1, 1.0),
            Forcing::zero(),
        )
        .unwrap();
        let sol = solve_nonlocal(&single, &sp, &coarse, &cfg, &[]).unwrap();
        let r = coercive_report(
            CoerciveInput::Homogeneous {
                series: &sol.series,
                psi: &sol.psi,
                exponent: CoerciveExponent::Weak,
            },
            &grid,
        )
        .unwrap();
        assert!(r.pass && r.fitted_constant.unwrap() > 0.0, "{r:?}");

        let f = Forcing::single(2, ModeForcing::polynomial(&[1.0, -1.0, 2.0])).unwrap();
        let forced = NonlocalSpec::new(params(), 2.0, 0.5, 1.0, CoeffVector::zeros(4), f).unwrap();
        let r = coercive_report(
            CoerciveInput::Forced {
                spec: &forced,
                spectrum: &sp,
                eps: 0.5,
                cfg: &cfg.quad,
            },
            &grid,
        )
        .unwrap();
        assert!(r.pass && r.fitted_constant.unwrap().is_finite(), "{r:?}");

        let f = Forcing::single(2, ModeForcing::polynomial(&[1.0, -1.0, 2.0])).unwrap();
        let both =
            NonlocalSpec::new(params(), 2.0, 0.5, 1.0, CoeffVector::unit(4, 1, 1.0), f).unwrap();
        let sol = solve_nonlocal(&both, &sp, &coarse, &cfg, &[]).unwrap();
        let full = |exponent| {
            coercive_report(
                CoerciveInput::Full {
                    series: &sol.series,
                    spec: &both,
                    spectrum: &sp,
                    eps: 0.5,
                    exponent,
                },
                &grid,
            )
            .unwrap()
        };
        let weak = full(CoerciveExponent::Weak);
        assert_eq!(weak.id, "coercive-full-weak");
        assert!(weak.pass && weak.fitted_constant.unwrap() > 0.0, "{weak:?}");
        assert!(
            full(CoerciveExponent::Stated).fitted_constant.unwrap()
                >= weak.fitted_constant.unwrap()
        );
    }
}
