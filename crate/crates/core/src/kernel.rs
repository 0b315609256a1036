//! The relaxation kernel `B(λ, t)`: the solution of
//! `y' + λ(1 + γ ∂_t^α) y = 0`, `y(0) = 1`, evaluated through its Laplace
//! representation `B(λ, t) = ∫₀^∞ e^{-rt} b(λ, r) dr`.
//!
//! Every quadrature is truncated at a radius `R` chosen from an analytic
//! majorant of the integrand, so the reported error estimate covers both the
//! adaptive refinement error and the discarded tail.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{domain, Error, Result};
use crate::oracle::TimeGrid;
use crate::quad::{self, GaussLegendre, Tolerance};

/// Gauss-Legendre nodes per Duhamel panel.
const DUHAMEL_NODES: usize = 10;

/// The fractional model parameters `(α, γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracParams {
    alpha: f64,
    gamma: f64,
    #[serde(skip)]
    sin_ap: f64,
    #[serde(skip)]
    cos_ap: f64,
}

impl FracParams {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return domain(format!("alpha must lie in (0, 1), got {alpha}"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return domain(format!("gamma must be positive and finite, got {gamma}"));
        }
        Ok(Self {
            alpha,
            gamma,
            sin_ap: (alpha * PI).sin(),
            cos_ap: (alpha * PI).cos(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `sin(απ)`
    pub fn sin_alpha_pi(&self) -> f64 {
        self.sin_ap
    }

    /// Explicit constant of the derivative bound
    /// `|∂_t B(λ, t)| ≤ C / (λ t^{2-α})`, `C = Γ(2-α) / (γ π sin απ)`.
    pub fn dbdt_bound_constant(&self) -> f64 {
        gamma(2.0 - self.alpha) / (self.gamma * PI * self.sin_ap)
    }
}

impl<'de> Deserialize<'de> for FracParams {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            alpha: f64,
            gamma: f64,
        }
        let raw = Raw::deserialize(deserializer)?;
        FracParams::new(raw.alpha, raw.gamma).map_err(serde::de::Error::custom)
    }
}

/// How the truncation radius of the `r`-integrals is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailRule {
    /// Smallest radius whose analytic tail bound is at most half of `abs_tol`.
    Analytic,
    /// A fixed radius. Rejected at evaluation time when its tail bound
    /// exceeds half of `abs_tol`.
    Fixed { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub tail_cutoff: TailRule,
    pub duhamel_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_subdivisions: 200,
            tail_cutoff: TailRule::Analytic,
            duhamel_panels: 64,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return domain("rel_tol and abs_tol must be positive");
        }
        if self.max_subdivisions < 1 {
            return domain("max_subdivisions must be at least 1");
        }
        if self.duhamel_panels < 1 {
            return domain("duhamel_panels must be at least 1");
        }
        if let TailRule::Fixed { radius } = self.tail_cutoff {
            if !(radius > 1.0 && radius.is_finite()) {
                return domain("fixed tail radius must be finite and greater than 1");
            }
        }
        Ok(())
    }
}

/// A kernel quantity with its error estimate (refinement error plus tail bound).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    pub est_error: f64,
}

/// Majorant term `c · r^p · e^{-rt}` of an integrand on `r ≥ R`.
#[derive(Debug, Clone, Copy)]
struct Majorant {
    coeff: f64,
    power: f64,
}

impl Majorant {
    /// Upper bound of `∫_R^∞ c r^p e^{-rt} dr`.
    fn tail(&self, t: f64, radius: f64) -> f64 {
        let p = self.power;
        let decay = radius.powf(p) * (-radius * t).exp();
        if p <= 0.0 {
            self.coeff * decay / t
        } else if radius * t > p {
            self.coeff * decay / (t - p / radius)
        } else {
            f64::INFINITY
        }
    }
}

fn tail_bound(terms: &[Majorant], t: f64, radius: f64) -> f64 {
    terms.iter().map(|m| m.tail(t, radius)).sum()
}

/// Truncation radius and the tail bound it leaves.
fn truncation(terms: &[Majorant], t: f64, cfg: &QuadConfig) -> Result<(f64, f64)> {
    let target = 0.5 * cfg.abs_tol;
    match cfg.tail_cutoff {
        TailRule::Fixed { radius } => {
            let bound = tail_bound(terms, t, radius);
            if bound > target {
                return Err(Error::TailTooLarge {
                    radius,
                    bound,
                    abs_tol: cfg.abs_tol,
                });
            }
            Ok((radius, bound))
        }
        TailRule::Analytic => {
            let pmax = terms.iter().map(|m| m.power).fold(0.0, f64::max);
            let mut hi = (2.0 * (pmax + 1.0) / t).max(2.0);
            let mut lo = 1.0;
            while tail_bound(terms, t, hi) > target {
                lo = hi;
                hi *= 2.0;
                if !hi.is_finite() {
                    return domain("could not locate a truncation radius");
                }
            }
            if tail_bound(terms, t, lo) <= target {
                return Ok((lo, tail_bound(terms, t, lo)));
            }
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if tail_bound(terms, t, mid) > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok((hi, tail_bound(terms, t, hi)))
        }
    }
}

/// Split points on `[0, R]`: geometric toward 0 (the integrands behave like
/// `r^α` there), a break at `r = 1`, geometric out to `R`, plus a cluster
/// around the density peak `peak = (centre, half-width)` when given.
fn breakpoints(radius: f64, peak: Option<(f64, f64)>) -> Vec<f64> {
    let mut pts = vec![0.0];
    let mut x = 4f64.powi(-8);
    while x < 1.0 {
        pts.push(x);
        x *= 4.0;
    }
    pts.push(1.0);
    let mut x = 4.0;
    while x < radius {
        pts.push(x);
        x *= 4.0;
    }
    if let Some((centre, width)) = peak {
        pts.push(centre);
        for k in [1.0, 4.0, 16.0] {
            pts.push(centre - k * width);
            pts.push(centre + k * width);
        }
    }
    pts.retain(|&x| x >= 0.0 && x < radius);
    if radius > 1.0 {
        pts.push(radius);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Location and half-width of the peak of `b(λ, ·)`: the unique root of
/// `r - λγ r^α cos απ - λ` and the imaginary part of the denominator there.
fn density_peak(params: &FracParams, lambda: f64) -> (f64, f64) {
    let g = |r: f64| r - lambda * params.gamma * r.powf(params.alpha) * params.cos_ap - lambda;
    let mut lo = 0.0;
    let mut hi = lambda.max(1e-300);
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let centre = 0.5 * (lo + hi);
    let width = lambda * params.gamma * centre.powf(params.alpha) * params.sin_ap;
    (centre, width)
}

fn integrate_truncated<F>(
    f: F,
    majorants: &[Majorant],
    peak: Option<(f64, f64)>,
    t: f64,
    abs_tol: f64,
    cfg: &QuadConfig,
) -> Result<KernelValue>
where
    F: FnMut(f64) -> f64,
{
    cfg.validate()?;
    let (radius, tail) = truncation(majorants, t, cfg)?;
    let tol = Tolerance {
        abs: 0.5 * abs_tol,
        rel: 0.5 * cfg.rel_tol,
        max_subdivisions: cfg.max_subdivisions,
    };
    let est = quad::adaptive(f, &breakpoints(radius, peak), tol)?;
    Ok(KernelValue {
        value: est.value,
        est_error: est.error + tail,
    })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("lambda must be positive and finite, got {lambda}"));
    }
    Ok(())
}

#[inline]
fn density_unchecked(p: &FracParams, lambda: f64, r: f64) -> f64 {
    let ra = r.powf(p.alpha);
    let lg = lambda * p.gamma * ra;
    let re = -r + lg * p.cos_ap + lambda;
    let im = lg * p.sin_ap;
    p.gamma / PI * lambda * ra * p.sin_ap / (re * re + im * im)
}

/// Spectral density `b(λ, r)` of the kernel.
pub fn density(params: &FracParams, lambda: f64, r: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(r > 0.0 && r.is_finite()) {
        return domain(format!("r must be positive and finite, got {r}"));
    }
    Ok(density_unchecked(params, lambda, r))
}

/// `b(λ, r) ≤ r^{-α} / (π γ λ sin απ)` for every `r > 0`.
fn density_majorant(params: &FracParams, lambda: f64) -> Majorant {
    Majorant {
        coeff: 1.0 / (PI * params.gamma * lambda * params.sin_ap),
        power: -params.alpha,
    }
}

/// `B(λ, t)`. Exactly 1 at `t = 0`.
pub fn eval_b(params: &FracParams, lambda: f64, t: f64, cfg: &QuadConfig) -> Result<KernelValue> {
    check_lambda(lambda)?;
    if !(t >= 0.0 && t.is_finite()) {
        return domain(format!("t must be non-negative and finite, got {t}"));
    }
    if t == 0.0 {
        return Ok(KernelValue {
            value: 1.0,
            est_error: 0.0,
        });
    }
    integrate_truncated(
        |r| (-r * t).exp() * density_unchecked(params, lambda, r),
        &[density_majorant(params, lambda)],
        Some(density_peak(params, lambda)),
        t,
        cfg.abs_tol,
        cfg,
    )
}

/// `∂_t B(λ, t) = -∫₀^∞ r e^{-rt} b(λ, r) dr` for `t > 0`.
pub fn eval_db_dt(
    params: &FracParams,
    lambda: f64,
    t: f64,
    cfg: &QuadConfig,
) -> Result<KernelValue> {
    check_lambda(lambda)?;
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("t must be positive and finite, got {t}"));
    }
    let m = density_majorant(params, lambda);
    let kv = integrate_truncated(
        |r| r * (-r * t).exp() * density_unchecked(params, lambda, r),
        &[Majorant {
            coeff: m.coeff,
            power: m.power + 1.0,
        }],
        Some(density_peak(params, lambda)),
        t,
        cfg.abs_tol,
        cfg,
    )?;
    Ok(KernelValue {
        value: -kv.value,
        est_error: kv.est_error,
    })
}

/// `∂_λ B(λ, t₀)` through the scaled density `b₁ = λ b`:
///
/// `∂_λ B = -λ⁻² ∫ e^{-t₀r} b₁ dr + 2λ⁻³ ∫ e^{-t₀r} b₁ · r(r/λ - γr^α cos απ - 1) / D₁ dr`
///
/// with `D₁ = (-r/λ + γ r^α cos απ + 1)² + (γ r^α sin απ)²`. The error
/// target is `max(abs_tol, rel_tol · B/λ)`.
pub fn eval_db_dlambda(
    params: &FracParams,
    lambda: f64,
    t0: f64,
    cfg: &QuadConfig,
) -> Result<KernelValue> {
    check_lambda(lambda)?;
    if !(t0 > 0.0 && t0.is_finite()) {
        return domain(format!("t0 must be positive and finite, got {t0}"));
    }
    let (g, s, c) = (params.gamma, params.sin_ap, params.cos_ap);
    let integrand = |r: f64| {
        let ra = r.powf(params.alpha);
        let re = -r / lambda + g * ra * c + 1.0;
        let im = g * ra * s;
        let d1 = re * re + im * im;
        let b1 = g / PI * ra * s / d1;
        let e = (-t0 * r).exp();
        let first = -b1 / (lambda * lambda);
        let second = 2.0 / (lambda * lambda * lambda) * b1 * r * (-re) / d1;
        e * (first + second)
    };
    // |b₁| ≤ r^{-α}/(πγ sin), |r(..)/D₁| ≤ r^{1-α}/(γ sin)
    let k = 1.0 / (PI * g * s);
    let majorants = [
        Majorant {
            coeff: k / (lambda * lambda),
            power: -params.alpha,
        },
        Majorant {
            coeff: 2.0 * k / (g * s * lambda.powi(3)),
            power: 1.0 - 2.0 * params.alpha,
        },
    ];
    // The two terms are each of size B/λ and cancel to O(t₀) when λt₀ is
    // small, so accuracy is requested relative to the term size.
    let term_scale = eval_b(params, lambda, t0, cfg)?.value / lambda;
    let abs_tol = cfg.abs_tol.max(cfg.rel_tol * term_scale);
    integrate_truncated(
        integrand,
        &majorants,
        Some(density_peak(params, lambda)),
        t0,
        abs_tol,
        cfg,
    )
}

/// `C(α, γ, λ₁) = (γ sin απ / 4) ∫₀^∞ r^α e^{-rT} / (r²/λ₁² + γ² r^{2α} + 1) dr`,
/// the constant of the lower bound `B(λ_k, t) ≥ C / λ_k` on `[0, T]`.
pub fn lower_bound_constant(
    params: &FracParams,
    lambda1: f64,
    t_end: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    check_lambda(lambda1)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return domain(format!("T must be positive and finite, got {t_end}"));
    }
    let g = params.gamma;
    let kv = integrate_truncated(
        |r| {
            let ra = r.powf(params.alpha);
            ra * (-r * t_end).exp() / (r * r / (lambda1 * lambda1) + g * g * ra * ra + 1.0)
        },
        &[Majorant {
            coeff: 1.0 / (g * g),
            power: -params.alpha,
        }],
        None,
        t_end,
        cfg.abs_tol,
        cfg,
    )?;
    Ok(g * params.sin_ap / 4.0 * kv.value)
}

/// The Duhamel term `∫₀^t B(λ, t-τ) f(τ) dτ` by composite Gauss-Legendre
/// over `cfg.duhamel_panels` uniform panels.
pub fn duhamel<F>(
    params: &FracParams,
    lambda: f64,
    t: f64,
    forcing: F,
    cfg: &QuadConfig,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    check_lambda(lambda)?;
    if !(t >= 0.0 && t.is_finite()) {
        return domain(format!("t must be non-negative and finite, got {t}"));
    }
    cfg.validate()?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let rule = GaussLegendre::new(DUHAMEL_NODES);
    let h = t / cfg.duhamel_panels as f64;
    let mut sum = 0.0;
    for p in 0..cfg.duhamel_panels {
        let lo = h * p as f64;
        let hi = if p + 1 == cfg.duhamel_panels {
            t
        } else {
            lo + h
        };
        for (tau, w) in rule.mapped(lo, hi) {
            let f = forcing(tau);
            if !f.is_finite() {
                return Err(Error::NonFinite(format!("forcing at tau = {tau}")));
            }
            if f != 0.0 {
                sum += w * eval_b(params, lambda, t - tau, cfg)?.value * f;
            }
        }
    }
    Ok(sum)
}

/// The Duhamel term at every node of `grid`.
///
/// Panels are aligned with the grid cells, so the kernel is sampled once per
/// offset `t_j − τ` and shared between nodes. Each cell gets enough panels
/// that the whole interval carries at least `cfg.duhamel_panels`.
pub fn duhamel_on_grid<F>(
    params: &FracParams,
    lambda: f64,
    grid: &TimeGrid,
    forcing: F,
    cfg: &QuadConfig,
) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64,
{
    check_lambda(lambda)?;
    cfg.validate()?;
    let n = grid.n_steps();
    let per_cell = cfg.duhamel_panels.div_ceil(n).max(1);
    let rule = GaussLegendre::new(DUHAMEL_NODES);
    let width = grid.step() / per_cell as f64;
    // offsets s and weights, ordered by cell
    let mut offsets = Vec::with_capacity(n * per_cell * DUHAMEL_NODES);
    for m in 0..n * per_cell {
        let lo = width * m as f64;
        offsets.extend(rule.mapped(lo, lo + width));
    }
    let kernel = offsets
        .iter()
        .map(|&(s, w)| Ok(w * eval_b(params, lambda, s, cfg)?.value))
        .collect::<Result<Vec<f64>>>()?;
    let per_node = per_cell * DUHAMEL_NODES;
    let mut out = vec![0.0; n + 1];
    for (j, slot) in out.iter_mut().enumerate().skip(1) {
        let t = grid.node(j);
        let mut sum = 0.0;
        for (&(s, _), &wb) in offsets[..j * per_node].iter().zip(&kernel) {
            let f = forcing((t - s).max(0.0));
            if !f.is_finite() {
                return Err(Error::NonFinite(format!("forcing at tau = {}", t - s)));
            }
            sum += wb * f;
        }
        *slot = sum;
    }
    Ok(out)
}

/// `∫₀^T B(λ, t) dt`, integrated in `t` with the adaptive rule.
pub fn time_integral_b(
    params: &FracParams,
    lambda: f64,
    t_end: f64,
    cfg: &QuadConfig,
) -> Result<KernelValue> {
    check_lambda(lambda)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return domain(format!("T must be positive and finite, got {t_end}"));
    }
    let mut failure = None;
    let tol = Tolerance {
        abs: cfg.abs_tol,
        rel: cfg.rel_tol,
        max_subdivisions: cfg.max_subdivisions,
    };
    let mut pts = vec![0.0];
    // B varies on the scale 1/λ near t = 0
    let mut x = (1.0 / lambda).min(t_end / 4.0);
    while x < t_end {
        pts.push(x);
        x *= 4.0;
    }
    pts.push(t_end);
    let est = quad::adaptive(
        |t| match eval_b(params, lambda, t, cfg) {
            Ok(v) => v.value,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &pts,
        tol,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(KernelValue {
        value: est.value,
        est_error: est.error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(alpha: f64, gamma: f64) -> FracParams {
        FracParams::new(alpha, gamma).unwrap()
    }

    #[test]
    fn params_are_validated() {
        assert!(FracParams::new(0.0, 1.0).is_err());
        assert!(FracParams::new(1.0, 1.0).is_err());
        assert!(FracParams::new(1.5, 1.0).is_err());
        assert!(FracParams::new(0.5, 0.0).is_err());
        assert!(FracParams::new(0.5, -1.0).is_err());
        assert!(FracParams::new(f64::NAN, 1.0).is_err());
        assert!(FracParams::new(0.5, 1.0).is_ok());
    }

    #[test]
    fn density_examples() {
        let prm = p(0.5, 1.0);
        assert!(density(&prm, 1.0, 1e-12).unwrap() < 1e-5);
        let v = density(&prm, 1.0, 1.0).unwrap();
        assert!((v - 1.0 / PI).abs() < 1e-15);
        for &(a, g) in &[(0.1, 0.1), (0.5, 1.0), (0.9, 10.0)] {
            assert!(density(&p(a, g), 2.0, 3.0).unwrap() > 0.0);
        }
    }

    #[test]
    fn density_rejects_bad_arguments() {
        let prm = p(0.5, 1.0);
        assert!(density(&prm, 0.0, 1.0).is_err());
        assert!(density(&prm, -1.0, 1.0).is_err());
        assert!(density(&prm, 1.0, 0.0).is_err());
        assert!(density(&prm, 1.0, -2.0).is_err());
    }

    #[test]
    fn b_at_zero_is_exactly_one() {
        let kv = eval_b(&p(0.5, 1.0), 1.0, 0.0, &QuadConfig::default()).unwrap();
        assert_eq!(kv.value, 1.0);
        assert_eq!(kv.est_error, 0.0);
    }

    #[test]
    fn b_error_estimate_meets_tolerance() {
        let cfg = QuadConfig::default();
        for &lambda in &[1.0, 37.0, 1e4] {
            for &t in &[0.01, 0.3, 2.0] {
                let kv = eval_b(&p(0.3, 2.0), lambda, t, &cfg).unwrap();
                assert!(kv.value > 0.0 && kv.value < 1.0);
                assert!(kv.est_error <= cfg.abs_tol.max(cfg.rel_tol * kv.value));
            }
        }
    }

    #[test]
    fn derivative_in_t_is_negative_and_bounded() {
        let cfg = QuadConfig::default();
        let prm = p(0.5, 1.0);
        assert!(eval_db_dt(&prm, 1.0, 0.5, &cfg).unwrap().value < 0.0);
        let prm = p(0.3, 2.0);
        let v = eval_db_dt(&prm, 10.0, 0.25, &cfg).unwrap().value;
        let bound = gamma(1.7) / (2.0 * PI * (0.3 * PI).sin()) * 0.1 * 0.25f64.powf(-1.7);
        assert!(v.abs() <= bound, "{v} vs {bound}");
        assert!(eval_db_dt(&prm, 10.0, 0.0, &cfg).is_err());
    }

    #[test]
    fn derivative_in_lambda_negative_for_large_lambda() {
        let v = eval_db_dlambda(&p(0.5, 1.0), 1000.0, 1.0, &QuadConfig::default()).unwrap();
        assert!(v.value < 0.0);
    }

    #[test]
    fn fixed_tail_radius_is_checked() {
        let cfg = QuadConfig {
            tail_cutoff: TailRule::Fixed { radius: 2.0 },
            ..QuadConfig::default()
        };
        let err = eval_b(&p(0.5, 1.0), 1.0, 0.1, &cfg).unwrap_err();
        assert!(matches!(err, Error::TailTooLarge { .. }));
        let cfg = QuadConfig {
            tail_cutoff: TailRule::Fixed { radius: 200.0 },
            ..QuadConfig::default()
        };
        let a = eval_b(&p(0.5, 1.0), 1.0, 1.0, &cfg).unwrap().value;
        let b = eval_b(&p(0.5, 1.0), 1.0, 1.0, &QuadConfig::default())
            .unwrap()
            .value;
        assert!((a - b).abs() < 1e-11);
    }

    #[test]
    fn tiny_budget_reports_nonconvergence() {
        let cfg = QuadConfig {
            max_subdivisions: 1,
            rel_tol: 1e-15,
            abs_tol: 1e-16,
            ..QuadConfig::default()
        };
        let err = eval_b(&p(0.5, 1.0), 3.0, 0.5, &cfg).unwrap_err();
        assert!(matches!(err, Error::Quadrature(_)));
    }

    #[test]
    fn lower_bound_constant_is_positive() {
        let cfg = QuadConfig::default();
        for &(a, g, l1, t) in &[
            (0.5, 1.0, 1.0, 1.0),
            (0.1, 0.2, 0.01, 5.0),
            (0.9, 5.0, 100.0, 0.1),
        ] {
            assert!(lower_bound_constant(&p(a, g), l1, t, &cfg).unwrap() > 0.0);
        }
    }

    #[test]
    fn duhamel_trivial_cases() {
        let cfg = QuadConfig::default();
        let prm = p(0.5, 1.0);
        assert_eq!(duhamel(&prm, 3.0, 1.0, |_| 0.0, &cfg).unwrap(), 0.0);
        assert_eq!(duhamel(&prm, 3.0, 0.0, |t| 1.0 + t, &cfg).unwrap(), 0.0);
        assert!(duhamel(&prm, 3.0, -1.0, |_| 1.0, &cfg).is_err());
    }

    #[test]
    fn duhamel_reproduces_manufactured_linear_solution() {
        // y(t) = t solves y' + λ(y + γ ∂^α y) = 1 + λ t + λγ t^{1-α}/Γ(2-α)
        let prm = p(0.5, 1.0);
        let lambda = 2.0;
        let f = |tau: f64| 1.0 + lambda * tau + lambda * tau.powf(0.5) / gamma(1.5);
        let y = duhamel(&prm, lambda, 0.7, f, &QuadConfig::default()).unwrap();
        assert!((y - 0.7).abs() <= 1e-6, "{y}");
    }
}
