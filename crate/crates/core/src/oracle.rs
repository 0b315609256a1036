//! Reference time-stepping for the scalar mode equation
//! `y' + λ(1 + γ ∂_t^α) y = f`, `y(0) = y₀`.
//!
//! The Riemann-Liouville derivative is discretized with Grünwald-Letnikov
//! weights; the `λy` term and the diagonal memory weight are treated
//! implicitly, the history sum explicitly. In the solver the weights act on
//! `y − y₀` and the derivative of the constant `y₀` enters exactly, averaged
//! over each step; applied to `y` itself the weights only converge like
//! `h^{1−α}` here. The scheme is first order and independent of the Laplace-representation quadrature in [`crate::kernel`],
//! which is what makes it useful as a cross-check.

use crate::error::{domain, Error, Result};
use statrs::function::gamma::gamma;

use crate::kernel::FracParams;

/// Uniform grid `t_j = j·h`, `h = t_end / n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return domain(format!("grid end must be positive, got {t_end}"));
        }
        if n_steps < 2 {
            return domain(format!("grid needs at least 2 steps, got {n_steps}"));
        }
        Ok(Self { t_end, n_steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.n_steps {
            self.t_end
        } else {
            j as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(|j| self.node(j))
    }

    /// The grid with half the step.
    pub fn refined(&self) -> Self {
        Self {
            t_end: self.t_end,
            n_steps: 2 * self.n_steps,
        }
    }

    /// Index of the node equal to `t` (up to rounding), if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = t / self.step();
        let j = x.round();
        if j >= 0.0 && j <= self.n_steps as f64 && (x - j).abs() <= 1e-9 {
            Some(j as usize)
        } else {
            None
        }
    }
}

/// Values of a scalar function on the nodes of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_steps + 1 {
            return Err(Error::LengthMismatch {
                expected: grid.n_steps + 1,
                got: values.len(),
            });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("time series value at node {j}")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` on the grid.
    pub fn sample<F: Fn(f64) -> f64>(grid: TimeGrid, f: F) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    /// Builds a series from explicit nodes, which must start at 0 and be
    /// uniformly spaced.
    pub fn from_nodes(nodes: &[f64], values: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 || nodes[0] != 0.0 {
            return domain("nodes must start at 0 and contain at least 3 points");
        }
        let n = nodes.len() - 1;
        let grid = TimeGrid::new(nodes[n], n)?;
        let h = grid.step();
        for (j, &t) in nodes.iter().enumerate() {
            if (t - grid.node(j)).abs() > 1e-9 * h {
                return domain(format!(
                    "non-uniform grid: node {j} is {t}, expected {}",
                    grid.node(j)
                ));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Piecewise-linear interpolation.
    pub fn at(&self, t: f64) -> f64 {
        let h = self.grid.step();
        let x = (t / h).clamp(0.0, self.grid.n_steps as f64);
        let j = (x.floor() as usize).min(self.grid.n_steps - 1);
        let w = x - j as f64;
        (1.0 - w) * self.values[j] + w * self.values[j + 1]
    }
}

/// Grünwald-Letnikov weights `g_0 = 1`, `g_i = g_{i-1}(1 - (α+1)/i)`.
pub fn gl_weights(alpha: f64, n: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(n + 1);
    g.push(1.0);
    for i in 1..=n {
        let prev = g[i - 1];
        g.push(prev * (1.0 - (alpha + 1.0) / i as f64));
    }
    g
}

/// Grünwald-Letnikov approximation of the Riemann-Liouville derivative,
/// `(∂^α y)_j ≈ h^{-α} Σ_{i=0}^{j} g_i y_{j-i}`.
pub fn rl_derivative(series: &TimeSeries, alpha: f64) -> Result<TimeSeries> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    let n = series.grid.n_steps;
    let g = gl_weights(alpha, n);
    let scale = series.grid.step().powf(-alpha);
    let y = &series.values;
    let out = (0..=n)
        .map(|j| scale * (0..=j).map(|i| g[i] * y[j - i]).sum::<f64>())
        .collect();
    TimeSeries::new(series.grid, out)
}

/// Implicit Grünwald-Letnikov time stepping of the scalar mode equation.
pub fn solve_scalar_ivp<F>(
    params: &FracParams,
    lambda: f64,
    y0: f64,
    forcing: F,
    grid: TimeGrid,
) -> Result<TimeSeries>
where
    F: Fn(f64) -> f64,
{
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    let n = grid.n_steps;
    let h = grid.step();
    let alpha = params.alpha();
    let g = gl_weights(alpha, n);
    let lg = lambda * params.gamma();
    let mem = lg * h.powf(-alpha);
    // step average of ∂^α 1 = t^{-α}/Γ(1-α) over [t_{j-1}, t_j]
    let start = lg * y0 * h.powf(-alpha) / gamma(2.0 - alpha);
    let diag = 1.0 / h + lambda + mem * g[0];
    let mut y = Vec::with_capacity(n + 1);
    y.push(y0);
    for j in 1..=n {
        let history: f64 = (1..j).map(|i| g[i] * (y[j - i] - y0)).sum();
        let jf = j as f64;
        let avg = start * (jf.powf(1.0 - alpha) - (jf - 1.0).powf(1.0 - alpha));
        let rhs = y[j - 1] / h + forcing(grid.node(j)) - mem * (history - g[0] * y0) - avg;
        let next = rhs / diag;
        if !next.is_finite() {
            return Err(Error::NonFinite(format!("oracle overflow at step {j}")));
        }
        y.push(next);
    }
    TimeSeries::new(grid, y)
}

/// First-order Richardson extrapolation `2·fine − coarse` on the coarse grid.
pub fn richardson(coarse: &TimeSeries, fine: &TimeSeries) -> Result<TimeSeries> {
    if fine.grid.n_steps != 2 * coarse.grid.n_steps || fine.grid.t_end != coarse.grid.t_end {
        return domain("fine grid must halve the coarse step");
    }
    let values = coarse
        .values
        .iter()
        .enumerate()
        .map(|(j, &c)| 2.0 * fine.values[2 * j] - c)
        .collect();
    TimeSeries::new(coarse.grid, values)
}

/// Result of [`solve_step_halving`].
#[derive(Debug, Clone)]
pub struct Converged {
    /// Richardson-extrapolated trajectory on the grid with `n_steps` steps.
    pub series: TimeSeries,
    /// Max change between the last two extrapolated trajectories.
    pub last_change: f64,
    pub converged: bool,
}

/// Halves the step, starting from `n_start`, until successive
/// Richardson-extrapolated trajectories differ by less than `tol` at their
/// common nodes, or `n_max` steps would be exceeded.
#[allow(clippy::too_many_arguments)]
pub fn solve_step_halving<F>(
    params: &FracParams,
    lambda: f64,
    y0: f64,
    forcing: F,
    t_end: f64,
    n_start: usize,
    n_max: usize,
    tol: f64,
) -> Result<Converged>
where
    F: Fn(f64) -> f64,
{
    let grid = TimeGrid::new(t_end, n_start)?;
    let mut coarse = solve_scalar_ivp(params, lambda, y0, &forcing, grid)?;
    let mut fine = solve_scalar_ivp(params, lambda, y0, &forcing, grid.refined())?;
    let mut extrap = richardson(&coarse, &fine)?;
    let mut last_change = f64::INFINITY;
    while 4 * coarse.grid.n_steps <= n_max {
        coarse = fine;
        fine = solve_scalar_ivp(params, lambda, y0, &forcing, coarse.grid.refined())?;
        let next = richardson(&coarse, &fine)?;
        last_change = extrap
            .values
            .iter()
            .enumerate()
            .map(|(j, &v)| (v - next.values[2 * j]).abs())
            .fold(0.0, f64::max);
        extrap = next;
        if last_change < tol {
            return Ok(Converged {
                series: extrap,
                last_change,
                converged: true,
            });
        }
    }
    Ok(Converged {
        series: extrap,
        last_change,
        converged: false,
    })
}

/// Observed order of accuracy at `t_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvergenceOrder {
    Observed(f64),
    /// All three runs agree exactly; no order can be inferred.
    Exact,
}

/// Order from the endpoint values on the nested grids `n`, `2n`, `4n`.
pub fn convergence_order<F>(
    params: &FracParams,
    lambda: f64,
    y0: f64,
    forcing: F,
    base_grid: TimeGrid,
) -> Result<ConvergenceOrder>
where
    F: Fn(f64) -> f64,
{
    if base_grid.n_steps < 64 {
        return domain("convergence_order needs a base grid with at least 64 steps");
    }
    let g1 = base_grid;
    let g2 = g1.refined();
    let g4 = g2.refined();
    let y1 = solve_scalar_ivp(params, lambda, y0, &forcing, g1)?.last();
    let y2 = solve_scalar_ivp(params, lambda, y0, &forcing, g2)?.last();
    let y4 = solve_scalar_ivp(params, lambda, y0, &forcing, g4)?.last();
    let (d1, d2) = (y1 - y2, y2 - y4);
    if d1 == 0.0 && d2 == 0.0 {
        return Ok(ConvergenceOrder::Exact);
    }
    Ok(ConvergenceOrder::Observed((d1 / d2).abs().log2()))
}
