//! The JSON run configuration and its translation into core objects.

use std::f64::consts::PI;
use std::fs::File;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use rsnl_core::analysis::{default_lambda_grid, default_t_grid};
use rsnl_core::kernel::eval_b;
use rsnl_core::nonlocal::{Forcing, ModeForcing, NonlocalSpec, SolverConfig};
use rsnl_core::oracle::TimeGrid;
use rsnl_core::spectrum::{CoeffVector, Spectrum};
use rsnl_core::{FracParams, QuadConfig};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: FracParams,
    #[serde(default)]
    pub problem: Option<Problem>,
    #[serde(default)]
    pub operator: Option<Operator>,
    #[serde(default)]
    pub phi: PhiSpec,
    #[serde(default)]
    pub forcing: ForcingSpec,
    #[serde(default)]
    pub quadrature: QuadConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub k0_tol: Option<f64>,
    /// Nodes of the output time grid of `solve`.
    #[serde(default = "default_output_steps")]
    pub time_steps: usize,
    /// `h_k` on resonant modes, as `[k, value]` pairs.
    #[serde(default)]
    pub free_values: Vec<(usize, f64)>,
    #[serde(default)]
    pub kernel_grid: KernelGrid,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub seed: u64,
}

fn default_output_steps() -> usize {
    100
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    #[serde(default)]
    pub beta: Option<Beta>,
    pub t0: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
}

/// A fixed β, or `B(λ_k, t₀) + offset` for constructing resonances.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Beta {
    Value(f64),
    Resonant(ResonantBeta),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonantBeta {
    pub resonant_with_mode: usize,
    #[serde(default)]
    pub offset: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Operator {
    Interval {
        #[serde(default)]
        dims: Option<[f64; 1]>,
        #[serde(rename = "K")]
        k: usize,
    },
    Rectangle {
        #[serde(default)]
        dims: Option<[f64; 2]>,
        #[serde(rename = "K")]
        k: usize,
    },
    /// CSV with header `k,lambda`; relative paths are taken from the config
    /// file's directory.
    Table { path: PathBuf },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiSpec {
    #[default]
    Zero,
    Coefficients {
        values: Vec<f64>,
    },
    Mode {
        k: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `φ = amplitude·(B(λ_k, t₀) − β)·e_k`, whose solution is
    /// `amplitude·B(λ_k, t)·v_k` when unforced.
    EigenmodeSolution {
        k: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `φ_k = U(−1, 1)·k^{−decay}` drawn from the config seed.
    Random {
        #[serde(default = "one")]
        decay: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSpec {
    #[default]
    Zero,
    /// The forcing of the manufactured solution `u_k(t) = t` on mode `k`.
    ManufacturedLinear { k: usize },
    /// Polynomial `c₀ + c₁t + …` on mode `k`.
    Polynomial { k: usize, coeffs: Vec<f64> },
    /// Explicit per-mode profiles, mode 1 first.
    Modes { modes: Vec<ModeForcing> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Residual grid of `solve`, and starting grid of `oracle-compare`.
    pub n_steps: usize,
    pub n_max: usize,
    /// Step-halving stops when extrapolated runs differ by less than this.
    pub tol: f64,
    pub lambdas: Vec<f64>,
    pub times: Vec<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_steps: 1024,
            n_max: 16384,
            tol: 1e-5,
            lambdas: vec![1.0, 10.0, 100.0],
            times: (1..=10).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelGrid {
    pub lambda: Vec<f64>,
    pub t: Vec<f64>,
}

impl Default for KernelGrid {
    fn default() -> Self {
        let mut t = default_t_grid();
        t.insert(0, 0.0);
        Self {
            lambda: default_lambda_grid(),
            t,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub lambda: Vec<f64>,
    pub t: Vec<f64>,
    #[serde(rename = "T")]
    pub t_end: Option<f64>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            lambda: default_lambda_grid(),
            t: default_t_grid(),
            t_end: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub kernel: String,
    pub bounds: String,
    pub solution: String,
    pub residuals: String,
    pub sweep: String,
    pub k0: String,
    pub oracle: String,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            kernel: "kernel.csv".into(),
            bounds: "bounds.json".into(),
            solution: "solution.csv".into(),
            residuals: "residuals.json".into(),
            sweep: "sweep.csv".into(),
            k0: "k0.json".into(),
            oracle: "oracle.csv".into(),
        }
    }
}

/// A problem assembled from the config.
pub struct Assembled {
    pub spectrum: Spectrum,
    pub spec: NonlocalSpec,
    pub solver: SolverConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let file =
            File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_reader(file)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    fn validate(&self) -> Result<(), CliError> {
        self.quadrature.validate()?;
        self.solver()?.validate()?;
        if self.time_steps < 2 {
            return Err(CliError::Config(format!(
                "time_steps must be >= 2, got {}",
                self.time_steps
            )));
        }
        let o = &self.oracle;
        if o.n_steps < 2 || o.n_max < o.n_steps || !(o.tol > 0.0) {
            return Err(CliError::Config(
                "oracle needs 2 <= n_steps <= n_max and tol > 0".into(),
            ));
        }
        if o.lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite()))
            || o.times.iter().any(|&t| !(t > 0.0 && t.is_finite()))
        {
            return Err(CliError::Config(
                "oracle lambdas and times must be positive".into(),
            ));
        }
        if let Some(p) = &self.problem {
            if !(p.t_end > 0.0 && p.t0 > 0.0 && p.t0 <= p.t_end) {
                return Err(CliError::Config(format!(
                    "need 0 < t0 <= T, got t0 = {}, T = {}",
                    p.t0, p.t_end
                )));
            }
        }
        if self.betas.iter().any(|b| !b.is_finite()) {
            return Err(CliError::Config("betas must be finite".into()));
        }
        Ok(())
    }

    pub fn solver(&self) -> Result<SolverConfig, CliError> {
        let mut s = SolverConfig {
            quad: self.quadrature,
            ..SolverConfig::default()
        };
        s.k0_tol = self.k0_tol.unwrap_or(10.0 * self.quadrature.rel_tol);
        s.validate()?;
        Ok(s)
    }

    pub fn problem(&self) -> Result<&Problem, CliError> {
        self.problem
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a `problem` section".into()))
    }

    pub fn spectrum(&self, base: &Path) -> Result<Spectrum, CliError> {
        let op = self
            .operator
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs an `operator` section".into()))?;
        Ok(match op {
            Operator::Interval { dims, k } => {
                Spectrum::dirichlet_interval(dims.map_or(PI, |d| d[0]), *k)?
            }
            Operator::Rectangle { dims, k } => {
                let [a, b] = dims.unwrap_or([PI, PI]);
                Spectrum::dirichlet_rectangle(a, b, *k)?
            }
            Operator::Table { path } => {
                let path = base.join(path);
                let file = File::open(&path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                Spectrum::from_csv(file)?
            }
        })
    }

    /// β, resolving a constructed resonance against the spectrum.
    pub fn beta(&self, spectrum: &Spectrum) -> Result<f64, CliError> {
        let p = self.problem()?;
        match p
            .beta
            .ok_or_else(|| CliError::Config("problem.beta is required".into()))?
        {
            Beta::Value(b) => Ok(b),
            Beta::Resonant(r) => {
                let k = r.resonant_with_mode;
                if k == 0 || k > spectrum.len() {
                    return Err(CliError::Config(format!(
                        "resonant_with_mode {k} outside 1..={}",
                        spectrum.len()
                    )));
                }
                let b = eval_b(
                    &self.params,
                    spectrum.modes()[k - 1].lambda,
                    p.t0,
                    &self.quadrature,
                )?
                .value;
                Ok(b + r.offset)
            }
        }
    }

    fn mode_index(k: usize, spectrum: &Spectrum) -> Result<usize, CliError> {
        if k == 0 || k > spectrum.len() {
            return Err(CliError::Config(format!(
                "mode {k} outside 1..={}",
                spectrum.len()
            )));
        }
        Ok(k)
    }

    fn phi(&self, spectrum: &Spectrum, beta: f64, t0: f64) -> Result<CoeffVector, CliError> {
        let n = spectrum.len();
        Ok(match &self.phi {
            PhiSpec::Zero => CoeffVector::zeros(n),
            PhiSpec::Coefficients { values } => {
                if values.len() > n {
                    return Err(CliError::Config(format!(
                        "{} phi coefficients for {n} modes",
                        values.len()
                    )));
                }
                let mut v = values.clone();
                v.resize(n, 0.0);
                CoeffVector::new(v)?
            }
            PhiSpec::Mode { k, amplitude } => {
                CoeffVector::unit(n, Self::mode_index(*k, spectrum)?, *amplitude)
            }
            PhiSpec::EigenmodeSolution { k, amplitude } => {
                let k = Self::mode_index(*k, spectrum)?;
                let b = eval_b(
                    &self.params,
                    spectrum.modes()[k - 1].lambda,
                    t0,
                    &self.quadrature,
                )?
                .value;
                CoeffVector::unit(n, k, amplitude * (b - beta))
            }
            PhiSpec::Random { decay } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                CoeffVector::new(
                    (1..=n)
                        .map(|k| rng.gen_range(-1.0..1.0) * (k as f64).powf(-decay))
                        .collect(),
                )?
            }
        })
    }

    fn forcing(&self, spectrum: &Spectrum) -> Result<Forcing, CliError> {
        Ok(match &self.forcing {
            ForcingSpec::Zero => Forcing::zero(),
            ForcingSpec::ManufacturedLinear { k } => {
                let k = Self::mode_index(*k, spectrum)?;
                let lambda = spectrum.modes()[k - 1].lambda;
                Forcing::single(k, ModeForcing::manufactured_linear(&self.params, lambda))?
            }
            ForcingSpec::Polynomial { k, coeffs } => Forcing::single(
                Self::mode_index(*k, spectrum)?,
                ModeForcing::polynomial(coeffs),
            )?,
            ForcingSpec::Modes { modes } => Forcing::new(modes.clone())?,
        })
    }

    pub fn assemble(&self, base: &Path) -> Result<Assembled, CliError> {
        let spectrum = self.spectrum(base)?;
        let beta = self.beta(&spectrum)?;
        let p = self.problem()?;
        let phi = self.phi(&spectrum, beta, p.t0)?;
        let forcing = self.forcing(&spectrum)?;
        let spec = NonlocalSpec::new(self.params, beta, p.t0, p.t_end, phi, forcing)?;
        Ok(Assembled {
            spectrum,
            spec,
            solver: self.solver()?,
        })
    }

    pub fn output_grid(&self) -> Result<TimeGrid, CliError> {
        Ok(TimeGrid::new(self.problem()?.t_end, self.time_steps)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig =
            serde_json::from_str(s).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    const BASE: &str = r#""params": {"alpha": 0.5, "gamma": 1.0}"#;

    #[test]
    fn defaults() {
        let cfg = parse(&format!("{{{BASE}}}")).unwrap();
        assert_eq!(cfg.kernel_grid.t[0], 0.0);
        assert_eq!(cfg.oracle.n_steps, 1024);
        assert_eq!(cfg.solver().unwrap().k0_tol, 1e-9);
        assert!(cfg.problem().is_err());
    }

    #[test]
    fn beta_forms() {
        let cfg = parse(&format!(
            r#"{{{BASE}, "problem": {{"beta": {{"resonant_with_mode": 1}}, "t0": 1, "T": 2}},
                "operator": {{"type": "interval", "K": 3}}}}"#
        ))
        .unwrap();
        let s = cfg.spectrum(Path::new(".")).unwrap();
        assert!((cfg.beta(&s).unwrap() - 0.2162429044011).abs() < 1e-12);
        let cfg = parse(&format!(
            r#"{{{BASE}, "problem": {{"beta": -1, "t0": 1, "T": 2}}}}"#
        ))
        .unwrap();
        assert_eq!(cfg.beta(&s).unwrap(), -1.0);
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(parse(&format!(
            r#"{{{BASE}, "problem": {{"beta": 0, "t0": 3, "T": 2}}}}"#
        ))
        .is_err());
        assert!(parse(&format!(r#"{{{BASE}, "time_steps": 1}}"#)).is_err());
        assert!(parse(&format!(r#"{{{BASE}, "phi": {{"kind": "bogus"}}}}"#)).is_err());
        assert!(parse(&format!(
            r#"{{{BASE}, "oracle": {{"n_steps": 10, "n_max": 5}}}}"#
        ))
        .is_err());
    }

    #[test]
    fn random_phi_is_seeded() {
        let text = format!(
            r#"{{{BASE}, "problem": {{"beta": 2, "t0": 1, "T": 2}}, "operator": {{"type": "interval", "K": 6}},
                "phi": {{"kind": "random", "decay": 1}}, "seed": 3}}"#
        );
        let a = parse(&text).unwrap().assemble(Path::new(".")).unwrap();
        let b = parse(&text).unwrap().assemble(Path::new(".")).unwrap();
        assert_eq!(a.spec.phi, b.spec.phi);
        assert!(a.spec.phi.as_slice().iter().all(|c| c.abs() <= 1.0));
    }
}
