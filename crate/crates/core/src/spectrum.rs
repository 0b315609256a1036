//! Discrete spectra of the model operator `A`, Fourier analysis/synthesis
//! against its eigenfunctions and the `D(A^τ)` norms.

use std::f64::consts::PI;
use std::io::Read;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad::GaussLegendre;

/// Relative tolerance under which neighbouring eigenvalues share a group.
pub const MULTIPLICITY_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeLabel {
    /// `sin(kπx/L)` on an interval.
    Index(usize),
    /// `sin(mπx/a) sin(nπy/b)` on a rectangle.
    Pair(usize, usize),
    /// Row of a user-supplied table.
    Row(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// 1-based position in the ordered spectrum.
    pub k: usize,
    pub lambda: f64,
    /// Multiplicity group id; ids are contiguous and start at 0.
    pub group: usize,
    pub label: ModeLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Interval {
        length: f64,
    },
    Rectangle {
        a: f64,
        b: f64,
    },
    /// Eigenvalues only; no eigenfunction evaluator.
    Table,
}

/// An ordered, truncated spectrum `0 < λ_1 ≤ λ_2 ≤ … ≤ λ_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    modes: Vec<Mode>,
    domain: Domain,
}

/// Truncated Fourier coefficients `h_k = (h, v_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffVector {
    coeffs: Vec<f64>,
    /// Root-sum-square of the last decade of coefficients; a proxy for the
    /// mass discarded by the truncation.
    pub tail_norm_estimate: f64,
}

impl CoeffVector {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(k) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("coefficient {}", k + 1)));
        }
        Ok(Self {
            coeffs,
            tail_norm_estimate: 0.0,
        })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            coeffs: vec![0.0; len],
            tail_norm_estimate: 0.0,
        }
    }

    /// `amplitude · e_k` with 1-based `k`.
    pub fn unit(len: usize, k: usize, amplitude: f64) -> Self {
        let mut v = Self::zeros(len);
        v.coeffs[k - 1] = amplitude;
        v
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of mode `k` (1-based).
    pub fn get(&self, k: usize) -> f64 {
        self.coeffs[k - 1]
    }

    /// Plain ℓ² norm.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Composite Gauss-Legendre settings for [`Spectrum::analyze`]. The panel
/// count is raised to at least twice the highest mode number per direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionConfig {
    pub panels: usize,
    pub nodes: usize,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            panels: 64,
            nodes: 10,
        }
    }
}

fn group_modes(modes: &mut [Mode]) {
    let mut group = 0;
    for i in 0..modes.len() {
        if i > 0 {
            let prev = modes[i - 1].lambda;
            if modes[i].lambda - prev > MULTIPLICITY_RTOL * modes[i].lambda {
                group += 1;
            }
        }
        modes[i].group = group;
    }
}

impl Spectrum {
    /// `λ_k = (kπ/L)²`, `v_k(x) = √(2/L) sin(kπx/L)`.
    pub fn dirichlet_interval(length: f64, n_modes: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return domain(format!("interval length must be positive, got {length}"));
        }
        if n_modes == 0 {
            return domain("at least one mode is required");
        }
        let mut modes: Vec<Mode> = (1..=n_modes)
            .map(|k| Mode {
                k,
                lambda: (k as f64 * PI / length).powi(2),
                group: 0,
                label: ModeLabel::Index(k),
            })
            .collect();
        group_modes(&mut modes);
        Ok(Self {
            modes,
            domain: Domain::Interval { length },
        })
    }

    /// `λ_{mn} = π²(m²/a² + n²/b²)` with product sine eigenfunctions, the
    /// `n_modes` smallest kept, ties ordered by `(m, n)`.
    pub fn dirichlet_rectangle(a: f64, b: f64, n_modes: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return domain(format!("rectangle sides must be positive, got {a} x {b}"));
        }
        if n_modes == 0 {
            return domain("at least one mode is required");
        }
        let eig =
            |m: usize, n: usize| PI * PI * ((m * m) as f64 / (a * a) + (n * n) as f64 / (b * b));
        // Weyl: N(λ) ≈ abλ/(4π); grow the cutoff until enough modes fall below it.
        let mut cutoff = eig(1, 1).max(8.0 * PI * n_modes as f64 / (a * b));
        let mut candidates = loop {
            let mut found = Vec::new();
            let mut m = 1;
            while eig(m, 1) <= cutoff {
                let mut n = 1;
                while eig(m, n) <= cutoff {
                    found.push((eig(m, n), m, n));
                    n += 1;
                }
                m += 1;
            }
            if found.len() >= n_modes {
                break found;
            }
            cutoff *= 2.0;
        };
        candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut modes: Vec<Mode> = candidates
            .into_iter()
            .take(n_modes)
            .enumerate()
            .map(|(i, (lambda, m, n))| Mode {
                k: i + 1,
                lambda,
                group: 0,
                label: ModeLabel::Pair(m, n),
            })
            .collect();
        group_modes(&mut modes);
        Ok(Self {
            modes,
            domain: Domain::Rectangle { a, b },
        })
    }

    /// A user-supplied eigenvalue sequence, strictly positive and nondecreasing.
    pub fn from_eigenvalues(lambdas: &[f64]) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::SpectrumTable("no eigenvalues".into()));
        }
        for (i, &l) in lambdas.iter().enumerate() {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::SpectrumTable(format!(
                    "eigenvalue {} is not strictly positive: {l}",
                    i + 1
                )));
            }
            if i > 0 && l < lambdas[i - 1] {
                return Err(Error::SpectrumTable(format!(
                    "eigenvalues decrease at k = {}",
                    i + 1
                )));
            }
        }
        let mut modes: Vec<Mode> = lambdas
            .iter()
            .enumerate()
            .map(|(i, &lambda)| Mode {
                k: i + 1,
                lambda,
                group: 0,
                label: ModeLabel::Row(i + 1),
            })
            .collect();
        group_modes(&mut modes);
        Ok(Self {
            modes,
            domain: Domain::Table,
        })
    }

    /// Reads a CSV table with header `k,lambda`. Rows must list `k = 1, 2, …`
    /// in order.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::SpectrumTable(e.to_string()))?
            .clone();
        if headers.len() != 2 || &headers[0] != "k" || &headers[1] != "lambda" {
            return Err(Error::SpectrumTable(format!(
                "expected header `k,lambda`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut lambdas = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::SpectrumTable(e.to_string()))?;
            let k: usize = rec[0]
                .parse()
                .map_err(|_| Error::SpectrumTable(format!("bad index `{}`", &rec[0])))?;
            if k != i + 1 {
                return Err(Error::SpectrumTable(format!(
                    "expected k = {}, got {k}",
                    i + 1
                )));
            }
            let l: f64 = rec[1]
                .parse()
                .map_err(|_| Error::SpectrumTable(format!("bad eigenvalue `{}`", &rec[1])))?;
            lambdas.push(l);
        }
        Self::from_eigenvalues(&lambdas)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    /// `λ_1`
    pub fn first_eigenvalue(&self) -> f64 {
        self.modes[0].lambda
    }

    /// Index ranges (0-based) of the multiplicity groups, in order.
    pub fn groups(&self) -> Vec<Range<usize>> {
        let mut out: Vec<Range<usize>> = Vec::new();
        for (i, m) in self.modes.iter().enumerate() {
            match out.last_mut() {
                Some(r) if self.modes[r.start].group == m.group => r.end = i + 1,
                _ => out.push(i..i + 1),
            }
        }
        out
    }

    /// Number of modes sharing the eigenvalue of mode `k` (1-based).
    pub fn multiplicity(&self, k: usize) -> usize {
        let g = self.modes[k - 1].group;
        self.modes.iter().filter(|m| m.group == g).count()
    }

    /// `v_k(point)` for 1-based `k`.
    pub fn eigenfunction(&self, k: usize, point: &[f64]) -> Result<f64> {
        let mode = self
            .modes
            .get(k.wrapping_sub(1))
            .ok_or_else(|| Error::Domain(format!("mode {k} outside 1..={}", self.len())))?;
        match (self.domain, mode.label) {
            (Domain::Interval { length }, ModeLabel::Index(j)) => {
                let x = single_coordinate(point)?;
                Ok((2.0 / length).sqrt() * (j as f64 * PI * x / length).sin())
            }
            (Domain::Rectangle { a, b }, ModeLabel::Pair(m, n)) => {
                let (x, y) = two_coordinates(point)?;
                Ok(2.0 / (a * b).sqrt()
                    * (m as f64 * PI * x / a).sin()
                    * (n as f64 * PI * y / b).sin())
            }
            _ => Err(Error::NoEigenfunctions),
        }
    }

    /// Projects `field` onto the eigenfunctions by composite Gauss-Legendre
    /// quadrature.
    pub fn analyze<F>(&self, field: F, cfg: &ProjectionConfig) -> Result<CoeffVector>
    where
        F: Fn(&[f64]) -> f64,
    {
        if cfg.panels == 0 || cfg.nodes == 0 {
            return domain("projection needs at least one panel and one node");
        }
        let rule = GaussLegendre::new(cfg.nodes);
        // quadrature points and weights, field sampled once
        let points: Vec<(Vec<f64>, f64)> = match self.domain {
            Domain::Interval { length } => {
                let kmax = self.modes.iter().map(|m| m.k).max().unwrap_or(1);
                line_rule(&rule, length, cfg.panels.max(2 * kmax))
                    .into_iter()
                    .map(|(x, w)| (vec![x], w))
                    .collect()
            }
            Domain::Rectangle { a, b } => {
                let (mmax, nmax) = self.modes.iter().fold((1, 1), |acc, m| match m.label {
                    ModeLabel::Pair(i, j) => (acc.0.max(i), acc.1.max(j)),
                    _ => acc,
                });
                let xs = line_rule(&rule, a, cfg.panels.max(2 * mmax));
                let ys = line_rule(&rule, b, cfg.panels.max(2 * nmax));
                xs.iter()
                    .flat_map(|&(x, wx)| ys.iter().map(move |&(y, wy)| (vec![x, y], wx * wy)))
                    .collect()
            }
            Domain::Table => return Err(Error::NoEigenfunctions),
        };
        let samples: Vec<f64> = points.iter().map(|(pt, w)| w * field(pt)).collect();
        let mut coeffs = Vec::with_capacity(self.len());
        for mode in &self.modes {
            let mut c = 0.0;
            for ((pt, _), s) in points.iter().zip(&samples) {
                c += s * self.eigenfunction(mode.k, pt)?;
            }
            if !c.is_finite() {
                return Err(Error::NonFinite(format!(
                    "projection onto mode {} did not produce a finite value",
                    mode.k
                )));
            }
            coeffs.push(c);
        }
        let decade = (coeffs.len() / 10).max(1);
        let tail = coeffs[coeffs.len() - decade..]
            .iter()
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt();
        Ok(CoeffVector {
            coeffs,
            tail_norm_estimate: tail,
        })
    }

    /// `Σ_k c_k v_k(point)`.
    pub fn synthesize(&self, coeffs: &CoeffVector, point: &[f64]) -> Result<f64> {
        self.check_len(coeffs)?;
        let mut sum = 0.0;
        for (mode, c) in self.modes.iter().zip(coeffs.as_slice()) {
            if *c != 0.0 {
                sum += c * self.eigenfunction(mode.k, point)?;
            }
        }
        Ok(sum)
    }

    /// `‖h‖²_τ = Σ λ_k^{2τ} |h_k|²` over the truncation.
    pub fn sobolev_norm_sq(&self, coeffs: &CoeffVector, tau: f64) -> Result<f64> {
        self.check_len(coeffs)?;
        let s: f64 = self
            .modes
            .iter()
            .zip(coeffs.as_slice())
            .map(|(m, c)| m.lambda.powf(2.0 * tau) * c * c)
            .sum();
        if !s.is_finite() {
            return Err(Error::NonFinite(format!("D(A^{tau}) norm overflowed")));
        }
        Ok(s)
    }

    /// `‖h‖_τ`
    pub fn sobolev_norm(&self, coeffs: &CoeffVector, tau: f64) -> Result<f64> {
        self.sobolev_norm_sq(coeffs, tau).map(f64::sqrt)
    }

    pub(crate) fn check_len(&self, coeffs: &CoeffVector) -> Result<()> {
        if coeffs.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: coeffs.len(),
            });
        }
        Ok(())
    }
}

fn line_rule(rule: &GaussLegendre, length: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = length / panels as f64;
    (0..panels)
        .flat_map(|p| {
            let lo = h * p as f64;
            rule.mapped(lo, lo + h).collect::<Vec<_>>()
        })
        .collect()
}

fn single_coordinate(point: &[f64]) -> Result<f64> {
    match point {
        [x] => Ok(*x),
        _ => domain(format!(
            "interval eigenfunctions take one coordinate, got {}",
            point.len()
        )),
    }
}

fn two_coordinates(point: &[f64]) -> Result<(f64, f64)> {
    match point {
        [x, y] => Ok((*x, *y)),
        _ => domain(format!(
            "rectangle eigenfunctions take two coordinates, got {}",
            point.len()
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_examples() {
        let s = Spectrum::dirichlet_interval(PI, 3).unwrap();
        let l = s.lambdas();
        for (got, want) in l.iter().zip([1.0, 4.0, 9.0]) {
            assert!((got - want).abs() < 1e-13);
        }
        let s = Spectrum::dirichlet_interval(PI, 1).unwrap();
        let v = s.eigenfunction(1, &[PI / 2.0]).unwrap();
        assert!((v - (2.0 / PI).sqrt()).abs() < 1e-15);
        let s = Spectrum::dirichlet_interval(2.0, 2).unwrap();
        assert!((s.first_eigenvalue() - PI * PI / 4.0).abs() < 1e-14);
    }

    #[test]
    fn rectangle_examples() {
        let s = Spectrum::dirichlet_rectangle(PI, PI, 5).unwrap();
        let l = s.lambdas();
        assert!((l[0] - 2.0).abs() < 1e-13);
        assert!((l[1] - 5.0).abs() < 1e-13 && (l[2] - 5.0).abs() < 1e-13);
        assert_eq!(s.multiplicity(2), 2);
        assert_eq!(s.modes()[1].label, ModeLabel::Pair(1, 2));
        assert_eq!(s.modes()[2].label, ModeLabel::Pair(2, 1));

        let s = Spectrum::dirichlet_rectangle(PI, PI, 1).unwrap();
        assert!((s.first_eigenvalue() - 2.0).abs() < 1e-13);
        assert_eq!(s.multiplicity(1), 1);

        let s = Spectrum::dirichlet_rectangle(PI, PI / 2.0, 2).unwrap();
        assert!((s.first_eigenvalue() - 5.0).abs() < 1e-13);
    }

    #[test]
    fn rectangle_matches_brute_force_enumeration() {
        let (a, b) = (1.3, 0.7);
        let s = Spectrum::dirichlet_rectangle(a, b, 40).unwrap();
        let mut all: Vec<f64> = (1..60)
            .flat_map(|m| {
                (1..60)
                    .map(move |n| PI * PI * ((m * m) as f64 / (a * a) + (n * n) as f64 / (b * b)))
            })
            .collect();
        all.sort_by(f64::total_cmp);
        for (got, want) in s.lambdas().iter().zip(&all) {
            assert!((got - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn groups_partition_the_modes() {
        let s = Spectrum::dirichlet_rectangle(PI, PI, 30).unwrap();
        let groups = s.groups();
        let covered: usize = groups.iter().map(|r| r.len()).sum();
        assert_eq!(covered, s.len());
        for (gid, r) in groups.iter().enumerate() {
            for i in r.clone() {
                assert_eq!(s.modes()[i].group, gid);
            }
        }
        // maximality: neighbouring groups differ by more than the tolerance
        for w in groups.windows(2) {
            let a = s.modes()[w[0].end - 1].lambda;
            let b = s.modes()[w[1].start].lambda;
            assert!(b - a > MULTIPLICITY_RTOL * b);
        }
    }

    #[test]
    fn table_validation() {
        assert!(Spectrum::from_eigenvalues(&[1.0, 2.0, 2.0, 5.0]).is_ok());
        assert!(Spectrum::from_eigenvalues(&[0.0, 2.0]).is_err());
        assert!(Spectrum::from_eigenvalues(&[2.0, 1.0]).is_err());
        assert!(Spectrum::from_eigenvalues(&[]).is_err());
        let s = Spectrum::from_csv("k,lambda\n1,1.5\n2,1.5\n3,7\n".as_bytes()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.multiplicity(1), 2);
        assert!(matches!(
            s.eigenfunction(1, &[0.3]),
            Err(Error::NoEigenfunctions)
        ));
        assert!(Spectrum::from_csv("k,mu\n1,1\n".as_bytes()).is_err());
        assert!(Spectrum::from_csv("k,lambda\n2,1\n".as_bytes()).is_err());
        assert!(Spectrum::from_csv("k,lambda\n1,-1\n".as_bytes()).is_err());
    }

    #[test]
    fn analyze_examples() {
        let s = Spectrum::dirichlet_interval(PI, 12).unwrap();
        let cfg = ProjectionConfig::default();
        let c = s.analyze(|x| s.eigenfunction(1, x).unwrap(), &cfg).unwrap();
        for (i, v) in c.as_slice().iter().enumerate() {
            let want = if i == 0 { 1.0 } else { 0.0 };
            assert!((v - want).abs() <= 1e-10);
        }
        let z = s.analyze(|_| 0.0, &cfg).unwrap();
        assert!(z.as_slice().iter().all(|&v| v == 0.0));

        let c = s.analyze(|x| x[0] * (PI - x[0]), &cfg).unwrap();
        for k in 1..=12 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let want = (2.0 / PI).sqrt() * 2.0 * (1.0 - sign) / (k as f64).powi(3);
            assert!((c.get(k) - want).abs() <= 1e-12, "k={k}");
        }
    }

    #[test]
    fn sobolev_examples() {
        let s = Spectrum::dirichlet_interval(PI, 2).unwrap();
        assert!(
            (s.sobolev_norm_sq(&CoeffVector::unit(2, 1, 1.0), 0.0)
                .unwrap()
                - 1.0)
                .abs()
                < 1e-15
        );
        assert!(
            (s.sobolev_norm_sq(&CoeffVector::unit(2, 2, 1.0), 1.0)
                .unwrap()
                - 16.0)
                .abs()
                < 1e-12
        );
        let both = CoeffVector::new(vec![1.0, 1.0]).unwrap();
        assert!((s.sobolev_norm_sq(&both, 0.5).unwrap() - 5.0).abs() < 1e-12);
        assert!(s.sobolev_norm_sq(&CoeffVector::zeros(3), 0.0).is_err());
        let big = Spectrum::dirichlet_interval(1e-3, 5).unwrap();
        assert!(matches!(
            big.sobolev_norm_sq(&CoeffVector::new(vec![1e200; 5]).unwrap(), 2.0),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn synthesize_zero_and_unit() {
        let s = Spectrum::dirichlet_interval(PI, 4).unwrap();
        assert_eq!(s.synthesize(&CoeffVector::zeros(4), &[1.0]).unwrap(), 0.0);
        let v = s.synthesize(&CoeffVector::unit(4, 2, 1.0), &[0.4]).unwrap();
        assert!((v - s.eigenfunction(2, &[0.4]).unwrap()).abs() < 1e-15);
    }
}
