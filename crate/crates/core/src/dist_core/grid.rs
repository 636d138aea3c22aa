use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{gauss_legendre5, stable_sum, EPS_NORM};

/// How the CDF behaves between grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interpolation {
    /// Piecewise-linear CDF (piecewise-constant density between grid points).
    Linear,
    /// Right-continuous step CDF: the grid points are atoms.
    Step,
}

/// A real-valued law represented by its CDF on a strictly increasing grid.
///
/// `cdf_error` bounds the uniform gap between the represented CDF and the law it
/// approximates inside the grid; `tail_w` bounds `∫ min(F, 1 - F)` outside it.
/// Both are zero for exact representations (atoms, uniform laws).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GriddedLaw {
    grid: Vec<f64>,
    cdf_values: Vec<f64>,
    density_values: Option<Vec<f64>>,
    interpolation: Interpolation,
    cdf_error: f64,
    tail_w: f64,
}

impl GriddedLaw {
    fn validate(grid: &[f64], cdf: &[f64]) -> Result<()> {
        if grid.is_empty() || grid.len() != cdf.len() {
            return Err(Error::domain("grid and cdf must be non-empty and aligned"));
        }
        if grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("grid abscissae must be finite"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("grid must be strictly increasing"));
        }
        if cdf.windows(2).any(|w| w[1] < w[0] - EPS_NORM) {
            return Err(Error::domain("cdf values must be non-decreasing"));
        }
        if cdf.iter().any(|&c| !(-EPS_NORM..=1.0 + EPS_NORM).contains(&c)) {
            return Err(Error::domain("cdf values must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Discrete law with the given atoms. Duplicate points are merged.
    pub fn from_atoms(points: &[f64], probs: &[f64]) -> Result<Self> {
        if points.len() != probs.len() || points.is_empty() {
            return Err(Error::domain("atoms and masses must be non-empty and aligned"));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::domain("atom masses must be non-negative"));
        }
        let total = stable_sum(probs.iter().copied());
        if (total - 1.0).abs() > EPS_NORM {
            return Err(Error::Normalization { total });
        }
        let mut pairs: Vec<(f64, f64)> = points.iter().copied().zip(probs.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut grid: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut masses: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, p) in pairs {
            if grid.last() == Some(&x) {
                *masses.last_mut().unwrap() += p;
            } else {
                grid.push(x);
                masses.push(p);
            }
        }
        let mut acc = crate::numeric::NeumaierSum::default();
        let mut cdf: Vec<f64> = masses
            .iter()
            .map(|&p| {
                acc.add(p);
                acc.total().min(1.0)
            })
            .collect();
        *cdf.last_mut().unwrap() = 1.0;
        Self::validate(&grid, &cdf)?;
        Ok(Self {
            grid,
            cdf_values: cdf,
            density_values: None,
            interpolation: Interpolation::Step,
            cdf_error: 0.0,
            tail_w: 0.0,
        })
    }

    /// Uniform law on `[lo, hi]`, represented exactly.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::domain("uniform law needs lo < hi"));
        }
        let d = 1.0 / (hi - lo);
        Ok(Self {
            grid: vec![lo, hi],
            cdf_values: vec![0.0, 1.0],
            density_values: Some(vec![d, d]),
            interpolation: Interpolation::Linear,
            cdf_error: 0.0,
            tail_w: 0.0,
        })
    }

    /// Piecewise-linear CDF sampled from `cdf` at `grid`, with caller-supplied error bounds.
    pub fn from_cdf_fn<F: Fn(f64) -> f64>(
        grid: Vec<f64>,
        cdf: F,
        cdf_error: f64,
        tail_w: f64,
    ) -> Result<Self> {
        let cdf_values: Vec<f64> = grid.iter().map(|&x| cdf(x).clamp(0.0, 1.0)).collect();
        Self::validate(&grid, &cdf_values)?;
        Ok(Self {
            grid,
            cdf_values,
            density_values: None,
            interpolation: Interpolation::Linear,
            cdf_error,
            tail_w,
        })
    }

    /// Law with the piecewise-linear density through `(xs, density)`.
    ///
    /// CDF values at the grid come from the trapezoid rule (exact for the
    /// piecewise-linear density); the density is renormalized to unit mass.
    pub fn from_density(xs: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != density.len() {
            return Err(Error::domain("density grid needs at least two aligned points"));
        }
        if density.iter().any(|&d| !(d >= 0.0 && d.is_finite())) {
            return Err(Error::domain("density values must be finite and non-negative"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("grid must be strictly increasing"));
        }
        let mut cum = vec![0.0; xs.len()];
        let mut deviation: f64 = 0.0;
        for i in 1..xs.len() {
            let h = xs[i] - xs[i - 1];
            cum[i] = cum[i - 1] + 0.5 * h * (density[i] + density[i - 1]);
            deviation = deviation.max((density[i] - density[i - 1]).abs() * h / 8.0);
        }
        let total = cum[cum.len() - 1];
        if !(total > 0.0) {
            return Err(Error::domain("density has zero total mass"));
        }
        let cdf_values: Vec<f64> = cum.iter().map(|c| (c / total).min(1.0)).collect();
        let density_values = density.iter().map(|d| d / total).collect();
        Self::validate(&xs, &cdf_values)?;
        Ok(Self {
            grid: xs,
            cdf_values,
            density_values: Some(density_values),
            interpolation: Interpolation::Linear,
            cdf_error: deviation / total,
            tail_w: 0.0,
        })
    }

    /// Parses the two-column `x,density` CSV format (header required).
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let names: Vec<&str> = headers.iter().collect();
        if names != ["x", "density"] {
            return Err(Error::Parse(format!("expected header `x,density`, found `{}`", names.join(","))));
        }
        let mut xs = Vec::new();
        let mut ds = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Parse(format!("row {}: expected 2 fields", line + 2)));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", line + 2)))
            };
            xs.push(parse(&rec[0])?);
            ds.push(parse(&rec[1])?);
        }
        Self::from_density(xs, ds)
    }

    pub fn from_csv_path(path: &std::path::Path) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf_values
    }

    pub fn density_values(&self) -> Option<&[f64]> {
        self.density_values.as_deref()
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn cdf_error(&self) -> f64 {
        self.cdf_error
    }

    pub fn tail_w(&self) -> f64 {
        self.tail_w
    }

    pub fn support(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    /// Atoms and their masses (step laws only).
    pub fn atoms(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self.interpolation {
            Interpolation::Step => {
                let mut prev = 0.0;
                let masses = self
                    .cdf_values
                    .iter()
                    .map(|&c| {
                        let m = (c - prev).max(0.0);
                        prev = c;
                        m
                    })
                    .collect();
                Some((self.grid.clone(), masses))
            }
            Interpolation::Linear => None,
        }
    }

    /// Represented CDF at `x` (right-continuous).
    pub fn cdf(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x < g[0] {
            return 0.0;
        }
        if x >= g[g.len() - 1] {
            return match self.interpolation {
                Interpolation::Step => 1.0,
                Interpolation::Linear => self.cdf_values[g.len() - 1],
            };
        }
        // index of the last grid point <= x
        let i = g.partition_point(|&v| v <= x) - 1;
        match self.interpolation {
            Interpolation::Step => self.cdf_values[i],
            Interpolation::Linear => {
                let t = (x - g[i]) / (g[i + 1] - g[i]);
                self.cdf_values[i] + t * (self.cdf_values[i + 1] - self.cdf_values[i])
            }
        }
    }

    /// `E f(X)` under the represented law.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        match self.interpolation {
            Interpolation::Step => {
                let (pts, ms) = self.atoms().unwrap();
                stable_sum(pts.iter().zip(ms.iter()).map(|(&x, &m)| m * f(x)))
            }
            Interpolation::Linear => {
                let g = &self.grid;
                let mut terms = Vec::with_capacity(g.len());
                if self.cdf_values[0] > 0.0 {
                    terms.push(self.cdf_values[0] * f(g[0]));
                }
                for i in 1..g.len() {
                    let mass = self.cdf_values[i] - self.cdf_values[i - 1];
                    if mass <= 0.0 {
                        continue;
                    }
                    let h = g[i] - g[i - 1];
                    terms.push(mass / h * gauss_legendre5(&f, g[i - 1], g[i]));
                }
                stable_sum(terms)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expect(|x| (x - m) * (x - m))
    }

    /// Left-continuous quantile `inf{x : F(x) >= u}`.
    pub fn quantile(&self, u: f64) -> f64 {
        let g = &self.grid;
        let c = &self.cdf_values;
        let i = c.partition_point(|&v| v < u);
        if i >= g.len() {
            return g[g.len() - 1];
        }
        match self.interpolation {
            Interpolation::Step => g[i],
            Interpolation::Linear => {
                if i == 0 {
                    return g[0];
                }
                let span = c[i] - c[i - 1];
                if span <= 0.0 {
                    return g[i];
                }
                g[i - 1] + (u - c[i - 1]) / span * (g[i] - g[i - 1])
            }
        }
    }

    /// Law of `scale * X` for `scale > 0`.
    pub fn scaled(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::domain("scale must be positive"));
        }
        Ok(Self {
            grid: self.grid.iter().map(|x| x * scale).collect(),
            cdf_values: self.cdf_values.clone(),
            density_values: self.density_values.as_ref().map(|d| d.iter().map(|v| v / scale).collect()),
            interpolation: self.interpolation,
            cdf_error: self.cdf_error,
            tail_w: self.tail_w * scale,
        })
    }

    /// Left limit `F(x-)` of the represented CDF.
    pub fn cdf_left(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x <= g[0] {
            return 0.0;
        }
        match self.interpolation {
            Interpolation::Step => {
                let i = g.partition_point(|&v| v < x) - 1;
                self.cdf_values[i]
            }
            Interpolation::Linear => self.cdf(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atoms_merge_and_sort() {
        let law = GriddedLaw::from_atoms(&[2.0, 0.0, 2.0], &[0.25, 0.5, 0.25]).unwrap();
        assert_eq!(law.grid(), &[0.0, 2.0]);
        assert_eq!(law.cdf(1.0), 0.5);
        assert_eq!(law.cdf(2.0), 1.0);
        assert!((law.mean() - 1.0).abs() < 1e-15);
        assert_eq!(law.quantile(0.5), 0.0);
        assert_eq!(law.quantile(0.51), 2.0);
    }

    #[test]
    fn uniform_moments_and_quantile() {
        let u = GriddedLaw::uniform(0.0, 2.0).unwrap();
        assert!((u.mean() - 1.0).abs() < 1e-15);
        assert!((u.variance() - 1.0 / 3.0).abs() < 1e-14);
        assert!((u.quantile(0.25) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn density_csv_roundtrip() {
        let csv = "x,density\n0,0\n1,1\n2,0\n";
        let law = GriddedLaw::from_csv_reader(csv.as_bytes()).unwrap();
        assert!((law.cdf(1.0) - 0.5).abs() < 1e-15);
        assert!((law.cdf_error() - 1.0 / 8.0).abs() < 1e-15);
        assert!(GriddedLaw::from_csv_reader("a,b\n0,1\n1,1\n".as_bytes()).is_err());
        assert!(GriddedLaw::from_csv_reader("x,density\n1,1\n0,1\n".as_bytes()).is_err());
    }
}
