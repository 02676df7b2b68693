//! Quantities derived from posterior draws: one-step-ahead predictive
//! densities and means, HPD regions, model fit, the noise-density estimate,
//! coefficient summaries, and a least-squares ARX baseline.
//!
//! Densities are evaluated on a fixed grid. Each draw contributes an exact
//! Gaussian mixture, so averaging over draws is deterministic. Component
//! densities are only accumulated within nine standard deviations of their
//! mean.

mod baseline;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{dot, quantile_sorted, HALF_LN_2PI};
use crate::model::{ParameterVector, RegressionDataset};
use crate::sampler::PosteriorDraws;

pub use baseline::{least_squares, ls_arx_baseline, BaselineFit, CandidateScore, OrderGrid};

pub const DEFAULT_GRID_POINTS: usize = 2001;

/// Components lighter than this are ignored when sizing grids.
const GRID_WEIGHT_FLOOR: f64 = 0.01;

/// A density tabulated on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveDensity {
    /// Time index of the predicted output; `None` for the noise density.
    pub t: Option<usize>,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub mean: f64,
}

impl PredictiveDensity {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }

    /// Mean of the tabulated density.
    pub fn first_moment(&self) -> f64 {
        let xf: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.density)
            .map(|(x, f)| x * f)
            .collect();
        trapezoid(&self.grid, &xf) / self.integral()
    }

    /// Integral of the linearly interpolated density over `[lo, hi]`,
    /// clipped to the grid.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        let g = &self.grid;
        let f = &self.density;
        let mut mass = 0.0;
        for i in 0..g.len().saturating_sub(1) {
            let (a, b) = (g[i].max(lo), g[i + 1].min(hi));
            if b <= a {
                continue;
            }
            let slope = (f[i + 1] - f[i]) / (g[i + 1] - g[i]);
            let at = |x: f64| f[i] + slope * (x - g[i]);
            mass += 0.5 * (at(a) + at(b)) * (b - a);
        }
        mass
    }

    pub fn argmax(&self) -> f64 {
        let i =
            self.density.iter().enumerate().fold(
                0,
                |best, (i, d)| if *d > self.density[best] { i } else { best },
            );
        self.grid[i]
    }
}

pub fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2)
        .zip(f.windows(2))
        .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
        .sum()
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidInput("grid needs at least 2 points".into()));
    }
    if let Some(i) = grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(format!(
            "grid is not strictly increasing at index {}",
            i + 1
        )));
    }
    Ok(())
}

/// Largest component scale of a draw among components with non-negligible
/// weight.
fn draw_scale(p: &ParameterVector) -> f64 {
    p.w.iter()
        .zip(&p.sigma)
        .filter(|(w, _)| **w >= GRID_WEIGHT_FLOOR)
        .map(|(_, s)| *s)
        .fold(0.0, f64::max)
}

fn quantile_of<I: Iterator<Item = f64>>(values: I, q: f64) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

/// Grid over `[y_min − 4σ, y_max + 4σ]`, where `σ` is the 99.5% quantile
/// over draws of the largest non-negligible component scale.
pub fn predictive_grid(
    draws: &PosteriorDraws,
    y_min: f64,
    y_max: f64,
    n: usize,
) -> Result<Vec<f64>> {
    if draws.is_empty() {
        return Err(Error::EmptyDraws);
    }
    let sigma = quantile_of(draws.iter().map(draw_scale), 0.995);
    Ok(linspace(y_min - 4.0 * sigma, y_max + 4.0 * sigma, n))
}

/// Grid covering six scales either side of every non-negligible noise
/// component (0.5% and 99.5% quantiles over draws).
pub fn noise_grid(draws: &PosteriorDraws, n: usize) -> Result<Vec<f64>> {
    if draws.is_empty() {
        return Err(Error::EmptyDraws);
    }
    let edge = |sign: f64| {
        move |p: &ParameterVector| {
            p.w.iter()
                .zip(&p.mu)
                .zip(&p.sigma)
                .filter(|((w, _), _)| **w >= GRID_WEIGHT_FLOOR)
                .map(|((_, m), s)| sign * (m + sign * 6.0 * s))
                .fold(f64::NEG_INFINITY, f64::max)
                * sign
        }
    };
    let lo = quantile_of(draws.iter().map(edge(-1.0)), 0.005);
    let hi = quantile_of(draws.iter().map(edge(1.0)), 0.995);
    Ok(linspace(lo, hi, n))
}

/// Adds `weight · N(g; mean, sd²)` at every grid point within nine standard
/// deviations of `mean`.
fn accumulate_normal(grid: &[f64], out: &mut [f64], weight: f64, mean: f64, sd: f64) {
    let a = grid.partition_point(|g| *g < mean - 9.0 * sd);
    let b = grid.partition_point(|g| *g <= mean + 9.0 * sd);
    let log_norm = weight.ln() - HALF_LN_2PI - sd.ln();
    for (g, o) in grid[a..b].iter().zip(&mut out[a..b]) {
        let r = (g - mean) / sd;
        *o += (log_norm - 0.5 * r * r).exp();
    }
}

fn mixture_average<'a, I>(
    draws: I,
    grid: &[f64],
    mut shift: impl FnMut(&ParameterVector) -> f64,
) -> Result<(Vec<f64>, f64)>
where
    I: IntoIterator<Item = &'a ParameterVector>,
{
    let mut density = vec![0.0; grid.len()];
    let mut mean = 0.0;
    let mut n = 0usize;
    for p in draws {
        let c = shift(p);
        for ((w, m), s) in p.w.iter().zip(&p.mu).zip(&p.sigma) {
            if *w > 0.0 {
                accumulate_normal(grid, &mut density, *w, c + m, *s);
            }
        }
        mean += c + dot(&p.w, &p.mu);
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyDraws);
    }
    let n = n as f64;
    density.iter_mut().for_each(|d| *d /= n);
    Ok((density, mean / n))
}

/// One-step-ahead predictive density of the output with regressor row
/// `phi_t`: the average over draws of `Σ_k w_k N(g; phi_t·[a;b] + mu_k, sigma_k²)`.
pub fn predictive_density<'a, I>(
    draws: I,
    phi_t: &[f64],
    grid: &[f64],
    t: Option<usize>,
) -> Result<PredictiveDensity>
where
    I: IntoIterator<Item = &'a ParameterVector>,
{
    check_grid(grid)?;
    let mut mismatch = None;
    let (density, mean) = mixture_average(draws, grid, |p| {
        let c = p.coefficients();
        if c.len() != phi_t.len() {
            mismatch = Some(c.len());
            return 0.0;
        }
        dot(phi_t, &c)
    })?;
    if let Some(actual) = mismatch {
        return Err(Error::DimensionMismatch {
            expected: phi_t.len(),
            actual,
        });
    }
    Ok(PredictiveDensity {
        t,
        grid: grid.to_vec(),
        density,
        mean,
    })
}

/// Predictive densities for every row of `rows`, computed in parallel.
pub fn predictive_densities(
    draws: &[&ParameterVector],
    rows: &RegressionDataset,
    grid: &[f64],
) -> Result<Vec<PredictiveDensity>> {
    (0..rows.n_rows())
        .into_par_iter()
        .map(|i| {
            predictive_density(
                draws.iter().copied(),
                rows.row(i),
                grid,
                Some(rows.first_t + i),
            )
        })
        .collect()
}

/// Predictive means for every row of `rows`. The mean is linear in the
/// draws, so it reduces to `phi_t · E[a;b] + E[Σ w_k mu_k]`.
pub fn predictive_means(draws: &PosteriorDraws, rows: &RegressionDataset) -> Result<Vec<f64>> {
    if draws.is_empty() {
        return Err(Error::EmptyDraws);
    }
    let n = draws.n_draws() as f64;
    let mut coef = vec![0.0; rows.width()];
    let mut offset = 0.0;
    for p in draws.iter() {
        let c = p.coefficients();
        if c.len() != coef.len() {
            return Err(Error::DimensionMismatch {
                expected: coef.len(),
                actual: c.len(),
            });
        }
        coef.iter_mut().zip(&c).for_each(|(m, c)| *m += c / n);
        offset += dot(&p.w, &p.mu) / n;
    }
    Ok(rows
        .rows()
        .map(|(row, _)| dot(row, &coef) + offset)
        .collect())
}

/// Posterior-averaged noise density `Σ_k w_k N(g; mu_k, sigma_k²)`.
pub fn noise_density_estimate<'a, I>(draws: I, grid: &[f64]) -> Result<PredictiveDensity>
where
    I: IntoIterator<Item = &'a ParameterVector>,
{
    check_grid(grid)?;
    let (density, mean) = mixture_average(draws, grid, |_| 0.0)?;
    Ok(PredictiveDensity {
        t: None,
        grid: grid.to_vec(),
        density,
        mean,
    })
}

/// Highest-density region as a union of disjoint, sorted intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpdRegion {
    pub level: f64,
    pub intervals: Vec<(f64, f64)>,
    /// Probability covered, relative to the grid total.
    pub mass: f64,
    /// The region reaches the end of the grid, so it may be cut short.
    pub truncated: bool,
}

impl HpdRegion {
    /// `lo1:hi1;lo2:hi2`.
    pub fn to_compact_string(&self) -> String {
        self.intervals
            .iter()
            .map(|(lo, hi)| format!("{lo}:{hi}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals
            .iter()
            .any(|(lo, hi)| (*lo..=*hi).contains(&x))
    }
}

/// `(lo, hi, mass)` of one super-level interval.
type Part = (f64, f64, f64);

/// Components of `{f ≥ c}` under the linear interpolant of the tabulated
/// density, each as `(lo, hi, mass)`, plus the total mass.
fn super_level_set(grid: &[f64], f: &[f64], c: f64, collect: bool) -> (f64, Vec<Part>) {
    let mut total = 0.0;
    let mut parts: Vec<Part> = Vec::new();
    for i in 0..grid.len() - 1 {
        let (x0, x1, f0, f1) = (grid[i], grid[i + 1], f[i], f[i + 1]);
        let (lo, hi, m) = match (f0 >= c, f1 >= c) {
            (true, true) => (x0, x1, 0.5 * (f0 + f1) * (x1 - x0)),
            (false, false) => continue,
            (true, false) => {
                let x = x0 + (f0 - c) / (f0 - f1) * (x1 - x0);
                (x0, x, 0.5 * (f0 + c) * (x - x0))
            }
            (false, true) => {
                let x = x0 + (c - f0) / (f1 - f0) * (x1 - x0);
                (x, x1, 0.5 * (c + f1) * (x1 - x))
            }
        };
        total += m;
        if collect {
            match parts.last_mut() {
                Some(last) if last.1 == lo => {
                    last.1 = hi;
                    last.2 += m;
                }
                _ => parts.push((lo, hi, m)),
            }
        }
    }
    (total, parts)
}

/// Threshold and components of the HPD region. The threshold is the largest
/// density level whose super-level set holds `level` of the grid mass.
fn hpd_parts(pd: &PredictiveDensity, level: f64) -> Result<(f64, Vec<Part>)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(level));
    }
    check_grid(&pd.grid)?;
    let total = pd.integral();
    if !(total > 0.0) {
        return Err(Error::InvalidInput(
            "density has no mass on its grid".into(),
        ));
    }
    let (mut lo, mut hi) = (0.0, pd.density.iter().copied().fold(0.0, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if super_level_set(&pd.grid, &pd.density, mid, false).0 >= level * total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (_, parts) = super_level_set(&pd.grid, &pd.density, lo, true);
    let parts = parts
        .into_iter()
        .filter(|p| p.1 > p.0)
        .map(|(a, b, m)| (a, b, m / total))
        .collect();
    Ok((total, parts))
}

/// Highest-density region on the linear interpolant of the tabulated
/// density, split into its connected components. Interval ends are
/// interpolated between grid points.
pub fn hpd_region(pd: &PredictiveDensity, level: f64) -> Result<HpdRegion> {
    let (_, parts) = hpd_parts(pd, level)?;
    let g = &pd.grid;
    let n = g.len();
    let truncated = parts
        .first()
        .zip(parts.last())
        .is_some_and(|(first, last)| first.0 < g[1] || last.1 > g[n - 2]);
    Ok(HpdRegion {
        level,
        intervals: parts.iter().map(|p| (p.0, p.1)).collect(),
        mass: parts.iter().map(|p| p.2).sum(),
        truncated,
    })
}

/// A connected component of an HPD region with the density maximum inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub location: f64,
    pub lower: f64,
    pub upper: f64,
    /// Mass of the component relative to the grid total.
    pub mass: f64,
}

/// One mode per connected component of the HPD region at `level`.
pub fn hpd_modes(pd: &PredictiveDensity, level: f64) -> Result<Vec<Mode>> {
    let (_, parts) = hpd_parts(pd, level)?;
    Ok(parts
        .into_iter()
        .map(|(lo, hi, mass)| {
            let a = pd.grid.partition_point(|g| *g < lo);
            let b = pd.grid.partition_point(|g| *g <= hi);
            let location = (a..b)
                .max_by(|&i, &j| pd.density[i].total_cmp(&pd.density[j]))
                .map_or(0.5 * (lo + hi), |i| pd.grid[i]);
            Mode {
                location,
                lower: lo,
                upper: hi,
                mass,
            }
        })
        .collect())
}

/// `100·(1 − Σ(y − ŷ)² / Σ(y − ȳ)²)`.
pub fn model_fit(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    if y_true.len() < 2 {
        return Err(Error::InvalidInput(
            "model fit needs at least 2 points".into(),
        ));
    }
    let m = crate::math::mean(y_true);
    let sst: f64 = y_true.iter().map(|y| (y - m).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::ConstantSeries);
    }
    let sse: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(y, p)| (y - p).powi(2))
        .sum();
    Ok(100.0 * (1.0 - sse / sst))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// 2.5% quantile.
    pub lower: f64,
    /// 97.5% quantile.
    pub upper: f64,
    /// The central 95% interval does not contain zero.
    pub excludes_zero: bool,
}

/// Marginal summaries of the regression coefficients, pooled over chains.
pub fn coefficient_summaries(draws: &PosteriorDraws) -> Result<Vec<CoefficientSummary>> {
    if draws.is_empty() {
        return Err(Error::EmptyDraws);
    }
    let names = crate::diagnostics::coefficient_names(draws.model.n_a, draws.model.n_b);
    Ok(names
        .into_iter()
        .enumerate()
        .map(|(j, name)| {
            let mut v: Vec<f64> = draws.coefficient_chains(j).concat();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let sd = if v.len() > 1 {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            v.sort_by(f64::total_cmp);
            let lower = quantile_sorted(&v, 0.025);
            let upper = quantile_sorted(&v, 0.975);
            CoefficientSummary {
                name,
                mean,
                sd,
                lower,
                upper,
                excludes_zero: lower > 0.0 || upper < 0.0,
            }
        })
        .collect())
}
