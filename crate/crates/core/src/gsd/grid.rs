//! Recursive sub-density integration over the canonical joint law of
//! sequential z-statistics.
//!
//! Under maximum information `I` and analysis-scale effect `theta`, the
//! look-k statistic is `Z_k ~ N(delta * sqrt(t_k), 1)` with
//! `delta = theta * sqrt(I)` and `Cov(Z_i, Z_j) = sqrt(t_i / t_j)`. The
//! increments are Markov, so the density of `Z_k` restricted to paths that
//! stayed below every earlier boundary satisfies a one-dimensional
//! recursion, evaluated here on a uniform grid with Simpson weights.

use crate::error::{Error, Result};
use crate::normal::{std_normal_pdf, std_normal_sf};

/// Integration grid parameters: `points` nodes spanning `half_width`
/// standard deviations either side of each look's drifted mean (truncated
/// above at the look's boundary).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
}

impl GridSpec {
    /// Grid pinned for boundary construction.
    pub const BOUNDARY: GridSpec = GridSpec {
        half_width: 8.0,
        points: 4001,
    };

    /// Leaner grid for the inference-side inversions; Simpson error is
    /// still two orders below the 1e-8 probability tolerances.
    pub const INFERENCE: GridSpec = GridSpec {
        half_width: 8.0,
        points: 1601,
    };

    pub fn validate(&self) -> Result<()> {
        if self.points < 9 || self.points.is_multiple_of(2) {
            return Err(Error::domain(format!(
                "grid needs an odd number of points >= 9; got {}",
                self.points
            )));
        }
        if !(self.half_width > 2.0) {
            return Err(Error::domain(format!(
                "grid half-width too small: {}",
                self.half_width
            )));
        }
        Ok(())
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::BOUNDARY
    }
}

/// Sub-density of `Z_k` on a uniform grid, together with the history
/// truncation that produced it.
#[derive(Debug, Clone)]
pub struct SubDensity {
    /// Grid nodes (uniform spacing).
    pub z: Vec<f64>,
    /// Sub-density values at the nodes.
    pub f: Vec<f64>,
    /// Node spacing.
    pub step: f64,
}

impl SubDensity {
    /// Simpson integral of the sub-density over its grid.
    pub fn total_mass(&self) -> f64 {
        simpson(&self.f, self.step)
    }

    /// Simpson integral of `f(z) * g(z)` over the grid.
    fn integrate_with(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        let vals: Vec<f64> = self
            .z
            .iter()
            .zip(&self.f)
            .map(|(&z, &f)| f * g(z))
            .collect();
        simpson(&vals, self.step)
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton
/// iteration on the Legendre recurrence. Used for the analytic
/// first-look tail integrals where a fixed low node count beats a dense
/// uniform grid.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let mut p0 = 1.0;
                let mut p1 = x;
                for j in 2..=n {
                    let pj = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = pj;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrate `f` over [a, b].
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// Composite Simpson rule on a uniform grid with an odd number of nodes.
pub fn simpson(values: &[f64], step: f64) -> f64 {
    debug_assert!(values.len() % 2 == 1 && values.len() >= 3);
    let n = values.len();
    let mut acc = values[0] + values[n - 1];
    let mut i = 1;
    while i < n - 1 {
        acc += 4.0 * values[i];
        if i + 1 < n - 1 {
            acc += 2.0 * values[i + 1];
        }
        i += 2;
    }
    acc * step / 3.0
}

/// Transition parameters from look `k-1` to look `k`.
#[derive(Debug, Clone, Copy)]
struct Transition {
    /// `sqrt(t_{k-1} / t_k)`
    rho: f64,
    /// Drift increment `delta * (t_k - t_{k-1}) / sqrt(t_k)`.
    shift: f64,
    /// Conditional standard deviation `sqrt(1 - t_{k-1} / t_k)`.
    sigma: f64,
}

fn transition(t_prev: f64, t_next: f64, delta: f64) -> Transition {
    Transition {
        rho: (t_prev / t_next).sqrt(),
        shift: delta * (t_next - t_prev) / t_next.sqrt(),
        sigma: (1.0 - t_prev / t_next).sqrt(),
    }
}

/// Recursion engine over the continuation regions of a design.
///
/// `boundaries[k]` may be `f64::INFINITY` for zero-spend looks, in which
/// case the continuation region at that look is the full grid range.
pub struct Recursion<'a> {
    info_fractions: &'a [f64],
    /// Drift at full information, `theta * sqrt(I_max)`.
    delta: f64,
    grid: GridSpec,
}

impl<'a> Recursion<'a> {
    pub fn new(info_fractions: &'a [f64], delta: f64, grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        Ok(Recursion {
            info_fractions,
            delta,
            grid,
        })
    }

    fn look_mean(&self, k: usize) -> f64 {
        self.delta * self.info_fractions[k].sqrt()
    }

    /// Uniform grid over the continuation region of look `k` (index
    /// 0-based): `[mean - hw, min(mean + hw, boundary)]`.
    fn continuation_grid(&self, k: usize, boundary: f64) -> (Vec<f64>, f64) {
        let m = self.look_mean(k);
        let lo = m - self.grid.half_width;
        let hi = if boundary.is_finite() {
            boundary.min(m + self.grid.half_width).max(lo + 1e-6)
        } else {
            m + self.grid.half_width
        };
        let n = self.grid.points;
        let step = (hi - lo) / (n - 1) as f64;
        ((0..n).map(|i| lo + step * i as f64).collect(), step)
    }

    /// Sub-density of `Z_1` restricted to the continuation region below
    /// `boundary` (pass `INFINITY` for the untruncated density).
    pub fn first_look(&self, boundary: f64) -> SubDensity {
        let (z, step) = self.continuation_grid(0, boundary);
        let m = self.look_mean(0);
        let f = z.iter().map(|&x| std_normal_pdf(x - m)).collect();
        SubDensity { z, f, step }
    }

    /// Advance the sub-density from look `k-1` (given on `prev`, already
    /// truncated at its boundary) to look `k`, truncating at `boundary`.
    pub fn advance(&self, prev: &SubDensity, k: usize, boundary: f64) -> SubDensity {
        let tr = transition(
            self.info_fractions[k - 1],
            self.info_fractions[k],
            self.delta,
        );
        let (z, step) = self.continuation_grid(k, boundary);
        let f = z
            .iter()
            .map(|&target| {
                prev.integrate_with(|x| {
                    std_normal_pdf((target - tr.rho * x - tr.shift) / tr.sigma) / tr.sigma
                })
            })
            .collect();
        SubDensity { z, f, step }
    }

    /// P(no crossing before look `k`, `Z_k >= threshold`), given the
    /// continuation sub-density of look `k-1`.
    pub fn tail_beyond(&self, prev: &SubDensity, k: usize, threshold: f64) -> f64 {
        if threshold == f64::INFINITY {
            return 0.0;
        }
        let tr = transition(
            self.info_fractions[k - 1],
            self.info_fractions[k],
            self.delta,
        );
        prev.integrate_with(|x| std_normal_sf((threshold - tr.rho * x - tr.shift) / tr.sigma))
    }

    /// P(`Z_1 >= threshold`).
    pub fn first_tail(&self, threshold: f64) -> f64 {
        std_normal_sf(threshold - self.look_mean(0))
    }

    /// Expected value of `Z_k` restricted to `{no crossing before k,
    /// Z_k >= threshold}`, given the look `k-1` sub-density. Used by the
    /// quadrature cross-check of the Monte Carlo engine.
    pub fn tail_mean_beyond(&self, prev: &SubDensity, k: usize, threshold: f64) -> f64 {
        if threshold == f64::INFINITY {
            return 0.0;
        }
        let tr = transition(
            self.info_fractions[k - 1],
            self.info_fractions[k],
            self.delta,
        );
        prev.integrate_with(|x| {
            let mean = tr.rho * x + tr.shift;
            let a = (threshold - mean) / tr.sigma;
            mean * std_normal_sf(a) + tr.sigma * std_normal_pdf(a)
        })
    }

    /// Expected value of `Z_1` restricted to `{Z_1 >= threshold}`.
    pub fn first_tail_mean(&self, threshold: f64) -> f64 {
        let m = self.look_mean(0);
        let a = threshold - m;
        m * std_normal_sf(a) + std_normal_pdf(a)
    }

    /// Unrestricted mean of `Z_k` over the continuation sub-density of the
    /// previous look (the final look stops regardless of crossing).
    pub fn full_mean(&self, prev: &SubDensity, k: usize) -> f64 {
        let tr = transition(
            self.info_fractions[k - 1],
            self.info_fractions[k],
            self.delta,
        );
        prev.integrate_with(|x| tr.rho * x + tr.shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_gaussian() {
        let gl = GaussLegendre::new(96);
        let total = gl.integrate(-8.5, 8.5, crate::normal::std_normal_pdf);
        assert!((total - 1.0).abs() < 1e-13, "GL mass {total}");
        // Low order sanity: exact for polynomials of degree < 2n.
        let gl4 = GaussLegendre::new(4);
        let cubic = gl4.integrate(0.0, 2.0, |x| x * x * x);
        assert!((cubic - 4.0).abs() < 1e-13);
    }

    #[test]
    fn simpson_integrates_polynomials_exactly() {
        // x^3 on [0, 2]
        let n = 9;
        let step = 2.0 / (n - 1) as f64;
        let vals: Vec<f64> = (0..n).map(|i| (step * i as f64).powi(3)).collect();
        assert!((simpson(&vals, step) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn first_look_mass_is_one_untruncated() {
        let fr = [0.5, 1.0];
        let rec = Recursion::new(&fr, 0.0, GridSpec::BOUNDARY).unwrap();
        let f1 = rec.first_look(f64::INFINITY);
        assert!((f1.total_mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn truncated_mass_matches_cdf() {
        let fr = [0.5, 1.0];
        let rec = Recursion::new(&fr, 1.3, GridSpec::BOUNDARY).unwrap();
        let b = 2.2;
        let f1 = rec.first_look(b);
        let expect = crate::normal::std_normal_cdf(b - 1.3 * 0.5f64.sqrt());
        assert!((f1.total_mass() - expect).abs() < 1e-10);
    }

    #[test]
    fn advanced_density_conserves_mass() {
        let fr = [0.4, 0.7, 1.0];
        let rec = Recursion::new(&fr, 0.7, GridSpec::BOUNDARY).unwrap();
        let f1 = rec.first_look(2.5);
        let f2 = rec.advance(&f1, 1, f64::INFINITY);
        // Mass of the untruncated look-2 sub-density equals the mass that
        // survived look 1.
        assert!((f2.total_mass() - f1.total_mass()).abs() < 1e-9);
    }

    #[test]
    fn tail_beyond_matches_density_split() {
        let fr = [0.4, 1.0];
        let rec = Recursion::new(&fr, 0.0, GridSpec::BOUNDARY).unwrap();
        let f1 = rec.first_look(2.5);
        let tail = rec.tail_beyond(&f1, 1, 1.8);
        let f2_full = rec.advance(&f1, 1, f64::INFINITY);
        let f2_trunc = rec.advance(&f1, 1, 1.8);
        assert!((tail - (f2_full.total_mass() - f2_trunc.total_mass())).abs() < 1e-8);
    }
}
