//! Group-sequential design construction: alpha-spending functions,
//! efficacy boundaries solved by recursive sub-density integration, local
//! significance levels, and crossing probabilities under arbitrary drift.

mod grid;

pub use grid::{simpson, GaussLegendre, GridSpec, Recursion, SubDensity};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::{norm_quantile, std_normal_sf};
use crate::solve::bisect;

/// Spending increments at or below this size are treated as zero-spend
/// looks with an infinite boundary.
const MIN_SPEND_INCREMENT: f64 = 1e-10;

/// Cumulative one-sided alpha-spending function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpendingFunction {
    /// O'Brien-Fleming type: `a(t) = 2 * (1 - Phi(q(1 - alpha/2) / sqrt(t)))`.
    ObrienFlemingType,
    /// Pocock type: `a(t) = alpha * ln(1 + (e - 1) * t)`.
    PocockType,
    /// User-supplied cumulative spend, linearly interpolated in `t`
    /// between knots. Must start no earlier than (0, 0) and end at
    /// `(1, alpha_total)`.
    UserTable { knots: Vec<(f64, f64)> },
}

/// Cumulative spend at information fraction `t` for a total one-sided
/// error budget `alpha_total`.
pub fn spend(f: &SpendingFunction, t: f64, alpha_total: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!(
            "information fraction must lie in [0, 1]; got {t}"
        )));
    }
    if !(alpha_total > 0.0 && alpha_total < 1.0) {
        return Err(Error::domain(format!(
            "alpha_total must lie in (0, 1); got {alpha_total}"
        )));
    }
    let value = match f {
        SpendingFunction::ObrienFlemingType => {
            if t == 0.0 {
                0.0
            } else if t == 1.0 {
                alpha_total
            } else {
                let q = norm_quantile(1.0 - alpha_total / 2.0);
                (2.0 * std_normal_sf(q / t.sqrt())).min(alpha_total)
            }
        }
        SpendingFunction::PocockType => alpha_total * (1.0 + (std::f64::consts::E - 1.0) * t).ln(),
        SpendingFunction::UserTable { knots } => {
            validate_table(knots, alpha_total)?;
            interpolate_table(knots, t)
        }
    };
    Ok(value)
}

fn validate_table(knots: &[(f64, f64)], alpha_total: f64) -> Result<()> {
    let mut problems = Vec::new();
    if knots.is_empty() {
        problems.push("spending table has no knots".to_string());
    }
    for w in knots.windows(2) {
        if w[1].0 <= w[0].0 {
            problems.push(format!(
                "spending table fractions not increasing at t = {}",
                w[1].0
            ));
        }
        if w[1].1 + 1e-15 < w[0].1 {
            problems.push(format!(
                "spending table decreases at t = {} ({} -> {})",
                w[1].0, w[0].1, w[1].1
            ));
        }
    }
    if let Some(first) = knots.first() {
        if first.0 < 0.0 || first.1 < 0.0 {
            problems.push("spending table starts below (0, 0)".to_string());
        }
    }
    if let Some(last) = knots.last() {
        if (last.0 - 1.0).abs() > 1e-12 || (last.1 - alpha_total).abs() > 1e-12 {
            problems.push(format!(
                "spending table must end at (1, {alpha_total}); ends at ({}, {})",
                last.0, last.1
            ));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(problems))
    }
}

fn interpolate_table(knots: &[(f64, f64)], t: f64) -> f64 {
    // Implicit (0, 0) knot before the first.
    let mut prev = (0.0, 0.0);
    for &(tk, sk) in knots {
        if t <= tk {
            if tk == prev.0 {
                return sk;
            }
            return prev.1 + (sk - prev.1) * (t - prev.0) / (tk - prev.0);
        }
        prev = (tk, sk);
    }
    prev.1
}

/// A group-sequential design with computed efficacy boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSequentialDesign {
    /// Strictly increasing information fractions, last equal to 1.
    pub info_fractions: Vec<f64>,
    /// One-sided overall type 1 error.
    pub alpha_one_sided: f64,
    pub spending: SpendingFunction,
    /// Efficacy boundaries on the z scale; `INFINITY` for zero-spend looks.
    pub boundaries: Vec<f64>,
    /// One-sided local levels `1 - Phi(u_k)`.
    pub local_levels: Vec<f64>,
    /// Cumulative spend at each look.
    pub cumulative_spend: Vec<f64>,
    #[serde(skip, default)]
    grid: Option<GridSpec>,
}

impl GroupSequentialDesign {
    /// Number of looks.
    pub fn looks(&self) -> usize {
        self.info_fractions.len()
    }

    pub(crate) fn grid(&self) -> GridSpec {
        self.grid.unwrap_or(GridSpec::BOUNDARY)
    }
}

fn validate_fractions(info_fractions: &[f64]) -> Result<()> {
    let mut problems = Vec::new();
    if info_fractions.is_empty() {
        problems.push("design needs at least one look".to_string());
    }
    for (i, &t) in info_fractions.iter().enumerate() {
        if !(t > 0.0 && t <= 1.0) {
            problems.push(format!("info fraction [{i}] = {t} outside (0, 1]"));
        }
    }
    for w in info_fractions.windows(2) {
        if w[1] <= w[0] {
            problems.push(format!(
                "info fractions must be strictly increasing ({} then {})",
                w[0], w[1]
            ));
        }
    }
    if let Some(&last) = info_fractions.last() {
        if (last - 1.0).abs() > 1e-12 {
            problems.push(format!("final info fraction must be 1; got {last}"));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(problems))
    }
}

/// Construct a design: solve each look's boundary so that the null
/// crossing probability matches the spending increment, integrating the
/// continuation sub-density recursively. Boundaries are bit-reproducible
/// for fixed grid parameters.
pub fn compute_boundaries(
    info_fractions: &[f64],
    alpha_one_sided: f64,
    spending: SpendingFunction,
    grid: GridSpec,
) -> Result<GroupSequentialDesign> {
    validate_fractions(info_fractions)?;
    if !(alpha_one_sided > 0.0 && alpha_one_sided < 0.5) {
        return Err(Error::domain(format!(
            "one-sided alpha must lie in (0, 0.5); got {alpha_one_sided}"
        )));
    }
    grid.validate()?;

    let k_max = info_fractions.len();
    let mut cumulative = Vec::with_capacity(k_max);
    for &t in info_fractions {
        cumulative.push(spend(&spending, t, alpha_one_sided)?);
    }
    let mut boundaries = Vec::with_capacity(k_max);
    let mut local_levels = Vec::with_capacity(k_max);

    let rec = Recursion::new(info_fractions, 0.0, grid)?;
    let mut carried: Option<SubDensity> = None;
    let mut prev_spend = 0.0;
    for (k, &cum) in cumulative.iter().enumerate() {
        let increment = cum - prev_spend;
        if increment < -1e-12 {
            return Err(Error::Validation(vec![format!(
                "spending decreases at look {} (cumulative {cum} after {})",
                k + 1,
                prev_spend
            )]));
        }
        let boundary = if increment <= MIN_SPEND_INCREMENT {
            f64::INFINITY
        } else if k == 0 {
            norm_quantile(1.0 - increment)
        } else {
            let prev = carried.as_ref().expect("sub-density carried forward");
            bisect(
                |u| rec.tail_beyond(prev, k, u) - increment,
                -10.0,
                10.0,
                1e-8,
            )?
        };
        boundaries.push(boundary);
        local_levels.push(std_normal_sf(boundary));
        if k + 1 < k_max {
            let next = match &carried {
                None => rec.first_look(boundary),
                Some(prev) => rec.advance(prev, k, boundary),
            };
            carried = Some(next);
        }
        prev_spend = cum;
    }

    Ok(GroupSequentialDesign {
        info_fractions: info_fractions.to_vec(),
        alpha_one_sided,
        spending,
        boundaries,
        local_levels,
        cumulative_spend: cumulative,
        grid: Some(grid),
    })
}

/// Sub-density of `Z_k` (1-based look index) given no earlier crossing,
/// under drift `theta * sqrt(I_max) * sqrt(t_k)` at each look. The grid is
/// untruncated at look `k` itself, so its total mass is the probability of
/// reaching look `k`.
pub fn stopping_subdensity(
    design: &GroupSequentialDesign,
    theta_drift: f64,
    look: usize,
    grid: GridSpec,
) -> Result<SubDensity> {
    if look == 0 || look > design.looks() {
        return Err(Error::domain(format!(
            "look {look} outside 1..={}",
            design.looks()
        )));
    }
    let rec = Recursion::new(&design.info_fractions, theta_drift, grid)?;
    let mut f = rec.first_look(if look == 1 {
        f64::INFINITY
    } else {
        design.boundaries[0]
    });
    for k in 1..look {
        let b = if k + 1 == look {
            f64::INFINITY
        } else {
            design.boundaries[k]
        };
        f = rec.advance(&f, k, b);
    }
    Ok(f)
}

/// Per-look stopping probabilities (crossing at each look, continuation
/// mass folded into the final look) and total crossing probability under
/// analysis-scale effect `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingProbabilities {
    /// P(first crossing at look k).
    pub per_look: Vec<f64>,
    /// Sum of the per-look crossing probabilities.
    pub total: f64,
}

pub fn crossing_probabilities(
    design: &GroupSequentialDesign,
    theta: f64,
    max_information: f64,
) -> Result<CrossingProbabilities> {
    if !(max_information > 0.0) {
        return Err(Error::domain(format!(
            "maximum information must be positive; got {max_information}"
        )));
    }
    let delta = theta * max_information.sqrt();
    let rec = Recursion::new(&design.info_fractions, delta, design.grid())?;
    let mut per_look = Vec::with_capacity(design.looks());
    per_look.push(rec.first_tail(design.boundaries[0]));
    let mut carried: Option<SubDensity> = None;
    for k in 1..design.looks() {
        let prev = match carried.take() {
            None => rec.first_look(design.boundaries[0]),
            Some(f) => f,
        };
        per_look.push(rec.tail_beyond(&prev, k, design.boundaries[k]));
        if k + 1 < design.looks() {
            carried = Some(rec.advance(&prev, k, design.boundaries[k]));
        }
    }
    let total = per_look.iter().sum();
    Ok(CrossingProbabilities { per_look, total })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obf(fractions: &[f64], alpha: f64) -> GroupSequentialDesign {
        compute_boundaries(
            fractions,
            alpha,
            SpendingFunction::ObrienFlemingType,
            GridSpec::BOUNDARY,
        )
        .unwrap()
    }

    #[test]
    fn spend_obf_values() {
        let f = SpendingFunction::ObrienFlemingType;
        assert_eq!(spend(&f, 1.0, 0.025).unwrap(), 0.025);
        assert!((spend(&f, 0.66, 0.025).unwrap() - 0.0057983).abs() < 1e-6);
        assert!(spend(&f, 1e-8, 0.025).unwrap() < 1e-12);
        assert_eq!(spend(&f, 0.0, 0.025).unwrap(), 0.0);
        assert!(spend(&f, 1.2, 0.025).is_err());
    }

    #[test]
    fn spend_pocock_monotone_and_complete() {
        let f = SpendingFunction::PocockType;
        assert!((spend(&f, 1.0, 0.025).unwrap() - 0.025).abs() < 1e-15);
        assert!((spend(&f, 0.66, 0.025).unwrap() - 0.0189507).abs() < 1e-6);
        let mut prev = 0.0;
        for i in 0..=100 {
            let s = spend(&f, i as f64 / 100.0, 0.025).unwrap();
            assert!(s >= prev);
            prev = s;
        }
    }

    #[test]
    fn spend_user_table_interpolates() {
        let f = SpendingFunction::UserTable {
            knots: vec![(0.5, 0.01), (1.0, 0.025)],
        };
        assert!((spend(&f, 0.25, 0.025).unwrap() - 0.005).abs() < 1e-15);
        assert!((spend(&f, 0.75, 0.025).unwrap() - 0.0175).abs() < 1e-15);
        let bad = SpendingFunction::UserTable {
            knots: vec![(0.5, 0.02), (1.0, 0.01)],
        };
        assert!(spend(&bad, 0.6, 0.01).is_err());
    }

    #[test]
    fn single_look_design_is_fixed_test() {
        let d = obf(&[1.0], 0.025);
        assert!((d.boundaries[0] - 1.959964).abs() < 1e-5);
        assert!((d.local_levels[0] - 0.025).abs() < 1e-10);
    }

    #[test]
    fn two_look_design_matches_reference() {
        let d = obf(&[0.66, 1.0], 0.025);
        assert!(
            (d.local_levels[0] - 0.0057983).abs() < 1e-6,
            "local level {}",
            d.local_levels[0]
        );
        // Reference values from a high-precision quadrature of the same
        // recursion.
        assert!(
            (d.boundaries[0] - 2.5241890).abs() < 1e-6,
            "u1 = {}",
            d.boundaries[0]
        );
        assert!(
            (d.boundaries[1] - 1.9915604).abs() < 1e-6,
            "u2 = {}",
            d.boundaries[1]
        );
        // Null crossing probabilities reproduce the spending.
        let cp = crossing_probabilities(&d, 0.0, 40.0).unwrap();
        assert!((cp.total - 0.025).abs() < 1e-6, "total {}", cp.total);
        assert!((cp.per_look[0] - d.cumulative_spend[0]).abs() < 1e-9);
        // Per-look stopping probabilities under drift 3.24 at t = 1.
        let cp = crossing_probabilities(&d, 3.24 / 40f64.sqrt(), 40.0).unwrap();
        assert!((cp.per_look[0] - 0.5430019).abs() < 1e-6);
        assert!((cp.per_look[1] - 0.3534784).abs() < 1e-6);
    }

    #[test]
    fn three_look_obf_boundaries_decrease() {
        let d = obf(&[0.5, 0.75, 1.0], 0.025);
        assert!(d.boundaries[0] > d.boundaries[1]);
        assert!(d.boundaries[1] > d.boundaries[2]);
        assert!((d.boundaries[0] - 2.9625880).abs() < 1e-6);
        assert!((d.boundaries[1] - 2.3590177).abs() < 1e-6);
        assert!((d.boundaries[2] - 2.0140837).abs() < 1e-6);
        let cp = crossing_probabilities(&d, 0.0, 60.0).unwrap();
        assert!((cp.total - 0.025).abs() < 1e-6);
        let mut cum = 0.0;
        for (k, p) in cp.per_look.iter().enumerate() {
            cum += p;
            assert!(
                (cum - d.cumulative_spend[k]).abs() < 1e-6,
                "look {k}: cumulative {cum} vs spend {}",
                d.cumulative_spend[k]
            );
        }
    }

    #[test]
    fn zero_spend_look_gets_infinite_boundary() {
        let f = SpendingFunction::UserTable {
            knots: vec![(0.3, 0.0), (0.7, 0.012), (1.0, 0.025)],
        };
        let d = compute_boundaries(&[0.3, 0.7, 1.0], 0.025, f, GridSpec::BOUNDARY).unwrap();
        assert_eq!(d.boundaries[0], f64::INFINITY);
        assert_eq!(d.local_levels[0], 0.0);
        let cp = crossing_probabilities(&d, 0.0, 30.0).unwrap();
        assert_eq!(cp.per_look[0], 0.0);
        assert!((cp.total - 0.025).abs() < 1e-6);
    }

    #[test]
    fn subdensity_masses() {
        let d = obf(&[0.66, 1.0], 0.025);
        // Look 1 untruncated: standard normal, mass 1.
        let f1 = stopping_subdensity(&d, 0.0, 1, GridSpec::BOUNDARY).unwrap();
        assert!((f1.total_mass() - 1.0).abs() < 1e-9);
        // Look 2 mass = survival past look 1.
        let f2 = stopping_subdensity(&d, 0.0, 2, GridSpec::BOUNDARY).unwrap();
        assert!((f2.total_mass() - (1.0 - d.cumulative_spend[0])).abs() < 1e-8);
    }

    #[test]
    fn crossing_single_look_closed_form() {
        let d = obf(&[1.0], 0.025);
        let theta = 0.35;
        let imax = 80.0;
        let cp = crossing_probabilities(&d, theta, imax).unwrap();
        let expect = std_normal_sf(d.boundaries[0] - theta * imax.sqrt());
        assert!((cp.total - expect).abs() < 1e-12);
    }

    #[test]
    fn grid_refinement_stability() {
        let coarse = compute_boundaries(
            &[0.4, 0.7, 1.0],
            0.025,
            SpendingFunction::ObrienFlemingType,
            GridSpec {
                half_width: 8.0,
                points: 4001,
            },
        )
        .unwrap();
        let fine = compute_boundaries(
            &[0.4, 0.7, 1.0],
            0.025,
            SpendingFunction::ObrienFlemingType,
            GridSpec {
                half_width: 9.0,
                points: 8001,
            },
        )
        .unwrap();
        for (a, b) in coarse.boundaries.iter().zip(&fine.boundaries) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn invalid_fractions_are_rejected() {
        let f = SpendingFunction::ObrienFlemingType;
        assert!(compute_boundaries(&[], 0.025, f.clone(), GridSpec::BOUNDARY).is_err());
        assert!(
            compute_boundaries(&[0.7, 0.5, 1.0], 0.025, f.clone(), GridSpec::BOUNDARY).is_err()
        );
        assert!(compute_boundaries(&[0.5, 0.9], 0.025, f, GridSpec::BOUNDARY).is_err());
    }
}
