//! Gibbs measures on bounded generalized tableaux: given the shape, the
//! heights are distributed according to normalized Lebesgue measure.
//!
//! The set of tableaux of shape `λ` with heights below `r` splits into
//! `dim λ` simplices `{0 < x₁ < … < x_N < r}` of equal volume, one per
//! standard tableau. Sampling therefore draws a uniform standard tableau and
//! independent sorted uniforms.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};
use crate::jump_chain::ShapeDistribution;
use crate::partitions::{enumerate_tableaux, uniform_tableau, YoungDiagram, DEFAULT_ENUMERATION_BOUND};
use crate::stats::{chi_square_uniform, ks_test, TestResult, NORMALIZATION_TOLERANCE};
use crate::tableau_state::HeightState;

/// Family-wise significance level of the Gibbs tests.
pub const FAMILY_ALPHA: f64 = 1e-3;
/// Minimum number of samples for a shape to be tested.
pub const MIN_SHAPE_SAMPLES: usize = 100;
/// Minimum number of samples overall.
pub const MIN_TOTAL_SAMPLES: usize = 1000;

/// A state drawn from normalized Lebesgue measure on the tableaux of shape
/// `shape` bounded by `r`.
pub fn sample_given_shape<R: Rng + ?Sized>(shape: &YoungDiagram, r: f64, rng: &mut R) -> Result<HeightState> {
    let n = shape.size();
    if n == 0 {
        return HeightState::empty(r);
    }
    let tableau = uniform_tableau(shape, rng);
    let mut xs: Vec<f64> = Vec::with_capacity(n);
    while xs.len() < n {
        let x = rng.random::<f64>() * r;
        if x > 0.0 {
            xs.push(x);
        }
    }
    xs.sort_by(f64::total_cmp);
    let cells = tableau.cells_in_order().into_iter().zip(xs);
    HeightState::from_cells(r, cells)
}

/// A state from the Gibbs measure whose shape marginal is `dist`.
pub fn sample_gibbs<R: Rng + ?Sized>(dist: &ShapeDistribution, r: f64, rng: &mut R) -> Result<HeightState> {
    let total: f64 = dist.values().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE || dist.values().any(|p| *p < 0.0) {
        return Err(Error::Unnormalized(total));
    }
    let mut u = rng.random::<f64>() * total;
    let mut chosen = dist.keys().next_back().cloned().unwrap_or_default();
    for (shape, p) in dist {
        if u < *p {
            chosen = shape.clone();
            break;
        }
        u -= p;
    }
    sample_given_shape(&chosen, r, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub shape: YoungDiagram,
    pub samples: usize,
    pub dim: u64,
    /// Uniformity of the ranked tableau over all standard tableaux.
    pub tableau_chi_square: Option<TestResult>,
    /// KS tests of the transformed order statistics, one per rank.
    pub value_ks: Vec<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsReport {
    pub total_samples: usize,
    pub r: f64,
    pub shapes: Vec<ShapeReport>,
    pub subtests: usize,
    pub family_alpha: f64,
    /// Bonferroni per-test threshold.
    pub threshold: f64,
    pub min_p_value: f64,
    pub verdict: Verdict,
}

impl GibbsReport {
    /// Iterates over `(shape, p-value)` for every subtest.
    pub fn p_values(&self) -> impl Iterator<Item = (&YoungDiagram, f64)> {
        self.shapes.iter().flat_map(|s| {
            s.tableau_chi_square
                .iter()
                .chain(&s.value_ks)
                .map(move |t| (&s.shape, t.p_value))
        })
    }
}

/// Tests whether a sample of states at a common level looks Gibbs.
///
/// For every shape with at least [`MIN_SHAPE_SAMPLES`] hits:
/// * if `dim λ ≥ 2`, `|λ|` is within the enumeration bound, and every
///   tableau has expected count ≥ 5, a chi-square test that the ranked
///   tableau is uniform;
/// * for each rank `k`, a KS test that `Beta(k, N−k+1).cdf(x_k / r)` is
///   uniform, where `x_k` is the `k`-th smallest height.
///
/// The verdict fails when any p-value is below `FAMILY_ALPHA / subtests`.
pub fn test_gibbsianness(samples: &[HeightState]) -> GibbsReport {
    let r = samples.first().map_or(1.0, HeightState::r);
    let mut by_shape: BTreeMap<YoungDiagram, Vec<&HeightState>> = BTreeMap::new();
    for s in samples {
        by_shape.entry(s.shape()).or_default().push(s);
    }
    let mut shapes = Vec::new();
    for (shape, group) in by_shape {
        if group.len() < MIN_SHAPE_SAMPLES || shape.is_empty() {
            continue;
        }
        let n = shape.size();
        let dim = shape.dim().unwrap_or(u64::MAX);
        let ranked: Vec<_> = group.iter().map(|s| s.to_ranked_tableau()).collect();

        let tableau_chi_square = if dim >= 2
            && n <= DEFAULT_ENUMERATION_BOUND
            && group.len() as f64 / dim as f64 >= 5.0
        {
            let all = enumerate_tableaux(&shape, DEFAULT_ENUMERATION_BOUND).expect("within bound");
            let index: HashMap<_, usize> = all.into_iter().enumerate().map(|(k, t)| (t, k)).collect();
            let mut counts = vec![0u64; index.len()];
            for (_, t, _) in &ranked {
                counts[index[t]] += 1;
            }
            Some(chi_square_uniform(&counts))
        } else {
            None
        };

        let value_ks = (1..=n)
            .map(|k| {
                let beta = Beta::new(k as f64, (n - k + 1) as f64).expect("positive shape parameters");
                let us: Vec<f64> = ranked.iter().map(|(_, _, hs)| hs[k - 1] / r).collect();
                ks_test(&us, |x| beta.cdf(x.clamp(0.0, 1.0)))
            })
            .collect();
        shapes.push(ShapeReport { shape, samples: group.len(), dim, tableau_chi_square, value_ks });
    }
    let subtests: usize = shapes
        .iter()
        .map(|s| s.value_ks.len() + usize::from(s.tableau_chi_square.is_some()))
        .sum();
    let threshold = if subtests > 0 { FAMILY_ALPHA / subtests as f64 } else { FAMILY_ALPHA };
    let mut report = GibbsReport {
        total_samples: samples.len(),
        r,
        shapes,
        subtests,
        family_alpha: FAMILY_ALPHA,
        threshold,
        min_p_value: 1.0,
        verdict: Verdict::Inconclusive,
    };
    report.min_p_value = report.p_values().map(|(_, p)| p).fold(1.0, f64::min);
    report.verdict = if samples.len() < MIN_TOTAL_SAMPLES || subtests == 0 {
        Verdict::Inconclusive
    } else if report.min_p_value < threshold {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::replica_rng;

    fn d(rows: &[usize]) -> YoungDiagram {
        YoungDiagram::new(rows.to_vec()).unwrap()
    }

    #[test]
    fn sample_examples() {
        let mut rng = replica_rng(1, 0);
        assert!(sample_given_shape(&YoungDiagram::empty(), 2.0, &mut rng).unwrap().is_empty());
        let xs: Vec<f64> = (0..20_000)
            .map(|_| sample_given_shape(&d(&[1]), 2.0, &mut rng).unwrap().height(crate::partitions::Cell { i: 1, j: 1 }) / 2.0)
            .collect();
        assert!(crate::stats::ks_uniform(&xs).p_value > 0.001);
        for _ in 0..1000 {
            sample_given_shape(&d(&[4, 2, 2, 1]), 1.5, &mut rng).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn sample_gibbs_point_masses() {
        let mut rng = replica_rng(2, 0);
        let delta: ShapeDistribution = [(YoungDiagram::empty(), 1.0)].into_iter().collect();
        assert!(sample_gibbs(&delta, 1.0, &mut rng).unwrap().is_empty());
        let delta: ShapeDistribution = [(d(&[3, 1]), 1.0)].into_iter().collect();
        assert_eq!(sample_gibbs(&delta, 1.0, &mut rng).unwrap().shape(), d(&[3, 1]));
        let bad: ShapeDistribution = [(d(&[3, 1]), 0.9)].into_iter().collect();
        assert!(sample_gibbs(&bad, 1.0, &mut rng).is_err());
    }

    fn draws(shape: &YoungDiagram, n: usize, seed: u64) -> Vec<HeightState> {
        let mut rng = replica_rng(seed, 0);
        (0..n).map(|_| sample_given_shape(shape, 1.0, &mut rng).unwrap()).collect()
    }

    #[test]
    fn calibration_passes() {
        let mut samples = draws(&d(&[2, 1]), 2000, 3);
        samples.extend(draws(&d(&[3, 2]), 2000, 4));
        let rep = test_gibbsianness(&samples);
        assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
        assert_eq!(rep.subtests, 1 + 3 + 1 + 5);
    }

    #[test]
    fn scaled_heights_fail() {
        let samples: Vec<HeightState> = draws(&d(&[2, 1]), 2000, 5)
            .into_iter()
            .map(|s| HeightState::from_rows(1.0, s.rows().iter().map(|row| row.iter().map(|h| h * 0.5).collect()).collect()).unwrap())
            .collect();
        assert_eq!(test_gibbsianness(&samples).verdict, Verdict::Fail);
    }

    #[test]
    fn fixed_tableau_fails() {
        // Force h(1,2) < h(2,1): always the tableau with 1,2 in row one.
        let samples: Vec<HeightState> = draws(&d(&[2, 1]), 2000, 6)
            .into_iter()
            .map(|s| {
                let (_, _, hs) = s.to_ranked_tableau();
                HeightState::from_rows(1.0, vec![vec![hs[0], hs[1]], vec![hs[2]]]).unwrap()
            })
            .collect();
        let rep = test_gibbsianness(&samples);
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!(rep.shapes[0].tableau_chi_square.unwrap().p_value < 1e-10);
    }

    #[test]
    fn few_samples_inconclusive() {
        let rep = test_gibbsianness(&draws(&d(&[2, 1]), 500, 7));
        assert_eq!(rep.verdict, Verdict::Inconclusive);
    }
}
