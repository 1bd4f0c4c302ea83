//! Ideology scores from the co-sponsorship matrix.
//!
//! The matrix is factored as `P = U · diag(s) · Vᵀ`. The first right-singular
//! direction tracks overall legislative activity; the second separates
//! legislators along the left/right axis and becomes the raw ideology score.
//! Because singular vectors carry an arbitrary sign, scores are oriented
//! either by a pair of anchor legislators or, without anchors, so that the
//! lexicographically first legislator with a nonzero coordinate sits on the
//! negative side. Oriented scores are then min-max normalized to `[0, 1]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::PositionLabel;
use crate::cosponsor::CosponsorMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum IdeologyError {
    #[error("matrix must be at least {min}x{min}, got {n}x{n}")]
    TooSmall { n: usize, min: usize },
    #[error("matrix is all zeros")]
    DegenerateMatrix,
    #[error("anchor legislator `{0}` is not in the matrix")]
    AnchorMissing(String),
    #[error("anchors `{0}` and `{1}` have identical raw scores")]
    AnchorsTied(String, String),
    #[error("all raw scores are equal")]
    ZeroSpread,
    #[error("score distribution has zero standard deviation")]
    ZeroStd,
    #[error("score distribution is empty")]
    EmptyDistribution,
}

#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    /// Nonincreasing.
    pub s: Vec<f64>,
    /// Rows are right-singular directions.
    pub vt: DMatrix<f64>,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.u * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.s)) * &self.vt
    }
}

pub fn matrix_to_dense(m: &CosponsorMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.len(), m.len(), &m.to_f64())
}

pub fn svd_factors(m: &CosponsorMatrix) -> Result<SvdFactors, IdeologyError> {
    if m.len() < 2 {
        return Err(IdeologyError::TooSmall { n: m.len(), min: 2 });
    }
    if m.total() == 0 {
        return Err(IdeologyError::DegenerateMatrix);
    }
    Ok(svd_dense(matrix_to_dense(m)))
}

/// Full SVD of a square matrix with singular values sorted descending.
pub fn svd_dense(p: DMatrix<f64>) -> SvdFactors {
    let n = p.nrows();
    let svd = p.svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });
    let s = order.iter().map(|&k| svd.singular_values[k]).collect();
    let u = DMatrix::from_fn(n, n, |r, c| u[(r, order[c])]);
    let vt = DMatrix::from_fn(n, n, |r, c| vt[(order[r], c)]);
    SvdFactors { u, s, vt }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdeologyScore {
    pub legislator_id: String,
    pub raw: f64,
    pub normalized: f64,
}

impl crate::corpus::Record for IdeologyScore {
    fn unique_key(&self) -> Option<String> {
        Some(self.legislator_id.clone())
    }

    fn violation(&self) -> Option<&'static str> {
        if self.legislator_id.trim().is_empty() {
            Some("legislator_id")
        } else if !(0.0..=1.0).contains(&self.normalized) {
            Some("normalized")
        } else {
            None
        }
    }
}

/// Ideology scores in matrix row order.
pub fn ideology_scores(
    m: &CosponsorMatrix,
    anchors: Option<(&str, &str)>,
) -> Result<Vec<IdeologyScore>, IdeologyError> {
    let n = m.len();
    if n < 3 {
        return Err(IdeologyError::TooSmall { n, min: 3 });
    }
    let anchor_idx = anchors
        .map(|(l, r)| {
            let find = |id: &str| {
                m.index_of(id)
                    .ok_or_else(|| IdeologyError::AnchorMissing(id.to_string()))
            };
            Ok::<_, IdeologyError>((find(l)?, find(r)?))
        })
        .transpose()?;
    let factors = svd_factors(m)?;
    let raw: Vec<f64> = (0..n).map(|j| factors.vt[(1, j)]).collect();

    let flip = match anchor_idx {
        Some((l, r)) => {
            if raw[l] == raw[r] {
                let (a, b) = anchors.unwrap();
                return Err(IdeologyError::AnchorsTied(a.into(), b.into()));
            }
            raw[l] > raw[r]
        }
        None => {
            let scale = raw.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            let mut by_id: Vec<usize> = (0..n).collect();
            by_id.sort_by(|&a, &b| m.ids()[a].cmp(&m.ids()[b]));
            by_id
                .into_iter()
                .map(|i| raw[i])
                .find(|x| x.abs() > 1e-12 * scale)
                .is_some_and(|x| x > 0.0)
        }
    };

    let (min, max) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let spread = max - min;
    if !(spread > 1e-12 * max.abs().max(min.abs())) {
        return Err(IdeologyError::ZeroSpread);
    }
    Ok(m.ids()
        .iter()
        .zip(&raw)
        .map(|(id, &x)| {
            // normalizing the unoriented value first makes a flip an exact x -> 1 - x
            let base = ((x - min) / spread).clamp(0.0, 1.0);
            IdeologyScore {
                legislator_id: id.clone(),
                raw: if flip { -x } else { x },
                normalized: if flip { 1.0 - base } else { base },
            }
        })
        .collect())
}

/// Scores of one spectrum position, with a population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistribution {
    pub position: PositionLabel,
    pub mean: f64,
    pub std: f64,
    pub values: Vec<f64>,
}

impl ScoreDistribution {
    pub fn from_values(
        position: PositionLabel,
        mut values: Vec<f64>,
    ) -> Result<Self, IdeologyError> {
        if values.is_empty() {
            return Err(IdeologyError::EmptyDistribution);
        }
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        Ok(Self {
            position,
            mean,
            std,
            values,
        })
    }
}

/// Standard score of `p` against the distribution; `aligned` means the score
/// lies within one standard deviation of the mean.
pub fn z_score(p: f64, dist: &ScoreDistribution) -> Result<(f64, bool), IdeologyError> {
    if !(dist.std > 0.0) {
        return Err(IdeologyError::ZeroStd);
    }
    let z = (p - dist.mean) / dist.std;
    Ok((z, (-1.0..=1.0).contains(&z)))
}

/// Midrank percentile of `p` among the distribution's values, in `[0, 100]`.
pub fn rank_percentile(p: f64, dist: &ScoreDistribution) -> Result<f64, IdeologyError> {
    if dist.values.is_empty() {
        return Err(IdeologyError::EmptyDistribution);
    }
    let below = dist.values.iter().filter(|&&v| v < p).count() as f64;
    let equal = dist.values.iter().filter(|&&v| v == p).count() as f64;
    Ok(100.0 * (below + 0.5 * equal) / dist.values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<Vec<u64>>) -> CosponsorMatrix {
        let ids = (0..rows.len()).map(|i| format!("m{i}")).collect();
        CosponsorMatrix::from_rows(ids, rows).unwrap()
    }

    fn dist(values: Vec<f64>) -> ScoreDistribution {
        ScoreDistribution::from_values(PositionLabel::C, values).unwrap()
    }

    #[test]
    fn all_ones_is_rank_one() {
        let f = svd_factors(&matrix(vec![vec![1; 3]; 3])).unwrap();
        assert!((f.s[0] - 3.0).abs() < 1e-12);
        assert!(f.s[1].abs() < 1e-12 && f.s[2].abs() < 1e-12);
    }

    #[test]
    fn diagonal_singular_values_sorted() {
        let f = svd_factors(&matrix(vec![vec![2, 0], vec![0, 5]])).unwrap();
        assert!((f.s[0] - 5.0).abs() < 1e-12 && (f.s[1] - 2.0).abs() < 1e-12);
        let f = svd_factors(&matrix(vec![vec![5, 0], vec![0, 2]])).unwrap();
        assert!((f.s[0] - 5.0).abs() < 1e-12 && (f.s[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(
            svd_factors(&matrix(vec![vec![0; 3]; 3])).unwrap_err(),
            IdeologyError::DegenerateMatrix
        );
        assert!(matches!(
            svd_factors(&matrix(vec![vec![1]])),
            Err(IdeologyError::TooSmall { .. })
        ));
        assert!(matches!(
            ideology_scores(&matrix(vec![vec![1, 0], vec![0, 1]]), None),
            Err(IdeologyError::TooSmall { .. })
        ));
        let m = matrix(vec![vec![1; 3]; 3]);
        assert_eq!(
            ideology_scores(&m, Some(("m0", "zz"))).unwrap_err(),
            IdeologyError::AnchorMissing("zz".into())
        );
    }

    fn two_blocs(a: u64, b: u64) -> CosponsorMatrix {
        let mut rows = vec![vec![0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                if i / 3 == j / 3 {
                    rows[i][j] = if i < 3 { a } else { b };
                }
            }
        }
        matrix(rows)
    }

    #[test]
    fn planted_blocs_separate_after_anchoring() {
        for (a, b) in [(5, 5), (5, 3), (2, 9)] {
            let scores = ideology_scores(&two_blocs(a, b), Some(("m0", "m5"))).unwrap();
            let max_a = scores[..3]
                .iter()
                .map(|s| s.normalized)
                .fold(f64::MIN, f64::max);
            let min_b = scores[3..]
                .iter()
                .map(|s| s.normalized)
                .fold(f64::MAX, f64::min);
            assert!(max_a < min_b, "a={a} b={b}: {scores:?}");
        }
    }

    #[test]
    fn swapping_anchors_reflects() {
        let m = two_blocs(5, 3);
        let fwd = ideology_scores(&m, Some(("m0", "m5"))).unwrap();
        let rev = ideology_scores(&m, Some(("m5", "m0"))).unwrap();
        for (f, r) in fwd.iter().zip(&rev) {
            assert!((f.normalized + r.normalized - 1.0).abs() <= 1e-15);
            assert_eq!(f.raw, -r.raw);
        }
    }

    #[test]
    fn default_orientation_puts_first_id_low() {
        let m = two_blocs(4, 7);
        let s = ideology_scores(&m, None).unwrap();
        let first_nonzero = s.iter().find(|x| x.raw.abs() > 1e-9).unwrap();
        assert!(first_nonzero.raw < 0.0);
    }

    #[test]
    fn z_score_cases() {
        let d = ScoreDistribution {
            position: PositionLabel::C,
            mean: 0.60,
            std: 0.06,
            values: vec![0.6],
        };
        let (z, aligned) = z_score(0.72, &d).unwrap();
        assert!((z - 2.0).abs() < 1e-12);
        assert!(!aligned);
        assert_eq!(z_score(0.60, &d).unwrap(), (0.0, true));

        let unit = ScoreDistribution {
            mean: 0.0,
            std: 1.0,
            ..d.clone()
        };
        assert!(z_score(0.99, &unit).unwrap().1);
        assert!(z_score(1.0, &unit).unwrap().1);
        assert!(!z_score(1.01, &unit).unwrap().1);
        assert!(z_score(-1.0, &unit).unwrap().1);
        assert!(!z_score(-1.01, &unit).unwrap().1);
        let flat = ScoreDistribution { std: 0.0, ..d };
        assert_eq!(z_score(0.5, &flat), Err(IdeologyError::ZeroStd));
    }

    #[test]
    fn population_std() {
        let d = dist(vec![1.0, 3.0]);
        assert_eq!(d.mean, 2.0);
        assert_eq!(d.std, 1.0);
    }

    #[test]
    fn percentile_cases() {
        let values: Vec<f64> = (1..=99).map(f64::from).collect();
        let d = dist(values);
        assert_eq!(rank_percentile(1000.0, &d).unwrap(), 100.0);
        assert_eq!(rank_percentile(-1.0, &d).unwrap(), 0.0);
        assert!((rank_percentile(50.0, &d).unwrap() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn z_is_shift_invariant() {
        let d = dist(vec![0.1, 0.2, 0.4, 0.7]);
        let shifted = dist(d.values.iter().map(|v| v + 3.25).collect());
        let (z1, _) = z_score(0.33, &d).unwrap();
        let (z2, _) = z_score(0.33 + 3.25, &shifted).unwrap();
        assert!((z1 - z2).abs() < 1e-9);
    }
}
