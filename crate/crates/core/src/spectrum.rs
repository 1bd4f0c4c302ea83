//! Five-position spectrum mapping and clustering quality metrics.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::PositionLabel;
use crate::exec::Execution;
use crate::ideology::IdeologyScore;

pub const DEFAULT_RESTARTS: usize = 10;
const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Error, PartialEq)]
pub enum SpectrumError {
    #[error("need at least {k} distinct scores, got {got}")]
    TooFewPoints { k: usize, got: usize },
    #[error("spectrum mapping needs k = 5, got {0}")]
    UnsupportedK(usize),
    #[error("label lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("score {0} is not finite")]
    NonFinite(f64),
}

/// Outcome of one-dimensional k-means.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans1d {
    /// Sorted ascending.
    pub centroids: Vec<f64>,
    /// Cluster index per input value, referring to `centroids`.
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squares.
    pub objective: f64,
    /// Objective after each Lloyd iteration of the winning restart.
    pub history: Vec<f64>,
}

fn nearest(centroids: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (i, c) in centroids.iter().enumerate().skip(1) {
        if (x - c).abs() < (x - centroids[best]).abs() {
            best = i;
        }
    }
    best
}

fn sse(values: &[f64], centroids: &[f64], assignment: &[usize]) -> f64 {
    values
        .iter()
        .zip(assignment)
        .map(|(v, &a)| (v - centroids[a]).powi(2))
        .sum()
}

fn plus_plus_init(values: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut centroids = vec![values[rng.random_range(0..values.len())]];
    let mut d2: Vec<f64> = values.iter().map(|v| (v - centroids[0]).powi(2)).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            values[pick]
        } else {
            values[rng.random_range(0..values.len())]
        };
        centroids.push(next);
        for (d, v) in d2.iter_mut().zip(values) {
            *d = d.min((v - next).powi(2));
        }
    }
    centroids
}

fn lloyd(values: &[f64], mut centroids: Vec<f64>) -> KMeans1d {
    let k = centroids.len();
    let mut assignment: Vec<usize> = values.iter().map(|&v| nearest(&centroids, v)).collect();
    let mut history = Vec::new();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&v, &a) in values.iter().zip(&assignment) {
            sums[a] += v;
            counts[a] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c] / counts[c] as f64;
            } else {
                // re-seed an empty cluster at the worst-served point
                let far = (0..values.len())
                    .max_by(|&a, &b| {
                        let da = (values[a] - centroids[assignment[a]]).abs();
                        let db = (values[b] - centroids[assignment[b]]).abs();
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("nonempty input");
                centroids[c] = values[far];
                assignment[far] = c;
            }
        }
        history.push(sse(values, &centroids, &assignment));
        let next: Vec<usize> = values.iter().map(|&v| nearest(&centroids, v)).collect();
        if next == assignment {
            break;
        }
        assignment = next;
    }
    hartigan(values, &mut centroids, &mut assignment, &mut history);
    // relabel clusters in ascending centroid order
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| centroids[a].total_cmp(&centroids[b]));
    let mut rank = vec![0; k];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    let objective = sse(values, &centroids, &assignment);
    KMeans1d {
        centroids: order.iter().map(|&c| centroids[c]).collect(),
        assignment: assignment.iter().map(|&a| rank[a]).collect(),
        objective,
        history,
    }
}

/// Single-point transfers that lower the objective once centroids move
/// with the point. A transfer-stable partition is also Lloyd-stable.
fn hartigan(
    values: &[f64],
    centroids: &mut [f64],
    assignment: &mut [usize],
    history: &mut Vec<f64>,
) {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &a in assignment.iter() {
        counts[a] += 1;
    }
    loop {
        let mut moved = false;
        for (i, &x) in values.iter().enumerate() {
            let a = assignment[i];
            if counts[a] < 2 {
                continue;
            }
            let na = counts[a] as f64;
            let leave = na / (na - 1.0) * (x - centroids[a]).powi(2);
            let best = (0..k)
                .filter(|&b| b != a)
                .map(|b| {
                    let nb = counts[b] as f64;
                    (b, nb / (nb + 1.0) * (x - centroids[b]).powi(2))
                })
                .min_by(|p, q| p.1.total_cmp(&q.1));
            if let Some((b, join)) = best {
                if join < leave - 1e-15 {
                    let nb = counts[b] as f64;
                    centroids[a] = (centroids[a] * na - x) / (na - 1.0);
                    centroids[b] = (centroids[b] * nb + x) / (nb + 1.0);
                    counts[a] -= 1;
                    counts[b] += 1;
                    assignment[i] = b;
                    moved = true;
                }
            }
        }
        if !moved {
            break;
        }
        // recompute exactly to shed incremental rounding
        let mut sums = vec![0.0; k];
        for (&v, &a) in values.iter().zip(assignment.iter()) {
            sums[a] += v;
        }
        for c in 0..k {
            centroids[c] = sums[c] / counts[c] as f64;
        }
        history.push(sse(values, centroids, assignment));
    }
}

/// Seeded k-means++ with `restarts` independent runs; the lowest objective
/// wins, earlier restarts winning ties.
pub fn kmeans_1d(
    values: &[f64],
    k: usize,
    seed: u64,
    restarts: usize,
    exec: Execution,
) -> Result<KMeans1d, SpectrumError> {
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(SpectrumError::NonFinite(bad));
    }
    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if k == 0 || distinct.len() < k {
        return Err(SpectrumError::TooFewPoints {
            k,
            got: distinct.len(),
        });
    }
    let runs = exec.map_range(restarts.max(1), |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        lloyd(values, plus_plus_init(values, k, &mut rng))
    });
    Ok(runs
        .into_iter()
        .reduce(|best, run| {
            if run.objective < best.objective {
                run
            } else {
                best
            }
        })
        .expect("at least one restart"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMapping {
    pub assignments: BTreeMap<String, PositionLabel>,
    /// Strictly increasing, PL first.
    pub centroids: [f64; 5],
    /// Midpoints between adjacent centroids.
    pub boundaries: [f64; 4],
}

impl SpectrumMapping {
    /// Places a new score using the stored boundaries.
    pub fn classify(&self, score: f64) -> PositionLabel {
        let slot = self.boundaries.iter().take_while(|&&b| score > b).count();
        PositionLabel::ALL[slot]
    }
}

pub fn kmeans_map(
    scores: &[IdeologyScore],
    k: usize,
    seed: u64,
) -> Result<SpectrumMapping, SpectrumError> {
    kmeans_map_with(scores, k, seed, DEFAULT_RESTARTS, Execution::default())
}

pub fn kmeans_map_with(
    scores: &[IdeologyScore],
    k: usize,
    seed: u64,
    restarts: usize,
    exec: Execution,
) -> Result<SpectrumMapping, SpectrumError> {
    if k != 5 {
        return Err(SpectrumError::UnsupportedK(k));
    }
    let values: Vec<f64> = scores.iter().map(|s| s.normalized).collect();
    let km = kmeans_1d(&values, k, seed, restarts, exec)?;
    let centroids: [f64; 5] = km.centroids.clone().try_into().expect("k = 5");
    let boundaries = std::array::from_fn(|i| 0.5 * (centroids[i] + centroids[i + 1]));
    let assignments = scores
        .iter()
        .zip(&km.assignment)
        .map(|(s, &a)| (s.legislator_id.clone(), PositionLabel::ALL[a]))
        .collect();
    Ok(SpectrumMapping {
        assignments,
        centroids,
        boundaries,
    })
}

fn contingency<A: Eq + Hash + Clone, B: Eq + Hash + Clone>(
    truth: &[A],
    pred: &[B],
) -> Result<(HashMap<(A, B), usize>, HashMap<A, usize>, HashMap<B, usize>), SpectrumError> {
    if truth.len() != pred.len() {
        return Err(SpectrumError::LengthMismatch(truth.len(), pred.len()));
    }
    let mut joint = HashMap::new();
    let mut rows = HashMap::new();
    let mut cols = HashMap::new();
    for (a, b) in truth.iter().zip(pred) {
        *joint.entry((a.clone(), b.clone())).or_insert(0) += 1;
        *rows.entry(a.clone()).or_insert(0) += 1;
        *cols.entry(b.clone()).or_insert(0) += 1;
    }
    Ok((joint, rows, cols))
}

fn pairs(n: usize) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// Geometric mean of pairwise precision and recall; 0 when no pair is
/// co-clustered in both labelings.
pub fn fowlkes_mallows<A: Eq + Hash + Clone, B: Eq + Hash + Clone>(
    truth: &[A],
    pred: &[B],
) -> Result<f64, SpectrumError> {
    let (joint, rows, cols) = contingency(truth, pred)?;
    let tp: f64 = joint.values().map(|&n| pairs(n)).sum();
    if tp == 0.0 {
        return Ok(0.0);
    }
    let true_pairs: f64 = rows.values().map(|&n| pairs(n)).sum();
    let pred_pairs: f64 = cols.values().map(|&n| pairs(n)).sum();
    Ok(tp / (true_pairs * pred_pairs).sqrt())
}

fn entropy<K>(counts: &HashMap<K, usize>, n: f64) -> f64 {
    counts
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Homogeneity, completeness and their harmonic mean (V-measure).
pub fn homogeneity_completeness<A: Eq + Hash + Clone, B: Eq + Hash + Clone>(
    truth: &[A],
    pred: &[B],
) -> Result<(f64, f64, f64), SpectrumError> {
    let (joint, rows, cols) = contingency(truth, pred)?;
    let n = truth.len() as f64;
    if truth.is_empty() {
        return Ok((1.0, 1.0, 1.0));
    }
    let h_true = entropy(&rows, n);
    let h_pred = entropy(&cols, n);
    // H(true | pred) and H(pred | true) from the joint table
    let mut h_true_given_pred = 0.0;
    let mut h_pred_given_true = 0.0;
    for ((a, b), &c) in &joint {
        let c = c as f64;
        h_true_given_pred -= c / n * (c / cols[b] as f64).ln();
        h_pred_given_true -= c / n * (c / rows[a] as f64).ln();
    }
    let h = if h_true == 0.0 {
        1.0
    } else {
        1.0 - h_true_given_pred / h_true
    };
    let c = if h_pred == 0.0 {
        1.0
    } else {
        1.0 - h_pred_given_true / h_pred
    };
    let v = if h + c == 0.0 {
        0.0
    } else {
        2.0 * h * c / (h + c)
    };
    Ok((h, c, v))
}

/// Purity of each predicted cluster, keyed by the cluster's majority true
/// class. Clusters sharing a majority class are pooled under it; majority
/// ties go to the smaller class.
pub fn purity<A: Ord + Hash + Clone, B: Eq + Hash + Clone>(
    truth: &[A],
    pred: &[B],
) -> Result<BTreeMap<A, f64>, SpectrumError> {
    let (joint, _, cols) = contingency(truth, pred)?;
    let mut pooled: BTreeMap<A, (usize, usize)> = BTreeMap::new();
    for (cluster, &size) in &cols {
        let (class, hits) = joint
            .iter()
            .filter(|((_, b), _)| b == cluster)
            .map(|((a, _), &c)| (a.clone(), c))
            .max_by(|(a1, c1), (a2, c2)| c1.cmp(c2).then(a2.cmp(a1)))
            .expect("cluster has members");
        let slot = pooled.entry(class).or_insert((0, 0));
        slot.0 += hits;
        slot.1 += size;
    }
    Ok(pooled
        .into_iter()
        .map(|(k, (hit, size))| (k, hit as f64 / size as f64))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterQuality {
    pub fowlkes_mallows: f64,
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
    pub purity_per_class: BTreeMap<PositionLabel, f64>,
}

pub fn cluster_quality(
    truth: &[PositionLabel],
    pred: &[PositionLabel],
) -> Result<ClusterQuality, SpectrumError> {
    let (homogeneity, completeness, v_measure) = homogeneity_completeness(truth, pred)?;
    Ok(ClusterQuality {
        fowlkes_mallows: fowlkes_mallows(truth, pred)?,
        homogeneity,
        completeness,
        v_measure,
        purity_per_class: purity(truth, pred)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scores(values: &[f64]) -> Vec<IdeologyScore> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| IdeologyScore {
                legislator_id: format!("m{i:02}"),
                raw: v,
                normalized: v,
            })
            .collect()
    }

    /// Exact optimal 1-D k-partition objective by dynamic programming over
    /// contiguous runs of the sorted values.
    fn dp_optimum(values: &[f64], k: usize) -> f64 {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let cost = |i: usize, j: usize| {
            let seg = &v[i..j];
            let m = seg.iter().sum::<f64>() / seg.len() as f64;
            seg.iter().map(|x| (x - m).powi(2)).sum::<f64>()
        };
        let mut best = vec![vec![f64::INFINITY; n + 1]; k + 1];
        best[0][0] = 0.0;
        for c in 1..=k {
            for j in c..=n {
                for i in (c - 1)..j {
                    let cand = best[c - 1][i] + cost(i, j);
                    if cand < best[c][j] {
                        best[c][j] = cand;
                    }
                }
            }
        }
        best[k][n]
    }

    fn brute_fm(a: &[u8], b: &[u8]) -> f64 {
        let (mut tp, mut fp, mut fn_) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                match (a[i] == a[j], b[i] == b[j]) {
                    (true, true) => tp += 1.0,
                    (false, true) => fp += 1.0,
                    (true, false) => fn_ += 1.0,
                    _ => {}
                }
            }
        }
        if tp == 0.0 {
            0.0
        } else {
            tp / ((tp + fp) * (tp + fn_)).sqrt()
        }
    }

    #[test]
    fn five_points_one_each() {
        let m = kmeans_map(&scores(&[0.0, 0.25, 0.5, 0.75, 1.0]), 5, 1).unwrap();
        for (i, p) in PositionLabel::ALL.into_iter().enumerate() {
            assert_eq!(m.assignments[&format!("m{i:02}")], p);
        }
    }

    #[test]
    fn tight_pairs_match_dp() {
        let v = [0.05, 0.06, 0.25, 0.26, 0.50, 0.51, 0.75, 0.76, 0.95, 0.96];
        let km = kmeans_1d(&v, 5, 3, DEFAULT_RESTARTS, Execution::Sequential).unwrap();
        assert_eq!(km.assignment, vec![0, 0, 1, 1, 2, 2, 3, 3, 4, 4]);
        assert!((km.objective - dp_optimum(&v, 5)).abs() < 1e-12);
    }

    #[test]
    fn too_few_points_and_k() {
        assert!(matches!(
            kmeans_map(&scores(&[0.1, 0.2, 0.2, 0.3, 0.4]), 5, 0),
            Err(SpectrumError::TooFewPoints { k: 5, got: 4 })
        ));
        assert_eq!(
            kmeans_map(&scores(&[0.1; 8]), 4, 0),
            Err(SpectrumError::UnsupportedK(4))
        );
    }

    #[test]
    fn classify_uses_boundaries() {
        let m = kmeans_map(&scores(&[0.0, 0.25, 0.5, 0.75, 1.0]), 5, 1).unwrap();
        assert_eq!(m.boundaries, [0.125, 0.375, 0.625, 0.875]);
        assert_eq!(m.classify(0.0662), PositionLabel::PL);
        assert_eq!(m.classify(0.4), PositionLabel::C);
        assert_eq!(m.classify(0.99), PositionLabel::CR);
    }

    #[test]
    fn metric_examples() {
        assert_eq!(
            fowlkes_mallows(&["a", "a", "b", "b"], &[1, 1, 2, 2]).unwrap(),
            1.0
        );
        assert_eq!(
            fowlkes_mallows(&["a", "a", "b", "b"], &[1, 2, 1, 2]).unwrap(),
            0.0
        );
        assert_eq!(
            homogeneity_completeness(&["a", "a", "b"], &[1, 1, 2]).unwrap(),
            (1.0, 1.0, 1.0)
        );
        let (h, c, _) = homogeneity_completeness(&["a", "a", "b", "b"], &[0, 0, 0, 0]).unwrap();
        assert_eq!((h, c), (0.0, 1.0));
        assert!(matches!(
            fowlkes_mallows(&[1], &[1, 2]),
            Err(SpectrumError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn entropy_table_example() {
        // true [a,a,b,b], pred [1,1,1,2]
        let ln2 = 2f64.ln();
        let h_c = ln2;
        let h_k = -(0.75 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        let h_c_given_k = -(0.5 * (2.0f64 / 3.0).ln() + 0.25 * (1.0f64 / 3.0).ln());
        let h_k_given_c = -(0.25 * 0.5f64.ln() + 0.25 * 0.5f64.ln());
        let (h, c, v) = homogeneity_completeness(&["a", "a", "b", "b"], &[1, 1, 1, 2]).unwrap();
        assert!((h - (1.0 - h_c_given_k / h_c)).abs() < 1e-9);
        assert!((c - (1.0 - h_k_given_c / h_k)).abs() < 1e-9);
        assert!((v - 2.0 * h * c / (h + c)).abs() < 1e-12);
    }

    #[test]
    fn purity_examples() {
        let p = purity(&["a", "a", "a", "b"], &[1, 1, 1, 1]).unwrap();
        assert_eq!(p["a"], 0.75);
        let perfect = purity(&PositionLabel::ALL, &[0, 1, 2, 3, 4]).unwrap();
        assert!(perfect.values().all(|&x| x == 1.0));
    }

    proptest! {
        #[test]
        fn fm_matches_pair_enumeration(a in prop::collection::vec(0u8..4, 2..30), seed in 0u8..4) {
            let b: Vec<u8> = a.iter().enumerate().map(|(i, &x)| (x + (i as u8 % (seed + 1))) % 4).collect();
            prop_assert!((fowlkes_mallows(&a, &b).unwrap() - brute_fm(&a, &b)).abs() < 1e-12);
        }

        #[test]
        fn metrics_ignore_cluster_names(a in prop::collection::vec(0u8..4, 2..30), b in prop::collection::vec(0u8..4, 30)) {
            let b = &b[..a.len()];
            let renamed: Vec<u8> = b.iter().map(|x| (x + 1) % 4 + 10).collect();
            prop_assert_eq!(fowlkes_mallows(&a, b).unwrap(), fowlkes_mallows(&a, &renamed).unwrap());
            let (h1, c1, _) = homogeneity_completeness(&a, b).unwrap();
            let (h2, c2, _) = homogeneity_completeness(&a, &renamed).unwrap();
            prop_assert!((h1 - h2).abs() < 1e-12 && (c1 - c2).abs() < 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&h1) && (0.0..=1.0 + 1e-12).contains(&c1));
        }

        #[test]
        fn lloyd_objective_never_increases(v in prop::collection::vec(0.0f64..1.0, 6..40), seed: u64) {
            let km = kmeans_1d(&v, 5, seed, 1, Execution::Sequential);
            if let Ok(km) = km {
                for w in km.history.windows(2) {
                    prop_assert!(w[1] <= w[0] + 1e-12);
                }
                // fixed point: every value sits with its nearest centroid
                for (x, &a) in v.iter().zip(&km.assignment) {
                    prop_assert_eq!(nearest(&km.centroids, *x), a);
                }
                prop_assert!(km.centroids.windows(2).all(|w| w[0] < w[1]));
            }
        }

        #[test]
        fn restarts_reach_dp_optimum_on_modal_data(
            start in 0.0f64..0.5,
            gaps in prop::collection::vec(0.1f64..0.3, 4),
            jitter in prop::collection::vec(-1.0f64..1.0, 30),
            spread in 0.0f64..0.02,
            n in 5usize..=30,
            seed: u64,
        ) {
            let centers: Vec<f64> = std::iter::once(start)
                .chain(gaps.iter().scan(start, |acc, g| {
                    *acc += g;
                    Some(*acc)
                }))
                .collect();
            let v: Vec<f64> = (0..n).map(|i| centers[i % 5] + spread * jitter[i]).collect();
            let km = kmeans_1d(&v, 5, seed, DEFAULT_RESTARTS, Execution::Sequential).unwrap();
            let opt = dp_optimum(&v, 5);
            prop_assert!(km.objective - opt <= 1e-9, "{} vs {}", km.objective, opt);
        }
    }

    #[test]
    fn unstructured_data_is_near_optimal() {
        // without modal structure ten restarts are a heuristic; track the hit rate
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let trials = 400;
        let mut hits = 0;
        for t in 0..trials {
            let n = rng.random_range(5..=30);
            let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let km = kmeans_1d(&v, 5, t, DEFAULT_RESTARTS, Execution::Sequential).unwrap();
            if km.objective - dp_optimum(&v, 5) <= 1e-9 {
                hits += 1;
            }
        }
        assert!(hits as f64 / trials as f64 >= 0.95, "{hits}/{trials}");
    }
}
