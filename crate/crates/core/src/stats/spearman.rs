use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::StatsError;
use crate::corpus::PositionLabel;

/// Largest list length for which the exact permutation p-value is computed.
pub const MAX_EXACT_N: usize = 8;

/// A ranking of one quintuplet's statements, most agreed first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankedList {
    pub source_position: PositionLabel,
    pub quintuplet_id: String,
    pub order: Vec<String>,
    /// Rank values aligned with `order` when the ranking has ties, e.g.
    /// `[1, 2, 2, 4, 5]`. Absent means the strict order `1..=n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranks: Option<Vec<f64>>,
}

impl crate::corpus::Record for RankedList {
    fn unique_key(&self) -> Option<String> {
        Some(format!("{}/{}", self.quintuplet_id, self.source_position))
    }

    fn violation(&self) -> Option<&'static str> {
        let distinct: BTreeSet<&String> = self.order.iter().collect();
        if self.order.is_empty() || distinct.len() != self.order.len() {
            Some("order")
        } else if self
            .ranks
            .as_ref()
            .is_some_and(|r| r.len() != self.order.len())
        {
            Some("ranks")
        } else {
            None
        }
    }
}

impl RankedList {
    /// Fractional rank of every statement id.
    pub fn rank_map(&self) -> Result<BTreeMap<&str, f64>, StatsError> {
        if crate::corpus::Record::violation(self).is_some() {
            return Err(StatsError::MalformedList(
                self.quintuplet_id.clone(),
                "order/ranks",
            ));
        }
        let raw: Vec<f64> = match &self.ranks {
            Some(r) => r.clone(),
            None => (1..=self.order.len()).map(|r| r as f64).collect(),
        };
        let ranks = fractional_ranks(&raw);
        Ok(self.order.iter().map(String::as_str).zip(ranks).collect())
    }
}

/// Average ranks (1-based) of `values`, ties sharing the mean of their slots.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            out[i] = avg;
        }
        start = end;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpearmanResult {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Visits every permutation of `items` (Heap's algorithm, iterative).
fn for_each_permutation(items: &mut [f64], mut visit: impl FnMut(&[f64])) {
    let n = items.len();
    let mut c = vec![0usize; n];
    visit(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Spearman correlation of two rankings of the same statements with an
/// exact two-sided permutation p-value.
///
/// Correlation is the Pearson correlation of fractional ranks, which equals
/// `1 − 6Σd²/(n(n²−1))` when there are no ties. The p-value is the share of
/// all `n!` reassignments of the second ranking whose |ρ| reaches the
/// observed |ρ|.
pub fn spearman_rho(a: &RankedList, b: &RankedList) -> Result<SpearmanResult, StatsError> {
    if a.quintuplet_id != b.quintuplet_id {
        return Err(StatsError::MismatchedQuintuplets(
            a.quintuplet_id.clone(),
            b.quintuplet_id.clone(),
        ));
    }
    let ra = a.rank_map()?;
    let rb = b.rank_map()?;
    if ra.len() != rb.len() || ra.keys().any(|k| !rb.contains_key(k)) {
        return Err(StatsError::MismatchedMembers);
    }
    let n = ra.len();
    if !(2..=MAX_EXACT_N).contains(&n) {
        return Err(StatsError::MalformedList(
            a.quintuplet_id.clone(),
            "length outside 2..=8",
        ));
    }
    let x: Vec<f64> = ra.values().copied().collect();
    let y: Vec<f64> = ra.keys().map(|k| rb[k]).collect();
    let constant = |l: &RankedList| {
        StatsError::ConstantRanks(format!("{}/{}", l.quintuplet_id, l.source_position))
    };
    let rho = pearson(&x, &y).ok_or_else(|| {
        if x.iter().all(|v| *v == x[0]) {
            constant(a)
        } else {
            constant(b)
        }
    })?;

    let target = rho.abs() - 1e-12;
    let (mut hits, mut total) = (0u64, 0u64);
    let mut perm = y.clone();
    for_each_permutation(&mut perm, |p| {
        total += 1;
        if pearson(&x, p).is_some_and(|r| r.abs() >= target) {
            hits += 1;
        }
    });
    Ok(SpearmanResult {
        rho,
        p_value: hits as f64 / total as f64,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stars {
    #[serde(rename = "ns")]
    NotSignificant,
    #[serde(rename = "*")]
    One,
    #[serde(rename = "**")]
    Two,
    #[serde(rename = "***")]
    Three,
}

impl Stars {
    pub fn from_p(p: f64) -> Self {
        if p < 0.001 {
            Self::Three
        } else if p < 0.01 {
            Self::Two
        } else if p < 0.05 {
            Self::One
        } else {
            Self::NotSignificant
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::NotSignificant => "ns",
            Self::One => "*",
            Self::Two => "**",
            Self::Three => "***",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub mean_rho: f64,
    pub p_value: f64,
    pub stars: Stars,
    pub pairs: usize,
    /// Per-quintuplet results, by quintuplet id.
    pub per_quintuplet: BTreeMap<String, SpearmanResult>,
}

/// Mean per-quintuplet ρ between two sets of rankings, with a two-sided
/// one-sample t-test of the ρ values against zero.
pub fn aggregate_agreement(
    lists_a: &[RankedList],
    lists_b: &[RankedList],
) -> Result<Agreement, StatsError> {
    let index = |lists: &[RankedList]| -> BTreeMap<String, RankedList> {
        lists
            .iter()
            .map(|l| (l.quintuplet_id.clone(), l.clone()))
            .collect()
    };
    let (ia, ib) = (index(lists_a), index(lists_b));
    let mut per_quintuplet = BTreeMap::new();
    for (id, a) in &ia {
        if let Some(b) = ib.get(id) {
            per_quintuplet.insert(id.clone(), spearman_rho(a, b)?);
        }
    }
    match per_quintuplet.len() {
        0 => return Err(StatsError::NoOverlap),
        1 => return Err(StatsError::TooFewPairs { min: 2, got: 1 }),
        _ => {}
    }
    let rhos: Vec<f64> = per_quintuplet.values().map(|r| r.rho).collect();
    let n = rhos.len() as f64;
    let mean = rhos.iter().sum::<f64>() / n;
    let var = rhos.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let p_value = if var == 0.0 {
        if mean == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        let t = mean / (var / n).sqrt();
        let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("positive dof");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(Agreement {
        mean_rho: mean,
        p_value,
        stars: Stars::from_p(p_value),
        pairs: per_quintuplet.len(),
        per_quintuplet,
    })
}
