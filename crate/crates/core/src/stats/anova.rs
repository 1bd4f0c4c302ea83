use std::collections::BTreeMap;
use std::fmt::Display;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::{ptukey, qtukey, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f_stat: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
}

struct Summary {
    means: Vec<f64>,
    sizes: Vec<usize>,
    ss_between: f64,
    ss_within: f64,
    total: usize,
}

fn summarize<K: Display>(groups: &BTreeMap<K, Vec<f64>>) -> Result<Summary, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups);
    }
    if let Some((k, _)) = groups.iter().find(|(_, v)| v.len() < 2) {
        return Err(StatsError::TinyGroup(k.to_string()));
    }
    let total: usize = groups.values().map(Vec::len).sum();
    let grand = groups.values().flatten().sum::<f64>() / total as f64;
    let means: Vec<f64> = groups
        .values()
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
    let ss_between = means
        .iter()
        .zip(&sizes)
        .map(|(m, &n)| n as f64 * (m - grand).powi(2))
        .sum();
    let ss_within = groups
        .values()
        .zip(&means)
        .map(|(v, m)| v.iter().map(|x| (x - m).powi(2)).sum::<f64>())
        .sum();
    Ok(Summary {
        means,
        sizes,
        ss_between,
        ss_within,
        total,
    })
}

/// One-way fixed-effects ANOVA.
///
/// With no within-group variance the F statistic is infinite (p = 0) when
/// the means differ and zero (p = 1) when they do not.
pub fn one_way_anova<K: Display>(
    groups: &BTreeMap<K, Vec<f64>>,
) -> Result<AnovaResult, StatsError> {
    let s = summarize(groups)?;
    let df_between = groups.len() - 1;
    let df_within = s.total - groups.len();
    let (f_stat, p_value) = if s.ss_within == 0.0 {
        if s.ss_between == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY, 0.0)
        }
    } else {
        let f = (s.ss_between / df_between as f64) / (s.ss_within / df_within as f64);
        let dist = FisherSnedecor::new(df_between as f64, df_within as f64).expect("positive dof");
        (f, dist.sf(f))
    };
    Ok(AnovaResult {
        f_stat,
        df_between,
        df_within,
        p_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyContrast<K> {
    pub pair: (K, K),
    /// Mean of the second group minus mean of the first.
    pub mean_diff: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_adj: f64,
    pub significant: bool,
}

/// All pairwise Tukey–Kramer contrasts, pairs in key order.
pub fn tukey_hsd<K: Display + Clone>(
    groups: &BTreeMap<K, Vec<f64>>,
    alpha: f64,
) -> Result<Vec<TukeyContrast<K>>, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidAlpha);
    }
    let s = summarize(groups)?;
    let k = groups.len();
    let df = (s.total - k) as f64;
    let mse = s.ss_within / df;
    let q_crit = qtukey(1.0 - alpha, k, df);
    let keys: Vec<&K> = groups.keys().collect();
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let diff = s.means[j] - s.means[i];
            let se = (mse / 2.0 * (1.0 / s.sizes[i] as f64 + 1.0 / s.sizes[j] as f64)).sqrt();
            let (half, p_adj) = if se == 0.0 {
                (0.0, if diff == 0.0 { 1.0 } else { 0.0 })
            } else {
                (
                    q_crit * se,
                    (1.0 - ptukey(diff.abs() / se, k, df)).clamp(0.0, 1.0),
                )
            };
            let (ci_low, ci_high) = (diff - half, diff + half);
            out.push(TukeyContrast {
                pair: (keys[i].clone(), keys[j].clone()),
                mean_diff: diff,
                ci_low,
                ci_high,
                p_adj,
                significant: ci_low > 0.0 || ci_high < 0.0,
            });
        }
    }
    Ok(out)
}
