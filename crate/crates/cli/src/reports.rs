//! Assessment reports: rank agreement, positioning tests and agent scores.
//!
//! Reports are JSON Lines tables; the CSV variants are plot-ready
//! matrices and interval lists.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use forge_core::corpus::{Axis, ScoreSample, TestName};
use forge_core::ideology::{rank_percentile, z_score, IdeologyScore, ScoreDistribution};
use forge_core::spectrum::SpectrumMapping;
use forge_core::stats::{
    aggregate_agreement, one_way_anova, tukey_hsd, AnovaResult, RankedList, Stars, TukeyContrast,
};
use forge_core::PositionLabel;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuintupletRho {
    pub rho: f64,
    pub p_value: f64,
}

/// One cell of the position-by-position agreement matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementCell {
    pub a: PositionLabel,
    pub b: PositionLabel,
    pub mean_rho: Option<f64>,
    pub p_value: Option<f64>,
    pub stars: Option<Stars>,
    pub pairs: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_quintuplet: BTreeMap<String, QuintupletRho>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Mean ρ of every (a-position, b-position) pair over shared quintuplets.
/// Row order is a's positions, columns b's.
pub fn agreement_matrix(a: &[RankedList], b: &[RankedList]) -> Vec<AgreementCell> {
    let by_position = |lists: &[RankedList]| -> BTreeMap<PositionLabel, Vec<RankedList>> {
        let mut m: BTreeMap<PositionLabel, Vec<RankedList>> = BTreeMap::new();
        for l in lists {
            m.entry(l.source_position).or_default().push(l.clone());
        }
        m
    };
    let (ga, gb) = (by_position(a), by_position(b));
    let empty = Vec::new();
    let mut cells = Vec::with_capacity(25);
    for pa in PositionLabel::ALL {
        for pb in PositionLabel::ALL {
            let la = ga.get(&pa).unwrap_or(&empty);
            let lb = gb.get(&pb).unwrap_or(&empty);
            cells.push(match aggregate_agreement(la, lb) {
                Ok(ag) => AgreementCell {
                    a: pa,
                    b: pb,
                    mean_rho: Some(ag.mean_rho),
                    p_value: Some(ag.p_value),
                    stars: Some(ag.stars),
                    pairs: ag.pairs,
                    per_quintuplet: ag
                        .per_quintuplet
                        .into_iter()
                        .map(|(id, r)| {
                            (
                                id,
                                QuintupletRho {
                                    rho: r.rho,
                                    p_value: r.p_value,
                                },
                            )
                        })
                        .collect(),
                    error: None,
                },
                Err(e) => AgreementCell {
                    a: pa,
                    b: pb,
                    mean_rho: None,
                    p_value: None,
                    stars: None,
                    pairs: 0,
                    per_quintuplet: BTreeMap::new(),
                    error: Some(e.to_string()),
                },
            });
        }
    }
    cells
}

/// 5×5 heatmap of mean ρ, with significance stars appended.
pub fn agreement_csv(cells: &[AgreementCell]) -> String {
    let mut out = String::from("a\\b");
    for p in PositionLabel::ALL {
        write!(out, ",{p}").unwrap();
    }
    out.push('\n');
    for pa in PositionLabel::ALL {
        out.push_str(pa.as_str());
        for pb in PositionLabel::ALL {
            let cell = cells.iter().find(|c| c.a == pa && c.b == pb);
            match cell.and_then(|c| c.mean_rho.zip(c.stars)) {
                Some((rho, stars)) => write!(out, ",{rho:.4}{}", stars_suffix(stars)).unwrap(),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

fn stars_suffix(s: Stars) -> &'static str {
    match s {
        Stars::NotSignificant => "",
        other => other.as_str(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositioningReport {
    pub test_name: TestName,
    pub axis: Axis,
    pub group_sizes: BTreeMap<PositionLabel, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anova: Option<AnovaResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contrasts: Vec<TukeyContrast<PositionLabel>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// ANOVA and Tukey contrasts across positions, per test and axis.
pub fn positioning(samples: &[ScoreSample], alpha: f64) -> Vec<PositioningReport> {
    let mut groups: BTreeMap<(TestName, Axis), BTreeMap<PositionLabel, Vec<f64>>> = BTreeMap::new();
    for s in samples {
        groups
            .entry((s.test_name, s.axis))
            .or_default()
            .entry(s.position)
            .or_default()
            .push(s.value);
    }
    groups
        .into_iter()
        .map(|((test_name, axis), g)| {
            let group_sizes = g.iter().map(|(k, v)| (*k, v.len())).collect();
            let result = one_way_anova(&g).and_then(|a| tukey_hsd(&g, alpha).map(|t| (a, t)));
            match result {
                Ok((anova, contrasts)) => PositioningReport {
                    test_name,
                    axis,
                    group_sizes,
                    anova: Some(anova),
                    contrasts,
                    error: None,
                },
                Err(e) => PositioningReport {
                    test_name,
                    axis,
                    group_sizes,
                    anova: None,
                    contrasts: Vec::new(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Tukey intervals as rows, ready for an interval plot.
pub fn tukey_csv(reports: &[PositioningReport]) -> String {
    let mut out =
        String::from("test,axis,first,second,mean_diff,ci_low,ci_high,p_adj,significant\n");
    for r in reports {
        for c in &r.contrasts {
            writeln!(
                out,
                "{:?},{:?},{},{},{:.6},{:.6},{:.6},{:.6},{}",
                r.test_name,
                r.axis,
                c.pair.0,
                c.pair.1,
                c.mean_diff,
                c.ci_low,
                c.ci_high,
                c.p_adj,
                c.significant
            )
            .unwrap();
        }
    }
    out
}

/// Where an agent's ideology score falls in each position's distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentComparison {
    pub agent: String,
    pub position: PositionLabel,
    pub ideology: f64,
    pub z: Option<f64>,
    pub percentile: f64,
    pub aligned: bool,
}

/// Compares the agent's normalized score against the legislators of each
/// mapped position. Positions without legislators are left out; with zero
/// spread `z` is absent and `aligned` means an exact match.
pub fn compare_agent(
    scores: &[IdeologyScore],
    mapping: &SpectrumMapping,
    agent: &str,
) -> anyhow::Result<Vec<AgentComparison>> {
    let ideology = scores
        .iter()
        .find(|s| s.legislator_id == agent)
        .map(|s| s.normalized)
        .ok_or_else(|| anyhow::anyhow!("agent `{agent}` has no score"))?;
    let mut by_position: BTreeMap<PositionLabel, Vec<f64>> = BTreeMap::new();
    for s in scores.iter().filter(|s| s.legislator_id != agent) {
        if let Some(p) = mapping.assignments.get(&s.legislator_id) {
            by_position.entry(*p).or_default().push(s.normalized);
        }
    }
    let mut out = Vec::new();
    for (position, values) in by_position {
        let dist = ScoreDistribution::from_values(position, values)?;
        let percentile = rank_percentile(ideology, &dist)?;
        let (z, aligned) = match z_score(ideology, &dist) {
            Ok((z, a)) => (Some(z), a),
            Err(_) => (None, ideology == dist.mean),
        };
        out.push(AgentComparison {
            agent: agent.to_string(),
            position,
            ideology,
            z,
            percentile,
            aligned,
        });
    }
    Ok(out)
}
