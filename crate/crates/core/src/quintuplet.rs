//! Quintuplet scoring, hill-climbing optimization and position re-ranking.
//!
//! A quintuplet holds one statement per spectrum position. Its score sums
//! weighted contradictions over the ten position pairs: adjacent positions
//! weigh −1 and all others weigh their ordinal distance, so a good
//! quintuplet agrees with its neighbours and contradicts distant positions.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::PositionLabel;
use crate::exec::Execution;
use crate::oracle::{ContradictionLookup, ContradictionMatrix, OracleError};
use crate::semantic::SemanticCluster;

#[derive(Debug, Error)]
pub enum QuintupletError {
    #[error("ordinals ({0}, {1}) must satisfy 1 <= i < j <= 5")]
    BadOrdinals(usize, usize),
    #[error("cluster `{cluster}` has no candidate for {position}")]
    MissingPosition {
        cluster: String,
        position: PositionLabel,
    },
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

pub fn pair_weight(i: usize, j: usize) -> Result<i32, QuintupletError> {
    if !(1 <= i && i < j && j <= 5) {
        return Err(QuintupletError::BadOrdinals(i, j));
    }
    Ok(if j - i == 1 { -1 } else { (j - i) as i32 })
}

pub fn pair_rank(c: f64, i: usize, j: usize) -> Result<f64, QuintupletError> {
    Ok(c * pair_weight(i, j)? as f64)
}

/// The ten `(i, j)` slot pairs with `i < j`, zero-based, and their weights.
fn weighted_pairs() -> [(usize, usize, f64); 10] {
    let mut out = [(0, 0, 0.0); 10];
    let mut k = 0;
    for i in 0..5 {
        for j in i + 1..5 {
            out[k] = (i, j, if j - i == 1 { -1.0 } else { (j - i) as f64 });
            k += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quintuplet {
    pub cluster_id: String,
    /// Slot `k` holds the statement for the position with ordinal `k + 1`.
    pub members: [String; 5],
    pub score: f64,
}

impl Quintuplet {
    pub fn member(&self, p: PositionLabel) -> &str {
        &self.members[p.index()]
    }
}

impl crate::corpus::Record for Quintuplet {
    fn unique_key(&self) -> Option<String> {
        Some(self.cluster_id.clone())
    }

    fn violation(&self) -> Option<&'static str> {
        if self.members.iter().any(|m| m.is_empty()) {
            Some("members")
        } else {
            None
        }
    }
}

pub fn quintuplet_score<L: ContradictionLookup + ?Sized>(
    members: &[String; 5],
    c: &L,
) -> Result<f64, OracleError> {
    let mut total = 0.0;
    for (i, j, w) in weighted_pairs() {
        total += c.contradiction(&members[i], &members[j])? * w;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            patience: 50,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<(), QuintupletError> {
        if self.max_iterations == 0 {
            return Err(QuintupletError::InvalidConfig(
                "max_iterations must be at least 1",
            ));
        }
        if self.patience == 0 {
            return Err(QuintupletError::InvalidConfig(
                "patience must be at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimized {
    pub quintuplet: Quintuplet,
    /// Score of the starting quintuplet followed by every accepted swap.
    pub accepted_scores: Vec<f64>,
    pub iterations: usize,
}

impl Optimized {
    pub fn initial_score(&self) -> f64 {
        self.accepted_scores[0]
    }

    pub fn swaps(&self) -> usize {
        self.accepted_scores.len() - 1
    }
}

/// Per-position candidate lists of a cluster, checked for completeness.
pub fn candidate_pools(cluster: &SemanticCluster) -> Result<[Vec<String>; 5], QuintupletError> {
    let mut pools: [Vec<String>; 5] = Default::default();
    for p in PositionLabel::ALL {
        let mut c = cluster.candidates(p).to_vec();
        if c.is_empty() {
            return Err(QuintupletError::MissingPosition {
                cluster: cluster.cluster_id.clone(),
                position: p,
            });
        }
        c.sort();
        c.dedup();
        pools[p.index()] = c;
    }
    Ok(pools)
}

/// Random-swap hill climbing over one cluster.
///
/// Each iteration picks a random position and a random other candidate for
/// it; the swap is kept only when the score strictly increases. The run stops
/// after `max_iterations` or `patience` consecutive rejected swaps.
pub fn optimize<L: ContradictionLookup + ?Sized>(
    cluster: &SemanticCluster,
    c: &L,
    cfg: &OptimizerConfig,
) -> Result<Optimized, QuintupletError> {
    cfg.validate()?;
    let pools = candidate_pools(cluster)?;
    let ids: Vec<String> = pools.iter().flatten().cloned().collect();
    let local = ContradictionMatrix::from_lookup(&ids, c)?;
    let offsets: Vec<usize> = pools
        .iter()
        .scan(0, |acc, p| {
            let start = *acc;
            *acc += p.len();
            Some(start)
        })
        .collect();
    let pairs = weighted_pairs();
    let score = |slots: &[usize; 5]| -> f64 {
        pairs
            .iter()
            .map(|&(i, j, w)| local.get(offsets[i] + slots[i], offsets[j] + slots[j]) * w)
            .sum()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut slots = [0usize; 5];
    for (k, pool) in pools.iter().enumerate() {
        slots[k] = rng.random_range(0..pool.len());
    }
    let mut current = score(&slots);
    let mut accepted = vec![current];
    let swappable: Vec<usize> = (0..5).filter(|&k| pools[k].len() > 1).collect();
    let mut stale = 0;
    let mut iterations = 0;
    while iterations < cfg.max_iterations && stale < cfg.patience && !swappable.is_empty() {
        iterations += 1;
        let k = *swappable.choose(&mut rng).expect("nonempty");
        // uniform over the other candidates of slot k
        let mut pick = rng.random_range(0..pools[k].len() - 1);
        if pick >= slots[k] {
            pick += 1;
        }
        let mut trial = slots;
        trial[k] = pick;
        let s = score(&trial);
        if s > current {
            slots = trial;
            current = s;
            accepted.push(s);
            stale = 0;
        } else {
            stale += 1;
        }
    }

    let members: [String; 5] = std::array::from_fn(|k| pools[k][slots[k]].clone());
    Ok(Optimized {
        quintuplet: Quintuplet {
            cluster_id: cluster.cluster_id.clone(),
            members,
            score: current,
        },
        accepted_scores: accepted,
        iterations,
    })
}

fn stream_for(cluster_id: &str) -> u64 {
    cluster_id.bytes().fold(0xcbf29ce484222325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x100000001b3)
    })
}

/// Seed used for a given cluster, so results do not depend on which other
/// clusters are processed alongside it.
pub fn cluster_seed(seed: u64, cluster_id: &str) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_for(cluster_id));
    rng.random()
}

#[derive(Debug, Default)]
pub struct Batch {
    pub quintuplets: Vec<Quintuplet>,
    /// Clusters left out because some position had no candidate.
    pub skipped: Vec<(String, PositionLabel)>,
}

/// Optimizes every cluster independently. Clusters without a candidate for
/// every position are skipped and reported.
pub fn optimize_all<L: ContradictionLookup + Sync + ?Sized>(
    clusters: &[SemanticCluster],
    c: &L,
    cfg: &OptimizerConfig,
    exec: Execution,
) -> Result<Batch, QuintupletError> {
    cfg.validate()?;
    let results = exec.map(clusters, |cl| {
        let run_cfg = OptimizerConfig {
            seed: cluster_seed(cfg.seed, &cl.cluster_id),
            ..*cfg
        };
        optimize(cl, c, &run_cfg)
    });
    let mut batch = Batch::default();
    for r in results {
        match r {
            Ok(o) => batch.quintuplets.push(o.quintuplet),
            Err(QuintupletError::MissingPosition { cluster, position }) => {
                log::info!("skipping cluster {cluster}: no {position} candidate");
                batch.skipped.push((cluster, position));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(batch)
}

/// Orders the quintuplet for the position `p_k`: its own statement first,
/// then the rest by ascending weighted contradiction with it. Ties go to the
/// nearer position, then the smaller id.
pub fn position_rerank<L: ContradictionLookup + ?Sized>(
    q: &Quintuplet,
    c: &L,
    p_k: PositionLabel,
) -> Result<[String; 5], OracleError> {
    let k = p_k.ordinal();
    let anchor = q.member(p_k);
    let mut rest = Vec::with_capacity(4);
    for p in PositionLabel::ALL.into_iter().filter(|p| *p != p_k) {
        let j = p.ordinal();
        let cij = c.contradiction(anchor, q.member(p))?;
        let rank = pair_rank(cij, k.min(j), k.max(j)).expect("distinct ordinals");
        rest.push((rank, k.abs_diff(j), q.member(p).to_string()));
    }
    rest.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then_with(|| a.2.cmp(&b.2))
    });
    let mut out = vec![anchor.to_string()];
    out.extend(rest.into_iter().map(|r| r.2));
    Ok(out.try_into().expect("five members"))
}

/// Mean contradiction between members at each ordinal distance 1..=4,
/// pooled over quintuplets.
pub fn contradiction_by_distance<L: ContradictionLookup + ?Sized>(
    quints: &[Quintuplet],
    c: &L,
) -> Result<[f64; 4], OracleError> {
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for q in quints {
        for (i, j, _) in weighted_pairs() {
            let e = sums.entry(j - i).or_default();
            e.0 += c.contradiction(&q.members[i], &q.members[j])?;
            e.1 += 1;
        }
    }
    Ok(std::array::from_fn(|d| {
        sums.get(&(d + 1)).map_or(f64::NAN, |(s, n)| s / *n as f64)
    }))
}
