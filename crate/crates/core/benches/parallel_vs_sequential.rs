use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use forge_core::corpus::Statement;
use forge_core::ideology::IdeologyScore;
use forge_core::oracle::{ContradictionLookup, OracleError};
use forge_core::quintuplet::{optimize_all, OptimizerConfig};
use forge_core::semantic::{cluster_statements, EmbeddingVector, Linkage, SemanticCluster};
use forge_core::spectrum::kmeans_map_with;
use forge_core::{Execution, PositionLabel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

struct Hashed;

impl ContradictionLookup for Hashed {
    fn contradiction(&self, a: &str, b: &str) -> Result<f64, OracleError> {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in a.bytes().chain([0]).chain(b.bytes()) {
            h = (h ^ byte as u64).wrapping_mul(0x0100_0000_01b3);
        }
        Ok((h % 10_000) as f64 / 10_000.0)
    }
}

fn clusters(n: usize, per_position: usize) -> Vec<SemanticCluster> {
    (0..n)
        .map(|c| {
            let per_position_members: BTreeMap<PositionLabel, Vec<String>> = PositionLabel::ALL
                .iter()
                .map(|&p| {
                    (
                        p,
                        (0..per_position).map(|i| format!("c{c}-{p}-{i}")).collect(),
                    )
                })
                .collect();
            SemanticCluster {
                cluster_id: format!("c{c}"),
                issue: format!("t{}", c % 10),
                member_ids: per_position_members.values().flatten().cloned().collect(),
                per_position_members,
            }
        })
        .collect()
}

fn statements(
    topics: usize,
    per_topic: usize,
    dim: usize,
) -> (Vec<Statement>, Vec<EmbeddingVector>) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut st = Vec::new();
    let mut emb = Vec::new();
    for t in 0..topics {
        for i in 0..per_topic {
            let id = format!("s{t}-{i}");
            let mut values: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.05..0.05)).collect();
            values[(t + i % 4) % dim] += 1.0;
            st.push(Statement {
                id: id.clone(),
                speaker_id: format!("L{i:03}"),
                topic: format!("t{t}"),
                text: id.clone(),
                position: Some(PositionLabel::ALL[i % 5]),
            });
            emb.push(EmbeddingVector {
                statement_id: id,
                values,
            });
        }
    }
    (st, emb)
}

fn scores(n: usize) -> Vec<IdeologyScore> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    (0..n)
        .map(|i| {
            let v = 0.1 + 0.2 * (i % 5) as f64 + rng.random_range(-0.05..0.05);
            IdeologyScore {
                legislator_id: format!("L{i:04}"),
                raw: v,
                normalized: v,
            }
        })
        .collect()
}

fn bench_optimizer(c: &mut Criterion) {
    let cl = clusters(64, 6);
    let cfg = OptimizerConfig::default();
    let mut g = c.benchmark_group("optimize_all");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| optimize_all(black_box(&cl), &Hashed, &cfg, exec).unwrap())
        });
    }
    g.finish();
}

fn bench_kmeans(c: &mut Criterion) {
    let s = scores(2_000);
    let mut g = c.benchmark_group("kmeans_map");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| kmeans_map_with(black_box(&s), 5, 3, 32, exec).unwrap())
        });
    }
    g.finish();
}

fn bench_cluster(c: &mut Criterion) {
    let (st, emb) = statements(16, 60, 32);
    let mut g = c.benchmark_group("cluster_statements");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                cluster_statements(black_box(&st), &emb, 0.5, Linkage::Average, exec).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, bench_optimizer, bench_kmeans, bench_cluster);
criterion_main!(benches);
