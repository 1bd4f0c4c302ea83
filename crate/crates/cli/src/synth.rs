//! Seeded synthetic corpus with planted ideological blocs.
//!
//! Legislators sit in five blocs along a latent axis and co-sponsor bills of
//! nearby sponsors more often. Statements come in topic sub-groups whose
//! embeddings are close within a sub-group and far across; contradiction
//! grows with the bloc distance of the two speakers. The generated
//! `config.toml` runs the whole pipeline offline from the cache files.

use std::fs;
use std::path::Path;

use anyhow::Context;
use forge_core::corpus::Leaning;
use forge_core::corpus::{
    write_jsonl, Axis, Bill, ScoreSample, SponsorshipRecord, Statement, TestName, VoteDecision,
    VoteRecord,
};
use forge_core::oracle::{ContradictionCache, TextEmbedding};
use forge_core::prompt::POLICY_ISSUES;
use forge_core::PositionLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ops::{write_json, ManifestoSentence, PositionAssignment, QaPair};

pub const LEGISLATORS: usize = 50;
pub const BLOCS: usize = 5;
pub const BILLS: usize = 100;
pub const SPONSORSHIP_ROWS: usize = 500;
pub const TOPICS: usize = 10;
pub const SUBGROUPS: usize = 2;
pub const PER_SUBGROUP: usize = 10;
pub const EMBEDDING_DIM: usize = TOPICS + TOPICS * SUBGROUPS + 2;
pub const MODEL_TAG: &str = "synthetic-nli";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthOptions {
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self { seed: 17 }
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    /// Latent coordinate and bloc of each legislator, by id order.
    pub legislators: Vec<(String, f64, usize)>,
    pub sponsorships: Vec<SponsorshipRecord>,
    pub bills: Vec<Bill>,
    pub statements: Vec<Statement>,
    pub embeddings: Vec<TextEmbedding>,
    pub cache: ContradictionCache,
    pub qa: Vec<QaPair>,
    pub manifesto: Vec<ManifestoSentence>,
    pub scores: Vec<ScoreSample>,
    pub votes: Vec<VoteRecord>,
}

impl Corpus {
    pub fn bloc_of(&self, legislator: &str) -> Option<usize> {
        self.legislators
            .iter()
            .find(|l| l.0 == legislator)
            .map(|l| l.2)
    }

    /// Planted positions: bloc `b` is position `b`.
    pub fn truth(&self) -> Vec<PositionAssignment> {
        self.legislators
            .iter()
            .map(|(id, _, b)| PositionAssignment {
                legislator_id: id.clone(),
                position: PositionLabel::ALL[*b],
            })
            .collect()
    }
}

fn legislator_id(i: usize) -> String {
    format!("L{i:03}")
}

fn pick_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut r = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if r < *w {
            return i;
        }
        r -= w;
    }
    weights.len() - 1
}

const SUBJECTS: [&str; 6] = [
    "Appropriations",
    "Oversight",
    "Grants",
    "Taxation",
    "Regulation",
    "Public lands",
];

const STANCES: [&str; 5] = [
    "must be rebuilt from the ground up",
    "needs far more public investment",
    "deserves a careful bipartisan compromise",
    "should be left mostly to the states",
    "must be cut back to its constitutional core",
];

pub fn generate(opts: SynthOptions) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let per_bloc = LEGISLATORS / BLOCS;
    let legislators: Vec<(String, f64, usize)> = (0..LEGISLATORS)
        .map(|i| {
            let bloc = i % BLOCS;
            let x = 0.1 + 0.2 * bloc as f64 + rng.random_range(-0.03..0.03);
            (legislator_id(i), x, bloc)
        })
        .collect();

    let mut bills = Vec::with_capacity(BILLS);
    let mut sponsorships = Vec::with_capacity(SPONSORSHIP_ROWS);
    for b in 0..BILLS {
        let sponsor = b % LEGISLATORS;
        let (sid, sx, _) = &legislators[sponsor];
        let area = POLICY_ISSUES[b % POLICY_ISSUES.len()];
        bills.push(Bill {
            id: format!("B{b:03}"),
            title: format!("{area} Act of {}", 2001 + b % 20),
            text: format!(
                "To amend federal law concerning {}, and for other purposes.",
                area.to_lowercase()
            ),
            policy_area: area.to_string(),
            legislative_subjects: vec![SUBJECTS[b % SUBJECTS.len()].to_string(), area.to_string()],
            sponsor_id: sid.clone(),
            sponsor_party: if *sx < 0.5 { "D" } else { "R" }.to_string(),
        });
        sponsorships.push(SponsorshipRecord {
            cosponsor_id: sid.clone(),
            sponsor_id: sid.clone(),
            bill_id: format!("B{b:03}"),
        });
    }
    let cosponsor_rows = SPONSORSHIP_ROWS - BILLS;
    for r in 0..cosponsor_rows {
        let b = r % BILLS;
        let sponsor = b % LEGISLATORS;
        let sx = legislators[sponsor].1;
        let taken: Vec<&str> = sponsorships
            .iter()
            .filter(|s| s.bill_id == bills[b].id)
            .map(|s| s.cosponsor_id.as_str())
            .collect();
        let weights: Vec<f64> = legislators
            .iter()
            .map(|(id, x, _)| {
                if taken.contains(&id.as_str()) {
                    0.0
                } else {
                    (-((x - sx) / 0.12).powi(2)).exp()
                }
            })
            .collect();
        let c = pick_weighted(&mut rng, &weights);
        sponsorships.push(SponsorshipRecord {
            cosponsor_id: legislators[c].0.clone(),
            sponsor_id: legislators[sponsor].0.clone(),
            bill_id: bills[b].id.clone(),
        });
    }

    let mut statements = Vec::new();
    let mut embeddings = Vec::new();
    for t in 0..TOPICS {
        let topic = POLICY_ISSUES[t];
        for g in 0..SUBGROUPS {
            for k in 0..PER_SUBGROUP {
                let bloc = k % BLOCS;
                let member = (t * SUBGROUPS + g + k / BLOCS) % per_bloc;
                let speaker = member * BLOCS + bloc;
                let id = format!("S{:04}", statements.len());
                let text = format!(
                    "{topic}, angle {}: {}{}",
                    g + 1,
                    STANCES[bloc],
                    ["", " today"][k / BLOCS]
                );
                let mut values = vec![0.0; EMBEDDING_DIM];
                values[t] = 0.6;
                values[TOPICS + t * SUBGROUPS + g] = 0.8;
                for v in values.iter_mut() {
                    *v += rng.random_range(-0.05..0.05);
                }
                embeddings.push(TextEmbedding {
                    text: text.clone(),
                    values,
                });
                statements.push(Statement {
                    id,
                    speaker_id: legislators[speaker].0.clone(),
                    topic: topic.to_string(),
                    text,
                    position: None,
                });
            }
        }
    }

    let mut cache = ContradictionCache::new(MODEL_TAG);
    let bloc = |s: &Statement| {
        legislators
            .iter()
            .find(|l| l.0 == s.speaker_id)
            .expect("speaker")
            .2
    };
    for (i, a) in statements.iter().enumerate() {
        for b in statements[i + 1..].iter().filter(|b| b.topic == a.topic) {
            let d = bloc(a).abs_diff(bloc(b)) as f64;
            let c = (0.15 * d + 0.1 * rng.random::<f64>()).clamp(0.0, 1.0);
            cache.insert(&a.id, &b.id, c).expect("valid pair");
        }
    }

    let qa = PositionLabel::ALL
        .iter()
        .enumerate()
        .flat_map(|(b, p)| {
            POLICY_ISSUES.iter().take(4).map(move |issue| QaPair {
                question: format!("What should Congress do about {}?", issue.to_lowercase()),
                answer: format!("{issue} {}.", STANCES[b]),
                position: *p,
            })
        })
        .collect();

    let manifesto = [
        (
            "We will expand access to affordable health care for every family.",
            Leaning::Left,
        ),
        (
            "We must raise the minimum wage so that work pays.",
            Leaning::Left,
        ),
        (
            "We support strong unions and fair overtime rules.",
            Leaning::Left,
        ),
        (
            "We will protect clean air and water for our children.",
            Leaning::Left,
        ),
        (
            "We believe government works best when it listens.",
            Leaning::Center,
        ),
        (
            "We can balance the budget without abandoning seniors.",
            Leaning::Center,
        ),
        (
            "We will cut taxes for small businesses and families.",
            Leaning::Right,
        ),
        (
            "We oppose new federal mandates on local schools.",
            Leaning::Right,
        ),
        (
            "We will secure the border and enforce existing law.",
            Leaning::Right,
        ),
        (
            "We defend the right of citizens to keep and bear arms.",
            Leaning::Right,
        ),
        ("Taxes are too high.", Leaning::Right),
    ]
    .into_iter()
    .map(|(t, l)| ManifestoSentence {
        text: t.to_string(),
        leaning: l,
    })
    .collect();

    let mut scores = Vec::new();
    for test in [
        TestName::PComp,
        TestName::PCoord,
        TestName::Nolan,
        TestName::WSPQ,
    ] {
        let (lo, hi) = test.range();
        for axis in [Axis::Economic, Axis::Social] {
            for (b, p) in PositionLabel::ALL.into_iter().enumerate() {
                for m in 0..4 {
                    let centre = lo + (hi - lo) * (0.15 + 0.175 * b as f64);
                    let jitter = (hi - lo) * 0.03 * rng.random_range(-1.0..1.0);
                    scores.push(ScoreSample {
                        test_name: test,
                        axis,
                        position: p,
                        model_tag: format!("ft-{}-{m}", p.as_str().to_lowercase()),
                        value: centre + jitter,
                    });
                }
            }
        }
    }

    let mut votes = Vec::new();
    for (b, p) in PositionLabel::ALL.into_iter().enumerate() {
        let agent = format!("agent-{}", p.as_str().to_lowercase());
        for bill in &bills {
            let sponsor_bloc = legislators
                .iter()
                .find(|l| l.0 == bill.sponsor_id)
                .expect("sponsor")
                .2;
            let yes = b.abs_diff(sponsor_bloc) == 0
                || (b.abs_diff(sponsor_bloc) == 1 && rng.random::<f64>() < 0.3);
            votes.push(VoteRecord {
                agent_id: agent.clone(),
                bill_id: bill.id.clone(),
                decision: if yes {
                    VoteDecision::Cosponsor
                } else {
                    VoteDecision::Decline
                },
            });
        }
    }

    Corpus {
        legislators,
        sponsorships,
        bills,
        statements,
        embeddings,
        cache,
        qa,
        manifesto,
        scores,
        votes,
    }
}

pub const CONFIG_FILE: &str = "config.toml";

/// Pipeline config pointing at the files written by [`write_corpus`].
pub fn config_text(work_dir: &str) -> String {
    format!(
        r#"work_dir = "{work_dir}"

[inputs]
sponsorships = "data/sponsorships.jsonl"
bills = "data/bills.jsonl"
statements = "data/statements.jsonl"
votes = "data/votes.jsonl"
qa = "data/qa.jsonl"
manifesto = "data/manifesto.jsonl"
positioning_scores = "data/positioning_scores.jsonl"

[oracle]
backend = "cache_file"
cache_path = "data/contradictions.tsv"
embedding_cache_path = "data/embeddings.jsonl"
model_tag = "{MODEL_TAG}"

[seeds]
map = 1
quintuplets = 2
split = 3
ranking = 4

[anchors]
left = "{}"
right = "{}"
"#,
        legislator_id(0),
        legislator_id(BLOCS - 1)
    )
}

/// Writes the corpus under `dir/data` and a ready-to-run `dir/config.toml`.
pub fn write_corpus(c: &Corpus, dir: &Path) -> anyhow::Result<()> {
    let data = dir.join("data");
    fs::create_dir_all(&data).with_context(|| format!("creating {}", data.display()))?;
    write_jsonl(&c.sponsorships, data.join("sponsorships.jsonl"))?;
    write_jsonl(&c.bills, data.join("bills.jsonl"))?;
    write_jsonl(&c.statements, data.join("statements.jsonl"))?;
    write_jsonl(&c.embeddings, data.join("embeddings.jsonl"))?;
    write_jsonl(&c.qa, data.join("qa.jsonl"))?;
    write_jsonl(&c.manifesto, data.join("manifesto.jsonl"))?;
    write_jsonl(&c.scores, data.join("positioning_scores.jsonl"))?;
    write_jsonl(&c.votes, data.join("votes.jsonl"))?;
    write_jsonl(&c.truth(), data.join("truth.jsonl"))?;
    c.cache.save(data.join("contradictions.tsv"))?;
    write_json(
        &serde_json::json!({ "legislators": c.legislators }),
        &data.join("latent.json"),
    )?;
    fs::write(dir.join(CONFIG_FILE), config_text("work"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let a = generate(SynthOptions::default());
        assert_eq!(a.sponsorships.len(), SPONSORSHIP_ROWS);
        assert_eq!(a.statements.len(), TOPICS * SUBGROUPS * PER_SUBGROUP);
        assert_eq!(
            a.cache.len(),
            TOPICS * (SUBGROUPS * PER_SUBGROUP) * (SUBGROUPS * PER_SUBGROUP - 1) / 2
        );
        let mut texts: Vec<&str> = a.statements.iter().map(|s| s.text.as_str()).collect();
        texts.sort_unstable();
        texts.dedup();
        assert_eq!(texts.len(), a.statements.len());
        let b = generate(SynthOptions::default());
        assert_eq!(a.sponsorships, b.sponsorships);
        assert_eq!(a.cache, b.cache);
    }
}
