//! Co-sponsorship count matrix.
//!
//! Row `i`, column `j` counts how often legislator `i` co-sponsored a bill
//! introduced by legislator `j`. The diagonal counts introductions.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use thiserror::Error;

use crate::corpus::{Bill, SponsorshipRecord, VoteDecision, VoteRecord};

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("vote references unknown bill `{0}`")]
    UnknownBill(String),
    #[error("bill sponsor `{0}` is not a row of the matrix")]
    UnknownSponsor(String),
    #[error("agent id `{0}` collides with an existing legislator")]
    AgentIdCollision(String),
    #[error("matrix csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosponsorMatrix {
    ids: Vec<String>,
    counts: Vec<u64>,
}

impl CosponsorMatrix {
    /// Builds a matrix from explicit rows. Fails when the shape is wrong or
    /// an id repeats.
    pub fn from_rows(ids: Vec<String>, rows: Vec<Vec<u64>>) -> Result<Self, MatrixError> {
        let n = ids.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(MatrixError::Csv(format!("expected a {n}x{n} matrix")));
        }
        let unique: BTreeSet<&String> = ids.iter().collect();
        if unique.len() != n {
            return Err(MatrixError::Csv("duplicate legislator id".into()));
        }
        Ok(Self {
            ids,
            counts: rows.into_iter().flatten().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.len() + col]
    }

    pub fn row(&self, row: usize) -> &[u64] {
        let n = self.len();
        &self.counts[row * n..(row + 1) * n]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Dense `f64` copy, row-major.
    pub fn to_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// Reorders rows and columns so that row `k` is old row `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.len();
        assert_eq!(perm.len(), n, "permutation length");
        let ids = perm.iter().map(|&p| self.ids[p].clone()).collect();
        let mut counts = Vec::with_capacity(n * n);
        for &r in perm {
            for &c in perm {
                counts.push(self.get(r, c));
            }
        }
        Self { ids, counts }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), MatrixError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let csv_err = |e: csv::Error| MatrixError::Csv(e.to_string());
        w.write_record(&self.ids).map_err(csv_err)?;
        for r in 0..self.len() {
            w.write_record(self.row(r).iter().map(u64::to_string))
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| MatrixError::Csv(e.to_string()))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, MatrixError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(input);
        let ids: Vec<String> = rdr
            .headers()
            .map_err(|e| MatrixError::Csv(e.to_string()))?
            .iter()
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| MatrixError::Csv(e.to_string()))?;
            let row = rec
                .iter()
                .map(|c| c.trim().parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| MatrixError::Csv(format!("row {}: {e}", i + 1)))?;
            rows.push(row);
        }
        Self::from_rows(ids, rows)
    }
}

/// Counts co-sponsorships. The legislator universe is every id seen as a
/// sponsor or co-sponsor, sorted lexicographically. Repeated records count
/// repeatedly.
pub fn build_matrix(records: &[SponsorshipRecord]) -> CosponsorMatrix {
    let universe: BTreeSet<&str> = records
        .iter()
        .flat_map(|r| [r.cosponsor_id.as_str(), r.sponsor_id.as_str()])
        .collect();
    let ids: Vec<String> = universe.iter().map(|s| s.to_string()).collect();
    let index: HashMap<&str, usize> = universe.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let n = ids.len();
    let mut counts = vec![0u64; n * n];
    for r in records {
        counts[index[r.cosponsor_id.as_str()] * n + index[r.sponsor_id.as_str()]] += 1;
    }
    CosponsorMatrix { ids, counts }
}

/// Appends a simulated agent as a co-sponsor. Its row counts the agent's
/// COSPONSOR votes per bill sponsor; its column and diagonal stay zero.
pub fn incorporate_agent_votes(
    m: &CosponsorMatrix,
    votes: &[VoteRecord],
    bills: &[Bill],
    agent_id: &str,
) -> Result<CosponsorMatrix, MatrixError> {
    if m.index_of(agent_id).is_some() {
        return Err(MatrixError::AgentIdCollision(agent_id.to_string()));
    }
    let bills: HashMap<&str, &Bill> = bills.iter().map(|b| (b.id.as_str(), b)).collect();
    let n = m.len();
    let mut agent_row = vec![0u64; n + 1];
    for v in votes.iter().filter(|v| v.agent_id == agent_id) {
        let bill = bills
            .get(v.bill_id.as_str())
            .ok_or_else(|| MatrixError::UnknownBill(v.bill_id.clone()))?;
        let j = m
            .index_of(&bill.sponsor_id)
            .ok_or_else(|| MatrixError::UnknownSponsor(bill.sponsor_id.clone()))?;
        if v.decision == VoteDecision::Cosponsor {
            agent_row[j] += 1;
        }
    }

    let mut ids = m.ids.clone();
    ids.push(agent_id.to_string());
    let mut counts = Vec::with_capacity((n + 1) * (n + 1));
    for r in 0..n {
        counts.extend_from_slice(m.row(r));
        counts.push(0);
    }
    counts.extend(agent_row);
    Ok(CosponsorMatrix { ids, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn rec(co: &str, sp: &str, bill: &str) -> SponsorshipRecord {
        SponsorshipRecord {
            cosponsor_id: co.into(),
            sponsor_id: sp.into(),
            bill_id: bill.into(),
        }
    }

    fn bill(id: &str, sponsor: &str) -> Bill {
        Bill {
            id: id.into(),
            title: "t".into(),
            text: "x".into(),
            policy_area: "Health".into(),
            legislative_subjects: vec![],
            sponsor_id: sponsor.into(),
            sponsor_party: "R".into(),
        }
    }

    fn vote(bill_id: &str, d: VoteDecision) -> VoteRecord {
        VoteRecord {
            agent_id: "agent".into(),
            bill_id: bill_id.into(),
            decision: d,
        }
    }

    #[test]
    fn no_records_is_empty() {
        let m = build_matrix(&[]);
        assert!(m.is_empty());
        assert_eq!(m.total(), 0);
    }

    #[test]
    fn hand_counted_example() {
        let m = build_matrix(&[
            rec("a", "b", "bill1"),
            rec("a", "b", "bill2"),
            rec("b", "b", "bill3"),
        ]);
        assert_eq!(m.ids(), ["a", "b"]);
        assert_eq!(m.row(0), [0, 2]);
        assert_eq!(m.row(1), [0, 1]);
    }

    #[test]
    fn duplicates_count_twice() {
        let r = rec("a", "b", "bill1");
        let m = build_matrix(&[r.clone(), r]);
        assert_eq!(m.get(0, 1), 2);
    }

    #[test]
    fn zero_votes_adds_empty_agent() {
        let m = build_matrix(&[rec("a", "b", "1")]);
        let aug = incorporate_agent_votes(&m, &[], &[], "agent").unwrap();
        assert_eq!(aug.len(), 3);
        assert_eq!(aug.row(2), [0, 0, 0]);
        assert!((0..3).all(|r| aug.get(r, 2) == 0));
    }

    #[test]
    fn agent_row_counts_cosponsor_votes() {
        let m = build_matrix(&[rec("a", "j1", "x"), rec("a", "j2", "y")]);
        let bills = [
            bill("b1", "j1"),
            bill("b2", "j1"),
            bill("b3", "j1"),
            bill("b4", "j2"),
            bill("b5", "j2"),
        ];
        let votes = [
            vote("b1", VoteDecision::Cosponsor),
            vote("b2", VoteDecision::Cosponsor),
            vote("b3", VoteDecision::Cosponsor),
            vote("b4", VoteDecision::Cosponsor),
            vote("b5", VoteDecision::Decline),
        ];
        let aug = incorporate_agent_votes(&m, &votes, &bills, "agent").unwrap();
        let j1 = aug.index_of("j1").unwrap();
        let j2 = aug.index_of("j2").unwrap();
        let a = aug.index_of("agent").unwrap();
        assert_eq!(aug.get(a, j1), 3);
        assert_eq!(aug.get(a, j2), 1);
        assert_eq!(aug.get(a, a), 0);
        for r in 0..m.len() {
            for c in 0..m.len() {
                assert_eq!(aug.get(r, c), m.get(r, c));
            }
        }
    }

    #[test]
    fn augmentation_errors() {
        let m = build_matrix(&[rec("a", "b", "x")]);
        assert!(matches!(
            incorporate_agent_votes(&m, &[], &[], "a"),
            Err(MatrixError::AgentIdCollision(_))
        ));
        assert!(matches!(
            incorporate_agent_votes(&m, &[vote("nope", VoteDecision::Cosponsor)], &[], "agent"),
            Err(MatrixError::UnknownBill(_))
        ));
        assert!(matches!(
            incorporate_agent_votes(
                &m,
                &[vote("b1", VoteDecision::Decline)],
                &[bill("b1", "zz")],
                "agent"
            ),
            Err(MatrixError::UnknownSponsor(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let m = build_matrix(&[rec("a", "b", "1"), rec("b", "b", "2"), rec("c", "a", "3")]);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "a,b,c\n0,1,0\n0,1,0\n1,0,0\n"
        );
        assert_eq!(CosponsorMatrix::read_csv(&buf[..]).unwrap(), m);
    }

    fn arb_records() -> impl Strategy<Value = Vec<SponsorshipRecord>> {
        prop::collection::vec((0u8..6, 0u8..6, 0u16..50), 0..60).prop_map(|v| {
            v.into_iter()
                .map(|(a, b, bill)| rec(&format!("m{a}"), &format!("m{b}"), &format!("bill{bill}")))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn permutation_invariant_and_total_preserved(records in arb_records(), seed: u64) {
            let m = build_matrix(&records);
            prop_assert_eq!(m.total(), records.len() as u64);
            let mut shuffled = records.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(build_matrix(&shuffled), m);
        }
    }
}
