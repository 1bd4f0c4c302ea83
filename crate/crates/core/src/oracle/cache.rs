//! Sparse contradiction cache and its text file format.
//!
//! ```text
//! forge-contradiction-cache v1
//! model_tag<TAB>roberta-large-mnli
//! symmetrization<TAB>mean
//! dim<TAB>3
//! q1<TAB>q2<TAB>0.7387
//! ```
//!
//! Pair rows hold ids in ascending order and are sorted by `(a, b)`.
//! Probabilities are written in shortest round-trip form, so a load/save
//! cycle reproduces the file byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{ContradictionLookup, OracleError};

const MAGIC: &str = "forge-contradiction-cache v1";
pub const SYMMETRIZATION: &str = "mean";
/// Width of the NLI label simplex (entail, neutral, contradict).
const LABEL_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ContradictionCache {
    pub model_tag: String,
    entries: BTreeMap<(String, String), f64>,
}

fn key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

fn bad_id(id: &str) -> bool {
    id.is_empty() || id.contains(['\t', '\n', '\r'])
}

impl ContradictionCache {
    pub fn new(model_tag: impl Into<String>) -> Self {
        Self {
            model_tag: model_tag.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, a: &str, b: &str, prob: f64) -> Result<(), OracleError> {
        if a == b || bad_id(a) || bad_id(b) {
            return Err(OracleError::BadResponse(format!(
                "unusable pair ({a}, {b})"
            )));
        }
        if !(0.0..=1.0).contains(&prob) {
            return Err(OracleError::BadResponse(format!(
                "probability {prob} outside [0, 1]"
            )));
        }
        self.entries.insert(key(a, b), prob);
        Ok(())
    }

    pub fn contains(&self, a: &str, b: &str) -> bool {
        a == b || self.entries.contains_key(&key(a, b))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.entries
            .iter()
            .map(|((a, b), p)| (a.as_str(), b.as_str(), *p))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{MAGIC}\nmodel_tag\t{}\nsymmetrization\t{SYMMETRIZATION}\ndim\t{LABEL_DIM}\n",
            self.model_tag
        );
        for ((a, b), p) in &self.entries {
            out.push_str(&format!("{a}\t{b}\t{p:?}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, OracleError> {
        let err = |line: usize, message: &str| OracleError::CacheFormat {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut header = |name: &str| -> Result<String, OracleError> {
            let (n, l) = lines.next().ok_or_else(|| err(0, "truncated header"))?;
            if name.is_empty() {
                return if l == MAGIC {
                    Ok(String::new())
                } else {
                    Err(err(n, "not a contradiction cache"))
                };
            }
            match l.split_once('\t') {
                Some((k, v)) if k == name => Ok(v.to_string()),
                _ => Err(err(n, &format!("expected `{name}` header"))),
            }
        };
        header("")?;
        let model_tag = header("model_tag")?;
        if header("symmetrization")? != SYMMETRIZATION {
            return Err(err(3, "unsupported symmetrization"));
        }
        if header("dim")? != LABEL_DIM.to_string() {
            return Err(err(4, "unsupported dim"));
        }
        let mut cache = Self::new(model_tag);
        for (n, l) in lines {
            let cols: Vec<&str> = l.split('\t').collect();
            let [a, b, p] = cols[..] else {
                return Err(err(n, "expected three tab-separated columns"));
            };
            let p: f64 = p
                .parse()
                .map_err(|_| err(n, "probability is not a number"))?;
            if a >= b {
                return Err(err(n, "pair ids must be strictly ascending"));
            }
            if cache
                .entries
                .keys()
                .next_back()
                .is_some_and(|last| (a, b) <= (last.0.as_str(), last.1.as_str()))
            {
                return Err(err(n, "pair rows out of order"));
            }
            cache.insert(a, b, p).map_err(|e| err(n, &e.to_string()))?;
        }
        Ok(cache)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, OracleError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| OracleError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Writes via a sibling temp file and rename.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), OracleError> {
        let path = path.as_ref();
        let io = |source| OracleError::Io {
            path: path.to_path_buf(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io)?;
        }
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        fs::write(&tmp, self.to_text()).map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }
}

impl ContradictionLookup for ContradictionCache {
    fn contradiction(&self, a: &str, b: &str) -> Result<f64, OracleError> {
        if a == b {
            return Ok(0.0);
        }
        self.entries
            .get(&key(a, b))
            .copied()
            .ok_or_else(|| OracleError::CacheMiss(a.to_string(), b.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_cache_is_header_only() {
        let c = ContradictionCache::new("nli");
        assert_eq!(
            c.to_text(),
            "forge-contradiction-cache v1\nmodel_tag\tnli\nsymmetrization\tmean\ndim\t3\n"
        );
        assert_eq!(ContradictionCache::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn golden_rows() {
        let mut c = ContradictionCache::new("nli");
        c.insert("q2", "q1", 0.7387).unwrap();
        c.insert("a", "z", 1.0).unwrap();
        c.insert("a", "b", 0.1 + 0.2).unwrap();
        let text = c.to_text();
        assert!(text.ends_with("a\tb\t0.30000000000000004\na\tz\t1.0\nq1\tq2\t0.7387\n"));
        assert_eq!(c.contradiction("q1", "q2").unwrap(), 0.7387);
        assert_eq!(c.contradiction("q1", "q1").unwrap(), 0.0);
    }

    #[test]
    fn rejects_malformed() {
        let head = "forge-contradiction-cache v1\nmodel_tag\tnli\nsymmetrization\tmean\ndim\t3\n";
        for (body, line) in [
            ("b\ta\t0.5\n", 5),
            ("a\tb\t1.5\n", 5),
            ("a\tb\n", 5),
            ("a\tc\t0.1\na\tb\t0.2\n", 6),
        ] {
            match ContradictionCache::parse(&format!("{head}{body}")) {
                Err(OracleError::CacheFormat { line: l, .. }) => assert_eq!(l, line, "{body}"),
                other => panic!("{body}: {other:?}"),
            }
        }
        assert!(ContradictionCache::parse("junk\n").is_err());
        assert!(ContradictionCache::parse(&head.replace("mean", "max")).is_err());
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/cache.tsv");
        let mut c = ContradictionCache::new("nli");
        c.insert("x", "y", 0.25).unwrap();
        c.save(&path).unwrap();
        assert_eq!(ContradictionCache::load(&path).unwrap(), c);
    }

    proptest! {
        #[test]
        fn text_round_trip_is_exact(rows in prop::collection::vec((0u8..20, 0u8..20, 0.0f64..=1.0), 0..40)) {
            let mut c = ContradictionCache::new("m");
            for (a, b, p) in rows {
                if a != b {
                    c.insert(&format!("s{a}"), &format!("s{b}"), p).unwrap();
                }
            }
            let text = c.to_text();
            let back = ContradictionCache::parse(&text).unwrap();
            prop_assert_eq!(back.to_text(), text);
            prop_assert_eq!(back, c);
        }
    }
}
