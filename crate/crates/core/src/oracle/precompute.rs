use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{ContradictionCache, HttpOracle, OracleConfig, OracleError};
use crate::corpus::Statement;

/// Where an interrupted precompute leaves its checkpoint.
pub fn partial_path(out: &Path) -> PathBuf {
    let mut p = out.as_os_str().to_owned();
    p.push(".partial");
    PathBuf::from(p)
}

/// Queries the service for every requested pair not yet cached and writes
/// the cache to `out`.
///
/// Existing entries in `out`, or in its checkpoint after an interrupted run,
/// are reused. When a batch fails the checkpoint is written and the error is
/// `PartialBatch`; re-running picks up from there and finishes with the same
/// file a clean run would produce.
pub fn precompute_cache(
    pairs: &[(Statement, Statement)],
    cfg: &OracleConfig,
    out: &Path,
) -> Result<ContradictionCache, OracleError> {
    let client = HttpOracle::new(cfg)?;
    let checkpoint = partial_path(out);
    let mut cache = if checkpoint.exists() {
        ContradictionCache::load(&checkpoint)?
    } else if out.exists() {
        ContradictionCache::load(out)?
    } else {
        ContradictionCache::new(&cfg.model_tag)
    };
    if cache.model_tag != cfg.model_tag {
        return Err(OracleError::Config(format!(
            "cache holds model `{}`, config asks for `{}`",
            cache.model_tag, cfg.model_tag
        )));
    }

    let mut wanted: BTreeMap<(&str, &str), (&str, &str)> = BTreeMap::new();
    for (a, b) in pairs.iter().filter(|(a, b)| a.id != b.id) {
        let (x, y) = if a.id <= b.id { (a, b) } else { (b, a) };
        wanted.entry((&x.id, &y.id)).or_insert((&x.text, &y.text));
    }
    let total = wanted.len();
    let todo: Vec<((&str, &str), (&str, &str))> = wanted
        .into_iter()
        .filter(|((a, b), _)| !cache.contains(a, b))
        .collect();
    let mut done = total - todo.len();

    for chunk in todo.chunks(cfg.batch_size.max(1)) {
        let texts: Vec<(&str, &str)> = chunk.iter().map(|(_, t)| *t).collect();
        match client.contradiction_batch(&texts) {
            Ok(results) => {
                for (((a, b), _), r) in chunk.iter().zip(results) {
                    cache.insert(a, b, r.symmetrized())?;
                }
                done += chunk.len();
            }
            Err(cause) => {
                cache.save(&checkpoint)?;
                return Err(OracleError::PartialBatch {
                    done,
                    total,
                    checkpoint,
                    cause: Box::new(cause),
                });
            }
        }
    }
    cache.save(out)?;
    if checkpoint.exists() {
        fs::remove_file(&checkpoint).map_err(|source| OracleError::Io {
            path: checkpoint.clone(),
            source,
        })?;
    }
    Ok(cache)
}
