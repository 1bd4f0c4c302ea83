//! Seeded stratified sampling and train/eval splits.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("target {target} exceeds population {available}")]
    TargetTooLarge { target: usize, available: usize },
    #[error("ratio {0} must lie strictly between 0 and 1")]
    InvalidRatio(f64),
    #[error("record {index} has no value for stratum `{name}`")]
    EmptyStratum { name: String, index: usize },
}

fn strata<T>(
    items: &[T],
    key: impl Fn(&T) -> Option<String>,
    field: &str,
) -> Result<BTreeMap<String, Vec<usize>>, SplitError> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (index, item) in items.iter().enumerate() {
        match key(item) {
            Some(k) if !k.is_empty() => groups.entry(k).or_default().push(index),
            _ => {
                return Err(SplitError::EmptyStratum {
                    name: field.to_string(),
                    index,
                })
            }
        }
    }
    Ok(groups)
}

/// Largest-remainder apportionment of `target` over stratum sizes.
/// Remainder ties go to the stratum that sorts first.
fn apportion(sizes: &[usize], target: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return vec![0; sizes.len()];
    }
    // exact integer arithmetic: quota = target * size / total
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| target * s / total).collect();
    let mut leftover = target - quotas.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = target * sizes[a] % total;
        let rb = target * sizes[b] % total;
        rb.cmp(&ra).then(a.cmp(&b))
    });
    for &i in &order {
        if leftover == 0 {
            break;
        }
        if quotas[i] < sizes[i] {
            quotas[i] += 1;
            leftover -= 1;
        }
    }
    quotas
}

/// Draws `target` items so that every stratum keeps its share of the
/// population, rounded by largest remainder. Selected items keep their
/// input order.
pub fn stratified_sample<T: Clone>(
    items: &[T],
    target: usize,
    key: impl Fn(&T) -> String,
    seed: u64,
) -> Result<Vec<T>, SplitError> {
    if target > items.len() {
        return Err(SplitError::TargetTooLarge {
            target,
            available: items.len(),
        });
    }
    let groups = strata(items, |t| Some(key(t)), "key")?;
    let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
    let quotas = apportion(&sizes, target);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(target);
    for (members, quota) in groups.into_values().zip(quotas) {
        let mut members = members;
        members.shuffle(&mut rng);
        chosen.extend_from_slice(&members[..quota]);
    }
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| items[i].clone()).collect())
}

/// Splits records into (train, eval) with `ratio` of every stratum in train.
/// Both halves keep input order.
pub fn split_train_eval<T: Clone>(
    items: &[T],
    ratio: f64,
    stratify_by: &str,
    key: impl Fn(&T) -> Option<String>,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>), SplitError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(SplitError::InvalidRatio(ratio));
    }
    let groups = strata(items, key, stratify_by)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; items.len()];
    for mut members in groups.into_values() {
        let n_train = (ratio * members.len() as f64).round() as usize;
        members.shuffle(&mut rng);
        for &i in &members[..n_train] {
            in_train[i] = true;
        }
    }
    let (mut train, mut eval) = (Vec::new(), Vec::new());
    for (item, t) in items.iter().zip(in_train) {
        if t {
            train.push(item.clone());
        } else {
            eval.push(item.clone());
        }
    }
    Ok((train, eval))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labelled(sizes: &[(&str, usize)]) -> Vec<(usize, String)> {
        let mut v = Vec::new();
        for (name, n) in sizes {
            for _ in 0..*n {
                v.push((v.len(), name.to_string()));
            }
        }
        v
    }

    fn count(v: &[(usize, String)], name: &str) -> usize {
        v.iter().filter(|(_, s)| s == name).count()
    }

    #[test]
    fn full_target_is_identity() {
        let items = labelled(&[("a", 3), ("b", 4)]);
        let out = stratified_sample(&items, items.len(), |t| t.1.clone(), 1).unwrap();
        assert_eq!(out, items);
    }

    #[test]
    fn sixty_forty_gives_six_four() {
        let items = labelled(&[("health", 60), ("tax", 40)]);
        let out = stratified_sample(&items, 10, |t| t.1.clone(), 7).unwrap();
        assert_eq!(count(&out, "health"), 6);
        assert_eq!(count(&out, "tax"), 4);
    }

    #[test]
    fn largest_remainder_rounding() {
        // quotas 3.333.., 3.333.., 3.333.. for target 10 -> 4,3,3
        assert_eq!(apportion(&[5, 5, 5], 10), vec![4, 3, 3]);
        // 60/25/15 of 7 -> 4.2, 1.75, 1.05 -> 4, 2, 1
        assert_eq!(apportion(&[60, 25, 15], 7), vec![4, 2, 1]);
    }

    #[test]
    fn too_large_target() {
        let items = labelled(&[("a", 2)]);
        assert_eq!(
            stratified_sample(&items, 3, |t| t.1.clone(), 0),
            Err(SplitError::TargetTooLarge {
                target: 3,
                available: 2
            })
        );
    }

    #[test]
    fn eighty_twenty_single_stratum() {
        let items = labelled(&[("x", 10)]);
        let (train, eval) = split_train_eval(&items, 0.8, "s", |t| Some(t.1.clone()), 3).unwrap();
        assert_eq!((train.len(), eval.len()), (8, 2));
    }

    #[test]
    fn ranking_table_counts() {
        let items = labelled(&[
            ("PL", 1275),
            ("LW", 1290),
            ("C", 1300),
            ("RW", 1298),
            ("CR", 1275),
        ]);
        let (train, eval) =
            split_train_eval(&items, 0.8, "position", |t| Some(t.1.clone()), 11).unwrap();
        let got: Vec<usize> = ["PL", "LW", "C", "RW", "CR"]
            .iter()
            .map(|p| count(&train, p))
            .collect();
        assert_eq!(got, vec![1020, 1032, 1040, 1038, 1020]);
        assert_eq!(train.len() + eval.len(), items.len());
    }

    #[test]
    fn seeds_change_partition_not_sizes() {
        let items = labelled(&[("a", 30), ("b", 20)]);
        let key = |t: &(usize, String)| Some(t.1.clone());
        let (t1, _) = split_train_eval(&items, 0.8, "s", key, 1).unwrap();
        let (t2, _) = split_train_eval(&items, 0.8, "s", key, 2).unwrap();
        assert_eq!(t1.len(), t2.len());
        assert_ne!(t1, t2);
    }

    #[test]
    fn bad_ratio_and_missing_stratum() {
        let items = labelled(&[("a", 3)]);
        assert_eq!(
            split_train_eval(&items, 1.0, "s", |t| Some(t.1.clone()), 0),
            Err(SplitError::InvalidRatio(1.0))
        );
        let r = split_train_eval(&items, 0.5, "position", |_| None, 0);
        assert!(
            matches!(r, Err(SplitError::EmptyStratum { ref name, index: 0 }) if name == "position")
        );
    }

    proptest! {
        #[test]
        fn sample_proportions_within_one(sizes in prop::collection::vec(1usize..40, 1..6), frac in 0.0f64..=1.0, seed: u64) {
            let named: Vec<(String, usize)> = sizes.iter().enumerate().map(|(i, &n)| (format!("s{i}"), n)).collect();
            let refs: Vec<(&str, usize)> = named.iter().map(|(s, n)| (s.as_str(), *n)).collect();
            let items = labelled(&refs);
            let total = items.len();
            let target = ((total as f64) * frac).floor() as usize;
            let out = stratified_sample(&items, target, |t| t.1.clone(), seed).unwrap();
            prop_assert_eq!(out.len(), target);
            for (name, n) in &named {
                let exact = target as f64 * *n as f64 / total as f64;
                let got = count(&out, name) as f64;
                prop_assert!((got - exact).abs() < 1.0 + 1e-9);
            }
            prop_assert_eq!(&out, &stratified_sample(&items, target, |t| t.1.clone(), seed).unwrap());
        }

        #[test]
        fn splits_are_disjoint_and_exhaustive(n in 1usize..200, ratio in 0.05f64..0.95, seed: u64) {
            let items: Vec<(usize, String)> = (0..n).map(|i| (i, format!("g{}", i % 3))).collect();
            let (train, eval) = split_train_eval(&items, ratio, "g", |t| Some(t.1.clone()), seed).unwrap();
            let mut ids: Vec<usize> = train.iter().chain(&eval).map(|t| t.0).collect();
            ids.sort_unstable();
            prop_assert_eq!(ids, (0..n).collect::<Vec<_>>());
            let again = split_train_eval(&items, ratio, "g", |t| Some(t.1.clone()), seed).unwrap();
            prop_assert_eq!(train, again.0);
        }
    }
}
