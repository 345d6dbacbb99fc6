//! Random oversampling of the minority binary class.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Dataset, LabeledExample};
use crate::error::{Error, Result};
use crate::labels::BinaryLabel;

/// Marker inserted between a source id and the copy number of a duplicate.
pub const DUPLICATE_MARKER: &str = "~dup";

/// Duplicates minority-class examples, drawn uniformly with replacement,
/// until both binary classes have the majority's size, then shuffles.
///
/// Copies keep text, language and labels; their ids get a
/// `~dup<k>` suffix so the output still has unique ids.
pub fn oversample_balanced(d: &Dataset, seed: u64) -> Result<Dataset> {
    let mut missing = Vec::new();
    let (mut not, mut hof) = (Vec::new(), Vec::new());
    for ex in d {
        match ex.label_binary {
            Some(BinaryLabel::Not) => not.push(ex),
            Some(BinaryLabel::Hof) => hof.push(ex),
            None => missing.push(ex.id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingLabels(missing));
    }
    if not.is_empty() || hof.is_empty() {
        return Err(Error::Precondition(
            "oversampling needs both binary classes present".into(),
        ));
    }
    let (minority, majority_len) = if not.len() < hof.len() {
        (not, hof.len())
    } else {
        (hof, not.len())
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut copies_of = vec![0usize; minority.len()];
    let mut examples: Vec<LabeledExample> = d.examples().to_vec();
    for _ in minority.len()..majority_len {
        let pick = rng.random_range(0..minority.len());
        copies_of[pick] += 1;
        let src = minority[pick];
        examples.push(LabeledExample {
            id: format!("{}{DUPLICATE_MARKER}{}", src.id, copies_of[pick]),
            ..src.clone()
        });
    }
    examples.shuffle(&mut rng);
    Dataset::new(examples, d.source(), d.split())
}

/// Strips a duplicate suffix, returning the id of the original example.
pub fn original_id(id: &str) -> &str {
    match id.rfind(DUPLICATE_MARKER) {
        Some(pos) if id[pos + DUPLICATE_MARKER.len()..].parse::<usize>().is_ok() => &id[..pos],
        _ => id,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{class_counts, Source, SplitTag};
    use crate::labels::{LabelField, Lang};
    use std::collections::HashMap;

    fn dataset(not: usize, hof: usize) -> Dataset {
        let mut v = Vec::new();
        for i in 0..not {
            v.push(
                LabeledExample::new(format!("n{i}"), format!("calm {i}"), Lang::En, Some(BinaryLabel::Not), None)
                    .unwrap(),
            );
        }
        for i in 0..hof {
            v.push(
                LabeledExample::new(format!("h{i}"), format!("rude {i}"), Lang::En, Some(BinaryLabel::Hof), None)
                    .unwrap(),
            );
        }
        Dataset::new(v, Source::Hasoc2021, SplitTag::Train).unwrap()
    }

    #[test]
    fn toy_one_versus_three() {
        let d = dataset(1, 3);
        for seed in 0..10 {
            let out = oversample_balanced(&d, seed).unwrap();
            assert_eq!(out.len(), 6);
            let copies = out.iter().filter(|e| original_id(&e.id) == "n0").count();
            assert_eq!(copies, 3);
            assert!(out.iter().all(|e| {
                let src = d.iter().find(|s| s.id == original_id(&e.id)).unwrap();
                src.text == e.text && src.label_binary == e.label_binary && src.lang == e.lang
            }));
        }
    }

    #[test]
    fn balanced_input_is_reshuffled_only() {
        let d = dataset(4, 4);
        let out = oversample_balanced(&d, 3).unwrap();
        let mut a: Vec<_> = d.iter().cloned().collect();
        let mut b: Vec<_> = out.iter().cloned().collect();
        a.sort_by(|x, y| x.id.cmp(&y.id));
        b.sort_by(|x, y| x.id.cmp(&y.id));
        assert_eq!(a, b);
    }

    #[test]
    fn minority_hof_is_oversampled_too() {
        let out = oversample_balanced(&dataset(5, 2), 0).unwrap();
        let c = class_counts(&out, LabelField::Binary).unwrap();
        assert_eq!((c.get("NOT"), c.get("HOF")), (5, 5));
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(matches!(
            oversample_balanced(&dataset(3, 0), 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn duplicates_are_drawn_with_replacement() {
        // With 50 extra draws from 5 sources, some source is picked twice.
        let out = oversample_balanced(&dataset(5, 55), 9).unwrap();
        let mut per_src: HashMap<&str, usize> = HashMap::new();
        for e in out.iter().filter(|e| e.id.starts_with('n')) {
            *per_src.entry(original_id(&e.id)).or_default() += 1;
        }
        assert_eq!(per_src.values().sum::<usize>(), 55);
        assert!(per_src.values().all(|&c| c >= 1));
    }

    #[test]
    fn original_id_only_strips_numeric_suffix() {
        assert_eq!(original_id("abc~dup3"), "abc");
        assert_eq!(original_id("abc~dupx"), "abc~dupx");
        assert_eq!(original_id("abc"), "abc");
    }
}
