//! A small, separable demonstration corpus in the unified schema.
//!
//! Half the rows are NOT; the HOF rows cycle through HATE, OFFN and PRFN.
//! Each class draws its content words from its own pool, and some rows
//! carry mentions and links so preprocessing has work to do.

use std::path::Path;

use hof_core::corpus::write_dataset;
use hof_core::{BinaryLabel, Dataset, FineLabel, LabeledExample, Lang, Source, SplitTag};

const NONE_WORDS: &[&str] = &["lovely", "sunny", "friends", "coffee", "garden", "music", "picnic", "beach"];
const HATE_WORDS: &[&str] = &["vermin", "subhuman", "invaders", "parasites", "deport", "exterminate"];
const OFFN_WORDS: &[&str] = &["idiot", "stupid", "loser", "pathetic", "clown", "moron"];
const PRFN_WORDS: &[&str] = &["fuck", "shit", "damn", "crap", "bullshit", "wtf"];
const FILLER: &[&str] = &["the", "this", "today", "really", "so", "just"];

fn label(i: usize) -> FineLabel {
    if i.is_multiple_of(2) {
        FineLabel::None
    } else {
        FineLabel::HARMFUL[(i / 2) % 3]
    }
}

fn text(i: usize, fine: FineLabel) -> String {
    let pool = match fine {
        FineLabel::None => NONE_WORDS,
        FineLabel::Hate => HATE_WORDS,
        FineLabel::Offn => OFFN_WORDS,
        FineLabel::Prfn => PRFN_WORDS,
    };
    let mut words = vec![
        FILLER[i % FILLER.len()],
        pool[i % pool.len()],
        FILLER[(i / 3) % FILLER.len()],
        pool[(i / 2 + 1) % pool.len()],
    ];
    if i.is_multiple_of(5) {
        words.insert(0, "@someone");
    }
    if i.is_multiple_of(7) {
        words.push("https://t.co/x");
    }
    words.join(" ")
}

pub fn toy_corpus(n: usize) -> Dataset {
    toy_rows(0..n)
}

/// Rows `range` of the infinite toy sequence; disjoint ranges give
/// disjoint ids.
pub fn toy_rows(range: std::ops::Range<usize>) -> Dataset {
    let examples = range
        .map(|i| {
            let fine = label(i);
            let binary = if fine == FineLabel::None {
                BinaryLabel::Not
            } else {
                BinaryLabel::Hof
            };
            LabeledExample::new(format!("toy{i:04}"), text(i, fine), Lang::En, Some(binary), Some(fine))
                .expect("consistent labels")
        })
        .collect();
    Dataset::new(examples, Source::Hasoc2021, SplitTag::None).expect("unique ids")
}

pub fn write_toy_corpus(path: &Path, range: std::ops::Range<usize>) -> hof_core::Result<()> {
    write_dataset(&toy_rows(range), path)
}
