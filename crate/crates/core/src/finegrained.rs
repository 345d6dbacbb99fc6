//! Fine-grained labeling with a binary gate and three pairwise models.
//!
//! A post the gate calls NOT is NONE. Otherwise the hate-vs-profane,
//! hate-vs-offensive and offensive-vs-profane models each cast one vote;
//! a class with two votes wins, and a three-way 1-1-1 split goes to the
//! class most frequent in the training set.

use std::fmt;

use crate::corpus::{merge, Dataset};
use crate::error::{Error, Result};
use crate::labels::{BinaryLabel, FineLabel, LabelScheme};
use crate::trainer::{Classifier, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pair {
    HatePrfn,
    HateOffn,
    OffnPrfn,
}

impl Pair {
    pub const ALL: [Pair; 3] = [Pair::HatePrfn, Pair::HateOffn, Pair::OffnPrfn];

    pub fn labels(self) -> [FineLabel; 2] {
        match self {
            Pair::HatePrfn => [FineLabel::Hate, FineLabel::Prfn],
            Pair::HateOffn => [FineLabel::Hate, FineLabel::Offn],
            Pair::OffnPrfn => [FineLabel::Offn, FineLabel::Prfn],
        }
    }

    pub fn scheme(self) -> LabelScheme {
        let [a, b] = self.labels();
        LabelScheme::pair(a, b)
    }

    pub fn contains(self, label: FineLabel) -> bool {
        self.labels().contains(&label)
    }

    /// Short name used for run directories.
    pub fn slug(self) -> &'static str {
        match self {
            Pair::HatePrfn => "hate-vs-prfn",
            Pair::HateOffn => "hate-vs-offn",
            Pair::OffnPrfn => "offn-vs-prfn",
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// Gate outcome, pairwise outcomes and the resolved label for one post.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FineDecision {
    pub gate: BinaryLabel,
    pub pair_hp: Option<FineLabel>,
    pub pair_ho: Option<FineLabel>,
    pub pair_op: Option<FineLabel>,
    pub resolved: FineLabel,
    pub tie_broken: bool,
}

/// Training-set frequencies of HATE, OFFN and PRFN, used only to break
/// 1-1-1 ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassPriors {
    counts: [u64; 3],
}

impl ClassPriors {
    pub fn new(hate: u64, offn: u64, prfn: u64) -> Result<Self> {
        if hate == 0 || offn == 0 || prfn == 0 {
            return Err(Error::Precondition(format!(
                "class priors must be positive, got HATE={hate} OFFN={offn} PRFN={prfn}"
            )));
        }
        Ok(Self {
            counts: [hate, offn, prfn],
        })
    }

    /// Counts the harmful fine labels of a dataset; rows without a fine
    /// label are ignored.
    pub fn from_dataset(d: &Dataset) -> Result<Self> {
        let mut c = [0u64; 3];
        for ex in d {
            if let Some(i) = ex.label_fine.and_then(harmful_index) {
                c[i] += 1;
            }
        }
        Self::new(c[0], c[1], c[2])
    }

    pub fn count(&self, label: FineLabel) -> u64 {
        harmful_index(label).map_or(0, |i| self.counts[i])
    }

    /// The most frequent class; equal counts go to HATE, then OFFN.
    pub fn most_common(&self) -> FineLabel {
        let mut best = 0;
        for i in 1..3 {
            if self.counts[i] > self.counts[best] {
                best = i;
            }
        }
        FineLabel::HARMFUL[best]
    }
}

fn harmful_index(label: FineLabel) -> Option<usize> {
    FineLabel::HARMFUL.iter().position(|&l| l == label)
}

fn check_outcome(pair: Pair, outcome: Option<FineLabel>) -> Result<FineLabel> {
    match outcome {
        Some(l) if pair.contains(l) => Ok(l),
        Some(l) => Err(Error::Precondition(format!(
            "{pair} model cannot output {l}"
        ))),
        None => Err(Error::Precondition(format!(
            "missing {pair} outcome for a HOF post"
        ))),
    }
}

/// Resolves one post's fine-grained label from the gate and pair outcomes.
pub fn resolve_label(
    gate: BinaryLabel,
    pair_hp: Option<FineLabel>,
    pair_ho: Option<FineLabel>,
    pair_op: Option<FineLabel>,
    priors: &ClassPriors,
) -> Result<FineDecision> {
    if gate == BinaryLabel::Not {
        return Ok(FineDecision {
            gate,
            pair_hp: None,
            pair_ho: None,
            pair_op: None,
            resolved: FineLabel::None,
            tie_broken: false,
        });
    }
    let hp = check_outcome(Pair::HatePrfn, pair_hp)?;
    let ho = check_outcome(Pair::HateOffn, pair_ho)?;
    let op = check_outcome(Pair::OffnPrfn, pair_op)?;

    let mut votes = [0u8; 3];
    for l in [hp, ho, op] {
        votes[harmful_index(l).expect("pair outcomes are harmful classes")] += 1;
    }
    let (resolved, tie_broken) = match votes.iter().position(|&v| v == 2) {
        Some(i) => (FineLabel::HARMFUL[i], false),
        // Three votes over three classes without a 2 can only be 1-1-1.
        None => (priors.most_common(), true),
    };
    Ok(FineDecision {
        gate,
        pair_hp: Some(hp),
        pair_ho: Some(ho),
        pair_op: Some(op),
        resolved,
        tie_broken,
    })
}

/// The three pairwise models, one per [`Pair`].
#[derive(Debug, Clone)]
pub struct PairModels<C> {
    pub hate_prfn: C,
    pub hate_offn: C,
    pub offn_prfn: C,
}

impl<C> PairModels<C> {
    pub fn get(&self, pair: Pair) -> &C {
        match pair {
            Pair::HatePrfn => &self.hate_prfn,
            Pair::HateOffn => &self.hate_offn,
            Pair::OffnPrfn => &self.offn_prfn,
        }
    }

    pub fn try_from_fn(mut f: impl FnMut(Pair) -> Result<C>) -> Result<Self> {
        Ok(Self {
            hate_prfn: f(Pair::HatePrfn)?,
            hate_offn: f(Pair::HateOffn)?,
            offn_prfn: f(Pair::OffnPrfn)?,
        })
    }
}

/// Training rows of one pair: examples of `train` (and of `extra`, when
/// given) whose fine label belongs to the pair.
pub fn pair_dataset(pair: Pair, train: &Dataset, extra: Option<&Dataset>) -> Result<Dataset> {
    let keep = |d: &Dataset| d.filter(|e| e.label_fine.is_some_and(|l| pair.contains(l)));
    let rows = match extra {
        Some(x) => merge(&[keep(train), keep(x)])?,
        None => keep(train),
    };
    let [a, b] = pair.labels();
    let has = |l: FineLabel| rows.iter().any(|e| e.label_fine == Some(l));
    if !(has(a) && has(b)) {
        return Err(Error::Precondition(format!(
            "pair {pair} needs examples of both {a} and {b}"
        )));
    }
    Ok(rows)
}

/// Trains the three pairwise models with `fit`, which receives the pair's
/// rows, the training configuration and the two-class scheme.
pub fn train_pairwise<C, F>(
    train: &Dataset,
    extra: Option<&Dataset>,
    cfg: &TrainConfig,
    mut fit: F,
) -> Result<PairModels<C>>
where
    F: FnMut(Pair, &Dataset, &TrainConfig, &LabelScheme) -> Result<C>,
{
    PairModels::try_from_fn(|pair| {
        let rows = pair_dataset(pair, train, extra)?;
        fit(pair, &rows, cfg, &pair.scheme())
    })
}

fn check_scheme(c: &impl Classifier, want: &LabelScheme) -> Result<()> {
    if c.class_names() != want.names() {
        return Err(Error::SchemeMismatch {
            expected: want.names().to_vec(),
            found: c.class_names().to_vec(),
        });
    }
    Ok(())
}

/// Gate every text; query the pairwise models only for HOF texts.
pub fn predict_fine<G, P>(
    gate: &G,
    pairs: &PairModels<P>,
    priors: &ClassPriors,
    texts: &[String],
) -> Result<Vec<FineDecision>>
where
    G: Classifier,
    P: Classifier,
{
    check_scheme(gate, &LabelScheme::binary())?;
    for pair in Pair::ALL {
        check_scheme(pairs.get(pair), &pair.scheme())?;
    }

    let gates: Vec<BinaryLabel> = gate
        .predict_proba(texts)?
        .iter()
        .map(|p| BinaryLabel::parse(p.top_label()).expect("binary scheme checked"))
        .collect();
    let hof_texts: Vec<String> = texts
        .iter()
        .zip(&gates)
        .filter(|(_, g)| **g == BinaryLabel::Hof)
        .map(|(t, _)| t.clone())
        .collect();

    let mut outcomes: [Vec<FineLabel>; 3] = Default::default();
    if !hof_texts.is_empty() {
        for (slot, pair) in outcomes.iter_mut().zip(Pair::ALL) {
            *slot = pairs
                .get(pair)
                .predict_proba(&hof_texts)?
                .iter()
                .map(|p| FineLabel::parse(p.top_label()).expect("pair scheme checked"))
                .collect();
        }
    }

    let mut next_hof = 0;
    gates
        .into_iter()
        .map(|g| {
            if g == BinaryLabel::Not {
                return resolve_label(g, None, None, None, priors);
            }
            let i = next_hof;
            next_hof += 1;
            resolve_label(
                g,
                Some(outcomes[0][i]),
                Some(outcomes[1][i]),
                Some(outcomes[2][i]),
                priors,
            )
        })
        .collect()
}
