//! Soft voting: average member probability vectors, predict the argmax.

use crate::error::{Error, Result};
use crate::trainer::{Classifier, ProbVector};

/// Element-wise arithmetic mean of the votes.
pub fn soft_vote(votes: &[ProbVector]) -> Result<ProbVector> {
    let first = votes
        .first()
        .ok_or_else(|| Error::Precondition("soft voting needs at least one vote".into()))?;
    let names = first.class_names();
    let mut sums = vec![0.0; names.len()];
    for v in votes {
        if v.class_names() != names {
            return Err(Error::SchemeMismatch {
                expected: names.to_vec(),
                found: v.class_names().to_vec(),
            });
        }
        for (s, p) in sums.iter_mut().zip(v.probs()) {
            *s += p;
        }
    }
    let k = votes.len() as f64;
    let mean = sums.into_iter().map(|s| (s / k).clamp(0.0, 1.0)).collect();
    ProbVector::new(mean, names.to_vec())
}

/// Soft-voting prediction over `models`: labels are the argmax of the
/// averaged member outputs, ties going to the earlier scheme class.
pub fn ensemble_predict<C: Classifier>(
    models: &[C],
    texts: &[String],
) -> Result<(Vec<String>, Vec<ProbVector>)> {
    let ensemble = Ensemble::new(models)?;
    let probs = ensemble.predict_proba(texts)?;
    let labels = probs.iter().map(|p| p.top_label().to_owned()).collect();
    Ok((labels, probs))
}

/// A set of classifiers sharing one label scheme, voting softly.
#[derive(Debug)]
pub struct Ensemble<C> {
    members: Vec<C>,
    class_names: Vec<String>,
}

impl<C: Classifier> Ensemble<C> {
    pub fn new(members: impl IntoIterator<Item = C>) -> Result<Self> {
        let members: Vec<C> = members.into_iter().collect();
        let class_names = members
            .first()
            .ok_or_else(|| Error::Precondition("an ensemble needs at least one member".into()))?
            .class_names()
            .to_vec();
        for m in &members[1..] {
            if m.class_names() != class_names.as_slice() {
                return Err(Error::SchemeMismatch {
                    expected: class_names,
                    found: m.class_names().to_vec(),
                });
            }
        }
        Ok(Self {
            members,
            class_names,
        })
    }

    pub fn members(&self) -> &[C] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl<C: Classifier> Classifier for Ensemble<C> {
    fn class_names(&self) -> &[String] {
        &self.class_names
    }

    fn predict_proba(&self, texts: &[String]) -> Result<Vec<ProbVector>> {
        let per_member = self
            .members
            .iter()
            .map(|m| m.predict_proba(texts))
            .collect::<Result<Vec<_>>>()?;
        (0..texts.len())
            .map(|i| {
                let votes: Vec<ProbVector> = per_member.iter().map(|m| m[i].clone()).collect();
                soft_vote(&votes)
            })
            .collect()
    }
}
