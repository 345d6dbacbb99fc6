//! Label vocabularies shared by every stage of the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::LabeledExample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    En,
    Hi,
    Mr,
}

impl Lang {
    pub fn as_str(self) -> &'static str {
        match self {
            Lang::En => "en",
            Lang::Hi => "hi",
            Lang::Mr => "mr",
        }
    }
}

impl FromStr for Lang {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "en" => Ok(Lang::En),
            "hi" => Ok(Lang::Hi),
            "mr" => Ok(Lang::Mr),
            other => Err(Error::Config(format!("unknown language `{other}`"))),
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Coarse label: does the post contain hate, offensive or profane content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryLabel {
    Not,
    Hof,
}

impl BinaryLabel {
    pub const ALL: [BinaryLabel; 2] = [BinaryLabel::Not, BinaryLabel::Hof];

    pub fn as_str(self) -> &'static str {
        match self {
            BinaryLabel::Not => "NOT",
            BinaryLabel::Hof => "HOF",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NOT" => Some(BinaryLabel::Not),
            "HOF" => Some(BinaryLabel::Hof),
            _ => None,
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fine-grained label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FineLabel {
    None,
    Hate,
    Offn,
    Prfn,
}

impl FineLabel {
    pub const ALL: [FineLabel; 4] = [
        FineLabel::None,
        FineLabel::Hate,
        FineLabel::Offn,
        FineLabel::Prfn,
    ];

    /// The three harmful classes, in tie-break order.
    pub const HARMFUL: [FineLabel; 3] = [FineLabel::Hate, FineLabel::Offn, FineLabel::Prfn];

    pub fn as_str(self) -> &'static str {
        match self {
            FineLabel::None => "NONE",
            FineLabel::Hate => "HATE",
            FineLabel::Offn => "OFFN",
            FineLabel::Prfn => "PRFN",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NONE" => Some(FineLabel::None),
            "HATE" => Some(FineLabel::Hate),
            "OFFN" => Some(FineLabel::Offn),
            "PRFN" => Some(FineLabel::Prfn),
            _ => None,
        }
    }

    /// The binary label implied by this fine label.
    pub fn binary(self) -> BinaryLabel {
        match self {
            FineLabel::None => BinaryLabel::Not,
            _ => BinaryLabel::Hof,
        }
    }
}

impl fmt::Display for FineLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which label column of an example a scheme reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelField {
    Binary,
    Fine,
}

/// An ordered list of class names over one label column. The order fixes
/// the layout of probability vectors and the argmax tie-break.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelScheme {
    field: LabelField,
    names: Vec<String>,
}

impl LabelScheme {
    pub fn binary() -> Self {
        Self {
            field: LabelField::Binary,
            names: BinaryLabel::ALL.iter().map(|l| l.as_str().to_owned()).collect(),
        }
    }

    pub fn fine() -> Self {
        Self {
            field: LabelField::Fine,
            names: FineLabel::ALL.iter().map(|l| l.as_str().to_owned()).collect(),
        }
    }

    pub fn pair(a: FineLabel, b: FineLabel) -> Self {
        Self {
            field: LabelField::Fine,
            names: vec![a.as_str().to_owned(), b.as_str().to_owned()],
        }
    }

    /// Rebuilds a scheme from its names, inferring the label column.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().trim().to_owned()).collect();
        if names.len() < 2 {
            return Err(Error::Config(format!(
                "a label scheme needs at least two classes, got {names:?}"
            )));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::Config(format!("label `{n}` repeated in scheme")));
            }
        }
        let field = if names.iter().all(|n| BinaryLabel::parse(n).is_some()) {
            LabelField::Binary
        } else if names.iter().all(|n| FineLabel::parse(n).is_some()) {
            LabelField::Fine
        } else {
            return Err(Error::Config(format!(
                "scheme {names:?} mixes or contains unknown labels"
            )));
        };
        let names = names.iter().map(|n| n.to_ascii_uppercase()).collect();
        Ok(Self { field, names })
    }

    pub fn field(&self) -> LabelField {
        self.field
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// The example's label in this scheme's column, if present at all.
    pub fn raw_label(&self, ex: &LabeledExample) -> Option<&'static str> {
        match self.field {
            LabelField::Binary => ex.label_binary.map(BinaryLabel::as_str),
            LabelField::Fine => ex.label_fine.map(FineLabel::as_str),
        }
    }

    /// Class index of the example, or an error naming its id.
    pub fn class_index(&self, ex: &LabeledExample) -> Result<usize> {
        let raw = self
            .raw_label(ex)
            .ok_or_else(|| Error::MissingLabels(vec![ex.id.clone()]))?;
        self.index_of(raw).ok_or_else(|| Error::InvalidRow {
            id: ex.id.clone(),
            reason: format!("label {raw} outside scheme {:?}", self.names),
        })
    }
}
