//! Loading, harmonizing, merging and splitting labeled corpora.
//!
//! Every corpus is brought into one schema: an id, the post text, its
//! language, and up to two labels (binary NOT/HOF and fine-grained
//! NONE/HATE/OFFN/PRFN). On disk the unified schema is a delimited file
//! with header `id,text,label_task1,label_task2`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::ops::Add;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::labels::{BinaryLabel, FineLabel, LabelField, Lang};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledExample {
    pub id: String,
    pub text: String,
    pub lang: Lang,
    pub label_binary: Option<BinaryLabel>,
    pub label_fine: Option<FineLabel>,
}

impl LabeledExample {
    /// Builds an example, checking that the two labels agree.
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        lang: Lang,
        label_binary: Option<BinaryLabel>,
        label_fine: Option<FineLabel>,
    ) -> Result<Self> {
        let ex = Self {
            id: id.into(),
            text: text.into(),
            lang,
            label_binary,
            label_fine,
        };
        if let (Some(b), Some(f)) = (ex.label_binary, ex.label_fine) {
            if f.binary() != b {
                return Err(Error::InvalidRow {
                    id: ex.id,
                    reason: format!("fine label {f} contradicts binary label {b}"),
                });
            }
        }
        Ok(ex)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Hasoc2021,
    Hasoc2020,
    Hatebase,
    Hateval,
    Olid,
    Merged,
    Synthetic,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Hasoc2021 => "hasoc2021",
            Source::Hasoc2020 => "hasoc2020",
            Source::Hatebase => "hatebase",
            Source::Hateval => "hateval",
            Source::Olid => "olid",
            Source::Merged => "merged",
            Source::Synthetic => "synthetic",
        }
    }

    pub fn is_external(self) -> bool {
        matches!(
            self,
            Source::Hasoc2020 | Source::Hatebase | Source::Hateval | Source::Olid
        )
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "hasoc2021" => Source::Hasoc2021,
            "hasoc2020" => Source::Hasoc2020,
            "hatebase" | "hatebasetwitter" => Source::Hatebase,
            "hateval" => Source::Hateval,
            "olid" => Source::Olid,
            "merged" => Source::Merged,
            "synthetic" => Source::Synthetic,
            other => return Err(Error::Config(format!("unknown corpus source `{other}`"))),
        })
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitTag {
    Train,
    Val,
    Test,
    None,
}

/// An ordered, immutable collection of examples with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    examples: Vec<LabeledExample>,
    source: Source,
    split: SplitTag,
}

impl Dataset {
    pub fn new(examples: Vec<LabeledExample>, source: Source, split: SplitTag) -> Result<Self> {
        let mut seen = HashSet::with_capacity(examples.len());
        for ex in &examples {
            if !seen.insert(ex.id.as_str()) {
                return Err(Error::DuplicateId(ex.id.clone()));
            }
        }
        Ok(Self {
            examples,
            source,
            split,
        })
    }

    pub fn empty(source: Source) -> Self {
        Self {
            examples: Vec::new(),
            source,
            split: SplitTag::None,
        }
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn into_examples(self) -> Vec<LabeledExample> {
        self.examples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledExample> {
        self.examples.iter()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn split(&self) -> SplitTag {
        self.split
    }

    pub fn with_split(mut self, split: SplitTag) -> Self {
        self.split = split;
        self
    }

    pub fn texts(&self) -> Vec<String> {
        self.examples.iter().map(|e| e.text.clone()).collect()
    }

    /// Keeps the examples matching `keep`, preserving order and metadata.
    pub fn filter(&self, mut keep: impl FnMut(&LabeledExample) -> bool) -> Dataset {
        Dataset {
            examples: self.examples.iter().filter(|e| keep(e)).cloned().collect(),
            source: self.source,
            split: self.split,
        }
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a LabeledExample;
    type IntoIter = std::slice::Iter<'a, LabeledExample>;

    fn into_iter(self) -> Self::IntoIter {
        self.examples.iter()
    }
}

/// Raw label string of an external corpus → harmonized labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap(BTreeMap<String, (BinaryLabel, Option<FineLabel>)>);

impl LabelMap {
    /// The fixed harmonization rules for an external source.
    pub fn for_source(source: Source) -> Result<Self> {
        use BinaryLabel::{Hof, Not};
        let entries: &[(&str, BinaryLabel, Option<FineLabel>)] = match source {
            Source::Hasoc2020 => &[("HOF", Hof, None), ("NOT", Not, None)],
            // The numeric codes are the `class` column of the public release.
            Source::Hatebase => &[
                ("hate-speech", Hof, Some(FineLabel::Hate)),
                ("hate_speech", Hof, Some(FineLabel::Hate)),
                ("hate speech", Hof, Some(FineLabel::Hate)),
                ("0", Hof, Some(FineLabel::Hate)),
                ("offensive", Hof, Some(FineLabel::Offn)),
                ("offensive_language", Hof, Some(FineLabel::Offn)),
                ("offensive language", Hof, Some(FineLabel::Offn)),
                ("1", Hof, Some(FineLabel::Offn)),
                ("neither", Not, None),
                ("2", Not, None),
            ],
            Source::Hateval => &[("1", Hof, None), ("0", Not, None)],
            Source::Olid => &[("OFF", Hof, None), ("NOT", Not, None)],
            other => {
                return Err(Error::Config(format!(
                    "`{other}` is not an external corpus source"
                )))
            }
        };
        Ok(LabelMap(
            entries
                .iter()
                .map(|&(raw, b, f)| (raw.to_ascii_lowercase(), (b, f)))
                .collect(),
        ))
    }

    pub fn get(&self, raw: &str) -> Option<(BinaryLabel, Option<FineLabel>)> {
        self.0.get(&raw.trim().to_ascii_lowercase()).copied()
    }

    pub fn raw_labels(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSpec {
    pub source: Source,
    pub path: PathBuf,
    pub lang: Lang,
    pub label_map: LabelMap,
}

impl CorpusSpec {
    /// An external corpus with its default harmonization rules.
    pub fn external(source: Source, path: impl Into<PathBuf>, lang: Lang) -> Result<Self> {
        Ok(Self {
            source,
            path: path.into(),
            lang,
            label_map: LabelMap::for_source(source)?,
        })
    }
}

struct Table {
    path: PathBuf,
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter_for(path))
            .has_headers(true)
            .from_reader(file);
        let csv_err = |source| Error::Csv {
            path: path.to_owned(),
            source,
        };
        let headers = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(|h| h.trim().trim_start_matches('\u{feff}').to_owned())
            .collect();
        let rows = reader
            .records()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(csv_err)?;
        Ok(Self {
            path: path.to_owned(),
            headers,
            rows,
        })
    }

    fn column(&self, aliases: &[&str]) -> Option<usize> {
        aliases.iter().find_map(|alias| {
            self.headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(alias))
        })
    }

    fn require(&self, canonical: &str, aliases: &[&str]) -> Result<usize> {
        self.column(aliases).ok_or_else(|| Error::MissingColumn {
            path: self.path.clone(),
            column: canonical.to_owned(),
        })
    }
}

fn delimiter_for(path: &Path) -> u8 {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("tsv") => b'\t',
        _ => b',',
    }
}

const ID_COLUMNS: &[&str] = &["id", "_id", "tweet_id", "text_id"];
const TEXT_COLUMNS: &[&str] = &["text", "tweet"];
const TASK1_COLUMNS: &[&str] = &["label_task1", "task_1", "task1"];
const TASK2_COLUMNS: &[&str] = &["label_task2", "task_2", "task2"];

fn cell(row: &csv::StringRecord, col: usize) -> &str {
    row.get(col).unwrap_or("").trim()
}

fn require_text(id: &str, text: &str) -> Result<()> {
    if text.trim().is_empty() {
        return Err(Error::InvalidRow {
            id: id.to_owned(),
            reason: "empty text".into(),
        });
    }
    Ok(())
}

/// Loads a file in the unified schema (the shared-task layout).
///
/// The task-2 column is optional; empty label cells mean "absent".
pub fn load_hasoc2021(path: impl AsRef<Path>, lang: Lang) -> Result<Dataset> {
    let table = Table::read(path.as_ref())?;
    let id_col = table.require("id", ID_COLUMNS)?;
    let text_col = table.require("text", TEXT_COLUMNS)?;
    let task1_col = table.require("label_task1", TASK1_COLUMNS)?;
    let task2_col = table.column(TASK2_COLUMNS);

    let mut examples = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let id = cell(row, id_col);
        // Row text is kept verbatim; only the label cells are trimmed.
        let text = row.get(text_col).unwrap_or("");
        require_text(id, text)?;
        let parse_err = |label: &str| Error::UnknownLabel {
            id: id.to_owned(),
            label: label.to_owned(),
        };
        let raw1 = cell(row, task1_col);
        let binary = match raw1 {
            "" => None,
            s => Some(BinaryLabel::parse(s).ok_or_else(|| parse_err(s))?),
        };
        let fine = match task2_col.map(|c| cell(row, c)).unwrap_or("") {
            "" => None,
            s => Some(FineLabel::parse(s).ok_or_else(|| parse_err(s))?),
        };
        examples.push(LabeledExample::new(id, text, lang, binary, fine)?);
    }
    Dataset::new(examples, Source::Hasoc2021, SplitTag::None)
}

struct ExternalLayout {
    id: &'static [&'static str],
    text: &'static [&'static str],
    label: (&'static str, &'static [&'static str]),
}

fn layout_for(source: Source) -> ExternalLayout {
    match source {
        Source::Hasoc2020 => ExternalLayout {
            id: &["tweet_id", "id", "_id"],
            text: &["text", "tweet"],
            label: ("task1", &["task1", "task_1", "label_task1"]),
        },
        // The public release has an unnamed index column.
        Source::Hatebase => ExternalLayout {
            id: &["id", "", "index", "Unnamed: 0"],
            text: &["tweet", "text"],
            label: ("class", &["class", "label"]),
        },
        Source::Hateval => ExternalLayout {
            id: &["id"],
            text: &["text", "tweet"],
            label: ("HS", &["HS"]),
        },
        _ => ExternalLayout {
            id: &["id"],
            text: &["tweet", "text"],
            label: ("subtask_a", &["subtask_a"]),
        },
    }
}

/// Loads one of the additional corpora and harmonizes its labels.
pub fn load_external(spec: &CorpusSpec) -> Result<Dataset> {
    if !spec.source.is_external() {
        return Err(Error::Config(format!(
            "`{}` is not an external corpus source",
            spec.source
        )));
    }
    let table = Table::read(&spec.path)?;
    let layout = layout_for(spec.source);
    let id_col = table.require("id", layout.id)?;
    let text_col = table.require("text", layout.text)?;
    let label_col = table.require(layout.label.0, layout.label.1)?;

    let mut examples = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let id = cell(row, id_col);
        let text = row.get(text_col).unwrap_or("");
        require_text(id, text)?;
        let raw = cell(row, label_col);
        let (binary, fine) = spec.label_map.get(raw).ok_or_else(|| Error::UnknownLabel {
            id: id.to_owned(),
            label: raw.to_owned(),
        })?;
        examples.push(LabeledExample::new(id, text, spec.lang, Some(binary), fine)?);
    }
    Dataset::new(examples, spec.source, SplitTag::None)
}

/// Reads `(id, text)` pairs from any file with id and text columns.
pub fn load_texts(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let table = Table::read(path.as_ref())?;
    let id_col = table.require("id", ID_COLUMNS)?;
    let text_col = table.require("text", TEXT_COLUMNS)?;
    Ok(table
        .rows
        .iter()
        .map(|r| (cell(r, id_col).to_owned(), r.get(text_col).unwrap_or("").to_owned()))
        .collect())
}

/// Writes a dataset in the unified schema.
pub fn write_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter_for(path))
        .from_writer(file);
    let csv_err = |source| Error::Csv {
        path: path.to_owned(),
        source,
    };
    w.write_record(["id", "text", "label_task1", "label_task2"])
        .map_err(csv_err)?;
    for ex in d {
        w.write_record([
            ex.id.as_str(),
            ex.text.as_str(),
            ex.label_binary.map_or("", BinaryLabel::as_str),
            ex.label_fine.map_or("", FineLabel::as_str),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Concatenates datasets in input order. Ids are prefixed with the name of
/// their part's source; ids that still collide get a `#n` suffix.
pub fn merge(parts: &[Dataset]) -> Result<Dataset> {
    if parts.is_empty() {
        return Err(Error::Precondition("merge needs at least one dataset".into()));
    }
    let total = parts.iter().map(Dataset::len).sum();
    let mut examples = Vec::with_capacity(total);
    let mut seen: HashMap<String, usize> = HashMap::with_capacity(total);
    for part in parts {
        for ex in part {
            let base = format!("{}:{}", part.source(), ex.id);
            let n = seen.entry(base.clone()).or_insert(0);
            *n += 1;
            let id = if *n == 1 { base } else { format!("{base}#{n}") };
            examples.push(LabeledExample { id, ..ex.clone() });
        }
    }
    Dataset::new(examples, Source::Merged, SplitTag::None)
}

/// Seeded random split into `(floor(ratio·n), n − floor(ratio·n))` examples.
///
/// Ids are shuffled and sliced; each half keeps the input's relative order.
pub fn split_train_val(d: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Precondition(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    if d.is_empty() {
        return Err(Error::Precondition("cannot split an empty dataset".into()));
    }
    let n = d.len();
    // The epsilon absorbs products like 0.29 * 100 = 28.999999999999996.
    let n_train = ((ratio * n as f64) + 1e-9).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut in_train = vec![false; n];
    for &i in &order[..n_train] {
        in_train[i] = true;
    }
    let (train, val): (Vec<_>, Vec<_>) = d
        .examples
        .iter()
        .cloned()
        .zip(in_train)
        .partition(|(_, t)| *t);
    let strip = |v: Vec<(LabeledExample, bool)>| v.into_iter().map(|(e, _)| e).collect();
    Ok((
        Dataset {
            examples: strip(train),
            source: d.source,
            split: SplitTag::Train,
        },
        Dataset {
            examples: strip(val),
            source: d.source,
            split: SplitTag::Val,
        },
    ))
}

/// Per-class counts in scheme order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCounts(Vec<(&'static str, usize)>);

impl ClassCounts {
    pub fn zeros(field: LabelField) -> Self {
        let names: Vec<&'static str> = match field {
            LabelField::Binary => BinaryLabel::ALL.iter().map(|l| l.as_str()).collect(),
            LabelField::Fine => FineLabel::ALL.iter().map(|l| l.as_str()).collect(),
        };
        ClassCounts(names.into_iter().map(|n| (n, 0)).collect())
    }

    pub fn get(&self, label: &str) -> usize {
        self.0
            .iter()
            .find(|(n, _)| *n == label)
            .map_or(0, |(_, c)| *c)
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|(_, c)| c).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, usize)> + '_ {
        self.0.iter().copied()
    }

    fn bump(&mut self, label: &str) {
        if let Some(slot) = self.0.iter_mut().find(|(n, _)| *n == label) {
            slot.1 += 1;
        }
    }
}

impl Add for ClassCounts {
    type Output = ClassCounts;

    fn add(mut self, rhs: ClassCounts) -> ClassCounts {
        for (name, c) in rhs.0 {
            match self.0.iter_mut().find(|(n, _)| *n == name) {
                Some(slot) => slot.1 += c,
                None => self.0.push((name, c)),
            }
        }
        self
    }
}

/// Two-column `label<TAB>count` report.
impl fmt::Display for ClassCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, count) in &self.0 {
            writeln!(f, "{name}\t{count}")?;
        }
        Ok(())
    }
}

pub fn class_counts(d: &Dataset, field: LabelField) -> Result<ClassCounts> {
    let mut counts = ClassCounts::zeros(field);
    let mut missing = Vec::new();
    for ex in d {
        let label = match field {
            LabelField::Binary => ex.label_binary.map(BinaryLabel::as_str),
            LabelField::Fine => ex.label_fine.map(FineLabel::as_str),
        };
        match label {
            Some(l) => counts.bump(l),
            None => missing.push(ex.id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingLabels(missing));
    }
    Ok(counts)
}
