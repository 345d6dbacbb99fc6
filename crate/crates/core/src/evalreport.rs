//! Confusion matrices, macro-averaged precision/recall/F1 and experiment
//! tables.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// `cells[i][j]` counts examples with gold class `i` predicted as `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: Vec<String>,
    cells: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_cells(classes: Vec<String>, cells: Vec<Vec<u64>>) -> Result<Self> {
        if cells.len() != classes.len() || cells.iter().any(|r| r.len() != classes.len()) {
            return Err(Error::Precondition(format!(
                "confusion matrix must be {0}x{0}",
                classes.len()
            )));
        }
        Ok(Self { classes, cells })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn cells(&self) -> &[Vec<u64>] {
        &self.cells
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }
}

pub fn confusion_matrix<S: AsRef<str>>(
    gold: &[S],
    pred: &[S],
    scheme: &[String],
) -> Result<ConfusionMatrix> {
    if gold.len() != pred.len() {
        return Err(Error::Precondition(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    let index = |l: &str| {
        scheme
            .iter()
            .position(|c| c == l)
            .ok_or_else(|| Error::Precondition(format!("label `{l}` not in scheme {scheme:?}")))
    };
    let n = scheme.len();
    let mut cells = vec![vec![0u64; n]; n];
    for (g, p) in gold.iter().zip(pred) {
        cells[index(g.as_ref())?][index(p.as_ref())?] += 1;
    }
    Ok(ConfusionMatrix {
        classes: scheme.to_vec(),
        cells,
    })
}

/// Macro-averaged scores, as percentages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Unweighted mean over every scheme class of per-class P, R and F1.
/// A class with a zero denominator scores 0.
pub fn macro_metrics(cm: &ConfusionMatrix) -> Metrics {
    let n = cm.classes.len();
    if n == 0 {
        return Metrics {
            f1: 0.0,
            precision: 0.0,
            recall: 0.0,
        };
    }
    let (mut p_sum, mut r_sum, mut f_sum) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let tp = cm.cells[k][k];
        let predicted: u64 = (0..n).map(|i| cm.cells[i][k]).sum();
        let actual: u64 = cm.cells[k].iter().sum();
        let p = ratio(tp, predicted);
        let r = ratio(tp, actual);
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        p_sum += p;
        r_sum += r;
        f_sum += f;
    }
    let scale = 100.0 / n as f64;
    Metrics {
        f1: f_sum * scale,
        precision: p_sum * scale,
        recall: r_sum * scale,
    }
}

/// A rendered experiment table plus its tab-separated twin.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: String,
    pub tsv: String,
}

const TSV_HEADER: &str = "name\tf1\tprecision\trecall";

/// One row per experiment, in input order.
pub fn report<S: AsRef<str>>(rows: &[(S, Metrics)]) -> Report {
    let width = rows
        .iter()
        .map(|(n, _)| n.as_ref().chars().count())
        .chain(std::iter::once("Model".len()))
        .max()
        .unwrap_or(5);
    let mut table = String::new();
    let _ = writeln!(table, "{:<width$}  {:>6}  {:>6}  {:>6}", "Model", "F1", "P", "R");
    let mut tsv = String::from(TSV_HEADER);
    tsv.push('\n');
    for (name, m) in rows {
        let name = name.as_ref();
        let _ = writeln!(
            table,
            "{name:<width$}  {:>6.2}  {:>6.2}  {:>6.2}",
            m.f1, m.precision, m.recall
        );
        // `{}` on f64 prints the shortest string that parses back exactly.
        let _ = writeln!(tsv, "{}\t{}\t{}\t{}", sanitize(name), m.f1, m.precision, m.recall);
    }
    Report { table, tsv }
}

fn sanitize(name: &str) -> String {
    name.replace(['\t', '\n', '\r'], " ")
}

/// Parses the tab-separated twin produced by [`report`].
pub fn parse_report_tsv(tsv: &str) -> Result<Vec<(String, Metrics)>> {
    let mut lines = tsv.lines();
    match lines.next() {
        Some(h) if h == TSV_HEADER => {}
        other => {
            return Err(Error::Precondition(format!(
                "unexpected report header {other:?}"
            )))
        }
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let cols: Vec<&str> = line.split('\t').collect();
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Precondition(format!("bad number `{s}` in report")))
            };
            match cols.as_slice() {
                [name, f1, p, r] => Ok((
                    name.to_string(),
                    Metrics {
                        f1: num(f1)?,
                        precision: num(p)?,
                        recall: num(r)?,
                    },
                )),
                _ => Err(Error::Precondition(format!("malformed report line `{line}`"))),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scheme(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn hand_counted_matrix() {
        let cm = confusion_matrix(&["A", "A", "B"], &["A", "B", "B"], &scheme(&["A", "B"])).unwrap();
        assert_eq!(cm.cells(), &[vec![1, 1], vec![0, 1]]);
        let m = macro_metrics(&cm);
        assert!((m.precision - 75.0).abs() < 1e-9);
        assert!((m.recall - 75.0).abs() < 1e-9);
        assert!((m.f1 - 200.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn perfect_and_empty() {
        let s = scheme(&["NOT", "HOF"]);
        let cm = confusion_matrix(&["NOT", "HOF"], &["NOT", "HOF"], &s).unwrap();
        assert_eq!(cm.cells(), &[vec![1, 0], vec![0, 1]]);
        let m = macro_metrics(&cm);
        assert_eq!((m.f1, m.precision, m.recall), (100.0, 100.0, 100.0));
        let empty: [&str; 0] = [];
        let cm = confusion_matrix(&empty, &empty, &s).unwrap();
        assert_eq!(cm.total(), 0);
    }

    #[test]
    fn absent_class_contributes_zero() {
        let s = scheme(&["A", "B", "C"]);
        let cm = confusion_matrix(&["A", "B"], &["A", "B"], &s).unwrap();
        let m = macro_metrics(&cm);
        assert!((m.f1 - 200.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        let s = scheme(&["A", "B"]);
        assert!(confusion_matrix(&["A"], &["A", "B"], &s).is_err());
        assert!(confusion_matrix(&["A"], &["Z"], &s).is_err());
    }

    #[test]
    fn report_keeps_order() {
        let m = |x| Metrics {
            f1: x,
            precision: x,
            recall: x,
        };
        let r = report(&[("zeta", m(50.0)), ("alpha", m(81.19))]);
        let lines: Vec<_> = r.table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("zeta"));
        assert!(lines[2].contains("81.19"));
    }

    proptest! {
        #[test]
        fn tsv_round_trip(rows in prop::collection::vec(("[a-zA-Z +()]{1,20}", 0.0f64..=100.0, 0.0f64..=100.0, 0.0f64..=100.0), 0..6)) {
            let rows: Vec<(String, Metrics)> = rows
                .into_iter()
                .map(|(n, f1, precision, recall)| (n, Metrics { f1, precision, recall }))
                .collect();
            let parsed = parse_report_tsv(&report(&rows).tsv).unwrap();
            prop_assert_eq!(parsed, rows);
        }

        #[test]
        fn permutation_invariant(pairs in prop::collection::vec((0usize..3, 0usize..3), 1..40), rot in 0usize..40) {
            let s = scheme(&["a", "b", "c"]);
            let gold: Vec<&str> = pairs.iter().map(|p| s[p.0].as_str()).collect();
            let pred: Vec<&str> = pairs.iter().map(|p| s[p.1].as_str()).collect();
            let k = rot % gold.len();
            let (mut g2, mut p2) = (gold.clone(), pred.clone());
            g2.rotate_left(k);
            p2.rotate_left(k);
            let a = macro_metrics(&confusion_matrix(&gold, &pred, &s).unwrap());
            let b = macro_metrics(&confusion_matrix(&g2, &p2, &s).unwrap());
            prop_assert_eq!(a, b);
        }
    }
}
