//! Confusion matrices, precision/recall/F1 with macro and weighted averages,
//! and micro-averaged precision-recall curves.

use serde::{Deserialize, Serialize};

use crate::corpus::{LabelMap, NUM_CLASSES};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("{actual} actual labels but {predicted} predictions")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("class index {index} out of range")]
    ClassOutOfRange { index: usize },
    #[error("no examples to aggregate")]
    Empty,
    #[error("no positive instances for the precision-recall curve")]
    NoPositives,
    #[error("score row {row} sums to {sum}, expected 1")]
    ScoreRow { row: usize, sum: f64 },
    #[error("cannot parse {what}: {message}")]
    Parse { what: &'static str, message: String },
}

/// Rows are actual classes, columns predicted classes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|c| self.counts[c][c]).sum()
    }

    pub fn row_sum(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn col_sum(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }

    /// Seven lines of seven comma-separated counts.
    pub fn to_csv(&self) -> String {
        self.counts
            .iter()
            .map(|row| row.iter().map(u64::to_string).collect::<Vec<_>>().join(",") + "\n")
            .collect()
    }

    pub fn from_csv(text: &str) -> Result<Self, EvalError> {
        let bad = |message: String| EvalError::Parse {
            what: "confusion CSV",
            message,
        };
        let rows: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
        if rows.len() != NUM_CLASSES {
            return Err(bad(format!("{} rows", rows.len())));
        }
        let mut cm = Self::default();
        for (r, line) in rows.iter().enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != NUM_CLASSES {
                return Err(bad(format!("row {r} has {} cells", cells.len())));
            }
            for (c, cell) in cells.iter().enumerate() {
                cm.counts[r][c] = cell.parse().map_err(|_| bad(format!("cell {cell:?}")))?;
            }
        }
        Ok(cm)
    }
}

fn check_class(index: usize) -> Result<usize, EvalError> {
    if index < NUM_CLASSES {
        Ok(index)
    } else {
        Err(EvalError::ClassOutOfRange { index })
    }
}

pub fn confusion_matrix(actual: &[usize], predicted: &[usize]) -> Result<ConfusionMatrix, EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&a, &p) in actual.iter().zip(predicted) {
        cm.counts[check_class(a)?][check_class(p)?] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Set when precision or recall had a zero denominator and was reported as 0.
    pub undefined: bool,
}

impl ClassMetrics {
    /// Metrics from precision and recall; F1 is derived.
    pub fn from_pr(precision: f64, recall: f64, support: u64) -> Self {
        Self {
            precision,
            recall,
            f1: f1(precision, recall),
            support,
            undefined: false,
        }
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

pub fn per_class_prf(cm: &ConfusionMatrix) -> [ClassMetrics; NUM_CLASSES] {
    std::array::from_fn(|c| {
        let tp = cm.counts[c][c] as f64;
        let (predicted, support) = (cm.col_sum(c), cm.row_sum(c));
        let precision = if predicted > 0 { tp / predicted as f64 } else { 0.0 };
        let recall = if support > 0 { tp / support as f64 } else { 0.0 };
        ClassMetrics {
            precision,
            recall,
            f1: f1(precision, recall),
            support,
            undefined: predicted == 0 || support == 0,
        }
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Unweighted and support-weighted means over all classes.
pub fn average_metrics(per_class: &[ClassMetrics]) -> Result<(Averages, Averages), EvalError> {
    let total: u64 = per_class.iter().map(|m| m.support).sum();
    if per_class.is_empty() || total == 0 {
        return Err(EvalError::Empty);
    }
    let n = per_class.len() as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / n;
    let weighted =
        |f: fn(&ClassMetrics) -> f64| per_class.iter().map(|m| m.support as f64 * f(m)).sum::<f64>() / total as f64;
    Ok((
        Averages {
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
        },
        Averages {
            precision: weighted(|m| m.precision),
            recall: weighted(|m| m.recall),
            f1: weighted(|m| m.f1),
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
}

pub fn aggregate(per_class: &[ClassMetrics], cm: &ConfusionMatrix) -> Result<Aggregate, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let (macro_avg, weighted_avg) = average_metrics(per_class)?;
    Ok(Aggregate {
        accuracy: cm.trace() as f64 / total as f64,
        macro_avg,
        weighted_avg,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Points ordered by falling threshold.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
}

impl PrCurve {
    pub const CSV_HEADER: &'static str = "threshold,recall,precision";

    /// Right-step area: `Σ (R_i − R_{i−1}) · P_i` with `R_0 = 0`.
    pub fn auc(&self) -> f64 {
        let mut prev = 0.0;
        let mut area = 0.0;
        for p in &self.points {
            area += (p.recall - prev) * p.precision;
            prev = p.recall;
        }
        area
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.threshold, p.recall, p.precision));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, EvalError> {
        let bad = |message: String| EvalError::Parse {
            what: "PR curve CSV",
            message,
        };
        let mut lines = text.lines();
        if lines.next() != Some(Self::CSV_HEADER) {
            return Err(bad("missing header".into()));
        }
        let points = lines
            .filter(|l| !l.is_empty())
            .map(|line| {
                let v: Vec<f64> = line
                    .split(',')
                    .map(|s| s.parse().map_err(|_| bad(format!("value {s:?}"))))
                    .collect::<Result<_, _>>()?;
                match v[..] {
                    [threshold, recall, precision] => Ok(PrPoint {
                        threshold,
                        recall,
                        precision,
                    }),
                    _ => Err(bad(format!("row {line:?}"))),
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { points })
    }
}

/// One-vs-rest micro-averaged curve over every (example, class) score.
pub fn pr_curve_micro(actual: &[usize], scores: &[[f64; NUM_CLASSES]]) -> Result<(PrCurve, f64), EvalError> {
    if actual.len() != scores.len() {
        return Err(EvalError::LengthMismatch {
            actual: actual.len(),
            predicted: scores.len(),
        });
    }
    for (row, s) in scores.iter().enumerate() {
        let sum: f64 = s.iter().sum();
        if sum.is_nan() || (sum - 1.0).abs() > 1e-6 {
            return Err(EvalError::ScoreRow { row, sum });
        }
    }
    let mut pooled: Vec<(f64, bool)> = Vec::with_capacity(scores.len() * NUM_CLASSES);
    for (&a, s) in actual.iter().zip(scores) {
        check_class(a)?;
        pooled.extend(s.iter().enumerate().map(|(c, &v)| (v, c == a)));
    }
    let positives = actual.len();
    if positives == 0 {
        return Err(EvalError::NoPositives);
    }
    pooled.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < pooled.len() {
        let threshold = pooled[i].0;
        while i < pooled.len() && pooled[i].0 == threshold {
            if pooled[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            threshold,
            recall: tp as f64 / positives as f64,
            precision: tp as f64 / (tp + fp) as f64,
        });
    }
    let curve = PrCurve { points };
    let auc = curve.auc();
    Ok((curve, auc))
}

/// Per-class row of a report, labelled by raw label value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub label: i8,
    #[serde(flatten)]
    pub metrics: ClassMetrics,
}

/// One confusion-matrix row: counts for an actual class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionRow {
    pub actual: i8,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Raw label of each class index; also the column order of `confusion`.
    pub labels: Vec<i8>,
    pub total: u64,
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub pr_auc_micro: f64,
    pub per_class: Vec<ClassRow>,
    pub confusion: Vec<ConfusionRow>,
    pub pr_curve: Vec<PrPoint>,
}

impl MetricsReport {
    pub fn build(
        actual: &[usize],
        predicted: &[usize],
        scores: &[[f64; NUM_CLASSES]],
        label_map: &LabelMap,
    ) -> Result<Self, EvalError> {
        let cm = confusion_matrix(actual, predicted)?;
        let per_class = per_class_prf(&cm);
        let agg = aggregate(&per_class, &cm)?;
        let (curve, auc) = pr_curve_micro(actual, scores)?;
        let labels = label_map.order().to_vec();
        Ok(Self {
            total: cm.total(),
            accuracy: agg.accuracy,
            macro_avg: agg.macro_avg,
            weighted_avg: agg.weighted_avg,
            pr_auc_micro: auc,
            per_class: labels
                .iter()
                .zip(per_class)
                .map(|(&label, metrics)| ClassRow { label, metrics })
                .collect(),
            confusion: labels
                .iter()
                .zip(cm.counts)
                .map(|(&actual, row)| ConfusionRow {
                    actual,
                    counts: row.to_vec(),
                })
                .collect(),
            pr_curve: curve.points,
            labels,
        })
    }

    pub fn confusion_matrix(&self) -> Result<ConfusionMatrix, EvalError> {
        let mut cm = ConfusionMatrix::default();
        if self.confusion.len() != NUM_CLASSES {
            return Err(EvalError::Parse {
                what: "report",
                message: format!("{} confusion rows", self.confusion.len()),
            });
        }
        for (r, row) in self.confusion.iter().enumerate() {
            cm.counts[r] = row.counts.as_slice().try_into().map_err(|_| EvalError::Parse {
                what: "report",
                message: format!("confusion row {r} has {} counts", row.counts.len()),
            })?;
        }
        Ok(cm)
    }

    pub fn pr_curve(&self) -> PrCurve {
        PrCurve {
            points: self.pr_curve.clone(),
        }
    }
}

/// Pretty-printed JSON; floats use the shortest exact representation.
pub fn render_report(report: &MetricsReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

pub fn parse_report(text: &str) -> Result<MetricsReport, EvalError> {
    serde_json::from_str(text).map_err(|e| EvalError::Parse {
        what: "report",
        message: e.to_string(),
    })
}
