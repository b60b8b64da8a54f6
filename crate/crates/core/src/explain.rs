//! Example-based explanations under three fidelity/simplicity policies.
//!
//! - `CaseI`: show every supporting row. Faithful, possibly long.
//! - `CaseII`: show `m` of the supporting rows. Short but only partially
//!   faithful. The shown rows keep the support's proximity order and their
//!   majority label always equals the prediction.
//! - `CaseIII`: predict from `m` rows and show all of them (kNN only, by
//!   querying with `k = m`). Faithful and short, at some cost in accuracy.

use serde::{Deserialize, Serialize};

use crate::data::EmbeddingDataset;
use crate::error::{Result, WrapError};
use crate::models::{majority_vote, Prediction, Support, WrapperModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Policy {
    #[serde(rename = "case1", alias = "CaseI")]
    CaseI,
    #[serde(rename = "case2", alias = "CaseII")]
    CaseII,
    #[serde(rename = "case3", alias = "CaseIII")]
    CaseIII,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::CaseI => "case1",
            Policy::CaseII => "case2",
            Policy::CaseIII => "case3",
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = WrapError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "i" | "case1" | "casei" => Ok(Policy::CaseI),
            "2" | "ii" | "case2" | "caseii" => Ok(Policy::CaseII),
            "3" | "iii" | "case3" | "caseiii" => Ok(Policy::CaseIII),
            _ => Err(WrapError::Config(format!("unknown explanation policy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub prediction: u32,
    /// Training rows consulted for the prediction.
    pub n_used: usize,
    /// Shown rows, most relevant first.
    pub shown: Vec<usize>,
    /// Negative distance of each shown row (to the query, or to the centroid for L-means).
    pub relevance: Vec<f64>,
    pub faithful: bool,
    pub policy: Policy,
}

/// Picks `m` rows from a ranked support whose majority label is `prediction`.
///
/// Starts from the `m` top-ranked rows. While their majority disagrees with
/// the prediction, the lowest-ranked disagreeing row is swapped for the
/// next-ranked unused row carrying the predicted label.
pub fn downsample(
    support: &[Support],
    labels: impl Fn(usize) -> u32,
    prediction: u32,
    n_classes: u32,
    m: usize,
) -> Vec<Support> {
    let m = m.min(support.len());
    let mut chosen: Vec<usize> = (0..m).collect();
    let mut next = m;
    while majority_vote(chosen.iter().map(|&i| labels(support[i].row)), n_classes) != prediction {
        let Some(pos) = chosen
            .iter()
            .rposition(|&i| labels(support[i].row) != prediction)
        else {
            break;
        };
        while next < support.len() && labels(support[next].row) != prediction {
            next += 1;
        }
        if next == support.len() {
            break;
        }
        chosen.remove(pos);
        chosen.push(next);
        next += 1;
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| support[i]).collect()
}

fn build(prediction: u32, n_used: usize, shown: Vec<Support>, policy: Policy) -> Explanation {
    Explanation {
        prediction,
        n_used,
        faithful: shown.len() == n_used,
        relevance: shown.iter().map(|s| -s.distance).collect(),
        shown: shown.into_iter().map(|s| s.row).collect(),
        policy,
    }
}

/// Explains the model's prediction for `x`. `m` is ignored under `CaseI`.
pub fn explain(
    model: &WrapperModel,
    ds: &EmbeddingDataset,
    x: &[f32],
    policy: Policy,
    m: usize,
) -> Result<Explanation> {
    if matches!(model, WrapperModel::Logreg(_)) {
        return Err(WrapError::NoSupport { model: "logreg" });
    }
    if policy != Policy::CaseI && m == 0 {
        return Err(WrapError::InvalidHyperparameter("m must be at least 1".into()));
    }
    match policy {
        Policy::CaseI => {
            let Prediction { label, support, .. } = model.predict(ds, x)?;
            let n = support.len();
            Ok(build(label, n, support, policy))
        }
        Policy::CaseII => {
            let Prediction { label, support, .. } = model.predict(ds, x)?;
            let n = support.len();
            if m > n {
                return Err(WrapError::ExplanationTooLarge { m, n_used: n });
            }
            let shown = downsample(&support, |r| ds.label(r), label, ds.n_classes(), m);
            Ok(build(label, n, shown, policy))
        }
        Policy::CaseIII => match model {
            WrapperModel::Knn(knn) => {
                let p = knn.predict_with_k(x, m)?;
                Ok(build(p.label, m, p.support, policy))
            }
            other => Err(WrapError::PolicyUnavailable {
                policy: "case3",
                model: other.kind(),
            }),
        },
    }
}

/// JSON form of one shown row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShownRow {
    pub row_id: u64,
    pub label: u32,
    pub relevance: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub text: Option<String>,
}

/// JSON form of an explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub query_id: Option<u64>,
    pub prediction: u32,
    pub policy: Policy,
    pub faithful: bool,
    pub n_used: usize,
    pub rows: Vec<ShownRow>,
}

impl Explanation {
    pub fn to_record(&self, ds: &EmbeddingDataset, query_id: Option<u64>) -> ExplanationRecord {
        ExplanationRecord {
            query_id,
            prediction: self.prediction,
            policy: self.policy,
            faithful: self.faithful,
            n_used: self.n_used,
            rows: self
                .shown
                .iter()
                .zip(&self.relevance)
                .map(|(&r, &relevance)| ShownRow {
                    row_id: ds.row_id(r),
                    label: ds.label(r),
                    relevance,
                    text: ds.text(r).map(str::to_owned),
                })
                .collect(),
        }
    }
}
