use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::agent::ACTION_DIM;
use crate::error::{Error, Result};
use crate::metp::StepRecord;

/// Mean and population variance of each action coordinate
/// (`add_u`, `add_v`, `del_u`, `del_v`) for one method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionStats {
    pub method: String,
    pub count: usize,
    pub mean: [f64; ACTION_DIM],
    pub variance: [f64; ACTION_DIM],
}

/// A policy that has collapsed onto a few node pairs shows near-zero variance.
pub fn action_stats(records: &[StepRecord]) -> Result<Vec<ActionStats>> {
    if records.is_empty() {
        return Err(Error::Config("step log is empty".into()));
    }
    let mut by_method: BTreeMap<&str, Vec<[f64; ACTION_DIM]>> = BTreeMap::new();
    for r in records {
        by_method
            .entry(r.method.as_str())
            .or_default()
            .push(r.action.to_array().map(|c| c as f64));
    }
    Ok(by_method
        .into_iter()
        .map(|(method, actions)| {
            let n = actions.len() as f64;
            let mut mean = [0.0; ACTION_DIM];
            for a in &actions {
                for (m, x) in mean.iter_mut().zip(a) {
                    *m += x;
                }
            }
            mean = mean.map(|m| m / n);
            let mut variance = [0.0; ACTION_DIM];
            for a in &actions {
                for ((v, x), m) in variance.iter_mut().zip(a).zip(&mean) {
                    *v += (x - m) * (x - m);
                }
            }
            variance = variance.map(|v| v / n);
            ActionStats {
                method: method.to_string(),
                count: actions.len(),
                mean,
                variance,
            }
        })
        .collect())
}
