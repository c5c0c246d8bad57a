use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metp::StepRecord;

use super::experiment::{STEP_LOG_FILE, SUMMARY_FILE};
use super::log::{read_step_log, read_summary, SummaryRow};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub instances: usize,
    pub steps: usize,
}

/// Recomputes every summary number from the step log and checks the budget rules:
/// queries = 1 + steps ≤ I, queries advance by exactly one per step, no attempt
/// exceeds K steps and every attempt but the last has exactly K, and the
/// reported best F1 is the minimum over all queried values.
pub fn audit(records: &[StepRecord], summary: &[SummaryRow]) -> Result<AuditReport> {
    let mut grouped: BTreeMap<(&str, usize), Vec<&StepRecord>> = BTreeMap::new();
    for r in records {
        grouped
            .entry((r.method.as_str(), r.instance))
            .or_default()
            .push(r);
    }
    let mut report = AuditReport::default();
    for row in summary {
        let key = (row.method.as_str(), row.instance);
        let steps = grouped.remove(&key).unwrap_or_default();
        let fail =
            |msg: String| Error::Audit(format!("{} instance {}: {msg}", row.method, row.instance));

        let k = row.k_limit;
        let mut attempts = 0usize;
        let mut expected_step = 1usize;
        let mut best = row.clean_f1;
        for (j, r) in steps.iter().enumerate() {
            if r.queries != 2 + j as u64 {
                return Err(fail(format!(
                    "step {j} reports {} queries, expected {}",
                    r.queries,
                    2 + j
                )));
            }
            if r.step == 1 {
                if attempts > 0 && expected_step != k + 1 {
                    return Err(fail(format!(
                        "attempt {attempts} ended after {} of {k} steps",
                        expected_step - 1
                    )));
                }
                attempts += 1;
                expected_step = 1;
            }
            if r.attempt != attempts || r.step != expected_step {
                return Err(fail(format!(
                    "record {j} is attempt {} step {}, expected attempt {attempts} step {expected_step}",
                    r.attempt, r.step
                )));
            }
            if r.step > k {
                return Err(fail(format!("attempt {} exceeded K = {k}", r.attempt)));
            }
            expected_step += 1;
            best = best.min(r.f1);
        }

        let taken = steps.len() as u64;
        let queries = 1 + taken;
        if row.steps != taken || row.queries != queries {
            return Err(fail(format!(
                "summary claims {} steps / {} queries, log has {taken} / {queries}",
                row.steps, row.queries
            )));
        }
        if queries > row.interaction_limit {
            return Err(fail(format!(
                "{queries} queries exceed I = {}",
                row.interaction_limit
            )));
        }
        if k > 0 && queries != row.interaction_limit {
            return Err(fail(format!(
                "stopped at {queries} queries with I = {} unspent",
                row.interaction_limit
            )));
        }
        if row.attempts != attempts {
            return Err(fail(format!(
                "summary claims {} attempts, log has {attempts}",
                row.attempts
            )));
        }
        if row.best_f1 != best {
            return Err(fail(format!(
                "summary best F1 {} but log minimum {best}",
                row.best_f1
            )));
        }
        report.instances += 1;
        report.steps += steps.len();
    }
    if let Some(((method, instance), _)) = grouped.into_iter().next() {
        return Err(Error::Audit(format!(
            "{method} instance {instance} has steps but no summary row"
        )));
    }
    Ok(report)
}

/// Audits the step log and summary written by one run.
pub fn audit_dir(dir: &Path) -> Result<AuditReport> {
    let records = read_step_log(&dir.join(STEP_LOG_FILE))?;
    let summary = read_summary(&dir.join(SUMMARY_FILE))?;
    audit(&records, &summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::AttackAction;

    fn rec(attempt: usize, step: usize, queries: u64, f1: f64) -> StepRecord {
        StepRecord {
            method: "random".into(),
            instance: 0,
            attempt,
            step,
            action: AttackAction::new(0, 1, 2, 3),
            f1,
            reward: 0.0,
            queries,
            q_loss: None,
            policy_loss: None,
        }
    }

    fn row(steps: u64, attempts: usize, best: f64) -> SummaryRow {
        SummaryRow {
            method: "random".into(),
            instance: 0,
            clean_f1: 0.9,
            best_f1: best,
            queries: steps + 1,
            steps,
            attempts,
            k_limit: 2,
            interaction_limit: 5,
        }
    }

    fn good_log() -> Vec<StepRecord> {
        vec![
            rec(1, 1, 2, 0.8),
            rec(1, 2, 3, 0.85),
            rec(2, 1, 4, 0.7),
            rec(2, 2, 5, 0.95),
        ]
    }

    #[test]
    fn consistent_run_passes() {
        let report = audit(&good_log(), &[row(4, 2, 0.7)]).unwrap();
        assert_eq!(
            report,
            AuditReport {
                instances: 1,
                steps: 4
            }
        );
    }

    #[test]
    fn wrong_best_detected() {
        assert!(audit(&good_log(), &[row(4, 2, 0.8)]).is_err());
    }

    #[test]
    fn short_attempt_detected() {
        let log = vec![
            rec(1, 1, 2, 0.8),
            rec(2, 1, 3, 0.85),
            rec(2, 2, 4, 0.7),
            rec(3, 1, 5, 0.95),
        ];
        assert!(audit(&log, &[row(4, 3, 0.7)]).is_err());
    }

    #[test]
    fn skipped_query_detected() {
        let mut log = good_log();
        log[2].queries = 5;
        assert!(audit(&log, &[row(4, 2, 0.7)]).is_err());
    }

    #[test]
    fn unspent_budget_detected() {
        let log = good_log()[..3].to_vec();
        assert!(audit(&log, &[row(3, 2, 0.7)]).is_err());
    }

    #[test]
    fn orphan_steps_detected() {
        assert!(audit(&good_log(), &[]).is_err());
    }
}
