use serde::{Deserialize, Serialize};

use super::{clopper_pearson, fisher_exact, holm_bonferroni, EvalError};

/// Success counts per (policy, subtask); `counts[p][s] = (k, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcomeTable {
    pub subtasks: Vec<String>,
    pub policies: Vec<String>,
    pub counts: Vec<Vec<(u64, u64)>>,
}

impl TrialOutcomeTable {
    pub fn new(subtasks: Vec<String>, policies: Vec<String>, counts: Vec<Vec<(u64, u64)>>) -> Result<Self, EvalError> {
        if subtasks.is_empty() || policies.is_empty() {
            return Err(EvalError::EmptyTable);
        }
        if counts.len() != policies.len() || counts.iter().any(|row| row.len() != subtasks.len()) {
            return Err(EvalError::Shape(format!(
                "outcome table needs {} policies x {} subtasks",
                policies.len(),
                subtasks.len()
            )));
        }
        for &(k, n) in counts.iter().flatten() {
            if k > n {
                return Err(EvalError::Counts { successes: k, trials: n });
            }
        }
        Ok(TrialOutcomeTable { subtasks, policies, counts })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubtaskAverage {
    pub policy: String,
    /// Unweighted mean of per-subtask rates over subtasks with trials.
    pub mean_rate: f64,
    pub included: usize,
    pub excluded: Vec<String>,
    pub pooled_successes: u64,
    pub pooled_trials: u64,
    pub pooled_rate: f64,
    pub pooled_ci: (f64, f64),
}

/// Per-policy unweighted sub-task average plus a Clopper-Pearson interval on
/// the pooled counts. Subtasks with zero trials are skipped with a warning.
pub fn subtask_average(table: &TrialOutcomeTable, confidence: f64) -> Result<Vec<SubtaskAverage>, EvalError> {
    table
        .policies
        .iter()
        .zip(&table.counts)
        .map(|(policy, row)| {
            let mut excluded = Vec::new();
            let mut rates = Vec::new();
            let (mut k_sum, mut n_sum) = (0, 0);
            for (label, &(k, n)) in table.subtasks.iter().zip(row) {
                if n == 0 {
                    log::warn!("policy {policy}: subtask {label} has no trials; excluded from the average");
                    excluded.push(label.clone());
                    continue;
                }
                rates.push(k as f64 / n as f64);
                k_sum += k;
                n_sum += n;
            }
            if rates.is_empty() {
                return Err(EvalError::EmptyTable);
            }
            Ok(SubtaskAverage {
                policy: policy.clone(),
                mean_rate: rates.iter().sum::<f64>() / rates.len() as f64,
                included: rates.len(),
                excluded,
                pooled_successes: k_sum,
                pooled_trials: n_sum,
                pooled_rate: k_sum as f64 / n_sum as f64,
                pooled_ci: clopper_pearson(k_sum, n_sum, confidence)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SurvivalCurve {
    pub stages: Vec<String>,
    pub surviving: Vec<u64>,
    pub trials: u64,
}

/// `surviving[s]` counts trials that passed every stage up to and including `s`.
///
/// A trial reports stages in order and stops at its first failure; a log that
/// ends early without a failure counts as not reaching the later stages.
pub fn survival_curve(stages: &[String], trials: &[Vec<StageOutcome>]) -> Result<SurvivalCurve, EvalError> {
    let mut surviving = vec![0u64; stages.len()];
    for (t, outcomes) in trials.iter().enumerate() {
        if outcomes.len() > stages.len() {
            return Err(EvalError::StageOrder {
                trial: t,
                message: format!("{} outcomes for {} stages", outcomes.len(), stages.len()),
            });
        }
        for (s, outcome) in outcomes.iter().enumerate() {
            if outcome.stage != stages[s] {
                return Err(EvalError::StageOrder {
                    trial: t,
                    message: format!("expected stage `{}` at position {s}, found `{}`", stages[s], outcome.stage),
                });
            }
            if !outcome.passed && s + 1 != outcomes.len() {
                return Err(EvalError::StageOrder {
                    trial: t,
                    message: format!("outcomes continue after failing `{}`", outcome.stage),
                });
            }
        }
        let passed = outcomes.iter().take_while(|o| o.passed).count();
        surviving.iter_mut().take(passed).for_each(|c| *c += 1);
    }
    Ok(SurvivalCurve { stages: stages.to_vec(), surviving, trials: trials.len() as u64 })
}

/// Trial log consumed by the `eval trials` command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialLog {
    #[serde(default)]
    pub subtasks: Vec<String>,
    #[serde(default)]
    pub outcomes: Vec<PolicyCounts>,
    #[serde(default)]
    pub stages: Vec<String>,
    #[serde(default)]
    pub trials: Vec<PolicyTrials>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCounts {
    pub policy: String,
    /// `[successes, trials]` per subtask, in `subtasks` order.
    pub counts: Vec<[u64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTrials {
    pub policy: String,
    pub trials: Vec<Vec<StageOutcome>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub policy: String,
    pub subtask: String,
    pub successes: u64,
    pub trials: u64,
    pub rate: Option<f64>,
    pub ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub subtask: String,
    pub policy_a: String,
    pub policy_b: String,
    pub p_value: f64,
    pub p_holm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub confidence: f64,
    pub rates: Vec<RateRow>,
    pub comparisons: Vec<Comparison>,
    pub averages: Vec<SubtaskAverage>,
    pub survival: Vec<(String, SurvivalCurve)>,
}

/// Rates with intervals, pairwise Fisher tests per subtask (Holm-adjusted
/// over the whole family), sub-task averages and survival curves.
pub fn analyze_trials(log: &TrialLog, confidence: f64) -> Result<TrialReport, EvalError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(EvalError::Confidence(confidence));
    }
    let mut rates = Vec::new();
    let mut comparisons = Vec::new();
    let mut averages = Vec::new();
    if !log.outcomes.is_empty() {
        let table = TrialOutcomeTable::new(
            log.subtasks.clone(),
            log.outcomes.iter().map(|p| p.policy.clone()).collect(),
            log.outcomes.iter().map(|p| p.counts.iter().map(|c| (c[0], c[1])).collect()).collect(),
        )?;
        for (policy, row) in table.policies.iter().zip(&table.counts) {
            for (subtask, &(k, n)) in table.subtasks.iter().zip(row) {
                let (rate, ci) = if n == 0 {
                    (None, None)
                } else {
                    (Some(k as f64 / n as f64), Some(clopper_pearson(k, n, confidence)?))
                };
                rates.push(RateRow {
                    policy: policy.clone(),
                    subtask: subtask.clone(),
                    successes: k,
                    trials: n,
                    rate,
                    ci,
                });
            }
        }
        let mut raw = Vec::new();
        for (s, subtask) in table.subtasks.iter().enumerate() {
            for a in 0..table.policies.len() {
                for b in a + 1..table.policies.len() {
                    let (ka, na) = table.counts[a][s];
                    let (kb, nb) = table.counts[b][s];
                    if na == 0 || nb == 0 {
                        continue;
                    }
                    let p = fisher_exact([[ka, na - ka], [kb, nb - kb]]);
                    raw.push(p);
                    comparisons.push(Comparison {
                        subtask: subtask.clone(),
                        policy_a: table.policies[a].clone(),
                        policy_b: table.policies[b].clone(),
                        p_value: p,
                        p_holm: p,
                    });
                }
            }
        }
        for (c, adj) in comparisons.iter_mut().zip(holm_bonferroni(&raw)?) {
            c.p_holm = adj;
        }
        averages = subtask_average(&table, confidence)?;
    }
    let survival = log
        .trials
        .iter()
        .map(|p| Ok((p.policy.clone(), survival_curve(&log.stages, &p.trials)?)))
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(TrialReport { confidence, rates, comparisons, averages, survival })
}
