use std::fmt::Write as _;

use openh_core::eval::{analyze_trials, TrialLog, TrialReport};

use super::{csv_field as field, read_file, write_file};
use crate::args::TrialsArgs;
use crate::error::CliError;
use crate::settings::DEFAULT_CONFIDENCE;
use crate::Context;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn tables(report: &TrialReport) -> Vec<(&'static str, String)> {
    let mut rates = String::from("policy,subtask,successes,trials,rate,ci_lo,ci_hi\n");
    for r in &report.rates {
        let _ = writeln!(
            rates,
            "{},{},{},{},{},{},{}",
            field(&r.policy),
            field(&r.subtask),
            r.successes,
            r.trials,
            opt(r.rate),
            opt(r.ci.map(|c| c.0)),
            opt(r.ci.map(|c| c.1))
        );
    }
    let mut comparisons = String::from("subtask,policy_a,policy_b,p_value,p_holm\n");
    for c in &report.comparisons {
        let _ = writeln!(
            comparisons,
            "{},{},{},{},{}",
            field(&c.subtask),
            field(&c.policy_a),
            field(&c.policy_b),
            c.p_value,
            c.p_holm
        );
    }
    let mut averages = String::from(
        "policy,subtasks,excluded,mean_rate,pooled_successes,pooled_trials,pooled_rate,pooled_ci_lo,pooled_ci_hi\n",
    );
    for a in &report.averages {
        let _ = writeln!(
            averages,
            "{},{},{},{},{},{},{},{},{}",
            field(&a.policy),
            a.included,
            field(&a.excluded.join(";")),
            a.mean_rate,
            a.pooled_successes,
            a.pooled_trials,
            a.pooled_rate,
            a.pooled_ci.0,
            a.pooled_ci.1
        );
    }
    let mut survival = String::from("policy,stage_index,stage,surviving,trials\n");
    for (policy, curve) in &report.survival {
        for (i, (stage, n)) in curve.stages.iter().zip(&curve.surviving).enumerate() {
            let _ = writeln!(survival, "{},{i},{},{n},{}", field(policy), field(stage), curve.trials);
        }
    }
    vec![("rates.csv", rates), ("comparisons.csv", comparisons), ("averages.csv", averages), ("survival.csv", survival)]
}

pub fn run(args: &TrialsArgs, ctx: &Context) -> Result<(), CliError> {
    let text = read_file(&args.log)?;
    let log: TrialLog = serde_json::from_str(&text)
        .map_err(|e| CliError::Failed(format!("{}: not a trial log: {e}", args.log.display())))?;
    let confidence = args.confidence.or(ctx.settings.confidence).unwrap_or(DEFAULT_CONFIDENCE);
    let report = analyze_trials(&log, confidence)?;
    let tables = tables(&report);
    match &args.out {
        Some(dir) => {
            for (name, body) in &tables {
                write_file(&dir.join(name), body)?;
            }
            for a in &report.averages {
                println!("{}: mean success {:.2}% over {} subtasks", a.policy, 100.0 * a.mean_rate, a.included);
            }
        }
        None => {
            for (i, (name, body)) in tables.iter().enumerate() {
                if i > 0 {
                    println!();
                }
                println!("# {name}");
                print!("{body}");
            }
        }
    }
    Ok(())
}
