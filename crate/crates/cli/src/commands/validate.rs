use openh_core::schema::validate_manifest;
use openh_core::store::load_dataset;

use super::registry_for;
use crate::args::ValidateArgs;
use crate::error::CliError;
use crate::Context;

pub fn run(args: &ValidateArgs, _ctx: &Context) -> Result<(), CliError> {
    let mut total = 0;
    for dir in &args.datasets {
        let dataset = load_dataset(dir)?;
        let registry = registry_for(args.registry.as_deref(), dir)?;
        let report = validate_manifest(&dataset.manifest, &dataset.episodes, &registry)?;
        let id = &dataset.manifest.dataset_id;
        if report.is_empty() {
            println!("{id}: ok ({} episodes)", dataset.episodes.len());
        }
        for v in &report.violations {
            println!("{id}: {v}");
        }
        total += report.len();
    }
    if total > 0 {
        return Err(CliError::Failed(format!("{total} violation(s)")));
    }
    Ok(())
}
