use std::collections::BTreeSet;

use rand::seq::SliceRandom;

use super::{EpisodeRecord, SchemaError, Split};
use crate::rng::substream;

/// Selects `round(test_fraction · N)` test ids.
///
/// Ids are sorted before shuffling so the selection depends only on the id set
/// and `selection_seed`, never on ingestion order. The returned set is sorted.
pub fn select_test_ids(
    ids: &[String],
    test_fraction: f64,
    selection_seed: u64,
) -> Result<BTreeSet<String>, SchemaError> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(SchemaError::InvalidFraction(test_fraction));
    }
    let mut sorted: Vec<&String> = ids.iter().collect();
    sorted.sort();
    sorted.dedup();
    let test_count = (test_fraction * sorted.len() as f64).round() as usize;
    let mut rng = substream(selection_seed, "split", 0);
    sorted.shuffle(&mut rng);
    Ok(sorted.into_iter().take(test_count).cloned().collect())
}

/// Partitions episodes into `(train, test)`, each sorted by episode id, and
/// sets every record's `split` tag accordingly.
pub fn split_episodes(
    episodes: Vec<EpisodeRecord>,
    test_fraction: f64,
    selection_seed: u64,
) -> Result<(Vec<EpisodeRecord>, Vec<EpisodeRecord>), SchemaError> {
    let ids: Vec<String> = episodes.iter().map(|e| e.episode_id.clone()).collect();
    let test_ids = select_test_ids(&ids, test_fraction, selection_seed)?;
    let (mut test, mut train): (Vec<_>, Vec<_>) = episodes.into_iter().partition(|e| test_ids.contains(&e.episode_id));
    train.sort_by(|a, b| a.episode_id.cmp(&b.episode_id));
    test.sort_by(|a, b| a.episode_id.cmp(&b.episode_id));
    train.iter_mut().for_each(|e| e.split = Split::Train);
    test.iter_mut().for_each(|e| e.split = Split::Test);
    Ok((train, test))
}
