use std::collections::BTreeMap;

use super::MixtureError;
use crate::schema::MixtureEntry;

pub const TABLE_HEADER: &str = "Dataset / Embodiment Group\tMixture ratio";

/// Renders ratios as a two-column text table, ratios to 4 decimals.
pub fn format_mixture_table(entries: &[MixtureEntry]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for e in entries {
        out.push_str(&format!("{}\t{:.4}\n", e.dataset_id, e.ratio));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    /// Group ratios rescaled to sum to 1.
    pub entries: Vec<MixtureEntry>,
    /// Sum of the ratios as written; some published tables are relative
    /// weights summing well above 1.
    pub raw_sum: f64,
    /// Indented member lines listed under each group.
    pub members: BTreeMap<String, Vec<String>>,
}

/// Parses a mixture table.
///
/// A group line is `name<TAB or spaces>ratio`; indented lines without a ratio
/// are members of the preceding group. Blank lines, `#` comments and the
/// header are skipped.
pub fn parse_mixture_table(text: &str) -> Result<ParsedTable, MixtureError> {
    let mut raw: Vec<(String, f64)> = Vec::new();
    let mut members: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || line.trim_end() == TABLE_HEADER {
            continue;
        }
        let indented = line.starts_with(char::is_whitespace);
        let split = trimmed.rsplit_once(['\t', ' ']);
        let parsed = split.and_then(|(name, ratio)| ratio.parse::<f64>().ok().map(|r| (name.trim(), r)));
        match (parsed, indented) {
            (Some((name, ratio)), _) => {
                if !(ratio.is_finite() && ratio > 0.0) {
                    return Err(MixtureError::Table(format!("line {}: ratio {ratio} must be positive", lineno + 1)));
                }
                raw.push((name.to_string(), ratio));
            }
            (None, true) => match raw.last() {
                Some((group, _)) => members.entry(group.clone()).or_default().push(trimmed.to_string()),
                None => return Err(MixtureError::Table(format!("line {}: member before any group", lineno + 1))),
            },
            (None, false) => return Err(MixtureError::Table(format!("line {}: expected `name ratio`", lineno + 1))),
        }
    }
    if raw.is_empty() {
        return Err(MixtureError::Empty);
    }
    let raw_sum: f64 = raw.iter().map(|(_, r)| r).sum();
    let entries = raw.into_iter().map(|(dataset_id, r)| MixtureEntry { dataset_id, ratio: r / raw_sum }).collect();
    Ok(ParsedTable { entries, raw_sum, members })
}
