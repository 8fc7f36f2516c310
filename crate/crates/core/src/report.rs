//! Shift frequency tables over a project snapshot.
//!
//! Counts are per alignment record: each tag on a record counts once, each
//! marker counts once under its own label. The table is dense over the
//! twelve tags and two markers, and every group carries its record count
//! as the denominator.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::par::Execution;
use crate::project::Project;
use crate::shift::{ShiftTag, SpecialMarker, TransemeAlignment, TransemeKind};

/// Key of the single group when no grouping is requested.
pub const ALL_GROUP: &str = "(all)";
/// Key for records whose grouping attribute is missing.
pub const UNSET_GROUP: &str = "(unset)";

pub const MARKERS: [SpecialMarker; 2] = [SpecialMarker::DanglingModal, SpecialMarker::NonPas];

/// The fourteen row labels: shift tags first, then markers.
pub fn labels() -> impl Iterator<Item = &'static str> {
    ShiftTag::ALL
        .iter()
        .map(|t| t.name())
        .chain(MARKERS.iter().map(|m| m.name()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    #[default]
    None,
    Direction,
    Genre,
    TransemeKind,
}

impl GroupBy {
    pub const ALL: [GroupBy; 4] = [GroupBy::None, GroupBy::Direction, GroupBy::Genre, GroupBy::TransemeKind];

    pub fn name(self) -> &'static str {
        match self {
            GroupBy::None => "none",
            GroupBy::Direction => "direction",
            GroupBy::Genre => "genre",
            GroupBy::TransemeKind => "transeme_kind",
        }
    }
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GroupBy::ALL
            .into_iter()
            .find(|g| g.name() == s || (s == "transeme-kind" && *g == GroupBy::TransemeKind))
            .ok_or_else(|| format!("unknown grouping {s:?} (expected none, direction, genre or transeme_kind)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub group: String,
    pub tag: String,
    pub count: u64,
    pub denominator: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroupStats {
    /// Aligned records in the group.
    pub records: u64,
    /// Tag and marker occurrences in the group.
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub group_by: GroupBy,
    /// Sorted by (group, tag); dense over [`labels`].
    pub rows: Vec<ReportRow>,
    pub groups: BTreeMap<String, GroupStats>,
}

impl ShiftReport {
    pub fn count(&self, group: &str, tag: &str) -> Option<u64> {
        self.rows
            .iter()
            .find(|r| r.group == group && r.tag == tag)
            .map(|r| r.count)
    }

    /// Counts of one group keyed by label.
    pub fn table(&self, group: &str) -> BTreeMap<&str, u64> {
        self.rows
            .iter()
            .filter(|r| r.group == group)
            .map(|r| (r.tag.as_str(), r.count))
            .collect()
    }

    /// Shift tag occurrences only, markers excluded.
    pub fn tag_total(&self, group: &str) -> u64 {
        self.rows
            .iter()
            .filter(|r| r.group == group && r.tag.parse::<ShiftTag>().is_ok())
            .map(|r| r.count)
            .sum()
    }
}

type Tally = HashMap<String, (u64, HashMap<&'static str, u64>)>;

fn group_key(project_pairs: &HashMap<&str, (String, Option<String>)>, a: &TransemeAlignment, by: GroupBy) -> String {
    match by {
        GroupBy::None => ALL_GROUP.to_string(),
        GroupBy::Direction => project_pairs
            .get(a.pair.0.as_str())
            .map(|p| p.0.clone())
            .unwrap_or_else(|| UNSET_GROUP.to_string()),
        GroupBy::Genre => project_pairs
            .get(a.pair.0.as_str())
            .and_then(|p| p.1.clone())
            .unwrap_or_else(|| UNSET_GROUP.to_string()),
        GroupBy::TransemeKind => {
            let mut kinds = a.refs().map(|r| r.kind);
            let first = kinds.next();
            match (first, kinds.all(|k| Some(k) == first)) {
                (Some(TransemeKind::Predicate), true) => "predicate".into(),
                (Some(TransemeKind::Argument), true) => "argument".into(),
                (Some(_), false) => "mixed".into(),
                (None, _) => UNSET_GROUP.into(),
            }
        }
    }
}

pub fn shift_counts(project: &Project, group_by: GroupBy) -> ShiftReport {
    shift_counts_with(project, group_by, Execution::default())
}

pub fn shift_counts_with(project: &Project, group_by: GroupBy, exec: Execution) -> ShiftReport {
    let pairs: HashMap<&str, (String, Option<String>)> = project
        .pairs
        .iter()
        .map(|p| (p.id.0.as_str(), (p.direction.to_string(), p.genre.clone())))
        .collect();

    let tally = exec.map_reduce(
        &project.alignments,
        Tally::new,
        |mut acc, a| {
            let entry = acc.entry(group_key(&pairs, a, group_by)).or_default();
            entry.0 += 1;
            for t in &a.tags {
                *entry.1.entry(t.name()).or_default() += 1;
            }
            if let Some(m) = a.marker {
                *entry.1.entry(m.name()).or_default() += 1;
            }
            acc
        },
        |mut left, right| {
            for (key, (records, counts)) in right {
                let entry = left.entry(key).or_default();
                entry.0 += records;
                for (label, n) in counts {
                    *entry.1.entry(label).or_default() += n;
                }
            }
            left
        },
    );

    let mut groups: BTreeMap<String, GroupStats> = BTreeMap::new();
    if group_by == GroupBy::None {
        groups.insert(ALL_GROUP.to_string(), GroupStats::default());
    }
    for (key, (records, counts)) in &tally {
        groups.insert(
            key.clone(),
            GroupStats {
                records: *records,
                total: counts.values().sum(),
            },
        );
    }

    let mut rows = Vec::with_capacity(groups.len() * 14);
    for (key, stats) in &groups {
        let counts = tally.get(key).map(|t| &t.1);
        let mut labelled: Vec<&'static str> = labels().collect();
        labelled.sort_unstable();
        for label in labelled {
            rows.push(ReportRow {
                group: key.clone(),
                tag: label.to_string(),
                count: counts.and_then(|c| c.get(label)).copied().unwrap_or(0),
                denominator: stats.records,
            });
        }
    }
    ShiftReport { group_by, rows, groups }
}

/// Writes `group,tag,count,denominator` rows with RFC 4180 quoting.
pub fn export_csv<W: Write>(report: &ShiftReport, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "tag", "count", "denominator"])?;
    for r in &report.rows {
        w.write_record([&r.group, &r.tag, &r.count.to_string(), &r.denominator.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_project_is_dense_and_zero() {
        let report = shift_counts(&Project::new(), GroupBy::None);
        assert_eq!(report.rows.len(), 14);
        assert!(report.rows.iter().all(|r| r.count == 0 && r.group == ALL_GROUP));
        let mut out = Vec::new();
        export_csv(&report, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 15);
        assert_eq!(text.lines().next(), Some("group,tag,count,denominator"));
        assert!(text.contains("(all),addition,0,0"));
    }

    #[test]
    fn comma_in_group_is_quoted() {
        let report = ShiftReport {
            group_by: GroupBy::Genre,
            rows: vec![ReportRow {
                group: "debate, spoken".into(),
                tag: "addition".into(),
                count: 1,
                denominator: 1,
            }],
            groups: BTreeMap::new(),
        };
        let mut out = Vec::new();
        export_csv(&report, &mut out).unwrap();
        assert!(String::from_utf8(out)
            .unwrap()
            .contains("\"debate, spoken\",addition,1,1"));
    }

    #[test]
    fn group_by_parses() {
        assert_eq!("transeme_kind".parse::<GroupBy>(), Ok(GroupBy::TransemeKind));
        assert!("speaker".parse::<GroupBy>().is_err());
    }
}
