//! Train/test assignment that never bisects an imagegroup.
//!
//! Per class, groups are shuffled under the seed and added to the training
//! side one at a time until adding the next group would move the class's
//! train fraction farther from the target ratio than stopping. The achieved
//! fraction is then within `largest group / class total` of the target.

use super::{ClassLabel, DatasetError, DatasetManifest};
use crate::seed;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Train,
    Test,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Train => "train",
            Side::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitAssignment {
    pub train: BTreeSet<String>,
    pub test: BTreeSet<String>,
    /// `None` when the assignment was loaded from disk rather than computed.
    pub seed: Option<u64>,
    pub ratio: Option<f64>,
    /// Classes that had a single imagegroup; that group went to training.
    pub degenerate: Vec<ClassLabel>,
}

impl SplitAssignment {
    pub fn side(&self, image_id: &str) -> Option<Side> {
        if self.train.contains(image_id) {
            Some(Side::Train)
        } else if self.test.contains(image_id) {
            Some(Side::Test)
        } else {
            None
        }
    }
}

pub fn stratified_group_split(
    manifest: &DatasetManifest,
    ratio: f64,
    seed: u64,
) -> Result<SplitAssignment, DatasetError> {
    if manifest.is_empty() {
        return Err(DatasetError::EmptyManifest);
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DatasetError::InvalidRatio(ratio));
    }
    let mut per_class: BTreeMap<ClassLabel, Vec<Vec<&str>>> = BTreeMap::new();
    for members in manifest.groups().values() {
        let class = members[0].class;
        per_class
            .entry(class)
            .or_default()
            .push(members.iter().map(|r| r.image_id.as_str()).collect());
    }

    let split_seed = seed::derive(seed, seed::streams::SPLIT);
    let mut assignment = SplitAssignment {
        train: BTreeSet::new(),
        test: BTreeSet::new(),
        seed: Some(seed),
        ratio: Some(ratio),
        degenerate: Vec::new(),
    };
    for (class, mut groups) in per_class {
        let forced = groups.len() == 1;
        if forced {
            log::warn!("class {} has a single imagegroup; assigning it to train", class.id());
            assignment.degenerate.push(class);
        }
        groups.shuffle(&mut seed::rng(split_seed, class.id() as u64));
        let total: usize = groups.iter().map(Vec::len).sum();
        let target = ratio * total as f64;
        let mut in_train = 0usize;
        let mut filling = true;
        for group in groups {
            if filling && (forced || keeps_closer(in_train, group.len(), target)) {
                in_train += group.len();
                assignment.train.extend(group.into_iter().map(String::from));
            } else {
                filling = false;
                assignment.test.extend(group.into_iter().map(String::from));
            }
        }
    }
    Ok(assignment)
}

fn keeps_closer(in_train: usize, group: usize, target: f64) -> bool {
    ((in_train + group) as f64 - target).abs() <= (in_train as f64 - target).abs()
}

/// Checks the partition and group-atomicity invariants.
pub fn verify_assignment(assignment: &SplitAssignment, manifest: &DatasetManifest) -> Result<(), DatasetError> {
    if let Some(id) = assignment.train.intersection(&assignment.test).next() {
        return Err(DatasetError::Validation(format!("image '{id}' is on both sides")));
    }
    for r in manifest.records() {
        if assignment.side(&r.image_id).is_none() {
            return Err(DatasetError::Validation(format!("image '{}' is not assigned", r.image_id)));
        }
    }
    let known = manifest.truths();
    if let Some(id) = assignment.train.iter().chain(&assignment.test).find(|id| !known.contains_key(*id)) {
        return Err(DatasetError::Validation(format!("image '{id}' is not in the manifest")));
    }
    if let Some(g) = bisected_groups(assignment, manifest).first() {
        return Err(DatasetError::Validation(format!("imagegroup '{g}' is bisected")));
    }
    Ok(())
}

fn bisected_groups(assignment: &SplitAssignment, manifest: &DatasetManifest) -> Vec<String> {
    manifest
        .groups()
        .into_iter()
        .filter(|(_, members)| {
            let sides: BTreeSet<_> = members
                .iter()
                .filter_map(|r| assignment.side(&r.image_id))
                .map(Side::as_str)
                .collect();
            sides.len() > 1
        })
        .map(|(g, _)| g.to_string())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSplitRow {
    pub class_id: u8,
    pub class_name: String,
    pub train: usize,
    pub test: usize,
    pub train_fraction: f64,
    pub train_groups: usize,
    pub test_groups: usize,
    pub largest_group: usize,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub target_ratio: Option<f64>,
    pub seed: Option<u64>,
    pub classes: Vec<ClassSplitRow>,
    pub total_train: usize,
    pub total_test: usize,
    pub train_groups: usize,
    pub test_groups: usize,
    pub bisected_groups: Vec<String>,
    pub bisected_count: usize,
    pub degenerate_classes: Vec<u8>,
}

pub fn split_report(assignment: &SplitAssignment, manifest: &DatasetManifest) -> SplitReport {
    let bisected = bisected_groups(assignment, manifest);
    let mut rows: BTreeMap<ClassLabel, ClassSplitRow> = BTreeMap::new();
    for (_, members) in manifest.groups() {
        let class = members[0].class;
        let row = rows.entry(class).or_insert_with(|| ClassSplitRow {
            class_id: class.id(),
            class_name: class.name().to_string(),
            train: 0,
            test: 0,
            train_fraction: 0.0,
            train_groups: 0,
            test_groups: 0,
            largest_group: 0,
            warning: None,
        });
        row.largest_group = row.largest_group.max(members.len());
        let train = members
            .iter()
            .filter(|r| assignment.side(&r.image_id) == Some(Side::Train))
            .count();
        let test = members
            .iter()
            .filter(|r| assignment.side(&r.image_id) == Some(Side::Test))
            .count();
        row.train += train;
        row.test += test;
        if train > 0 {
            row.train_groups += 1;
        }
        if test > 0 {
            row.test_groups += 1;
        }
    }
    let mut classes: Vec<ClassSplitRow> = rows.into_values().collect();
    for row in &mut classes {
        let total = row.train + row.test;
        row.train_fraction = if total > 0 { row.train as f64 / total as f64 } else { 0.0 };
        if row.test == 0 {
            row.warning = Some(format!("WARN: class {} has no test images (achieved ratio 1.0)", row.class_id));
        } else if row.train == 0 {
            row.warning = Some(format!("WARN: class {} has no train images (achieved ratio 0.0)", row.class_id));
        }
    }
    SplitReport {
        target_ratio: assignment.ratio,
        seed: assignment.seed,
        total_train: classes.iter().map(|r| r.train).sum(),
        total_test: classes.iter().map(|r| r.test).sum(),
        train_groups: classes.iter().map(|r| r.train_groups).sum(),
        test_groups: classes.iter().map(|r| r.test_groups).sum(),
        classes,
        bisected_count: bisected.len(),
        bisected_groups: bisected,
        degenerate_classes: assignment.degenerate.iter().map(|c| c.id()).collect(),
    }
}

/// Writes `image_id,split` rows in image id order.
pub fn write_assignment(path: &Path, assignment: &SplitAssignment) -> Result<(), DatasetError> {
    let mut rows: Vec<(&str, Side)> = assignment
        .train
        .iter()
        .map(|id| (id.as_str(), Side::Train))
        .chain(assignment.test.iter().map(|id| (id.as_str(), Side::Test)))
        .collect();
    rows.sort_by(|a, b| a.0.cmp(b.0));
    let mut out = String::from("image_id,split\n");
    for (id, side) in rows {
        out.push_str(id);
        out.push(',');
        out.push_str(side.as_str());
        out.push('\n');
    }
    File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })
}

pub fn load_assignment(path: &Path) -> Result<SplitAssignment, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| DatasetError::Parse { line: 1, message: e.to_string() })?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header != ["image_id", "split"] {
        return Err(DatasetError::Parse {
            line: 1,
            message: format!("expected header image_id,split, found {}", header.join(",")),
        });
    }
    let mut assignment = SplitAssignment {
        train: BTreeSet::new(),
        test: BTreeSet::new(),
        seed: None,
        ratio: None,
        degenerate: Vec::new(),
    };
    for row in reader.records() {
        let row = row.map_err(|e| DatasetError::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let id = row.get(0).unwrap_or("").trim().to_string();
        let inserted = match row.get(1).map(str::trim) {
            Some("train") => assignment.train.insert(id.clone()),
            Some("test") => assignment.test.insert(id.clone()),
            other => {
                return Err(DatasetError::Parse {
                    line,
                    message: format!("split must be train or test, found {other:?}"),
                })
            }
        };
        if !inserted {
            return Err(DatasetError::Validation(format!("line {line}: image '{id}' listed twice")));
        }
    }
    Ok(assignment)
}
