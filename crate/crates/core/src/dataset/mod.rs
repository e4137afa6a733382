//! Corpus bookkeeping: class labels, CSV manifests, and the group-respecting
//! stratified split.

mod manifest;
mod split;

pub use manifest::{load_manifest, write_manifest, DatasetManifest, ImageRecord, MANIFEST_HEADER};
pub use split::{
    load_assignment, split_report, stratified_group_split, verify_assignment, write_assignment, ClassSplitRow,
    Side, SplitAssignment, SplitReport,
};

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("empty manifest")]
    EmptyManifest,
    #[error("split ratio {0} must lie strictly between 0 and 1")]
    InvalidRatio(f64),
}

/// Firearm family, ids 0 to 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum ClassLabel {
    AssaultRifle,
    Revolver,
    SelfLoadingPistol,
    Shotgun,
    SubMachineGun,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 5] = [
        ClassLabel::AssaultRifle,
        ClassLabel::Revolver,
        ClassLabel::SelfLoadingPistol,
        ClassLabel::Shotgun,
        ClassLabel::SubMachineGun,
    ];
    pub const COUNT: usize = 5;

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::AssaultRifle => "Assault Rifle",
            ClassLabel::Revolver => "Revolver",
            ClassLabel::SelfLoadingPistol => "Self-Loading Pistol",
            ClassLabel::Shotgun => "Shotgun",
            ClassLabel::SubMachineGun => "Sub-Machine Gun",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name().eq_ignore_ascii_case(name.trim()))
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<ClassLabel> for u8 {
    fn from(c: ClassLabel) -> u8 {
        c.id()
    }
}

impl TryFrom<u8> for ClassLabel {
    type Error = String;

    fn try_from(id: u8) -> Result<Self, String> {
        ClassLabel::from_id(id).ok_or_else(|| format!("unknown class id {id}"))
    }
}
