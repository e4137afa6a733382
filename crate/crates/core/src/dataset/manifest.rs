use super::{ClassLabel, DatasetError};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const MANIFEST_HEADER: [&str; 4] = ["image_id", "path", "class_id", "imagegroup_id"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRecord {
    pub image_id: String,
    pub path: PathBuf,
    pub class: ClassLabel,
    pub imagegroup_id: String,
}

/// Validated list of records. Relative paths resolve against `base_dir`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    records: Vec<ImageRecord>,
    source: String,
    base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn new(records: Vec<ImageRecord>, source: impl Into<String>) -> Result<Self, DatasetError> {
        validate(&records)?;
        Ok(DatasetManifest {
            records,
            source: source.into(),
            base_dir: PathBuf::new(),
        })
    }

    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = dir.into();
        self
    }

    pub fn records(&self) -> &[ImageRecord] {
        &self.records
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn resolve(&self, record: &ImageRecord) -> PathBuf {
        if record.path.is_absolute() {
            record.path.clone()
        } else {
            self.base_dir.join(&record.path)
        }
    }

    pub fn get(&self, image_id: &str) -> Option<&ImageRecord> {
        self.records.iter().find(|r| r.image_id == image_id)
    }

    pub fn truths(&self) -> HashMap<String, ClassLabel> {
        self.records.iter().map(|r| (r.image_id.clone(), r.class)).collect()
    }

    /// Group id to member image ids, ordered by group id then manifest order.
    pub fn groups(&self) -> BTreeMap<&str, Vec<&ImageRecord>> {
        let mut groups: BTreeMap<&str, Vec<&ImageRecord>> = BTreeMap::new();
        for r in &self.records {
            groups.entry(r.imagegroup_id.as_str()).or_default().push(r);
        }
        groups
    }

    pub fn class_counts(&self) -> [usize; ClassLabel::COUNT] {
        let mut counts = [0; ClassLabel::COUNT];
        for r in &self.records {
            counts[r.class.index()] += 1;
        }
        counts
    }
}

fn validate(records: &[ImageRecord]) -> Result<(), DatasetError> {
    let mut seen = HashSet::new();
    let mut group_class: HashMap<&str, ClassLabel> = HashMap::new();
    for r in records {
        if !seen.insert(r.image_id.as_str()) {
            return Err(DatasetError::Validation(format!("duplicate image_id '{}'", r.image_id)));
        }
        match group_class.get(r.imagegroup_id.as_str()) {
            Some(&c) if c != r.class => {
                return Err(DatasetError::Validation(format!(
                    "imagegroup '{}' mixes classes {} and {}",
                    r.imagegroup_id,
                    c.id(),
                    r.class.id()
                )));
            }
            Some(_) => {}
            None => {
                group_class.insert(&r.imagegroup_id, r.class);
            }
        }
    }
    Ok(())
}

fn parse_err(line: u64, message: impl Into<String>) -> DatasetError {
    DatasetError::Parse {
        line,
        message: message.into(),
    }
}

/// Reads and validates a `image_id,path,class_id,imagegroup_id` CSV file.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let header: Vec<&str> = headers.iter().map(str::trim).collect();
    if header != MANIFEST_HEADER {
        return Err(parse_err(1, format!("expected header {}, found {}", MANIFEST_HEADER.join(","), header.join(","))));
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| row.get(i).map(str::trim).unwrap_or("");
        let (image_id, rel, class_field, group) = (field(0), field(1), field(2), field(3));
        if image_id.is_empty() || rel.is_empty() || group.is_empty() {
            return Err(parse_err(line, "empty field"));
        }
        let class_id: u8 = class_field
            .parse()
            .map_err(|_| parse_err(line, format!("class_id '{class_field}' is not an integer")))?;
        let class = ClassLabel::from_id(class_id).ok_or_else(|| {
            DatasetError::Validation(format!("line {line}: unknown class_id {class_id} for '{image_id}'"))
        })?;
        records.push(ImageRecord {
            image_id: image_id.to_string(),
            path: PathBuf::from(rel),
            class,
            imagegroup_id: group.to_string(),
        });
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(DatasetManifest::new(records, path.display().to_string())?.with_base_dir(base))
}

pub fn write_manifest(path: &Path, manifest: &DatasetManifest) -> Result<(), DatasetError> {
    let io = |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = String::from("image_id,path,class_id,imagegroup_id\n");
    for r in manifest.records() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.image_id,
            r.path.display(),
            r.class.id(),
            r.imagegroup_id
        ));
    }
    File::create(path).and_then(|mut f| f.write_all(out.as_bytes())).map_err(io)
}
