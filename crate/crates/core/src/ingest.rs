//! Dataset files: a manifest pointing at line-delimited entity records and
//! flat parent-pointer hierarchy records.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cohort::{Dataset, DimensionForest, DimensionRecord, EntityRecord};
use crate::error::{Error, Result};

fn default_outcome_field() -> String {
    "outcome".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    /// Relative paths resolve against the manifest's directory.
    pub entities_path: String,
    pub hierarchy_path: String,
    #[serde(default = "default_outcome_field")]
    pub outcome_field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_id: Option<String>,
    /// Expected sha256 (hex) of the two files; checked when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checksum: Option<String>,
}

impl DatasetManifest {
    pub fn new(entities_path: impl Into<String>, hierarchy_path: impl Into<String>) -> Self {
        DatasetManifest {
            entities_path: entities_path.into(),
            hierarchy_path: hierarchy_path.into(),
            outcome_field: default_outcome_field(),
            dataset_id: None,
            checksum: None,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    /// Same manifest with both paths made absolute against `base`.
    pub fn resolved(&self, base: &Path) -> Self {
        let abs = |p: &str| {
            let p = Path::new(p);
            if p.is_absolute() { p.to_path_buf() } else { base.join(p) }.display().to_string()
        };
        DatasetManifest { entities_path: abs(&self.entities_path), hierarchy_path: abs(&self.hierarchy_path), ..self.clone() }
    }
}

/// Hex sha256 over the entity file followed by the hierarchy file.
pub fn content_checksum(entities: &[u8], hierarchy: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update((entities.len() as u64).to_le_bytes());
    h.update(entities);
    h.update(hierarchy);
    hex::encode(h.finalize())
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

/// Hierarchy records, one JSON object per line (a single JSON array is accepted too).
pub fn parse_hierarchy(text: &str) -> Result<Vec<DimensionRecord>> {
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text).map_err(|e| Error::Parse(format!("hierarchy: {e}")));
    }
    lines(text).map(|(n, l)| serde_json::from_str(l).map_err(|e| Error::Parse(format!("hierarchy line {n}: {e}")))).collect()
}

/// Entity records, one JSON object per line, the outcome read from `outcome_field`.
pub fn parse_entities(text: &str, outcome_field: &str) -> Result<Vec<EntityRecord>> {
    lines(text)
        .map(|(n, l)| {
            let mut obj: serde_json::Map<String, serde_json::Value> =
                serde_json::from_str(l).map_err(|e| Error::Parse(format!("entities line {n}: {e}")))?;
            let outcome = match obj.remove(outcome_field) {
                Some(serde_json::Value::Bool(b)) => b,
                Some(v) => return Err(Error::Parse(format!("entities line {n}: `{outcome_field}` must be a boolean, got {v}"))),
                None => return Err(Error::Parse(format!("entities line {n}: missing `{outcome_field}`"))),
            };
            obj.insert("outcome".into(), outcome.into());
            serde_json::from_value(obj.into()).map_err(|e| Error::Parse(format!("entities line {n}: {e}")))
        })
        .collect()
}

/// Builds a dataset from in-memory file contents.
pub fn ingest_bytes(manifest: &DatasetManifest, entities: &[u8], hierarchy: &[u8]) -> Result<Dataset> {
    let checksum = content_checksum(entities, hierarchy);
    if let Some(expected) = &manifest.checksum {
        if !expected.eq_ignore_ascii_case(&checksum) {
            return Err(Error::ChecksumMismatch { expected: expected.clone(), actual: checksum });
        }
    }
    let utf8 = |b: &[u8], what: &str| std::str::from_utf8(b).map(str::to_owned).map_err(|e| Error::Parse(format!("{what}: {e}")));
    let forest = DimensionForest::from_records(parse_hierarchy(&utf8(hierarchy, "hierarchy")?)?)?;
    let records = parse_entities(&utf8(entities, "entities")?, &manifest.outcome_field)?;
    let id = manifest.dataset_id.clone().unwrap_or_else(|| format!("ds-{}", &checksum[..12]));
    log::info!("ingested dataset {id}: {} entities, {} dimensions", records.len(), forest.len());
    Dataset::new(id, checksum, forest, records)
}

/// Reads the files a manifest points at (relative to `base`) and builds the dataset.
pub fn ingest(manifest: &DatasetManifest, base: &Path) -> Result<Dataset> {
    let m = manifest.resolved(base);
    let read = |p: &str| std::fs::read(p).map_err(|e| Error::io(p, e));
    ingest_bytes(&m, &read(&m.entities_path)?, &read(&m.hierarchy_path)?)
}

/// Reads a manifest file and ingests it; returns the manifest with absolute paths.
pub fn ingest_manifest_file(path: &Path) -> Result<(DatasetManifest, Dataset)> {
    let manifest = DatasetManifest::read(path)?;
    let base: PathBuf = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let ds = ingest(&manifest, &base)?;
    Ok((manifest.resolved(&base), ds))
}

/// Serializes entity records the way [`parse_entities`] reads them.
pub fn write_entities(records: &[EntityRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::Parse(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_hierarchy(records: &[DimensionRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::Parse(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

/// Writes `entities.jsonl`, `hierarchy.jsonl` and `manifest.json` (with
/// checksum) into `dir`; returns the manifest path.
pub fn write_dataset_files(dir: &Path, dataset_id: &str, forest: &[DimensionRecord], entities: &[EntityRecord]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let ent = write_entities(entities)?;
    let hier = write_hierarchy(forest)?;
    let mut manifest = DatasetManifest::new("entities.jsonl", "hierarchy.jsonl");
    manifest.dataset_id = Some(dataset_id.to_string());
    manifest.checksum = Some(content_checksum(ent.as_bytes(), hier.as_bytes()));
    let write = |name: &str, body: &str| {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| Error::io(p.display().to_string(), e))
    };
    write("entities.jsonl", &ent)?;
    write("hierarchy.jsonl", &hier)?;
    write("manifest.json", &serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))?)?;
    Ok(dir.join("manifest.json"))
}
