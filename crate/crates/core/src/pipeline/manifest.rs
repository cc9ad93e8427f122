use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::file_digest;

const MANIFEST_FORMAT: &str = "hsaug-manifest";
const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Input path to sha256. Paths under the run directory are relative to it.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: u32,
    pub config_digest: String,
    pub backend: String,
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    pub fn new(config_digest: String, backend: String) -> Self {
        RunManifest {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            config_digest,
            backend,
            stages: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: RunManifest = serde_json::from_str(&text)?;
        if m.format != MANIFEST_FORMAT || m.version != MANIFEST_VERSION {
            return Err(Error::Schema(format!("{}: not a v{MANIFEST_VERSION} run manifest", path.display())));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    /// Name of the stage that produced `rel`, if any.
    pub fn producer(&self, rel: &str) -> Option<&str> {
        self.stages
            .iter()
            .find(|(_, r)| r.outputs.contains_key(rel))
            .map(|(name, _)| name.as_str())
    }
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Collects the inputs and outputs of one stage while it runs.
pub struct StageBuilder<'a> {
    pub(crate) name: String,
    root: &'a Path,
    record: StageRecord,
}

impl<'a> StageBuilder<'a> {
    pub(crate) fn new(name: impl Into<String>, root: &'a Path) -> Self {
        StageBuilder {
            name: name.into(),
            root,
            record: StageRecord::default(),
        }
    }

    fn key(&self, path: &Path) -> String {
        match path.strip_prefix(self.root) {
            Ok(rel) => rel.to_string_lossy().replace('\\', "/"),
            Err(_) => path.to_string_lossy().into_owned(),
        }
    }

    pub(crate) fn input(&mut self, path: &Path) -> Result<()> {
        let digest = file_digest(path)?;
        self.record.inputs.insert(self.key(path), digest);
        Ok(())
    }

    pub(crate) fn output(&mut self, path: &Path) -> Result<()> {
        let digest = file_digest(path)?;
        self.record.outputs.insert(self.key(path), digest);
        Ok(())
    }

    pub(crate) fn count(&mut self, key: impl Into<String>, value: usize) {
        self.record.counts.insert(key.into(), value as u64);
    }

    pub(crate) fn finish(self) -> (String, StageRecord) {
        (self.name, self.record)
    }
}

/// Verify that `path` (inside the run directory) was produced by a recorded
/// stage and has not changed since.
pub(crate) fn check_upstream(manifest: &RunManifest, root: &Path, path: &Path, stage: &str) -> Result<()> {
    let rel = path
        .strip_prefix(root)
        .map(|p| p.to_string_lossy().replace('\\', "/"))
        .unwrap_or_else(|_| path.to_string_lossy().into_owned());
    let recorded = manifest
        .stages
        .values()
        .find_map(|r| r.outputs.get(&rel))
        .ok_or_else(|| Error::Dependency {
            stage: stage.into(),
            missing: rel.clone(),
        })?;
    if !path.exists() {
        return Err(Error::Dependency {
            stage: stage.into(),
            missing: rel,
        });
    }
    let actual = file_digest(path)?;
    if &actual != recorded {
        return Err(Error::StaleInput {
            path: rel,
            recorded: recorded.clone(),
            actual,
        });
    }
    Ok(())
}

pub fn manifest_path(out_dir: &Path) -> PathBuf {
    out_dir.join(MANIFEST_FILE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upstream_checks() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        let file = root.join("seed-1/sample.jsonl");
        std::fs::create_dir_all(file.parent().unwrap()).unwrap();
        std::fs::write(&file, "x\n").unwrap();

        let mut m = RunManifest::new("c".into(), "mock".into());
        assert!(matches!(check_upstream(&m, root, &file, "eda"), Err(Error::Dependency { .. })));

        let mut b = StageBuilder::new("seed-1/sample", root);
        b.output(&file).unwrap();
        let (name, rec) = b.finish();
        assert!(rec.outputs.contains_key("seed-1/sample.jsonl"));
        m.stages.insert(name, rec);
        check_upstream(&m, root, &file, "eda").unwrap();
        assert_eq!(m.producer("seed-1/sample.jsonl"), Some("seed-1/sample"));

        std::fs::write(&file, "y\n").unwrap();
        assert!(matches!(check_upstream(&m, root, &file, "eda"), Err(Error::StaleInput { .. })));
        std::fs::remove_file(&file).unwrap();
        assert!(matches!(check_upstream(&m, root, &file, "eda"), Err(Error::Dependency { .. })));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = manifest_path(dir.path());
        let mut m = RunManifest::new("abc".into(), "mock".into());
        m.stages.insert("s".into(), StageRecord::default());
        m.save(&path).unwrap();
        assert_eq!(RunManifest::load(&path).unwrap(), m);
    }
}
