use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::wav::read_wav;
use crate::dsp::{Waveform, DEFAULT_SAMPLE_RATE};
use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Speech,
    Noise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    pub kind: SourceKind,
    pub duration_s: f64,
    pub num_samples: usize,
    pub sample_rate_hz: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    manifest_version: u32,
}

impl Manifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// JSON lines: a version header, then one entry per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<manifest>", e);
        serde_json::to_writer(&mut w, &Header { manifest_version: MANIFEST_VERSION })?;
        w.write_all(b"\n").map_err(io)?;
        for e in &self.entries {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n").map_err(io)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<manifest>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            if i == 0 {
                if let Ok(h) = serde_json::from_str::<Header>(&line) {
                    if h.manifest_version != MANIFEST_VERSION {
                        return Err(Error::InvalidConfig(format!(
                            "manifest version {} is not supported",
                            h.manifest_version
                        )));
                    }
                    continue;
                }
            }
            entries.push(serde_json::from_str(&line)?);
        }
        let m = Manifest { entries };
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Manifest::read_jsonl(BufReader::new(f))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_jsonl(std::io::BufWriter::new(f))
    }

    /// Unique ids and a single sample rate.
    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for e in &self.entries {
            if !ids.insert(&e.id) {
                return Err(Error::InvalidConfig(format!("duplicate manifest id {:?}", e.id)));
            }
        }
        if let Some(first) = self.entries.first() {
            if let Some(e) = self.entries.iter().find(|e| e.sample_rate_hz != first.sample_rate_hz) {
                return Err(Error::UnsupportedSampleRate {
                    found: e.sample_rate_hz,
                    expected: first.sample_rate_hz,
                });
            }
        }
        Ok(())
    }

    /// Decode every referenced file.
    pub fn load_audio(&self) -> Result<Vec<Waveform>> {
        self.entries.iter().map(|e| read_wav(&e.path)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestFailure {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct IngestReport {
    pub manifest: Manifest,
    /// Files that could not be used; ingestion continues past them.
    pub failures: Vec<IngestFailure>,
    pub warnings: Vec<String>,
}

fn collect_wavs(path: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    if path.is_dir() {
        let mut children: Vec<_> = fs::read_dir(path)?.collect::<std::io::Result<_>>()?;
        children.sort_by_key(|e| e.path());
        for c in children {
            collect_wavs(&c.path(), out)?;
        }
    } else if path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
    {
        out.push(path.to_path_buf());
    }
    Ok(())
}

/// Scan files and directories (recursively) for WAV files and build a
/// manifest of the ones that decode at 16 kHz.
pub fn ingest(paths: &[PathBuf], kind: SourceKind) -> Result<IngestReport> {
    let mut files = Vec::new();
    let mut failures = Vec::new();
    for p in paths {
        if let Err(e) = collect_wavs(p, &mut files) {
            failures.push(IngestFailure {
                path: p.clone(),
                reason: e.to_string(),
            });
        }
    }
    let mut warnings = Vec::new();
    let mut seen_paths = HashSet::new();
    let mut ids: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut entries = Vec::new();
    for file in files {
        let canonical = fs::canonicalize(&file).unwrap_or_else(|_| file.clone());
        if !seen_paths.insert(canonical.clone()) {
            warnings.push(format!("{} listed more than once; kept one entry", file.display()));
            continue;
        }
        let w = match read_wav(&file) {
            Ok(w) => w,
            Err(e) => {
                failures.push(IngestFailure {
                    path: file,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if w.sample_rate_hz() != DEFAULT_SAMPLE_RATE {
            failures.push(IngestFailure {
                path: file,
                reason: Error::UnsupportedSampleRate {
                    found: w.sample_rate_hz(),
                    expected: DEFAULT_SAMPLE_RATE,
                }
                .to_string(),
            });
            continue;
        }
        let stem = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "utt".into());
        let mut id = stem.clone();
        let mut suffix = 2;
        while ids.contains_key(&id) {
            id = format!("{stem}_{suffix}");
            suffix += 1;
        }
        if id != stem {
            warnings.push(format!("id {stem:?} already taken; {} registered as {id:?}", file.display()));
        }
        ids.insert(id.clone(), canonical.clone());
        entries.push(ManifestEntry {
            id,
            path: canonical,
            kind,
            duration_s: w.duration_s(),
            num_samples: w.len(),
            sample_rate_hz: w.sample_rate_hz(),
        });
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    for f in &failures {
        log::warn!("skipping {}: {}", f.path.display(), f.reason);
    }
    if entries.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let manifest = Manifest { entries };
    manifest.validate()?;
    Ok(IngestReport {
        manifest,
        failures,
        warnings,
    })
}
