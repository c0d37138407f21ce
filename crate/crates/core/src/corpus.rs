//! Corpus discovery, manifests, image decoding and train/test splits.
//!
//! A corpus is a set of domains that share one label space. On disk the
//! default layout is `root/<domain>/<class>/<image>`; a JSON manifest can
//! describe any other arrangement.

use crate::json;
use crate::seed::{hash_str, keyed_rng};
use rand::seq::SliceRandom;
use serde::{Deserialize, Deserializer, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no domain directories under {0}")]
    EmptyCorpus(PathBuf),
    #[error("domains share no class names")]
    ClassMismatch,
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse manifest {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invariant violated at {location}: {message}")]
    InvariantViolation { location: String, message: String },
    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("invalid pixel grid: {0}")]
    InvalidGrid(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("unknown image {0}")]
    UnknownImage(String),
}

impl CorpusError {
    /// Stable name of the error variant, used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            CorpusError::EmptyCorpus(_) => "EmptyCorpus",
            CorpusError::ClassMismatch => "ClassMismatch",
            CorpusError::Io { .. } => "IoError",
            CorpusError::Parse { .. } => "ParseError",
            CorpusError::InvariantViolation { .. } => "InvariantViolation",
            CorpusError::Decode { .. } => "DecodeError",
            CorpusError::InvalidGrid(_) => "InvalidGrid",
            CorpusError::InvalidSplit(_) => "InvalidSplit",
            CorpusError::UnknownImage(_) => "UnknownImage",
        }
    }
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// A non-fatal condition, streamed as `{"warn": ..., "path": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub warn: String,
    pub path: String,
}

impl Warning {
    pub fn new(warn: impl Into<String>, path: impl Into<String>) -> Self {
        Self {
            warn: warn.into(),
            path: path.into(),
        }
    }
}

/// One stylistic domain: class name to sample paths relative to the corpus root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub name: String,
    #[serde(deserialize_with = "unique_keys")]
    pub classes: BTreeMap<String, Vec<String>>,
}

impl DomainSpec {
    pub fn sample_count(&self) -> usize {
        self.classes.values().map(Vec::len).sum()
    }

    /// All sample paths, class by class in key order.
    pub fn samples(&self) -> impl Iterator<Item = &str> {
        self.classes.values().flatten().map(String::as_str)
    }
}

fn unique_keys<'de, D>(d: D) -> std::result::Result<BTreeMap<String, Vec<String>>, D::Error>
where
    D: Deserializer<'de>,
{
    struct Visitor;
    impl<'de> serde::de::Visitor<'de> for Visitor {
        type Value = BTreeMap<String, Vec<String>>;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a map from class name to a list of paths")
        }

        fn visit_map<A: serde::de::MapAccess<'de>>(
            self,
            mut access: A,
        ) -> std::result::Result<Self::Value, A::Error> {
            let mut out = BTreeMap::new();
            while let Some((k, v)) = access.next_entry::<String, Vec<String>>()? {
                if out.contains_key(&k) {
                    return Err(serde::de::Error::custom(format!("duplicate class name {k:?}")));
                }
                out.insert(k, v);
            }
            Ok(out)
        }
    }
    d.deserialize_map(Visitor)
}

/// Index of a multi-domain corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub corpus_name: String,
    pub seed: u64,
    pub root: String,
    pub domains: Vec<DomainSpec>,
}

impl CorpusManifest {
    pub fn domain(&self, name: &str) -> Option<&DomainSpec> {
        self.domains.iter().find(|d| d.name == name)
    }

    pub fn class_names(&self) -> Vec<&str> {
        self.domains
            .first()
            .map(|d| d.classes.keys().map(String::as_str).collect())
            .unwrap_or_default()
    }

    /// Checks the shared label space, path uniqueness and the two-sample rule.
    pub fn validate(&self) -> Result<()> {
        let violation = |location: String, message: String| CorpusError::InvariantViolation {
            location,
            message,
        };
        if self.domains.is_empty() {
            return Err(violation("domains".into(), "manifest lists no domains".into()));
        }
        let mut names = BTreeSet::new();
        for (i, d) in self.domains.iter().enumerate() {
            if !names.insert(d.name.as_str()) {
                return Err(violation(
                    format!("domains[{i}].name"),
                    format!("duplicate domain name {:?}", d.name),
                ));
            }
        }
        let labels: BTreeSet<&String> = self.domains[0].classes.keys().collect();
        let mut seen: HashMap<&str, (usize, &str)> = HashMap::new();
        for (i, d) in self.domains.iter().enumerate() {
            let these: BTreeSet<&String> = d.classes.keys().collect();
            if these != labels {
                let diff: Vec<&str> = these
                    .symmetric_difference(&labels)
                    .map(|s| s.as_str())
                    .collect();
                return Err(violation(
                    format!("domains[{i}].classes"),
                    format!("label space mismatch in domain {:?}: {:?}", d.name, diff),
                ));
            }
            for (class, paths) in &d.classes {
                for p in paths {
                    if let Some((j, other)) = seen.insert(p.as_str(), (i, class.as_str())) {
                        return Err(violation(
                            format!("domains[{i}].classes.{class}"),
                            format!(
                                "duplicate sample path {p} (also in domains[{j}].classes.{other})"
                            ),
                        ));
                    }
                }
            }
            if !d.classes.values().any(|v| v.len() >= 2) {
                return Err(violation(
                    format!("domains[{i}]"),
                    format!("domain {:?} has no class with at least 2 samples", d.name),
                ));
            }
        }
        Ok(())
    }

    /// Directory that sample paths are relative to, given where the manifest lives.
    pub fn resolved_root(&self, manifest_path: &Path) -> PathBuf {
        let root = Path::new(&self.root);
        if root.is_absolute() {
            root.to_path_buf()
        } else {
            manifest_path
                .parent()
                .unwrap_or_else(|| Path::new(""))
                .join(root)
        }
    }
}

/// An RGB image with 8-bit channels, stored row-major and interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelGrid {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl PixelGrid {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(CorpusError::InvalidGrid(format!(
                "dimensions {width}x{height} must be positive"
            )));
        }
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(CorpusError::InvalidGrid(format!(
                "expected {expected} bytes for {width}x{height}, got {}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    /// A grid filled with one color.
    pub fn solid(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let n = width as usize * height as usize;
        Self::new(width, height, rgb.iter().copied().cycle().take(n * 3).collect())
    }

    /// Builds a grid from a list of pixels laid out row by row.
    pub fn from_pixels(width: u32, height: u32, pixels: &[[u8; 3]]) -> Result<Self> {
        Self::new(width, height, pixels.iter().flatten().copied().collect())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }
}

/// Decodes a PNG or JPEG into RGB. Gray sources are replicated over the
/// three channels and alpha is dropped; embedded color profiles are ignored.
pub fn decode_image(path: &Path) -> Result<PixelGrid> {
    let decode_err = |message: String| CorpusError::Decode {
        path: path.to_path_buf(),
        message,
    };
    let reader = image::ImageReader::open(path)
        .map_err(|e| decode_err(e.to_string()))?
        .with_guessed_format()
        .map_err(|e| decode_err(e.to_string()))?;
    match reader.format() {
        Some(image::ImageFormat::Png | image::ImageFormat::Jpeg) => {}
        other => return Err(decode_err(format!("unsupported format {other:?}"))),
    }
    let img = reader.decode().map_err(|e| decode_err(e.to_string()))?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    PixelGrid::new(w, h, rgb.into_raw())
}

/// Header-only probe: true if the file looks like a readable PNG or JPEG.
fn is_decodable(path: &Path) -> bool {
    let Ok(reader) = image::ImageReader::open(path).and_then(|r| r.with_guessed_format()) else {
        return false;
    };
    matches!(
        reader.format(),
        Some(image::ImageFormat::Png | image::ImageFormat::Jpeg)
    ) && reader.into_dimensions().is_ok()
}

/// Where pixel grids come from for a given sample path.
pub trait ImageSource: Sync {
    fn load(&self, path: &str) -> Result<PixelGrid>;
}

/// Decodes sample paths relative to a root directory.
#[derive(Debug, Clone)]
pub struct FsSource {
    root: PathBuf,
}

impl FsSource {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
}

impl ImageSource for FsSource {
    fn load(&self, path: &str) -> Result<PixelGrid> {
        decode_image(&self.root.join(path))
    }
}

/// In-memory images keyed by sample path, for synthetic corpora.
#[derive(Debug, Clone, Default)]
pub struct MemorySource {
    images: HashMap<String, PixelGrid>,
}

impl MemorySource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, path: impl Into<String>, grid: PixelGrid) {
        self.images.insert(path.into(), grid);
    }
}

impl ImageSource for MemorySource {
    fn load(&self, path: &str) -> Result<PixelGrid> {
        self.images
            .get(path)
            .cloned()
            .ok_or_else(|| CorpusError::UnknownImage(path.to_string()))
    }
}

/// Result of a directory scan.
#[derive(Debug, Clone)]
pub struct Scan {
    pub manifest: CorpusManifest,
    pub warnings: Vec<Warning>,
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let io_err = |source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        out.push(entry.map_err(io_err)?.path());
    }
    out.sort();
    Ok(out)
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Builds a manifest from a `root/<domain>/<class>/<image>` tree.
///
/// Classes missing from any domain are dropped with a warning, as are files
/// that are not readable PNG or JPEG images. Ordering is lexicographic.
pub fn scan_tree(root: &Path, seed: u64) -> Result<Scan> {
    if !root.is_dir() {
        return Err(CorpusError::Io {
            path: root.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        });
    }
    let mut warnings = Vec::new();
    let mut raw: Vec<(String, BTreeMap<String, Vec<String>>)> = Vec::new();
    for domain_dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let domain = file_name(&domain_dir);
        let mut classes = BTreeMap::new();
        for class_dir in sorted_entries(&domain_dir)?.into_iter().filter(|p| p.is_dir()) {
            let class = file_name(&class_dir);
            let mut paths = Vec::new();
            for file in sorted_entries(&class_dir)? {
                let rel = format!("{domain}/{class}/{}", file_name(&file));
                if file.is_file() && is_decodable(&file) {
                    paths.push(rel);
                } else {
                    warnings.push(Warning::new("skipped non-image entry", rel));
                }
            }
            classes.insert(class, paths);
        }
        raw.push((domain, classes));
    }
    if raw.is_empty() {
        return Err(CorpusError::EmptyCorpus(root.to_path_buf()));
    }

    let shared: BTreeSet<String> = raw
        .iter()
        .map(|(_, c)| c.keys().cloned().collect::<BTreeSet<_>>())
        .reduce(|a, b| a.intersection(&b).cloned().collect())
        .unwrap_or_default();
    if shared.is_empty() {
        return Err(CorpusError::ClassMismatch);
    }
    let mut domains = Vec::with_capacity(raw.len());
    for (name, mut classes) in raw {
        let dropped: Vec<String> = classes
            .keys()
            .filter(|k| !shared.contains(*k))
            .cloned()
            .collect();
        for class in dropped {
            classes.remove(&class);
            warnings.push(Warning::new(
                "class missing from other domains; dropped",
                format!("{name}/{class}"),
            ));
        }
        domains.push(DomainSpec { name, classes });
    }
    let manifest = CorpusManifest {
        corpus_name: file_name(root),
        seed,
        root: root.to_string_lossy().into_owned(),
        domains,
    };
    manifest.validate()?;
    Ok(Scan { manifest, warnings })
}

/// Reads and validates a manifest file.
pub fn load_manifest(path: &Path) -> Result<CorpusManifest> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let manifest: CorpusManifest =
        serde_json::from_str(&text).map_err(|e| CorpusError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    manifest.validate()?;
    Ok(manifest)
}

/// Writes a manifest as canonical JSON.
pub fn save_manifest(manifest: &CorpusManifest, path: &Path) -> Result<()> {
    let text = json::to_canonical_string(manifest).expect("manifest serializes");
    fs::write(path, text).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Fraction of each (domain, class) cell assigned to training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainFraction {
    pub numerator: u64,
    pub denominator: u64,
}

impl TrainFraction {
    pub fn new(numerator: u64, denominator: u64) -> Result<Self> {
        if denominator == 0 || numerator == 0 || numerator >= denominator {
            return Err(CorpusError::InvalidSplit(format!(
                "train fraction {numerator}/{denominator} must lie strictly between 0 and 1"
            )));
        }
        Ok(Self {
            numerator,
            denominator,
        })
    }

    /// `floor(fraction * n)`.
    pub fn train_count(&self, n: usize) -> usize {
        (u128::from(self.numerator) * n as u128 / u128::from(self.denominator)) as usize
    }
}

impl Default for TrainFraction {
    /// Four-to-one train/test.
    fn default() -> Self {
        Self {
            numerator: 4,
            denominator: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: TrainFraction,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SampleRef {
    pub domain: String,
    pub class: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<SampleRef>,
    pub test: Vec<SampleRef>,
    pub warnings: Vec<Warning>,
}

/// Shuffles each (domain, class) cell with a generator keyed on
/// `(seed, domain, class)` and cuts it at `floor(fraction * n)`.
pub fn split_corpus(manifest: &CorpusManifest, spec: &SplitSpec) -> Result<CorpusSplit> {
    manifest.validate()?;
    let fraction = TrainFraction::new(
        spec.train_fraction.numerator,
        spec.train_fraction.denominator,
    )?;
    let mut split = CorpusSplit {
        train: Vec::new(),
        test: Vec::new(),
        warnings: Vec::new(),
    };
    for domain in &manifest.domains {
        for (class, paths) in &domain.classes {
            let mut order: Vec<&String> = paths.iter().collect();
            let mut rng = keyed_rng(spec.seed, &[hash_str(&domain.name), hash_str(class)]);
            order.shuffle(&mut rng);
            let cut = fraction.train_count(order.len());
            if cut == 0 {
                split.warnings.push(Warning::new(
                    format!("cell of {} samples gets no training samples", order.len()),
                    format!("{}/{}", domain.name, class),
                ));
            }
            for (i, path) in order.into_iter().enumerate() {
                let sample = SampleRef {
                    domain: domain.name.clone(),
                    class: class.clone(),
                    path: path.clone(),
                };
                if i < cut {
                    split.train.push(sample);
                } else {
                    split.test.push(sample);
                }
            }
        }
    }
    Ok(split)
}
