//! Flat `key = value` run configuration. Command-line flags override file
//! values; relative paths in a file are resolved against its directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::classifier::{ModelKind, ModelSpec, DEFAULT_K};
use crate::diachronic::BonferroniFamily;
use crate::embedding_store::AlignmentMode;
use crate::error::{Error, Result};
use crate::lexicon::Tier;

const PATH_KEYS: [&str; 6] = ["manifest", "mfd", "norms", "wordlist", "survey", "out"];
const OTHER_KEYS: [&str; 9] = [
    "model",
    "k",
    "bandwidth",
    "tier",
    "seed",
    "normalize",
    "bonferroni",
    "align",
    "irrelevant_count",
];

/// Raw values read from a config file.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            let value = if PATH_KEYS.contains(&key.as_str()) {
                base.join(value).to_string_lossy().into_owned()
            } else if OTHER_KEYS.contains(&key.as_str()) {
                value.to_string()
            } else {
                return Err(Error::Config(format!("line {}: unknown key `{key}`", i + 1)));
            };
            if values.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!("line {}: `{key}` set twice", i + 1)));
            }
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| Error::Config(format!("bad value `{v}` for `{key}`: {e}")))
            })
            .transpose()
    }
}

/// Settings shared by every subcommand, after merging flags over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub manifest: Option<PathBuf>,
    pub mfd: Option<PathBuf>,
    pub norms: Option<PathBuf>,
    pub wordlist: Option<PathBuf>,
    pub survey: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub model: Option<ModelKind>,
    pub k: Option<usize>,
    pub bandwidth: Option<f64>,
    pub tier: Option<Tier>,
    pub seed: Option<u64>,
    pub normalize: bool,
    pub bonferroni: Option<BonferroniFamily>,
    pub align: Option<String>,
    pub irrelevant_count: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub mfd: Option<PathBuf>,
    pub norms: Option<PathBuf>,
    pub wordlist: Option<PathBuf>,
    pub survey: Option<PathBuf>,
    pub out: PathBuf,
    pub model: ModelKind,
    pub k: usize,
    /// `None` means tune the KDE bandwidth on the seeds.
    pub bandwidth: Option<f64>,
    pub tier: Tier,
    pub seed: u64,
    pub normalize: bool,
    pub bonferroni: BonferroniFamily,
    /// `None` when the spaces are used as loaded.
    pub align: Option<AlignmentMode>,
    pub irrelevant_count: Option<usize>,
}

fn parse_align(s: &str) -> Result<Option<AlignmentMode>> {
    if s == "none" {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

impl RunConfig {
    pub fn resolve(flags: Overrides, file: &ConfigFile) -> Result<Self> {
        let path = |flag: Option<PathBuf>, key: &str| -> Result<Option<PathBuf>> {
            Ok(flag.or(file.get::<PathBuf>(key)?))
        };
        let align = match flags.align {
            Some(a) => parse_align(&a)?,
            None => match file.values.get("align") {
                Some(a) => parse_align(a)?,
                None => None,
            },
        };
        let config = RunConfig {
            manifest: path(flags.manifest, "manifest")?,
            mfd: path(flags.mfd, "mfd")?,
            norms: path(flags.norms, "norms")?,
            wordlist: path(flags.wordlist, "wordlist")?,
            survey: path(flags.survey, "survey")?,
            out: path(flags.out, "out")?.unwrap_or_else(|| PathBuf::from("out")),
            model: flags.model.or(file.get("model")?).unwrap_or(ModelKind::Centroid),
            k: flags.k.or(file.get("k")?).unwrap_or(DEFAULT_K),
            bandwidth: flags.bandwidth.or(file.get("bandwidth")?),
            tier: flags.tier.or(file.get("tier")?).unwrap_or(Tier::Relevance),
            seed: flags.seed.or(file.get("seed")?).unwrap_or(0),
            normalize: flags.normalize || file.get("normalize")?.unwrap_or(false),
            bonferroni: flags
                .bonferroni
                .or(file.get("bonferroni")?)
                .unwrap_or(BonferroniFamily::Filtered),
            align,
            irrelevant_count: flags.irrelevant_count.or(file.get("irrelevant_count")?),
        };
        config.spec_with(config.bandwidth.unwrap_or(1.0)).validate()?;
        Ok(config)
    }

    pub fn spec_with(&self, bandwidth: f64) -> ModelSpec {
        ModelSpec {
            k: self.k,
            bandwidth,
            ..ModelSpec::new(self.model)
        }
    }

    /// Canonical `key=value` lines, in a fixed order.
    pub fn canonical(&self) -> String {
        let p = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let lines = [
            format!("manifest={}", p(&self.manifest)),
            format!("mfd={}", p(&self.mfd)),
            format!("norms={}", p(&self.norms)),
            format!("wordlist={}", p(&self.wordlist)),
            format!("survey={}", p(&self.survey)),
            format!("out={}", self.out.display()),
            format!("model={}", self.model),
            format!("k={}", self.k),
            format!(
                "bandwidth={}",
                self.bandwidth.map(|b| b.to_string()).unwrap_or_else(|| "tuned".into())
            ),
            format!("tier={}", self.tier),
            format!("seed={}", self.seed),
            format!("normalize={}", self.normalize),
            format!("bonferroni={}", self.bonferroni),
            format!(
                "align={}",
                self.align.map(|a| a.to_string()).unwrap_or_else(|| "none".into())
            ),
            format!(
                "irrelevant_count={}",
                self.irrelevant_count.map(|c| c.to_string()).unwrap_or_else(|| "auto".into())
            ),
        ];
        lines.join("\n")
    }

    /// SHA-256 of the canonical config plus the command and its arguments.
    pub fn hash(&self, command: &str) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical().as_bytes());
        h.update(b"\ncommand=");
        h.update(command.as_bytes());
        hex::encode(h.finalize())
    }

    pub fn require<'a>(&self, path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        let path = path
            .as_deref()
            .ok_or_else(|| Error::Config(format!("`{key}` is required (flag --{key} or config key)")))?;
        if !path.exists() {
            return Err(Error::Input(format!("{key} file {} does not exist", path.display())));
        }
        Ok(path)
    }
}
