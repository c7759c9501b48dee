use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Deserialize;

use super::procrustes::align_procrustes;
use super::space::EmbeddingSpace;
use super::word2vec::{load_embedding_space, save_embedding_space, VectorFormat};
use crate::error::{Error, Result};

/// Decade spaces in strictly increasing order, sharing one dimensionality.
#[derive(Debug, Clone)]
pub struct DiachronicEmbeddings {
    spaces: Vec<EmbeddingSpace>,
    dim: usize,
}

/// How a sequence of decades is brought into one coordinate system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignmentMode {
    /// Earliest decade is fixed; each later decade is aligned to its already
    /// aligned predecessor.
    Forward,
    /// Latest decade is fixed; each earlier decade is aligned to its already
    /// aligned successor.
    Backward,
    /// Every decade is aligned directly to the given decade.
    Reference(i32),
}

impl FromStr for AlignmentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(AlignmentMode::Forward),
            "backward" => Ok(AlignmentMode::Backward),
            other => match other.strip_prefix("reference:") {
                Some(d) => d
                    .parse()
                    .map(AlignmentMode::Reference)
                    .map_err(|_| Error::Input(format!("bad reference decade `{d}`"))),
                None => Err(Error::Input(format!(
                    "unknown alignment mode `{other}` (expected forward, backward or reference:<decade>)"
                ))),
            },
        }
    }
}

impl fmt::Display for AlignmentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlignmentMode::Forward => f.write_str("forward"),
            AlignmentMode::Backward => f.write_str("backward"),
            AlignmentMode::Reference(d) => write!(f, "reference:{d}"),
        }
    }
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    decade: i32,
    path: PathBuf,
    format: String,
}

impl DiachronicEmbeddings {
    pub fn new(mut spaces: Vec<EmbeddingSpace>) -> Result<Self> {
        let dim = match spaces.first() {
            Some(s) => s.dim(),
            None => return Err(Error::Manifest("no decades given".into())),
        };
        if let Some(bad) = spaces.iter().find(|s| s.dim() != dim) {
            return Err(Error::Manifest(format!(
                "decade {} has dimension {}, decade {} has {dim}",
                bad.decade(),
                bad.dim(),
                spaces[0].decade()
            )));
        }
        spaces.sort_by_key(|s| s.decade());
        if let Some(w) = spaces.windows(2).find(|w| w[0].decade() == w[1].decade()) {
            return Err(Error::Manifest(format!("decade {} listed twice", w[0].decade())));
        }
        Ok(DiachronicEmbeddings { spaces, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    pub fn spaces(&self) -> &[EmbeddingSpace] {
        &self.spaces
    }

    pub fn decades(&self) -> Vec<i32> {
        self.spaces.iter().map(|s| s.decade()).collect()
    }

    pub fn space(&self, decade: i32) -> Option<&EmbeddingSpace> {
        self.spaces.iter().find(|s| s.decade() == decade)
    }

    pub fn normalized(&self) -> Self {
        DiachronicEmbeddings {
            spaces: self.spaces.iter().map(|s| s.normalized()).collect(),
            dim: self.dim,
        }
    }

    /// Rotates every decade into a common coordinate system. Returns the new
    /// sequence and the rotation applied to each decade (identity for the
    /// fixed one).
    pub fn align(&self, mode: AlignmentMode) -> Result<(Self, Vec<DMatrix<f64>>)> {
        let n = self.spaces.len();
        let identity = DMatrix::<f64>::identity(self.dim, self.dim);
        let mut aligned: Vec<Option<EmbeddingSpace>> = vec![None; n];
        let mut rotations: Vec<Option<DMatrix<f64>>> = vec![None; n];

        let wrap = |decade: i32| move |e: Error| Error::Decade {
            decade,
            source: Box::new(e),
        };

        match mode {
            AlignmentMode::Forward | AlignmentMode::Backward => {
                let order: Vec<usize> = if mode == AlignmentMode::Forward {
                    (0..n).collect()
                } else {
                    (0..n).rev().collect()
                };
                aligned[order[0]] = Some(self.spaces[order[0]].clone());
                rotations[order[0]] = Some(identity.clone());
                for pair in order.windows(2) {
                    let (prev, cur) = (pair[0], pair[1]);
                    let target = aligned[prev].as_ref().expect("aligned in order");
                    let src = &self.spaces[cur];
                    let al = align_procrustes(src, target).map_err(wrap(src.decade()))?;
                    rotations[cur] = Some(al.rotation);
                    aligned[cur] = Some(al.aligned);
                }
            }
            AlignmentMode::Reference(decade) => {
                let r = self
                    .spaces
                    .iter()
                    .position(|s| s.decade() == decade)
                    .ok_or_else(|| Error::Input(format!("reference decade {decade} not loaded")))?;
                let target = &self.spaces[r];
                let results: Vec<Result<(DMatrix<f64>, EmbeddingSpace)>> = self
                    .spaces
                    .par_iter()
                    .enumerate()
                    .map(|(i, src)| {
                        if i == r {
                            Ok((identity.clone(), src.clone()))
                        } else {
                            align_procrustes(src, target)
                                .map(|al| (al.rotation, al.aligned))
                                .map_err(wrap(src.decade()))
                        }
                    })
                    .collect();
                for (i, res) in results.into_iter().enumerate() {
                    let (rot, space) = res?;
                    rotations[i] = Some(rot);
                    aligned[i] = Some(space);
                }
            }
        }

        let spaces = aligned.into_iter().map(|s| s.expect("every decade aligned")).collect();
        let rotations = rotations.into_iter().map(|r| r.expect("every decade aligned")).collect();
        Ok((
            DiachronicEmbeddings {
                spaces,
                dim: self.dim,
            },
            rotations,
        ))
    }

    /// Writes each decade as `<dir>/<decade>.txt` (text format) and a
    /// `manifest.csv` pointing at them. Returns the manifest path.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = dir.join("manifest.csv");
        let file = File::create(&manifest).map_err(|e| Error::io(&manifest, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(&manifest, e);
        writeln!(w, "decade,path,format").map_err(io)?;
        for space in &self.spaces {
            let name = format!("{}.txt", space.decade());
            save_embedding_space(space, dir.join(&name), VectorFormat::Text)?;
            writeln!(w, "{},{},{}", space.decade(), name, VectorFormat::Text).map_err(io)?;
        }
        w.flush().map_err(io)?;
        Ok(manifest)
    }
}

/// Loads every decade listed in a `decade,path,format` manifest. Relative
/// paths are resolved against the manifest's directory.
pub fn load_diachronic(manifest: impl AsRef<Path>) -> Result<DiachronicEmbeddings> {
    let manifest = manifest.as_ref();
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    let file = File::open(manifest).map_err(|e| Error::io(manifest, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    {
        let headers = reader.headers()?;
        let expected = ["decade", "path", "format"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Manifest(format!(
                "{}: header must be `decade,path,format`",
                manifest.display()
            )));
        }
    }
    let mut rows = Vec::new();
    for (i, row) in reader.deserialize::<ManifestRow>().enumerate() {
        let row = row.map_err(|e| Error::parse(manifest, i + 2, e.to_string()))?;
        let format: VectorFormat = row
            .format
            .parse()
            .map_err(|e: Error| Error::parse(manifest, i + 2, e.to_string()))?;
        let path = if row.path.is_absolute() {
            row.path
        } else {
            base.join(row.path)
        };
        rows.push((row.decade, path, format));
    }
    if rows.is_empty() {
        return Err(Error::Manifest(format!("{} lists no decades", manifest.display())));
    }
    let spaces = rows
        .par_iter()
        .map(|(decade, path, format)| {
            load_embedding_space(path, *format, *decade).map_err(|e| Error::Decade {
                decade: *decade,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DiachronicEmbeddings::new(spaces)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(decade: i32, dim: usize) -> EmbeddingSpace {
        EmbeddingSpace::from_rows(decade, dim, vec![("a", vec![1.0; dim])]).unwrap()
    }

    #[test]
    fn sorts_and_validates() {
        let d = DiachronicEmbeddings::new(vec![space(1810, 2), space(1800, 2)]).unwrap();
        assert_eq!(d.decades(), vec![1800, 1810]);
        assert!(DiachronicEmbeddings::new(vec![space(1800, 2), space(1810, 3)]).is_err());
        assert!(DiachronicEmbeddings::new(vec![space(1800, 2), space(1800, 2)]).is_err());
        assert!(DiachronicEmbeddings::new(vec![]).is_err());
    }

    #[test]
    fn alignment_mode_parses() {
        assert_eq!("forward".parse::<AlignmentMode>().unwrap(), AlignmentMode::Forward);
        assert_eq!(
            "reference:1990".parse::<AlignmentMode>().unwrap(),
            AlignmentMode::Reference(1990)
        );
        assert!("sideways".parse::<AlignmentMode>().is_err());
    }
}
