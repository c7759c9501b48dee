//! Readers and writers for the word2vec text and binary vector formats.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::space::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::format::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorFormat {
    Text,
    Binary,
}

impl FromStr for VectorFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "text-word2vec" | "text" => Ok(VectorFormat::Text),
            "binary-word2vec" | "binary" => Ok(VectorFormat::Binary),
            other => Err(Error::Input(format!("unknown vector format `{other}`"))),
        }
    }
}

impl fmt::Display for VectorFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VectorFormat::Text => "text-word2vec",
            VectorFormat::Binary => "binary-word2vec",
        })
    }
}

/// Loads one decade's space from `path`.
pub fn load_embedding_space(
    path: impl AsRef<Path>,
    format: VectorFormat,
    decade: i32,
) -> Result<EmbeddingSpace> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    match format {
        VectorFormat::Text => read_text(&mut reader, path, decade),
        VectorFormat::Binary => read_binary(&mut reader, path, decade),
    }
}

fn parse_header(line: &str, path: &Path) -> Result<(usize, usize)> {
    let mut parts = line.split_whitespace();
    let mut field = |name: &str| -> Result<usize> {
        parts
            .next()
            .ok_or_else(|| Error::parse(path, 1, format!("header is missing {name}")))?
            .parse::<usize>()
            .map_err(|e| Error::parse(path, 1, format!("bad {name} in header: {e}")))
    };
    let count = field("vocabulary size")?;
    let dim = field("dimension")?;
    if parts.next().is_some() {
        return Err(Error::parse(path, 1, "header has trailing fields"));
    }
    if dim == 0 {
        return Err(Error::parse(path, 1, "header declares dimension 0"));
    }
    Ok((count, dim))
}

/// Reads the text format: `"<count> <dim>"` then one `"<word> <v1> .. <vdim>"`
/// row per entry.
pub fn read_text<R: BufRead>(reader: &mut R, path: &Path, decade: i32) -> Result<EmbeddingSpace> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::parse(path, 1, "missing header")),
    };
    let (count, dim) = parse_header(&header, path)?;
    let mut space = EmbeddingSpace::new(decade, dim)?;
    let mut values = vec![0.0f32; dim];
    let mut rows = 0usize;
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().unwrap_or_default();
        let mut n = 0;
        for field in fields {
            if n == dim {
                n += 1;
                break;
            }
            values[n] = field
                .parse::<f32>()
                .map_err(|e| Error::parse(path, lineno, format!("bad value `{field}`: {e}")))?;
            n += 1;
        }
        if n != dim {
            return Err(Error::Format(format!(
                "{}:{lineno}: row for `{word}` has {} values, header declares {dim}",
                path.display(),
                if n > dim {
                    line.split_whitespace().count() - 1
                } else {
                    n
                }
            )));
        }
        space
            .push(word.to_string(), &values)
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        rows += 1;
    }
    if rows != count {
        return Err(Error::parse(
            path,
            1,
            format!("header declares {count} rows, file has {rows}"),
        ));
    }
    space.finish()
}

fn read_token<R: BufRead>(reader: &mut R, path: &Path, entry: usize) -> Result<String> {
    let mut bytes = Vec::new();
    loop {
        let mut byte = [0u8; 1];
        match reader.read(&mut byte) {
            Ok(0) => {
                return Err(Error::parse(
                    path,
                    entry,
                    "unexpected end of file while reading word",
                ))
            }
            Ok(_) => {}
            Err(e) => return Err(Error::io(path, e)),
        }
        match byte[0] {
            b' ' if !bytes.is_empty() => break,
            b'\n' | b'\r' | b' ' if bytes.is_empty() => continue,
            b => bytes.push(b),
        }
    }
    String::from_utf8(bytes).map_err(|e| Error::parse(path, entry, format!("word is not UTF-8: {e}")))
}

/// Reads the binary format: ASCII header line, then per entry `"<word> "`
/// followed by `dim` little-endian `f32`s. The reported "line" of an error is
/// the 1-based entry number (the header being entry 1).
pub fn read_binary<R: BufRead>(reader: &mut R, path: &Path, decade: i32) -> Result<EmbeddingSpace> {
    let mut header = String::new();
    reader
        .read_line(&mut header)
        .map_err(|e| Error::io(path, e))?;
    if header.is_empty() {
        return Err(Error::parse(path, 1, "missing header"));
    }
    let (count, dim) = parse_header(&header, path)?;
    let mut space = EmbeddingSpace::new(decade, dim)?;
    let mut values = vec![0.0f32; dim];
    for i in 0..count {
        let entry = i + 2;
        let word = read_token(reader, path, entry)?;
        reader
            .read_f32_into::<LittleEndian>(&mut values)
            .map_err(|_| {
                Error::Format(format!(
                    "{}: entry {entry} (`{word}`) is truncated; expected {dim} floats",
                    path.display()
                ))
            })?;
        space
            .push(word, &values)
            .map_err(|e| Error::parse(path, entry, e.to_string()))?;
    }
    space.finish()
}

/// Writes the text format with 17 significant digits per value.
pub fn write_text<W: Write>(space: &EmbeddingSpace, writer: &mut W) -> std::io::Result<()> {
    writeln!(writer, "{} {}", space.len(), space.dim())?;
    for (i, word) in space.words().iter().enumerate() {
        write!(writer, "{word}")?;
        for &v in space.row_at(i) {
            write!(writer, " {}", fmt_f64(f64::from(v)))?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

pub fn write_binary<W: Write>(space: &EmbeddingSpace, writer: &mut W) -> std::io::Result<()> {
    writeln!(writer, "{} {}", space.len(), space.dim())?;
    for (i, word) in space.words().iter().enumerate() {
        writer.write_all(word.as_bytes())?;
        writer.write_all(b" ")?;
        for &v in space.row_at(i) {
            writer.write_f32::<LittleEndian>(v)?;
        }
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_embedding_space(
    space: &EmbeddingSpace,
    path: impl AsRef<Path>,
    format: VectorFormat,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    match format {
        VectorFormat::Text => write_text(space, &mut writer),
        VectorFormat::Binary => write_binary(space, &mut writer),
    }
    .and_then(|_| writer.flush())
    .map_err(|e| Error::io(path, e))
}
