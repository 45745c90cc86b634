use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Result, SegalignError};
use crate::segmatch::BowSequence;
use crate::sequence::Sequence;

/// A named collection of sequences sharing one dimensionality.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub sequences: Vec<Sequence>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, sequences: Vec<Sequence>) -> Result<Self> {
        if let Some(first) = sequences.first() {
            for s in &sequences[1..] {
                first.check_same_dim(s)?;
            }
        }
        Ok(Self {
            name: name.into(),
            sequences,
        })
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Fails unless every sequence carries a label.
    pub fn require_labels(&self) -> Result<()> {
        match self.sequences.iter().position(|s| s.label().is_none()) {
            Some(i) => Err(SegalignError::InvalidArgument(format!(
                "sequence {} of `{}` has no label",
                i + 1,
                self.name
            ))),
            None => Ok(()),
        }
    }
}

/// Parses the UCR text layout: one sequence per line, the label first, then
/// the values, separated by commas or whitespace.
pub fn parse_ucr(text: &str, name: &str) -> Result<Dataset> {
    let mut sequences = Vec::new();
    let mut width: Option<(usize, usize)> = None;
    for (no, line) in text.lines().enumerate() {
        let line_no = no + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let mut fields = t.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty());
        let label = fields.next().expect("nonempty line has a field").to_string();
        let values = fields
            .map(|f| {
                f.parse::<f64>().map_err(|_| SegalignError::Parse {
                    line: line_no,
                    msg: format!("`{f}` is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            return Err(SegalignError::Parse {
                line: line_no,
                msg: "no values after the label".into(),
            });
        }
        match width {
            None => width = Some((values.len(), line_no)),
            Some((w, first)) if w != values.len() => {
                return Err(SegalignError::Parse {
                    line: line_no,
                    msg: format!("ragged row: {} values, line {first} has {w}", values.len()),
                })
            }
            _ => {}
        }
        let id = format!("{name}:{}", sequences.len() + 1);
        let seq = Sequence::univariate(id, Some(label), values).map_err(|e| SegalignError::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        sequences.push(seq);
    }
    if sequences.is_empty() {
        return Err(SegalignError::EmptyInput(format!("`{name}` holds no sequences")));
    }
    Dataset::new(name, sequences)
}

pub fn load_ucr(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_ucr(&text, &name)
}

/// Comma-separated UCR text for univariate data; unlabeled sequences get `0`.
pub fn format_ucr(data: &Dataset) -> Result<String> {
    let mut out = String::new();
    for s in &data.sequences {
        if s.dim() != 1 {
            return Err(SegalignError::InvalidArgument("the UCR layout holds univariate sequences only".into()));
        }
        out.push_str(s.label().unwrap_or("0"));
        for v in s.values() {
            // `{}` prints the shortest string that reads back to the same f64
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_ucr(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    fs::write(path, format_ucr(data)?)?;
    Ok(())
}

/// Reads a single sequence from CSV: one time point per line, features
/// separated by commas or whitespace. `#` lines are comments.
pub fn read_sequence_csv(path: impl AsRef<Path>) -> Result<Sequence> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let row = t
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .map(|f| {
                f.parse::<f64>().map_err(|_| SegalignError::Parse {
                    line: no + 1,
                    msg: format!("`{f}` is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(SegalignError::Parse {
                    line: no + 1,
                    msg: format!("expected {first} features, found {}", row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(SegalignError::EmptyInput(format!("{} holds no samples", path.display())));
    }
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Sequence::from_rows(id, None, &rows)
}

pub fn format_sequence_csv(s: &Sequence) -> String {
    let mut out = String::new();
    for row in s.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Loads BoW sequences listed in an index file, one `<file> <label>` per
/// line, with paths relative to the index.
pub fn load_bow_index(index: impl AsRef<Path>) -> Result<Vec<BowSequence>> {
    let index = index.as_ref();
    let dir = index.parent().unwrap_or_else(|| Path::new("."));
    let text = fs::read_to_string(index)?;
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut parts = t.split_whitespace();
        let (Some(file), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(SegalignError::Parse {
                line: no + 1,
                msg: "expected `<file> <label>`".into(),
            });
        };
        let f = fs::File::open(dir.join(file))?;
        out.push(BowSequence::read(file, Some(label.to_string()), std::io::BufReader::new(f))?);
    }
    if out.is_empty() {
        return Err(SegalignError::EmptyInput(format!("{} lists no sequences", index.display())));
    }
    if let Some(b) = out.iter().find(|b| b.bins() != out[0].bins()) {
        return Err(SegalignError::BinMismatch(out[0].bins(), b.bins()));
    }
    Ok(out)
}

pub fn format_bow(b: &BowSequence) -> String {
    let mut out = format!("#H={}\n", b.bins());
    for frame in b.histograms() {
        let line: Vec<String> = frame.iter().map(|v| format!("{}", *v as u64)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
