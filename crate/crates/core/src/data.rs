//! Observational datasets: CSV I/O, column schema and dequantized model space.
//!
//! A dataset file is UTF-8 CSV with the header `a,y` and one decimal
//! floating-point pair per row. Discrete columns hold class labels
//! `0..K`; they are dequantized before fitting.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::DequantSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum VarKind {
    Continuous,
    Discrete(usize),
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarKind::Continuous => write!(f, "continuous"),
            VarKind::Discrete(k) => write!(f, "discrete:{k}"),
        }
    }
}

impl FromStr for VarKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "continuous" {
            return Ok(VarKind::Continuous);
        }
        if let Some(k) = s.strip_prefix("discrete:") {
            let k: usize = k
                .parse()
                .map_err(|_| Error::Schema(format!("bad class count in {s:?}")))?;
            if k < 2 {
                return Err(Error::Schema(format!("discrete column needs at least 2 classes: {s:?}")));
            }
            return Ok(VarKind::Discrete(k));
        }
        Err(Error::Schema(format!("unknown column kind {s:?} (continuous | discrete:K)")))
    }
}

impl From<VarKind> for String {
    fn from(k: VarKind) -> String {
        k.to_string()
    }
}

impl TryFrom<String> for VarKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Kinds of the treatment column `a` and outcome column `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub a: VarKind,
    pub y: VarKind,
}

impl Schema {
    pub const CONTINUOUS: Schema = Schema { a: VarKind::Continuous, y: VarKind::Continuous };
    pub const BINARY: Schema = Schema { a: VarKind::Discrete(2), y: VarKind::Discrete(2) };
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub pairs: Vec<(f64, f64)>,
}

impl Dataset {
    pub fn new(pairs: Vec<(f64, f64)>) -> Self {
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
            .clone();
        if header.len() != 2 || header.get(0).map(str::trim) != Some("a") || header.get(1).map(str::trim) != Some("y") {
            return Err(Error::Parse { line: 1, message: format!("expected header `a,y`, got {:?}", header.as_slice()) });
        }
        let mut pairs = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let field = |i: usize| -> Result<f64> {
                let raw = record.get(i).unwrap_or("").trim();
                let v: f64 = raw
                    .parse()
                    .map_err(|_| Error::Parse { line, message: format!("column {i}: cannot parse {raw:?} as a number") })?;
                if !v.is_finite() {
                    return Err(Error::Parse { line, message: format!("column {i}: non-finite value") });
                }
                Ok(v)
            };
            pairs.push((field(0)?, field(1)?));
        }
        Ok(Self { pairs })
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "a,y")?;
        for (a, y) in &self.pairs {
            writeln!(writer, "{a},{y}")?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut out)?;
        out.flush()?;
        Ok(())
    }

    /// Checks every discrete column holds labels in `0..K`.
    pub fn check_schema(&self, schema: &Schema) -> Result<()> {
        for (i, &(a, y)) in self.pairs.iter().enumerate() {
            for (name, kind, v) in [("a", schema.a, a), ("y", schema.y, y)] {
                if let VarKind::Discrete(k) = kind {
                    DequantSpec::with_classes(k)?
                        .class_of(v)
                        .map_err(|e| Error::Schema(format!("row {}: column {name}: {e}", i + 1)))?;
                }
            }
        }
        Ok(())
    }

    /// Dequantizes discrete columns; continuous columns pass through.
    /// Deterministic given `seed`.
    pub fn to_model_space(&self, schema: &Schema, seed: u64) -> Result<ModelSpace> {
        self.check_schema(schema)?;
        let codec = |kind: VarKind| match kind {
            VarKind::Continuous => Ok(None),
            VarKind::Discrete(k) => DequantSpec::with_classes(k).map(Some),
        };
        let treatment = codec(schema.a)?;
        let outcome = codec(schema.y)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for &(a, y) in &self.pairs {
            let a = match &treatment {
                Some(c) => c.encode(c.class_of(a)?, &mut rng)?,
                None => a,
            };
            let y = match &outcome {
                Some(c) => c.encode(c.class_of(y)?, &mut rng)?,
                None => y,
            };
            pairs.push((a, y));
        }
        Ok(ModelSpace { pairs, treatment, outcome })
    }
}

/// Continuous pairs ready for fitting, with the codecs needed to interpret
/// interventions and decode sampled outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpace {
    pub pairs: Vec<(f64, f64)>,
    pub treatment: Option<DequantSpec>,
    pub outcome: Option<DequantSpec>,
}

impl ModelSpace {
    pub fn continuous(pairs: Vec<(f64, f64)>) -> Self {
        Self { pairs, treatment: None, outcome: None }
    }

    /// Treatment value representing class (or level) `level`.
    pub fn treatment_value(&self, level: f64) -> f64 {
        match &self.treatment {
            Some(c) => c.center(level as usize),
            None => level,
        }
    }
}
