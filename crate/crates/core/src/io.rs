//! File formats: binary map files, CSV maps and curves, JSON result documents.
//!
//! A map file is a 24-byte little-endian header followed by one `f64` per pixel:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "SRFM"
//!      4     4  version (u32) = 1
//!      8     4  nside (u32)
//!     12     4  ordering (u32): 0 = ring, 1 = nested
//!     16     8  pixel count (u64) = 12 nside^2
//!     24   8 n  values (f64)
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimator::SphericalMap;
use crate::fitting::FitResult;
use crate::models::{Provenance as CurveProvenance, RenyiCurve, SpectrumCurve, ValidityReport};
use crate::sphere::{Ordering, PixelGrid};

pub const MAP_MAGIC: &[u8; 4] = b"SRFM";
pub const MAP_VERSION: u32 = 1;
pub const MAP_HEADER_LEN: usize = 24;
pub const RESULT_SCHEMA: &str = "sphere-renyi/result/v1";

pub fn encode_map(map: &SphericalMap) -> Vec<u8> {
    let grid = map.grid();
    let mut out = Vec::with_capacity(MAP_HEADER_LEN + 8 * map.values().len());
    out.extend_from_slice(MAP_MAGIC);
    out.extend_from_slice(&MAP_VERSION.to_le_bytes());
    out.extend_from_slice(&grid.nside().to_le_bytes());
    let ordering: u32 = match grid.ordering() {
        Ordering::Ring => 0,
        Ordering::Nested => 1,
    };
    out.extend_from_slice(&ordering.to_le_bytes());
    out.extend_from_slice(&grid.pixel_count().to_le_bytes());
    for v in map.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_map(bytes: &[u8]) -> Result<SphericalMap> {
    if bytes.len() < MAP_HEADER_LEN {
        return Err(Error::Malformed(format!("map file has {} bytes, shorter than its header", bytes.len())));
    }
    if &bytes[0..4] != MAP_MAGIC {
        return Err(Error::Malformed("map file does not start with SRFM".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let version = u32_at(4);
    if version != MAP_VERSION {
        return Err(Error::Malformed(format!("unsupported map file version {version}")));
    }
    let nside = u32_at(8);
    let ordering = match u32_at(12) {
        0 => Ordering::Ring,
        1 => Ordering::Nested,
        other => return Err(Error::Malformed(format!("unknown ordering code {other}"))),
    };
    let count = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes"));
    let grid = PixelGrid::new(nside, ordering)?;
    if count != grid.pixel_count() {
        return Err(Error::Malformed(format!("header counts {count} pixels, nside {nside} has {}", grid.pixel_count())));
    }
    let payload = &bytes[MAP_HEADER_LEN..];
    if payload.len() as u64 != 8 * count {
        return Err(Error::Malformed(format!("payload has {} bytes, expected {}", payload.len(), 8 * count)));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    SphericalMap::new(grid, values)
}

pub fn write_map_file(path: &Path, map: &SphericalMap) -> Result<()> {
    fs::write(path, encode_map(map))?;
    Ok(())
}

pub fn read_map_file(path: &Path) -> Result<SphericalMap> {
    decode_map(&fs::read(path)?)
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i, l.split(',').map(str::trim).collect()))
}

fn is_header(fields: &[&str]) -> bool {
    fields.first().is_some_and(|f| f.parse::<f64>().is_err())
}

/// Parses `pixel_index,value` rows. Every pixel must appear exactly once; the
/// grid size is inferred from the row count.
pub fn parse_map_csv(text: &str, ordering: Ordering) -> Result<SphericalMap> {
    let mut rows = Vec::new();
    for (n, (line, fields)) in data_lines(text).enumerate() {
        if n == 0 && is_header(&fields) {
            continue;
        }
        if fields.len() != 2 {
            return Err(Error::Malformed(format!("line {line}: expected pixel_index,value")));
        }
        let index: u64 = fields[0]
            .parse()
            .map_err(|_| Error::Malformed(format!("line {line}: bad pixel index '{}'", fields[0])))?;
        let value: f64 = fields[1]
            .parse()
            .map_err(|_| Error::Malformed(format!("line {line}: bad value '{}'", fields[1])))?;
        rows.push((index, value));
    }
    let count = rows.len() as u64;
    let nside = ((count / 12) as f64).sqrt().round() as u32;
    if count == 0 || 12 * (nside as u64) * (nside as u64) != count {
        return Err(Error::Malformed(format!("{count} rows is not 12 nside^2 for any nside")));
    }
    let grid = PixelGrid::new(nside, ordering)?;
    let mut values = vec![f64::NAN; count as usize];
    let mut seen = vec![false; count as usize];
    for (index, value) in rows {
        if index >= count {
            return Err(Error::PixelOutOfRange { index, nside });
        }
        if std::mem::replace(&mut seen[index as usize], true) {
            return Err(Error::Malformed(format!("pixel {index} listed twice")));
        }
        values[index as usize] = value;
    }
    SphericalMap::new(grid, values)
}

/// Parses `q,T` rows into an empirical curve.
pub fn parse_curve_csv(text: &str, source: &str) -> Result<RenyiCurve> {
    let mut q = Vec::new();
    let mut t = Vec::new();
    for (n, (line, fields)) in data_lines(text).enumerate() {
        if n == 0 && is_header(&fields) {
            continue;
        }
        if fields.len() < 2 {
            return Err(Error::Malformed(format!("line {line}: expected q,T")));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Malformed(format!("line {line}: bad number '{s}'")));
        q.push(parse(fields[0])?);
        t.push(parse(fields[1])?);
    }
    RenyiCurve::new(q, t, CurveProvenance::Empirical { source: source.to_string() })
        .map_err(|e| Error::Malformed(format!("curve file: {e}")))
}

/// CSV with columns `q,T,alpha,f`.
pub fn curves_to_csv(curve: &RenyiCurve, spectrum: &SpectrumCurve) -> String {
    let mut out = String::from("q,T,alpha,f\n");
    for i in 0..curve.q.len() {
        out.push_str(&format!("{},{},{},{}\n", curve.q[i], curve.t[i], spectrum.alpha[i], spectrum.f[i]));
    }
    out
}

/// Where a result came from: enough to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunProvenance {
    pub command: String,
    pub seed: Option<u64>,
    /// SHA-256 of the canonical JSON of the run configuration.
    pub config_hash: String,
    pub version: String,
}

impl RunProvenance {
    pub fn new<C: Serialize>(command: &str, seed: Option<u64>, config: &C) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            seed,
            config_hash: config_hash(config)?,
            version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }
}

pub fn config_hash<C: Serialize>(config: &C) -> Result<String> {
    let canonical = serde_json::to_vec(&serde_json::to_value(config)?)?;
    let digest = Sha256::digest(&canonical);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema: String,
    pub q: Vec<f64>,
    #[serde(rename = "T")]
    pub t: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<f64>>,
    #[serde(default)]
    pub fits: Vec<FitResult>,
    #[serde(default)]
    pub validity: Vec<ValidityReport>,
    pub provenance: RunProvenance,
}

impl ResultDocument {
    pub fn new(curve: &RenyiCurve, spectrum: Option<&SpectrumCurve>, provenance: RunProvenance) -> Self {
        Self {
            schema: RESULT_SCHEMA.to_string(),
            q: curve.q.clone(),
            t: curve.t.clone(),
            alpha: spectrum.map(|s| s.alpha.clone()),
            f: spectrum.map(|s| s.f.clone()),
            fits: Vec::new(),
            validity: Vec::new(),
            provenance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != RESULT_SCHEMA {
            return Err(Error::Malformed(format!("unknown result schema '{}'", self.schema)));
        }
        let n = self.q.len();
        let same = |name: &str, len: usize| {
            if len == n {
                Ok(())
            } else {
                Err(Error::Malformed(format!("{name} has {len} entries, q has {n}")))
            }
        };
        same("T", self.t.len())?;
        if let Some(a) = &self.alpha {
            same("alpha", a.len())?;
        }
        if let Some(f) = &self.f {
            same("f", f.len())?;
        }
        if self.q.iter().chain(&self.t).any(|v| !v.is_finite()) {
            return Err(Error::Malformed("q and T must be finite".into()));
        }
        for fit in &self.fits {
            if fit.residuals.len() != n {
                return Err(Error::Malformed(format!("{} fit has {} residuals, q has {n}", fit.family, fit.residuals.len())));
            }
        }
        if self.provenance.config_hash.len() != 64 {
            return Err(Error::Malformed("provenance config hash is not a SHA-256 hex digest".into()));
        }
        Ok(())
    }

    pub fn curve(&self) -> Result<RenyiCurve> {
        RenyiCurve::new(
            self.q.clone(),
            self.t.clone(),
            CurveProvenance::Empirical { source: format!("result document ({})", self.provenance.command) },
        )
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| Error::Malformed(format!("result document: {e}")))?;
        doc.validate()?;
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_map(ordering: Ordering) -> SphericalMap {
        let grid = PixelGrid::new(2, ordering).unwrap();
        SphericalMap::new(grid, (0..48).map(|i| i as f64 * 0.5 - 3.0).collect()).unwrap()
    }

    #[test]
    fn map_round_trip_is_bit_exact() {
        for ordering in [Ordering::Ring, Ordering::Nested] {
            let map = sample_map(ordering);
            let bytes = encode_map(&map);
            assert_eq!(bytes.len(), 24 + 48 * 8);
            assert_eq!(&bytes[..4], b"SRFM");
            assert_eq!(decode_map(&bytes).unwrap(), map);
        }
    }

    #[test]
    fn map_header_errors() {
        let bytes = encode_map(&sample_map(Ordering::Ring));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_map(&bad), Err(Error::Malformed(_))));
        assert!(decode_map(&bytes[..bytes.len() - 8]).is_err());
        let mut v = bytes.clone();
        v[4] = 2;
        assert!(decode_map(&v).is_err());
        let mut o = bytes;
        o[12] = 7;
        assert!(decode_map(&o).is_err());
    }

    #[test]
    fn csv_map() {
        let mut text = String::from("pixel_index,value\n");
        for i in (0..12).rev() {
            text.push_str(&format!("{i},{}\n", i * 2));
        }
        let map = parse_map_csv(&text, Ordering::Ring).unwrap();
        assert_eq!(map.values()[5], 10.0);
        assert!(parse_map_csv("0,1\n1,2\n", Ordering::Ring).is_err());
        let dup = (0..12).map(|i| format!("{},1\n", i.min(10))).collect::<String>();
        assert!(parse_map_csv(&dup, Ordering::Ring).is_err());
    }

    #[test]
    fn csv_curve() {
        let c = parse_curve_csv("q,T\n1,0\n2,0.5\n", "x").unwrap();
        assert_eq!(c.t, vec![0.0, 0.5]);
        assert!(parse_curve_csv("1,0\n1,0\n", "x").is_err());
        assert!(parse_curve_csv("1,abc\n", "x").is_err());
    }

    #[test]
    fn document_round_trip() {
        let curve = parse_curve_csv("1,0\n2,1\n", "x").unwrap();
        let prov = RunProvenance::new("estimate", Some(3), &("cfg", 1)).unwrap();
        let doc = ResultDocument::new(&curve, None, prov);
        let text = doc.to_json().unwrap();
        assert_eq!(ResultDocument::from_json(&text).unwrap(), doc);
        let mut broken = doc.clone();
        broken.t.pop();
        assert!(broken.to_json().is_err());
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash(&[1, 2]).unwrap(), config_hash(&[1, 2]).unwrap());
        assert_ne!(config_hash(&[1, 2]).unwrap(), config_hash(&[2, 1]).unwrap());
    }
}
