use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::waveform::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endianness {
    Little,
    Big,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    I16,
    F32,
    F64,
}

impl Dtype {
    pub fn size(&self) -> usize {
        match self {
            Dtype::I16 => 2,
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

/// Raw sample file description. Decoded value = raw * `scale` volts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryLayout {
    pub endianness: Endianness,
    pub dtype: Dtype,
    #[serde(default)]
    pub header_bytes: usize,
    pub scale: f64,
    /// Expected sample count; `None` reads to the end of the file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
}

impl BinaryLayout {
    pub fn new(dtype: Dtype, endianness: Endianness) -> Self {
        Self { endianness, dtype, header_bytes: 0, scale: 1.0, n_samples: None }
    }

    pub fn with_scale(self, scale: f64) -> Self {
        Self { scale, ..self }
    }

    /// Short name such as `i16le` or `f64be`.
    pub fn short_name(&self) -> String {
        let dtype = match self.dtype {
            Dtype::I16 => "i16",
            Dtype::F32 => "f32",
            Dtype::F64 => "f64",
        };
        let end = match self.endianness {
            Endianness::Little => "le",
            Endianness::Big => "be",
        };
        format!("{dtype}{end}")
    }
}

impl FromStr for BinaryLayout {
    type Err = IngestError;

    /// Parses `i16le`, `f32be`, `f64le` and so on, with unit scale.
    fn from_str(s: &str) -> Result<Self, IngestError> {
        let unknown = || IngestError::UnknownLayout(s.to_string());
        if s.len() != 5 {
            return Err(unknown());
        }
        let dtype = match &s[..3] {
            "i16" => Dtype::I16,
            "f32" => Dtype::F32,
            "f64" => Dtype::F64,
            _ => return Err(unknown()),
        };
        let endianness = match &s[3..] {
            "le" => Endianness::Little,
            "be" => Endianness::Big,
            _ => return Err(unknown()),
        };
        Ok(BinaryLayout::new(dtype, endianness))
    }
}

pub fn read_binary_waveform(path: &Path, layout: &BinaryLayout, sample_rate: f64) -> Result<Waveform, IngestError> {
    if !(layout.scale.is_finite() && layout.scale != 0.0) {
        return Err(IngestError::UnknownLayout(format!("scale {} must be finite and non-zero", layout.scale)));
    }
    let bytes = fs::read(path).map_err(|source| IngestError::Io { path: path.into(), source })?;
    let size = layout.dtype.size();
    let payload = bytes.len().saturating_sub(layout.header_bytes);
    let count = match layout.n_samples {
        Some(n) => n,
        None => {
            if payload % size != 0 || bytes.len() < layout.header_bytes {
                let needed = layout.header_bytes + payload.div_ceil(size) * size;
                return Err(IngestError::TruncatedFile { path: path.into(), needed, actual: bytes.len() });
            }
            payload / size
        }
    };
    let needed = layout.header_bytes + count * size;
    if bytes.len() < needed {
        return Err(IngestError::TruncatedFile { path: path.into(), needed, actual: bytes.len() });
    }
    if count == 0 {
        return Err(IngestError::EmptyFile { path: path.into() });
    }
    let data = &bytes[layout.header_bytes..needed];
    let little = layout.endianness == Endianness::Little;
    let samples: Vec<f64> = match layout.dtype {
        Dtype::I16 => data
            .chunks_exact(2)
            .map(|c| {
                let b = [c[0], c[1]];
                f64::from(if little { i16::from_le_bytes(b) } else { i16::from_be_bytes(b) })
            })
            .collect(),
        Dtype::F32 => data
            .chunks_exact(4)
            .map(|c| {
                let b = [c[0], c[1], c[2], c[3]];
                f64::from(if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) })
            })
            .collect(),
        Dtype::F64 => data
            .chunks_exact(8)
            .map(|c| {
                let b: [u8; 8] = c.try_into().expect("chunk of 8");
                if little {
                    f64::from_le_bytes(b)
                } else {
                    f64::from_be_bytes(b)
                }
            })
            .collect(),
    };
    let samples = if layout.scale == 1.0 { samples } else { samples.into_iter().map(|v| v * layout.scale).collect() };
    Waveform::new(samples, sample_rate).map_err(|source| IngestError::Waveform { path: path.into(), source })
}

/// Encode samples; integer types are rounded to the nearest count and saturated.
pub fn write_binary_waveform(path: &Path, w: &Waveform, layout: &BinaryLayout) -> Result<(), IngestError> {
    let mut out = vec![0u8; layout.header_bytes];
    out.reserve(w.len() * layout.dtype.size());
    let little = layout.endianness == Endianness::Little;
    for &v in w.samples() {
        let raw = if layout.scale == 1.0 { v } else { v / layout.scale };
        match layout.dtype {
            Dtype::I16 => {
                let q = raw.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
                out.extend_from_slice(&if little { q.to_le_bytes() } else { q.to_be_bytes() });
            }
            Dtype::F32 => {
                let q = raw as f32;
                out.extend_from_slice(&if little { q.to_le_bytes() } else { q.to_be_bytes() });
            }
            Dtype::F64 => out.extend_from_slice(&if little { raw.to_le_bytes() } else { raw.to_be_bytes() }),
        }
    }
    fs::write(path, out).map_err(|source| IngestError::Io { path: path.into(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_short_layout_names() {
        let l: BinaryLayout = "i16le".parse().unwrap();
        assert_eq!((l.dtype, l.endianness), (Dtype::I16, Endianness::Little));
        assert_eq!("f64be".parse::<BinaryLayout>().unwrap().short_name(), "f64be");
        for bad in ["i32le", "f64", "i16xx", ""] {
            assert!(matches!(bad.parse::<BinaryLayout>(), Err(IngestError::UnknownLayout(_))));
        }
    }

    #[test]
    fn decodes_scaled_int16() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let raw: Vec<i16> = (0..10048).map(|i| (i % 2000) as i16 - 1000).collect();
        let bytes: Vec<u8> = raw.iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(f.path(), bytes).unwrap();
        let layout = BinaryLayout::new(Dtype::I16, Endianness::Little).with_scale(0.5e-3);
        let w = read_binary_waveform(f.path(), &layout, 12.5e6).unwrap();
        assert_eq!(w.len(), 10048);
        for (v, r) in w.samples().iter().zip(&raw) {
            assert_eq!(*v, f64::from(*r) * 0.5e-3);
        }
    }

    #[test]
    fn header_and_big_endian() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let mut bytes = vec![0xAA; 16];
        for v in [1.5f32, -2.0, 0.25] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        fs::write(f.path(), bytes).unwrap();
        let layout = BinaryLayout { header_bytes: 16, ..BinaryLayout::new(Dtype::F32, Endianness::Big) };
        let w = read_binary_waveform(f.path(), &layout, 1.0).unwrap();
        assert_eq!(w.samples(), &[1.5, -2.0, 0.25]);
    }

    #[test]
    fn short_file_is_truncated() {
        let f = tempfile::NamedTempFile::new().unwrap();
        fs::write(f.path(), vec![0u8; 2 * 100]).unwrap();
        let layout = BinaryLayout { n_samples: Some(10048), ..BinaryLayout::new(Dtype::I16, Endianness::Little) };
        assert!(matches!(
            read_binary_waveform(f.path(), &layout, 12.5e6),
            Err(IngestError::TruncatedFile { needed: 20096, actual: 200, .. })
        ));
        fs::write(f.path(), vec![0u8; 7]).unwrap();
        let layout = BinaryLayout::new(Dtype::F64, Endianness::Little);
        assert!(matches!(read_binary_waveform(f.path(), &layout, 1.0), Err(IngestError::TruncatedFile { .. })));
    }

    #[test]
    fn int16_roundtrip_within_one_step() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let w = Waveform::new((0..500).map(|i| (i as f64 * 0.05).sin() * 0.8).collect(), 1e6).unwrap();
        let layout = BinaryLayout::new(Dtype::I16, Endianness::Big).with_scale(1e-4);
        write_binary_waveform(f.path(), &w, &layout).unwrap();
        let back = read_binary_waveform(f.path(), &layout, 1e6).unwrap();
        for (a, b) in w.samples().iter().zip(back.samples()) {
            assert!((a - b).abs() <= 1e-4);
        }
    }
}
