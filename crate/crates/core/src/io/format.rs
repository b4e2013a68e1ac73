//! Raster file formats.
//!
//! Every file is one line of UTF-8 JSON terminated by `\n`, followed by a raw
//! little-endian payload in row-major order:
//!
//! | ext    | magic  | dtype   | payload                                   |
//! |--------|--------|---------|-------------------------------------------|
//! | `.hsc` | `HSC1` | `f32le` | `bands` planes of `height*width`          |
//! | `.hsl` | `HSL1` | `u16le` | labels, 0 = unlabeled                     |
//! | `.hsp` | `HSP1` | `u16le` | predicted classes, `1..=num_classes`      |
//! | `.hss` | `HSS1` | `u32le` | segment ids `0..num_segments`             |
//! | `.hsa` | `HSA1` | `f32le` | right-affinity plane, then down-affinity  |
//! | `.hsm` | `HSM1` | `u8`    | 0 or 1 per pixel                          |
//!
//! Header keys appear in the order `magic, height, width, bands, num_classes,
//! num_segments, dtype, name`; absent keys are omitted.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{AffinityMap, ClassMap, Dims, HyperCube, LabelMap, PixelMask, SuperpixelMap};

pub const CUBE_MAGIC: &str = "HSC1";
pub const LABELS_MAGIC: &str = "HSL1";
pub const CLASSMAP_MAGIC: &str = "HSP1";
pub const SUPERPIXELS_MAGIC: &str = "HSS1";
pub const AFFINITY_MAGIC: &str = "HSA1";
pub const MASK_MAGIC: &str = "HSM1";

const MAX_HEADER_BYTES: u64 = 64 * 1024;

/// Limits applied while reading untrusted files.
#[derive(Debug, Clone, Copy)]
pub struct ReadOptions {
    /// Largest payload a header may declare.
    pub max_payload_bytes: u64,
}

impl Default for ReadOptions {
    fn default() -> Self {
        Self { max_payload_bytes: 2 * 1024 * 1024 * 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RasterHeader {
    pub magic: String,
    pub height: usize,
    pub width: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bands: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_classes: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_segments: Option<usize>,
    pub dtype: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl RasterHeader {
    fn new(magic: &str, dims: Dims, dtype: &str) -> Self {
        Self {
            magic: magic.to_owned(),
            height: dims.height,
            width: dims.width,
            bands: None,
            num_classes: None,
            num_segments: None,
            dtype: dtype.to_owned(),
            name: None,
        }
    }

    fn expect(&self, magic: &str, dtype: &str) -> Result<()> {
        if self.magic != magic {
            return Err(Error::BadMagic { expected: magic.to_owned(), found: self.magic.clone() });
        }
        if self.dtype != dtype {
            return Err(Error::BadHeader(format!(
                "dtype {:?} not supported for {magic}, expected {dtype:?}",
                self.dtype
            )));
        }
        if self.height == 0 || self.width == 0 {
            return Err(Error::BadHeader(format!(
                "dimensions must be at least 1x1, got {}x{}",
                self.height, self.width
            )));
        }
        Ok(())
    }

    fn dims(&self) -> Dims {
        Dims::new(self.height, self.width)
    }

    fn to_line(&self) -> Vec<u8> {
        let mut line = serde_json::to_vec(self).expect("header serializes");
        line.push(b'\n');
        line
    }
}

/// Header of a `.hsc` cube file.
pub type CubeHeader = RasterHeader;

fn read_header<R: BufRead>(reader: &mut R) -> Result<RasterHeader> {
    let mut line = Vec::new();
    reader.take(MAX_HEADER_BYTES).read_until(b'\n', &mut line).map_err(|e| Error::BadHeader(e.to_string()))?;
    if line.last() != Some(&b'\n') {
        return Err(Error::BadHeader("missing newline-terminated JSON header".into()));
    }
    line.pop();
    // A non-JSON first line is most likely a different file type.
    serde_json::from_slice(&line).map_err(|e| {
        if line.first() != Some(&b'{') {
            Error::BadMagic {
                expected: "JSON header".into(),
                found: String::from_utf8_lossy(&line[..line.len().min(16)]).into_owned(),
            }
        } else {
            Error::BadHeader(e.to_string())
        }
    })
}

fn read_payload<R: Read>(reader: &mut R, elements: &[usize], elem_size: u64, opts: &ReadOptions) -> Result<Vec<u8>> {
    let mut expected = elem_size;
    for &n in elements {
        expected = expected
            .checked_mul(n as u64)
            .ok_or(Error::HeaderTooLarge { requested: u64::MAX, cap: opts.max_payload_bytes })?;
    }
    if expected > opts.max_payload_bytes {
        return Err(Error::HeaderTooLarge { requested: expected, cap: opts.max_payload_bytes });
    }
    let mut payload = Vec::with_capacity(expected as usize);
    reader.take(expected + 1).read_to_end(&mut payload).map_err(|e| Error::BadHeader(e.to_string()))?;
    let actual = payload.len() as u64;
    if actual < expected {
        return Err(Error::TruncatedPayload { expected, actual });
    }
    if actual > expected {
        let mut rest = Vec::new();
        let extra = reader.read_to_end(&mut rest).unwrap_or(0) as u64;
        return Err(Error::TrailingData { expected, actual: actual + extra });
    }
    Ok(payload)
}

fn f32s(bytes: &[u8]) -> Vec<f32> {
    bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect()
}

fn u16s(bytes: &[u8]) -> Vec<u16> {
    bytes.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect()
}

fn u32s(bytes: &[u8]) -> Vec<u32> {
    bytes.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect()
}

/// A raster type with a file representation.
pub trait RasterFile: Sized {
    fn encode(&self) -> Vec<u8>;
    fn decode_from<R: BufRead>(reader: &mut R, opts: &ReadOptions) -> Result<Self>;

    fn decode(bytes: &[u8]) -> Result<Self> {
        Self::decode_from(&mut &bytes[..], &ReadOptions::default())
    }
}

impl RasterFile for HyperCube {
    fn encode(&self) -> Vec<u8> {
        encode_cube(self, None)
    }

    fn decode_from<R: BufRead>(reader: &mut R, opts: &ReadOptions) -> Result<Self> {
        decode_cube(reader, opts).map(|(_, cube)| cube)
    }
}

fn encode_cube(cube: &HyperCube, name: Option<&str>) -> Vec<u8> {
    let mut header = RasterHeader::new(CUBE_MAGIC, cube.dims(), "f32le");
    header.bands = Some(cube.bands());
    header.name = name.map(str::to_owned);
    let mut out = header.to_line();
    out.reserve(cube.data().len() * 4);
    for v in cube.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode_cube<R: BufRead>(reader: &mut R, opts: &ReadOptions) -> Result<(CubeHeader, HyperCube)> {
    let header = read_header(reader)?;
    header.expect(CUBE_MAGIC, "f32le")?;
    let bands = match header.bands {
        Some(b) if b >= 1 => b,
        _ => return Err(Error::BadHeader("cube header needs bands >= 1".into())),
    };
    let payload = read_payload(reader, &[header.height, header.width, bands], 4, opts)?;
    let cube = HyperCube::new(header.height, header.width, bands, f32s(&payload))?;
    Ok((header, cube))
}

impl RasterFile for LabelMap {
    fn encode(&self) -> Vec<u8> {
        let mut out = RasterHeader::new(LABELS_MAGIC, self.dims(), "u16le").to_line();
        for v in self.labels() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    fn decode_from<R: BufRead>(reader: &mut R, opts: &ReadOptions) -> Result<Self> {
        let header = read_header(reader)?;
        header.expect(LABELS_MAGIC, "u16le")?;
        let payload = read_payload(reader, &[header.height, header.width], 2, opts)?;
        LabelMap::new(header.height, header.width, u16s(&payload))
    }
}

impl RasterFile for ClassMap {
    fn encode(&self) -> Vec<u8> {
        let mut header = RasterHeader::new(CLASSMAP_MAGIC, self.dims(), "u16le");
        header.num_classes = Some(self.num_classes());
        let mut out = header.to_line();
        for v in self.classes() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    fn decode_from<R: BufRead>(reader: &mut R, opts: &ReadOptions) -> Result<Self> {
        let header = read_header(reader)?;
        header.expect(CLASSMAP_MAGIC, "u16le")?;
        let num_classes =
            header.num_classes.ok_or_else(|| Error::BadHeader("class map header needs num_classes".into()))?;
        let payload = read_payload(reader, &[header.height, header.width], 2, opts)?;
        ClassMap::new(header.height, header.width, u16s(&payload), num_classes)
    }
}

impl RasterFile for SuperpixelMap {
    fn encode(&self) -> Vec<u8> {
        let mut header = RasterHeader::new(SUPERPIXELS_MAGIC, self.dims(), "u32le");
        header.num_segments = Some(self.num_segments());
        let mut out = header.to_line();
        for v in self.segment_ids() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    fn decode_from<R: BufRead>(reader: &mut R, opts: &ReadOptions) -> Result<Self> {
        let header = read_header(reader)?;
        header.expect(SUPERPIXELS_MAGIC, "u32le")?;
        let payload = read_payload(reader, &[header.height, header.width], 4, opts)?;
        let map = SuperpixelMap::new(header.height, header.width, u32s(&payload))?;
        if let Some(n) = header.num_segments {
            if n != map.num_segments() {
                return Err(Error::BadHeader(format!(
                    "header declares {n} segments, payload has {}",
                    map.num_segments()
                )));
            }
        }
        Ok(map)
    }
}

impl RasterFile for AffinityMap {
    fn encode(&self) -> Vec<u8> {
        let mut out = RasterHeader::new(AFFINITY_MAGIC, self.dims(), "f32le").to_line();
        for v in self.right().iter().chain(self.down()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    fn decode_from<R: BufRead>(reader: &mut R, opts: &ReadOptions) -> Result<Self> {
        let header = read_header(reader)?;
        header.expect(AFFINITY_MAGIC, "f32le")?;
        let payload = read_payload(reader, &[2, header.height, header.width], 4, opts)?;
        let mut values = f32s(&payload);
        let down = values.split_off(header.dims().len());
        AffinityMap::new(header.height, header.width, values, down)
    }
}

impl RasterFile for PixelMask {
    fn encode(&self) -> Vec<u8> {
        let mut out = RasterHeader::new(MASK_MAGIC, self.dims(), "u8").to_line();
        out.extend(self.bits().iter().map(|&b| b as u8));
        out
    }

    fn decode_from<R: BufRead>(reader: &mut R, opts: &ReadOptions) -> Result<Self> {
        let header = read_header(reader)?;
        header.expect(MASK_MAGIC, "u8")?;
        let payload = read_payload(reader, &[header.height, header.width], 1, opts)?;
        if let Some(pos) = payload.iter().position(|&b| b > 1) {
            return Err(Error::BadHeader(format!(
                "mask byte {} at {} is not 0 or 1",
                payload[pos],
                header.dims().location(pos)
            )));
        }
        PixelMask::new(header.height, header.width, payload.into_iter().map(|b| b == 1).collect())
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

/// Reads any raster type, with default limits.
pub fn read<T: RasterFile>(path: impl AsRef<Path>) -> Result<T> {
    read_with(path, &ReadOptions::default())
}

pub fn read_with<T: RasterFile>(path: impl AsRef<Path>, opts: &ReadOptions) -> Result<T> {
    let path = path.as_ref();
    T::decode_from(&mut open(path)?, opts)
}

pub fn write<T: RasterFile>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(&value.encode(), path.as_ref())
}

pub(crate) fn write_bytes(bytes: &[u8], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_cube(path: impl AsRef<Path>) -> Result<HyperCube> {
    read(path)
}

/// Reads a cube together with its header, which carries the optional dataset name.
pub fn read_cube_with_header(path: impl AsRef<Path>) -> Result<(CubeHeader, HyperCube)> {
    let path = path.as_ref();
    decode_cube(&mut open(path)?, &ReadOptions::default())
}

pub fn write_cube(cube: &HyperCube, path: impl AsRef<Path>) -> Result<()> {
    write(cube, path)
}

pub fn write_named_cube(cube: &HyperCube, name: &str, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(&encode_cube(cube, Some(name)), path.as_ref())
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelMap> {
    read(path)
}

pub fn write_labels(labels: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    write(labels, path)
}

pub fn read_classmap(path: impl AsRef<Path>) -> Result<ClassMap> {
    read(path)
}

pub fn write_classmap(map: &ClassMap, path: impl AsRef<Path>) -> Result<()> {
    write(map, path)
}

pub fn read_superpixels(path: impl AsRef<Path>) -> Result<SuperpixelMap> {
    read(path)
}

pub fn write_superpixels(map: &SuperpixelMap, path: impl AsRef<Path>) -> Result<()> {
    write(map, path)
}

pub fn read_affinity(path: impl AsRef<Path>) -> Result<AffinityMap> {
    read(path)
}

pub fn write_affinity(map: &AffinityMap, path: impl AsRef<Path>) -> Result<()> {
    write(map, path)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<PixelMask> {
    read(path)
}

pub fn write_mask(mask: &PixelMask, path: impl AsRef<Path>) -> Result<()> {
    write(mask, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube_bytes(header: &str, payload_len: usize) -> Vec<u8> {
        let mut bytes = header.as_bytes().to_vec();
        bytes.push(b'\n');
        bytes.extend(std::iter::repeat_n(0u8, payload_len));
        bytes
    }

    #[test]
    fn header_layout_is_fixed() {
        let cube = HyperCube::new(2, 2, 1, vec![0.0; 4]).unwrap();
        let bytes = encode_cube(&cube, Some("toy"));
        let line_end = bytes.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(
            std::str::from_utf8(&bytes[..line_end]).unwrap(),
            r#"{"magic":"HSC1","height":2,"width":2,"bands":1,"dtype":"f32le","name":"toy"}"#
        );
        assert_eq!(bytes.len(), line_end + 1 + 16);
    }

    #[test]
    fn reads_minimal_cube() {
        let bytes = cube_bytes(r#"{"magic":"HSC1","height":2,"width":2,"bands":1,"dtype":"f32le"}"#, 16);
        let cube = HyperCube::decode(&bytes).unwrap();
        assert_eq!((cube.height(), cube.width(), cube.bands()), (2, 2, 1));
    }

    #[test]
    fn short_payload_is_truncated() {
        let bytes = cube_bytes(r#"{"magic":"HSC1","height":2,"width":2,"bands":1,"dtype":"f32le"}"#, 12);
        match HyperCube::decode(&bytes).unwrap_err() {
            Error::TruncatedPayload { expected, actual } => assert_eq!((expected, actual), (16, 12)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn long_payload_is_rejected() {
        let bytes = cube_bytes(r#"{"magic":"HSC1","height":2,"width":2,"bands":1,"dtype":"f32le"}"#, 20);
        assert!(matches!(HyperCube::decode(&bytes).unwrap_err(), Error::TrailingData { expected: 16, actual: 20 }));
    }

    #[test]
    fn wrong_magic() {
        let bytes = cube_bytes(r#"{"magic":"HSL1","height":2,"width":2,"dtype":"u16le"}"#, 8);
        assert!(matches!(HyperCube::decode(&bytes).unwrap_err(), Error::BadMagic { .. }));
        assert!(matches!(HyperCube::decode(b"P6\n2 2\n").unwrap_err(), Error::BadMagic { .. }));
    }

    #[test]
    fn oversize_header_is_refused_before_allocating() {
        let bytes = cube_bytes(r#"{"magic":"HSC1","height":100000,"width":100000,"bands":100000,"dtype":"f32le"}"#, 0);
        assert!(matches!(HyperCube::decode(&bytes).unwrap_err(), Error::HeaderTooLarge { .. }));
        let small_cap = ReadOptions { max_payload_bytes: 8 };
        let bytes = cube_bytes(r#"{"magic":"HSC1","height":2,"width":2,"bands":1,"dtype":"f32le"}"#, 16);
        assert!(matches!(
            HyperCube::decode_from(&mut &bytes[..], &small_cap).unwrap_err(),
            Error::HeaderTooLarge { requested: 16, cap: 8 }
        ));
    }

    #[test]
    fn non_finite_payload_is_rejected() {
        let mut bytes = cube_bytes(r#"{"magic":"HSC1","height":1,"width":1,"bands":1,"dtype":"f32le"}"#, 0);
        bytes.extend_from_slice(&f32::INFINITY.to_le_bytes());
        assert!(matches!(HyperCube::decode(&bytes).unwrap_err(), Error::NonFiniteValue { .. }));
    }

    #[test]
    fn class_map_payload_with_zero_is_rejected() {
        let mut bytes = br#"{"magic":"HSP1","height":1,"width":2,"num_classes":3,"dtype":"u16le"}"#.to_vec();
        bytes.push(b'\n');
        bytes.extend_from_slice(&[1, 0, 0, 0]);
        assert!(matches!(ClassMap::decode(&bytes).unwrap_err(), Error::LabelOutOfRange { .. }));
    }

    #[test]
    fn one_pixel_rasters_round_trip() {
        let labels = LabelMap::new(1, 1, vec![4]).unwrap();
        assert_eq!(LabelMap::decode(&labels.encode()).unwrap(), labels);
        let pred = ClassMap::new(1, 1, vec![2], 9).unwrap();
        assert_eq!(ClassMap::decode(&pred.encode()).unwrap(), pred);
        let sp = SuperpixelMap::new(1, 1, vec![0]).unwrap();
        assert_eq!(SuperpixelMap::decode(&sp.encode()).unwrap(), sp);
        let aff = AffinityMap::new(1, 1, vec![0.25], vec![1.0]).unwrap();
        assert_eq!(AffinityMap::decode(&aff.encode()).unwrap(), aff);
        let mask = PixelMask::new(1, 1, vec![true]).unwrap();
        assert_eq!(PixelMask::decode(&mask.encode()).unwrap(), mask);
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_cube("/definitely/not/here.hsc").unwrap_err();
        assert!(err.to_string().contains("/definitely/not/here.hsc"));
        assert_eq!(err.kind(), "IoFailure");
    }
}
