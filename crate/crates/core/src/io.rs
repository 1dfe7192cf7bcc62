//! Binary file formats for images, masks and mask families, plus PGM dumps.
//!
//! All integers and floats are little-endian.
//!
//! | format | layout |
//! |--------|--------|
//! | `CIM1` | magic, u32 height, u32 width, height*width (f32 re, f32 im) row-major |
//! | `KMS1` | magic, u32 width, width bytes of 0/1 |
//! | `KFM1` | magic, u32 width, u32 T, u8 kind, f64 sr_min, u64 seed, (T+1)*width bytes of 0/1 |

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mask::{ColumnMask, MaskFamily};
use crate::numerics::{Complex64, ComplexImage};
use crate::schedule::{ScheduleKind, ScheduleSpec};

pub const IMAGE_MAGIC: &[u8; 4] = b"CIM1";
pub const MASK_MAGIC: &[u8; 4] = b"KMS1";
pub const FAMILY_MAGIC: &[u8; 4] = b"KFM1";

/// Little-endian cursor over a byte slice with format-tagged errors.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    kind: &'static str,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8], kind: &'static str) -> Self {
        Self { buf, pos: 0, kind }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::format(self.kind, format!("truncated at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != expected {
            return Err(Error::format(
                self.kind,
                format!("bad magic {:?}, expected {:?}", String::from_utf8_lossy(got), String::from_utf8_lossy(expected)),
            ));
        }
        Ok(())
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::format(self.kind, format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn selection_bytes(bits: &[bool]) -> impl Iterator<Item = u8> + '_ {
    bits.iter().map(|&b| b as u8)
}

fn read_selection(r: &mut Reader<'_>, width: usize) -> Result<Vec<bool>> {
    r.take(width)?
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::format(r.kind, format!("selection byte {other} is not 0 or 1"))),
        })
        .collect()
}

pub fn encode_image(img: &ComplexImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + img.data().len() * 8);
    out.extend_from_slice(IMAGE_MAGIC);
    out.extend_from_slice(&(img.height() as u32).to_le_bytes());
    out.extend_from_slice(&(img.width() as u32).to_le_bytes());
    for z in img.data() {
        out.extend_from_slice(&(z.re as f32).to_le_bytes());
        out.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    out
}

pub fn decode_image(bytes: &[u8]) -> Result<ComplexImage> {
    let mut r = Reader::new(bytes, "CIM1");
    r.magic(IMAGE_MAGIC)?;
    let height = r.u32()? as usize;
    let width = r.u32()? as usize;
    let n = height
        .checked_mul(width)
        .ok_or_else(|| Error::format("CIM1", "dimensions overflow"))?;
    if bytes.len() < 12 || (bytes.len() - 12) / 8 < n {
        return Err(Error::format("CIM1", format!("truncated payload for {height}x{width}")));
    }
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        let re = r.f32()? as f64;
        let im = r.f32()? as f64;
        data.push(Complex64::new(re, im));
    }
    r.finish()?;
    let img = ComplexImage::from_vec(height, width, data).map_err(|e| Error::format("CIM1", e.to_string()))?;
    if !img.is_finite() {
        return Err(Error::format("CIM1", "non-finite pixel values"));
    }
    Ok(img)
}

pub fn write_image(path: impl AsRef<Path>, img: &ComplexImage) -> Result<()> {
    write_file(path.as_ref(), &encode_image(img))
}

pub fn read_image(path: impl AsRef<Path>) -> Result<ComplexImage> {
    decode_image(&read_file(path.as_ref())?)
}

pub fn encode_mask(mask: &ColumnMask) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + mask.width());
    out.extend_from_slice(MASK_MAGIC);
    out.extend_from_slice(&(mask.width() as u32).to_le_bytes());
    out.extend(selection_bytes(mask.selected()));
    out
}

pub fn decode_mask(bytes: &[u8]) -> Result<ColumnMask> {
    let mut r = Reader::new(bytes, "KMS1");
    r.magic(MASK_MAGIC)?;
    let width = r.u32()? as usize;
    let sel = read_selection(&mut r, width)?;
    r.finish()?;
    ColumnMask::from_selection(sel)
}

pub fn write_mask(path: impl AsRef<Path>, mask: &ColumnMask) -> Result<()> {
    write_file(path.as_ref(), &encode_mask(mask))
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<ColumnMask> {
    decode_mask(&read_file(path.as_ref())?)
}

pub fn encode_family(family: &MaskFamily) -> Vec<u8> {
    let spec = family.schedule();
    let mut out = Vec::new();
    out.extend_from_slice(FAMILY_MAGIC);
    out.extend_from_slice(&(family.width() as u32).to_le_bytes());
    out.extend_from_slice(&(spec.steps() as u32).to_le_bytes());
    out.push(spec.kind().to_byte());
    out.extend_from_slice(&spec.sr_min().to_le_bytes());
    out.extend_from_slice(&family.seed().to_le_bytes());
    for m in family.masks() {
        out.extend(selection_bytes(m.selected()));
    }
    out
}

pub fn decode_family(bytes: &[u8]) -> Result<MaskFamily> {
    let mut r = Reader::new(bytes, "KFM1");
    r.magic(FAMILY_MAGIC)?;
    let width = r.u32()? as usize;
    let steps = r.u32()? as usize;
    let kind_byte = r.u8()?;
    let kind = ScheduleKind::from_byte(kind_byte)
        .ok_or_else(|| Error::format("KFM1", format!("unknown schedule kind byte {kind_byte}")))?;
    let sr_min = r.f64()?;
    let seed = r.u64()?;
    let spec = ScheduleSpec::new(kind, steps, sr_min)?;
    let selections = (0..=steps)
        .map(|_| read_selection(&mut r, width))
        .collect::<Result<Vec<_>>>()?;
    r.finish()?;
    MaskFamily::from_masks(spec, seed, selections)
}

pub fn write_family(path: impl AsRef<Path>, family: &MaskFamily) -> Result<()> {
    write_file(path.as_ref(), &encode_family(family))
}

pub fn read_family(path: impl AsRef<Path>) -> Result<MaskFamily> {
    decode_family(&read_file(path.as_ref())?)
}

/// Binary P5 graymap of the magnitude image scaled so its maximum maps to 255.
pub fn encode_pgm(img: &ComplexImage) -> Vec<u8> {
    let mag = img.magnitude();
    let peak = mag.iter().cloned().fold(0.0f64, f64::max);
    let scale = if peak > 0.0 { 255.0 / peak } else { 0.0 };
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(mag.iter().map(|m| (m * scale).round().clamp(0.0, 255.0) as u8));
    out
}

pub fn write_pgm(path: impl AsRef<Path>, img: &ComplexImage) -> Result<()> {
    write_file(path.as_ref(), &encode_pgm(img))
}

pub const DATASET_MANIFEST: &str = "manifest.txt";

/// File name of slice `index` inside a dataset directory.
pub fn slice_file_name(index: usize) -> String {
    format!("slice_{index:04}.cim")
}

/// Writes `slice_NNNN.cim` files into `dir` and returns their names in order.
/// The manifest listing them is written by the caller.
pub fn write_slices(dir: impl AsRef<Path>, images: &[ComplexImage]) -> Result<Vec<String>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    images
        .iter()
        .enumerate()
        .map(|(i, img)| {
            let name = slice_file_name(i);
            write_image(dir.join(&name), img)?;
            Ok(name)
        })
        .collect()
}

/// File names listed in a dataset manifest: every non-empty line that is
/// neither a `#` comment nor a `key=value` entry.
pub fn manifest_entries(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#') && !l.contains('='))
        .map(String::from)
        .collect()
}

/// Loads every slice listed in `dir/manifest.txt`, in listed order.
pub fn read_dataset(dir: impl AsRef<Path>) -> Result<Vec<ComplexImage>> {
    let dir = dir.as_ref();
    let path = dir.join(DATASET_MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let names = manifest_entries(&text);
    if names.is_empty() {
        return Err(Error::InvalidInput(format!("{} lists no slices", path.display())));
    }
    names.iter().map(|n| read_image(dir.join(n))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::gen_task_mask;

    fn sample_image() -> ComplexImage {
        ComplexImage::from_fn(3, 5, |r, c| Complex64::new(r as f64 * 0.5, -(c as f64) * 0.25)).unwrap()
    }

    #[test]
    fn image_layout() {
        let bytes = encode_image(&sample_image());
        assert_eq!(&bytes[..4], b"CIM1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 5);
        assert_eq!(bytes.len(), 12 + 15 * 8);
        assert_eq!(decode_image(&bytes).unwrap(), sample_image());
    }

    #[test]
    fn image_rejects_bad_magic_and_truncation() {
        let mut bytes = encode_image(&sample_image());
        assert!(decode_image(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(matches!(decode_image(&bytes), Err(Error::Format { .. })));
        assert!(decode_image(b"CIM1").is_err());
        let mut huge = b"CIM1".to_vec();
        huge.extend_from_slice(&u32::MAX.to_le_bytes());
        huge.extend_from_slice(&u32::MAX.to_le_bytes());
        assert!(decode_image(&huge).is_err());
    }

    #[test]
    fn mask_layout() {
        let m = gen_task_mask(16, 4.0, 0.125, 1).unwrap();
        let bytes = encode_mask(&m);
        assert_eq!(&bytes[..4], b"KMS1");
        assert_eq!(bytes.len(), 8 + 16);
        assert_eq!(decode_mask(&bytes).unwrap().selected(), m.selected());
        let mut bad = bytes.clone();
        bad[10] = 2;
        assert!(decode_mask(&bad).is_err());
        assert!(decode_mask(&bytes[..bytes.len() - 2]).is_err());
    }

    #[test]
    fn family_layout() {
        let spec = ScheduleSpec::new(ScheduleKind::Log, 20, 0.1).unwrap();
        let fam = MaskFamily::build_default(spec, 32, 77).unwrap();
        let bytes = encode_family(&fam);
        assert_eq!(&bytes[..4], b"KFM1");
        assert_eq!(bytes.len(), 4 + 4 + 4 + 1 + 8 + 8 + 21 * 32);
        assert_eq!(bytes[12], 1);
        let back = decode_family(&bytes).unwrap();
        assert_eq!(back.masks(), fam.masks());
        assert_eq!(back.seed(), 77);
        assert_eq!(back.schedule(), fam.schedule());
        let mut bad = bytes.clone();
        bad[3] = b'2';
        assert!(decode_family(&bad).is_err());
    }

    #[test]
    fn pgm_header() {
        let bytes = encode_pgm(&sample_image());
        assert!(bytes.starts_with(b"P5\n5 3\n255\n"));
        assert_eq!(bytes.len(), b"P5\n5 3\n255\n".len() + 15);
        assert_eq!(*bytes.iter().skip(11).max().unwrap(), 255);
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let imgs = vec![sample_image(), sample_image().scale(Complex64::new(0.0, 1.0))];
        let names = write_slices(dir.path(), &imgs).unwrap();
        assert_eq!(names, ["slice_0000.cim", "slice_0001.cim"]);
        let manifest = format!("# header\nseed=3\n\n{}\n", names.join("\n"));
        fs::write(dir.path().join(DATASET_MANIFEST), manifest).unwrap();
        assert_eq!(read_dataset(dir.path()).unwrap(), imgs);
        fs::write(dir.path().join(DATASET_MANIFEST), "seed=3\n").unwrap();
        assert!(read_dataset(dir.path()).is_err());
        assert!(matches!(read_dataset(dir.path().join("missing")), Err(Error::Io { .. })));
    }
}
