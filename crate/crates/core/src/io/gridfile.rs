//! Raw little-endian `f64` payloads with a JSON sidecar.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TimeRange;
use crate::io::crc64_hex;
use crate::operators::grid::{GridSpec, ImageGrid, SinoSpec, Sinogram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Image,
    Sinogram,
}

/// Sidecar contents. `dims` is `[nx, ny]` for images and `[ns, nt]` for
/// sinograms; the first index varies fastest in the payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub kind: GridKind,
    pub dims: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_range: Option<TimeRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry_hash: Option<String>,
    /// CRC-64/XZ of the payload.
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridData {
    Image(ImageGrid),
    Sinogram(Sinogram),
}

impl GridData {
    pub fn values(&self) -> &[f64] {
        match self {
            GridData::Image(g) => &g.values,
            GridData::Sinogram(g) => &g.values,
        }
    }

    pub fn dims(&self) -> [usize; 2] {
        match self {
            GridData::Image(g) => [g.spec.nx, g.spec.ny],
            GridData::Sinogram(g) => [g.spec.ns, g.spec.nt],
        }
    }
}

/// `<payload>.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn payload_bytes(values: &[f64]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(8 * values.len());
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

/// Writes the payload and its sidecar; returns the payload checksum.
pub fn write_grid(path: &Path, data: &GridData, geometry_hash: Option<&str>) -> Result<String> {
    let bytes = payload_bytes(data.values());
    let checksum = crc64_hex(&bytes);
    let mut side = Sidecar {
        kind: GridKind::Image,
        dims: data.dims(),
        spacing: None,
        origin: None,
        support_radius: None,
        s_range: None,
        t_range: None,
        geometry_hash: geometry_hash.map(str::to_owned),
        checksum: checksum.clone(),
    };
    match data {
        GridData::Image(g) => {
            side.spacing = Some(g.spec.spacing);
            side.origin = Some(g.spec.origin);
            side.support_radius = Some(g.spec.support_radius);
        }
        GridData::Sinogram(g) => {
            side.kind = GridKind::Sinogram;
            side.s_range = Some([g.spec.s_min, g.spec.s_max]);
            side.t_range = Some(g.spec.t_range);
        }
    }
    fs::write(path, &bytes)?;
    let mut f = fs::File::create(sidecar_path(path))?;
    f.write_all(serde_json::to_string_pretty(&side)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(checksum)
}

pub fn read_grid(path: &Path) -> Result<(GridData, Sidecar)> {
    let side_path = sidecar_path(path);
    let side: Sidecar = serde_json::from_str(&fs::read_to_string(&side_path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", side_path.display())))?;
    let bytes = fs::read(path)?;
    let n = side.dims[0] * side.dims[1];
    if bytes.len() != 8 * n {
        return Err(Error::Format(format!(
            "{}: {} bytes for dims {:?}",
            path.display(),
            bytes.len(),
            side.dims
        )));
    }
    let sum = crc64_hex(&bytes);
    if sum != side.checksum {
        return Err(Error::Format(format!(
            "{}: checksum {sum} does not match sidecar {}",
            path.display(),
            side.checksum
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let missing = |what: &str| Error::Format(format!("{}: sidecar lacks {what}", side_path.display()));
    let data = match side.kind {
        GridKind::Image => {
            let spec = GridSpec {
                nx: side.dims[0],
                ny: side.dims[1],
                spacing: side.spacing.ok_or_else(|| missing("spacing"))?,
                origin: side.origin.ok_or_else(|| missing("origin"))?,
                support_radius: side.support_radius.ok_or_else(|| missing("support_radius"))?,
            };
            spec.validate()?;
            GridData::Image(ImageGrid::from_values(spec, values)?)
        }
        GridKind::Sinogram => {
            let [s_min, s_max] = side.s_range.ok_or_else(|| missing("s_range"))?;
            let t_range = side.t_range.ok_or_else(|| missing("t_range"))?;
            let spec = SinoSpec::new(side.dims[0], side.dims[1], s_min, s_max, t_range)?;
            GridData::Sinogram(Sinogram::from_values(spec, values)?)
        }
    };
    Ok((data, side))
}

pub fn read_image(path: &Path) -> Result<ImageGrid> {
    match read_grid(path)?.0 {
        GridData::Image(g) => Ok(g),
        GridData::Sinogram(_) => Err(Error::Format(format!(
            "{}: expected an image, found a sinogram",
            path.display()
        ))),
    }
}

pub fn read_sinogram(path: &Path) -> Result<Sinogram> {
    match read_grid(path)?.0 {
        GridData::Sinogram(g) => Ok(g),
        GridData::Image(_) => Err(Error::Format(format!(
            "{}: expected a sinogram, found an image",
            path.display()
        ))),
    }
}

/// 16-bit binary PGM scaled to the finite range of `values`, first row at
/// the top of the picture showing the largest second index. NaN maps to 0.
pub fn write_pgm(path: &Path, values: &[f64], dims: [usize; 2]) -> Result<()> {
    let [w, h] = dims;
    if values.len() != w * h {
        return Err(Error::InvalidArgument("PGM dims do not match the data".into()));
    }
    let (lo, hi) = values
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let scale = if hi > lo { 65535.0 / (hi - lo) } else { 0.0 };
    let mut out = format!("P5\n{w} {h}\n65535\n").into_bytes();
    for row in (0..h).rev() {
        for v in &values[row * w..(row + 1) * w] {
            let q = if v.is_finite() { ((v - lo) * scale).round() as u16 } else { 0 };
            out.extend_from_slice(&q.to_be_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_and_sinogram_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::square(8, 1.0, 0.9);
        let img = ImageGrid::from_fn(spec, |x| x[0] - 0.3 * x[1]);
        let p = dir.path().join("f.bin");
        let sum = write_grid(&p, &GridData::Image(img.clone()), Some("abc")).unwrap();
        let (back, side) = read_grid(&p).unwrap();
        assert_eq!(back, GridData::Image(img));
        assert_eq!(side.checksum, sum);
        assert_eq!(side.geometry_hash.as_deref(), Some("abc"));

        let sspec = SinoSpec::new(5, 4, -1.0, 1.0, TimeRange::new(0.0, 1.0)).unwrap();
        let mut g = Sinogram::from_fn(sspec, |s, t| s * t);
        g.values[3] = f64::NAN;
        let q = dir.path().join("g.bin");
        write_grid(&q, &GridData::Sinogram(g.clone()), None).unwrap();
        let back = read_sinogram(&q).unwrap();
        assert_eq!(back.spec, g.spec);
        assert!(back.values[3].is_nan());
        assert_eq!(back.values[4], g.values[4]);
        assert!(read_image(&q).is_err());
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::square(4, 1.0, 2.0);
        let p = dir.path().join("f.bin");
        write_grid(&p, &GridData::Image(ImageGrid::from_fn(spec, |x| x[0])), None).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes[9] ^= 1;
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(read_grid(&p), Err(Error::Format(_))));
        fs::write(&p, &bytes[..16]).unwrap();
        assert!(matches!(read_grid(&p), Err(Error::Format(_))));
    }

    #[test]
    fn pgm_header_and_size() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        write_pgm(&p, &[0.0, 1.0, 2.0, f64::NAN, 4.0, 5.0], [3, 2]).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert!(bytes.starts_with(b"P5\n3 2\n65535\n"));
        assert_eq!(bytes.len(), 13 + 12);
        // top row is the second data row: NaN, 4, 5
        assert_eq!(&bytes[13..15], &[0, 0]);
        assert_eq!(&bytes[17..19], &[255, 255]);
    }
}
