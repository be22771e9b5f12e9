//! Wavelength × fiber × pixel measurement tensors and their on-disk format.
//!
//! A tensor directory holds `meta.json` and `data.f32`. The payload is
//! little-endian `f32` ordered wavelength-major, then fiber, then pixel, with
//! pixels row-major in `(z, x)`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, FIBER_COUNT};

pub const META_FILE: &str = "meta.json";
pub const DATA_FILE: &str = "data.f32";

/// Dense `[a][b][c]` array of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Cube {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Cube { dims, data: vec![0.0; dims[0] * dims[1] * dims[2]] }
    }

    pub fn from_vec(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        let n = dims[0].checked_mul(dims[1]).and_then(|n| n.checked_mul(dims[2]));
        if n != Some(data.len()) {
            return Err(Error::domain(format!("cube dims {dims:?} do not match {} values", data.len())));
        }
        Ok(Cube { dims, data })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    fn offset(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.dims[1] + b) * self.dims[2] + c
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[self.offset(a, b, c)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        let o = self.offset(a, b, c);
        self.data[o] = v;
    }

    /// Contiguous `[b][c]` block for one leading index.
    pub fn slab(&self, a: usize) -> &[f64] {
        let n = self.dims[1] * self.dims[2];
        &self.data[a * n..(a + 1) * n]
    }

    /// Contiguous row over the last index.
    pub fn row(&self, a: usize, b: usize) -> &[f64] {
        let o = self.offset(a, b, 0);
        &self.data[o..o + self.dims[2]]
    }
}

/// Regular pixel lattice in the image plane `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PixelGrid {
    pub x0_mm: f64,
    pub dx_mm: f64,
    pub nx: usize,
    pub z0_mm: f64,
    pub dz_mm: f64,
    pub nz: usize,
}

impl PixelGrid {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.x0_mm, self.dx_mm, self.z0_mm, self.dz_mm].iter().all(|v| v.is_finite());
        if !finite || self.dx_mm <= 0.0 || self.dz_mm <= 0.0 {
            return Err(Error::Config(format!("pixel grid needs finite origin and positive spacing: {self:?}")));
        }
        if self.nx == 0 || self.nz == 0 {
            return Err(Error::Config("pixel grid must contain at least one pixel".into()));
        }
        if self.z0_mm < 0.0 {
            return Err(Error::Config("pixel grid must lie in the medium (z0 >= 0)".into()));
        }
        self.nx.checked_mul(self.nz).ok_or_else(|| Error::Config("pixel grid is too large".into()))?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iz: usize) -> usize {
        iz * self.nx + ix
    }

    /// `(x, z)` of pixel `i`, mm.
    pub fn coord(&self, i: usize) -> (f64, f64) {
        let (iz, ix) = (i / self.nx, i % self.nx);
        (self.x0_mm + ix as f64 * self.dx_mm, self.z0_mm + iz as f64 * self.dz_mm)
    }

    pub fn point(&self, i: usize) -> Point3 {
        let (x, z) = self.coord(i);
        Point3::new(x, 0.0, z)
    }

    /// Pixel nearest to `(x, z)`, if it lies within half a pixel of the grid.
    pub fn nearest(&self, x: f64, z: f64) -> Option<usize> {
        let fx = ((x - self.x0_mm) / self.dx_mm).round();
        let fz = ((z - self.z0_mm) / self.dz_mm).round();
        if fx < 0.0 || fz < 0.0 || fx >= self.nx as f64 || fz >= self.nz as f64 {
            return None;
        }
        Some(self.index(fx as usize, fz as usize))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorMeta {
    /// `[wavelengths, fibers, pixels]`.
    pub dims: [usize; 3],
    pub wavelengths_nm: Vec<f64>,
    pub pixel_grid: PixelGrid,
    /// Required key; `null` when no zero-power frame was recorded.
    #[serde(deserialize_with = "Option::deserialize")]
    pub control_index: Option<usize>,
    pub endianness: String,
    pub dtype: String,
    /// Optional per-shot pulse energies, `[wavelength][fiber]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shot_energy: Option<Vec<Vec<f64>>>,
}

impl TensorMeta {
    pub fn validate(&self) -> Result<()> {
        if self.endianness != "little" || self.dtype != "f32" {
            return Err(Error::format(format!(
                "unsupported encoding {}/{}; expected little/f32",
                self.endianness, self.dtype
            )));
        }
        self.pixel_grid.validate().map_err(|e| Error::format(e.to_string()))?;
        let [nj, nk, ni] = self.dims;
        if nk != FIBER_COUNT {
            return Err(Error::format(format!("expected {FIBER_COUNT} fibers, meta declares {nk}")));
        }
        if nj == 0 || nj != self.wavelengths_nm.len() {
            return Err(Error::format(format!(
                "dims declare {nj} wavelengths but {} are listed",
                self.wavelengths_nm.len()
            )));
        }
        if ni != self.pixel_grid.len() {
            return Err(Error::format(format!(
                "dims declare {ni} pixels but the pixel grid has {}",
                self.pixel_grid.len()
            )));
        }
        if self.wavelengths_nm.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::format("wavelengths must be finite and positive"));
        }
        if let Some(c) = self.control_index {
            if c >= nj {
                return Err(Error::format(format!("control_index {c} out of range for {nj} wavelengths")));
            }
        }
        if let Some(e) = &self.shot_energy {
            let ok = e.len() == nj && e.iter().all(|r| r.len() == nk && r.iter().all(|v| v.is_finite() && *v > 0.0));
            if !ok {
                return Err(Error::format("shot_energy must be a positive [wavelength][fiber] array"));
            }
        }
        Ok(())
    }

    pub fn payload_len(&self) -> Option<usize> {
        self.dims[0].checked_mul(self.dims[1])?.checked_mul(self.dims[2])?.checked_mul(4)
    }
}

/// Enveloped photoacoustic magnitudes `y[j][k][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementTensor {
    pub wavelengths_nm: Vec<f64>,
    pub pixels: PixelGrid,
    pub control_index: Option<usize>,
    pub values: Cube,
}

impl MeasurementTensor {
    pub fn new(
        wavelengths_nm: Vec<f64>,
        pixels: PixelGrid,
        control_index: Option<usize>,
        values: Cube,
    ) -> Result<Self> {
        let t = MeasurementTensor { wavelengths_nm, pixels, control_index, values };
        t.meta().validate().map_err(|e| Error::Config(e.to_string()))?;
        if t.values.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("measurement values must be finite"));
        }
        Ok(t)
    }

    pub fn n_wavelengths(&self) -> usize {
        self.values.dims()[0]
    }

    pub fn n_pixels(&self) -> usize {
        self.values.dims()[2]
    }

    pub fn meta(&self) -> TensorMeta {
        TensorMeta {
            dims: self.values.dims(),
            wavelengths_nm: self.wavelengths_nm.clone(),
            pixel_grid: self.pixels,
            control_index: self.control_index,
            endianness: "little".into(),
            dtype: "f32".into(),
            shot_energy: None,
        }
    }

    pub fn payload(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 * self.values.data().len());
        for &v in self.values.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out
    }

    /// Decodes a tensor from its metadata and payload bytes. Frames are
    /// divided by the per-shot energies when those are present.
    pub fn decode(meta_json: &[u8], data: &[u8]) -> Result<Self> {
        let meta: TensorMeta =
            serde_json::from_slice(meta_json).map_err(|e| Error::format(format!("{META_FILE}: {e}")))?;
        meta.validate()?;
        let expected = meta.payload_len().ok_or_else(|| Error::format("tensor dims overflow"))?;
        if data.len() != expected {
            return Err(Error::format(format!(
                "{DATA_FILE}: expected {expected} bytes for dims {:?}, found {}",
                meta.dims,
                data.len()
            )));
        }
        let mut values: Vec<f64> =
            data.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect();
        if let Some(energy) = &meta.shot_energy {
            let [_, nk, ni] = meta.dims;
            for (jk, block) in values.chunks_exact_mut(ni).enumerate() {
                let e = energy[jk / nk][jk % nk];
                block.iter_mut().for_each(|v| *v /= e);
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::format(format!("{DATA_FILE}: non-finite sample")));
        }
        Ok(MeasurementTensor {
            wavelengths_nm: meta.wavelengths_nm,
            pixels: meta.pixel_grid,
            control_index: meta.control_index,
            values: Cube::from_vec(meta.dims, values)?,
        })
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let meta = fs::read(dir.join(META_FILE))?;
        let data = fs::read(dir.join(DATA_FILE))?;
        Self::decode(&meta, &data)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut meta = serde_json::to_vec_pretty(&self.meta()).expect("meta serializes");
        meta.push(b'\n');
        fs::write(dir.join(META_FILE), meta)?;
        fs::write(dir.join(DATA_FILE), self.payload())?;
        Ok(())
    }
}
