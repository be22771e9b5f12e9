//! Voxelized fluence fields and their on-disk representation.
//!
//! Binary layout: one JSON header line terminated by `\n`, followed by
//! little-endian `f32` voxel values in x-fastest order (then y, then z).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::io::format_sig9;

/// Regular voxel grid covering part of the medium half-space `z >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Minimum corner, mm.
    pub origin: Point3,
    /// Voxel edge length, mm.
    pub spacing: f64,
    pub dims: [usize; 3],
}

impl GridSpec {
    pub fn new(origin: Point3, spacing: f64, dims: [usize; 3]) -> Result<Self> {
        let g = GridSpec { origin, spacing, dims };
        g.validate()?;
        Ok(g)
    }

    /// Grid spanning `|x| <= extent_x/2`, `|y| <= extent_y/2`, `0 <= z <= depth`.
    ///
    /// Lateral voxel counts are rounded to odd numbers so that one voxel column
    /// is centred on the axis `x = y = 0`.
    pub fn centered(extent_x: f64, extent_y: f64, depth: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Config(format!("voxel spacing must be > 0, got {spacing}")));
        }
        let odd = |extent: f64| {
            let n = (extent / spacing).round().max(1.0) as usize;
            if n.is_multiple_of(2) {
                n + 1
            } else {
                n
            }
        };
        let nx = odd(extent_x);
        let ny = odd(extent_y);
        let nz = ((depth / spacing).round() as usize).max(1);
        let origin = Point3::new(-(nx as f64) * spacing / 2.0, -(ny as f64) * spacing / 2.0, 0.0);
        GridSpec::new(origin, spacing, [nx, ny, nz])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::Config(format!("voxel spacing must be > 0, got {}", self.spacing)));
        }
        if !self.origin.is_finite() {
            return Err(Error::Config("grid origin must be finite".into()));
        }
        if self.origin.z < 0.0 {
            return Err(Error::Config("grid must lie in the medium (origin z >= 0)".into()));
        }
        if self.dims.contains(&0) {
            return Err(Error::Config(format!("grid dimensions must be positive, got {:?}", self.dims)));
        }
        self.checked_len().ok_or_else(|| Error::Config("grid is too large".into()))?;
        Ok(())
    }

    fn checked_len(&self) -> Option<usize> {
        self.dims[0].checked_mul(self.dims[1])?.checked_mul(self.dims[2])
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing * self.spacing * self.spacing
    }

    #[inline]
    pub fn flat_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.dims[0] * (iy + self.dims[1] * iz)
    }

    /// Index triple of the voxel containing `p`, if any.
    #[inline]
    pub fn locate(&self, p: Point3) -> Option<[usize; 3]> {
        let fx = (p.x - self.origin.x) / self.spacing;
        let fy = (p.y - self.origin.y) / self.spacing;
        let fz = (p.z - self.origin.z) / self.spacing;
        if fx < 0.0 || fy < 0.0 || fz < 0.0 {
            return None;
        }
        let (ix, iy, iz) = (fx as usize, fy as usize, fz as usize);
        (ix < self.dims[0] && iy < self.dims[1] && iz < self.dims[2]).then_some([ix, iy, iz])
    }

    #[inline]
    pub fn voxel_of(&self, p: Point3) -> Option<usize> {
        self.locate(p).map(|[ix, iy, iz]| self.flat_index(ix, iy, iz))
    }

    pub fn center(&self, ix: usize, iy: usize, iz: usize) -> Point3 {
        Point3::new(
            self.origin.x + (ix as f64 + 0.5) * self.spacing,
            self.origin.y + (iy as f64 + 0.5) * self.spacing,
            self.origin.z + (iz as f64 + 0.5) * self.spacing,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldHeader {
    dims: [usize; 3],
    spacing: f64,
    origin: [f64; 3],
    photons: u64,
    seed: u64,
}

/// Fluence per launched photon on a voxel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FluenceField {
    pub grid: GridSpec,
    pub photons: u64,
    pub seed: u64,
    pub values: Vec<f64>,
}

impl FluenceField {
    /// Samples an analytic fluence at voxel centres.
    pub fn from_fn<F: Fn(Point3) -> Result<f64>>(grid: GridSpec, f: F) -> Result<Self> {
        grid.validate()?;
        let mut values = Vec::with_capacity(grid.len());
        for iz in 0..grid.dims[2] {
            for iy in 0..grid.dims[1] {
                for ix in 0..grid.dims[0] {
                    values.push(f(grid.center(ix, iy, iz))?);
                }
            }
        }
        Ok(FluenceField { grid, photons: 0, seed: 0, values })
    }

    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.values[self.grid.flat_index(ix, iy, iz)]
    }

    /// `(voxel centre, value)` for the voxel column containing `(x, y)`.
    pub fn column(&self, x: f64, y: f64) -> Result<Vec<(Point3, f64)>> {
        let probe = Point3::new(x, y, self.grid.origin.z);
        let [ix, iy, _] = self
            .grid
            .locate(probe)
            .ok_or_else(|| Error::domain(format!("column ({x}, {y}) lies outside the grid")))?;
        Ok((0..self.grid.dims[2]).map(|iz| (self.grid.center(ix, iy, iz), self.get(ix, iy, iz))).collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = FieldHeader {
            dims: self.grid.dims,
            spacing: self.grid.spacing,
            origin: [self.grid.origin.x, self.grid.origin.y, self.grid.origin.z],
            photons: self.photons,
            seed: self.seed,
        };
        let mut out = serde_json::to_vec(&header).expect("header serializes");
        out.push(b'\n');
        out.reserve(4 * self.values.len());
        for &v in &self.values {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out
    }

    /// Parses the binary field format, rejecting inconsistent headers,
    /// truncated payloads and negative or non-finite voxels.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::format("fluence field: missing header line"))?;
        let header: FieldHeader = serde_json::from_slice(&bytes[..nl])
            .map_err(|e| Error::format(format!("fluence field header: {e}")))?;
        let grid = GridSpec {
            origin: Point3::new(header.origin[0], header.origin[1], header.origin[2]),
            spacing: header.spacing,
            dims: header.dims,
        };
        grid.validate().map_err(|e| Error::format(format!("fluence field header: {e}")))?;
        let payload = &bytes[nl + 1..];
        let expected = grid
            .checked_len()
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::format("fluence field: grid too large"))?;
        if payload.len() != expected {
            return Err(Error::format(format!(
                "fluence field: expected {expected} payload bytes for dims {:?}, found {}",
                grid.dims,
                payload.len()
            )));
        }
        let values = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect::<Vec<_>>();
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::format("fluence field: voxel values must be finite and >= 0"));
        }
        Ok(FluenceField { grid, photons: header.photons, seed: header.seed, values })
    }

    /// CSV of the voxel column through `(x, y)`: `z_mm,fluence`.
    pub fn write_axial_csv<W: Write>(&self, x: f64, y: f64, mut w: W) -> Result<()> {
        writeln!(w, "z_mm,fluence_per_photon_mm2")?;
        for (p, v) in self.column(x, y)? {
            writeln!(w, "{},{}", format_sig9(p.z), format_sig9(v))?;
        }
        Ok(())
    }

    /// CSV of the x–z plane through `y`: `x_mm,z_mm,fluence`.
    pub fn write_plane_csv<W: Write>(&self, y: f64, mut w: W) -> Result<()> {
        let probe = Point3::new(self.grid.origin.x, y, self.grid.origin.z);
        let [_, iy, _] =
            self.grid.locate(probe).ok_or_else(|| Error::domain(format!("plane y = {y} lies outside the grid")))?;
        writeln!(w, "x_mm,z_mm,fluence_per_photon_mm2")?;
        for iz in 0..self.grid.dims[2] {
            for ix in 0..self.grid.dims[0] {
                let c = self.grid.center(ix, iy, iz);
                writeln!(w, "{},{},{}", format_sig9(c.x), format_sig9(c.z), format_sig9(self.get(ix, iy, iz)))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn centered_grid_has_axis_voxel() {
        let g = GridSpec::centered(50.0, 50.0, 40.0, 0.2).unwrap();
        assert_eq!(g.dims, [251, 251, 200]);
        let [ix, iy, _] = g.locate(Point3::new(0.0, 0.0, 1.0)).unwrap();
        let c = g.center(ix, iy, 0);
        assert!(c.x.abs() < 1e-9 && c.y.abs() < 1e-9);
        assert!(g.locate(Point3::new(0.0, 0.0, -0.1)).is_none());
        assert!(g.locate(Point3::new(30.0, 0.0, 1.0)).is_none());
    }

    #[test]
    fn rejects_truncated_payload() {
        let g = GridSpec::centered(3.0, 3.0, 2.0, 1.0).unwrap();
        let f = FluenceField::from_fn(g, |p| Ok(p.z)).unwrap();
        let bytes = f.to_bytes();
        assert!(FluenceField::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(FluenceField::from_bytes(b"{}").is_err());
        assert!(FluenceField::from_bytes(b"{\"dims\":[0,1,1],\"spacing\":1,\"origin\":[0,0,0],\"photons\":1,\"seed\":1}\n").is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip(nx in 1usize..5, ny in 1usize..5, nz in 1usize..5,
                             spacing in 0.05f64..2.0, seed in any::<u64>(), scale in 0.0f64..1e3) {
            let g = GridSpec::new(Point3::new(-1.0, -2.0, 0.0), spacing, [nx, ny, nz]).unwrap();
            let mut f = FluenceField::from_fn(g, |p| Ok(scale * (p.x.abs() + p.z))).unwrap();
            f.seed = seed;
            f.photons = 1234;
            let back = FluenceField::from_bytes(&f.to_bytes()).unwrap();
            prop_assert_eq!(back.grid, f.grid);
            prop_assert_eq!(back.seed, seed);
            for (a, b) in back.values.iter().zip(&f.values) {
                prop_assert_eq!(*a, (*b as f32) as f64);
            }
        }
    }
}
