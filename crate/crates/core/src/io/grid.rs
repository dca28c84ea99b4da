use std::io::{self, BufRead, Write};

use crate::csg::{SoftStump, Solid};
use crate::geometry::{sigmoid, Aabb, Vec3};
use crate::io::IoError;

/// Scalar samples at voxel centres of a regular grid; x varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    pub dims: [usize; 3],
    pub bbox: Aabb,
    pub values: Vec<f64>,
}

impl OccupancyGrid {
    pub fn new(dims: [usize; 3], bbox: Aabb, values: Vec<f64>) -> Result<Self, IoError> {
        check_dims(dims, &bbox)?;
        let n = dims.iter().product::<usize>();
        if values.len() != n {
            return Err(IoError::Grid(format!("{} values for {n} voxels", values.len())));
        }
        Ok(Self { dims, bbox, values })
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn voxel_size(&self) -> Vec3 {
        let e = self.bbox.extent();
        Vec3::new(
            e.x / self.dims[0] as f64,
            e.y / self.dims[1] as f64,
            e.z / self.dims[2] as f64,
        )
    }

    /// World position of voxel centre (i, j, k).
    pub fn center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let v = self.voxel_size();
        self.bbox.min + Vec3::new((i as f64 + 0.5) * v.x, (j as f64 + 0.5) * v.y, (k as f64 + 0.5) * v.z)
    }

    /// Sum of values times voxel volume.
    pub fn volume(&self) -> f64 {
        let v = self.voxel_size();
        self.values.iter().sum::<f64>() * v.x * v.y * v.z
    }

    /// `.grid` format: one ASCII header line `dims nx ny nz bbox x0 y0 z0 x1 y1 z1`
    /// followed by the values as little-endian f64.
    pub fn write(&self, mut w: impl Write) -> io::Result<()> {
        let (a, b) = (self.bbox.min, self.bbox.max);
        writeln!(
            w,
            "dims {} {} {} bbox {} {} {} {} {} {}",
            self.dims[0], self.dims[1], self.dims[2], a.x, a.y, a.z, b.x, b.y, b.z
        )?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read(mut r: impl BufRead) -> Result<Self, IoError> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 11 || f[0] != "dims" || f[4] != "bbox" {
            return Err(IoError::Grid(format!("malformed header '{}'", header.trim())));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| IoError::Grid(format!("bad dimension '{s}'")))
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| IoError::Grid(format!("bad bound '{s}'")));
        let dims = [int(f[1])?, int(f[2])?, int(f[3])?];
        let bbox = Aabb::new(
            Vec3::new(num(f[5])?, num(f[6])?, num(f[7])?),
            Vec3::new(num(f[8])?, num(f[9])?, num(f[10])?),
        );
        check_dims(dims, &bbox)?;
        let n: usize = dims.iter().product();
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != n * 8 {
            return Err(IoError::Grid(format!(
                "expected {} value bytes, found {}",
                n * 8,
                bytes.len()
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(dims, bbox, values)
    }
}

fn check_dims(dims: [usize; 3], bbox: &Aabb) -> Result<(), IoError> {
    if dims.iter().any(|&d| d < 2) {
        return Err(IoError::Grid(format!(
            "grid dimensions {dims:?} must be at least 2 per axis"
        )));
    }
    if bbox.is_degenerate() {
        return Err(IoError::Grid("grid bounding box is degenerate".into()));
    }
    Ok(())
}

fn fill(dims: [usize; 3], bbox: &Aabb, f: impl Fn(&Vec3) -> f64 + Sync) -> Result<OccupancyGrid, IoError> {
    check_dims(dims, bbox)?;
    let mut g = OccupancyGrid {
        dims,
        bbox: *bbox,
        values: vec![0.0; dims.iter().product()],
    };
    let mut values = std::mem::take(&mut g.values);
    let slice = |(k, out): (usize, &mut [f64])| {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                out[i + dims[0] * j] = f(&g.center(i, j, k));
            }
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        values.par_chunks_mut(dims[0] * dims[1]).enumerate().for_each(slice);
    }
    #[cfg(not(feature = "parallel"))]
    values.chunks_mut(dims[0] * dims[1]).enumerate().for_each(slice);
    g.values = values;
    Ok(g)
}

/// Hard occupancy bits at voxel centres.
pub fn rasterize(shape: &dyn Solid, dims: [usize; 3], bbox: &Aabb) -> Result<OccupancyGrid, IoError> {
    fill(dims, bbox, |x| if shape.contains(x) { 1.0 } else { 0.0 })
}

/// Soft occupancy values at voxel centres.
pub fn rasterize_soft(shape: &SoftStump, dims: [usize; 3], bbox: &Aabb) -> Result<OccupancyGrid, IoError> {
    fill(dims, bbox, |x| shape.eval(x))
}

/// Smooth occupancy `sigmoid(-field / voxel)` for meshing: the 0.5 level set
/// is exactly the zero set of the shape's field, and values vary almost
/// linearly across one voxel.
pub fn rasterize_field(shape: &dyn Solid, dims: [usize; 3], bbox: &Aabb) -> Result<OccupancyGrid, IoError> {
    check_dims(dims, bbox)?;
    let e = bbox.extent();
    let voxel = (0..3).map(|a| e[a] / dims[a] as f64).fold(f64::INFINITY, f64::min);
    fill(dims, bbox, |x| sigmoid(-shape.field(x) / voxel))
}
