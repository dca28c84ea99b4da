use std::collections::{HashMap, HashSet};
use std::io::{self, Write};

use rand::Rng;

use crate::geometry::Vec3;
use crate::io::grid::OccupancyGrid;
use crate::io::mc_table::TRI_TABLE;

const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Indexed triangle mesh.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
}

impl Mesh {
    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    fn corners(&self, f: &[u32; 3]) -> [Vec3; 3] {
        f.map(|i| self.vertices[i as usize])
    }

    fn face_area(&self, f: &[u32; 3]) -> f64 {
        let [a, b, c] = self.corners(f);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn area(&self) -> f64 {
        self.faces.iter().map(|f| self.face_area(f)).sum()
    }

    /// Enclosed volume; positive when faces wind counter-clockwise seen from outside.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = self.corners(f);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// V - E + F over referenced vertices.
    pub fn euler_characteristic(&self) -> i64 {
        let mut verts = HashSet::new();
        let mut edges = HashSet::new();
        for f in &self.faces {
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                verts.insert(a);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        verts.len() as i64 - edges.len() as i64 + self.faces.len() as i64
    }

    pub fn flip(&mut self) {
        for f in &mut self.faces {
            f.swap(1, 2);
        }
    }

    /// `n` area-weighted uniform points, or `None` for a mesh without area.
    pub fn sample_points(&self, n: usize, rng: &mut impl Rng) -> Option<Vec<Vec3>> {
        let mut cdf = Vec::with_capacity(self.faces.len());
        let mut total = 0.0;
        for f in &self.faces {
            total += self.face_area(f);
            cdf.push(total);
        }
        if total <= 0.0 {
            return None;
        }
        let pts = (0..n)
            .map(|_| {
                let u = rng.gen::<f64>() * total;
                let i = cdf.partition_point(|c| *c <= u).min(cdf.len() - 1);
                let [a, b, c] = self.corners(&self.faces[i]);
                let (r1, r2) = (rng.gen::<f64>().sqrt(), rng.gen::<f64>());
                a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2)
            })
            .collect();
        Some(pts)
    }

    pub fn write_obj(&self, mut w: impl Write) -> io::Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
        }
        for f in &self.faces {
            writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
        Ok(())
    }

    pub fn write_stl(&self, mut w: impl Write) -> io::Result<()> {
        let mut header = [0u8; 80];
        let tag = b"binary stl";
        header[..tag.len()].copy_from_slice(tag);
        w.write_all(&header)?;
        w.write_all(&(self.faces.len() as u32).to_le_bytes())?;
        for f in &self.faces {
            let [a, b, c] = self.corners(f);
            let n = (b - a).cross(&(c - a));
            let n = if n.norm() > 0.0 { n.normalize() } else { n };
            for v in [n, a, b, c] {
                for x in v.iter() {
                    w.write_all(&(*x as f32).to_le_bytes())?;
                }
            }
            w.write_all(&[0, 0])?;
        }
        Ok(())
    }
}

/// Marching cubes over voxel centres. Values `>= iso` are inside; vertices on
/// shared edges are welded and faces are oriented outward.
pub fn marching_cubes(grid: &OccupancyGrid, iso: f64) -> Mesh {
    let [nx, ny, nz] = grid.dims;
    let mut mesh = Mesh::default();
    let mut welded: HashMap<(usize, usize), u32> = HashMap::new();
    let pos = |i: usize, j: usize, k: usize| grid.center(i, j, k);
    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let ids = CORNERS.map(|c| grid.index(i + c[0], j + c[1], k + c[2]));
                let vals = ids.map(|id| grid.values[id]);
                let mut case = 0usize;
                for (b, v) in vals.iter().enumerate() {
                    if *v < iso {
                        case |= 1 << b;
                    }
                }
                if case == 0 || case == 255 {
                    continue;
                }
                let row = &TRI_TABLE[case];
                for tri in row.chunks(3).take_while(|t| t[0] >= 0) {
                    let mut face = [0u32; 3];
                    for (slot, &e) in tri.iter().enumerate() {
                        let [a, b] = EDGES[e as usize];
                        let key = (ids[a].min(ids[b]), ids[a].max(ids[b]));
                        let v = *welded.entry(key).or_insert_with(|| {
                            let (ca, cb) = (CORNERS[a], CORNERS[b]);
                            let pa = pos(i + ca[0], j + ca[1], k + ca[2]);
                            let pb = pos(i + cb[0], j + cb[1], k + cb[2]);
                            let (va, vb) = (vals[a], vals[b]);
                            let t = if (vb - va).abs() > 1e-300 {
                                (iso - va) / (vb - va)
                            } else {
                                0.5
                            };
                            mesh.vertices.push(pa + (pb - pa) * t.clamp(0.0, 1.0));
                            (mesh.vertices.len() - 1) as u32
                        });
                        face[slot] = v;
                    }
                    if face[0] != face[1] && face[1] != face[2] && face[0] != face[2] {
                        mesh.faces.push(face);
                    }
                }
            }
        }
    }
    if mesh.signed_volume() < 0.0 {
        mesh.flip();
    }
    mesh
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csg::parse_csg;
    use crate::geometry::Aabb;
    use crate::io::grid::{rasterize, rasterize_field};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_grid_gives_empty_mesh() {
        let g = OccupancyGrid::new([3; 3], Aabb::cube(1.0), vec![0.0; 27]).unwrap();
        let m = marching_cubes(&g, 0.5);
        assert!(m.is_empty());
        assert!(m.sample_points(4, &mut ChaCha8Rng::seed_from_u64(0)).is_none());
    }

    #[test]
    fn single_voxel_is_a_closed_sphere() {
        let mut v = vec![0.0; 27];
        v[13] = 1.0;
        let g = OccupancyGrid::new([3; 3], Aabb::cube(1.5), v).unwrap();
        let m = marching_cubes(&g, 0.5);
        assert_eq!(m.faces.len(), 8);
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn sphere_area_and_volume() {
        let s = parse_csg("sphere(r=1)").unwrap();
        let g = rasterize_field(&s, [128; 3], &Aabb::cube(1.1)).unwrap();
        let m = marching_cubes(&g, 0.5);
        let pi = std::f64::consts::PI;
        assert!((m.area() - 4.0 * pi).abs() / (4.0 * pi) < 0.03, "{}", m.area());
        assert!((m.signed_volume() - 4.0 / 3.0 * pi).abs() < 0.02 * 4.0 / 3.0 * pi);
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn vertices_lie_near_the_surface() {
        let s = parse_csg("translate(0.1, 0, 0, rotate(0, 30, 0, cylinder(r=0.6)))").unwrap();
        let b = Aabb::cube(1.0);
        let g = rasterize_field(&s, [40; 3], &b).unwrap();
        let voxel = g.voxel_size().norm();
        let m = marching_cubes(&g, 0.5);
        assert!(!m.is_empty());
        for v in &m.vertices {
            assert!(s.primitives[0].sdf(v).abs() < voxel);
        }
        let hard = marching_cubes(&rasterize(&s, [40; 3], &b).unwrap(), 0.5);
        for v in &hard.vertices {
            assert!(s.primitives[0].sdf(v).abs() < voxel);
        }
    }

    #[test]
    fn writers_produce_expected_sizes() {
        let mut v = vec![0.0; 27];
        v[13] = 1.0;
        let m = marching_cubes(&OccupancyGrid::new([3; 3], Aabb::cube(1.5), v).unwrap(), 0.5);
        let mut stl = Vec::new();
        m.write_stl(&mut stl).unwrap();
        assert_eq!(stl.len(), 84 + 50 * m.faces.len());
        let mut obj = Vec::new();
        m.write_obj(&mut obj).unwrap();
        let text = String::from_utf8(obj).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), m.faces.len());
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), m.vertices.len());
    }
}
