//! Cartesian meshes: non-uniform slabs and tensor-product rectangles.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    Slab,
    Xy,
}

impl Geometry {
    pub fn dimension(self) -> usize {
        match self {
            Geometry::Slab => 1,
            Geometry::Xy => 2,
        }
    }
    pub fn tag(self) -> u8 {
        match self {
            Geometry::Slab => 1,
            Geometry::Xy => 2,
        }
    }
    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(Geometry::Slab),
            2 => Some(Geometry::Xy),
            _ => None,
        }
    }
}

/// Cells are ordered x-fastest: `cell = iy * nx + ix`.
#[derive(Debug, Clone)]
pub struct Mesh<T> {
    geometry: Geometry,
    x_faces: Vec<T>,
    y_faces: Vec<T>,
}

fn check_faces<T: Real>(faces: &[T], axis: &str) -> Result<()> {
    if faces.len() < 2 {
        return Err(Error::InvalidMesh(format!("{axis}: need at least one cell")));
    }
    if faces.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidMesh(format!("{axis}: faces must be strictly increasing")));
    }
    Ok(())
}

fn uniform_faces<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    let h = (b - a) / T::of_usize(n);
    (0..=n)
        .map(|i| if i == n { b } else { a + h * T::of_usize(i) })
        .collect()
}

impl<T: Real> Mesh<T> {
    pub fn slab(x_faces: Vec<T>) -> Result<Self> {
        check_faces(&x_faces, "x")?;
        Ok(Self {
            geometry: Geometry::Slab,
            x_faces,
            y_faces: vec![T::zero(), T::one()],
        })
    }

    pub fn uniform_slab(a: T, b: T, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMesh("zero cells".into()));
        }
        Self::slab(uniform_faces(a, b, n))
    }

    /// Concatenation of uniform pieces `(start, end, cells)`.
    pub fn piecewise_uniform_slab(pieces: &[(T, T, usize)]) -> Result<Self> {
        let mut faces: Vec<T> = Vec::new();
        for &(a, b, n) in pieces {
            if n == 0 {
                return Err(Error::InvalidMesh("zero cells in piece".into()));
            }
            let f = uniform_faces(a, b, n);
            if let Some(&last) = faces.last() {
                if last != a {
                    return Err(Error::InvalidMesh("pieces are not contiguous".into()));
                }
                faces.extend_from_slice(&f[1..]);
            } else {
                faces.extend(f);
            }
        }
        Self::slab(faces)
    }

    pub fn grid(x_faces: Vec<T>, y_faces: Vec<T>) -> Result<Self> {
        check_faces(&x_faces, "x")?;
        check_faces(&y_faces, "y")?;
        Ok(Self {
            geometry: Geometry::Xy,
            x_faces,
            y_faces,
        })
    }

    pub fn uniform_grid(x: (T, T), y: (T, T), nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidMesh("zero cells".into()));
        }
        Self::grid(uniform_faces(x.0, x.1, nx), uniform_faces(y.0, y.1, ny))
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }
    pub fn nx(&self) -> usize {
        self.x_faces.len() - 1
    }
    pub fn ny(&self) -> usize {
        self.y_faces.len() - 1
    }
    pub fn num_cells(&self) -> usize {
        self.nx() * self.ny()
    }
    pub fn x_faces(&self) -> &[T] {
        &self.x_faces
    }
    pub fn y_faces(&self) -> &[T] {
        &self.y_faces
    }
    #[inline]
    pub fn cell_index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx() + ix
    }
    #[inline]
    pub fn cell_coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx(), cell / self.nx())
    }
    #[inline]
    pub fn hx(&self, ix: usize) -> T {
        self.x_faces[ix + 1] - self.x_faces[ix]
    }
    #[inline]
    pub fn hy(&self, iy: usize) -> T {
        self.y_faces[iy + 1] - self.y_faces[iy]
    }
    pub fn measure(&self, cell: usize) -> T {
        let (ix, iy) = self.cell_coords(cell);
        self.hx(ix) * self.hy(iy)
    }
    pub fn center(&self, cell: usize) -> (T, T) {
        let (ix, iy) = self.cell_coords(cell);
        let half = T::lit(0.5);
        (
            half * (self.x_faces[ix] + self.x_faces[ix + 1]),
            half * (self.y_faces[iy] + self.y_faces[iy + 1]),
        )
    }
    /// Cell containing `(x, y)`; points on interior faces go to the right/top cell.
    pub fn locate(&self, x: T, y: T) -> Option<usize> {
        let find = |faces: &[T], p: T| -> Option<usize> {
            let n = faces.len() - 1;
            if p < faces[0] || p > faces[n] {
                return None;
            }
            let k = faces.partition_point(|&f| f <= p);
            Some(k.saturating_sub(1).min(n - 1))
        };
        let ix = find(&self.x_faces, x)?;
        let iy = match self.geometry {
            Geometry::Slab => 0,
            Geometry::Xy => find(&self.y_faces, y)?,
        };
        Some(self.cell_index(ix, iy))
    }
}
