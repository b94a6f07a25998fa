use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary semantics of the computational domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    /// Doubly periodic rectangle; nodes at `i*hx`, `i = 0..nx`.
    PeriodicTorus,
    /// Closed rectangle `[0,lx]x[0,ly]` with nodes on the boundary, `i = 0..=nx`.
    DirichletBox,
}

impl DomainKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DomainKind::PeriodicTorus => "periodic-torus",
            DomainKind::DirichletBox => "dirichlet-box",
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic-torus" => Ok(DomainKind::PeriodicTorus),
            "dirichlet-box" => Ok(DomainKind::DirichletBox),
            other => Err(Error::param(
                "domain_kind",
                "periodic-torus | dirichlet-box",
                other,
            )),
        }
    }
}

/// Neighbor direction on the node lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    East,
    West,
    North,
    South,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::East, Dir::West, Dir::North, Dir::South];
}

/// Uniform node lattice over a rectangle or torus.
///
/// `nx`, `ny` count cells. A torus has `nx*ny` nodes; a box has
/// `(nx+1)*(ny+1)` nodes including the boundary layer. Node storage is
/// row-major with `i` (the x index) fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub domain_kind: DomainKind,
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(domain_kind: DomainKind, lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        let g = GridSpec {
            domain_kind,
            lx,
            ly,
            nx,
            ny,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn torus(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(DomainKind::PeriodicTorus, lx, ly, nx, ny)
    }

    pub fn dirichlet_box(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(DomainKind::DirichletBox, lx, ly, nx, ny)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 8 || self.ny < 8 {
            return Err(Error::InvalidGrid(format!(
                "cell counts must be >= 8, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.lx > 0.0 && self.ly > 0.0 && self.lx.is_finite() && self.ly.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "extents must be positive and finite, got {}x{}",
                self.lx, self.ly
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    #[inline]
    pub fn is_periodic(&self) -> bool {
        self.domain_kind == DomainKind::PeriodicTorus
    }

    /// Nodes along x.
    #[inline]
    pub fn mx(&self) -> usize {
        match self.domain_kind {
            DomainKind::PeriodicTorus => self.nx,
            DomainKind::DirichletBox => self.nx + 1,
        }
    }

    /// Nodes along y.
    #[inline]
    pub fn my(&self) -> usize {
        match self.domain_kind {
            DomainKind::PeriodicTorus => self.ny,
            DomainKind::DirichletBox => self.ny + 1,
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.mx() * self.my()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.mx() + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.mx(), k / self.mx())
    }

    #[inline]
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.hx(), j as f64 * self.hy())
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        match self.domain_kind {
            DomainKind::PeriodicTorus => false,
            DomainKind::DirichletBox => i == 0 || j == 0 || i == self.nx || j == self.ny,
        }
    }

    /// Quadrature weight: plain `hx*hy` on the torus, trapezoid on the box.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let base = self.hx() * self.hy();
        match self.domain_kind {
            DomainKind::PeriodicTorus => base,
            DomainKind::DirichletBox => {
                let wx = if i == 0 || i == self.nx { 0.5 } else { 1.0 };
                let wy = if j == 0 || j == self.ny { 0.5 } else { 1.0 };
                base * wx * wy
            }
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.node_count());
        for j in 0..self.my() {
            for i in 0..self.mx() {
                w.push(self.weight(i, j));
            }
        }
        w
    }

    /// Neighboring node index, wrapping on the torus; `None` past a box wall.
    #[inline]
    pub fn neighbor(&self, i: usize, j: usize, dir: Dir) -> Option<usize> {
        let (mx, my) = (self.mx(), self.my());
        let periodic = self.is_periodic();
        let (ni, nj) = match dir {
            Dir::East => {
                if i + 1 < mx {
                    (i + 1, j)
                } else if periodic {
                    (0, j)
                } else {
                    return None;
                }
            }
            Dir::West => {
                if i > 0 {
                    (i - 1, j)
                } else if periodic {
                    (mx - 1, j)
                } else {
                    return None;
                }
            }
            Dir::North => {
                if j + 1 < my {
                    (i, j + 1)
                } else if periodic {
                    (i, 0)
                } else {
                    return None;
                }
            }
            Dir::South => {
                if j > 0 {
                    (i, j - 1)
                } else if periodic {
                    (i, my - 1)
                } else {
                    return None;
                }
            }
        };
        Some(self.idx(ni, nj))
    }

    /// Indices of the nodes not on the box boundary (all nodes on a torus).
    pub fn interior_nodes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for j in 0..self.my() {
            for i in 0..self.mx() {
                if !self.is_boundary(i, j) {
                    out.push(self.idx(i, j));
                }
            }
        }
        out
    }

    pub(crate) fn check_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{what}: {} {}x{} vs {} {}x{}",
                self.domain_kind, self.nx, self.ny, other.domain_kind, other.nx, other.ny
            )));
        }
        Ok(())
    }
}
