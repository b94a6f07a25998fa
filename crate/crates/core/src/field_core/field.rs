use crate::error::{Error, Result};

use super::grid::GridSpec;

fn check_len(grid: &GridSpec, len: usize, what: &str) -> Result<()> {
    if len != grid.node_count() {
        return Err(Error::GridMismatch(format!(
            "{what}: {len} values for {} nodes",
            grid.node_count()
        )));
    }
    Ok(())
}

fn sample(grid: &GridSpec, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.node_count());
    for j in 0..grid.my() {
        for i in 0..grid.mx() {
            let (x, y) = grid.coords(i, j);
            out.push(f(x, y));
        }
    }
    out
}

/// One real value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        check_len(&grid, values.len(), "scalar field")?;
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.node_count()],
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        ScalarField {
            values: sample(&grid, f),
            grid,
        }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Two-component vector field sampled on the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2 {
    grid: GridSpec,
    u: Vec<f64>,
    w: Vec<f64>,
}

impl VectorField2 {
    pub fn new(grid: GridSpec, u: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        check_len(&grid, u.len(), "vector field u")?;
        check_len(&grid, w.len(), "vector field w")?;
        Ok(VectorField2 { grid, u, w })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.node_count();
        VectorField2 {
            grid,
            u: vec![0.0; n],
            w: vec![0.0; n],
        }
    }

    pub fn constant(grid: GridSpec, c: [f64; 2]) -> Self {
        let n = grid.node_count();
        VectorField2 {
            grid,
            u: vec![c[0]; n],
            w: vec![c[1]; n],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let u = sample(&grid, |x, y| f(x, y)[0]);
        let w = sample(&grid, |x, y| f(x, y)[1]);
        VectorField2 { grid, u, w }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    #[inline]
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    #[inline]
    pub fn components_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.u, &mut self.w)
    }

    pub fn into_components(self) -> (Vec<f64>, Vec<f64>) {
        (self.u, self.w)
    }

    pub fn component(&self, c: usize) -> ScalarField {
        let values = if c == 0 { self.u.clone() } else { self.w.clone() };
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    pub fn from_components(u: ScalarField, w: ScalarField) -> Result<Self> {
        u.grid.check_same(&w.grid, "vector components")?;
        Ok(VectorField2 {
            grid: u.grid,
            u: u.values,
            w: w.values,
        })
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self
                .u
                .iter()
                .zip(&self.w)
                .map(|(a, b)| a.hypot(*b))
                .collect(),
        }
    }

    pub fn max_magnitude(&self) -> f64 {
        self.u
            .iter()
            .zip(&self.w)
            .map(|(a, b)| a.hypot(*b))
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        VectorField2 {
            grid: self.grid,
            u: self.u.iter().map(|v| v * s).collect(),
            w: self.w.iter().map(|v| v * s).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.w).all(|v| v.is_finite())
    }
}

/// Director field with values intended on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectorField {
    grid: GridSpec,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl DirectorField {
    pub fn new(grid: GridSpec, d1: Vec<f64>, d2: Vec<f64>) -> Result<Self> {
        check_len(&grid, d1.len(), "director d1")?;
        check_len(&grid, d2.len(), "director d2")?;
        Ok(DirectorField { grid, d1, d2 })
    }

    /// Constant director; `[0, 1]` is the vertical unit vector.
    pub fn constant(grid: GridSpec, c: [f64; 2]) -> Self {
        let n = grid.node_count();
        DirectorField {
            grid,
            d1: vec![c[0]; n],
            d2: vec![c[1]; n],
        }
    }

    pub fn vertical(grid: GridSpec) -> Self {
        Self::constant(grid, [0.0, 1.0])
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let d1 = sample(&grid, |x, y| f(x, y)[0]);
        let d2 = sample(&grid, |x, y| f(x, y)[1]);
        DirectorField { grid, d1, d2 }
    }

    /// `d = (sin phi, cos phi)`, measuring the angle from the vertical.
    pub fn from_angle(grid: GridSpec, phi: impl Fn(f64, f64) -> f64) -> Self {
        let angles = sample(&grid, phi);
        DirectorField {
            grid,
            d1: angles.iter().map(|p| p.sin()).collect(),
            d2: angles.iter().map(|p| p.cos()).collect(),
        }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn d1(&self) -> &[f64] {
        &self.d1
    }

    #[inline]
    pub fn d2(&self) -> &[f64] {
        &self.d2
    }

    #[inline]
    pub fn components_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.d1, &mut self.d2)
    }

    pub fn into_components(self) -> (Vec<f64>, Vec<f64>) {
        (self.d1, self.d2)
    }

    pub fn as_vector(&self) -> VectorField2 {
        VectorField2 {
            grid: self.grid,
            u: self.d1.clone(),
            w: self.d2.clone(),
        }
    }

    pub fn from_vector(v: VectorField2) -> Self {
        DirectorField {
            grid: v.grid,
            d1: v.u,
            d2: v.w,
        }
    }

    /// Largest `| |d|^2 - 1 |` over the nodes.
    pub fn unit_residual(&self) -> f64 {
        self.d1
            .iter()
            .zip(&self.d2)
            .map(|(a, b)| (a * a + b * b - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Fails with the first offending node if the unit constraint is violated.
    pub fn check_unit(&self, tol: f64) -> Result<()> {
        for (k, (a, b)) in self.d1.iter().zip(&self.d2).enumerate() {
            let r = (a * a + b * b - 1.0).abs();
            if !(r <= tol) {
                return Err(Error::Consistency {
                    node: k,
                    what: format!("| |d|^2 - 1 | = {r:.3e} exceeds {tol:.1e}"),
                });
            }
        }
        Ok(())
    }

    /// Rescales every node to unit length.
    pub fn renormalize(&mut self) {
        for (a, b) in self.d1.iter_mut().zip(self.d2.iter_mut()) {
            let r = a.hypot(*b);
            if r > 0.0 {
                *a /= r;
                *b /= r;
            }
        }
    }

    pub fn min_d2(&self) -> f64 {
        self.d2.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.d1.iter().chain(&self.d2).all(|v| v.is_finite())
    }
}

/// 2x2 tensor per node, stored by component.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField2 {
    grid: GridSpec,
    pub xx: Vec<f64>,
    pub xy: Vec<f64>,
    pub yx: Vec<f64>,
    pub yy: Vec<f64>,
}

impl TensorField2 {
    pub fn new(
        grid: GridSpec,
        xx: Vec<f64>,
        xy: Vec<f64>,
        yx: Vec<f64>,
        yy: Vec<f64>,
    ) -> Result<Self> {
        for (c, name) in [(&xx, "xx"), (&xy, "xy"), (&yx, "yx"), (&yy, "yy")] {
            check_len(&grid, c.len(), name)?;
        }
        Ok(TensorField2 {
            grid,
            xx,
            xy,
            yx,
            yy,
        })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn trace(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.xx.iter().zip(&self.yy).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.xy
            .iter()
            .zip(&self.yx)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::torus(1.0, 1.0, 8, 8).unwrap()
    }

    #[test]
    fn rejects_wrong_length() {
        assert!(ScalarField::new(grid(), vec![0.0; 63]).is_err());
        assert!(VectorField2::new(grid(), vec![0.0; 64], vec![0.0; 65]).is_err());
    }

    #[test]
    fn angle_parameterization_is_unit() {
        let d = DirectorField::from_angle(grid(), |x, y| 3.0 * x - y);
        assert!(d.unit_residual() < 1e-15);
        assert!(d.check_unit(1e-14).is_ok());
    }

    #[test]
    fn check_unit_names_node() {
        let mut d = DirectorField::vertical(grid());
        d.components_mut().1[17] = 0.5;
        match d.check_unit(1e-12) {
            Err(Error::Consistency { node, .. }) => assert_eq!(node, 17),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn renormalize_projects() {
        let mut d = DirectorField::constant(grid(), [3.0, 4.0]);
        d.renormalize();
        assert!((d.d1()[0] - 0.6).abs() < 1e-15);
        assert!(d.unit_residual() < 1e-15);
    }
}
