//! Uniform time grids on [0, T], sampled functions and the singularity-aware
//! product-integration quadrature every other module is built on.
//!
//! Weakly singular weights are never evaluated pointwise at their
//! singularity: each cell contributes through the closed-form moments of the
//! weight against the linear shape functions, which is exact for piecewise
//! linear data.

use crate::error::{invalid_arg, invalid_data, Error, Result};

pub const MIN_CELLS: usize = 8;

/// Uniform partition of [0, T] into `n_cells` cells (`n_cells + 1` nodes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    horizon: f64,
    n_cells: usize,
}

pub fn make_grid(horizon: f64, n_cells: usize) -> Result<Grid> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return invalid_arg(format!("horizon must be positive and finite, got {horizon}"));
    }
    if n_cells < MIN_CELLS {
        return invalid_arg(format!("n_cells must be >= {MIN_CELLS}, got {n_cells}"));
    }
    Ok(Grid { horizon, n_cells })
}

impl Grid {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_cells as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.horizon / self.n_cells as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_cells).map(|k| self.node(k)).collect()
    }

    /// Index of the grid node equal to `x` (within a relative half-cell
    /// rounding tolerance).
    pub fn index_of(&self, x: f64) -> Result<usize> {
        let k = (x / self.dt()).round();
        if k < 0.0 || k > self.n_cells as f64 {
            return invalid_arg(format!("{x} outside [0, {}]", self.horizon));
        }
        let k = k as usize;
        if (self.node(k) - x).abs() > 1e-9 * self.horizon.max(1.0) {
            return invalid_arg(format!("{x} is not a grid node (dt = {})", self.dt()));
        }
        Ok(k)
    }

    /// Refine by a whole-number factor so nested grids share nodes.
    pub fn refine(&self, factor: usize) -> Result<Grid> {
        if factor == 0 {
            return invalid_arg("refinement factor must be positive");
        }
        make_grid(self.horizon, self.n_cells * factor)
    }
}

/// Node values on a grid, interpreted as piecewise linear between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return invalid_arg(format!(
                "expected {} node values, got {}",
                grid.n_nodes(),
                values.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid_data("non-finite node value");
        }
        Ok(SampledFunction { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.n_nodes()).map(|k| f(grid.node(k))).collect();
        SampledFunction::new(grid, values)
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        SampledFunction::new(grid, vec![c; grid.n_nodes()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Piecewise-linear evaluation at an arbitrary point of [0, T].
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.grid.n_cells();
        let pos = (x / self.grid.dt()).clamp(0.0, n as f64);
        let k = (pos.floor() as usize).min(n - 1);
        let w = pos - k as f64;
        self.values[k] * (1.0 - w) + self.values[k + 1] * w
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        SampledFunction::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Restriction of the sampled values to a coarser grid sharing nodes.
    pub fn coarsen_to(&self, grid: Grid) -> Result<Self> {
        let factor = self.grid.n_cells() / grid.n_cells();
        if factor * grid.n_cells() != self.grid.n_cells()
            || (self.grid.horizon() - grid.horizon()).abs() > 1e-12
        {
            return invalid_arg("grids do not nest");
        }
        let values = (0..grid.n_nodes()).map(|k| self.values[k * factor]).collect();
        SampledFunction::new(grid, values)
    }

    pub fn same_grid(&self, other: &SampledFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }
}

/// Moments of the weight (u - x)^e over a cell at distances [d0, d1] from x:
/// M0 = int w du, M1 = int (u - u_left) w du, where u_left is the cell's left
/// endpoint. Valid for e > -2, e != -1; d0 = 0 requires e > -1.
#[inline]
pub(crate) fn weight_moments(d0: f64, d1: f64, e: f64) -> (f64, f64) {
    let p1 = e + 1.0;
    let p2 = e + 2.0;
    let m0 = (d1.powf(p1) - d0.powf(p1)) / p1;
    let m1 = (d1.powf(p2) - d0.powf(p2)) / p2 - d0 * m0;
    (m0, m1)
}

/// Contribution of one cell: endpoint values (g0, g1) folded linearly against
/// the weight moments.
#[inline]
pub(crate) fn fold_linear(g0: f64, g1: f64, width: f64, m0: f64, m1: f64) -> f64 {
    g0 * m0 + (g1 - g0) / width * m1
}

/// int_x^T f(u) (u - x)^{exponent - 1} du by product integration, exact for
/// piecewise-linear f. The weight is integrated in closed form on every cell.
pub fn singular_weight_integral(f: &SampledFunction, x: f64, exponent: f64) -> Result<f64> {
    let grid = f.grid();
    let t_end = grid.horizon();
    if !(exponent > 0.0 && exponent < 1.0) {
        return invalid_arg(format!("exponent must lie in (0,1), got {exponent}"));
    }
    if !(x >= 0.0 && x < t_end) {
        return invalid_arg(format!("x = {x} outside [0, T)"));
    }
    if f.values().iter().any(|v| v.is_nan()) {
        return invalid_data("NaN in integrand");
    }
    let n = grid.n_cells();
    let dt = grid.dt();
    let first = ((x / dt).floor() as usize).min(n - 1);
    let mut acc = 0.0;
    for k in first..n {
        let u0 = grid.node(k).max(x);
        let u1 = grid.node(k + 1);
        if u1 <= u0 {
            continue;
        }
        let (m0, m1) = weight_moments(u0 - x, u1 - x, exponent - 1.0);
        let g0 = f.eval(u0);
        let g1 = f.eval(u1);
        acc += fold_linear(g0, g1, u1 - u0, m0, m1);
    }
    Ok(acc)
}

/// Trapezoid integral over the whole grid.
pub fn trapezoid(f: &SampledFunction) -> f64 {
    let dt = f.grid().dt();
    let v = f.values();
    let inner: f64 = v[1..v.len() - 1].iter().sum();
    dt * (0.5 * (v[0] + v[v.len() - 1]) + inner)
}

/// Trapezoid-rule approximation of (int |f|^p)^{1/p}.
pub fn l_p_norm(f: &SampledFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return invalid_arg(format!("p must be >= 1, got {p}"));
    }
    let g = f.map(|v| v.abs().powf(p))?;
    Ok(trapezoid(&g).powf(1.0 / p))
}

/// L^p distance between two sampled functions on the same grid.
pub fn l_p_distance(a: &SampledFunction, b: &SampledFunction, p: f64) -> Result<f64> {
    a.same_grid(b)?;
    let diff: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x - y)
        .collect();
    l_p_norm(&SampledFunction::new(*a.grid(), diff)?, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn make_grid_uniform_nodes() {
        let g = make_grid(1.0, 8).unwrap();
        let nodes = g.nodes();
        assert_eq!(nodes.len(), 9);
        assert_relative_eq!(nodes[1], 0.125);
        assert_relative_eq!(nodes[8], 1.0);
        let g2 = make_grid(2.0, 16).unwrap();
        assert_relative_eq!(g2.dt(), 0.125);
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(make_grid(1.0, 7).is_err());
        assert!(make_grid(0.0, 16).is_err());
        assert!(make_grid(-1.0, 16).is_err());
    }

    #[test]
    fn swi_constant_closed_form() {
        let g = make_grid(1.0, 64).unwrap();
        let f = SampledFunction::constant(g, 1.0).unwrap();
        for &(x, a) in &[(0.0, 0.3), (0.25, 0.45), (0.5, 0.1)] {
            let got = singular_weight_integral(&f, x, a).unwrap();
            assert_relative_eq!(got, (1.0 - x).powf(a) / a, max_relative = 1e-12);
        }
    }

    #[test]
    fn swi_linear_closed_form() {
        let g = make_grid(1.0, 64).unwrap();
        let x = 0.25;
        let a = 0.3;
        let f = SampledFunction::from_fn(g, |u| u - x).unwrap();
        let got = singular_weight_integral(&f, x, a).unwrap();
        assert_relative_eq!(got, (1.0 - x).powf(1.0 + a) / (1.0 + a), max_relative = 1e-12);
    }

    #[test]
    fn swi_rejects_out_of_range() {
        let g = make_grid(1.0, 8).unwrap();
        let f = SampledFunction::constant(g, 1.0).unwrap();
        assert!(singular_weight_integral(&f, 1.0, 0.3).is_err());
        assert!(singular_weight_integral(&f, 0.5, 1.0).is_err());
    }

    #[test]
    fn swi_matches_refined_oracle_for_cubic() {
        // random-ish cubic, alpha = 0.3, x = 0.25 vs 64x finer grid
        let coarse = make_grid(1.0, 64).unwrap();
        let fine = coarse.refine(64).unwrap();
        let cubic = |u: f64| 0.7 - 1.3 * u + 0.9 * u * u + 0.4 * u * u * u;
        let fc = SampledFunction::from_fn(coarse, cubic).unwrap();
        let ff = SampledFunction::from_fn(fine, cubic).unwrap();
        let a = 0.3;
        let got = singular_weight_integral(&fc, 0.25, a).unwrap();
        let oracle = singular_weight_integral(&ff, 0.25, a).unwrap();
        assert_relative_eq!(got, oracle, max_relative = 1e-4);
    }

    #[test]
    fn swi_near_one_exponent_approaches_trapezoid() {
        let g = make_grid(1.0, 256).unwrap();
        let f = SampledFunction::from_fn(g, |u| 1.0 + u * u).unwrap();
        let x = 0.5;
        // plain integral of f over [x, T]
        let exact = 0.5 + (1.0 - 0.125) / 3.0;
        let v1 = singular_weight_integral(&f, x, 0.999).unwrap();
        let v2 = singular_weight_integral(&f, x, 0.9999).unwrap();
        assert!((v2 - exact).abs() < (v1 - exact).abs() + 1e-12);
        assert!((v2 - exact).abs() < 1e-3);
    }

    #[test]
    fn lp_norm_basics() {
        let g = make_grid(1.0, 1024).unwrap();
        let c = SampledFunction::constant(g, -2.5).unwrap();
        assert_relative_eq!(l_p_norm(&c, 3.0).unwrap(), 2.5, max_relative = 1e-12);
        let lin = SampledFunction::from_fn(g, |u| u).unwrap();
        assert_relative_eq!(
            l_p_norm(&lin, 2.0).unwrap(),
            1.0 / 3f64.sqrt(),
            max_relative = 1e-4
        );
        assert!(l_p_norm(&lin, 0.5).is_err());
    }

    #[test]
    fn lp_norm_matches_refined_oracle() {
        let coarse = make_grid(1.0, 128).unwrap();
        let fine = coarse.refine(16).unwrap();
        let f = |u: f64| (3.1 * u).sin() + 0.3 * u;
        let fc = SampledFunction::from_fn(coarse, f).unwrap();
        let ff = SampledFunction::from_fn(fine, f).unwrap();
        let got = l_p_norm(&fc, 4.0).unwrap();
        let oracle = l_p_norm(&ff, 4.0).unwrap();
        assert_relative_eq!(got, oracle, max_relative = 1e-3);
    }
}
