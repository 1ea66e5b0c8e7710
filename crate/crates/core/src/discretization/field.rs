use std::io::Write;

use super::Grid;
use crate::error::{Result, TicError};

/// Values on time levels `start..=end` of a grid, row-major by level.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    grid: Grid,
    start: usize,
    end: usize,
    values: Vec<f64>,
}

impl Field2D {
    pub fn new(grid: Grid, start: usize, end: usize, values: Vec<f64>) -> Result<Self> {
        if start > end || end > grid.nt {
            return Err(TicError::usage(format!(
                "field levels {start}..={end} do not fit a grid with nt = {}",
                grid.nt
            )));
        }
        if values.len() != (end - start + 1) * grid.nx {
            return Err(TicError::usage(format!(
                "field has {} values, expected {} rows of {}",
                values.len(),
                end - start + 1,
                grid.nx
            )));
        }
        Ok(Field2D { grid, start, end, values })
    }

    pub fn filled(grid: Grid, start: usize, end: usize, value: f64) -> Self {
        let values = vec![value; (end - start + 1) * grid.nx];
        Field2D { grid, start, end, values }
    }

    pub fn from_fn(grid: Grid, start: usize, end: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity((end - start + 1) * grid.nx);
        for n in start..=end {
            let t = grid.t(n);
            values.extend((0..grid.nx).map(|i| f(t, grid.x(i))));
        }
        Field2D { grid, start, end, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn time_range(&self) -> (f64, f64) {
        (self.grid.t(self.start), self.grid.t(self.end))
    }

    pub fn covers(&self, n: usize) -> bool {
        (self.start..=self.end).contains(&n)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, n: usize) -> &[f64] {
        let nx = self.grid.nx;
        let k = n - self.start;
        &self.values[k * nx..(k + 1) * nx]
    }

    #[inline]
    pub fn row_mut(&mut self, n: usize) -> &mut [f64] {
        let nx = self.grid.nx;
        let k = n - self.start;
        &mut self.values[k * nx..(k + 1) * nx]
    }

    #[inline]
    pub fn at(&self, n: usize, i: usize) -> f64 {
        self.values[(n - self.start) * self.grid.nx + i]
    }

    /// (value, gradient, curvature) at a node; see [`stencil`].
    pub fn derivatives(&self, n: usize, i: usize) -> (f64, f64, f64) {
        stencil(self.row(n), i, self.grid.dx())
    }

    pub fn gradient_row(&self, n: usize) -> Vec<f64> {
        gradient(self.row(n), self.grid.dx())
    }

    /// Copy restricted to levels `start..=end`.
    pub fn restrict(&self, start: usize, end: usize) -> Result<Field2D> {
        if start < self.start || end > self.end || start > end {
            return Err(TicError::usage(format!(
                "cannot restrict levels {}..={} to {start}..={end}",
                self.start, self.end
            )));
        }
        let nx = self.grid.nx;
        let values = self.values[(start - self.start) * nx..(end - self.start + 1) * nx].to_vec();
        Ok(Field2D { grid: self.grid, start, end, values })
    }

    /// Linear interpolation in x of row `n`, clamped to the domain.
    pub fn interp_x(&self, n: usize, x: f64) -> f64 {
        interp_row(self.row(n), &self.grid, x)
    }

    /// sup |self − other| over common levels in `levels` and nodes in `nodes`.
    pub fn sup_diff(
        &self,
        other: &Field2D,
        levels: std::ops::RangeInclusive<usize>,
        nodes: std::ops::RangeInclusive<usize>,
    ) -> f64 {
        let mut sup = 0.0f64;
        for n in levels {
            if !self.covers(n) || !other.covers(n) {
                continue;
            }
            let (a, b) = (self.row(n), other.row(n));
            for i in nodes.clone() {
                sup = sup.max((a[i] - b[i]).abs());
            }
        }
        sup
    }

    /// CSV: header `t,x_0,…,x_{nx-1}`, then one row per time level.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = String::from("t");
        for x in self.grid.xs() {
            header.push(',');
            header.push_str(&x.to_string());
        }
        writeln!(out, "{header}")?;
        for n in self.start..=self.end {
            let mut line = self.grid.t(n).to_string();
            for v in self.row(n) {
                line.push(',');
                line.push_str(&v.to_string());
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Second-order (value, gradient, curvature): central inside, one-sided at the ends.
#[inline]
pub fn stencil(v: &[f64], i: usize, dx: f64) -> (f64, f64, f64) {
    let nx = v.len();
    let dx2 = dx * dx;
    if i > 0 && i + 1 < nx {
        return (
            v[i],
            (v[i + 1] - v[i - 1]) / (2.0 * dx),
            (v[i + 1] - 2.0 * v[i] + v[i - 1]) / dx2,
        );
    }
    let (s, a, b, c, d) = if i == 0 {
        (1.0, v[0], v[1], v[2], v.get(3).copied())
    } else {
        (-1.0, v[nx - 1], v[nx - 2], v[nx - 3], nx.checked_sub(4).map(|k| v[k]))
    };
    let p = s * (-3.0 * a + 4.0 * b - c) / (2.0 * dx);
    let pp = match d {
        Some(d) => (2.0 * a - 5.0 * b + 4.0 * c - d) / dx2,
        None => (a - 2.0 * b + c) / dx2,
    };
    (a, p, pp)
}

pub fn gradient(v: &[f64], dx: f64) -> Vec<f64> {
    (0..v.len()).map(|i| stencil(v, i, dx).1).collect()
}

pub fn interp_row(row: &[f64], grid: &Grid, x: f64) -> f64 {
    let s = ((x - grid.x_lo) / grid.dx()).clamp(0.0, (grid.nx - 1) as f64);
    let i = (s.floor() as usize).min(grid.nx - 2);
    let w = s - i as f64;
    (1.0 - w) * row[i] + w * row[i + 1]
}

/// Slices Θ(τ_k, ·, ·) on levels `τ_k..=nt`, one per τ knot.
#[derive(Debug, Clone, PartialEq)]
pub struct Field3D {
    grid: Grid,
    tau_levels: Vec<usize>,
    slices: Vec<Field2D>,
}

impl Field3D {
    pub fn new(grid: Grid, tau_levels: Vec<usize>, slices: Vec<Field2D>) -> Result<Self> {
        if tau_levels.is_empty() || tau_levels.len() != slices.len() {
            return Err(TicError::usage("Field3D needs one slice per τ level"));
        }
        if tau_levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(TicError::usage("τ levels must be strictly increasing"));
        }
        for (level, s) in tau_levels.iter().zip(&slices) {
            if s.start() != *level || s.end() != grid.nt || s.grid() != &grid {
                return Err(TicError::usage(format!(
                    "slice for τ level {level} must cover levels {level}..={} on the shared grid",
                    grid.nt
                )));
            }
        }
        Ok(Field3D { grid, tau_levels, slices })
    }

    /// Builds from τ times, which must coincide with grid levels.
    pub fn from_tau_knots(grid: Grid, tau_knots: &[f64], slices: Vec<Field2D>) -> Result<Self> {
        let levels = tau_knots
            .iter()
            .map(|&tau| {
                grid.level_of(tau).ok_or_else(|| {
                    TicError::usage(format!(
                        "τ knot {tau} is not a time level (dt = {}); align knots with the grid",
                        grid.dt()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Field3D::new(grid, levels, slices)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn tau_levels(&self) -> &[usize] {
        &self.tau_levels
    }

    pub fn tau_knots(&self) -> Vec<f64> {
        self.tau_levels.iter().map(|&l| self.grid.t(l)).collect()
    }

    pub fn slices(&self) -> &[Field2D] {
        &self.slices
    }

    pub fn slice(&self, k: usize) -> &Field2D {
        &self.slices[k]
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    /// Index of the slice with the largest τ level ≤ `level`.
    pub fn slice_index_for(&self, level: usize) -> Option<usize> {
        let idx = self.tau_levels.partition_point(|&l| l <= level);
        idx.checked_sub(1)
    }

    /// Θ(τ, t_n, x_i) with τ at `tau_level`, using the ℓ-matched slice.
    pub fn at(&self, tau_level: usize, n: usize, i: usize) -> Option<f64> {
        let k = self.slice_index_for(tau_level)?;
        let s = &self.slices[k];
        s.covers(n).then(|| s.at(n, i))
    }

    /// V(t, x) = Θ(t, t, x) by exact table lookup.
    pub fn diagonal(&self) -> Result<Field2D> {
        if self.tau_levels[0] != 0 {
            return Err(TicError::usage(format!(
                "first τ knot sits at level {}; the diagonal needs a slice starting at t = 0",
                self.tau_levels[0]
            )));
        }
        let nx = self.grid.nx;
        let mut values = Vec::with_capacity((self.grid.nt + 1) * nx);
        for n in 0..=self.grid.nt {
            let k = self.slice_index_for(n).expect("level 0 is covered");
            values.extend_from_slice(self.slices[k].row(n));
        }
        Field2D::new(self.grid, 0, self.grid.nt, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(-1.0, 1.0, 21, 10, 1.0).unwrap()
    }

    #[test]
    fn derivative_examples() {
        let g = grid();
        let c = Field2D::from_fn(g, 0, 10, |_, _| 3.5);
        let lin = Field2D::from_fn(g, 0, 10, |_, x| x);
        let quad = Field2D::from_fn(g, 0, 10, |_, x| x * x);
        for i in 0..g.nx {
            assert_eq!(c.derivatives(4, i), (3.5, 0.0, 0.0));
            let (_, p, pp) = lin.derivatives(4, i);
            assert!((p - 1.0).abs() < 1e-12 && pp.abs() < 1e-9);
            let (_, p, pp) = quad.derivatives(4, i);
            assert!((p - 2.0 * g.x(i)).abs() < 1e-12);
            assert!((pp - 2.0).abs() < 1e-9, "i={i} pp={pp}");
        }
    }

    #[test]
    fn boundary_stencils_are_second_order() {
        let err = |nx: usize| {
            let g = Grid::new(0.0, 1.0, nx, 1, 1.0).unwrap();
            let f = Field2D::from_fn(g, 0, 1, |_, x| x.sin());
            let (_, p, _) = f.derivatives(0, 0);
            let (_, q, _) = f.derivatives(0, nx - 1);
            (p - 1.0).abs().max((q - 1f64.cos()).abs())
        };
        let ratio = err(21) / err(41);
        assert!(ratio > 3.5, "ratio {ratio}");
    }

    #[test]
    fn diagonal_lookup() {
        let g = grid();
        let levels: Vec<usize> = (0..=10).collect();
        let slices: Vec<Field2D> = levels
            .iter()
            .map(|&l| {
                let tau = g.t(l);
                Field2D::from_fn(g, l, 10, move |t, _| tau + t)
            })
            .collect();
        let f = Field3D::new(g, levels, slices).unwrap();
        let d = f.diagonal().unwrap();
        for n in 0..=10 {
            assert!((d.at(n, 3) - 2.0 * g.t(n)).abs() < 1e-15);
        }
    }

    #[test]
    fn diagonal_of_tau_free_matches_any_slice() {
        let g = grid();
        let slices = [0usize, 4, 7]
            .iter()
            .map(|&l| Field2D::from_fn(g, l, 10, |t, x| t * x))
            .collect();
        let f = Field3D::new(g, vec![0, 4, 7], slices).unwrap();
        let d = f.diagonal().unwrap();
        for k in 0..3 {
            let s = f.slice(k);
            assert_eq!(d.sup_diff(s, s.start()..=10, 0..=20), 0.0);
        }
        assert_eq!(f.slice_index_for(5), Some(1));
        assert_eq!(f.at(9, 9, 0), Some(f.slice(2).at(9, 0)));
    }

    #[test]
    fn misaligned_knots_rejected() {
        let g = grid();
        let s = vec![Field2D::filled(g, 0, 10, 0.0)];
        assert!(matches!(
            Field3D::from_tau_knots(g, &[0.05], s.clone()),
            Err(TicError::Usage(_))
        ));
        assert!(Field3D::from_tau_knots(g, &[0.0], s).is_ok());
        let late = vec![Field2D::filled(g, 2, 10, 0.0)];
        let f = Field3D::new(g, vec![2], late).unwrap();
        assert!(matches!(f.diagonal(), Err(TicError::Usage(_))));
    }

    #[test]
    fn csv_layout() {
        let g = Grid::new(0.0, 1.0, 3, 2, 1.0).unwrap();
        let f = Field2D::from_fn(g, 0, 2, |t, x| t + x);
        let csv = f.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,0,0.5,1");
        assert_eq!(lines[1], "0,0,0.5,1");
        assert_eq!(lines[3], "1,1,1.5,2");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn shape_checks() {
        let g = grid();
        assert!(Field2D::new(g, 0, 10, vec![0.0; 5]).is_err());
        assert!(Field2D::new(g, 3, 11, vec![0.0; 9 * 21]).is_err());
        let f = Field2D::from_fn(g, 0, 10, |t, _| t);
        let r = f.restrict(2, 5).unwrap();
        assert_eq!(r.at(2, 0), g.t(2));
        assert!(f.restrict(0, 11).is_err());
        assert!((f.interp_x(5, 0.025) - 0.5).abs() < 1e-15);
    }
}
