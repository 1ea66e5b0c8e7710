use super::{Boundary, SchemeConfig, StepperKind};
use crate::discretization::{Field2D, Grid};
use crate::error::{Result, TicError};
use crate::problem::ProblemSpec;

/// A problem bound to a grid and scheme, after the stability check.
#[derive(Debug, Clone)]
pub struct Stepper {
    spec: ProblemSpec,
    grid: Grid,
    scheme: SchemeConfig,
    controls: Vec<f64>,
    dt: f64,
    dx: f64,
}

/// Pointwise verification diagnostics; the last row (terminal level) is zero.
#[derive(Debug, Clone)]
pub struct GapReport {
    /// max(0, ℍ(𝕦) − min_u ℍ(u))
    pub argmin_gap: Field2D,
    /// |V_n − S_𝕦(V_{n+1})| / dt for the scheme's own step S
    pub pde_residual: Field2D,
}

impl GapReport {
    pub fn combined(&self) -> Field2D {
        let v = self
            .argmin_gap
            .values()
            .iter()
            .zip(self.pde_residual.values())
            .map(|(a, b)| a + b)
            .collect();
        let g = self.argmin_gap.grid();
        Field2D::new(*g, self.argmin_gap.start(), self.argmin_gap.end(), v).expect("same shape")
    }

    pub fn max_gap(&self) -> f64 {
        self.argmin_gap.values().iter().copied().fold(0.0, f64::max)
    }

    pub fn mean_gap(&self) -> f64 {
        let v = self.argmin_gap.values();
        v.iter().sum::<f64>() / v.len() as f64
    }

    pub fn max_residual(&self) -> f64 {
        self.pde_residual.values().iter().copied().fold(0.0, f64::max)
    }
}

impl Stepper {
    pub fn new(spec: &ProblemSpec, grid: &Grid, scheme: &SchemeConfig) -> Result<Self> {
        if (spec.horizon - grid.horizon).abs() > 1e-12 * spec.horizon {
            return Err(TicError::usage(format!(
                "grid horizon {} differs from the problem horizon {}",
                grid.horizon, spec.horizon
            )));
        }
        if !(scheme.cfl_safety > 0.0 && scheme.cfl_safety <= 1.0) {
            return Err(TicError::config(format!(
                "cfl_safety must lie in (0, 1], got {}",
                scheme.cfl_safety
            )));
        }
        if scheme.control_points == 0 {
            return Err(TicError::usage("control_points must be positive"));
        }
        let controls = spec.controls.grid(scheme.control_points);
        let stepper = Stepper {
            spec: spec.clone(),
            grid: *grid,
            scheme: *scheme,
            controls,
            dt: grid.dt(),
            dx: grid.dx(),
        };
        let bound = stepper.max_stable_dt()?;
        if stepper.dt > bound {
            let need = (grid.horizon / bound).ceil() as usize;
            return Err(TicError::config(format!(
                "CFL violation: dt = {:.6e} exceeds the stable bound {:.6e} for the {:?} stepper; use dt <= {:.6e} (nt >= {need})",
                stepper.dt, bound, scheme.stepper, bound
            )));
        }
        Ok(stepper)
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn scheme(&self) -> &SchemeConfig {
        &self.scheme
    }

    pub fn controls(&self) -> &[f64] {
        &self.controls
    }

    /// Largest dt for which the scheme stays monotone, from sampled coefficient bounds.
    pub fn max_stable_dt(&self) -> Result<f64> {
        let (a_max, b_max, gy_max) = self.coefficient_bounds()?;
        let dx = self.dx;
        let denom = match self.scheme.stepper {
            StepperKind::ExplicitUpwind => 2.0 * a_max + b_max * dx + dx * dx * gy_max,
            StepperKind::SemiImplicitDiffusion => b_max * dx + dx * dx * gy_max,
        };
        Ok(if denom > 0.0 { self.scheme.cfl_safety * dx * dx / denom } else { f64::INFINITY })
    }

    fn coefficient_bounds(&self) -> Result<(f64, f64, f64)> {
        let g = &self.grid;
        let stride = (g.nt / 32).max(1);
        let mut levels: Vec<usize> = (0..=g.nt).step_by(stride).collect();
        if levels.last() != Some(&g.nt) {
            levels.push(g.nt);
        }
        let (mut a_max, mut b_max, mut gy_max) = (0.0f64, 0.0f64, 0.0f64);
        for &n in &levels {
            let t = g.t(n);
            for i in 0..g.nx {
                let x = g.x(i);
                for &u in &self.controls {
                    let s = self.spec.sigma(t, x, u);
                    let b = self.spec.b(t, x, u);
                    let gy = 0.5 * (self.spec.g(t, t, x, u, 1.0, 0.0) - self.spec.g(t, t, x, u, -1.0, 0.0));
                    if !(s.is_finite() && b.is_finite() && gy.is_finite()) {
                        return Err(TicError::domain(format!(
                            "non-finite coefficient at (t={t}, x={x}, u={u})"
                        )));
                    }
                    a_max = a_max.max(0.5 * s * s);
                    b_max = b_max.max(b.abs());
                    gy_max = gy_max.max(gy.abs());
                }
            }
        }
        Ok((a_max, b_max, gy_max))
    }

    #[inline]
    fn neighbours(&self, v: &[f64], i: usize) -> (f64, f64, f64) {
        let nx = v.len();
        let v0 = v[i];
        let vm = if i > 0 {
            v[i - 1]
        } else {
            match self.scheme.boundary {
                Boundary::LinearExtrapolation => 2.0 * v[0] - v[1],
                Boundary::Neumann => v[1],
            }
        };
        let vp = if i + 1 < nx {
            v[i + 1]
        } else {
            match self.scheme.boundary {
                Boundary::LinearExtrapolation => 2.0 * v[nx - 1] - v[nx - 2],
                Boundary::Neumann => v[nx - 2],
            }
        };
        (vm, v0, vp)
    }

    /// Discrete ℍ at node i for control u, on the row `v` at time t.
    ///
    /// Explicit stepper: central drift differences while the cell Péclet number
    /// is at most one, upwind otherwise. Semi-implicit stepper: upwind drift.
    #[inline]
    pub fn discrete_h(&self, tau: f64, t: f64, i: usize, v: &[f64], u: f64) -> f64 {
        let x = self.grid.x(i);
        let (vm, v0, vp) = self.neighbours(v, i);
        let dx = self.dx;
        let sigma = self.spec.sigma(t, x, u);
        let a = 0.5 * sigma * sigma;
        let b = self.spec.b(t, x, u);
        let central = self.scheme.stepper == StepperKind::ExplicitUpwind && 2.0 * a >= b.abs() * dx;
        let p = if central {
            (vp - vm) / (2.0 * dx)
        } else if b > 0.0 {
            (vp - v0) / dx
        } else {
            (v0 - vm) / dx
        };
        let pp = (vp - 2.0 * v0 + vm) / (dx * dx);
        a * pp + b * p + self.spec.g(tau, t, x, u, v0, p * sigma)
    }

    /// Grid argmin of the discrete ℍ at node i; ties go to the smaller control.
    #[inline]
    pub fn argmin_at(&self, tau: f64, t: f64, i: usize, v: &[f64]) -> (f64, f64) {
        let mut best_u = self.controls[0];
        let mut best = self.discrete_h(tau, t, i, v, best_u);
        for &u in &self.controls[1..] {
            let h = self.discrete_h(tau, t, i, v, u);
            if h < best || (h == best && u < best_u) || best.is_nan() {
                best = h;
                best_u = u;
            }
        }
        (best_u, best)
    }

    pub fn argmin_row(&self, tau: f64, t: f64, v: &[f64], out_u: &mut [f64]) {
        for i in 0..v.len() {
            out_u[i] = self.argmin_at(tau, t, i, v).0;
        }
    }

    /// One HJB step from level n+1 (`next`) to level n.
    pub fn hjb_step(&self, tau: f64, n: usize, next: &[f64], out_v: &mut [f64], out_u: &mut [f64]) -> Result<()> {
        let t = self.grid.t(n + 1);
        for i in 0..next.len() {
            out_u[i] = self.argmin_at(tau, t, i, next).0;
        }
        self.advance(tau, n, next, out_u, out_v)
    }

    /// One step under given controls from level n+1 to level n.
    pub fn policy_step(&self, tau: f64, n: usize, next: &[f64], controls: &[f64], out_v: &mut [f64]) -> Result<()> {
        self.advance(tau, n, next, controls, out_v)
    }

    fn advance(&self, tau: f64, n: usize, next: &[f64], controls: &[f64], out: &mut [f64]) -> Result<()> {
        let t = self.grid.t(n + 1);
        let dt = self.dt;
        match self.scheme.stepper {
            StepperKind::ExplicitUpwind => {
                for i in 0..next.len() {
                    out[i] = next[i] + dt * self.discrete_h(tau, t, i, next, controls[i]);
                }
            }
            StepperKind::SemiImplicitDiffusion => self.implicit_diffusion(tau, t, next, controls, out),
        }
        match out.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(node) => Err(TicError::NumericalBlowup {
                time_index: n,
                node,
                detail: format!("value {} after stepping from t = {t}", out[node]),
            }),
        }
    }

    /// (I − dt·A) V_n = V_{n+1} + dt·(ℍ − a·P) with A the diffusion stencil.
    fn implicit_diffusion(&self, tau: f64, t: f64, next: &[f64], controls: &[f64], out: &mut [f64]) {
        let nx = next.len();
        let (dt, dx2) = (self.dt, self.dx * self.dx);
        let mut lower = vec![0.0; nx];
        let mut diag = vec![0.0; nx];
        let mut upper = vec![0.0; nx];
        for i in 0..nx {
            let u = controls[i];
            let x = self.grid.x(i);
            let sigma = self.spec.sigma(t, x, u);
            let a = 0.5 * sigma * sigma;
            let (vm, v0, vp) = self.neighbours(next, i);
            let explicit = self.discrete_h(tau, t, i, next, u) - a * (vp - 2.0 * v0 + vm) / dx2;
            out[i] = next[i] + dt * explicit;
            let c = dt * a / dx2;
            let boundary = i == 0 || i == nx - 1;
            match (boundary, self.scheme.boundary) {
                (false, _) => {
                    lower[i] = -c;
                    diag[i] = 1.0 + 2.0 * c;
                    upper[i] = -c;
                }
                (true, Boundary::LinearExtrapolation) => diag[i] = 1.0,
                (true, Boundary::Neumann) => {
                    diag[i] = 1.0 + 2.0 * c;
                    if i == 0 {
                        upper[i] = -2.0 * c;
                    } else {
                        lower[i] = -2.0 * c;
                    }
                }
            }
        }
        thomas(&lower, &diag, &upper, out);
    }

    /// HJB on levels `start..=end` from a terminal row at `end`.
    pub fn hjb(&self, tau: f64, start: usize, end: usize, terminal: &[f64]) -> Result<(Field2D, Field2D)> {
        self.check_window(tau, start, end, terminal)?;
        let nx = self.grid.nx;
        let rows = end - start + 1;
        let mut value = vec![0.0; rows * nx];
        let mut strategy = vec![0.0; rows * nx];
        let last = (rows - 1) * nx;
        value[last..].copy_from_slice(terminal);
        self.argmin_row(tau, self.grid.t(end), terminal, &mut strategy[last..]);
        for n in (start..end).rev() {
            let k = (n - start) * nx;
            let (head, tail) = value.split_at_mut(k + nx);
            self.hjb_step(tau, n, &tail[..nx], &mut head[k..], &mut strategy[k..k + nx])?;
        }
        Ok((
            Field2D::new(self.grid, start, end, value)?,
            Field2D::new(self.grid, start, end, strategy)?,
        ))
    }

    /// Representation PDE on levels `start..=end`, control for step n+1→n read from row n.
    pub fn representation(&self, tau: f64, strategy: &Field2D, start: usize, end: usize, terminal: &[f64]) -> Result<Field2D> {
        self.check_window(tau, start, end, terminal)?;
        if !(strategy.covers(start) && strategy.covers(end - 1)) || strategy.grid() != &self.grid {
            return Err(TicError::usage(format!(
                "strategy covers levels {}..={} but the window needs {start}..{end}",
                strategy.start(),
                strategy.end()
            )));
        }
        for n in start..end {
            if let Some(i) = strategy.row(n).iter().position(|&u| !self.spec.controls.contains(u)) {
                return Err(TicError::domain(format!(
                    "strategy value {} at (t={}, x={}) lies outside the control set",
                    strategy.at(n, i),
                    self.grid.t(n),
                    self.grid.x(i)
                )));
            }
        }
        let nx = self.grid.nx;
        let rows = end - start + 1;
        let mut value = vec![0.0; rows * nx];
        value[(rows - 1) * nx..].copy_from_slice(terminal);
        for n in (start..end).rev() {
            let k = (n - start) * nx;
            let (head, tail) = value.split_at_mut(k + nx);
            self.policy_step(tau, n, &tail[..nx], strategy.row(n), &mut head[k..])?;
        }
        Field2D::new(self.grid, start, end, value)
    }

    fn check_window(&self, tau: f64, start: usize, end: usize, terminal: &[f64]) -> Result<()> {
        if start >= end || end > self.grid.nt {
            return Err(TicError::usage(format!("invalid level window {start}..={end}")));
        }
        if tau > self.grid.t(start) + 1e-12 || tau < -1e-12 {
            return Err(TicError::usage(format!(
                "τ = {tau} must satisfy 0 ≤ τ ≤ t_a = {}",
                self.grid.t(start)
            )));
        }
        if terminal.len() != self.grid.nx {
            return Err(TicError::usage(format!(
                "terminal profile has {} entries, grid has {}",
                terminal.len(),
                self.grid.nx
            )));
        }
        if let Some(i) = terminal.iter().position(|v| !v.is_finite()) {
            return Err(TicError::domain(format!("terminal profile is not finite at x = {}", self.grid.x(i))));
        }
        Ok(())
    }

    pub fn verification_gap(&self, tau: f64, value: &Field2D, strategy: &Field2D) -> Result<GapReport> {
        if value.start() != strategy.start() || value.end() != strategy.end() || value.grid() != strategy.grid() {
            return Err(TicError::usage("value and strategy fields are not aligned"));
        }
        let (start, end) = (value.start(), value.end());
        let nx = self.grid.nx;
        let mut gap = Field2D::filled(self.grid, start, end, 0.0);
        let mut resid = Field2D::filled(self.grid, start, end, 0.0);
        let mut stepped = vec![0.0; nx];
        for n in start..end {
            let t = self.grid.t(n + 1);
            let next = value.row(n + 1);
            let controls = strategy.row(n);
            for i in 0..nx {
                let hu = self.discrete_h(tau, t, i, next, controls[i]);
                let (_, hmin) = self.argmin_at(tau, t, i, next);
                gap.row_mut(n)[i] = (hu - hmin).max(0.0);
            }
            self.advance(tau, n, next, controls, &mut stepped)?;
            let row = value.row(n);
            for i in 0..nx {
                resid.row_mut(n)[i] = (row[i] - stepped[i]).abs() / self.dt;
            }
        }
        Ok(GapReport { argmin_gap: gap, pde_residual: resid })
    }
}

/// Tridiagonal solve in place; `rhs` becomes the solution.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    c[0] = upper[0] / beta;
    rhs[0] /= beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / beta;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::problem::{preset, ControlSet};
    use proptest::prelude::*;

    fn simple(b: f64, sigma: f64, controls: ControlSet) -> ProblemSpec {
        ProblemSpec {
            name: "simple".into(),
            drift: Arc::new(move |_, _, u| b * u),
            diffusion: Arc::new(move |_, _, _| sigma),
            generator: Arc::new(|_, _, _, _, _, _| 0.0),
            terminal: Arc::new(|_, x| x),
            controls,
            horizon: 1.0,
            sigma_control_free: true,
            lipschitz: 1.0,
        }
    }

    fn lq_setup() -> (ProblemSpec, Grid, SchemeConfig) {
        let spec = preset("exp-discount-lq", &[]).unwrap().spec;
        let grid = Grid::new(-4.0, 4.0, 81, 100, 1.0).unwrap();
        (spec, grid, SchemeConfig { control_points: 33, ..Default::default() })
    }

    #[test]
    fn constant_terminal_is_preserved() {
        let spec = simple(1.0, 0.7, ControlSet::interval(-1.0, 1.0).unwrap());
        let grid = Grid::new(-2.0, 2.0, 41, 200, 1.0).unwrap();
        let st = Stepper::new(&spec, &grid, &SchemeConfig::default()).unwrap();
        let (v, u) = st.hjb(0.0, 0, 200, &vec![2.5; 41]).unwrap();
        assert!(v.values().iter().all(|&x| x == 2.5));
        assert!(u.values().iter().all(|&x| x == -1.0));
    }

    #[test]
    fn linear_terminal_is_invariant_without_drift() {
        let spec = simple(0.0, 1.0, ControlSet::interval(-1.0, 1.0).unwrap());
        let grid = Grid::new(-2.0, 2.0, 41, 400, 1.0).unwrap();
        let st = Stepper::new(&spec, &grid, &SchemeConfig::default()).unwrap();
        let xs = grid.xs();
        let (v, _) = st.hjb(0.0, 0, 400, &xs).unwrap();
        for n in 0..=400 {
            for i in 0..41 {
                assert!((v.at(n, i) - xs[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_drift_transports_linear_terminal() {
        let spec = simple(1.0, 0.3, ControlSet::interval(-1.0, 1.0).unwrap());
        let grid = Grid::new(-2.0, 2.0, 41, 100, 1.0).unwrap();
        let st = Stepper::new(&spec, &grid, &SchemeConfig::default()).unwrap();
        let u0 = 0.5;
        let strat = Field2D::filled(grid, 0, 100, u0);
        let v = st.representation(0.0, &strat, 0, 100, &grid.xs()).unwrap();
        for n in [0, 37, 100] {
            for i in 0..41 {
                let want = grid.x(i) + u0 * (1.0 - grid.t(n));
                assert!((v.at(n, i) - want).abs() < 1e-12);
            }
        }
        // arbitrary strategy with g ≡ 0 and constant data
        let wild = Field2D::from_fn(grid, 0, 100, |t, x| (3.0 * x + t).sin());
        let c = st.representation(0.0, &wild, 0, 100, &vec![-1.5; 41]).unwrap();
        assert!(c.values().iter().all(|&x| x == -1.5));
    }

    #[test]
    fn cfl_violation_reports_required_dt() {
        let (spec, _, scheme) = lq_setup();
        let grid = Grid::new(-4.0, 4.0, 201, 10, 1.0).unwrap();
        let err = Stepper::new(&spec, &grid, &scheme).unwrap_err();
        assert!(matches!(err, TicError::Config(ref m) if m.contains("dt <=")), "{err}");
        let semi = SchemeConfig { stepper: StepperKind::SemiImplicitDiffusion, ..scheme };
        Stepper::new(&spec, &Grid::new(-4.0, 4.0, 201, 120, 1.0).unwrap(), &semi).unwrap();
    }

    #[test]
    fn strategy_outside_controls_is_domain_error() {
        let (spec, grid, scheme) = lq_setup();
        let st = Stepper::new(&spec, &grid, &scheme).unwrap();
        let bad = Field2D::filled(grid, 0, 100, 9.0);
        let err = st.representation(0.0, &bad, 0, 100, &vec![0.0; 81]).unwrap_err();
        assert!(matches!(err, TicError::Domain(_)));
    }

    #[test]
    fn blowup_is_reported_with_node() {
        let mut spec = simple(0.0, 0.1, ControlSet::Finite(vec![0.0]));
        spec.generator = Arc::new(|_, _, x, _, y, _| if x > 0.95 { y * 1e308 } else { 0.0 });
        let grid = Grid::new(-1.0, 1.0, 21, 100, 1.0).unwrap();
        let st = Stepper { spec, grid, scheme: SchemeConfig::default(), controls: vec![0.0], dt: grid.dt(), dx: grid.dx() };
        let err = st.hjb(0.0, 0, 100, &vec![1e10; 21]).unwrap_err();
        assert!(matches!(err, TicError::NumericalBlowup { time_index: 99, node: 20, .. }), "{err}");
    }

    #[test]
    fn hjb_and_representation_agree_for_own_strategy() {
        let (spec, grid, scheme) = lq_setup();
        for kind in [StepperKind::ExplicitUpwind, StepperKind::SemiImplicitDiffusion] {
            let st = Stepper::new(&spec, &grid, &SchemeConfig { stepper: kind, ..scheme }).unwrap();
            let term: Vec<f64> = grid.xs().iter().map(|x| x * x).collect();
            let (v, u) = st.hjb(0.0, 0, 100, &term).unwrap();
            let r = st.representation(0.0, &u, 0, 100, &term).unwrap();
            assert!(v.sup_diff(&r, 0..=100, 0..=80) <= 1e-10);
            assert_eq!(v.row(100), term.as_slice());
        }
    }

    #[test]
    fn verification_gap_examples() {
        let (spec, grid, scheme) = lq_setup();
        let st = Stepper::new(&spec, &grid, &scheme).unwrap();
        let term: Vec<f64> = grid.xs().iter().map(|x| x * x).collect();
        let (v, u) = st.hjb(0.0, 0, 100, &term).unwrap();
        let own = st.verification_gap(0.0, &v, &u).unwrap();
        assert_eq!(own.max_gap(), 0.0);
        assert!(own.max_residual() < 1e-9);

        let step = st.controls()[1] - st.controls()[0];
        let mut bumped = u.clone();
        let (n0, i0) = (40, 50);
        let cur = bumped.at(n0, i0);
        bumped.row_mut(n0)[i0] = if cur + step <= 4.0 { cur + step } else { cur - step };
        let rep = st.verification_gap(0.0, &v, &bumped).unwrap();
        for n in 0..=100 {
            for i in 0..81 {
                let g = rep.argmin_gap.at(n, i);
                if (n, i) == (n0, i0) {
                    assert!(g > 0.0);
                } else {
                    assert_eq!(g, 0.0);
                }
            }
        }

        let random = Field2D::from_fn(grid, 0, 100, |t, x| (4.0 * (7.0 * x + 3.0 * t).sin()).round());
        let rep = st.verification_gap(0.0, &v, &random).unwrap();
        assert!(rep.mean_gap() > 0.0);
    }

    #[test]
    fn value_below_any_policy_cost() {
        let (spec, grid, scheme) = lq_setup();
        let st = Stepper::new(&spec, &grid, &scheme).unwrap();
        let term: Vec<f64> = grid.xs().iter().map(|x| x * x).collect();
        let (v, _) = st.hjb(0.0, 0, 100, &term).unwrap();
        let controls = st.controls().to_vec();
        let policy = Field2D::from_fn(grid, 0, 100, |t, x| {
            let k = ((x * 5.0 + t * 13.0).sin().abs() * (controls.len() - 1) as f64) as usize;
            controls[k]
        });
        let j = st.representation(0.0, &policy, 0, 100, &term).unwrap();
        for (a, b) in v.values().iter().zip(j.values()) {
            assert!(a <= &(b + 1e-10));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn comparison_principle_neumann(shift in prop::collection::vec(0.0f64..1.0, 41), seed in 0u32..1000) {
            let spec = preset("exp-discount-lq", &[("u_lo", -2.0), ("u_hi", 2.0)]).unwrap().spec;
            check_comparison(spec, Boundary::Neumann, &shift, seed)?;
        }

        #[test]
        fn comparison_principle_inward_drift(shift in prop::collection::vec(0.0f64..1.0, 41), seed in 0u32..1000) {
            // linear extrapolation is monotone when the drift points into the domain
            let mut spec = preset("exp-discount-lq", &[("u_lo", -2.0), ("u_hi", 2.0)]).unwrap().spec;
            spec.drift = Arc::new(|_, x, u| u - 3.0 * x);
            check_comparison(spec, Boundary::LinearExtrapolation, &shift, seed)?;
        }
    }

    fn check_comparison(spec: ProblemSpec, boundary: Boundary, shift: &[f64], seed: u32) -> std::result::Result<(), TestCaseError> {
        let grid = Grid::new(-2.0, 2.0, 41, 200, 1.0).unwrap();
        let scheme = SchemeConfig { control_points: 17, boundary, ..Default::default() };
        let st = Stepper::new(&spec, &grid, &scheme).unwrap();
        let phase = seed as f64 * 0.01;
        let lo: Vec<f64> = grid.xs().iter().map(|x| (x + phase).sin() + x * x).collect();
        let hi: Vec<f64> = lo.iter().zip(shift).map(|(a, s)| a + s).collect();
        let (v1, _) = st.hjb(0.0, 0, 200, &lo).unwrap();
        let (v2, _) = st.hjb(0.0, 0, 200, &hi).unwrap();
        for (a, b) in v1.values().iter().zip(v2.values()) {
            prop_assert!(a <= &(b + 1e-12));
        }
        Ok(())
    }
}
