//! Scalar Riccati oracle for the linear-quadratic presets.
//!
//! With b = u, constant σ, g = κy + qx² + ru² and h = Gx², the value function is
//! V(t,x) = P(t)x² + c(t) where
//!
//! ```text
//! P' = P²/r − q − κP,   P(T) = G
//! c' = −σ²P − κc,       c(T) = 0
//! ```
//!
//! The unconstrained minimizer is u* = −P(t)x/r.

#[derive(Debug, Clone)]
pub struct RiccatiOracle {
    q: f64,
    r: f64,
    sigma: f64,
    kappa: f64,
    horizon: f64,
    h: f64,
    /// (P, c) at t_k = T − k·h
    nodes: Vec<(f64, f64)>,
    error_estimate: f64,
}

const TARGET_STEP: f64 = 1e-4;

impl RiccatiOracle {
    pub fn new(q: f64, r: f64, g_terminal: f64, sigma: f64, kappa: f64, horizon: f64) -> Self {
        let steps = (horizon / TARGET_STEP).ceil().max(1.0) as usize;
        let h = horizon / steps as f64;
        let rhs = |s: (f64, f64)| -> (f64, f64) {
            (s.0 * s.0 / r - q - kappa * s.0, -sigma * sigma * s.0 - kappa * s.1)
        };
        let integrate = |n: usize| -> Vec<(f64, f64)> {
            let dt = -horizon / n as f64;
            let mut out = Vec::with_capacity(n + 1);
            let mut s = (g_terminal, 0.0);
            out.push(s);
            for _ in 0..n {
                s = rk4(&rhs, s, dt);
                out.push(s);
            }
            out
        };
        let nodes = integrate(steps);
        let fine = integrate(2 * steps);
        let error_estimate = nodes
            .iter()
            .zip(fine.iter().step_by(2))
            .map(|(a, b)| (a.0 - b.0).abs().max((a.1 - b.1).abs()))
            .fold(0.0, f64::max);
        RiccatiOracle { q, r, sigma, kappa, horizon, h, nodes, error_estimate }
    }

    /// Step-doubling estimate of the max coefficient error over [0, T].
    pub fn error_estimate(&self) -> f64 {
        self.error_estimate
    }

    fn deriv(&self, s: (f64, f64)) -> (f64, f64) {
        (
            s.0 * s.0 / self.r - self.q - self.kappa * s.0,
            -self.sigma * self.sigma * s.0 - self.kappa * s.1,
        )
    }

    /// (P(t), c(t)) by cubic Hermite interpolation between RK4 nodes.
    pub fn coefficients(&self, t: f64) -> (f64, f64) {
        let back = ((self.horizon - t) / self.h).clamp(0.0, (self.nodes.len() - 1) as f64);
        let k = (back.floor() as usize).min(self.nodes.len() - 2);
        let w = back - k as f64;
        let (s0, s1) = (self.nodes[k], self.nodes[k + 1]);
        // parametrize by backward time, so derivatives flip sign
        let (d0, d1) = (self.deriv(s0), self.deriv(s1));
        let h = self.h;
        let herm = |a: f64, b: f64, da: f64, db: f64| {
            let (w2, w3) = (w * w, w * w * w);
            (2.0 * w3 - 3.0 * w2 + 1.0) * a
                + (w3 - 2.0 * w2 + w) * (-h * da)
                + (-2.0 * w3 + 3.0 * w2) * b
                + (w3 - w2) * (-h * db)
        };
        (herm(s0.0, s1.0, d0.0, d1.0), herm(s0.1, s1.1, d0.1, d1.1))
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        let (p, c) = self.coefficients(t);
        p * x * x + c
    }

    pub fn gradient(&self, t: f64, x: f64) -> f64 {
        2.0 * self.coefficients(t).0 * x
    }

    pub fn control(&self, t: f64, x: f64) -> f64 {
        -self.coefficients(t).0 * x / self.r
    }
}

fn rk4<F: Fn((f64, f64)) -> (f64, f64)>(f: &F, s: (f64, f64), dt: f64) -> (f64, f64) {
    let add = |a: (f64, f64), b: (f64, f64), k: f64| (a.0 + k * b.0, a.1 + k * b.1);
    let k1 = f(s);
    let k2 = f(add(s, k1, 0.5 * dt));
    let k3 = f(add(s, k2, 0.5 * dt));
    let k4 = f(add(s, k3, dt));
    (
        s.0 + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        s.1 + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}
