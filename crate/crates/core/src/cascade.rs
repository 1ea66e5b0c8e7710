//! The N-player partition cascade.
//!
//! Player k owns [t_{k-1}, t_k) and uses τ = t_{k-1}. Going backward from
//! k = N, player k solves its HJB on its cell with terminal data Θ^k(t_k, ·),
//! where Θ^k is the representation function of τ = t_{k-1} along the
//! strategy already fixed on [t_k, T]. Slice k of Θ^Π is the player's own
//! value on its cell followed by Θ^k on [t_k, T].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::discretization::{Field2D, Field3D, Partition};
use crate::error::{Result, TicError};
use crate::pde::Stepper;

#[derive(Debug, Clone, Serialize)]
pub struct JumpRecord {
    pub knot: f64,
    pub level: usize,
    /// sup_x |V^Π(t_k − 0, x) − V^Π(t_k, x)|
    pub magnitude: f64,
}

#[derive(Debug, Clone)]
pub struct CascadeSolution {
    pub partition: Partition,
    pub levels: Vec<usize>,
    /// V^Π on [0, T]; knots carry the left limit.
    pub value: Field2D,
    /// Right values V^Π(t_k, ·) at the interior knots k = 1..N-1.
    pub value_right: Vec<Vec<f64>>,
    /// Row n holds the control on [t_n, t_{n+1}).
    pub strategy: Field2D,
    pub theta: Field3D,
    pub jumps: Vec<JumpRecord>,
}

impl CascadeSolution {
    pub fn max_jump(&self) -> f64 {
        self.jumps.iter().map(|j| j.magnitude).fold(0.0, f64::max)
    }

    /// Θ^Π(t_n, t_n, ·) with the right-value convention at knots.
    pub fn diagonal(&self) -> Result<Field2D> {
        self.theta.diagonal()
    }
}

pub fn cascade_solve(stepper: &Stepper, partition: &Partition) -> Result<CascadeSolution> {
    let grid = *stepper.grid();
    let spec = stepper.spec();
    let snapped = partition.snap(&grid)?;
    let levels = snapped.levels.clone();
    let knots = snapped.partition.knots().to_vec();
    let n_players = levels.len() - 1;
    let (nx, nt) = (grid.nx, grid.nt);

    let mut value = vec![0.0; (nt + 1) * nx];
    let mut strategy = vec![0.0; (nt + 1) * nx];
    let mut slices: Vec<Option<Field2D>> = vec![None; n_players];
    let mut right: Vec<Vec<f64>> = vec![Vec::new(); n_players.saturating_sub(1)];

    let terminal_for = |tau: f64| -> Vec<f64> { grid.xs().iter().map(|&x| spec.h(tau, x)).collect() };
    // Θ^k on [t_k, T] for the player currently being solved
    let mut theta_tail: Option<Field2D> = None;

    for k in (1..=n_players).rev() {
        let (a, b) = (levels[k - 1], levels[k]);
        let tau = knots[k - 1];
        let terminal = match &theta_tail {
            None => terminal_for(tau),
            Some(tail) => tail.row(b).to_vec(),
        };
        let (v, u) = stepper.hjb(tau, a, b, &terminal).map_err(|e| e.for_player(k))?;
        for n in a..=b {
            value[n * nx..(n + 1) * nx].copy_from_slice(v.row(n));
        }
        let last = if k == n_players { b } else { b - 1 };
        for n in a..=last {
            strategy[n * nx..(n + 1) * nx].copy_from_slice(u.row(n));
        }
        if k < n_players {
            right[k - 1] = slices[k].as_ref().expect("later player solved").row(b).to_vec();
        }

        let mut slice = vec![0.0; (nt - a + 1) * nx];
        for n in a..=b {
            slice[(n - a) * nx..(n - a + 1) * nx].copy_from_slice(v.row(n));
        }
        if let Some(tail) = &theta_tail {
            for n in b + 1..=nt {
                slice[(n - a) * nx..(n - a + 1) * nx].copy_from_slice(tail.row(n));
            }
        }
        slices[k - 1] = Some(Field2D::new(grid, a, nt, slice)?);

        if k > 1 {
            let tau_prev = knots[k - 2];
            let strat = Field2D::new(grid, 0, nt, strategy.clone())?;
            let tail = stepper
                .representation(tau_prev, &strat, a, nt, &terminal_for(tau_prev))
                .map_err(|e| e.for_player(k - 1))?;
            theta_tail = Some(tail);
        }
    }

    let value = Field2D::new(grid, 0, nt, value)?;
    let strategy = Field2D::new(grid, 0, nt, strategy)?;
    let theta = Field3D::new(
        grid,
        levels[..n_players].to_vec(),
        slices.into_iter().map(|s| s.expect("every player solved")).collect(),
    )?;
    let jumps = (1..n_players)
        .map(|k| {
            let left = value.row(levels[k]);
            let magnitude = left.iter().zip(&right[k - 1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            JumpRecord { knot: knots[k], level: levels[k], magnitude }
        })
        .collect();
    Ok(CascadeSolution {
        partition: snapped.partition,
        levels,
        value,
        value_right: right,
        strategy,
        theta,
        jumps,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    /// min_x (cost − V^Π) at t_{k-1}
    pub min_excess: f64,
    pub violations: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalOptimalityReport {
    pub player: usize,
    pub tolerance: f64,
    pub trials: Vec<TrialOutcome>,
}

impl LocalOptimalityReport {
    pub fn passed(&self) -> bool {
        self.trials.iter().all(|t| t.violations.is_empty())
    }

    pub fn worst_excess(&self) -> f64 {
        self.trials.iter().map(|t| t.min_excess).fold(f64::INFINITY, f64::min)
    }
}

/// Checks player k against random piecewise-constant deviations on its cell.
///
/// Trial 0 replays 𝕦^Π itself. The other trials draw, on a random number of
/// time blocks and eight spatial blocks, controls from the control grid.
pub fn local_optimality_check(
    stepper: &Stepper,
    sol: &CascadeSolution,
    k: usize,
    n_trials: usize,
    seed: u64,
    tolerance: f64,
) -> Result<LocalOptimalityReport> {
    let n_players = sol.levels.len() - 1;
    if k == 0 || k > n_players {
        return Err(TicError::usage(format!("player index {k} outside 1..={n_players}")));
    }
    let grid = *stepper.grid();
    let (a, b) = (sol.levels[k - 1], sol.levels[k]);
    let tau = sol.partition.knots()[k - 1];
    let slice = sol.theta.slice(k - 1);
    let terminal = slice.row(b).to_vec();
    let reference = slice.row(a).to_vec();
    let controls = stepper.controls();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);

    let mut trials = Vec::with_capacity(n_trials);
    for trial in 0..n_trials {
        let field = if trial == 0 {
            sol.strategy.restrict(a, b)?
        } else {
            let cells = b - a;
            let t_blocks = rng.random_range(1..=cells.min(6));
            let x_blocks = 8.min(grid.nx);
            let table: Vec<f64> =
                (0..t_blocks * x_blocks).map(|_| controls[rng.random_range(0..controls.len())]).collect();
            let mut values = Vec::with_capacity((cells + 1) * grid.nx);
            for n in a..=b {
                let tb = ((n - a) * t_blocks / cells).min(t_blocks - 1);
                for i in 0..grid.nx {
                    let xb = (i * x_blocks / grid.nx).min(x_blocks - 1);
                    values.push(table[tb * x_blocks + xb]);
                }
            }
            Field2D::new(grid, a, b, values)?
        };
        let cost = stepper.representation(tau, &field, a, b, &terminal)?;
        let row = cost.row(a);
        let mut min_excess = f64::INFINITY;
        let mut violations = Vec::new();
        for i in 0..grid.nx {
            let excess = row[i] - reference[i];
            min_excess = min_excess.min(excess);
            if excess < -tolerance {
                violations.push((grid.x(i), excess));
            }
        }
        trials.push(TrialOutcome { trial, min_excess, violations });
    }
    Ok(LocalOptimalityReport { player: k, tolerance, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Grid;
    use crate::pde::SchemeConfig;
    use crate::problem::preset;

    fn stepper(name: &str) -> Stepper {
        let spec = preset(name, &[]).unwrap().spec;
        let grid = Grid::new(-4.0, 4.0, 61, 96, 1.0).unwrap();
        Stepper::new(&spec, &grid, &SchemeConfig { control_points: 33, ..Default::default() }).unwrap()
    }

    #[test]
    fn single_player_is_plain_hjb() {
        let st = stepper("two-rate-discount");
        let sol = cascade_solve(&st, &Partition::uniform(1.0, 1).unwrap()).unwrap();
        let term: Vec<f64> = st.grid().xs().iter().map(|&x| st.spec().h(0.0, x)).collect();
        let (v, u) = st.hjb(0.0, 0, 96, &term).unwrap();
        assert_eq!(sol.value, v);
        assert_eq!(sol.strategy, u);
        assert_eq!(sol.theta.len(), 1);
        assert_eq!(sol.theta.slice(0), &v);
        assert!(sol.jumps.is_empty());
    }

    #[test]
    fn tau_free_is_partition_invariant() {
        let st = stepper("tau-free");
        let one = cascade_solve(&st, &Partition::uniform(1.0, 1).unwrap()).unwrap();
        for p in [Partition::uniform(1.0, 4).unwrap(), Partition::geometric(1.0, 5, 1.5).unwrap()] {
            let many = cascade_solve(&st, &p).unwrap();
            assert!(many.value.sup_diff(&one.value, 0..=96, 0..=60) <= 1e-10);
            assert_eq!(many.strategy, one.strategy);
            assert!(many.max_jump() <= 1e-10);
            let diag = many.diagonal().unwrap();
            assert!(diag.sup_diff(&many.value, 0..=96, 0..=60) <= 1e-10);
        }
    }

    #[test]
    fn two_rate_shows_time_inconsistency() {
        let st = stepper("two-rate-discount");
        let one = cascade_solve(&st, &Partition::uniform(1.0, 1).unwrap()).unwrap();
        let two = cascade_solve(&st, &Partition::uniform(1.0, 2).unwrap()).unwrap();
        let gap = one.value.sup_diff(&two.value, 0..=0, 0..=60);
        assert!(gap > 1e-6, "gap {gap}");
        assert!(two.max_jump() > 1e-6);
    }

    #[test]
    fn structural_invariants() {
        let st = stepper("two-rate-discount");
        let sol = cascade_solve(&st, &Partition::uniform(1.0, 4).unwrap()).unwrap();
        let grid = *st.grid();
        let knots = sol.partition.knots().to_vec();
        for (k, s) in sol.theta.slices().iter().enumerate() {
            // terminal rows carry h(t_{k-1}, ·)
            for i in 0..grid.nx {
                assert_eq!(s.at(96, i), st.spec().h(knots[k], grid.x(i)));
            }
            // diagonal consistency with the right value at the player's own knot
            let at_knot = s.row(sol.levels[k]);
            let v = if k == 0 { sol.value.row(0) } else { sol.value_right[k - 1].as_slice() };
            assert_eq!(at_knot, v);
        }
        // the strategy is the argmin against slice ℓ(t) at the next level
        for n in 0..96 {
            let k = sol.partition.cell_of(grid.t(n)).unwrap();
            let s = sol.theta.slice(k);
            for i in 0..grid.nx {
                let (u, _) = st.argmin_at(knots[k], grid.t(n + 1), i, s.row(n + 1));
                assert_eq!(u, sol.strategy.at(n, i));
            }
        }
    }

    #[test]
    fn representation_tail_matches_slice() {
        let st = stepper("two-rate-discount");
        let sol = cascade_solve(&st, &Partition::uniform(1.0, 3).unwrap()).unwrap();
        let grid = *st.grid();
        let tau = sol.partition.knots()[1];
        let term: Vec<f64> = grid.xs().iter().map(|&x| st.spec().h(tau, x)).collect();
        let tail = st.representation(tau, &sol.strategy, sol.levels[2], 96, &term).unwrap();
        let s = sol.theta.slice(1);
        assert_eq!(tail.sup_diff(s, sol.levels[2]..=96, 0..=60), 0.0);
    }

    #[test]
    fn local_optimality() {
        let st = stepper("two-rate-discount");
        let sol = cascade_solve(&st, &Partition::uniform(1.0, 4).unwrap()).unwrap();
        for k in 1..=4 {
            let rep = local_optimality_check(&st, &sol, k, 6, 7, 1e-9).unwrap();
            assert!(rep.passed(), "player {k}: {:?}", rep.worst_excess());
            assert_eq!(rep.trials[0].min_excess, 0.0);
        }
        assert!(local_optimality_check(&st, &sol, 0, 1, 0, 0.0).is_err());
        assert!(local_optimality_check(&st, &sol, 5, 1, 0, 0.0).is_err());
    }

    #[test]
    fn colliding_knots_rejected() {
        let st = stepper("two-rate-discount");
        let p = Partition::new(vec![0.0, 0.001, 1.0]).unwrap();
        assert!(matches!(cascade_solve(&st, &p), Err(TicError::Usage(_))));
    }

    #[test]
    fn player_errors_are_annotated() {
        let mut spec = preset("two-rate-discount", &[]).unwrap().spec;
        let g = spec.generator.clone();
        spec.generator = std::sync::Arc::new(move |tau, t, x, u, y, z| {
            if tau == 0.5 && t != tau { f64::NAN } else { g(tau, t, x, u, y, z) }
        });
        let grid = Grid::new(-4.0, 4.0, 61, 96, 1.0).unwrap();
        let st = Stepper::new(&spec, &grid, &SchemeConfig { control_points: 9, ..Default::default() }).unwrap();
        let err = cascade_solve(&st, &Partition::uniform(1.0, 2).unwrap()).unwrap_err();
        assert!(matches!(err, TicError::Player { player: 2, .. }), "{err}");
        assert_eq!(err.exit_code(), 3);
    }
}
