//! Named problems with known structure.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ControlSet, ProblemSpec, RiccatiOracle};
use crate::error::{Result, TicError};

/// Closed-form value function attached to a preset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Oracle {
    /// V(t,x) = P(t)x² + c(t) for b = u, g = κy + qx² + ru², h = Gx².
    Riccati {
        q: f64,
        r: f64,
        g_terminal: f64,
        sigma: f64,
        kappa: f64,
        horizon: f64,
    },
}

impl Oracle {
    pub fn riccati(&self) -> RiccatiOracle {
        match *self {
            Oracle::Riccati { q, r, g_terminal, sigma, kappa, horizon } => {
                RiccatiOracle::new(q, r, g_terminal, sigma, kappa, horizon)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub spec: ProblemSpec,
    pub oracle: Option<Oracle>,
    /// Parameter values actually used, overrides applied.
    pub params: BTreeMap<String, f64>,
}

pub fn preset_names() -> &'static [&'static str] {
    &["exp-discount-lq", "two-rate-discount", "tau-free"]
}

fn defaults(name: &str) -> Option<&'static [(&'static str, f64)]> {
    Some(match name {
        "exp-discount-lq" => &[
            ("lambda", 0.1),
            ("q", 1.0),
            ("r", 1.0),
            ("G", 1.0),
            ("sigma", 0.3),
            ("T", 1.0),
            ("u_lo", -4.0),
            ("u_hi", 4.0),
        ],
        "two-rate-discount" => &[
            ("lambda1", 0.5),
            ("lambda2", 0.05),
            ("q", 1.0),
            ("r", 1.0),
            ("G", 1.0),
            ("sigma", 0.4),
            ("T", 1.0),
            ("u_lo", -3.0),
            ("u_hi", 3.0),
            ("lipschitz", 100.0),
        ],
        "tau-free" => &[
            ("q", 1.0),
            ("r", 1.0),
            ("G", 1.0),
            ("sigma", 0.3),
            ("T", 1.0),
            ("u_lo", -4.0),
            ("u_hi", 4.0),
        ],
        _ => return None,
    })
}

pub fn preset(name: &str, overrides: &[(&str, f64)]) -> Result<Preset> {
    let defaults = defaults(name).ok_or_else(|| {
        TicError::usage(format!(
            "unknown preset `{name}`; available: {}",
            preset_names().join(", ")
        ))
    })?;
    let mut params: BTreeMap<String, f64> =
        defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in overrides {
        match params.get_mut(*k) {
            Some(slot) => *slot = *v,
            None => {
                return Err(TicError::usage(format!(
                    "preset `{name}` has no parameter `{k}`; known: {}",
                    params.keys().cloned().collect::<Vec<_>>().join(", ")
                )))
            }
        }
    }
    let p = |k: &str| params[k];
    if !(p("T") > 0.0) {
        return Err(TicError::usage("preset horizon T must be positive"));
    }
    if !(p("sigma") >= 0.0) {
        return Err(TicError::usage("preset sigma must be nonnegative"));
    }
    let controls = ControlSet::interval(p("u_lo"), p("u_hi"))?;
    let (q, r, big_g, sigma, horizon) = (p("q"), p("r"), p("G"), p("sigma"), p("T"));

    let (name, spec, oracle) = match name {
        "exp-discount-lq" => {
            let lambda = p("lambda");
            let spec = ProblemSpec {
                name: name.to_string(),
                drift: Arc::new(|_, _, u| u),
                diffusion: Arc::new(move |_, _, _| sigma),
                generator: Arc::new(move |_, _, x, u, y, _| lambda * y + q * x * x + r * u * u),
                terminal: Arc::new(move |_, x| big_g * x * x),
                controls,
                horizon,
                sigma_control_free: true,
                lipschitz: 1.0,
            };
            let oracle = Oracle::Riccati { q, r, g_terminal: big_g, sigma, kappa: lambda, horizon };
            ("exp-discount-lq", spec, Some(oracle))
        }
        "two-rate-discount" => {
            let (l1, l2) = (p("lambda1"), p("lambda2"));
            let spec = ProblemSpec {
                name: name.to_string(),
                drift: Arc::new(|_, _, u| u),
                diffusion: Arc::new(move |_, _, _| sigma),
                generator: Arc::new(move |tau, t, x, u, _, _| {
                    (-l2 * (t - tau)).exp() * (q * x * x + r * u * u)
                }),
                terminal: Arc::new(move |tau, x| (-l1 * (horizon - tau)).exp() * big_g * x * x),
                controls,
                horizon,
                sigma_control_free: true,
                lipschitz: p("lipschitz"),
            };
            ("two-rate-discount", spec, None)
        }
        "tau-free" => {
            let spec = ProblemSpec {
                name: name.to_string(),
                drift: Arc::new(|_, _, u| u),
                diffusion: Arc::new(move |_, _, _| sigma),
                generator: Arc::new(move |_, _, x, u, _, _| q * x * x + r * u * u),
                terminal: Arc::new(move |_, x| big_g * x * x),
                controls,
                horizon,
                sigma_control_free: true,
                lipschitz: 1.0,
            };
            let oracle = Oracle::Riccati { q, r, g_terminal: big_g, sigma, kappa: 0.0, horizon };
            ("tau-free", spec, Some(oracle))
        }
        _ => unreachable!(),
    };
    Ok(Preset { name, spec, oracle, params })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_builds_and_validates() {
        for name in preset_names() {
            let p = preset(name, &[]).unwrap();
            p.spec.validate(-5.0, 5.0, 65).unwrap();
        }
    }

    #[test]
    fn overrides_apply_and_unknown_keys_fail() {
        let p = preset("two-rate-discount", &[("lambda1", 0.7)]).unwrap();
        assert_eq!(p.params["lambda1"], 0.7);
        assert!(preset("two-rate-discount", &[("lambda", 0.7)]).is_err());
        assert!(preset("nope", &[]).is_err());
        assert!(preset("tau-free", &[("T", 0.0)]).is_err());
    }

    #[test]
    fn two_rate_terminal_and_running_weights() {
        let s = preset("two-rate-discount", &[]).unwrap().spec;
        assert!((s.h(0.0, 2.0) - 4.0 * (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(s.h(1.0, 2.0), 4.0);
        let g = s.g(0.2, 0.7, 1.0, 1.0, 9.0, -9.0);
        assert!((g - 2.0 * (-0.05f64 * 0.5).exp()).abs() < 1e-15);
    }

    #[test]
    fn oracle_matches_spec_terminal() {
        for name in ["exp-discount-lq", "tau-free"] {
            let p = preset(name, &[]).unwrap();
            let o = p.oracle.unwrap().riccati();
            for x in [-3.0, -0.5, 0.0, 1.25, 4.0] {
                assert!((o.value(p.spec.horizon, x) - p.spec.h(p.spec.horizon, x)).abs() < 1e-14);
            }
        }
    }
}
