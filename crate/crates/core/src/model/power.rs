use super::layers::LayerPlan;
use super::params::SystemParams;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest level count examined when searching for the power-limited cap.
pub const MAX_LEVEL_SEARCH: u32 = 64;

/// Upper bound on the average transmit power of a device that picks its
/// best subchannel and inverts the gain, with `num_levels` layers:
///
/// `min{2 ln 2, M/(M-1)} / L · Σ_l v_l · D_l^β / A0`, `D_l = D·√(l/L)`.
pub fn avg_power_ub_hybrid<T: Scalar>(params: &SystemParams<T>, num_levels: u32) -> Result<T> {
    let m = params.num_subchannels()?;
    if m < 2 {
        return Err(Error::Unsupported(format!(
            "the average power bound needs at least 2 subchannels, got {m}"
        )));
    }
    let plan = LayerPlan::new(params.target_sinr(), params.cell_radius, num_levels)?;
    let m = T::from_count(m as u64);
    let factor = (T::lit(2.0) * T::LN_2()).min(m / (m - T::one()));
    let sum: T = plan
        .power_levels()
        .iter()
        .zip(&plan.ring_boundaries()[1..])
        .map(|(&v, &outer)| v * outer.powf(params.pathloss_exponent) / params.antenna_constant)
        .sum();
    Ok(factor / T::from_count(num_levels as u64) * sum)
}

/// `E[d^β] / A0` for `d` uniform over the disk with deterministic pathloss
/// `g = A0·d^(-β)`: `2·D^β / ((β+2)·A0)`.
pub fn default_inv_gain_expectation<T: Scalar>(params: &SystemParams<T>) -> T {
    let beta = params.pathloss_exponent;
    T::lit(2.0) * params.cell_radius.powf(beta) / ((beta + T::lit(2.0)) * params.antenna_constant)
}

/// Average power when the level is drawn uniformly and the subchannel at
/// random: `(1/L)·Σ_l v_l · E[1/g]`.
pub fn avg_power_random_noma<T: Scalar>(
    params: &SystemParams<T>,
    num_levels: u32,
    inv_gain_expectation: T,
) -> Result<T> {
    if !(inv_gain_expectation > T::zero()) {
        return Err(Error::invalid(format!(
            "E[1/g] must be positive, got {inv_gain_expectation}"
        )));
    }
    let plan = LayerPlan::new(params.target_sinr(), params.cell_radius, num_levels)?;
    let sum: T = plan.power_levels().iter().copied().sum();
    Ok(sum / T::from_count(num_levels as u64) * inv_gain_expectation)
}

/// Outcome of the power-limited level search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelCap {
    /// `min(L_u, uncapped)`, never below 1.
    pub l_max: u32,
    /// Largest `L` with average power strictly below the budget, before the
    /// receiver cap. `None` when even `L = 1` breaks the budget; equal to
    /// [`MAX_LEVEL_SEARCH`] when the budget is never reached.
    pub uncapped: Option<u32>,
    /// Set when `L = 1` already violates the budget and is returned anyway.
    pub degenerate: bool,
}

/// Largest admissible number of power levels under the average power budget
/// and the receiver limit `L_u`.
///
/// `power_fn` is evaluated for `L = 1, 2, ...` until it reaches the budget;
/// it must be non-decreasing over the evaluated range.
pub fn max_levels<T, F>(params: &SystemParams<T>, power_fn: F) -> Result<LevelCap>
where
    T: Scalar,
    F: Fn(u32) -> Result<T>,
{
    let budget = params.max_avg_power();
    let mut last_ok = None;
    let mut prev: Option<T> = None;
    for l in 1..=MAX_LEVEL_SEARCH {
        let p = power_fn(l)?;
        if p.is_nan() {
            return Err(Error::invalid(format!("power function returned NaN at L = {l}")));
        }
        if let Some(q) = prev {
            if p < q {
                return Err(Error::invalid(format!(
                    "power function decreases between L = {} and L = {l}",
                    l - 1
                )));
            }
        }
        prev = Some(p);
        if p < budget {
            last_ok = Some(l);
        } else {
            break;
        }
    }
    let receiver_cap = params.receiver_max_levels.max(1);
    Ok(match last_ok {
        Some(u) => LevelCap {
            l_max: u.min(receiver_cap),
            uncapped: Some(u),
            degenerate: false,
        },
        None => {
            log::warn!("average power exceeds the budget even with a single level");
            LevelCap {
                l_max: 1,
                uncapped: None,
                degenerate: true,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::to_dbm;
    use approx::assert_relative_eq;

    fn table() -> SystemParams<f64> {
        SystemParams::reference()
    }

    #[test]
    fn single_level_bound() {
        let p = table();
        let gamma = p.target_sinr();
        assert_relative_eq!(avg_power_ub_hybrid(&p, 1).unwrap(), 48.0 / 47.0 * gamma, max_relative = 1e-14);
        assert_relative_eq!(avg_power_ub_hybrid(&p, 1).unwrap(), 4.0658, epsilon = 1e-3);
    }

    #[test]
    fn five_level_bound() {
        let ub = avg_power_ub_hybrid(&table(), 5).unwrap();
        assert_relative_eq!(ub, 52.2488, epsilon = 1e-3);
        assert_relative_eq!(to_dbm(ub).unwrap(), 17.18, epsilon = 0.01);
    }

    #[test]
    fn bound_needs_two_subchannels() {
        let p = table().with_num_subchannels(1);
        assert!(matches!(avg_power_ub_hybrid(&p, 3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn factor_switches_at_four_subchannels() {
        // M <= 3 uses 2 ln 2, M >= 4 uses M/(M-1)
        for m in 2..=64u32 {
            let p = table().with_num_subchannels(m);
            let with_ratio = avg_power_ub_hybrid(&p, 1).unwrap() / p.target_sinr();
            let mf = m as f64;
            let expect = if m >= 4 { mf / (mf - 1.0) } else { 2.0 * std::f64::consts::LN_2 };
            assert_relative_eq!(with_ratio, expect, max_relative = 1e-14);
        }
    }

    #[test]
    fn bound_increases_with_levels() {
        let p = table();
        let ub: Vec<f64> = (1..=10).map(|l| avg_power_ub_hybrid(&p, l).unwrap()).collect();
        assert!(ub.windows(2).all(|w| w[1] > w[0]), "{ub:?}");
    }

    #[test]
    fn bound_decreases_with_subchannels() {
        let p = table();
        let ub: Vec<f64> = (3..=64)
            .map(|m| avg_power_ub_hybrid(&p.with_num_subchannels(m), 5).unwrap())
            .collect();
        assert!(ub.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn random_noma_examples() {
        let p = table();
        let gamma = p.target_sinr();
        assert_relative_eq!(avg_power_random_noma(&p, 1, 1.0).unwrap(), gamma, max_relative = 1e-15);

        let e = default_inv_gain_expectation(&p);
        assert_relative_eq!(e, 2.0 / 5.8, max_relative = 1e-15);
        assert_relative_eq!(avg_power_random_noma(&p, 3, e).unwrap(), 14.0903, epsilon = 1e-3);

        let c = 0.731;
        assert_relative_eq!(
            avg_power_random_noma(&p, 2, c).unwrap(),
            c * gamma * (gamma + 2.0) / 2.0,
            max_relative = 1e-14
        );
        assert!(avg_power_random_noma(&p, 2, 0.0).is_err());
    }

    #[test]
    fn hybrid_cap_is_five() {
        let p = table();
        let cap = max_levels(&p, |l| avg_power_ub_hybrid(&p, l)).unwrap();
        assert_eq!(cap, LevelCap { l_max: 5, uncapped: Some(5), degenerate: false });
    }

    #[test]
    fn unlimited_budget_capped_by_receiver() {
        let p = SystemParams { max_avg_power_dbm: f64::INFINITY, ..table() };
        let cap = max_levels(&p, |l| avg_power_ub_hybrid(&p, l)).unwrap();
        assert_eq!(cap.l_max, 5);
        assert_eq!(cap.uncapped, Some(MAX_LEVEL_SEARCH));
    }

    #[test]
    fn random_noma_cap_with_default_gain_model() {
        let p = SystemParams { receiver_max_levels: 10, ..table() };
        let e = default_inv_gain_expectation(&p);
        let cap = max_levels(&p, |l| avg_power_random_noma(&p, l, e)).unwrap();
        // 17.24 dBm at L = 4, 23.25 dBm at L = 5
        assert_eq!(cap.l_max, 4);
    }

    #[test]
    fn degenerate_budget_still_returns_one() {
        let p = SystemParams { max_avg_power_dbm: 0.0, ..table() };
        let cap = max_levels(&p, |l| avg_power_ub_hybrid(&p, l)).unwrap();
        assert_eq!(cap, LevelCap { l_max: 1, uncapped: None, degenerate: true });
    }

    #[test]
    fn budget_is_strict() {
        let p = table();
        let at_three = avg_power_ub_hybrid(&p, 3).unwrap();
        let q = SystemParams { max_avg_power_dbm: to_dbm(at_three).unwrap(), ..p.clone() };
        let cap = max_levels(&q, |_l| Ok(at_three)).unwrap();
        assert!(cap.degenerate);
    }

    #[test]
    fn non_monotone_power_rejected() {
        let p = table();
        let err = max_levels(&p, |l| Ok(if l == 2 { 1.0 } else { 2.0 })).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn single_precision_matches() {
        let p32 = SystemParams::<f32>::reference();
        let ub32 = avg_power_ub_hybrid(&p32, 5).unwrap();
        let ub64 = avg_power_ub_hybrid(&table(), 5).unwrap();
        assert_relative_eq!(ub32 as f64, ub64, max_relative = 1e-5);
        let cap = max_levels(&p32, |l| avg_power_ub_hybrid(&p32, l)).unwrap();
        assert_eq!(cap.l_max, 5);
    }
}
