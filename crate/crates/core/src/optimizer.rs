//! Joint access control and layer selection.
//!
//! The level count is fixed first by the average power budget and the
//! receiver limit; the barring parameter `p_E` is then chosen by exhaustive
//! grid search to maximize the closed-form connection throughput among the
//! grid points that meet the delay budget. When no grid point meets it the
//! unconstrained maximizer is returned and the result is marked infeasible.

use serde::Serialize;

use crate::analytic::{self, AccessModel};
use crate::error::{Error, Result};
use crate::model::{
    avg_power_random_noma, avg_power_ub_hybrid, default_inv_gain_expectation, max_levels, LevelCap, SystemParams,
};
use crate::scalar::Scalar;

pub const DEFAULT_GRID_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptResult<T> {
    pub p_e_star: T,
    pub l_star: u32,
    pub throughput: T,
    pub p_a: T,
    /// `T_P / p_a`; infinite when `p_a = 0`.
    pub avg_delay: T,
    /// Delay budget met at `p_e_star`.
    pub feasible: bool,
    pub search_grid_step: T,
    /// No backlogged devices; every grid point gives zero throughput.
    pub idle: bool,
}

/// `p_E` grid `{step, 2·step, ..., 1}`; `1` is always included.
pub fn pe_grid<T: Scalar>(step: T) -> Result<Vec<T>> {
    if !(step > T::zero() && step < T::one()) {
        return Err(Error::invalid(format!("grid step {step} outside (0, 1)")));
    }
    let n = (T::one() / step).floor().to_u64().unwrap_or(0);
    let mut grid: Vec<T> = (1..=n).map(|i| T::from_count(i) * step).filter(|&p| p <= T::one()).collect();
    let tol = step * T::lit(1e-6);
    match grid.last_mut() {
        Some(last) if (T::one() - *last).abs() <= tol => *last = T::one(),
        _ => grid.push(T::one()),
    }
    Ok(grid)
}

/// Access probability at `p_E` with `C = p_E·Q/L` per layer. Below one
/// contender the closed form can exceed one; it is clamped there.
fn access_prob_at<T: Scalar>(q: u64, m: u32, levels: u32, p_e: T) -> Result<T> {
    let model = AccessModel::from_population(m, q, levels, p_e, T::one())?;
    Ok(analytic::access_prob(p_e, model.success_prob()?.min(T::one())))
}

fn delay_for<T: Scalar>(slot_period: T, p_a: T) -> T {
    analytic::avg_delay(slot_period, p_a).unwrap_or(T::infinity())
}

/// Grid points whose average access delay `T_P / p_a` is within `D_req`.
pub fn feasible_set<T: Scalar>(q: u64, m: u32, levels: u32, slot_period: T, delay_req: T, grid_step: T) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for p_e in pe_grid(grid_step)? {
        let p_a = access_prob_at(q, m, levels, p_e)?;
        if p_a > T::zero() && delay_for(slot_period, p_a) <= delay_req {
            out.push(p_e);
        }
    }
    Ok(out)
}

/// Throughput-maximizing `p_E` over `restrict` (or the full grid when it is
/// `None` or empty). Ties go to the smaller `p_E`.
pub fn optimize_pe<T: Scalar>(q: u64, m: u32, levels: u32, grid_step: T, restrict: Option<&[T]>) -> Result<(T, T)> {
    let full;
    let candidates = match restrict {
        Some(r) if !r.is_empty() => r,
        _ => {
            full = pe_grid(grid_step)?;
            &full[..]
        }
    };
    let mut best: Option<(T, T)> = None;
    for &p_e in candidates {
        let t = analytic::total_throughput(m, q, levels, p_e)?;
        if best.is_none_or(|(_, bt)| t > bt) {
            best = Some((p_e, t));
        }
    }
    best.ok_or_else(|| Error::invalid("empty p_E grid"))
}

/// Search `p_E` at a fixed level count.
pub fn optimize_at_levels<T: Scalar>(q: u64, m: u32, levels: u32, params: &SystemParams<T>, grid_step: T) -> Result<OptResult<T>> {
    let feasible = feasible_set(q, m, levels, params.slot_period_ms, params.delay_requirement_ms, grid_step)?;
    let (p_e_star, throughput) = optimize_pe(q, m, levels, grid_step, Some(&feasible))?;
    let p_a = access_prob_at(q, m, levels, p_e_star)?;
    Ok(OptResult {
        p_e_star,
        l_star: levels,
        throughput,
        p_a,
        avg_delay: delay_for(params.slot_period_ms, p_a),
        feasible: !feasible.is_empty(),
        search_grid_step: grid_step,
        idle: q == 0,
    })
}

/// Level cap used by the search: the hybrid power bound with `m` subchannels.
pub fn hybrid_level_cap<T: Scalar>(m: u32, params: &SystemParams<T>) -> Result<LevelCap> {
    let scenario = params.with_num_subchannels(m);
    max_levels(&scenario, |l| avg_power_ub_hybrid(&scenario, l))
}

/// Level cap for random NOMA under the default `E[1/g]` model.
pub fn random_noma_level_cap<T: Scalar>(params: &SystemParams<T>) -> Result<LevelCap> {
    let inv_gain = default_inv_gain_expectation(params);
    max_levels(params, |l| avg_power_random_noma(params, l, inv_gain))
}

/// Full search: `L = L_max` from the power budget, then `p_E`.
pub fn jacnls<T: Scalar>(q: u64, m: u32, params: &SystemParams<T>, grid_step: T) -> Result<OptResult<T>> {
    if m < 2 {
        return Err(Error::invalid(format!("need at least 2 subchannels, got {m}")));
    }
    let cap = hybrid_level_cap(m, params)?;
    optimize_at_levels(q, m, cap.l_max, params, grid_step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table() -> SystemParams<f64> {
        SystemParams::reference()
    }

    #[test]
    fn grid_shapes() {
        let g = pe_grid(0.25_f64).unwrap();
        assert_eq!(g, vec![0.25, 0.5, 0.75, 1.0]);
        let g = pe_grid(0.3_f64).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(*g.last().unwrap(), 1.0);
        let g = pe_grid(1e-3_f64).unwrap();
        assert_eq!(g.len(), 1000);
        assert_eq!(g[999], 1.0);
        assert!(pe_grid(0.0_f64).is_err());
        assert!(pe_grid(1.0_f64).is_err());
        assert_eq!(pe_grid(0.1_f32).unwrap().len(), 10);
    }

    #[test]
    fn lone_device_feasible_from_threshold() {
        let set = feasible_set(1, 48, 1, 0.2, 1.0, 0.01_f64).unwrap();
        assert_relative_eq!(set[0], 0.2, epsilon = 1e-9);
        assert_eq!(*set.last().unwrap(), 1.0);
        assert_eq!(set.len(), 81);
    }

    #[test]
    fn reference_load_feasible_at_half() {
        let set = feasible_set(300, 48, 5, 0.2, 1.0, 1e-3_f64).unwrap();
        assert!(set.iter().any(|&p| (p - 0.5).abs() < 1e-9));
    }

    #[test]
    fn overload_has_no_feasible_point() {
        assert!(feasible_set(100_000, 48, 5, 0.2, 1.0, 1e-3_f64).unwrap().is_empty());
    }

    #[test]
    fn light_load_uses_full_access() {
        let (p, t) = optimize_pe(10, 48, 5, 1e-3_f64, None).unwrap();
        assert_eq!(p, 1.0);
        assert_relative_eq!(t, analytic::total_throughput(48, 10, 5, 1.0).unwrap());
    }

    #[test]
    fn reference_load_optimum() {
        let (p, t) = optimize_pe(300, 48, 5, 1e-3_f64, None).unwrap();
        assert!((p - 0.5).abs() < 0.03, "{p}");
        assert_relative_eq!(t, 63.0, epsilon = 0.1);
    }

    #[test]
    fn no_devices_picks_smallest_p() {
        let (p, t) = optimize_pe(0, 48, 5, 0.01_f64, None).unwrap();
        assert_eq!(t, 0.0);
        assert_relative_eq!(p, 0.01);
        let r = jacnls(0, 48, &table(), 0.01).unwrap();
        assert!(r.idle);
        assert_eq!(r.throughput, 0.0);
    }

    #[test]
    fn jacnls_reference() {
        let r = jacnls(300, 48, &table(), 1e-3).unwrap();
        assert_eq!(r.l_star, 5);
        assert!(r.feasible);
        assert!((r.p_e_star - 0.5).abs() < 0.03);
        assert_relative_eq!(r.throughput, 63.0, max_relative = 0.02);
        assert!(r.p_a >= 0.2);
        assert!(r.avg_delay <= 1.0);
        assert_relative_eq!(r.throughput, analytic::total_throughput(48, 300, 5, r.p_e_star).unwrap());
    }

    #[test]
    fn jacnls_light_load() {
        let r = jacnls(10, 48, &table(), 1e-3).unwrap();
        assert_eq!((r.p_e_star, r.l_star, r.feasible), (1.0, 5, true));
    }

    #[test]
    fn jacnls_overload_best_effort() {
        let r = jacnls(100_000, 48, &table(), 1e-3).unwrap();
        assert!(!r.feasible);
        assert!(r.avg_delay > 1.0);
        let (p, t) = optimize_pe(100_000, 48, 5, 1e-3, None).unwrap();
        assert_eq!((r.p_e_star, r.throughput), (p, t));
    }

    #[test]
    fn optimum_beats_every_grid_point() {
        for q in [20u64, 150, 300, 500, 2000] {
            let r = jacnls(q, 48, &table(), 0.01).unwrap();
            let candidates = if r.feasible {
                feasible_set(q, 48, 5, 0.2, 1.0, 0.01).unwrap()
            } else {
                pe_grid(0.01).unwrap()
            };
            for p in candidates {
                let t = analytic::total_throughput(48, q, 5, p).unwrap();
                assert!(t <= r.throughput, "q={q} p={p}");
            }
        }
    }

    #[test]
    fn grid_refinement_is_stable() {
        for q in [50u64, 300, 500] {
            let coarse = jacnls(q, 48, &table(), 1e-3).unwrap();
            let fine = jacnls(q, 48, &table(), 5e-4).unwrap();
            let rel = (fine.throughput - coarse.throughput).abs() / coarse.throughput;
            assert!(rel < 1e-3, "q={q} rel={rel}");
        }
    }

    #[test]
    fn single_precision_search() {
        let r = jacnls(300, 48, &SystemParams::<f32>::reference(), 1e-3).unwrap();
        assert_eq!(r.l_star, 5);
        assert!(r.feasible);
        assert!((r.throughput - 63.0).abs() < 1.3);
    }

    #[test]
    fn level_cap_tracks_subchannels() {
        assert_eq!(hybrid_level_cap(48, &table()).unwrap().l_max, 5);
        assert!(jacnls(300, 1, &table(), 0.01).is_err());
        assert_eq!(random_noma_level_cap(&table()).unwrap().l_max, 4);
    }
}
