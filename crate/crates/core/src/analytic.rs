//! Closed-form connection probability and the quantities derived from it.
//!
//! With `C` contenders per layer picking one of `M` subchannels uniformly,
//! a device of layer `l` is decoded iff it is alone at its level on its
//! subchannel and every stronger level there holds at most one signal.
//! That probability is
//!
//! `P_l = (1 - 1/M)^(C·l - 1) · (1 + C/(M-1))^(l-1)`.
//!
//! `C` is real-valued here so that `C = p_E·Q/L` can be substituted directly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Pow;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_subchannels(m: u32) -> Result<()> {
    if m < 2 {
        return Err(Error::invalid(format!("need at least 2 subchannels, got {m}")));
    }
    Ok(())
}

fn check_layer(l: u32) -> Result<()> {
    if l < 1 {
        return Err(Error::invalid("layer index is 1-based"));
    }
    Ok(())
}

fn check_contenders<T: Scalar>(c: T) -> Result<()> {
    if !(c >= T::zero()) || !c.is_finite() {
        return Err(Error::invalid(format!("contender count must be finite and >= 0, got {c}")));
    }
    Ok(())
}

/// Probability that a device of layer `l` is decoded.
///
/// `c < 1` is evaluated as written; it has no probabilistic reading (see
/// [`AccessModel::below_one_contender`]).
pub fn connection_prob<T: Scalar>(m: u32, c: T, l: u32) -> Result<T> {
    check_subchannels(m)?;
    check_layer(l)?;
    check_contenders(c)?;
    let mf = T::from_count(m as u64);
    let lf = T::from_count(l as u64);
    let miss = T::one() - T::one() / mf;
    let boost = T::one() + c / (mf - T::one());
    Ok(miss.powf(c * lf - T::one()) * boost.powi(l as i32 - 1))
}

/// Exact rational form for integer `C ≥ 1`:
/// `(M-1)^((C-1)·l) · (C+M-1)^(l-1) / M^(C·l-1)`.
pub fn connection_prob_exact(m: u32, c: u32, l: u32) -> Result<BigRational> {
    check_subchannels(m)?;
    check_layer(l)?;
    if c < 1 {
        return Err(Error::invalid("the exact form needs at least one contender"));
    }
    let big = |x: u64| BigInt::from(x);
    let (m, c, l) = (m as u64, c as u64, l as u64);
    let numer = Pow::pow(big(m - 1), (c - 1) * l) * Pow::pow(big(c + m - 1), l - 1);
    let denom = Pow::pow(big(m), c * l - 1);
    Ok(BigRational::new(numer, denom))
}

/// Expected number of decoded devices of layer `l`: `C · P_l`.
pub fn layer_throughput<T: Scalar>(m: u32, c: T, l: u32) -> Result<T> {
    Ok(c * connection_prob(m, c, l)?)
}

/// Connection throughput summed over layers with `C = p_E·Q/L`.
pub fn total_throughput<T: Scalar>(m: u32, q: u64, num_levels: u32, p_e: T) -> Result<T> {
    AccessModel::from_population(m, q, num_levels, p_e, T::one())?.throughput()
}

/// Success probability of a contending device averaged over the `L` layers.
pub fn success_prob<T: Scalar>(m: u32, c: T, num_levels: u32) -> Result<T> {
    if num_levels < 1 {
        return Err(Error::invalid("need at least one level"));
    }
    let mut sum = T::zero();
    for l in 1..=num_levels {
        sum = sum + connection_prob(m, c, l)?;
    }
    Ok(sum / T::from_count(num_levels as u64))
}

/// Probability that a backlogged device gets through in a slot: it passes
/// the barring draw and is then decoded.
pub fn access_prob<T: Scalar>(p_e: T, p_succ: T) -> T {
    p_e * p_succ
}

/// Mean access delay with immediate retries: `T_P / p_a`.
pub fn avg_delay<T: Scalar>(slot_period: T, p_a: T) -> Result<T> {
    if p_a == T::zero() {
        return Err(Error::InfiniteDelay);
    }
    if !(p_a > T::zero() && p_a <= T::one()) {
        return Err(Error::invalid(format!("access probability {p_a} outside (0, 1]")));
    }
    Ok(slot_period / p_a)
}

/// One operating point: `M` subchannels, `C` contenders per layer, `L`
/// layers, barring parameter `p_E` and slot period `T_P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessModel<T> {
    pub num_subchannels: u32,
    pub contenders_per_layer: T,
    pub num_levels: u32,
    pub p_e: T,
    pub slot_period_ms: T,
}

impl<T: Scalar> AccessModel<T> {
    pub fn new(num_subchannels: u32, contenders_per_layer: T, num_levels: u32, p_e: T, slot_period_ms: T) -> Result<Self> {
        check_subchannels(num_subchannels)?;
        check_contenders(contenders_per_layer)?;
        if num_levels < 1 {
            return Err(Error::invalid("need at least one level"));
        }
        if !(p_e > T::zero() && p_e <= T::one()) {
            return Err(Error::invalid(format!("p_E = {p_e} outside (0, 1]")));
        }
        if !(slot_period_ms > T::zero()) {
            return Err(Error::invalid("slot period must be positive"));
        }
        Ok(AccessModel {
            num_subchannels,
            contenders_per_layer,
            num_levels,
            p_e,
            slot_period_ms,
        })
    }

    /// `Q` backlogged devices thinned by `p_E` and split evenly over `L` layers.
    pub fn from_population(num_subchannels: u32, q: u64, num_levels: u32, p_e: T, slot_period_ms: T) -> Result<Self> {
        if num_levels < 1 {
            return Err(Error::invalid("need at least one level"));
        }
        let c = p_e * T::from_count(q) / T::from_count(num_levels as u64);
        Self::new(num_subchannels, c, num_levels, p_e, slot_period_ms)
    }

    /// The closed form assumes at least one contender per layer.
    pub fn below_one_contender(&self) -> bool {
        self.contenders_per_layer < T::one()
    }

    pub fn connection_prob(&self, l: u32) -> Result<T> {
        if l > self.num_levels {
            return Err(Error::invalid(format!("layer {l} outside 1..={}", self.num_levels)));
        }
        connection_prob(self.num_subchannels, self.contenders_per_layer, l)
    }

    pub fn layer_throughputs(&self) -> Result<Vec<T>> {
        (1..=self.num_levels)
            .map(|l| layer_throughput(self.num_subchannels, self.contenders_per_layer, l))
            .collect()
    }

    pub fn throughput(&self) -> Result<T> {
        Ok(self.layer_throughputs()?.into_iter().sum())
    }

    pub fn success_prob(&self) -> Result<T> {
        success_prob(self.num_subchannels, self.contenders_per_layer, self.num_levels)
    }

    pub fn access_prob(&self) -> Result<T> {
        Ok(access_prob(self.p_e, self.success_prob()?))
    }

    pub fn avg_delay(&self) -> Result<T> {
        avg_delay(self.slot_period_ms, self.access_prob()?)
    }
}

/// Convenience for comparing the exact and floating routes.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn lone_contender_always_succeeds() {
        for m in [2, 3, 48, 1000] {
            assert_eq!(connection_prob(m, 1.0_f64, 1).unwrap(), 1.0);
            assert!(num_traits::One::is_one(&connection_prob_exact(m, 1, 1).unwrap()));
        }
    }

    #[test]
    fn two_by_two_enumerated_value() {
        // 16 equally likely subchannel assignments, see simulator::oracle
        assert_relative_eq!(connection_prob(2, 2.0_f64, 2).unwrap(), 0.375, max_relative = 1e-15);
        assert_eq!(connection_prob_exact(2, 2, 2).unwrap(), BigRational::new(3.into(), 8.into()));
        assert_relative_eq!(layer_throughput(2, 2.0_f64, 2).unwrap(), 0.75, max_relative = 1e-15);
    }

    #[test]
    fn slotted_aloha_layer() {
        let p = connection_prob(48, 30.0_f64, 1).unwrap();
        assert_relative_eq!(p, (47.0_f64 / 48.0).powi(29), max_relative = 1e-13);
        assert_relative_eq!(p, 0.5431, epsilon = 1e-4);
        assert_relative_eq!(layer_throughput(48, 30.0_f64, 1).unwrap(), 16.29, epsilon = 0.01);
    }

    #[test]
    fn no_contenders_no_throughput() {
        for l in 1..=5 {
            assert_eq!(layer_throughput(48, 0.0_f64, l).unwrap(), 0.0);
        }
        assert_eq!(total_throughput(48, 0, 5, 0.7_f64).unwrap(), 0.0);
    }

    #[test]
    fn reference_operating_point() {
        let t = total_throughput(48, 300, 5, 0.5_f64).unwrap();
        assert_relative_eq!(t, 63.0, epsilon = 0.01);
        let ps = success_prob(48, 30.0_f64, 5).unwrap();
        assert_relative_eq!(ps, t / 150.0, max_relative = 1e-13);
        assert_relative_eq!(ps, 0.42, epsilon = 1e-3);
        let pa = access_prob(0.5, ps);
        assert_relative_eq!(pa, 0.21, epsilon = 1e-3);
        assert_relative_eq!(avg_delay(0.2, pa).unwrap(), 0.952, epsilon = 1e-3);
    }

    #[test]
    fn aloha_peak() {
        let t = total_throughput(48, 300, 1, 0.16_f64).unwrap();
        assert_relative_eq!(t, 48.0 * (47.0_f64 / 48.0).powi(47), max_relative = 1e-12);
        assert_relative_eq!(t, 17.8, epsilon = 0.05);
    }

    #[test]
    fn success_prob_examples() {
        assert_eq!(success_prob(48, 1.0_f64, 1).unwrap(), 1.0);
        assert_relative_eq!(success_prob(2, 2.0_f64, 2).unwrap(), 0.4375, max_relative = 1e-15);
    }

    #[test]
    fn access_and_delay() {
        assert_eq!(access_prob(1.0, 1.0), 1.0);
        assert_relative_eq!(access_prob(0.5, 0.42), 0.21);
        assert_eq!(access_prob(0.3, 0.0), 0.0);
        assert_eq!(avg_delay(0.2, 1.0).unwrap(), 0.2);
        assert_relative_eq!(avg_delay(0.2, 0.21).unwrap(), 0.952_380_952, epsilon = 1e-9);
        assert_relative_eq!(avg_delay(0.2, 0.1).unwrap(), 2.0);
        assert_eq!(avg_delay(0.2, 0.0), Err(Error::InfiniteDelay));
        assert!(matches!(avg_delay(0.2, 1.5), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn argument_errors() {
        assert!(connection_prob(1, 2.0_f64, 1).is_err());
        assert!(connection_prob(48, 2.0_f64, 0).is_err());
        assert!(connection_prob(48, -1.0_f64, 1).is_err());
        assert!(connection_prob_exact(48, 0, 1).is_err());
        assert!(total_throughput(1, 10, 1, 0.5_f64).is_err());
        assert!(AccessModel::new(48, 1.0_f64, 1, 0.0, 0.2).is_err());
        assert!(AccessModel::new(48, 1.0_f64, 0, 0.5, 0.2).is_err());
    }

    #[test]
    fn fractional_contention_flagged() {
        let a = AccessModel::from_population(48, 3, 5, 0.5_f64, 0.2).unwrap();
        assert!(a.below_one_contender());
        assert!(a.throughput().unwrap().is_finite());
        let b = AccessModel::from_population(48, 300, 5, 0.5_f64, 0.2).unwrap();
        assert!(!b.below_one_contender());
        assert_relative_eq!(b.avg_delay().unwrap(), 0.2 / b.access_prob().unwrap());
    }

    #[test]
    fn single_precision_agrees() {
        let t32 = total_throughput(48, 300, 5, 0.5_f32).unwrap();
        let t64 = total_throughput(48, 300, 5, 0.5_f64).unwrap();
        assert_relative_eq!(t32 as f64, t64, max_relative = 1e-5);
    }

    #[test]
    fn exact_and_float_routes_agree() {
        for m in 2..=6 {
            for c in 1..=6 {
                for l in 1..=5 {
                    let exact = rational_to_f64(&connection_prob_exact(m, c, l).unwrap());
                    let float = connection_prob(m, c as f64, l).unwrap();
                    assert_relative_eq!(exact, float, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn decreasing_in_contenders_on_grid() {
        for m in [2u32, 3, 8, 48, 128] {
            for l in 1..=6 {
                let mut prev = f64::INFINITY;
                for i in 0..400 {
                    let c = 1.0 + 0.25 * i as f64;
                    let p = connection_prob(m, c, l).unwrap();
                    assert!(p < prev, "m={m} l={l} c={c}");
                    prev = p;
                }
            }
        }
    }

    proptest! {
        #[test]
        fn probability_bounds_and_layer_order(m in 2u32..200, c in 1.0f64..400.0, l in 1u32..12) {
            let p = connection_prob(m, c, l).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            let next = connection_prob(m, c, l + 1).unwrap();
            prop_assert!(next <= p * (1.0 + 1e-12));
            let ratio = (c + m as f64 - 1.0) / m as f64 * (1.0 - 1.0 / m as f64).powf(c - 1.0);
            prop_assert!(ratio <= 1.0 + 1e-12);
            prop_assert!((next - p * ratio).abs() <= 1e-12 * p.max(1e-300));
        }

        #[test]
        fn layers_tie_only_for_single_contender(m in 2u32..200, l in 1u32..12, extra in 1u32..50) {
            let one = connection_prob(m, 1.0_f64, l).unwrap();
            let next = connection_prob(m, 1.0_f64, l + 1).unwrap();
            prop_assert!((one - next).abs() <= 1e-14, "{} vs {}", one, next);
            let c = 1.0 + extra as f64;
            prop_assert!(connection_prob(m, c, l + 1).unwrap() < connection_prob(m, c, l).unwrap());
        }

        #[test]
        fn delay_times_access_is_slot(t_p in 0.01f64..10.0, p_a in 1e-6f64..=1.0) {
            let d = avg_delay(t_p, p_a).unwrap();
            prop_assert!((d * p_a - t_p).abs() <= 1e-12 * t_p);
        }
    }
}
