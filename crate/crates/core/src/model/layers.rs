use super::params::SystemParams;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A concrete layering of the cell.
///
/// Layer `l` (1-based) is the ring `(D[l-1], D[l]]` and every device in it
/// aims at received power `v_l = Γ(Γ+1)^(L-l)`. Ring boundaries are
/// `D·√(l/L)`, so all rings have the same area.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPlan<T> {
    target_sinr: T,
    power_levels: Vec<T>,
    ring_boundaries: Vec<T>,
}

/// Build the plan for `num_levels` layers from the scenario's target SINR
/// and cell radius.
pub fn build_layer_plan<T: Scalar>(params: &SystemParams<T>, num_levels: u32) -> Result<LayerPlan<T>> {
    LayerPlan::new(params.target_sinr(), params.cell_radius, num_levels)
}

impl<T: Scalar> LayerPlan<T> {
    pub fn new(target_sinr: T, cell_radius: T, num_levels: u32) -> Result<Self> {
        if num_levels < 1 {
            return Err(Error::invalid("a layer plan needs at least one level"));
        }
        if !(target_sinr > T::zero()) {
            return Err(Error::invalid(format!("target SINR must be positive, got {target_sinr}")));
        }
        if !(cell_radius > T::zero()) {
            return Err(Error::invalid(format!("cell radius must be positive, got {cell_radius}")));
        }
        let big_l = num_levels as i32;
        let power_levels = (1..=big_l)
            .map(|l| target_sinr * (target_sinr + T::one()).powi(big_l - l))
            .collect();
        let n = T::from_count(num_levels as u64);
        let mut ring_boundaries: Vec<T> = (0..=num_levels)
            .map(|l| cell_radius * (T::from_count(l as u64) / n).sqrt())
            .collect();
        ring_boundaries[num_levels as usize] = cell_radius;
        Ok(LayerPlan {
            target_sinr,
            power_levels,
            ring_boundaries,
        })
    }

    pub fn num_levels(&self) -> u32 {
        self.power_levels.len() as u32
    }

    pub fn target_sinr(&self) -> T {
        self.target_sinr
    }

    /// `v[1..L]`, strongest first.
    pub fn power_levels(&self) -> &[T] {
        &self.power_levels
    }

    /// `D[0..L]` with `D[0] = 0` and `D[L]` the cell radius.
    pub fn ring_boundaries(&self) -> &[T] {
        &self.ring_boundaries
    }

    pub fn cell_radius(&self) -> T {
        self.ring_boundaries[self.ring_boundaries.len() - 1]
    }

    /// Aimed received power of layer `l` (1-based).
    pub fn level(&self, l: u32) -> Result<T> {
        l.checked_sub(1)
            .and_then(|i| self.power_levels.get(i as usize))
            .copied()
            .ok_or_else(|| Error::invalid(format!("level {l} outside 1..={}", self.num_levels())))
    }

    /// Layer index (1-based) of a device at distance `d` from the base station.
    pub fn layer_of(&self, d: T) -> Result<u32> {
        let radius = self.cell_radius();
        if !(d >= T::zero() && d <= radius) {
            return Err(Error::OutOfCell {
                distance: d.as_f64(),
                radius: radius.as_f64(),
            });
        }
        // first outer boundary that is >= d; d = 0 lands in layer 1
        let idx = self.ring_boundaries[1..].partition_point(|&b| b < d);
        Ok(idx as u32 + 1)
    }

    /// SINR seen by level `l` once all stronger levels are cancelled and all
    /// weaker levels are present, with unit noise.
    pub fn sic_sinr(&self, l: u32) -> Result<T> {
        let v = self.level(l)?;
        let interference: T = self.power_levels[l as usize..].iter().copied().sum();
        Ok(v / (T::one() + interference))
    }
}

/// Transmit decision of one device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxPower<T> {
    pub power: T,
    /// 0-based index of the strongest subchannel.
    pub subchannel: usize,
}

/// Pick the strongest subchannel (lowest index on ties) and invert its gain
/// so that the received power equals `level` exactly.
pub fn tx_power<T: Scalar>(level: T, gains: &[T]) -> Result<TxPower<T>> {
    if gains.is_empty() {
        return Err(Error::invalid("at least one subchannel gain is required"));
    }
    if let Some((index, &g)) = gains.iter().enumerate().find(|(_, g)| !(**g > T::zero())) {
        return Err(Error::InvalidChannel {
            index,
            gain: g.as_f64(),
        });
    }
    let (subchannel, best) = gains
        .iter()
        .copied()
        .enumerate()
        .fold((0, gains[0]), |acc, (i, g)| if g > acc.1 { (i, g) } else { acc });
    Ok(TxPower {
        power: level / best,
        subchannel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn gamma() -> f64 {
        10f64.powf(0.6)
    }

    #[test]
    fn single_layer() {
        let plan = LayerPlan::new(gamma(), 1.0, 1).unwrap();
        assert_eq!(plan.power_levels(), &[gamma()]);
        assert_eq!(plan.ring_boundaries(), &[0.0, 1.0]);
    }

    #[test]
    fn three_level_ladder() {
        let plan = LayerPlan::new(gamma(), 1.0, 3).unwrap();
        let v = plan.power_levels();
        assert_relative_eq!(v[0], 98.7747, epsilon = 1e-3);
        assert_relative_eq!(v[1], 19.8301, epsilon = 1e-3);
        assert_relative_eq!(v[2], 3.98107, epsilon = 1e-4);
    }

    #[test]
    fn four_rings() {
        let plan = LayerPlan::new(gamma(), 1.0, 4).unwrap();
        let expect = [0.0, 0.5, 0.707_106_781_186_547_5, 0.866_025_403_784_438_6, 1.0];
        for (b, e) in plan.ring_boundaries().iter().zip(expect) {
            assert_relative_eq!(*b, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_levels_rejected() {
        assert!(matches!(LayerPlan::new(gamma(), 1.0, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn layer_lookup() {
        let plan = LayerPlan::new(gamma(), 1.0, 4).unwrap();
        assert_eq!(plan.layer_of(0.0).unwrap(), 1);
        assert_eq!(plan.layer_of(1.0).unwrap(), 4);
        assert_eq!(plan.layer_of(0.6).unwrap(), 2);
        assert_eq!(plan.layer_of(0.5).unwrap(), 1);
        assert!(matches!(plan.layer_of(1.0001), Err(Error::OutOfCell { .. })));
        assert!(plan.layer_of(-0.1).is_err());
    }

    #[test]
    fn tx_power_examples() {
        let t = tx_power(3.981, &[1.0; 48]).unwrap();
        assert_eq!(t, TxPower { power: 3.981, subchannel: 0 });

        let t = tx_power(19.83, &[0.5, 2.0]).unwrap();
        assert_eq!(t.subchannel, 1);
        assert_relative_eq!(t.power, 9.915);

        let g = 0.37;
        let t = tx_power(gamma(), &[g]).unwrap();
        assert_eq!(t.subchannel, 0);
        assert_relative_eq!(t.power, gamma() / g);
    }

    #[test]
    fn tx_power_rejects_bad_gain() {
        assert_eq!(
            tx_power(1.0, &[1.0, 0.0, 2.0]),
            Err(Error::InvalidChannel { index: 1, gain: 0.0 })
        );
        assert!(tx_power(1.0, &[-1.0]).is_err());
        assert!(tx_power::<f64>(1.0, &[]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let plan = LayerPlan::new(10f32.powf(0.6), 1.0, 5).unwrap();
        for l in 1..=5 {
            assert_relative_eq!(plan.sic_sinr(l).unwrap(), plan.target_sinr(), max_relative = 1e-5);
        }
    }

    proptest! {
        #[test]
        fn ladder_invariants(gamma_db in -10.0f64..20.0, levels in 1u32..=10, radius in 0.1f64..10.0) {
            let g = 10f64.powf(gamma_db / 10.0);
            let plan = LayerPlan::new(g, radius, levels).unwrap();
            let v = plan.power_levels();
            prop_assert_eq!(v[v.len() - 1], g);
            for w in v.windows(2) {
                prop_assert!(w[0] > w[1]);
                prop_assert!(((w[0] - (g + 1.0) * w[1]) / w[0]).abs() <= 1e-12);
            }
            for l in 1..=levels {
                let sinr = plan.sic_sinr(l).unwrap();
                prop_assert!(((sinr - g) / g).abs() <= 1e-12, "l={} sinr={} g={}", l, sinr, g);
            }
            let d = plan.ring_boundaries();
            prop_assert_eq!(d[0], 0.0);
            prop_assert_eq!(d[levels as usize], radius);
            let area = radius * radius / levels as f64;
            for w in d.windows(2) {
                prop_assert!((w[1] * w[1] - w[0] * w[0] - area).abs() <= 1e-12 * radius * radius.max(1.0));
            }
        }

        #[test]
        fn layer_of_respects_rings(levels in 1u32..=12, u in 0.0f64..=1.0) {
            let plan = LayerPlan::new(gamma(), 1.0, levels).unwrap();
            let l = plan.layer_of(u).unwrap();
            let d = plan.ring_boundaries();
            prop_assert!(l >= 1 && l <= levels);
            prop_assert!(u <= d[l as usize]);
            prop_assert!(u == 0.0 || u > d[l as usize - 1]);
        }

        #[test]
        fn received_power_is_exact(level in 0.01f64..1e4, gains in prop::collection::vec(1e-6f64..1e3, 1..64)) {
            let t = tx_power(level, &gains).unwrap();
            let g = gains[t.subchannel];
            prop_assert!(gains.iter().all(|&x| x <= g));
            prop_assert!(gains[..t.subchannel].iter().all(|&x| x < g));
            prop_assert!(((t.power * g - level) / level).abs() <= 1e-12);
        }
    }
}
