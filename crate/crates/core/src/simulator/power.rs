use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::RngSpec;
use crate::error::{Error, Result};
use crate::model::{build_layer_plan, tx_power, SystemParams};

const SAMPLES_PER_CHUNK: u64 = 16_384;

/// Per-subchannel channel gain model on top of the pathloss `A0·d^(-β)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fading {
    /// Independent unit-mean exponential power gain per subchannel.
    #[default]
    Rayleigh,
    /// Pathloss only; every subchannel has the same gain.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
}

/// Mean transmit power of a device placed uniformly in the cell that picks
/// its strongest of `num_subchannels` subchannels and inverts the gain to
/// hit its layer's level.
pub fn simulate_avg_power(
    params: &SystemParams<f64>,
    num_levels: u32,
    num_subchannels: u32,
    n_samples: u64,
    fading: Fading,
    seed: RngSpec,
) -> Result<PowerEstimate> {
    if num_subchannels < 2 {
        return Err(Error::Unsupported(format!(
            "the power bound it is checked against needs at least 2 subchannels, got {num_subchannels}"
        )));
    }
    if n_samples < 1 {
        return Err(Error::invalid("need at least one sample"));
    }
    let plan = build_layer_plan(params, num_levels)?;
    let radius = params.cell_radius;
    let chunks = n_samples.div_ceil(SAMPLES_PER_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed.substream(k).rng();
            let mut gains = vec![0.0; num_subchannels as usize];
            let count = SAMPLES_PER_CHUNK.min(n_samples - k * SAMPLES_PER_CHUNK);
            let (mut s, mut ss) = (0.0, 0.0);
            for _ in 0..count {
                // (0, 1] keeps the device off the base station
                let u: f64 = 1.0 - rng.random::<f64>();
                let d = radius * u.sqrt();
                let layer = plan.layer_of(d)?;
                let pathloss = params.antenna_constant * d.powf(-params.pathloss_exponent);
                for g in gains.iter_mut() {
                    *g = match fading {
                        Fading::Rayleigh => pathloss * rng.sample::<f64, _>(Exp1),
                        Fading::None => pathloss,
                    };
                }
                let p = tx_power(plan.level(layer)?, &gains)?.power;
                s += p;
                ss += p * p;
            }
            Ok((s, ss))
        })
        .collect::<Result<_>>()?;
    let (s, ss) = sums.iter().fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    let n = n_samples as f64;
    let mean = s / n;
    let var = if n_samples > 1 {
        ((ss - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(PowerEstimate {
        mean,
        std_error: (var / n).sqrt(),
        n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_level_without_fading() {
        // Γ·E[d^β]/A0 = Γ·2/(β+2)
        let p = SystemParams::<f64>::reference();
        let est = simulate_avg_power(&p, 1, 48, 400_000, Fading::None, RngSpec::new(5)).unwrap();
        let expect = p.target_sinr() * 2.0 / 5.8;
        assert!((expect - 1.373).abs() < 1e-3);
        assert!((est.mean - expect).abs() < 4.0 * est.std_error, "{} vs {expect}", est.mean);
    }

    #[test]
    fn one_subchannel_rejected() {
        let p = SystemParams::<f64>::reference();
        let err = simulate_avg_power(&p, 1, 1, 10, Fading::Rayleigh, RngSpec::new(5)).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn deterministic() {
        let p = SystemParams::<f64>::reference();
        let a = simulate_avg_power(&p, 3, 8, 50_000, Fading::Rayleigh, RngSpec::new(1)).unwrap();
        let b = simulate_avg_power(&p, 3, 8, 50_000, Fading::Rayleigh, RngSpec::new(1)).unwrap();
        assert_eq!(a, b);
    }
}
