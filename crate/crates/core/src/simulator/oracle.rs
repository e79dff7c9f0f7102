//! Exact per-layer success probabilities by enumerating every subchannel
//! assignment of a small instance and running the SIC receiver on each.

use num_bigint::BigInt;
use num_rational::BigRational;

use super::sic::{tally, Occupancy};
use crate::error::{Error, Result};

/// Largest number of assignments the oracle will enumerate.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

/// Number of assignments for `c` devices in each of `levels` layers on `m`
/// subchannels: `m^(c·levels)`.
pub fn enumeration_size(m: u32, c: u32, levels: u32) -> u128 {
    (m as u128).checked_pow(c * levels).unwrap_or(u128::MAX)
}

/// Decoded-device counts per layer summed over all `m^(c·L)` equally likely
/// assignments, together with that assignment count.
fn enumerate(m: u32, c: u32, levels: u32) -> Result<(Vec<u64>, u64)> {
    if m < 1 || c < 1 || levels < 1 {
        return Err(Error::invalid("oracle needs m, c, L >= 1"));
    }
    let required = enumeration_size(m, c, levels);
    if required > ENUMERATION_BUDGET {
        return Err(Error::TooLargeInstance {
            required,
            budget: ENUMERATION_BUDGET,
        });
    }
    let n = (c * levels) as usize;
    let level_of: Vec<usize> = (0..n).map(|k| k / c as usize).collect();
    let mut choice = vec![0usize; n];
    let mut occ = Occupancy::new(m as usize, levels as usize);
    for (k, &l) in level_of.iter().enumerate() {
        occ.add(choice[k], l);
    }
    let mut decoded = vec![0u64; levels as usize];
    let mut scratch = vec![0u64; levels as usize];
    let mut total = 0u64;
    loop {
        tally(&occ, &mut decoded, &mut scratch);
        total += 1;
        // odometer step, keeping the occupancy grid in sync
        let mut k = 0;
        loop {
            if k == n {
                return Ok((decoded, total));
            }
            let l = level_of[k];
            occ.remove(choice[k], l);
            choice[k] += 1;
            if choice[k] == m as usize {
                choice[k] = 0;
                occ.add(0, l);
                k += 1;
            } else {
                occ.add(choice[k], l);
                break;
            }
        }
    }
}

/// Exact success probability of a tagged device in each layer.
pub fn exhaustive_connection_prob_exact(m: u32, c: u32, levels: u32) -> Result<Vec<BigRational>> {
    let (decoded, total) = enumerate(m, c, levels)?;
    let denom = BigInt::from(total) * BigInt::from(c);
    Ok(decoded
        .into_iter()
        .map(|d| BigRational::new(BigInt::from(d), denom.clone()))
        .collect())
}

/// [`exhaustive_connection_prob_exact`] as floats.
pub fn exhaustive_connection_prob(m: u32, c: u32, levels: u32) -> Result<Vec<f64>> {
    let (decoded, total) = enumerate(m, c, levels)?;
    let denom = total as f64 * c as f64;
    Ok(decoded.into_iter().map(|d| d as f64 / denom).collect())
}
