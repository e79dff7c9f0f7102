//! Successive interference cancellation over a subchannel × level grid.
//!
//! On each subchannel the receiver walks the levels from strongest to
//! weakest. An empty level is skipped, a single occupant is decoded and
//! cancelled, and two or more occupants are a power collision: nothing at
//! that level or any weaker level on the subchannel can be decoded.

use crate::error::{Error, Result};

/// Occupant counts, one row per subchannel, one column per level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occupancy {
    num_subchannels: usize,
    num_levels: usize,
    counts: Vec<u32>,
}

impl Occupancy {
    pub fn new(num_subchannels: usize, num_levels: usize) -> Self {
        Occupancy {
            num_subchannels,
            num_levels,
            counts: vec![0; num_subchannels * num_levels],
        }
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let num_levels = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_levels) {
            return Err(Error::invalid("every subchannel needs the same number of levels"));
        }
        Ok(Occupancy {
            num_subchannels: rows.len(),
            num_levels,
            counts: rows.concat(),
        })
    }

    pub fn num_subchannels(&self) -> usize {
        self.num_subchannels
    }

    pub fn num_levels(&self) -> usize {
        self.num_levels
    }

    /// Add one occupant. `subchannel` and `level` are 0-based.
    #[inline]
    pub fn add(&mut self, subchannel: usize, level: usize) {
        self.counts[subchannel * self.num_levels + level] += 1;
    }

    #[inline]
    pub fn remove(&mut self, subchannel: usize, level: usize) {
        self.counts[subchannel * self.num_levels + level] -= 1;
    }

    #[inline]
    pub fn count(&self, subchannel: usize, level: usize) -> u32 {
        self.counts[subchannel * self.num_levels + level]
    }

    pub fn row(&self, subchannel: usize) -> &[u32] {
        let start = subchannel * self.num_levels;
        &self.counts[start..start + self.num_levels]
    }

    pub fn clear(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
    }

    /// 0-based level at which decoding of `subchannel` stops, or
    /// `num_levels` when every level decodes.
    #[inline]
    pub fn cutoff(&self, subchannel: usize) -> usize {
        decode_cutoff(self.row(subchannel))
    }

    /// Whether a lone occupant at `level` on `subchannel` is decoded.
    #[inline]
    pub fn is_decoded(&self, subchannel: usize, level: usize) -> bool {
        self.count(subchannel, level) == 1 && level < self.cutoff(subchannel)
    }
}

#[inline]
fn decode_cutoff(row: &[u32]) -> usize {
    row.iter().position(|&c| c >= 2).unwrap_or(row.len())
}

/// Decoding result for one subchannel.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SubchannelDecode {
    /// 1-based levels whose single occupant was decoded, strongest first.
    pub decoded: Vec<u32>,
    /// 1-based level of the power collision that stopped decoding.
    pub collision_level: Option<u32>,
}

/// Decode every subchannel of `occupancy`.
pub fn sic_decode(occupancy: &Occupancy) -> Vec<SubchannelDecode> {
    (0..occupancy.num_subchannels())
        .map(|s| decode_row(occupancy.row(s)))
        .collect()
}

pub fn decode_row(row: &[u32]) -> SubchannelDecode {
    let mut out = SubchannelDecode::default();
    for (i, &c) in row.iter().enumerate() {
        match c {
            0 => continue,
            1 => out.decoded.push(i as u32 + 1),
            _ => {
                out.collision_level = Some(i as u32 + 1);
                break;
            }
        }
    }
    out
}

/// Per-level decoded and collision counts summed over subchannels.
pub(crate) fn tally(occupancy: &Occupancy, successes: &mut [u64], collisions: &mut [u64]) {
    for s in 0..occupancy.num_subchannels() {
        let row = occupancy.row(s);
        let cut = decode_cutoff(row);
        for (l, &c) in row[..cut].iter().enumerate() {
            if c == 1 {
                successes[l] += 1;
            }
        }
        if cut < row.len() {
            collisions[cut] += 1;
        }
    }
}
