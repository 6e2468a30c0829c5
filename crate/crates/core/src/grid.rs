//! Sampling grids in time and frequency.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::coefficient::{Packet, ShapeFamily};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub per_decade: usize,
    /// Extra uniformly spaced points inside every packet that meets the range.
    pub packet_points: usize,
}

impl GridSpec {
    pub fn new(t_min: f64, t_max: f64) -> Self {
        GridSpec { t_min, t_max, per_decade: 64, packet_points: 32 }
    }

    /// Sorted, deduplicated sample times in `[t_min, t_max]`.
    pub fn build(&self, packets: &[Packet]) -> Vec<f64> {
        let mut out = geometric(self.t_min, self.t_max, self.per_decade);
        for p in packets {
            if p.end() < self.t_min || p.t > self.t_max {
                continue;
            }
            for i in 0..self.packet_points {
                let t = p.t + p.delta * (i as f64 + 0.5) / self.packet_points as f64;
                if t >= self.t_min && t <= self.t_max {
                    out.push(t);
                }
            }
        }
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup();
        out
    }
}

/// Geometric points from `lo` to `hi` inclusive, `per_decade` per factor 10.
pub fn geometric(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && per_decade > 0);
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    let mut out: Vec<f64> = (0..=n).map(|i| lo * (hi / lo).powf(i as f64 / n as f64)).collect();
    out[n] = hi;
    out
}

/// `n` points from `lo` to `hi` inclusive, uniform.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Start of the "last decade" used by tail-stability checks. For `λ = e^t`
/// a decade in `t` is not a natural unit, so the second half of the range
/// plays that role.
pub fn tail_start(family: ShapeFamily, t_max: f64) -> f64 {
    match family {
        ShapeFamily::Exponential => 0.5 * t_max,
        _ => 0.1 * t_max,
    }
}
