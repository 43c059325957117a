//! Frequencies of the events that make a nearby complete 1-square likely.
//!
//! For a square scale `j` with reference length `T_{j-2}`:
//! * `B_j`: some point within 1-norm distance `eps * T_{j-2}` of the origin
//!   is the centre of a 1-square of scale `j`;
//! * `C_j`: no 0-square of scale above `j` (up to `k_max`) meets the 1-norm
//!   ball of radius `(4 + eps) * T_{j-2}`.
//!
//! `B_j` and `C_j` use independent draw families, so their joint frequency
//! should match the product of the marginals.

use rayon::prelude::*;

use super::stats::correlation;
use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::field::squares::{half_side, side_length, SquaresModel};
use crate::field::SquareKind;

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessRow {
    pub scale: u32,
    pub radius_b: u64,
    pub radius_c: u64,
    pub samples: usize,
    pub b_freq: f64,
    pub c_freq: f64,
    pub joint_freq: f64,
    /// `b_freq * c_freq`, a proxy lower bound for the complete-square event.
    pub product: f64,
    /// Sample correlation of the two indicators, when both vary.
    pub correlation: Option<f64>,
}

fn b_event(model: &SquaresModel, seed: u64, scale: u32, r: i64) -> bool {
    for x in -r..=r {
        let rx = r - x.abs();
        for y in -rx..=rx {
            let ry = rx - y.abs();
            for h in -ry..=ry {
                if model.is_center(seed, SquareKind::One, scale, [x, y, h]) {
                    return true;
                }
            }
        }
    }
    false
}

fn c_event(model: &SquaresModel, seed: u64, scale: u32, r: i64) -> bool {
    for k in scale + 1..=model.k_max {
        let half = half_side(k);
        // 0-squares are orthogonal to the second axis
        for x in -(half + r)..=(half + r) {
            let rem = r - (x.abs() - half).max(0);
            for y in -rem..=rem {
                let rem2 = rem - y.abs();
                for h in -(half + rem2)..=(half + rem2) {
                    if model.is_center(seed, SquareKind::Zero, k, [x, y, h]) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

pub fn property_witness_scan(config: &ExperimentConfig, scales: &[u32]) -> Result<Vec<WitnessRow>> {
    config.validate()?;
    let model = config
        .model
        .as_squares()
        .ok_or_else(|| Error::Config("witness scans need the squares model".into()))?;
    let mut rows = Vec::with_capacity(scales.len());
    for &j in scales {
        if j < 2 || j > model.k_max {
            return Err(Error::OutOfRange(format!("scale {j} outside 2..={}", model.k_max)));
        }
        let t_ref = side_length(j - 2) as f64;
        let radius_b = (config.epsilon * t_ref).floor() as i64;
        let radius_c = ((4.0 + config.epsilon) * t_ref).floor() as i64;
        let events: Vec<(bool, bool)> = (0..config.num_seeds)
            .into_par_iter()
            .map(|k| {
                let seed = config.seed(k);
                (b_event(model, seed, j, radius_b), c_event(model, seed, j, radius_c))
            })
            .collect();
        let n = events.len() as f64;
        let bs: Vec<f64> = events.iter().map(|e| f64::from(u8::from(e.0))).collect();
        let cs: Vec<f64> = events.iter().map(|e| f64::from(u8::from(e.1))).collect();
        let b_freq = bs.iter().sum::<f64>() / n;
        let c_freq = cs.iter().sum::<f64>() / n;
        let joint_freq = events.iter().filter(|e| e.0 && e.1).count() as f64 / n;
        rows.push(WitnessRow {
            scale: j,
            radius_b: radius_b as u64,
            radius_c: radius_c as u64,
            samples: events.len(),
            b_freq,
            c_freq,
            joint_freq,
            product: b_freq * c_freq,
            correlation: correlation(&bs, &cs),
        });
    }
    Ok(rows)
}
