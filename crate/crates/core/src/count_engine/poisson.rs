//! Exact Poisson sampling.
//!
//! Below [`INVERSION_CROSSOVER`] the count is drawn by sequential inversion
//! of the CDF. At and above it, Hörmann's transformed rejection with
//! squeeze (PTRS) is used; it is exact, its expected cost is bounded
//! independently of the mean, and it stays valid for means up to 1e9 and
//! beyond.

use rand::Rng;

use crate::{Error, Result};

/// Means below this use CDF inversion, the rest use PTRS.
pub const INVERSION_CROSSOVER: f64 = 10.0;

/// Draws one Poisson variate with mean `lambda`.
pub fn poisson_draw<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<u64> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::Domain {
            field: "lambda",
            value: lambda,
            reason: "Poisson mean must be finite and >= 0",
        });
    }
    if lambda == 0.0 {
        return Ok(0);
    }
    if lambda < INVERSION_CROSSOVER {
        Ok(inversion(lambda, rng))
    } else {
        Ok(ptrs(lambda, rng))
    }
}

fn inversion<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut pmf = (-lambda).exp();
    let mut cdf = pmf;
    while u > cdf {
        k += 1;
        pmf *= lambda / k as f64;
        let next = cdf + pmf;
        if next == cdf {
            // tail exhausted in double precision
            break;
        }
        cdf = next;
    }
    k
}

fn ptrs<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);

    loop {
        let u = rng.random::<f64>() - 0.5;
        // (0, 1]
        let v = 1.0 - rng.random::<f64>();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -lambda + k * loglam - ln_factorial(k);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// `ln(k!)` for a non-negative integer-valued `k`.
pub(crate) fn ln_factorial(k: f64) -> f64 {
    const TABLE: [f64; 10] = [
        0.0,
        0.0,
        std::f64::consts::LN_2,
        1.791_759_469_228_055,
        3.178_053_830_347_945_7,
        4.787_491_742_782_046,
        6.579_251_212_010_101,
        8.525_161_361_065_415,
        10.604_602_902_745_25,
        12.801_827_480_081_469,
    ];
    if k < 10.0 {
        return TABLE[k as usize];
    }
    // Stirling series for ln Gamma(x), x = k + 1 >= 11
    let x = k + 1.0;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}
