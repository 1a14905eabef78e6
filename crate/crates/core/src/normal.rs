//! Standard normal density, distribution and quantile helpers.
//!
//! The CDF is routed through `erfc` so the lower tail keeps full relative
//! precision; differences of CDFs are evaluated on whichever side of zero
//! avoids catastrophic cancellation.

use libm::erfc;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// log(2πe), the entropy constant of a unit Gaussian times two.
pub const LOG_2PI_E: f64 = 2.837_877_066_409_345_6;

pub fn pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Φ(upper) − Φ(lower), accurate when both arguments sit in the same tail.
pub fn cdf_diff(lower: f64, upper: f64) -> f64 {
    if upper <= lower {
        return 0.0;
    }
    let diff = if lower > 0.0 {
        cdf(-lower) - cdf(-upper)
    } else {
        cdf(upper) - cdf(lower)
    };
    diff.max(0.0)
}

/// x·φ(x) with the infinite limits mapped to zero.
pub fn x_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        x * pdf(x)
    }
}

/// Inverse CDF: Acklam's rational approximation polished by two Halley steps.
pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let mut x = if p < 0.024_25 {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - 0.024_25 {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    for _ in 0..2 {
        // work in the tail where the residual is computed without cancellation
        let e = if x < 0.0 { cdf(x) - p } else { (1.0 - p) - cdf(-x) };
        let u = e / pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}
