//! Power-series Bessel functions J0, J1, K0, K1.
//!
//! Only needed on (0, 2.405]: below LP11 cutoff both u and w stay under V.
//! The series converge there to full double precision.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_TERMS: usize = 60;

pub fn j0(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

pub fn j1(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= q / (kf * (kf + 1.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Returns (I0, I1, K0, K1) from shared series terms.
fn modified(x: f64) -> (f64, f64, f64, f64) {
    let q = 0.25 * x * x;
    let log_half = (0.5 * x).ln();
    // k-th terms: t0 = q^k/(k!)^2, t1 = (x/2) q^k/(k!(k+1)!)
    let mut t0 = 1.0;
    let mut t1 = 0.5 * x;
    // psi(k+1) = H_k - gamma
    let mut harmonic = 0.0;
    let mut i0 = t0;
    let mut i1 = t1;
    let mut s0 = -EULER_GAMMA * t0;
    let mut s1 = (-EULER_GAMMA + (1.0 - EULER_GAMMA)) * t1;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        t0 *= q / (kf * kf);
        t1 *= q / (kf * (kf + 1.0));
        harmonic += 1.0 / kf;
        let psi_k1 = harmonic - EULER_GAMMA;
        let psi_k2 = psi_k1 + 1.0 / (kf + 1.0);
        i0 += t0;
        i1 += t1;
        s0 += psi_k1 * t0;
        s1 += (psi_k1 + psi_k2) * t1;
        if t0 < 1e-18 * i0 && t1 < 1e-18 * i1 {
            break;
        }
    }
    let k0 = -log_half * i0 + s0;
    let k1 = 1.0 / x + log_half * i1 - 0.5 * s1;
    (i0, i1, k0, k1)
}

#[cfg(test)]
pub fn k0(x: f64) -> f64 {
    modified(x).2
}

#[cfg(test)]
pub fn k1(x: f64) -> f64 {
    modified(x).3
}

/// w·K1(w)/K0(w), the cladding side of the LP01 characteristic equation.
pub fn cladding_ratio(w: f64) -> f64 {
    let (_, _, k0, k1) = modified(w);
    w * k1 / k0
}

/// u·J1(u)/J0(u), the core side of the LP01 characteristic equation.
pub fn core_ratio(u: f64) -> f64 {
    u * j1(u) / j0(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    // (x, J0, J1, K0, K1) reference values.
    const TABLE: [(f64, f64, f64, f64, f64); 5] = [
        (1e-6, 0.99999999999975, 4.999999999999375e-07, 13.93144207362641, 999999.9999927843),
        (0.05, 0.9993750976494685, 0.024992188313759704, 3.1142340294719917, 19.909674325882506),
        (0.7, 0.8812008886074052, 0.3289957415400589, 0.6605198599151016, 1.0502835353129183),
        (1.5, 0.5118276717359181, 0.5579365079100997, 0.21380556264752565, 0.2773878004568438),
        (2.4, 0.002507683297243791, 0.5201852681819311, 0.0702173415434159, 0.08372483875483218),
    ];

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn matches_reference_table() {
        for (x, rj0, rj1, rk0, rk1) in TABLE {
            assert!(rel(j0(x), rj0) < 1e-12, "J0({x})");
            assert!(rel(j1(x), rj1) < 1e-13, "J1({x})");
            assert!(rel(k0(x), rk0) < 1e-13, "K0({x})");
            assert!(rel(k1(x), rk1) < 1e-13, "K1({x})");
        }
    }
}
