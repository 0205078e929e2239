use crate::error::{Error, Result};

/// `q`-point Gauss-Legendre rule on `[0, 1]`, exact for polynomials of
/// degree `2q - 1`. Points are ascending.
pub fn gauss_rule(q: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(1..=30).contains(&q) {
        return Err(Error::param("q", format!("rule size must be in 1..=30, got {q}")));
    }
    let mut xs = vec![0.0; q];
    let mut ws = vec![0.0; q];
    let n = q as f64;
    for i in 0..q.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th largest root on [-1, 1].
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(q, z);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        // map [-1, 1] -> [0, 1]
        xs[q - 1 - i] = 0.5 * (1.0 + z);
        xs[i] = 0.5 * (1.0 - z);
        ws[q - 1 - i] = 0.5 * w;
        ws[i] = 0.5 * w;
    }
    Ok((xs, ws))
}

/// `P_n(z)` and `P_n'(z)` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
