//! Fit of the low-dimensional membership curve `ψ(d) = 1 / (1 + a·d^(2b))`.

const N_SAMPLES: usize = 300;
const MAX_DISTANCE: f64 = 3.0;

/// Target membership: 1 up to `min_dist`, exponential decay beyond.
fn target(d: f64, min_dist: f64) -> f64 {
    if d <= min_dist {
        1.0
    } else {
        (-(d - min_dist)).exp()
    }
}

pub fn psi(d: f64, a: f64, b: f64) -> f64 {
    1.0 / (1.0 + a * d.powf(2.0 * b))
}

fn samples() -> impl Iterator<Item = f64> {
    (1..=N_SAMPLES).map(|i| MAX_DISTANCE * i as f64 / N_SAMPLES as f64)
}

/// Least-squares fit of `(a, b)` on 300 points of `(0, 3]`.
///
/// Levenberg-Marquardt in `(ln a, ln b)` so both stay positive.
pub fn fit_ab(min_dist: f64) -> (f64, f64) {
    let min_dist = min_dist.max(0.0);
    let xs: Vec<f64> = samples().collect();
    let ys: Vec<f64> = xs.iter().map(|&d| target(d, min_dist)).collect();

    let sse = |la: f64, lb: f64| -> f64 {
        let (a, b) = (la.exp(), lb.exp());
        xs.iter()
            .zip(&ys)
            .map(|(&d, &y)| (psi(d, a, b) - y).powi(2))
            .sum()
    };

    let (mut la, mut lb) = (0.0f64, 0.0f64);
    let mut lambda = 1e-3;
    let mut cost = sse(la, lb);
    for _ in 0..500 {
        let (a, b) = (la.exp(), lb.exp());
        // normal equations J^T J δ = -J^T r
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&d, &y) in xs.iter().zip(&ys) {
            let p = d.powf(2.0 * b);
            let denom = 1.0 + a * p;
            let r = 1.0 / denom - y;
            let dpsi_da = -p / (denom * denom);
            let dpsi_db = -a * p * 2.0 * d.ln() / (denom * denom);
            // chain rule into log space
            let ja = dpsi_da * a;
            let jb = dpsi_db * b;
            jaa += ja * ja;
            jab += ja * jb;
            jbb += jb * jb;
            ga += ja * r;
            gb += jb * r;
        }
        let mut improved = false;
        for _ in 0..30 {
            let (m00, m11) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = m00 * m11 - jab * jab;
            if det.abs() < 1e-300 {
                lambda *= 10.0;
                continue;
            }
            let da = -(m11 * ga - jab * gb) / det;
            let db = -(m00 * gb - jab * ga) / det;
            let next = sse(la + da, lb + db);
            if next < cost {
                la += da;
                lb += db;
                let gain = cost - next;
                cost = next;
                lambda = (lambda * 0.3).max(1e-12);
                improved = gain > 1e-16 * cost.max(1e-300);
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (la.exp(), lb.exp())
}

/// Largest absolute deviation of the fitted curve from its target on the fit grid.
pub fn max_residual(min_dist: f64, a: f64, b: f64) -> f64 {
    samples()
        .map(|d| (psi(d, a, b) - target(d, min_dist)).abs())
        .fold(0.0, f64::max)
}

/// Root-mean-square deviation of the fitted curve from its target on the fit grid.
pub fn rms_residual(min_dist: f64, a: f64, b: f64) -> f64 {
    let sse: f64 = samples().map(|d| (psi(d, a, b) - target(d, min_dist)).powi(2)).sum();
    (sse / N_SAMPLES as f64).sqrt()
}
