//! The three reference systems.

/// Classical Lorenz parameters `(sigma, rho, beta)`.
pub const LORENZ_PARAMS: [f64; 3] = [10.0, 28.0, 8.0 / 3.0];

/// Dadras parameters `(a, b, c)`.
pub const DADRAS_PARAMS: [f64; 3] = [8.0, 40.0, 14.9];

/// Strength of the dissipative perturbation in the double well drift.
const DOUBLE_WELL_DAMPING: f64 = 0.02;

pub fn lorenz_vf(state: [f64; 3], sigma: f64, rho: f64, beta: f64) -> [f64; 3] {
    let [x, y, z] = state;
    [sigma * (y - x), x * (rho - z) - y, x * y - beta * z]
}

/// Asymmetric double well Hamiltonian.
pub fn double_well_hamiltonian(x: f64, y: f64) -> f64 {
    y * y / 2.0 + x.powi(4) / 8.0 - x * x / 2.0 - x.powi(3) / 15.0 - x / 10.0
}

fn double_well_h_x(x: f64) -> f64 {
    x.powi(3) / 2.0 - x - x * x / 5.0 - 0.1
}

/// Energy-shaping function applied to the Hamiltonian level.
fn level_feedback(e: f64) -> f64 {
    (e.powi(3) - e) / 2.0
}

/// Hamiltonian flow plus a level-dependent gradient term. Along the flow
/// `dH/dt = 0.02 h(H) |grad H|^2`, so the zero level carrying the homoclinic
/// orbits is attracting and the levels `+-1` repel.
pub fn doublewell_drift(state: [f64; 2]) -> [f64; 2] {
    let [x, y] = state;
    let hx = double_well_h_x(x);
    let hy = y;
    let g = DOUBLE_WELL_DAMPING * level_feedback(double_well_hamiltonian(x, y));
    [hy + g * hx, -hx + g * hy]
}

pub fn dadras_vf(state: [f64; 4], a: f64, b: f64, c: f64) -> [f64; 4] {
    let [x, y, z, w] = state;
    [a * x - y * z + w, x * z - b * y, x * y - c * z + x * w, -y]
}

/// `x / sqrt(|x|)`, extended continuously by `0` at the origin.
pub fn dadras_rescale(x: [f64; 4]) -> [f64; 4] {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n == 0.0 {
        return [0.0; 4];
    }
    let s = n.sqrt();
    x.map(|v| v / s)
}

/// Push a tangent vector at `x` through the differential of [`dadras_rescale`]:
/// `D(x) v = |x|^{-1/2} (v - (x.v) x / (2 |x|^2))`.
pub fn dadras_rescale_tangent(x: [f64; 4], v: [f64; 4]) -> [f64; 4] {
    let n2 = x.iter().map(|a| a * a).sum::<f64>();
    if n2 == 0.0 {
        return v;
    }
    let dot = x.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
    let s = n2.sqrt().sqrt();
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = (v[i] - 0.5 * dot * x[i] / n2) / s;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn lorenz_examples() {
        let [s, r, b] = LORENZ_PARAMS;
        assert_eq!(lorenz_vf([0.0; 3], s, r, b), [0.0; 3]);
        assert!(close(&lorenz_vf([1.0; 3], s, r, b), &[0.0, 26.0, -5.0 / 3.0], 1e-14));
        assert!(close(&lorenz_vf([0.0, 10.0, 0.0], s, r, b), &[100.0, -10.0, 0.0], 1e-14));
    }

    #[test]
    fn doublewell_examples() {
        assert!(close(&doublewell_drift([0.0, 0.0]), &[0.0, 0.1], 1e-15));
        // H(0,1) = 1/2, h(1/2) = -3/16, H_x = -1/10, H_y = 1.
        let f = doublewell_drift([0.0, 1.0]);
        assert!(close(&f, &[1.0 + 0.000375, 0.1 - 0.00375], 1e-15));
    }

    #[test]
    fn doublewell_energy_is_attracted_to_zero_level() {
        // dH/dt = grad H . f has the sign of h(H): negative below 0 in (-1, 0) would
        // mean decay into the wells.
        for (x, y) in [(1.5, 0.3), (-0.8, 0.2), (2.3, 0.5), (0.5, 1.2)] {
            let e = double_well_hamiltonian(x, y);
            let f = doublewell_drift([x, y]);
            let rate = double_well_h_x(x) * f[0] + y * f[1];
            assert_eq!(rate.signum(), -e.signum(), "({x}, {y}) H={e}");
        }
    }

    #[test]
    fn doublewell_first_component_vanishes_at_critical_points() {
        // Bisection for a root of H_x on [1, 2].
        let (mut lo, mut hi) = (1.0_f64, 2.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if double_well_h_x(lo) * double_well_h_x(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let f = doublewell_drift([lo, 0.0]);
        assert!(f[0].abs() < 1e-12);
        assert!(f[1].abs() < 1e-12);
    }

    #[test]
    fn dadras_examples() {
        let [a, b, c] = DADRAS_PARAMS;
        assert_eq!(dadras_vf([0.0; 4], a, b, c), [0.0; 4]);
        assert!(close(&dadras_vf([1.0, 0.0, 0.0, 0.0], a, b, c), &[8.0, 0.0, 0.0, 0.0], 1e-14));
        assert!(close(&dadras_vf([1.0; 4], a, b, c), &[8.0, -39.0, -12.9, -1.0], 1e-12));
    }

    #[test]
    fn rescale_examples() {
        assert_eq!(dadras_rescale([4.0, 0.0, 0.0, 0.0]), [2.0, 0.0, 0.0, 0.0]);
        let u = [0.5, 0.5, 0.5, 0.5];
        assert!(close(&dadras_rescale(u), &u, 1e-15));
        assert_eq!(dadras_rescale([0.0; 4]), [0.0; 4]);
    }

    #[test]
    fn rescale_preserves_direction() {
        for x in [[3.0, -1.0, 0.5, 2.0], [-0.01, 0.0, 0.02, 0.0], [100.0, 50.0, -20.0, 1.0]] {
            let y = dadras_rescale(x);
            let k = y[0] / x[0];
            assert!(k > 0.0);
            assert!(close(&y, &x.map(|v| v * k), 1e-12));
        }
    }

    #[test]
    fn rescale_tangent_matches_finite_difference() {
        let x = [3.0, -1.0, 0.5, 2.0];
        let v = [0.3, 0.1, -0.7, 0.2];
        let eps = 1e-6;
        let plus = dadras_rescale(std::array::from_fn(|i| x[i] + eps * v[i]));
        let minus = dadras_rescale(std::array::from_fn(|i| x[i] - eps * v[i]));
        let fd: Vec<f64> = (0..4).map(|i| (plus[i] - minus[i]) / (2.0 * eps)).collect();
        assert!(close(&dadras_rescale_tangent(x, v), &fd, 1e-8));
    }
}
