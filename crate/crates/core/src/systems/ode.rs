//! Tsitouras 5(4) embedded Runge–Kutta pair with adaptive step control, and a
//! driver that emits samples at a fixed Euclidean spacing along the solution.

use crate::error::{Error, Result};

/// Stage nodes; the fields integrated here are autonomous, so these only
/// document the tableau.
#[allow(dead_code)]
const C: [f64; 6] = [0.161, 0.327, 0.9, 0.980_025_540_904_509_7, 1.0, 1.0];

const A: [[f64; 6]; 6] = [
    [0.161, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-0.008_480_655_492_356_989, 0.335_480_655_492_357, 0.0, 0.0, 0.0, 0.0],
    [2.897_153_057_105_493, -6.359_448_489_975_075, 4.362_295_432_869_581_5, 0.0, 0.0, 0.0],
    [
        5.325_864_828_439_257,
        -11.748_883_564_062_828,
        7.495_539_342_889_836_5,
        -0.092_495_066_361_755_25,
        0.0,
        0.0,
    ],
    [
        5.861_455_442_946_42,
        -12.920_969_317_847_11,
        8.159_367_898_576_159,
        -0.071_584_973_281_401,
        -0.028_269_050_394_068_383,
        0.0,
    ],
    [
        0.096_460_766_818_065_23,
        0.01,
        0.479_889_650_414_499_6,
        1.379_008_574_103_742,
        -3.290_069_515_436_081,
        2.324_710_524_099_774,
    ],
];

/// Difference between the fifth- and fourth-order weights (seven stages, FSAL).
const E: [f64; 7] = [
    -0.001_780_011_052_225_777_14,
    -0.000_816_434_459_656_746_9,
    0.007_880_878_010_261_995,
    -0.144_711_007_173_262_9,
    0.582_357_165_452_555_2,
    -0.458_082_105_929_186_97,
    1.0 / 66.0,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    /// Upper bound on the internal step size.
    pub max_step: f64,
    /// Abort after this many step attempts in total.
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            initial_step: 1e-4,
            max_step: f64::INFINITY,
            max_steps: 500_000_000,
        }
    }
}

/// One adaptive integrator over a fixed-dimension state.
pub struct Tsit5<F> {
    field: F,
    opts: OdeOptions,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    pub t: f64,
    pub y: Vec<f64>,
    h: f64,
    fsal_ready: bool,
    steps: usize,
}

impl<F: FnMut(&[f64], &mut [f64])> Tsit5<F> {
    pub fn new(field: F, t0: f64, y0: &[f64], opts: OdeOptions) -> Self {
        let n = y0.len();
        Self {
            field,
            opts,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
            t: t0,
            y: y0.to_vec(),
            h: opts.initial_step,
            fsal_ready: false,
            steps: 0,
        }
    }

    fn error_norm(&self) -> f64 {
        let n = self.y.len();
        let mut acc = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (s, w) in E.iter().enumerate() {
                e += w * self.k[s][i];
            }
            e *= self.h;
            let scale = self.opts.atol + self.opts.rtol * self.y[i].abs().max(self.y_new[i].abs());
            acc += (e / scale).powi(2);
        }
        (acc / n as f64).sqrt()
    }

    /// Derivative at the current state (valid after the first step).
    pub fn derivative(&self) -> &[f64] {
        &self.k[0]
    }

    /// Take one accepted step, limited to end at `t_stop` at the latest.
    /// Returns the step size used.
    pub fn step(&mut self, t_stop: f64) -> Result<f64> {
        let n = self.y.len();
        if !self.fsal_ready {
            (self.field)(&self.y, &mut self.k[0]);
            self.fsal_ready = true;
        }
        loop {
            self.steps += 1;
            if self.steps > self.opts.max_steps {
                return Err(Error::Integration { index: self.steps, time: self.t });
            }
            let proposed = self.h;
            let h = proposed.min(self.opts.max_step).min(t_stop - self.t);
            self.h = h;
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = 0.0;
                    for j in 0..s {
                        acc += A[s - 1][j] * self.k[j][i];
                    }
                    self.tmp[i] = self.y[i] + h * acc;
                }
                (self.field)(&self.tmp, &mut self.k[s]);
                if s == 6 {
                    self.y_new.copy_from_slice(&self.tmp);
                }
            }
            let err = self.error_norm();
            if !err.is_finite() || self.y_new.iter().any(|v| !v.is_finite()) {
                if h < 1e-14 * self.t.abs().max(1.0) {
                    return Err(Error::Integration { index: self.steps, time: self.t });
                }
                self.h = h * 0.2;
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                self.t += h;
                std::mem::swap(&mut self.y, &mut self.y_new);
                let (first, rest) = self.k.split_at_mut(6);
                first[0].copy_from_slice(&rest[0]);
                // A step clipped at `t_stop` says nothing about the next one.
                self.h = (h * factor).max(if h < proposed { proposed } else { 0.0 });
                return Ok(h);
            }
            self.h = h * factor.min(1.0);
            if self.h < 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::Integration { index: self.steps, time: self.t });
            }
        }
    }
}

/// Integrate from `t0` to `t1` and return the final state.
pub fn integrate_to<F: FnMut(&[f64], &mut [f64])>(
    field: F,
    y0: &[f64],
    t0: f64,
    t1: f64,
    opts: OdeOptions,
) -> Result<Vec<f64>> {
    let mut solver = Tsit5::new(field, t0, y0, opts);
    while solver.t < t1 {
        solver.step(t1)?;
    }
    Ok(solver.y)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Emitted samples `(times, flat states)`.
pub struct Emitted {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
}

/// Integrate adaptively and emit `n_points` samples (including `y0`) such that
/// consecutive samples are `h_max` apart in Euclidean distance. Samples inside
/// an internal step are linear interpolants of the step endpoints.
pub fn integrate_emitting<F: FnMut(&[f64], &mut [f64])>(
    field: F,
    y0: &[f64],
    h_max: f64,
    n_points: usize,
    opts: OdeOptions,
) -> Result<Emitted> {
    let d = y0.len();
    let mut times = Vec::with_capacity(n_points);
    let mut states = Vec::with_capacity(n_points * d);
    if n_points == 0 {
        return Ok(Emitted { times, states });
    }
    times.push(0.0);
    states.extend_from_slice(y0);
    // Aim a hair below the bound so round-off never pushes a gap over it.
    let target = h_max * (1.0 - 1e-9);
    let target2 = target * target;
    let mut last = y0.to_vec();
    let mut solver = Tsit5::new(field, 0.0, y0, opts);
    let mut prev_y = y0.to_vec();
    let mut dir = vec![0.0; d];
    let mut base = vec![0.0; d];
    while times.len() < n_points {
        let t_prev = solver.t;
        prev_y.copy_from_slice(&solver.y);
        let h = solver.step(f64::INFINITY).map_err(|e| match e {
            Error::Integration { time, .. } => Error::Integration { index: times.len(), time },
            other => other,
        })?;
        if solver.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration { index: times.len(), time: solver.t });
        }
        // Walk along the chord [prev_y, y] emitting every crossing of the
        // sphere of radius `target` around the last emitted sample.
        let mut s0 = 0.0;
        for i in 0..d {
            dir[i] = solver.y[i] - prev_y[i];
        }
        let dd: f64 = dir.iter().map(|v| v * v).sum();
        while times.len() < n_points && dd > 0.0 && dist2(&solver.y, &last) >= target2 {
            // |prev + s dir - last|^2 = target^2, take the root beyond s0.
            for i in 0..d {
                base[i] = prev_y[i] - last[i];
            }
            let b: f64 = base.iter().zip(&dir).map(|(x, y)| x * y).sum();
            let c: f64 = base.iter().map(|v| v * v).sum::<f64>() - target2;
            let disc = (b * b - dd * c).max(0.0);
            let s = ((-b + disc.sqrt()) / dd).min(1.0);
            if s <= s0 {
                break;
            }
            for i in 0..d {
                last[i] = prev_y[i] + s * dir[i];
            }
            times.push(t_prev + s * h);
            states.extend_from_slice(&last);
            s0 = s;
        }
        if solver.derivative().iter().all(|&v| v == 0.0) {
            // Resting on an equilibrium: the solution never moves again.
            while times.len() < n_points {
                times.push(solver.t);
                states.extend_from_slice(&solver.y);
            }
        }
    }
    Ok(Emitted { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tableau_row_sums_match_nodes() {
        for (row, c) in A.iter().zip(C.iter()) {
            let s: f64 = row.iter().sum();
            assert!((s - c).abs() < 1e-12, "{s} vs {c}");
        }
        assert!(E.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn fifth_order_weights_satisfy_quadrature_conditions() {
        // b = last row of A (FSAL); nodes for stages 1..6 are 0, C[0..5].
        let b = A[5];
        let nodes = [0.0, C[0], C[1], C[2], C[3], C[4]];
        for k in 0..5 {
            let q: f64 = b.iter().zip(nodes).map(|(w, c)| w * c.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-12, "k = {k}: {q}");
        }
    }

    #[test]
    fn exponential_decay_accuracy() {
        let y = integrate_to(|x, o| o[0] = -x[0], &[1.0], 0.0, 1.0, OdeOptions::default()).unwrap();
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-8);
    }

    fn decay_error(opts: OdeOptions) -> f64 {
        let y = integrate_to(|x, o| o[0] = -x[0], &[1.0], 0.0, 1.0, opts).unwrap();
        (y[0] - (-1.0f64).exp()).abs()
    }

    #[test]
    fn fixed_step_convergence_is_fifth_order() {
        let fixed = |h: f64| OdeOptions {
            rtol: 1e10,
            atol: 1e10,
            initial_step: h,
            max_step: h,
            ..Default::default()
        };
        let coarse = decay_error(fixed(0.2));
        let fine = decay_error(fixed(0.1));
        assert!(coarse / fine >= 16.0, "ratio {}", coarse / fine);
    }

    #[test]
    fn adaptive_error_tracks_tolerance() {
        let tol = |t: f64| OdeOptions { rtol: t, atol: t, initial_step: 1e-3, ..Default::default() };
        for t in [1e-5, 1e-6, 1e-7, 1e-8] {
            let coarse = decay_error(tol(t));
            let fine = decay_error(tol(t / 10.0));
            assert!(coarse / fine >= 8.0, "tol {t}: ratio {}", coarse / fine);
            assert!(fine < t);
        }
    }

    #[test]
    fn emission_spacing_on_circle() {
        let out = integrate_emitting(
            |x, o| {
                o[0] = -x[1];
                o[1] = x[0];
            },
            &[5.0, 0.0],
            0.5,
            200,
            OdeOptions::default(),
        )
        .unwrap();
        assert_eq!(out.times.len(), 200);
        for w in out.states.chunks(2).collect::<Vec<_>>().windows(2) {
            let g = dist2(w[0], w[1]).sqrt();
            assert!(g <= 0.5 && g > 0.499, "gap {g}");
        }
        assert!(out.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn single_point_is_initial_state() {
        let out = integrate_emitting(|_, o| o.fill(1.0), &[1.0, 2.0], 1.0, 1, OdeOptions::default())
            .unwrap();
        assert_eq!(out.states, vec![1.0, 2.0]);
        assert_eq!(out.times, vec![0.0]);
    }

    #[test]
    fn zero_field_gives_constant_series() {
        let out = integrate_emitting(|_, o| o.fill(0.0), &[3.0, -1.0], 1.0, 5, OdeOptions::default())
            .unwrap();
        assert_eq!(out.states, [3.0, -1.0].repeat(5));
    }

    #[test]
    fn divergence_is_reported() {
        let r = integrate_emitting(|x, o| o[0] = x[0] * x[0], &[1.0], 1e300, 2, OdeOptions::default());
        assert!(matches!(r, Err(Error::Integration { .. })));
    }
}
