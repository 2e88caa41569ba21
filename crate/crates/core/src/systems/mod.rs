//! Reference dynamical systems, trajectory generation and the lift of a
//! trajectory to the unit tangent bundle.

pub mod fields;
pub mod ode;
pub mod sde;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use fields::{dadras_rescale, dadras_vf, doublewell_drift, lorenz_vf};
pub use ode::OdeOptions;
pub use sde::SdeScheme;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Lorenz,
    #[serde(alias = "double-well", alias = "double_well")]
    Doublewell,
    Dadras,
}

impl SystemKind {
    pub fn dim(self) -> usize {
        match self {
            SystemKind::Lorenz => 3,
            SystemKind::Doublewell => 2,
            SystemKind::Dadras => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Lorenz => "lorenz",
            SystemKind::Doublewell => "doublewell",
            SystemKind::Dadras => "dadras",
        }
    }
}

impl std::str::FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "lorenz" => Ok(SystemKind::Lorenz),
            "doublewell" => Ok(SystemKind::Doublewell),
            "dadras" => Ok(SystemKind::Dadras),
            other => Err(Error::Parse(format!("unknown system {other:?}"))),
        }
    }
}

impl std::fmt::Display for SystemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TangentMode {
    VectorField,
    FiniteDifference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PostTransform {
    None,
    DadrasRescale,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub system: SystemKind,
    pub params: Vec<f64>,
    /// Additive noise amplitude; zero for deterministic systems.
    pub noise: f64,
    pub initial: Vec<f64>,
    /// Largest Euclidean gap between consecutive emitted samples.
    pub h_max: f64,
    pub tangent_mode: TangentMode,
    pub post_transform: PostTransform,
    /// Carry vector-field tangents through the differential of the post
    /// transform instead of reusing them unchanged.
    #[serde(default)]
    pub transport_tangents: bool,
}

impl SystemSpec {
    pub fn lorenz() -> Self {
        Self {
            system: SystemKind::Lorenz,
            params: fields::LORENZ_PARAMS.to_vec(),
            noise: 0.0,
            initial: vec![0.0, 10.0, 0.0],
            h_max: 1.0,
            tangent_mode: TangentMode::VectorField,
            post_transform: PostTransform::None,
            transport_tangents: false,
        }
    }

    pub fn double_well() -> Self {
        Self {
            system: SystemKind::Doublewell,
            params: Vec::new(),
            noise: 0.015,
            initial: vec![1.0, 0.75],
            h_max: 1.0,
            tangent_mode: TangentMode::FiniteDifference,
            post_transform: PostTransform::None,
            transport_tangents: false,
        }
    }

    pub fn dadras() -> Self {
        Self {
            system: SystemKind::Dadras,
            params: fields::DADRAS_PARAMS.to_vec(),
            noise: 0.0,
            initial: vec![10.0, 1.0, 10.0, 1.0],
            h_max: 0.8,
            tangent_mode: TangentMode::VectorField,
            post_transform: PostTransform::DadrasRescale,
            transport_tangents: false,
        }
    }

    pub fn preset(kind: SystemKind) -> Self {
        match kind {
            SystemKind::Lorenz => Self::lorenz(),
            SystemKind::Doublewell => Self::double_well(),
            SystemKind::Dadras => Self::dadras(),
        }
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.initial.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: self.initial.len() });
        }
        let want = match self.system {
            SystemKind::Doublewell => 0,
            _ => 3,
        };
        if self.params.len() != want {
            return Err(Error::invalid(format!(
                "{} expects {want} parameters, got {}",
                self.system,
                self.params.len()
            )));
        }
        if !(self.h_max > 0.0) {
            return Err(Error::invalid("h_max must be positive"));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::invalid("noise amplitude must be nonnegative"));
        }
        Ok(())
    }

    /// Vector field (or SDE drift) evaluated at `x`.
    pub fn eval_field(&self, x: &[f64], out: &mut [f64]) {
        let p = &self.params;
        match self.system {
            SystemKind::Lorenz => {
                out.copy_from_slice(&lorenz_vf([x[0], x[1], x[2]], p[0], p[1], p[2]));
            }
            SystemKind::Doublewell => out.copy_from_slice(&doublewell_drift([x[0], x[1]])),
            SystemKind::Dadras => {
                out.copy_from_slice(&dadras_vf([x[0], x[1], x[2], x[3]], p[0], p[1], p[2]));
            }
        }
    }
}

/// Samples of one trajectory, flat row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub dim: usize,
    pub states: Vec<f64>,
    pub times: Vec<f64>,
    pub spec: SystemSpec,
    pub seed: Option<u64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    /// Drop the first `n` samples.
    pub fn skip(mut self, n: usize) -> Self {
        let n = n.min(self.len());
        self.states.drain(..n * self.dim);
        self.times.drain(..n);
        self
    }

    /// Keep every `every`-th sample, starting with the first.
    pub fn thin(self, every: usize) -> Self {
        if every <= 1 {
            return self;
        }
        let d = self.dim;
        let states = self
            .states
            .chunks(d)
            .step_by(every)
            .flatten()
            .copied()
            .collect();
        let times = self.times.iter().step_by(every).copied().collect();
        Self { states, times, ..self }
    }

    pub fn max_gap(&self) -> f64 {
        (1..self.len())
            .map(|i| euclid(self.point(i - 1), self.point(i)))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

/// Integrate a deterministic system, emitting `n_points` samples spaced
/// `spec.h_max` apart.
pub fn integrate_ode(spec: &SystemSpec, n_points: usize) -> Result<TimeSeries> {
    integrate_ode_with(spec, n_points, OdeOptions::default())
}

pub fn integrate_ode_with(spec: &SystemSpec, n_points: usize, opts: OdeOptions) -> Result<TimeSeries> {
    spec.validate()?;
    if spec.noise != 0.0 {
        return Err(Error::invalid("integrate_ode requires a deterministic system (noise = 0)"));
    }
    let out = ode::integrate_emitting(
        |x, o| spec.eval_field(x, o),
        &spec.initial,
        spec.h_max,
        n_points,
        opts,
    )?;
    Ok(TimeSeries {
        dim: spec.dim(),
        states: out.states,
        times: out.times,
        spec: spec.clone(),
        seed: None,
    })
}

/// Integrate the SDE `dx = f(x) dt + noise dW` for `n_steps` steps of size `dt`.
pub fn integrate_sde(spec: &SystemSpec, dt: f64, n_steps: usize, seed: u64) -> Result<TimeSeries> {
    integrate_sde_with(spec, dt, n_steps, seed, SdeScheme::default())
}

pub fn integrate_sde_with(
    spec: &SystemSpec,
    dt: f64,
    n_steps: usize,
    seed: u64,
    scheme: SdeScheme,
) -> Result<TimeSeries> {
    spec.validate()?;
    let states = sde::integrate_additive(
        |x, o| spec.eval_field(x, o),
        &spec.initial,
        spec.noise,
        dt,
        n_steps,
        seed,
        scheme,
    )?;
    Ok(TimeSeries {
        dim: spec.dim(),
        states,
        times: (0..=n_steps).map(|i| i as f64 * dt).collect(),
        spec: spec.clone(),
        seed: Some(seed),
    })
}

/// Points of a trajectory paired with unit tangent vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedSeries {
    dim: usize,
    points: Vec<f64>,
    tangents: Vec<f64>,
}

impl LiftedSeries {
    /// Tangents must already have unit Euclidean norm (within 1e-9).
    pub fn new(dim: usize, points: Vec<f64>, tangents: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 || points.len() != tangents.len() {
            return Err(Error::invalid("points and tangents must be equal-length multiples of dim"));
        }
        for (i, v) in tangents.chunks(dim).enumerate() {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("tangent {i} has norm {n}")));
            }
        }
        Ok(Self { dim, points, tangents })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn tangent(&self, i: usize) -> &[f64] {
        &self.tangents[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn tangents(&self) -> &[f64] {
        &self.tangents
    }

    /// Consecutive sub-block `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        let d = self.dim;
        Self {
            dim: d,
            points: self.points[start * d..(start + len) * d].to_vec(),
            tangents: self.tangents[start * d..(start + len) * d].to_vec(),
        }
    }
}

/// Lift samples to the unit tangent bundle, either by normalizing a vector
/// field or by normalized forward differences (the last sample reuses the
/// previous tangent).
pub fn lift(
    series: &TimeSeries,
    mode: TangentMode,
    field: Option<&dyn Fn(&[f64], &mut [f64])>,
) -> Result<LiftedSeries> {
    lift_points(series.dim, &series.states, mode, field)
}

fn lift_points(
    d: usize,
    states: &[f64],
    mode: TangentMode,
    field: Option<&dyn Fn(&[f64], &mut [f64])>,
) -> Result<LiftedSeries> {
    let n = states.len() / d;
    let mut tangents = vec![0.0; states.len()];
    match mode {
        TangentMode::VectorField => {
            let field = field.ok_or_else(|| Error::invalid("vector-field mode needs a field"))?;
            for i in 0..n {
                let v = &mut tangents[i * d..(i + 1) * d];
                field(&states[i * d..(i + 1) * d], v);
                if !normalize(v) {
                    return Err(Error::ZeroTangent { index: i });
                }
            }
        }
        TangentMode::FiniteDifference => {
            if n < 2 {
                return Err(Error::invalid("finite-difference tangents need at least two samples"));
            }
            for i in 0..n - 1 {
                let v = &mut tangents[i * d..(i + 1) * d];
                for k in 0..d {
                    v[k] = states[(i + 1) * d + k] - states[i * d + k];
                }
                if !normalize(v) {
                    return Err(Error::ZeroTangent { index: i });
                }
            }
            tangents.copy_within((n - 2) * d..(n - 1) * d, (n - 1) * d);
        }
    }
    Ok(LiftedSeries { dim: d, points: states.to_vec(), tangents })
}

/// Lift a generated trajectory according to its spec: tangent mode and post
/// transform. Vector-field tangents are evaluated at the untransformed
/// samples; the post transform then moves the points (and, when
/// `transport_tangents` is set, pushes the tangents through its differential).
pub fn lift_system(series: &TimeSeries) -> Result<LiftedSeries> {
    let spec = &series.spec;
    let d = series.dim;
    let field = |x: &[f64], o: &mut [f64]| spec.eval_field(x, o);
    match (spec.tangent_mode, spec.post_transform) {
        (mode, PostTransform::None) => lift_points(d, &series.states, mode, Some(&field)),
        (TangentMode::FiniteDifference, PostTransform::DadrasRescale) => {
            let moved: Vec<f64> = series
                .states
                .chunks(4)
                .flat_map(|x| dadras_rescale([x[0], x[1], x[2], x[3]]))
                .collect();
            lift_points(d, &moved, TangentMode::FiniteDifference, None)
        }
        (TangentMode::VectorField, PostTransform::DadrasRescale) => {
            let raw = lift_points(d, &series.states, TangentMode::VectorField, Some(&field))?;
            let mut points = Vec::with_capacity(raw.points.len());
            let mut tangents = Vec::with_capacity(raw.tangents.len());
            for i in 0..raw.len() {
                let x: [f64; 4] = raw.point(i).try_into().expect("dadras is four-dimensional");
                let v: [f64; 4] = raw.tangent(i).try_into().expect("dadras is four-dimensional");
                points.extend(dadras_rescale(x));
                let mut t = if spec.transport_tangents {
                    fields::dadras_rescale_tangent(x, v)
                } else {
                    v
                };
                if !normalize(&mut t) {
                    return Err(Error::ZeroTangent { index: i });
                }
                tangents.extend(t);
            }
            Ok(LiftedSeries { dim: d, points, tangents })
        }
    }
}
