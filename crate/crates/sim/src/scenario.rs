//! Scenario files (JSON, `"version": 1`) and their validation into runnable
//! objects.

use std::path::Path;

use std::result::Result;
use lie_observer::*;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::noise::{self, SplitMix64};
use crate::SimError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub group: GroupName,
    pub system: SystemSpec,
    pub observer: ObserverSpec,
    pub initial_state: ElementSpec,
    pub initial_estimate: ElementSpec,
    #[serde(default)]
    pub channel: ChannelSpec,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    pub horizon: f64,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
pub enum GroupName {
    #[serde(rename = "SO3", alias = "so3")]
    SO3,
    #[serde(rename = "SE3", alias = "se3")]
    SE3,
}

impl From<GroupName> for Group {
    fn from(g: GroupName) -> Self {
        match g {
            GroupName::SO3 => Group::SO3,
            GroupName::SE3 => Group::SE3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandednessName {
    Left,
    Right,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub handedness: HandednessName,
    pub input: InputSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    Zero,
    Constant { value: Vec<f64> },
    Sinusoid { offset: Vec<f64>, terms: Vec<Vec<SineSpec>> },
    Piecewise { breakpoints: Vec<BreakpointSpec> },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineSpec {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreakpointSpec {
    pub t: f64,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObserverKindName {
    GradientLeft,
    GradientRight,
    GradientLikeLeft,
    GradientLikeRight,
    Synchronous,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSpec {
    pub kind: ObserverKindName,
    #[serde(default)]
    pub cost: Option<CostSpec>,
    #[serde(default)]
    pub metric: Option<MetricSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    So3Frobenius {
        #[serde(default = "one")]
        k: f64,
    },
    Se3Pose,
    Se3Natural,
    WeightedFrobenius {
        left_weights: Vec<f64>,
        right_weights: Vec<f64>,
    },
    /// `f(X^-1, Y^-1)` of the inner cost.
    Mirror { of: Box<CostSpec> },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    TraceForm { invariance: InvarianceName },
    Identity { invariance: InvarianceName },
    Explicit { gram: Vec<Vec<f64>>, invariance: InvarianceName },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvarianceName {
    Left,
    Right,
    Bi,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ElementSpec {
    /// Exponential of algebra coordinates.
    Exp(Vec<f64>),
    /// Explicit matrix, row by row.
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_noise: Option<StateNoiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_noise: Option<InputNoiseSpec>,
    /// Seed for generated traces; 0 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StateNoiseKind {
    LeftMultiplicative,
    RightMultiplicative,
}

/// Either `amplitude` (generated from the seed) or an explicit `trace` of
/// algebra coordinates, one entry per integration step.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StateNoiseSpec {
    pub kind: StateNoiseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InputNoiseKind {
    Additive,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InputNoiseSpec {
    pub kind: InputNoiseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    LieEuler,
    #[default]
    Rkmk4,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default)]
    pub scheme: SchemeName,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default)]
    pub reproject: bool,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        Self {
            scheme: SchemeName::Rkmk4,
            step: default_step(),
            reproject: false,
        }
    }
}

fn default_step() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
    /// Write every `stride`-th grid row to the CSV (the last row always).
    #[serde(default = "default_stride")]
    pub stride: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            tail_fraction: default_tail(),
            stride: default_stride(),
        }
    }
}

fn default_tail() -> f64 {
    0.5
}

fn default_stride() -> usize {
    1
}

/// A validated scenario, ready to simulate.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub group: Group,
    pub system: InvariantSystem64,
    pub observer: Observer64,
    pub channel: MeasurementChannel64,
    /// The noise actually used, in scenario syntax; `None` without noise.
    pub noise_dump: Option<ChannelSpec>,
    pub x0: GroupElement64,
    pub xhat0: GroupElement64,
    pub config: IntegratorConfig<f64>,
    pub horizon: f64,
    pub output: OutputSpec,
}

fn invalid(msg: impl Into<String>) -> SimError {
    SimError::Validation(msg.into())
}

fn field<T>(name: &str, r: lie_observer::Result<T>) -> Result<T, SimError> {
    r.map_err(|e| invalid(format!("{name}: {e}")))
}

pub fn parse(text: &str) -> Result<ScenarioFile, SimError> {
    serde_json::from_str(text).map_err(|e| invalid(format!("schema: {e}")))
}

pub fn load(path: &Path) -> Result<Scenario, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    let file = parse(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    build(file, &stem).map_err(|e| match e {
        SimError::Validation(m) => invalid(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Validates a parsed file. `default_name` is used when the file has no name.
pub fn build(file: ScenarioFile, default_name: &str) -> Result<Scenario, SimError> {
    if file.version != SCHEMA_VERSION {
        return Err(invalid(format!("version: expected {SCHEMA_VERSION}, got {}", file.version)));
    }
    let group: Group = file.group.into();
    if !(file.horizon >= 0.0 && file.horizon.is_finite()) {
        return Err(invalid("horizon: must be finite and non-negative"));
    }
    let out = file.output;
    if !(out.tail_fraction > 0.0 && out.tail_fraction <= 1.0) {
        return Err(invalid("output.tail_fraction: must lie in (0, 1]"));
    }
    if out.stride == 0 {
        return Err(invalid("output.stride: must be at least 1"));
    }

    let handedness = match file.system.handedness {
        HandednessName::Left => Handedness::LeftInvariant,
        HandednessName::Right => Handedness::RightInvariant,
    };
    let input = build_input(group, &file.system.input)?;
    let system = field("system", InvariantSystem64::new(group, handedness, input))?;
    let observer = build_observer(group, handedness, &file.observer)?;

    let scheme = match file.integrator.scheme {
        SchemeName::LieEuler => Scheme::LieEuler,
        SchemeName::Rkmk4 => Scheme::Rkmk4,
    };
    let mut config = field("integrator.step", IntegratorConfig::new(scheme, file.integrator.step))?;
    config.reproject = file.integrator.reproject;

    let x0 = build_element(group, "initial_state", &file.initial_state)?;
    let xhat0 = build_element(group, "initial_estimate", &file.initial_estimate)?;

    let steps = field("horizon", time_grid(file.horizon, config.step, &system.input.breakpoints()))?.len() - 1;
    let (channel, noise_dump) = build_channel(group, &file.channel, steps)?;

    Ok(Scenario {
        name: file.name.unwrap_or_else(|| default_name.to_owned()),
        group,
        system,
        observer,
        channel,
        noise_dump,
        x0,
        xhat0,
        config,
        horizon: file.horizon,
        output: out,
    })
}

fn algebra(group: Group, name: &str, v: &[f64]) -> Result<AlgebraVector64, SimError> {
    if v.len() != group.dim() {
        return Err(invalid(format!("{name}: expected {} coordinates, got {}", group.dim(), v.len())));
    }
    field(name, AlgebraVector64::from_slice(v))
}

fn build_input(group: Group, spec: &InputSpec) -> Result<InputSignal64, SimError> {
    let name = "system.input";
    Ok(match spec {
        InputSpec::Zero => InputSignal::zero(group.dim()),
        InputSpec::Constant { value } => InputSignal::constant(algebra(group, name, value)?),
        InputSpec::Sinusoid { offset, terms } => {
            let terms = terms
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|s| SineTerm {
                            amplitude: s.amplitude,
                            frequency: s.frequency,
                            phase: s.phase,
                        })
                        .collect()
                })
                .collect();
            field(name, InputSignal::sinusoid_sum(algebra(group, name, offset)?, terms))?
        }
        InputSpec::Piecewise { breakpoints } => {
            let b = breakpoints
                .iter()
                .map(|b| Ok((b.t, algebra(group, name, &b.value)?)))
                .collect::<Result<Vec<_>, SimError>>()?;
            field(name, InputSignal::piecewise_constant(b))?
        }
    })
}

fn build_cost(group: Group, spec: &CostSpec) -> Result<CostFunction64, SimError> {
    let name = "observer.cost";
    let need = |g: Group, cost: &str| {
        if g != group {
            Err(invalid(format!("{name}: {cost} is defined on {} only", g.name())))
        } else {
            Ok(())
        }
    };
    Ok(match spec {
        CostSpec::So3Frobenius { k } => {
            need(Group::SO3, "so3_frobenius")?;
            field(name, so3_frobenius_cost(*k))?
        }
        CostSpec::Se3Pose => {
            need(Group::SE3, "se3_pose")?;
            se3_pose_cost()
        }
        CostSpec::Se3Natural => {
            need(Group::SE3, "se3_natural")?;
            se3_natural_cost()
        }
        CostSpec::WeightedFrobenius {
            left_weights,
            right_weights,
        } => field(name, weighted_frobenius_cost(group, left_weights, right_weights))?,
        CostSpec::Mirror { of } => mirror_invariance(&build_cost(group, of)?),
    })
}

fn build_metric(group: Group, spec: &MetricSpec) -> Result<Metric64, SimError> {
    let inv = |i: InvarianceName| match i {
        InvarianceName::Left => MetricInvariance::LeftInvariant,
        InvarianceName::Right => MetricInvariance::RightInvariant,
        InvarianceName::Bi => MetricInvariance::BiInvariant,
    };
    let name = "observer.metric";
    match spec {
        MetricSpec::TraceForm { invariance } => field(name, Metric64::trace_form(group, inv(*invariance))),
        MetricSpec::Identity { invariance } => field(name, Metric64::euclidean(group, inv(*invariance))),
        MetricSpec::Explicit { gram, invariance } => {
            let n = group.dim();
            if gram.len() != n || gram.iter().any(|r| r.len() != n) {
                return Err(invalid(format!("{name}: gram must be {n}x{n}")));
            }
            let m = DMatrix::from_fn(n, n, |i, j| gram[i][j]);
            field(name, Metric64::new(group, m, inv(*invariance)))
        }
    }
}

fn build_observer(group: Group, handedness: Handedness, spec: &ObserverSpec) -> Result<Observer64, SimError> {
    let wanted = match spec.kind {
        ObserverKindName::GradientLeft | ObserverKindName::GradientLikeLeft => Some(Handedness::LeftInvariant),
        ObserverKindName::GradientRight | ObserverKindName::GradientLikeRight => Some(Handedness::RightInvariant),
        ObserverKindName::Synchronous => None,
    };
    if let Some(h) = wanted {
        if h != handedness {
            return Err(invalid(format!(
                "observer.kind: {:?} observer does not fit a {:?} system",
                spec.kind, handedness
            )));
        }
    }
    if spec.kind == ObserverKindName::Synchronous {
        if spec.cost.is_some() || spec.metric.is_some() {
            return Err(invalid("observer: synchronous observer takes no cost or metric"));
        }
        return Ok(synchronous_observer(group, handedness));
    }
    let cost = build_cost(group, spec.cost.as_ref().ok_or_else(|| invalid("observer.cost: missing"))?)?;
    let metric = build_metric(group, spec.metric.as_ref().ok_or_else(|| invalid("observer.metric: missing"))?)?;
    let obs = match spec.kind {
        ObserverKindName::GradientLeft | ObserverKindName::GradientRight => gradient_observer(handedness, cost, metric),
        _ => gradient_like_observer(handedness, cost, metric),
    };
    field("observer", obs)
}

fn build_element(group: Group, name: &str, spec: &ElementSpec) -> Result<GroupElement64, SimError> {
    match spec {
        ElementSpec::Exp(c) => field(name, GroupElement64::exp(group, &algebra(group, name, c)?)),
        ElementSpec::Matrix(rows) => {
            let n = group.matrix_size();
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(invalid(format!("{name}: matrix must be {n}x{n}")));
            }
            field(name, GroupElement64::new(group, DMatrix::from_fn(n, n, |i, j| rows[i][j])))
        }
    }
}

fn trace_source(
    name: &str,
    amplitude: Option<f64>,
    trace: &Option<Vec<Vec<f64>>>,
    rng: &mut SplitMix64,
    dim: usize,
    steps: usize,
) -> Result<Vec<Vec<f64>>, SimError> {
    match (amplitude, trace) {
        (Some(a), None) => {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(invalid(format!("{name}.amplitude: must be finite and non-negative")));
            }
            Ok(noise::coordinate_trace(rng, dim, a, steps))
        }
        (None, Some(t)) => {
            if t.len() < steps {
                return Err(invalid(format!("{name}.trace: {} entries for {steps} steps", t.len())));
            }
            if let Some(bad) = t.iter().find(|c| c.len() != dim) {
                return Err(invalid(format!("{name}.trace: entry with {} coordinates, expected {dim}", bad.len())));
            }
            Ok(t[..steps].to_vec())
        }
        _ => Err(invalid(format!("{name}: give exactly one of amplitude or trace"))),
    }
}

fn build_channel(group: Group, spec: &ChannelSpec, steps: usize) -> Result<(MeasurementChannel64, Option<ChannelSpec>), SimError> {
    if spec.state_noise.is_none() && spec.input_noise.is_none() {
        return Ok((MeasurementChannel::exact(), None));
    }
    let seed = spec.seed.unwrap_or(0);
    let mut rng = SplitMix64::new(seed);
    let dim = group.dim();
    let mut dump = ChannelSpec {
        state_noise: None,
        input_noise: None,
        seed: Some(seed),
    };

    let state = match &spec.state_noise {
        None => StateNoise::None,
        Some(s) => {
            let tr = trace_source("channel.state_noise", s.amplitude, &s.trace, &mut rng, dim, steps)?;
            let elements = field("channel.state_noise", noise::to_elements(group, &tr))?;
            dump.state_noise = Some(StateNoiseSpec {
                kind: s.kind,
                amplitude: None,
                trace: Some(tr),
            });
            match s.kind {
                StateNoiseKind::LeftMultiplicative => StateNoise::LeftMultiplicative(elements),
                StateNoiseKind::RightMultiplicative => StateNoise::RightMultiplicative(elements),
            }
        }
    };
    let input = match &spec.input_noise {
        None => InputNoise::None,
        Some(s) => {
            let tr = trace_source("channel.input_noise", s.amplitude, &s.trace, &mut rng, dim, steps)?;
            let v = field("channel.input_noise", noise::to_vectors(&tr))?;
            dump.input_noise = Some(InputNoiseSpec {
                kind: s.kind,
                amplitude: None,
                trace: Some(tr),
            });
            InputNoise::Additive(v)
        }
    };
    Ok((MeasurementChannel::new(state, input), Some(dump)))
}
