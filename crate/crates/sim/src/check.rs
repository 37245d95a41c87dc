//! Quick invariant suites behind `lieobs check`.

use lie_observer::*;

use crate::noise::SplitMix64;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value against its bound.
    pub detail: String,
}

const SAMPLES: usize = 25;
const SEED: u64 = 0x5EED;

fn outcome(name: &'static str, worst: f64, bound: f64) -> CheckResult {
    CheckResult {
        name,
        passed: worst <= bound,
        detail: format!("{worst:.3e} <= {bound:.0e}"),
    }
}

fn failed(name: &'static str, e: impl std::fmt::Display) -> CheckResult {
    CheckResult {
        name,
        passed: false,
        detail: e.to_string(),
    }
}

fn sample(rng: &mut SplitMix64, group: Group, r: f64) -> AlgebraVector64 {
    AlgebraVector64::from_slice(&rng.ball_vector(group.dim(), r)).expect("finite")
}

fn element(rng: &mut SplitMix64, group: Group, r: f64) -> GroupElement64 {
    GroupElement64::exp(group, &sample(rng, group, r)).expect("in group")
}

fn catalog() -> Vec<(CostFunction64, Metric64)> {
    let tf = |g, i| Metric64::trace_form(g, i).expect("valid metric");
    vec![
        (
            so3_frobenius_cost(1.5).expect("positive gain"),
            tf(Group::SO3, MetricInvariance::BiInvariant),
        ),
        (se3_pose_cost(), tf(Group::SE3, MetricInvariance::RightInvariant)),
        (se3_natural_cost(), tf(Group::SE3, MetricInvariance::LeftInvariant)),
    ]
}

fn exp_log_roundtrip() -> lie_observer::Result<f64> {
    let mut rng = SplitMix64::new(SEED);
    let mut worst = 0.0f64;
    for g in [Group::SO3, Group::SE3] {
        for _ in 0..SAMPLES {
            let v = sample(&mut rng, g, 3.0);
            let w = GroupElement64::exp(g, &v)?.log()?;
            worst = worst.max((&w - &v).norm());
        }
    }
    Ok(worst)
}

fn adjoint_conjugation() -> lie_observer::Result<f64> {
    let mut rng = SplitMix64::new(SEED + 1);
    let mut worst = 0.0f64;
    for g in [Group::SO3, Group::SE3] {
        for _ in 0..SAMPLES {
            let x = element(&mut rng, g, 2.0);
            let v = sample(&mut rng, g, 1.0);
            let lhs = x.compose(&GroupElement64::exp(g, &v)?)?.compose(&x.inverse())?;
            let rhs = GroupElement64::exp(g, &x.adjoint(&v)?)?;
            worst = worst.max((lhs.matrix() - rhs.matrix()).amax());
        }
    }
    Ok(worst)
}

fn gradient_matches_fd() -> lie_observer::Result<f64> {
    let mut rng = SplitMix64::new(SEED + 2);
    let mut worst = 0.0f64;
    for (cost, metric) in catalog() {
        let g = cost.group();
        for _ in 0..SAMPLES {
            let (x, y) = (element(&mut rng, g, 2.0), element(&mut rng, g, 2.0));
            let a = cost.grad1(&x, &y, &metric)?.body_coords();
            let n = fd_grad1(&cost, &metric, &x, &y, 1e-5)?.body_coords();
            worst = worst.max((&a - &n).norm() / (1.0 + a.norm()));
        }
    }
    Ok(worst)
}

fn observers() -> Vec<(InvariantSystem64, Observer64)> {
    let u = |g: Group| InputSignal::sinusoid_sum(
        AlgebraVector64::from_slice(&vec![0.3; g.dim()]).expect("finite"),
        (0..g.dim())
            .map(|i| vec![SineTerm { amplitude: 0.5, frequency: 1.0 + i as f64, phase: 0.1 * i as f64 }])
            .collect(),
    )
    .expect("valid input");
    let mut out = Vec::new();
    for (cost, metric) in catalog() {
        let g = cost.group();
        let mirrored = mirror_invariance(&cost);
        for h in [Handedness::LeftInvariant, Handedness::RightInvariant] {
            let sys = InvariantSystem64::new(g, h, u(g)).expect("valid system");
            let fits = |c: &CostFunction64| match h {
                Handedness::LeftInvariant => c.invariance().is_right(),
                Handedness::RightInvariant => c.invariance().is_left(),
            };
            let mirrored_metric = |m: &Metric64| match m.invariance() {
                MetricInvariance::LeftInvariant => Metric64::trace_form(g, MetricInvariance::RightInvariant),
                MetricInvariance::RightInvariant => Metric64::trace_form(g, MetricInvariance::LeftInvariant),
                MetricInvariance::BiInvariant => Ok(m.clone()),
            }
            .expect("valid metric");
            let (c, m) = if fits(&cost) {
                (cost.clone(), metric.clone())
            } else {
                (mirrored.clone(), mirrored_metric(&metric))
            };
            if let Ok(o) = gradient_observer(h, c.clone(), m.clone()) {
                out.push((sys.clone(), o));
            }
            if let Ok(o) = gradient_like_observer(h, c, m) {
                out.push((sys.clone(), o));
            }
            out.push((sys, synchronous_observer(g, h)));
        }
    }
    out
}

fn internal_model() -> lie_observer::Result<f64> {
    let mut rng = SplitMix64::new(SEED + 3);
    let cfg = IntegratorConfig::new(Scheme::Rkmk4, 1e-2)?;
    let mut worst = 0.0f64;
    for (sys, obs) in observers() {
        let x0 = element(&mut rng, sys.group, 2.0);
        let run = simulate_coupled(&sys, &obs, &MeasurementChannel::exact(), &x0, &x0, &cfg, 2.0)?;
        worst = worst.max(run.system.sup_distance(&run.observer)?);
    }
    Ok(worst)
}

fn cost_monotone() -> lie_observer::Result<f64> {
    let mut rng = SplitMix64::new(SEED + 4);
    let cfg = IntegratorConfig::new(Scheme::Rkmk4, 1e-2)?;
    let mut violations = 0usize;
    for (sys, obs) in observers() {
        if obs.kind() == ObserverKind::SynchronousOnly {
            continue;
        }
        let x0 = element(&mut rng, sys.group, 1.0);
        let xhat0 = element(&mut rng, sys.group, 1.0);
        let run = simulate_coupled(&sys, &obs, &MeasurementChannel::exact(), &x0, &xhat0, &cfg, 3.0)?;
        violations += run.diagnostics.monotonicity_violations;
    }
    Ok(violations as f64)
}

fn group_preserved() -> lie_observer::Result<f64> {
    let mut rng = SplitMix64::new(SEED + 5);
    let cfg = IntegratorConfig::new(Scheme::Rkmk4, 5e-2)?;
    let mut worst = 0.0f64;
    for (sys, obs) in observers() {
        let x0 = element(&mut rng, sys.group, 2.0);
        let xhat0 = element(&mut rng, sys.group, 2.0);
        let run = simulate_coupled(&sys, &obs, &MeasurementChannel::exact(), &x0, &xhat0, &cfg, 10.0)?;
        worst = worst.max(run.diagnostics.max_residual);
    }
    Ok(worst)
}

type Suite = (&'static str, fn() -> lie_observer::Result<f64>, f64);

const SUITES: [Suite; 6] = [
    ("exp_log_roundtrip", exp_log_roundtrip, 1e-10),
    ("adjoint_conjugation", adjoint_conjugation, 1e-10),
    ("gradient_matches_fd", gradient_matches_fd, 1e-6),
    ("internal_model", internal_model, 1e-9),
    ("cost_monotone", cost_monotone, 0.0),
    ("group_preserved", group_preserved, 1e-9),
];

pub fn run_checks() -> Vec<CheckResult> {
    std::thread::scope(|s| {
        let handles: Vec<_> = SUITES
            .iter()
            .map(|&(name, f, bound)| {
                s.spawn(move || match f() {
                    Ok(worst) => outcome(name, worst, bound),
                    Err(e) => failed(name, e),
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("suite panicked")).collect()
    })
}
