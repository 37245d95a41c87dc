//! Acceptance suite: one line per criterion, tolerances pinned below.
//!
//! Run with `cargo test -p lie-observer-sim --test acceptance`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::thread;

use lie_observer::costs::se3_pose_potential;
use lie_observer::groups;
use lie_observer::integrators::integrate_error_flow;
use lie_observer::observers::skew_commutator;
use lie_observer::*;
use lie_observer_sim::noise::{self, SplitMix64};
use lie_observer_sim::rate::fit_exponential_rate;
use lie_observer_sim::{run, scenario};
use nalgebra::{DMatrix, DVector};

// criterion 1
const ROUNDTRIP_SAMPLES: usize = 10_000;
const ROUNDTRIP_TOL: f64 = 1e-9;
const SERIES_TOL: f64 = 1e-10;
const AXIOM_TOL: f64 = 1e-10;
// criterion 2
const GRADIENT_PAIRS: usize = 100;
const GRADIENT_REL_TOL: f64 = 1e-6;
// criterion 3
const SYNC_SEEDS: u64 = 20;
const SYNC_TOL: f64 = 1e-8;
const WRONG_TERM_MIN: f64 = 1e-2;
// criterion 4
const INTERNAL_MODEL_TOL: f64 = 1e-7;
// criterion 5
const AUTONOMY_SEEDS: u64 = 20;
const AUTONOMY_TOL: f64 = 1e-6;
// criterion 6
const CONVERGENCE_HORIZON: f64 = 40.0;
const CONVERGENCE_FINAL: f64 = 1e-8;
const CONVERGENCE_R2: f64 = 0.99;
const MAX_ANGLE: f64 = 2.5;
// criterion 7
const RATE_BAND: f64 = 0.1;
// criterion 8
const PASSIVITY_SAMPLES: usize = 1_000;
const ORTHOGONALITY_TOL: f64 = 1e-9;
const SKEW_DERIVATIVE_TOL: f64 = 1e-8;
// criterion 9
const COINCIDENCE_SAMPLES: usize = 1_000;
const COINCIDENCE_TOL: f64 = 1e-9;
// criterion 10
const INVARIANCE_SAMPLES: usize = 1_000;
const INVARIANCE_TOL: f64 = 1e-10;
const CLOSED_FORM_TOL: f64 = 1e-13;
// criterion 11
const STATE_NOISE: f64 = 0.02;
const INPUT_NOISE: f64 = 0.05;
const NOISE_SLACK: f64 = 1e-6;
const NOISY_COST_BOUND: f64 = 1.0;

const H: f64 = 1e-3;
const FD_EPS: f64 = 1e-5;

struct Outcome {
    passed: bool,
    detail: String,
}

/// Accumulates `value <= bound` style checks for one criterion.
#[derive(Default)]
struct Report {
    passed: bool,
    parts: Vec<String>,
}

impl Report {
    fn new() -> Self {
        Self {
            passed: true,
            parts: Vec::new(),
        }
    }

    fn at_most(&mut self, what: &str, value: f64, bound: f64) {
        let ok = value <= bound;
        self.passed &= ok;
        self.parts.push(format!("{what} {value:.2e}{}{bound:e}", if ok { " <= " } else { " > " }));
    }

    fn at_least(&mut self, what: &str, value: f64, bound: f64) {
        let ok = value >= bound;
        self.passed &= ok;
        self.parts.push(format!("{what} {value:.4}{}{bound}", if ok { " >= " } else { " < " }));
    }

    fn within(&mut self, what: &str, value: f64, lo: f64, hi: f64) {
        let ok = (lo..=hi).contains(&value);
        self.passed &= ok;
        self.parts.push(format!("{what} {value:.4} in [{lo:.3}, {hi:.3}]{}", if ok { "" } else { " (out)" }));
    }

    fn fail(&mut self, what: impl std::fmt::Display) {
        self.passed = false;
        self.parts.push(format!("error: {what}"));
    }

    fn done(self) -> Outcome {
        Outcome {
            passed: self.passed,
            detail: self.parts.join("; "),
        }
    }
}

fn cfg(h: f64) -> IntegratorConfig<f64> {
    IntegratorConfig::new(Scheme::Rkmk4, h).unwrap()
}

fn element(rng: &mut SplitMix64, g: Group, r: f64) -> GroupElement64 {
    GroupElement64::exp_coords(g, &rng.ball_vector(g.dim(), r)).unwrap()
}

fn vector(rng: &mut SplitMix64, g: Group, r: f64) -> AlgebraVector64 {
    AlgebraVector64::from_slice(&rng.ball_vector(g.dim(), r)).unwrap()
}

fn random_input(rng: &mut SplitMix64, g: Group) -> InputSignal64 {
    let n = g.dim();
    let offset = vector(rng, g, 1.0);
    let terms = (0..n)
        .map(|_| {
            vec![SineTerm {
                amplitude: rng.uniform_in(-1.5, 1.5),
                frequency: rng.uniform_in(0.2, 2.0),
                phase: rng.uniform_in(0.0, 2.0 * PI),
            }]
        })
        .collect();
    InputSignal::sinusoid_sum(offset, terms).unwrap()
}

fn metric(g: Group, inv: MetricInvariance) -> Metric64 {
    Metric64::trace_form(g, inv).unwrap()
}

fn weighted(g: Group) -> CostFunction64 {
    match g {
        Group::SO3 => weighted_frobenius_cost(g, &[1.0, 2.0, 0.5], &[0.7, 1.0, 1.5]).unwrap(),
        Group::SE3 => weighted_frobenius_cost(g, &[1.0, 2.0, 0.5, 1.0], &[0.7, 1.0, 1.5, 1.2]).unwrap(),
    }
}

/// Matched cost and metric for a gradient observer of a system of handedness `h`.
fn matched(g: Group, h: Handedness) -> (CostFunction64, Metric64) {
    match (g, h) {
        (Group::SO3, _) => (so3_frobenius_cost(1.0).unwrap(), metric(g, MetricInvariance::BiInvariant)),
        (Group::SE3, Handedness::LeftInvariant) => (se3_pose_cost(), metric(g, MetricInvariance::RightInvariant)),
        (Group::SE3, Handedness::RightInvariant) => (se3_natural_cost(), metric(g, MetricInvariance::LeftInvariant)),
    }
}

/// Metric invariance that makes the gradient-like error flow autonomous.
fn gradient_like_metric(g: Group, h: Handedness) -> Metric64 {
    match h {
        Handedness::LeftInvariant => metric(g, MetricInvariance::RightInvariant),
        Handedness::RightInvariant => metric(g, MetricInvariance::LeftInvariant),
    }
}

fn catalog(g: Group, h: Handedness) -> Vec<Observer64> {
    let (f, m) = matched(g, h);
    vec![
        synchronous_observer(g, h),
        gradient_observer(h, f.clone(), m.clone()).unwrap(),
        gradient_like_observer(h, f, m).unwrap(),
        gradient_like_observer(h, weighted(g), gradient_like_metric(g, h)).unwrap(),
    ]
}

fn trace_gram(g: Group) -> DMatrix<f64> {
    let d: Vec<f64> = (0..g.dim()).map(|i| if i < 3 { 2.0 } else { 1.0 }).collect();
    DMatrix::from_diagonal(&DVector::from_vec(d))
}

/// Independent finite-difference gradient of `f` at `x`: central differences
/// along `x exp(eps e_i)` (body) or `exp(eps e_i) x` (spatial), raised with the
/// trace-form gram.
fn fd_gradient(g: Group, f: &dyn Fn(&DMatrix<f64>) -> f64, x: &DMatrix<f64>, frame: Frame) -> DVector<f64> {
    let n = g.dim();
    let d = DVector::from_fn(n, |i, _| {
        let mut e = DVector::zeros(n);
        e[i] = FD_EPS;
        let step = |s: f64| {
            let m = groups::exp_matrix(g, &(&e * s)).unwrap();
            match frame {
                Frame::Body => x * m,
                Frame::Spatial => m * x,
            }
        };
        (f(&step(1.0)) - f(&step(-1.0))) / (2.0 * FD_EPS)
    });
    trace_gram(g).try_inverse().unwrap() * d
}

fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-3)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

fn series_exp(m: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..terms {
        term = &term * m / k as f64;
        out += &term;
    }
    out
}

type Job<T> = Box<dyn FnOnce() -> T + Send>;

fn parallel<T: Send>(jobs: Vec<Job<T>>) -> Vec<T> {
    thread::scope(|s| {
        let hs: Vec<_> = jobs.into_iter().map(|j| s.spawn(j)).collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

fn group_kernel() -> Outcome {
    let mut rng = SplitMix64::new(1);
    let (mut roundtrip, mut series, mut axioms) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..ROUNDTRIP_SAMPLES {
        let g = [Group::SO3, Group::SE3][i % 2];
        let v = vector(&mut rng, g, 3.0);
        let x = GroupElement64::exp(g, &v).unwrap();
        roundtrip = roundtrip.max((&x.log().unwrap() - &v).norm());
        let hat = groups::hat(g, v.coords()).unwrap();
        series = series.max(max_abs(&(series_exp(&hat, 30) - x.matrix())));
        if i % 10 == 0 {
            let (y, z) = (element(&mut rng, g, 3.0), element(&mut rng, g, 3.0));
            let e = GroupElement64::identity(g);
            let assoc = x.compose(&y).unwrap().compose(&z).unwrap().matrix() - x.compose(&y.compose(&z).unwrap()).unwrap().matrix();
            let inv = x.compose(&x.inverse()).unwrap().matrix() - e.matrix();
            let unit = x.compose(&e).unwrap().matrix() - x.matrix();
            axioms = axioms.max(max_abs(&assoc)).max(max_abs(&inv)).max(max_abs(&unit));
        }
    }
    let mut r = Report::new();
    r.at_most("exp/log round trip", roundtrip, ROUNDTRIP_TOL);
    r.at_most("Rodrigues vs 30-term series", series, SERIES_TOL);
    r.at_most("group axioms", axioms, AXIOM_TOL);
    r.done()
}

fn gradient_correctness() -> Outcome {
    let mut rng = SplitMix64::new(2);
    let mut r = Report::new();

    let k = 1.7;
    let f = so3_frobenius_cost(k).unwrap();
    let m = metric(Group::SO3, MetricInvariance::BiInvariant);
    let (mut vs_fd, mut vs_formula) = (0.0f64, 0.0f64);
    for _ in 0..GRADIENT_PAIRS {
        let (x, y) = (element(&mut rng, Group::SO3, 3.0), element(&mut rng, Group::SO3, 3.0));
        let grad = f.grad1(&x, &y, &m).unwrap();
        let closed = |a: &DMatrix<f64>| 0.5 * k * (a - y.matrix()).norm_squared();
        let fd = fd_gradient(Group::SO3, &closed, x.matrix(), Frame::Body);
        vs_fd = vs_fd.max(rel_err(grad.body_coords().coords(), &fd));
        let formula = -k * x.matrix() * groups::skew_project(&(x.matrix().transpose() * y.matrix())).unwrap();
        vs_formula = vs_formula.max(max_abs(&(grad.ambient() - &formula)) / formula.norm().max(1e-3));
    }
    r.at_most("SO(3) frobenius vs FD", vs_fd, GRADIENT_REL_TOL);
    r.at_most("SO(3) frobenius vs -kR P(R^T Y)", vs_formula, GRADIENT_REL_TOL);

    let f = se3_pose_cost();
    let m = metric(Group::SE3, MetricInvariance::RightInvariant);
    let mut worst = 0.0f64;
    for _ in 0..GRADIENT_PAIRS {
        let (x, y) = (element(&mut rng, Group::SE3, 3.0), element(&mut rng, Group::SE3, 3.0));
        let grad = f.grad1(&x, &y, &m).unwrap();
        let closed = |a: &DMatrix<f64>| {
            let (ra, pa) = (a.fixed_view::<3, 3>(0, 0), a.fixed_view::<3, 1>(0, 3));
            let (ry, py) = (y.matrix().fixed_view::<3, 3>(0, 0), y.matrix().fixed_view::<3, 1>(0, 3));
            0.5 * ((ra - ry).norm_squared() + (pa - ra * ry.transpose() * py).norm_squared())
        };
        let fd = fd_gradient(Group::SE3, &closed, x.matrix(), Frame::Spatial);
        worst = worst.max(rel_err(grad.spatial_coords().coords(), &fd));
    }
    r.at_most("SE(3) pose vs FD", worst, GRADIENT_REL_TOL);
    r.done()
}

fn synchrony() -> Outcome {
    let jobs: Vec<Job<(f64, f64)>> = (0..SYNC_SEEDS)
        .map(|seed| {
            Box::new(move || {
                let mut rng = SplitMix64::new(300 + seed);
                let g = [Group::SO3, Group::SE3][seed as usize % 2];
                let sys = InvariantSystem64::left(g, random_input(&mut rng, g)).unwrap();
                let (x0, xh0) = (element(&mut rng, g, 2.0), element(&mut rng, g, 2.0));
                let good = synchronous_observer(g, Handedness::LeftInvariant);
                let wrong = custom_observer(g, Handedness::LeftInvariant, move |xh: &GroupElement64, _, w, _| {
                    groups::hat(g, w.coords()).unwrap() * xh.matrix()
                })
                .unwrap();
                let ch = MeasurementChannel::exact();
                let a = simulate_coupled(&sys, &good, &ch, &x0, &xh0, &cfg(H), 10.0).unwrap();
                let b = simulate_coupled(&sys, &wrong, &ch, &x0, &xh0, &cfg(H), 10.0).unwrap();
                (a.diagnostics.synchrony_defect, b.diagnostics.synchrony_defect)
            }) as Job<(f64, f64)>
        })
        .collect();
    let res = parallel(jobs);
    let mut r = Report::new();
    r.at_most("right-synchronous defect", res.iter().map(|p| p.0).fold(0.0, f64::max), SYNC_TOL);
    let smallest_wrong = res.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    r.passed &= smallest_wrong > WRONG_TERM_MIN;
    r.parts.push(format!("wrong term defect min {smallest_wrong:.2e} > {WRONG_TERM_MIN:.0e}"));
    r.done()
}

fn internal_model() -> Outcome {
    let mut jobs: Vec<Job<lie_observer::Result<f64>>> = Vec::new();
    for (i, g) in [Group::SO3, Group::SE3].into_iter().enumerate() {
        for (j, h) in [Handedness::LeftInvariant, Handedness::RightInvariant].into_iter().enumerate() {
            jobs.push(Box::new(move || {
                let mut rng = SplitMix64::new(400 + 2 * i as u64 + j as u64);
                let sys = InvariantSystem64::new(g, h, random_input(&mut rng, g))?;
                let x0 = element(&mut rng, g, 2.5);
                let mut worst = 0.0f64;
                for obs in catalog(g, h) {
                    let run = simulate_coupled(&sys, &obs, &MeasurementChannel::exact(), &x0, &x0, &cfg(H), 10.0)?;
                    worst = worst.max(run.observer.sup_distance(&run.system)?);
                }
                Ok(worst)
            }));
        }
    }
    let mut r = Report::new();
    let mut worst = 0.0f64;
    for res in parallel(jobs) {
        match res {
            Ok(w) => worst = worst.max(w),
            Err(e) => r.fail(e),
        }
    }
    r.at_most("sup distance, 16 observers", worst, INTERNAL_MODEL_TOL);
    r.done()
}

fn autonomy_gap(sys: &InvariantSystem64, obs: &Observer64, x0: &GroupElement64, xh0: &GroupElement64) -> lie_observer::Result<f64> {
    let c = cfg(H);
    let run = simulate_coupled(sys, obs, &MeasurementChannel::exact(), x0, xh0, &c, 10.0)?;
    let side = obs.error_side();
    let e0 = canonical_error(side, xh0, x0)?;
    let flow = integrate_error_flow(obs.cost().unwrap(), obs.metric().unwrap(), &e0, &c, 10.0)?;
    let mut worst = 0.0f64;
    for ((xh, x), e) in run.observer.states.iter().zip(&run.system.states).zip(&flow.states) {
        worst = worst.max(canonical_error(side, xh, x)?.distance(e)?);
    }
    Ok(worst)
}

fn error_autonomy() -> Outcome {
    let jobs: Vec<Job<lie_observer::Result<(f64, f64)>>> = (0..AUTONOMY_SEEDS)
        .map(|seed| {
            Box::new(move || {
                let mut rng = SplitMix64::new(500 + seed);
                let l = Handedness::LeftInvariant;
                let mut gradient = 0.0f64;
                for g in [Group::SO3, Group::SE3] {
                    let (f, m) = matched(g, l);
                    let sys = InvariantSystem64::left(g, random_input(&mut rng, g))?;
                    let (x0, xh0) = (element(&mut rng, g, 2.0), element(&mut rng, g, 2.4));
                    gradient = gradient.max(autonomy_gap(&sys, &gradient_observer(l, f, m)?, &x0, &xh0)?);
                }
                let g = [Group::SO3, Group::SE3][seed as usize % 2];
                let h = [Handedness::LeftInvariant, Handedness::RightInvariant][(seed as usize / 2) % 2];
                let sys = InvariantSystem64::new(g, h, random_input(&mut rng, g))?;
                let (x0, xh0) = (element(&mut rng, g, 2.0), element(&mut rng, g, 2.4));
                let obs = gradient_like_observer(h, weighted(g), gradient_like_metric(g, h))?;
                Ok((gradient, autonomy_gap(&sys, &obs, &x0, &xh0)?))
            }) as Job<lie_observer::Result<(f64, f64)>>
        })
        .collect();
    let mut r = Report::new();
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for res in parallel(jobs) {
        match res {
            Ok((x, y)) => {
                a = a.max(x);
                b = b.max(y);
            }
            Err(e) => r.fail(e),
        }
    }
    r.at_most("gradient observers", a, AUTONOMY_TOL);
    r.at_most("gradient-like, non-invariant cost", b, AUTONOMY_TOL);
    r.done()
}

/// Initial estimate whose error with the identity has the given rotation angle.
fn with_angle(rng: &mut SplitMix64, g: Group, angle: f64) -> GroupElement64 {
    let mut c = rng.ball_vector(g.dim(), 2.0);
    let axis: Vec<f64> = rng.ball_vector(3, 1.0);
    let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    for i in 0..3 {
        c[i] = axis[i] * angle / norm;
    }
    GroupElement64::exp_coords(g, &c).unwrap()
}

fn convergence() -> Outcome {
    let mut jobs: Vec<Job<lie_observer::Result<(usize, f64, f64, f64)>>> = Vec::new();
    let cases = [
        (Group::SO3, Handedness::LeftInvariant, false),
        (Group::SO3, Handedness::RightInvariant, false),
        (Group::SE3, Handedness::LeftInvariant, false),
        (Group::SE3, Handedness::RightInvariant, false),
        (Group::SO3, Handedness::LeftInvariant, true),
        (Group::SE3, Handedness::RightInvariant, true),
    ];
    for (i, (g, h, like)) in cases.into_iter().enumerate() {
        for (j, angle) in [MAX_ANGLE, 1.0].into_iter().enumerate() {
            jobs.push(Box::new(move || {
                let mut rng = SplitMix64::new(600 + 10 * i as u64 + j as u64);
                let obs = if like {
                    gradient_like_observer(h, weighted(g), gradient_like_metric(g, h))?
                } else {
                    let (f, m) = matched(g, h);
                    gradient_observer(h, f, m)?
                };
                let sys = InvariantSystem64::new(g, h, random_input(&mut rng, g))?;
                let x0 = GroupElement64::identity(g);
                let xh0 = with_angle(&mut rng, g, angle);
                let run = simulate_coupled(&sys, &obs, &MeasurementChannel::exact(), &x0, &xh0, &cfg(H), CONVERGENCE_HORIZON)?;
                let d = &run.diagnostics;
                let r2 = fit_exponential_rate(&run.system.times, &d.cost, 0.5).map_or(0.0, |r| r.r_squared);
                let angle0 = canonical_error(d.side, &xh0, &x0)?.log()?.as_slice()[..3].iter().map(|a| a * a).sum::<f64>().sqrt();
                Ok((d.monotonicity_violations, *d.cost.last().unwrap(), r2, angle0))
            }));
        }
    }
    let mut r = Report::new();
    let (mut violations, mut fin, mut r2, mut angle) = (0usize, 0.0f64, 1.0f64, 0.0f64);
    for res in parallel(jobs) {
        match res {
            Ok((v, f, q, a)) => {
                violations += v;
                fin = fin.max(f);
                r2 = r2.min(q);
                angle = angle.max(a);
            }
            Err(e) => r.fail(e),
        }
    }
    r.within("largest initial angle", angle, 0.0, MAX_ANGLE + 1e-9);
    r.at_most("monotonicity violations", violations as f64, 0.0);
    r.at_most("final cost at t=40", fin, CONVERGENCE_FINAL);
    r.at_least("tail r^2", r2, CONVERGENCE_R2);
    r.done()
}

fn local_rate() -> Outcome {
    let (k, th0, horizon) = (1.0f64, 0.1f64, 20.0);
    // oracle: theta' = -k sin(theta), tan(theta/2) = tan(theta0/2) e^{-kt},
    // cost k/2 |R - I|^2 = 2k (1 - cos theta) = 4k sin^2(theta/2)
    let oracle_times: Vec<f64> = (0..=2000).map(|i| i as f64 * horizon / 2000.0).collect();
    let oracle_cost: Vec<f64> = oracle_times
        .iter()
        .map(|t| {
            let th = 2.0 * ((th0 / 2.0).tan() * (-k * t).exp()).atan();
            4.0 * k * (th / 2.0).sin().powi(2)
        })
        .collect();
    let oracle = fit_exponential_rate(&oracle_times, &oracle_cost, 0.5).unwrap();

    let g = Group::SO3;
    let obs = gradient_observer(
        Handedness::LeftInvariant,
        so3_frobenius_cost(k).unwrap(),
        metric(g, MetricInvariance::BiInvariant),
    )
    .unwrap();
    let sys = InvariantSystem64::left(g, InputSignal::zero(3)).unwrap();
    let x0 = GroupElement64::identity(g);
    let xh0 = GroupElement64::exp_coords(g, &[0.0, th0, 0.0]).unwrap();
    let mut r = Report::new();
    match simulate_coupled(&sys, &obs, &MeasurementChannel::exact(), &x0, &xh0, &cfg(H), horizon) {
        Ok(run) => match fit_exponential_rate(&run.system.times, &run.diagnostics.cost, 0.5) {
            Ok(fit) => {
                r.within("oracle rate", oracle.rate, 2.0 * k * (1.0 - RATE_BAND), 2.0 * k * (1.0 + RATE_BAND));
                r.within("simulated rate", fit.rate, 2.0 * k * (1.0 - RATE_BAND), 2.0 * k * (1.0 + RATE_BAND));
            }
            Err(e) => r.fail(e),
        },
        Err(e) => r.fail(e),
    }
    r.done()
}

fn passivity() -> Outcome {
    let mut rng = SplitMix64::new(8);
    let g = Group::SO3;
    let m = metric(g, MetricInvariance::BiInvariant);
    let id = GroupElement64::identity(g);
    let (mut ortho, mut deriv) = (0.0f64, 0.0f64);
    for _ in 0..PASSIVITY_SAMPLES {
        let k = rng.uniform_in(0.2, 3.0);
        let f = so3_frobenius_cost(k).unwrap();
        let e = element(&mut rng, g, 2.5);
        let u = vector(&mut rng, g, 4.0);
        let grad = f.grad1(&e, &id, &m).unwrap();
        ortho = ortho.max(m.inner_tangent(&skew_commutator(&e, &u).unwrap(), &grad).abs());
        let b = skew_error_field(&f, &m, &e, &u).unwrap().body_coords();
        let along = |s: f64| f.at_identity(&e.compose(&GroupElement64::exp(g, &(&b * s)).unwrap()).unwrap()).unwrap();
        // fourth-order central difference
        let e1 = 1e-4;
        let dfdt = (8.0 * (along(e1) - along(-e1)) - (along(2.0 * e1) - along(-2.0 * e1))) / (12.0 * e1);
        deriv = deriv.max((dfdt + m.norm_sq_tangent(&grad)).abs());
    }
    let jobs: Vec<Job<lie_observer::Result<usize>>> = (0..6u64)
        .map(|seed| {
            Box::new(move || {
                let mut rng = SplitMix64::new(800 + seed);
                let obs = gradient_observer(
                    Handedness::LeftInvariant,
                    so3_frobenius_cost(1.0)?,
                    metric(g, MetricInvariance::BiInvariant),
                )?;
                let sys = InvariantSystem64::left(g, random_input(&mut rng, g))?;
                let (x0, xh0) = (element(&mut rng, g, 2.0), element(&mut rng, g, 2.4));
                let run = simulate_coupled(&sys, &obs, &MeasurementChannel::exact(), &x0, &xh0, &cfg(H), 10.0)?;
                Ok(run.diagnostics.monotonicity_violations + run.diagnostics.other_monotonicity_violations)
            }) as Job<lie_observer::Result<usize>>
        })
        .collect();
    let mut r = Report::new();
    r.at_most("<commutator, grad>", ortho, ORTHOGONALITY_TOL);
    r.at_most("d/dt f + |grad|^2 on skew flow", deriv, SKEW_DERIVATIVE_TOL);
    let mut v = 0usize;
    for res in parallel(jobs) {
        match res {
            Ok(n) => v += n,
            Err(e) => r.fail(e),
        }
    }
    r.at_most("E_r and E_l monotonicity violations", v as f64, 0.0);
    r.done()
}

fn coincidence() -> Outcome {
    let mut rng = SplitMix64::new(9);
    let mut worst = 0.0f64;
    for g in [Group::SO3, Group::SE3] {
        for h in [Handedness::LeftInvariant, Handedness::RightInvariant] {
            let (f, m) = matched(g, h);
            let a = gradient_observer(h, f.clone(), m.clone()).unwrap();
            let b = gradient_like_observer(h, f, m).unwrap();
            for _ in 0..COINCIDENCE_SAMPLES / 2 {
                let (x, y) = (element(&mut rng, g, 3.0), element(&mut rng, g, 3.0));
                let w = vector(&mut rng, g, 3.0);
                let t = rng.uniform_in(0.0, 10.0);
                let d = a.field(&x, &y, &w, t).unwrap().ambient() - b.field(&x, &y, &w, t).unwrap().ambient();
                worst = worst.max(max_abs(&d));
            }
        }
    }
    let mut r = Report::new();
    r.at_most("gradient vs gradient-like field", worst, COINCIDENCE_TOL);
    r.done()
}

fn cost_constructions() -> Outcome {
    let mut rng = SplitMix64::new(10);
    let g = Group::SE3;
    let lifted = lift_right_invariant("lifted_pose", g, se3_pose_potential, None);
    let mirrored = mirror_invariance(&se3_natural_cost());
    let (mut lift_inv, mut mirror_inv, mut closed) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..INVARIANCE_SAMPLES {
        let [x, y, z] = [0; 3].map(|_| element(&mut rng, g, 3.0));
        let (xz, yz) = (x.compose(&z).unwrap(), y.compose(&z).unwrap());
        let f0 = lifted.evaluate(&x, &y).unwrap();
        lift_inv = lift_inv.max((lifted.evaluate(&xz, &yz).unwrap() - f0).abs() / (1.0 + f0));
        let m0 = mirrored.evaluate(&x, &y).unwrap();
        mirror_inv = mirror_inv.max((mirrored.evaluate(&xz, &yz).unwrap() - m0).abs() / (1.0 + m0));
        let (ra, pa) = (x.matrix().fixed_view::<3, 3>(0, 0), x.matrix().fixed_view::<3, 1>(0, 3));
        let (ry, py) = (y.matrix().fixed_view::<3, 3>(0, 0), y.matrix().fixed_view::<3, 1>(0, 3));
        let want = 0.5 * ((ra - ry).norm_squared() + (pa - ra * ry.transpose() * py).norm_squared());
        closed = closed.max((f0 - want).abs() / (1.0 + want));
    }
    let mut r = Report::new();
    r.passed &= lifted.invariance() == CostInvariance::Right && mirrored.invariance() == CostInvariance::Right;
    r.at_most("lift_right_invariant invariance", lift_inv, INVARIANCE_TOL);
    r.at_most("mirror_invariance invariance", mirror_inv, INVARIANCE_TOL);
    r.at_most("lifted pose vs closed form", closed, CLOSED_FORM_TOL);
    r.done()
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn noisy_diagnostics() -> Outcome {
    let mut r = Report::new();
    let out = tempfile::tempdir().unwrap();

    // bundled SO(3) scenario through the full pipeline
    let s = scenario::load(&scenarios_dir().join("noisy.json")).unwrap();
    let h = s.config.step;
    match run::run_scenario(&s, out.path()) {
        Ok(sum) => {
            let d = &sum.run.diagnostics;
            r.at_most("SO(3) noise residual", d.noise_residual.unwrap_or(f64::NAN), h + NOISE_SLACK);
            let sup = d.cost.iter().skip(d.cost.len() / 2).cloned().fold(0.0, f64::max);
            r.at_most("SO(3) sup cost over t in [50, 100]", sup, NOISY_COST_BOUND);
        }
        Err(e) => r.fail(e),
    }

    // SE(3) right system with generated traces
    let g = Group::SE3;
    let (h, horizon) = (1e-2f64, 100.0f64);
    let steps = (horizon / h).round() as usize;
    let mut rng = SplitMix64::new(11);
    let state = noise::coordinate_trace(&mut rng, g.dim(), STATE_NOISE, steps);
    let input = noise::coordinate_trace(&mut rng, g.dim(), INPUT_NOISE, steps);
    let rot = state.iter().map(|c| c[..3].iter().map(|a| a * a).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let delta = input.iter().map(|c| c.iter().map(|a| a * a).sum::<f64>().sqrt()).fold(0.0, f64::max);
    r.at_most("|delta|", delta, INPUT_NOISE);
    r.at_most("N angle", rot, STATE_NOISE);
    let ch = MeasurementChannel::new(
        StateNoise::RightMultiplicative(noise::to_elements(g, &state).unwrap()),
        InputNoise::Additive(noise::to_vectors(&input).unwrap()),
    );
    let (f, m) = matched(g, Handedness::RightInvariant);
    let mut rng = SplitMix64::new(12);
    let sys = InvariantSystem64::right(g, random_input(&mut rng, g)).unwrap();
    let x0 = GroupElement64::identity(g);
    let xh0 = with_angle(&mut rng, g, 1.0);
    let mut worst = 0.0f64;
    let mut sup = 0.0f64;
    for obs in [
        gradient_observer(Handedness::RightInvariant, f.clone(), m.clone()).unwrap(),
        gradient_like_observer(Handedness::RightInvariant, f, m).unwrap(),
    ] {
        match simulate_coupled(&sys, &obs, &ch, &x0, &xh0, &cfg(h), horizon) {
            Ok(run) => {
                let d = &run.diagnostics;
                worst = worst.max(d.noise_residual.unwrap_or(f64::NAN));
                sup = sup.max(d.cost.iter().skip(d.cost.len() / 2).cloned().fold(0.0, f64::max));
            }
            Err(e) => r.fail(e),
        }
    }
    r.at_most("SE(3) noise residual", worst, h + NOISE_SLACK);
    r.at_most("SE(3) sup cost over t in [50, 100]", sup, NOISY_COST_BOUND);
    r.done()
}

fn determinism() -> Outcome {
    let mut r = Report::new();
    let mut files: Vec<PathBuf> = std::fs::read_dir(scenarios_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let runs: Vec<_> = [0, 1]
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let status = Command::new(env!("CARGO_BIN_EXE_lieobs"))
                .arg("batch")
                .arg(scenarios_dir())
                .arg("--out")
                .arg(dir.path())
                .output()
                .unwrap();
            (dir, status)
        })
        .into();
    for (_, out) in &runs {
        if !out.status.success() {
            r.fail(format!("batch exited with {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
        }
    }
    let mut identical = 0;
    for f in &files {
        let name = scenario::load(f).unwrap().name;
        let read = |d: &Path| std::fs::read(d.join(&name).join("trajectory.csv")).ok();
        match (read(runs[0].0.path()), read(runs[1].0.path())) {
            (Some(a), Some(b)) if a == b && !a.is_empty() => identical += 1,
            _ => r.fail(format!("{name}: CSV differs or missing")),
        }
    }
    r.parts.push(format!("{identical}/{} bundled scenarios byte-identical", files.len()));
    r.passed &= identical == files.len() && !files.is_empty();
    r.done()
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("group kernel", group_kernel),
        ("gradient correctness", gradient_correctness),
        ("synchrony", synchrony),
        ("internal model", internal_model),
        ("error autonomy", error_autonomy),
        ("convergence", convergence),
        ("local exponential rate", local_rate),
        ("bi-invariant passivity", passivity),
        ("coincidence", coincidence),
        ("cost constructions", cost_constructions),
        ("noisy diagnostics", noisy_diagnostics),
        ("determinism", determinism),
    ];
    let outcomes: Vec<Outcome> = thread::scope(|s| {
        let hs: Vec<_> = criteria.iter().map(|&(_, f)| s.spawn(f)).collect();
        hs.into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|p| Outcome {
                    passed: false,
                    detail: format!("panicked: {p:?}"),
                })
            })
            .collect()
    });
    let mut failed = 0;
    for (i, ((name, _), o)) in criteria.iter().zip(&outcomes).enumerate() {
        println!("criterion {:>2} {} {:<24} {}", i + 1, if o.passed { "PASS" } else { "FAIL" }, name, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
