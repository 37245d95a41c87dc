//! Running a scenario and writing its outputs.

use std::fs;
use std::path::{Path, PathBuf};

use lie_observer::{simulate_coupled, CoupledRun, ObserverKind};
use serde_json::json;

use crate::rate::{fit_exponential_rate, RateReport};
use crate::scenario::{self, Scenario};
use crate::SimError;

/// Group residual above which a run is reported as an invariant failure.
pub const RESIDUAL_LIMIT: f64 = 1e-9;

/// Largest tolerated drift of the canonical error under a synchronous
/// observer with an exact channel.
pub const SYNCHRONY_LIMIT: f64 = 1e-9;

#[derive(Debug)]
pub struct RunSummary {
    pub name: String,
    pub dir: PathBuf,
    pub final_cost: f64,
    pub rate: Option<RateReport>,
    pub run: CoupledRun<f64>,
}

/// Loads, runs and writes one scenario file below `out_root`.
pub fn run_file(path: &Path, out_root: &Path) -> Result<RunSummary, SimError> {
    let s = scenario::load(path)?;
    run_scenario(&s, out_root)
}

/// Runs `s` and writes `trajectory.csv`, `diagnostics.json` and, with noise,
/// `noise_trace.json` to `out_root/<name>/`.
///
/// Outputs are written before an invariant failure is returned, so the
/// offending run can be inspected.
pub fn run_scenario(s: &Scenario, out_root: &Path) -> Result<RunSummary, SimError> {
    let dir = out_root.join(&s.name);
    fs::create_dir_all(&dir).map_err(|e| SimError::io(&dir, e))?;
    if let Some(dump) = &s.noise_dump {
        let p = dir.join("noise_trace.json");
        let text = serde_json::to_string_pretty(dump).expect("serializable");
        fs::write(&p, text).map_err(|e| SimError::io(&p, e))?;
    }

    let run = match simulate_coupled(&s.system, &s.observer, &s.channel, &s.x0, &s.xhat0, &s.config, s.horizon) {
        Ok(r) => r,
        Err(lie_observer::Error::Diverged { time, cost }) => {
            let d = json!({ "status": "diverged", "time": time, "cost": cost });
            write_json(&dir.join("diagnostics.json"), &d)?;
            return Err(SimError::Diverged { time, cost });
        }
        Err(e) => return Err(e.into()),
    };

    write_trajectory(&dir.join("trajectory.csv"), &run, s.output.stride)?;

    let d = &run.diagnostics;
    let times = &run.system.times;
    let rate = fit_exponential_rate(times, &d.cost, s.output.tail_fraction);
    let final_cost = *d.cost.last().expect("grid has at least one point");
    let failures = invariant_failures(s, &run);

    let tail_start = times.partition_point(|&t| t < s.horizon * (1.0 - s.output.tail_fraction));
    let tail = &d.cost[tail_start.min(d.cost.len() - 1)..];
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let tail_max = tail.iter().cloned().fold(0.0, f64::max);

    let diag = json!({
        "status": if failures.is_empty() { "ok" } else { "invariant_failure" },
        "name": s.name,
        "group": s.group.name(),
        "observer": s.observer.kind().name(),
        "error_side": format!("{:?}", d.side).to_lowercase(),
        "cost_name": d.cost_name,
        "steps": times.len() - 1,
        "final_cost": final_cost,
        "final_other_cost": d.other_cost.last(),
        "monotonicity_violations": d.monotonicity_violations,
        "other_monotonicity_violations": d.other_monotonicity_violations,
        "synchrony_defect": d.synchrony_defect,
        "max_residual": d.max_residual,
        "noise_residual": d.noise_residual,
        "rate": match &rate {
            Ok(r) => serde_json::to_value(r).expect("serializable"),
            Err(e) => json!({ "error": e.to_string() }),
        },
        "tail": { "fraction": s.output.tail_fraction, "mean_cost": tail_mean, "max_cost": tail_max },
        "failures": failures,
    });
    write_json(&dir.join("diagnostics.json"), &diag)?;

    if !failures.is_empty() {
        return Err(SimError::Invariant(format!("{}: {}", s.name, failures.join("; "))));
    }
    Ok(RunSummary {
        name: s.name.clone(),
        dir,
        final_cost,
        rate: rate.ok(),
        run,
    })
}

fn invariant_failures(s: &Scenario, run: &CoupledRun<f64>) -> Vec<String> {
    let d = &run.diagnostics;
    let mut out = Vec::new();
    if !(d.max_residual <= RESIDUAL_LIMIT) {
        out.push(format!("group residual {:e} above {RESIDUAL_LIMIT:e}", d.max_residual));
    }
    if s.channel.is_exact() {
        if s.observer.kind() == ObserverKind::SynchronousOnly {
            if !(d.synchrony_defect <= SYNCHRONY_LIMIT) {
                out.push(format!("synchrony defect {:e} above {SYNCHRONY_LIMIT:e}", d.synchrony_defect));
            }
        } else if d.monotonicity_violations > 0 {
            out.push(format!("cost increased on {} steps", d.monotonicity_violations));
        }
    }
    out
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<(), SimError> {
    let text = serde_json::to_string_pretty(v).expect("serializable");
    fs::write(path, text + "\n").map_err(|e| SimError::io(path, e))
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_trajectory(path: &Path, run: &CoupledRun<f64>, stride: usize) -> Result<(), SimError> {
    let io = |e: csv::Error| SimError::Validation(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let n = run.system.states[0].matrix().nrows();
    let mut header = vec!["t".to_owned()];
    for prefix in ["x", "xhat"] {
        for i in 0..n {
            for j in 0..n {
                header.push(format!("{prefix}_{i}{j}"));
            }
        }
    }
    header.extend(["cost", "resid_x", "resid_xhat"].map(String::from));
    w.write_record(&header).map_err(io)?;

    let last = run.system.len() - 1;
    for k in (0..=last).filter(|&k| k % stride == 0 || k == last) {
        let (x, xh) = (&run.system.states[k], &run.observer.states[k]);
        let mut row = vec![num(run.system.times[k])];
        for m in [x.matrix(), xh.matrix()] {
            for i in 0..n {
                for j in 0..n {
                    row.push(num(m[(i, j)]));
                }
            }
        }
        row.push(num(run.diagnostics.cost[k]));
        row.push(num(x.residual()));
        row.push(num(xh.residual()));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| SimError::io(path, e))
}

/// Reads the `t` and `cost` columns of a trajectory CSV.
pub fn read_cost_series(path: &Path) -> Result<(Vec<f64>, Vec<f64>), SimError> {
    let bad = |m: String| SimError::Validation(format!("{}: {m}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => SimError::io(path, io),
        other => bad(format!("{other:?}")),
    })?;
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| bad(format!("no `{name}` column")))
    };
    let (ti, ci) = (col("t")?, col("cost")?);
    let (mut t, mut c) = (Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let parse = |i: usize| {
            rec.get(i)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| bad(format!("row {}: unreadable number", line + 2)))
        };
        t.push(parse(ti)?);
        c.push(parse(ci)?);
    }
    Ok((t, c))
}
