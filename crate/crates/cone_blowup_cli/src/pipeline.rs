use std::path::Path;

use anyhow::{anyhow, Result};
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::output::write_json;
use crate::stages;

/// Snapshots kept by the evolution stage.
pub const SNAPSHOTS: usize = 10;

/// A stage failure, with the stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: anyhow::Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage {} failed: {:#}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {}

pub struct PipelineRun {
    pub report: Value,
    pub failure: Option<StageError>,
}

struct Report {
    stages: Map<String, Value>,
}

impl Report {
    fn record(&mut self, name: &str, v: Value) {
        self.stages.insert(name.to_string(), v);
    }
}

fn at<T>(stage: &'static str, r: Result<T>) -> Result<T, StageError> {
    r.map_err(|error| StageError { stage, error })
}

fn stages(rc: &RunConfig, rep: &mut Report) -> Result<(), StageError> {
    let out = &rc.out;
    let gs = at("ground-state", stages::ground_state(rc))?;
    rep.record("ground_state", at("ground-state", stages::write_ground_state(&gs, &out.join("q.csv")))?);
    let op = at("spectral", stages::operator(&gs))?;
    rep.record("spectral", at("spectral", stages::write_spectral(&op, rc, &out.join("potential.csv")))?);
    let ip = at("inner", stages::inner(rc, op))?;
    rep.record("inner", at("inner", stages::write_inner(&ip, rc.t, &out.join("vin.csv")))?);
    let ss = at("self-similar", stages::self_similar(&ip))?;
    rep.record("self_similar", at("self-similar", stages::write_self_similar(&ss, rc.t, &out.join("wss.csv")))?);
    let rp = at("remote", stages::remote(&ss, rc))?;
    rep.record("remote", at("remote", stages::write_remote(&rp, &out.join("gk.csv")))?);
    let ca = at("compose", stages::composite(ip, ss, rp))?;
    rep.record("compose", at("compose", stages::write_composite(&ca, rc.t, true, &out.join("uN.csv")))?);
    rep.record("evolve", at("evolve", stages::run_evolution(&ca, rc, SNAPSHOTS, &out.join("traj")))?);
    Ok(())
}

/// Run every stage in order into `rc.out`, then write `report.json`. The
/// report is written even when a stage fails, with the failing stage named.
pub fn run_pipeline(rc: &RunConfig) -> Result<PipelineRun> {
    std::fs::create_dir_all(&rc.out).map_err(|e| anyhow!("creating {}: {e}", rc.out.display()))?;
    std::fs::write(rc.out.join("run.cfg"), rc.to_text())?;
    let mut rep = Report { stages: Map::new() };
    let failure = stages(rc, &mut rep).err();
    let mut report = json!({
        "config": rc.to_text().lines().collect::<Vec<_>>(),
        "stages": Value::Object(rep.stages),
        "status": if failure.is_some() { "failed" } else { "ok" },
    });
    if let Some(f) = &failure {
        report["failed_stage"] = json!(f.stage);
        report["error"] = json!(format!("{:#}", f.error));
    }
    write_json(&rc.out.join("report.json"), &report)?;
    Ok(PipelineRun { report, failure })
}

/// Cartesian product of `key=v1,v2,...` variations applied to `base`; run
/// `i` writes into `out/run_{i:03}`.
pub fn sweep_configs(base: &RunConfig, vary: &[String], out: &Path) -> Result<Vec<(RunConfig, Vec<(String, String)>)>> {
    let mut runs: Vec<(RunConfig, Vec<(String, String)>)> = vec![(base.clone(), Vec::new())];
    for spec in vary {
        let (key, vals) = spec.split_once('=').ok_or_else(|| anyhow!("expected key=v1,v2,..., got {spec:?}"))?;
        let (key, vals) = (key.trim(), vals.split(',').map(str::trim).collect::<Vec<_>>());
        if key == "out" {
            return Err(anyhow!("out cannot be swept"));
        }
        let mut next = Vec::new();
        for (rc, params) in &runs {
            for v in &vals {
                let mut rc = rc.clone();
                rc.set(key, v).map_err(|e| anyhow!(e))?;
                let mut p = params.clone();
                p.push((key.to_string(), v.to_string()));
                next.push((rc, p));
            }
        }
        runs = next;
    }
    for (i, (rc, _)) in runs.iter_mut().enumerate() {
        rc.out = out.join(format!("run_{i:03}"));
        rc.validate()?;
    }
    Ok(runs)
}

/// Run the sweep with at most `jobs` pipelines at a time and write
/// `out/sweep.json`. Returns the number of failed runs.
pub fn run_sweep(base: &RunConfig, vary: &[String], jobs: usize, out: &Path) -> Result<usize> {
    let runs = sweep_configs(base, vary, out)?;
    let mut results: Vec<Option<Result<PipelineRun>>> = (0..runs.len()).map(|_| None).collect();
    for (chunk, slots) in runs.chunks(jobs.max(1)).zip(results.chunks_mut(jobs.max(1))) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|(rc, _)| s.spawn(move || run_pipeline(rc))).collect();
            for (slot, h) in slots.iter_mut().zip(handles) {
                *slot = Some(h.join().unwrap_or_else(|_| Err(anyhow!("pipeline thread panicked"))));
            }
        });
    }
    let mut failed = 0;
    let entries: Vec<Value> = runs
        .iter()
        .zip(results)
        .map(|((rc, params), r)| {
            let params: Map<String, Value> = params.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
            let (status, stage, error) = match r {
                Some(Ok(PipelineRun { failure: None, .. })) => ("ok", None, None),
                Some(Ok(PipelineRun { failure: Some(f), .. })) => ("failed", Some(f.stage), Some(format!("{:#}", f.error))),
                Some(Err(e)) => ("failed", None, Some(format!("{e:#}"))),
                None => ("failed", None, Some("not run".to_string())),
            };
            failed += (status != "ok") as usize;
            json!({
                "dir": rc.out.file_name().map(|s| s.to_string_lossy().into_owned()),
                "params": params,
                "status": status,
                "failed_stage": stage,
                "error": error,
            })
        })
        .collect();
    write_json(&out.join("sweep.json"), &json!({ "runs": entries }))?;
    Ok(failed)
}
