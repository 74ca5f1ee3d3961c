//! Run orchestration: resolves a [`RunConfig`] into denoiser + layout +
//! sampler, executes the task, and writes all artifacts under a fresh
//! `out_dir/{run-id}/` directory with a content manifest.
//!
//! Worker parallelism is capped by the `SYNCSAMPLER_THREADS` environment
//! variable (a dedicated rayon pool); results are identical for any thread
//! count. The trace CSV contains wall-clock columns and is therefore the one
//! artifact excluded from byte-reproducibility claims — disable it
//! (`--emit images,csv`) when comparing runs bit-for-bit.

use std::path::PathBuf;

use crate::artifact;
use crate::config::{Algorithm, LayoutConfig, RunConfig, Task, DEFAULT_T_MAX};
use crate::denoise::{Denoiser, Gmm};
use crate::diffusion::{Schedule, SigmaPolicy};
use crate::error::{Error, Result};
use crate::experiment::{
    run_ablation_grid, run_divergence_sweep, run_inpainting_experiment, seam_score_equirect,
    seam_score_ring, AblationCfg, DivergenceCfg, ExperimentReport, InpaintCfg, Row,
};
use crate::project::{
    equirect_parity_views, ring_parity_offsets, EquirectDims, Projector, View,
};
use crate::remote::RemoteDenoiser;
use crate::rng::RngTree;
use crate::sample::{
    sdedit_refine, sds, sync_sample, CorruptKind, SdsOpts, SyncSpec, TraceRow,
};

/// Outcome of one run, for the one-line console summary.
#[derive(Debug)]
pub struct RunSummary {
    pub run_id: String,
    pub dir: PathBuf,
    pub metrics: Vec<(String, f64)>,
}

impl RunSummary {
    pub fn line(&self, task: &str) -> String {
        let mut s = format!("run {} task={task}", self.run_id);
        for (k, v) in &self.metrics {
            s.push_str(&format!(" {k}={v}"));
        }
        s.push_str(&format!(" dir={}", self.dir.display()));
        s
    }
}

struct TaskOutcome {
    rows: Vec<Row>,
    trace: Option<Vec<TraceRow>>,
    /// (stem, values, width, height)
    images: Vec<(String, Vec<f64>, usize, usize)>,
    metrics: Vec<(String, f64)>,
}

fn parse_thread_count(v: &str) -> Result<usize> {
    v.trim().parse().map_err(|_| {
        Error::config(format!("SYNCSAMPLER_THREADS must be an integer, got '{v}'"))
    })
}

/// Execute a validated configuration end to end.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    match std::env::var("SYNCSAMPLER_THREADS") {
        Ok(v) if !v.trim().is_empty() => {
            let n = parse_thread_count(&v)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::runtime(format!("thread pool: {e}")))?;
            pool.install(|| execute(cfg))
        }
        _ => execute(cfg),
    }
}

fn execute(cfg: &RunConfig) -> Result<RunSummary> {
    let canonical = cfg.to_canonical_json();
    let hash = artifact::config_hash(&canonical);
    let (dir, run_id) = artifact::allocate_run_dir(&cfg.out_dir, &hash)?;
    std::fs::write(dir.join("config.json"), &canonical)?;

    let out = match cfg.task {
        Task::Panorama | Task::Ring => single_run(cfg)?,
        Task::Inpaint => inpaint_task(cfg)?,
        Task::Divergence => divergence_task(cfg)?,
        Task::Ablation => ablation_task(cfg)?,
    };

    if cfg.emit.csv {
        artifact::write_rows_csv(&dir.join("results.csv"), &out.rows)?;
    }
    if cfg.emit.trace {
        if let Some(trace) = &out.trace {
            artifact::write_trace_csv(&dir.join("trace.csv"), trace)?;
        }
    }
    if cfg.emit.images {
        for (stem, values, w, h) in &out.images {
            artifact::write_ppm_with_sidecar(&dir, stem, values, *w, *h)?;
        }
    }
    artifact::write_manifest(&dir)?;
    Ok(RunSummary { run_id, dir, metrics: out.metrics })
}

// ---------------------------------------------------------------------------
// Denoiser and layout resolution
// ---------------------------------------------------------------------------

fn load_gmm_file(path: &std::path::Path) -> Result<Gmm> {
    let text = std::fs::read_to_string(path)?;
    Gmm::from_json(&text)
}

/// Local mixture for a task when no definition file is given.
fn default_gmm(task: Task, dim: usize) -> Gmm {
    match task {
        Task::Panorama | Task::Ring => Gmm::bistable(dim, 1.0, 0.01),
        Task::Inpaint => InpaintCfg::default().gmm,
        Task::Divergence => DivergenceCfg::default().gmm,
        Task::Ablation => AblationCfg::default().gmm,
    }
}

/// Resolve the denoiser: a remote endpoint when configured, otherwise the
/// (optionally conditioned) local mixture. The local mixture is also
/// returned separately for NLL metrics — `None` when remote.
fn build_denoiser(
    cfg: &RunConfig,
    dim: usize,
) -> Result<(Box<dyn Denoiser>, Option<Gmm>)> {
    if let Some(endpoint) = &cfg.remote {
        return Ok((
            Box::new(RemoteDenoiser::new(endpoint, dim, cfg.condition.clone())),
            None,
        ));
    }
    let mut gmm = match &cfg.gmm {
        Some(path) => load_gmm_file(path)?,
        None => default_gmm(cfg.task, dim),
    };
    if let Some(label) = &cfg.condition {
        gmm = gmm.conditioned(label)?;
    }
    if gmm.dim() != dim {
        return Err(Error::config(format!(
            "mixture dimension {} does not match the instance dimension {dim}",
            gmm.dim()
        )));
    }
    Ok((Box::new(gmm.clone()), Some(gmm)))
}

fn load_views_file(path: &str, l: &LayoutConfig) -> Result<Vec<View>> {
    let text = std::fs::read_to_string(path)?;
    let views: Vec<View> = serde_json::from_str(&text)?;
    if views.is_empty() {
        return Err(Error::config("view list file contains no views"));
    }
    for v in &views {
        v.validate()?;
        if v.width != l.view_width || v.height != l.view_height {
            return Err(Error::config(
                "view resolutions in the file must match the layout",
            ));
        }
    }
    Ok(views)
}

/// Build the projector for a single-run task. Returns the projector, the
/// instance dimension, and the canonical image shape (width, height).
fn build_layout(cfg: &RunConfig) -> Result<(Projector, usize, (usize, usize))> {
    let l = &cfg.layout;
    let alternate = cfg.sampler.toggles.nonoverlap_views;
    match cfg.task {
        Task::Ring => {
            let proj = if alternate {
                Projector::ring_alternating(l.ring_len, l.ring_window)?
            } else {
                Projector::ring_fixed(
                    l.ring_len,
                    l.ring_window,
                    ring_parity_offsets(0, l.ring_len, l.ring_window)?,
                )?
            };
            Ok((proj, l.ring_window, (l.ring_len, 1)))
        }
        Task::Panorama => {
            let dims = EquirectDims::new(l.canonical_height, l.canonical_width)?;
            let proj = if cfg.views == "preset:tiling" {
                if alternate {
                    Projector::equirect_alternating(
                        dims,
                        l.n_views,
                        l.fov_deg,
                        l.view_width,
                        l.view_height,
                    )?
                } else {
                    Projector::equirect_fixed(
                        dims,
                        equirect_parity_views(
                            0,
                            l.n_views,
                            l.fov_deg,
                            l.view_width,
                            l.view_height,
                        )?,
                    )?
                }
            } else {
                if alternate {
                    return Err(Error::config(
                        "view alternation requires the tiling preset, not a view file",
                    ));
                }
                Projector::equirect_fixed(dims, load_views_file(&cfg.views, l)?)?
            };
            Ok((proj, l.view_width * l.view_height, (l.canonical_width, l.canonical_height)))
        }
        _ => Err(Error::runtime("build_layout called for an experiment task")),
    }
}

fn sync_spec_from(cfg: &RunConfig) -> Result<SyncSpec> {
    let s = &cfg.sampler;
    let policy = match s.algorithm {
        Algorithm::Stochsync | Algorithm::Sdi => SigmaPolicy::Max,
        Algorithm::Reverse => s.sigma_policy,
        Algorithm::Ds => {
            if s.toggles.max_sigma {
                SigmaPolicy::Max
            } else {
                s.sigma_policy
            }
        }
        Algorithm::Sds => return Err(Error::runtime("sds does not use the sync loop")),
    };
    let single_view = s.algorithm == Algorithm::Reverse;
    Ok(SyncSpec {
        policy,
        corrupt: if s.algorithm == Algorithm::Sdi {
            CorruptKind::Invert
        } else {
            CorruptKind::Stochastic
        },
        multistep: !single_view && s.toggles.multistep_x0,
        inner_steps: s.inner_steps,
        decay_inner: s.decay_inner_steps,
        solver: s.inner_solver,
        alternate: !single_view && s.toggles.nonoverlap_views && s.algorithm != Algorithm::Sdi,
        t_start: s.t_start,
        t_stop: s.t_stop,
        n_outer_steps: s.n_outer_steps,
        blend_last_k: if single_view { 0 } else { s.blend_last_k },
        init_z: None,
        record_states: false,
    })
}

// ---------------------------------------------------------------------------
// Single-run tasks (panorama, ring)
// ---------------------------------------------------------------------------

fn single_run(cfg: &RunConfig) -> Result<TaskOutcome> {
    let sched = Schedule::linear(DEFAULT_T_MAX);
    let (mut proj, inst_dim, mut image_shape) = build_layout(cfg)?;
    if cfg.sampler.algorithm == Algorithm::Reverse {
        // The plain reverse process runs instance-space only: a single
        // identity view over the denoiser's own dimension.
        proj = Projector::Identity { d: inst_dim };
        image_shape = match cfg.task {
            Task::Panorama => (cfg.layout.view_width, cfg.layout.view_height),
            _ => (inst_dim, 1),
        };
    }
    let (den, local_gmm) = build_denoiser(cfg, inst_dim)?;
    let tree = RngTree::new(cfg.seed);
    let task = cfg.task.name();
    let alg = cfg.sampler.algorithm.name();

    let (z, trace): (Vec<f64>, Option<Vec<TraceRow>>) =
        if cfg.sampler.algorithm == Algorithm::Sds {
            let opts = SdsOpts {
                weight: cfg.sampler.sds_step_size,
                n_iters: cfg.sampler.sds_iters,
                t_max_draw: cfg.sampler.t_start,
                init: None,
            };
            let out = sds(den.as_ref(), &sched, &proj, &opts, &tree)?;
            let rows: Vec<Row> = out
                .iters
                .iter()
                .map(|it| Row {
                    experiment: task.into(),
                    variant: alg.into(),
                    seed: cfg.seed,
                    step: it.iter as u64,
                    t: it.t,
                    metric: "sds_loss".into(),
                    value: it.loss,
                })
                .collect();
            return finish_single(cfg, z_metrics(&out.z, &proj, local_gmm.as_ref())?, rows, out.z, None, image_shape);
        } else {
            let mut spec = sync_spec_from(cfg)?;
            if cfg.sampler.algorithm == Algorithm::Reverse {
                spec.multistep = false;
                spec.alternate = false;
            }
            let out = sync_sample(den.as_ref(), &sched, &proj, &spec, &tree)?;
            let mut trace = out.trace;
            let mut z = out.z;
            if let Some(tr) = cfg.sampler.t_restart {
                if tr > 0 && cfg.sampler.algorithm != Algorithm::Reverse {
                    let refined = sdedit_refine(den.as_ref(), &sched, &proj, &z, tr, &spec, &tree)?;
                    let offset = trace.len();
                    trace.extend(refined.trace.into_iter().map(|mut r| {
                        r.step += offset;
                        r
                    }));
                    z = refined.z;
                }
            }
            (z, Some(trace))
        };

    let mut rows: Vec<Row> = Vec::new();
    if let Some(trace) = &trace {
        for r in trace {
            let mean_resid = r.view_residuals.iter().sum::<f64>()
                / r.view_residuals.len().max(1) as f64;
            rows.push(Row {
                experiment: task.into(),
                variant: alg.into(),
                seed: cfg.seed,
                step: r.step as u64,
                t: r.t,
                metric: "mean_view_residual".into(),
                value: mean_resid,
            });
        }
    }
    let metrics = z_metrics(&z, &proj, local_gmm.as_ref())?;
    finish_single(cfg, metrics, rows, z, trace, image_shape)
}

fn finish_single(
    cfg: &RunConfig,
    metrics: Vec<(String, f64)>,
    mut rows: Vec<Row>,
    z: Vec<f64>,
    trace: Option<Vec<TraceRow>>,
    image_shape: (usize, usize),
) -> Result<TaskOutcome> {
    for (k, v) in &metrics {
        rows.push(Row {
            experiment: cfg.task.name().into(),
            variant: cfg.sampler.algorithm.name().into(),
            seed: cfg.seed,
            step: 0,
            t: 0,
            metric: k.clone(),
            value: *v,
        });
    }
    Ok(TaskOutcome {
        rows,
        trace,
        images: vec![("canonical".to_string(), z, image_shape.0, image_shape.1)],
        metrics,
    })
}

/// Final-state metrics for single-run tasks: seam score over the parity-0
/// boundaries and (with a local mixture) mean per-view NLL over all views.
fn z_metrics(
    z: &[f64],
    proj: &Projector,
    gmm: Option<&Gmm>,
) -> Result<Vec<(String, f64)>> {
    let mut metrics = Vec::new();
    match proj {
        Projector::Ring { n, window, offsets, .. } => {
            if let Ok(seam) = seam_score_ring(z, *n, offsets, *window) {
                metrics.push(("seam_score".to_string(), seam));
            }
        }
        Projector::Equirect { dims, views, .. } => {
            if let Ok(seam) = seam_score_equirect(z, *dims, views) {
                metrics.push(("seam_score".to_string(), seam));
            }
        }
        _ => {}
    }
    if let Some(gmm) = gmm {
        let mut maps = proj.maps(0)?;
        if proj.alternates() {
            maps.extend(proj.maps(1)?);
        }
        if maps.iter().all(|m| m.n_pixels() == gmm.dim()) {
            let nll = maps.iter().map(|m| gmm.nll(&m.project(z))).sum::<f64>()
                / maps.len() as f64;
            metrics.push(("mean_view_nll".to_string(), nll));
        }
    }
    Ok(metrics)
}

// ---------------------------------------------------------------------------
// Experiment tasks
// ---------------------------------------------------------------------------

fn outcome_from_report(
    report: ExperimentReport,
    image_shape: Option<(usize, usize)>,
) -> TaskOutcome {
    let images = match image_shape {
        Some((w, h)) => report
            .finals
            .iter()
            .map(|(variant, z)| (format!("final_{variant}"), z.clone(), w, h))
            .collect(),
        None => Vec::new(),
    };
    TaskOutcome {
        rows: report.rows,
        trace: None,
        images,
        metrics: report.summary.into_iter().collect(),
    }
}

fn inpaint_task(cfg: &RunConfig) -> Result<TaskOutcome> {
    let mut ic = InpaintCfg::default();
    if let Some(path) = &cfg.gmm {
        ic.gmm = load_gmm_file(path)?;
    }
    if let Some(label) = &cfg.condition {
        ic.gmm = ic.gmm.conditioned(label)?;
    }
    if let Some(mask) = &cfg.mask {
        ic.mask = mask.clone();
    }
    if let Some(y) = &cfg.measurement {
        ic.y = y.clone();
    }
    ic.t_start = cfg.sampler.t_start;
    ic.t_stop = cfg.sampler.t_stop;
    ic.n_outer_steps = cfg.sampler.n_outer_steps;
    ic.inner_steps = cfg.sampler.inner_steps;
    ic.n_seeds = cfg.n_seeds.unwrap_or(ic.n_seeds);
    ic.seed0 = cfg.seed;
    let d = ic.mask.len();
    let report = run_inpainting_experiment(&ic)?;
    Ok(outcome_from_report(report, Some((d, 1))))
}

fn divergence_task(cfg: &RunConfig) -> Result<TaskOutcome> {
    let mut dc = DivergenceCfg::default();
    if let Some(path) = &cfg.gmm {
        dc.gmm = load_gmm_file(path)?;
    }
    if let Some(counts) = &cfg.step_counts {
        if counts.is_empty() {
            return Err(Error::config("step_counts must be nonempty"));
        }
        dc.step_counts = counts.clone();
    }
    dc.n_seeds = cfg.n_seeds.unwrap_or(dc.n_seeds);
    dc.seed0 = cfg.seed;
    let report = run_divergence_sweep(&dc)?;
    Ok(outcome_from_report(report, None))
}

fn ablation_task(cfg: &RunConfig) -> Result<TaskOutcome> {
    let mut ac = AblationCfg::default();
    ac.t_start = cfg.sampler.t_start;
    ac.n_outer_steps = cfg.sampler.n_outer_steps;
    ac.inner_steps = cfg.sampler.inner_steps;
    ac.n_seeds = cfg.n_seeds.unwrap_or(ac.n_seeds);
    ac.seed0 = cfg.seed;
    let dims = ac.dims;
    let report = run_ablation_grid(&ac)?;
    Ok(outcome_from_report(report, Some((dims.wc, dims.hc))))
}
