//! Run configuration: the JSON-mirrored [`RunConfig`], the named presets,
//! cross-field validation, and the canonical echo used by `--print-config`.
//!
//! The canonical echo is a fixpoint: feeding the printed JSON back in as a
//! config file reproduces the identical resolved configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::diffusion::SigmaPolicy;
use crate::error::{Error, Result};
use crate::sample::{InnerSolver, WeightFn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Panorama,
    Inpaint,
    Ring,
    Divergence,
    Ablation,
}

impl Task {
    pub fn parse(name: &str) -> Result<Task> {
        match name {
            "panorama" => Ok(Task::Panorama),
            "inpaint" => Ok(Task::Inpaint),
            "ring" => Ok(Task::Ring),
            "divergence" => Ok(Task::Divergence),
            "ablation" => Ok(Task::Ablation),
            other => Err(Error::config(format!(
                "unknown task '{other}' (expected panorama, inpaint, ring, divergence, or ablation)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Task::Panorama => "panorama",
            Task::Inpaint => "inpaint",
            Task::Ring => "ring",
            Task::Divergence => "divergence",
            Task::Ablation => "ablation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Reverse,
    Ds,
    Sds,
    Stochsync,
    Sdi,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Reverse => "reverse",
            Algorithm::Ds => "ds",
            Algorithm::Sds => "sds",
            Algorithm::Stochsync => "stochsync",
            Algorithm::Sdi => "sdi",
        }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// The StochSync component toggles (ablation axes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toggles {
    pub max_sigma: bool,
    pub multistep_x0: bool,
    pub nonoverlap_views: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub algorithm: Algorithm,
    /// σ policy for the ds algorithm; stochsync always runs at maximum σ.
    pub sigma_policy: SigmaPolicy,
    pub t_start: u32,
    pub t_stop: u32,
    /// Outer grid points (transitions = points − 1).
    pub n_outer_steps: u32,
    pub inner_solver: InnerSolver,
    pub inner_steps: u32,
    /// Scale inner steps by t/t_start (floor 4).
    pub decay_inner_steps: bool,
    pub toggles: Toggles,
    pub sds_step_size: WeightFn,
    pub sds_iters: u32,
    /// RePaint-style boundary blending over the last k outer steps.
    pub blend_last_k: u32,
    /// Optional noise-and-refine pass after the main run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_restart: Option<u32>,
}

/// Canonical-grid and view-set geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutConfig {
    pub canonical_height: usize,
    pub canonical_width: usize,
    pub view_width: usize,
    pub view_height: usize,
    pub n_views: usize,
    pub fov_deg: f64,
    pub ring_len: usize,
    pub ring_window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitFlags {
    pub images: bool,
    pub csv: bool,
    pub trace: bool,
}

impl EmitFlags {
    /// Parse `--emit images,csv,trace` (any subset; empty disables all).
    pub fn parse(list: &str) -> Result<EmitFlags> {
        let mut flags = EmitFlags { images: false, csv: false, trace: false };
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "images" => flags.images = true,
                "csv" => flags.csv = true,
                "trace" => flags.trace = true,
                other => {
                    return Err(Error::config(format!(
                        "unknown emit flag '{other}' (expected images, csv, trace)"
                    )))
                }
            }
        }
        Ok(flags)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub sampler: SamplerConfig,
    pub layout: LayoutConfig,
    /// Path to a mixture definition JSON; `null` = the task's built-in
    /// default mixture.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gmm: Option<PathBuf>,
    /// `"preset:tiling"` (non-overlapping azimuthal tilings from the layout)
    /// or a path to a JSON list of views.
    pub views: String,
    /// Output root. Excluded from the serialized config (and therefore from
    /// the config hash and run-id) so identical runs produce byte-identical
    /// artifacts wherever they are written; set it via `--out` or this field.
    #[serde(default = "default_out_dir", skip_serializing)]
    pub out_dir: PathBuf,
    pub seed: u64,
    pub emit: EmitFlags,
    /// Conditioning label (mixture component filter).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
    /// Remote denoiser endpoint; replaces the local mixture when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remote: Option<String>,
    /// Seed count for the experiment tasks (inpaint/divergence/ablation).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_seeds: Option<u64>,
    /// Step counts for the divergence task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_counts: Option<Vec<u32>>,
    /// Mask/measurement for the inpaint task (defaults to the built-in
    /// 2-pixel instance).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<Vec<f64>>,
}

/// Schedule length used by the single-run tasks.
pub const DEFAULT_T_MAX: u32 = 1000;

impl RunConfig {
    /// The named presets: `paper-default`, `fast`, `toy`.
    pub fn preset(name: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig {
            task: Task::Panorama,
            sampler: SamplerConfig {
                algorithm: Algorithm::Stochsync,
                sigma_policy: SigmaPolicy::Max,
                t_start: 900,
                t_stop: 270,
                n_outer_steps: 25,
                inner_solver: InnerSolver::Ddim,
                inner_steps: 50,
                decay_inner_steps: true,
                toggles: Toggles {
                    max_sigma: true,
                    multistep_x0: true,
                    nonoverlap_views: true,
                },
                sds_step_size: WeightFn::OneMinusAlphaBar,
                sds_iters: 2000,
                blend_last_k: 2,
                t_restart: None,
            },
            layout: LayoutConfig {
                canonical_height: 128,
                canonical_width: 256,
                view_width: 64,
                view_height: 64,
                n_views: 5,
                fov_deg: 72.0,
                ring_len: 256,
                ring_window: 64,
            },
            gmm: None,
            views: "preset:tiling".to_string(),
            out_dir: PathBuf::from("out"),
            seed: 0,
            emit: EmitFlags { images: true, csv: true, trace: true },
            condition: None,
            remote: None,
            n_seeds: None,
            step_counts: None,
            mask: None,
            measurement: None,
        };
        match name {
            "paper-default" => {}
            "fast" => {
                cfg.sampler.t_stop = 700;
                cfg.sampler.n_outer_steps = 8;
            }
            "toy" => {
                cfg.sampler.t_start = 1000;
                cfg.sampler.t_stop = 0;
                cfg.layout.canonical_height = 20;
                cfg.layout.canonical_width = 40;
                cfg.layout.view_width = 8;
                cfg.layout.view_height = 8;
                cfg.layout.ring_len = 32;
                cfg.layout.ring_window = 8;
            }
            other => {
                return Err(Error::config(format!(
                    "unknown preset '{other}' (expected paper-default, fast, or toy)"
                )))
            }
        }
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_json(&text)
    }

    /// Canonical JSON echo (`--print-config`): fixed field order, two-space
    /// indentation, trailing newline. Parsing this text reproduces `self`.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization is infallible") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sampler;
        if s.t_start == 0 || s.t_start <= s.t_stop {
            return Err(Error::config("requires T ≥ t_start > t_stop ≥ 0"));
        }
        if s.t_start > DEFAULT_T_MAX && self.task != Task::Divergence {
            return Err(Error::config(format!(
                "t_start {} exceeds the schedule length {DEFAULT_T_MAX}",
                s.t_start
            )));
        }
        if s.n_outer_steps < 1 {
            return Err(Error::config("n_outer_steps must be ≥ 1"));
        }
        if s.inner_steps < 1 {
            return Err(Error::config("inner_steps must be ≥ 1"));
        }
        if s.toggles.nonoverlap_views && !s.toggles.max_sigma {
            return Err(Error::config(
                "invalid combination: nonoverlap_views requires max_sigma",
            ));
        }
        if s.algorithm == Algorithm::Stochsync && !s.toggles.max_sigma {
            return Err(Error::config(
                "invalid combination: the stochsync algorithm requires the max_sigma toggle",
            ));
        }
        if s.algorithm == Algorithm::Sdi && s.toggles.nonoverlap_views {
            return Err(Error::config(
                "invalid combination: inversion-based resampling cannot alternate view sets \
                 (deterministic inversion carries state across steps)",
            ));
        }
        if let Some(tr) = s.t_restart {
            if tr > s.t_start {
                return Err(Error::config("t_restart must not exceed t_start"));
            }
        }
        let l = &self.layout;
        if l.canonical_width != 2 * l.canonical_height {
            return Err(Error::config("canonical grid requires width = 2 × height"));
        }
        if l.view_width < 1 || l.view_height < 1 || l.n_views < 1 {
            return Err(Error::config("view geometry must be positive"));
        }
        if self.views.starts_with("preset:") && self.views != "preset:tiling" {
            return Err(Error::config(format!(
                "unknown views preset '{}' (expected preset:tiling or a file path)",
                self.views
            )));
        }
        if self.views == "preset:tiling"
            && (l.n_views as f64 * l.fov_deg - 360.0).abs() > 1e-9
            && self.task == Task::Panorama
        {
            return Err(Error::config(
                "tiling views require n_views × fov_deg = 360",
            ));
        }
        if self.task == Task::Ring
            && s.toggles.nonoverlap_views
            && (l.ring_window == 0 || l.ring_len % l.ring_window != 0)
        {
            return Err(Error::config("ring tiling requires window > 0 dividing ring_len"));
        }
        if let (Some(mask), Some(y)) = (&self.mask, &self.measurement) {
            if mask.len() != y.len() {
                return Err(Error::config("mask and measurement lengths differ"));
            }
        }
        Ok(())
    }
}
