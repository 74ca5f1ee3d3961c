//! Stochasticity accelerates constrained sampling: the inpainting race.
//!
//! A bimodal prior, a measurement that pins two of three coordinates to one
//! mode, and three samplers started from the same latent per seed. The σ=0
//! sampler keeps a consistent noise estimate, so when its start commits to
//! the wrong mode it drifts only as fast as the anchor pulls; the maximum-σ
//! samplers redraw fresh noise each step and re-roll the mode until it
//! matches the measurement. The race metric is the first outer step whose
//! deterministic clean solve satisfies the measurement.
//!
//! Run with: cargo run --example inpainting

use syncsampler::experiment::{run_inpainting_experiment, InpaintCfg};

fn main() -> syncsampler::Result<()> {
    let cfg = InpaintCfg {
        n_seeds: 30,
        ..InpaintCfg::default()
    };
    println!(
        "mask {:?}, target {:?}, {} paired seeds, threshold {:.0e}\n",
        cfg.mask, cfg.y, cfg.n_seeds, cfg.threshold
    );
    let report = run_inpainting_experiment(&cfg)?;

    let s = &report.summary;
    let n = s["n_seeds"];
    println!("first step with measurement error < threshold (mean over seeds;");
    println!("runs that never cross count as {}):", cfg.n_outer_steps + 1);
    for v in ["zero", "max", "stochsync"] {
        println!("  {v:<10} {:8.1}", s[&format!("mean_steps_to_threshold_{v}")]);
    }
    println!("\npaired wins (strictly earlier crossing than sigma = 0):");
    for v in ["max", "stochsync"] {
        println!("  {v:<10} {:3.0} / {n:.0}", s[&format!("wins_{v}_vs_zero")]);
    }
    println!("\nfinal unobserved-coordinate NLL (lower = better mode agreement;");
    println!("the plain max-sigma variant ends on a noisy one-step estimate —");
    println!("the multi-step solve is what keeps stochsync's final state clean):");
    for v in ["zero", "max", "stochsync"] {
        println!("  {v:<10} {:8.2}", s[&format!("mean_final_nll_{v}")]);
    }

    // Show one race in detail. Pick the first seed with the typical outcome
    // — the frozen sampler never crosses within the race while fresh
    // resampling crosses in the first few dozen steps — from the per-seed
    // crossing rows. (Both samplers share each seed's starting latent, so a
    // start that happens to satisfy the measurement is a tie; seed 0 is one
    // of those and would show nothing.)
    let cross = |variant: &str, seed: u64| {
        report
            .rows
            .iter()
            .find(|r| r.metric == "steps_to_threshold" && r.variant == variant && r.seed == seed)
            .map(|r| r.value)
            .unwrap_or(f64::NAN)
    };
    let never = (cfg.n_outer_steps + 1) as f64;
    let showcase = (0..cfg.n_seeds as u64)
        .find(|&s| cross("zero", s) >= never && cross("max", s) < 40.0)
        .unwrap_or(0);
    let series = |variant: &str| -> Vec<(u64, u32, f64)> {
        report
            .rows
            .iter()
            .filter(|r| {
                r.metric == "measurement_error" && r.variant == variant && r.seed == showcase
            })
            .map(|r| (r.step, r.t, r.value))
            .collect()
    };
    let (zero, max) = (series("zero"), series("max"));
    println!("\nseed {showcase} measurement error by outer step (a typical race: the");
    println!("frozen sampler started in the wrong mode and cannot re-roll it):");
    println!("  {:>4} {:>5} {:>12} {:>12}", "step", "t", "sigma=0", "max sigma");
    for ((k, t, vz), (_, _, vm)) in zero.iter().zip(&max).step_by(12) {
        println!("  {k:>4} {t:>5} {vz:>12.4} {vm:>12.4}");
    }
    println!(
        "  (max sigma first dips under the threshold at step {:.0})",
        cross("max", showcase)
    );
    Ok(())
}
