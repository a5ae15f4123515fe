//! Calibration harness: prints per-seed task measures on synthetic data
//! so generator noise and training schedules can be tuned.

use affect_core::experiments::generate_synthetic;
use affect_core::experiments::{
    run_cross_modal, run_multimodal_facilitation, run_unimodal_enhancement, SplitRule, SynthSpec,
    TaskCfgs,
};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seeds: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let noise: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.18);
    let mut cfgs = TaskCfgs::default();
    if let Some(ep) = args.get(3).and_then(|s| s.parse().ok()) {
        cfgs.fine_tune.epochs = ep;
    }
    if let Some(cdep) = args.get(4).and_then(|s| s.parse().ok()) {
        cfgs.cd.epochs = cdep;
    }
    if let Some(h) = args.get(5).and_then(|s| s.parse().ok()) {
        cfgs.hidden_eeg = Some(h);
        cfgs.hidden_eye = Some(h);
    }
    if let Some(sh) = args.get(6).and_then(|s| s.parse().ok()) {
        cfgs.shared = Some(sh);
    }
    cfgs.permutation_null = true;
    let split = SplitRule::SeedStyle;
    for seed in 0..seeds {
        let spec = SynthSpec {
            seed,
            noise,
            ..SynthSpec::default()
        };
        let (eeg, eye) = generate_synthetic(&spec).unwrap();
        let start = std::time::Instant::now();
        let (fac, _) = run_multimodal_facilitation(&eeg, &eye, &split, &cfgs, seed).unwrap();
        let (enh_eeg, _) =
            run_unimodal_enhancement(&eeg, &eye, "eeg", &split, &cfgs, seed).unwrap();
        let (enh_eye, _) =
            run_unimodal_enhancement(&eeg, &eye, "eye", &split, &cfgs, seed).unwrap();
        let (xm, _) = run_cross_modal(&eeg, &eye, &split, &cfgs, seed).unwrap();
        let m = |r: &affect_core::experiments::ExperimentReport, n: &str| {
            r.runs[0].measure(n).map(|v| 100.0 * v).unwrap_or(-1.0)
        };
        println!(
            "seed {seed}: bdae {:.1} concat {:.1} eeg_raw {:.1} eye_raw {:.1} | dae_eeg {:.1} raw {:.1} dae_eye {:.1} raw {:.1} | e2e {:.1} y2e {:.1} null {:.1} | {:.1}s",
            m(&fac, "bdae"),
            m(&fac, "concat"),
            m(&fac, "eeg_raw"),
            m(&fac, "eye_raw"),
            m(&enh_eeg, "dae"),
            m(&enh_eeg, "raw"),
            m(&enh_eye, "dae"),
            m(&enh_eye, "raw"),
            m(&xm, "eeg_to_eye"),
            m(&xm, "eye_to_eeg"),
            m(&xm, "permuted_null"),
            start.elapsed().as_secs_f64()
        );
    }
}
