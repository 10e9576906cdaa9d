//! Seeded fuzzing of the synthesis guarantees through the verify registry.

use delsynth_core::gen;
use delsynth_core::synthesis::synthesize;
use delsynth_core::verify::{run_checks, VerifyContext, VerifyOptions, CHECK_NAMES};
use rand::Rng;

#[test]
fn synthesis_guarantees_hold_on_random_instances() {
    let seed = gen::seed_from_env(7);
    let mut rng = gen::rng(seed);
    let mut failures = Vec::new();
    for i in 0..150 {
        let agents = gen::agents(rng.gen_range(1..=3));
        let atoms = gen::atoms(rng.gen_range(1..=2));
        let m = gen::kripke(&mut rng, &agents, &atoms, 5);
        let goal = gen::dbi_normal(&mut rng, &agents, &atoms, 3);
        let s = synthesize(&goal, &agents).expect("normal DBI formulas synthesize");
        let mut ctx = VerifyContext::from_synthesis(m, goal, s);
        ctx.options = VerifyOptions { minimality_samples: 40, seed: i, ..VerifyOptions::default() };
        for v in run_checks(&ctx, CHECK_NAMES).unwrap() {
            if !v.passed {
                failures.push(format!("instance {i}: {} {} {:?}", v.check, v.detail, v.error));
            }
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}
