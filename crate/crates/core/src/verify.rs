//! Named checks that audit one synthesis instance `(M, v)`, goal, `(U, 0)`.

use serde::Serialize;
use serde_json::{json, Value};

use crate::bisim::bisimilar;
use crate::formula::{Agent, DbiFormula, Formula};
use crate::gen;
use crate::model::{ActionModel, KripkeModel};
use crate::privatization::{is_privatized, is_weakly_privatized};
use crate::synthesis::{analyze_independence, verify_idempotent, SynthesizedModel};
use crate::update::{pointed_update, product_update, UpdateResult};

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Bound on privatization sequence length; `None` decides exactly.
    pub max_seq_len: Option<usize>,
    /// Longest agent sequence audited by the consistency check.
    pub consistency_len: usize,
    pub minimality_samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            max_seq_len: None,
            consistency_len: 3,
            minimality_samples: 200,
            seed: 0,
        }
    }
}

pub struct VerifyContext {
    pub model: KripkeModel,
    pub goal: DbiFormula,
    pub action: ActionModel,
    /// Metadata when `action` was synthesized from `goal`.
    pub synthesized: Option<SynthesizedModel>,
    pub options: VerifyOptions,
}

impl VerifyContext {
    pub fn from_synthesis(model: KripkeModel, goal: DbiFormula, synthesized: SynthesizedModel) -> Self {
        VerifyContext {
            model,
            goal,
            action: synthesized.action().clone(),
            synthesized: Some(synthesized),
            options: VerifyOptions::default(),
        }
    }

    fn pointed(&self) -> Result<UpdateResult, String> {
        pointed_update(&self.model, &self.action).map_err(|e| e.to_string())
    }

    fn synthesized(&self) -> Result<&SynthesizedModel, String> {
        self.synthesized
            .as_ref()
            .ok_or_else(|| "requires a synthesized action model".to_string())
    }
}

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    /// The property the check instantiates.
    pub claim: String,
    pub passed: bool,
    pub detail: Value,
    pub error: Option<String>,
}

pub trait Check: Send + Sync {
    fn name(&self) -> &'static str;
    fn claim(&self) -> &'static str;
    /// `Ok((passed, detail))`, or an error when the check cannot run.
    fn run(&self, ctx: &VerifyContext) -> Result<(bool, Value), String>;
}

struct Success;
struct Privatized;
struct WeaklyPrivatized;
struct Idempotent;
struct Consistency;
struct MinimalitySample;
struct BisimProduct;

impl Check for Success {
    fn name(&self) -> &'static str {
        "success"
    }

    fn claim(&self) -> &'static str {
        "update synthesis success: the pointed update is defined and makes the goal true"
    }

    fn run(&self, ctx: &VerifyContext) -> Result<(bool, Value), String> {
        let res = ctx.pointed()?;
        let holds = res.model.check(res.model.point(), ctx.goal.formula()).map_err(|e| e.to_string())?;
        Ok((holds, json!({ "worlds": res.model.len(), "goal_holds": holds })))
    }
}

impl Check for Privatized {
    fn name(&self) -> &'static str {
        "privatized"
    }

    fn claim(&self) -> &'static str {
        "the pointed action model is privatized with respect to the goal"
    }

    fn run(&self, ctx: &VerifyContext) -> Result<(bool, Value), String> {
        let r = is_privatized(ctx.action.frame(), &ctx.goal, ctx.options.max_seq_len).map_err(|e| e.to_string())?;
        Ok((r.privatized && r.agree, serde_json::to_value(&r).expect("serializable")))
    }
}

impl Check for WeaklyPrivatized {
    fn name(&self) -> &'static str {
        "weakly-privatized"
    }

    fn claim(&self) -> &'static str {
        "the pointed update result is weakly privatized with respect to the goal"
    }

    fn run(&self, ctx: &VerifyContext) -> Result<(bool, Value), String> {
        let res = ctx.pointed()?;
        let r = is_weakly_privatized(res.model.frame(), &ctx.goal, ctx.options.max_seq_len)
            .map_err(|e| e.to_string())?;
        Ok((r.privatized && r.agree, serde_json::to_value(&r).expect("serializable")))
    }
}

impl Check for Idempotent {
    fn name(&self) -> &'static str {
        "idempotent"
    }

    fn claim(&self) -> &'static str {
        "repeating the pointed update yields an isomorphic pointed model"
    }

    fn run(&self, ctx: &VerifyContext) -> Result<(bool, Value), String> {
        let r = verify_idempotent(&ctx.action, &ctx.model).map_err(|e| e.to_string())?;
        let passed = r.idempotent && (ctx.synthesized.is_none() || r.projection_holds);
        Ok((passed, serde_json::to_value(&r).expect("serializable")))
    }
}

/// All sequences over `agents` of length 1 to `max_len` without successive repeats.
pub fn nsr_sequences(agents: &[Agent], max_len: usize) -> Vec<Vec<Agent>> {
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<Agent>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &frontier {
            for a in agents {
                if seq.last() != Some(a) {
                    let mut s = seq.clone();
                    s.push(a.clone());
                    next.push(s);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

impl Check for Consistency {
    fn name(&self) -> &'static str {
        "consistency"
    }

    fn claim(&self) -> &'static str {
        "update synthesis consistency preservation: nested possibility of the preconditions \
         before the update iff no inconsistent nested belief after it"
    }

    fn run(&self, ctx: &VerifyContext) -> Result<(bool, Value), String> {
        let s = ctx.synthesized()?;
        let res = ctx.pointed()?;
        let seqs = nsr_sequences(ctx.model.frame().agents(), ctx.options.consistency_len);
        for seq in &seqs {
            let before = s.consistency_formula(seq).map_err(|e| e.to_string())?;
            let lhs = ctx.model.check(ctx.model.point(), &before).map_err(|e| e.to_string())?;
            let after = Formula::belief_chain(seq, Formula::Bot);
            let rhs = !res.model.check(res.model.point(), &after).map_err(|e| e.to_string())?;
            if lhs != rhs {
                let names: Vec<&str> = seq.iter().map(Agent::as_str).collect();
                return Ok((
                    false,
                    json!({ "sequences": seqs.len(), "counterexample": names, "before": lhs, "after_consistent": rhs }),
                ));
            }
        }
        Ok((true, json!({ "sequences": seqs.len() })))
    }
}

impl Check for MinimalitySample {
    fn name(&self) -> &'static str {
        "minimality-sample"
    }

    fn claim(&self) -> &'static str {
        "update synthesis minimality: formulas independent of the goal keep their truth value"
    }

    fn run(&self, ctx: &VerifyContext) -> Result<(bool, Value), String> {
        let s = ctx.synthesized()?;
        let res = ctx.pointed()?;
        let agents = ctx.model.frame().agents().to_vec();
        let mut atoms: Vec<String> = ctx.model.atoms().union(&ctx.goal.formula().atoms()).cloned().collect();
        if atoms.is_empty() {
            atoms.push("p".into());
        }
        let mut rng = gen::rng(ctx.options.seed);
        let mut independent = 0;
        for _ in 0..ctx.options.minimality_samples {
            let theta = gen::formula(&mut rng, &agents, &atoms, 3);
            let report = analyze_independence(&theta, s).map_err(|e| e.to_string())?;
            if !report.independent {
                continue;
            }
            independent += 1;
            let before = ctx.model.check(ctx.model.point(), &theta).map_err(|e| e.to_string())?;
            let after = res.model.check(res.model.point(), &theta).map_err(|e| e.to_string())?;
            if before != after {
                return Ok((
                    false,
                    json!({ "counterexample": theta.to_string(), "before": before, "after": after }),
                ));
            }
        }
        Ok((
            true,
            json!({ "sampled": ctx.options.minimality_samples, "independent": independent }),
        ))
    }
}

impl Check for BisimProduct {
    fn name(&self) -> &'static str {
        "bisim-product"
    }

    fn claim(&self) -> &'static str {
        "product and pointed updates are bisimilar at the actual pair"
    }

    fn run(&self, ctx: &VerifyContext) -> Result<(bool, Value), String> {
        let pointed = ctx.pointed()?;
        let product = product_update(&ctx.model, &ctx.action).map_err(|e| e.to_string())?;
        let k = product
            .world_of(ctx.model.point(), ctx.action.point())
            .ok_or("actual pair missing from the product")?;
        let same = bisimilar(&pointed.model, pointed.model.point(), &product.model, k).map_err(|e| e.to_string())?;
        Ok((
            same,
            json!({ "pointed_worlds": pointed.model.len(), "product_worlds": product.model.len() }),
        ))
    }
}

pub const CHECK_NAMES: &[&str] = &[
    "success",
    "privatized",
    "weakly-privatized",
    "idempotent",
    "consistency",
    "minimality-sample",
    "bisim-product",
];

pub fn check_by_name(name: &str) -> Option<Box<dyn Check>> {
    Some(match name {
        "success" => Box::new(Success),
        "privatized" => Box::new(Privatized),
        "weakly-privatized" => Box::new(WeaklyPrivatized),
        "idempotent" => Box::new(Idempotent),
        "consistency" => Box::new(Consistency),
        "minimality-sample" => Box::new(MinimalitySample),
        "bisim-product" => Box::new(BisimProduct),
        _ => return None,
    })
}

/// Runs the named checks in order. Unknown names yield `Err` with the name.
pub fn run_checks(ctx: &VerifyContext, names: &[&str]) -> Result<Vec<Verdict>, String> {
    let checks = names
        .iter()
        .map(|n| check_by_name(n).ok_or_else(|| n.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(checks
        .iter()
        .map(|c| {
            let (passed, detail, error) = match c.run(ctx) {
                Ok((p, d)) => (p, d, None),
                Err(e) => (false, Value::Null, Some(e)),
            };
            Verdict {
                check: c.name().to_string(),
                claim: c.claim().to_string(),
                passed,
                detail,
                error,
            }
        })
        .collect())
}
