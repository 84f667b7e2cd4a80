//! Randomized metric-preservation testing of checked definitions and of the
//! primitives. A passing report is evidence, not proof: the harness can only
//! find counterexamples.

pub mod gen;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::bunch::Bunch;
use crate::checker::{check_program, Judgment};
use crate::lang::ast::{Def, Program, Ty};
use crate::lang::parser::parse_term;
use crate::lang::prims::PrimOp;
use crate::lang::{ParseError, PrimError, TermKind};
use crate::metrics::{fmt_grade, lp_norm, PIdx, Sens};
use crate::runtime::eval::{apply, eval_def, eval_globals, Env, EvalError};
use crate::runtime::prims::prim_value;
use crate::runtime::value::Value;
use crate::vmetric::{
    assignment_distance_opts, value_distance_opts, Assignment, DivergenceForm, MetricOptions, VmetricError,
};
use gen::{coord_count, gen_value, origin, perturb, regen, Step};

/// Result types are unfolded through at most this many arrows.
const MAX_ARROW_ARGS: usize = 8;
/// Absolute slack added to every bound.
const ABS_SLACK: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SampleConfig {
    pub samples: usize,
    pub seed: u64,
    pub rel_tol: f64,
    /// Generated reals lie in `[-value_scale, value_scale]`.
    pub value_scale: f64,
    pub set_max: usize,
    /// Generate and perturb reals as integers.
    pub integral: bool,
    pub divergence: DivergenceForm,
}

impl Default for SampleConfig {
    fn default() -> SampleConfig {
        SampleConfig {
            samples: 1000,
            seed: 0,
            rel_tol: 1e-7,
            value_scale: 10.0,
            set_max: 4,
            integral: false,
            divergence: DivergenceForm::Max,
        }
    }
}

impl SampleConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.samples == 0 {
            return Err(HarnessError::Config("samples must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(HarnessError::Config("rel-tol must be positive and finite".into()));
        }
        if !(self.value_scale > 0.0 && self.value_scale.is_finite()) {
            return Err(HarnessError::Config("value scale must be positive and finite".into()));
        }
        Ok(())
    }

    fn metric_options(&self) -> MetricOptions {
        MetricOptions { divergence: self.divergence, identical_functions: true }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Prim(#[from] PrimError),
    #[error("cannot parse primitive: {0}")]
    Parse(#[from] ParseError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Metric(#[from] VmetricError),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Pass,
    Fail,
    /// Nothing could be tested; the reason is attached.
    Skipped(String),
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped(_) => "skipped",
        }
    }
}

/// A pair of inputs whose outputs are further apart than the judgment
/// allows.
#[derive(Clone, Debug)]
pub struct Violation {
    pub sample: usize,
    pub gamma: Vec<(String, Value)>,
    pub gamma_prime: Vec<(String, Value)>,
    pub lhs: Sens,
    pub rhs: Sens,
}

impl Violation {
    pub fn ratio(&self) -> f64 {
        ratio(self.lhs, self.rhs).unwrap_or(0.0)
    }

    fn to_json(&self) -> Json {
        let side = |g: &[(String, Value)]| -> Json {
            g.iter().map(|(n, v)| (n.clone(), Json::String(v.to_string()))).collect::<serde_json::Map<_, _>>().into()
        };
        json!({
            "sample": self.sample,
            "gamma": side(&self.gamma),
            "gamma_prime": side(&self.gamma_prime),
            "lhs": num_json(self.lhs.value()),
            "rhs": num_json(self.rhs.value()),
            "ratio": num_json(self.ratio()),
        })
    }
}

fn render(g: &[(String, Value)]) -> String {
    g.iter().map(|(n, v)| format!("{n} = {v}")).collect::<Vec<_>>().join(", ")
}

fn num_json(x: f64) -> Json {
    if x.is_finite() {
        json!(x)
    } else {
        json!(fmt_grade(Sens::INF))
    }
}

#[derive(Clone, Debug)]
pub struct SensReport {
    pub name: String,
    pub samples: usize,
    pub violations: Vec<Violation>,
    /// Largest observed `lhs / rhs` over samples with a finite bound.
    pub max_ratio: f64,
    pub status: Status,
}

impl SensReport {
    fn skipped(name: &str, reason: String) -> SensReport {
        SensReport {
            name: name.to_string(),
            samples: 0,
            violations: Vec::new(),
            max_ratio: 0.0,
            status: Status::Skipped(reason),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn to_json(&self) -> Json {
        let mut j = json!({
            "name": self.name,
            "status": self.status.label(),
            "samples": self.samples,
            "max_ratio": num_json(self.max_ratio),
            "violations": self.violations.iter().map(Violation::to_json).collect::<Vec<_>>(),
        });
        if let Status::Skipped(reason) = &self.status {
            j["reason"] = json!(reason);
        }
        j
    }

    /// One line, plus the first witness when there is one.
    pub fn summary(&self) -> String {
        match &self.status {
            Status::Pass => format!(
                "pass {}: {} samples, max ratio {}",
                self.name,
                self.samples,
                fmt_grade(Sens::from_f64_lossy(self.max_ratio))
            ),
            Status::Skipped(reason) => format!("skipped {}: {reason}", self.name),
            Status::Fail => {
                let mut s = format!(
                    "FAIL {}: {} of {} samples violate the bound, max ratio {}",
                    self.name,
                    self.violations.len(),
                    self.samples,
                    fmt_grade(Sens::from_f64_lossy(self.max_ratio))
                );
                if let Some(v) = self.violations.first() {
                    s.push_str(&format!(
                        "\n  witness: [{}] vs [{}]\n  output distance {} > bound {}",
                        render(&v.gamma),
                        render(&v.gamma_prime),
                        fmt_grade(v.lhs),
                        fmt_grade(v.rhs)
                    ));
                }
                s
            }
        }
    }
}

/// `{tool_version, seed, samples, results}`.
pub fn reports_json(cfg: &SampleConfig, reports: &[SensReport]) -> Json {
    json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "samples": cfg.samples,
        "results": reports.iter().map(SensReport::to_json).collect::<Vec<_>>(),
    })
}

fn ratio(lhs: Sens, rhs: Sens) -> Option<f64> {
    if rhs.is_inf() {
        None
    } else if rhs.is_zero() {
        Some(if lhs.is_zero() { 0.0 } else { f64::INFINITY })
    } else {
        Some(lhs.value() / rhs.value())
    }
}

type Runner<'a> = Box<dyn Fn(&[Value]) -> Result<Value, EvalError> + Sync + 'a>;

/// Something to test: a function of `params`, graded by `env`, whose result
/// has type `result`.
struct Subject<'a> {
    name: String,
    params: Vec<(String, Ty)>,
    env: Bunch,
    result: Ty,
    run: Runner<'a>,
}

struct Slot {
    name: String,
    ty: Ty,
    /// Index combining this argument with everything before it; `None` for
    /// parameters, which the environment already combines.
    p: Option<PIdx>,
}

struct Outcome {
    gamma: Vec<(String, Value)>,
    gamma_prime: Vec<(String, Value)>,
    lhs: Sens,
    rhs: Sens,
}

fn slots_of(subject: &Subject) -> (Vec<Slot>, Ty) {
    let mut slots: Vec<Slot> =
        subject.params.iter().map(|(n, t)| Slot { name: n.clone(), ty: t.clone(), p: None }).collect();
    let mut ty = subject.result.clone();
    let mut k = 0;
    while let Ty::Arrow(p, a, b) = ty.clone() {
        if k == MAX_ARROW_ARGS {
            break;
        }
        k += 1;
        slots.push(Slot { name: format!("arg{k}"), ty: *a, p: Some(p) });
        ty = *b;
    }
    (slots, ty)
}

fn sample_rng(cfg: &SampleConfig, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    rng
}

fn perturb_slots(
    slots: &[Slot],
    vals: &[Value],
    mut k: usize,
    step: Step,
    cfg: &SampleConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Value> {
    slots.iter().zip(vals).map(|(s, v)| perturb(&s.ty, v, &mut k, step, cfg, rng)).collect()
}

fn draw_pair(slots: &[Slot], index: usize, canonical: usize, cfg: &SampleConfig) -> (Vec<Value>, Vec<Value>) {
    let mut rng = sample_rng(cfg, index as u64);
    if index < canonical {
        // axis-aligned probes from the origin come first
        let base: Vec<Value> = slots.iter().map(|s| origin(&s.ty, &mut rng)).collect();
        let moved = perturb_slots(slots, &base, index, Step::Unit, cfg, &mut rng);
        return (base, moved);
    }
    let g: Vec<Value> = slots.iter().map(|s| gen_value(&s.ty, cfg, &mut rng)).collect();
    if rng.gen_bool(0.5) {
        let h = slots.iter().zip(&g).map(|(s, v)| regen(&s.ty, v, cfg, &mut rng)).collect();
        (g, h)
    } else {
        let total: usize = slots.iter().zip(&g).map(|(s, v)| coord_count(&s.ty, v)).sum();
        if total == 0 {
            return (g.clone(), g);
        }
        let k = rng.gen_range(0..total);
        let h = perturb_slots(slots, &g, k, Step::Random, cfg, &mut rng);
        (g, h)
    }
}

fn observe(subject: &Subject, slots: &[Slot], vals: &[Value]) -> Result<Value, EvalError> {
    let n = subject.params.len();
    let mut out = (subject.run)(&vals[..n])?;
    for v in &vals[n..slots.len()] {
        out = apply(&out, v.clone())?;
    }
    Ok(out)
}

fn run_sample(
    subject: &Subject,
    slots: &[Slot],
    obs_ty: &Ty,
    g: Vec<Value>,
    h: Vec<Value>,
    cfg: &SampleConfig,
) -> Result<Outcome, HarnessError> {
    let opts = cfg.metric_options();
    let n = subject.params.len();
    let to_map = |vals: &[Value]| -> Assignment {
        slots[..n].iter().zip(vals).map(|(s, v)| (s.name.clone(), v.clone())).collect()
    };
    let mut rhs = assignment_distance_opts(opts, &subject.env, &to_map(&g), &to_map(&h))?;
    for (s, (x, y)) in slots[n..].iter().zip(g[n..].iter().zip(&h[n..])) {
        let d = value_distance_opts(opts, &s.ty, x, y)?;
        rhs = lp_norm(s.p.unwrap_or(PIdx::ONE), &[rhs, d]);
    }
    let out_g = observe(subject, slots, &g)?;
    let out_h = observe(subject, slots, &h)?;
    let lhs = value_distance_opts(opts, obs_ty, &out_g, &out_h)?;
    let named = |vals: Vec<Value>| slots.iter().map(|s| s.name.clone()).zip(vals).collect();
    Ok(Outcome { gamma: named(g), gamma_prime: named(h), lhs, rhs })
}

fn run_subject(subject: &Subject, cfg: &SampleConfig) -> Result<SensReport, HarnessError> {
    cfg.validate()?;
    let (slots, obs_ty) = slots_of(subject);
    let origin_vals: Vec<Value> = {
        let mut rng = sample_rng(cfg, u64::MAX);
        slots.iter().map(|s| origin(&s.ty, &mut rng)).collect()
    };
    let canonical: usize = slots.iter().zip(&origin_vals).map(|(s, v)| coord_count(&s.ty, v)).sum();

    let outcomes: Vec<Result<Outcome, HarnessError>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let (g, h) = draw_pair(&slots, i, canonical, cfg);
            run_sample(subject, &slots, &obs_ty, g, h, cfg)
        })
        .collect();

    let mut violations = Vec::new();
    let mut max_ratio = 0.0f64;
    for (i, o) in outcomes.into_iter().enumerate() {
        let o = match o {
            Ok(o) => o,
            Err(HarnessError::Metric(VmetricError::Arrow(t))) => {
                return Ok(SensReport::skipped(&subject.name, format!("result values of type {t} cannot be compared")));
            }
            Err(e) => return Err(e),
        };
        if let Some(r) = ratio(o.lhs, o.rhs) {
            max_ratio = max_ratio.max(r);
        }
        let ok = o.rhs.is_inf() || o.lhs.value() <= o.rhs.value() * (1.0 + cfg.rel_tol) + ABS_SLACK;
        if !ok {
            violations.push(Violation {
                sample: i,
                gamma: o.gamma,
                gamma_prime: o.gamma_prime,
                lhs: o.lhs,
                rhs: o.rhs,
            });
        }
    }
    let status = if violations.is_empty() { Status::Pass } else { Status::Fail };
    Ok(SensReport { name: subject.name.clone(), samples: cfg.samples, violations, max_ratio, status })
}

/// Checks `d(result(γ), result(γ')) <= d_env(γ, γ')` on sampled pairs of
/// assignments to the parameters of `def`. Arrow-typed results are applied
/// to further sampled arguments, each combined into the bound at its arrow's
/// index.
pub fn test_metric_preservation(
    def: &Def,
    judgment: &Judgment,
    globals: &Env,
    cfg: &SampleConfig,
) -> Result<SensReport, HarnessError> {
    let subject = Subject {
        name: def.name.clone(),
        params: def.params.iter().map(|p| (p.name.clone(), p.ty.clone())).collect(),
        env: judgment.env.clone(),
        result: judgment.ty.clone(),
        run: Box::new(move |args| eval_def(def, globals, args)),
    };
    run_subject(&subject, cfg)
}

/// Checks every definition of `prog`. Definitions without a testable
/// judgment are reported as skipped.
pub fn test_program(prog: &Program, cfg: &SampleConfig) -> Result<Vec<SensReport>, HarnessError> {
    let report = check_program(prog);
    let globals = eval_globals(prog)?;
    let mut out = Vec::new();
    for (def, dr) in prog.defs.iter().zip(&report.defs) {
        match dr.testable() {
            Some(j) => out.push(test_metric_preservation(def, &j, &globals, cfg)?),
            None => {
                let reason = dr.errors.first().map(|e| format!("does not type-check: {e}")).unwrap_or_default();
                out.push(SensReport::skipped(&def.name, reason));
            }
        }
    }
    Ok(out)
}

fn default_args(name: &str) -> Option<&'static str> {
    Some(match name {
        "add" => "add",
        "clip" => "clip",
        "cmp" => "cmp",
        "scale" => "scale[2]",
        "rot" => "rot[pi/4]",
        "dist" => "dist[real]",
        "sum" => "sum[real]",
        "relax" => "relax[1, 2, real, real]",
        "tighten" => "tighten[1, 2, real, real]",
        "dlap" => "dlap[0.5]",
        "lpmech2" => "lpmech2[1, 2]",
        _ => return None,
    })
}

/// Resolves `name` or `name[args]`; a bare name gets default arguments.
pub fn resolve_audit_prim(spec: &str) -> Result<(String, PrimOp), HarnessError> {
    let spec = spec.trim().trim_start_matches("prim.");
    let full = if spec.contains('[') {
        spec.to_string()
    } else {
        default_args(spec).ok_or_else(|| PrimError::Unknown(spec.to_string()))?.to_string()
    };
    let term = parse_term(&format!("prim.{full}"))?;
    let TermKind::Prim { name, args } = &term.kind else {
        return Err(HarnessError::Config(format!("`{spec}` is not a primitive")));
    };
    Ok((full.clone(), PrimOp::resolve(name, args)?))
}

/// Audits a primitive against its own signature, or against `at` when
/// given. `dlap` is audited on integer inputs in `[-5, 5]`, the domain on
/// which its discretisation is exact.
pub fn test_primitive(spec: &str, at: Option<&Ty>, cfg: &SampleConfig) -> Result<SensReport, HarnessError> {
    let (label, op) = resolve_audit_prim(spec)?;
    let ty = at.cloned().unwrap_or_else(|| op.sig());
    let Ty::Arrow(_, dom, cod) = ty.clone() else {
        return Err(HarnessError::Config(format!("audit type {ty} is not a function type")));
    };
    let mut cfg = cfg.clone();
    if matches!(op, PrimOp::Dlap(_)) {
        cfg.integral = true;
        cfg.value_scale = cfg.value_scale.min(5.0);
    }
    let f = prim_value(&op);
    let subject = Subject {
        name: match at {
            Some(t) => format!("{label} at {t}"),
            None => label,
        },
        params: vec![("x".to_string(), (*dom).clone())],
        env: Bunch::leaf("x", *dom, Sens::ONE),
        result: *cod,
        run: Box::new(move |args| apply(&f, args[0].clone())),
    };
    run_subject(&subject, &cfg)
}
