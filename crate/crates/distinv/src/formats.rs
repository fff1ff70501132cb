//! JSON file formats: models, problems, certificates, strategies and hints.
//!
//! Rationals are written as `"p/q"` strings. On input, strings and JSON
//! numbers are both accepted and decimals are converted exactly, so `0.9`
//! and `"9/10"` mean the same thing.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};
use thiserror::Error;

use distinv_core::certificate::{
    format_point, CertStrategy, Certificate, CheckReport, MemorylessTable, SimulationResult,
    Strategy, Verdict,
};
use distinv_core::model::{
    AffineExpr, AffineInequality, InitialSpec, Mdp, Mode, ModelError, Relation, SafeSet, StateDist,
    SynthesisProblem,
};
use distinv_core::rational::{format_rational, parse_rational, Rational};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {message}")]
    Shape { path: String, message: String },
}

fn shape(path: &str, message: impl Into<String>) -> FormatError {
    FormatError::Shape {
        path: path.to_string(),
        message: message.into(),
    }
}

fn parse_json(text: &str) -> Result<Value, FormatError> {
    serde_json::from_str(text).map_err(|e| {
        FormatError::Model(ModelError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    })
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, FormatError> {
    v.as_object()
        .ok_or_else(|| shape(path, "expected an object"))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, FormatError> {
    v.as_array().ok_or_else(|| shape(path, "expected an array"))
}

fn string<'a>(v: &'a Value, path: &str) -> Result<&'a str, FormatError> {
    v.as_str().ok_or_else(|| shape(path, "expected a string"))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, FormatError> {
    obj.get(key)
        .ok_or_else(|| shape(path, format!("missing field `{key}`")))
}

fn only_keys(obj: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<(), FormatError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(shape(path, format!("unknown field `{k}`"))),
        None => Ok(()),
    }
}

fn rational(v: &Value, path: &str) -> Result<Rational, FormatError> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return Err(shape(path, "expected a rational (\"p/q\" or a decimal)")),
    };
    parse_rational(&text).map_err(|e| shape(path, e.to_string()))
}

fn usize_field(
    obj: &Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<Option<usize>, FormatError> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|n| Some(n as usize))
            .ok_or_else(|| shape(&format!("{path}.{key}"), "expected a nonnegative integer")),
    }
}

fn bool_field(
    obj: &Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<Option<bool>, FormatError> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_bool()
            .map(Some)
            .ok_or_else(|| shape(&format!("{path}.{key}"), "expected a boolean")),
    }
}

fn rat_str(r: &Rational) -> Value {
    Value::String(format_rational(r))
}

fn state(m: &Mdp, name: &str) -> Result<usize, FormatError> {
    m.state_index(name)
        .ok_or_else(|| ModelError::UnknownState(name.to_string()).into())
}

fn action(m: &Mdp, name: &str) -> Result<usize, FormatError> {
    m.action_index(name)
        .ok_or_else(|| ModelError::UnknownAction(name.to_string()).into())
}

// Models.

const MODEL_KEYS: [&str; 4] = ["states", "actions", "avail", "delta"];

fn names(v: &Value, path: &str) -> Result<Vec<String>, FormatError> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, x)| string(x, &format!("{path}[{i}]")).map(String::from))
        .collect()
}

fn model_from(obj: &Map<String, Value>) -> Result<Mdp, FormatError> {
    let states = names(field(obj, "states", "model")?, "states")?;
    let actions = names(field(obj, "actions", "model")?, "actions")?;
    let avail = object(field(obj, "avail", "model")?, "avail")?;
    let delta = object(field(obj, "delta", "model")?, "delta")?;
    for (what, list) in [("state", &states), ("action", &actions)] {
        if let Some((i, _)) = list
            .iter()
            .enumerate()
            .find(|(i, x)| list[..*i].contains(x))
        {
            return Err(ModelError::Duplicate {
                what,
                name: list[i].clone(),
            }
            .into());
        }
    }
    for s in avail.keys().chain(delta.keys()) {
        if !states.contains(s) {
            return Err(ModelError::UnknownState(s.clone()).into());
        }
    }
    let mut transitions = Vec::with_capacity(states.len());
    for s in &states {
        let path = format!("avail.{s}");
        let acts = match avail.get(s) {
            Some(v) => names(v, &path)?,
            None => return Err(ModelError::NoActions(s.clone()).into()),
        };
        if let Some(a) = acts.iter().find(|a| !actions.contains(a)) {
            return Err(ModelError::UnknownAction(a.clone()).into());
        }
        let rows = match delta.get(s) {
            Some(v) => object(v, &format!("delta.{s}"))?,
            None if acts.is_empty() => return Err(ModelError::NoActions(s.clone()).into()),
            None => {
                return Err(ModelError::MissingTransition {
                    state: s.clone(),
                    action: acts[0].clone(),
                }
                .into())
            }
        };
        for a in rows.keys() {
            if !actions.contains(a) {
                return Err(ModelError::UnknownAction(a.clone()).into());
            }
            if !acts.contains(a) {
                return Err(ModelError::UnavailableAction {
                    state: s.clone(),
                    action: a.clone(),
                }
                .into());
            }
        }
        let mut row = Vec::with_capacity(acts.len());
        for a in &acts {
            let path = format!("delta.{s}.{a}");
            let succ = rows.get(a).ok_or_else(|| ModelError::MissingTransition {
                state: s.clone(),
                action: a.clone(),
            })?;
            let succ = object(succ, &path)?
                .iter()
                .map(|(t, p)| Ok((t.clone(), rational(p, &format!("{path}.{t}"))?)))
                .collect::<Result<Vec<_>, FormatError>>()?;
            row.push((a.clone(), succ));
        }
        transitions.push(row);
    }
    Ok(Mdp::new(states, actions, transitions)?)
}

pub fn parse_model(text: &str) -> Result<Mdp, FormatError> {
    let v = parse_json(text)?;
    let obj = object(&v, "model")?;
    only_keys(obj, &MODEL_KEYS, "model")?;
    model_from(obj)
}

fn model_value(m: &Mdp) -> Map<String, Value> {
    let mut avail = Map::new();
    let mut delta = Map::new();
    for s in 0..m.num_states() {
        let sname = m.state_name(s).to_string();
        avail.insert(
            sname.clone(),
            m.avail(s)
                .iter()
                .map(|&a| json!(m.action_name(a)))
                .collect(),
        );
        let mut rows = Map::new();
        for (a, succ) in m.rows(s) {
            let mut row = Map::new();
            for (t, p) in succ.iter().enumerate() {
                if *p != Rational::from_integer(0.into()) {
                    row.insert(m.state_name(t).to_string(), rat_str(p));
                }
            }
            rows.insert(m.action_name(a).to_string(), Value::Object(row));
        }
        delta.insert(sname, Value::Object(rows));
    }
    let mut out = Map::new();
    out.insert("states".into(), json!(m.states()));
    out.insert("actions".into(), json!(m.actions()));
    out.insert("avail".into(), Value::Object(avail));
    out.insert("delta".into(), Value::Object(delta));
    out
}

/// Canonical text of `m`; `parse_model(&print_model(m)) == m`.
pub fn print_model(m: &Mdp) -> String {
    pretty(&Value::Object(model_value(m)))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

// Affine expressions and conjuncts.

fn affine(v: &Value, m: &Mdp, path: &str) -> Result<AffineExpr, FormatError> {
    let obj = object(v, path)?;
    only_keys(obj, &["coeffs", "const"], path)?;
    let mut e = AffineExpr::zero(m.num_states());
    if let Some(c) = obj.get("const") {
        e.constant = rational(c, &format!("{path}.const"))?;
    }
    if let Some(cs) = obj.get("coeffs") {
        for (s, c) in object(cs, &format!("{path}.coeffs"))? {
            e.coeffs[state(m, s)?] = rational(c, &format!("{path}.coeffs.{s}"))?;
        }
    }
    Ok(e)
}

fn affine_value(e: &AffineExpr, m: &Mdp) -> Map<String, Value> {
    let mut coeffs = Map::new();
    for (i, c) in e.coeffs.iter().enumerate() {
        if *c != Rational::from_integer(0.into()) {
            coeffs.insert(m.state_name(i).to_string(), rat_str(c));
        }
    }
    let mut out = Map::new();
    out.insert("coeffs".into(), Value::Object(coeffs));
    out.insert("const".into(), rat_str(&e.constant));
    out
}

fn conjunct(v: &Value, m: &Mdp, path: &str) -> Result<AffineInequality, FormatError> {
    let obj = object(v, path)?;
    only_keys(obj, &["coeffs", "const", "rel"], path)?;
    let rel = match obj.get("rel") {
        None => ">=",
        Some(r) => string(r, &format!("{path}.rel"))?,
    };
    let relation = match rel {
        ">=" => Relation::Ge,
        "=" | "==" => Relation::Eq,
        ">" | "<" => return Err(ModelError::StrictInequality.into()),
        other => {
            return Err(shape(
                &format!("{path}.rel"),
                format!("unknown relation `{other}`; use \">=\" or \"=\""),
            ))
        }
    };
    let mut without_rel = obj.clone();
    without_rel.remove("rel");
    Ok(AffineInequality {
        expr: affine(&Value::Object(without_rel), m, path)?,
        relation,
    })
}

fn conjuncts(v: &Value, m: &Mdp, path: &str) -> Result<Vec<AffineInequality>, FormatError> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, c)| conjunct(c, m, &format!("{path}[{i}]")))
        .collect()
}

fn conjunct_value(c: &AffineInequality, m: &Mdp) -> Value {
    let mut out = affine_value(&c.expr, m);
    out.insert(
        "rel".into(),
        json!(match c.relation {
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }),
    );
    Value::Object(out)
}

fn conjuncts_value(cs: &[AffineInequality], m: &Mdp) -> Value {
    Value::Array(cs.iter().map(|c| conjunct_value(c, m)).collect())
}

/// A JSON list of conjuncts, as used by `--initial-constraints`.
pub fn parse_conjuncts(text: &str, m: &Mdp) -> Result<Vec<AffineInequality>, FormatError> {
    conjuncts(&parse_json(text)?, m, "constraints")
}

fn distribution(v: &Value, m: &Mdp, path: &str) -> Result<StateDist, FormatError> {
    let mut entries = vec![Rational::from_integer(0.into()); m.num_states()];
    for (s, p) in object(v, path)? {
        entries[state(m, s)?] = rational(p, &format!("{path}.{s}"))?;
    }
    Ok(StateDist::new(entries)?)
}

fn distribution_value(mu: &StateDist, m: &Mdp) -> Value {
    let mut out = Map::new();
    for (i, p) in mu.entries().iter().enumerate() {
        out.insert(m.state_name(i).to_string(), rat_str(p));
    }
    Value::Object(out)
}

// Problems.

fn hints_from(v: &Value, path: &str) -> Result<BTreeMap<String, Rational>, FormatError> {
    object(v, path)?
        .iter()
        .map(|(k, x)| Ok((k.clone(), rational(x, &format!("{path}.{k}"))?)))
        .collect()
}

/// A hints file: `{"variable name": "p/q", ...}`.
pub fn parse_hints(text: &str) -> Result<BTreeMap<String, Rational>, FormatError> {
    hints_from(&parse_json(text)?, "hints")
}

pub fn print_hints(hints: &BTreeMap<String, Rational>) -> String {
    let obj: Map<String, Value> = hints.iter().map(|(k, v)| (k.clone(), rat_str(v))).collect();
    pretty(&Value::Object(obj))
}

pub fn parse_mode(text: &str) -> Option<Mode> {
    match text {
        "memless" | "memoryless" => Some(Mode::Memoryless),
        "dist" | "distribution" => Some(Mode::Distribution),
        _ => None,
    }
}

/// Reads a problem file: a model plus the safe set, the initial
/// distribution and template parameters. Also accepts a bare model file,
/// which then has an empty safe set and a uniform initial distribution.
pub fn parse_problem(text: &str) -> Result<SynthesisProblem, FormatError> {
    let v = parse_json(text)?;
    let obj = object(&v, "problem")?;
    let mut allowed: Vec<&str> = MODEL_KEYS.to_vec();
    allowed.extend([
        "safe",
        "initial",
        "ni",
        "k",
        "mode",
        "unroll",
        "hints",
        "strengthen",
        "conservation",
        "fixpoint",
    ]);
    only_keys(obj, &allowed, "problem")?;
    let m = model_from(obj)?;
    let safe = match obj.get("safe") {
        Some(v) => SafeSet::new(conjuncts(v, &m, "safe")?),
        None => SafeSet::default(),
    };
    let initial = match obj.get("initial") {
        None => InitialSpec::Fixed(StateDist::uniform(m.num_states())),
        Some(Value::String(s)) if s == "free" => InitialSpec::Free,
        Some(Value::String(s)) if s == "uniform" => {
            InitialSpec::Fixed(StateDist::uniform(m.num_states()))
        }
        Some(v) => {
            let o = object(v, "initial")?;
            only_keys(o, &["fixed", "constrained"], "initial")?;
            match (o.get("fixed"), o.get("constrained")) {
                (Some(d), None) => InitialSpec::Fixed(distribution(d, &m, "initial.fixed")?),
                (None, Some(cs)) => {
                    InitialSpec::Constrained(conjuncts(cs, &m, "initial.constrained")?)
                }
                _ => {
                    return Err(shape(
                        "initial",
                        "expected \"free\", {\"fixed\": ...} or {\"constrained\": [...]}",
                    ))
                }
            }
        }
    };
    let mut p = SynthesisProblem::new(m, safe, initial);
    if let Some(n) = usize_field(obj, "ni", "problem")? {
        p.invariant_size = n;
    }
    if let Some(k) = usize_field(obj, "k", "problem")? {
        p.handelman_degree = k;
    }
    if let Some(u) = usize_field(obj, "unroll", "problem")? {
        p.unroll = u;
    }
    if let Some(mode) = obj.get("mode") {
        let text = string(mode, "mode")?;
        p.mode = parse_mode(text).ok_or_else(|| shape("mode", format!("unknown mode `{text}`")))?;
    }
    if let Some(h) = obj.get("hints") {
        p.hints = hints_from(h, "hints")?;
    }
    if let Some(b) = bool_field(obj, "strengthen", "problem")? {
        p.strengthen = b;
    }
    if let Some(b) = bool_field(obj, "conservation", "problem")? {
        p.conservation = b;
    }
    if let Some(b) = bool_field(obj, "fixpoint", "problem")? {
        p.fixpoint = b;
    }
    p.validate()?;
    Ok(p)
}

pub fn print_problem(p: &SynthesisProblem) -> String {
    let m = &p.mdp;
    let mut out = model_value(m);
    out.insert("safe".into(), conjuncts_value(&p.safe.conjuncts, m));
    let initial = match &p.initial {
        InitialSpec::Fixed(mu) => json!({ "fixed": distribution_value(mu, m) }),
        InitialSpec::Free => json!("free"),
        InitialSpec::Constrained(cs) => json!({ "constrained": conjuncts_value(cs, m) }),
    };
    out.insert("initial".into(), initial);
    out.insert("ni".into(), json!(p.invariant_size));
    out.insert("k".into(), json!(p.handelman_degree));
    out.insert("mode".into(), json!(p.mode.as_str()));
    out.insert("unroll".into(), json!(p.unroll));
    if !p.hints.is_empty() {
        let hints: Map<String, Value> = p
            .hints
            .iter()
            .map(|(k, v)| (k.clone(), rat_str(v)))
            .collect();
        out.insert("hints".into(), Value::Object(hints));
    }
    if !p.strengthen {
        out.insert("strengthen".into(), json!(false));
    }
    if !p.conservation {
        out.insert("conservation".into(), json!(false));
    }
    if p.fixpoint {
        out.insert("fixpoint".into(), json!(true));
    }
    pretty(&Value::Object(out))
}

// Strategies and certificates.

fn table(v: &Value, m: &Mdp, path: &str) -> Result<MemorylessTable, FormatError> {
    let mut out = MemorylessTable::new();
    for (s, row) in object(v, path)? {
        let si = state(m, s)?;
        for (a, p) in object(row, &format!("{path}.{s}"))? {
            let ai = action(m, a)?;
            if !m.is_available(si, ai) {
                return Err(ModelError::UnavailableAction {
                    state: s.clone(),
                    action: a.clone(),
                }
                .into());
            }
            let value = rational(p, &format!("{path}.{s}.{a}"))?;
            // Single-action states have no strategy entry.
            if m.avail(si).len() > 1 {
                out.insert((si, ai), value);
            } else if value != Rational::from_integer(1.into()) {
                return Err(shape(
                    &format!("{path}.{s}.{a}"),
                    "the only action of a state has probability 1",
                ));
            }
        }
    }
    Ok(out)
}

fn table_value(t: &MemorylessTable, m: &Mdp) -> Value {
    let mut out = Map::new();
    for (&(s, a), p) in t {
        let row = out
            .entry(m.state_name(s).to_string())
            .or_insert_with(|| Value::Object(Map::new()));
        row.as_object_mut()
            .expect("rows are objects")
            .insert(m.action_name(a).to_string(), rat_str(p));
    }
    Value::Object(out)
}

fn cert_strategy(v: &Value, m: &Mdp, path: &str) -> Result<CertStrategy, FormatError> {
    let obj = object(v, path)?;
    only_keys(obj, &["memoryless", "dist"], path)?;
    match (obj.get("memoryless"), obj.get("dist")) {
        (Some(t), None) => Ok(CertStrategy::Memoryless(table(
            t,
            m,
            &format!("{path}.memoryless"),
        )?)),
        (None, Some(d)) => {
            let mut num = BTreeMap::new();
            let mut den = BTreeMap::new();
            for (s, entry) in object(d, &format!("{path}.dist"))? {
                let p = format!("{path}.dist.{s}");
                let si = state(m, s)?;
                let o = object(entry, &p)?;
                only_keys(o, &["den", "num"], &p)?;
                den.insert(si, affine(field(o, "den", &p)?, m, &format!("{p}.den"))?);
                for (a, e) in object(field(o, "num", &p)?, &format!("{p}.num"))? {
                    let ai = action(m, a)?;
                    if !m.is_available(si, ai) {
                        return Err(ModelError::UnavailableAction {
                            state: s.clone(),
                            action: a.clone(),
                        }
                        .into());
                    }
                    num.insert((si, ai), affine(e, m, &format!("{p}.num.{a}"))?);
                }
            }
            Ok(CertStrategy::Distribution { num, den })
        }
        _ => Err(shape(
            path,
            "expected {\"memoryless\": ...} or {\"dist\": ...}",
        )),
    }
}

fn cert_strategy_value(s: &CertStrategy, m: &Mdp) -> Value {
    match s {
        CertStrategy::Memoryless(t) => json!({ "memoryless": table_value(t, m) }),
        CertStrategy::Distribution { num, den } => {
            let mut out = Map::new();
            for (&s, d) in den {
                let mut nums = Map::new();
                for (&(s2, a), e) in num.range((s, 0)..(s + 1, 0)) {
                    debug_assert_eq!(s, s2);
                    nums.insert(
                        m.action_name(a).to_string(),
                        Value::Object(affine_value(e, m)),
                    );
                }
                out.insert(
                    m.state_name(s).to_string(),
                    json!({ "den": Value::Object(affine_value(d, m)), "num": Value::Object(nums) }),
                );
            }
            json!({ "dist": Value::Object(out) })
        }
    }
}

pub fn parse_certificate(text: &str, m: &Mdp) -> Result<Certificate, FormatError> {
    let v = parse_json(text)?;
    certificate_from(&v, m)
}

fn certificate_from(v: &Value, m: &Mdp) -> Result<Certificate, FormatError> {
    let obj = object(v, "certificate")?;
    only_keys(
        obj,
        &["invariant", "strategy", "initial", "prefix"],
        "certificate",
    )?;
    let invariant = conjuncts(field(obj, "invariant", "certificate")?, m, "invariant")?;
    let strategy = cert_strategy(field(obj, "strategy", "certificate")?, m, "strategy")?;
    let initial = distribution(field(obj, "initial", "certificate")?, m, "initial")?;
    let prefix = match obj.get("prefix") {
        Some(p) => array(p, "prefix")?
            .iter()
            .enumerate()
            .map(|(i, t)| table(t, m, &format!("prefix[{i}]")))
            .collect::<Result<_, _>>()?,
        None => Vec::new(),
    };
    Ok(Certificate {
        invariant,
        strategy,
        initial,
        prefix,
    })
}

pub fn certificate_value(c: &Certificate, m: &Mdp) -> Value {
    let mut out = Map::new();
    out.insert("invariant".into(), conjuncts_value(&c.invariant, m));
    out.insert("strategy".into(), cert_strategy_value(&c.strategy, m));
    out.insert("initial".into(), distribution_value(&c.initial, m));
    if !c.prefix.is_empty() {
        out.insert(
            "prefix".into(),
            Value::Array(c.prefix.iter().map(|t| table_value(t, m)).collect()),
        );
    }
    Value::Object(out)
}

pub fn print_certificate(c: &Certificate, m: &Mdp) -> String {
    pretty(&certificate_value(c, m))
}

/// A strategy for simulation: `{"memoryless": ...}`, `{"markov": [...]}`,
/// `{"dist": ...}`, or a whole certificate (whose strategy, after its
/// prefix, is used; the prefix is returned separately).
pub fn parse_strategy(text: &str, m: &Mdp) -> Result<(Strategy, Option<Certificate>), FormatError> {
    let v = parse_json(text)?;
    let obj = object(&v, "strategy")?;
    if obj.contains_key("invariant") {
        let cert = certificate_from(&v, m)?;
        return Ok((Strategy::from(&cert.strategy), Some(cert)));
    }
    if let Some(seq) = obj.get("markov") {
        only_keys(obj, &["markov"], "strategy")?;
        let tables = array(seq, "markov")?
            .iter()
            .enumerate()
            .map(|(i, t)| table(t, m, &format!("markov[{i}]")))
            .collect::<Result<_, _>>()?;
        return Ok((Strategy::Markov(tables), None));
    }
    Ok((Strategy::from(&cert_strategy(&v, m, "strategy")?), None))
}

// Reports.

fn point_value(p: &[Rational], m: &Mdp) -> Value {
    let mut out = Map::new();
    for (i, x) in p.iter().enumerate() {
        out.insert(m.state_name(i).to_string(), rat_str(x));
    }
    Value::Object(out)
}

pub fn verdict_value(v: &Verdict, m: &Mdp) -> Value {
    match v {
        Verdict::Pass => json!({ "verdict": "pass" }),
        Verdict::Fail(w) => json!({
            "verdict": "fail",
            "witness": point_value(&w.point, m),
            "description": w.description,
        }),
        Verdict::Inconclusive(why) => json!({ "verdict": "inconclusive", "reason": why }),
    }
}

pub fn check_report_value(r: &CheckReport, m: &Mdp) -> Value {
    let mut out = Map::new();
    for (name, v) in r.verdicts() {
        out.insert(name.to_string(), verdict_value(v, m));
    }
    let sim = match &r.simulation.result {
        SimulationResult::Consistent => json!({ "result": "consistent" }),
        SimulationResult::Truncated => json!({ "result": "truncated" }),
        SimulationResult::Left { step, set, point } => json!({
            "result": "left",
            "step": step,
            "set": set,
            "point": point_value(point, m),
        }),
        SimulationResult::StrategyError(e) => {
            json!({ "result": "strategy-error", "step": e.step, "message": e.message })
        }
    };
    let mut sim = sim;
    let so = sim.as_object_mut().expect("object");
    so.insert("horizon".into(), json!(r.simulation.horizon));
    so.insert("steps_checked".into(), json!(r.simulation.steps_checked));
    out.insert("simulation".into(), sim);
    out.insert(
        "overall".into(),
        json!(if r.all_pass() {
            "pass"
        } else if r.any_fail() {
            "fail"
        } else {
            "inconclusive"
        }),
    );
    Value::Object(out)
}

/// Human-readable form of a check report, one line per verdict.
pub fn format_check_report(r: &CheckReport) -> String {
    let mut out = String::new();
    for (name, v) in r.verdicts() {
        out.push_str(&format!("{name:<12} {v}\n"));
    }
    let sim = match &r.simulation.result {
        SimulationResult::Consistent => String::from("consistent"),
        SimulationResult::Truncated => String::from("truncated (numbers too large)"),
        SimulationResult::Left { step, set, point } => {
            format!("left the {set} at step {step}: ({})", format_point(point))
        }
        SimulationResult::StrategyError(e) => format!("strategy error: {e}"),
    };
    out.push_str(&format!(
        "{:<12} {} ({} of {} steps)\n",
        "simulation", sim, r.simulation.steps_checked, r.simulation.horizon
    ));
    out
}

pub fn json_text(v: &Value) -> String {
    pretty(v)
}
