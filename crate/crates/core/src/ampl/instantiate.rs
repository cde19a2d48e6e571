use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ast::*;
use super::data::DataSection;
use super::error::{CompileError, CompileErrorKind};
use super::validate::{subscripted, validate};
use crate::instance::{LinearObjective, ProblemInstance, Provenance, Row, Variable};

/// How a model with several objectives is reduced to what the solver sees.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum ObjectivePolicy {
    /// Exactly one objective is allowed.
    #[default]
    Single,
    /// Objectives are optimized in declaration order, each over the optimal
    /// face of the previous ones.
    Lexicographic,
    /// One objective `sum_k w_k * f_k` over the named objectives, taking the
    /// sense of the first declared objective that carries a weight.
    Weighted(IndexMap<String, f64>),
}

impl fmt::Display for ObjectivePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectivePolicy::Single => f.write_str("single"),
            ObjectivePolicy::Lexicographic => f.write_str("lexicographic"),
            ObjectivePolicy::Weighted(w) => {
                let parts: Vec<String> = w.iter().map(|(k, v)| format!("{k}={v}")).collect();
                write!(f, "weighted:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for ObjectivePolicy {
    type Err = String;

    /// Accepts `single`, `lexicographic`, or `weighted:Name=w,Other=w`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "single" => Ok(ObjectivePolicy::Single),
            "lexicographic" => Ok(ObjectivePolicy::Lexicographic),
            other => {
                let Some(spec) = other.strip_prefix("weighted:") else {
                    return Err(format!(
                        "unknown objective policy '{other}' (expected single, lexicographic, or weighted:Name=w,...)"
                    ));
                };
                let mut weights = IndexMap::new();
                for part in spec.split(',').filter(|p| !p.trim().is_empty()) {
                    let (name, w) = part
                        .split_once('=')
                        .ok_or_else(|| format!("weight '{part}' is not of the form Name=value"))?;
                    let w: f64 = w
                        .trim()
                        .parse()
                        .map_err(|_| format!("weight for '{}' is not a number", name.trim()))?;
                    weights.insert(name.trim().to_owned(), w);
                }
                if weights.is_empty() {
                    return Err("weighted policy lists no objectives".into());
                }
                Ok(ObjectivePolicy::Weighted(weights))
            }
        }
    }
}

impl Serialize for ObjectivePolicy {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ObjectivePolicy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Default)]
struct Linear {
    constant: f64,
    terms: BTreeMap<usize, f64>,
}

impl Linear {
    fn constant(c: f64) -> Self {
        Linear {
            constant: c,
            terms: BTreeMap::new(),
        }
    }

    fn is_constant(&self) -> bool {
        self.terms.values().all(|&a| a == 0.0)
    }

    fn scale(mut self, k: f64) -> Self {
        self.constant *= k;
        for a in self.terms.values_mut() {
            *a *= k;
        }
        self
    }

    fn add(mut self, other: Linear, sign: f64) -> Self {
        self.constant += sign * other.constant;
        for (j, a) in other.terms {
            *self.terms.entry(j).or_insert(0.0) += sign * a;
        }
        self
    }

    fn sparse(&self) -> Vec<(usize, f64)> {
        self.terms.iter().filter(|(_, &a)| a != 0.0).map(|(&j, &a)| (j, a)).collect()
    }
}

struct VarFamily {
    start: usize,
    members: Vec<String>,
}

struct Grounder<'a> {
    data: &'a DataSection,
    families: HashMap<&'a str, VarFamily>,
}

type Env = Vec<(String, String)>;

impl<'a> Grounder<'a> {
    fn members(&self, set: &str) -> &'a [String] {
        self.data.sets.get(set).map(Vec::as_slice).unwrap_or(&[])
    }

    fn resolve_subscripts(&self, owner: &str, name: &str, subs: &[Subscript], env: &Env) -> Vec<String> {
        subs.iter()
            .map(|s| match s {
                Subscript::Member(m) => m.clone(),
                Subscript::Dummy(d) => env
                    .iter()
                    .rev()
                    .find(|(k, _)| k == d)
                    .map(|(_, v)| v.clone())
                    .unwrap_or_else(|| panic!("validated subscript {d} of {name} in {owner} is bound")),
            })
            .collect()
    }

    fn eval(&self, owner: &str, expr: &Expr, env: &mut Env) -> Result<Linear, CompileError> {
        match expr {
            Expr::Num(v) => Ok(Linear::constant(*v)),
            Expr::Ref { name, subscripts } => {
                let keys = self.resolve_subscripts(owner, name, subscripts, env);
                if let Some(fam) = self.families.get(name.as_str()) {
                    let offset = if keys.is_empty() {
                        0
                    } else {
                        fam.members.iter().position(|m| *m == keys[0]).ok_or_else(|| {
                            CompileError::symbol(
                                CompileErrorKind::UnresolvedSymbol,
                                subscripted(name, &keys),
                                format!(
                                    "in '{owner}': '{}' is not a member of the index set of variable '{name}'",
                                    keys[0]
                                ),
                            )
                        })?
                    };
                    let mut lin = Linear::default();
                    lin.terms.insert(fam.start + offset, 1.0);
                    return Ok(lin);
                }
                let key_refs: Vec<&str> = keys.iter().map(String::as_str).collect();
                let value = self
                    .data
                    .params
                    .get(name)
                    .and_then(|p| p.lookup(&key_refs))
                    .ok_or_else(|| {
                        let label = subscripted(name, &keys);
                        CompileError::symbol(
                            CompileErrorKind::UnresolvedSymbol,
                            &label,
                            format!("in '{owner}': no value is available for {label}"),
                        )
                    })?;
                Ok(Linear::constant(value))
            }
            Expr::Sum { binder, body } => {
                let dummy = binder.dummy.clone().expect("sum binders carry a dummy");
                let mut acc = Linear::default();
                for m in self.members(&binder.set) {
                    env.push((dummy.clone(), m.clone()));
                    let term = self.eval(owner, body, env);
                    env.pop();
                    acc = acc.add(term?, 1.0);
                }
                Ok(acc)
            }
            Expr::Add(l, r) => Ok(self.eval(owner, l, env)?.add(self.eval(owner, r, env)?, 1.0)),
            Expr::Sub(l, r) => Ok(self.eval(owner, l, env)?.add(self.eval(owner, r, env)?, -1.0)),
            Expr::Neg(e) => Ok(self.eval(owner, e, env)?.scale(-1.0)),
            Expr::Mul(l, r) => {
                let a = self.eval(owner, l, env)?;
                let b = self.eval(owner, r, env)?;
                if a.is_constant() {
                    Ok(b.scale(a.constant))
                } else if b.is_constant() {
                    Ok(a.scale(b.constant))
                } else {
                    Err(CompileError::symbol(
                        CompileErrorKind::NonlinearExpression,
                        owner,
                        format!(
                            "in '{owner}': the product {} multiplies two expressions that both contain variables; only linear expressions are supported",
                            super::render::render_expr(expr)
                        ),
                    ))
                }
            }
        }
    }

    fn constant_of(&self, owner: &str, expr: &Expr, env: &mut Env) -> Result<f64, CompileError> {
        let lin = self.eval(owner, expr, env)?;
        Ok(lin.constant)
    }

    /// Expands an indexing list into member tuples, in data order.
    fn expand(&self, index: &[IndexEntry]) -> Vec<Vec<(Option<String>, String)>> {
        let mut combos = vec![Vec::new()];
        for entry in index {
            let mut next = Vec::new();
            for c in &combos {
                for m in self.members(&entry.set) {
                    let mut c2: Vec<(Option<String>, String)> = c.clone();
                    c2.push((entry.dummy.clone(), m.clone()));
                    next.push(c2);
                }
            }
            combos = next;
        }
        combos
    }
}

fn env_of(combo: &[(Option<String>, String)]) -> Env {
    combo
        .iter()
        .filter_map(|(d, m)| d.as_ref().map(|d| (d.clone(), m.clone())))
        .collect()
}

/// Grounds a model over its data: indexed declarations expand over set
/// members in data order, sums unroll, constants fold, and several
/// objectives are reduced according to `policy`.
pub fn instantiate(model: &Model, data: &DataSection, policy: &ObjectivePolicy) -> Result<ProblemInstance, CompileError> {
    validate(model, data)?;
    let mut g = Grounder {
        data,
        families: HashMap::new(),
    };

    let mut variables = Vec::new();
    let mut var_provenance = Vec::new();
    for v in &model.vars {
        let start = variables.len();
        let mut members = Vec::new();
        for combo in g.expand(&v.index) {
            let keys: Vec<String> = combo.iter().map(|(_, m)| m.clone()).collect();
            let name = subscripted(&v.name, &keys);
            let mut env = env_of(&combo);
            let mut lower = match &v.lower {
                Some(e) => g.constant_of(&v.name, e, &mut env)?,
                None => f64::NEG_INFINITY,
            };
            let mut upper = match &v.upper {
                Some(e) => g.constant_of(&v.name, e, &mut env)?,
                None => f64::INFINITY,
            };
            if v.integrality == Integrality::Binary {
                lower = lower.max(0.0);
                upper = upper.min(1.0);
            }
            if lower > upper {
                return Err(CompileError::symbol(
                    CompileErrorKind::BoundViolation,
                    &name,
                    format!("variable {name} has lower bound {lower} above its upper bound {upper}"),
                ));
            }
            members.extend(keys.first().cloned());
            variables.push(Variable {
                name,
                lower,
                upper,
                integrality: v.integrality,
            });
            var_provenance.push(Provenance {
                declaration: v.name.clone(),
                members: keys,
            });
        }
        g.families.insert(v.name.as_str(), VarFamily { start, members });
    }

    let mut rows = Vec::new();
    let mut row_provenance = Vec::new();
    for c in &model.constraints {
        for combo in g.expand(&c.index) {
            let keys: Vec<String> = combo.iter().map(|(_, m)| m.clone()).collect();
            let mut env = env_of(&combo);
            let lhs = g.eval(&c.name, &c.lhs, &mut env)?;
            let rhs = g.eval(&c.name, &c.rhs, &mut env)?;
            let diff = lhs.add(rhs, -1.0);
            rows.push(Row {
                name: subscripted(&c.name, &keys),
                coefficients: diff.sparse(),
                relation: c.relation,
                rhs: -diff.constant,
            });
            row_provenance.push(Provenance {
                declaration: c.name.clone(),
                members: keys,
            });
        }
    }

    let ground_objective = |o: &ObjectiveDecl| -> Result<LinearObjective, CompileError> {
        let lin = g.eval(&o.name, &o.expr, &mut Vec::new())?;
        Ok(LinearObjective {
            name: o.name.clone(),
            sense: o.sense,
            coefficients: lin.sparse(),
            constant: lin.constant,
        })
    };

    let (objective, tiebreak_objectives) = match policy {
        ObjectivePolicy::Single => {
            if model.objectives.len() > 1 {
                let names: Vec<&str> = model.objectives.iter().map(|o| o.name.as_str()).collect();
                return Err(CompileError::symbol(
                    CompileErrorKind::ObjectivePolicy,
                    names[1],
                    format!(
                        "the model declares {} objectives ({}) but exactly one is expected",
                        names.len(),
                        names.join(", ")
                    ),
                ));
            }
            (ground_objective(&model.objectives[0])?, Vec::new())
        }
        ObjectivePolicy::Lexicographic => {
            let mut all = model
                .objectives
                .iter()
                .map(&ground_objective)
                .collect::<Result<Vec<_>, _>>()?;
            let first = all.remove(0);
            (first, all)
        }
        ObjectivePolicy::Weighted(weights) => {
            for name in weights.keys() {
                if !model.objectives.iter().any(|o| &o.name == name) {
                    return Err(CompileError::symbol(
                        CompileErrorKind::ObjectivePolicy,
                        name,
                        format!("the objective policy weights '{name}', which the model does not declare"),
                    ));
                }
            }
            let mut sense = None;
            let mut acc = Linear::default();
            let mut parts = Vec::new();
            for o in &model.objectives {
                let Some(&w) = weights.get(&o.name) else { continue };
                sense.get_or_insert(o.sense);
                let lin = g.eval(&o.name, &o.expr, &mut Vec::new())?;
                acc = acc.add(lin.scale(w), 1.0);
                parts.push(o.name.clone());
            }
            (
                LinearObjective {
                    name: parts.join("+"),
                    sense: sense.expect("weights name at least one declared objective"),
                    coefficients: acc.sparse(),
                    constant: acc.constant,
                },
                Vec::new(),
            )
        }
    };

    Ok(ProblemInstance {
        variables,
        objective,
        tiebreak_objectives,
        rows,
        var_provenance,
        row_provenance,
    })
}
