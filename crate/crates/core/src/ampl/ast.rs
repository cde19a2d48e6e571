use serde::{Deserialize, Serialize};

/// One `{i in S}` entry. The dummy is optional in declarations (`{S}`) but
/// required in `sum` binders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub dummy: Option<String>,
    pub set: String,
}

impl IndexEntry {
    pub fn new(dummy: Option<&str>, set: &str) -> Self {
        IndexEntry {
            dummy: dummy.map(str::to_owned),
            set: set.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Subscript {
    /// A dummy index bound by an enclosing binder.
    Dummy(String),
    /// A quoted set member, e.g. `x['A']`.
    Member(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Num(f64),
    /// Parameter, variable, or dummy reference; resolved during validation.
    Ref { name: String, subscripts: Vec<Subscript> },
    Sum { binder: IndexEntry, body: Box<Expr> },
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
}

impl Expr {
    pub fn reference(name: &str, subscripts: &[&str]) -> Expr {
        Expr::Ref {
            name: name.to_owned(),
            subscripts: subscripts.iter().map(|s| Subscript::Dummy((*s).to_owned())).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrality {
    Continuous,
    Integer,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    pub fn keyword(self) -> &'static str {
        match self {
            Sense::Maximize => "maximize",
            Sense::Minimize => "minimize",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetDecl {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDecl {
    pub name: String,
    pub index: Vec<IndexEntry>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub index: Vec<IndexEntry>,
    pub lower: Option<Expr>,
    pub upper: Option<Expr>,
    pub integrality: Integrality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintDecl {
    pub name: String,
    pub index: Vec<IndexEntry>,
    pub lhs: Expr,
    pub relation: Relation,
    pub rhs: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveDecl {
    pub name: String,
    pub sense: Sense,
    pub expr: Expr,
}

/// A parsed model document. Declarations keep their source order within
/// each category; rendering emits the categories in field order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub sets: Vec<SetDecl>,
    pub params: Vec<ParamDecl>,
    pub vars: Vec<VarDecl>,
    pub constraints: Vec<ConstraintDecl>,
    pub objectives: Vec<ObjectiveDecl>,
}

impl Model {
    pub fn param(&self, name: &str) -> Option<&ParamDecl> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn var(&self, name: &str) -> Option<&VarDecl> {
        self.vars.iter().find(|v| v.name == name)
    }

    pub fn has_set(&self, name: &str) -> bool {
        self.sets.iter().any(|s| s.name == name)
    }
}
