//! Step-1 output: problem components, symbol metadata, and the rewritten
//! description with `\param{..}` / `\var{..}` markup.
//!
//! Wire form, one item per line under fixed block headers:
//!
//! ```text
//! OBJECTIVES:
//! maximize total sales revenue
//! PARAMETERS:
//! price | one-dimensional | selling price of each product
//! VARIABLES:
//! x | one-dimensional | units produced of each product
//! CONSTRAINTS:
//! resource use stays within availability
//! REWRITTEN:
//! Sell \var{x} units at \param{price} ...
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ampl::is_identifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dimension {
    Scalar,
    OneDimensional,
    TwoDimensional,
}

impl Dimension {
    pub fn arity(self) -> usize {
        match self {
            Dimension::Scalar => 0,
            Dimension::OneDimensional => 1,
            Dimension::TwoDimensional => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Scalar => "scalar",
            Dimension::OneDimensional => "one-dimensional",
            Dimension::TwoDimensional => "two-dimensional",
        }
    }

    pub fn from_arity(arity: usize) -> Option<Dimension> {
        match arity {
            0 => Some(Dimension::Scalar),
            1 => Some(Dimension::OneDimensional),
            2 => Some(Dimension::TwoDimensional),
            _ => None,
        }
    }
}

impl std::str::FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "scalar" => Ok(Dimension::Scalar),
            "one-dimensional" => Ok(Dimension::OneDimensional),
            "two-dimensional" => Ok(Dimension::TwoDimensional),
            other => Err(format!(
                "unknown dimension '{other}' (expected scalar, one-dimensional or two-dimensional)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolKind {
    Parameter,
    Variable,
}

impl SymbolKind {
    fn markup(self) -> &'static str {
        match self {
            SymbolKind::Parameter => "param",
            SymbolKind::Variable => "var",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolMeta {
    pub name: String,
    pub description: String,
    pub dimension: Dimension,
    pub kind: SymbolKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StructuredProblem {
    pub objectives: Vec<String>,
    pub constraints: Vec<String>,
    pub parameters: Vec<SymbolMeta>,
    pub variables: Vec<SymbolMeta>,
    pub rewritten_description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed-structure: {message}{}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
pub struct StructureError {
    pub message: String,
    pub line: Option<usize>,
}

impl StructureError {
    fn new(message: impl Into<String>, line: Option<usize>) -> Self {
        StructureError {
            message: message.into(),
            line,
        }
    }
}

const HEADERS: [&str; 5] = ["OBJECTIVES:", "PARAMETERS:", "VARIABLES:", "CONSTRAINTS:", "REWRITTEN:"];

/// `\param{NAME}` and `\var{NAME}` occurrences in order.
pub fn markup_tokens(text: &str) -> Vec<(SymbolKind, String)> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(i) = rest.find('\\') {
        rest = &rest[i + 1..];
        let kind = if rest.starts_with("param{") {
            SymbolKind::Parameter
        } else if rest.starts_with("var{") {
            SymbolKind::Variable
        } else {
            continue;
        };
        let open = kind.markup().len() + 1;
        if let Some(close) = rest[open..].find('}') {
            out.push((kind, rest[open..open + close].to_string()));
            rest = &rest[open + close + 1..];
        }
    }
    out
}

impl StructuredProblem {
    pub fn symbols(&self) -> impl Iterator<Item = &SymbolMeta> {
        self.parameters.iter().chain(&self.variables)
    }

    pub fn symbol(&self, name: &str) -> Option<&SymbolMeta> {
        self.symbols().find(|s| s.name == name)
    }

    /// Checks name validity and uniqueness and that every markup token names
    /// a symbol of the matching kind.
    pub fn check(&self) -> Result<(), StructureError> {
        let mut seen = std::collections::HashSet::new();
        for s in self.symbols() {
            if !is_identifier(&s.name) {
                return Err(StructureError::new(format!("'{}' is not a valid identifier", s.name), None));
            }
            if !seen.insert(s.name.as_str()) {
                return Err(StructureError::new(format!("symbol '{}' is declared twice", s.name), None));
            }
        }
        for (kind, name) in markup_tokens(&self.rewritten_description) {
            match self.symbol(&name) {
                Some(s) if s.kind == kind => {}
                Some(_) => {
                    return Err(StructureError::new(
                        format!("\\{}{{{name}}} refers to a symbol of the other kind", kind.markup()),
                        None,
                    ))
                }
                None => {
                    return Err(StructureError::new(
                        format!("\\{}{{{name}}} does not name a declared symbol", kind.markup()),
                        None,
                    ))
                }
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<StructuredProblem, StructureError> {
        let mut blocks: [Option<Vec<(usize, &str)>>; 5] = Default::default();
        let mut current: Option<usize> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end();
            if let Some(h) = HEADERS.iter().position(|h| line.trim() == *h) {
                if blocks[h].is_some() {
                    return Err(StructureError::new(format!("block {} appears twice", HEADERS[h]), Some(line_no)));
                }
                if current.is_some_and(|c| c > h) || current.is_none() && h != 0 {
                    return Err(StructureError::new(
                        format!("block {} is out of order", HEADERS[h]),
                        Some(line_no),
                    ));
                }
                blocks[h] = Some(Vec::new());
                current = Some(h);
                continue;
            }
            match current {
                Some(c) => blocks[c].as_mut().unwrap().push((line_no, line)),
                None if line.trim().is_empty() => {}
                None => return Err(StructureError::new("text before the OBJECTIVES: block", Some(line_no))),
            }
        }
        for (h, b) in HEADERS.iter().zip(&blocks) {
            if b.is_none() {
                return Err(StructureError::new(format!("missing block {h}"), None));
            }
        }
        let [objectives, parameters, variables, constraints, rewritten] = blocks.map(Option::unwrap);
        let items = |b: &[(usize, &str)]| -> Vec<String> {
            b.iter()
                .map(|(_, l)| l.trim())
                .filter(|l| !l.is_empty())
                .map(|l| l.strip_prefix("- ").unwrap_or(l).trim().to_string())
                .collect()
        };
        let symbols = |b: &[(usize, &str)], kind| -> Result<Vec<SymbolMeta>, StructureError> {
            b.iter()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|&(n, l)| {
                    let l = l.trim();
                    let l = l.strip_prefix("- ").unwrap_or(l);
                    let parts: Vec<&str> = l.splitn(3, '|').map(str::trim).collect();
                    let [name, dim, desc] = parts[..] else {
                        return Err(StructureError::new("expected 'name | dimension | description'", Some(n)));
                    };
                    if name.is_empty() {
                        return Err(StructureError::new("empty symbol name", Some(n)));
                    }
                    Ok(SymbolMeta {
                        name: name.to_string(),
                        description: desc.to_string(),
                        dimension: dim.parse().map_err(|e| StructureError::new(e, Some(n)))?,
                        kind,
                    })
                })
                .collect()
        };
        let rewritten_description = rewritten
            .iter()
            .map(|(_, l)| *l)
            .collect::<Vec<_>>()
            .join("\n")
            .trim()
            .to_string();
        let sp = StructuredProblem {
            objectives: items(&objectives),
            constraints: items(&constraints),
            parameters: symbols(&parameters, SymbolKind::Parameter)?,
            variables: symbols(&variables, SymbolKind::Variable)?,
            rewritten_description,
        };
        if sp.objectives.is_empty() {
            return Err(StructureError::new("OBJECTIVES: block is empty", None));
        }
        sp.check()?;
        Ok(sp)
    }
}

impl fmt::Display for StructuredProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "OBJECTIVES:")?;
        for o in &self.objectives {
            writeln!(f, "{o}")?;
        }
        for (header, list) in [("PARAMETERS:", &self.parameters), ("VARIABLES:", &self.variables)] {
            writeln!(f, "{header}")?;
            for s in list {
                writeln!(f, "{} | {} | {}", s.name, s.dimension.as_str(), s.description)?;
            }
        }
        writeln!(f, "CONSTRAINTS:")?;
        for c in &self.constraints {
            writeln!(f, "{c}")?;
        }
        writeln!(f, "REWRITTEN:")?;
        writeln!(f, "{}", self.rewritten_description)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "OBJECTIVES:\n- maximize revenue\n\nPARAMETERS:\nprice | one-dimensional | unit price\nbudget | scalar | money\nVARIABLES:\nx | one-dimensional | units made\nCONSTRAINTS:\nspend at most \\param{budget}\nREWRITTEN:\nMake \\var{x} units sold at \\param{price}.\n";

    #[test]
    fn parses_and_normalizes() {
        let sp = StructuredProblem::parse(SAMPLE).unwrap();
        assert_eq!(sp.objectives, vec!["maximize revenue"]);
        assert_eq!(sp.parameters[1].dimension, Dimension::Scalar);
        assert_eq!(sp.variables[0].kind, SymbolKind::Variable);
        let text = sp.to_string();
        assert!(text.starts_with("OBJECTIVES:\nmaximize revenue\nPARAMETERS:\nprice | one-dimensional | unit price\n"));
        assert_eq!(StructuredProblem::parse(&text).unwrap(), sp);
    }

    #[test]
    fn strictness() {
        let no_params = SAMPLE.replace("PARAMETERS:\n", "");
        assert!(StructuredProblem::parse(&no_params).unwrap_err().message.contains("PARAMETERS"));
        let preamble = format!("Sure! Here it is.\n{SAMPLE}");
        assert_eq!(StructuredProblem::parse(&preamble).unwrap_err().line, Some(1));
        let bad_dim = SAMPLE.replace("| scalar |", "| 3d |");
        assert_eq!(StructuredProblem::parse(&bad_dim).unwrap_err().line, Some(6));
        let dangling = SAMPLE.replace("\\var{x}", "\\var{z}");
        assert!(StructuredProblem::parse(&dangling).is_err());
        let wrong_kind = SAMPLE.replace("\\var{x}", "\\param{x}");
        assert!(StructuredProblem::parse(&wrong_kind).is_err());
        let dup = SAMPLE.replace("x | one", "price | one");
        assert!(StructuredProblem::parse(&dup).unwrap_err().message.contains("twice"));
    }

    #[test]
    fn markup_scanning() {
        let toks = markup_tokens("a \\param{p} b \\var{x}\\var{y} \\other{z} \\param{q");
        assert_eq!(
            toks,
            vec![
                (SymbolKind::Parameter, "p".into()),
                (SymbolKind::Variable, "x".into()),
                (SymbolKind::Variable, "y".into())
            ]
        );
    }
}
