use serde::{Deserialize, Serialize};

use crate::ampl::ObjectivePolicy;
use crate::llm::Target;
use crate::solver::SolverParams;

fn five() -> usize {
    5
}

/// One configuration of the generate/solve/refine pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    pub label: String,
    pub target: Target,
    pub structured: bool,
    pub refinement: bool,
    #[serde(default = "five")]
    pub max_refinements: usize,
    #[serde(default = "five")]
    pub runs: usize,
    #[serde(default)]
    pub objective_policy: ObjectivePolicy,
    #[serde(default)]
    pub solver_params: SolverParams,
    /// Values come from the description and are inlined in the spec; no
    /// tables, manifest or data documents are used.
    #[serde(default)]
    pub inline_data: bool,
}

impl VariantConfig {
    pub fn new(label: &str, target: Target, structured: bool, refinement: bool) -> Self {
        VariantConfig {
            label: label.to_string(),
            target,
            structured,
            refinement,
            max_refinements: 5,
            runs: 5,
            objective_policy: ObjectivePolicy::Single,
            solver_params: SolverParams::default(),
            inline_data: false,
        }
    }

    /// `Ampl1`..`Ampl4`, `Python1`..`Python4`, plus `Baseline` (structured,
    /// refinement, external runtime, inline data).
    pub fn preset(label: &str) -> Option<Self> {
        if label == "Baseline" {
            let mut v = Self::new(label, Target::ExternalRuntime, true, true);
            v.inline_data = true;
            return Some(v);
        }
        let (target, n) = if let Some(n) = label.strip_prefix("Ampl") {
            (Target::Ampl, n)
        } else {
            (Target::ExternalRuntime, label.strip_prefix("Python")?)
        };
        let (structured, refinement) = match n {
            "1" => (false, false),
            "2" => (false, true),
            "3" => (true, false),
            "4" => (true, true),
            _ => return None,
        };
        Some(Self::new(label, target, structured, refinement))
    }

    /// The eight ablation variants in label order.
    pub fn matrix() -> Vec<Self> {
        ["Ampl1", "Ampl2", "Ampl3", "Ampl4", "Python1", "Python2", "Python3", "Python4"]
            .iter()
            .map(|l| Self::preset(l).expect("built-in preset"))
            .collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.label.trim().is_empty() {
            return Err("variant label is empty".into());
        }
        if self.runs == 0 {
            return Err(format!("variant {}: runs must be at least 1", self.label));
        }
        self.solver_params.validate().map_err(|e| format!("variant {}: {e}", self.label))
    }

    /// Refinement attempts this variant may make.
    pub fn refinement_budget(&self) -> usize {
        if self.refinement {
            self.max_refinements
        } else {
            0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_cover_the_matrix() {
        let m = VariantConfig::matrix();
        assert_eq!(m.len(), 8);
        let mut keys: Vec<_> = m.iter().map(|v| (v.target, v.structured, v.refinement)).collect();
        keys.sort_by_key(|k| format!("{k:?}"));
        keys.dedup();
        assert_eq!(keys.len(), 8);
        let a2 = VariantConfig::preset("Ampl2").unwrap();
        assert!(!a2.structured && a2.refinement && a2.target == Target::Ampl);
        let p3 = VariantConfig::preset("Python3").unwrap();
        assert!(p3.structured && !p3.refinement && p3.target == Target::ExternalRuntime);
        assert_eq!(p3.refinement_budget(), 0);
        assert!(VariantConfig::preset("Ampl5").is_none());
        assert!(VariantConfig::preset("Baseline").unwrap().inline_data);
    }

    #[test]
    fn config_defaults() {
        let v: VariantConfig =
            toml::from_str("label = \"Mine\"\ntarget = \"ampl\"\nstructured = true\nrefinement = false\nobjective_policy = \"lexicographic\"\n")
                .unwrap();
        assert_eq!(v.max_refinements, 5);
        assert_eq!(v.runs, 5);
        assert_eq!(v.objective_policy, ObjectivePolicy::Lexicographic);
        assert!(v.validate().is_ok());
        assert!(VariantConfig { runs: 0, ..v }.validate().is_err());
    }
}
