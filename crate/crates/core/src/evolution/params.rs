use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("`{key}` out of range: {reason}")]
pub struct ParamError {
    pub key: &'static str,
    pub reason: String,
}

/// How per-episode scores are folded into one fitness value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessAggregation {
    #[default]
    Mean,
    Min,
    Median,
}

impl FitnessAggregation {
    pub fn aggregate(self, scores: &[f64]) -> f64 {
        if scores.is_empty() {
            return f64::NAN;
        }
        match self {
            FitnessAggregation::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
            FitnessAggregation::Min => scores.iter().copied().fold(f64::INFINITY, f64::min),
            FitnessAggregation::Median => {
                let mut sorted = scores.to_vec();
                sorted.sort_by(f64::total_cmp);
                let mid = sorted.len() / 2;
                if sorted.len() % 2 == 1 {
                    sorted[mid]
                } else {
                    (sorted[mid - 1] + sorted[mid]) / 2.0
                }
            }
        }
    }
}

/// Meta-parameters of the evolution process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct EvolutionParams {
    /// Population size: number of root teams after every generation.
    pub nb_roots: usize,
    /// Fraction of the roots deleted each generation.
    pub ratio_deleted_roots: f64,
    pub nb_generations: usize,
    pub max_init_outgoing_edges: usize,
    pub max_outgoing_edges: usize,
    pub max_program_size: usize,
    pub nb_registers: usize,
    pub nb_iterations_per_policy_evaluation: usize,
    /// Step cap per episode; `None` uses the environment's horizon.
    pub max_steps_per_evaluation: Option<usize>,
    pub p_edge_delete: f64,
    pub p_edge_add: f64,
    pub p_program_mutate: f64,
    pub p_edge_destination_change: f64,
    pub p_edge_destination_is_action: f64,
    pub p_line_delete: f64,
    pub p_line_add: f64,
    pub p_line_mutate: f64,
    pub p_line_swap: f64,
    pub archive_size: usize,
    pub archiving_probability: f64,
    /// Cap on mutation rounds spent looking for an original program.
    pub max_mutation_rounds: usize,
    pub fitness_aggregation: FitnessAggregation,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        Self {
            nb_roots: 100,
            ratio_deleted_roots: 0.85,
            nb_generations: 200,
            max_init_outgoing_edges: 3,
            max_outgoing_edges: 10,
            max_program_size: 96,
            nb_registers: 8,
            nb_iterations_per_policy_evaluation: 1,
            max_steps_per_evaluation: None,
            p_edge_delete: 0.7,
            p_edge_add: 0.7,
            p_program_mutate: 0.2,
            p_edge_destination_change: 0.1,
            p_edge_destination_is_action: 0.5,
            p_line_delete: 0.5,
            p_line_add: 0.5,
            p_line_mutate: 1.0,
            p_line_swap: 1.0,
            archive_size: 50,
            archiving_probability: 0.05,
            max_mutation_rounds: 16,
            fitness_aggregation: FitnessAggregation::Mean,
        }
    }
}

impl EvolutionParams {
    /// Number of roots deleted per generation, `floor(ratio × nbRoots)`.
    pub fn deleted_roots(&self) -> usize {
        // guard against 0.85 * 100 landing a hair below 85
        (self.ratio_deleted_roots * self.nb_roots as f64 + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        fn fail(key: &'static str, reason: impl Into<String>) -> Result<(), ParamError> {
            Err(ParamError {
                key,
                reason: reason.into(),
            })
        }
        if self.nb_roots < 2 {
            return fail("nbRoots", "must be at least 2");
        }
        let ratio = self.ratio_deleted_roots;
        if !(ratio > 0.0 && ratio < 1.0) {
            return fail("ratioDeletedRoots", format!("{ratio} is not in (0, 1)"));
        }
        if self.deleted_roots() == 0 {
            return fail("ratioDeletedRoots", "deletes no root at this population size");
        }
        if self.nb_generations < 1 {
            return fail("nbGenerations", "must be at least 1");
        }
        if self.max_init_outgoing_edges < 2 {
            return fail("maxInitOutgoingEdges", "must be at least 2");
        }
        if self.max_outgoing_edges < 2 {
            return fail("maxOutgoingEdges", "must be at least 2");
        }
        if self.max_program_size < 1 {
            return fail("maxProgramSize", "must be at least 1");
        }
        if self.nb_registers < 1 {
            return fail("nbRegisters", "must be at least 1");
        }
        if self.nb_iterations_per_policy_evaluation < 1 {
            return fail("nbIterationsPerPolicyEvaluation", "must be at least 1");
        }
        if self.max_steps_per_evaluation == Some(0) {
            return fail("maxStepsPerEvaluation", "must be at least 1");
        }
        if self.max_mutation_rounds < 1 {
            return fail("maxMutationRounds", "must be at least 1");
        }
        let probabilities = [
            ("pEdgeDelete", self.p_edge_delete),
            ("pEdgeAdd", self.p_edge_add),
            ("pProgramMutate", self.p_program_mutate),
            ("pEdgeDestinationChange", self.p_edge_destination_change),
            ("pEdgeDestinationIsAction", self.p_edge_destination_is_action),
            ("pLineDelete", self.p_line_delete),
            ("pLineAdd", self.p_line_add),
            ("pLineMutate", self.p_line_mutate),
            ("pLineSwap", self.p_line_swap),
            ("archivingProbability", self.archiving_probability),
        ];
        for (key, p) in probabilities {
            if !(0.0..=1.0).contains(&p) {
                return fail(key, format!("{p} is not a probability"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = EvolutionParams::default();
        p.validate().unwrap();
        assert_eq!(p.deleted_roots(), 85);
        assert_eq!(p.nb_roots - p.deleted_roots(), 15);
    }

    #[test]
    fn out_of_range_values_name_their_key() {
        let p = EvolutionParams {
            ratio_deleted_roots: 1.5,
            ..Default::default()
        };
        assert_eq!(p.validate().unwrap_err().key, "ratioDeletedRoots");
        let p = EvolutionParams {
            p_line_swap: -0.1,
            ..Default::default()
        };
        assert_eq!(p.validate().unwrap_err().key, "pLineSwap");
        let p = EvolutionParams {
            nb_roots: 1,
            ..Default::default()
        };
        assert_eq!(p.validate().unwrap_err().key, "nbRoots");
    }

    #[test]
    fn aggregation() {
        let scores = [1.0, 2.0, 3.0];
        assert_eq!(FitnessAggregation::Mean.aggregate(&scores), 2.0);
        assert_eq!(FitnessAggregation::Min.aggregate(&scores), 1.0);
        assert_eq!(FitnessAggregation::Median.aggregate(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn json_keys_are_camel_case() {
        let json = serde_json::to_value(EvolutionParams::default()).unwrap();
        assert!(json.get("ratioDeletedRoots").is_some());
        assert!(json.get("nbIterationsPerPolicyEvaluation").is_some());
        assert!(json.get("pEdgeDestinationIsAction").is_some());
    }
}
