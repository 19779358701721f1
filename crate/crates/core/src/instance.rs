use crate::graph::{zeta_bar, Network, ScenarioSet};
use crate::risk::{BudgetedAmbiguitySet, RiskSpec};
use crate::{Error, Result};

/// Everything that defines one interdiction game.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub net: Network,
    pub scenarios: ScenarioSet,
    pub amb: BudgetedAmbiguitySet,
    pub risk: RiskSpec,
    pub budget: usize,
    zeta_bar: f64,
}

impl Instance {
    pub fn new(
        net: Network,
        scenarios: ScenarioSet,
        amb: BudgetedAmbiguitySet,
        risk: RiskSpec,
        budget: usize,
    ) -> Result<Self> {
        if scenarios.num_arcs() != net.num_arcs() {
            return Err(Error::DimensionMismatch {
                what: "scenario capacities",
                expected: net.num_arcs(),
                found: scenarios.num_arcs(),
            });
        }
        if amb.len() != scenarios.len() {
            return Err(Error::DimensionMismatch {
                what: "ambiguity set",
                expected: scenarios.len(),
                found: amb.len(),
            });
        }
        let zeta_bar = zeta_bar(&net, &scenarios)?;
        Ok(Self {
            net,
            scenarios,
            amb,
            risk,
            budget,
            zeta_bar,
        })
    }

    /// `max_k f_{∅,k}`; the optimal threshold lies in `[0, ζ̄]`.
    pub fn zeta_bar(&self) -> f64 {
        self.zeta_bar
    }

    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let amb = BudgetedAmbiguitySet::new(self.amb.q_hat().to_vec(), self.amb.q_bar().to_vec(), gamma)?;
        Ok(Self { amb, ..self.clone() })
    }
}
