//! Credit relationships between banks: pricing, fitness, preferential
//! rewiring, loan matching and topology measures.

mod graph;
mod matching;
mod metrics;
mod pricing;
mod rewire;

use serde::{Deserialize, Serialize};

pub use graph::CreditGraph;
pub use matching::{match_loans, MatchSummary};
pub use metrics::{hub, network_metrics, HubPoint, NetworkMetrics};
pub use pricing::{
    fitness, fitness_all, haircut, interest_rate, lending_capacity, survival_probability,
    update_posted_rates, zero_profit_rate, FitnessInputs, ReferenceBorrower,
};
pub use rewire::{rewire, switch_probability, RewireStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkParams {
    pub max_out_degree: usize,
    pub intensity_of_choice: f64,
    pub isolation_prob: f64,
    pub screening_cost_lender: f64,
    pub screening_cost_borrower: f64,
    pub liquidation_cost: f64,
    pub rate_floor: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            max_out_degree: 1,
            intensity_of_choice: 5.0,
            isolation_prob: 0.25,
            screening_cost_lender: 0.015,
            screening_cost_borrower: 0.025,
            liquidation_cost: 0.3,
            rate_floor: 1e-4,
        }
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_out_degree == 0 {
            return Err("network.max_out_degree must be at least 1".into());
        }
        if !(self.intensity_of_choice.is_finite() && self.intensity_of_choice >= 0.0) {
            return Err("network.intensity_of_choice must be finite and non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.isolation_prob) {
            return Err("network.isolation_prob must lie in [0, 1]".into());
        }
        for (name, v) in [
            ("screening_cost_lender", self.screening_cost_lender),
            ("screening_cost_borrower", self.screening_cost_borrower),
            ("liquidation_cost", self.liquidation_cost),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("network.{name} must be finite and non-negative"));
            }
        }
        if !(self.rate_floor > 0.0) {
            return Err("network.rate_floor must be positive".into());
        }
        Ok(())
    }
}
