use serde::{Deserialize, Serialize};

use super::NetworkParams;
use crate::error::{Error, Result};
use crate::market::{BankState, MarketState, Role};

/// `p = clamp(E_j / E_max, 0, 1)`.
pub fn survival_probability(equity: f64, max_equity: f64) -> Result<f64> {
    if !(max_equity > 0.0) {
        return Err(Error::NoSolventBenchmark(max_equity));
    }
    Ok((equity / max_equity).clamp(0.0, 1.0))
}

/// Haircut `h = λ_j / λ_max` clamped to `[0, 1]`; a borrower without
/// positive equity is fully haircut. `λ_max = 0` means nobody is levered.
pub fn haircut(borrower: &BankState, max_leverage: f64) -> f64 {
    match borrower.leverage() {
        None => 1.0,
        Some(_) if max_leverage <= 0.0 => 0.0,
        Some(l) => (l / max_leverage).clamp(0.0, 1.0),
    }
}

/// Lending capacity `c = (1 - h)·A_j`.
pub fn lending_capacity(borrower: &BankState, max_leverage: f64) -> f64 {
    (1.0 - haircut(borrower, max_leverage)) * borrower.total_assets()
}

/// Rate setting the lender's expected profit to zero, before flooring:
/// `(χA_i - φA_j - (1-p)(ξA_j - c)) / (p·c)`.
pub fn zero_profit_rate(
    lender_assets: f64,
    borrower_assets: f64,
    survival: f64,
    capacity: f64,
    params: &NetworkParams,
) -> Result<f64> {
    if !(capacity > 0.0) {
        return Err(Error::NoLendingCapacity);
    }
    if !(survival > 0.0) {
        return Err(Error::CertainDefault);
    }
    let numerator = params.screening_cost_lender * lender_assets
        - params.screening_cost_borrower * borrower_assets
        - (1.0 - survival) * (params.liquidation_cost * borrower_assets - capacity);
    Ok(numerator / (survival * capacity))
}

/// Pairwise interbank rate, floored at `rate_floor`.
pub fn interest_rate(
    lender: &BankState,
    borrower: &BankState,
    survival: f64,
    capacity: f64,
    params: &NetworkParams,
) -> Result<f64> {
    zero_profit_rate(
        lender.total_assets(),
        borrower.total_assets(),
        survival,
        capacity,
        params,
    )
    .map(|r| r.max(params.rate_floor))
}

/// The average alive bank, used as the counterparty behind each lender's
/// public rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBorrower {
    pub assets: f64,
    pub survival: f64,
    pub capacity: f64,
}

impl ReferenceBorrower {
    pub fn from_market(market: &MarketState) -> Option<Self> {
        let max_equity = market.max_equity();
        let max_leverage = market.max_leverage();
        let mut n = 0usize;
        let (mut a, mut p, mut c) = (0.0, 0.0, 0.0);
        for b in market.alive() {
            n += 1;
            a += b.total_assets();
            p += survival_probability(b.equity, max_equity).unwrap_or(0.0);
            c += lending_capacity(b, max_leverage);
        }
        (n > 0).then(|| {
            let n = n as f64;
            ReferenceBorrower {
                assets: a / n,
                survival: p / n,
                capacity: c / n,
            }
        })
    }
}

/// Refresh every alive bank's public rate against the reference borrower.
/// When the reference has no capacity or no survival chance the previous
/// rate is kept.
pub fn update_posted_rates(market: &mut MarketState, params: &NetworkParams) {
    let Some(reference) = ReferenceBorrower::from_market(market) else {
        return;
    };
    for bank in market.banks.iter_mut().filter(|b| b.alive) {
        if let Ok(r) = zero_profit_rate(
            bank.total_assets(),
            reference.assets,
            reference.survival,
            reference.capacity,
            params,
        ) {
            bank.posted_rate = r.max(params.rate_floor);
        }
    }
}

/// Cross-sectional inputs of the fitness score.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessInputs {
    /// Liquidity each bank offers this period (zero for non-lenders).
    pub liquidity: Vec<f64>,
    pub rates: Vec<f64>,
    pub alive: Vec<bool>,
    pub eta: f64,
    pub c_max: f64,
    pub r_min: f64,
}

impl FitnessInputs {
    pub fn new(liquidity: Vec<f64>, rates: Vec<f64>, alive: Vec<bool>, eta: f64) -> Self {
        let live = || alive.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| i);
        let c_max = live().map(|i| liquidity[i]).fold(0.0, f64::max);
        let r_min = live().map(|i| rates[i]).fold(f64::INFINITY, f64::min);
        FitnessInputs {
            liquidity,
            rates,
            alive,
            eta,
            c_max,
            r_min,
        }
    }

    /// Inputs from post-shock roles and current posted rates.
    pub fn from_market(market: &MarketState, roles: &[Role], eta: f64) -> Self {
        FitnessInputs::new(
            roles.iter().map(Role::supply).collect(),
            market.banks.iter().map(|b| b.posted_rate).collect(),
            market.alive_mask(),
            eta,
        )
    }
}

/// `μ_i = η·C_i/C_max + (1-η)·r_min/r_i`; the liquidity term is zero when
/// nobody offers liquidity.
pub fn fitness(inputs: &FitnessInputs, id: usize) -> f64 {
    let liquidity_term = if inputs.c_max > 0.0 {
        inputs.liquidity[id] / inputs.c_max
    } else {
        0.0
    };
    let rate_term = inputs.r_min / inputs.rates[id];
    inputs.eta * liquidity_term + (1.0 - inputs.eta) * rate_term
}

/// Fitness of every bank, zero for failed ones.
pub fn fitness_all(inputs: &FitnessInputs) -> Vec<f64> {
    (0..inputs.alive.len())
        .map(|i| if inputs.alive[i] { fitness(inputs, i) } else { 0.0 })
        .collect()
}
