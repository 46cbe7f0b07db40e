//! Bank balance sheets and the per-period lifecycle of the market: deposit
//! shocks, role classification, fire sales, repayment settlement, failures
//! and entry.

mod bank;
mod lifecycle;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use bank::{BankState, BankTemplate};
pub use lifecycle::{
    apply_deposit_shock, classify_role, enter_replacements, fire_sale, incumbent_size_mode,
    resolve_failures, settle_repayments, FireSale, Repayment,
};

use crate::network::CreditGraph;

/// Market-level parameters. Defaults reproduce the reference calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarketParams {
    pub n_banks: usize,
    pub reserve_ratio: f64,
    pub deposit_mu: f64,
    pub deposit_omega: f64,
    pub fire_sale_price: f64,
    pub initial_long_assets: f64,
    pub initial_deposits: f64,
    pub initial_equity: f64,
    pub initial_rate: f64,
    pub entrant_scale_low: f64,
    pub entrant_scale_high: f64,
    pub size_histogram_bins: usize,
}

impl Default for MarketParams {
    fn default() -> Self {
        MarketParams {
            n_banks: 50,
            reserve_ratio: 0.02,
            deposit_mu: 0.7,
            deposit_omega: 0.55,
            fire_sale_price: 0.3,
            initial_long_assets: 120.0,
            initial_deposits: 135.0,
            initial_equity: 15.0,
            initial_rate: 0.02,
            entrant_scale_low: 0.9,
            entrant_scale_high: 1.1,
            size_histogram_bins: 10,
        }
    }
}

impl MarketParams {
    pub fn shock(&self) -> ShockParams {
        ShockParams {
            mu: self.deposit_mu,
            omega: self.deposit_omega,
            rho: self.fire_sale_price,
        }
    }

    pub fn template(&self) -> BankTemplate {
        BankTemplate::new(
            self.initial_long_assets,
            self.initial_deposits,
            self.initial_equity,
            self.reserve_ratio,
            self.initial_rate,
        )
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_banks < 3 {
            return Err("market.n_banks must be at least 3".into());
        }
        if !(0.0..1.0).contains(&self.reserve_ratio) {
            return Err("market.reserve_ratio must lie in [0, 1)".into());
        }
        self.shock().validate()?;
        if self.template().liquidity < 0.0 {
            return Err("initial sheet leaves negative liquidity".into());
        }
        if !(self.entrant_scale_low > 0.0 && self.entrant_scale_low <= self.entrant_scale_high) {
            return Err("entrant scale band must satisfy 0 < low <= high".into());
        }
        if self.size_histogram_bins == 0 {
            return Err("market.size_histogram_bins must be positive".into());
        }
        if self.initial_rate <= 0.0 {
            return Err("market.initial_rate must be positive".into());
        }
        Ok(())
    }
}

/// Deposit-shock band and fire-sale price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockParams {
    pub mu: f64,
    pub omega: f64,
    pub rho: f64,
}

impl Default for ShockParams {
    fn default() -> Self {
        MarketParams::default().shock()
    }
}

impl ShockParams {
    /// Deposit multiplier `μ + ω·u`, in `[μ, μ + ω)` for `u ∈ [0, 1)`.
    pub fn multiplier(&self, u: f64) -> f64 {
        self.mu + self.omega * u
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.mu > 0.0) {
            return Err("market.deposit_mu must be positive".into());
        }
        if !(self.omega >= 0.0) {
            return Err("market.deposit_omega must be non-negative".into());
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err("market.fire_sale_price must lie in (0, 1]".into());
        }
        Ok(())
    }
}

/// A bank's side of the interbank market in the current period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Role {
    Borrower { demand: f64 },
    Lender { supply: f64 },
    Neutral,
}

impl Role {
    /// Role implied by a net liquidity position after the deposit shock.
    /// A position of exactly zero asks for nothing and is neutral.
    pub fn from_position(position: f64) -> Role {
        if position > 0.0 {
            Role::Lender { supply: position }
        } else if position < 0.0 {
            Role::Borrower { demand: -position }
        } else {
            Role::Neutral
        }
    }

    pub fn supply(&self) -> f64 {
        match *self {
            Role::Lender { supply } => supply,
            _ => 0.0,
        }
    }

    pub fn demand(&self) -> f64 {
        match *self {
            Role::Borrower { demand } => demand,
            _ => 0.0,
        }
    }
}

/// An interbank loan granted in one period and due at the start of the next.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Loan {
    pub lender: usize,
    pub borrower: usize,
    pub principal: f64,
    pub rate: f64,
    /// Cleared when the lender fails; the borrower still repays, into the
    /// failed lender's estate.
    pub lender_active: bool,
}

impl Loan {
    pub fn amount_due(&self) -> f64 {
        self.principal * (1.0 + self.rate)
    }
}

/// Bad debt booked by a lender on a defaulted loan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BadDebt {
    pub lender: usize,
    pub borrower: usize,
    pub amount: f64,
}

/// Everything that happened to the market within one period.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PeriodLedger {
    pub demands: Vec<(usize, f64)>,
    pub supplies: Vec<(usize, f64)>,
    pub granted: Vec<Loan>,
    /// Lending capacity of each granted pair, aligned with `granted`.
    pub capacities: Vec<f64>,
    pub repayments: Vec<Repayment>,
    pub bad_debt: Vec<BadDebt>,
    /// Units of long assets sold at the fire-sale price, all causes.
    pub fire_sales: f64,
    pub failures: Vec<usize>,
    /// Per-borrower unmet fraction of demand.
    pub rationed: Vec<(usize, f64)>,
    /// Banks that could not cover a liquidity need even after selling every
    /// long asset; they fail at the next sweep regardless of equity.
    pub insolvent: BTreeSet<usize>,
}

impl PeriodLedger {
    /// Mean unmet-demand fraction over borrowers, 0 with no borrowers.
    pub fn rationing(&self) -> f64 {
        if self.rationed.is_empty() {
            0.0
        } else {
            self.rationed.iter().map(|&(_, r)| r).sum::<f64>() / self.rationed.len() as f64
        }
    }

    pub fn total_bad_debt(&self) -> f64 {
        self.bad_debt.iter().map(|b| b.amount).sum()
    }

    /// Worst violation of `loan ≤ min(supply, demand, capacity)`, summing
    /// each bank's grants against its stated supply or demand. Non-positive
    /// when matching respects every bound.
    pub fn max_grant_excess(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (loan, cap) in self.granted.iter().zip(&self.capacities) {
            worst = worst.max(loan.principal - cap);
        }
        for &(j, d) in &self.demands {
            let got: f64 = self.granted.iter().filter(|l| l.borrower == j).map(|l| l.principal).sum();
            worst = worst.max(got - d);
        }
        for &(i, s) in &self.supplies {
            let lent: f64 = self.granted.iter().filter(|l| l.lender == i).map(|l| l.principal).sum();
            worst = worst.max(lent - s);
        }
        if worst == f64::NEG_INFINITY {
            0.0
        } else {
            worst
        }
    }
}

/// All banks, the credit graph, outstanding loans and the current ledger.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketState {
    pub banks: Vec<BankState>,
    pub graph: CreditGraph,
    /// Loans granted last period, settled at the start of this one.
    pub loans: Vec<Loan>,
    pub ledger: PeriodLedger,
    pub period: usize,
    pub template: BankTemplate,
}

impl MarketState {
    /// `n` identical banks built from `template`, with the given graph.
    pub fn new(n: usize, template: BankTemplate, graph: CreditGraph) -> Self {
        assert_eq!(graph.node_count(), n, "graph size must match bank count");
        MarketState {
            banks: (0..n).map(|id| template.instantiate(id, 1.0)).collect(),
            graph,
            loans: Vec::new(),
            ledger: PeriodLedger::default(),
            period: 0,
            template,
        }
    }

    pub fn n(&self) -> usize {
        self.banks.len()
    }

    pub fn alive_mask(&self) -> Vec<bool> {
        self.banks.iter().map(|b| b.alive).collect()
    }

    pub fn alive(&self) -> impl Iterator<Item = &BankState> {
        self.banks.iter().filter(|b| b.alive)
    }

    pub fn alive_count(&self) -> usize {
        self.alive().count()
    }

    /// Largest equity among alive banks.
    pub fn max_equity(&self) -> f64 {
        self.alive().map(|b| b.equity).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest leverage among alive banks with positive equity, 0 if none.
    pub fn max_leverage(&self) -> f64 {
        self.alive().filter_map(BankState::leverage).fold(0.0, f64::max)
    }

    /// Mean leverage over alive banks with positive equity.
    pub fn mean_leverage(&self) -> f64 {
        let (sum, n) = self
            .alive()
            .filter_map(BankState::leverage)
            .fold((0.0, 0usize), |(s, n), l| (s + l, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// Worst balance residual over every bank, alive or not.
    pub fn max_balance_residual(&self) -> f64 {
        self.banks.iter().map(BankState::balance_residual).fold(0.0, f64::max)
    }

    /// Start a new period with an empty ledger.
    pub fn begin_period(&mut self) {
        self.period += 1;
        self.ledger = PeriodLedger::default();
    }
}
