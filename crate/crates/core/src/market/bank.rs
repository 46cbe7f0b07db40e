use serde::{Deserialize, Serialize};

/// One bank's balance sheet and status.
///
/// Interbank positions are carried in `interbank_claims` (asset side) and
/// `interbank_debt` (liability side). Both are zero whenever no loan is
/// outstanding, in which case the identity reduces to `L + C + R = D + E`.
///
/// `liquidity` is allowed to go negative between a deposit outflow and the
/// moment the bank covers it on the interbank market or by a fire sale; an
/// alive bank never ends a period overdrawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankState {
    pub id: usize,
    pub long_assets: f64,
    pub liquidity: f64,
    pub reserves: f64,
    pub deposits: f64,
    pub equity: f64,
    pub interbank_claims: f64,
    pub interbank_debt: f64,
    pub posted_rate: f64,
    pub alive: bool,
}

impl BankState {
    /// `A = L + C + R`.
    pub fn total_assets(&self) -> f64 {
        self.long_assets + self.liquidity + self.reserves
    }

    /// `λ = L / E`, defined only for positive equity.
    pub fn leverage(&self) -> Option<f64> {
        (self.equity > 0.0).then(|| self.long_assets / self.equity)
    }

    /// Signed gap between both sides of the balance sheet.
    pub fn balance_gap(&self) -> f64 {
        (self.long_assets + self.liquidity + self.reserves + self.interbank_claims)
            - (self.deposits + self.equity + self.interbank_debt)
    }

    /// Balance gap scaled by `|D| + |E| + 1`.
    pub fn balance_residual(&self) -> f64 {
        self.balance_gap().abs() / (self.deposits.abs() + self.equity.abs() + 1.0)
    }
}

/// Proportions every bank starts from, and that entrants are scaled from.
///
/// Liquidity is derived so that the balance-sheet identity and the reserve
/// requirement hold together: `C = D + E - L - r̂·D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BankTemplate {
    pub long_assets: f64,
    pub liquidity: f64,
    pub reserves: f64,
    pub deposits: f64,
    pub equity: f64,
    pub rate: f64,
}

impl BankTemplate {
    pub fn new(long_assets: f64, deposits: f64, equity: f64, reserve_ratio: f64, rate: f64) -> Self {
        let reserves = reserve_ratio * deposits;
        BankTemplate {
            long_assets,
            liquidity: deposits + equity - long_assets - reserves,
            reserves,
            deposits,
            equity,
            rate,
        }
    }

    pub fn total_assets(&self) -> f64 {
        self.long_assets + self.liquidity + self.reserves
    }

    /// A fresh bank whose whole sheet is the template multiplied by `scale`.
    pub fn instantiate(&self, id: usize, scale: f64) -> BankState {
        BankState {
            id,
            long_assets: self.long_assets * scale,
            liquidity: self.liquidity * scale,
            reserves: self.reserves * scale,
            deposits: self.deposits * scale,
            equity: self.equity * scale,
            interbank_claims: 0.0,
            interbank_debt: 0.0,
            posted_rate: self.rate,
            alive: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repaired_initial_sheet() {
        let t = BankTemplate::new(120.0, 135.0, 15.0, 0.02, 0.02);
        assert!((t.reserves - 2.7).abs() < 1e-12);
        assert!((t.liquidity - 27.3).abs() < 1e-12);
        assert!((t.total_assets() - 150.0).abs() < 1e-12);
        let bank = t.instantiate(0, 1.0);
        assert!(bank.balance_residual() < 1e-15);
        assert_eq!(bank.leverage(), Some(8.0));
    }

    #[test]
    fn scaled_instance_keeps_identity() {
        let t = BankTemplate::new(120.0, 135.0, 15.0, 0.02, 0.02);
        let bank = t.instantiate(3, 0.93);
        assert!(bank.balance_residual() < 1e-12);
        assert!((bank.total_assets() - 0.93 * 150.0).abs() < 1e-9);
    }

    #[test]
    fn leverage_undefined_without_equity() {
        let mut bank = BankTemplate::new(120.0, 135.0, 15.0, 0.02, 0.02).instantiate(0, 1.0);
        bank.equity = 0.0;
        assert_eq!(bank.leverage(), None);
    }
}
