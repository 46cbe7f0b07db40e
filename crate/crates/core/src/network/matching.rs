use super::pricing::{interest_rate, lending_capacity, survival_probability};
use super::NetworkParams;
use crate::market::{fire_sale, Loan, MarketState, Role};

/// Result of one round of loan matching.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MatchSummary {
    pub loans: usize,
    pub volume: f64,
    pub borrowers: usize,
    pub fire_sale_units: f64,
}

/// Grant loans along credit lines, borrowers in ascending id.
///
/// Along `j → i` the loan is `min(s_i, d_j, c_ij)` at the pairwise rate;
/// the lender's remaining supply shrinks accordingly. Pairs with no
/// capacity or a certain default get nothing. Whatever demand is left is
/// covered by a fire sale, and a borrower that runs out of long assets is
/// flagged insolvent. Loans are added to `market.loans` for settlement at
/// the start of the next period, and everything is recorded in the ledger.
pub fn match_loans(
    market: &mut MarketState,
    roles: &[Role],
    params: &NetworkParams,
    rho: f64,
) -> MatchSummary {
    let max_equity = market.max_equity();
    let max_leverage = market.max_leverage();
    let mut supply: Vec<f64> = roles.iter().map(Role::supply).collect();
    let mut summary = MatchSummary::default();

    for (i, role) in roles.iter().enumerate() {
        if market.banks[i].alive {
            if let Role::Lender { supply } = *role {
                market.ledger.supplies.push((i, supply));
            }
        }
    }

    for j in 0..market.n() {
        let Role::Borrower { demand } = roles[j] else {
            continue;
        };
        if !market.banks[j].alive {
            continue;
        }
        summary.borrowers += 1;
        market.ledger.demands.push((j, demand));
        let mut remaining = demand;

        let lenders = market.graph.lenders_of(j).to_vec();
        for i in lenders {
            if remaining <= 0.0 || supply[i] <= 0.0 {
                continue;
            }
            let capacity = lending_capacity(&market.banks[j], max_leverage);
            let Ok(survival) = survival_probability(market.banks[j].equity, max_equity) else {
                continue;
            };
            let Ok(rate) =
                interest_rate(&market.banks[i], &market.banks[j], survival, capacity, params)
            else {
                continue;
            };
            let amount = supply[i].min(remaining).min(capacity);
            if amount <= 0.0 {
                continue;
            }
            supply[i] -= amount;
            remaining -= amount;

            let lender = &mut market.banks[i];
            lender.liquidity -= amount;
            lender.interbank_claims += amount;
            let borrower = &mut market.banks[j];
            borrower.liquidity += amount;
            borrower.interbank_debt += amount;

            let loan = Loan {
                lender: i,
                borrower: j,
                principal: amount,
                rate,
                lender_active: true,
            };
            market.ledger.granted.push(loan);
            market.ledger.capacities.push(capacity);
            market.loans.push(loan);
            summary.loans += 1;
            summary.volume += amount;
        }

        market.ledger.rationed.push((j, remaining / demand));

        let borrower = &mut market.banks[j];
        if borrower.liquidity < 0.0 {
            let sale = fire_sale(borrower, -borrower.liquidity, rho);
            market.ledger.fire_sales += sale.units_sold;
            summary.fire_sale_units += sale.units_sold;
            if sale.exhausted {
                market.ledger.insolvent.insert(j);
            }
        }
    }
    summary
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::BankTemplate;
    use crate::network::CreditGraph;

    /// Borrower 1 linked to lender 0. The borrower is less levered than the
    /// benchmark bank 2 so it has capacity.
    fn market() -> MarketState {
        let mut g = CreditGraph::new(3, 1);
        g.add_edge(1, 0);
        let mut m = MarketState::new(3, BankTemplate::new(120.0, 135.0, 15.0, 0.02, 0.02), g);
        // Bank 2 sold assets cheaply: λ = 60 / 5 = 12.
        let b2 = &mut m.banks[2];
        b2.long_assets = 60.0;
        b2.equity = 5.0;
        b2.liquidity = 135.0 + 5.0 - 60.0 - 2.7;
        m
    }

    fn set_position(m: &mut MarketState, id: usize, position: f64) {
        let b = &mut m.banks[id];
        b.liquidity = position;
        b.deposits = b.long_assets + b.liquidity + b.reserves - b.equity;
    }

    #[test]
    fn loan_limited_by_demand() {
        let mut m = market();
        set_position(&mut m, 0, 5.0);
        set_position(&mut m, 1, -3.0);
        let roles = vec![Role::Lender { supply: 5.0 }, Role::Borrower { demand: 3.0 }, Role::Neutral];
        let s = match_loans(&mut m, &roles, &NetworkParams::default(), 0.3);
        assert_eq!(s.loans, 1);
        assert!((m.loans[0].principal - 3.0).abs() < 1e-12);
        assert_eq!(m.ledger.rationing(), 0.0);
        assert_eq!(m.banks[1].liquidity, 0.0);
        assert!(m.max_balance_residual() < 1e-12);
    }

    #[test]
    fn residual_demand_goes_to_fire_sale() {
        let mut m = market();
        set_position(&mut m, 0, 5.0);
        set_position(&mut m, 1, -8.0);
        let l0 = m.banks[1].long_assets;
        let roles = vec![Role::Lender { supply: 5.0 }, Role::Borrower { demand: 8.0 }, Role::Neutral];
        let s = match_loans(&mut m, &roles, &NetworkParams::default(), 0.3);
        assert!((m.loans[0].principal - 5.0).abs() < 1e-12);
        assert!((s.fire_sale_units - 3.0 / 0.3).abs() < 1e-9);
        assert!((l0 - m.banks[1].long_assets - 10.0).abs() < 1e-9);
        assert!((m.ledger.rationing() - 3.0 / 8.0).abs() < 1e-12);
        assert!(m.banks[1].liquidity.abs() < 1e-12);
        assert!(m.max_balance_residual() < 1e-12);
    }

    #[test]
    fn unlinked_borrower_fully_rationed() {
        let mut m = market();
        m.graph.detach(1);
        set_position(&mut m, 0, 5.0);
        set_position(&mut m, 1, -3.0);
        let roles = vec![Role::Lender { supply: 5.0 }, Role::Borrower { demand: 3.0 }, Role::Neutral];
        let s = match_loans(&mut m, &roles, &NetworkParams::default(), 0.3);
        assert_eq!(s.loans, 0);
        assert_eq!(m.ledger.rationing(), 1.0);
    }

    #[test]
    fn capacity_caps_the_loan() {
        let mut m = market();
        set_position(&mut m, 0, 500.0);
        set_position(&mut m, 1, -50.0);
        let cap = lending_capacity(&m.banks[1], m.max_leverage());
        let roles = vec![
            Role::Lender { supply: 500.0 },
            Role::Borrower { demand: 50.0 },
            Role::Neutral,
        ];
        match_loans(&mut m, &roles, &NetworkParams::default(), 0.3);
        assert!(cap > 0.0 && cap < 50.0);
        assert!((m.loans[0].principal - cap).abs() < 1e-9);
    }
}
