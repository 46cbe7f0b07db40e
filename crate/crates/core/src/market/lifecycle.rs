use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BadDebt, BankState, MarketParams, MarketState, Role, ShockParams};

/// Multiply deposits by `μ + ω·u`, rebalance reserves to `r̂·D'` and route
/// both deltas through liquidity. Returns `ΔD`.
pub fn apply_deposit_shock(
    bank: &mut BankState,
    u: f64,
    params: &ShockParams,
    reserve_ratio: f64,
) -> f64 {
    debug_assert!((0.0..1.0).contains(&u));
    let new_deposits = bank.deposits * params.multiplier(u);
    let delta = new_deposits - bank.deposits;
    let new_reserves = reserve_ratio * new_deposits;
    bank.liquidity += delta - (new_reserves - bank.reserves);
    bank.reserves = new_reserves;
    bank.deposits = new_deposits;
    delta
}

/// Role from the pre-shock liquidity `C` and the net cash flow `ΔD` of the
/// shock: borrower when `ΔD + C < 0`, lender when positive, neutral at zero.
pub fn classify_role(bank: &BankState, delta_deposits: f64) -> Role {
    Role::from_position(bank.liquidity + delta_deposits)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FireSale {
    pub units_sold: f64,
    pub raised: f64,
    /// The bank ran out of long assets before covering the need.
    pub exhausted: bool,
}

/// Sell `need / ρ` units of long assets at price `ρ`, or everything if the
/// bank holds less. Equity absorbs `(1 - ρ)` per unit sold.
pub fn fire_sale(bank: &mut BankState, residual_need: f64, rho: f64) -> FireSale {
    if residual_need <= 0.0 {
        return FireSale::default();
    }
    let wanted = residual_need / rho;
    let held = bank.long_assets.max(0.0);
    let (units, raised, exhausted) = if held < wanted {
        (held, held * rho, true)
    } else {
        (wanted, residual_need, false)
    };
    bank.long_assets -= units;
    bank.liquidity += raised;
    bank.equity -= (1.0 - rho) * units;
    FireSale {
        units_sold: units,
        raised,
        exhausted,
    }
}

/// Outcome of one loan at the repayment round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Repayment {
    pub lender: usize,
    pub borrower: usize,
    pub due: f64,
    pub paid: f64,
    pub bad_debt: f64,
    pub fire_sale_units: f64,
}

/// Repay last period's loans in ascending borrower id.
///
/// A borrower pays principal and interest out of liquidity, fire-selling
/// long assets for any gap. If the sale is not enough it is flagged
/// insolvent and the lender books the unpaid remainder as bad debt, so the
/// lender's equity moves by `l·r - B`.
pub fn settle_repayments(market: &mut MarketState, rho: f64) -> Vec<Repayment> {
    let mut loans = std::mem::take(&mut market.loans);
    loans.sort_by_key(|l| (l.borrower, l.lender));
    let mut out = Vec::with_capacity(loans.len());

    for loan in loans {
        let due = loan.amount_due();
        let borrower = &mut market.banks[loan.borrower];
        debug_assert!(borrower.alive, "loans of failed borrowers are written off");
        let available = borrower.liquidity.max(0.0);
        let (paid, units) = if available >= due {
            (due, 0.0)
        } else {
            let sale = fire_sale(borrower, due - available, rho);
            let paid = if sale.exhausted {
                available + sale.raised
            } else {
                due
            };
            (paid, sale.units_sold)
        };
        borrower.liquidity -= paid;
        borrower.interbank_debt -= loan.principal;
        borrower.equity += loan.principal - paid;

        let shortfall = if paid < due { due - paid } else { 0.0 };
        if shortfall > 0.0 {
            market.ledger.insolvent.insert(loan.borrower);
        }
        market.ledger.fire_sales += units;

        let lender = &mut market.banks[loan.lender];
        if loan.lender_active && lender.alive {
            lender.liquidity += paid;
            lender.interbank_claims -= loan.principal;
            lender.equity += paid - loan.principal;
            if shortfall > 0.0 {
                market.ledger.bad_debt.push(BadDebt {
                    lender: loan.lender,
                    borrower: loan.borrower,
                    amount: shortfall,
                });
            }
        }

        let rec = Repayment {
            lender: loan.lender,
            borrower: loan.borrower,
            due,
            paid,
            bad_debt: shortfall,
            fire_sale_units: units,
        };
        market.ledger.repayments.push(rec);
        out.push(rec);
    }
    out
}

/// Remove every alive bank with negative equity or an uncovered liquidity
/// need. A failed borrower's outstanding loan is written off against the
/// proceeds of liquidating its long assets; losses that push a lender
/// below zero fail it in the same sweep. Returns the failed ids in order.
pub fn resolve_failures(market: &mut MarketState, rho: f64) -> Vec<usize> {
    let mut failed_all = Vec::new();
    loop {
        let failed: Vec<usize> = market
            .banks
            .iter()
            .filter(|b| b.alive && (b.equity < 0.0 || market.ledger.insolvent.contains(&b.id)))
            .map(|b| b.id)
            .collect();
        if failed.is_empty() {
            break;
        }
        for &id in &failed {
            market.banks[id].alive = false;
            market.graph.detach(id);
            market.ledger.failures.push(id);
            for loan in market.loans.iter_mut().filter(|l| l.lender == id) {
                loan.lender_active = false;
            }
        }
        for &id in &failed {
            write_off_debts(market, id, rho);
        }
        failed_all.extend(failed);
    }
    failed_all
}

fn write_off_debts(market: &mut MarketState, borrower_id: usize, rho: f64) {
    let (owed, kept): (Vec<_>, Vec<_>) = std::mem::take(&mut market.loans)
        .into_iter()
        .partition(|l| l.borrower == borrower_id);
    market.loans = kept;
    for loan in owed {
        let borrower = &mut market.banks[borrower_id];
        let held = borrower.long_assets.max(0.0);
        if held > 0.0 {
            let sale = fire_sale(borrower, held * rho, rho);
            market.ledger.fire_sales += sale.units_sold;
        }
        let proceeds = borrower.liquidity.max(0.0).min(loan.principal);
        borrower.liquidity -= proceeds;
        borrower.interbank_debt -= loan.principal;
        borrower.equity += loan.principal - proceeds;

        let lender = &mut market.banks[loan.lender];
        if loan.lender_active && lender.alive {
            lender.liquidity += proceeds;
            lender.interbank_claims -= loan.principal;
            lender.equity += proceeds - loan.principal;
            let loss = loan.principal - proceeds;
            if loss > 0.0 {
                market.ledger.bad_debt.push(BadDebt {
                    lender: loan.lender,
                    borrower: borrower_id,
                    amount: loss,
                });
            }
        }
    }
}

/// Mode of a size distribution: midpoint of the tallest of `bins`
/// equal-width bins spanning the sample, ties going to the lower bin.
pub fn incumbent_size_mode(sizes: &[f64], bins: usize) -> Option<f64> {
    let (lo, hi) = sizes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if sizes.is_empty() {
        return None;
    }
    let width = (hi - lo) / bins as f64;
    if !(width > 0.0) {
        return Some(lo);
    }
    let mut counts = vec![0usize; bins];
    for &x in sizes {
        let idx = (((x - lo) / width).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    Some(lo + (best as f64 + 0.5) * width)
}

/// Replace every failed bank by an entrant at the same index. Entrant size
/// is uniform in `[low, high] × mode` of incumbent total assets, with the
/// initial template's proportions; it starts with no clients and draws its
/// own lenders the way every bank did at the start.
pub fn enter_replacements<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    market: &mut MarketState,
    params: &MarketParams,
    isolation_prob: f64,
    size_rng: &mut R1,
    link_rng: &mut R2,
) -> Vec<usize> {
    let dead: Vec<usize> = market.banks.iter().filter(|b| !b.alive).map(|b| b.id).collect();
    if dead.is_empty() {
        return dead;
    }
    let sizes: Vec<f64> = market.alive().map(BankState::total_assets).collect();
    let template = market.template;
    let mode = incumbent_size_mode(&sizes, params.size_histogram_bins)
        .unwrap_or_else(|| template.total_assets());
    for &id in &dead {
        let draw = if params.entrant_scale_high > params.entrant_scale_low {
            size_rng.gen_range(params.entrant_scale_low..=params.entrant_scale_high)
        } else {
            params.entrant_scale_low
        };
        let scale = draw * mode / template.total_assets();
        market.banks[id] = template.instantiate(id, scale);
    }
    let alive = market.alive_mask();
    for &id in &dead {
        market.graph.draw_links(id, &alive, isolation_prob, link_rng);
    }
    dead
}
