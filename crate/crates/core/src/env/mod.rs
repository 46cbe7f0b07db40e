//! The market as an episodic decision process for a regulator choosing the
//! fitness recommendation `η ∈ {0, 1}` every period.

mod policy;
mod trace;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use policy::{BernoulliPolicy, FixedPolicy, Policy};
pub(crate) use trace::csv_err;
pub use trace::{run_episode, EpisodeTrace, TraceRow, DETAIL_HEADER, EDGE_HEADER, TRACE_HEADER};

use crate::error::{Error, Result};
use crate::market::{
    apply_deposit_shock, enter_replacements, resolve_failures, settle_repayments, MarketParams,
    MarketState, Role,
};
use crate::network::{
    fitness_all, hub, match_loans, network_metrics, rewire, update_posted_rates, CreditGraph,
    FitnessInputs, HubPoint, NetworkMetrics, NetworkParams,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvParams {
    /// Periods per episode.
    pub horizon: usize,
    /// Record the edge list every this many steps; 0 disables snapshots.
    pub snapshot_every: usize,
}

impl Default for EnvParams {
    fn default() -> Self {
        EnvParams {
            horizon: 1000,
            snapshot_every: 100,
        }
    }
}

impl EnvParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.horizon < 2 {
            return Err("env.horizon must be at least 2".into());
        }
        Ok(())
    }
}

/// Everything needed to build a market environment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub market: MarketParams,
    pub network: NetworkParams,
    pub env: EnvParams,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.market.validate()?;
        self.network.validate()?;
        self.env.validate()
    }
}

/// `(C_max, C_min, r_max, C_avg, r_min, r_avg)` over alive banks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MdpObservation {
    pub c_max: f64,
    pub c_min: f64,
    pub r_max: f64,
    pub c_avg: f64,
    pub r_min: f64,
    pub r_avg: f64,
}

impl MdpObservation {
    pub const DIM: usize = 6;
    pub const NAMES: [&'static str; 6] = ["c_max", "c_min", "r_max", "c_avg", "r_min", "r_avg"];

    pub fn to_array(&self) -> [f64; 6] {
        [self.c_max, self.c_min, self.r_max, self.c_avg, self.r_min, self.r_avg]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        MdpObservation {
            c_max: x[0],
            c_min: x[1],
            r_max: x[2],
            c_avg: x[3],
            r_min: x[4],
            r_avg: x[5],
        }
    }

    /// Aggregate liquidity and posted rates over alive banks. All zeros if
    /// no bank is alive.
    pub fn from_market(market: &MarketState) -> Self {
        let n = market.alive_count();
        if n == 0 {
            return MdpObservation::default();
        }
        let mut o = MdpObservation {
            c_max: f64::NEG_INFINITY,
            c_min: f64::INFINITY,
            r_max: f64::NEG_INFINITY,
            c_avg: 0.0,
            r_min: f64::INFINITY,
            r_avg: 0.0,
        };
        for b in market.alive() {
            o.c_max = o.c_max.max(b.liquidity);
            o.c_min = o.c_min.min(b.liquidity);
            o.r_max = o.r_max.max(b.posted_rate);
            o.r_min = o.r_min.min(b.posted_rate);
            o.c_avg += b.liquidity;
            o.r_avg += b.posted_rate;
        }
        o.c_avg /= n as f64;
        o.r_avg /= n as f64;
        o
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

/// Same as [`MdpObservation::from_market`].
pub fn observe(market: &MarketState) -> MdpObservation {
    MdpObservation::from_market(market)
}

/// Runtime checks gathered while a step executes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepChecks {
    /// Worst scaled balance-sheet gap seen after any phase of the step.
    pub balance_residual: f64,
    pub multiplier_min: f64,
    pub multiplier_max: f64,
    pub fitness_min: f64,
    pub fitness_max: f64,
    pub max_out_degree: usize,
    /// Non-positive when every loan respects supply, demand and capacity.
    pub grant_excess: f64,
    /// Alive banks once entrants have replaced last period's failures.
    pub alive_at_start: usize,
    /// Whether a failed bank lent, borrowed or held a link this period.
    pub dead_bank_active: bool,
}

impl Default for StepChecks {
    fn default() -> Self {
        StepChecks {
            balance_residual: 0.0,
            multiplier_min: f64::INFINITY,
            multiplier_max: f64::NEG_INFINITY,
            fitness_min: f64::INFINITY,
            fitness_max: f64::NEG_INFINITY,
            max_out_degree: 0,
            grant_excess: 0.0,
            alive_at_start: 0,
            dead_bank_active: false,
        }
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub eta: u8,
    /// Total liquidity of alive banks at the end of the period.
    pub liquidity: f64,
    pub rationing: f64,
    pub failures: usize,
    pub leverage: f64,
    /// Credit lines that carried a loan this period.
    pub channels: usize,
    pub loan_volume: f64,
    pub equity: f64,
    pub bad_debt: f64,
    pub fire_sales: f64,
    pub entrants: usize,
    pub borrowers: usize,
    pub network: NetworkMetrics,
    pub hub: HubPoint,
    pub checks: StepChecks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub observation: MdpObservation,
    /// Total fitness `Σ μ_i` of the period.
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

const SHOCK_STREAM: u64 = 1;
const LINK_STREAM: u64 = 2;
const ENTRY_STREAM: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// One market instance driven by a sequence of `η` recommendations.
///
/// Deposit shocks, link draws and entrant sizes come from separate random
/// streams of the episode seed, so two runs with the same seed see the
/// same shocks whatever actions they take.
#[derive(Debug, Clone)]
pub struct MarketEnv {
    config: SimConfig,
    market: MarketState,
    fitness: Vec<f64>,
    shock_rng: ChaCha8Rng,
    link_rng: ChaCha8Rng,
    entry_rng: ChaCha8Rng,
    t: usize,
    seed: u64,
}

impl MarketEnv {
    pub fn new(config: SimConfig) -> Self {
        let n = config.market.n_banks;
        let market = MarketState::new(
            n,
            config.market.template(),
            CreditGraph::new(n, config.network.max_out_degree),
        );
        let mut env = MarketEnv {
            config,
            market,
            fitness: vec![0.0; n],
            shock_rng: stream(0, SHOCK_STREAM),
            link_rng: stream(0, LINK_STREAM),
            entry_rng: stream(0, ENTRY_STREAM),
            t: 0,
            seed: 0,
        };
        env.reset(0);
        env
    }

    /// Fresh market of identical banks with randomly drawn credit lines.
    pub fn reset(&mut self, seed: u64) -> MdpObservation {
        let c = &self.config;
        let n = c.market.n_banks;
        self.shock_rng = stream(seed, SHOCK_STREAM);
        self.link_rng = stream(seed, LINK_STREAM);
        self.entry_rng = stream(seed, ENTRY_STREAM);
        let graph = CreditGraph::random(
            n,
            c.network.max_out_degree,
            c.network.isolation_prob,
            &mut self.link_rng,
        );
        self.market = MarketState::new(n, c.market.template(), graph);
        self.fitness = vec![0.0; n];
        self.t = 0;
        self.seed = seed;
        self.observe()
    }

    pub fn observe(&self) -> MdpObservation {
        MdpObservation::from_market(&self.market)
    }

    pub fn market(&self) -> &MarketState {
        &self.market
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Fitness computed in the last step.
    pub fn fitness(&self) -> &[f64] {
        &self.fitness
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn horizon(&self) -> usize {
        self.config.env.horizon
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.config.env.horizon
    }

    /// Advance one period under recommendation `eta`.
    ///
    /// Order within the period: entry of last period's replacements,
    /// deposit shock, repayment of last period's loans out of post-shock
    /// liquidity, failure sweep, roles, posted rates and fitness, rewiring,
    /// loan matching with fire sales, failure sweep. The observation is the
    /// end-of-period state.
    pub fn step(&mut self, eta: u8) -> Result<StepResult> {
        if self.is_done() {
            return Err(Error::EpisodeFinished);
        }
        if eta > 1 {
            return Err(Error::InvalidInput(format!("action must be 0 or 1, got {eta}")));
        }
        let mp = &self.config.market;
        let np = &self.config.network;
        let rho = mp.fire_sale_price;
        let m = &mut self.market;
        let mut checks = StepChecks::default();

        m.begin_period();
        let entrants = enter_replacements(
            m,
            mp,
            np.isolation_prob,
            &mut self.entry_rng,
            &mut self.link_rng,
        );
        checks.alive_at_start = m.alive_count();

        let shock = mp.shock();
        for id in 0..m.n() {
            let u: f64 = self.shock_rng.gen();
            if m.banks[id].alive {
                let k = shock.multiplier(u);
                checks.multiplier_min = checks.multiplier_min.min(k);
                checks.multiplier_max = checks.multiplier_max.max(k);
                apply_deposit_shock(&mut m.banks[id], u, &shock, mp.reserve_ratio);
            }
        }
        checks.balance_residual = checks.balance_residual.max(m.max_balance_residual());

        settle_repayments(m, rho);
        resolve_failures(m, rho);
        checks.balance_residual = checks.balance_residual.max(m.max_balance_residual());

        let roles: Vec<Role> = m
            .banks
            .iter()
            .map(|b| {
                if b.alive {
                    Role::from_position(b.liquidity)
                } else {
                    Role::Neutral
                }
            })
            .collect();
        update_posted_rates(m, np);
        let inputs = FitnessInputs::from_market(m, &roles, f64::from(eta));
        let fitness = fitness_all(&inputs);
        let alive = m.alive_mask();
        let mut reward = 0.0;
        for (i, &f) in fitness.iter().enumerate() {
            if alive[i] {
                reward += f;
                checks.fitness_min = checks.fitness_min.min(f);
                checks.fitness_max = checks.fitness_max.max(f);
            }
        }

        rewire(&mut m.graph, &fitness, &alive, np.intensity_of_choice, &mut self.link_rng);
        let summary = match_loans(m, &roles, np, rho);
        checks.grant_excess = m.ledger.max_grant_excess();
        checks.dead_bank_active = m
            .ledger
            .granted
            .iter()
            .any(|l| !alive[l.lender] || !alive[l.borrower])
            || m.graph.edges().any(|(j, i)| !alive[i] || !alive[j]);
        resolve_failures(m, rho);
        checks.balance_residual = checks.balance_residual.max(m.max_balance_residual());
        checks.max_out_degree = (0..m.n())
            .filter(|&i| m.banks[i].alive)
            .map(|i| m.graph.lenders_of(i).len())
            .max()
            .unwrap_or(0);

        let alive_end = m.alive_mask();
        let info = StepInfo {
            eta,
            liquidity: m.alive().map(|b| b.liquidity).sum(),
            rationing: m.ledger.rationing(),
            failures: m.ledger.failures.len(),
            leverage: m.mean_leverage(),
            channels: summary.loans,
            loan_volume: summary.volume,
            equity: m.alive().map(|b| b.equity).sum(),
            bad_debt: m.ledger.total_bad_debt(),
            fire_sales: m.ledger.fire_sales,
            entrants: entrants.len(),
            borrowers: summary.borrowers,
            network: network_metrics(&m.graph, &alive_end),
            hub: hub(&m.graph, &alive_end, &fitness),
            checks,
        };
        self.fitness = fitness;
        self.t += 1;
        Ok(StepResult {
            observation: self.observe(),
            reward,
            done: self.is_done(),
            info,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(horizon: usize) -> SimConfig {
        let mut c = SimConfig::default();
        c.env.horizon = horizon;
        c
    }

    #[test]
    fn reset_is_symmetric() {
        let mut env = MarketEnv::new(small(10));
        let o = env.reset(3);
        assert_eq!(o.c_max, o.c_min);
        assert!((o.c_avg - o.c_max).abs() < 1e-12);
        assert!((o.c_max - 27.3).abs() < 1e-12);
        assert_eq!((o.r_max, o.r_min), (0.02, 0.02));
        assert!((o.r_avg - 0.02).abs() < 1e-15);
    }

    #[test]
    fn same_seed_same_trace() {
        let actions = [0u8, 1, 1, 0, 1, 0, 0, 1, 1, 1];
        let run = |seed| {
            let mut env = MarketEnv::new(small(10));
            let mut out = vec![env.reset(seed)];
            for &a in &actions {
                out.push(env.step(a).unwrap().observation);
            }
            out
        };
        let a = run(42);
        let b = run(42);
        for (x, y) in a.iter().zip(&b) {
            for (p, q) in x.to_array().iter().zip(y.to_array()) {
                assert_eq!(p.to_bits(), q.to_bits());
            }
        }
        assert_ne!(a, run(43));
    }

    #[test]
    fn step_after_done_fails() {
        let mut env = MarketEnv::new(small(2));
        env.reset(1);
        env.step(0).unwrap();
        assert!(env.step(1).unwrap().done);
        assert!(matches!(env.step(0), Err(Error::EpisodeFinished)));
    }

    #[test]
    fn invalid_action_rejected() {
        let mut env = MarketEnv::new(small(2));
        assert!(matches!(env.step(2), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn observe_aggregates() {
        let mut env = MarketEnv::new(SimConfig {
            market: MarketParams {
                n_banks: 3,
                ..MarketParams::default()
            },
            ..SimConfig::default()
        });
        env.reset(0);
        let mut m = env.market().clone();
        for (b, c) in m.banks.iter_mut().zip([10.0, 20.0, 30.0]) {
            b.liquidity = c;
        }
        let o = observe(&m);
        assert_eq!((o.c_max, o.c_min, o.c_avg), (30.0, 10.0, 20.0));
        m.banks.reverse();
        assert_eq!(observe(&m), o);
        m.banks[0].alive = false;
        m.banks[1].alive = false;
        let single = observe(&m);
        assert_eq!(single.c_max, single.c_min);
        assert_eq!(single.c_max, single.c_avg);
    }

    #[test]
    fn invariants_hold_over_an_episode() {
        let cfg = small(200);
        let mut env = MarketEnv::new(cfg.clone());
        env.reset(17);
        let n = cfg.market.n_banks as f64;
        for t in 0..200 {
            let r = env.step((t % 3 == 0) as u8).unwrap();
            let c = r.info.checks;
            assert!(c.balance_residual < 1e-9, "balance {}", c.balance_residual);
            assert!(c.multiplier_min >= 0.7 && c.multiplier_max < 1.25);
            assert!(c.fitness_min >= 0.0 && c.fitness_max <= 1.0 + 1e-12);
            assert!(r.reward >= 0.0 && r.reward <= n);
            assert!(c.max_out_degree <= 1);
            assert!(c.grant_excess <= 1e-9);
            assert_eq!(c.alive_at_start, 50);
            assert!(!c.dead_bank_active);
            assert!(r.observation.is_finite());
        }
    }
}
