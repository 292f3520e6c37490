//! Road-charge incentive game between surplus-holding EVs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Coop,
    NonCoop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Player {
    pub utility_if_coop: f64,
    pub has_surplus: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub road_charge: f64,
    pub n_threshold: usize,
    pub players: Vec<Player>,
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_non_negative(self.road_charge, "game.road_charge")?;
        if self.n_threshold == 0 {
            return Err(Error::InvalidParameter {
                field: "game.n_threshold",
                reason: "must be >= 1".into(),
            });
        }
        if self.players.is_empty() {
            return Err(Error::InvalidParameter {
                field: "game.players",
                reason: "need at least one player".into(),
            });
        }
        for p in &self.players {
            ensure_finite(p.utility_if_coop, "game.players.utility_if_coop")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionProfile {
    pub actions: Vec<Action>,
}

impl ActionProfile {
    pub fn n_coop(&self) -> usize {
        self.actions.iter().filter(|a| **a == Action::Coop).count()
    }

    fn check(&self, config: &GameConfig) -> Result<()> {
        if self.actions.len() != config.players.len() {
            return Err(Error::InvalidParameter {
                field: "profile",
                reason: format!("{} actions for {} players", self.actions.len(), config.players.len()),
            });
        }
        for (i, (a, p)) in self.actions.iter().zip(&config.players).enumerate() {
            if *a == Action::Coop && !p.has_surplus {
                return Err(Error::NoSurplus(i));
            }
        }
        Ok(())
    }
}

fn payoff_raw(config: &GameConfig, action: Action, utility: f64, n_coop: usize) -> f64 {
    if n_coop < config.n_threshold {
        match action {
            Action::Coop => utility,
            Action::NonCoop => -config.road_charge,
        }
    } else {
        -config.road_charge / n_coop as f64
    }
}

pub fn payoff(config: &GameConfig, profile: &ActionProfile, player_idx: usize) -> Result<f64> {
    config.validate()?;
    profile.check(config)?;
    let player = config.players.get(player_idx).ok_or(Error::PlayerIndex {
        index: player_idx,
        players: config.players.len(),
    })?;
    Ok(payoff_raw(
        config,
        profile.actions[player_idx],
        player.utility_if_coop,
        profile.n_coop(),
    ))
}

/// Payoff-maximising action against the others' actions in `profile`; the
/// player's own entry is ignored. Ties go to Coop exactly when the player's
/// utility is non-negative.
pub fn best_response(config: &GameConfig, player_idx: usize, profile: &ActionProfile) -> Result<Action> {
    config.validate()?;
    let player = config.players.get(player_idx).ok_or(Error::PlayerIndex {
        index: player_idx,
        players: config.players.len(),
    })?;
    if !player.has_surplus {
        return Err(Error::NoSurplus(player_idx));
    }
    let mut trial = profile.clone();
    trial.actions[player_idx] = Action::NonCoop;
    trial.check(config)?;
    let others = trial.n_coop();
    let u = player.utility_if_coop;
    let coop = payoff_raw(config, Action::Coop, u, others + 1);
    let defect = payoff_raw(config, Action::NonCoop, u, others);
    Ok(if coop > defect || (coop == defect && u >= 0.0) {
        Action::Coop
    } else {
        Action::NonCoop
    })
}

pub fn conspiracy_threshold(road_charge: f64, n_coop: usize) -> Result<f64> {
    if n_coop == 0 {
        return Err(Error::InvalidParameter {
            field: "n_coop",
            reason: "must be >= 1".into(),
        });
    }
    Ok(road_charge - road_charge / n_coop as f64)
}

/// Which probability the conspirator's knowledge term is raised to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnowledgeBase {
    #[default]
    QPrime,
    Q,
}

/// Expected payoff of honest play minus that of conspiring.
pub fn expected_conspiracy_gain(
    q: f64,
    q_prime: f64,
    n_threshold: usize,
    utility: f64,
    road_charge: f64,
    n_coop: usize,
    base: KnowledgeBase,
) -> Result<f64> {
    for (v, f) in [(q, "q"), (q_prime, "q_prime")] {
        ensure_finite(v, f)?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter {
                field: f,
                reason: format!("{v} not in [0, 1]"),
            });
        }
    }
    let threshold = conspiracy_threshold(road_charge, n_coop)?;
    let k = match base {
        KnowledgeBase::QPrime => q_prime,
        KnowledgeBase::Q => q,
    };
    Ok(-q * k.powi(n_threshold as i32) * (utility - threshold))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentRound {
    pub round: usize,
    pub n_coop: usize,
    pub mean_payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentResult {
    pub cumulative_payoffs: Vec<f64>,
    pub cooperation_rates: Vec<f64>,
    pub rounds: Vec<TournamentRound>,
    pub final_profile: ActionProfile,
}

/// Surplus holders start from a random profile and then simultaneously play
/// best responses to the previous round.
pub fn simulate_tournament(config: &GameConfig, rounds: usize, rng_seed: u64) -> Result<TournamentResult> {
    config.validate()?;
    if rounds == 0 {
        return Err(Error::InvalidParameter {
            field: "rounds",
            reason: "must be >= 1".into(),
        });
    }
    let n = config.players.len();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut profile = ActionProfile {
        actions: config
            .players
            .iter()
            .map(|p| {
                if p.has_surplus && rng.random_bool(0.5) {
                    Action::Coop
                } else {
                    Action::NonCoop
                }
            })
            .collect(),
    };
    let mut cumulative = vec![0.0; n];
    let mut coop_rounds = vec![0usize; n];
    let mut trace = Vec::with_capacity(rounds);
    for round in 0..rounds {
        let mut next = profile.clone();
        for i in 0..n {
            if config.players[i].has_surplus {
                next.actions[i] = best_response(config, i, &profile)?;
            }
        }
        profile = next;
        let n_coop = profile.n_coop();
        let mut total = 0.0;
        for i in 0..n {
            let p = payoff_raw(config, profile.actions[i], config.players[i].utility_if_coop, n_coop);
            cumulative[i] += p;
            total += p;
            if profile.actions[i] == Action::Coop {
                coop_rounds[i] += 1;
            }
        }
        trace.push(TournamentRound {
            round,
            n_coop,
            mean_payoff: total / n as f64,
        });
    }
    Ok(TournamentResult {
        cumulative_payoffs: cumulative,
        cooperation_rates: coop_rounds.iter().map(|&c| c as f64 / rounds as f64).collect(),
        rounds: trace,
        final_profile: profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(rc: f64, n_th: usize, utilities: &[f64]) -> GameConfig {
        GameConfig {
            road_charge: rc,
            n_threshold: n_th,
            players: utilities
                .iter()
                .map(|&u| Player {
                    utility_if_coop: u,
                    has_surplus: true,
                })
                .collect(),
        }
    }

    fn profile(actions: &[Action]) -> ActionProfile {
        ActionProfile {
            actions: actions.to_vec(),
        }
    }

    use Action::*;

    #[test]
    fn payoff_table() {
        let c = config(150.0, 2, &[5.0, 1.0, 1.0]);
        assert_eq!(payoff(&c, &profile(&[Coop, NonCoop, NonCoop]), 0).unwrap(), 5.0);
        assert_eq!(payoff(&c, &profile(&[Coop, NonCoop, NonCoop]), 1).unwrap(), -150.0);
        assert_eq!(payoff(&c, &profile(&[Coop, Coop, NonCoop]), 2).unwrap(), -75.0);
        assert_eq!(payoff(&c, &profile(&[Coop, Coop, NonCoop]), 0).unwrap(), -75.0);
        assert!(matches!(
            payoff(&c, &profile(&[Coop, Coop, NonCoop]), 3),
            Err(Error::PlayerIndex { .. })
        ));
    }

    #[test]
    fn free_road_payoffs() {
        let c = config(0.0, 3, &[2.0, 4.0]);
        for a in [Coop, NonCoop] {
            for b in [Coop, NonCoop] {
                let p = profile(&[a, b]);
                for i in 0..2 {
                    let v = payoff(&c, &p, i).unwrap();
                    assert!(v == 0.0 || v == c.players[i].utility_if_coop);
                }
            }
        }
    }

    #[test]
    fn no_surplus_cannot_cooperate() {
        let mut c = config(10.0, 1, &[1.0, 1.0]);
        c.players[1].has_surplus = false;
        assert_eq!(payoff(&c, &profile(&[NonCoop, Coop]), 0), Err(Error::NoSurplus(1)));
        assert_eq!(
            best_response(&c, 1, &profile(&[NonCoop, NonCoop])),
            Err(Error::NoSurplus(1))
        );
    }

    #[test]
    fn zero_utility_still_cooperates() {
        let c = config(150.0, 3, &[0.0, 1.0, 1.0]);
        for others in [[NonCoop, NonCoop], [Coop, NonCoop], [Coop, Coop]] {
            let p = profile(&[NonCoop, others[0], others[1]]);
            assert_eq!(best_response(&c, 0, &p).unwrap(), Coop);
        }
    }

    #[test]
    fn very_negative_utility_defects() {
        let c = config(10.0, 5, &[-20.0, 1.0]);
        assert_eq!(best_response(&c, 0, &profile(&[Coop, NonCoop])).unwrap(), NonCoop);
    }

    #[test]
    fn threshold_values() {
        assert_eq!(conspiracy_threshold(150.0, 1).unwrap(), 0.0);
        assert_eq!(conspiracy_threshold(150.0, 3).unwrap(), 100.0);
        assert!(conspiracy_threshold(150.0, 0).is_err());
        let mut last = -1.0;
        for n in 1..200 {
            let t = conspiracy_threshold(150.0, n).unwrap();
            assert!(t > last && t < 150.0);
            last = t;
        }
    }

    #[test]
    fn conspiracy_gain_cases() {
        let g = |q, u| expected_conspiracy_gain(q, 0.7, 3, u, 150.0, 3, KnowledgeBase::QPrime).unwrap();
        assert_eq!(g(0.0, 10.0), 0.0);
        assert_eq!(g(0.5, 100.0), 0.0);
        assert!(g(0.5, 120.0) < 0.0);
        assert!(g(0.5, 80.0) > 0.0);
        let alt = expected_conspiracy_gain(0.5, 0.7, 3, 80.0, 150.0, 3, KnowledgeBase::Q).unwrap();
        assert!(alt > 0.0);
        assert!(expected_conspiracy_gain(1.5, 0.7, 3, 80.0, 150.0, 3, KnowledgeBase::Q).is_err());
    }

    #[test]
    fn tournament_all_cooperate() {
        let c = config(150.0, 3, &[1.0, 2.0, 0.0, 5.0, 3.0]);
        let r = simulate_tournament(&c, 20, 4).unwrap();
        assert_eq!(r.final_profile.n_coop(), 5);
        assert_eq!(r.rounds.last().unwrap().n_coop, 5);
    }

    #[test]
    fn tournament_without_surplus() {
        let mut c = config(150.0, 3, &[1.0, 2.0]);
        for p in &mut c.players {
            p.has_surplus = false;
        }
        let r = simulate_tournament(&c, 10, 1).unwrap();
        assert!(r.rounds.iter().all(|x| x.n_coop == 0));
        assert!(r.cumulative_payoffs.iter().all(|&p| p == -1500.0));
    }

    #[test]
    fn tournament_mixed_signs() {
        let c = config(0.0, 10, &[3.0, -1.0, 2.0, -4.0, 0.0]);
        let r = simulate_tournament(&c, 10, 8).unwrap();
        for (p, a) in c.players.iter().zip(&r.final_profile.actions) {
            assert_eq!(*a == Coop, p.utility_if_coop >= 0.0);
        }
        let a = simulate_tournament(&c, 10, 99).unwrap();
        let b = simulate_tournament(&c, 10, 99).unwrap();
        assert_eq!(a, b);
    }
}
