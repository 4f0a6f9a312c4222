//! A single focal public goods game.
//!
//! The focal player sits at the center of a group of `k + 1`. Each peripheral
//! slot is independently taken over by an AI agent with probability `rho_A`,
//! every participant chooses an action, and only the focal player's payoff is
//! computed.
//!
//! Every game consumes exactly `1 + 2k` uniform draws from the stream: one for
//! the focal action, `k` for the role mask and one per peripheral slot for its
//! action (drawn even when the slot's action is deterministic), so replays
//! stay aligned regardless of which roles came up.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Action, Genome, MimicMode, Policy, Role, RoleMask, SimParams, MAX_K};

/// Payoff of a cooperating focal player when `n_c` of its `k` neighbors cooperate.
pub fn payoff_cooperator(n_c: usize, k: usize, r: f64) -> Result<f64> {
    check_count(n_c, k)?;
    Ok(cooperator_payoff(n_c, k, r))
}

/// Payoff of a defecting focal player when `n_c` of its `k` neighbors cooperate.
pub fn payoff_defector(n_c: usize, k: usize, r: f64) -> Result<f64> {
    check_count(n_c, k)?;
    Ok(defector_payoff(n_c, k, r))
}

#[inline]
fn cooperator_payoff(n_c: usize, k: usize, r: f64) -> f64 {
    r * (n_c + 1) as f64 / (k + 1) as f64 - 1.0
}

#[inline]
fn defector_payoff(n_c: usize, k: usize, r: f64) -> f64 {
    r * n_c as f64 / (k + 1) as f64
}

#[cfg(test)]
fn focal_payoff(action: Action, n_c: usize, k: usize, r: f64) -> f64 {
    match action {
        Action::Cooperate => cooperator_payoff(n_c, k, r),
        Action::Defect => defector_payoff(n_c, k, r),
    }
}

fn check_count(n_c: usize, k: usize) -> Result<()> {
    if n_c > k {
        Err(Error::Argument(format!(
            "cooperator count {n_c} exceeds neighbor count {k}"
        )))
    } else {
        Ok(())
    }
}

/// The subset of [`SimParams`] that determines how one game is played.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GameRules {
    pub k: usize,
    pub r: f64,
    pub rho_a: f64,
    pub policy: Policy,
    pub mimic_mode: MimicMode,
}

impl From<&SimParams> for GameRules {
    fn from(p: &SimParams) -> Self {
        GameRules {
            k: p.k,
            r: p.r,
            rho_a: p.rho_a,
            policy: p.policy,
            mimic_mode: p.mimic_mode,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub focal_action: Action,
    pub focal_payoff: f64,
    pub n_cooperators_peripheral: usize,
    pub n_agent_slots: usize,
    /// Focal action first, then one action per peripheral slot.
    pub actions_all: Vec<Action>,
}

#[inline]
fn bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    // draws lie in [0, 1): p = 0 never fires and p = 1 always does
    rng.gen::<f64>() < p
}

/// Integer cut-off equivalent to [`bernoulli`]: the standard `f64` draw is
/// `(u >> 11) * 2^-53`, so `draw < p` holds exactly when `u >> 11 < ceil(p * 2^53)`.
#[inline]
pub(crate) fn threshold(p: f64) -> u64 {
    (p.clamp(0.0, 2.0) * (1u64 << 53) as f64).ceil() as u64
}

#[inline]
fn below<R: Rng + ?Sized>(cut: u64, rng: &mut R) -> bool {
    rng.next_u64() >> 11 < cut
}

/// Marks each of `k` slots as an agent with probability `rho_a`.
pub fn sample_role_mask<R: Rng + ?Sized>(k: usize, rho_a: f64, rng: &mut R) -> RoleMask {
    let mut roles = Vec::with_capacity(k);
    sample_roles_into(k, rho_a, rng, &mut roles);
    RoleMask::new(roles)
}

fn sample_roles_into<R: Rng + ?Sized>(k: usize, rho_a: f64, rng: &mut R, out: &mut Vec<Role>) {
    out.clear();
    out.extend((0..k).map(|_| {
        if bernoulli(rho_a, rng) {
            Role::Agent
        } else {
            Role::Player
        }
    }));
}

/// Action of one peripheral slot. Always consumes exactly one draw.
pub fn resolve_peripheral_action<R: Rng + ?Sized>(
    role: Role,
    policy: Policy,
    mimic_mode: MimicMode,
    focal_genome: &Genome,
    focal_action: Action,
    peripheral_genome: &Genome,
    rng: &mut R,
) -> Result<Action> {
    let u: f64 = rng.gen();
    let cooperate = match role {
        Role::Player => u < peripheral_genome.p_c(),
        Role::Agent => match policy {
            Policy::Baseline => {
                return Err(Error::Logic(
                    "agent slot sampled under the baseline policy".into(),
                ))
            }
            Policy::MandatoryCooperation => true,
            Policy::PlayerControlled => u < focal_genome.p_ac(),
            Policy::Mimic => match mimic_mode {
                MimicMode::CopyAction => focal_action.is_cooperate(),
                MimicMode::IndependentDraw => u < focal_genome.p_c(),
            },
        },
    };
    Ok(Action::from_bool(cooperate))
}

/// Tally of one game, without the per-slot action list.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct GameTally {
    pub focal_action: Action,
    pub focal_payoff: f64,
    pub n_coop_peripheral: usize,
    pub n_agents: usize,
}

/// [`GameRules`] with the agent density pre-converted to a [`threshold`].
#[derive(Clone, Copy, Debug)]
pub(crate) struct CutRules {
    k: usize,
    r: f64,
    rho_cut: u64,
    policy: Policy,
    mimic_mode: MimicMode,
}

impl From<&GameRules> for CutRules {
    fn from(rules: &GameRules) -> Self {
        CutRules {
            k: rules.k,
            r: rules.r,
            rho_cut: threshold(rules.rho_a),
            policy: rules.policy,
            mimic_mode: rules.mimic_mode,
        }
    }
}

/// Thresholds of a genome's `p_C` and `p_AC`.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct GenomeCuts {
    pub p_c: u64,
    pub p_ac: u64,
}

impl From<&Genome> for GenomeCuts {
    fn from(g: &Genome) -> Self {
        GenomeCuts {
            p_c: threshold(g.p_c()),
            p_ac: threshold(g.p_ac()),
        }
    }
}

/// Plays one focal game. `peripheral[j]` is the [`threshold`] of the
/// cooperation probability of the player in slot `j`; `on_action` sees
/// every peripheral action in slot order.
///
/// Same draws and decisions as sampling a [`RoleMask`] and calling
/// [`resolve_peripheral_action`] per slot, with the mask held as bits and
/// every slot reduced to an integer cut-off compared with its draw.
#[inline]
pub(crate) fn play_game<R, F>(
    rules: &CutRules,
    focal: GenomeCuts,
    peripheral: &[u64],
    rng: &mut R,
    mut on_action: F,
) -> Result<GameTally>
where
    R: Rng + ?Sized,
    F: FnMut(Action),
{
    debug_assert!(rules.k <= MAX_K);
    let peripheral = &peripheral[..rules.k];
    let focal_coop = below(focal.p_c, rng);
    let agent_cut = match rules.policy {
        // every draw is below 2^53
        Policy::Baseline | Policy::MandatoryCooperation => 1 << 53,
        Policy::PlayerControlled => focal.p_ac,
        Policy::Mimic => match rules.mimic_mode {
            MimicMode::CopyAction => u64::from(focal_coop) << 53,
            MimicMode::IndependentDraw => focal.p_c,
        },
    };
    let mut agents = 0u64;
    for slot in 0..rules.k {
        agents |= u64::from(below(rules.rho_cut, rng)) << slot;
    }
    let n_agents = agents.count_ones() as usize;
    if rules.policy == Policy::Baseline && n_agents > 0 {
        return Err(Error::Logic(
            "agent slot sampled under the baseline policy".into(),
        ));
    }
    let mut n_coop = 0;
    for (slot, &player_cut) in peripheral.iter().enumerate() {
        let cut = if agents >> slot & 1 == 1 {
            agent_cut
        } else {
            player_cut
        };
        let coop = below(cut, rng);
        n_coop += usize::from(coop);
        on_action(Action::from_bool(coop));
    }
    // cooperator: r (n + 1) / (k + 1) - 1, defector: r n / (k + 1)
    let c = f64::from(u8::from(focal_coop));
    Ok(GameTally {
        focal_action: Action::from_bool(focal_coop),
        focal_payoff: rules.r * (n_coop as f64 + c) / (rules.k + 1) as f64 - c,
        n_coop_peripheral: n_coop,
        n_agents,
    })
}

/// Plays one focal game against `peripheral_genomes` (one per slot).
pub fn play_focal_game<R: Rng + ?Sized>(
    focal_genome: &Genome,
    peripheral_genomes: &[Genome],
    params: &SimParams,
    rng: &mut R,
) -> Result<GameOutcome> {
    if peripheral_genomes.len() != params.k {
        return Err(Error::Argument(format!(
            "expected {} peripheral genomes, got {}",
            params.k,
            peripheral_genomes.len()
        )));
    }
    let rules = CutRules::from(&GameRules::from(params));
    let cuts: Vec<u64> = peripheral_genomes
        .iter()
        .map(|g| threshold(g.p_c()))
        .collect();
    let mut actions = Vec::with_capacity(params.k + 1);
    let tally = play_game(&rules, GenomeCuts::from(focal_genome), &cuts, rng, |a| {
        actions.push(a)
    })?;
    actions.insert(0, tally.focal_action);
    Ok(GameOutcome {
        focal_action: tally.focal_action,
        focal_payoff: tally.focal_payoff,
        n_cooperators_peripheral: tally.n_coop_peripheral,
        n_agent_slots: tally.n_agents,
        actions_all: actions,
    })
}
