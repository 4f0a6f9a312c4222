//! Domain types shared by the game, evolution, analytics and sweep layers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A player's evolvable strategy.
///
/// `p_c` is the probability that the player cooperates. `p_ac` is the
/// probability that AI agents controlled by this player cooperate; it is only
/// read under [`Policy::PlayerControlled`] and drifts neutrally otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    p_c: f64,
    p_ac: f64,
}

impl Genome {
    pub fn new(p_c: f64, p_ac: f64) -> Result<Self> {
        check_probability("p_C", p_c)?;
        check_probability("p_AC", p_ac)?;
        Ok(Genome { p_c, p_ac })
    }

    /// Both probabilities at one half, the initial state of every player.
    pub const fn neutral() -> Self {
        Genome {
            p_c: 0.5,
            p_ac: 0.5,
        }
    }

    pub fn p_c(&self) -> f64 {
        self.p_c
    }

    pub fn p_ac(&self) -> f64 {
        self.p_ac
    }

    /// Draws from `rng` are in [0, 1), so the bounds are preserved.
    pub(crate) fn from_unit_draws(p_c: f64, p_ac: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&p_c) && (0.0..=1.0).contains(&p_ac));
        Genome { p_c, p_ac }
    }
}

impl Default for Genome {
    fn default() -> Self {
        Genome::neutral()
    }
}

/// How AI agents occupying peripheral slots choose their action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// No agents at all; requires `rho_A = 0`.
    Baseline,
    /// Agents always cooperate.
    MandatoryCooperation,
    /// Agents cooperate with the focal player's `p_AC`.
    PlayerControlled,
    /// Agents copy the focal player.
    Mimic,
}

impl Policy {
    pub const ALL: [Policy; 4] = [
        Policy::Baseline,
        Policy::MandatoryCooperation,
        Policy::PlayerControlled,
        Policy::Mimic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Policy::Baseline => "baseline",
            Policy::MandatoryCooperation => "mandatory",
            Policy::PlayerControlled => "player_controlled",
            Policy::Mimic => "mimic",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "baseline" | "none" => Ok(Policy::Baseline),
            "mandatory" | "mandatory_cooperation" => Ok(Policy::MandatoryCooperation),
            "player_controlled" | "controlled" => Ok(Policy::PlayerControlled),
            "mimic" => Ok(Policy::Mimic),
            other => Err(Error::invalid(
                "policy",
                format!("unknown policy `{other}` (expected baseline, mandatory, player_controlled or mimic)"),
            )),
        }
    }
}

/// What a mimicking agent copies from the focal player.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MimicMode {
    /// Copy the focal player's realized action in this game.
    #[default]
    CopyAction,
    /// Draw independently with the focal player's `p_C`.
    IndependentDraw,
}

impl FromStr for MimicMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "copy_action" | "copy" => Ok(MimicMode::CopyAction),
            "independent_draw" | "independent" => Ok(MimicMode::IndependentDraw),
            other => Err(Error::invalid(
                "mimic_mode",
                format!("unknown mimic mode `{other}` (expected copy_action or independent_draw)"),
            )),
        }
    }
}

/// Starting strategies of the population.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Every genome starts at (0.5, 0.5).
    #[default]
    Neutral,
    /// Both probabilities drawn uniformly on [0, 1).
    Uniform,
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "neutral" | "half" => Ok(InitMode::Neutral),
            "uniform" | "random" => Ok(InitMode::Uniform),
            other => Err(Error::invalid(
                "init",
                format!("unknown init mode `{other}` (expected neutral or uniform)"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "C")]
    Cooperate,
    #[serde(rename = "D")]
    Defect,
}

impl Action {
    pub fn is_cooperate(self) -> bool {
        self == Action::Cooperate
    }

    pub(crate) fn from_bool(cooperate: bool) -> Self {
        if cooperate {
            Action::Cooperate
        } else {
            Action::Defect
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Cooperate => "C",
            Action::Defect => "D",
        })
    }
}

/// Occupant of a peripheral group slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Player,
    Agent,
}

/// One [`Role`] per peripheral slot of a focal game.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleMask(Vec<Role>);

impl RoleMask {
    pub fn new(roles: Vec<Role>) -> Self {
        RoleMask(roles)
    }

    pub fn roles(&self) -> &[Role] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn agent_count(&self) -> usize {
        self.0.iter().filter(|r| **r == Role::Agent).count()
    }
}

/// Largest supported neighbor count; a game's role mask is held in one `u64`.
pub const MAX_K: usize = 64;

/// Full configuration of one evolutionary run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Number of peripheral neighbors; groups have `k + 1` members.
    pub k: usize,
    /// Synergy factor applied to the pool.
    pub r: f64,
    /// Probability that a peripheral slot holds an AI agent.
    pub rho_a: f64,
    pub policy: Policy,
    pub population_size: usize,
    pub grid_width: usize,
    pub grid_height: usize,
    pub mu: f64,
    pub generations: usize,
    pub games_per_focal: usize,
    pub seed: u64,
    pub mimic_mode: MimicMode,
    pub init: InitMode,
    /// Constant added to scores before roulette selection. `None` means
    /// `games_per_focal`, the strict lower bound of a player's summed payoff.
    pub fitness_shift: Option<f64>,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            k: 4,
            r: 5.0,
            rho_a: 0.0,
            policy: Policy::Baseline,
            population_size: 32 * 32,
            grid_width: 32,
            grid_height: 32,
            mu: 0.01,
            generations: 10_000,
            games_per_focal: 5,
            seed: 0,
            mimic_mode: MimicMode::CopyAction,
            init: InitMode::Neutral,
            fitness_shift: None,
        }
    }
}

impl SimParams {
    /// Sets `k` and resets `games_per_focal` to `k + 1`.
    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self.games_per_focal = k + 1;
        self
    }

    /// Sets the grid and the matching population size.
    pub fn with_grid(mut self, width: usize, height: usize) -> Self {
        self.grid_width = width;
        self.grid_height = height;
        self.population_size = width * height;
        self
    }

    pub fn fitness_shift(&self) -> f64 {
        self.fitness_shift.unwrap_or(self.games_per_focal as f64)
    }
}

/// Returns `params` unchanged when every field and cross-field invariant holds.
pub fn validate_params(params: SimParams) -> Result<SimParams> {
    if params.k == 0 || params.k > MAX_K {
        return Err(Error::invalid(
            "k",
            format!("must lie in 1..={MAX_K}, got {}", params.k),
        ));
    }
    if !(params.r.is_finite() && params.r > 0.0) {
        return Err(Error::invalid(
            "r",
            format!("must be positive, got {}", params.r),
        ));
    }
    if !(0.0..=1.0).contains(&params.rho_a) {
        return Err(Error::invalid(
            "rho_A",
            format!("out of [0,1]: {}", params.rho_a),
        ));
    }
    if !(0.0..=1.0).contains(&params.mu) {
        return Err(Error::invalid("mu", format!("out of [0,1]: {}", params.mu)));
    }
    if params.policy == Policy::Baseline && params.rho_a != 0.0 {
        return Err(Error::invalid("rho_A", "Baseline requires rho_A=0"));
    }
    if params.grid_width == 0 || params.grid_height == 0 {
        return Err(Error::invalid("grid", "width and height must be positive"));
    }
    if params.population_size != params.grid_width * params.grid_height {
        return Err(Error::invalid(
            "population_size",
            format!(
                "{} does not equal grid_width x grid_height = {} x {}",
                params.population_size, params.grid_width, params.grid_height
            ),
        ));
    }
    if params.games_per_focal == 0 {
        return Err(Error::invalid("games_per_focal", "must be at least 1"));
    }
    if let Some(shift) = params.fitness_shift {
        if !(shift.is_finite() && shift >= 0.0) {
            return Err(Error::invalid(
                "fitness_shift",
                "must be finite and non-negative",
            ));
        }
    }
    if !grid_supports(params.k, params.grid_width, params.grid_height) {
        return Err(Error::invalid(
            "grid",
            format!(
                "{}x{} torus is too small for {} distinct neighbors",
                params.grid_width, params.grid_height, params.k
            ),
        ));
    }
    Ok(params)
}

/// Neighbor offsets `(dx, dy)` for a `k`-neighborhood.
///
/// Offsets are ordered by squared distance, then clockwise from north, so
/// `k = 4` is the von Neumann neighborhood N, E, S, W and `k = 8` adds the
/// diagonals.
pub fn neighbor_offsets(k: usize) -> Vec<(i64, i64)> {
    // the disc of this radius holds well over k cells
    let radius = (k as f64).sqrt().ceil() as i64 + 1;
    let mut offsets: Vec<(i64, i64)> = (-radius..=radius)
        .flat_map(|dy| (-radius..=radius).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| (dx, dy) != (0, 0))
        .collect();
    offsets.sort_by(|a, b| {
        let da = a.0 * a.0 + a.1 * a.1;
        let db = b.0 * b.0 + b.1 * b.1;
        da.cmp(&db)
            .then(clockwise_angle(*a).total_cmp(&clockwise_angle(*b)))
    });
    offsets.truncate(k);
    offsets
}

fn clockwise_angle((dx, dy): (i64, i64)) -> f64 {
    // north is (0, -1) in row-major screen coordinates
    let a = (dx as f64).atan2(-dy as f64);
    if a < 0.0 {
        a + std::f64::consts::TAU
    } else {
        a
    }
}

fn grid_supports(k: usize, width: usize, height: usize) -> bool {
    let mut seen = Vec::with_capacity(k);
    for (dx, dy) in neighbor_offsets(k) {
        let x = dx.rem_euclid(width as i64);
        let y = dy.rem_euclid(height as i64);
        if (x, y) == (0, 0) || seen.contains(&(x, y)) {
            return false;
        }
        seen.push((x, y));
    }
    true
}

fn check_probability(field: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("out of [0,1]: {value}")))
    }
}
