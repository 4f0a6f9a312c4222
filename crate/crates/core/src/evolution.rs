//! Generational loop: grid placement, focal-game scoring, roulette-wheel
//! reproduction and mutation.
//!
//! All randomness in a run flows through one seeded [`SimRng`] held by the
//! [`PopulationState`], so identical parameters give identical runs.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{play_game, threshold, CutRules, GameRules, GenomeCuts};
use crate::model::{neighbor_offsets, validate_params, Genome, InitMode, SimParams, MAX_K};

/// Random stream used by every run.
pub type SimRng = rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Clone, Debug, PartialEq)]
pub struct PopulationState {
    pub genomes: Vec<Genome>,
    pub generation: usize,
    pub rng: SimRng,
}

/// An offspring whose genome differs from its parent's by mutation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mutation {
    pub index: u32,
    pub genome: Genome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Means over the population before selection.
    pub mean_p_c: f64,
    pub mean_p_ac: f64,
    /// Fraction of cooperative actions among all participants of all games.
    pub coop_frequency: f64,
    /// Parent (in this generation) of each individual of the next one.
    /// Empty when lineage tracking is off.
    pub parent_index: Vec<u32>,
    /// Offspring that mutated. Empty when lineage tracking is off.
    pub mutations: Vec<Mutation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub params: SimParams,
    pub records: Vec<GenerationRecord>,
    pub initial_genomes: Vec<Genome>,
    pub final_genomes: Vec<Genome>,
}

impl RunResult {
    /// Parent-index history, one slice per generation transition.
    pub fn ancestry(&self) -> Vec<&[u32]> {
        self.records
            .iter()
            .map(|r| r.parent_index.as_slice())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep parent indices and mutation deltas for line-of-descent analysis.
    pub track_lineage: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            track_lineage: true,
        }
    }
}

pub fn initialize_population(params: &SimParams) -> PopulationState {
    let mut rng = SimRng::seed_from_u64(params.seed);
    let genomes = match params.init {
        InitMode::Neutral => vec![Genome::neutral(); params.population_size],
        InitMode::Uniform => (0..params.population_size)
            .map(|_| Genome::from_unit_draws(rng.gen(), rng.gen()))
            .collect(),
    };
    PopulationState {
        genomes,
        generation: 0,
        rng,
    }
}

/// Turns summed scores into non-negative roulette weights by adding `shift`.
///
/// Negative results (possible only with a custom shift below the payoff
/// bound) are clamped to zero; if nothing positive remains the wheel is uniform.
pub fn fitness_transform(scores: &[f64], shift: f64) -> Vec<f64> {
    let mut weights: Vec<f64> = scores.iter().map(|s| (s + shift).max(0.0)).collect();
    if weights.iter().all(|w| *w == 0.0) {
        weights.iter_mut().for_each(|w| *w = 1.0);
    }
    weights
}

/// Draws `count` indices with replacement, each with probability proportional to its weight.
pub fn roulette_select<R: Rng + ?Sized>(
    weights: &[f64],
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let wheel =
        WeightedIndex::new(weights).map_err(|e| Error::Argument(format!("roulette wheel: {e}")))?;
    Ok((0..count).map(|_| wheel.sample(rng)).collect())
}

/// Each probability is independently redrawn from U[0, 1) with probability `mu`.
pub fn mutate<R: Rng + ?Sized>(genome: Genome, mu: f64, rng: &mut R) -> Genome {
    mutate_flagged(genome, mu, rng).0
}

fn mutate_flagged<R: Rng + ?Sized>(genome: Genome, mu: f64, rng: &mut R) -> (Genome, bool) {
    let mut p_c = genome.p_c();
    let mut p_ac = genome.p_ac();
    let mut changed = false;
    if rng.gen::<f64>() < mu {
        p_c = rng.gen();
        changed = true;
    }
    if rng.gen::<f64>() < mu {
        p_ac = rng.gen();
        changed = true;
    }
    (Genome::from_unit_draws(p_c, p_ac), changed)
}

/// Neighbor table of a torus: `k` cell indices per cell.
#[derive(Clone, Debug)]
pub struct Neighborhood {
    k: usize,
    table: Vec<u32>,
}

impl Neighborhood {
    pub fn torus(width: usize, height: usize, k: usize) -> Self {
        let offsets = neighbor_offsets(k);
        let mut table = Vec::with_capacity(width * height * k);
        for y in 0..height as i64 {
            for x in 0..width as i64 {
                for &(dx, dy) in &offsets {
                    let nx = (x + dx).rem_euclid(width as i64);
                    let ny = (y + dy).rem_euclid(height as i64);
                    table.push((ny * width as i64 + nx) as u32);
                }
            }
        }
        Neighborhood { k, table }
    }

    pub fn of(&self, cell: usize) -> &[u32] {
        &self.table[cell * self.k..(cell + 1) * self.k]
    }
}

/// Per-generation scoring output.
#[derive(Clone, Debug, PartialEq)]
pub struct Scores {
    /// Summed focal payoffs, indexed by player.
    pub scores: Vec<f64>,
    pub coop_frequency: f64,
}

/// Runs generations for one validated parameter set, reusing buffers.
#[derive(Clone, Debug)]
pub struct Engine {
    params: SimParams,
    rules: CutRules,
    neighborhood: Neighborhood,
    placement: Vec<u32>,
    cell_cut: Vec<u64>,
}

impl Engine {
    pub fn new(params: &SimParams) -> Result<Self> {
        let params = validate_params(params.clone())?;
        let neighborhood = Neighborhood::torus(params.grid_width, params.grid_height, params.k);
        Ok(Engine {
            rules: CutRules::from(&GameRules::from(&params)),
            neighborhood,
            placement: (0..params.population_size as u32).collect(),
            cell_cut: vec![0; params.population_size],
            params,
        })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    /// Places players on the torus by a fresh permutation and lets each play
    /// `games_per_focal` games as the focal player among its grid neighbors.
    pub fn score(&mut self, state: &mut PopulationState) -> Result<Scores> {
        let n = self.params.population_size;
        if state.genomes.len() != n {
            return Err(Error::Argument(format!(
                "population has {} genomes, parameters expect {n}",
                state.genomes.len()
            )));
        }
        let genomes = &state.genomes;
        let rng = &mut state.rng;
        self.placement.clear();
        self.placement.extend(0..n as u32);
        self.placement.shuffle(rng);

        let placement = &self.placement;
        for (cut, &player) in self.cell_cut.iter_mut().zip(placement) {
            *cut = threshold(genomes[player as usize].p_c());
        }
        let cell_cut = &self.cell_cut;
        let k = self.params.k;
        let mut peripheral = [0u64; MAX_K];
        let mut scores = vec![0.0; n];
        let mut cooperative_actions = 0u64;
        for (cell, &focal_idx) in placement.iter().enumerate() {
            let focal_idx = focal_idx as usize;
            let focal = GenomeCuts::from(&genomes[focal_idx]);
            for (cut, &j) in peripheral.iter_mut().zip(self.neighborhood.of(cell)) {
                *cut = cell_cut[j as usize];
            }
            for _ in 0..self.params.games_per_focal {
                let tally = play_game(&self.rules, focal, &peripheral[..k], rng, |_| {})?;
                scores[focal_idx] += tally.focal_payoff;
                cooperative_actions +=
                    tally.n_coop_peripheral as u64 + u64::from(tally.focal_action.is_cooperate());
            }
        }
        let total_actions = (n * self.params.games_per_focal * (self.params.k + 1)) as f64;
        Ok(Scores {
            scores,
            coop_frequency: if total_actions > 0.0 {
                cooperative_actions as f64 / total_actions
            } else {
                0.0
            },
        })
    }

    /// Score, select `population_size` parents, mutate offspring.
    pub fn step(
        &mut self,
        state: &mut PopulationState,
        track_lineage: bool,
    ) -> Result<GenerationRecord> {
        let n = state.genomes.len() as f64;
        let mean_p_c = state.genomes.iter().map(Genome::p_c).sum::<f64>() / n;
        let mean_p_ac = state.genomes.iter().map(Genome::p_ac).sum::<f64>() / n;

        let Scores {
            scores,
            coop_frequency,
        } = self.score(state)?;
        let weights = fitness_transform(&scores, self.params.fitness_shift());
        let parents = roulette_select(&weights, state.genomes.len(), &mut state.rng)?;

        let mut mutations = Vec::new();
        let offspring: Vec<Genome> = parents
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let (child, changed) =
                    mutate_flagged(state.genomes[p], self.params.mu, &mut state.rng);
                if changed && track_lineage {
                    mutations.push(Mutation {
                        index: i as u32,
                        genome: child,
                    });
                }
                child
            })
            .collect();

        let record = GenerationRecord {
            generation: state.generation,
            mean_p_c,
            mean_p_ac,
            coop_frequency,
            parent_index: if track_lineage {
                parents.iter().map(|&p| p as u32).collect()
            } else {
                Vec::new()
            },
            mutations,
        };
        state.genomes = offspring;
        state.generation += 1;
        Ok(record)
    }
}

/// Scores one generation without advancing it. Consumes draws from `state.rng`.
pub fn score_generation(state: &mut PopulationState, params: &SimParams) -> Result<Scores> {
    Engine::new(params)?.score(state)
}

/// Advances `state` by one generation and returns its record (with lineage).
pub fn step_generation(
    state: &mut PopulationState,
    params: &SimParams,
) -> Result<GenerationRecord> {
    Engine::new(params)?.step(state, true)
}

pub fn run_simulation(params: &SimParams) -> Result<RunResult> {
    run_simulation_with(params, RunOptions::default())
}

pub fn run_simulation_with(params: &SimParams, options: RunOptions) -> Result<RunResult> {
    run_observed(params, options, |_| Ok(()))
}

/// Like [`run_simulation_with`], calling `observe` on each record as it is produced.
pub fn run_observed<F>(params: &SimParams, options: RunOptions, mut observe: F) -> Result<RunResult>
where
    F: FnMut(&GenerationRecord) -> Result<()>,
{
    let mut engine = Engine::new(params)?;
    let mut state = initialize_population(engine.params());
    let initial_genomes = state.genomes.clone();
    let mut records = Vec::with_capacity(params.generations);
    for _ in 0..params.generations {
        let record = engine.step(&mut state, options.track_lineage)?;
        observe(&record)?;
        records.push(record);
    }
    Ok(RunResult {
        params: engine.params().clone(),
        records,
        initial_genomes,
        final_genomes: state.genomes,
    })
}
