//! Exact expected focal payoff by exhaustive enumeration.
//!
//! This deliberately shares no code with [`crate::game`]: it walks every
//! focal action, every role mask and every peripheral action vector, weights
//! each combination by its probability and evaluates the payoff formula
//! directly. Sampled games are checked against it.

use crate::error::{Error, Result};
use crate::model::{Genome, MimicMode, Policy, SimParams};

/// Largest `k` the oracle accepts; the walk visits `2 * 4^k` leaves.
pub const ORACLE_MAX_K: usize = 12;

pub fn expected_focal_payoff_oracle(
    focal_genome: &Genome,
    peripheral_genomes: &[Genome],
    params: &SimParams,
) -> Result<f64> {
    let k = params.k;
    if k > ORACLE_MAX_K {
        return Err(Error::Argument(format!(
            "oracle enumeration limited to k <= {ORACLE_MAX_K}, got {k}"
        )));
    }
    if peripheral_genomes.len() != k {
        return Err(Error::Argument(format!(
            "expected {k} peripheral genomes, got {}",
            peripheral_genomes.len()
        )));
    }
    let r = params.r;
    let rho = params.rho_a;
    let group = (k + 1) as f64;

    let mut expectation = 0.0;
    for focal_cooperates in [true, false] {
        let p_focal = if focal_cooperates {
            focal_genome.p_c()
        } else {
            1.0 - focal_genome.p_c()
        };
        if p_focal == 0.0 {
            continue;
        }
        for mask in 0u32..(1 << k) {
            let mut p_mask = 1.0;
            for slot in 0..k {
                p_mask *= if mask >> slot & 1 == 1 {
                    rho
                } else {
                    1.0 - rho
                };
            }
            if p_mask == 0.0 {
                continue;
            }
            for acts in 0u32..(1 << k) {
                let mut p_acts = 1.0;
                for (slot, peripheral) in peripheral_genomes.iter().enumerate() {
                    let coop = acts >> slot & 1 == 1;
                    let p_coop = if mask >> slot & 1 == 1 {
                        agent_coop_probability(params, focal_genome, focal_cooperates)?
                    } else {
                        peripheral.p_c()
                    };
                    p_acts *= if coop { p_coop } else { 1.0 - p_coop };
                    if p_acts == 0.0 {
                        break;
                    }
                }
                if p_acts == 0.0 {
                    continue;
                }
                let n_c = acts.count_ones() as f64;
                let payoff = if focal_cooperates {
                    r * (n_c + 1.0) / group - 1.0
                } else {
                    r * n_c / group
                };
                expectation += p_focal * p_mask * p_acts * payoff;
            }
        }
    }
    Ok(expectation)
}

fn agent_coop_probability(
    params: &SimParams,
    focal: &Genome,
    focal_cooperates: bool,
) -> Result<f64> {
    Ok(match params.policy {
        Policy::Baseline => {
            return Err(Error::Logic(
                "agent slot with non-zero probability under the baseline policy".into(),
            ))
        }
        Policy::MandatoryCooperation => 1.0,
        Policy::PlayerControlled => focal.p_ac(),
        Policy::Mimic => match params.mimic_mode {
            MimicMode::CopyAction => {
                if focal_cooperates {
                    1.0
                } else {
                    0.0
                }
            }
            MimicMode::IndependentDraw => focal.p_c(),
        },
    })
}
