//! Potential level of a volunteer: an aging-boosted sigmoid of their track
//! record and skill breadth, folded into a non-decreasing running value.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WcbError};

/// Everything needed to score one volunteer at the start of a round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialInputs {
    pub alloc_success: u32,
    pub alloc_participated: u32,
    pub skill_count: usize,
    pub catalog_size: usize,
    pub aging_constant: f64,
    pub rounds_since_assignment: u32,
    pub previous_potential: f64,
}

impl PotentialInputs {
    pub fn validate(&self) -> Result<()> {
        if self.catalog_size == 0 {
            return Err(WcbError::domain("catalog size must be positive"));
        }
        if self.skill_count > self.catalog_size {
            return Err(WcbError::domain(format!(
                "skill count {} exceeds catalog size {}",
                self.skill_count, self.catalog_size
            )));
        }
        if self.alloc_success > self.alloc_participated {
            return Err(WcbError::domain("alloc_success exceeds alloc_participated"));
        }
        check_unit("previous potential", self.previous_potential)
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(WcbError::domain(format!("{name} {x} outside [0,1]")))
    }
}

/// `alpha^(1/l)`: grows toward 1 the longer a volunteer waits unassigned.
pub fn aging_factor(alpha: f64, rounds_since_assignment: u32) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(WcbError::domain(format!("aging constant {alpha} outside (0,1]")));
    }
    if rounds_since_assignment < 1 {
        return Err(WcbError::domain("rounds since assignment must be at least 1"));
    }
    Ok(alpha.powf(1.0 / f64::from(rounds_since_assignment)))
}

/// Success ratio + skill ratio + aging factor, in [0,3].
///
/// A volunteer who has never participated gets a success ratio of zero.
pub fn sigma(inputs: &PotentialInputs) -> Result<f64> {
    inputs.validate()?;
    let success = if inputs.alloc_participated == 0 {
        0.0
    } else {
        f64::from(inputs.alloc_success) / f64::from(inputs.alloc_participated)
    };
    let skills = inputs.skill_count as f64 / inputs.catalog_size as f64;
    let aging = aging_factor(inputs.aging_constant, inputs.rounds_since_assignment)?;
    Ok(success + skills + aging)
}

/// Logistic initialisation. Over [0,3] the attainable range is
/// [0.5, 1/(1+e^-3)], not the whole unit interval.
pub fn potential_init(sigma_value: f64) -> Result<f64> {
    if !(0.0..=3.0).contains(&sigma_value) {
        return Err(WcbError::domain(format!("sigma {sigma_value} outside [0,3]")));
    }
    Ok(1.0 / (1.0 + (-sigma_value).exp()))
}

/// `(1 - previous) * init + previous`; never below `previous`, never above 1.
pub fn potential_update(previous: f64, init: f64) -> Result<f64> {
    check_unit("previous potential", previous)?;
    check_unit("initial potential", init)?;
    Ok(((1.0 - previous) * init + previous).min(1.0))
}

/// Full refresh for one volunteer: sigma, init, then update.
pub fn refresh(inputs: &PotentialInputs) -> Result<f64> {
    let init = potential_init(sigma(inputs)?)?;
    potential_update(inputs.previous_potential, init)
}
