//! Poisson arrival streams and the entity templates they draw from.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};

use crate::domain::{SkillCatalog, SkillSet, Task, Volunteer};
use crate::error::{Result, WcbError};
use crate::sim::config::SyntheticParams;

/// Draws a Poisson(`rate`) count for every unit of `span` and stamps each
/// arrival uniformly within its unit. `make` turns `(sequence, stamp)` into
/// an entity; returning `None` skips the slot.
pub fn generate_arrivals<E, R: Rng + ?Sized>(
    rate: f64,
    span: f64,
    rng: &mut R,
    mut make: impl FnMut(usize, f64, &mut R) -> Option<E>,
) -> Result<Vec<E>> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(WcbError::domain(format!("arrival rate must be positive, got {rate}")));
    }
    if !(span >= 0.0) || !span.is_finite() {
        return Err(WcbError::domain(format!("span must be non-negative, got {span}")));
    }
    let mut out = Vec::new();
    let mut seq = 0;
    let units = span.ceil() as u64;
    for unit in 0..units {
        let start = unit as f64;
        let width = (span - start).min(1.0);
        let poisson = Poisson::new(rate * width).map_err(|e| WcbError::domain(e.to_string()))?;
        let count = poisson.sample(rng) as usize;
        let mut stamps: Vec<f64> = (0..count).map(|_| start + rng.random::<f64>() * width).collect();
        stamps.sort_by(f64::total_cmp);
        for stamp in stamps {
            if let Some(e) = make(seq, stamp, rng) {
                out.push(e);
            }
            seq += 1;
        }
    }
    Ok(out)
}

/// Where arriving entities get their attributes from.
#[derive(Debug, Clone)]
pub enum TemplateSource {
    Synthetic {
        params: SyntheticParams,
        catalog: SkillCatalog,
    },
    /// Rows resampled with replacement; ids and stamps are replaced.
    Dataset {
        catalog: SkillCatalog,
        tasks: Vec<Task>,
        volunteers: Vec<Volunteer>,
    },
}

pub fn task_id(seq: usize) -> String {
    format!("t{seq:07}")
}

pub fn volunteer_id(seq: usize) -> String {
    format!("v{seq:07}")
}

impl TemplateSource {
    pub fn synthetic(params: SyntheticParams) -> Result<Self> {
        let catalog = SkillCatalog::synthetic(params.catalog_size)?;
        Ok(TemplateSource::Synthetic { params, catalog })
    }

    pub fn catalog(&self) -> &SkillCatalog {
        match self {
            TemplateSource::Synthetic { catalog, .. } | TemplateSource::Dataset { catalog, .. } => catalog,
        }
    }

    /// Mean volunteer expense, used to default the baseline pay schedules.
    pub fn average_expense(&self) -> f64 {
        match self {
            TemplateSource::Synthetic { params, .. } => params.expense_mean,
            TemplateSource::Dataset { volunteers, .. } if volunteers.is_empty() => 0.0,
            TemplateSource::Dataset { volunteers, .. } => {
                volunteers.iter().map(|v| v.expense).sum::<f64>() / volunteers.len() as f64
            }
        }
    }

    pub fn sample_task<R: Rng + ?Sized>(&self, seq: usize, arrival: f64, rng: &mut R) -> Option<Task> {
        match self {
            TemplateSource::Synthetic { params, catalog } => {
                let required = sample_skills(catalog, params.task_skills_mean, rng);
                let floor = truncated_normal(params.expense_mean, params.expense_sd, 1.0, rng);
                let budget = truncated_normal(params.budget_mean, params.budget_sd, floor, rng);
                let duration = Exp::new(1.0 / params.duration_mean)
                    .expect("validated mean")
                    .sample(rng)
                    .max(1e-6);
                Some(Task {
                    id: task_id(seq),
                    budget,
                    required_skills: required,
                    arrival,
                    duration,
                })
            }
            TemplateSource::Dataset { tasks, .. } if tasks.is_empty() => None,
            TemplateSource::Dataset { tasks, .. } => {
                let row = &tasks[rng.random_range(0..tasks.len())];
                Some(Task {
                    id: task_id(seq),
                    arrival,
                    ..row.clone()
                })
            }
        }
    }

    pub fn sample_volunteer<R: Rng + ?Sized>(&self, seq: usize, arrival: f64, rng: &mut R) -> Option<Volunteer> {
        match self {
            TemplateSource::Synthetic { params, catalog } => {
                let skills = sample_skills(catalog, params.volunteer_skills_mean, rng);
                let expense = truncated_normal(params.expense_mean, params.expense_sd, 1.0, rng);
                let stay = Exp::new(1.0 / params.stay_mean).expect("validated mean").sample(rng);
                Some(Volunteer {
                    id: volunteer_id(seq),
                    expense,
                    skills,
                    arrival,
                    departure: arrival + stay,
                    willingness: rng.random(),
                    bias: rng.random(),
                    rating: rng.random(),
                })
            }
            TemplateSource::Dataset { volunteers, .. } if volunteers.is_empty() => None,
            TemplateSource::Dataset { volunteers, .. } => {
                let row = &volunteers[rng.random_range(0..volunteers.len())];
                Some(Volunteer {
                    id: volunteer_id(seq),
                    arrival,
                    departure: arrival + (row.departure - row.arrival),
                    ..row.clone()
                })
            }
        }
    }
}

/// Poisson(`mean`) distinct skills, at least one and at most the catalog.
fn sample_skills<R: Rng + ?Sized>(catalog: &SkillCatalog, mean: f64, rng: &mut R) -> SkillSet {
    let n = catalog.len();
    let k = (Poisson::new(mean).expect("validated mean").sample(rng) as usize).clamp(1, n);
    let names: Vec<&String> = catalog.iter().collect();
    index::sample(rng, n, k).into_iter().map(|i| names[i].clone()).collect()
}

/// Normal draw rejected until it reaches `floor`; falls back to `floor`
/// when the mass above it is negligible.
fn truncated_normal<R: Rng + ?Sized>(mean: f64, sd: f64, floor: f64, rng: &mut R) -> f64 {
    if sd == 0.0 {
        return mean.max(floor);
    }
    let normal = Normal::new(mean, sd).expect("validated sd");
    for _ in 0..64 {
        let x = normal.sample(rng);
        if x >= floor {
            return x;
        }
    }
    floor
}
