//! Real-valued generational genetic algorithm over column-normalized
//! signature matrices.
//!
//! Fitness evaluation within a generation runs through [`Exec`]; selection,
//! crossover and mutation draw from one coordinator stream, so a run is
//! reproducible from `GaConfig::seed` regardless of worker count.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::baselines::random_normalized_from;
use crate::criteria::{fitness_with, CriterionSpec, SeedPolicy};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{normalize_columns, SignatureMatrix, DEFAULT_MAX_USERS};
use crate::rng::{derive_seed, seeded, Substreams};

/// Blended or mutated columns shorter than this are restored from the parent.
pub const DEGENERATE_COLUMN: f64 = 1e-9;

const TAG_INIT: u64 = 0x1;
const TAG_VARIATION: u64 = 0x2;
const TAG_EVAL: u64 = 0x3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// Initial per-entry Gaussian mutation std.
    pub mutation_scale: f64,
    /// Per-generation multiplicative decay of `mutation_scale`.
    pub mutation_decay: f64,
    pub elitism: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 64,
            generations: 200,
            tournament_size: 3,
            crossover_rate: 0.9,
            mutation_scale: 0.1,
            mutation_decay: 0.99,
            elitism: 2,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if self.generations == 0 {
            return bad("generations must be at least 1");
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad("crossover_rate must lie in [0, 1]");
        }
        if !(self.mutation_scale > 0.0 && self.mutation_scale.is_finite()) {
            return bad("mutation_scale must be positive");
        }
        if !(self.mutation_decay > 0.0 && self.mutation_decay <= 1.0) {
            return bad("mutation_decay must lie in (0, 1]");
        }
        if self.elitism >= self.population_size {
            return bad("elitism must be smaller than population_size");
        }
        Ok(())
    }

    /// Mutation std applied when breeding out of generation `generation`.
    pub fn mutation_scale_at(&self, generation: usize) -> f64 {
        self.mutation_scale * self.mutation_decay.powi(generation as i32)
    }
}

/// Fitness summary of one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Best fitness seen so far, including this generation.
    pub best: f64,
    pub generation_best: f64,
    pub mean: f64,
    pub worst: f64,
    pub mutation_scale: f64,
}

/// Result of [`evolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaRun {
    pub best_matrix: SignatureMatrix,
    pub best_fitness: f64,
    pub history: Vec<GenerationRecord>,
    pub config: GaConfig,
    pub criterion: CriterionSpec,
}

/// Generation-0 population: i.i.d. standard Gaussian entries, columns normalized.
pub fn init_population(m: usize, n: usize, config: &GaConfig) -> Result<Vec<SignatureMatrix>> {
    config.validate()?;
    let mut rng = seeded(derive_seed(config.seed, TAG_INIT));
    (0..config.population_size).map(|_| random_normalized_from(&mut rng, m, n)).collect()
}

/// Index of the fittest of `k` distinct uniformly drawn individuals; ties go
/// to the lowest index.
pub fn tournament_select<R: Rng + ?Sized>(fitnesses: &[f64], k: usize, rng: &mut R) -> usize {
    let k = k.clamp(1, fitnesses.len());
    let mut picks = sample(rng, fitnesses.len(), k).into_vec();
    picks.sort_unstable();
    let mut best = picks[0];
    for &i in &picks[1..] {
        if fitnesses[i] > fitnesses[best] {
            best = i;
        }
    }
    best
}

/// Blend with a uniformly drawn weight `λ`, then renormalize.
pub fn arithmetic_crossover<R: Rng + ?Sized>(a: &SignatureMatrix, b: &SignatureMatrix, rng: &mut R) -> SignatureMatrix {
    let lambda: f64 = rng.random();
    blend(a, b, lambda)
}

/// `normalize_columns(λ·a + (1-λ)·b)`; near-zero blended columns are taken from `a`.
pub fn blend(a: &SignatureMatrix, b: &SignatureMatrix, lambda: f64) -> SignatureMatrix {
    assert_eq!((a.chips(), a.users()), (b.chips(), b.users()), "parents must have equal shape");
    let raw: Vec<f64> = a.entries().iter().zip(b.entries()).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect();
    renormalize_or_restore(a, raw)
}

/// Adds i.i.d. `N(0, scale²)` to every entry, then renormalizes.
pub fn gaussian_mutation<R: Rng + ?Sized>(ind: &SignatureMatrix, scale: f64, rng: &mut R) -> SignatureMatrix {
    renormalize_or_restore(ind, perturb(ind.entries(), scale, rng))
}

fn perturb<R: Rng + ?Sized>(entries: &[f64], scale: f64, rng: &mut R) -> Vec<f64> {
    entries
        .iter()
        .map(|&v| {
            let g: f64 = rng.sample(StandardNormal);
            v + scale * g
        })
        .collect()
}

fn renormalize_or_restore(parent: &SignatureMatrix, mut raw: Vec<f64>) -> SignatureMatrix {
    let (m, n) = (parent.chips(), parent.users());
    for c in 0..n {
        let norm = (0..m).map(|r| raw[r * n + c].powi(2)).sum::<f64>().sqrt();
        if norm.is_nan() || norm < DEGENERATE_COLUMN {
            for r in 0..m {
                raw[r * n + c] = parent.get(r, c);
            }
        }
    }
    normalize_columns(m, n, &raw).expect("columns are non-degenerate after restoration")
}

fn eval_seed(config: &GaConfig, spec: &CriterionSpec, generation: usize) -> u64 {
    let base = derive_seed(config.seed, TAG_EVAL);
    match spec.seed_policy {
        SeedPolicy::PerGeneration => derive_seed(base, generation as u64),
        SeedPolicy::Fixed => base,
    }
}

fn evaluate(pop: &[SignatureMatrix], spec: &CriterionSpec, seed: u64, generation: usize, exec: Exec) -> Result<Vec<f64>> {
    let fit = exec.try_map(pop.len(), |i| fitness_with(spec, &pop[i], seed, Exec::Sequential))?;
    if let Some(&value) = fit.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFiniteFitness { generation, value });
    }
    Ok(fit)
}

pub fn evolve(m: usize, n: usize, criterion: &CriterionSpec, config: &GaConfig) -> Result<GaRun> {
    evolve_with(m, n, criterion, config, Exec::default())
}

/// Runs the generational loop: evaluate, keep elites, then refill by
/// tournament selection, crossover (or cloning) and decayed Gaussian mutation.
pub fn evolve_with(m: usize, n: usize, criterion: &CriterionSpec, config: &GaConfig, exec: Exec) -> Result<GaRun> {
    config.validate()?;
    criterion.validate()?;
    if n > DEFAULT_MAX_USERS {
        return Err(Error::TooManyUsers { n, max: DEFAULT_MAX_USERS });
    }
    let mut population = init_population(m, n, config)?;
    let mut rng: ChaCha8Rng = seeded(derive_seed(config.seed, TAG_VARIATION));
    let mut history = Vec::with_capacity(config.generations);
    let mut best: Option<(SignatureMatrix, f64)> = None;

    for generation in 0..config.generations {
        let fit = evaluate(&population, criterion, eval_seed(config, criterion, generation), generation, exec)?;

        let mut order: Vec<usize> = (0..fit.len()).collect();
        order.sort_by(|&i, &j| fit[j].total_cmp(&fit[i]).then(i.cmp(&j)));
        let leader = order[0];
        if best.as_ref().is_none_or(|(_, f)| fit[leader] > *f) {
            best = Some((population[leader].clone(), fit[leader]));
        }
        let scale = config.mutation_scale_at(generation);
        history.push(GenerationRecord {
            generation,
            best: best.as_ref().map(|b| b.1).unwrap_or(f64::NAN),
            generation_best: fit[leader],
            mean: fit.iter().sum::<f64>() / fit.len() as f64,
            worst: fit[*order.last().unwrap()],
            mutation_scale: scale,
        });
        if generation + 1 == config.generations {
            break;
        }

        let mut next: Vec<SignatureMatrix> = order[..config.elitism].iter().map(|&i| population[i].clone()).collect();
        while next.len() < config.population_size {
            let p1 = tournament_select(&fit, config.tournament_size, &mut rng);
            let child = if rng.random::<f64>() < config.crossover_rate {
                let p2 = tournament_select(&fit, config.tournament_size, &mut rng);
                arithmetic_crossover(&population[p1], &population[p2], &mut rng)
            } else {
                population[p1].clone()
            };
            next.push(gaussian_mutation(&child, scale, &mut rng));
        }
        population = next;
    }

    let (best_matrix, best_fitness) = best.expect("at least one generation");
    Ok(GaRun { best_matrix, best_fitness, history, config: config.clone(), criterion: *criterion })
}

/// Best of `evaluations` random normalized matrices under the criterion,
/// scored with the same evaluation seed as GA generation 0.
pub fn random_search(
    m: usize,
    n: usize,
    criterion: &CriterionSpec,
    evaluations: usize,
    seed: u64,
    exec: Exec,
) -> Result<(SignatureMatrix, f64)> {
    criterion.validate()?;
    if evaluations == 0 {
        return Err(Error::InvalidConfig("random search needs at least one evaluation".into()));
    }
    let streams = Substreams::new(derive_seed(seed, TAG_INIT));
    let config = GaConfig { seed, ..GaConfig::default() };
    let eval = eval_seed(&config, criterion, 0);
    let scored = exec.try_map(evaluations, |k| {
        let a = random_normalized_from(&mut streams.get(k as u64), m, n)?;
        let f = fitness_with(criterion, &a, eval, Exec::Sequential)?;
        Ok::<_, Error>((a, f))
    })?;
    let mut best: Option<(SignatureMatrix, f64)> = None;
    for (a, f) in scored {
        if !f.is_finite() {
            return Err(Error::NonFiniteFitness { generation: 0, value: f });
        }
        if best.as_ref().is_none_or(|(_, b)| f > *b) {
            best = Some((a, f));
        }
    }
    Ok(best.expect("evaluations > 0"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::CriterionKind;
    use crate::model::NORM_TOLERANCE;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15)
    }

    fn unit_columns(a: &SignatureMatrix) -> bool {
        (0..a.users()).all(|c| (a.column_norm(c) - 1.0).abs() <= NORM_TOLERANCE)
    }

    #[test]
    fn config_validation() {
        assert!(GaConfig::default().validate().is_ok());
        let bad = [
            GaConfig { population_size: 1, elitism: 0, ..GaConfig::default() },
            GaConfig { crossover_rate: 1.5, ..GaConfig::default() },
            GaConfig { mutation_scale: 0.0, ..GaConfig::default() },
            GaConfig { mutation_decay: 0.0, ..GaConfig::default() },
            GaConfig { mutation_decay: 1.1, ..GaConfig::default() },
            GaConfig { elitism: 64, ..GaConfig::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn init_is_seeded() {
        let cfg = GaConfig { seed: 5, ..GaConfig::default() };
        let a = init_population(3, 4, &cfg).unwrap();
        assert_eq!(a.len(), 64);
        assert!(a.iter().all(unit_columns));
        assert_eq!(a, init_population(3, 4, &cfg).unwrap());
        let other = init_population(3, 4, &GaConfig { seed: 6, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn tournament_contracts() {
        let fit = [0.1, 0.7, 0.3, 0.7, -2.0];
        let mut rng = seeded(1);
        assert_eq!(tournament_select(&fit, fit.len(), &mut rng), 1);
        let flat = [1.0; 6];
        for _ in 0..50 {
            let i = tournament_select(&flat, 3, &mut rng);
            assert!(i <= 3);
        }
    }

    #[test]
    fn single_entrant_tournament_is_uniform() {
        let fit = [0.0; 8];
        let mut counts = [0usize; 8];
        let mut rng = seeded(77);
        let draws = 10_000;
        for _ in 0..draws {
            counts[tournament_select(&fit, 1, &mut rng)] += 1;
        }
        let expected = draws as f64 / 8.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 7 degrees of freedom, 0.999 quantile 24.32.
        assert!(chi2 < 24.32, "chi2 = {chi2}");
    }

    #[test]
    fn crossover_edges() {
        let mut rng = seeded(3);
        let a = random_normalized_from(&mut rng, 2, 3).unwrap();
        let b = random_normalized_from(&mut rng, 2, 3).unwrap();
        let child = blend(&a, &b, 1.0);
        assert!(close(child.entries(), a.entries()));
        assert!(close(blend(&a, &a, 0.37).entries(), a.entries()));
        for _ in 0..100 {
            assert!(unit_columns(&arithmetic_crossover(&a, &b, &mut rng)));
        }
        // Antipodal columns cancel at λ = 1/2; the child keeps parent a's column.
        let neg = a.negate_column(0);
        let child = blend(&a, &neg, 0.5);
        assert!(close(&child.column(0), &a.column(0)));
    }

    #[test]
    fn mutation_edges() {
        let mut rng = seeded(4);
        let a = random_normalized_from(&mut rng, 3, 4).unwrap();
        let tiny = gaussian_mutation(&a, 1e-300, &mut rng);
        assert!(close(tiny.entries(), a.entries()));
        for _ in 0..100 {
            assert!(unit_columns(&gaussian_mutation(&a, 0.5, &mut rng)));
        }
    }

    #[test]
    fn mutation_perturbation_has_requested_std() {
        let scale = 0.2;
        let mut rng = seeded(8);
        let base = random_normalized_from(&mut rng, 2, 3).unwrap();
        let trials = 10_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..trials {
            for (p, b) in perturb(base.entries(), scale, &mut rng).iter().zip(base.entries()) {
                sum += p - b;
                sq += (p - b).powi(2);
            }
        }
        let count = (trials * 6) as f64;
        let mean = sum / count;
        let std = (sq / count - mean * mean).sqrt();
        assert!(mean.abs() < 5.0 * scale / count.sqrt());
        assert!((std - scale).abs() < 0.02 * scale, "{std}");
    }

    #[test]
    fn evolve_md_square_reaches_optimum() {
        let spec = CriterionSpec::new(CriterionKind::MinDistance, None).unwrap();
        let cfg = GaConfig { generations: 60, seed: 1, ..GaConfig::default() };
        let run = evolve(2, 2, &spec, &cfg).unwrap();
        assert_eq!(run.history.len(), 60);
        assert!(run.best_fitness >= 1.9);
        assert!(run.history.windows(2).all(|w| w[1].best >= w[0].best));
        assert!(unit_columns(&run.best_matrix));
    }

    #[test]
    fn evolve_is_deterministic_across_strategies() {
        let spec = CriterionSpec::new(CriterionKind::Ber, Some(0.6)).unwrap().with_budget(300).unwrap();
        let cfg = GaConfig { population_size: 10, generations: 6, seed: 9, ..GaConfig::default() };
        let a = evolve_with(2, 3, &spec, &cfg, Exec::Sequential).unwrap();
        let b = evolve_with(2, 3, &spec, &cfg, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_search_is_seeded() {
        let spec = CriterionSpec::new(CriterionKind::ExpDistance, Some(0.5)).unwrap();
        let a = random_search(2, 3, &spec, 200, 3, Exec::Parallel).unwrap();
        let b = random_search(2, 3, &spec, 200, 3, Exec::Sequential).unwrap();
        assert_eq!(a, b);
    }
}
