//! Evolutionary parameter tuning.
//!
//! Genomes are strings of decimal digits split into one field per parameter.
//! Each step takes the fittest individual and clones it, crosses it with a
//! rank drawn toward the top of the population, or mutates one digit. The
//! offspring joins the population, which is then cut back to the best `kappa`.
//! Fitness is the mean step count over a batch of fresh random instances and
//! is computed once per distinct genome.

use crate::instance::generate_instance;
use crate::search::{run_search, Algorithm, Params};
use crate::seed::{pair_rng, stream_rng};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EaConfig {
    /// Maximum population size.
    pub kappa: usize,
    pub initial_population: usize,
    pub clone_rate: f64,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Search runs averaged into one fitness value.
    pub runs_per_fitness: u32,
    /// Steps without improvement before the stall rule may stop tuning.
    pub stall_limit: u32,
    /// Hard cap on evolution steps; hitting it means no convergence.
    pub max_steps: u32,
}

impl Default for EaConfig {
    fn default() -> Self {
        Self {
            kappa: 50,
            initial_population: 5,
            clone_rate: 0.05,
            crossover_rate: 0.65,
            mutation_rate: 0.30,
            runs_per_fitness: 40,
            stall_limit: 100,
            max_steps: 5000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Genome(pub Vec<u8>);

impl std::fmt::Display for Genome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.iter().try_for_each(|d| write!(f, "{d}"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Field {
    pub name: &'static str,
    pub digits: u32,
    pub min: u32,
    pub max: u32,
}

impl Field {
    fn new(name: &'static str, min: u32, max: u32) -> Self {
        let max = max.max(min);
        let digits = (max - min).max(1).ilog10() + 1;
        Self { name, digits, min, max }
    }

    /// Linear map of the digit field onto `min..=max`.
    fn decode(&self, digits: &[u8]) -> u32 {
        let raw = digits.iter().fold(0u64, |acc, &d| acc * 10 + d as u64);
        let top = 10u64.pow(self.digits) - 1;
        let span = (self.max - self.min) as u64;
        let value = self.min as u64 + (raw * span + top / 2) / top;
        value.clamp(self.min as u64, self.max as u64) as u32
    }
}

/// How a genome maps onto one algorithm's parameters at a given grid side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    pub algorithm: Algorithm,
    pub fields: Vec<Field>,
}

impl Schema {
    pub fn new(algorithm: Algorithm, s: u32) -> Self {
        let s = s.max(2);
        let cells = (s as u64 * s as u64).min(u32::MAX as u64) as u32;
        let growth = 32 - (s - 1).leading_zeros();
        let fields = algorithm
            .param_names()
            .iter()
            .map(|&name| match (algorithm, name) {
                (Algorithm::Fts | Algorithm::Ils | Algorithm::Vns3, "t") => Field::new(name, 1, 9999),
                (_, "t") => Field::new(name, 1, (cells / 4).max(1)),
                (_, "d") => Field::new(name, 1, s),
                (_, "c") => Field::new(name, 1, growth),
                (_, "m") | (_, "g") => Field::new(name, 1, (s / 4).max(1)),
                (_, "a") => Field::new(name, 1, 999),
                _ => unreachable!("no schema for {algorithm} parameter {name}"),
            })
            .collect();
        Self { algorithm, fields }
    }

    pub fn len(&self) -> usize {
        self.fields.iter().map(|f| f.digits as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Genome {
        Genome((0..self.len()).map(|_| rng.gen_range(0..10)).collect())
    }

    pub fn decode_values(&self, genome: &Genome) -> Vec<u32> {
        let mut at = 0;
        self.fields
            .iter()
            .map(|f| {
                let digits = &genome.0[at..at + f.digits as usize];
                at += f.digits as usize;
                f.decode(digits)
            })
            .collect()
    }

    pub fn decode(&self, genome: &Genome) -> Params {
        Params::from_values(self.algorithm, &self.decode_values(genome))
            .expect("decoded values are at least 1")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub genome: Genome,
    /// Mean step count; lower is better.
    pub fitness: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Operator {
    Clone,
    Crossover,
    Mutation,
}

pub fn choose_operator<R: Rng + ?Sized>(rng: &mut R, config: &EaConfig) -> Operator {
    let u: f64 = rng.gen();
    if u < config.clone_rate {
        Operator::Clone
    } else if u < config.clone_rate + config.crossover_rate {
        Operator::Crossover
    } else {
        Operator::Mutation
    }
}

/// Rank of the crossover mate from two uniform draws: `floor(u1 * u2 * kappa)`,
/// capped by the population.
pub fn mate_index(u1: f64, u2: f64, kappa: usize, population_size: usize) -> usize {
    let alpha = u1 * u2;
    ((alpha * kappa as f64).floor() as usize).min(population_size.saturating_sub(1))
}

pub fn select_mate_index<R: Rng + ?Sized>(rng: &mut R, kappa: usize, population_size: usize) -> usize {
    let (u1, u2): (f64, f64) = (rng.gen(), rng.gen());
    mate_index(u1, u2, kappa, population_size)
}

/// Positionwise uniform crossover.
pub fn crossover<R: Rng + ?Sized>(a: &Genome, b: &Genome, rng: &mut R) -> Genome {
    Genome(a.0.iter().zip(&b.0).map(|(&x, &y)| if rng.gen() { x } else { y }).collect())
}

/// Replaces one random digit with a different one.
pub fn mutate<R: Rng + ?Sized>(g: &Genome, rng: &mut R) -> Genome {
    let mut out = g.clone();
    if out.0.is_empty() {
        return out;
    }
    let i = rng.gen_range(0..out.0.len());
    let shift = rng.gen_range(1..10u8);
    out.0[i] = (out.0[i] + shift) % 10;
    out
}

/// Population kept sorted by fitness, best first.
#[derive(Clone, Debug, Default)]
pub struct Population {
    pub members: Vec<Individual>,
}

impl Population {
    pub fn best(&self) -> &Individual {
        &self.members[0]
    }

    pub fn insert(&mut self, ind: Individual, kappa: usize) {
        // after equal-fitness members, so incumbents keep their rank
        let at = self.members.partition_point(|m| m.fitness <= ind.fitness);
        self.members.insert(at, ind);
        self.members.truncate(kappa.max(1));
    }

    pub fn all_equal(&self) -> bool {
        self.members.windows(2).all(|w| w[0].genome == w[1].genome)
    }

    pub fn copies_of_best(&self) -> usize {
        let best = &self.best().genome;
        self.members.iter().filter(|m| &m.genome == best).count()
    }
}

/// One evolution step. `evaluate` is only called for crossover and mutation
/// offspring.
pub fn evolve_step<R, F>(population: &mut Population, config: &EaConfig, rng: &mut R, mut evaluate: F) -> Operator
where
    R: Rng + ?Sized,
    F: FnMut(&Genome) -> f64,
{
    let op = choose_operator(rng, config);
    let best = population.best().clone();
    let child = match op {
        Operator::Clone => best,
        Operator::Crossover => {
            let mate = select_mate_index(rng, config.kappa, population.members.len());
            let genome = crossover(&best.genome, &population.members[mate].genome, rng);
            let fitness = evaluate(&genome);
            Individual { genome, fitness }
        }
        Operator::Mutation => {
            let genome = mutate(&best.genome, rng);
            let fitness = evaluate(&genome);
            Individual { genome, fitness }
        }
    };
    population.insert(child, config.kappa);
    op
}

/// Mean step count of `params` over `runs` fresh instances of side `s`. Run
/// `i` draws from stream `(generation, i)` of `seed`.
pub fn fitness(params: &Params, s: u32, runs: u32, seed: u64, generation: u64) -> (f64, Vec<u64>) {
    let steps: Vec<u64> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = pair_rng(seed, generation, i);
            let inst = generate_instance(s, &mut rng).expect("tuning side is at least 16");
            run_search(&inst, params, &mut rng, false).steps
        })
        .collect();
    let mean = steps.iter().sum::<u64>() as f64 / steps.len().max(1) as f64;
    (mean, steps)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub generation: u64,
    pub best_fitness: f64,
    pub population_size: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct TuneOutcome {
    pub params: Params,
    pub genome: Genome,
    pub fitness: f64,
    pub converged: bool,
    pub history: Vec<LogRow>,
    /// Every step count produced while evaluating candidates.
    pub tuning_runs: Vec<u64>,
    pub evaluations: usize,
}

impl TuneOutcome {
    pub fn log_csv(&self) -> String {
        let mut out = String::from("generation,best_fitness,population_size,converged\n");
        for row in &self.history {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                row.generation, row.best_fitness, row.population_size, row.converged
            );
        }
        out
    }

    /// `name=value` lines for the best parameters.
    pub fn params_listing(&self) -> String {
        let names = self.params.algorithm().param_names();
        names
            .iter()
            .zip(self.params.values())
            .map(|(n, v)| format!("{n}={v}\n"))
            .collect()
    }
}

/// Tunes `algorithm` at grid side `s` until the population is uniform, or the
/// best has stalled for `stall_limit` steps with at least two copies of it in
/// the population, or the step cap is hit (reported as not converged).
pub fn ea_tune(algorithm: Algorithm, s: u32, config: &EaConfig, seed: u64) -> TuneOutcome {
    let schema = Schema::new(algorithm, s);
    let mut rng = stream_rng(seed, u64::MAX);
    let mut cache: HashMap<Genome, f64> = HashMap::new();
    let mut tuning_runs = Vec::new();
    let mut generation = 0u64;

    let mut evaluate = |genome: &Genome, generation: u64, tuning_runs: &mut Vec<u64>| -> f64 {
        if let Some(&f) = cache.get(genome) {
            return f;
        }
        let (mean, steps) = fitness(&schema.decode(genome), s, config.runs_per_fitness, seed, generation);
        tuning_runs.extend(steps);
        cache.insert(genome.clone(), mean);
        mean
    };

    let mut population = Population::default();
    for _ in 0..config.initial_population.max(1) {
        let genome = schema.random(&mut rng);
        let fitness = evaluate(&genome, generation, &mut tuning_runs);
        population.insert(Individual { genome, fitness }, config.kappa);
    }

    let mut history = Vec::new();
    let mut best = population.best().fitness;
    let mut stalled = 0u32;
    let mut converged = population.all_equal();
    history.push(LogRow {
        generation,
        best_fitness: best,
        population_size: population.members.len(),
        converged,
    });

    while !converged && generation < config.max_steps as u64 {
        generation += 1;
        evolve_step(&mut population, config, &mut rng, |g| evaluate(g, generation, &mut tuning_runs));
        let now = population.best().fitness;
        if now < best {
            best = now;
            stalled = 0;
        } else {
            stalled += 1;
        }
        converged = population.all_equal()
            || (stalled >= config.stall_limit && population.copies_of_best() >= 2);
        history.push(LogRow {
            generation,
            best_fitness: now,
            population_size: population.members.len(),
            converged,
        });
    }

    let champion = population.best().clone();
    TuneOutcome {
        params: schema.decode(&champion.genome),
        genome: champion.genome,
        fitness: champion.fitness,
        converged,
        history,
        tuning_runs,
        evaluations: cache.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::expected_exhaustive_visits;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn digit_sum(g: &Genome) -> f64 {
        1.0 + g.0.iter().map(|&d| d as f64).sum::<f64>()
    }

    #[test]
    fn default_rates_partition_unity() {
        let c = EaConfig::default();
        assert!((c.clone_rate + c.crossover_rate + c.mutation_rate - 1.0).abs() < 1e-12);
        assert_eq!((c.kappa, c.initial_population, c.runs_per_fitness, c.stall_limit), (50, 5, 40, 100));
    }

    #[test]
    fn mate_index_examples() {
        assert_eq!(mate_index(0.0, 0.0, 50, 50), 0);
        assert_eq!(mate_index(0.5, 0.5, 50, 50), 12);
        assert_eq!(mate_index(1.0, 1.0, 50, 10), 9);
    }

    #[test]
    fn mate_index_favours_top_ranks() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0u32; 50];
        for _ in 0..1_000_000 {
            counts[select_mate_index(&mut rng, 50, 50)] += 1;
        }
        assert!(counts[0] > counts[49]);
        assert!(counts.windows(2).all(|w| w[0] >= w[1] || w[0] + 500 > w[1]));
    }

    #[test]
    fn field_decoding_spans_range() {
        let f = Field::new("d", 1, 1024);
        assert_eq!(f.digits, 4);
        assert_eq!(f.decode(&[0, 0, 0, 0]), 1);
        assert_eq!(f.decode(&[9, 9, 9, 9]), 1024);
        let f = Field::new("c", 1, 10);
        assert_eq!(f.digits, 1);
        assert_eq!(f.decode(&[9]), 10);
        let f = Field::new("t", 1, 1);
        assert_eq!(f.decode(&[7]), 1);
    }

    #[test]
    fn schema_decodes_to_valid_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for algo in Algorithm::ALL {
            let schema = Schema::new(algo, 1024);
            for _ in 0..100 {
                let g = schema.random(&mut rng);
                let values = schema.decode_values(&g);
                assert!(values.iter().all(|&v| v >= 1));
                assert_eq!(schema.decode(&g).algorithm(), algo);
            }
            let zeros = Genome(vec![0; schema.len()]);
            assert!(schema.decode_values(&zeros).iter().all(|&v| v == 1));
        }
        assert!(Schema::new(Algorithm::Exhaustive, 256).is_empty());
    }

    #[test]
    fn crossover_of_identical_parents_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Genome(vec![1, 2, 3, 4, 5]);
        assert_eq!(crossover(&g, &g, &mut rng), g);
    }

    #[test]
    fn all_equal_population_changes_only_by_mutation() {
        let config = EaConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = Genome(vec![3; 6]);
        for _ in 0..200 {
            let mut pop = Population::default();
            for _ in 0..5 {
                pop.insert(Individual { genome: g.clone(), fitness: digit_sum(&g) }, 50);
            }
            let op = evolve_step(&mut pop, &config, &mut rng, digit_sum);
            let changed = pop.members.iter().any(|m| m.genome != g);
            assert_eq!(changed, op == Operator::Mutation);
        }
    }

    #[test]
    fn single_individual_converges_immediately() {
        let config = EaConfig { initial_population: 1, ..EaConfig::default() };
        let out = ea_tune(Algorithm::Fts, 64, &config, 5);
        assert!(out.converged);
        assert_eq!(out.history.len(), 1);
    }

    #[test]
    fn stall_rule_needs_two_copies_of_best() {
        // constant fitness: nothing ever improves, clones supply the second copy
        let config = EaConfig { stall_limit: 10, max_steps: 10_000, ..EaConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let schema = Schema::new(Algorithm::Vns3, 256);
        let mut pop = Population::default();
        for _ in 0..5 {
            pop.insert(Individual { genome: schema.random(&mut rng), fitness: 7.0 }, config.kappa);
        }
        let mut stalled = 0;
        let mut steps = 0;
        loop {
            evolve_step(&mut pop, &config, &mut rng, |_| 7.0);
            stalled += 1;
            steps += 1;
            if stalled >= config.stall_limit && pop.copies_of_best() >= 2 {
                break;
            }
            assert!(steps < 10_000);
        }
        assert!(pop.copies_of_best() >= 2);
    }

    #[test]
    fn fitness_is_deterministic_and_finite_for_minimal_params() {
        for algo in Algorithm::ALL {
            let schema = Schema::new(algo, 64);
            let params = schema.decode(&Genome(vec![0; schema.len()]));
            let (a, _) = fitness(&params, 64, 5, 11, 3);
            let (b, _) = fitness(&params, 64, 5, 11, 3);
            assert_eq!(a, b);
            assert!(a.is_finite() && a >= 1.0, "{algo}: {a}");
        }
    }

    #[test]
    fn exhaustive_fitness_near_expectation() {
        let (mean, runs) = fitness(&Params::Exhaustive, 256, 40, 99, 0);
        assert_eq!(runs.len(), 40);
        let expected = expected_exhaustive_visits(256, 256);
        assert!((mean - expected).abs() / expected <= 0.15, "mean {mean}");
    }

    #[test]
    fn exhaustive_tuning_is_parameter_free() {
        let out = ea_tune(Algorithm::Exhaustive, 128, &EaConfig::default(), 3);
        assert!(out.converged);
        assert_eq!(out.params, Params::Exhaustive);
        let expected = expected_exhaustive_visits(128, 128);
        assert!((out.fitness - expected).abs() / expected <= 0.15);
    }

    #[test]
    fn tuning_log_is_monotone_and_reproducible() {
        let config = EaConfig { runs_per_fitness: 8, stall_limit: 20, max_steps: 300, ..EaConfig::default() };
        let a = ea_tune(Algorithm::Vns3, 64, &config, 8);
        let b = ea_tune(Algorithm::Vns3, 64, &config, 8);
        assert_eq!(a.log_csv(), b.log_csv());
        assert!(a.history.windows(2).all(|w| w[1].best_fitness <= w[0].best_fitness));
        assert!(a.history.iter().all(|r| r.population_size <= config.kappa));
        assert!(a.log_csv().starts_with("generation,best_fitness,population_size,converged\n"));
        assert_eq!(a.params_listing().lines().count(), 3);
    }

    proptest::proptest! {
        #[test]
        fn crossover_draws_each_digit_from_a_parent(
            a in proptest::collection::vec(0u8..10, 1..20),
            seed in proptest::prelude::any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b: Vec<u8> = a.iter().map(|_| rng.gen_range(0..10)).collect();
            let (ga, gb) = (Genome(a), Genome(b));
            let child = crossover(&ga, &gb, &mut rng);
            for i in 0..child.0.len() {
                proptest::prop_assert!(child.0[i] == ga.0[i] || child.0[i] == gb.0[i]);
            }
        }

        #[test]
        fn mutation_changes_exactly_one_digit(
            a in proptest::collection::vec(0u8..10, 1..20),
            seed in proptest::prelude::any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = Genome(a);
            let m = mutate(&g, &mut rng);
            let diff = g.0.iter().zip(&m.0).filter(|(x, y)| x != y).count();
            proptest::prop_assert_eq!(diff, 1);
            proptest::prop_assert!(m.0.iter().all(|&d| d < 10));
        }
    }
}
