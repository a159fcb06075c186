//! Closed-loop evolutionary search over pump shapes.
//!
//! A genome is either a parametric double-lobe spectrum (lobe separation,
//! width, relative phase, amplitude ratio) or a free piecewise-constant
//! spectral phase over the two-lobe support. Fitness is the signed ensemble
//! mean of the mode asymmetry, evaluated with matched noise seeds so that
//! genomes compete on shape rather than on luck.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelope::{to_time, ComplexEnvelope, GridSpec};
use crate::error::{Error, Result};
use crate::experiments::{run_trial, TrialSeed};
use crate::shaping::{apply_mask, make_double_blob, DoubleBlobSpec, ShaperMask};
use crate::solver::SimConfig;

/// Stream offset reserved for objective evaluations, disjoint from scan and
/// pilot trial streams.
const EVAL_STREAM_OFFSET: u64 = 1 << 33;

/// Number of phase bins of the free-phase genome.
pub const N_PHASE_BINS: usize = 8;

pub const SEPARATION_BOUNDS: (f64, f64) = (2.0, 5.0);
pub const WIDTH_BOUNDS: (f64, f64) = (0.2, 1.5);
pub const RATIO_BOUNDS: (f64, f64) = (0.25, 4.0);

/// A candidate pump shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Genome {
    /// Double-lobe spectrum described by its four parameters.
    Parametric(DoubleBlobSpec),
    /// Fixed double-lobe amplitude with a free piecewise-constant spectral
    /// phase: `N_PHASE_BINS` equal-width bins spanning the two-lobe support.
    FreePhase([f64; N_PHASE_BINS]),
}

/// Search-space definition: the template spectrum and which genome family is
/// being evolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenomeSpace {
    /// Template spectrum. Parametric genomes start from it; free-phase
    /// genomes keep its amplitude profile and only reshape the phase.
    pub base: DoubleBlobSpec,
    pub grid: GridSpec,
    pub free_phase: bool,
}

impl GenomeSpace {
    pub fn initial_genome(&self) -> Genome {
        if self.free_phase {
            Genome::FreePhase([0.0; N_PHASE_BINS])
        } else {
            Genome::Parametric(self.base)
        }
    }

    /// Half-width of the two-lobe support in frequency, for the phase bins.
    /// Eight amplitude sigmas past the outer lobe center, so the lobe tails
    /// left outside the binned region are negligible (< 1e-14).
    fn support_half_width(&self) -> f64 {
        let sigma_a = self.base.blob_width / (2.0 * 2.0_f64.ln().sqrt());
        self.base.separation / 2.0 + 8.0 * sigma_a
    }

    /// Build the time-domain pump envelope for a genome.
    pub fn pump(&self, genome: &Genome) -> Result<ComplexEnvelope> {
        let spectrum = match genome {
            Genome::Parametric(spec) => make_double_blob(spec, &self.grid)?,
            Genome::FreePhase(phases) => {
                let flat = DoubleBlobSpec {
                    phase_offset: 0.0,
                    ..self.base
                };
                let spectrum = make_double_blob(&flat, &self.grid)?;
                let half = self.support_half_width();
                let bin_width = 2.0 * half / N_PHASE_BINS as f64;
                let mut bin_phases = vec![0.0; self.grid.n_samples()];
                for (slot, f) in bin_phases.iter_mut().zip(self.grid.freq_axis()) {
                    let rel = f - self.grid.center_frequency() + half;
                    if (0.0..2.0 * half).contains(&rel) {
                        let bin = ((rel / bin_width) as usize).min(N_PHASE_BINS - 1);
                        *slot = phases[bin];
                    }
                }
                apply_mask(&spectrum, &ShaperMask::phase_only(bin_phases))?
            }
        };
        to_time(&spectrum)
    }

    fn genes(&self, genome: &Genome) -> Vec<f64> {
        match genome {
            Genome::Parametric(s) => vec![
                s.separation,
                s.blob_width,
                s.phase_offset,
                s.amplitude_ratio,
            ],
            Genome::FreePhase(p) => p.to_vec(),
        }
    }

    fn from_genes(&self, genes: &[f64]) -> Genome {
        if self.free_phase {
            let mut p = [0.0; N_PHASE_BINS];
            for (slot, &g) in p.iter_mut().zip(genes) {
                *slot = wrap_phase(g);
            }
            Genome::FreePhase(p)
        } else {
            Genome::Parametric(DoubleBlobSpec {
                separation: genes[0].clamp(SEPARATION_BOUNDS.0, SEPARATION_BOUNDS.1),
                blob_width: genes[1].clamp(WIDTH_BOUNDS.0, WIDTH_BOUNDS.1),
                phase_offset: wrap_phase(genes[2]),
                amplitude_ratio: genes[3].clamp(RATIO_BOUNDS.0, RATIO_BOUNDS.1),
            })
        }
    }

    /// Per-gene mutation scale: bounded genes move relative to their range,
    /// phases in radians.
    fn gene_scales(&self) -> Vec<f64> {
        if self.free_phase {
            vec![1.0; N_PHASE_BINS]
        } else {
            vec![
                SEPARATION_BOUNDS.1 - SEPARATION_BOUNDS.0,
                WIDTH_BOUNDS.1 - WIDTH_BOUNDS.0,
                1.0,
                RATIO_BOUNDS.1 - RATIO_BOUNDS.0,
            ]
        }
    }
}

fn wrap_phase(p: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let w = p.rem_euclid(tau);
    if w > std::f64::consts::PI {
        w - tau
    } else {
        w
    }
}

/// Evolutionary-search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GAConfig {
    pub population_size: usize,
    pub n_generations: usize,
    /// Best genomes copied unchanged into the next generation.
    pub elite_count: usize,
    /// Gaussian mutation amplitude, in units of each gene's natural scale.
    pub mutation_sigma: f64,
    /// Probability that a child gene comes from the second parent.
    pub crossover_rate: f64,
    /// Ensemble size per objective evaluation.
    pub trials_per_eval: usize,
    /// `+1.0` steers gain toward mode 1, `-1.0` toward mode 2.
    pub objective_sign: f64,
    pub rng_seed: u64,
    /// Redraw the evaluation noise ensemble each generation (reduces
    /// overfitting to one noise draw; with it off, elite objectives are
    /// exactly monotone).
    pub refresh_eval_seeds: bool,
}

impl Default for GAConfig {
    fn default() -> Self {
        GAConfig {
            population_size: 24,
            n_generations: 15,
            elite_count: 2,
            mutation_sigma: 0.08,
            crossover_rate: 0.5,
            trials_per_eval: 16,
            objective_sign: 1.0,
            rng_seed: 11,
            refresh_eval_seeds: false,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::invalid("population_size", "must be >= 1"));
        }
        if self.elite_count > self.population_size {
            return Err(Error::invalid(
                "elite_count",
                "must not exceed population_size",
            ));
        }
        if !(self.mutation_sigma >= 0.0) {
            return Err(Error::invalid("mutation_sigma", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::invalid("crossover_rate", "must be in [0, 1]"));
        }
        if self.trials_per_eval == 0 {
            return Err(Error::invalid("trials_per_eval", "must be >= 1"));
        }
        if self.objective_sign != 1.0 && self.objective_sign != -1.0 {
            return Err(Error::invalid("objective_sign", "must be +1 or -1"));
        }
        Ok(())
    }
}

/// Outcome of one objective evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub value: f64,
    /// Set when more than half the ensemble had undefined asymmetry; the
    /// value is forced to zero in that case.
    pub degenerate: bool,
}

/// Signed mean asymmetry of a matched-seed ensemble for one genome.
///
/// `eval_seed` selects the noise ensemble; pass the same value to compare
/// genomes on identical noise realizations.
pub fn evaluate_objective(
    genome: &Genome,
    space: &GenomeSpace,
    sim: &SimConfig,
    ga: &GAConfig,
    eval_seed: u64,
) -> Result<Objective> {
    let pump = space.pump(genome)?;
    let asyms: Vec<Result<Option<f64>>> = (0..ga.trials_per_eval as u64)
        .into_par_iter()
        .map(|i| {
            let seed = TrialSeed::draw(eval_seed, EVAL_STREAM_OFFSET + i, sim.noise_sigma);
            run_trial(&pump, &seed, sim).map(|r| r.asymmetry)
        })
        .collect();
    let mut defined = Vec::with_capacity(ga.trials_per_eval);
    for a in asyms {
        if let Some(v) = a? {
            defined.push(v);
        }
    }
    if defined.len() * 2 < ga.trials_per_eval {
        return Ok(Objective {
            value: 0.0,
            degenerate: true,
        });
    }
    let mean = defined.iter().sum::<f64>() / defined.len() as f64;
    Ok(Objective {
        value: ga.objective_sign * mean,
        degenerate: false,
    })
}

/// Per-generation population statistics, for optimization logs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub std: f64,
    pub best_genome: Genome,
}

/// Result of an optimization run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub best: Genome,
    pub best_objective: f64,
    /// Best objective after each generation (length `n_generations + 1`,
    /// including the initial population).
    pub history: Vec<f64>,
    /// Population statistics per generation, same length as `history`.
    pub generations: Vec<GenerationStats>,
    /// Any evaluation during the run hit the degenerate (mostly-dark) case.
    pub saw_degenerate: bool,
}

fn generation_stats(generation: usize, pop: &[Genome], fitness: &[f64]) -> GenerationStats {
    let n = fitness.len() as f64;
    let mean = fitness.iter().sum::<f64>() / n;
    let var = fitness.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / n;
    let best_idx = (0..fitness.len())
        .max_by(|&a, &b| fitness[a].partial_cmp(&fitness[b]).unwrap())
        .unwrap();
    GenerationStats {
        generation,
        best: fitness[best_idx],
        mean,
        std: var.sqrt(),
        best_genome: pop[best_idx].clone(),
    }
}

/// Evolve pump shapes: tournament selection (size 3), uniform crossover,
/// Gaussian mutation with phase wrapping and bound clamping, and elitism.
pub fn optimize(space: &GenomeSpace, sim: &SimConfig, ga: &GAConfig) -> Result<OptimizeResult> {
    ga.validate()?;
    sim.validate()?;
    space.base.validate(&space.grid)?;

    let mut rng = ChaCha8Rng::seed_from_u64(ga.rng_seed);
    rng.set_stream(u64::MAX); // keep GA decisions off the trial streams
    let scales = space.gene_scales();
    let mutate = |genes: &mut [f64], rng: &mut ChaCha8Rng| {
        for (g, s) in genes.iter_mut().zip(&scales) {
            let step = Normal::new(0.0, ga.mutation_sigma * s).unwrap();
            *g += step.sample(rng);
        }
    };

    // initial population: the template plus mutated copies
    let seed_genes = space.genes(&space.initial_genome());
    let mut population: Vec<Genome> = Vec::with_capacity(ga.population_size);
    population.push(space.from_genes(&seed_genes));
    while population.len() < ga.population_size {
        let mut genes = seed_genes.clone();
        mutate(&mut genes, &mut rng);
        population.push(space.from_genes(&genes));
    }

    let eval_seed_for = |generation: usize| {
        if ga.refresh_eval_seeds {
            ga.rng_seed.wrapping_add(0x9e37_79b9).wrapping_mul(generation as u64 + 1)
        } else {
            ga.rng_seed
        }
    };

    let mut saw_degenerate = false;
    let score = |pop: &[Genome], generation: usize, flag: &mut bool| -> Result<Vec<f64>> {
        let seed = eval_seed_for(generation);
        let mut values = Vec::with_capacity(pop.len());
        for genome in pop {
            let obj = evaluate_objective(genome, space, sim, ga, seed)?;
            *flag |= obj.degenerate;
            values.push(obj.value);
        }
        Ok(values)
    };

    let mut fitness = score(&population, 0, &mut saw_degenerate)?;
    let mut history = vec![max_of(&fitness)];
    let mut generations = vec![generation_stats(0, &population, &fitness)];

    for generation in 0..ga.n_generations {
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| fitness[b].partial_cmp(&fitness[a]).unwrap());

        let mut next: Vec<Genome> = order[..ga.elite_count]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < ga.population_size {
            let pa = tournament(&fitness, &mut rng);
            let pb = tournament(&fitness, &mut rng);
            let ga_genes = space.genes(&population[pa]);
            let gb_genes = space.genes(&population[pb]);
            let mut child: Vec<f64> = ga_genes
                .iter()
                .zip(&gb_genes)
                .map(|(&a, &b)| {
                    if rng.gen::<f64>() < ga.crossover_rate {
                        b
                    } else {
                        a
                    }
                })
                .collect();
            mutate(&mut child, &mut rng);
            next.push(space.from_genes(&child));
        }
        population = next;
        fitness = score(&population, generation + 1, &mut saw_degenerate)?;
        history.push(max_of(&fitness));
        generations.push(generation_stats(generation + 1, &population, &fitness));
    }

    let best_idx = (0..population.len())
        .max_by(|&a, &b| fitness[a].partial_cmp(&fitness[b]).unwrap())
        .unwrap();
    Ok(OptimizeResult {
        best: population[best_idx].clone(),
        best_objective: fitness[best_idx],
        history,
        generations,
        saw_degenerate,
    })
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().cloned().fold(f64::MIN, f64::max)
}

fn tournament(fitness: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.gen_range(0..fitness.len());
    for _ in 0..2 {
        let c = rng.gen_range(0..fitness.len());
        if fitness[c] > fitness[best] {
            best = c;
        }
    }
    best
}
