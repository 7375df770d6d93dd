//! Clustered 2-D Ising lattice used to generate ordered and chaotic drives.
//!
//! The lattice is periodic. Couplings inside a rectangular cluster are drawn
//! uniformly from `[intra_lo, intra_hi]`; couplings crossing a cluster
//! boundary all equal `inter`. Single-spin Metropolis updates run in raster
//! order, so a trajectory is fully determined by `(spec, temperature, seed)`.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side of the neuron sheet sampled from the lattice.
pub const SHEET_SIDE: usize = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    pub size: usize,
    /// Number of clusters along each axis.
    pub cluster_grid: [usize; 2],
    pub intra_lo: f64,
    pub intra_hi: f64,
    pub inter: f64,
}

impl CouplingSpec {
    /// Uniform ferromagnet with unit coupling.
    pub fn uniform(size: usize) -> Self {
        Self {
            size,
            cluster_grid: [1, 1],
            intra_lo: 1.0,
            intra_hi: 1.0,
            inter: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 3 {
            return Err(Error::Lattice(format!("side {} is below 3", self.size)));
        }
        let [gr, gc] = self.cluster_grid;
        if gr == 0 || gc == 0 || gr > self.size || gc > self.size {
            return Err(Error::Lattice(format!(
                "cluster grid {gr}x{gc} does not partition a {0}x{0} lattice",
                self.size
            )));
        }
        if !(self.intra_lo <= self.intra_hi) {
            return Err(Error::Lattice("intra_lo exceeds intra_hi".into()));
        }
        if self.inter < 0.0 || (self.cluster_grid != [1, 1] && !(self.intra_lo > self.inter)) {
            return Err(Error::Lattice(
                "intra-cluster couplings must exceed a non-negative inter-cluster coupling".into(),
            ));
        }
        Ok(())
    }

    /// Cluster index of lattice row or column `i` along axis `axis`.
    pub fn block_of(&self, axis: usize, i: usize) -> usize {
        i * self.cluster_grid[axis] / self.size
    }

    pub fn same_cluster(&self, a: (usize, usize), b: (usize, usize)) -> bool {
        self.block_of(0, a.0) == self.block_of(0, b.0) && self.block_of(1, a.1) == self.block_of(1, b.1)
    }
}

#[derive(Debug, Clone)]
pub struct IsingLattice {
    spec: CouplingSpec,
    spins: Vec<i8>,
    /// Coupling of site `i` with its right neighbour.
    j_right: Vec<f64>,
    /// Coupling of site `i` with the neighbour below.
    j_down: Vec<f64>,
    temperature: f64,
    rng: ChaCha8Rng,
}

pub fn init_lattice(spec: &CouplingSpec, temperature: f64, seed: u64) -> Result<IsingLattice> {
    spec.validate()?;
    if !(temperature > 0.0) {
        return Err(Error::Lattice(format!("temperature {temperature} must be positive")));
    }
    let n = spec.size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |a: (usize, usize), b: (usize, usize), rng: &mut ChaCha8Rng| {
        if spec.same_cluster(a, b) {
            if spec.intra_hi > spec.intra_lo {
                rng.gen_range(spec.intra_lo..spec.intra_hi)
            } else {
                spec.intra_lo
            }
        } else {
            spec.inter
        }
    };
    let mut j_right = Vec::with_capacity(n * n);
    let mut j_down = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            j_right.push(draw((r, c), (r, (c + 1) % n), &mut rng));
            j_down.push(draw((r, c), ((r + 1) % n, c), &mut rng));
        }
    }
    let spins = (0..n * n)
        .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
        .collect();
    Ok(IsingLattice {
        spec: spec.clone(),
        spins,
        j_right,
        j_down,
        temperature,
        rng,
    })
}

impl IsingLattice {
    pub fn size(&self) -> usize {
        self.spec.size
    }

    pub fn spec(&self) -> &CouplingSpec {
        &self.spec
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn set_temperature(&mut self, t: f64) {
        assert!(t > 0.0, "temperature must be positive");
        self.temperature = t;
    }

    pub fn set_spins(&mut self, spins: &[i8]) -> Result<()> {
        if spins.len() != self.spins.len() || spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Lattice("spin field must match the lattice and hold only +-1".into()));
        }
        self.spins.copy_from_slice(spins);
        Ok(())
    }

    pub fn coupling_right(&self, r: usize, c: usize) -> f64 {
        self.j_right[r * self.size() + c]
    }

    pub fn coupling_down(&self, r: usize, c: usize) -> f64 {
        self.j_down[r * self.size() + c]
    }

    /// Local field `sum_j J_ij s_j` at site `i`.
    fn local_field(&self, i: usize) -> f64 {
        let n = self.size();
        let (r, c) = (i / n, i % n);
        let left = r * n + (c + n - 1) % n;
        let right = r * n + (c + 1) % n;
        let up = ((r + n - 1) % n) * n + c;
        let down = ((r + 1) % n) * n + c;
        self.j_right[i] * f64::from(self.spins[right])
            + self.j_right[left] * f64::from(self.spins[left])
            + self.j_down[i] * f64::from(self.spins[down])
            + self.j_down[up] * f64::from(self.spins[up])
    }

    pub fn energy(&self) -> f64 {
        let n = self.size();
        let mut e = 0.0;
        for r in 0..n {
            for c in 0..n {
                let i = r * n + c;
                let s = f64::from(self.spins[i]);
                e -= self.j_right[i] * s * f64::from(self.spins[r * n + (c + 1) % n]);
                e -= self.j_down[i] * s * f64::from(self.spins[((r + 1) % n) * n + c]);
            }
        }
        e
    }

    /// Mean spin.
    pub fn magnetization(&self) -> f64 {
        let sum: i64 = self.spins.iter().map(|&s| i64::from(s)).sum();
        sum as f64 / self.spins.len() as f64
    }

    /// One Metropolis sweep in raster order. Returns the number of accepted flips.
    pub fn sweep(&mut self) -> usize {
        let beta = 1.0 / self.temperature;
        let mut accepted = 0;
        for i in 0..self.spins.len() {
            let delta = 2.0 * f64::from(self.spins[i]) * self.local_field(i);
            let accept = delta <= 0.0 || self.rng.gen::<f64>() < (-delta * beta).exp();
            if accept {
                self.spins[i] = -self.spins[i];
                accepted += 1;
            }
        }
        accepted
    }
}

/// Functional form of [`IsingLattice::sweep`].
pub fn mcmc_sweep(mut lat: IsingLattice) -> IsingLattice {
    lat.sweep();
    lat
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityEstimate {
    pub chi: f64,
    pub n_samples: usize,
    pub temperature: f64,
}

/// `chi = N * (<m^2> - <m>^2) / T` from per-spin magnetization samples.
pub fn susceptibility(samples: &[f64], temperature: f64, n_spins: usize) -> Result<SusceptibilityEstimate> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / n;
    let chi = n_spins as f64 * var / temperature;
    Ok(SusceptibilityEstimate {
        chi,
        n_samples: samples.len(),
        temperature,
    })
}

/// Sweep counts used when estimating susceptibility at one temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSchedule {
    pub equilibration: usize,
    pub samples: usize,
    #[serde(default = "one")]
    pub thin: usize,
}

fn one() -> usize {
    1
}

/// Susceptibility at one temperature, starting from the fully aligned state.
/// A random start quenched below the transition freezes into domains whose
/// walls wander and inflate the variance.
pub fn measure_susceptibility(
    spec: &CouplingSpec,
    temperature: f64,
    seed: u64,
    schedule: SweepSchedule,
) -> Result<SusceptibilityEstimate> {
    let mut lat = init_lattice(spec, temperature, seed)?;
    lat.spins.fill(1);
    for _ in 0..schedule.equilibration {
        lat.sweep();
    }
    let mut ms = Vec::with_capacity(schedule.samples);
    for _ in 0..schedule.samples {
        for _ in 0..schedule.thin.max(1) {
            lat.sweep();
        }
        ms.push(lat.magnetization());
    }
    susceptibility(&ms, temperature, spec.size * spec.size)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub t_ordered: f64,
    pub t_chaotic: f64,
    pub temperatures: Vec<f64>,
    pub chi: Vec<f64>,
}

/// Locate the ordered regime and the susceptibility peak on a temperature grid.
///
/// The chaotic temperature is the grid point of maximal susceptibility; the
/// ordered temperature is the largest grid point below it whose
/// susceptibility is under a tenth of the peak.
pub fn classify_from_chi(temperatures: &[f64], chi: &[f64]) -> Result<(f64, f64)> {
    assert_eq!(temperatures.len(), chi.len());
    let peak = chi
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |best, (i, &c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((i, c)),
        })
        .ok_or(Error::PeakNotBracketed)?;
    let (pi, pc) = peak;
    if pi == 0 || pi + 1 == chi.len() {
        return Err(Error::PeakNotBracketed);
    }
    let ordered = (0..pi).rev().find(|&i| chi[i] < 0.1 * pc).ok_or(Error::PeakNotBracketed)?;
    Ok((temperatures[ordered], temperatures[pi]))
}

pub fn classify_states(
    spec: &CouplingSpec,
    temperatures: &[f64],
    seed: u64,
    schedule: SweepSchedule,
) -> Result<Classification> {
    let mut grid = temperatures.to_vec();
    grid.sort_by(f64::total_cmp);
    let chi = grid
        .par_iter()
        .map(|&t| measure_susceptibility(spec, t, seed, schedule).map(|e| e.chi))
        .collect::<Result<Vec<_>>>()?;
    let (t_ordered, t_chaotic) = classify_from_chi(&grid, &chi)?;
    Ok(Classification {
        t_ordered,
        t_chaotic,
        temperatures: grid,
        chi,
    })
}

/// Lattice indices sampled along each axis: `floor(i * size / 42)`.
pub fn sample_indices(size: usize) -> Vec<usize> {
    (0..SHEET_SIDE).map(|i| i * size / SHEET_SIDE).collect()
}

/// Evenly spaced 42x42 sub-sample of the lattice, row-major.
pub fn downsample(lat: &IsingLattice) -> Vec<i8> {
    downsample_spins(lat.spins(), lat.size())
}

pub fn downsample_spins(spins: &[i8], size: usize) -> Vec<i8> {
    assert!(size >= SHEET_SIDE, "lattice side must be at least {SHEET_SIDE}");
    let idx = sample_indices(size);
    let mut out = Vec::with_capacity(SHEET_SIDE * SHEET_SIDE);
    for &r in &idx {
        for &c in &idx {
            out.push(spins[r * size + c]);
        }
    }
    out
}

/// Indices of neurons that spike this tick: one per up spin.
pub fn spins_to_spikes(sample: &[i8]) -> Vec<usize> {
    sample
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0)
        .map(|(i, _)| i)
        .collect()
}

/// Plain-text PGM rendering of a spin field (up = 1, down = 0).
pub fn write_pgm_string(spins: &[i8], side: usize) -> String {
    let mut text = format!("P2\n{side} {side}\n1\n");
    for row in spins.chunks(side) {
        let line: Vec<&str> = row.iter().map(|&s| if s > 0 { "1" } else { "0" }).collect();
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    text
}

pub fn write_pgm(path: &Path, spins: &[i8], side: usize) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(write_pgm_string(spins, side).as_bytes())
        .map_err(|e| Error::io(path, e))
}
