//! Momentum-space wavepackets, the momentum ↔ energy-channel isomorphism,
//! free evolution and momentum boosts.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Result, ToaError};
use crate::numerics::{interpolate_lagrange, ComplexSamples, Grid, PHASE_ACCURATE};

/// Relative density below which a packet counts as decayed at the grid edge.
pub const ENVELOPE_CUTOFF: f64 = 1e-12;

/// Stencil width used when energy channels are resampled.
pub const INTERPOLATION_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) || !(mass > 0.0 && mass.is_finite()) {
            return Err(ToaError::InvalidParameter(format!(
                "hbar and mass must be positive, got hbar = {hbar}, mass = {mass}"
            )));
        }
        Ok(Self { hbar, mass })
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

/// One Gaussian packet: mean momentum `p0`, momentum width `sigma_p`,
/// position offset `x0` and complex superposition weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    pub p0: f64,
    pub sigma_p: f64,
    pub x0: f64,
    pub weight: C64,
}

impl GaussianSpec {
    pub fn new(p0: f64, sigma_p: f64, x0: f64) -> Self {
        Self {
            p0,
            sigma_p,
            x0,
            weight: C64::new(1.0, 0.0),
        }
    }

    pub fn with_weight(mut self, weight: C64) -> Self {
        self.weight = weight;
        self
    }

    fn amplitude(&self, p: f64, hbar: f64) -> C64 {
        let s2 = self.sigma_p * self.sigma_p;
        let env = (2.0 * PI * s2).powf(-0.25) * (-(p - self.p0).powi(2) / (4.0 * s2)).exp();
        self.weight * C64::from_polar(env, -p * self.x0 / hbar)
    }
}

/// Momentum grid parameters: `n` nodes on `[-pmax, pmax]`.
///
/// `n` must be even so that no node falls on `p = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridParams {
    pub pmax: f64,
    pub n: usize,
}

impl GridParams {
    pub fn grid(&self) -> Result<Grid> {
        if self.n % 2 != 0 || self.n < 8 {
            return Err(ToaError::InvalidGrid(format!(
                "momentum grid needs an even node count >= 8 (staggered about p = 0), got {}",
                self.n
            )));
        }
        Grid::symmetric(self.pmax, self.n)
    }
}

fn check_momentum_grid(grid: &Grid) -> Result<()> {
    let scale = grid.max_abs();
    if grid.len() % 2 != 0 || (grid.start() + grid.stop()).abs() > 1e-12 * scale {
        return Err(ToaError::InvalidGrid(
            "momentum grid must be symmetric about 0 with an even node count".into(),
        ));
    }
    Ok(())
}

/// A pure state `ψ(p)` sampled on a symmetric, staggered momentum grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState {
    constants: PhysicalConstants,
    samples: ComplexSamples,
}

impl MomentumState {
    /// Wraps samples as they are (no normalization).
    pub fn from_samples(constants: PhysicalConstants, samples: ComplexSamples) -> Result<Self> {
        check_momentum_grid(samples.grid())?;
        Ok(Self { constants, samples })
    }

    pub fn from_fn(
        constants: PhysicalConstants,
        grid: Grid,
        f: impl Fn(f64) -> C64,
    ) -> Result<Self> {
        Self::from_samples(constants, ComplexSamples::from_fn(grid, f))
    }

    pub fn constants(&self) -> PhysicalConstants {
        self.constants
    }

    pub fn samples(&self) -> &ComplexSamples {
        &self.samples
    }

    pub fn grid(&self) -> &Grid {
        self.samples.grid()
    }

    pub fn values(&self) -> &[C64] {
        self.samples.values()
    }

    pub fn pmax(&self) -> f64 {
        self.grid().max_abs()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.samples.norm_sqr()
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(ToaError::Degenerate("state has zero norm".into()));
        }
        Ok(Self {
            constants: self.constants,
            samples: self.samples.map(|_, v| v / norm),
        })
    }

    /// `(∫_{p>0}|ψ|², ∫_{p<0}|ψ|²)`.
    pub fn channel_masses(&self) -> (f64, f64) {
        let w = self.grid().weights();
        let half = self.grid().len() / 2;
        let mass = |range: std::ops::Range<usize>| -> f64 {
            range.map(|k| w[k] * self.values()[k].norm_sqr()).sum()
        };
        (mass(half..self.grid().len()), mass(0..half))
    }

    /// `⟨p̂⟩`.
    pub fn mean_momentum(&self) -> f64 {
        self.grid()
            .weights()
            .iter()
            .zip(self.grid().nodes())
            .zip(self.values())
            .map(|((w, p), v)| w * p * v.norm_sqr())
            .sum()
    }
}

/// Builds a normalized superposition of Gaussian packets.
///
/// Fails if every weight is zero, if the grid does not cover the packets to
/// the [`ENVELOPE_CUTOFF`] density envelope, or if the grid cannot resolve the
/// position phase `e^{-ipx0/ħ}`.
pub fn build_state(
    specs: &[GaussianSpec],
    constants: PhysicalConstants,
    params: GridParams,
) -> Result<MomentumState> {
    if specs.is_empty() {
        return Err(ToaError::Degenerate("no packets given".into()));
    }
    for s in specs {
        if !(s.sigma_p > 0.0) {
            return Err(ToaError::InvalidParameter(format!(
                "sigma_p must be positive, got {}",
                s.sigma_p
            )));
        }
    }
    if specs.iter().all(|s| s.weight.norm() == 0.0) {
        return Err(ToaError::Degenerate("all packet weights are zero".into()));
    }
    let grid = params.grid()?;
    let hbar = constants.hbar;
    for s in specs {
        let phase = grid.spacing() * s.x0.abs() / hbar;
        if phase > PHASE_ACCURATE {
            return Err(ToaError::Resolution {
                phase,
                limit: PHASE_ACCURATE,
                context: format!("momentum grid vs. packet offset x0 = {}", s.x0),
            });
        }
    }
    let state = MomentumState::from_fn(constants, grid, |p| {
        specs.iter().map(|s| s.amplitude(p, hbar)).sum()
    })?;
    let peak = state
        .values()
        .iter()
        .map(|v| v.norm_sqr())
        .fold(0.0, f64::max);
    let vals = state.values();
    let edge = vals[0].norm_sqr().max(vals[vals.len() - 1].norm_sqr());
    if peak > 0.0 && edge > ENVELOPE_CUTOFF * peak {
        return Err(ToaError::InvalidGrid(format!(
            "pmax = {} does not cover the packets (edge/peak density {:.2e})",
            params.pmax,
            edge / peak
        )));
    }
    state.normalized()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Plus,
    Minus,
}

/// `(ψ₊(E), ψ₋(E))` sampled at the energies `E = u²/2m` induced by a uniform
/// grid of momentum magnitudes `u`.
///
/// Energy quadrature is carried out in `u`: `∫dE f = ∫du (u/m) f`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyChannels {
    constants: PhysicalConstants,
    magnitudes: Grid,
    weights: Vec<f64>,
    plus: Vec<C64>,
    minus: Vec<C64>,
}

/// Quadrature weights on a staggered half-line grid: plain spacing at the
/// `u → 0` end, fourth-order end corrections at the far end.
fn half_line_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n >= 8 {
        const END: [f64; 4] = [17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0];
        for (k, c) in END.iter().enumerate() {
            w[n - 1 - k] = c * h;
        }
    }
    w
}

impl EnergyChannels {
    /// Channels given directly on a magnitude grid starting at half a
    /// spacing from zero.
    pub fn new(
        constants: PhysicalConstants,
        magnitudes: Grid,
        plus: Vec<C64>,
        minus: Vec<C64>,
    ) -> Result<Self> {
        if plus.len() != magnitudes.len() || minus.len() != magnitudes.len() {
            return Err(ToaError::InvalidGrid("channel length does not match grid".into()));
        }
        if magnitudes.start() <= 0.0 {
            return Err(ToaError::InvalidGrid(
                "channel magnitude grid must start above zero".into(),
            ));
        }
        let weights = half_line_weights(magnitudes.len(), magnitudes.spacing());
        Ok(Self {
            constants,
            magnitudes,
            weights,
            plus,
            minus,
        })
    }

    pub fn constants(&self) -> PhysicalConstants {
        self.constants
    }

    /// Momentum magnitudes `u = √(2mE)` of the energy nodes.
    pub fn magnitudes(&self) -> &Grid {
        &self.magnitudes
    }

    pub fn energies(&self) -> Vec<f64> {
        let m = self.constants.mass;
        self.magnitudes.nodes().iter().map(|u| u * u / (2.0 * m)).collect()
    }

    /// Quadrature weights for `dE` at each energy node.
    pub fn energy_weights(&self) -> Vec<f64> {
        let m = self.constants.mass;
        self.weights
            .iter()
            .zip(self.magnitudes.nodes())
            .map(|(w, u)| w * u / m)
            .collect()
    }

    /// Quadrature weights for `du`.
    pub fn magnitude_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn channel(&self, c: Channel) -> &[C64] {
        match c {
            Channel::Plus => &self.plus,
            Channel::Minus => &self.minus,
        }
    }

    pub fn channel_norm_sqr(&self, c: Channel) -> f64 {
        self.energy_weights()
            .iter()
            .zip(self.channel(c))
            .map(|(w, v)| w * v.norm_sqr())
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.channel_norm_sqr(Channel::Plus) + self.channel_norm_sqr(Channel::Minus)
    }

    /// `∫₀^∞ dE e^{-iEt/ħ} ψ_c(E) / √(2πħ)`, computed in the magnitude
    /// variable.
    pub fn amplitude(&self, c: Channel, t: f64) -> C64 {
        let PhysicalConstants { hbar, mass } = self.constants;
        let norm = (2.0 * PI * hbar).sqrt();
        let sum: C64 = self
            .energy_weights()
            .iter()
            .zip(self.magnitudes.nodes())
            .zip(self.channel(c))
            .map(|((w, u), v)| C64::from_polar(*w, -u * u * t / (2.0 * mass * hbar)) * v)
            .sum();
        sum / norm
    }

    /// Interpolated channel value at energy `e` (Lagrange in `u`).
    pub fn value_at(&self, c: Channel, e: f64) -> C64 {
        if e < 0.0 {
            return C64::new(0.0, 0.0);
        }
        let u = (2.0 * self.constants.mass * e).sqrt();
        interpolate_lagrange(&self.magnitudes, self.channel(c), u, INTERPOLATION_POINTS)
    }

    /// Multiplies both channels by `e^{-iEτ/ħ}`.
    pub fn evolved(&self, tau: f64) -> Self {
        let hbar = self.constants.hbar;
        let phases: Vec<C64> = self
            .energies()
            .iter()
            .map(|e| C64::from_polar(1.0, -e * tau / hbar))
            .collect();
        let apply = |v: &[C64]| v.iter().zip(&phases).map(|(a, b)| a * b).collect();
        Self {
            constants: self.constants,
            magnitudes: self.magnitudes.clone(),
            weights: self.weights.clone(),
            plus: apply(&self.plus),
            minus: apply(&self.minus),
        }
    }

    /// Replaces the channel samples, keeping the grid.
    pub fn with_channels(&self, plus: Vec<C64>, minus: Vec<C64>) -> Result<Self> {
        Self::new(self.constants, self.magnitudes.clone(), plus, minus)
    }
}

/// `ψ±(E) = (m/2E)^{1/4} ψ(±√(2mE))`, on the energies induced by the state's
/// momentum grid.
pub fn to_energy_channels(state: &MomentumState) -> Result<EnergyChannels> {
    let grid = state.grid();
    let n = grid.len();
    let half = n / 2;
    let m = state.constants().mass;
    let magnitudes = Grid::new(grid.nodes()[half], grid.stop(), n - half)?;
    let vals = state.values();
    let mut plus = Vec::with_capacity(n - half);
    let mut minus = Vec::with_capacity(n - half);
    for (k, &u) in magnitudes.nodes().iter().enumerate() {
        let jac = (m / u).sqrt();
        plus.push(vals[half + k] * jac);
        minus.push(vals[half - 1 - k] * jac);
    }
    EnergyChannels::new(state.constants(), magnitudes, plus, minus)
}

/// `ψ(p) = (|p|/m)^{1/2} [Θ(p) ψ₊(p²/2m) + Θ(-p) ψ₋(p²/2m)]` on `grid`.
///
/// Channel values are interpolated in `|p|` with [`INTERPOLATION_POINTS`]
/// nodes; the `√|p|` prefactor is evaluated exactly. The result is not renormalized.
pub fn from_energy_channels(channels: &EnergyChannels, grid: &Grid) -> Result<MomentumState> {
    let m = channels.constants().mass;
    let mags = channels.magnitudes();
    MomentumState::from_fn(channels.constants(), grid.clone(), |p| {
        let u = p.abs();
        if u == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let c = if p > 0.0 { Channel::Plus } else { Channel::Minus };
        interpolate_lagrange(mags, channels.channel(c), u, INTERPOLATION_POINTS) * (u / m).sqrt()
    })
}

/// `ψ(p) ← e^{-ip²τ/(2mħ)} ψ(p)`.
pub fn evolve_free(state: &MomentumState, tau: f64) -> MomentumState {
    let PhysicalConstants { hbar, mass } = state.constants();
    MomentumState {
        constants: state.constants(),
        samples: state
            .samples()
            .map(|p, v| v * C64::from_polar(1.0, -p * p * tau / (2.0 * mass * hbar))),
    }
}

/// `ψ(x) ← e^{-iqx/ħ} ψ(x)` on position samples.
pub fn boost(samples: &ComplexSamples, q: f64, hbar: f64) -> ComplexSamples {
    samples.map(|x, v| v * C64::from_polar(1.0, -q * x / hbar))
}
