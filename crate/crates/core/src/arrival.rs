//! The free-particle time-of-arrival operator `T̂_AB = -(m/2)(x̂p̂⁻¹ + p̂⁻¹x̂)`:
//! its differential action, deficiency eigenvectors, the covariant arrival
//! time density (the POVM density) and the flux / presence expectation values.
//!
//! In momentum space `T̂_AB` acts as `(iħm/2)(1/p² - (2/p)∂_p)`, which on each
//! half-line equals `-iħm sgn(p)|p|^{-1/2} ∂_p |p|^{-1/2}`. The factored form is
//! the one applied numerically: it differentiates `ψ/√|p|`, which stays smooth
//! for the `√|p|` behaviour found near the singular point `p = 0`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Result, ToaError};
use crate::numerics::{
    derivative, half_fourier, integrate_real, ComplexSamples, Grid, PHASE_ACCURATE, PHASE_GUARD,
};
use crate::report::{ChannelSplit, CheckReport, Distribution, DistributionMeta};
use crate::states::{evolve_free, Channel, EnergyChannels, MomentumState, PhysicalConstants};

/// Normalized `|ψ|/|p|^{3/2}` threshold of the numerical domain test.
pub const DOMAIN_THRESHOLD: f64 = 1e-3;

/// Relative density below which the automatic time window is cut.
pub const WINDOW_CUTOFF: f64 = 1e-15;

const PROBE_POINTS: usize = 4001;

/// `Σ_k c_k e^{-i ω_k t}`: every time-dependent amplitude of a free state at
/// `x = 0` has this shape.
struct PhaseSum {
    rates: Vec<f64>,
    coeffs: Vec<C64>,
}

impl PhaseSum {
    fn eval(&self, t: f64) -> C64 {
        self.rates
            .iter()
            .zip(&self.coeffs)
            .map(|(w, c)| c * C64::from_polar(1.0, -w * t))
            .sum()
    }
}

/// Momentum-representation channel amplitudes
/// `∫_{±p>0} dp √(|p|/2πmħ) e^{-ip²t/2mħ} ψ(p)`.
fn channel_sums(state: &MomentumState) -> [PhaseSum; 2] {
    let PhysicalConstants { hbar, mass } = state.constants();
    let w = state.grid().weights();
    let mut plus = PhaseSum { rates: vec![], coeffs: vec![] };
    let mut minus = PhaseSum { rates: vec![], coeffs: vec![] };
    for ((&p, v), wk) in state.grid().nodes().iter().zip(state.values()).zip(&w) {
        if p == 0.0 {
            continue;
        }
        let target = if p > 0.0 { &mut plus } else { &mut minus };
        target.rates.push(p * p / (2.0 * mass * hbar));
        target.coeffs.push(v * wk * (p.abs() / (2.0 * PI * mass * hbar)).sqrt());
    }
    [plus, minus]
}

/// `ψ(0,t)` and `∂ₓψ(0,t)` of the freely evolving state.
fn origin_sums(state: &MomentumState) -> (PhaseSum, PhaseSum) {
    let PhysicalConstants { hbar, mass } = state.constants();
    let norm = (2.0 * PI * hbar).sqrt();
    let w = state.grid().weights();
    let rates: Vec<f64> = state.grid().nodes().iter().map(|p| p * p / (2.0 * mass * hbar)).collect();
    let base: Vec<C64> = state.values().iter().zip(&w).map(|(v, wk)| v * wk / norm).collect();
    let grad = base
        .iter()
        .zip(state.grid().nodes())
        .map(|(c, p)| c * C64::new(0.0, p / hbar))
        .collect();
    (
        PhaseSum { rates: rates.clone(), coeffs: base },
        PhaseSum { rates, coeffs: grad },
    )
}

/// Rejects time grids the momentum grid cannot resolve.
fn check_time_resolution(state: &MomentumState, t_grid: &Grid) -> Result<()> {
    let PhysicalConstants { hbar, mass } = state.constants();
    let pmax = state.pmax();
    let t_step = pmax * pmax * t_grid.spacing() / (2.0 * mass * hbar);
    if t_step >= PHASE_ACCURATE {
        return Err(ToaError::Resolution {
            phase: t_step,
            limit: PHASE_ACCURATE,
            context: format!(
                "time step {} vs. fastest phase pmax^2/2m hbar (pmax = {pmax})",
                t_grid.spacing()
            ),
        });
    }
    let p_step = pmax * state.grid().spacing() * t_grid.max_abs() / (mass * hbar);
    if p_step > PHASE_GUARD {
        return Err(ToaError::Resolution {
            phase: p_step,
            limit: PHASE_GUARD,
            context: format!("momentum spacing at |t| = {}", t_grid.max_abs()),
        });
    }
    Ok(())
}

/// Largest `|t|` at which the momentum grid still resolves `e^{-ip²t/2mħ}`.
pub fn max_resolvable_time(state: &MomentumState) -> f64 {
    let PhysicalConstants { hbar, mass } = state.constants();
    PHASE_GUARD * mass * hbar / (state.pmax() * state.grid().spacing())
}

/// Largest time step accepted by the resolution guard, halved.
pub fn default_time_step(state: &MomentumState) -> f64 {
    let PhysicalConstants { hbar, mass } = state.constants();
    0.5 * PHASE_ACCURATE * 2.0 * mass * hbar / (state.pmax() * state.pmax())
}

/// Time grid covering the support of the arrival density: probes the density
/// up to [`max_resolvable_time`] and keeps the region above
/// [`WINDOW_CUTOFF`] of the peak.
pub fn auto_time_grid(state: &MomentumState) -> Result<Grid> {
    let [plus, minus] = channel_sums(state);
    window_from_probe(max_resolvable_time(state), default_time_step(state), |t| {
        plus.eval(t).norm_sqr() + minus.eval(t).norm_sqr()
    })
}

/// Window where `f` exceeds [`WINDOW_CUTOFF`] of its peak, probed on
/// `[-limit, limit]` and sampled with step `dt`.
pub(crate) fn window_from_probe(limit: f64, dt: f64, f: impl Fn(f64) -> f64 + Sync) -> Result<Grid> {
    let limit = 0.95 * limit;
    let probe = Grid::symmetric(limit, PROBE_POINTS)?;
    let values: Vec<f64> = probe.nodes().par_iter().map(|&t| f(t)).collect();
    let peak = values.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(ToaError::Degenerate("density vanishes on the probed window".into()));
    }
    let above = |v: &f64| *v > WINDOW_CUTOFF * peak;
    let first = values.iter().position(above).unwrap();
    let last = values.iter().rposition(above).unwrap();
    if first == 0 || last == values.len() - 1 {
        return Err(ToaError::Tail {
            edge_ratio: values[0].max(values[values.len() - 1]) / peak,
            tail_mass: f64::NAN,
        });
    }
    let nodes = probe.nodes();
    let lo = nodes[first.saturating_sub(2)];
    let hi = nodes[(last + 2).min(nodes.len() - 1)];
    let n = ((hi - lo) / dt).ceil() as usize + 1;
    Grid::new(lo, hi, n.max(8))
}

/// Numerical form of `ψ(p)/|p|^{3/2} → 0`: on each side, over the five nodes
/// nearest `p = 0`, the normalized ratio must either stay below
/// [`DOMAIN_THRESHOLD`] or decrease strictly toward zero.
pub fn domain_check(state: &MomentumState) -> Result<()> {
    let nodes = state.grid().nodes();
    let vals = state.values();
    let peak = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let scale = peak / state.pmax().powf(1.5);
    let mut order: Vec<usize> = (0..nodes.len()).filter(|&k| nodes[k] != 0.0).collect();
    order.sort_by(|&a, &b| nodes[a].abs().total_cmp(&nodes[b].abs()));
    for positive in [true, false] {
        let ratios: Vec<f64> = order
            .iter()
            .filter(|&&k| (nodes[k] > 0.0) == positive)
            .take(5)
            .map(|&k| vals[k].norm() / nodes[k].abs().powf(1.5) / scale)
            .collect();
        let small = ratios.iter().all(|&r| r < DOMAIN_THRESHOLD);
        let decreasing = ratios.windows(2).all(|w| w[0] < w[1]);
        if !(small || decreasing) {
            return Err(ToaError::NotInDomain(format!(
                "|psi(p)|/|p|^(3/2) does not vanish as p -> 0{} (normalized ratios near 0: {:?})",
                if positive { "+" } else { "-" },
                ratios
            )));
        }
    }
    Ok(())
}

fn sign_segments(nodes: &[f64]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < nodes.len() {
        if nodes[k] == 0.0 {
            k += 1;
            continue;
        }
        let pos = nodes[k] > 0.0;
        let start = k;
        while k < nodes.len() && nodes[k] != 0.0 && (nodes[k] > 0.0) == pos {
            k += 1;
        }
        out.push(start..k);
    }
    out
}

fn segment_derivative(samples: &ComplexSamples, range: std::ops::Range<usize>, f: impl Fn(f64, C64) -> C64) -> Result<Vec<C64>> {
    let nodes = &samples.grid().nodes()[range.clone()];
    let grid = Grid::new(nodes[0], nodes[nodes.len() - 1], nodes.len())?;
    let vals = nodes
        .iter()
        .zip(&samples.values()[range])
        .map(|(&p, &v)| f(p, v))
        .collect();
    Ok(derivative(&ComplexSamples::new(grid, vals)?)?.into_values())
}

/// `T̂_AB ψ` in the factored form `-iħm sgn(p)|p|^{-1/2} ∂_p(|p|^{-1/2}ψ)`,
/// differentiating each sign segment of the grid separately. A node at
/// `p = 0` is excluded and set to zero.
pub fn tab_factored(samples: &ComplexSamples, constants: PhysicalConstants) -> Result<ComplexSamples> {
    let PhysicalConstants { hbar, mass } = constants;
    let nodes = samples.grid().nodes();
    let mut out = vec![C64::new(0.0, 0.0); nodes.len()];
    for seg in sign_segments(nodes) {
        let d = segment_derivative(samples, seg.clone(), |p, v| v / p.abs().sqrt())?;
        for (k, dk) in seg.zip(d) {
            let p = nodes[k];
            out[k] = C64::new(0.0, -hbar * mass * p.signum()) * dk / p.abs().sqrt();
        }
    }
    ComplexSamples::new(samples.grid().clone(), out)
}

/// `T̂_AB ψ` in the expanded form `(iħm/2)(ψ/p² - (2/p)ψ')`.
pub fn tab_expanded(samples: &ComplexSamples, constants: PhysicalConstants) -> Result<ComplexSamples> {
    let PhysicalConstants { hbar, mass } = constants;
    let nodes = samples.grid().nodes();
    let vals = samples.values();
    let mut out = vec![C64::new(0.0, 0.0); nodes.len()];
    for seg in sign_segments(nodes) {
        let d = segment_derivative(samples, seg.clone(), |_, v| v)?;
        for (k, dk) in seg.zip(d) {
            let p = nodes[k];
            out[k] = C64::new(0.0, 0.5 * hbar * mass) * (vals[k] / (p * p) - dk * (2.0 / p));
        }
    }
    ComplexSamples::new(samples.grid().clone(), out)
}

/// `T̂_AB ψ` for a state in the operator domain.
pub fn apply_tab_momentum(state: &MomentumState) -> Result<ComplexSamples> {
    domain_check(state)?;
    tab_factored(state.samples(), state.constants())
}

/// `(-iħ∂_E) ⊕ (-iħ∂_E)` on the energy channels, with `∂_E = (m/u)∂_u`.
pub fn apply_tab_energy(channels: &EnergyChannels) -> Result<EnergyChannels> {
    let PhysicalConstants { hbar, mass } = channels.constants();
    let mags = channels.magnitudes();
    let apply = |c: Channel| -> Result<Vec<C64>> {
        let d = derivative(&ComplexSamples::new(mags.clone(), channels.channel(c).to_vec())?)?;
        Ok(d.values()
            .iter()
            .zip(mags.nodes())
            .map(|(dv, u)| dv * C64::new(0.0, -hbar * mass / u))
            .collect())
    };
    channels.with_channels(apply(Channel::Plus)?, apply(Channel::Minus)?)
}

/// Grid for the deficiency eigenvectors: `n` nodes on
/// `[10⁻³, 8]·√(mħ)` (mirrored for the negative channel).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeficiencyGrid {
    pub pmin: f64,
    pub pmax: f64,
    pub n: usize,
}

impl Default for DeficiencyGrid {
    fn default() -> Self {
        Self { pmin: 1e-3, pmax: 8.0, n: 4096 }
    }
}

/// Deficiency subspaces of `T̂_AB`: `ψ±(p) = Θ(±p)√|p| e^{-p²/2mħ}` solve
/// `T̂†ψ = iψ`, while the `-i` candidates `√|p| e^{+p²/2mħ}` are not square
/// integrable.
pub fn deficiency_check() -> CheckReport {
    deficiency_check_with(PhysicalConstants::default(), DeficiencyGrid::default())
        .expect("default deficiency grid is valid")
}

pub fn deficiency_check_with(constants: PhysicalConstants, grid: DeficiencyGrid) -> Result<CheckReport> {
    let PhysicalConstants { hbar, mass } = constants;
    let scale = (mass * hbar).sqrt();
    let (lo, hi) = (grid.pmin * scale, grid.pmax * scale);
    let mut components = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, g) in [
        ("psi_plus", Grid::new(lo, hi, grid.n)?),
        ("psi_minus", Grid::new(-hi, -lo, grid.n)?),
    ] {
        let psi = ComplexSamples::from_fn(g, |p| C64::new(p.abs().sqrt() * (-p * p / (2.0 * mass * hbar)).exp(), 0.0));
        let t = tab_factored(&psi, constants)?;
        let resid = ComplexSamples::new(
            psi.grid().clone(),
            t.values().iter().zip(psi.values()).map(|(a, b)| a - C64::new(0.0, 1.0) * b).collect(),
        )?;
        let rel = (resid.norm_sqr() / psi.norm_sqr()).sqrt();
        worst = worst.max(rel);
        components.push(CheckReport::upper(
            format!("{name} residual ||T psi - i psi||/||psi||"),
            rel,
            1e-6,
            "",
        ));
    }

    // -i candidate: partial norms over [pmin, P] for P = 1..6 (units of √(mħ))
    let mut norms = Vec::new();
    for cut in 1..=6 {
        let g = Grid::new(lo, cut as f64 * scale, grid.n)?;
        let phi = ComplexSamples::from_fn(g, |p| C64::new(p.sqrt() * (p * p / (2.0 * mass * hbar)).exp(), 0.0));
        norms.push(phi.norm_sqr().sqrt());
    }
    let monotone = norms.windows(2).all(|w| w[1] > w[0]);
    let last = *norms.last().unwrap();
    components.push(
        CheckReport::lower(
            "minus_i candidate norm at cutoff 6",
            if monotone { last } else { 0.0 },
            1e6,
            format!(
                "partial norms over [pmin, P], P = 1..6: {}",
                norms.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", ")
            ),
        ),
    );
    Ok(CheckReport::upper(
        "deficiency",
        worst,
        1e-6,
        "two eigenvectors with eigenvalue +i, none square integrable with -i: indices (2,0)",
    )
    .with_components(components))
}

fn split_distribution(grid: &Grid, plus: Vec<f64>, minus: Vec<f64>, provenance: &str) -> Result<Distribution> {
    let density: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| a + b).collect();
    let split = ChannelSplit {
        plus_total: integrate_real(grid, &plus),
        minus_total: integrate_real(grid, &minus),
        plus,
        minus,
    };
    let meta = DistributionMeta {
        provenance: provenance.into(),
        channels: Some(split),
        ..Default::default()
    };
    Distribution::new(grid.clone(), density, meta)
}

/// Arrival-time density at `x = 0` in the momentum representation:
/// `Π(t) = Σ± |∫_{±p>0} dp √(|p|/2πmħ) e^{-ip²t/2mħ} ψ(p)|²`.
pub fn kijowski_distribution(state: &MomentumState, t_grid: &Grid) -> Result<Distribution> {
    check_time_resolution(state, t_grid)?;
    let [plus, minus] = channel_sums(state);
    let pairs: Vec<(f64, f64)> = t_grid
        .nodes()
        .par_iter()
        .map(|&t| (plus.eval(t).norm_sqr(), minus.eval(t).norm_sqr()))
        .collect();
    let (p, m): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let mut d = split_distribution(t_grid, p, m, "arrival-time POVM density, momentum representation")?;
    let PhysicalConstants { hbar, mass } = state.constants();
    d.meta.cutoffs.insert("pmax".into(), state.pmax());
    d.meta.cutoffs.insert("p_spacing".into(), state.grid().spacing());
    d.meta.cutoffs.insert(
        "t_phase_step".into(),
        state.pmax().powi(2) * t_grid.spacing() / (2.0 * mass * hbar),
    );
    d.meta.cutoffs.insert("norm".into(), state.norm_sqr());
    Ok(d)
}

/// [`kijowski_distribution`] on [`auto_time_grid`].
pub fn kijowski_auto(state: &MomentumState) -> Result<Distribution> {
    kijowski_distribution(state, &auto_time_grid(state)?)
}

/// The same density from the energy channels: each channel is resampled on a
/// uniform energy grid and transformed with [`half_fourier`].
pub fn kijowski_energy(channels: &EnergyChannels, t_grid: &Grid) -> Result<Distribution> {
    let PhysicalConstants { hbar, mass } = channels.constants();
    let mags = channels.magnitudes();
    let emax = mags.stop().powi(2) / (2.0 * mass);
    let de = mags.stop() * mags.spacing() / mass / 4.0;
    let ne = (emax / de).ceil() as usize + 1;
    let egrid = Grid::new(0.0, emax, ne)?;
    let resample = |c: Channel| ComplexSamples::from_fn(egrid.clone(), |e| channels.value_at(c, e));
    let (sp, sm) = (resample(Channel::Plus), resample(Channel::Minus));
    let pairs: Vec<(f64, f64)> = t_grid
        .nodes()
        .par_iter()
        .map(|&t| {
            Ok((
                half_fourier(&sp, t, hbar)?.norm_sqr(),
                half_fourier(&sm, t, hbar)?.norm_sqr(),
            ))
        })
        .collect::<Result<_>>()?;
    let (p, m): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let mut d = split_distribution(t_grid, p, m, "arrival-time POVM density, energy representation")?;
    d.meta.cutoffs.insert("emax".into(), emax);
    d.meta.cutoffs.insert("e_spacing".into(), de);
    Ok(d)
}

/// Time-shift covariance `Π_{U(τ)ψ}(t - τ) = Π_ψ(t)`, measured as
/// `sup_t |Π_{U(τ)ψ}(t - τ) - Π_ψ(t)| / max Π` on `t_grid` (automatic when
/// `None`). Passes below `1e-4`.
pub fn covariance_check(state: &MomentumState, tau: f64, t_grid: Option<&Grid>) -> Result<CheckReport> {
    let grid = match t_grid {
        Some(g) => g.clone(),
        None => auto_time_grid(state)?,
    };
    let shifted = Grid::new(grid.start() - tau, grid.stop() - tau, grid.len())?;
    let a = kijowski_distribution(state, &grid)?;
    let b = kijowski_distribution(&evolve_free(state, tau), &shifted)?;
    let max = a.max();
    let sup = a
        .density
        .iter()
        .zip(&b.density)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(CheckReport::upper(
        "time-shift covariance",
        sup / max,
        1e-4,
        format!("tau = {tau}, {} time nodes on [{}, {}]", grid.len(), grid.start(), grid.stop()),
    ))
}

/// Probability current `J(0,t) = (ħ/m) Im[ψ̄(0,t) ∂ₓψ(0,t)]` on `t_grid`.
pub fn flux_at_origin(state: &MomentumState, t_grid: &Grid) -> Result<Vec<f64>> {
    check_time_resolution(state, t_grid)?;
    let PhysicalConstants { hbar, mass } = state.constants();
    let (psi, grad) = origin_sums(state);
    Ok(t_grid
        .nodes()
        .par_iter()
        .map(|&t| hbar / mass * (psi.eval(t).conj() * grad.eval(t)).im)
        .collect())
}

/// `|ψ(0,t)|²` on `t_grid`.
pub fn presence_density(state: &MomentumState, t_grid: &Grid) -> Result<Vec<f64>> {
    check_time_resolution(state, t_grid)?;
    let (psi, _) = origin_sums(state);
    Ok(t_grid.nodes().par_iter().map(|&t| psi.eval(t).norm_sqr()).collect())
}

fn check_decay(name: &str, values: &[f64]) -> Result<()> {
    let peak = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let edge = values[0].abs().max(values[values.len() - 1].abs());
    if peak > 0.0 && edge > 1e-10 * peak {
        return Err(ToaError::Precondition(format!(
            "{name} has not decayed at the time-window edges (edge/peak {:.2e})",
            edge / peak
        )));
    }
    Ok(())
}

/// Relative discrepancy `|a - b| / max(|a|, scale)`.
fn relative(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / a.abs().max(scale)
}

/// Mean passage time from the current density and from the operator.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxMean {
    /// `∫ t J(0,t) dt / ∫ J(0,t) dt`.
    pub flux_mean: f64,
    /// `Re ⟨ψ|T̂_AB ψ⟩`.
    pub operator_mean: f64,
    /// `∫ J(0,t) dt`.
    pub flux_total: f64,
    pub report: CheckReport,
}

/// Flux-weighted mean arrival time at `x = 0` and `⟨ψ|T̂_AB ψ⟩`.
///
/// The report compares the two relative to `max(|⟨t⟩_J|, √⟨t²⟩_J)` with
/// tolerance `1e-3`.
pub fn arrival_mean_flux(state: &MomentumState) -> Result<FluxMean> {
    let tpsi = apply_tab_momentum(state)?;
    let operator = state.samples().inner(&tpsi)?;
    let grid = auto_time_grid(state)?;
    let j = flux_at_origin(state, &grid)?;
    check_decay("current density", &j)?;
    let total = integrate_real(&grid, &j);
    if total.abs() < 1e-6 {
        return Err(ToaError::IllConditioned(format!(
            "integrated current {total:.3e} is too small to normalize"
        )));
    }
    let moment = |n: i32| -> f64 {
        let v: Vec<f64> = grid.nodes().iter().zip(&j).map(|(t, jv)| t.powi(n) * jv).collect();
        integrate_real(&grid, &v) / total
    };
    let flux_mean = moment(1);
    let rms = moment(2).abs().sqrt();
    let rel = relative(flux_mean, operator.re, rms);
    let report = CheckReport::upper(
        "flux-equality",
        rel,
        1e-3,
        format!(
            "flux mean {flux_mean:.12e}, <T_AB> = {:.12e} (imaginary part {:.2e}), integrated current {total:.12e}",
            operator.re, operator.im
        ),
    );
    Ok(FluxMean {
        flux_mean,
        operator_mean: operator.re,
        flux_total: total,
        report,
    })
}

/// Mean presence time at `x = 0` from the operator quotient and from the
/// defining time integral.
#[derive(Debug, Clone, PartialEq)]
pub struct PresenceMean {
    /// `-(m/2)⟨p̂⁻²x̂ + x̂p̂⁻²⟩ / ⟨p̂⁻¹⟩`.
    pub operator_mean: f64,
    /// `∫ t|ψ(0,t)|² dt / ∫ |ψ(0,t)|² dt`.
    pub time_mean: f64,
    pub report: CheckReport,
}

/// Mean presence time for a state with momenta bounded away from zero.
pub fn presence_mean(state: &MomentumState) -> Result<PresenceMean> {
    let PhysicalConstants { hbar, mass } = state.constants();
    let nodes = state.grid().nodes();
    let vals = state.values();
    let peak = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let significant = |k: usize| vals[k].norm() >= 1e-12 * peak;
    let first = (0..nodes.len()).find(|&k| significant(k)).unwrap_or(0);
    if nodes[first] <= 0.0 {
        return Err(ToaError::Precondition(format!(
            "presence time needs momenta bounded away from zero; |psi| is significant at p = {}",
            nodes[first]
        )));
    }
    let dpsi = derivative(state.samples())?;
    let w = state.grid().weights();
    let mut num = 0.0;
    let mut den = 0.0;
    for k in first..nodes.len() {
        let p = nodes[k];
        // Re⟨p̂⁻²ψ | x̂ψ⟩ with x̂ = iħ∂_p
        num += w[k] * (vals[k].conj() / (p * p) * dpsi.values()[k] * C64::new(0.0, hbar)).re;
        den += w[k] * vals[k].norm_sqr() / p;
    }
    if den.abs() < 1e-300 {
        return Err(ToaError::IllConditioned("<p^-1> vanishes".into()));
    }
    let operator_mean = -mass * num / den;

    let (psi0, _) = origin_sums(state);
    let grid = window_from_probe(max_resolvable_time(state), default_time_step(state), |t| {
        psi0.eval(t).norm_sqr()
    })?;
    let rho = presence_density(state, &grid)?;
    check_decay("presence density", &rho)?;
    let total = integrate_real(&grid, &rho);
    if total.abs() < 1e-300 {
        return Err(ToaError::IllConditioned("presence density vanishes".into()));
    }
    let weighted = |n: i32| -> f64 {
        let v: Vec<f64> = grid.nodes().iter().zip(&rho).map(|(t, r)| t.powi(n) * r).collect();
        integrate_real(&grid, &v) / total
    };
    let time_mean = weighted(1);
    let rms = weighted(2).abs().sqrt();
    let report = CheckReport::upper(
        "presence-time quotient vs. time integral",
        relative(time_mean, operator_mean, rms),
        1e-3,
        format!("operator quotient {operator_mean:.12e}, time integral {time_mean:.12e}"),
    );
    Ok(PresenceMean {
        operator_mean,
        time_mean,
        report,
    })
}

/// `∫ t² Π(t) dt` against `‖T̂_AB ψ‖²`, relative tolerance `1e-3`.
pub fn second_moment_check(state: &MomentumState) -> Result<CheckReport> {
    let tpsi = apply_tab_momentum(state)?;
    let op = tpsi.norm_sqr();
    let dist = kijowski_auto(state)?;
    let t2: Vec<f64> = dist
        .grid
        .nodes()
        .iter()
        .zip(&dist.density)
        .map(|(t, d)| t * t * d)
        .collect();
    let peak = t2.iter().copied().fold(0.0, f64::max);
    let edge = t2[0].max(t2[t2.len() - 1]);
    if edge > 1e-6 * peak {
        return Err(ToaError::Tail {
            edge_ratio: edge / peak,
            tail_mass: f64::NAN,
        });
    }
    let m2 = integrate_real(&dist.grid, &t2);
    Ok(CheckReport::upper(
        "second-moment",
        (m2 - op).abs() / op.abs().max(f64::MIN_POSITIVE),
        1e-3,
        format!("int t^2 Pi dt = {m2:.12e}, ||T_AB psi||^2 = {op:.12e}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{build_state, to_energy_channels, GaussianSpec, GridParams};

    fn params() -> GridParams {
        GridParams { pmax: 10.0, n: 4096 }
    }

    fn default_state() -> MomentumState {
        build_state(&[GaussianSpec::new(5.0, 0.2, -10.0)], PhysicalConstants::default(), params()).unwrap()
    }

    #[test]
    fn tab_on_p_squared_gaussian() {
        // ψ = p² e^{-p²}: ψ/p² - (2/p)ψ' = (4p² - 3) e^{-p²}
        let c = PhysicalConstants::default();
        let grid = Grid::symmetric(8.0, 8000).unwrap();
        let psi = ComplexSamples::from_fn(grid, |p| C64::new(p * p * (-p * p).exp(), 0.0));
        let f = tab_factored(&psi, c).unwrap();
        let e = tab_expanded(&psi, c).unwrap();
        for ((&p, a), b) in psi.grid().nodes().iter().zip(f.values()).zip(e.values()) {
            if p.abs() < 0.1 {
                continue;
            }
            let exact = C64::new(0.0, 0.5 * (4.0 * p * p - 3.0) * (-p * p).exp());
            assert!((a - exact).norm() < 1e-6, "factored p={p}: {a} vs {exact}");
            assert!((b - exact).norm() < 1e-6, "expanded p={p}: {b} vs {exact}");
        }
    }

    #[test]
    fn eigenvector_pointwise() {
        let grid = Grid::new(1e-3, 8.0, 4096).unwrap();
        let psi = ComplexSamples::from_fn(grid, |p| C64::new(p.sqrt() * (-p * p / 2.0).exp(), 0.0));
        let t = tab_factored(&psi, PhysicalConstants::default()).unwrap();
        for (k, (a, b)) in t.values().iter().zip(psi.values()).enumerate() {
            let p = psi.grid().nodes()[k];
            if p > 0.05 && p < 6.0 {
                assert!((a - C64::new(0.0, 1.0) * b).norm() / b.norm() < 1e-6);
            }
        }
    }

    #[test]
    fn deficiency_default() {
        let r = deficiency_check();
        assert!(r.passed, "{r:#?}");
        assert_eq!(r.components.len(), 3);
    }

    #[test]
    fn deficiency_in_other_units() {
        let r = deficiency_check_with(PhysicalConstants::new(0.5, 3.0).unwrap(), DeficiencyGrid::default()).unwrap();
        assert!(r.passed, "{r:#?}");
    }

    #[test]
    fn momentum_and_energy_actions_agree() {
        let s = default_state();
        let a = apply_tab_momentum(&s).unwrap();
        let ch = apply_tab_energy(&to_energy_channels(&s).unwrap()).unwrap();
        let b = crate::states::from_energy_channels(&ch, s.grid()).unwrap();
        let diff: f64 = a
            .values()
            .iter()
            .zip(b.values())
            .zip(s.grid().weights())
            .map(|((x, y), w)| w * (x - y).norm_sqr())
            .sum();
        assert!(diff.sqrt() < 1e-4, "{}", diff.sqrt());
    }

    #[test]
    fn domain_condition() {
        let c = PhysicalConstants::default();
        let grid = Grid::symmetric(10.0, 4096).unwrap();
        let good = MomentumState::from_fn(c, grid.clone(), |p| C64::new(p * p * (-p * p).exp(), 0.0)).unwrap();
        assert!(domain_check(&good).is_ok());
        let sqrt = MomentumState::from_fn(c, grid.clone(), |p| C64::new(p.abs().sqrt() * (-p * p).exp(), 0.0)).unwrap();
        assert!(matches!(apply_tab_momentum(&sqrt), Err(ToaError::NotInDomain(_))));
        let marginal = MomentumState::from_fn(c, grid, |p| C64::new(p.abs().powf(1.5) * (-p * p).exp(), 0.0)).unwrap();
        assert!(domain_check(&marginal).is_err());
        assert!(domain_check(&default_state()).is_ok());
    }

    #[test]
    fn kijowski_basic_properties() {
        let s = default_state();
        let d = kijowski_auto(&s).unwrap();
        assert!((d.total - 1.0).abs() < 2e-3);
        assert!(d.density.iter().all(|&v| v >= 0.0));
        let split = d.meta.channels.as_ref().unwrap();
        assert!(split.minus.iter().all(|&v| v < 1e-100));
        assert!((d.argmax() - 2.0).abs() < 0.04, "peak at {}", d.argmax());
    }

    #[test]
    fn symmetric_state_has_equal_channels() {
        let s = build_state(
            &[GaussianSpec::new(5.0, 0.25, -8.0), GaussianSpec::new(-5.0, 0.25, 8.0)],
            PhysicalConstants::default(),
            params(),
        )
        .unwrap();
        let d = kijowski_auto(&s).unwrap();
        let split = d.meta.channels.unwrap();
        let max = d.density.iter().copied().fold(0.0, f64::max);
        for (a, b) in split.plus.iter().zip(&split.minus) {
            assert!((a - b).abs() < 1e-12 * max);
        }
    }

    #[test]
    fn resolution_guards() {
        let s = default_state();
        let coarse = Grid::new(0.0, 4.0, 100).unwrap();
        assert!(matches!(kijowski_distribution(&s, &coarse), Err(ToaError::Resolution { .. })));
        let far = Grid::new(0.0, 500.0, 100_000).unwrap();
        assert!(matches!(kijowski_distribution(&s, &far), Err(ToaError::Resolution { .. })));
    }

    #[test]
    fn covariance_zero_shift_is_exact() {
        let s = default_state();
        let r = covariance_check(&s, 0.0, None).unwrap();
        assert_eq!(r.measured, 0.0);
    }

    #[test]
    fn flux_and_presence_examples() {
        let s = default_state();
        let f = arrival_mean_flux(&s).unwrap();
        assert!(f.report.passed, "{}", f.report.details);
        assert!((f.flux_mean - 2.0).abs() < 0.02);
        assert!((f.flux_total - 1.0).abs() < 1e-6);
        let p = presence_mean(&s).unwrap();
        assert!(p.report.passed, "{}", p.report.details);
        assert!((p.operator_mean - 2.0).abs() < 0.03);
        // presence and passage differ at O(σ²/p0²)
        assert!((p.operator_mean - f.flux_mean).abs() > 1e-4);

        let centred = build_state(&[GaussianSpec::new(5.0, 0.2, 0.0)], PhysicalConstants::default(), params()).unwrap();
        assert!(arrival_mean_flux(&centred).unwrap().flux_mean.abs() < 1e-2);
        assert!(presence_mean(&centred).unwrap().operator_mean.abs() < 1e-2);
    }

    #[test]
    fn presence_rejects_negative_momenta() {
        let s = build_state(
            &[GaussianSpec::new(5.0, 0.2, -10.0), GaussianSpec::new(-5.0, 0.2, 10.0)],
            PhysicalConstants::default(),
            params(),
        )
        .unwrap();
        assert!(matches!(presence_mean(&s), Err(ToaError::Precondition(_))));
    }

    #[test]
    fn second_moment_examples() {
        for sigma in [0.2, 0.1] {
            let s = build_state(&[GaussianSpec::new(5.0, sigma, -10.0)], PhysicalConstants::default(), params()).unwrap();
            let r = second_moment_check(&s).unwrap();
            assert!(r.passed, "{}", r.details);
        }
        let grid = Grid::symmetric(10.0, 4096).unwrap();
        let bad = MomentumState::from_fn(PhysicalConstants::default(), grid, |p| {
            C64::new(if p > 0.0 { p.sqrt() * (-p * p).exp() } else { 0.0 }, 0.0)
        })
        .unwrap();
        assert!(matches!(second_moment_check(&bad), Err(ToaError::NotInDomain(_))));
    }
}
