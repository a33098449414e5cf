//! Time operators that are not arrival times: the self-adjoint extension
//! family `T'_α` of `T̂₊ ⊕ (-T̂₋)` and the constant-field operator
//! `T̂_g = p̂/mg`.
//!
//! `T'_α` is realized by unfolding the two energy channels onto the whole
//! energy line, `χ(E) = ψ₊(E)` for `E > 0` and `χ(E) = e^{-iα}ψ₋(-E)` for
//! `E < 0`. On the unfolded line the operator is `-iħ∂_E`, so its spectral
//! density is `|∫dE e^{-iEτ/ħ}χ(E)/√(2πħ)|² = |A₊(τ) + e^{-iα}A₋(-τ)|²`
//! with `A_c` the channel amplitudes of the arrival-time density.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::arrival::window_from_probe;
use crate::error::{Result, ToaError};
use crate::numerics::{derivative, ComplexSamples, Grid, PHASE_ACCURATE, PHASE_GUARD};
use crate::report::{ChannelSplit, CheckReport, Distribution, DistributionMeta};
use crate::states::{Channel, EnergyChannels, MomentumState, PhysicalConstants};

/// Minimum share of the norm each channel must carry for the covariance
/// violation to be asserted.
pub const TWO_CHANNEL_THRESHOLD: f64 = 0.1;

/// Channel mass share below which a state counts as single-channel.
pub const EMPTY_CHANNEL: f64 = 1e-12;

/// Domain phase `α ∈ [0, 2π)` of the extension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaExtensionSpec {
    alpha: f64,
}

impl AlphaExtensionSpec {
    /// Wraps `alpha` into `[0, 2π)`.
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(ToaError::InvalidParameter(format!("alpha must be finite, got {alpha}")));
        }
        let wrapped = alpha.rem_euclid(2.0 * PI);
        Ok(Self {
            alpha: if wrapped >= 2.0 * PI { 0.0 } else { wrapped },
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `e^{-iα}`, the phase attached to the negative-energy half.
    pub fn phase(&self) -> C64 {
        C64::from_polar(1.0, -self.alpha)
    }
}

/// `χ(E)` on a uniform energy grid symmetric about `E = 0`, resampled from
/// the channels. The spacing is a quarter of the coarsest energy spacing of
/// the channel grid.
pub fn unfold(channels: &EnergyChannels, alpha: f64) -> Result<ComplexSamples> {
    let spec = AlphaExtensionSpec::new(alpha)?;
    let mass = channels.constants().mass;
    let mags = channels.magnitudes();
    let emax = mags.stop().powi(2) / (2.0 * mass);
    let de = mags.stop() * mags.spacing() / mass / 4.0;
    let half = (emax / de).ceil() as usize;
    let grid = Grid::new(-emax, emax, 2 * half + 1)?;
    let phase = spec.phase();
    let values = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            if k == half {
                0.5 * (channels.value_at(Channel::Plus, 0.0) + phase * channels.value_at(Channel::Minus, 0.0))
            } else if k > half {
                channels.value_at(Channel::Plus, e)
            } else {
                phase * channels.value_at(Channel::Minus, -e)
            }
        })
        .collect();
    ComplexSamples::new(grid, values)
}

/// `Σ_k c_k e^{-i u_k² t/2mħ}` with `c_k = w_k (u_k/m) ψ_c(u_k) / √(2πħ)`.
struct ChannelAmplitude {
    rates: Vec<f64>,
    coeffs: Vec<C64>,
}

impl ChannelAmplitude {
    fn new(channels: &EnergyChannels, c: Channel) -> Self {
        let PhysicalConstants { hbar, mass } = channels.constants();
        let norm = (2.0 * PI * hbar).sqrt();
        let rates = channels
            .magnitudes()
            .nodes()
            .iter()
            .map(|u| u * u / (2.0 * mass * hbar))
            .collect();
        let coeffs = channels
            .energy_weights()
            .iter()
            .zip(channels.channel(c))
            .map(|(w, v)| v * *w / norm)
            .collect();
        Self { rates, coeffs }
    }

    fn eval(&self, t: f64) -> C64 {
        self.rates
            .iter()
            .zip(&self.coeffs)
            .map(|(r, c)| c * C64::from_polar(1.0, -r * t))
            .sum()
    }
}

fn check_tau_resolution(channels: &EnergyChannels, tau_grid: &Grid) -> Result<()> {
    let PhysicalConstants { hbar, mass } = channels.constants();
    let umax = channels.magnitudes().stop();
    let step = umax * umax * tau_grid.spacing() / (2.0 * mass * hbar);
    if step >= PHASE_ACCURATE {
        return Err(ToaError::Resolution {
            phase: step,
            limit: PHASE_ACCURATE,
            context: format!("tau step {} vs. fastest phase", tau_grid.spacing()),
        });
    }
    let far = umax * channels.magnitudes().spacing() * tau_grid.max_abs() / (mass * hbar);
    if far > PHASE_GUARD {
        return Err(ToaError::Resolution {
            phase: far,
            limit: PHASE_GUARD,
            context: format!("energy spacing at |tau| = {}", tau_grid.max_abs()),
        });
    }
    Ok(())
}

fn resolvable_tau(channels: &EnergyChannels) -> (f64, f64) {
    let PhysicalConstants { hbar, mass } = channels.constants();
    let mags = channels.magnitudes();
    let limit = PHASE_GUARD * mass * hbar / (mags.stop() * mags.spacing());
    let dt = 0.5 * PHASE_ACCURATE * 2.0 * mass * hbar / mags.stop().powi(2);
    (limit, dt)
}

/// Spectral density `Π'_α(τ) = |A₊(τ) + e^{-iα}A₋(-τ)|²` of `T'_α` on
/// `tau_grid`. The channel split holds `|A₊(τ)|²` and `|A₋(-τ)|²`, which
/// omit the interference term.
pub fn alpha_distribution(channels: &EnergyChannels, alpha: f64, tau_grid: &Grid) -> Result<Distribution> {
    let spec = AlphaExtensionSpec::new(alpha)?;
    check_tau_resolution(channels, tau_grid)?;
    let plus = ChannelAmplitude::new(channels, Channel::Plus);
    let minus = ChannelAmplitude::new(channels, Channel::Minus);
    let phase = spec.phase();
    let amps: Vec<(C64, C64)> = tau_grid
        .nodes()
        .par_iter()
        .map(|&t| (plus.eval(t), phase * minus.eval(-t)))
        .collect();
    let density = amps.iter().map(|(a, b)| (a + b).norm_sqr()).collect();
    let p: Vec<f64> = amps.iter().map(|(a, _)| a.norm_sqr()).collect();
    let m: Vec<f64> = amps.iter().map(|(_, b)| b.norm_sqr()).collect();
    let mut meta = DistributionMeta {
        provenance: format!("spectral density of the self-adjoint extension, alpha = {}", spec.alpha()),
        channels: Some(ChannelSplit {
            plus_total: crate::numerics::integrate_real(tau_grid, &p),
            minus_total: crate::numerics::integrate_real(tau_grid, &m),
            plus: p,
            minus: m,
        }),
        ..Default::default()
    };
    meta.cutoffs.insert("alpha".into(), spec.alpha());
    meta.cutoffs.insert("umax".into(), channels.magnitudes().stop());
    Distribution::new(tau_grid.clone(), density, meta)
}

/// Window covering the support of `Π'_α`.
pub fn alpha_time_grid(channels: &EnergyChannels, alpha: f64) -> Result<Grid> {
    let spec = AlphaExtensionSpec::new(alpha)?;
    let plus = ChannelAmplitude::new(channels, Channel::Plus);
    let minus = ChannelAmplitude::new(channels, Channel::Minus);
    let (limit, dt) = resolvable_tau(channels);
    window_from_probe(limit, dt, |t| (plus.eval(t) + spec.phase() * minus.eval(-t)).norm_sqr())
}

/// `⟨χ|(-iħ∂_E)ⁿχ⟩ = ⟨ψ₊|(-iħ∂_E)ⁿψ₊⟩ + ⟨ψ₋|(iħ∂_E)ⁿψ₋⟩`, for `n <= 3`.
pub fn alpha_operator_moment(channels: &EnergyChannels, n: u32) -> Result<C64> {
    if n > 3 {
        return Err(ToaError::Unsupported(format!("operator moments above order 3 (requested {n})")));
    }
    let PhysicalConstants { hbar, mass } = channels.constants();
    let mags = channels.magnitudes();
    let w = channels.energy_weights();
    let mut total = C64::new(0.0, 0.0);
    for (c, sign) in [(Channel::Plus, -1.0), (Channel::Minus, 1.0)] {
        let mut v = ComplexSamples::new(mags.clone(), channels.channel(c).to_vec())?;
        for _ in 0..n {
            let d = derivative(&v)?;
            v = d.map(|u, dv| dv * C64::new(0.0, sign * hbar * mass / u));
        }
        total += channels
            .channel(c)
            .iter()
            .zip(v.values())
            .zip(&w)
            .map(|((a, b), wk)| a.conj() * b * *wk)
            .sum::<C64>();
    }
    Ok(total)
}

/// `∫ τⁿ Π'_α dτ` against `⟨(T'_α)ⁿ⟩`, compared relative to
/// `max(|⟨(T'_α)ⁿ⟩|, ⟨τ²⟩^{n/2})` with tolerance `1e-3`.
pub fn alpha_moment_check(channels: &EnergyChannels, alpha: f64, n: u32) -> Result<CheckReport> {
    let grid = alpha_time_grid(channels, alpha)?;
    let dist = alpha_distribution(channels, alpha, &grid)?;
    let norm = dist.total;
    let m = dist.raw_moment(n as i32) / norm;
    let rms = (dist.raw_moment(2) / norm).sqrt();
    let op = alpha_operator_moment(channels, n)? / channels.norm_sqr();
    let scale = op.re.abs().max(rms.powi(n as i32));
    Ok(CheckReport::upper(
        format!("extension moment n={n}"),
        (m - op.re).abs() / scale,
        1e-3,
        format!(
            "distribution {m:.12e}, operator {:.12e} (imaginary part {:.2e})",
            op.re, op.im
        ),
    ))
}

fn shift_discrepancy(channels: &EnergyChannels, alpha: f64, shift: f64, orientation: f64) -> Result<(f64, Grid)> {
    let grid = alpha_time_grid(channels, alpha)?;
    let a = alpha_distribution(channels, alpha, &grid)?;
    let offset = orientation * shift;
    let shifted = Grid::new(grid.start() - offset, grid.stop() - offset, grid.len())?;
    let b = alpha_distribution(&channels.evolved(shift), alpha, &shifted)?;
    let sup = a
        .density
        .iter()
        .zip(&b.density)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok((sup / a.max(), grid))
}

fn mass_shares(channels: &EnergyChannels) -> (f64, f64) {
    let total = channels.norm_sqr();
    (
        channels.channel_norm_sqr(Channel::Plus) / total,
        channels.channel_norm_sqr(Channel::Minus) / total,
    )
}

/// `sup_τ |Π'_{U(s)ψ}(τ - s) - Π'_ψ(τ)| / max Π'`. Passes when the violation
/// exceeds `1e-2`: the extension's distribution is not time-shift covariant
/// once both channels are populated.
pub fn alpha_covariance_violation(channels: &EnergyChannels, alpha: f64, shift: f64) -> Result<CheckReport> {
    let (plus, minus) = mass_shares(channels);
    if plus < TWO_CHANNEL_THRESHOLD || minus < TWO_CHANNEL_THRESHOLD {
        return Err(ToaError::Precondition(format!(
            "covariance violation needs both channels populated with at least {TWO_CHANNEL_THRESHOLD} of the norm (plus {plus:.3}, minus {minus:.3})"
        )));
    }
    let (measured, grid) = shift_discrepancy(channels, alpha, shift, 1.0)?;
    Ok(CheckReport::lower(
        "alpha-violation",
        measured,
        1e-2,
        format!(
            "alpha = {alpha}, shift = {shift}, channel shares {plus:.3}/{minus:.3}, {} tau nodes on [{}, {}]",
            grid.len(),
            grid.start(),
            grid.stop()
        ),
    ))
}

/// Covariance of `Π'_α` for a state in a single channel: a positive-energy
/// state shifts with `τ → τ - s`, a negative-energy one with `τ → τ + s`.
/// Passes below `1e-6`.
pub fn single_channel_covariance(channels: &EnergyChannels, alpha: f64, shift: f64) -> Result<CheckReport> {
    let (plus, minus) = mass_shares(channels);
    let orientation = if minus < EMPTY_CHANNEL {
        1.0
    } else if plus < EMPTY_CHANNEL {
        -1.0
    } else {
        return Err(ToaError::Precondition(format!(
            "state populates both channels (plus {plus:.3}, minus {minus:.3})"
        )));
    };
    let (measured, _) = shift_discrepancy(channels, alpha, shift, orientation)?;
    Ok(CheckReport::upper(
        "single-channel covariance",
        measured,
        1e-6,
        format!("alpha = {alpha}, shift = {shift}, orientation {orientation}"),
    ))
}

/// `Π_g(t) = m|g| |ψ(mgt)|²`, the spectral density of `T̂_g = p̂/mg`, on the
/// nodes `t = p/mg` of the state's momentum grid.
pub fn constant_field_distribution(state: &MomentumState, g: f64) -> Result<Distribution> {
    if g == 0.0 || !g.is_finite() {
        return Err(ToaError::InvalidParameter(format!("field strength must be finite and nonzero, got {g}")));
    }
    let mass = state.constants().mass;
    let scale = mass * g.abs();
    let pg = state.grid();
    let grid = Grid::new(pg.start() / scale, pg.stop() / scale, pg.len())?;
    let vals = state.values();
    let n = vals.len();
    let density = (0..n)
        .map(|k| {
            let j = if g > 0.0 { k } else { n - 1 - k };
            scale * vals[j].norm_sqr()
        })
        .collect();
    let mut meta = DistributionMeta {
        provenance: "spectral density of p/mg".into(),
        ..Default::default()
    };
    meta.cutoffs.insert("g".into(), g);
    meta.cutoffs.insert("tmax".into(), grid.stop());
    Distribution::new(grid, density, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrival::{kijowski_distribution, auto_time_grid};
    use crate::states::{build_state, to_energy_channels, GaussianSpec, GridParams};

    fn state(specs: &[GaussianSpec]) -> MomentumState {
        build_state(specs, PhysicalConstants::default(), GridParams { pmax: 10.0, n: 4096 }).unwrap()
    }

    fn two_channel() -> EnergyChannels {
        to_energy_channels(&state(&[GaussianSpec::new(5.0, 0.2, -10.0), GaussianSpec::new(-5.0, 0.2, -10.0)])).unwrap()
    }

    #[test]
    fn alpha_is_wrapped() {
        assert!((AlphaExtensionSpec::new(-PI / 2.0).unwrap().alpha() - 1.5 * PI).abs() < 1e-15);
        assert_eq!(AlphaExtensionSpec::new(2.0 * PI).unwrap().alpha(), 0.0);
        assert!((AlphaExtensionSpec::new(7.0).unwrap().alpha() - (7.0 - 2.0 * PI)).abs() < 1e-15);
        assert!(AlphaExtensionSpec::new(f64::NAN).is_err());
    }

    #[test]
    fn unfolding_support_and_symmetry() {
        let plus_only = to_energy_channels(&state(&[GaussianSpec::new(5.0, 0.2, -10.0)])).unwrap();
        for alpha in [0.0, 1.0, 4.0] {
            let chi = unfold(&plus_only, alpha).unwrap();
            let half = chi.values().len() / 2;
            assert!(chi.values()[..half].iter().all(|v| v.norm() < 1e-60));
        }
        let ch = two_channel();
        let plus = ch.channel(Channel::Plus).to_vec();
        let even = ch.with_channels(plus.clone(), plus).unwrap();
        let chi = unfold(&even, 0.0).unwrap();
        let v = chi.values();
        for k in 0..v.len() / 2 {
            assert!((v[k] - v[v.len() - 1 - k]).norm() < 1e-14);
        }
    }

    #[test]
    fn unfolding_is_unitary() {
        let ch = two_channel();
        let chi = unfold(&ch, 1.3).unwrap();
        assert!((chi.norm_sqr() - ch.norm_sqr()).abs() < 1e-8, "{} vs {}", chi.norm_sqr(), ch.norm_sqr());
    }

    #[test]
    fn single_channel_matches_arrival_density() {
        let s = state(&[GaussianSpec::new(5.0, 0.2, -10.0)]);
        let ch = to_energy_channels(&s).unwrap();
        let grid = auto_time_grid(&s).unwrap();
        let k = kijowski_distribution(&s, &grid).unwrap();
        for alpha in [0.0, 2.0] {
            let a = alpha_distribution(&ch, alpha, &grid).unwrap();
            for (x, y) in a.density.iter().zip(&k.density) {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn alpha_dependence_and_reversal() {
        let ch = two_channel();
        let grid = alpha_time_grid(&ch, 0.0).unwrap();
        let a = alpha_distribution(&ch, 0.0, &grid).unwrap();
        let b = alpha_distribution(&ch, PI, &grid).unwrap();
        let sup = a.density.iter().zip(&b.density).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(sup > 0.01 * a.max());
        assert!((a.total - 1.0).abs() < 2e-3);

        let swapped = ch
            .with_channels(ch.channel(Channel::Minus).to_vec(), ch.channel(Channel::Plus).to_vec())
            .unwrap();
        let alpha = 0.8;
        let reflected = Grid::new(-grid.stop(), -grid.start(), grid.len()).unwrap();
        let x = alpha_distribution(&ch, alpha, &grid).unwrap();
        let y = alpha_distribution(&swapped, -alpha, &reflected).unwrap();
        let n = x.density.len();
        for k in 0..n {
            assert!((x.density[k] - y.density[n - 1 - k]).abs() < 1e-10 * x.max());
        }
    }

    #[test]
    fn covariance_violation_and_single_channel() {
        let r = alpha_covariance_violation(&two_channel(), 0.0, 1.0).unwrap();
        assert!(r.passed, "{}", r.summary());
        let zero = alpha_covariance_violation(&two_channel(), 0.0, 0.0).unwrap();
        assert_eq!(zero.measured, 0.0);

        let plus_only = to_energy_channels(&state(&[GaussianSpec::new(5.0, 0.2, -10.0)])).unwrap();
        assert!(matches!(
            alpha_covariance_violation(&plus_only, 0.0, 1.0),
            Err(ToaError::Precondition(_))
        ));
        let r = single_channel_covariance(&plus_only, 0.0, 1.0).unwrap();
        assert!(r.passed, "{}", r.summary());
        let minus_only = to_energy_channels(&state(&[GaussianSpec::new(-5.0, 0.2, 10.0)])).unwrap();
        let r = single_channel_covariance(&minus_only, 1.0, 1.0).unwrap();
        assert!(r.passed, "{}", r.summary());
    }

    #[test]
    fn moments_match_operator() {
        let ch = to_energy_channels(&state(&[
            GaussianSpec::new(5.0, 0.25, -10.0),
            GaussianSpec::new(-4.0, 0.3, -4.0).with_weight(C64::new(0.3, 0.6)),
        ]))
        .unwrap();
        for n in 1..=3 {
            let r = alpha_moment_check(&ch, 0.7, n).unwrap();
            assert!(r.passed, "{} {}", r.summary(), r.details);
        }
    }

    #[test]
    fn constant_field_examples() {
        let s = state(&[GaussianSpec::new(5.0, 0.2, -10.0)]);
        let d = constant_field_distribution(&s, 1.0).unwrap();
        assert!((d.total - 1.0).abs() < 1e-6);
        let mean = d.raw_moment(1);
        assert!((mean - 5.0).abs() < 1e-6);
        assert!(((d.raw_moment(2) - mean * mean).sqrt() - 0.2).abs() < 1e-4);
        let d5 = constant_field_distribution(&s, 5.0).unwrap();
        assert!((d5.raw_moment(1) - 1.0).abs() < 1e-6);
        let neg = constant_field_distribution(&s, -1.0).unwrap();
        assert!((neg.raw_moment(1) + 5.0).abs() < 1e-6);
        assert!(matches!(constant_field_distribution(&s, 0.0), Err(ToaError::InvalidParameter(_))));

        let even = state(&[GaussianSpec::new(3.0, 0.3, 0.0), GaussianSpec::new(-3.0, 0.3, 0.0)]);
        let d = constant_field_distribution(&even, 2.0).unwrap();
        let n = d.density.len();
        for k in 0..n {
            assert!((d.density[k] - d.density[n - 1 - k]).abs() < 1e-12);
        }
    }
}
