//! Momentum on the half-line `x > 0`: the POVM density obtained by projecting
//! the full-line momentum spectral measure, its covariance under momentum
//! boosts, moment identities, and the third-moment anomaly.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Result, ToaError};
use crate::numerics::{
    derivative, half_fourier, integrate, integrate_real, principal_value, ComplexSamples, Grid, PHASE_GUARD,
};
use crate::report::{CheckReport, Distribution, DistributionMeta};
use crate::states::{boost, PhysicalConstants};

/// Estimated mass of a moment integrand beyond the grid edges, relative to
/// `∫|pⁿΠ|`, above which a moment is refused.
pub const TAIL_TOLERANCE: f64 = 1e-6;

/// `|ψ(0)|` relative to the peak below which a state counts as vanishing at
/// the boundary.
pub const BOUNDARY_TOLERANCE: f64 = 1e-8;

/// Normalized state on `[0, xmax]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfLineState {
    constants: PhysicalConstants,
    samples: ComplexSamples,
    in_domain: bool,
}

impl HalfLineState {
    /// Normalizes `samples`. With `in_domain` set, `ψ(0)` must vanish.
    pub fn new(constants: PhysicalConstants, samples: ComplexSamples, in_domain: bool) -> Result<Self> {
        let grid = samples.grid();
        if grid.start().abs() > 1e-14 * grid.stop() {
            return Err(ToaError::InvalidGrid(format!(
                "half-line grid must start at x = 0, got {}",
                grid.start()
            )));
        }
        let norm = samples.norm_sqr().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(ToaError::Degenerate("half-line state has zero norm".into()));
        }
        let samples = samples.map(|_, v| v / norm);
        if in_domain {
            let peak = samples.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
            let at_zero = samples.values()[0].norm();
            if at_zero > BOUNDARY_TOLERANCE * peak {
                return Err(ToaError::NotInDomain(format!(
                    "|psi(0)| / peak = {:.3e} but states in the momentum domain vanish at x = 0",
                    at_zero / peak
                )));
            }
        }
        Ok(Self {
            constants,
            samples,
            in_domain,
        })
    }

    pub fn from_fn(
        constants: PhysicalConstants,
        grid: Grid,
        in_domain: bool,
        f: impl Fn(f64) -> C64,
    ) -> Result<Self> {
        Self::new(constants, ComplexSamples::from_fn(grid, f), in_domain)
    }

    /// `2 λ^{3/2} x e^{-λx}` on `[0, xmax]`: vanishes at the boundary with
    /// `ψ'(0) = 2λ^{3/2}`.
    pub fn linear_exponential(constants: PhysicalConstants, lambda: f64, xmax: f64, n: usize) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(ToaError::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        let grid = Grid::new(0.0, xmax, n)?;
        Self::from_fn(constants, grid, true, |x| {
            C64::new(2.0 * lambda.powf(1.5) * x * (-lambda * x).exp(), 0.0)
        })
    }

    pub fn constants(&self) -> PhysicalConstants {
        self.constants
    }

    pub fn samples(&self) -> &ComplexSamples {
        &self.samples
    }

    pub fn in_domain(&self) -> bool {
        self.in_domain
    }

    /// `e^{-iqx̂/ħ} ψ`.
    pub fn boosted(&self, q: f64) -> Self {
        Self {
            constants: self.constants,
            samples: boost(&self.samples, q, self.constants.hbar),
            in_domain: self.in_domain,
        }
    }
}

/// `Π_ψ(p) = |∫₀^∞ dx e^{-ipx/ħ} ψ(x) / √(2πħ)|²` on `p_grid`.
///
/// This equals the full-line momentum density of `Θ(x)ψ(x)`.
pub fn momentum_density(state: &HalfLineState, p_grid: &Grid) -> Result<Distribution> {
    let hbar = state.constants.hbar;
    let density: Vec<f64> = p_grid
        .nodes()
        .par_iter()
        .map(|&p| half_fourier(&state.samples, p, hbar).map(|a| a.norm_sqr()))
        .collect::<Result<_>>()?;
    let xg = state.samples.grid();
    let mut meta = DistributionMeta {
        provenance: "half-line momentum POVM density".into(),
        ..Default::default()
    };
    meta.cutoffs.insert("xmax".into(), xg.stop());
    meta.cutoffs.insert("x_spacing".into(), xg.spacing());
    meta.cutoffs
        .insert("max_phase_step".into(), xg.spacing() * p_grid.max_abs() / hbar);
    Distribution::new(p_grid.clone(), density, meta)
}

/// Full-line momentum density of `Θ(x)ψ(x)` with the state zero-extended to
/// `[-xmax, xmax]`.
pub fn projected_full_line_density(state: &HalfLineState, p_grid: &Grid) -> Result<Distribution> {
    let xg = state.samples.grid();
    let n = xg.len();
    let full = Grid::new(-xg.stop(), xg.stop(), 2 * n - 1)?;
    let mut values = vec![C64::new(0.0, 0.0); n - 1];
    values.extend_from_slice(state.samples.values());
    let samples = ComplexSamples::new(full, values)?;
    let hbar = state.constants.hbar;
    let density: Vec<f64> = p_grid
        .nodes()
        .par_iter()
        .map(|&p| half_fourier(&samples, p, hbar).map(|a| a.norm_sqr()))
        .collect::<Result<_>>()?;
    Distribution::new(
        p_grid.clone(),
        density,
        DistributionMeta {
            provenance: "full-line momentum density of the projected state".into(),
            ..Default::default()
        },
    )
}

/// `∫ pⁿ Π(p) dp`, refusing distributions whose integrand carries more than
/// [`TAIL_TOLERANCE`] of its absolute mass beyond the grid edges.
///
/// The tail beyond each edge is extrapolated from a power law `|x|^{-k}`
/// fitted between the edge node and a node 1% of the grid further in; a fit
/// with `k <= 1` counts as a divergent tail.
pub fn moment(dist: &Distribution, n: i32) -> Result<f64> {
    moment_with_tolerance(dist, n, TAIL_TOLERANCE)
}

pub fn moment_with_tolerance(dist: &Distribution, n: i32, tail_tolerance: f64) -> Result<f64> {
    let x = dist.grid.nodes();
    let g: Vec<f64> = x.iter().zip(&dist.density).map(|(p, d)| p.powi(n) * d).collect();
    let abs: Vec<f64> = g.iter().map(|v| v.abs()).collect();
    let mass = integrate_real(&dist.grid, &abs);
    let last = g.len() - 1;
    let step = (g.len() / 100).max(1);
    let tail = power_law_tail(x[0], abs[0], x[step], abs[step])
        + power_law_tail(x[last], abs[last], x[last - step], abs[last - step]);
    if mass > 0.0 && tail > tail_tolerance * mass {
        let peak = abs.iter().copied().fold(0.0, f64::max);
        return Err(ToaError::Tail {
            edge_ratio: abs[0].max(abs[last]) / peak,
            tail_mass: tail / mass,
        });
    }
    Ok(dist.raw_moment(n))
}

/// Mass beyond an edge at `x1` assuming `g ∝ |x|^{-k}`, with `k` fitted from
/// the edge and an interior node `x2`.
fn power_law_tail(x1: f64, g1: f64, x2: f64, g2: f64) -> f64 {
    if g1 == 0.0 {
        return 0.0;
    }
    if g2 <= 0.0 || x1.abs() <= x2.abs() || x2 == 0.0 {
        return f64::INFINITY;
    }
    let k = (g2 / g1).ln() / (x1.abs() / x2.abs()).ln();
    if k <= 1.0 {
        f64::INFINITY
    } else {
        g1 * x1.abs() / (k - 1.0)
    }
}

/// `⟨ψ|p̂ⁿψ⟩` with `p̂ = -iħ d/dx` applied by finite differences on `[0, xmax]`.
///
/// For `n >= 3` and `ψ'(0) ≠ 0` the result has an imaginary part
/// `ħ³ψ'(0)²/2` (at `n = 3`), which the POVM moments do not reproduce.
pub fn operator_moment(state: &HalfLineState, n: u32) -> Result<C64> {
    if n > 4 {
        return Err(ToaError::Unsupported(format!(
            "operator moments above order 4 (requested {n})"
        )));
    }
    let hbar = state.constants.hbar;
    let mut d = state.samples.clone();
    for _ in 0..n {
        d = derivative(&d)?;
    }
    let factor = C64::new(0.0, -hbar).powu(n);
    Ok(state.samples.inner(&d)? * factor)
}

/// Gaussian test window `weight · exp(-(p - center)²/(2 width²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianWindow {
    pub center: f64,
    pub width: f64,
    pub weight: C64,
}

impl GaussianWindow {
    pub fn new(center: f64, width: f64) -> Self {
        Self {
            center,
            width,
            weight: C64::new(1.0, 0.0),
        }
    }

    pub fn value(&self, p: f64) -> C64 {
        self.weight * (-(p - self.center).powi(2) / (2.0 * self.width * self.width)).exp()
    }

    fn support(&self) -> (f64, f64) {
        (self.center - 12.0 * self.width, self.center + 12.0 * self.width)
    }
}

/// Both sides of the smeared non-orthogonality identity
/// `⟨F|G⟩_{x>0} = ½∫f̄g dp + (i/2π) P∫∫ f̄(p')g(p)/(p-p') dp dp'`,
/// where `F = ∫ f ψ_p dp`, `G = ∫ g ψ_p dp` and `ψ_p = e^{ipx/ħ}/√(2πħ)`.
///
/// The left side is computed in position space, the right side in momentum
/// space with [`principal_value`].
pub fn overlap_kernel_sides(
    f: &GaussianWindow,
    g: &GaussianWindow,
    constants: PhysicalConstants,
) -> Result<(C64, C64)> {
    for w in [f, g] {
        if !(w.width > 0.0) {
            return Err(ToaError::InvalidParameter(format!("window width must be positive, got {}", w.width)));
        }
    }
    let hbar = constants.hbar;
    const PER_WIDTH: usize = 40;
    let window_grid = |w: &GaussianWindow| {
        let (a, b) = w.support();
        Grid::new(a, b, 24 * PER_WIDTH + 1)
    };

    // position side
    let wmin = f.width.min(g.width);
    let xmax = 9.0 * hbar / wmin;
    let freq = ((f.center - g.center).abs() + 4.0 * (f.width + g.width)) / hbar;
    let dx = (0.05 / freq).min(xmax / 200.0);
    let nx = (xmax / dx).ceil() as usize + 1;
    let xgrid = Grid::new(0.0, xmax, nx)?;
    let fgrid = window_grid(f)?;
    let ggrid = window_grid(g)?;
    let fs = ComplexSamples::from_fn(fgrid.clone(), |p| f.value(p));
    let gs = ComplexSamples::from_fn(ggrid, |p| g.value(p));
    let norm = (2.0 * PI * hbar).sqrt();
    // ∫ w(p) e^{ipx/ħ} dp / √(2πħ) = conj(half_fourier(conj w, x))
    let transform = |s: &ComplexSamples| -> Result<Vec<C64>> {
        let phase = s.grid().spacing() * xmax / hbar;
        if phase > PHASE_GUARD {
            return Err(ToaError::Resolution {
                phase,
                limit: PHASE_GUARD,
                context: "window transform".into(),
            });
        }
        Ok(xgrid
            .nodes()
            .par_iter()
            .map(|&x| {
                let v: C64 = s
                    .grid()
                    .weights()
                    .iter()
                    .zip(s.grid().nodes())
                    .zip(s.values())
                    .map(|((w, p), v)| v * C64::from_polar(*w, p * x / hbar))
                    .sum();
                v / norm
            })
            .collect())
    };
    let t_f = transform(&fs)?;
    let t_g = transform(&gs)?;
    let big_f = ComplexSamples::new(xgrid.clone(), t_f)?;
    let big_g = ComplexSamples::new(xgrid, t_g)?;
    let lhs = big_f.inner(&big_g)?;

    // momentum side
    let (fa, fb) = f.support();
    let (ga, gb) = g.support();
    let dp = wmin / PER_WIDTH as f64;
    let (lo, hi) = (fa.min(ga), fb.max(gb));
    let common = Grid::new(lo, hi, ((hi - lo) / dp).ceil() as usize + 1)?;
    let overlap = integrate(&ComplexSamples::from_fn(common, |p| f.value(p).conj() * g.value(p)));

    let gstep = g.width / PER_WIDTH as f64;
    let pv: Vec<C64> = fgrid
        .nodes()
        .par_iter()
        .map(|&s| {
            let half = (s - g.center).abs() + 12.0 * g.width;
            let k = (half / gstep).ceil() as usize;
            let grid = Grid::new(s - k as f64 * gstep, s + k as f64 * gstep, 2 * k + 1)?;
            principal_value(&ComplexSamples::from_fn(grid, |p| g.value(p)), s)
        })
        .collect::<Result<_>>()?;
    let outer = integrate(&ComplexSamples::new(
        fgrid.clone(),
        fgrid
            .nodes()
            .iter()
            .zip(&pv)
            .map(|(&s, v)| f.value(s).conj() * v)
            .collect(),
    )?);
    let rhs = overlap * 0.5 + C64::new(0.0, 1.0 / (2.0 * PI)) * outer;
    Ok((lhs, rhs))
}

/// Relative agreement of the two sides of [`overlap_kernel_sides`].
pub fn overlap_kernel_check(
    f: &GaussianWindow,
    g: &GaussianWindow,
    constants: PhysicalConstants,
) -> Result<CheckReport> {
    let (lhs, rhs) = overlap_kernel_sides(f, g, constants)?;
    let scale = lhs.norm().max(rhs.norm());
    let rel = if scale > 0.0 { (lhs - rhs).norm() / scale } else { 0.0 };
    Ok(CheckReport::upper(
        "overlap-kernel",
        rel,
        1e-4,
        format!(
            "position side {:.12e}{:+.12e}i, momentum side {:.12e}{:+.12e}i",
            lhs.re, lhs.im, rhs.re, rhs.im
        ),
    ))
}
