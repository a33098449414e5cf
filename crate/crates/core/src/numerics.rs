//! Uniform grids, composite quadrature, half-line Fourier integrals,
//! principal values and finite differences.
//!
//! Everything here is a pure function of its inputs. Oscillatory integrals
//! are evaluated by direct summation on a grid that must resolve the phase;
//! the resolution guard refuses to evaluate rather than alias.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Result, ToaError};

/// Phase advance per grid step above which a direct sum is rejected.
pub const PHASE_GUARD: f64 = PI;

/// Phase advance per grid step below which the accuracy contract holds.
pub const PHASE_ACCURATE: f64 = PI / 4.0;

/// Uniformly spaced, strictly increasing nodes on `[start, stop]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    start: f64,
    stop: f64,
    n: usize,
    spacing: f64,
    #[serde(skip)]
    nodes: Vec<f64>,
}

impl Grid {
    pub fn new(start: f64, stop: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(ToaError::InvalidGrid(format!("need at least 2 nodes, got {n}")));
        }
        if !start.is_finite() || !stop.is_finite() || stop <= start {
            return Err(ToaError::InvalidGrid(format!(
                "need finite start < stop, got [{start}, {stop}]"
            )));
        }
        let spacing = (stop - start) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|k| start + k as f64 * spacing).collect();
        nodes[n - 1] = stop;
        Ok(Self {
            start,
            stop,
            n,
            spacing,
            nodes,
        })
    }

    /// `[-half_width, half_width]`. With even `n` no node sits at zero.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    /// Grid of `n` nodes starting at `start` with the given spacing.
    pub fn from_spacing(start: f64, spacing: f64, n: usize) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(ToaError::InvalidGrid(format!("spacing must be positive, got {spacing}")));
        }
        Self::new(start, start + spacing * (n.max(2) - 1) as f64, n)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn stop(&self) -> f64 {
        self.stop
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Largest node magnitude.
    pub fn max_abs(&self) -> f64 {
        self.start.abs().max(self.stop.abs())
    }

    /// Composite quadrature weights.
    ///
    /// Fourth-order extended rule (exact for cubics) when `n >= 8`,
    /// trapezoid otherwise.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing;
        let n = self.n;
        let mut w = vec![h; n];
        if n < 8 {
            w[0] = 0.5 * h;
            w[n - 1] = 0.5 * h;
            return w;
        }
        const END: [f64; 4] = [17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0];
        for (k, c) in END.iter().enumerate() {
            w[k] = c * h;
            w[n - 1 - k] = c * h;
        }
        w
    }
}

/// Complex samples of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSamples {
    grid: Grid,
    values: Vec<C64>,
}

impl ComplexSamples {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(ToaError::InvalidGrid(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> C64) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64, C64) -> C64) -> Self {
        let values = self
            .grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&x, &v)| f(x, v))
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// `∫|f|²` by quadrature.
    pub fn norm_sqr(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.norm_sqr())
            .sum()
    }

    /// `∫ conj(self) other` by quadrature. Grids must match.
    pub fn inner(&self, other: &ComplexSamples) -> Result<C64> {
        if self.grid != other.grid {
            return Err(ToaError::InvalidGrid("inner product on mismatched grids".into()));
        }
        Ok(self
            .grid
            .weights()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| a.conj() * b * *w)
            .sum())
    }
}

/// Composite quadrature of the sampled integrand.
pub fn integrate(samples: &ComplexSamples) -> C64 {
    samples
        .grid
        .weights()
        .iter()
        .zip(&samples.values)
        .map(|(w, v)| v * *w)
        .sum()
}

/// Composite quadrature of real samples on `grid`.
pub fn integrate_real(grid: &Grid, values: &[f64]) -> f64 {
    debug_assert_eq!(grid.len(), values.len());
    grid.weights().iter().zip(values).map(|(w, v)| w * v).sum()
}

/// `∫ dE e^{-iEt/ħ} ψ(E) / √(2πħ)` over the sampled range.
///
/// The caller truncates the range where `ψ` has decayed. Accuracy holds while
/// `spacing·|t|/ħ < π/4`; above `π` the call fails with
/// [`ToaError::Resolution`].
pub fn half_fourier(samples: &ComplexSamples, t: f64, hbar: f64) -> Result<C64> {
    if !(hbar > 0.0) {
        return Err(ToaError::InvalidParameter(format!("hbar must be positive, got {hbar}")));
    }
    let grid = samples.grid();
    let phase = grid.spacing() * t.abs() / hbar;
    if phase > PHASE_GUARD {
        return Err(ToaError::Resolution {
            phase,
            limit: PHASE_GUARD,
            context: format!("half-line Fourier integral at t = {t}"),
        });
    }
    let norm = (2.0 * PI * hbar).sqrt();
    let sum: C64 = grid
        .weights()
        .iter()
        .zip(grid.nodes())
        .zip(samples.values())
        .map(|((w, &e), v)| C64::from_polar(*w, -e * t / hbar) * v)
        .sum();
    Ok(sum / norm)
}

/// `P∫ f(x)/(x - s) dx` over a grid symmetric about `s`.
///
/// The grid must have an odd number of nodes with the central node at `s`.
/// Nodes at `s ± u` are paired so the integrand becomes the smooth even
/// function `(f(s+u) - f(s-u))/u`; its value at `u = 0` is extrapolated from
/// the first two pairs.
pub fn principal_value(samples: &ComplexSamples, s: f64) -> Result<C64> {
    let grid = samples.grid();
    let n = grid.len();
    let h = grid.spacing();
    let scale = 1.0 + s.abs() + grid.max_abs();
    if n % 2 == 0 {
        return Err(ToaError::Precondition(
            "principal value needs an odd node count with a node at the pole".into(),
        ));
    }
    let mid = n / 2;
    if (grid.start() + grid.stop() - 2.0 * s).abs() > 1e-9 * scale
        || (grid.nodes()[mid] - s).abs() > 1e-9 * scale
    {
        return Err(ToaError::Precondition(format!(
            "grid [{}, {}] is not symmetric about s = {s}",
            grid.start(),
            grid.stop()
        )));
    }
    let v = samples.values();
    let half = n / 2;
    let mut paired = Vec::with_capacity(half + 1);
    paired.push(C64::new(0.0, 0.0));
    for k in 1..=half {
        let u = k as f64 * h;
        paired.push((v[mid + k] - v[mid - k]) / u);
    }
    paired[0] = if half >= 2 {
        (paired[1] * 4.0 - paired[2]) / 3.0
    } else {
        paired[1]
    };
    let ugrid = Grid::new(0.0, half as f64 * h, half + 1)?;
    Ok(integrate(&ComplexSamples::new(ugrid, paired)?))
}

/// Finite-difference weights for derivative order `order` at offset 0 given
/// stencil offsets `z` (Fornberg's recursion).
pub fn fd_weights(z: &[f64], order: usize) -> Vec<f64> {
    let n = z.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = z[0];
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = z[i];
        for j in 0..i {
            let c3 = z[i] - z[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// First derivative by finite differences: 7-point central stencils in the
/// interior (sixth order), shifted one-sided stencils of the same width near
/// the ends. Grids of 5 or 6 nodes fall back to 5-point stencils.
pub fn derivative(samples: &ComplexSamples) -> Result<ComplexSamples> {
    let grid = samples.grid();
    let n = grid.len();
    if n < 5 {
        return Err(ToaError::InvalidGrid(format!(
            "derivative needs at least 5 nodes, got {n}"
        )));
    }
    let width = if n >= 7 { 7 } else { 5 };
    let half = width / 2;
    let h = grid.spacing();
    // stencils[j]: node sits at position j within the stencil
    let stencils: Vec<Vec<f64>> = (0..width)
        .map(|j| {
            let z: Vec<f64> = (0..width).map(|k| k as f64 - j as f64).collect();
            fd_weights(&z, 1).into_iter().map(|w| w / h).collect()
        })
        .collect();
    let v = samples.values();
    let out = (0..n)
        .map(|i| {
            let (first, pos) = if i < half {
                (0, i)
            } else if i + half >= n {
                (n - width, i - (n - width))
            } else {
                (i - half, half)
            };
            stencils[pos]
                .iter()
                .zip(&v[first..first + width])
                .map(|(w, f)| f * *w)
                .sum()
        })
        .collect();
    ComplexSamples::new(grid.clone(), out)
}

/// Cubic (4-point Lagrange) interpolation of uniform samples at `x`.
///
/// Returns zero outside `[start - spacing, stop]`; the samples are assumed to
/// be truncated where the function has decayed.
pub fn interpolate_cubic(grid: &Grid, values: &[C64], x: f64) -> C64 {
    interpolate_lagrange(grid, values, x, 4)
}

/// Lagrange interpolation through the `points` nodes nearest `x` (centred
/// where possible), with the same out-of-range convention as
/// [`interpolate_cubic`].
pub fn interpolate_lagrange(grid: &Grid, values: &[C64], x: f64, points: usize) -> C64 {
    let n = grid.len();
    let h = grid.spacing();
    if points < 2 || n < points || x < grid.start() - h || x > grid.stop() {
        return C64::new(0.0, 0.0);
    }
    let s = (x - grid.start()) / h;
    let i0 = (s.floor() as isize - (points as isize / 2 - 1)).clamp(0, (n - points) as isize) as usize;
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..points {
        let mut l = 1.0;
        for b in 0..points {
            if a != b {
                l *= (s - (i0 + b) as f64) / (a as f64 - b as f64);
            }
        }
        acc += values[i0 + a] * l;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn grid_invariants() {
        let g = Grid::new(-1.0, 2.0, 31).unwrap();
        assert_eq!(g.nodes()[0], -1.0);
        assert_eq!(g.nodes()[30], 2.0);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert!((g.spacing() - 0.1).abs() < 1e-15);
        assert!(Grid::new(0.0, 1.0, 1).is_err());
        assert!(Grid::new(1.0, 0.0, 10).is_err());
    }

    #[test]
    fn integrate_constant_and_linear() {
        let g = Grid::new(0.0, 1.0, 101).unwrap();
        let one = ComplexSamples::from_fn(g, |_| c(1.0));
        assert!((integrate(&one) - c(1.0)).norm() < 1e-14);
        let g = Grid::new(0.0, 2.0, 101).unwrap();
        let lin = ComplexSamples::from_fn(g, c);
        assert!((integrate(&lin) - c(2.0)).norm() < 1e-14);
        // trapezoid branch
        let g = Grid::new(0.0, 2.0, 5).unwrap();
        let lin = ComplexSamples::from_fn(g, c);
        assert!((integrate(&lin) - c(2.0)).norm() < 1e-14);
    }

    #[test]
    fn integrate_gaussian() {
        let g = Grid::new(-8.0, 8.0, 2001).unwrap();
        let s = ComplexSamples::from_fn(g, |x| c((-x * x).exp()));
        assert!((integrate(&s).re - PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn integrate_exact_for_cubics() {
        let g = Grid::new(0.0, 1.0, 9).unwrap();
        let s = ComplexSamples::from_fn(g, |x| c(x * x * x - 2.0 * x * x));
        assert!((integrate(&s).re - (0.25 - 2.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn gaussian_quadrature_converges() {
        let exact = PI.sqrt();
        let mut last = f64::INFINITY;
        for n in [9usize, 17, 33, 65] {
            let g = Grid::new(-8.0, 8.0, n).unwrap();
            let s = ComplexSamples::from_fn(g, |x| c((-x * x).exp()));
            let err = (integrate(&s).re - exact).abs();
            if last > 1e-13 {
                assert!(err * 3.0 <= last || err < 1e-13, "n={n}: {err} vs {last}");
            }
            last = err;
        }
    }

    #[test]
    fn half_fourier_exponential() {
        let inv = 1.0 / (2.0 * PI).sqrt();
        let g = Grid::new(0.0, 40.0, 20_001).unwrap();
        let s = ComplexSamples::from_fn(g, |e| c((-e).exp()));
        let a0 = half_fourier(&s, 0.0, 1.0).unwrap();
        assert!((a0 - c(inv)).norm() < 1e-8);
        let a1 = half_fourier(&s, 1.0, 1.0).unwrap();
        let expect = C64::new(inv, 0.0) / C64::new(1.0, 1.0);
        assert!((a1 - expect).norm() < 1e-8, "{a1} vs {expect}");
        // zero phase reduces to the plain integral
        assert!((a0 - integrate(&s) * inv).norm() < 1e-15);
    }

    #[test]
    fn half_fourier_guard() {
        let g = Grid::new(0.0, 10.0, 11).unwrap();
        let s = ComplexSamples::from_fn(g, |_| c(1.0));
        assert!(half_fourier(&s, 3.0, 1.0).is_ok());
        assert!(matches!(
            half_fourier(&s, 3.2, 1.0),
            Err(ToaError::Resolution { .. })
        ));
    }

    #[test]
    fn principal_value_examples() {
        let g = Grid::new(-1.0, 1.0, 201).unwrap();
        let one = ComplexSamples::from_fn(g.clone(), |_| c(1.0));
        assert_eq!(principal_value(&one, 0.0).unwrap(), c(0.0));
        let lin = ComplexSamples::from_fn(g, c);
        assert!((principal_value(&lin, 0.0).unwrap() - c(2.0)).norm() < 1e-13);
        let g = Grid::new(-6.0, 6.0, 601).unwrap();
        let gauss = ComplexSamples::from_fn(g, |x| c((-x * x).exp()));
        assert!(principal_value(&gauss, 0.0).unwrap().norm() < 1e-14);
    }

    #[test]
    fn principal_value_against_dawson() {
        // P∫ e^{-x²}/(x - s) dx = -2√π D(s); D(1) = 0.538079506912768
        let s = 1.0;
        let g = Grid::new(s - 12.0, s + 12.0, 2401).unwrap();
        let f = ComplexSamples::from_fn(g, |x| c((-x * x).exp()));
        let pv = principal_value(&f, s).unwrap();
        let expect = -2.0 * PI.sqrt() * 0.538_079_506_912_768;
        assert!((pv.re - expect).abs() < 1e-9, "{pv} vs {expect}");
    }

    #[test]
    fn principal_value_rejects_asymmetric() {
        let g = Grid::new(-1.0, 2.0, 31).unwrap();
        let f = ComplexSamples::from_fn(g, c);
        assert!(matches!(principal_value(&f, 0.0), Err(ToaError::Precondition(_))));
        let g = Grid::new(-1.0, 1.0, 30).unwrap();
        let f = ComplexSamples::from_fn(g, c);
        assert!(matches!(principal_value(&f, 0.0), Err(ToaError::Precondition(_))));
    }

    #[test]
    fn fornberg_central_weights() {
        let w = fd_weights(&[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let expect = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_examples() {
        let g = Grid::new(0.0, 1.0, 101).unwrap();
        let sq = ComplexSamples::from_fn(g, |x| c(x * x));
        let d = derivative(&sq).unwrap();
        for (x, v) in d.grid().nodes().iter().zip(d.values()) {
            assert!((v - c(2.0 * x)).norm() < 1e-8);
        }
        let g = Grid::new(0.0, 2.0 * PI, 401).unwrap();
        let s = ComplexSamples::from_fn(g, |x| c(x.sin()));
        let d = derivative(&s).unwrap();
        for (x, v) in d.grid().nodes().iter().zip(d.values()) {
            assert!((v.re - x.cos()).abs() < 1e-8, "x={x}");
        }
        let g = Grid::new(0.0, 1.0, 5).unwrap();
        let k = ComplexSamples::from_fn(g, |_| c(3.0));
        assert!(derivative(&k).unwrap().values().iter().all(|v| v.norm() < 1e-12));
        let g = Grid::new(0.0, 1.0, 4).unwrap();
        assert!(derivative(&ComplexSamples::from_fn(g, c)).is_err());
    }

    #[test]
    fn cubic_interpolation_is_exact_for_cubics() {
        let g = Grid::new(0.0, 1.0, 11).unwrap();
        let f = |x: f64| c(1.0 + x - 3.0 * x * x + 0.5 * x * x * x);
        let v: Vec<C64> = g.nodes().iter().map(|&x| f(x)).collect();
        for x in [0.0, 0.03, 0.51, 0.77, 0.999, 1.0] {
            assert!((interpolate_cubic(&g, &v, x) - f(x)).norm() < 1e-13);
        }
        assert_eq!(interpolate_cubic(&g, &v, 1.5), c(0.0));
    }

    #[test]
    fn higher_order_interpolation_converges() {
        let g = Grid::new(0.0, 2.0, 101).unwrap();
        let v: Vec<C64> = g.nodes().iter().map(|&x| C64::from_polar(1.0, 10.0 * x)).collect();
        for x in [0.013, 0.5017, 1.333, 1.995] {
            let exact = C64::from_polar(1.0, 10.0 * x);
            let e4 = (interpolate_lagrange(&g, &v, x, 4) - exact).norm();
            let e8 = (interpolate_lagrange(&g, &v, x, 8) - exact).norm();
            assert!(e8 < 1e-7 && e8 < e4, "x={x}: {e4} {e8}");
        }
    }
}
