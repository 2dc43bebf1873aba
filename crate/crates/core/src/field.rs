//! Complex fields on a [`Grid`], their Fourier coefficients, multipliers and norms.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{FnlsError, Result};
use crate::grid::Grid;
use crate::params::PhysicsParams;

/// Mass fraction outside `|x| > L/2` above which a field is considered affected by the box.
pub const PERIODIZATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

/// Coefficients `c_k` such that `u(x) = sum_k c_k exp(i xi_k . x)`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Symbol {
    /// `|xi|^(2 beta)`; `beta = s/2` gives `(-Δ)^(s/2)`.
    FracLaplacian { beta: f64 },
    /// `1/(|xi|^2 + m)`.
    Resolvent { m: f64 },
    /// `i xi_axis` (axis counted from zero).
    Gradient { axis: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    Lp(f64),
    Hdot(f64),
    H(f64),
}

impl Symbol {
    fn validate(&self, grid: &Grid) -> Result<()> {
        match *self {
            Symbol::FracLaplacian { beta } if !(beta >= 0.0) => Err(FnlsError::domain(format!(
                "fractional power must be >= 0, got {beta}"
            ))),
            Symbol::Resolvent { m } if !(m > 0.0) => Err(FnlsError::domain(format!(
                "resolvent parameter must be > 0, got {m}"
            ))),
            Symbol::Gradient { axis } if axis >= grid.dim() => Err(FnlsError::domain(format!(
                "gradient axis {axis} out of range for d = {}",
                grid.dim()
            ))),
            _ => Ok(()),
        }
    }

    fn value(&self, grid: &Grid, flat: usize) -> Complex64 {
        match *self {
            Symbol::FracLaplacian { beta } => Complex64::new(grid.xi_sq()[flat].powf(beta), 0.0),
            Symbol::Resolvent { m } => Complex64::new(1.0 / (grid.xi_sq()[flat] + m), 0.0),
            Symbol::Gradient { axis } => Complex64::new(0.0, grid.xi_component(flat, axis)),
        }
    }
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(FnlsError::structural(format!(
                "field has {} values, grid expects {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.len()];
        Field { grid, values }
    }

    /// Samples `f(x)` at every grid point; `x` has length `d`.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|flat| f(&grid.position(flat)[..dim]))
            .collect();
        Field { grid, values }
    }

    pub fn from_real(grid: Arc<Grid>, values: &[f64]) -> Result<Self> {
        Field::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// `amplitude * exp(-|x - center|^2 / width^2)`.
    pub fn gaussian(grid: Arc<Grid>, amplitude: f64, width: f64, center: &[f64]) -> Self {
        Field::from_fn(grid, |x| {
            let r2: f64 = x
                .iter()
                .enumerate()
                .map(|(i, xi)| (xi - center.get(i).copied().unwrap_or(0.0)).powi(2))
                .sum();
            Complex64::new(amplitude * (-r2 / (width * width)).exp(), 0.0)
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn to_spectral(&self) -> Spectrum {
        let mut coeffs = self.values.clone();
        self.grid.forward_in_place(&mut coeffs);
        Spectrum {
            grid: Arc::clone(&self.grid),
            coeffs,
        }
    }

    pub fn apply_multiplier(&self, symbol: Symbol) -> Result<Field> {
        Ok(self.to_spectral().apply(symbol)?.to_physical())
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| v * c)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: Complex64, other: &Field, b: Complex64) -> Result<Field> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&u, &v)| a * u + b * v)
            .collect();
        Ok(Field {
            grid: Arc::clone(&self.grid),
            values,
        })
    }

    /// `∫ conj(self) other dx`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let sum: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| u.conj() * v)
            .sum();
        Ok(sum * self.grid.cell_volume())
    }

    /// `∫ w |u|^2 dx` for a real weight sampled on the grid.
    pub fn weighted_mass(&self, weight: &[f64]) -> f64 {
        let sum: f64 = self
            .values
            .iter()
            .zip(weight)
            .map(|(u, w)| w * u.norm_sqr())
            .sum();
        sum * self.grid.cell_volume()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().map(|u| u.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// `∫ |u|^p dx`.
    pub fn lp_integral(&self, p: f64) -> f64 {
        self.values.iter().map(|u| u.norm().powf(p)).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        match kind {
            NormKind::Lp(p) => {
                if !(p >= 1.0) {
                    return Err(FnlsError::domain(format!("L^p needs p >= 1, got {p}")));
                }
                if p.is_infinite() {
                    Ok(self.values.iter().map(|u| u.norm()).fold(0.0, f64::max))
                } else {
                    Ok(self.lp_integral(p).powf(1.0 / p))
                }
            }
            NormKind::Hdot(nu) | NormKind::H(nu) if !(nu >= 0.0) => Err(FnlsError::domain(
                format!("Sobolev index must be >= 0, got {nu}"),
            )),
            NormKind::Hdot(nu) => Ok(self.to_spectral().hdot_sq(nu).sqrt()),
            NormKind::H(nu) => Ok(self.to_spectral().h_sq(nu).sqrt()),
        }
    }

    /// Mass in `|x| >= radius` divided by total mass (zero for the zero field).
    pub fn exterior_fraction(&self, radius: f64) -> f64 {
        let total = self.mass();
        if total == 0.0 {
            return 0.0;
        }
        let outside: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(flat, _)| self.grid.radius(*flat) >= radius)
            .map(|(_, u)| u.norm_sqr())
            .sum();
        outside * self.grid.cell_volume() / total
    }

    /// True when mass beyond `|x| > L/2` exceeds [`PERIODIZATION_TOL`] of the total.
    pub fn periodization_flag(&self) -> bool {
        self.exterior_fraction(self.grid.half_length() / 2.0) > PERIODIZATION_TOL
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub(crate) fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid.same_shape(&other.grid) {
            Ok(())
        } else {
            Err(FnlsError::structural("fields live on different grids"))
        }
    }
}

impl Spectrum {
    pub fn new(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(FnlsError::structural(format!(
                "spectrum has {} coefficients, grid expects {}",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(Spectrum { grid, coeffs })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn to_physical(&self) -> Field {
        let mut values = self.coeffs.clone();
        self.grid.inverse_in_place(&mut values);
        Field {
            grid: Arc::clone(&self.grid),
            values,
        }
    }

    pub fn apply(&self, symbol: Symbol) -> Result<Spectrum> {
        symbol.validate(&self.grid)?;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(flat, &c)| c * symbol.value(&self.grid, flat))
            .collect();
        Ok(Spectrum {
            grid: Arc::clone(&self.grid),
            coeffs,
        })
    }

    /// Multiplies every coefficient by a real function of `|xi|^2`.
    pub fn map_radial(&self, f: impl Fn(f64) -> f64) -> Spectrum {
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.grid.xi_sq())
            .map(|(&c, &k2)| c * f(k2))
            .collect();
        Spectrum {
            grid: Arc::clone(&self.grid),
            coeffs,
        }
    }

    /// Plancherel: `∫|u|^2 = (2L)^d sum |c_k|^2`.
    pub fn l2_sq(&self) -> f64 {
        self.weighted_sum(|_| 1.0)
    }

    /// `‖|xi|^nu c‖^2`, the squared homogeneous Sobolev norm.
    pub fn hdot_sq(&self, nu: f64) -> f64 {
        if nu == 0.0 {
            return self.l2_sq();
        }
        self.weighted_sum(|k2| k2.powf(nu))
    }

    pub fn h_sq(&self, nu: f64) -> f64 {
        self.weighted_sum(|k2| (1.0 + k2).powf(nu))
    }

    fn weighted_sum(&self, w: impl Fn(f64) -> f64) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .zip(self.grid.xi_sq())
            .map(|(c, &k2)| w(k2) * c.norm_sqr())
            .sum();
        sum * self.grid.volume()
    }

    /// Fraction of `sum |c_k|^2` carried by modes with some `|xi_axis| > cutoff`.
    pub fn tail_fraction(&self, cutoff: f64) -> f64 {
        let total: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let dim = self.grid.dim();
        let tail: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(flat, _)| (0..dim).any(|a| self.grid.xi_component(*flat, a).abs() > cutoff))
            .map(|(_, c)| c.norm_sqr())
            .sum();
        tail / total
    }

    /// Trigonometric interpolation onto a finer grid with the same box.
    pub fn interpolate_onto(&self, fine: &Arc<Grid>) -> Result<Field> {
        let coarse = &self.grid;
        let n = coarse.points_per_dim();
        let nf = fine.points_per_dim();
        if fine.dim() != coarse.dim() || fine.half_length() != coarse.half_length() || nf < n {
            return Err(FnlsError::structural(
                "interpolation target must share dimension and box and be at least as fine",
            ));
        }
        let dim = coarse.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); fine.len()];
        for (flat, &c) in self.coeffs.iter().enumerate() {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let idx = coarse.multi_index(flat);
            // the Nyquist mode is split evenly between +n/2 and -n/2 when it becomes resolvable
            let mut targets: Vec<([usize; 3], f64)> = vec![([0; 3], 1.0)];
            for axis in 0..dim {
                let i = idx[axis];
                let choices: Vec<(usize, f64)> = if i == n / 2 && nf > n {
                    vec![(n / 2, 0.5), (nf - n / 2, 0.5)]
                } else if i < n / 2 {
                    vec![(i, 1.0)]
                } else {
                    vec![(nf - (n - i), 1.0)]
                };
                targets = targets
                    .iter()
                    .flat_map(|(t, w)| {
                        choices.iter().map(move |&(j, cw)| {
                            let mut t2 = *t;
                            t2[axis] = j;
                            (t2, w * cw)
                        })
                    })
                    .collect();
            }
            for (t, w) in targets {
                out[fine.flat_index(t)] += c * w;
            }
        }
        fine.inverse_in_place(&mut out);
        Field::new(Arc::clone(fine), out)
    }
}

/// Result of a dyadic rescale, with a flag for support overflow or under-resolution.
#[derive(Debug, Clone)]
pub struct Rescaled {
    pub field: Field,
    pub accuracy_warning: bool,
}

/// `x -> lambda^(2s/alpha) u(lambda x)` for `lambda = 2^k`.
pub fn rescale(field: &Field, lambda: f64, params: &PhysicsParams) -> Result<Rescaled> {
    if !(lambda > 0.0) {
        return Err(FnlsError::domain(format!("lambda must be positive, got {lambda}")));
    }
    let k = lambda.log2();
    if (k - k.round()).abs() > 1e-12 {
        return Err(FnlsError::Unsupported(format!(
            "only dyadic rescaling is supported, got lambda = {lambda}"
        )));
    }
    let k = k.round() as i32;
    let grid = field.grid();
    let amplitude = lambda.powf(2.0 * params.s / params.alpha);
    let n = grid.points_per_dim();
    let dim = grid.dim();

    let (values, mut warn) = if k == 0 {
        (field.values().to_vec(), false)
    } else if k > 0 {
        let f = 1usize << k;
        let offset = (f - 1) * n / 2;
        let values = (0..grid.len())
            .map(|flat| {
                let idx = grid.multi_index(flat);
                let mut src = [0usize; 3];
                for axis in 0..dim {
                    let j = f * idx[axis];
                    if j < offset || j - offset >= n {
                        return Complex64::new(0.0, 0.0);
                    }
                    src[axis] = j - offset;
                }
                field.values()[grid.flat_index(src)]
            })
            .collect();
        let cutoff = grid.nyquist() / f as f64;
        let unresolved = field.to_spectral().tail_fraction(cutoff) > PERIODIZATION_TOL;
        (values, unresolved)
    } else {
        let f = 1usize << (-k);
        let fine = Grid::new(dim, n * f, grid.half_length())?;
        let dense = field.to_spectral().interpolate_onto(&fine)?;
        let offset = (f - 1) * n / 2;
        let values = (0..grid.len())
            .map(|flat| {
                let mut idx = grid.multi_index(flat);
                for i in idx.iter_mut().take(dim) {
                    *i += offset;
                }
                dense.values()[fine.flat_index(idx)]
            })
            .collect();
        (values, false)
    };

    let out = Field::new(Arc::clone(grid), values)?.scaled(amplitude);
    warn |= out.periodization_flag();
    Ok(Rescaled {
        field: out,
        accuracy_warning: warn,
    })
}
