//! Model problems: domain geometry plus source, boundary data and exact solution.

use std::fmt;

use crate::error::{Error, Result};
use crate::real::Real;

/// Computational domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Geometry<T> {
    /// `[0,1]^2`.
    UnitSquare,
    /// `[-1,1]^2` with the quadrant `[0,1] x [-1,0]` removed; re-entrant corner at the origin.
    LShape,
    /// Unit disk with the sector of opening angle `omega` removed. The remaining
    /// domain spans polar angles `[0, 2*pi - omega]`.
    Pacman { omega: T },
}

/// Closed-form data for `-Δu = f` in Ω, `u = g` on ∂Ω.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Solution<T> {
    /// `u = sin(pi x) sin(pi y)`, `f = 2 pi^2 u`.
    SineProduct,
    /// `u = r^alpha sin(alpha phi)` with `phi` in `[0, 2 pi)`; harmonic, `f = 0`.
    CornerSingularity { alpha: T },
    /// `u = c0 + c1 x + c2 y + c3 x^2 + c4 x y + c5 y^2`, `f = -2 (c3 + c5)`.
    Quadratic { coeffs: [T; 6] },
    /// Constant source with homogeneous Dirichlet data and no known solution.
    ConstantSource { value: T },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProblemSpec<T> {
    pub geometry: Geometry<T>,
    pub solution: Solution<T>,
}

impl<T: Real> Geometry<T> {
    pub fn validate(&self) -> Result<()> {
        if let Geometry::Pacman { omega } = *self {
            if !(omega > T::zero() && omega < T::TAU()) {
                return Err(Error::InvalidDomain(format!(
                    "pacman opening angle must lie in (0, 2pi), got {omega}"
                )));
            }
        }
        Ok(())
    }

    /// Strength of the corner singularity of the harmonic model solution.
    pub fn corner_exponent(&self) -> Option<T> {
        match *self {
            Geometry::UnitSquare => None,
            Geometry::LShape => Some(T::lit(2.0) / T::lit(3.0)),
            Geometry::Pacman { omega } => Some(T::PI() / (T::TAU() - omega)),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Geometry::UnitSquare => "unit-square".into(),
            Geometry::LShape => "l-shape".into(),
            Geometry::Pacman { omega } => {
                format!("pacman-{:.4}pi", omega.as_f64() / std::f64::consts::PI)
            }
        }
    }
}

impl<T: Real> ProblemSpec<T> {
    pub fn new(geometry: Geometry<T>, solution: Solution<T>) -> Result<Self> {
        geometry.validate()?;
        if let Solution::CornerSingularity { alpha } = solution {
            if !(alpha > T::zero()) {
                return Err(Error::InvalidArgument(format!(
                    "corner exponent must be positive, got {alpha}"
                )));
            }
        }
        Ok(Self { geometry, solution })
    }

    /// Unit square with the smooth solution `sin(pi x) sin(pi y)`.
    pub fn unit_square_sine() -> Self {
        Self { geometry: Geometry::UnitSquare, solution: Solution::SineProduct }
    }

    /// L-shaped domain with `u = r^{2/3} sin(2 phi / 3)`.
    pub fn lshape() -> Self {
        Self {
            geometry: Geometry::LShape,
            solution: Solution::CornerSingularity { alpha: T::lit(2.0) / T::lit(3.0) },
        }
    }

    /// Pacman domain with `u = r^alpha sin(alpha phi)`, `alpha = pi / (2 pi - omega)`.
    pub fn pacman(omega: T) -> Result<Self> {
        let geometry = Geometry::Pacman { omega };
        geometry.validate()?;
        let alpha = geometry.corner_exponent().expect("pacman has a corner exponent");
        Ok(Self { geometry, solution: Solution::CornerSingularity { alpha } })
    }

    pub fn corner_exponent(&self) -> Option<T> {
        match self.solution {
            Solution::CornerSingularity { alpha } => Some(alpha),
            _ => None,
        }
    }

    pub fn has_exact_solution(&self) -> bool {
        !matches!(self.solution, Solution::ConstantSource { .. })
    }

    pub fn source(&self, x: T, y: T) -> T {
        match self.solution {
            Solution::SineProduct => {
                let pi = T::PI();
                T::lit(2.0) * pi * pi * (pi * x).sin() * (pi * y).sin()
            }
            Solution::CornerSingularity { .. } => T::zero(),
            Solution::Quadratic { coeffs } => -T::lit(2.0) * (coeffs[3] + coeffs[5]),
            Solution::ConstantSource { value } => value,
        }
    }

    /// `f` is identically zero.
    pub fn source_vanishes(&self) -> bool {
        match self.solution {
            Solution::SineProduct => false,
            Solution::CornerSingularity { .. } => true,
            Solution::Quadratic { coeffs } => coeffs[3] + coeffs[5] == T::zero(),
            Solution::ConstantSource { value } => value == T::zero(),
        }
    }

    pub fn dirichlet(&self, x: T, y: T) -> T {
        self.exact(x, y).unwrap_or_else(T::zero)
    }

    pub fn exact(&self, x: T, y: T) -> Option<T> {
        match self.solution {
            Solution::SineProduct => Some((T::PI() * x).sin() * (T::PI() * y).sin()),
            Solution::CornerSingularity { alpha } => {
                let r = x.hypot(y);
                Some(r.powf(alpha) * (alpha * polar_angle(x, y)).sin())
            }
            Solution::Quadratic { coeffs: c } => {
                Some(c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y)
            }
            Solution::ConstantSource { .. } => None,
        }
    }

    pub fn exact_gradient(&self, x: T, y: T) -> Option<[T; 2]> {
        match self.solution {
            Solution::SineProduct => {
                let pi = T::PI();
                let (sx, cx) = (pi * x).sin_cos();
                let (sy, cy) = (pi * y).sin_cos();
                Some([pi * cx * sy, pi * sx * cy])
            }
            Solution::CornerSingularity { alpha } => {
                let r = x.hypot(y);
                let phi = polar_angle(x, y);
                let scale = alpha * r.powf(alpha - T::one());
                let (s, c) = ((alpha - T::one()) * phi).sin_cos();
                Some([scale * s, scale * c])
            }
            Solution::Quadratic { coeffs: c } => Some([
                c[1] + T::lit(2.0) * c[3] * x + c[4] * y,
                c[2] + c[4] * x + T::lit(2.0) * c[5] * y,
            ]),
            Solution::ConstantSource { .. } => None,
        }
    }

    /// Largest sampled defect of the exact solution: `|-Δu - f|` at interior
    /// points (five-point differences with step `h`) and `|u - g|` is zero by
    /// construction of [`ProblemSpec::dirichlet`].
    pub fn pde_residual(&self, points: &[[T; 2]], h: T) -> Option<T> {
        self.exact(T::zero(), T::zero())?;
        let mut worst = T::zero();
        for &[x, y] in points {
            let u = |a: T, b: T| self.exact(a, b).expect("exact solution present");
            let lap = (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h)
                - T::lit(4.0) * u(x, y))
                / (h * h);
            worst = worst.max((-lap - self.source(x, y)).abs());
        }
        Some(worst)
    }

    pub fn name(&self) -> String {
        let solution = match self.solution {
            Solution::SineProduct => "sine".to_string(),
            Solution::CornerSingularity { .. } => "corner".to_string(),
            Solution::Quadratic { .. } => "quadratic".to_string(),
            Solution::ConstantSource { .. } => "source".to_string(),
        };
        format!("{}/{}", self.geometry.name(), solution)
    }
}

impl<T: Real> fmt::Display for ProblemSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Polar angle in `[0, 2 pi)`.
pub fn polar_angle<T: Real>(x: T, y: T) -> T {
    let phi = y.atan2(x);
    if phi < T::zero() {
        phi + T::TAU()
    } else {
        phi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pacman_rejects_out_of_range_angles() {
        assert!(ProblemSpec::<f64>::pacman(0.0).is_err());
        assert!(ProblemSpec::<f64>::pacman(2.0 * PI).is_err());
        assert!(ProblemSpec::<f64>::pacman(-1.0).is_err());
        assert!(ProblemSpec::<f64>::pacman(0.5 * PI).is_ok());
    }

    #[test]
    fn corner_exponents() {
        let spec = ProblemSpec::<f64>::pacman(0.5 * PI).unwrap();
        assert!((spec.corner_exponent().unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let spec = ProblemSpec::<f64>::pacman(1.5 * PI).unwrap();
        assert!((spec.corner_exponent().unwrap() - 2.0).abs() < 1e-15);
        let lshape = ProblemSpec::<f64>::lshape();
        assert!((lshape.corner_exponent().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn corner_solution_vanishes_on_straight_edges() {
        let spec = ProblemSpec::<f64>::lshape();
        assert_eq!(spec.exact(0.5, 0.0).unwrap(), 0.0);
        assert!(spec.exact(0.0, -0.5).unwrap().abs() < 1e-15);
        let spec = ProblemSpec::<f64>::pacman(0.3 * PI).unwrap();
        let edge = 2.0 * PI - 0.3 * PI;
        let (s, c) = edge.sin_cos();
        assert!(spec.exact(0.7 * c, 0.7 * s).unwrap().abs() < 1e-14);
    }

    #[test]
    fn exact_solutions_satisfy_the_pde() {
        let pts: Vec<[f64; 2]> = vec![[0.3, 0.4], [0.7, 0.2], [0.5, 0.5]];
        let sq = ProblemSpec::unit_square_sine();
        assert!(sq.pde_residual(&pts, 1e-4).unwrap() < 1e-5);

        let lpts: Vec<[f64; 2]> = vec![[-0.5, 0.5], [0.5, 0.3], [-0.3, -0.6]];
        assert!(ProblemSpec::lshape().pde_residual(&lpts, 1e-4).unwrap() < 1e-5);
        for omega in [0.1, 0.5, 0.9, 1.5] {
            let spec = ProblemSpec::pacman(omega * PI).unwrap();
            assert!(spec.pde_residual(&[[0.3, 0.4], [-0.2, 0.5]], 1e-4).unwrap() < 1e-5);
        }
        let quad = ProblemSpec::new(
            Geometry::UnitSquare,
            Solution::Quadratic { coeffs: [1.0, 2.0, -1.0, 0.5, 0.25, 1.5] },
        )
        .unwrap();
        assert!(quad.pde_residual(&pts, 1e-3).unwrap() < 1e-6);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let specs = [
            ProblemSpec::<f64>::unit_square_sine(),
            ProblemSpec::lshape(),
            ProblemSpec::pacman(0.7 * PI).unwrap(),
        ];
        let h = 1e-6;
        for spec in specs {
            for [x, y] in [[0.31, 0.42], [-0.4, 0.2], [0.6, 0.1]] {
                let g = spec.exact_gradient(x, y).unwrap();
                let u = |a, b| spec.exact(a, b).unwrap();
                let fx = (u(x + h, y) - u(x - h, y)) / (2.0 * h);
                let fy = (u(x, y + h) - u(x, y - h)) / (2.0 * h);
                assert!((g[0] - fx).abs() < 1e-7, "{spec}: {g:?} vs {fx}");
                assert!((g[1] - fy).abs() < 1e-7, "{spec}: {g:?} vs {fy}");
            }
        }
    }

    #[test]
    fn constant_source_has_no_exact_solution() {
        let spec = ProblemSpec::new(Geometry::UnitSquare, Solution::ConstantSource { value: 1.0 })
            .unwrap();
        assert!(!spec.has_exact_solution());
        assert_eq!(spec.dirichlet(0.2, 0.0), 0.0);
        assert_eq!(spec.source(0.3, 0.3), 1.0);
    }
}
