//! Lie-Poisson bracket on Hermitian matrices, finite-difference gradients and
//! Hamiltonian flows.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gz::{gz_actions, gz_angles, wrap_angle, H0_THRESHOLD};
use crate::matrix::{ComplexMatrix, HermitianMatrix, C64};

/// Global sign of the bracket, chosen so that {lambda_1^(1), psi_1^(1)} = +1
/// for n = 2.
pub const BRACKET_SIGN: f64 = 1.0;

pub const DEFAULT_STEP: f64 = 1e-5;

type Eval = dyn Fn(&HermitianMatrix) -> Result<f64> + Send + Sync;

/// A real function on Hermitian matrices. Periodic fields are angle valued and
/// are differenced modulo 2pi.
#[derive(Clone)]
pub struct ScalarField {
    pub label: String,
    pub periodic: bool,
    f: Arc<Eval>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField").field("label", &self.label).field("periodic", &self.periodic).finish()
    }
}

impl ScalarField {
    pub fn new(label: impl Into<String>, periodic: bool, f: impl Fn(&HermitianMatrix) -> Result<f64> + Send + Sync + 'static) -> Self {
        Self { label: label.into(), periodic, f: Arc::new(f) }
    }

    pub fn eval(&self, a: &HermitianMatrix) -> Result<f64> {
        let v = (self.f)(a)?;
        if !v.is_finite() {
            return Err(Error::Evaluation(format!("{} is not finite", self.label)));
        }
        Ok(v)
    }

    pub fn trace() -> Self {
        Self::new("tr", false, |a| Ok(a.trace()))
    }

    /// lambda_i^(k).
    pub fn action(i: usize, k: usize) -> Self {
        Self::new(format!("lambda_{i}^({k})"), false, move |a| Ok(gz_actions(a)?.get(i, k)))
    }

    /// psi_i^(k).
    pub fn angle(i: usize, k: usize) -> Self {
        Self::new(format!("psi_{i}^({k})"), true, move |a| Ok(gz_angles(a)?.get(i, k)))
    }

    pub fn product(&self, other: &Self) -> Self {
        let (f, g) = (self.clone(), other.clone());
        Self::new(format!("{}*{}", self.label, other.label), false, move |a| Ok(f.eval(a)? * g.eval(a)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BracketSample {
    pub point: HermitianMatrix,
    pub value: f64,
    pub step: f64,
}

fn basis_direction(n: usize, i: usize, j: usize, imaginary: bool) -> HermitianMatrix {
    let m = ComplexMatrix::from_fn(n, |r, c| match (r == i && c == j, r == j && c == i) {
        (true, _) if i == j => C64::new(1.0, 0.0),
        (true, _) if imaginary => C64::new(0.0, 1.0),
        (true, _) => C64::new(1.0, 0.0),
        (_, true) if imaginary => C64::new(0.0, -1.0),
        (_, true) => C64::new(1.0, 0.0),
        _ => C64::new(0.0, 0.0),
    });
    HermitianMatrix::from_upper(&m)
}

fn directional(f: &ScalarField, a: &HermitianMatrix, dir: &HermitianMatrix, h: f64) -> Result<f64> {
    let plus = f.eval(&a.add(&dir.scaled(h)))?;
    let minus = f.eval(&a.add(&dir.scaled(-h)))?;
    let diff = if f.periodic { wrap_angle(plus - minus) } else { plus - minus };
    Ok(diff / (2.0 * h))
}

/// Central-difference gradient with respect to the trace pairing, without the
/// step-halving check.
pub fn gradient_unchecked(f: &ScalarField, a: &HermitianMatrix, h: f64) -> Result<HermitianMatrix> {
    let n = a.n();
    let mut g = ComplexMatrix::zeros(n);
    for i in 0..n {
        g[(i, i)] = C64::new(directional(f, a, &basis_direction(n, i, i, false), h)?, 0.0);
        for j in i + 1..n {
            let re = directional(f, a, &basis_direction(n, i, j, false), h)?;
            let im = directional(f, a, &basis_direction(n, i, j, true), h)?;
            g[(i, j)] = C64::new(re, im) / 2.0;
        }
    }
    Ok(HermitianMatrix::from_upper(&g))
}

/// Gradient of `f` at `a`: tr(B grad f) is the derivative of f along B. The
/// estimate at `step` must agree with the one at `step / 2` within
/// 1e-4 (1 + |entry|).
pub fn gradient(f: &ScalarField, a: &HermitianMatrix, step: f64) -> Result<HermitianMatrix> {
    if !(1e-7..=1e-3).contains(&step) {
        return Err(Error::Argument(format!("finite-difference step {step:e} outside [1e-7, 1e-3]")));
    }
    let g = gradient_unchecked(f, a, step)?;
    let half = gradient_unchecked(f, a, step / 2.0)?;
    let (gm, hm) = (g.as_matrix(), half.as_matrix());
    let n = a.n();
    for i in 0..n {
        for j in 0..n {
            let d = (gm[(i, j)] - hm[(i, j)]).norm();
            if d > 1e-4 * (1.0 + gm[(i, j)].norm()) {
                return Err(Error::StepSize(format!("{} entry ({i},{j}) changes by {d:e} when the step is halved", f.label)));
            }
        }
    }
    Ok(g)
}

fn commutator(x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
    x.mul(y).sub(&y.mul(x))
}

fn pairing(a: &HermitianMatrix, gf: &HermitianMatrix, gg: &HermitianMatrix) -> f64 {
    let c = commutator(gf.as_matrix(), gg.as_matrix());
    let p = a.as_matrix().mul(&c);
    let tr: C64 = (0..a.n()).map(|i| p[(i, i)]).sum();
    BRACKET_SIGN * (C64::new(0.0, 1.0) * tr).re
}

/// {f, g}(A) = s tr(A i [grad f, grad g]).
pub fn bracket(f: &ScalarField, g: &ScalarField, a: &HermitianMatrix, step: f64) -> Result<f64> {
    Ok(pairing(a, &gradient(f, a, step)?, &gradient(g, a, step)?))
}

pub fn bracket_sample(f: &ScalarField, g: &ScalarField, a: &HermitianMatrix, step: f64) -> Result<BracketSample> {
    Ok(BracketSample { point: a.clone(), value: bracket(f, g, a, step)?, step })
}

/// Brackets of every pair in `fields`, from one gradient per field.
pub fn bracket_matrix(fields: &[ScalarField], a: &HermitianMatrix, step: f64) -> Result<Vec<Vec<f64>>> {
    let grads = fields.iter().map(|f| gradient(f, a, step)).collect::<Result<Vec<_>>>()?;
    Ok(grads.iter().map(|gf| grads.iter().map(|gg| pairing(a, gf, gg)).collect()).collect())
}

fn velocity(f: &ScalarField, a: &HermitianMatrix) -> Result<ComplexMatrix> {
    let g = gradient_unchecked(f, a, DEFAULT_STEP)?;
    Ok(commutator(a.as_matrix(), g.as_matrix()).scale(C64::new(0.0, BRACKET_SIGN)))
}

fn axpy(a: &HermitianMatrix, k: &ComplexMatrix, h: f64) -> HermitianMatrix {
    HermitianMatrix::from_upper(&ComplexMatrix::from_fn(a.n(), |i, j| a[(i, j)] + k[(i, j)] * h))
}

/// RK4 integration of dA/dt = s i [A, grad f], so that dg/dt = {f, g} along
/// the flow.
pub fn hamiltonian_flow(f: &ScalarField, a: &HermitianMatrix, time: f64, steps: usize) -> Result<HermitianMatrix> {
    if (steps as f64) < 10.0 * time.abs() || steps == 0 {
        return Err(Error::Argument(format!("{steps} steps are too few for time {time}")));
    }
    let h = time / steps as f64;
    let mut x = a.clone();
    for s in 0..steps {
        let k1 = velocity(f, &x)?;
        let k2 = velocity(f, &axpy(&x, &k1, h / 2.0))?;
        let k3 = velocity(f, &axpy(&x, &k2, h / 2.0))?;
        let k4 = velocity(f, &axpy(&x, &k3, h))?;
        let k = ComplexMatrix::from_fn(a.n(), |i, j| (k1[(i, j)] + k2[(i, j)] * 2.0 + k3[(i, j)] * 2.0 + k4[(i, j)]) / 6.0);
        x = axpy(&x, &k, h);
        if x.n() > 1 {
            let gap = gz_actions(&x)?.gap();
            if gap < H0_THRESHOLD {
                return Err(Error::FlowDegenerate { time: h * (s + 1) as f64, gap });
            }
        }
    }
    Ok(x)
}
