//! Qubit-pointer weak measurement: impulsive `g·Ĝ⊗Â` coupling, post-selection,
//! and inversion of the pointer's spin expectations back to a complex weak value.
//!
//! The forward model is exact: the joint unitary is exponentiated in full, so
//! every order in `g` reaches the pointer. The inversion is first order, which is
//! what produces the weak-to-strong bias at larger `g`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WvcfError};
use crate::linops::{expm, kron, pauli_x, pauli_y, pauli_z, weak_value, Complex64, Operator, StateVector, I, ZERO};
use crate::pqho::{GroundState, PqhoModel, PqhoSystem};

/// `⟨α|α⟩` below this is treated as a failed post-selection.
pub const POST_SELECTION_NORM_MIN: f64 = 1e-20;

/// Conditioning margins required of the initial pointer by [`invert_readout`].
pub const SIGMA_Y_MARGIN: f64 = 1e-9;
pub const SIGMA_Z_MIN: f64 = 1e-9;

/// `cos(θ₀/2)|↑⟩ + sin(θ₀/2)e^{iφ}|↓⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointerState {
    pub theta0: f64,
    pub phi: f64,
    state: StateVector,
}

impl Default for PointerState {
    /// `θ₀ = π/4, φ = 0`: `⟨σ_z⟩ = ⟨σ_x⟩ = √2/2`, well away from both inversion singularities.
    fn default() -> Self {
        prepare_pointer(std::f64::consts::FRAC_PI_4, 0.0)
    }
}

impl PointerState {
    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn expectations(&self) -> SpinExpectations {
        SpinExpectations::of_normalized(&self.state)
    }
}

pub fn prepare_pointer(theta0: f64, phi: f64) -> PointerState {
    let (s, c) = (theta0 / 2.0).sin_cos();
    let state = StateVector::new(vec![Complex64::new(c, 0.0), Complex64::from_polar(s, phi)]);
    PointerState { theta0, phi, state }
}

/// Post-selected pointer map `k[a,b] = ⟨post⊗a| e^{−ig·Ĝ⊗Â} |pre⊗b⟩`.
#[derive(Clone, Debug)]
pub struct PointerKernel {
    pub k: Operator,
    pub g: f64,
    /// `⟨post|pre⟩`.
    pub overlap: Complex64,
}

impl PointerKernel {
    /// Unnormalized post-selected pointer `|α⟩ = k|φ⟩`.
    pub fn apply(&self, pointer: &PointerState) -> Result<StateVector> {
        self.k.apply(pointer.state())
    }
}

pub fn joint_coupling_kernel(
    gop: &Operator,
    pre: &StateVector,
    post: &StateVector,
    g: f64,
    apparatus: &Operator,
) -> Result<PointerKernel> {
    let n = gop.dim();
    if pre.dim() != n {
        return Err(WvcfError::DimensionMismatch { expected: n, found: pre.dim() });
    }
    if post.dim() != n {
        return Err(WvcfError::DimensionMismatch { expected: n, found: post.dim() });
    }
    if apparatus.dim() != 2 {
        return Err(WvcfError::DimensionMismatch { expected: 2, found: apparatus.dim() });
    }
    let overlap = post.inner(pre);
    let u = expm(&kron(gop, apparatus)?, -I * g)?;
    let (pre, post) = (pre.amplitudes(), post.amplitudes());
    let mut k = Operator::zeros(2);
    for a in 0..2 {
        for b in 0..2 {
            let mut acc = ZERO;
            for (i, pi) in post.iter().enumerate() {
                if *pi == ZERO {
                    continue;
                }
                let mut row = ZERO;
                for (j, pj) in pre.iter().enumerate() {
                    row += u.get(2 * i + a, 2 * j + b) * pj;
                }
                acc += pi.conj() * row;
            }
            k.set(a, b, acc);
        }
    }
    if !k.is_finite() {
        return Err(WvcfError::Numerical("non-finite pointer kernel".into()));
    }
    Ok(PointerKernel { k, g, overlap })
}

/// Normalized Bloch components of a pointer state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinExpectations {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl SpinExpectations {
    /// Requires `⟨α|α⟩ > 0`; callers screen the post-selection norm first.
    fn of_normalized(alpha: &StateVector) -> Self {
        let norm = alpha.norm_sqr();
        let e = |op: Operator| op.sandwich(alpha, alpha).map(|z| z.re / norm).unwrap_or(f64::NAN);
        SpinExpectations { sx: e(pauli_x()), sy: e(pauli_y()), sz: e(pauli_z()) }
    }

    pub fn of(alpha: &StateVector) -> Result<Self> {
        if alpha.dim() != 2 {
            return Err(WvcfError::DimensionMismatch { expected: 2, found: alpha.dim() });
        }
        let norm = alpha.norm_sqr();
        if !(norm > POST_SELECTION_NORM_MIN) {
            return Err(WvcfError::PostSelection { overlap: norm.sqrt() });
        }
        Ok(SpinExpectations::of_normalized(alpha))
    }

    pub fn bloch_length(&self) -> f64 {
        (self.sx * self.sx + self.sy * self.sy + self.sz * self.sz).sqrt()
    }
}

pub fn final_spin_expectations(kernel: &PointerKernel, pointer: &PointerState) -> Result<SpinExpectations> {
    SpinExpectations::of(&kernel.apply(pointer)?)
}

/// First-order pointer response to a weak value `G_w = a + ib` through coupling `Â`:
/// `⟨M⟩_i + iga⟨[Â,M]⟩_i + gb(⟨{Â,M}⟩_i − 2⟨M⟩_i⟨Â⟩_i)`.
pub fn first_order_expectation(
    m: &Operator,
    apparatus: &Operator,
    gw: Complex64,
    g: f64,
    pointer: &PointerState,
) -> Result<f64> {
    let phi = pointer.state();
    let ev = |op: &Operator| op.sandwich(phi, phi);
    let am = apparatus.matmul(m);
    let ma = m.matmul(apparatus);
    let m_i = ev(m)?.re;
    let a_i = ev(apparatus)?.re;
    let comm = ev(&(&am - &ma))?;
    let anti = ev(&(&am + &ma))?.re;
    Ok(m_i + (I * g * gw.re * comm).re + g * gw.im * (anti - 2.0 * m_i * a_i))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateRoute {
    Inversion,
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakValueEstimate {
    pub value: Complex64,
    pub g: f64,
    pub route: EstimateRoute,
}

/// Solves the first-order `σ_y`-coupling response for `G_w`. Denominators only
/// involve the initial pointer, so a degenerate final state does not make the
/// system singular.
pub fn invert_readout(initial: &SpinExpectations, fin: &SpinExpectations, g: f64) -> Result<WeakValueEstimate> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(WvcfError::Domain(format!("coupling must be positive, got {g}")));
    }
    if !(initial.sy.abs() < 1.0 - SIGMA_Y_MARGIN) {
        return Err(WvcfError::IllConditionedPointer {
            component: format!("|<sigma_y>_i| = {} is 1", initial.sy.abs()),
        });
    }
    if !(initial.sz.abs() > SIGMA_Z_MIN) {
        return Err(WvcfError::IllConditionedPointer { component: format!("<sigma_z>_i = {} vanishes", initial.sz) });
    }
    let im = (fin.sy - initial.sy) / (2.0 * g * (1.0 - initial.sy * initial.sy));
    let re = (initial.sx * initial.sy / initial.sz) * im + (fin.sx - initial.sx) / (2.0 * g * initial.sz);
    let value = Complex64::new(re, im);
    if !(re.is_finite() && im.is_finite()) {
        return Err(WvcfError::Numerical("non-finite weak value estimate".into()));
    }
    Ok(WeakValueEstimate { value, g, route: EstimateRoute::Inversion })
}

/// Full infinite-copy readout of one operator.
#[derive(Clone, Debug)]
pub struct AavReadout {
    pub kernel: PointerKernel,
    pub initial: SpinExpectations,
    pub fin: SpinExpectations,
    pub estimate: WeakValueEstimate,
}

/// Couples `gop` to `σ_y`, post-selects and inverts.
pub fn aav_readout(
    gop: &Operator,
    pre: &StateVector,
    post: &StateVector,
    g: f64,
    pointer: &PointerState,
) -> Result<AavReadout> {
    let kernel = joint_coupling_kernel(gop, pre, post, g, &pauli_y())?;
    let initial = pointer.expectations();
    let fin = final_spin_expectations(&kernel, pointer)?;
    let estimate = invert_readout(&initial, &fin, g)?;
    Ok(AavReadout { kernel, initial, fin, estimate })
}

#[derive(Clone, Copy, Debug)]
pub struct CurvePoint {
    pub t: f64,
    pub estimate: WeakValueEstimate,
    pub truth: Complex64,
}

/// Readout of `G(t) = ⟨x(t)x(0)⟩` with ground-state pre- and post-selection over a time grid.
pub fn wvcf_curve(
    model: &PqhoModel,
    ground: &GroundState,
    t_grid: &[f64],
    g: f64,
    pointer: &PointerState,
) -> Result<Vec<CurvePoint>> {
    let system = PqhoSystem::new(model)?;
    wvcf_curve_with(&system, ground, t_grid, g, pointer)
}

/// [`wvcf_curve`] reusing a prepared system.
pub fn wvcf_curve_with(
    system: &PqhoSystem,
    ground: &GroundState,
    t_grid: &[f64],
    g: f64,
    pointer: &PointerState,
) -> Result<Vec<CurvePoint>> {
    if ground.state.dim() != system.model.cutoff {
        return Err(WvcfError::DimensionMismatch { expected: system.model.cutoff, found: ground.state.dim() });
    }
    let frame = system.excitations()?;
    let omega = &ground.state;
    t_grid
        .par_iter()
        .map(|&t| {
            let gop = frame.at(t);
            let truth = weak_value(&gop, omega, omega)?;
            let estimate = aav_readout(&gop, omega, omega, g, pointer)?.estimate;
            Ok(CurvePoint { t, estimate, truth })
        })
        .collect()
}
