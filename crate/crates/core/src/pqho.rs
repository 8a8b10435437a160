//! Perturbed harmonic oscillator `H = p²/2m + mω²x²/2 + λx⁴` in a truncated Fock basis.
//!
//! Position and momentum are truncated first and every other operator (`x²`,
//! `H`, `x(t)x(0)`) is formed from products of the truncated factors. This
//! ordering matters: it is what makes `⟨x²⟩` of a fixed state drop when the
//! cutoff removes the level just above the state's support.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WvcfError};
use crate::linops::{
    eigh, weak_value, Complex64, HeisenbergFrame, Operator, SpectralDecomposition, StateVector, I, ZERO,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PqhoModel {
    pub mass: f64,
    pub omega: f64,
    pub lambda: f64,
    pub cutoff: usize,
}

impl Default for PqhoModel {
    fn default() -> Self {
        PqhoModel { mass: 1.0, omega: 1.0, lambda: 0.1, cutoff: 6 }
    }
}

impl PqhoModel {
    pub fn new(mass: f64, omega: f64, lambda: f64, cutoff: usize) -> Result<Self> {
        let model = PqhoModel { mass, omega, lambda, cutoff };
        model.validate()?;
        Ok(model)
    }

    /// Unit mass and frequency.
    pub fn natural(lambda: f64, cutoff: usize) -> Result<Self> {
        PqhoModel::new(1.0, 1.0, lambda, cutoff)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(WvcfError::Domain(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(WvcfError::Domain(format!("omega must be positive, got {}", self.omega)));
        }
        if !self.lambda.is_finite() {
            return Err(WvcfError::Domain("lambda must be finite".into()));
        }
        if self.cutoff < 2 {
            return Err(WvcfError::Domain(format!("cutoff must be at least 2, got {}", self.cutoff)));
        }
        Ok(())
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        PqhoModel { cutoff, ..*self }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        PqhoModel { lambda, ..*self }
    }

    /// Unperturbed level `ω(n + 1/2)`.
    pub fn free_energy(&self, n: usize) -> f64 {
        self.omega * (n as f64 + 0.5)
    }

    /// Dimensionless quartic coupling `λ / (m²ω³)`; perturbative coefficients scale with its powers.
    pub fn reduced_coupling(&self) -> f64 {
        self.lambda / (self.mass * self.mass * self.omega.powi(3))
    }
}

/// Truncated annihilation and creation operators, `⟨n−1|a|n⟩ = √n`.
pub fn ladder_ops(n: usize) -> Result<(Operator, Operator)> {
    if n < 2 {
        return Err(WvcfError::Domain(format!("ladder cutoff must be at least 2, got {n}")));
    }
    let a = Operator::from_fn(n, |i, j| if j == i + 1 { Complex64::new((j as f64).sqrt(), 0.0) } else { ZERO });
    let a_dag = a.adjoint();
    Ok((a, a_dag))
}

#[derive(Clone, Debug)]
pub struct OscillatorOperators {
    pub x: Operator,
    pub p: Operator,
    pub h: Operator,
}

impl OscillatorOperators {
    /// `x·x` from the truncated factors.
    pub fn x_squared(&self) -> Operator {
        self.x.matmul(&self.x)
    }
}

pub fn build_operators(model: &PqhoModel) -> Result<OscillatorOperators> {
    model.validate()?;
    let (a, a_dag) = ladder_ops(model.cutoff)?;
    let (m, w) = (model.mass, model.omega);
    let x = (&a + &a_dag).scale(Complex64::new((2.0 * m * w).powf(-0.5), 0.0));
    let p = (&a_dag - &a).scale(I * (m * w / 2.0).sqrt());
    let x2 = x.matmul(&x);
    let p2 = p.matmul(&p);
    let mut h = p2.scale(Complex64::new(0.5 / m, 0.0));
    h += &x2.scale(Complex64::new(0.5 * m * w * w, 0.0));
    if model.lambda != 0.0 {
        h += &x2.matmul(&x2).scale(Complex64::new(model.lambda, 0.0));
    }
    Ok(OscillatorOperators { x, p, h })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroundStateMethod {
    ExactEigensolve,
    GlOrder0,
    GlOrder1,
    GlOrder2,
    RsOrder1,
}

impl GroundStateMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            GroundStateMethod::ExactEigensolve => "exact-eigensolve",
            GroundStateMethod::GlOrder0 => "gl-order-0",
            GroundStateMethod::GlOrder1 => "gl-order-1",
            GroundStateMethod::GlOrder2 => "gl-order-2",
            GroundStateMethod::RsOrder1 => "rs-order-1",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "exact-eigensolve" | "exact" => Some(GroundStateMethod::ExactEigensolve),
            "gl-order-0" | "gl0" => Some(GroundStateMethod::GlOrder0),
            "gl-order-1" | "gl1" => Some(GroundStateMethod::GlOrder1),
            "gl-order-2" | "gl2" => Some(GroundStateMethod::GlOrder2),
            "rs-order-1" | "rs1" => Some(GroundStateMethod::RsOrder1),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroundState {
    /// Unnormalized in the perturbative methods (`⟨0|Ω⟩ = 1`).
    pub state: StateVector,
    pub method: GroundStateMethod,
    pub model: PqhoModel,
}

pub fn ground_state(model: &PqhoModel, method: GroundStateMethod) -> Result<GroundState> {
    match method {
        GroundStateMethod::ExactEigensolve => ground_state_exact(model),
        GroundStateMethod::GlOrder0 => ground_state_gl(model, 0),
        GroundStateMethod::GlOrder1 => ground_state_gl(model, 1),
        GroundStateMethod::GlOrder2 => ground_state_gl(model, 2),
        GroundStateMethod::RsOrder1 => ground_state_rs(model),
    }
}

/// Lowest eigenvector of the truncated Hamiltonian.
pub fn ground_state_exact(model: &PqhoModel) -> Result<GroundState> {
    let ops = build_operators(model)?;
    let hdec = eigh(&ops.h)?;
    Ok(GroundState { state: hdec.eigenvector(0), method: GroundStateMethod::ExactEigensolve, model: *model })
}

/// Gell-Mann–Low coefficient states `a₀, a₁, a₂` (adiabatic limit taken), embedded
/// in a cutoff-dimensional space.
#[derive(Clone, Debug)]
pub struct GlSeries {
    pub coefficients: Vec<StateVector>,
}

// (level, amplitude) for m = ω = 1
fn gl_a1() -> [(usize, f64); 2] {
    [(2, -3.0 / (2.0 * 2f64.sqrt())), (4, -(6f64.sqrt()) / 8.0)]
}

fn gl_a2() -> [(usize, f64); 4] {
    [
        (2, 75.0 / (8.0 * 2f64.sqrt())),
        (4, 9.0 * 6f64.sqrt() / 4.0),
        (6, 17.0 * 5f64.sqrt() / 16.0),
        (8, 3.0 * 70f64.sqrt() / 64.0),
    ]
}

impl GlSeries {
    /// Minimum cutoff holding the support of the series truncated at `order`.
    pub fn required_cutoff(order: usize) -> usize {
        match order {
            0 => 1,
            1 => 5,
            _ => 9,
        }
    }

    /// Coefficients through `order` (0, 1 or 2) for the given model. The tabulated
    /// values hold for `m = ω = 1`; the `n`-th coefficient scales as `(m²ω³)^(−n)`.
    pub fn for_model(model: &PqhoModel, order: usize) -> Result<Self> {
        if order > 2 {
            return Err(WvcfError::Domain(format!("Gell-Mann–Low series available through order 2, got {order}")));
        }
        let need = GlSeries::required_cutoff(order);
        if model.cutoff < need {
            return Err(WvcfError::Domain(format!(
                "order-{order} Gell-Mann–Low state needs cutoff >= {need}, got {}",
                model.cutoff
            )));
        }
        let unit = 1.0 / (model.mass * model.mass * model.omega.powi(3));
        let n = model.cutoff;
        let mut coefficients = vec![StateVector::basis(n, 0)];
        let place = |terms: &[(usize, f64)], scale: f64| {
            let mut v = StateVector::zeros(n);
            for &(level, amp) in terms {
                v.amplitudes_mut()[level] = Complex64::new(amp * scale, 0.0);
            }
            v
        };
        if order >= 1 {
            coefficients.push(place(&gl_a1(), unit));
        }
        if order >= 2 {
            coefficients.push(place(&gl_a2(), unit * unit));
        }
        Ok(GlSeries { coefficients })
    }

    /// `Σ aₙ λⁿ`.
    pub fn state(&self, lambda: f64) -> StateVector {
        let n = self.coefficients[0].dim();
        let mut out = StateVector::zeros(n);
        let mut power = 1.0;
        for c in &self.coefficients {
            out = &out + &c.scale(Complex64::new(power, 0.0));
            power *= lambda;
        }
        out
    }
}

/// Perturbative ground state `|0⟩ + Σ_{n≤order} aₙλⁿ`.
pub fn ground_state_gl(model: &PqhoModel, order: usize) -> Result<GroundState> {
    model.validate()?;
    let series = GlSeries::for_model(model, order)?;
    let method = match order {
        0 => GroundStateMethod::GlOrder0,
        1 => GroundStateMethod::GlOrder1,
        _ => GroundStateMethod::GlOrder2,
    };
    Ok(GroundState { state: series.state(model.lambda), method, model: *model })
}

/// First-order Rayleigh–Schrödinger state `|0⟩ + Σ_{n≠0} |n⟩⟨n|λx⁴|0⟩/(E₀−Eₙ)`,
/// built from the truncated operators and the unperturbed spectrum.
pub fn ground_state_rs(model: &PqhoModel) -> Result<GroundState> {
    model.validate()?;
    if model.cutoff < 5 {
        return Err(WvcfError::Domain(format!("first-order state needs cutoff >= 5, got {}", model.cutoff)));
    }
    let ops = build_operators(model)?;
    let x2 = ops.x_squared();
    let x4_vac = x2.matmul(&x2).column(0);
    let e0 = model.free_energy(0);
    let mut amps = vec![ZERO; model.cutoff];
    amps[0] = Complex64::new(1.0, 0.0);
    for (n, amp) in amps.iter_mut().enumerate().skip(1) {
        *amp = x4_vac.amplitudes()[n] * (model.lambda / (e0 - model.free_energy(n)));
    }
    Ok(GroundState { state: StateVector::new(amps), method: GroundStateMethod::RsOrder1, model: *model })
}

/// Power-series quotient `a = c / b`: `aₙ = (cₙ − a₀bₙ − … − a_{n−1}b₁) / b₀`.
pub fn series_division(c: &[Complex64], b: &[Complex64]) -> Result<Vec<Complex64>> {
    let b0 = *b.first().ok_or_else(|| WvcfError::Domain("empty divisor series".into()))?;
    if b0 == ZERO {
        return Err(WvcfError::Domain("divisor series has zero constant term".into()));
    }
    let mut a: Vec<Complex64> = Vec::with_capacity(c.len());
    for (n, &cn) in c.iter().enumerate() {
        let mut acc = cn;
        for (k, ak) in a.iter().enumerate() {
            if let Some(bk) = b.get(n - k) {
                acc -= ak * bk;
            }
        }
        a.push(acc / b0);
    }
    Ok(a)
}

/// Component-wise [`series_division`] for a series of states over a scalar series.
pub fn series_division_states(c: &[StateVector], b: &[Complex64]) -> Result<Vec<StateVector>> {
    let Some(first) = c.first() else { return Ok(Vec::new()) };
    let dim = first.dim();
    let mut out = vec![StateVector::zeros(dim); c.len()];
    for i in 0..dim {
        let column: Vec<Complex64> = c.iter().map(|s| s.amplitudes()[i]).collect();
        for (n, v) in series_division(&column, b)?.into_iter().enumerate() {
            out[n].amplitudes_mut()[i] = v;
        }
    }
    Ok(out)
}

/// Oscillator operators with the cached spectral data of `H`.
#[derive(Clone, Debug)]
pub struct PqhoSystem {
    pub model: PqhoModel,
    pub ops: OscillatorOperators,
    pub hdec: SpectralDecomposition,
}

impl PqhoSystem {
    pub fn new(model: &PqhoModel) -> Result<Self> {
        let ops = build_operators(model)?;
        let hdec = eigh(&ops.h)?;
        Ok(PqhoSystem { model: *model, ops, hdec })
    }

    pub fn ground_state(&self, method: GroundStateMethod) -> Result<GroundState> {
        if method == GroundStateMethod::ExactEigensolve {
            return Ok(GroundState { state: self.hdec.eigenvector(0), method, model: self.model });
        }
        ground_state(&self.model, method)
    }

    pub fn excitations(&self) -> Result<ExcitationFrame<'_>> {
        Ok(ExcitationFrame { position: HeisenbergFrame::new(&self.hdec, &self.ops.x)?, x: &self.ops.x })
    }
}

/// Produces `Ĝ(t) = x(t)·x(0)` for many times from one cached basis change.
pub struct ExcitationFrame<'a> {
    position: HeisenbergFrame<'a>,
    x: &'a Operator,
}

impl ExcitationFrame<'_> {
    pub fn at(&self, t: f64) -> Operator {
        self.position.at(t).matmul(self.x)
    }
}

/// `Ĝ(t) = e^{iHt} x e^{−iHt} x`; generally non-Hermitian.
pub fn excitation_operator(model: &PqhoModel, hdec: &SpectralDecomposition, t: f64) -> Result<Operator> {
    let ops = build_operators(model)?;
    let frame = HeisenbergFrame::new(hdec, &ops.x)?;
    Ok(frame.at(t).matmul(&ops.x))
}

fn check_ground(model: &PqhoModel, ground: &GroundState) -> Result<()> {
    if ground.state.dim() != model.cutoff {
        return Err(WvcfError::DimensionMismatch { expected: model.cutoff, found: ground.state.dim() });
    }
    Ok(())
}

/// `⟨Ω|Ĝ(t)|Ω⟩ / ⟨Ω|Ω⟩`.
pub fn true_correlator(model: &PqhoModel, ground: &GroundState, t: f64) -> Result<Complex64> {
    check_ground(model, ground)?;
    let system = PqhoSystem::new(model)?;
    let frame = system.excitations()?;
    weak_value(&frame.at(t), &ground.state, &ground.state)
}

/// Which state a cutoff study evaluates at every cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceState {
    /// Re-solve the truncated Hamiltonian at each cutoff.
    Exact,
    /// Fixed first-order Gell-Mann–Low state embedded at each cutoff.
    GlOrder1,
}

#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub cutoff: usize,
    pub values: Vec<Complex64>,
    /// `G(0,0) = ⟨x²⟩`.
    pub equal_time: f64,
}

#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    pub t_grid: Vec<f64>,
    pub rows: Vec<ConvergenceRow>,
    /// `G(0,0)` at the largest cutoff.
    pub stabilized_value: f64,
    /// Smallest cutoff from which every larger cutoff reproduces the stabilized
    /// value; cutoffs below it depart.
    pub stable_from: usize,
}

/// Relative tolerance used to decide whether `G(0,0)` has stabilized across cutoffs.
pub const STABILITY_TOL: f64 = 1e-9;

pub fn cutoff_convergence(
    base: &PqhoModel,
    cutoffs: &[usize],
    t_grid: &[f64],
    state: ConvergenceState,
) -> Result<ConvergenceTable> {
    if cutoffs.is_empty() {
        return Err(WvcfError::Domain("cutoff list is empty".into()));
    }
    let mut sorted = cutoffs.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut rows = Vec::with_capacity(sorted.len());
    for &cutoff in &sorted {
        let model = base.with_cutoff(cutoff);
        let system = PqhoSystem::new(&model)?;
        let ground = match state {
            ConvergenceState::Exact => system.ground_state(GroundStateMethod::ExactEigensolve)?,
            ConvergenceState::GlOrder1 => system.ground_state(GroundStateMethod::GlOrder1)?,
        };
        let frame = system.excitations()?;
        let values = t_grid
            .iter()
            .map(|&t| weak_value(&frame.at(t), &ground.state, &ground.state))
            .collect::<Result<Vec<_>>>()?;
        let equal_time = weak_value(&system.ops.x_squared(), &ground.state, &ground.state)?.re;
        rows.push(ConvergenceRow { cutoff, values, equal_time });
    }
    let stabilized_value = rows.last().map(|r| r.equal_time).unwrap_or(f64::NAN);
    let mut stable_from = rows.last().map(|r| r.cutoff).unwrap_or(0);
    for row in rows.iter().rev() {
        if (row.equal_time - stabilized_value).abs() <= STABILITY_TOL * stabilized_value.abs().max(1e-300) {
            stable_from = row.cutoff;
        } else {
            break;
        }
    }
    Ok(ConvergenceTable { t_grid: t_grid.to_vec(), rows, stabilized_value, stable_from })
}

/// Strict first-order value of `G(0,0)`: `⟨0|x²|0⟩ + 2λ Re⟨0|x²|a₁⟩`.
pub fn equal_time_first_order_strict(model: &PqhoModel) -> Result<f64> {
    let series = GlSeries::for_model(&model.with_cutoff(model.cutoff.max(5)), 1)?;
    let ops = build_operators(&model.with_cutoff(model.cutoff.max(5)))?;
    let x2 = ops.x_squared();
    let vac = &series.coefficients[0];
    let a1 = &series.coefficients[1];
    Ok(x2.sandwich(vac, vac)?.re + 2.0 * model.lambda * x2.sandwich(vac, a1)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::ONE;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ladder_lowers_one_to_zero() {
        let (a, _) = ladder_ops(4).unwrap();
        let v = a.apply(&StateVector::basis(4, 1)).unwrap();
        assert_eq!(v, StateVector::basis(4, 0));
    }

    #[test]
    fn number_operator_is_diagonal() {
        let (a, ad) = ladder_ops(6).unwrap();
        let n = ad.matmul(&a);
        assert!(n.distance(&Operator::real_diagonal(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0])) < 1e-14);
    }

    #[test]
    fn truncated_commutator() {
        let (a, ad) = ladder_ops(2).unwrap();
        assert!(a.commutator(&ad).distance(&Operator::real_diagonal(&[1.0, -1.0])) < 1e-15);
        let (a, ad) = ladder_ops(5).unwrap();
        assert!(a.commutator(&ad).distance(&Operator::real_diagonal(&[1.0, 1.0, 1.0, 1.0, -4.0])) < 1e-14);
    }

    #[test]
    fn ladder_rejects_tiny_cutoff() {
        assert!(ladder_ops(1).is_err());
    }

    #[test]
    fn position_matrix_element() {
        let ops = build_operators(&PqhoModel::natural(0.0, 6).unwrap()).unwrap();
        assert!((ops.x.get(0, 1) - Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn free_hamiltonian_diagonal_with_truncation_artifact() {
        let ops = build_operators(&PqhoModel::natural(0.0, 6).unwrap()).unwrap();
        let want = [0.5, 1.5, 2.5, 3.5, 4.5, 2.5];
        for (n, w) in want.iter().enumerate() {
            assert!((ops.h.get(n, n) - Complex64::new(*w, 0.0)).norm() < 1e-14, "level {n}");
        }
        assert!(ops.h.distance(&Operator::real_diagonal(&want)) < 1e-14);
    }

    #[test]
    fn operators_hermitian_at_every_cutoff() {
        for cutoff in 2..=12 {
            let ops = build_operators(&PqhoModel::new(1.3, 0.7, 0.25, cutoff).unwrap()).unwrap();
            assert!(ops.x.hermitian_deviation() < 1e-12);
            assert!(ops.p.hermitian_deviation() < 1e-12);
            assert!(ops.h.hermitian_deviation() < 1e-12);
        }
    }

    #[test]
    fn model_validation() {
        assert!(PqhoModel::new(0.0, 1.0, 0.1, 6).is_err());
        assert!(PqhoModel::new(1.0, -1.0, 0.1, 6).is_err());
        assert!(PqhoModel::new(1.0, 1.0, f64::NAN, 6).is_err());
        assert!(PqhoModel::new(1.0, 1.0, 0.1, 1).is_err());
    }

    #[test]
    fn exact_ground_state_free_is_vacuum() {
        let g = ground_state_exact(&PqhoModel::natural(0.0, 8).unwrap()).unwrap();
        assert!(g.state.distance(&StateVector::basis(8, 0)) < 1e-10);
    }

    #[test]
    fn perturbation_raises_ground_energy() {
        let e = |lambda| {
            let ops = build_operators(&PqhoModel::natural(lambda, 30).unwrap()).unwrap();
            eigh(&ops.h).unwrap().eigenvalues[0]
        };
        assert!(e(0.1) > e(0.0));
    }

    #[test]
    fn exact_equal_time_reference_at_calibrated_coupling() {
        // Converged cutoff; reported value 0.3700 is reproduced at λ = 0.2.
        let model = PqhoModel::natural(0.2, 200).unwrap();
        let g = ground_state_exact(&model).unwrap();
        let ops = build_operators(&model).unwrap();
        let v = weak_value(&ops.x_squared(), &g.state, &g.state).unwrap().re;
        assert!(close(v, 0.3700, 5e-5), "{v}");
    }

    #[test]
    fn gl_order_zero_is_vacuum() {
        let g = ground_state_gl(&PqhoModel::default(), 0).unwrap();
        assert_eq!(g.state, StateVector::basis(6, 0));
    }

    #[test]
    fn gl_order_one_amplitudes() {
        let g = ground_state_gl(&PqhoModel::natural(0.1, 6).unwrap(), 1).unwrap();
        let a = g.state.amplitudes();
        assert!(close(a[2].re, -0.10606602, 5e-9));
        assert!(close(a[4].re, -0.03061862, 5e-9));
        assert_eq!(a[1], ZERO);
    }

    #[test]
    fn gl_order_two_leading_coefficient() {
        let s = GlSeries::for_model(&PqhoModel::natural(0.1, 9).unwrap(), 2).unwrap();
        assert!(close(s.coefficients[2].amplitudes()[2].re, 6.62913, 5e-6));
    }

    #[test]
    fn gl_support_invariants() {
        let s = GlSeries::for_model(&PqhoModel::natural(0.1, 12).unwrap(), 2).unwrap();
        let support = |v: &StateVector| -> Vec<usize> {
            v.amplitudes().iter().enumerate().filter(|(_, z)| z.norm() > 0.0).map(|(i, _)| i).collect()
        };
        assert_eq!(support(&s.coefficients[0]), vec![0]);
        assert_eq!(support(&s.coefficients[1]), vec![2, 4]);
        assert_eq!(support(&s.coefficients[2]), vec![2, 4, 6, 8]);
    }

    #[test]
    fn gl_cutoff_too_small() {
        assert!(matches!(ground_state_gl(&PqhoModel::natural(0.1, 4).unwrap(), 1), Err(WvcfError::Domain(_))));
        assert!(matches!(ground_state_gl(&PqhoModel::natural(0.1, 8).unwrap(), 2), Err(WvcfError::Domain(_))));
    }

    #[test]
    fn rs_coefficients_from_ladder_algebra() {
        // ⟨2|x⁴|0⟩ = 3/√2 and ⟨4|x⁴|0⟩ = √6/2 for m = ω = 1.
        let lambda = 0.37;
        let g = ground_state_rs(&PqhoModel::natural(lambda, 7).unwrap()).unwrap();
        let a = g.state.amplitudes();
        assert!(close(a[2].re, -lambda * (3.0 / 2f64.sqrt()) / 2.0, 1e-14));
        assert!(close(a[4].re, -lambda * (6f64.sqrt() / 2.0) / 4.0, 1e-14));
        let free = ground_state_rs(&PqhoModel::natural(0.0, 7).unwrap()).unwrap();
        assert_eq!(free.state, StateVector::basis(7, 0));
    }

    #[test]
    fn gl_first_order_equals_rs_for_any_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let model = PqhoModel::new(
                rng.random_range(0.3..3.0),
                rng.random_range(0.3..3.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(5..12),
            )
            .unwrap();
            let gl = ground_state_gl(&model, 1).unwrap();
            let rs = ground_state_rs(&model).unwrap();
            assert!(gl.state.distance(&rs.state) <= 1e-12 * gl.state.norm());
        }
    }

    /// Second-order Rayleigh–Schrödinger in intermediate normalization, summed over
    /// a large basis; independent of the tabulated a₂ coefficients.
    #[allow(clippy::needless_range_loop)]
    fn rs_second_order(n_basis: usize) -> Vec<f64> {
        let ops = build_operators(&PqhoModel::natural(0.0, n_basis).unwrap()).unwrap();
        let x2 = ops.x_squared();
        let v = x2.matmul(&x2);
        let e = |n: usize| n as f64 + 0.5;
        let mut out = vec![0.0; n_basis];
        for k in 1..n_basis - 4 {
            let mut s = 0.0;
            for m in 1..n_basis - 4 {
                s += v.get(k, m).re * v.get(m, 0).re / ((e(0) - e(k)) * (e(0) - e(m)));
            }
            s -= v.get(0, 0).re * v.get(k, 0).re / (e(0) - e(k)).powi(2);
            out[k] = s;
        }
        out
    }

    #[test]
    fn gl_second_order_matches_rayleigh_schrodinger() {
        let oracle = rs_second_order(24);
        let s = GlSeries::for_model(&PqhoModel::natural(0.1, 24).unwrap(), 2).unwrap();
        for (k, want) in oracle.iter().enumerate().take(12) {
            assert!(close(s.coefficients[2].amplitudes()[k].re, *want, 1e-12), "level {k}");
        }
    }

    #[test]
    fn series_division_by_unit_is_identity() {
        let c = vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.0), Complex64::new(3.0, 1.0)];
        let b = vec![ONE, ZERO, ZERO];
        assert_eq!(series_division(&c, &b).unwrap(), c);
    }

    #[test]
    fn series_division_self_is_unit() {
        let b = vec![Complex64::new(2.0, 1.0), Complex64::new(-0.5, 0.3), Complex64::new(3.0, 1.0)];
        let a = series_division(&b, &b).unwrap();
        assert!((a[0] - ONE).norm() < 1e-15);
        assert!(a[1].norm() < 1e-15 && a[2].norm() < 1e-15);
    }

    #[test]
    fn series_division_reconvolves() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut rnd = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let c: Vec<Complex64> = (0..5).map(|_| rnd()).collect();
        let mut b: Vec<Complex64> = (0..5).map(|_| rnd()).collect();
        b[0] += Complex64::new(2.0, 0.0);
        let a = series_division(&c, &b).unwrap();
        for n in 0..5 {
            let conv: Complex64 = (0..=n).map(|k| a[k] * b[n - k]).sum();
            assert!((conv - c[n]).norm() < 1e-12);
        }
    }

    #[test]
    fn series_division_zero_constant_term() {
        assert!(series_division(&[ONE], &[ZERO, ONE]).is_err());
    }

    #[test]
    fn series_division_of_states() {
        let c = vec![StateVector::from_real(&[1.0, 0.0]), StateVector::from_real(&[0.5, 2.0])];
        let b = vec![Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)];
        let a = series_division_states(&c, &b).unwrap();
        assert!(a[0].distance(&StateVector::from_real(&[0.5, 0.0])) < 1e-15);
        // a₁ = (c₁ − a₀b₁)/b₀
        assert!(a[1].distance(&StateVector::from_real(&[0.0, 1.0])) < 1e-15);
    }

    #[test]
    fn excitation_at_zero_is_x_squared() {
        let model = PqhoModel::default();
        let system = PqhoSystem::new(&model).unwrap();
        let g0 = excitation_operator(&model, &system.hdec, 0.0).unwrap();
        assert_eq!(g0, system.ops.x_squared());
    }

    #[test]
    fn free_excitation_vacuum_element() {
        let model = PqhoModel::new(1.0, 1.7, 0.0, 6).unwrap();
        let system = PqhoSystem::new(&model).unwrap();
        let frame = system.excitations().unwrap();
        for &t in &[0.3, 2.0, 9.5] {
            let got = frame.at(t).get(0, 0);
            let want = Complex64::from_polar(1.0 / (2.0 * 1.0 * 1.7), -1.7 * t);
            assert!((got - want).norm() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn correlator_time_reversal_is_conjugation() {
        let model = PqhoModel::default();
        let system = PqhoSystem::new(&model).unwrap();
        let ground = system.ground_state(GroundStateMethod::ExactEigensolve).unwrap();
        let frame = system.excitations().unwrap();
        for k in 1..20 {
            let t = 0.37 * k as f64;
            let fwd = weak_value(&frame.at(t), &ground.state, &ground.state).unwrap();
            let bwd = weak_value(&frame.at(-t), &ground.state, &ground.state).unwrap();
            assert!((fwd - bwd.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn free_true_correlator_is_analytic() {
        for cutoff in [6, 9] {
            let model = PqhoModel::natural(0.0, cutoff).unwrap();
            let ground = ground_state_exact(&model).unwrap();
            let system = PqhoSystem::new(&model).unwrap();
            let frame = system.excitations().unwrap();
            let mut t = 0.0;
            while t < 30.0 {
                let g = weak_value(&frame.at(t), &ground.state, &ground.state).unwrap();
                assert!((g - Complex64::from_polar(0.5, -t)).norm() < 1e-10, "t = {t}");
                t += 0.1;
            }
            assert!((true_correlator(&model, &ground, 0.0).unwrap() - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn true_correlator_brute_force_at_zero_time() {
        // ⟨Ω|x·x|Ω⟩/⟨Ω|Ω⟩ by explicit summation over the truncated x matrix.
        let model = PqhoModel::default();
        let ground = ground_state_gl(&model, 1).unwrap();
        let ops = build_operators(&model).unwrap();
        let psi = ground.state.amplitudes();
        let n = model.cutoff;
        let mut num = ZERO;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    num += psi[i].conj() * ops.x.get(i, k) * ops.x.get(k, j) * psi[j];
                }
            }
        }
        let brute = num / ground.state.norm_sqr();
        let got = true_correlator(&model, &ground, 0.0).unwrap();
        assert!((got - brute).norm() < 1e-14);
        // frozen: computed once by the brute-force sum above
        assert!(close(got.re, 0.388_854_584_748_379, 1e-12), "{}", got.re);
    }

    #[test]
    fn correlator_is_continuous_on_fine_grid() {
        let model = PqhoModel::default();
        let system = PqhoSystem::new(&model).unwrap();
        let ground = system.ground_state(GroundStateMethod::GlOrder1).unwrap();
        let frame = system.excitations().unwrap();
        let vals: Vec<f64> = (0..300)
            .map(|k| weak_value(&frame.at(0.1 * k as f64), &ground.state, &ground.state).unwrap().norm())
            .collect();
        assert!(vals.iter().all(|v| v.is_finite()));
        let jumps: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let mean = jumps.iter().sum::<f64>() / jumps.len() as f64;
        for (k, j) in jumps.iter().enumerate() {
            let lo = k.saturating_sub(5);
            let hi = (k + 6).min(jumps.len());
            let local = jumps[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
            assert!(*j <= 10.0 * local.max(mean * 0.1), "jump {j} at step {k}");
        }
    }

    #[test]
    fn ground_dimension_mismatch() {
        let model = PqhoModel::default();
        let ground = ground_state_gl(&model.with_cutoff(8), 1).unwrap();
        assert!(matches!(true_correlator(&model, &ground, 0.0), Err(WvcfError::DimensionMismatch { .. })));
    }

    #[test]
    fn convergence_free_oscillator() {
        let table =
            cutoff_convergence(&PqhoModel::natural(0.0, 6).unwrap(), &[2, 3, 6, 10], &[0.0], ConvergenceState::Exact)
                .unwrap();
        for row in &table.rows {
            assert!(close(row.values[0].re, 0.5, 1e-12), "cutoff {}", row.cutoff);
        }
    }

    #[test]
    fn convergence_fixed_state_support_argument() {
        let table = cutoff_convergence(
            &PqhoModel::natural(0.2, 6).unwrap(),
            &[5, 6, 7, 8, 12, 20],
            &[0.0, 1.0],
            ConvergenceState::GlOrder1,
        )
        .unwrap();
        assert_eq!(table.stable_from, 6);
        let g6 = table.rows[1].equal_time;
        let g5 = table.rows[0].equal_time;
        assert!(g5 < g6);
        assert!(close(g6, 0.35697259, 5e-9), "{g6}");
        assert!(close(g5, 0.34803337, 5e-9), "{g5}");
        for row in &table.rows[1..] {
            assert!(close(row.values[0].re, g6, 1e-14));
        }
    }

    #[test]
    fn cutoff_five_drop_for_any_positive_coupling() {
        for &lambda in &[0.01, 0.1, 0.2, 0.5, 1.0] {
            let table =
                cutoff_convergence(&PqhoModel::natural(lambda, 6).unwrap(), &[5, 6], &[], ConvergenceState::GlOrder1)
                    .unwrap();
            assert!(table.rows[0].equal_time < table.rows[1].equal_time, "lambda {lambda}");
        }
    }

    #[test]
    fn strict_first_order_is_linear() {
        for &lambda in &[0.0, 0.1, 0.2] {
            let v = equal_time_first_order_strict(&PqhoModel::natural(lambda, 6).unwrap()).unwrap();
            assert!(close(v, 0.5 - 1.5 * lambda, 1e-14));
        }
    }

    #[test]
    fn second_order_value_at_calibrated_coupling() {
        let model = PqhoModel::natural(0.2, 12).unwrap();
        let ground = ground_state_gl(&model, 2).unwrap();
        let ops = build_operators(&model).unwrap();
        let v = weak_value(&ops.x_squared(), &ground.state, &ground.state).unwrap().re;
        assert!(close(v, 0.8484, 5e-5), "{v}");
    }

    #[test]
    fn method_tags_round_trip() {
        for m in [
            GroundStateMethod::ExactEigensolve,
            GroundStateMethod::GlOrder0,
            GroundStateMethod::GlOrder1,
            GroundStateMethod::GlOrder2,
            GroundStateMethod::RsOrder1,
        ] {
            assert_eq!(GroundStateMethod::from_tag(m.tag()), Some(m));
        }
    }
}
