//! Real scalar φ⁴ theory on a periodic 1-d lattice of `L = 2l + 1` sites.
//!
//! The Hilbert space is the product of `L` momentum modes, each truncated to
//! `n_max` levels, so the dimension is `n_max^L`. Fields are linear in the ladder
//! operators and are stored as coefficient lists ([`LadderSum`]) that act on dense
//! matrices column by column; only products (`φ²`, `π²`, `φ⁴`, `H`) are ever held
//! densely. Mode `j` (momentum index `k = j − l`) is the `j`-th tensor factor,
//! most significant first.
//!
//! The two-point function is read out through the polar decomposition
//! `Ĝ = ÛR̂`: the Hermitian part couples to the pointer as `R̂⊗σ_x` and its
//! weak value is recovered from how post-selected detection probabilities move
//! with the coupling.

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WvcfError};
use crate::linops::{
    eigh, expm, kron, pauli_x, polar, weak_value, Complex64, HeisenbergFrame, Operator, PolarDecomposition,
    SpectralDecomposition, StateVector, I, ONE, ZERO,
};
use crate::pqho::{PqhoModel, PqhoSystem};
use crate::weakmeas::{aav_readout, PointerState};

/// Largest product-space dimension built unless the model raises it.
pub const DEFAULT_MAX_DIM: usize = 4096;

/// Baseline detection probabilities at or below this are treated as failed selections.
pub const DETECTION_MIN: f64 = 1e-20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phi4Model {
    /// `l`; sites run over `x = −l, …, l`.
    pub half_extent: usize,
    pub mass: f64,
    pub lambda: f64,
    /// Levels kept per momentum mode.
    pub n_max: usize,
    /// Refuse to build spaces larger than this.
    pub max_dim: usize,
}

impl Default for Phi4Model {
    fn default() -> Self {
        Phi4Model { half_extent: 2, mass: 1.0, lambda: 0.1, n_max: 5, max_dim: DEFAULT_MAX_DIM }
    }
}

impl Phi4Model {
    pub fn new(half_extent: usize, mass: f64, lambda: f64, n_max: usize) -> Result<Self> {
        let model = Phi4Model { half_extent, mass, lambda, n_max, max_dim: DEFAULT_MAX_DIM };
        model.validate()?;
        Ok(model)
    }

    pub fn with_max_dim(self, max_dim: usize) -> Self {
        Phi4Model { max_dim, ..self }
    }

    pub fn sites(&self) -> usize {
        2 * self.half_extent + 1
    }

    /// `n_max^L`, or an overflow error.
    pub fn dimension(&self) -> Result<usize> {
        u32::try_from(self.sites())
            .ok()
            .and_then(|l| self.n_max.checked_pow(l))
            .ok_or_else(|| WvcfError::SizeOverflow(format!("{}^{} does not fit in usize", self.n_max, self.sites())))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(WvcfError::Domain(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(WvcfError::Domain(format!("coupling must be nonnegative, got {}", self.lambda)));
        }
        if self.n_max < 2 {
            return Err(WvcfError::Domain(format!("per-mode cutoff must be at least 2, got {}", self.n_max)));
        }
        let dim = self.dimension()?;
        if dim > self.max_dim {
            return Err(WvcfError::Resource(format!(
                "dimension {dim} exceeds the budget of {} ({} MB per dense operator)",
                self.max_dim,
                dim.saturating_mul(dim).saturating_mul(16) >> 20
            )));
        }
        Ok(())
    }

    /// Array index of site `x ∈ {−l, …, l}`.
    pub fn site_index(&self, x: i64) -> Result<usize> {
        let l = self.half_extent as i64;
        if !(-l..=l).contains(&x) {
            return Err(WvcfError::Domain(format!("site {x} outside [-{l}, {l}]")));
        }
        Ok((x + l) as usize)
    }
}

/// Momenta `p = 2πk/L` and continuum energies `E_p = √(m² + p²)`, indexed by `k + l`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSet {
    pub momenta: Vec<f64>,
    pub energies: Vec<f64>,
    pub delta_p: f64,
}

pub fn momentum_grid(model: &Phi4Model) -> ModeSet {
    let sites = model.sites();
    let l = model.half_extent as i64;
    let delta_p = std::f64::consts::TAU / sites as f64;
    let momenta: Vec<f64> = (-l..=l).map(|k| delta_p * k as f64).collect();
    let energies = momenta.iter().map(|p| (model.mass * model.mass + p * p).sqrt()).collect();
    ModeSet { momenta, energies, delta_p }
}

/// Occupation-number basis of `modes` truncated oscillators.
#[derive(Clone, Debug)]
pub struct FockSpace {
    pub n_max: usize,
    pub modes: usize,
    pub dim: usize,
    strides: Vec<usize>,
    occupations: Vec<u16>,
    sqrt: Vec<f64>,
}

impl FockSpace {
    pub fn new(n_max: usize, modes: usize) -> Result<Self> {
        if n_max < 2 || n_max > u16::MAX as usize {
            return Err(WvcfError::Domain(format!("per-mode cutoff {n_max} out of range")));
        }
        let dim = u32::try_from(modes)
            .ok()
            .and_then(|m| n_max.checked_pow(m))
            .ok_or_else(|| WvcfError::SizeOverflow(format!("{n_max}^{modes} does not fit in usize")))?;
        let strides: Vec<usize> = (0..modes).map(|j| n_max.pow((modes - 1 - j) as u32)).collect();
        let mut occupations = Vec::with_capacity(dim * modes);
        for s in 0..dim {
            occupations.extend(strides.iter().map(|st| ((s / st) % n_max) as u16));
        }
        let sqrt = (0..=n_max).map(|n| (n as f64).sqrt()).collect();
        Ok(FockSpace { n_max, modes, dim, strides, occupations, sqrt })
    }

    pub fn occupation(&self, state: usize, mode: usize) -> usize {
        self.occupations[state * self.modes + mode] as usize
    }

    pub fn vacuum(&self) -> StateVector {
        StateVector::basis(self.dim, 0)
    }

    /// `a_j` as a dense operator.
    pub fn lower(&self, mode: usize) -> Operator {
        LadderSum::single(self.modes, mode, ONE, ZERO).materialize(self)
    }

    /// `a†_j` as a dense operator.
    pub fn raise(&self, mode: usize) -> Operator {
        LadderSum::single(self.modes, mode, ZERO, ONE).materialize(self)
    }

    /// `dst += (Σ_j c_j a_j + d_j a†_j) src`.
    fn accumulate(&self, op: &LadderSum, src: &[Complex64], dst: &mut [Complex64]) {
        for j in 0..self.modes {
            let (cl, cr) = (op.lower[j], op.raise[j]);
            let stride = self.strides[j];
            for (s, d) in dst.iter_mut().enumerate() {
                let n = self.occupation(s, j);
                if cl != ZERO && n + 1 < self.n_max {
                    *d += cl * self.sqrt[n + 1] * src[s + stride];
                }
                if cr != ZERO && n > 0 {
                    *d += cr * self.sqrt[n] * src[s - stride];
                }
            }
        }
    }
}

/// `Σ_j lower_j a_j + raise_j a†_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderSum {
    pub lower: Vec<Complex64>,
    pub raise: Vec<Complex64>,
}

impl LadderSum {
    fn single(modes: usize, mode: usize, lower: Complex64, raise: Complex64) -> Self {
        let mut s = LadderSum { lower: vec![ZERO; modes], raise: vec![ZERO; modes] };
        s.lower[mode] = lower;
        s.raise[mode] = raise;
        s
    }

    pub fn difference(&self, other: &LadderSum) -> LadderSum {
        let sub = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        LadderSum { lower: sub(&self.lower, &other.lower), raise: sub(&self.raise, &other.raise) }
    }

    /// `self · m` for a dense `m`.
    pub fn apply_mat(&self, space: &FockSpace, m: &Mat<Complex64>) -> Mat<Complex64> {
        let mut out = Mat::<Complex64>::zeros(m.nrows(), m.ncols());
        out.as_mut().par_col_iter_mut().enumerate().for_each(|(c, col)| {
            let dst = col.try_as_col_major_mut().expect("owned matrices are column major").as_slice_mut();
            space.accumulate(self, m.col_as_slice(c), dst);
        });
        out
    }

    pub fn apply(&self, space: &FockSpace, v: &StateVector) -> StateVector {
        let mut out = vec![ZERO; v.dim()];
        space.accumulate(self, v.amplitudes(), &mut out);
        StateVector::new(out)
    }

    pub fn materialize(&self, space: &FockSpace) -> Operator {
        Operator::from_mat(self.apply_mat(space, &Mat::identity(space.dim, space.dim)))
    }

    /// `self · self` as a dense operator.
    pub fn square(&self, space: &FockSpace) -> Mat<Complex64> {
        self.apply_mat(space, self.materialize(space).as_mat())
    }
}

/// Initial field and conjugate momentum at every site, as ladder sums.
#[derive(Clone, Debug)]
pub struct FieldSet {
    pub space: FockSpace,
    pub modes: ModeSet,
    /// `φ₀(x)` indexed by `x + l`.
    pub phi: Vec<LadderSum>,
    /// `π₀(x)` indexed by `x + l`.
    pub pi: Vec<LadderSum>,
    half_extent: usize,
}

impl FieldSet {
    fn index(&self, x: i64) -> Result<usize> {
        let l = self.half_extent as i64;
        if !(-l..=l).contains(&x) {
            return Err(WvcfError::Domain(format!("site {x} outside [-{l}, {l}]")));
        }
        Ok((x + l) as usize)
    }

    pub fn phi_operator(&self, x: i64) -> Result<Operator> {
        Ok(self.phi[self.index(x)?].materialize(&self.space))
    }

    pub fn pi_operator(&self, x: i64) -> Result<Operator> {
        Ok(self.pi[self.index(x)?].materialize(&self.space))
    }

    /// Forward periodic difference `φ₀(x+1) − φ₀(x)` at array index `i`.
    pub fn gradient(&self, i: usize) -> LadderSum {
        let next = (i + 1) % self.phi.len();
        self.phi[next].difference(&self.phi[i])
    }
}

/// `φ₀(x) = L^{−1/2} Σ_p (2E_p)^{−1/2} (a_p e^{−ipx} + a†_p e^{ipx})`,
/// `π₀(x) = −i L^{−1/2} Σ_p (E_p/2)^{1/2} (a_p e^{−ipx} − a†_p e^{ipx})`.
pub fn build_fields(model: &Phi4Model) -> Result<FieldSet> {
    model.validate()?;
    let modes = momentum_grid(model);
    let sites = model.sites();
    let space = FockSpace::new(model.n_max, sites)?;
    let norm = 1.0 / (sites as f64).sqrt();
    let l = model.half_extent as i64;
    let mut phi = Vec::with_capacity(sites);
    let mut pi = Vec::with_capacity(sites);
    for x in -l..=l {
        let mut f = LadderSum { lower: vec![ZERO; sites], raise: vec![ZERO; sites] };
        let mut g = f.clone();
        for (j, (&p, &e)) in modes.momenta.iter().zip(&modes.energies).enumerate() {
            let phase = Complex64::from_polar(1.0, -p * x as f64);
            let a = norm / (2.0 * e).sqrt();
            f.lower[j] = phase * a;
            f.raise[j] = phase.conj() * a;
            let b = norm * (e / 2.0).sqrt();
            g.lower[j] = -I * phase * b;
            g.raise[j] = I * phase.conj() * b;
        }
        phi.push(f);
        pi.push(g);
    }
    Ok(FieldSet { space, modes, phi, pi, half_extent: model.half_extent })
}

/// `H = Σ_x [½π₀² + ½(∇φ₀)² + ½m²φ₀² + (λ/4!)φ₀⁴]` with unit lattice spacing.
pub fn build_hamiltonian_qft(model: &Phi4Model, fields: &FieldSet) -> Result<Operator> {
    let space = &fields.space;
    if space.modes != model.sites() || space.n_max != model.n_max {
        return Err(WvcfError::DimensionMismatch { expected: model.dimension()?, found: space.dim });
    }
    let n = space.dim;
    let c = |v: f64| Complex64::new(v, 0.0);
    let mut h = Mat::<Complex64>::zeros(n, n);
    for i in 0..model.sites() {
        let phi = &fields.phi[i];
        h += fields.pi[i].square(space) * faer::Scale(c(0.5));
        h += fields.gradient(i).square(space) * faer::Scale(c(0.5));
        let phi2 = phi.square(space);
        if model.lambda != 0.0 {
            let phi4 = phi.apply_mat(space, &phi.apply_mat(space, &phi2));
            h += phi4 * faer::Scale(c(model.lambda / 24.0));
        }
        h += phi2 * faer::Scale(c(0.5 * model.mass * model.mass));
    }
    // the ladder algebra is exactly Hermitian up to rounding; symmetrize it away
    let h = Mat::from_fn(n, n, |i, j| (h[(i, j)] + h[(j, i)].conj()) * 0.5);
    Ok(Operator::from_mat(h))
}

/// Lowest eigenvector of `h`, phase-fixed.
pub fn ground_state_qft(model: &Phi4Model, h: &Operator) -> Result<StateVector> {
    if h.dim() != model.dimension()? {
        return Err(WvcfError::DimensionMismatch { expected: model.dimension()?, found: h.dim() });
    }
    Ok(eigh(h)?.eigenvector(0))
}

/// `e^{iHt} φ₀(x) e^{−iHt}`.
pub fn field_at(model: &Phi4Model, hdec: &SpectralDecomposition, t: f64, x: i64) -> Result<Operator> {
    let fields = build_fields(model)?;
    Ok(HeisenbergFrame::new(hdec, &fields.phi_operator(x)?)?.at(t))
}

/// `T φ(t,0) φ(0,0)`: `φ(t,0)·φ(0,0)` for `t ≥ 0`, `φ(0,0)·φ(t,0)` otherwise.
pub fn excitation_qft(model: &Phi4Model, hdec: &SpectralDecomposition, t: f64) -> Result<Operator> {
    let fields = build_fields(model)?;
    let phi0 = fields.phi_operator(0)?;
    let phit = HeisenbergFrame::new(hdec, &phi0)?.at(t);
    Ok(time_ordered(&phit, &phi0, t))
}

fn time_ordered(later: &Operator, origin: &Operator, t: f64) -> Operator {
    if t >= 0.0 {
        later.matmul(origin)
    } else {
        origin.matmul(later)
    }
}

/// Polar factors of an excitation operator together with `|Θ⟩ = Û†|Ω⟩`.
#[derive(Clone, Debug)]
pub struct PolarParts {
    pub polar: PolarDecomposition,
    pub theta: StateVector,
}

pub fn polar_parts(g: &Operator, omega: &StateVector) -> Result<PolarParts> {
    let polar = polar(g)?;
    let theta = polar.u.apply_adjoint(omega)?;
    Ok(PolarParts { polar, theta })
}

/// Initial and final apparatus selections for one detection channel.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionPair {
    pub initial: StateVector,
    pub fin: StateVector,
}

impl SelectionPair {
    pub fn new(initial: StateVector, fin: StateVector) -> Result<Self> {
        if initial.dim() != 2 || fin.dim() != 2 {
            return Err(WvcfError::DimensionMismatch { expected: 2, found: initial.dim().max(fin.dim()) });
        }
        let pair = SelectionPair { initial, fin };
        pair.apparatus_weak_value()?;
        Ok(pair)
    }

    /// `⟨F|σ_x|I⟩ / ⟨F|I⟩`.
    pub fn apparatus_weak_value(&self) -> Result<Complex64> {
        weak_value(&pauli_x(), &self.initial, &self.fin)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selections {
    pub pair1: SelectionPair,
    pub pair2: SelectionPair,
}

impl Default for Selections {
    /// `(|↑⟩, |+⟩)` with `A_w = 1` and `((i|↑⟩ + |↓⟩)/√2, |↓⟩)` with `A_w = i`.
    fn default() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = |re, im| Complex64::new(re, im);
        Selections {
            pair1: SelectionPair { initial: StateVector::from_real(&[1.0, 0.0]), fin: StateVector::from_real(&[h, h]) },
            pair2: SelectionPair {
                initial: StateVector::new(vec![c(0.0, h), c(h, 0.0)]),
                fin: StateVector::from_real(&[0.0, 1.0]),
            },
        }
    }
}

impl Selections {
    /// Maps the two first-order responses `Im(R_w A_w)` back to `R_w`. Each channel
    /// gives `δln p/(2δg) = Re R_w · Im A_w + Im R_w · Re A_w`.
    pub fn solve(&self, y1: f64, y2: f64) -> Result<Complex64> {
        let a1 = self.pair1.apparatus_weak_value()?;
        let a2 = self.pair2.apparatus_weak_value()?;
        let det = a1.im * a2.re - a1.re * a2.im;
        if det.abs() < 1e-12 {
            return Err(WvcfError::Config("selection pairs do not separate real and imaginary parts".into()));
        }
        let re = (y1 * a2.re - y2 * a1.re) / det;
        let im = (a1.im * y2 - a2.im * y1) / det;
        Ok(Complex64::new(re, im))
    }
}

/// `|⟨Θ⊗F| e^{−ig R⊗σ_x} |Ω⊗I⟩|²` through the full matrix exponential.
pub fn detection_probability(
    r: &Operator,
    omega: &StateVector,
    theta: &StateVector,
    g: f64,
    pair: &SelectionPair,
) -> Result<f64> {
    let u = expm(&kron(r, &pauli_x())?, -I * g)?;
    let amp = u.sandwich(&theta.kron(&pair.fin), &omega.kron(&pair.initial))?;
    Ok(amp.norm_sqr())
}

/// `R̂` in its own eigenbasis with `|Θ⟩` and `|Ω⟩` expanded there; evaluates
/// detection probabilities as `⟨F|I⟩⟨Θ|cos gR|Ω⟩ − i⟨F|σ_x|I⟩⟨Θ|sin gR|Ω⟩`.
#[derive(Clone, Debug)]
pub struct RSpectralData {
    pub eigenvalues: Vec<f64>,
    theta: Vec<Complex64>,
    omega: Vec<Complex64>,
}

impl RSpectralData {
    pub fn new(polar: &PolarDecomposition, omega: &StateVector, theta: &StateVector) -> Result<Self> {
        let v = &polar.right_vectors;
        Ok(RSpectralData {
            eigenvalues: polar.singular_values.clone(),
            theta: v.apply_adjoint(theta)?.into_amplitudes(),
            omega: v.apply_adjoint(omega)?.into_amplitudes(),
        })
    }

    pub fn detection_probability(&self, g: f64, pair: &SelectionPair) -> Result<f64> {
        let (mut c, mut s) = (ZERO, ZERO);
        for ((&r, th), om) in self.eigenvalues.iter().zip(&self.theta).zip(&self.omega) {
            let w = th.conj() * om;
            c += w * (g * r).cos();
            s += w * (g * r).sin();
        }
        let overlap = pair.fin.inner(&pair.initial);
        let flip = pauli_x().sandwich(&pair.fin, &pair.initial)?;
        Ok((overlap * c - I * flip * s).norm_sqr())
    }
}

/// Readout of one excitation operator through the Hermitian-part coupling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WvhfResult {
    pub t: f64,
    pub dg: f64,
    /// Finite-difference estimate of `⟨Θ|R̂|Ω⟩/⟨Θ|Ω⟩`.
    pub r_w: Complex64,
    /// `⟨Θ|Ω⟩/⟨Ω|Ω⟩`.
    pub overlap_ratio: Complex64,
    /// `r_w · overlap_ratio`.
    pub g_w: Complex64,
    /// Exact `⟨Θ|R̂|Ω⟩/⟨Θ|Ω⟩`.
    pub r_w_exact: Complex64,
    /// Exact `⟨Ω|Ĝ|Ω⟩/⟨Ω|Ω⟩`.
    pub direct: Complex64,
    /// `[p(0), p(δg)]` for pair 1 and pair 2.
    pub p1: [f64; 2],
    pub p2: [f64; 2],
    /// The polar factor `Û` is not unique.
    pub degenerate: bool,
}

/// Reads `R_w` from `δln p = ln p(δg) − ln p(0)` on both selection pairs, then
/// `G_w = R_w ⟨Θ|Ω⟩/⟨Ω|Ω⟩`.
pub fn action_readout_for(gop: &Operator, omega: &StateVector, dg: f64, selections: &Selections) -> Result<WvhfResult> {
    if !(dg > 0.0 && dg.is_finite()) {
        return Err(WvcfError::Domain(format!("coupling step must be positive, got {dg}")));
    }
    let parts = polar_parts(gop, omega)?;
    let spectral = RSpectralData::new(&parts.polar, omega, &parts.theta)?;
    let probe = |pair: &SelectionPair| -> Result<[f64; 2]> {
        let p0 = spectral.detection_probability(0.0, pair)?;
        if !(p0 > DETECTION_MIN) {
            return Err(WvcfError::PostSelection { overlap: p0.sqrt() });
        }
        Ok([p0, spectral.detection_probability(dg, pair)?])
    };
    let p1 = probe(&selections.pair1)?;
    let p2 = probe(&selections.pair2)?;
    let slope = |p: [f64; 2]| (p[1].ln() - p[0].ln()) / (2.0 * dg);
    let r_w = selections.solve(slope(p1), slope(p2))?;
    let theta_omega = parts.theta.inner(omega);
    let overlap_ratio = theta_omega / omega.norm_sqr();
    let r_w_exact = parts.polar.r.sandwich(&parts.theta, omega)? / theta_omega;
    let direct = weak_value(gop, omega, omega)?;
    Ok(WvhfResult {
        t: 0.0,
        dg,
        r_w,
        overlap_ratio,
        g_w: r_w * overlap_ratio,
        r_w_exact,
        direct,
        p1,
        p2,
        degenerate: parts.polar.degenerate,
    })
}

/// Fields, spectral data of `H`, and `φ₀(0)` cached in the energy eigenbasis.
///
/// Everything time dependent is evaluated in the eigenbasis, where `|Ω⟩` is the
/// first basis vector and evolution is a phase per matrix element.
pub struct Phi4System {
    pub model: Phi4Model,
    pub fields: FieldSet,
    pub hdec: SpectralDecomposition,
    phi0_eig: Mat<Complex64>,
}

impl Phi4System {
    pub fn new(model: &Phi4Model) -> Result<Self> {
        let fields = build_fields(model)?;
        let h = build_hamiltonian_qft(model, &fields)?;
        let hdec = eigh(&h)?;
        drop(h);
        let v = hdec.eigenvectors.as_mat();
        let origin = fields.phi[model.half_extent].apply_mat(&fields.space, v);
        let phi0_eig = v.adjoint() * &origin;
        Ok(Phi4System { model: *model, fields, hdec, phi0_eig })
    }

    pub fn dim(&self) -> usize {
        self.hdec.dim()
    }

    pub fn ground_state(&self) -> StateVector {
        self.hdec.eigenvector(0)
    }

    pub fn ground_energy(&self) -> f64 {
        self.hdec.eigenvalues[0]
    }

    pub fn field_at(&self, t: f64, x: i64) -> Result<Operator> {
        Ok(HeisenbergFrame::new(&self.hdec, &self.fields.phi_operator(x)?)?.at(t))
    }

    /// Time-ordered `φ(t,0)φ(0,0)` in the energy eigenbasis.
    pub fn excitation_eigenbasis(&self, t: f64) -> Operator {
        let e = &self.hdec.eigenvalues;
        let b = &self.phi0_eig;
        let n = self.dim();
        let later = Mat::from_fn(n, n, |j, k| b[(j, k)] * Complex64::from_polar(1.0, (e[j] - e[k]) * t));
        Operator::from_mat(if t >= 0.0 { &later * b } else { b * &later })
    }

    /// Time-ordered `φ(t,0)φ(0,0)` in the occupation basis.
    pub fn excitation(&self, t: f64) -> Operator {
        let v = self.hdec.eigenvectors.as_mat();
        let g = self.excitation_eigenbasis(t);
        Operator::from_mat(v * (g.as_mat() * v.adjoint()))
    }

    /// `⟨Ω|T φ(t,0)φ(0,0)|Ω⟩`.
    pub fn direct_correlator(&self, t: f64) -> Complex64 {
        let e = &self.hdec.eigenvalues;
        let b = &self.phi0_eig;
        let phase = |k: usize| Complex64::from_polar(1.0, (e[0] - e[k]) * t);
        // ⟨0|B(t)B|0⟩ = Σ_k B₀ₖ(t)Bₖ₀ and ⟨0|B B(t)|0⟩ = Σ_k B₀ₖBₖ₀(t); B(t)ⱼₖ = Bⱼₖ e^{i(Eⱼ−Eₖ)t}
        (0..self.dim())
            .map(|k| {
                let w = b[(0, k)] * b[(k, 0)];
                if t >= 0.0 {
                    w * phase(k)
                } else {
                    w * phase(k).conj()
                }
            })
            .sum()
    }

    pub fn action_readout(&self, t: f64, dg: f64, selections: &Selections) -> Result<WvhfResult> {
        let omega = StateVector::basis(self.dim(), 0);
        let mut r = action_readout_for(&self.excitation_eigenbasis(t), &omega, dg, selections)?;
        r.t = t;
        Ok(r)
    }
}

/// Convenience wrapper over [`Phi4System::action_readout`].
pub fn action_readout(model: &Phi4Model, t: f64, dg: f64, selections: &Selections) -> Result<WvhfResult> {
    Phi4System::new(model)?.action_readout(t, dg, selections)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneLatticeRow {
    pub t: f64,
    pub pqho_true: Complex64,
    pub phi4_true: Complex64,
    /// Qubit-pointer inversion on the oscillator.
    pub aav: Complex64,
    /// Detection-probability readout on the single-site field.
    pub action: Complex64,
}

/// Single-site field theory against the oscillator with `M = 1`, `ω = m`, `λ_qm = λ/4!`.
/// Both sides use the time-ordered product.
pub fn one_lattice_compare(
    lambda_qft: f64,
    mass: f64,
    cutoff: usize,
    t_grid: &[f64],
    g: f64,
    dg: f64,
    pointer: &PointerState,
) -> Result<Vec<OneLatticeRow>> {
    let field = Phi4System::new(&Phi4Model::new(0, mass, lambda_qft, cutoff)?)?;
    let osc = PqhoSystem::new(&PqhoModel::new(1.0, mass, lambda_qft / 24.0, cutoff)?)?;
    let omega = osc.hdec.eigenvector(0);
    let frame = osc.excitations()?;
    let x0 = &osc.ops.x;
    let selections = Selections::default();
    t_grid
        .iter()
        .map(|&t| {
            let gop = if t >= 0.0 { frame.at(t) } else { x0.matmul(&HeisenbergFrame::new(&osc.hdec, x0)?.at(t)) };
            let pqho_true = weak_value(&gop, &omega, &omega)?;
            let aav = aav_readout(&gop, &omega, &omega, g, pointer)?.estimate.value;
            let action = field.action_readout(t, dg, &selections)?;
            Ok(OneLatticeRow { t, pqho_true, phi4_true: action.direct, aav, action: action.g_w })
        })
        .collect()
}
