//! Lindblad master equation for the ground-state relaxation channels.
//!
//! The equation of motion is
//!
//!   dρ/dt = −i·2π·[H, ρ] + Σ_k ( L_k ρ L_k† − ½{L_k† L_k, ρ} )
//!
//! with two channel families:
//!
//! * symmetric population exchange |i⟩⟨j| between all three m_s levels at
//!   rate γ = 1/(3·T1) per directed pair, so any population deviation from
//!   the uniform mixture relaxes as exp(−t/T1);
//! * pure dephasing with a jump operator that is diagonal in the eigenbasis
//!   of the reference (undriven) Hamiltonian, carrying weight +1 on the
//!   upper electron branch, −1 on the lower branch and 0 on the m_s = 0
//!   like state. At high field this is exactly √κ·Sz; at zero field, where
//!   strain mixes m_s = ±1 into the x/y states, it dephases the microwave
//!   transitions without pumping population between the branches (a bare
//!   √κ·Sz would convert x ↔ y at rate κ and destroy the echo).
//!
//! κ is fixed so the m_s = 0 ↔ branch coherences decay at exactly 1/T2
//! once the exchange contribution 2/(3·T1) is accounted for.

use num_complex::Complex64;

use crate::error::{Result, VbError};
use crate::evolve::state::QuantumState;
use crate::linalg::{is_hermitian, CMat};

/// Relaxation channel rates and the dephasing basis for one reference
/// Hamiltonian (dimension 3·nuc_dim).
#[derive(Debug, Clone)]
pub struct RelaxationChannels {
    /// Population exchange rate per directed electron pair, 1/µs.
    gamma_exchange: f64,
    /// Dephasing jump rate, 1/µs.
    kappa_dephase: f64,
    nuc_dim: usize,
    /// Eigenbasis of the reference Hamiltonian (columns).
    basis: CMat,
    /// Branch weight of each eigenstate: +1 upper, −1 lower, 0 central.
    weights: Vec<f64>,
}

/// Branch weights from the eigenvectors: a state belongs to the m_s = ±1
/// manifold when its Sz² character exceeds one half; branch states are
/// split into lower/upper by eigenvalue.
fn classify_branches(eigenvalues: &[f64], eigenvectors: &CMat, nuc_dim: usize) -> Vec<f64> {
    let dim = eigenvectors.nrows();
    let mut weights = vec![0.0; dim];
    let mut branch: Vec<(f64, usize)> = Vec::new();
    for k in 0..dim {
        // Sz² expectation: the m_s = ±1 rows are 0..m and 2m..3m.
        let mut s2 = 0.0;
        for n in 0..nuc_dim {
            s2 += eigenvectors[(n, k)].norm_sqr();
            s2 += eigenvectors[(2 * nuc_dim + n, k)].norm_sqr();
        }
        if s2 >= 0.5 {
            branch.push((eigenvalues[k], k));
        }
    }
    branch.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let half = branch.len() / 2;
    for (rank, &(_, k)) in branch.iter().enumerate() {
        weights[k] = if rank < half { -1.0 } else { 1.0 };
    }
    weights
}

impl RelaxationChannels {
    /// Build the channels for the reference Hamiltonian `h_ref` (the free,
    /// undriven Hamiltonian of the frame the evolution runs in).
    pub fn new(t1_us: f64, t2_us: f64, h_ref: &CMat) -> Result<Self> {
        if !(t1_us > 0.0) || !(t2_us > 0.0) {
            return Err(VbError::Domain(format!(
                "relaxation times must be positive, got T1 = {t1_us}, T2 = {t2_us}"
            )));
        }
        let dim = h_ref.nrows();
        if dim % 3 != 0 {
            return Err(VbError::Domain(format!(
                "dimension {dim} is not an electron ⊗ nuclear product"
            )));
        }
        let gamma = 1.0 / (3.0 * t1_us);
        // Coherence decay received from the exchange channel alone is
        // 2/(3·T1); the dephasing channel supplies the remainder of 1/T2.
        let pure = 1.0 / t2_us - 2.0 / (3.0 * t1_us);
        if pure < -1e-12 {
            return Err(VbError::Numerical(format!(
                "T2 = {t2_us} µs exceeds the 1.5·T1 bound of the symmetric exchange channel \
                 (T1 = {t1_us} µs); reduce T2 or raise T1"
            )));
        }
        let nuc_dim = dim / 3;
        let offdiag = {
            let mut worst = 0.0f64;
            for i in 0..dim {
                for j in 0..dim {
                    if i != j {
                        worst = worst.max(h_ref[(i, j)].norm());
                    }
                }
            }
            worst
        };
        let (basis, weights) = if offdiag < 1e-12 {
            // Diagonal reference: eigenbasis is the product basis.
            let eigenvalues: Vec<f64> = (0..dim).map(|i| h_ref[(i, i)].re).collect();
            (crate::linalg::eye(dim), classify_branches(&eigenvalues, &crate::linalg::eye(dim), nuc_dim))
        } else {
            let eig = h_ref.clone().symmetric_eigen();
            let eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            let weights = classify_branches(&eigenvalues, &eig.eigenvectors, nuc_dim);
            (eig.eigenvectors, weights)
        };
        Ok(RelaxationChannels {
            gamma_exchange: gamma,
            kappa_dephase: 2.0 * pure.max(0.0),
            nuc_dim,
            basis,
            weights,
        })
    }

    pub fn gamma_exchange(&self) -> f64 {
        self.gamma_exchange
    }

    pub fn kappa_dephase(&self) -> f64 {
        self.kappa_dephase
    }

    /// Largest channel rate, used for integrator step control.
    pub fn rate_scale(&self) -> f64 {
        (6.0 * self.gamma_exchange).max(2.0 * self.kappa_dephase)
    }

    /// The dephasing jump operator √κ·V·diag(w)·V†.
    pub fn dephasing_operator(&self) -> Option<CMat> {
        if self.kappa_dephase == 0.0 {
            return None;
        }
        let dim = self.weights.len();
        let k = self.kappa_dephase.sqrt();
        let mut scaled = self.basis.clone();
        for (c, w) in self.weights.iter().enumerate() {
            for r in 0..dim {
                scaled[(r, c)] *= Complex64::new(k * w, 0.0);
            }
        }
        Some(&scaled * self.basis.adjoint())
    }

    /// All jump operators (exchange pairs plus dephasing).
    pub fn jump_operators(&self) -> Vec<CMat> {
        let m = self.nuc_dim;
        let dim = 3 * m;
        let mut ops = Vec::new();
        let g = self.gamma_exchange.sqrt();
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let mut l = CMat::zeros(dim, dim);
                for n in 0..m {
                    l[(i * m + n, j * m + n)] = Complex64::new(g, 0.0);
                }
                ops.push(l);
            }
        }
        if let Some(l) = self.dephasing_operator() {
            ops.push(l);
        }
        ops
    }

    /// Exact action of exp(D_exchange·τ): coherence blocks scale by
    /// exp(−2γτ), diagonal electron blocks relax toward their average.
    pub fn apply_exchange_exact(&self, rho: &mut CMat, tau_us: f64) {
        let m = self.nuc_dim;
        let decay3 = (-3.0 * self.gamma_exchange * tau_us).exp();
        let decay_coh = (-2.0 * self.gamma_exchange * tau_us).exp();
        for a in 0..m {
            for b in 0..m {
                let mut avg = Complex64::ZERO;
                for s in 0..3 {
                    avg += rho[(s * m + a, s * m + b)];
                }
                avg /= Complex64::new(3.0, 0.0);
                for s in 0..3 {
                    let idx = (s * m + a, s * m + b);
                    rho[idx] = avg + (rho[idx] - avg) * decay3;
                }
            }
        }
        for s in 0..3 {
            for sp in 0..3 {
                if s == sp {
                    continue;
                }
                for a in 0..m {
                    for b in 0..m {
                        rho[(s * m + a, sp * m + b)] *= Complex64::new(decay_coh, 0.0);
                    }
                }
            }
        }
    }

    /// Combined phase + dephasing factor between eigenstates a and b of a
    /// segment basis with eigenvalues λ and branch weights w over a step dt:
    /// exp(−i·2π(λa−λb)·dt − κ/2·(wa−wb)²·dt).
    pub fn phase_dephase_factor(&self, la: f64, lb: f64, wa: f64, wb: f64, dt: f64) -> Complex64 {
        let dw = wa - wb;
        let decay = (-0.5 * self.kappa_dephase * dw * dw * dt).exp();
        Complex64::from_polar(decay, -2.0 * std::f64::consts::PI * (la - lb) * dt)
    }

    /// Branch weights for an arbitrary segment eigenbasis.
    pub fn classify(&self, eigenvalues: &[f64], eigenvectors: &CMat) -> Vec<f64> {
        classify_branches(eigenvalues, eigenvectors, self.nuc_dim)
    }
}

/// Full Liouvillian superoperator over column-major vec(ρ):
/// d vec(ρ)/dt = [−i·2π·(I⊗H − Hᵀ⊗I) + Σ_k (conj(L_k)⊗L_k
///                − ½ I⊗L_k†L_k − ½ (L_k†L_k)ᵀ⊗I)]·vec(ρ).
///
/// Only sensible for small dimensions; the d² × d² matrix lets a wait or
/// drive segment of any duration be advanced exactly with one `expm`.
pub fn liouvillian(h: &CMat, channels: &RelaxationChannels) -> CMat {
    let d = h.nrows();
    let id = crate::linalg::eye(d);
    let minus_i_two_pi = Complex64::new(0.0, -2.0 * std::f64::consts::PI);
    let mut sup =
        (crate::linalg::kron(&id, h) - crate::linalg::kron(&h.transpose(), &id)) * minus_i_two_pi;
    for l in channels.jump_operators() {
        let ldl = l.adjoint() * &l;
        sup += crate::linalg::kron(&l.map(|z| z.conj()), &l);
        sup -= crate::linalg::kron(&id, &ldl) * Complex64::new(0.5, 0.0);
        sup -= crate::linalg::kron(&ldl.transpose(), &id) * Complex64::new(0.5, 0.0);
    }
    sup
}

/// Advance ρ by exp(L·t) through the vectorised Liouvillian.
pub fn apply_liouvillian_exactly(rho: &mut CMat, h: &CMat, channels: &RelaxationChannels, t_us: f64) {
    let d = rho.nrows();
    let sup = liouvillian(h, channels) * Complex64::new(t_us, 0.0);
    let u = crate::linalg::expm(&sup);
    let vec_rho = nalgebra::DVector::from_iterator(d * d, rho.iter().copied());
    let out = u * vec_rho;
    for j in 0..d {
        for i in 0..d {
            rho[(i, j)] = out[j * d + i];
        }
    }
}

fn rhs(h: &CMat, channels: &RelaxationChannels, deph: Option<&(CMat, CMat)>, rho: &CMat) -> CMat {
    let two_pi = 2.0 * std::f64::consts::PI;
    let comm = h * rho - rho * h;
    let mut out = comm * Complex64::new(0.0, -two_pi);

    // Exchange channel blockwise.
    let m = channels.nuc_dim;
    let gamma = channels.gamma_exchange;
    for a in 0..m {
        for b in 0..m {
            let blocks: Vec<Complex64> = (0..3).map(|s| rho[(s * m + a, s * m + b)]).collect();
            let sum: Complex64 = blocks.iter().sum();
            for s in 0..3 {
                out[(s * m + a, s * m + b)] +=
                    Complex64::new(gamma, 0.0) * (sum - blocks[s])
                        - Complex64::new(2.0 * gamma, 0.0) * blocks[s];
            }
        }
    }
    for s in 0..3 {
        for sp in 0..3 {
            if s == sp {
                continue;
            }
            for a in 0..m {
                for b in 0..m {
                    out[(s * m + a, sp * m + b)] -=
                        Complex64::new(2.0 * gamma, 0.0) * rho[(s * m + a, sp * m + b)];
                }
            }
        }
    }

    // Dephasing channel dense: LρL† − ½{L†L, ρ}.
    if let Some((l, ldl)) = deph {
        out += l * rho * l.adjoint();
        let half = Complex64::new(0.5, 0.0);
        out -= (ldl * rho + rho * ldl) * half;
    }
    out
}

/// Step-size guard scale: 2π·‖H‖_∞ plus the channel rates.
fn generator_scale(h: &CMat, channels: &RelaxationChannels) -> f64 {
    let hinf = (0..h.nrows())
        .map(|i| (0..h.ncols()).map(|j| h[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    2.0 * std::f64::consts::PI * hinf + channels.rate_scale()
}

/// Step size satisfying both the resolution rule dt ≤ 0.01/max(|H|, 1/T2)
/// and the hard refusal bound of [`evolve_lindblad`].
pub fn suggested_dt(h: &CMat, t1_us: f64, t2_us: f64) -> f64 {
    let hmax = crate::linalg::max_abs(h).max(1.0 / t2_us).max(1.0 / t1_us).max(1.0);
    let scale = RelaxationChannels::new(t1_us, t2_us, h)
        .map(|c| generator_scale(h, &c))
        .unwrap_or(1.0);
    (0.01 / hmax).min(0.05 / scale)
}

/// Integrate the master equation with fixed-step RK4.
///
/// Refuses (rather than under-resolving) when dt times the generator scale
/// exceeds 0.1. The dephasing basis is derived from `h` itself.
pub fn evolve_lindblad(
    state: &QuantumState,
    h: &CMat,
    t1_us: f64,
    t2_us: f64,
    dt_us: f64,
    steps: usize,
) -> Result<QuantumState> {
    if !is_hermitian(h, 1e-12) {
        return Err(VbError::Domain("Lindblad evolution requires Hermitian H".into()));
    }
    if state.dim() != h.nrows() {
        return Err(VbError::Domain(format!(
            "state dimension {} does not match Hamiltonian dimension {}",
            state.dim(),
            h.nrows()
        )));
    }
    let channels = RelaxationChannels::new(t1_us, t2_us, h)?;
    let scale = generator_scale(h, &channels);
    if dt_us * scale > 0.1 {
        return Err(VbError::Numerical(format!(
            "step dt = {dt_us} µs is too large for this generator (|gen| ≈ {scale:.3e} /µs); \
             use dt ≤ {:.3e} µs",
            0.1 / scale
        )));
    }
    let deph = channels.dephasing_operator().map(|l| {
        let ldl = l.adjoint() * &l;
        (l, ldl)
    });
    let mut rho = state.rho.clone();
    let h6 = dt_us / 6.0;
    for _ in 0..steps {
        let k1 = rhs(h, &channels, deph.as_ref(), &rho);
        let k2 = rhs(h, &channels, deph.as_ref(), &(&rho + &k1 * Complex64::new(dt_us / 2.0, 0.0)));
        let k3 = rhs(h, &channels, deph.as_ref(), &(&rho + &k2 * Complex64::new(dt_us / 2.0, 0.0)));
        let k4 = rhs(h, &channels, deph.as_ref(), &(&rho + &k3 * Complex64::new(dt_us, 0.0)));
        rho += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4)
            * Complex64::new(h6, 0.0);
    }
    Ok(QuantumState { rho })
}
