//! Ground-state spin Hamiltonians in the lab and rotating frames.
//!
//! Everything is expressed as H/h in MHz. The lab-frame Hamiltonian is
//!
//!   H = D·Sz² + E·(Sx² − Sy²) + g·(μ_B/h)·B·Sz
//!       + Σ_k [ A_par·Sz·Iz_k + A_perp·(Sx·Ix_k + Sy·Iy_k) ]
//!
//! with the field fixed along the hexagonal c axis. In secular mode the
//! nuclei are classical labels and Iz_k collapses to the scalar projection
//! m_I^(k), giving a 3×3 matrix; in full-quantum mode the three I = 1
//! nuclei are explicit and the dimension is 3·3^n.

use num_complex::Complex64;

use crate::error::{Result, VbError};
use crate::linalg::{eye, kron, CMat};
use crate::spin::config::{nuclear_sectors, NuclearConfiguration, SpinSystemConfig};
use crate::spin::operators::spin_operators;

/// Which electron transition a line belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// m_s = 0 ↔ −1 (frequency decreases with field).
    Lower,
    /// m_s = 0 ↔ +1 (frequency increases with field).
    Upper,
}

/// One microwave transition with its ensemble weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionLine {
    pub frequency_mhz: f64,
    /// Nuclear multiplicity weight; sums to 1 per branch.
    pub weight: f64,
    pub branch: Branch,
    pub total_mi: i32,
}

/// Secular (classical-nuclei) 3×3 Hamiltonian for one nuclear configuration.
///
/// Requires A_perp = 0: transverse hyperfine cannot be carried by classical
/// projections. Basis order m_s = +1, 0, −1.
pub fn secular_hamiltonian(
    cfg: &SpinSystemConfig,
    nuclear: Option<&NuclearConfiguration>,
) -> Result<CMat> {
    let nuclear = nuclear.ok_or_else(|| {
        VbError::Domain("secular mode requires a nuclear configuration argument".into())
    })?;
    if cfg.a_perp_mhz != 0.0 {
        return Err(VbError::Config(
            "A_perp > 0 requires the full-quantum Hamiltonian; the secular form keeps only Sz·Iz"
                .into(),
        ));
    }
    let ops = spin_operators(1.0)?;
    let d = cfg.d_mhz + cfg.zfs_offset_mhz;
    let zeeman = cfg.zeeman_slope() * cfg.b_mt;
    let hyperfine = cfg.a_par_mhz * nuclear.total_mi() as f64;
    let mut h = ops.sz2() * Complex64::new(d, 0.0);
    h += ops.strain() * Complex64::new(cfg.e_mhz, 0.0);
    h += &ops.sz * Complex64::new(zeeman + hyperfine, 0.0);
    Ok(h)
}

/// Full-quantum Hamiltonian over electron ⊗ nuclei, dimension 3·3^n.
pub fn full_hamiltonian(cfg: &SpinSystemConfig) -> Result<CMat> {
    let e_ops = spin_operators(1.0)?;
    let n_ops = spin_operators(1.0)?;
    let n = cfg.n_nuclei;
    let nuc_dim = 3usize.pow(n as u32);

    let d = cfg.d_mhz + cfg.zfs_offset_mhz;
    let zeeman = cfg.zeeman_slope() * cfg.b_mt;
    let mut h_e = e_ops.sz2() * Complex64::new(d, 0.0);
    h_e += e_ops.strain() * Complex64::new(cfg.e_mhz, 0.0);
    h_e += &e_ops.sz * Complex64::new(zeeman, 0.0);

    let mut h = kron(&h_e, &eye(nuc_dim));
    for k in 0..n {
        let embed = |op: &CMat| -> CMat {
            let left = 3usize.pow(k as u32);
            let right = 3usize.pow((n - 1 - k) as u32);
            kron(&eye(left), &kron(op, &eye(right)))
        };
        let iz_k = embed(&n_ops.sz);
        h += kron(&(&e_ops.sz * Complex64::new(cfg.a_par_mhz, 0.0)), &iz_k);
        if cfg.a_perp_mhz != 0.0 {
            let a = Complex64::new(cfg.a_perp_mhz, 0.0);
            h += kron(&(&e_ops.sx * a), &embed(&n_ops.sx));
            h += kron(&(&e_ops.sy * a), &embed(&n_ops.sy));
        }
    }
    Ok(h)
}

/// Infer the nuclear factor dimension from a Hamiltonian dimension 3·3^k.
fn nuclear_dim(dim: usize) -> Result<usize> {
    if dim % 3 != 0 {
        return Err(VbError::Domain(format!("dimension {dim} is not 3·3^k")));
    }
    let mut rest = dim / 3;
    let mut ok = rest == 1;
    while rest > 1 {
        if rest % 3 != 0 {
            break;
        }
        rest /= 3;
        ok = rest == 1;
    }
    if !ok {
        return Err(VbError::Domain(format!("dimension {dim} is not 3·3^k")));
    }
    Ok(dim / 3)
}

/// Transform a lab-frame Hamiltonian into the frame rotating at `f_mw` and
/// add the microwave drive under the rotating-wave approximation.
///
/// The frame rotates both m_s = ±1 levels at f_mw (generator f·Sz²), so a
/// single linearly-polarised drive keeps a static coupling Ω/2 to both
/// branches and the counter-rotating terms at 2·f_mw are dropped:
///
///   H_rot = H_lab − f_mw·Sz² + (Ω/√2)·(cos φ·Sx + sin φ·Sy)
pub fn rotating_frame(h_lab: &CMat, f_mw: f64, omega_rabi: f64, phase: f64) -> Result<CMat> {
    if !(f_mw > 0.0) {
        return Err(VbError::Domain(format!("f_mw must be positive, got {f_mw}")));
    }
    if omega_rabi < 0.0 {
        return Err(VbError::Domain(format!(
            "omega_rabi must be non-negative, got {omega_rabi}"
        )));
    }
    let nuc = nuclear_dim(h_lab.nrows())?;
    let ops = spin_operators(1.0)?;
    let id = eye(nuc);
    let mut h = h_lab.clone();
    h -= kron(&ops.sz2(), &id) * Complex64::new(f_mw, 0.0);
    if omega_rabi > 0.0 {
        let amp = omega_rabi / std::f64::consts::SQRT_2;
        let drive = &ops.sx * Complex64::new(amp * phase.cos(), 0.0)
            + &ops.sy * Complex64::new(amp * phase.sin(), 0.0);
        h += kron(&drive, &id);
    }
    Ok(h)
}

/// Exact secular transition frequency for one total-m_I sector, MHz.
///
/// The ±1 block of the secular Hamiltonian is [[D ± x, E], [E, D ∓ x]] with
/// x = g·μ_B/h·B + A_par·m_I, so the two transitions from m_s = 0 sit at
/// D ± √(E² + x²).
pub fn secular_transition_mhz(cfg: &SpinSystemConfig, total_mi: i32, branch: Branch) -> f64 {
    let d = cfg.d_mhz + cfg.zfs_offset_mhz;
    let x = cfg.zeeman_slope() * cfg.b_mt + cfg.a_par_mhz * total_mi as f64;
    let split = (cfg.e_mhz * cfg.e_mhz + x * x).sqrt();
    match branch {
        Branch::Lower => d - split,
        Branch::Upper => d + split,
    }
}

/// Centers of the two electron branches (the m_I = 0 lines), MHz.
pub fn branch_centers(cfg: &SpinSystemConfig) -> (f64, f64) {
    (
        secular_transition_mhz(cfg, 0, Branch::Lower),
        secular_transition_mhz(cfg, 0, Branch::Upper),
    )
}

/// Enumerate the hyperfine comb of both branches, sorted by frequency.
///
/// Each total-m_I sector shifts its branch linearly by A_par·m_I around the
/// exact strain/Zeeman branch center, which reproduces the observed comb of
/// 2(nI)+1 lines with spacing A_par and trinomial weights.
pub fn transition_table(cfg: &SpinSystemConfig) -> Vec<TransitionLine> {
    let (lower, upper) = branch_centers(cfg);
    let mut lines = Vec::new();
    for sector in nuclear_sectors(cfg.n_nuclei) {
        let shift = cfg.a_par_mhz * sector.total_mi as f64;
        lines.push(TransitionLine {
            frequency_mhz: lower - shift,
            weight: sector.weight,
            branch: Branch::Lower,
            total_mi: sector.total_mi,
        });
        lines.push(TransitionLine {
            frequency_mhz: upper + shift,
            weight: sector.weight,
            branch: Branch::Upper,
            total_mi: sector.total_mi,
        });
    }
    lines.sort_by(|a, b| a.frequency_mhz.partial_cmp(&b.frequency_mhz).unwrap());
    lines
}
