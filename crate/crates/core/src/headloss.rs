//! Frictional headloss models and the diagonal matrices they induce.
//!
//! For pipe `j` with flow `q`, the headloss is `r_j·|q|^{n_j−1}·q`. The
//! solvers work with the diagonals
//!
//! * `G_jj = r_j·|q_j|^{n_j−1}` (the headloss coefficient itself) and
//! * `F_jj = n_j·G_jj` (the Newton linearization),
//!
//! plus a nonnegative shift `T` that caps the condition number of `F + T`.
//!
//! Hazen-Williams pipes have constant resistance `r = 10.670·L/(C^1.852·D^4.871)`
//! and exponent 1.852. Darcy-Weisbach pipes have exponent 2 and a
//! flow-dependent resistance `r(q) = f(Re)·8L/(π²·g·D⁵)` with `f = 64/Re`
//! below Re 2000, Swamee-Jain above Re 4000, and a cubic Hermite blend in
//! between so `f` stays C¹ across the regime boundaries. At zero flow the
//! laminar law degenerates to the linear Hagen-Poiseuille relation, which
//! keeps `G` finite and positive.

use crate::error::{Error, Result};
use crate::net::{HeadlossModel, Network};

pub const GRAVITY: f64 = 9.81;
/// Kinematic viscosity of water at 20 °C in m²/s.
pub const WATER_VISCOSITY_20C: f64 = 1.004e-6;
pub const HW_EXPONENT: f64 = 1.852;
pub const DW_EXPONENT: f64 = 2.0;

const RE_LAMINAR: f64 = 2000.0;
const RE_TURBULENT: f64 = 4000.0;

/// Hazen-Williams resistance coefficient in SI units (flow m³/s, head m).
pub fn hw_resistance(length: f64, diameter: f64, c: f64) -> Result<f64> {
    if !(length > 0.0 && diameter > 0.0 && c > 0.0) {
        return Err(Error::NonPositiveInput(
            "Hazen-Williams resistance needs positive length, diameter and C",
        ));
    }
    Ok(10.670 * length / (c.powf(1.852) * diameter.powf(4.871)))
}

/// Geometry of a Darcy-Weisbach pipe; everything in SI.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct DwGeometry {
    pub length: f64,
    pub diameter: f64,
    /// Absolute roughness in meters.
    pub roughness: f64,
    /// Kinematic viscosity in m²/s.
    pub viscosity: f64,
}

impl DwGeometry {
    pub fn new(length: f64, diameter: f64, roughness: f64, viscosity: f64) -> Result<Self> {
        if !(length > 0.0 && diameter > 0.0 && roughness > 0.0 && viscosity > 0.0) {
            return Err(Error::NonPositiveInput(
                "Darcy-Weisbach geometry must be positive",
            ));
        }
        Ok(Self {
            length,
            diameter,
            roughness,
            viscosity,
        })
    }

    pub fn reynolds(&self, q: f64) -> f64 {
        4.0 * q.abs() / (std::f64::consts::PI * self.diameter * self.viscosity)
    }

    /// 8L/(π²·g·D⁵), the factor taking `f` to the resistance coefficient.
    fn geometry_factor(&self) -> f64 {
        8.0 * self.length / (std::f64::consts::PI.powi(2) * GRAVITY * self.diameter.powi(5))
    }

    /// Headloss coefficient of the linear laminar law, `128·L·ν/(π·g·D⁴)`.
    fn laminar_g(&self) -> f64 {
        128.0 * self.length * self.viscosity / (std::f64::consts::PI * GRAVITY * self.diameter.powi(4))
    }

    /// Darcy friction factor as a function of the Reynolds number.
    pub fn friction_factor(&self, re: f64) -> f64 {
        let rel = self.roughness / self.diameter;
        if re < RE_LAMINAR {
            64.0 / re
        } else if re > RE_TURBULENT {
            swamee_jain(re, rel)
        } else {
            // Cubic Hermite interpolation between the laminar value/slope at
            // Re 2000 and the Swamee-Jain value/slope at Re 4000.
            let f0 = 64.0 / RE_LAMINAR;
            let m0 = -64.0 / (RE_LAMINAR * RE_LAMINAR);
            let f1 = swamee_jain(RE_TURBULENT, rel);
            let m1 = swamee_jain_slope(RE_TURBULENT, rel);
            let span = RE_TURBULENT - RE_LAMINAR;
            let t = (re - RE_LAMINAR) / span;
            let t2 = t * t;
            let t3 = t2 * t;
            (2.0 * t3 - 3.0 * t2 + 1.0) * f0
                + (t3 - 2.0 * t2 + t) * span * m0
                + (-2.0 * t3 + 3.0 * t2) * f1
                + (t3 - t2) * span * m1
        }
    }

    /// Flow-dependent resistance coefficient `r(q)`. At `q = 0` the laminar
    /// linearization coefficient is returned, so the headloss law near zero
    /// reads `r·q` with finite `r`.
    pub fn resistance(&self, q: f64) -> f64 {
        let re = self.reynolds(q);
        if re < RE_LAMINAR {
            if q == 0.0 {
                self.laminar_g()
            } else {
                self.laminar_g() / q.abs()
            }
        } else {
            self.friction_factor(re) * self.geometry_factor()
        }
    }

    /// `G(q) = r(q)·|q|`, finite for every flow including zero.
    pub fn g_coeff(&self, q: f64) -> f64 {
        let re = self.reynolds(q);
        if re < RE_LAMINAR {
            self.laminar_g()
        } else {
            self.friction_factor(re) * self.geometry_factor() * q.abs()
        }
    }
}

fn swamee_jain(re: f64, rel_roughness: f64) -> f64 {
    let arg = rel_roughness / 3.7 + 5.74 / re.powf(0.9);
    let u = arg.log10();
    0.25 / (u * u)
}

fn swamee_jain_slope(re: f64, rel_roughness: f64) -> f64 {
    let arg = rel_roughness / 3.7 + 5.74 / re.powf(0.9);
    let u = arg.log10();
    let darg = -0.9 * 5.74 * re.powf(-1.9);
    -0.5 / (u * u * u) * darg / (arg * std::f64::consts::LN_10)
}

#[derive(Clone, Debug)]
enum PipeFriction {
    HazenWilliams { r: f64 },
    DarcyWeisbach(DwGeometry),
}

/// Per-pipe friction data for a whole network: headloss exponents and the
/// resistance law of every pipe.
#[derive(Clone, Debug)]
pub struct ResistanceModel {
    exponents: Vec<f64>,
    friction: Vec<PipeFriction>,
}

impl ResistanceModel {
    pub fn from_network(net: &Network) -> Result<Self> {
        Self::with_viscosity(net, WATER_VISCOSITY_20C)
    }

    pub fn with_viscosity(net: &Network, viscosity: f64) -> Result<Self> {
        let mut exponents = Vec::with_capacity(net.n_pipes());
        let mut friction = Vec::with_capacity(net.n_pipes());
        for p in net.pipes() {
            match p.model {
                HeadlossModel::HazenWilliams => {
                    exponents.push(HW_EXPONENT);
                    friction.push(PipeFriction::HazenWilliams {
                        r: hw_resistance(p.length, p.diameter, p.roughness)?,
                    });
                }
                HeadlossModel::DarcyWeisbach => {
                    exponents.push(DW_EXPONENT);
                    friction.push(PipeFriction::DarcyWeisbach(DwGeometry::new(
                        p.length, p.diameter, p.roughness, viscosity,
                    )?));
                }
            }
        }
        Ok(Self { exponents, friction })
    }

    pub fn n_pipes(&self) -> usize {
        self.friction.len()
    }

    /// Headloss exponents `n_j` (1.852 or 2).
    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    /// `G_jj(q) = r_j(q)·|q|^{n_j−1}`.
    pub fn g_coeff(&self, j: usize, q: f64) -> f64 {
        match &self.friction[j] {
            PipeFriction::HazenWilliams { r } => r * q.abs().powf(HW_EXPONENT - 1.0),
            PipeFriction::DarcyWeisbach(geom) => geom.g_coeff(q),
        }
    }

    /// Frictional headloss across pipe `j` at flow `q`, signed.
    pub fn headloss(&self, j: usize, q: f64) -> f64 {
        self.g_coeff(j, q) * q
    }
}

/// Which pipes a headloss update touches.
#[derive(Clone, Copy, Debug)]
pub enum UpdateSubset<'a> {
    All,
    Indices(&'a [usize]),
}

/// The diagonals `G`, `F = N·G`, the regularization shift `T` and the shifted
/// diagonal `F + T`, kept in step with a flow iterate by partial updates.
#[derive(Clone, Debug)]
pub struct HeadlossState {
    g: Vec<f64>,
    f: Vec<f64>,
    t: Vec<f64>,
    f_reg: Vec<f64>,
}

impl HeadlossState {
    /// Evaluates every pipe at the given flows.
    pub fn new(model: &ResistanceModel, q: &[f64]) -> Self {
        assert_eq!(q.len(), model.n_pipes());
        let n = q.len();
        let mut s = Self {
            g: vec![0.0; n],
            f: vec![0.0; n],
            t: vec![0.0; n],
            f_reg: vec![0.0; n],
        };
        s.update(model, q, UpdateSubset::All)
            .expect("full update cannot go out of range");
        s
    }

    /// Recomputes `G` and `F` from `q` on the given subset; other entries are
    /// left untouched. `T` and `F + T` go stale until the next `regularize`.
    pub fn update(&mut self, model: &ResistanceModel, q: &[f64], subset: UpdateSubset) -> Result<()> {
        let n = model.n_pipes();
        match subset {
            UpdateSubset::All => {
                for j in 0..n {
                    let g = model.g_coeff(j, q[j]);
                    self.g[j] = g;
                    self.f[j] = model.exponents()[j] * g;
                }
            }
            UpdateSubset::Indices(idx) => {
                for &j in idx {
                    if j >= n {
                        return Err(Error::IndexOutOfRange { index: j, len: n });
                    }
                    let g = model.g_coeff(j, q[j]);
                    self.g[j] = g;
                    self.f[j] = model.exponents()[j] * g;
                }
            }
        }
        Ok(())
    }

    /// Computes the shift `T` bounding `max(F+T)/min(F+T)` by `kappa_bar` and
    /// caches `F + T`.
    pub fn regularize(&mut self, kappa_bar: f64) -> Result<()> {
        self.t = regularization_shift(&self.f, kappa_bar)?;
        for j in 0..self.f.len() {
            self.f_reg[j] = self.f[j] + self.t[j];
        }
        Ok(())
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    /// `F + T` from the most recent `regularize` call.
    pub fn f_reg(&self) -> &[f64] {
        &self.f_reg
    }
}

/// Diagonal shift `T_jj = max(0, max(F)/κ̄ − F_jj)`.
///
/// Raises every small diagonal entry to `max(F)/κ̄`, so the shifted diagonal
/// has condition number at most `κ̄` while entries already large enough are
/// untouched.
pub fn regularization_shift(f: &[f64], kappa_bar: f64) -> Result<Vec<f64>> {
    assert!(kappa_bar > 1.0, "kappa_bar must exceed 1");
    let max = f.iter().fold(0.0f64, |m, &x| m.max(x));
    if max <= 0.0 {
        return Err(Error::AllZeroDiagonal);
    }
    let floor = max / kappa_bar;
    Ok(f.iter().map(|&x| (floor - x).max(0.0)).collect())
}
