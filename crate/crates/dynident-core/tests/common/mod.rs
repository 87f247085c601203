//! Closed-form oracles shared by the integration tests.
//!
//! Everything here is derived independently of the crate under test: the
//! torque equations come from a Lagrangian derivation of each specific
//! geometry, evaluated term by term, not from any recursive algorithm.

// not every test file uses every oracle
#![allow(dead_code)]

use dynident_core::dynamics::{
    DHLink, DynamicParams, LinkDynamicParams, RobotModel, DEFAULT_GRAVITY,
};

pub const G: f64 = 9.81;

/// Table-style cylindrical arm: vertical revolute base, vertical prismatic
/// lift, horizontal prismatic reach.
pub fn cylindrical_model() -> RobotModel {
    RobotModel::new(
        vec![
            DHLink::revolute(0.0, 0.0, 0.0),
            DHLink::prismatic(0.0, -core::f64::consts::FRAC_PI_2, 0.0),
            DHLink::prismatic(0.0, 0.0, 0.0),
        ],
        DEFAULT_GRAVITY,
    )
    .unwrap()
}

/// Simplified truth for the cylindrical arm: point masses, one lumped
/// rotary inertia, no friction. Only four quantities influence its
/// dynamics: m2, m3, s3z and the lumped inertia sum.
pub fn simplified_true_params() -> DynamicParams {
    let mut p = DynamicParams::zeros(3);
    p.links_mut()[0] = LinkDynamicParams {
        mass: 2.0,
        inertia: [0.0, 1.0, 1.0, 0.0, 0.0, 0.0],
        ..LinkDynamicParams::ZERO
    };
    p.links_mut()[1] = LinkDynamicParams {
        mass: 5.0,
        inertia: [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        ..LinkDynamicParams::ZERO
    };
    p.links_mut()[2] = LinkDynamicParams {
        mass: 3.0,
        com: [0.0, 0.0, -0.5],
        inertia: [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        ..LinkDynamicParams::ZERO
    };
    p
}

/// Lagrangian torques of the cylindrical arm, valid for arbitrary masses,
/// centers of mass, inertia tensors and friction:
///
/// - joint 1 carries the total rotary inertia about the vertical axis plus
///   the radial-mass coupling with joint 3,
/// - joint 2 carries the gravity load of everything it lifts,
/// - joint 3 sees the radial acceleration minus the centrifugal term.
pub fn cylindrical_oracle(
    q: &[f64],
    qd: &[f64],
    qdd: &[f64],
    params: &DynamicParams,
    g: f64,
) -> [f64; 3] {
    let l = params.links();
    let (m1, m2, m3) = (l[0].mass, l[1].mass, l[2].mass);
    let s1 = l[0].com;
    let s2 = l[1].com;
    let s3 = l[2].com;
    let i1zz = l[0].inertia[2];
    let i2yy = l[1].inertia[1];
    let i3yy = l[2].inertia[1];

    let radial = q[2] + s3[2];
    let rotary = m1 * (s1[0] * s1[0] + s1[1] * s1[1])
        + i1zz
        + m2 * (s2[0] * s2[0] + s2[2] * s2[2])
        + i2yy
        + i3yy
        + m3 * (radial * radial + s3[0] * s3[0]);

    let friction = |p: &LinkDynamicParams, v: f64| {
        let sign = if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        };
        p.coulomb * sign + p.viscous * v
    };

    let tau1 = rotary * qdd[0] + m3 * s3[0] * qdd[2] + 2.0 * m3 * radial * qd[0] * qd[2]
        + friction(&l[0], qd[0]);
    let tau2 = (m2 + m3) * (qdd[1] + g) + friction(&l[1], qd[1]);
    let tau3 = m3 * s3[0] * qdd[0] + m3 * qdd[2] - m3 * radial * qd[0] * qd[0]
        + friction(&l[2], qd[2]);
    [tau1, tau2, tau3]
}

/// Two-link planar arm under gravity along -y.
pub struct Planar2R {
    pub l1: f64,
    pub l2: f64,
    pub lc1: f64,
    pub lc2: f64,
    pub m1: f64,
    pub m2: f64,
    pub i1: f64,
    pub i2: f64,
}

impl Planar2R {
    pub fn reference() -> Self {
        Self { l1: 0.8, l2: 0.6, lc1: 0.5, lc2: 0.25, m1: 2.3, m2: 1.1, i1: 0.31, i2: 0.12 }
    }

    pub fn model(&self) -> RobotModel {
        RobotModel::new(
            vec![
                DHLink::revolute(self.l1, 0.0, 0.0),
                DHLink::revolute(self.l2, 0.0, 0.0),
            ],
            [0.0, -G, 0.0],
        )
        .unwrap()
    }

    pub fn params(&self) -> DynamicParams {
        let mut p = DynamicParams::zeros(2);
        p.links_mut()[0] = LinkDynamicParams {
            mass: self.m1,
            com: [self.lc1 - self.l1, 0.0, 0.0],
            inertia: [0.0, 0.0, self.i1, 0.0, 0.0, 0.0],
            ..LinkDynamicParams::ZERO
        };
        p.links_mut()[1] = LinkDynamicParams {
            mass: self.m2,
            com: [self.lc2 - self.l2, 0.0, 0.0],
            inertia: [0.0, 0.0, self.i2, 0.0, 0.0, 0.0],
            ..LinkDynamicParams::ZERO
        };
        p
    }

    /// Textbook equations of motion with the standard inertia matrix,
    /// Coriolis and gravity terms.
    pub fn oracle(&self, q: &[f64], qd: &[f64], qdd: &[f64]) -> [f64; 2] {
        let (c2, s2) = (q[1].cos(), q[1].sin());
        let m11 = self.m1 * self.lc1 * self.lc1
            + self.i1
            + self.m2 * (self.l1 * self.l1 + self.lc2 * self.lc2 + 2.0 * self.l1 * self.lc2 * c2)
            + self.i2;
        let m12 = self.m2 * (self.lc2 * self.lc2 + self.l1 * self.lc2 * c2) + self.i2;
        let m22 = self.m2 * self.lc2 * self.lc2 + self.i2;
        let h = -self.m2 * self.l1 * self.lc2 * s2;
        let g1 = (self.m1 * self.lc1 + self.m2 * self.l1) * G * q[0].cos()
            + self.m2 * self.lc2 * G * (q[0] + q[1]).cos();
        let g2 = self.m2 * self.lc2 * G * (q[0] + q[1]).cos();
        [
            m11 * qdd[0] + m12 * qdd[1] + h * qd[1] * qd[0] + (h * qd[0] + h * qd[1]) * qd[1] + g1,
            m12 * qdd[0] + m22 * qdd[1] - h * qd[0] * qd[0] + g2,
        ]
    }
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-9))
        .fold(0.0, f64::max)
}
