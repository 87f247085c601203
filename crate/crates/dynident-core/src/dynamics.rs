//! Serial-manipulator kinematics and inverse dynamics.
//!
//! Models are described by standard (distal) Denavit-Hartenberg rows with
//! the transform order `Rot_z(theta) * Trans_z(d) * Trans_x(a) * Rot_x(alpha)`.
//! Joint torques/forces are computed by the recursive Newton-Euler two-pass
//! algorithm directly from raw per-link physical parameters, so any candidate
//! point of a search box — physical or not — can be evaluated.

use alloc::vec::Vec;

use nalgebra::{Matrix3, Matrix4, Vector3};

/// Whether a joint rotates about or translates along its axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// One standard-DH row.
///
/// For a revolute joint the angle is the joint variable and `d` is fixed;
/// for a prismatic joint the offset along the axis is the joint variable
/// and `theta_offset` is the fixed angle.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DHLink {
    /// Link length (m).
    pub a: f64,
    /// Link twist (rad).
    pub alpha: f64,
    /// Link offset (m); fixed value, used by revolute joints.
    pub d: f64,
    /// Joint angle (rad); fixed value, used by prismatic joints.
    pub theta_offset: f64,
    pub kind: JointKind,
}

impl DHLink {
    pub fn revolute(a: f64, alpha: f64, d: f64) -> Self {
        Self { a, alpha, d, theta_offset: 0.0, kind: JointKind::Revolute }
    }

    pub fn prismatic(a: f64, alpha: f64, theta_offset: f64) -> Self {
        Self { a, alpha, d: 0.0, theta_offset, kind: JointKind::Prismatic }
    }

    /// The (theta, d) pair actually used at a given joint value.
    fn theta_d(&self, joint_value: f64) -> (f64, f64) {
        match self.kind {
            JointKind::Revolute => (joint_value, self.d),
            JointKind::Prismatic => (self.theta_offset, joint_value),
        }
    }
}

/// Kinematic description of a serial chain: DH rows plus the gravity vector
/// expressed in the base frame. Fixed during estimation.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RobotModel {
    links: Vec<DHLink>,
    gravity: [f64; 3],
}

/// Gravity used when none is specified (base z up, m/s^2).
pub const DEFAULT_GRAVITY: [f64; 3] = [0.0, 0.0, -9.81];

impl RobotModel {
    pub fn new(links: Vec<DHLink>, gravity: [f64; 3]) -> Result<Self, DynamicsError> {
        if links.is_empty() {
            return Err(DynamicsError::EmptyModel);
        }
        if !gravity.iter().all(|g| g.is_finite()) {
            return Err(DynamicsError::NonFiniteGravity);
        }
        Ok(Self { links, gravity })
    }

    /// Degrees of freedom.
    pub fn dof(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[DHLink] {
        &self.links
    }

    pub fn gravity(&self) -> [f64; 3] {
        self.gravity
    }
}

/// Number of scalars describing one link: `[m, s_x, s_y, s_z, I_xx, I_yy,
/// I_zz, I_xy, I_yz, I_xz, f_c, f_v]`.
pub const PARAMS_PER_LINK: usize = 12;

/// Short names of the per-link scalars, in canonical flattening order.
pub const PARAM_NAMES: [&str; PARAMS_PER_LINK] = [
    "m", "s_x", "s_y", "s_z", "I_xx", "I_yy", "I_zz", "I_xy", "I_yz", "I_xz", "f_c", "f_v",
];

/// Physical parameters of one link.
///
/// The inertia tensor is given about the link's center of mass, expressed
/// in the link frame, as `[I_xx, I_yy, I_zz, I_xy, I_yz, I_xz]`. No
/// positivity or positive-definiteness is required: candidates produced by
/// a box search may be nonphysical and must still evaluate.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinkDynamicParams {
    /// Mass (kg).
    pub mass: f64,
    /// Center of mass in the link frame (m).
    pub com: [f64; 3],
    /// Inertia about the center of mass, link frame (kg m^2).
    pub inertia: [f64; 6],
    /// Coulomb friction coefficient.
    pub coulomb: f64,
    /// Viscous friction coefficient.
    pub viscous: f64,
}

impl LinkDynamicParams {
    pub const ZERO: Self = Self {
        mass: 0.0,
        com: [0.0; 3],
        inertia: [0.0; 6],
        coulomb: 0.0,
        viscous: 0.0,
    };

    pub fn point_mass(mass: f64, com: [f64; 3]) -> Self {
        Self { mass, com, ..Self::ZERO }
    }

    /// Friction torque/force at joint velocity `qd`: `f_c sign(qd) + f_v qd`,
    /// with `sign(0) = 0` so a resting joint sees no Coulomb torque.
    pub fn friction_torque(&self, qd: f64) -> f64 {
        self.coulomb * sign(qd) + self.viscous * qd
    }

    fn inertia_matrix(&self) -> Matrix3<f64> {
        let [ixx, iyy, izz, ixy, iyz, ixz] = self.inertia;
        Matrix3::new(ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Full parameter set of a robot: one [`LinkDynamicParams`] per link.
///
/// Flattens to a `12n` vector in canonical order (see [`PARAM_NAMES`]),
/// links in chain order; `flatten` and `unflatten` are inverses.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DynamicParams {
    per_link: Vec<LinkDynamicParams>,
}

impl DynamicParams {
    pub fn new(per_link: Vec<LinkDynamicParams>) -> Self {
        Self { per_link }
    }

    pub fn zeros(n_links: usize) -> Self {
        Self { per_link: alloc::vec![LinkDynamicParams::ZERO; n_links] }
    }

    pub fn n_links(&self) -> usize {
        self.per_link.len()
    }

    pub fn links(&self) -> &[LinkDynamicParams] {
        &self.per_link
    }

    pub fn links_mut(&mut self) -> &mut [LinkDynamicParams] {
        &mut self.per_link
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.per_link.len() * PARAMS_PER_LINK);
        for link in &self.per_link {
            out.push(link.mass);
            out.extend_from_slice(&link.com);
            out.extend_from_slice(&link.inertia);
            out.push(link.coulomb);
            out.push(link.viscous);
        }
        out
    }

    pub fn unflatten(values: &[f64]) -> Result<Self, DynamicsError> {
        if values.is_empty() || values.len() % PARAMS_PER_LINK != 0 {
            return Err(DynamicsError::BadParamVector { len: values.len() });
        }
        let per_link = values
            .chunks_exact(PARAMS_PER_LINK)
            .map(|c| LinkDynamicParams {
                mass: c[0],
                com: [c[1], c[2], c[3]],
                inertia: [c[4], c[5], c[6], c[7], c[8], c[9]],
                coulomb: c[10],
                viscous: c[11],
            })
            .collect();
        Ok(Self { per_link })
    }

    /// Read one scalar by flat index (`link * 12 + offset`).
    pub fn get_flat(&self, index: usize) -> Option<f64> {
        let link = self.per_link.get(index / PARAMS_PER_LINK)?;
        let c = [
            link.mass,
            link.com[0],
            link.com[1],
            link.com[2],
            link.inertia[0],
            link.inertia[1],
            link.inertia[2],
            link.inertia[3],
            link.inertia[4],
            link.inertia[5],
            link.coulomb,
            link.viscous,
        ];
        Some(c[index % PARAMS_PER_LINK])
    }

    /// Write one scalar by flat index.
    pub fn set_flat(&mut self, index: usize, value: f64) {
        let link = &mut self.per_link[index / PARAMS_PER_LINK];
        match index % PARAMS_PER_LINK {
            0 => link.mass = value,
            1 => link.com[0] = value,
            2 => link.com[1] = value,
            3 => link.com[2] = value,
            4 => link.inertia[0] = value,
            5 => link.inertia[1] = value,
            6 => link.inertia[2] = value,
            7 => link.inertia[3] = value,
            8 => link.inertia[4] = value,
            9 => link.inertia[5] = value,
            10 => link.coulomb = value,
            _ => link.viscous = value,
        }
    }
}

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum DynamicsError {
    #[error("robot model needs at least one link")]
    EmptyModel,
    #[error("gravity vector must be finite")]
    NonFiniteGravity,
    #[error("expected vectors of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parameter vector length {len} is not a nonzero multiple of 12")]
    BadParamVector { len: usize },
}

/// Rotation of the link transform and the inter-origin offset expressed in
/// the *child* frame, `(a, d sin(alpha), d cos(alpha))`.
fn frame_step(link: &DHLink, joint_value: f64) -> (Matrix3<f64>, Vector3<f64>) {
    let (theta, d) = link.theta_d(joint_value);
    let (st, ct) = (libm::sin(theta), libm::cos(theta));
    let (sa, ca) = (libm::sin(link.alpha), libm::cos(link.alpha));
    let rot = Matrix3::new(
        ct, -st * ca, st * sa, //
        st, ct * ca, -ct * sa, //
        0.0, sa, ca,
    );
    let offset = Vector3::new(link.a, d * sa, d * ca);
    (rot, offset)
}

/// Homogeneous transform of one DH row at the given joint value:
/// `Rot_z(theta) * Trans_z(d) * Trans_x(a) * Rot_x(alpha)`.
pub fn link_transform(link: &DHLink, joint_value: f64) -> Matrix4<f64> {
    let (rot, _) = frame_step(link, joint_value);
    let (theta, d) = link.theta_d(joint_value);
    let translation = Vector3::new(link.a * libm::cos(theta), link.a * libm::sin(theta), d);
    let mut out = Matrix4::identity();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&rot);
    out.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
    out
}

/// Joint forces/torques for the given joint state: the recursive
/// Newton-Euler outward/inward passes plus per-joint friction.
///
/// Gravity enters through the standard base-acceleration substitution, so
/// a zero gravity vector and zero joint rates yield exactly zero torque for
/// any parameter values.
pub fn inverse_dynamics(
    model: &RobotModel,
    params: &DynamicParams,
    q: &[f64],
    qd: &[f64],
    qdd: &[f64],
) -> Result<Vec<f64>, DynamicsError> {
    let n = model.dof();
    for len in [q.len(), qd.len(), qdd.len()] {
        if len != n {
            return Err(DynamicsError::DimensionMismatch { expected: n, got: len });
        }
    }
    if params.n_links() != n {
        return Err(DynamicsError::DimensionMismatch { expected: n, got: params.n_links() });
    }

    let z = Vector3::z();
    let gravity = Vector3::from(model.gravity());

    // Outward pass: propagate angular velocity/acceleration and linear
    // acceleration from the base, all expressed in each link's own frame.
    let mut rots: Vec<Matrix3<f64>> = Vec::with_capacity(n);
    let mut forces: Vec<Vector3<f64>> = Vec::with_capacity(n);
    let mut moments: Vec<Vector3<f64>> = Vec::with_capacity(n);
    let mut offsets: Vec<Vector3<f64>> = Vec::with_capacity(n);

    let mut w = Vector3::zeros();
    let mut wd = Vector3::zeros();
    let mut vd = -gravity;
    for i in 0..n {
        let link = &model.links()[i];
        let (rot, offset) = frame_step(link, q[i]);
        let rt = rot.transpose();
        match link.kind {
            JointKind::Revolute => {
                wd = rt * (wd + qdd[i] * z + w.cross(&(qd[i] * z)));
                w = rt * (w + qd[i] * z);
                vd = rt * vd + wd.cross(&offset) + w.cross(&w.cross(&offset));
            }
            JointKind::Prismatic => {
                w = rt * w;
                wd = rt * wd;
                let joint_rate = rt * (qd[i] * z);
                vd = rt * (vd + qdd[i] * z)
                    + wd.cross(&offset)
                    + 2.0 * w.cross(&joint_rate)
                    + w.cross(&w.cross(&offset));
            }
        }
        let p = &params.links()[i];
        let com = Vector3::from(p.com);
        let vc = vd + wd.cross(&com) + w.cross(&w.cross(&com));
        let inertia = p.inertia_matrix();
        forces.push(p.mass * vc);
        moments.push(inertia * wd + w.cross(&(inertia * w)));
        rots.push(rot);
        offsets.push(offset);
    }

    // Inward pass: accumulate interaction forces/moments from the tip and
    // project each onto its joint axis (z of the parent frame).
    let mut tau = alloc::vec![0.0; n];
    let mut f = Vector3::zeros();
    let mut nn = Vector3::zeros();
    for i in (0..n).rev() {
        let p = &params.links()[i];
        let f_child = if i + 1 < n { rots[i + 1] * f } else { Vector3::zeros() };
        let n_child = if i + 1 < n { rots[i + 1] * nn } else { Vector3::zeros() };
        let f_total = f_child + forces[i];
        nn = moments[i]
            + n_child
            + offsets[i].cross(&f_total)
            + Vector3::from(p.com).cross(&forces[i]);
        f = f_total;
        let axis = rots[i].transpose() * z;
        tau[i] = match model.links()[i].kind {
            JointKind::Revolute => nn.dot(&axis),
            JointKind::Prismatic => f.dot(&axis),
        } + p.friction_torque(qd[i]);
    }
    Ok(tau)
}
