//! Quasi-static pusher-slider with an ellipsoidal limit surface.
//!
//! The slider is a rectangle pushed by a point pusher on its back face
//! (`p_x = -L/2` in the slider frame). State `[x, y, theta, p_y]`: world pose
//! of the slider and the contact coordinate along the face. Control
//! `[v_n, v_t]`: pusher velocity normal to and along the face, in the slider
//! frame. The motion cone decides between sticking and sliding contact.

use nalgebra::{DMatrix, DVector};
use num_dual::{Dual64, DualNum};

use super::ModelError;
use crate::shooting::{wrap_angle, Dynamics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContactMode {
    Sticking,
    SlidingUp,
    SlidingDown,
    /// No normal push (`v_n <= 0`), or the contact was clamped to the face end.
    Separated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PusherSlider {
    /// Half extent along the push normal.
    pub half_length: f64,
    /// Half extent of the pushed face.
    pub half_width: f64,
    pub mu_contact: f64,
    pub mu_ground: f64,
    /// Limit-surface ratio `m_max / f_max` (a length).
    pub c: f64,
    pub dt: f64,
}

impl Default for PusherSlider {
    /// 9 cm square slider, `mu_c = 0.3`, `mu_g = 0.35`, 50 ms steps.
    fn default() -> Self {
        Self::new(0.045, 0.045, 0.3, 0.35, 0.05).expect("valid defaults")
    }
}

impl PusherSlider {
    /// `c` follows from uniform ground pressure: the mean distance of the
    /// footprint from its center.
    pub fn new(half_length: f64, half_width: f64, mu_contact: f64, mu_ground: f64, dt: f64) -> Result<Self, ModelError> {
        let positive = [half_length, half_width, mu_contact, mu_ground, dt];
        if positive.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(ModelError::Invalid("pusher-slider parameters must be positive".into()));
        }
        Ok(Self {
            half_length,
            half_width,
            mu_contact,
            mu_ground,
            c: mean_radius(half_length, half_width),
            dt,
        })
    }

    fn px(&self) -> f64 {
        -self.half_length
    }

    /// Motion-cone edges `(gamma_top, gamma_bottom)` at contact `p_y`.
    pub fn cone(&self, py: f64) -> (f64, f64) {
        let (c2, px, mu) = (self.c * self.c, self.px(), self.mu_contact);
        let top = (mu * c2 - px * py + mu * px * px) / (c2 + py * py - mu * px * py);
        let bottom = (-mu * c2 - px * py - mu * px * px) / (c2 + py * py + mu * px * py);
        (top, bottom)
    }

    /// Contact mode selected by control `u` at state `x`.
    pub fn mode(&self, x: &DVector<f64>, u: &DVector<f64>) -> ContactMode {
        let (vn, vt) = (u[0], u[1]);
        if !(vn > 0.0) {
            return ContactMode::Separated;
        }
        let (top, bottom) = self.cone(x[3]);
        let ratio = vt / vn;
        if ratio > top {
            ContactMode::SlidingUp
        } else if ratio < bottom {
            ContactMode::SlidingDown
        } else {
            ContactMode::Sticking
        }
    }

    /// One explicit-Euler step plus the mode used. The angle is wrapped to
    /// `(-pi, pi]`; a contact leaving the face is clamped to its end and
    /// reported as [`ContactMode::Separated`].
    pub fn step_with_mode(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DVector<f64>, ContactMode) {
        let mode = self.mode(x, u);
        let next = self.euler(&[x[0], x[1], x[2], x[3]], &[u[0], u[1]], mode);
        let (py, clamped) = self.clamp_contact(next[3]);
        let state = DVector::from_vec(vec![next[0], next[1], wrap_angle(next[2]), py]);
        (state, if clamped { ContactMode::Separated } else { mode })
    }

    fn clamp_contact(&self, py: f64) -> (f64, bool) {
        let b = self.half_width;
        if py > b {
            (b, true)
        } else if py < -b {
            (-b, true)
        } else {
            (py, false)
        }
    }

    fn euler<T: DualNum<f64> + Copy>(&self, x: &[T; 4], u: &[T; 2], mode: ContactMode) -> [T; 4] {
        let (theta, py) = (x[2], x[3]);
        let (vn, vt) = (u[0], u[1]);
        let px = self.px();
        let c2 = self.c * self.c;
        // effective pusher velocity on the cone and contact slip rate
        let (en, et, slip) = match mode {
            ContactMode::Sticking => (vn, vt, T::from(0.0)),
            ContactMode::Separated => (T::from(0.0), T::from(0.0), vt),
            ContactMode::SlidingUp | ContactMode::SlidingDown => {
                let gamma = self.cone_generic(py, mode == ContactMode::SlidingUp);
                (vn, gamma * vn, vt - gamma * vn)
            }
        };
        let den = (py * py + c2 + px * px).recip();
        let bx = ((en * (c2 + px * px)) + et * py * px) * den;
        let by = ((en * py * px) + et * (py * py + c2)) * den;
        let omega = (-(py * en) + et * px) * den;
        let (s, co) = theta.sin_cos();
        let dt = self.dt;
        [
            x[0] + (co * bx - s * by) * dt,
            x[1] + (s * bx + co * by) * dt,
            theta + omega * dt,
            py + slip * dt,
        ]
    }

    fn cone_generic<T: DualNum<f64> + Copy>(&self, py: T, top: bool) -> T {
        let (c2, px, mu) = (self.c * self.c, self.px(), self.mu_contact);
        if top {
            (-(py * px) + mu * c2 + mu * px * px) / (py * py + c2 - py * (mu * px))
        } else {
            (-(py * px) - mu * c2 - mu * px * px) / (py * py + c2 + py * (mu * px))
        }
    }
}

/// Mean of `||r||` over a `2a x 2b` rectangle, by midpoint quadrature.
fn mean_radius(a: f64, b: f64) -> f64 {
    const N: usize = 400;
    let (hx, hy) = (a / N as f64, b / N as f64);
    let mut sum = 0.0;
    for i in 0..N {
        let x = (i as f64 + 0.5) * hx;
        for j in 0..N {
            let y = (j as f64 + 0.5) * hy;
            sum += x.hypot(y);
        }
    }
    sum / (N * N) as f64
}

impl Dynamics for PusherSlider {
    fn state_dim(&self) -> usize {
        4
    }

    fn control_dim(&self) -> usize {
        2
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        self.step_with_mode(x, u).0
    }

    /// At `v_n = 0` the derivative is the one-sided limit from `v_n > 0`, so
    /// a resting pusher still sees the effect of pushing.
    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let mode = match self.mode(x, u) {
            ContactMode::Separated if u[0] == 0.0 => {
                if u[1] > 0.0 {
                    ContactMode::SlidingUp
                } else if u[1] < 0.0 {
                    ContactMode::SlidingDown
                } else {
                    ContactMode::Sticking
                }
            }
            m => m,
        };
        let clamped = self.clamp_contact(self.euler(&[x[0], x[1], x[2], x[3]], &[u[0], u[1]], mode)[3]).1;
        let mut a = DMatrix::zeros(4, 4);
        let mut b = DMatrix::zeros(4, 2);
        for k in 0..6 {
            let seed = |i: usize, v: f64| Dual64::new(v, if i == k { 1.0 } else { 0.0 });
            let xd = [seed(0, x[0]), seed(1, x[1]), seed(2, x[2]), seed(3, x[3])];
            let ud = [seed(4, u[0]), seed(5, u[1])];
            let next = self.euler(&xd, &ud, mode);
            for (i, v) in next.iter().enumerate() {
                let d = if i == 3 && clamped { 0.0 } else { v.eps };
                if k < 4 {
                    a[(i, k)] = d;
                } else {
                    b[(i, k - 4)] = d;
                }
            }
        }
        (a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn rest_without_push() {
        let ps = PusherSlider::default();
        let x = dvector![0.1, -0.2, 0.5, 0.01];
        assert_eq!(ps.step(&x, &dvector![0.0, 0.0]), x);
    }

    #[test]
    fn central_normal_push_translates() {
        let ps = PusherSlider::default();
        let (next, mode) = ps.step_with_mode(&dvector![0.0, 0.0, 0.0, 0.0], &dvector![0.05, 0.0]);
        assert_eq!(mode, ContactMode::Sticking);
        assert_eq!(next[2], 0.0);
        assert_eq!(next[1], 0.0);
        assert!((next[0] - 0.05 * ps.dt).abs() < 1e-15);
    }

    #[test]
    fn cone_is_symmetric_at_center() {
        let ps = PusherSlider::default();
        let (top, bottom) = ps.cone(0.0);
        assert!((top + bottom).abs() < 1e-15);
        assert!(top > ps.mu_contact);
    }

    #[test]
    fn square_mean_radius() {
        // mean distance from the center of a unit square: (sqrt(2) + asinh(1)) / 6
        let exact = (2f64.sqrt() + 1f64.asinh()) / 6.0;
        assert!((mean_radius(0.5, 0.5) - exact).abs() < 1e-5);
    }

    #[test]
    fn contact_is_clamped_and_flagged() {
        let ps = PusherSlider::default();
        let (next, mode) = ps.step_with_mode(&dvector![0.0, 0.0, 0.0, 0.044], &dvector![0.0, 0.1]);
        assert_eq!(mode, ContactMode::Separated);
        assert_eq!(next[3], ps.half_width);
    }
}
