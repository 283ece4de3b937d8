//! Bounded PID adaptation of the compression weight beta.
//!
//! Once per epoch the controller sees the validation error and the current
//! information ceiling beta_max and proposes
//!     beta' = beta_max + Kp*e - I - Kd*(e - e_prev),   I += Ki*e
//! clamped into [beta_min, beta_max]. The proportional and differential
//! terms track the error, the ever-growing integral term pulls beta down as
//! training accumulates reconstruction error, and the ceiling keeps the
//! compression pressure below the point where the code would stop carrying
//! information.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains {
    pub k_p: f64,
    pub k_i: f64,
    pub k_d: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        PidGains {
            k_p: 0.001,
            k_i: 0.001,
            k_d: 0.001,
        }
    }
}

/// Controller state between epochs. Value-typed so a step is a pure function
/// from (state, observations) to state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidState {
    pub beta: f64,
    pub beta_min: f64,
    pub gains: PidGains,
    /// Accumulated Ki-weighted error; grows monotonically for positive Ki.
    pub integral: f64,
    /// Error of the previous update; None before the first update, which
    /// makes the first differential term exactly zero.
    pub prev_mse: Option<f64>,
}

impl PidState {
    /// Fresh controller: beta starts at the floor, integral at zero.
    pub fn new(beta_min: f64, gains: PidGains) -> Result<Self> {
        if !beta_min.is_finite() || beta_min <= 0.0 || beta_min > 1.0 {
            return Err(Error::InvalidArgument {
                name: "beta_min",
                detail: format!("{beta_min} outside (0, 1]"),
            });
        }
        for (name, g) in [
            ("k_p", gains.k_p),
            ("k_i", gains.k_i),
            ("k_d", gains.k_d),
        ] {
            if !g.is_finite() || g < 0.0 {
                return Err(Error::InvalidArgument {
                    name: "pid gains",
                    detail: format!("{name} = {g} must be finite and non-negative"),
                });
            }
        }
        Ok(PidState {
            beta: beta_min,
            beta_min,
            gains,
            integral: 0.0,
            prev_mse: None,
        })
    }

    /// One epoch-end update. The error terms always advance; the candidate
    /// formula applies when the previous beta sits inside
    /// [beta_min, beta_max] (bounds inclusive), otherwise beta snaps to the
    /// violated bound. When beta_max has fallen below beta_min the floor
    /// wins, keeping beta >= beta_min always.
    pub fn update(&self, mse: f64, beta_max: f64) -> Result<PidState> {
        if !mse.is_finite() || mse < 0.0 {
            return Err(Error::InvalidArgument {
                name: "mse",
                detail: format!("{mse} must be finite and non-negative"),
            });
        }
        if !beta_max.is_finite() || !(0.0..=1.0).contains(&beta_max) {
            return Err(Error::InvalidArgument {
                name: "beta_max",
                detail: format!("{beta_max} outside [0, 1]"),
            });
        }
        let g = self.gains;
        let integral = self.integral + g.k_i * mse;
        let differential = match self.prev_mse {
            Some(prev) => g.k_d * (mse - prev),
            None => 0.0,
        };

        let proposed = if self.beta > beta_max {
            beta_max
        } else if self.beta < self.beta_min {
            self.beta_min
        } else {
            beta_max + g.k_p * mse - integral - differential
        };
        let beta = proposed.min(beta_max).max(self.beta_min);

        Ok(PidState {
            beta,
            beta_min: self.beta_min,
            gains: g,
            integral,
            prev_mse: Some(mse),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamRole};
    use rand::Rng;

    fn gains(k_p: f64, k_i: f64, k_d: f64) -> PidGains {
        PidGains { k_p, k_i, k_d }
    }

    #[test]
    fn starts_at_the_floor() {
        let s = PidState::new(0.01, PidGains::default()).unwrap();
        assert_eq!(s.beta, 0.01);
        assert_eq!(s.integral, 0.0);
        assert_eq!(s.prev_mse, None);
    }

    #[test]
    fn zero_gains_return_beta_max_exactly() {
        let s = PidState::new(0.01, gains(0.0, 0.0, 0.0)).unwrap();
        let s = s.update(123.4, 0.77).unwrap();
        assert_eq!(s.beta, 0.77);
        let s = s.update(7.0, 0.31).unwrap();
        assert_eq!(s.beta, 0.31);
    }

    #[test]
    fn hand_iterated_constant_error_sequence() {
        // Gains 0.001 each, error 10 per epoch, ceiling 0.8:
        //   update 1: 0.8 + 0.01 - 0.01 - 0       = 0.8
        //   update 2: 0.8 + 0.01 - 0.02 - 0       = 0.79
        //   update 3: 0.8 + 0.01 - 0.03 - 0       = 0.78
        let mut s = PidState::new(0.01, gains(0.001, 0.001, 0.001)).unwrap();
        for expect in [0.8, 0.79, 0.78] {
            s = s.update(10.0, 0.8).unwrap();
            assert!((s.beta - expect).abs() <= 1e-12, "{} vs {expect}", s.beta);
        }
        assert!((s.integral - 0.03).abs() <= 1e-12);
        assert_eq!(s.prev_mse, Some(10.0));
    }

    #[test]
    fn first_differential_term_is_zero() {
        // Identical states except for prev_mse must diverge on the same
        // observation once a previous error exists.
        let fresh = PidState::new(0.01, gains(0.0, 0.0, 0.1)).unwrap();
        let mut warmed = fresh;
        warmed.prev_mse = Some(2.0);
        let a = fresh.update(5.0, 0.5).unwrap();
        let b = warmed.update(5.0, 0.5).unwrap();
        assert_eq!(a.beta, 0.5);
        assert!((b.beta - (0.5 - 0.1 * 3.0)).abs() <= 1e-12);
    }

    #[test]
    fn boundary_betas_still_use_the_candidate_formula() {
        // Sitting exactly on either bound counts as inside: the candidate
        // must be computed, not frozen at the bound.
        let mut at_max = PidState::new(0.01, gains(0.0, 0.01, 0.0)).unwrap();
        at_max.beta = 0.6;
        let next = at_max.update(10.0, 0.6).unwrap();
        assert!((next.beta - 0.5).abs() <= 1e-12, "beta {}", next.beta);

        let at_min = PidState::new(0.01, gains(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(at_min.beta, at_min.beta_min);
        let next = at_min.update(10.0, 0.4).unwrap();
        assert_eq!(next.beta, 0.4);
    }

    #[test]
    fn beta_above_ceiling_snaps_to_ceiling() {
        let mut s = PidState::new(0.01, gains(0.5, 0.5, 0.5)).unwrap();
        s.beta = 0.9;
        s.prev_mse = Some(1.0);
        s.integral = 0.2;
        let next = s.update(3.0, 0.25).unwrap();
        assert_eq!(next.beta, 0.25);
        // Error accounting advances even on the snap path.
        assert!((next.integral - (0.2 + 1.5)).abs() <= 1e-12);
        assert_eq!(next.prev_mse, Some(3.0));
    }

    #[test]
    fn beta_below_floor_snaps_to_floor() {
        let mut s = PidState::new(0.01, gains(0.0, 0.0, 0.0)).unwrap();
        s.beta = 0.001;
        let next = s.update(1.0, 0.9).unwrap();
        assert_eq!(next.beta, 0.01);
    }

    #[test]
    fn candidate_is_clamped_from_both_sides() {
        // Huge proportional gain: candidate overshoots the ceiling.
        let s = PidState::new(0.01, gains(10.0, 0.0, 0.0)).unwrap();
        let up = s.update(5.0, 0.5).unwrap();
        assert_eq!(up.beta, 0.5);
        // Huge integral gain: candidate dives under the floor.
        let s = PidState::new(0.01, gains(0.0, 10.0, 0.0)).unwrap();
        let down = s.update(5.0, 0.5).unwrap();
        assert_eq!(down.beta, 0.01);
    }

    #[test]
    fn empty_clamp_interval_keeps_the_floor() {
        let s = PidState::new(0.05, gains(0.0, 0.0, 0.0)).unwrap();
        let next = s.update(1.0, 0.001).unwrap();
        assert_eq!(next.beta, 0.05);
    }

    #[test]
    fn invalid_observations_are_rejected() {
        let s = PidState::new(0.01, PidGains::default()).unwrap();
        assert!(s.update(-1.0, 0.5).is_err());
        assert!(s.update(f64::NAN, 0.5).is_err());
        assert!(s.update(1.0, 1.5).is_err());
        assert!(s.update(1.0, -0.1).is_err());
        assert!(PidState::new(0.0, PidGains::default()).is_err());
        assert!(PidState::new(0.01, gains(-0.1, 0.0, 0.0)).is_err());
    }

    #[test]
    fn random_trajectories_respect_bounds_and_accounting() {
        let mut r = stream(61, StreamRole::Synthesis);
        for _ in 0..50 {
            let mut s = PidState::new(0.02, PidGains::default()).unwrap();
            let mut integral = 0.0;
            for _ in 0..200 {
                let mse = r.gen_range(0.0..50.0);
                let bmax = r.gen_range(0.0..=1.0);
                s = s.update(mse, bmax).unwrap();
                integral += 0.001 * mse;
                assert!(s.beta >= s.beta_min);
                assert!(s.beta <= bmax.max(s.beta_min) + 1e-15);
                assert!((s.integral - integral).abs() < 1e-9);
                assert_eq!(s.prev_mse, Some(mse));
            }
        }
    }
}
