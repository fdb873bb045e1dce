//! The deterministic part of the dynamics: every finite height grows with
//! velocity `y(y+1)` (or `y` in the Plancherel model) until it reaches `r`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Velocity `y(y+1)`, rates `q(i,j)`.
    #[default]
    Full,
    /// Velocity `y`, all rates equal to 1.
    Plancherel,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Mode::Full),
            "plancherel" => Ok(Mode::Plancherel),
            other => Err(Error::InvalidInput(format!("unknown mode {other:?}"))),
        }
    }
}

/// Velocity field at height `y`.
pub fn velocity(y: f64, mode: Mode) -> f64 {
    match mode {
        Mode::Full => y * (y + 1.0),
        Mode::Plancherel => y,
    }
}

/// Time for the flow to carry `y` up to `b`.
///
/// Full mode: `ln(b(y+1) / (y(b+1)))`, evaluated through `ln_1p` so that it
/// stays accurate when `b` is close to `y`.
pub fn hitting_time(y: f64, b: f64, mode: Mode) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::NoHittingTime(y));
    }
    if b <= y {
        return Ok(0.0);
    }
    let gap = b - y;
    Ok(match mode {
        Mode::Full => (gap / y).ln_1p() - (gap / (y + 1.0)).ln_1p(),
        Mode::Plancherel => (gap / y).ln_1p(),
    })
}

/// Position after time `t` starting from `y`, capped at `r`.
///
/// The full-mode solution `y eᵗ / (1 − y(eᵗ − 1))` blows up in finite time;
/// the cap is applied through the hitting time, never by evaluating past
/// the pole.
pub fn flow(y: f64, t: f64, r: f64, mode: Mode) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y >= r {
        return r;
    }
    if t <= 0.0 {
        return y;
    }
    let to_cap = hitting_time(y, r, mode).expect("y > 0");
    if t >= to_cap {
        return r;
    }
    let out = match mode {
        Mode::Full => y * t.exp() / (1.0 - y * t.exp_m1()),
        Mode::Plancherel => y * t.exp(),
    };
    out.min(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Classical RK4 on `y' = v(y)`; independent of the closed forms.
    fn rk4(y0: f64, t: f64, mode: Mode, steps: usize) -> f64 {
        let h = t / steps as f64;
        let mut y = y0;
        for _ in 0..steps {
            let k1 = velocity(y, mode);
            let k2 = velocity(y + 0.5 * h * k1, mode);
            let k3 = velocity(y + 0.5 * h * k2, mode);
            let k4 = velocity(y + h * k3, mode);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        y
    }

    #[test]
    fn flow_examples() {
        for mode in [Mode::Full, Mode::Plancherel] {
            assert_eq!(flow(0.7, 0.0, 10.0, mode), 0.7);
            assert_eq!(flow(10.0, 3.0, 10.0, mode), 10.0);
            assert_eq!(flow(0.0, 3.0, 10.0, mode), 0.0);
        }
        let t = (4.0f64 / 3.0).ln();
        assert!((flow(1.0, t, 10.0, Mode::Full) - 2.0).abs() < 1e-12);
        assert!((rk4(1.0, t, Mode::Full, 100_000) - 2.0).abs() < 1e-10);
        // Blow-up from 1 happens at ln 2.
        for r in [1.5, 10.0, 1e6] {
            assert_eq!(flow(1.0, 2f64.ln(), r, Mode::Full), r);
            assert_eq!(flow(1.0, 5.0, r, Mode::Full), r);
        }
    }

    #[test]
    fn hitting_time_examples() {
        assert_eq!(hitting_time(0.4, 0.4, Mode::Full).unwrap(), 0.0);
        assert!((hitting_time(1.0, 2.0, Mode::Full).unwrap() - (4.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!((hitting_time(1.0, std::f64::consts::E, Mode::Plancherel).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(hitting_time(0.0, 1.0, Mode::Full), Err(Error::NoHittingTime(0.0)));
    }

    #[test]
    fn closed_form_matches_ode() {
        for mode in [Mode::Full, Mode::Plancherel] {
            for &y in &[0.01, 0.1, 0.5, 1.0, 2.5] {
                for &t in &[0.01, 0.1, 0.3] {
                    let exact = flow(y, t, 1e9, mode);
                    let ode = rk4(y, t, mode, 20_000);
                    assert!((exact - ode).abs() <= 1e-7 * ode.abs().max(1.0), "{mode:?} {y} {t}");
                }
            }
        }
    }
}
