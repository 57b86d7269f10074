use super::sim::{ModalState, Simulator};
use super::ModalReservoir;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

/// Relative level the port-signal difference must fall (and stay) below.
pub const CONVERGENCE_TOL: f64 = 1e-6;

/// Horizon, in units of the amplitude decay time `1 / gamma`.
const HORIZON_DECAYS: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoState {
    /// Time after which the port difference stays below `CONVERGENCE_TOL`
    /// times its initial amplitude (peak over the first period of the
    /// slowest mode), s.
    pub convergence_time: f64,
    /// Decay rate of the difference envelope from a log-linear fit, 1/s.
    pub fitted_rate: f64,
}

/// Runs the same drive from two initial states and measures how fast the
/// linear port signals forget the difference. The drive is zero-extended
/// to cover the horizon of `20 / gamma`.
pub fn echo_state_check<T: Scalar>(
    reservoir: &ModalReservoir<T>,
    drive: &TimeSeries<T>,
    init_a: ModalState<T>,
    init_b: ModalState<T>,
) -> Result<EchoState> {
    let dt = drive.dt();
    let gamma = reservoir.damping_rate().to_f64_lossy();
    let horizon = HORIZON_DECAYS / gamma;
    let n_ports = reservoir.n_ports();

    let mut sim_a = Simulator::new(reservoir, dt)?.with_state(init_a)?;
    let mut sim_b = Simulator::new(reservoir, dt)?.with_state(init_b)?;
    let (mut va, mut vb) = (vec![T::zero(); n_ports], vec![T::zero(); n_ports]);
    let diff_norm = |a: &[T], b: &[T]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x.to_f64_lossy() - y.to_f64_lossy()).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    sim_a.port_voltages(&mut va);
    sim_b.port_voltages(&mut vb);
    let at_zero = diff_norm(&va, &vb);

    let u = drive.channel(0);
    let n_steps = (horizon / dt).ceil() as usize;
    let mut diffs = Vec::with_capacity(n_steps);
    for n in 0..n_steps {
        let x = if n < u.len() { u[n] } else { T::zero() };
        sim_a.step(x);
        sim_b.step(x);
        sim_a.port_voltages(&mut va);
        sim_b.port_voltages(&mut vb);
        diffs.push(diff_norm(&va, &vb));
    }
    let window = slowest_period_samples(reservoir, dt).min(diffs.len());
    let initial = diffs[..window].iter().fold(at_zero, |m, &d| m.max(d));
    if initial == 0.0 {
        return Ok(EchoState {
            convergence_time: 0.0,
            fitted_rate: gamma,
        });
    }

    let tol = CONVERGENCE_TOL * initial;
    let convergence_time = match diffs.iter().rposition(|&d| d >= tol) {
        None => 0.0,
        Some(last) if last + 1 == diffs.len() => return Err(Error::EchoStateViolation { horizon }),
        Some(last) => (last + 2) as f64 * dt,
    };

    Ok(EchoState {
        convergence_time,
        fitted_rate: envelope_rate(reservoir, &diffs, dt, initial),
    })
}

fn slowest_period_samples<T: Scalar>(reservoir: &ModalReservoir<T>, dt: f64) -> usize {
    let w_min = reservoir
        .mode_freqs()
        .iter()
        .map(|w| w.to_f64_lossy())
        .fold(f64::INFINITY, f64::min);
    ((2.0 * std::f64::consts::PI / w_min / dt).ceil() as usize).max(1)
}

/// Log-linear fit to per-window maxima of `diffs`, windows spanning one
/// period of the lowest mode.
fn envelope_rate<T: Scalar>(
    reservoir: &ModalReservoir<T>,
    diffs: &[f64],
    dt: f64,
    initial: f64,
) -> f64 {
    let window = slowest_period_samples(reservoir, dt);
    let floor = 1e-11 * initial;
    let (mut ts, mut ls) = (Vec::new(), Vec::new());
    for (w, chunk) in diffs.chunks(window).enumerate() {
        if chunk.len() < window {
            break;
        }
        let (i, &peak) =
            chunk.iter().enumerate().fold(
                (0, &0.0),
                |best, (i, d)| if d > best.1 { (i, d) } else { best },
            );
        if peak <= floor {
            break;
        }
        ts.push((w * window + i + 1) as f64 * dt);
        ls.push(peak.ln());
    }
    let n = ts.len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let (mt, ml) = (ts.iter().sum::<f64>() / n, ls.iter().sum::<f64>() / n);
    let cov: f64 = ts.iter().zip(&ls).map(|(t, l)| (t - mt) * (l - ml)).sum();
    let var: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    -cov / var
}
