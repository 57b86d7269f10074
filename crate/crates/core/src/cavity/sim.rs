use ndarray::Array2;

use super::diode::{diode, DiodeParams};
use super::ModalReservoir;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

/// Largest waveform step accepted for a reservoir: `1 / (20 f_max)`.
pub fn stability_limit<T: Scalar>(reservoir: &ModalReservoir<T>) -> f64 {
    let w_max = reservoir
        .mode_freqs()
        .iter()
        .map(|w| w.to_f64_lossy())
        .fold(0.0, f64::max);
    let f_max = w_max / (2.0 * std::f64::consts::PI);
    1.0 / (20.0 * f_max)
}

/// Mode displacements `a_k` and velocities `da_k/dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState<T> {
    pub displacement: Vec<T>,
    pub velocity: Vec<T>,
}

impl<T: Scalar> ModalState<T> {
    pub fn zeros(k: usize) -> Self {
        Self {
            displacement: vec![T::zero(); k],
            velocity: vec![T::zero(); k],
        }
    }

    /// `sum_k (v_k^2 + w_k^2 a_k^2) / 2`.
    pub fn energy(&self, mode_freqs: &[T]) -> T {
        let half = T::lit(0.5);
        self.displacement
            .iter()
            .zip(&self.velocity)
            .zip(mode_freqs)
            .map(|((a, v), w)| half * (*v * *v + *w * *w * *a * *a))
            .sum()
    }
}

/// Exact one-step propagator of `a'' + 2 g a' + w^2 a = b u` under a
/// zero-order-held input, for one mode. Coefficients are computed in `f64`.
fn propagator(w: f64, gamma: f64, b: f64, h: f64) -> [f64; 6] {
    let disc = w * w - gamma * gamma;
    let (c, s) = if disc > 0.0 {
        let r = disc.sqrt();
        ((r * h).cos(), (r * h).sin() / r)
    } else if disc < 0.0 {
        let r = (-disc).sqrt();
        ((r * h).cosh(), (r * h).sinh() / r)
    } else {
        (1.0, h)
    };
    let e = (-gamma * h).exp();
    let p11 = e * (c + gamma * s);
    let p12 = e * s;
    let p21 = -w * w * e * s;
    let p22 = e * (c - gamma * s);
    // Response to a unit step held for h, starting from rest.
    let g1 = b * (1.0 - p11) / (w * w);
    let g2 = b * e * s;
    [p11, p12, p21, p22, g1, g2]
}

/// Steps a reservoir's modes through a drive, one waveform sample at a time.
#[derive(Debug, Clone)]
pub struct Simulator<'r, T> {
    reservoir: &'r ModalReservoir<T>,
    coeffs: [Vec<T>; 6],
    state: ModalState<T>,
}

impl<'r, T: Scalar> Simulator<'r, T> {
    pub fn new(reservoir: &'r ModalReservoir<T>, dt: f64) -> Result<Self> {
        let limit = stability_limit(reservoir);
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-9) {
            return Err(Error::StepTooLarge { dt, limit });
        }
        let gamma = reservoir.damping_rate().to_f64_lossy();
        let mut coeffs: [Vec<T>; 6] = Default::default();
        for (w, b) in reservoir
            .mode_freqs()
            .iter()
            .zip(reservoir.input_couplings())
        {
            let p = propagator(w.to_f64_lossy(), gamma, b.to_f64_lossy(), dt);
            for (dst, v) in coeffs.iter_mut().zip(p) {
                dst.push(T::lit(v));
            }
        }
        Ok(Self {
            reservoir,
            coeffs,
            state: ModalState::zeros(reservoir.n_modes()),
        })
    }

    pub fn with_state(mut self, state: ModalState<T>) -> Result<Self> {
        let k = self.reservoir.n_modes();
        if state.displacement.len() != k || state.velocity.len() != k {
            return Err(Error::DimensionMismatch {
                left: format!("{k} modes"),
                right: format!("state of length {}", state.displacement.len()),
            });
        }
        self.state = state;
        Ok(self)
    }

    pub fn state(&self) -> &ModalState<T> {
        &self.state
    }

    /// Advances every mode by one step with input `u` held constant.
    #[inline]
    pub fn step(&mut self, u: T) {
        let [p11, p12, p21, p22, g1, g2] = &self.coeffs;
        let a = &mut self.state.displacement;
        let v = &mut self.state.velocity;
        for k in 0..a.len() {
            let (ak, vk) = (a[k], v[k]);
            a[k] = p11[k] * ak + p12[k] * vk + g1[k] * u;
            v[k] = p21[k] * ak + p22[k] * vk + g2[k] * u;
        }
    }

    /// Linear port voltages `sum_k C_pk da_k/dt` for the current state.
    pub fn port_voltages(&self, out: &mut [T]) {
        let c = self.reservoir.port_couplings();
        let v = &self.state.velocity;
        for (p, o) in out.iter_mut().enumerate() {
            let row = c.row(p);
            let row = row.as_slice().expect("row-major couplings");
            *o = row
                .iter()
                .zip(v)
                .fold(T::zero(), |acc, (c, v)| acc + *c * *v);
        }
    }

    /// Runs the drive, returning `n_ports x len` pre-diode port voltages;
    /// column `n` is the state at time `(n + 1) dt`.
    pub fn run(&mut self, drive: &[T]) -> Array2<T> {
        let n_ports = self.reservoir.n_ports();
        let mut out = Array2::zeros((n_ports, drive.len()));
        let mut buf = vec![T::zero(); n_ports];
        for (n, &u) in drive.iter().enumerate() {
            self.step(u);
            self.port_voltages(&mut buf);
            for (p, v) in buf.iter().enumerate() {
                out[[p, n]] = *v;
            }
        }
        out
    }
}

fn single_channel<T: Scalar>(drive: &TimeSeries<T>) -> Result<&[T]> {
    if drive.n_channels() != 1 {
        return Err(Error::invalid(format!(
            "cavity takes a single drive channel, got {}",
            drive.n_channels()
        )));
    }
    Ok(drive.values().as_slice().expect("standard layout drive"))
}

fn port_names(n: usize) -> Vec<String> {
    (0..n).map(|p| format!("port{p}")).collect()
}

/// Pre-diode port voltages from rest.
pub fn simulate_linear<T: Scalar>(
    reservoir: &ModalReservoir<T>,
    drive: &TimeSeries<T>,
) -> Result<TimeSeries<T>> {
    let u = single_channel(drive)?;
    let mut sim = Simulator::new(reservoir, drive.dt())?;
    let v = sim.run(u);
    TimeSeries::with_names(port_names(reservoir.n_ports()), v, drive.dt())
}

/// Diode-mapped port voltages from rest.
pub fn simulate<T: Scalar>(
    reservoir: &ModalReservoir<T>,
    drive: &TimeSeries<T>,
) -> Result<TimeSeries<T>> {
    let lin = simulate_linear(reservoir, drive)?;
    let p = *reservoir.diode();
    let dt = lin.dt();
    let names = lin.names().to_vec();
    let v = lin.into_values().mapv_into(|x| diode(x, &p));
    TimeSeries::with_names(names, v, dt)
}

/// Diode with knee at `fraction` of the RMS drive-induced port voltage.
pub fn calibrate_diode<T: Scalar>(
    reservoir: &ModalReservoir<T>,
    drive: &TimeSeries<T>,
    alpha: T,
    fraction: f64,
) -> Result<DiodeParams<T>> {
    let lin = simulate_linear(reservoir, drive)?;
    let v = lin.values();
    let ms = v.iter().map(|x| x.to_f64_lossy().powi(2)).sum::<f64>() / v.len().max(1) as f64;
    let rms = ms.sqrt();
    if !(rms > 0.0) {
        return Err(Error::invalid("cannot calibrate diode on a silent drive"));
    }
    DiodeParams::new(alpha, T::lit(fraction * rms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::{build_cavity, CavityConfig};
    use ndarray::Array2;
    use std::f64::consts::PI;

    fn single_mode(w: f64, gamma: f64, b: f64) -> ModalReservoir<f64> {
        ModalReservoir::from_parts(
            vec![w],
            gamma,
            vec![b],
            Array2::from_elem((1, 1), 1.0),
            DiodeParams::bypass(),
            (w * 0.5, w * 1.5),
            0,
        )
        .unwrap()
    }

    #[test]
    fn zero_drive_zero_output() {
        let r = build_cavity::<f64>(&CavityConfig::default(), 1).unwrap();
        let drive = TimeSeries::scalar("u", vec![0.0; 500], 5e-12).unwrap();
        let out = simulate(&r, &drive).unwrap();
        assert!(out.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_large_step() {
        let r = build_cavity::<f64>(&CavityConfig::default(), 1).unwrap();
        let drive = TimeSeries::scalar("u", vec![0.0; 10], 20e-12).unwrap();
        assert!(matches!(
            simulate(&r, &drive),
            Err(Error::StepTooLarge { .. })
        ));
    }

    /// Constant forcing from rest: a(t) = (b u / w^2)(1 - e^{-gt}(cos wd t + (g/wd) sin wd t)).
    #[test]
    fn matches_closed_form_under_constant_drive() {
        let (w, g, b, u) = (2.0 * PI * 3e9, 1.0 / 600e-12, 0.7, 1.3);
        let r = single_mode(w, g, b);
        let dt = 2e-12;
        let mut sim = Simulator::new(&r, dt).unwrap();
        let wd = (w * w - g * g).sqrt();
        for n in 1..=2000 {
            sim.step(u);
            let t = n as f64 * dt;
            let e = (-g * t).exp();
            let a = b * u / (w * w) * (1.0 - e * ((wd * t).cos() + g / wd * (wd * t).sin()));
            let v = b * u / (w * w) * e * (w * w / wd) * (wd * t).sin();
            let got = sim.state();
            let scale = b * u / (w * w);
            assert!((got.displacement[0] - a).abs() <= 1e-9 * scale, "n={n}");
            assert!((got.velocity[0] - v).abs() <= 1e-9 * scale * w, "n={n}");
        }
    }

    #[test]
    fn overdamped_mode_matches_closed_form() {
        // w < g: a(t) = (b u / w^2)(1 - e^{-gt}(cosh rt + (g/r) sinh rt)), r = sqrt(g^2 - w^2)
        let (w, g, b, u) = (1e9, 3e9, 1.0, 1.0);
        let r = single_mode(w, g, b);
        let dt = 1e-12;
        let mut sim = Simulator::new(&r, dt).unwrap();
        let rr = (g * g - w * w).sqrt();
        for n in 1..=3000 {
            sim.step(u);
            let t = n as f64 * dt;
            let e = (-g * t).exp();
            let a = b * u / (w * w) * (1.0 - e * ((rr * t).cosh() + g / rr * (rr * t).sinh()));
            assert!((sim.state().displacement[0] - a).abs() <= 1e-9 * b * u / (w * w));
        }
    }

    #[test]
    fn f32_tracks_f64() {
        let cfg = CavityConfig::default();
        let r64 = build_cavity::<f64>(&cfg, 2).unwrap();
        let r32 = build_cavity::<f32>(&cfg, 2).unwrap();
        let u: Vec<f64> = (0..2000).map(|i| ((i / 12) % 3) as f64 - 1.0).collect();
        let d64 = TimeSeries::scalar("u", u.clone(), 5e-12).unwrap();
        let d32 = TimeSeries::scalar("u", u.iter().map(|v| *v as f32).collect(), 5e-12).unwrap();
        let a = simulate_linear(&r64, &d64).unwrap();
        let b = simulate_linear(&r32, &d32).unwrap();
        let scale = a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - *y as f64).abs() < 1e-3 * scale);
        }
    }
}
