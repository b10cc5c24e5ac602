//! Homogenized 1D conduction between two fixed-temperature plates and the
//! scalar fit of its diffusivity to simulated probe curves.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::simulate::SimulationTrace;

/// Slab of height `length` [mm], bottom at `z = 0`, uniformly at
/// `t_initial` before the plates switch to `t_bottom` / `t_top` at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Surrogate1d {
    pub length: f64,
    pub t_bottom: f64,
    pub t_top: f64,
    pub t_initial: f64,
    /// Series truncation order.
    pub order: usize,
}

impl Surrogate1d {
    pub fn new(length: f64, t_bottom: f64, t_top: f64, t_initial: f64) -> Self {
        Surrogate1d {
            length,
            t_bottom,
            t_top,
            t_initial,
            order: 200,
        }
    }

    /// Temperature and the magnitude of the last retained term.
    pub fn evaluate(&self, a_eff: f64, z: f64, t: f64) -> (f64, f64) {
        let l = self.length;
        let dt = self.t_top - self.t_bottom;
        let d0 = self.t_initial - self.t_bottom;
        let mut value = self.t_bottom + dt * z / l;
        let mut last = 0.0;
        for n in 1..=self.order.max(1) {
            let k = n as f64 * PI / l;
            let decay = (-a_eff * k * k * t).exp();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let b = 2.0 / (n as f64 * PI) * (d0 * (1.0 - sign) + dt * sign);
            let term = b * (k * z).sin() * decay;
            value += term;
            last = (b * decay).abs();
            if decay < 1e-18 {
                break;
            }
        }
        (value, last)
    }
}

/// Series solution of the slab problem [K].
#[allow(clippy::too_many_arguments)]
pub fn analytic_1d(a_eff: f64, length: f64, t_bottom: f64, t_top: f64, t_initial: f64, z: f64, t: f64, order: usize) -> f64 {
    analytic_1d_with_bound(a_eff, length, t_bottom, t_top, t_initial, z, t, order).0
}

/// As [`analytic_1d`], also returning the last retained term's amplitude as
/// a truncation estimate.
#[allow(clippy::too_many_arguments)]
pub fn analytic_1d_with_bound(
    a_eff: f64,
    length: f64,
    t_bottom: f64,
    t_top: f64,
    t_initial: f64,
    z: f64,
    t: f64,
    order: usize,
) -> (f64, f64) {
    Surrogate1d {
        length,
        t_bottom,
        t_top,
        t_initial,
        order,
    }
    .evaluate(a_eff, z, t)
}

/// Trace column and its height above the bottom plate [mm].
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeHeight {
    pub id: String,
    pub z: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurrogateFit {
    /// [mm²/s]
    pub a_eff: f64,
    /// RMS misfit over all probe samples [K].
    pub rms: f64,
    pub order: usize,
}

const A_MIN: f64 = 1e-3;
const A_MAX: f64 = 1e3;
const GRID: usize = 121;

/// Least-squares fit of `a_eff` by a log-spaced scan followed by a
/// golden-section search in `ln a`.
pub fn fit_diffusivity(trace: &SimulationTrace, probes: &[ProbeHeight], model: &Surrogate1d) -> Result<SurrogateFit> {
    let mut series = Vec::with_capacity(probes.len());
    for p in probes {
        let s = trace
            .probe(&p.id)
            .ok_or_else(|| Error::InvalidConfig(format!("probe '{}' not in trace", p.id)))?;
        series.push((p.z, s));
    }
    let varies = series
        .iter()
        .any(|(_, s)| s.iter().any(|&v| (v - s[0]).abs() > 1e-12 * s[0].abs().max(1.0)));
    if series.is_empty() || trace.time.len() < 2 || !varies {
        return Err(Error::NothingToFit);
    }

    let rms = |ln_a: f64| {
        let a = ln_a.exp();
        let mut sum = 0.0;
        let mut count = 0usize;
        for (z, s) in &series {
            for (t, v) in trace.time.iter().zip(s.iter()) {
                let e = model.evaluate(a, *z, *t).0 - v;
                sum += e * e;
                count += 1;
            }
        }
        (sum / count as f64).sqrt()
    };

    let (lo, hi) = (A_MIN.ln(), A_MAX.ln());
    let h = (hi - lo) / (GRID - 1) as f64;
    let values: Vec<f64> = (0..GRID).map(|i| rms(lo + h * i as f64)).collect();
    let best = (0..GRID).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap();
    let (mut a, mut b) = (lo + h * best.saturating_sub(1) as f64, lo + h * (best + 1).min(GRID - 1) as f64);

    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (rms(c), rms(d));
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = rms(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = rms(d);
        }
    }
    let ln_a = 0.5 * (a + b);
    Ok(SurrogateFit {
        a_eff: ln_a.exp(),
        rms: rms(ln_a),
        order: model.order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn late_time_profile_is_linear() {
        for z in [0.0, 10.0, 25.0, 40.0] {
            let t = analytic_1d(1.85, 40.0, 300.0, 400.0, 300.0, z, 1e6, 200);
            assert!((t - (300.0 + 100.0 * z / 40.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn initial_condition_inside() {
        for z in [5.0, 20.0, 33.0] {
            let (t, bound) = analytic_1d_with_bound(1.85, 40.0, 300.0, 400.0, 320.0, z, 0.0, 200);
            assert!((t - 320.0).abs() <= 10.0 * bound.max(1e-12), "{t} {bound}");
        }
    }

    #[test]
    fn fit_recovers_generating_diffusivity() {
        let model = Surrogate1d::new(40.0, 300.0, 400.0, 300.0);
        let heights = [8.0, 16.0, 24.0, 32.0];
        let mut trace = SimulationTrace {
            probes: heights.iter().map(|z| format!("z{z}")).collect(),
            time: (0..=200).map(|k| k as f64 * 2.0).collect(),
            ..Default::default()
        };
        trace.probe_series = heights
            .iter()
            .map(|&z| trace.time.iter().map(|&t| model.evaluate(2.0, z, t).0).collect())
            .collect();
        let probes: Vec<ProbeHeight> = heights
            .iter()
            .map(|&z| ProbeHeight {
                id: format!("z{z}"),
                z,
            })
            .collect();
        let fit = fit_diffusivity(&trace, &probes, &model).unwrap();
        assert!((fit.a_eff - 2.0).abs() < 1e-4, "{fit:?}");
        assert!(fit.rms < 1e-6);
    }

    #[test]
    fn constant_trace_has_nothing_to_fit() {
        let trace = SimulationTrace {
            probes: vec!["p".into()],
            time: vec![0.0, 1.0, 2.0],
            probe_series: vec![vec![300.0; 3]],
            ..Default::default()
        };
        let probes = [ProbeHeight { id: "p".into(), z: 1.0 }];
        let err = fit_diffusivity(&trace, &probes, &Surrogate1d::new(40.0, 300.0, 400.0, 300.0)).unwrap_err();
        assert!(matches!(err, Error::NothingToFit));
    }
}
