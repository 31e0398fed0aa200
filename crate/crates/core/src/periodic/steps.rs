use std::io::{Read, Write};

use crate::blocksys::HistorySpec;
use crate::error::{Error, Result};

/// A sampled solution path, used as initial-guess material for limit cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(Error::InvalidArgument("trajectory needs matching, non-empty times and states".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("trajectory times must be strictly increasing".into()));
        }
        let d = states[0].len();
        if d == 0 || states.iter().any(|s| s.len() != d) {
            return Err(Error::InvalidArgument("trajectory states must share a non-zero dimension".into()));
        }
        Ok(Trajectory { times, states })
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[c]).collect()
    }

    /// Linear interpolation; clamps to the end values outside the range.
    pub fn sample(&self, t: f64) -> Vec<f64> {
        let k = self.times.partition_point(|&x| x <= t);
        if k == 0 {
            return self.states[0].clone();
        }
        if k == self.times.len() {
            return self.states[k - 1].clone();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.states[k - 1].iter().zip(&self.states[k]).map(|(a, b)| a + w * (b - a)).collect()
    }

    /// Local maxima of component `c` in `[from, end]` that rise above the
    /// midrange of that window, located by parabolic interpolation.
    pub fn maxima(&self, c: usize, from: f64) -> Vec<f64> {
        let y = self.component(c);
        let start = self.times.partition_point(|&x| x < from);
        if self.len() < start + 3 {
            return Vec::new();
        }
        let window = &y[start..];
        let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mid = 0.5 * (lo + hi);
        let mut out = Vec::new();
        for i in start.max(1)..self.len() - 1 {
            if y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] > mid {
                let (a, b, cc) = (y[i - 1], y[i], y[i + 1]);
                let denom = a - 2.0 * b + cc;
                let off = if denom != 0.0 { 0.5 * (a - cc) / denom } else { 0.0 };
                let h = self.times[i + 1] - self.times[i];
                out.push(self.times[i] + off * h);
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim()).map(|i| format!("y{i}")));
        wr.write_record(&header)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut rec = vec![t.to_string()];
            rec.extend(s.iter().map(f64::to_string));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut times = Vec::new();
        let mut states = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Io(format!("bad number '{f}': {e}"))))
                .collect::<Result<_>>()?;
            if vals.len() < 2 {
                return Err(Error::Io("trajectory rows need t and at least one state".into()));
            }
            times.push(vals[0]);
            states.push(vals[1..].to_vec());
        }
        Trajectory::new(times, states)
    }
}

/// Period estimate from the spacing of the significant maxima of component
/// `c` over the second half of the trajectory.
pub fn estimate_period(traj: &Trajectory, c: usize) -> Result<f64> {
    let (t0, t1) = (traj.times[0], *traj.times.last().unwrap());
    let m = traj.maxima(c, 0.5 * (t0 + t1));
    if m.len() < 2 {
        return Err(Error::InvalidArgument("fewer than two maxima in the second half of the trajectory".into()));
    }
    Ok((m[m.len() - 1] - m[0]) / (m.len() - 1) as f64)
}

fn hermite(y0: f64, y1: f64, f0: f64, f1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * f0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * f1
}

/// Classical RK4 for `y'(t) = f(t, y(t), [y(t - lag_j)])` with constant lags.
///
/// Every lag must be a positive whole multiple of `dt`, so each delayed
/// argument of a step lies either in the history or inside one earlier step,
/// where it is read from the cubic Hermite interpolant of that step.
pub fn rk4_method_of_steps(
    rhs: impl Fn(f64, &[f64], &[Vec<f64>]) -> Vec<f64>,
    y0: &[f64],
    history: &[HistorySpec],
    lags: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    let d = y0.len();
    if d == 0 || history.len() != d {
        return Err(Error::InvalidArgument(format!("{} history functions for {d} components", history.len())));
    }
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidArgument("dt and t_end must be positive".into()));
    }
    if history.iter().any(|h| matches!(h, HistorySpec::Periodic(_))) {
        return Err(Error::Unsupported("periodic history in the step integrator".into()));
    }
    let mut shifts = Vec::with_capacity(lags.len());
    for &lag in lags {
        let m = (lag / dt).round();
        if !(lag > 0.0) || m < 1.0 || (m * dt - lag).abs() > 1e-9 * lag {
            return Err(Error::InvalidArgument(format!("lag {lag} is not a whole multiple of dt = {dt}")));
        }
        shifts.push(m as usize);
    }
    let steps = (t_end / dt - 1e-9).ceil() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut ys: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    // derivative from the right at t_k, and from the left at t_{k+1}
    let mut right: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut left: Vec<Vec<f64>> = Vec::with_capacity(steps);
    times.push(0.0);
    ys.push(y0.to_vec());

    let delayed = |k: usize, c: f64, ys: &Vec<Vec<f64>>, right: &Vec<Vec<f64>>, left: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        shifts
            .iter()
            .zip(lags)
            .map(|(&m, &lag)| {
                if k < m {
                    let t = k as f64 * dt + c * dt - lag;
                    history.iter().map(|h| h.value(t)).collect()
                } else {
                    let j = k - m;
                    (0..d).map(|i| hermite(ys[j][i], ys[j + 1][i], right[j][i], left[j][i], dt, c)).collect()
                }
            })
            .collect()
    };

    for k in 0..steps {
        let t = k as f64 * dt;
        let y = ys[k].clone();
        let axpy = |a: f64, v: &[f64]| -> Vec<f64> { y.iter().zip(v).map(|(yi, vi)| yi + a * vi).collect() };
        let d0 = delayed(k, 0.0, &ys, &right, &left);
        let dh = delayed(k, 0.5, &ys, &right, &left);
        let d1 = delayed(k, 1.0, &ys, &right, &left);
        let k1 = rhs(t, &y, &d0);
        let k2 = rhs(t + 0.5 * dt, &axpy(0.5 * dt, &k1), &dh);
        let k3 = rhs(t + 0.5 * dt, &axpy(0.5 * dt, &k2), &dh);
        let k4 = rhs(t + dt, &axpy(dt, &k3), &d1);
        let next: Vec<f64> =
            (0..d).map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("integration blew up at t = {t}")));
        }
        left.push(rhs(t + dt, &next, &d1));
        right.push(k1);
        ys.push(next);
        times.push((k + 1) as f64 * dt);
    }
    Trajectory::new(times, ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let tr = rk4_method_of_steps(|_, y, _| vec![-y[0]], &[1.0], &[HistorySpec::Constant(1.0)], &[], 1.0, 1e-3)
            .unwrap();
        assert!((tr.states.last().unwrap()[0] - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn misaligned_lag() {
        let r = rk4_method_of_steps(|_, y, _| vec![-y[0]], &[1.0], &[HistorySpec::Constant(1.0)], &[0.3], 1.0, 0.07);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn long_lag_is_pure_ode() {
        let a = rk4_method_of_steps(|_, y, d| vec![-y[0] + d[0][0]], &[1.0], &[HistorySpec::Constant(0.0)], &[5.0], 1.0, 1e-2)
            .unwrap();
        let b = rk4_method_of_steps(|_, y, _| vec![-y[0]], &[1.0], &[HistorySpec::Constant(0.0)], &[], 1.0, 1e-2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip() {
        let tr = Trajectory::new(vec![0.0, 0.5, 1.0], vec![vec![1.0, 2.0], vec![0.1, 0.2], vec![1e-17, -3.25]]).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("t,y1,y2\n"));
        assert_eq!(Trajectory::read_csv(buf.as_slice()).unwrap(), tr);
    }

    #[test]
    fn period_of_sine() {
        let times: Vec<f64> = (0..4000).map(|i| i as f64 * 0.01).collect();
        let states = times.iter().map(|t| vec![(2.0 * std::f64::consts::PI * t / 3.0).sin()]).collect();
        let tr = Trajectory::new(times, states).unwrap();
        assert!((estimate_period(&tr, 0).unwrap() - 3.0).abs() < 1e-4);
    }
}
