//! Time-stamped state paths and the shared simulation configuration.

use std::fmt;
use std::io::{BufRead, Write};

use crate::error::SimError;

/// Which simulator produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ssa,
    Ode,
    Em,
    CoupledSsa,
    CoupledEm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ssa => "ssa",
            Method::Ode => "ode",
            Method::Em => "em",
            Method::CoupledSsa => "coupled-ssa",
            Method::CoupledEm => "coupled-em",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Some(match s {
            "ssa" => Method::Ssa,
            "ode" => Method::Ode,
            "em" => Method::Em,
            "coupled-ssa" => Method::CoupledSsa,
            "coupled-em" => Method::CoupledEm,
            _ => return None,
        })
    }

    /// Continuous methods interpolate linearly between grid points; jump
    /// methods hold the last state (left-constant).
    pub fn is_continuous(self) -> bool {
        matches!(self, Method::Ode | Method::Em | Method::CoupledEm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Boundary handling for the diffusion approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryPolicy {
    /// Clamp rates at zero; small negative excursions persist.
    Clamp,
    /// Snap the state to exact zero and freeze once every component falls
    /// below the absorb threshold (default 1/(2V)). Mimics the CTMC's
    /// absorbing origin.
    Absorb,
}

/// Configuration shared by all simulators.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Container volume V.
    pub volume: f64,
    /// Initial concentrations.
    pub x0: Vec<f64>,
    /// Time horizon T.
    pub t_max: f64,
    /// Master seed for the trajectory's RNG stream.
    pub seed: u64,
    /// Euler step delta for ODE/EM/coupled integration.
    pub em_step: f64,
    /// Grid step Delta of the paired-noise paths (internal time units).
    /// Raised automatically when the required horizon would exceed
    /// `max_noise_len` grid points.
    pub kmt_step: f64,
    pub boundary_policy: BoundaryPolicy,
    /// Defaults to 1/(2V) when `None`.
    pub absorb_threshold: Option<f64>,
    /// Upper bounds of the rectangular domain approximating the open set
    /// in which the approximations are valid.
    pub domain_upper_bounds: Option<Vec<f64>>,
    /// Lower bounds of the rectangular domain; defaults to 0 per species.
    pub domain_lower_bounds: Option<Vec<f64>>,
    /// Hard cap on SSA events.
    pub event_cap: u64,
    /// Safety factor on the pre-generated noise horizon.
    pub noise_safety: f64,
    /// Cap on the per-channel noise path length (must be a power of two).
    pub max_noise_len: usize,
}

impl SimConfig {
    pub fn new(volume: f64, x0: Vec<f64>, t_max: f64, seed: u64) -> Self {
        SimConfig {
            volume,
            x0,
            t_max,
            seed,
            em_step: 1e-3,
            kmt_step: 1e-4,
            boundary_policy: BoundaryPolicy::Clamp,
            absorb_threshold: None,
            domain_upper_bounds: None,
            domain_lower_bounds: None,
            event_cap: 100_000_000,
            noise_safety: 1.5,
            max_noise_len: 1 << 20,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.volume > 0.0) {
            return Err(SimError::BadConfig(format!("volume must be > 0, got {}", self.volume)));
        }
        if !(self.t_max > 0.0) {
            return Err(SimError::BadConfig(format!("horizon must be > 0, got {}", self.t_max)));
        }
        if !(self.em_step > 0.0) || !(self.kmt_step > 0.0) {
            return Err(SimError::BadConfig("steps must be > 0".to_string()));
        }
        if let Some((i, &v)) = self.x0.iter().enumerate().find(|&(_, &v)| v < 0.0) {
            return Err(SimError::NegativeState { index: i, value: v });
        }
        if !self.max_noise_len.is_power_of_two() {
            return Err(SimError::BadConfig("max_noise_len must be a power of two".to_string()));
        }
        Ok(())
    }

    pub fn absorb_threshold(&self) -> f64 {
        self.absorb_threshold.unwrap_or(0.5 / self.volume)
    }
}

/// A time-stamped state path in concentration units, with flat row-major
/// state storage (`states[j*d + i]` is species `i` at `times[j]`).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    states: Vec<f64>,
    dim: usize,
    pub method: Method,
    pub volume: f64,
    pub seed: u64,
    pub model: String,
    pub species: Vec<String>,
}

impl Trajectory {
    pub fn new(
        dim: usize,
        method: Method,
        volume: f64,
        seed: u64,
        model: impl Into<String>,
        species: Vec<String>,
    ) -> Self {
        Trajectory {
            times: Vec::new(),
            states: Vec::new(),
            dim,
            method,
            volume,
            seed,
            model: model.into(),
            species,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, state: &[f64]) {
        debug_assert_eq!(state.len(), self.dim);
        self.times.push(t);
        self.states.extend_from_slice(state);
    }

    pub fn state(&self, j: usize) -> &[f64] {
        &self.states[j * self.dim..(j + 1) * self.dim]
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// Evaluate at time `t`: left-constant for jump methods, linear for
    /// continuous ones. Clamps outside the recorded range.
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let n = self.len();
        if t <= self.times[0] {
            out.copy_from_slice(self.state(0));
            return;
        }
        if t >= self.times[n - 1] {
            out.copy_from_slice(self.state(n - 1));
            return;
        }
        // first index with times[idx] > t
        let idx = self.times.partition_point(|&x| x <= t);
        if self.method.is_continuous() {
            let (t0, t1) = (self.times[idx - 1], self.times[idx]);
            let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
            let (a, b) = (self.state(idx - 1), self.state(idx));
            for i in 0..self.dim {
                out[i] = a[i] + w * (b[i] - a[i]);
            }
        } else {
            out.copy_from_slice(self.state(idx - 1));
        }
    }

    /// Max-norm distance between two trajectories, evaluated on the union
    /// of their time grids up to the shorter horizon.
    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        let horizon = self
            .times
            .last()
            .copied()
            .unwrap_or(0.0)
            .min(other.times.last().copied().unwrap_or(0.0));
        let mut a = vec![0.0; self.dim];
        let mut b = vec![0.0; self.dim];
        let mut sup: f64 = 0.0;
        for &t in self.times.iter().chain(other.times.iter()) {
            if t > horizon {
                continue;
            }
            self.eval(t, &mut a);
            other.eval(t, &mut b);
            for i in 0..self.dim {
                sup = sup.max((a[i] - b[i]).abs());
            }
        }
        sup
    }

    /// Write the trajectory CSV: `#`-prefixed metadata, a header
    /// `t,<species...>`, and one row per point with 12 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# model: {}", self.model)?;
        writeln!(w, "# method: {}", self.method)?;
        writeln!(w, "# seed: {}", self.seed)?;
        writeln!(w, "# V: {}", fmt_sig(self.volume))?;
        writeln!(w, "t,{}", self.species.join(","))?;
        for j in 0..self.len() {
            let mut row = String::with_capacity(16 * (self.dim + 1));
            row.push_str(&fmt_sig(self.times[j]));
            for v in self.state(j) {
                row.push(',');
                row.push_str(&fmt_sig(*v));
            }
            writeln!(w, "{row}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    /// Parse a trajectory CSV produced by [`write_csv`](Self::write_csv).
    pub fn from_csv<R: BufRead>(r: R) -> std::io::Result<Trajectory> {
        let bad = |msg: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_string());
        let mut model = String::new();
        let mut method = Method::Ssa;
        let mut seed = 0u64;
        let mut volume = 1.0f64;
        let mut species: Option<Vec<String>> = None;
        let mut traj: Option<Trajectory> = None;
        for line in r.lines() {
            let line = line?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("model:") {
                    model = v.trim().to_string();
                } else if let Some(v) = rest.strip_prefix("method:") {
                    method = Method::parse(v.trim()).ok_or_else(|| bad("unknown method"))?;
                } else if let Some(v) = rest.strip_prefix("seed:") {
                    seed = v.trim().parse().map_err(|_| bad("bad seed"))?;
                } else if let Some(v) = rest.strip_prefix("V:") {
                    volume = v.trim().parse().map_err(|_| bad("bad volume"))?;
                }
                continue;
            }
            match species {
                None => {
                    let mut cols = line.split(',');
                    if cols.next() != Some("t") {
                        return Err(bad("header must start with t"));
                    }
                    species = Some(cols.map(str::to_string).collect());
                }
                Some(ref sp) => {
                    let vals: Result<Vec<f64>, _> =
                        line.split(',').map(str::parse::<f64>).collect();
                    let vals = vals.map_err(|_| bad("bad number"))?;
                    if vals.len() != sp.len() + 1 {
                        return Err(bad("row width mismatch"));
                    }
                    let t = traj.get_or_insert_with(|| {
                        Trajectory::new(sp.len(), method, volume, seed, model.clone(), sp.clone())
                    });
                    t.push(vals[0], &vals[1..]);
                }
            }
        }
        traj.ok_or_else(|| bad("no data rows"))
    }

    /// Check the structural invariants the spec imposes on recorded paths.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.is_empty() {
            return Err("empty trajectory".to_string());
        }
        if self.times[0] != 0.0 {
            return Err(format!("times[0] = {} != 0", self.times[0]));
        }
        for w in self.times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(format!("times not strictly increasing at {} -> {}", w[0], w[1]));
            }
        }
        Ok(())
    }
}

/// Decimal with 12 significant digits, stable across runs.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let s = format!("{v:.11e}");
    // normalize exponent rendering, then round-trip through f64 display for
    // compact fixed output when the exponent is small
    let parsed: f64 = s.parse().expect("formatted float parses");
    let mag = parsed.abs();
    if (1e-4..1e12).contains(&mag) {
        let mut out = format!("{parsed:.12}");
        if out.contains('.') {
            while out.ends_with('0') {
                out.pop();
            }
            if out.ends_with('.') {
                out.pop();
            }
        }
        out
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(method: Method) -> Trajectory {
        let mut t = Trajectory::new(
            2,
            method,
            10.0,
            42,
            "toy",
            vec!["A".to_string(), "B".to_string()],
        );
        t.push(0.0, &[0.0, 1.0]);
        t.push(1.0, &[1.0, 2.0]);
        t.push(3.0, &[2.0, 0.0]);
        t
    }

    #[test]
    fn eval_left_constant_vs_linear() {
        let mut out = [0.0; 2];
        toy(Method::Ssa).eval(2.0, &mut out);
        assert_eq!(out, [1.0, 2.0]);
        toy(Method::Ode).eval(2.0, &mut out);
        assert_eq!(out, [1.5, 1.0]);
    }

    #[test]
    fn csv_round_trip() {
        let t = toy(Method::Em);
        let text = t.to_csv_string();
        let back = Trajectory::from_csv(text.as_bytes()).unwrap();
        assert_eq!(back.times, t.times);
        assert_eq!(back.method, Method::Em);
        assert_eq!(back.seed, 42);
        assert_eq!(back.species, t.species);
        for j in 0..t.len() {
            assert_eq!(back.state(j), t.state(j));
        }
        back.check_invariants().unwrap();
    }

    #[test]
    fn fmt_sig_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(0.5), "0.5");
        // 12 significant digits survive the round trip
        let v = 0.123456789012345;
        let s = fmt_sig(v);
        let back: f64 = s.parse().unwrap();
        assert!((back - v).abs() < 1e-12);
    }

    #[test]
    fn sup_distance_self_is_zero() {
        let t = toy(Method::Ode);
        assert_eq!(t.sup_distance(&t), 0.0);
    }
}
