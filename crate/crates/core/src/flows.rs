//! Equations of motion, Runge–Kutta integrators and conservation monitoring.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{LatticeError, Result};
use crate::lax::{kostant_to_symmetric, symmetric_eigen, tridiagonal, volterra_symmetric_lax};
use crate::maps;
use crate::poisson::{FunctionId, SmoothFunction};
use crate::state::{split_ab, split_qp, Kind, LatticeState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    /// `ȧ_i = a_i (b_{i+1} - b_i)`, `ḃ_i = 2 (a_i^2 - a_{i-1}^2)` in symmetric
    /// coordinates.
    TodaTri,
    /// `ȧ_i = a_i (b_{i+1} - b_i)`, `ḃ_i = a_i - a_{i-1}` in Kostant coordinates.
    TodaKostant,
    /// `q̇ = p`, `ṗ_i = e^{q_{i-1} - q_i} - e^{q_i - q_{i+1}}`.
    TodaQp,
    /// `ȧ_i = a_i (a_{i+1} - a_{i-1})`.
    VolterraA,
    /// `q̇_i = -e^{q_{i-1} - q_i} - e^{q_i - q_{i+1}}`.
    VolterraQ,
}

impl System {
    pub const ALL: [System; 5] = [System::TodaTri, System::TodaKostant, System::TodaQp, System::VolterraA, System::VolterraQ];

    pub fn kind(self) -> Kind {
        match self {
            System::TodaTri | System::TodaKostant => Kind::TodaAb,
            System::TodaQp => Kind::TodaQp,
            System::VolterraA => Kind::VolterraA,
            System::VolterraQ => Kind::VolterraQ,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            System::TodaTri => "toda_tri",
            System::TodaKostant => "toda_kostant",
            System::TodaQp => "toda_qp",
            System::VolterraA => "volterra_a",
            System::VolterraQ => "volterra_q",
        }
    }

    /// The conserved quantities `H_1..H_k` (or `I_1..I_k`) natural to the system.
    pub fn invariants(self, dim: usize, k_max: usize) -> Vec<SmoothFunction> {
        let mut out: Vec<SmoothFunction> = (1..=k_max)
            .map(|k| {
                let id = match self {
                    System::TodaTri => FunctionId::TodaHSym(k),
                    System::TodaKostant => FunctionId::TodaH(k),
                    System::TodaQp => FunctionId::TodaHqp(k),
                    System::VolterraA => FunctionId::VolterraI(k),
                    System::VolterraQ => FunctionId::VolterraIq(k),
                };
                SmoothFunction::new(id, dim).expect("dimension validated by the state")
            })
            .collect();
        if self == System::VolterraA {
            out.push(SmoothFunction::new(FunctionId::DetL(Kind::VolterraA), dim).expect("valid"));
        }
        out
    }

    /// Sorted eigenvalues of a symmetric matrix similar to the Lax matrix.
    pub fn spectrum(self, x: &[f64]) -> Vec<f64> {
        let m = match self {
            System::TodaTri => {
                let (a, b) = split_ab(x);
                tridiagonal(a, b, a)
            }
            System::TodaKostant => {
                let (a, b) = split_ab(x);
                let c = kostant_to_symmetric(a);
                tridiagonal(&c, b, &c)
            }
            System::TodaQp => {
                let ab = maps::flaschka_raw(x);
                let (a, b) = split_ab(&ab);
                let c = kostant_to_symmetric(a);
                tridiagonal(&c, b, &c)
            }
            System::VolterraA => volterra_symmetric_lax(&kostant_to_symmetric(x)),
            System::VolterraQ => volterra_symmetric_lax(&kostant_to_symmetric(&maps::gmap_raw(x))),
        };
        symmetric_eigen(&m).values
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for System {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self> {
        System::ALL
            .into_iter()
            .find(|sys| sys.name() == s)
            .ok_or_else(|| LatticeError::UnknownId(format!("system {s}")))
    }
}

/// Right-hand side on raw coordinates, boundary values `a_0 = a_{m+1} = 0`.
pub fn rhs_raw(system: System, x: &[f64]) -> Vec<f64> {
    let at = |v: &[f64], i: isize| if i >= 0 && (i as usize) < v.len() { v[i as usize] } else { 0.0 };
    match system {
        System::TodaTri | System::TodaKostant => {
            let (a, b) = split_ab(x);
            let da = (0..a.len()).map(|i| a[i] * (b[i + 1] - b[i]));
            let db = (0..b.len()).map(|i| {
                let (ai, am) = (at(a, i as isize), at(a, i as isize - 1));
                match system {
                    System::TodaTri => 2.0 * (ai * ai - am * am),
                    _ => ai - am,
                }
            });
            da.chain(db).collect()
        }
        System::TodaQp => {
            let (q, p) = split_qp(x);
            let a: Vec<f64> = q.windows(2).map(|w| (w[0] - w[1]).exp()).collect();
            let dp = (0..q.len()).map(|i| at(&a, i as isize - 1) - at(&a, i as isize));
            p.iter().copied().chain(dp).collect()
        }
        System::VolterraA => (0..x.len()).map(|i| x[i] * (at(x, i as isize + 1) - at(x, i as isize - 1))).collect(),
        System::VolterraQ => {
            let a = maps::gmap_raw(x);
            (0..x.len()).map(|i| -at(&a, i as isize - 1) - at(&a, i as isize)).collect()
        }
    }
}

pub fn rhs(system: System, s: &LatticeState) -> Result<Vec<f64>> {
    s.expect(system.kind())?;
    Ok(rhs_raw(system, s.coords()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4,
    Rk45,
}

impl FromStr for Method {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Method::Rk4),
            "rk45" => Ok(Method::Rk45),
            _ => Err(LatticeError::UnknownId(format!("method {s}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rk4 => "rk4",
            Method::Rk45 => "rk45",
        })
    }
}

/// Tolerances for [`Method::Rk45`].
pub const RK45_ATOL: f64 = 1e-10;
pub const RK45_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub system: System,
    pub method: Method,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<LatticeState>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &LatticeState {
        self.states.last().expect("trajectories hold at least one snapshot")
    }

    /// Header `t,x_1,..,x_d`, one row per sample, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let d = self.states.first().map_or(0, LatticeState::dim);
        let mut out = String::from("t");
        for i in 1..=d {
            out.push_str(&format!(",x_{i}"));
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&fmt_f64(*t));
            for v in s.coords() {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    /// `{dt, method, states, system, times}` with sorted keys.
    pub fn to_json(&self) -> String {
        let states: Vec<&[f64]> = self.states.iter().map(LatticeState::coords).collect();
        let v = json!({
            "system": self.meta.system.name(),
            "method": self.meta.method.to_string(),
            "dt": self.meta.dt,
            "times": self.times,
            "states": states,
        });
        serde_json::to_string_pretty(&v).expect("plain data serializes")
    }
}

/// Round-trip decimal with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn check_domain(kind: Kind, y: &[f64], t: f64) -> Result<()> {
    if y.iter().any(|v| !v.is_finite()) || kind.positive_range(y.len()).any(|i| y[i] <= 0.0) {
        return Err(LatticeError::DomainExit { t });
    }
    Ok(())
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<F: Fn(&[f64]) -> Vec<f64>>(f: &F, y: &[f64], h: f64) -> Vec<f64> {
    let k1 = f(y);
    let k2 = f(&axpy(y, h / 2.0, &k1));
    let k3 = f(&axpy(y, h / 2.0, &k2));
    let k4 = f(&axpy(y, h, &k3));
    (0..y.len()).map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Adaptive Dormand–Prince integration of an autonomous system, returning the
/// state at each of the increasing `samples`. Steps are clamped so every
/// sample is hit exactly. `guard` is called on each accepted state.
pub fn dopri_solve<F, G>(f: &F, y0: &[f64], samples: &[f64], atol: f64, rtol: f64, guard: G) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Vec<f64>,
    G: Fn(&[f64], f64) -> Result<()>,
{
    let mut out = Vec::with_capacity(samples.len());
    let mut t = samples.first().copied().unwrap_or(0.0);
    let mut y = y0.to_vec();
    let mut h = 1e-3;
    for &target in samples {
        while t < target {
            let last = target - t <= h;
            let step = if last { target - t } else { h };
            let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
            for s in 0..7 {
                let mut ys = y.clone();
                for (r, kr) in k.iter().enumerate() {
                    for i in 0..ys.len() {
                        ys[i] += step * A[s][r] * kr[i];
                    }
                }
                k.push(f(&ys));
            }
            let y5: Vec<f64> = (0..y.len()).map(|i| y[i] + step * (0..7).map(|s| B5[s] * k[s][i]).sum::<f64>()).collect();
            let err = (0..y.len())
                .map(|i| {
                    let e = step * (0..7).map(|s| (B5[s] - B4[s]) * k[s][i]).sum::<f64>();
                    e.abs() / (atol + rtol * y[i].abs().max(y5[i].abs()))
                })
                .fold(0.0, f64::max);
            if !err.is_finite() || err > 1.0 {
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.5);
                if !h.is_finite() {
                    h = step * 0.1;
                }
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(LatticeError::StepUnderflow { t, h });
                }
                continue;
            }
            t = if last { target } else { t + step };
            y = y5;
            guard(&y, t)?;
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !last || step >= h {
                h = step * grow;
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Sample grid `0, dt, 2dt, …, t_end`; the last interval may be shorter.
pub fn sample_times(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(LatticeError::Invalid(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(LatticeError::Invalid(format!("t_end must be non-negative, got {t_end}")));
    }
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut times: Vec<f64> = (0..steps).map(|k| k as f64 * dt).collect();
    times.push(t_end);
    Ok(times)
}

pub fn integrate(system: System, s0: &LatticeState, t_end: f64, dt: f64, method: Method) -> Result<Trajectory> {
    s0.expect(system.kind())?;
    let times = sample_times(t_end, dt)?;
    let kind = system.kind();
    let f = |y: &[f64]| rhs_raw(system, y);
    let raw: Vec<Vec<f64>> = match method {
        Method::Rk4 => {
            let mut out = vec![s0.coords().to_vec()];
            for w in times.windows(2) {
                let next = rk4_step(&f, out.last().expect("non-empty"), w[1] - w[0]);
                check_domain(kind, &next, w[1])?;
                out.push(next);
            }
            out
        }
        Method::Rk45 => dopri_solve(&f, s0.coords(), &times, RK45_ATOL, RK45_RTOL, |y, t| check_domain(kind, y, t))?,
    };
    let states = raw.into_iter().map(|c| LatticeState::new(kind, c)).collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { times, states, meta: TrajectoryMeta { system, method, dt } })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Drift {
    pub name: String,
    pub initial: f64,
    pub max_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationReport {
    pub invariants: Vec<Drift>,
    /// Max `|λ_i(t) - λ_i(0)|` per sorted eigenvalue.
    pub eigenvalue_drift: Vec<f64>,
}

impl ConservationReport {
    pub fn max_invariant_drift(&self) -> f64 {
        self.invariants.iter().map(|d| d.max_drift).fold(0.0, f64::max)
    }

    pub fn max_eigenvalue_drift(&self) -> f64 {
        self.eigenvalue_drift.iter().copied().fold(0.0, f64::max)
    }

    /// Plot-ready table `quantity,initial,max_drift`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,initial,max_drift\n");
        for d in &self.invariants {
            out.push_str(&format!("{},{},{}\n", d.name, fmt_f64(d.initial), fmt_f64(d.max_drift)));
        }
        for (i, d) in self.eigenvalue_drift.iter().enumerate() {
            out.push_str(&format!("lambda_{},,{}\n", i + 1, fmt_f64(*d)));
        }
        out
    }
}

pub fn conservation_report(tr: &Trajectory, k_max: usize) -> Result<ConservationReport> {
    let first = tr.states.first().ok_or_else(|| LatticeError::Invalid("empty trajectory".into()))?;
    let system = tr.meta.system;
    let mut invariants = Vec::new();
    for f in system.invariants(first.dim(), k_max) {
        let initial = f.eval(first.coords())?;
        let mut max_drift: f64 = 0.0;
        for s in &tr.states {
            max_drift = max_drift.max((f.eval(s.coords())? - initial).abs());
        }
        invariants.push(Drift { name: f.name(), initial, max_drift });
    }
    let spec0 = system.spectrum(first.coords());
    let mut eigenvalue_drift = vec![0.0; spec0.len()];
    for s in &tr.states {
        for (d, (a, b)) in eigenvalue_drift.iter_mut().zip(system.spectrum(s.coords()).iter().zip(&spec0)) {
            *d = f64::max(*d, (a - b).abs());
        }
    }
    Ok(ConservationReport { invariants, eigenvalue_drift })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        let s = LatticeState::volterra_a(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(rhs(System::VolterraA, &s).unwrap(), vec![1.0, 0.0, -1.0]);
        let s = LatticeState::toda_ab(&[1.0], &[0.0, 0.0]).unwrap();
        assert_eq!(rhs(System::TodaTri, &s).unwrap(), vec![0.0, 2.0, -2.0]);
        let s = LatticeState::volterra_q(&[0.0; 4]).unwrap();
        assert_eq!(rhs(System::VolterraQ, &s).unwrap(), vec![-1.0, -2.0, -2.0, -1.0]);
        assert!(rhs(System::TodaQp, &s).is_err());
    }

    #[test]
    fn zero_horizon() {
        let s = LatticeState::toda_ab(&[0.4, 1.1], &[0.3, 0.0, -0.2]).unwrap();
        for m in [Method::Rk4, Method::Rk45] {
            let tr = integrate(System::TodaTri, &s, 0.0, 1e-3, m).unwrap();
            assert_eq!(tr.len(), 1);
            assert_eq!(tr.states[0], s);
        }
    }

    #[test]
    fn sample_grid() {
        assert_eq!(sample_times(1.0, 1e-3).unwrap().len(), 1001);
        assert_eq!(sample_times(1.0, 0.3).unwrap(), vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
        assert!(sample_times(1.0, 0.0).is_err());
    }

    #[test]
    fn toda_two_site_conserves_energy() {
        let s = LatticeState::toda_ab(&[1.0], &[0.0, 0.0]).unwrap();
        let tr = integrate(System::TodaTri, &s, 1.0, 1e-3, Method::Rk4).unwrap();
        let rep = conservation_report(&tr, 2).unwrap();
        assert!(rep.invariants[1].max_drift < 1e-9, "{rep:?}");
    }

    #[test]
    fn volterra_conserves_i1_and_det() {
        let s = LatticeState::volterra_a(&[1.0, 1.0, 1.0]).unwrap();
        let tr = integrate(System::VolterraA, &s, 1.0, 1e-3, Method::Rk4).unwrap();
        let rep = conservation_report(&tr, 1).unwrap();
        assert_eq!(rep.invariants.len(), 2);
        assert!(rep.max_invariant_drift() < 1e-9, "{rep:?}");
    }

    #[test]
    fn near_fixed_point() {
        let s = LatticeState::toda_ab(&[1e-6], &[0.5, 0.5]).unwrap();
        let tr = integrate(System::TodaTri, &s, 0.1, 1e-3, Method::Rk4).unwrap();
        let rep = conservation_report(&tr, 3).unwrap();
        assert!(rep.max_invariant_drift() < 1e-10);
        assert!(rep.max_eigenvalue_drift() < 1e-10);
    }

    #[test]
    fn rk45_matches_rk4() {
        let s = LatticeState::toda_ab(&[0.7, 1.2, 0.9], &[0.3, -0.1, 0.5, -0.4]).unwrap();
        let a = integrate(System::TodaTri, &s, 2.0, 0.5, Method::Rk45).unwrap();
        let b = integrate(System::TodaTri, &s, 2.0, 1e-3, Method::Rk4).unwrap();
        for (x, y) in a.last().coords().iter().zip(b.last().coords()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn domain_guard() {
        let err = check_domain(Kind::VolterraA, &[1.0, -1.0, 1.0], 0.5).unwrap_err();
        assert_eq!(err, LatticeError::DomainExit { t: 0.5 });
        assert!(check_domain(Kind::TodaAb, &[1.0, f64::NAN, 0.0], 0.1).is_err());
        assert!(check_domain(Kind::TodaQp, &[-1.0, -1.0], 0.1).is_ok());
    }

    #[test]
    fn exports() {
        let s = LatticeState::volterra_a(&[1.0, 1.0, 1.0]).unwrap();
        let tr = integrate(System::VolterraA, &s, 0.002, 1e-3, Method::Rk4).unwrap();
        let csv = tr.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x_1,x_2,x_3");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0.0000000000000000e0,1.0000000000000000e0"));
        let v: serde_json::Value = serde_json::from_str(&tr.to_json()).unwrap();
        assert_eq!(v["system"], "volterra_a");
        assert_eq!(v["states"].as_array().unwrap().len(), 3);
    }
}
