//! Reference inverter with Volt-VAr support.
//!
//! Averaged nonlinear model: a first-order filter on the terminal voltage
//! magnitude (the measurement path), the Volt-VAr curve and capability cap
//! evaluated on the filtered voltage, and first-order lags on the active
//! and reactive output currents. Integrated with fixed-step RK4.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signalgen::Signal;

/// Piecewise-linear reactive power characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoltVarCurve {
    pub v_l: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub v4: f64,
    pub v_h: f64,
    /// kVAr, positive = injection.
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
}

impl Default for VoltVarCurve {
    fn default() -> Self {
        Self {
            v_l: 0.88,
            v1: 0.92,
            v2: 0.98,
            v3: 1.02,
            v4: 1.08,
            v_h: 1.10,
            q1: 6.25,
            q2: 0.0,
            q3: 0.0,
            q4: -6.25,
        }
    }
}

impl VoltVarCurve {
    pub fn new(v: [f64; 6], q: [f64; 4]) -> Result<Self> {
        let curve = Self {
            v_l: v[0],
            v1: v[1],
            v2: v[2],
            v3: v[3],
            v4: v[4],
            v_h: v[5],
            q1: q[0],
            q2: q[1],
            q3: q[2],
            q4: q[3],
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        let v = [self.v_l, self.v1, self.v2, self.v3, self.v4, self.v_h];
        let q = [self.q1, self.q2, self.q3, self.q4];
        if v.iter().chain(q.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("volt-var curve"));
        }
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "volt-var voltages must be strictly increasing: {v:?}"
            )));
        }
        if q.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(format!(
                "volt-var setpoints must be non-increasing: {q:?}"
            )));
        }
        if self.q2 != 0.0 || self.q3 != 0.0 {
            return Err(Error::InvalidArgument(
                "dead-band setpoints q2 and q3 must be zero".into(),
            ));
        }
        Ok(())
    }
}

/// Curve output, with `outside` set when the voltage left `[v_l, v_h)` and
/// the output was saturated at the nearest endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub q: f64,
    pub outside: bool,
}

pub fn volt_var_q(v: f64, curve: &VoltVarCurve) -> CurvePoint {
    let c = curve;
    let (q, outside) = if v < c.v_l {
        (c.q1, true)
    } else if v >= c.v_h {
        (c.q4, true)
    } else if v < c.v1 {
        (c.q1, false)
    } else if v < c.v2 {
        (c.q1 + (c.q2 - c.q1) / (c.v2 - c.v1) * (v - c.v1), false)
    } else if v < c.v3 {
        (0.0, false)
    } else if v < c.v4 {
        (c.q3 + (c.q4 - c.q3) / (c.v4 - c.v3) * (v - c.v3), false)
    } else {
        (c.q4, false)
    };
    CurvePoint { q, outside }
}

/// Cap the curve demand to the apparent-power headroom left by `p_inv`.
pub fn q_reference(q_curve: f64, p_inv: f64, s: f64) -> Result<f64> {
    if !(q_curve.is_finite() && p_inv.is_finite() && s.is_finite()) {
        return Err(Error::NonFinite("q_reference"));
    }
    if s <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "rating {s} kVA must be positive"
        )));
    }
    if p_inv.abs() > s {
        return Err(Error::Infeasible(format!(
            "|P| = {} kW exceeds rating {s} kVA",
            p_inv.abs()
        )));
    }
    Ok(cap(q_curve, (s * s - p_inv * p_inv).sqrt()))
}

#[inline]
fn cap(q: f64, headroom: f64) -> f64 {
    q.signum() * q.abs().min(headroom)
}

/// Which current the plant reports as its output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputChannel {
    /// Reactive-axis current `i_q`, signed (positive = injecting VArs).
    #[default]
    Reactive,
    /// Active-axis current `i_d`.
    Active,
    /// `|i_d + j i_q|`.
    Magnitude,
}

/// Additive zero-mean uniform noise on the output channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Half-width of the uniform distribution, in output units.
    pub amplitude: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    /// Apparent power limit, kVA.
    pub s_rating: f64,
    /// Voltage-magnitude filter bandwidth, rad/s.
    pub pll_bandwidth: f64,
    /// Output-current lag time constant, s.
    pub current_loop_tau: f64,
    pub curve: VoltVarCurve,
    /// Base voltage for converting p.u. to volts.
    pub v_base: f64,
    /// Volt-VAr support on; otherwise the reactive reference is zero.
    pub volt_var: bool,
    pub output: OutputChannel,
    pub noise: Option<NoiseSpec>,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            s_rating: 8.4,
            pll_bandwidth: 2.0 * std::f64::consts::PI * 10.0,
            current_loop_tau: 0.02,
            curve: VoltVarCurve::default(),
            v_base: 240.0,
            volt_var: true,
            output: OutputChannel::Reactive,
            noise: None,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.s_rating > 0.0 && self.pll_bandwidth > 0.0 && self.current_loop_tau > 0.0) {
            return Err(Error::InvalidArgument(
                "rating, filter bandwidth and current-loop time constant must be positive".into(),
            ));
        }
        if !(self.v_base > 0.0) {
            return Err(Error::InvalidArgument(
                "base voltage must be positive".into(),
            ));
        }
        if let Some(noise) = self.noise {
            if !(noise.amplitude >= 0.0) {
                return Err(Error::InvalidArgument(
                    "noise amplitude must be >= 0".into(),
                ));
            }
        }
        self.curve.validate()
    }

    /// Largest explicit step accepted by [`plant_step`].
    pub fn max_step(&self) -> f64 {
        self.current_loop_tau / 5.0
    }

    /// Rated current magnitude at nominal voltage, A.
    pub fn rated_current(&self) -> f64 {
        self.s_rating * 1000.0 / self.v_base
    }
}

/// Plant state: filtered voltage (p.u.) and output currents (A).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlantState {
    pub v_filt: f64,
    pub i_d: f64,
    pub i_q: f64,
}

impl PlantState {
    /// Fixed point for constant terminal voltage and available power.
    pub fn equilibrium(v: f64, p_avail: f64, params: &PlantParams) -> Self {
        let p_star = p_avail.clamp(0.0, params.s_rating);
        let q = if params.volt_var {
            let headroom = (params.s_rating.powi(2) - p_star * p_star).max(0.0).sqrt();
            cap(volt_var_q(v, &params.curve).q, headroom)
        } else {
            0.0
        };
        let scale = 1000.0 / (v * params.v_base);
        Self {
            v_filt: v,
            i_d: p_star * scale,
            i_q: q * scale,
        }
    }

    pub fn output(&self, channel: OutputChannel) -> f64 {
        match channel {
            OutputChannel::Reactive => self.i_q,
            OutputChannel::Active => self.i_d,
            OutputChannel::Magnitude => self.i_d.hypot(self.i_q),
        }
    }

    /// Apparent power in kVA seen at the filtered voltage.
    pub fn apparent_power(&self, v_base: f64) -> f64 {
        self.v_filt * v_base * self.i_d.hypot(self.i_q) / 1000.0
    }

    fn is_finite(&self) -> bool {
        self.v_filt.is_finite() && self.i_d.is_finite() && self.i_q.is_finite()
    }
}

/// Result of one validated step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: PlantState,
    /// The curve was evaluated outside its continuous-operation range.
    pub ride_through: bool,
}

/// Fixed-step RK4 integrator with pre-computed constants.
#[derive(Debug, Clone)]
pub struct Plant {
    params: PlantParams,
    dt: f64,
    inv_tau: f64,
    current_scale: f64,
}

impl Plant {
    pub fn new(params: PlantParams, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "step {dt} s must be positive"
            )));
        }
        if dt > params.max_step() * (1.0 + 1e-12) {
            return Err(Error::StepSize {
                dt,
                limit: params.max_step(),
            });
        }
        Ok(Self {
            params,
            dt,
            inv_tau: 1.0 / params.current_loop_tau,
            current_scale: 1000.0 / params.v_base,
        })
    }

    pub fn params(&self) -> &PlantParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    #[inline]
    fn derivative(
        &self,
        x: &PlantState,
        v_t: f64,
        p_star: f64,
        headroom: f64,
    ) -> (PlantState, bool) {
        let p = &self.params;
        let (q, outside) = if p.volt_var {
            let c = volt_var_q(x.v_filt, &p.curve);
            (cap(c.q, headroom), c.outside)
        } else {
            (0.0, false)
        };
        let per_volt = self.current_scale / x.v_filt;
        let d = PlantState {
            v_filt: p.pll_bandwidth * (v_t - x.v_filt),
            i_d: (p_star * per_volt - x.i_d) * self.inv_tau,
            i_q: (q * per_volt - x.i_q) * self.inv_tau,
        };
        (d, outside)
    }

    /// Advance `steps` RK4 steps with the terminal voltage and available
    /// power held. Returns whether the curve saturated at any stage.
    #[inline]
    pub fn advance(
        &self,
        state: &mut PlantState,
        v_terminal: f64,
        p_avail: f64,
        steps: usize,
    ) -> bool {
        let s = self.params.s_rating;
        let p_star = p_avail.clamp(0.0, s);
        let headroom = (s * s - p_star * p_star).max(0.0).sqrt();
        let h = self.dt;
        let mut flagged = false;
        let limit_sq = (s * self.current_scale).powi(2);
        for _ in 0..steps {
            let x = *state;
            let (k1, f1) = self.derivative(&x, v_terminal, p_star, headroom);
            let x2 = axpy(&x, 0.5 * h, &k1);
            let (k2, f2) = self.derivative(&x2, v_terminal, p_star, headroom);
            let x3 = axpy(&x, 0.5 * h, &k2);
            let (k3, f3) = self.derivative(&x3, v_terminal, p_star, headroom);
            let x4 = axpy(&x, h, &k3);
            let (k4, f4) = self.derivative(&x4, v_terminal, p_star, headroom);
            flagged |= f1 | f2 | f3 | f4;
            let w = h / 6.0;
            let mut next = PlantState {
                v_filt: x.v_filt + w * (k1.v_filt + 2.0 * k2.v_filt + 2.0 * k3.v_filt + k4.v_filt),
                i_d: x.i_d + w * (k1.i_d + 2.0 * k2.i_d + 2.0 * k3.i_d + k4.i_d),
                i_q: x.i_q + w * (k1.i_q + 2.0 * k2.i_q + 2.0 * k3.i_q + k4.i_q),
            };
            // current limit: keep the output inside the capability circle
            let mag_sq = (next.i_d * next.i_d + next.i_q * next.i_q) * next.v_filt * next.v_filt;
            if mag_sq > limit_sq {
                let k = (limit_sq / mag_sq).sqrt();
                next.i_d *= k;
                next.i_q *= k;
            }
            // decaying currents would otherwise reach subnormal floats
            if next.i_d.abs() < FLUSH {
                next.i_d = 0.0;
            }
            if next.i_q.abs() < FLUSH {
                next.i_q = 0.0;
            }
            *state = next;
        }
        flagged
    }
}

/// Currents below this many amperes are set to zero.
const FLUSH: f64 = 1e-150;

#[inline]
fn axpy(x: &PlantState, a: f64, d: &PlantState) -> PlantState {
    PlantState {
        v_filt: x.v_filt + a * d.v_filt,
        i_d: x.i_d + a * d.i_d,
        i_q: x.i_q + a * d.i_q,
    }
}

/// One validated RK4 step.
pub fn plant_step(
    state: PlantState,
    v_terminal: f64,
    p_avail: f64,
    dt: f64,
    params: &PlantParams,
) -> Result<StepOutcome> {
    if !(v_terminal.is_finite() && p_avail.is_finite() && state.is_finite()) {
        return Err(Error::NonFinite("plant step input"));
    }
    if v_terminal <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "terminal voltage {v_terminal} p.u. must be positive"
        )));
    }
    let plant = Plant::new(*params, dt)?;
    let mut next = state;
    let ride_through = plant.advance(&mut next, v_terminal, p_avail, 1);
    if !next.is_finite() {
        return Err(Error::NonFinite("plant state"));
    }
    Ok(StepOutcome {
        state: next,
        ride_through,
    })
}

/// Output trace of a plant simulation.
#[derive(Debug, Clone)]
pub struct PlantRun {
    /// Output current in A, sampled like the input.
    pub output: Signal,
    /// Samples during which the curve was saturated outside `[v_l, v_h)`.
    pub ride_through_samples: usize,
    pub final_state: PlantState,
}

/// Drive the plant with a voltage signal and an available-power profile.
///
/// Sample `k` of the output is the state at the time of input sample `k`;
/// the input is then held for one sample interval. The plant starts at
/// equilibrium with the first input values.
pub fn simulate_plant(
    input: &Signal,
    p_avail_profile: &Signal,
    params: &PlantParams,
    dt: f64,
) -> Result<PlantRun> {
    if input.len() != p_avail_profile.len() {
        return Err(Error::InvalidArgument(format!(
            "input has {} samples, power profile {}",
            input.len(),
            p_avail_profile.len()
        )));
    }
    if (input.sample_rate() - p_avail_profile.sample_rate()).abs() > 1e-9 * input.sample_rate() {
        return Err(Error::InvalidArgument(
            "input and power profile sample rates differ".into(),
        ));
    }
    if input.is_empty() {
        return Err(Error::InvalidArgument("empty input signal".into()));
    }
    crate::error::ensure_finite("plant input", input.values())?;
    crate::error::ensure_finite("power profile", p_avail_profile.values())?;
    if input.values().iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidArgument(
            "terminal voltage must be positive".into(),
        ));
    }
    let ratio = input.spacing() / dt;
    let substeps = ratio.round();
    if substeps < 1.0 || (ratio - substeps).abs() > 1e-9 * ratio {
        return Err(Error::InvalidArgument(format!(
            "step {dt} s does not divide the input spacing {} s",
            input.spacing()
        )));
    }
    let substeps = substeps as usize;
    let plant = Plant::new(*params, dt)?;
    let u = input.values();
    let p = p_avail_profile.values();
    let mut state = PlantState::equilibrium(u[0], p[0], params);
    let mut out = Vec::with_capacity(u.len());
    let mut flagged = 0;
    for k in 0..u.len() {
        out.push(state.output(params.output));
        if plant.advance(&mut state, u[k], p[k], substeps) {
            flagged += 1;
        }
    }
    if !state.is_finite() {
        return Err(Error::NonFinite("plant state"));
    }
    if let Some(noise) = params.noise.filter(|n| n.amplitude > 0.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        for y in &mut out {
            *y += rng.random_range(-noise.amplitude..=noise.amplitude);
        }
    }
    Ok(PlantRun {
        output: Signal::new(input.start(), input.sample_rate(), out)?,
        ride_through_samples: flagged,
        final_state: state,
    })
}
