//! Time stepping for M zeta'' + S zeta = F(t) via the first-order
//! reformulation eta = zeta' and the one-step recursion
//!
//! ```text
//! (M + tau^2/4 S) eta^{n+1/2} = M eta^n + tau/2 (-S zeta^n + F^{n+1/2})
//! zeta^{n+1} = zeta^n + tau eta^{n+1/2}
//! eta^{n+1}  = 2 eta^{n+1/2} - eta^n
//! ```
//!
//! with F^{n+1/2} = F(t^{n+1/2}) for the implicit midpoint rule and
//! (F(t^n) + F(t^{n+1}))/2 for Crank-Nicolson. The system matrix is
//! factorized once and reused for all steps.

use crate::linalg::{self, axpy, Factorization, SparseMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Midpoint,
    CrankNicolson,
}

/// Displacement/velocity coefficient pair advancing the recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub zeta: Vec<f64>,
    pub eta: Vec<f64>,
    pub step_index: usize,
    pub tau: f64,
}

impl WaveState {
    pub fn new(zeta: Vec<f64>, eta: Vec<f64>, tau: f64) -> Self {
        assert_eq!(zeta.len(), eta.len());
        Self { zeta, eta, step_index: 0, tau }
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.tau
    }
}

/// Factorization of (M + tau^2/4 S), computed once. tau = 0 is rejected;
/// negative tau is admitted (it drives the recursion backwards).
pub fn prepare_stepper(m: &SparseMatrix, s: &SparseMatrix, tau: f64) -> Result<Factorization> {
    if tau == 0.0 {
        return Err(Error::Timestep("time step tau must be nonzero".into()));
    }
    let sys = m.add_scaled(s, tau * tau / 4.0);
    if sys.is_symmetric(1e-12) {
        linalg::factorize(&sys)
    } else {
        linalg::factorize_general(&sys)
    }
}

/// One-step driver bundling the matrices, the factorized system and the
/// scheme choice.
pub struct Stepper<'a> {
    pub m: &'a SparseMatrix,
    pub s: &'a SparseMatrix,
    pub tau: f64,
    pub scheme: SchemeKind,
    /// Restore the literal update with the extra mass factor on the load
    /// term (for comparison only; the consistent form is the default).
    pub literal_mass_load: bool,
    factor: Factorization,
}

impl<'a> Stepper<'a> {
    pub fn new(
        m: &'a SparseMatrix,
        s: &'a SparseMatrix,
        tau: f64,
        scheme: SchemeKind,
    ) -> Result<Self> {
        let factor = prepare_stepper(m, s, tau)?;
        Ok(Self { m, s, tau, scheme, literal_mass_load: false, factor })
    }

    pub fn factorization(&self) -> &Factorization {
        &self.factor
    }

    /// Advance one step; `load_at` yields the assembled load vector F(t).
    pub fn step(&self, state: &WaveState, load_at: &mut dyn FnMut(f64) -> Vec<f64>) -> WaveState {
        let tau = self.tau;
        let t = state.step_index as f64 * tau;
        let f_half = match self.scheme {
            SchemeKind::Midpoint => load_at(t + 0.5 * tau),
            SchemeKind::CrankNicolson => {
                let f0 = load_at(t);
                let f1 = load_at(t + tau);
                f0.iter().zip(&f1).map(|(a, b)| 0.5 * (a + b)).collect()
            }
        };
        let f_half = if self.literal_mass_load { self.m.matvec(&f_half) } else { f_half };

        let mut rhs = self.m.matvec(&state.eta);
        let s_zeta = self.s.matvec(&state.zeta);
        axpy(-0.5 * tau, &s_zeta, &mut rhs);
        axpy(0.5 * tau, &f_half, &mut rhs);
        let eta_half = self.factor.solve(&rhs);

        let mut zeta = state.zeta.clone();
        axpy(tau, &eta_half, &mut zeta);
        let eta: Vec<f64> =
            eta_half.iter().zip(&state.eta).map(|(h, e)| 2.0 * h - e).collect();
        WaveState { zeta, eta, step_index: state.step_index + 1, tau }
    }
}

/// Displacement snapshots of a full run, one per time grid point.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn final_snapshot(&self) -> &[f64] {
        self.snapshots.last().expect("trajectory has at least the initial state")
    }
}

/// [`simulate`] collecting the displacement at every step.
#[allow(clippy::too_many_arguments)]
pub fn simulate_trajectory(
    m: &SparseMatrix,
    s: &SparseMatrix,
    load_at: &mut dyn FnMut(f64) -> Vec<f64>,
    zeta0: Vec<f64>,
    eta0: Vec<f64>,
    tau: f64,
    t_final: f64,
    scheme: SchemeKind,
) -> Result<Trajectory> {
    let mut traj = Trajectory { times: Vec::new(), snapshots: Vec::new() };
    simulate(m, s, load_at, zeta0, eta0, tau, t_final, scheme, |t, st| {
        traj.times.push(t);
        traj.snapshots.push(st.zeta.clone());
    })?;
    Ok(traj)
}

/// Discrete energy 1/2 eta' M eta + 1/2 zeta' S zeta.
pub fn energy(m: &SparseMatrix, s: &SparseMatrix, state: &WaveState) -> f64 {
    0.5 * m.quadratic_form(&state.eta, &state.eta)
        + 0.5 * s.quadratic_form(&state.zeta, &state.zeta)
}

/// Run exactly T/tau steps from (zeta0, eta0); the observer sees every state
/// including the initial one.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    m: &SparseMatrix,
    s: &SparseMatrix,
    load_at: &mut dyn FnMut(f64) -> Vec<f64>,
    zeta0: Vec<f64>,
    eta0: Vec<f64>,
    tau: f64,
    t_final: f64,
    scheme: SchemeKind,
    mut observer: impl FnMut(f64, &WaveState),
) -> Result<WaveState> {
    if tau <= 0.0 {
        return Err(Error::Timestep("simulate requires tau > 0".into()));
    }
    let steps_f = t_final / tau;
    let steps = steps_f.round();
    if (steps_f - steps).abs() > 1e-9 || steps < 0.0 {
        return Err(Error::Timestep(format!(
            "final time {t_final} is not an integer multiple of tau = {tau}"
        )));
    }
    let stepper = Stepper::new(m, s, tau, scheme)?;
    let mut state = WaveState::new(zeta0, eta0, tau);
    observer(0.0, &state);
    for _ in 0..steps as usize {
        state = stepper.step(&state, load_at);
        observer(state.time(), &state);
    }
    Ok(state)
}
