use crate::error::{param, Result};
use crate::geometry::{div_vector, same_grid, Grid, State};

/// States at uniformly spaced time nodes `t_0 + k Δt`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Grid,
    dt: f64,
    states: Vec<State>,
}

impl Trajectory {
    pub fn new(states: Vec<State>, dt: f64) -> Result<Self> {
        let first = states.first().ok_or_else(|| param("states", "trajectory needs at least one state"))?;
        if !(dt > 0.0) {
            return Err(param("dt", format!("must be positive, got {dt}")));
        }
        let grid = first.grid().clone();
        let t0 = first.t;
        for (k, s) in states.iter().enumerate() {
            same_grid(&grid, s.grid())?;
            same_grid(&grid, s.u.grid())?;
            let want = t0 + k as f64 * dt;
            if (s.t - want).abs() > 1e-9 * want.abs().max(1.0) {
                return Err(param("states", format!("node {k} at t = {} instead of {want}", s.t)));
            }
        }
        Ok(Trajectory { grid, dt, states })
    }

    pub fn zeros(grid: &Grid, dt: f64, n_nodes: usize, t0: f64) -> Result<Self> {
        let states = (0..n_nodes.max(1)).map(|k| State { t: t0 + k as f64 * dt, ..State::zeros(grid) }).collect();
        Trajectory::new(states, dt)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn len(&self) -> usize {
        self.states.len()
    }
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
    pub fn t0(&self) -> f64 {
        self.states[0].t
    }
    pub fn states(&self) -> &[State] {
        &self.states
    }
    pub fn into_states(self) -> Vec<State> {
        self.states
    }
    pub fn state(&self, k: usize) -> &State {
        &self.states[k]
    }
    pub fn last(&self) -> &State {
        &self.states[self.states.len() - 1]
    }
    pub fn time_nodes(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    /// Same grid, step and nodes.
    pub fn check_compatible(&self, other: &Trajectory) -> Result<()> {
        same_grid(&self.grid, &other.grid)?;
        if self.len() != other.len()
            || (self.dt - other.dt).abs() > 1e-12 * self.dt
            || (self.t0() - other.t0()).abs() > 1e-12 * self.t0().abs().max(1.0)
        {
            return Err(param("trajectory", "time nodes differ"));
        }
        Ok(())
    }

    /// `‖(u, θ)(t_k)‖_p` per node.
    pub fn norms(&self, p: f64) -> Result<Vec<f64>> {
        let exec = self.grid.exec();
        exec.map(self.len(), |k| self.states[k].product_norm(p)).into_iter().collect()
    }

    /// `sup_k ‖(u, θ)(t_k)‖_p`
    pub fn sup_norm(&self, p: f64) -> Result<f64> {
        Ok(self.norms(p)?.into_iter().fold(0.0, f64::max))
    }

    /// `sup_k ‖θ(t_k)‖_p`
    pub fn theta_sup_norm(&self, p: f64) -> Result<f64> {
        self.states.iter().try_fold(0.0f64, |m, s| Ok(m.max(s.theta.lp_norm(p)?)))
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Trajectory> {
        self.check_compatible(other)?;
        let states = self.states.iter().zip(&other.states).map(|(a, b)| a.sub(b)).collect();
        Ok(Trajectory { grid: self.grid.clone(), dt: self.dt, states })
    }

    /// `self + s * other`
    pub fn axpy(&mut self, s: f64, other: &Trajectory) -> Result<()> {
        self.check_compatible(other)?;
        self.states.iter_mut().zip(&other.states).for_each(|(a, b)| a.axpy(s, b));
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Trajectory {
        let states = self.states.iter().map(|x| x.clone().scaled(s)).collect();
        Trajectory { grid: self.grid.clone(), dt: self.dt, states }
    }

    /// First `n` nodes.
    pub fn truncated(&self, n: usize) -> Trajectory {
        Trajectory { grid: self.grid.clone(), dt: self.dt, states: self.states[..n.clamp(1, self.len())].to_vec() }
    }

    /// Every `r`-th node.
    pub fn subsampled(&self, r: usize) -> Trajectory {
        let r = r.max(1);
        let states = self.states.iter().step_by(r).cloned().collect();
        Trajectory { grid: self.grid.clone(), dt: self.dt * r as f64, states }
    }

    /// `r - 1` linearly interpolated nodes inserted into each step.
    pub fn refined(&self, r: usize) -> Trajectory {
        let r = r.max(1);
        let mut states = Vec::with_capacity((self.len() - 1) * r + 1);
        for w in self.states.windows(2) {
            for i in 0..r {
                let s = i as f64 / r as f64;
                let mut x = w[0].clone().scaled(1.0 - s);
                x.axpy(s, &w[1]);
                x.t = w[0].t + s * self.dt;
                states.push(x);
            }
        }
        states.push(self.last().clone());
        Trajectory { grid: self.grid.clone(), dt: self.dt / r as f64, states }
    }

    /// `max_k ‖div u(t_k)‖_2 / ‖u(t_k)‖_2`, over nodes where `u` is above
    /// round-off relative to the largest state norm of the trajectory.
    pub fn max_divergence_ratio(&self) -> Result<f64> {
        let mut scale = 0.0f64;
        for s in &self.states {
            scale = scale.max(s.u.lp_norm(2.0)?).max(s.theta.lp_norm(2.0)?);
        }
        let floor = 1e-12 * scale;
        self.states.iter().try_fold(0.0f64, |m, s| {
            let nu = s.u.lp_norm(2.0)?;
            if nu <= floor {
                return Ok(m);
            }
            Ok(m.max(div_vector(&s.u).lp_norm(2.0)? / nu))
        })
    }
}
