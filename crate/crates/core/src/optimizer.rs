//! COBYLA: derivative-free minimisation by linear approximation on a simplex.
//!
//! This follows Powell's algorithm. The current simplex has `n + 1` vertices
//! stored as a pivot (the best vertex so far) plus `n` displacements from it,
//! together with the inverse of the displacement matrix. Each cycle fits the
//! linear model that interpolates the objective on the simplex and either
//! takes a trust-region step of radius `rho` or, when the simplex has become
//! badly shaped, a geometry step that restores it. `rho` is halved once
//! neither kind of step makes progress, until it reaches `rho_end`.
//!
//! Only the unconstrained problem is exposed. The merit function keeps
//! Powell's `f + mu * max_violation` form with zero constraints, so the
//! trust-region subproblem reduces to a steepest-descent step to the boundary.

use crate::{Error, Result};

/// Simplex acceptability: every vertex must satisfy `sigma >= ALPHA * rho`.
const ALPHA: f64 = 0.25;
/// Simplex acceptability: every edge from the pivot must be `<= BETA * rho`.
const BETA: f64 = 2.1;
/// Length factor of a geometry step.
const GAMMA: f64 = 0.5;
/// Edge length beyond which a far vertex is preferred for replacement.
const DELTA: f64 = 1.1;

/// Stand-in for non-finite objective values inside the linear model. Large
/// enough to repel the search, small enough that differences stay finite.
const NON_FINITE_SUBSTITUTE: f64 = 1e150;

#[derive(Clone, Debug, PartialEq)]
pub struct CobylaConfig {
    pub rho_begin: f64,
    pub rho_end: f64,
    /// Evaluations allowed after the `n + 1` that build the initial simplex.
    pub max_iterations: usize,
    /// Seed for the caller's choice of starting point. COBYLA itself is
    /// deterministic given `x0`.
    pub seed: u64,
}

impl Default for CobylaConfig {
    fn default() -> Self {
        CobylaConfig {
            rho_begin: 1.0,
            rho_end: 1e-4,
            max_iterations: 1000,
            seed: 0,
        }
    }
}

impl CobylaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_end > 0.0 && self.rho_end <= self.rho_begin && self.rho_begin.is_finite()) {
            return Err(Error::Spec(format!(
                "COBYLA needs 0 < rho_end <= rho_begin, got rho_begin={} rho_end={}",
                self.rho_begin, self.rho_end
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Spec("COBYLA needs max_iterations >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// The trust-region radius reached `rho_end`.
    Converged,
    BudgetExhausted,
    /// The stored inverse of the simplex drifted too far from the simplex.
    RoundoffLimited,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::BudgetExhausted => "budget_exhausted",
            Termination::RoundoffLimited => "roundoff_limited",
        }
    }
}

/// Internal counters, mostly useful to tests.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CobylaStats {
    pub trust_region_steps: usize,
    pub geometry_steps: usize,
    pub rho_reductions: usize,
    /// Times the simplex failed the acceptability test after an unproductive
    /// trust-region step, sending the next cycle to the geometry branch.
    pub unacceptable_simplex: usize,
    /// Worst `|simi * sim - I|` entry seen at the start of any cycle.
    pub max_inverse_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    /// Evaluations beyond the initial simplex.
    pub iterations: usize,
    pub termination: Termination,
    pub final_rho: f64,
    /// Every objective value in evaluation order, non-finite values as `+inf`.
    pub history: Vec<f64>,
    pub stats: CobylaStats,
}

impl OptResult {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

struct Budget;

struct Cobyla<'a, F> {
    objective: F,
    config: &'a CobylaConfig,
    n: usize,
    rho: f64,
    /// Merit penalty on constraint violation; stays zero without constraints.
    parmu: f64,
    /// `sim[i][j]`: coordinate `i` of vertex `j` relative to the pivot;
    /// column `n` holds the pivot itself.
    sim: Vec<Vec<f64>>,
    /// `simi[j][i]`: inverse of the leading `n x n` block of `sim`.
    simi: Vec<Vec<f64>>,
    /// Model objective values per vertex (pivot at `n`).
    fval: Vec<f64>,
    /// Greatest constraint violation per vertex.
    resval: Vec<f64>,
    budget: usize,
    history: Vec<f64>,
    best_point: Vec<f64>,
    best_value: f64,
    stats: CobylaStats,
}

impl<F: FnMut(&[f64]) -> f64> Cobyla<'_, F> {
    /// Evaluates `x`, returning the value the linear model should use.
    fn evaluate(&mut self, x: &[f64]) -> Result<f64, Budget> {
        if self.history.len() >= self.budget {
            return Err(Budget);
        }
        let raw = (self.objective)(x);
        let value = if raw.is_nan() { f64::INFINITY } else { raw };
        self.history.push(value);
        if value < self.best_value || self.best_point.is_empty() {
            self.best_value = value;
            self.best_point = x.to_vec();
        }
        Ok(value.min(NON_FINITE_SUBSTITUTE))
    }

    fn merit(&self, j: usize) -> f64 {
        self.fval[j] + self.parmu * self.resval[j]
    }

    fn pivot(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.sim[i][self.n]).collect()
    }

    fn initial_simplex(&mut self, x0: &[f64]) -> Result<(), Budget> {
        let n = self.n;
        let rho = self.rho;
        for i in 0..n {
            self.sim[i][n] = x0[i];
            self.sim[i][i] = rho;
            self.simi[i][i] = 1.0 / rho;
        }
        self.fval[n] = self.evaluate(x0)?;
        for j in 0..n {
            let mut x = self.pivot();
            x[j] += rho;
            let f = self.evaluate(&x)?;
            if self.fval[n] <= f {
                self.fval[j] = f;
                continue;
            }
            // The new vertex is better: it becomes the pivot and the old
            // pivot sits at -rho along axis j.
            self.sim[j][n] = x[j];
            self.fval[j] = self.fval[n];
            self.fval[n] = f;
            for k in 0..=j {
                self.sim[j][k] = -rho;
                let mut temp = 0.0;
                for i in k..=j {
                    temp -= self.simi[i][k];
                }
                self.simi[j][k] = temp;
            }
        }
        Ok(())
    }

    /// Moves the vertex with the least merit into the pivot position.
    fn promote_best_vertex(&mut self) {
        let n = self.n;
        let mut nbest = n;
        let mut phimin = self.merit(n);
        for j in 0..n {
            let temp = self.merit(j);
            if temp < phimin {
                nbest = j;
                phimin = temp;
            } else if temp == phimin && self.parmu == 0.0 && self.resval[j] < self.resval[nbest] {
                nbest = j;
            }
        }
        if nbest == n {
            return;
        }
        self.fval.swap(nbest, n);
        self.resval.swap(nbest, n);
        for i in 0..n {
            let temp = self.sim[i][nbest];
            self.sim[i][nbest] = 0.0;
            self.sim[i][n] += temp;
            let mut tempa = 0.0;
            for k in 0..n {
                self.sim[i][k] -= temp;
                tempa -= self.simi[k][i];
            }
            self.simi[nbest][i] = tempa;
        }
    }

    fn inverse_error(&self) -> f64 {
        let n = self.n;
        let mut error: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut temp = if i == j { -1.0 } else { 0.0 };
                for k in 0..n {
                    temp += self.simi[i][k] * self.sim[k][j];
                }
                error = error.max(temp.abs());
            }
        }
        error
    }

    /// Gradient of the linear model interpolating the objective on the simplex.
    fn model_gradient(&self) -> Vec<f64> {
        let n = self.n;
        let f0 = self.fval[n];
        (0..n)
            .map(|i| (0..n).map(|j| (self.fval[j] - f0) * self.simi[j][i]).sum())
            .collect()
    }

    /// Replaces vertex `jdrop` by the displacement `dx` and updates the inverse.
    fn replace_vertex(&mut self, jdrop: usize, dx: &[f64], f: f64) {
        let n = self.n;
        let mut temp = 0.0;
        for i in 0..n {
            self.sim[i][jdrop] = dx[i];
            temp += self.simi[jdrop][i] * dx[i];
        }
        for i in 0..n {
            self.simi[jdrop][i] /= temp;
        }
        for j in 0..n {
            if j == jdrop {
                continue;
            }
            let temp: f64 = (0..n).map(|i| self.simi[j][i] * dx[i]).sum();
            for i in 0..n {
                self.simi[j][i] -= temp * self.simi[jdrop][i];
            }
        }
        self.fval[jdrop] = f;
        self.resval[jdrop] = 0.0;
    }

    fn run(&mut self, x0: &[f64]) -> Termination {
        if self.initial_simplex(x0).is_err() {
            return Termination::BudgetExhausted;
        }
        match self.iterate() {
            Ok(t) => t,
            Err(Budget) => Termination::BudgetExhausted,
        }
    }

    fn iterate(&mut self) -> Result<Termination, Budget> {
        let n = self.n;
        let mut ibrnch = true;
        let mut vsig = vec![0.0; n];
        let mut veta = vec![0.0; n];

        loop {
            self.promote_best_vertex();

            let error = self.inverse_error();
            self.stats.max_inverse_error = self.stats.max_inverse_error.max(error);
            if error > 0.1 {
                return Ok(Termination::RoundoffLimited);
            }

            let grad = self.model_gradient();

            let parsig = ALPHA * self.rho;
            let pareta = BETA * self.rho;
            let mut acceptable = true;
            for j in 0..n {
                let wsig: f64 = self.simi[j].iter().map(|v| v * v).sum();
                let weta: f64 = (0..n).map(|i| self.sim[i][j] * self.sim[i][j]).sum();
                vsig[j] = 1.0 / wsig.sqrt();
                veta[j] = weta.sqrt();
                if vsig[j] < parsig || veta[j] > pareta {
                    acceptable = false;
                }
            }

            if !ibrnch && !acceptable {
                self.geometry_step(&grad, &vsig, &veta, pareta)?;
                ibrnch = true;
                continue;
            }

            // Trust-region step; a short step means the model is flat at
            // this radius.
            let (dx, full) = trust_region_step(&grad, self.rho);
            let step_sq: f64 = dx.iter().map(|d| d * d).sum();
            let mut improved = false;
            if full || step_sq >= 0.25 * self.rho * self.rho {
                improved = self.trust_region_update(&grad, &dx, &vsig, &veta, parsig)?;
            }
            ibrnch = true;
            if improved {
                continue;
            }

            if !acceptable {
                self.stats.unacceptable_simplex += 1;
                ibrnch = false;
                continue;
            }
            if self.rho > self.config.rho_end {
                self.rho *= 0.5;
                if self.rho <= 1.5 * self.config.rho_end {
                    self.rho = self.config.rho_end;
                }
                self.stats.rho_reductions += 1;
                continue;
            }
            return Ok(Termination::Converged);
        }
    }

    /// Replaces the worst-shaped vertex with one at distance `GAMMA * rho`
    /// along the corresponding row of the inverse, pointing downhill.
    fn geometry_step(
        &mut self,
        grad: &[f64],
        vsig: &[f64],
        veta: &[f64],
        pareta: f64,
    ) -> Result<(), Budget> {
        let n = self.n;
        let mut jdrop = None;
        let mut temp = pareta;
        for j in 0..n {
            if veta[j] > temp {
                jdrop = Some(j);
                temp = veta[j];
            }
        }
        if jdrop.is_none() {
            for j in 0..n {
                if vsig[j] < temp {
                    jdrop = Some(j);
                    temp = vsig[j];
                }
            }
        }
        // An unacceptable simplex always has a violating vertex.
        let jdrop = jdrop.unwrap_or(0);

        let scale = GAMMA * self.rho * vsig[jdrop];
        let mut dx: Vec<f64> = self.simi[jdrop].iter().map(|v| scale * v).collect();
        let slope: f64 = grad.iter().zip(&dx).map(|(g, d)| g * d).sum();
        // With constraints Powell also weighs the predicted violation at
        // either sign; with none this reduces to picking the downhill sign.
        if slope > 0.0 {
            dx.iter_mut().for_each(|d| *d = -*d);
        }

        let x: Vec<f64> = (0..n).map(|i| self.sim[i][n] + dx[i]).collect();
        let f = self.evaluate(&x)?;
        self.replace_vertex(jdrop, &dx, f);
        self.stats.geometry_steps += 1;
        Ok(())
    }

    /// Evaluates the trust-region trial point and decides which vertex, if
    /// any, it replaces. Returns true when the actual reduction is good
    /// enough to keep the current radius.
    fn trust_region_update(
        &mut self,
        grad: &[f64],
        dx: &[f64],
        vsig: &[f64],
        veta: &[f64],
        parsig: f64,
    ) -> Result<bool, Budget> {
        let n = self.n;
        let prerem: f64 = -grad.iter().zip(dx).map(|(g, d)| g * d).sum::<f64>();
        let x: Vec<f64> = (0..n).map(|i| self.sim[i][n] + dx[i]).collect();
        let f = self.evaluate(&x)?;
        self.stats.trust_region_steps += 1;

        let vmold = self.merit(n);
        let vmnew = f;
        let trured = vmold - vmnew;

        // Vertex to drop: the one whose removal best preserves volume. A
        // worse point is only admitted if it improves volume.
        let mut ratio = if trured <= 0.0 { 1.0 } else { 0.0 };
        let mut jdrop = None;
        let mut sigbar = vec![0.0; n];
        for j in 0..n {
            let temp = (0..n).map(|i| self.simi[j][i] * dx[i]).sum::<f64>().abs();
            if temp > ratio {
                jdrop = Some(j);
                ratio = temp;
            }
            sigbar[j] = temp * vsig[j];
        }

        // Prefer dropping a vertex that is far from the new point.
        let mut edgmax = DELTA * self.rho;
        let mut far = None;
        for j in 0..n {
            if sigbar[j] >= parsig || sigbar[j] >= vsig[j] {
                let mut temp = veta[j];
                if trured > 0.0 {
                    temp = (0..n)
                        .map(|i| (dx[i] - self.sim[i][j]).powi(2))
                        .sum::<f64>()
                        .sqrt();
                }
                if temp > edgmax {
                    far = Some(j);
                    edgmax = temp;
                }
            }
        }
        if far.is_some() {
            jdrop = far;
        }
        let Some(jdrop) = jdrop else {
            return Ok(false);
        };

        self.replace_vertex(jdrop, dx, f);
        Ok(trured > 0.0 && trured >= 0.1 * prerem)
    }
}

/// Minimiser of the linear model `g . d` over `|d| <= rho`. Returns the step
/// and whether it reaches the boundary.
fn trust_region_step(grad: &[f64], rho: f64) -> (Vec<f64>, bool) {
    let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if gmax == 0.0 || !gmax.is_finite() {
        return (vec![0.0; grad.len()], false);
    }
    let norm = grad.iter().map(|g| (g / gmax).powi(2)).sum::<f64>().sqrt();
    let step = grad.iter().map(|g| -rho * (g / gmax) / norm).collect();
    (step, true)
}

/// Minimises `objective` from `x0`. Non-finite objective values are treated
/// as `+inf` and never become the best point unless nothing finite was seen.
pub fn minimize<F>(objective: F, x0: &[f64], config: &CobylaConfig) -> Result<OptResult>
where
    F: FnMut(&[f64]) -> f64,
{
    config.validate()?;
    let n = x0.len();
    if n == 0 {
        return Err(Error::Spec("cannot minimise over zero variables".into()));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "starting point has non-finite coordinates".into(),
        ));
    }

    let mut run = Cobyla {
        objective,
        config,
        n,
        rho: config.rho_begin,
        parmu: 0.0,
        sim: vec![vec![0.0; n + 1]; n],
        simi: vec![vec![0.0; n]; n],
        fval: vec![0.0; n + 1],
        resval: vec![0.0; n + 1],
        budget: n + 1 + config.max_iterations,
        history: Vec::with_capacity(n + 1 + config.max_iterations.min(100_000)),
        best_point: Vec::new(),
        best_value: f64::INFINITY,
        stats: CobylaStats::default(),
    };
    let termination = run.run(x0);
    let evaluations = run.history.len();
    Ok(OptResult {
        best_point: run.best_point,
        best_value: run.best_value,
        evaluations,
        iterations: evaluations.saturating_sub(n + 1),
        termination,
        final_rho: run.rho,
        history: run.history,
        stats: run.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(max_iterations: usize) -> CobylaConfig {
        CobylaConfig {
            max_iterations,
            ..CobylaConfig::default()
        }
    }

    #[test]
    fn one_dimensional_quadratic() {
        let r = minimize(|x| (x[0] - 1.0).powi(2), &[5.0], &cfg(1000)).unwrap();
        assert!((r.best_point[0] - 1.0).abs() < 1e-3, "{:?}", r.best_point);
        assert!(r.converged());
    }

    #[test]
    fn sphere() {
        let r = minimize(|x| x[0] * x[0] + x[1] * x[1], &[3.0, -4.0], &cfg(1000)).unwrap();
        assert!(r.best_value < 1e-6, "{}", r.best_value);
    }

    #[test]
    fn budget_is_respected() {
        let r = minimize(|x| x.iter().map(|v| v * v).sum(), &[1.0; 4], &cfg(7)).unwrap();
        assert_eq!(r.evaluations, 4 + 1 + 7);
        assert_eq!(r.iterations, 7);
        assert_eq!(r.termination, Termination::BudgetExhausted);
    }

    #[test]
    fn best_value_never_exceeds_start() {
        let f = |x: &[f64]| (x[0] * 3.0).sin() + x[1].cos() * x[0];
        let x0 = [0.3, -0.2];
        let r = minimize(f, &x0, &cfg(200)).unwrap();
        assert!(r.best_value <= f(&x0));
        assert_eq!(f(&r.best_point), r.best_value);
    }

    #[test]
    fn nan_region_is_rejected_without_panicking() {
        let f = |x: &[f64]| {
            if x[0] < 0.5 {
                f64::NAN
            } else {
                (x[0] - 2.0).powi(2) + x[1] * x[1]
            }
        };
        let r = minimize(f, &[1.0, 1.0], &cfg(500)).unwrap();
        assert!(r.best_value.is_finite());
        assert!(r.best_value < 1e-4, "{}", r.best_value);
        assert!(r.history.iter().all(|v| !v.is_nan()));
    }

    #[test]
    fn rejects_bad_config() {
        let bad = CobylaConfig {
            rho_begin: 1e-5,
            rho_end: 1e-4,
            ..CobylaConfig::default()
        };
        assert!(minimize(|x| x[0], &[0.0], &bad).is_err());
        assert!(minimize(|x| x[0], &[0.0], &cfg(0)).is_err());
        assert!(minimize(|_| 0.0, &[], &cfg(10)).is_err());
    }
}
