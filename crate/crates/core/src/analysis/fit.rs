use super::{AnalysisError, G2Estimate};

/// Analytical g²(τ) for bursts of constant rate `event_rate` lasting
/// `delta_tau`, arriving at `atom_rate`, on top of background `noise_rate`:
///
/// ```text
/// g²(τ) = 1 + R_A·R_E²·(Δτ − |τ|) / (Δτ·R_A·R_E + R_N)²   for |τ| ≤ Δτ, else 1
/// ```
pub fn g2_model(tau: f64, atom_rate: f64, event_rate: f64, delta_tau: f64, noise_rate: f64) -> f64 {
    let tau = tau.abs();
    if tau > delta_tau {
        return 1.0;
    }
    let total = delta_tau * atom_rate * event_rate + noise_rate;
    1.0 + atom_rate * event_rate * event_rate * (delta_tau - tau) / (total * total)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct G2FitErrors {
    pub n_per_atom: f64,
    pub delta_tau: f64,
    pub g2_zero: f64,
    pub event_rate: f64,
}

/// Triangular-model fit to a measured g²(τ) with R_N and R held fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G2Fit {
    /// ⟨N⟩ = Δτ·R_E, detected events per atom.
    pub n_per_atom: f64,
    pub delta_tau: f64,
    pub g2_zero: f64,
    /// R_E, event rate while an atom is in the beam.
    pub event_rate: f64,
    /// R_A from R = R_N + Δτ·R_E·R_A.
    pub atom_rate: f64,
    pub noise_rate: f64,
    pub total_rate: f64,
    pub errors: G2FitErrors,
    pub points: usize,
    pub reduced_chi2: f64,
}

impl G2Fit {
    pub fn model(&self, tau: f64) -> f64 {
        g2_model(tau, self.atom_rate, self.event_rate, self.delta_tau, self.noise_rate)
    }
}

/// Fit inputs after selecting the fit range: (lag, g² − 1, weight).
struct Points {
    lag: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Points {
    fn shape(&self, delta_tau: f64) -> impl Iterator<Item = f64> + '_ {
        self.lag.iter().map(move |&t| (1.0 - t / delta_tau).max(0.0))
    }

    /// Best amplitude for a given width (weighted linear least squares).
    fn amplitude(&self, delta_tau: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for ((h, y), w) in self.shape(delta_tau).zip(&self.y).zip(&self.w) {
            num += w * y * h;
            den += w * h * h;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    fn ssr(&self, amp: f64, delta_tau: f64) -> f64 {
        self.shape(delta_tau).zip(&self.y).zip(&self.w).map(|((h, y), w)| w * (y - amp * h).powi(2)).sum()
    }

    fn profile(&self, delta_tau: f64) -> f64 {
        self.ssr(self.amplitude(delta_tau), delta_tau)
    }

    /// Weighted normal matrix JᵀWJ and gradient JᵀW r for (amplitude, width).
    fn normal_equations(&self, amp: f64, delta_tau: f64) -> ([[f64; 2]; 2], [f64; 2]) {
        let mut m = [[0.0; 2]; 2];
        let mut g = [0.0; 2];
        for ((&t, &y), &w) in self.lag.iter().zip(&self.y).zip(&self.w) {
            let (h, dh) = if t < delta_tau { (1.0 - t / delta_tau, t / (delta_tau * delta_tau)) } else { (0.0, 0.0) };
            let j = [h, amp * dh];
            let r = y - amp * h;
            for a in 0..2 {
                g[a] += w * j[a] * r;
                for b in 0..2 {
                    m[a][b] += w * j[a] * j[b];
                }
            }
        }
        (m, g)
    }
}

fn invert2(m: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    (det.abs() > 0.0 && det.is_finite()).then(|| [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > rel_tol * (a.abs() + b.abs()) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

const GRID_POINTS: usize = 800;

/// Fits the triangular g² model with free (R_E, Δτ) and fixed `noise_rate`
/// (R_N) and `total_rate` (R).
///
/// Weights are inverse Poisson variances of the binned estimate. The fit
/// range is `[0, 3·Δτ₀]`, with Δτ₀ the first lag at which the estimate drops
/// below `1 + (g²(0) − 1)/e`.
pub fn fit_g2(est: &G2Estimate, noise_rate: f64, total_rate: f64) -> Result<G2Fit, AnalysisError> {
    if !(noise_rate.is_finite() && noise_rate >= 0.0) {
        return Err(AnalysisError::InvalidParameter { name: "noise_rate", reason: "must be >= 0".into() });
    }
    if !total_rate.is_finite() {
        return Err(AnalysisError::InvalidParameter { name: "total_rate", reason: "must be finite".into() });
    }
    if est.values.is_empty() || est.values.len() != est.lags.len() {
        return Err(AnalysisError::InvalidParameter { name: "estimate", reason: "no lag bins".into() });
    }
    if total_rate <= noise_rate {
        return Err(AnalysisError::NoAtomSignal);
    }
    let g0 = est.values[0];
    if !(g0.is_finite() && g0 > 1.0) {
        return Err(AnalysisError::NoAtomSignal);
    }
    let cut = 1.0 + (g0 - 1.0) / std::f64::consts::E;
    let tau0 =
        est.lags.iter().zip(&est.values).find(|(_, v)| **v < cut).map(|(l, _)| *l).unwrap_or(*est.lags.last().unwrap());
    let range = 3.0 * tau0;

    let mut pts = Points { lag: Vec::new(), y: Vec::new(), w: Vec::new() };
    for (&l, &v) in est.lags.iter().zip(&est.values) {
        if l <= range {
            pts.lag.push(l);
            pts.y.push(v - 1.0);
            pts.w.push(est.normalization / v.max(1e-3));
        }
    }
    if pts.lag.len() < 3 {
        return Err(AnalysisError::NotConverged("fewer than three lag bins in the fit range".into()));
    }

    let lo = 0.25 * pts.lag[0];
    let hi = 2.0 * range;
    let grid: Vec<f64> = (0..=GRID_POINTS).map(|i| lo + (hi - lo) * i as f64 / GRID_POINTS as f64).collect();
    let scores: Vec<f64> = grid.iter().map(|&d| pts.profile(d)).collect();
    let best = scores.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap();
    if best == GRID_POINTS {
        return Err(AnalysisError::NotConverged("burst duration runs past the fit range".into()));
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(GRID_POINTS)];
    let mut delta_tau = golden_section(|d| pts.profile(d), a, b, 1e-14);
    let mut amp = pts.amplitude(delta_tau);

    // Gauss-Newton polish on (amplitude, width).
    for _ in 0..20 {
        let (m, g) = pts.normal_equations(amp, delta_tau);
        let Some(inv) = invert2(m) else { break };
        let step = [inv[0][0] * g[0] + inv[0][1] * g[1], inv[1][0] * g[0] + inv[1][1] * g[1]];
        let (na, nd) = (amp + step[0], delta_tau + step[1]);
        if !(nd.is_finite() && nd > 0.0) || pts.ssr(na, nd) > pts.ssr(amp, delta_tau) {
            break;
        }
        let done = step[1].abs() <= 1e-15 * delta_tau && step[0].abs() <= 1e-15 * amp.abs();
        amp = na;
        delta_tau = nd;
        if done {
            break;
        }
    }

    let ssr = pts.ssr(amp, delta_tau);
    let dof = pts.lag.len().saturating_sub(2).max(1);
    let reduced_chi2 = ssr / dof as f64;
    let (m, _) = pts.normal_equations(amp, delta_tau);
    let cov = invert2(m).map(|c| c.map(|row| row.map(|x| x * reduced_chi2))).unwrap_or([[f64::NAN; 2]; 2]);
    let se_amp = cov[0][0].max(0.0).sqrt();

    if !(amp.is_finite() && amp > 0.0) || (se_amp > 0.0 && amp < 3.0 * se_amp) {
        return Err(AnalysisError::NoAtomSignal);
    }

    let signal = total_rate - noise_rate;
    let scale = total_rate * total_rate / signal;
    let event_rate = amp * scale;
    let n_per_atom = delta_tau * event_rate;
    let atom_rate = signal / n_per_atom;

    let var_re = cov[0][0] * scale * scale;
    let var_dt = cov[1][1];
    let cov_re_dt = cov[0][1] * scale;
    let var_n =
        event_rate * event_rate * var_dt + delta_tau * delta_tau * var_re + 2.0 * delta_tau * event_rate * cov_re_dt;

    Ok(G2Fit {
        n_per_atom,
        delta_tau,
        g2_zero: 1.0 + amp,
        event_rate,
        atom_rate,
        noise_rate,
        total_rate,
        errors: G2FitErrors {
            n_per_atom: var_n.max(0.0).sqrt(),
            delta_tau: var_dt.max(0.0).sqrt(),
            g2_zero: se_amp,
            event_rate: var_re.max(0.0).sqrt(),
        },
        points: pts.lag.len(),
        reduced_chi2,
    })
}
