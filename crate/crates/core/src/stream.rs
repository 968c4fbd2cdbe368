//! Streaming accumulation of the self-normalized pair
//!
//! ```text
//! S_t = Σ_{k≤t} W_k X_k,      V_t = Σ_{k≤t} X_k X_kᵀ
//! ```
//!
//! with a fixed regularizer `Γ ⪰ 0`. The state keeps a Cholesky factor of
//! `V_t + Γ` (rank-one updated per observation) next to an exact dense
//! accumulation of the same matrix; the factor is rebuilt from the dense copy
//! every [`REFRESH_INTERVAL`] updates.
//!
//! Callers must feed `X_k` that is predictable, i.e. chosen before `W_k` is
//! drawn. The stream cannot check this.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, check_dim, cholesky, default_psd_tol, CholFactor, SymMatrix};

/// Rank-one updates between full refactorizations.
pub const REFRESH_INTERVAL: u64 = 10_000;

/// Relative pivot floor used when deciding whether a singular-Γ gram matrix
/// has become positive definite.
const DEFERRED_PIVOT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: Vec<f64>,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleState {
    d: usize,
    t: u64,
    s: Vec<f64>,
    regularizer: SymMatrix,
    /// Dense `V_t + Γ`.
    gram: SymMatrix,
    chol: Option<CholFactor>,
    since_refresh: u64,
    replay: Option<Vec<Observation>>,
}

impl MartingaleState {
    /// Fresh state with `t = 0`, `S = 0`, gram `= Γ`. `Γ` must be PSD.
    pub fn new(d: usize, gamma: SymMatrix) -> Result<Self> {
        check_dim(d, gamma.dim())?;
        if !gamma.is_finite() {
            return Err(crate::error::invalid("gamma", "non-finite entry"));
        }
        gamma.check_psd(default_psd_tol(&gamma))?;
        let mut state = Self {
            d,
            t: 0,
            s: vec![0.0; d],
            gram: gamma.clone(),
            regularizer: gamma,
            chol: None,
            since_refresh: 0,
            replay: None,
        };
        state.try_factor();
        Ok(state)
    }

    /// Keeps every observation so the state can be rebuilt under another Γ.
    pub fn with_replay_log(mut self) -> Self {
        self.replay.get_or_insert_with(Vec::new);
        self
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// `S_t`.
    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn regularizer(&self) -> &SymMatrix {
        &self.regularizer
    }

    /// Dense `V_t + Γ`.
    pub fn gram(&self) -> &SymMatrix {
        &self.gram
    }

    /// `V_t`, recovered as `(V_t + Γ) − Γ`.
    pub fn v_t(&self) -> SymMatrix {
        &self.gram - &self.regularizer
    }

    pub fn is_pd(&self) -> bool {
        self.chol.is_some()
    }

    pub fn gram_chol(&self) -> Result<&CholFactor> {
        self.chol.as_ref().ok_or(Error::Singular)
    }

    /// `log det(V_t + Γ)`.
    pub fn gram_logdet(&self) -> Result<f64> {
        Ok(self.gram_chol()?.logdet())
    }

    pub fn replay_log(&self) -> Option<&[Observation]> {
        self.replay.as_deref()
    }

    fn try_factor(&mut self) {
        let scale = (0..self.d)
            .map(|i| self.gram.get(i, i))
            .fold(0.0f64, f64::max);
        let floor = DEFERRED_PIVOT_FLOOR * scale;
        self.chol = crate::linalg::cholesky_with_floor(&self.gram, floor).ok();
        self.since_refresh = 0;
    }

    /// Appends `(x, w)`: `S += w·x`, `V += x·xᵀ`.
    pub fn observe(&mut self, x: &[f64], w: f64) -> Result<()> {
        check_dim(self.d, x.len())?;
        self.t += 1;
        axpy(w, x, &mut self.s);
        self.gram.add_outer(x, 1.0);
        match self.chol.as_mut() {
            Some(chol) if self.since_refresh + 1 < REFRESH_INTERVAL => {
                chol.update_in_place(x);
                self.since_refresh += 1;
            }
            _ => self.try_factor(),
        }
        if let Some(log) = self.replay.as_mut() {
            log.push(Observation { x: x.to_vec(), w });
        }
        Ok(())
    }

    /// Consuming variant of [`MartingaleState::observe`].
    pub fn observed(mut self, x: &[f64], w: f64) -> Result<Self> {
        self.observe(x, w)?;
        Ok(self)
    }

    /// `‖S_t‖²_{(V_t+Γ)⁻¹}`.
    pub fn self_norm_sq(&self) -> Result<f64> {
        Ok(self.gram_chol()?.quad_form_inv(&self.s))
    }

    /// `(V_t+Γ)⁻¹ S_t`.
    pub fn normalized_center(&self) -> Result<Vec<f64>> {
        Ok(self.gram_chol()?.solve(&self.s))
    }

    /// `‖S_t‖²_{(V_t+Γ)⁻¹ M (V_t+Γ)⁻¹}` for PSD `m`.
    pub fn cross_norm_sq(&self, m: &SymMatrix) -> Result<f64> {
        check_dim(self.d, m.dim())?;
        let y = self.normalized_center()?;
        Ok(m.quad_form(&y).max(0.0))
    }

    /// Replays the stored observation log under a new regularizer.
    pub fn rebuild_with_gamma(&self, gamma: SymMatrix) -> Result<Self> {
        let log = self
            .replay
            .as_ref()
            .ok_or_else(|| crate::error::invalid("replay", "state was built without a replay log"))?;
        let mut out = Self::new(self.d, gamma)?.with_replay_log();
        for obs in log {
            out.observe(&obs.x, obs.w)?;
        }
        Ok(out)
    }
}

/// Adapted stopping rule: a predicate on the state through step `t` plus a
/// hard horizon.
pub struct StoppingRule {
    predicate: Box<dyn Fn(&MartingaleState) -> bool + Send + Sync>,
    t_max: u64,
}

impl std::fmt::Debug for StoppingRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StoppingRule").field("t_max", &self.t_max).finish_non_exhaustive()
    }
}

impl StoppingRule {
    pub fn new(t_max: u64, predicate: impl Fn(&MartingaleState) -> bool + Send + Sync + 'static) -> Self {
        Self {
            predicate: Box::new(predicate),
            t_max,
        }
    }

    /// Fixed horizon `T`.
    pub fn horizon(t_max: u64) -> Self {
        Self::new(t_max, |_| false)
    }

    /// Stop once `log det(V_t+Γ) ≥ c` (never fires while the gram is singular).
    pub fn logdet_at_least(c: f64, t_max: u64) -> Self {
        Self::new(t_max, move |s| s.gram_logdet().is_ok_and(|l| l >= c))
    }

    /// Stop once `‖S_t‖²_{(V_t+Γ)⁻¹} ≥ threshold`.
    pub fn self_norm_at_least(threshold: f64, t_max: u64) -> Self {
        Self::new(t_max, move |s| s.self_norm_sq().is_ok_and(|v| v >= threshold))
    }

    pub fn t_max(&self) -> u64 {
        self.t_max
    }

    pub fn should_stop(&self, state: &MartingaleState) -> bool {
        state.t() >= self.t_max || (self.predicate)(state)
    }
}

/// Feeds `source` into a fresh state until the rule fires, `T_max` is hit,
/// or the source runs dry. The rule is checked before each observation, so
/// a rule that holds at `t = 0` consumes nothing.
pub fn run_until<I>(source: I, rule: &StoppingRule, gamma: SymMatrix) -> Result<MartingaleState>
where
    I: IntoIterator<Item = Result<(Vec<f64>, f64)>>,
{
    let d = gamma.dim();
    let mut state = MartingaleState::new(d, gamma)?;
    let mut source = source.into_iter();
    while !rule.should_stop(&state) {
        match source.next() {
            Some(item) => {
                let (x, w) = item?;
                state.observe(&x, w)?;
            }
            None => break,
        }
    }
    Ok(state)
}

/// CSV observation log: header `t,x0,..,x{d-1},w`, 17 significant digits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservationLog {
    pub d: usize,
    pub rows: Vec<Observation>,
}

pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

impl ObservationLog {
    pub fn new(d: usize) -> Self {
        Self { d, rows: Vec::new() }
    }

    pub fn push(&mut self, x: Vec<f64>, w: f64) {
        self.rows.push(Observation { x, w });
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Stream(e.to_string());
        let mut header = vec!["t".to_string()];
        header.extend((0..self.d).map(|i| format!("x{i}")));
        header.push("w".into());
        wtr.write_record(&header).map_err(io)?;
        for (k, obs) in self.rows.iter().enumerate() {
            let mut rec = vec![(k + 1).to_string()];
            rec.extend(obs.x.iter().map(|v| fmt17(*v)));
            rec.push(fmt17(obs.w));
            wtr.write_record(&rec).map_err(io)?;
        }
        wtr.flush().map_err(|e| Error::Stream(e.to_string()))
    }

    /// Reads a log written by [`ObservationLog::write_csv`]. Row numbers in
    /// errors are 1-based data rows.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = rdr.headers().map_err(|e| Error::Stream(e.to_string()))?.clone();
        if headers.len() < 2 || &headers[0] != "t" || &headers[headers.len() - 1] != "w" {
            return Err(Error::Stream("expected header `t,x0,..,w`".into()));
        }
        let d = headers.len() - 2;
        let mut log = Self::new(d);
        for (k, rec) in rdr.records().enumerate() {
            let row = k + 1;
            let rec = rec.map_err(|e| Error::Stream(format!("row {row}: {e}")))?;
            let parse = |i: usize| -> Result<f64> {
                rec[i]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Stream(format!("row {row}: bad number `{}`", &rec[i])))
            };
            let x = (1..=d).map(parse).collect::<Result<Vec<_>>>()?;
            let w = parse(d + 1)?;
            log.push(x, w);
        }
        Ok(log)
    }

    pub fn iter(&self) -> impl Iterator<Item = Result<(Vec<f64>, f64)>> + '_ {
        self.rows.iter().map(|o| Ok((o.x.clone(), o.w)))
    }

    /// Replays the whole log into a fresh state.
    pub fn replay(&self, gamma: SymMatrix) -> Result<MartingaleState> {
        run_until(self.iter(), &StoppingRule::horizon(u64::MAX), gamma)
    }
}

/// Dense-from-scratch log-determinant, used to check the incremental path.
pub fn dense_logdet(m: &SymMatrix) -> Result<f64> {
    Ok(cholesky(m)?.logdet())
}
