//! The data-encoding circuit and the CV QNN layer, both described as
//! ordered stages of gates acting on distinct modes.
//!
//! Encoding (`8m − 2` values):
//! `[sq r (m), sq φ (m), bs θ (m−1), bs φ (m−1), rot (m), disp r (m), disp φ (m), kerr (m)]`,
//! applied as squeezers, interferometer, displacements, Kerr.
//!
//! Layer (`9m − 4` values):
//! `[U₁: bs θ (m−1), bs φ (m−1), rot (m); S r (m); U₂: bs θ, bs φ, rot; D r (m); K κ (m)]`,
//! applied in that order, `U₁` first.
//!
//! Squeezing and displacement magnitudes pass through [`squash`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{Cutoff, Operator, State, C64};
use crate::gates::{Gate, InterferometerParams};
use crate::measurement::{expectation_all_modes, probabilities, Observable};

use super::config::Readout;

/// Bound on learned squeezing and displacement magnitudes.
pub const SQUASH_LIMIT: f64 = 1.5;

pub fn squash(r: f64) -> f64 {
    SQUASH_LIMIT * r.tanh()
}

pub fn encoding_param_count(modes: usize) -> usize {
    (8 * modes).saturating_sub(2)
}

pub fn layer_param_count(modes: usize) -> usize {
    (9 * modes).saturating_sub(4)
}

/// Gates grouped into stages; each entry carries the first mode it acts on.
pub type Stages = Vec<Vec<(usize, Gate)>>;

/// A parameter vector with a fixed stage layout.
pub trait StagedParams {
    fn values(&self) -> &[f64];
    fn modes(&self) -> usize;
    fn stages(&self) -> Stages;
    /// `(stage, gate)` driven by parameter `index`.
    fn locate(&self, index: usize) -> (usize, usize);
    fn with_value(&self, index: usize, value: f64) -> Self;
}

fn check_len(what: &'static str, values: &[f64], expected: usize) -> Result<()> {
    if values.len() != expected {
        return Err(Error::LengthMismatch {
            what,
            expected,
            found: values.len(),
        });
    }
    Ok(())
}

fn interferometer_stage(thetas: &[f64], phis: &[f64], rots: &[f64]) -> Vec<(usize, Gate)> {
    InterferometerParams {
        bs_thetas: thetas.to_vec(),
        bs_phis: phis.to_vec(),
        rot_phis: rots.to_vec(),
    }
    .gates()
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingParams {
    values: Vec<f64>,
    modes: usize,
}

impl EncodingParams {
    pub fn new(values: Vec<f64>, modes: usize) -> Result<Self> {
        if modes < 2 {
            return Err(Error::InvalidConfig(format!(
                "encoding needs at least 2 modes for its beamsplitters, got {modes}"
            )));
        }
        check_len("encoding parameters", &values, encoding_param_count(modes))?;
        Ok(EncodingParams { values, modes })
    }

    pub fn zeros(modes: usize) -> Result<Self> {
        Self::new(vec![0.0; encoding_param_count(modes)], modes)
    }

    fn block(&self, start: usize, len: usize) -> &[f64] {
        &self.values[start..start + len]
    }

    pub fn squeeze_r(&self) -> &[f64] {
        self.block(0, self.modes)
    }

    pub fn squeeze_phi(&self) -> &[f64] {
        self.block(self.modes, self.modes)
    }

    pub fn bs_theta(&self) -> &[f64] {
        self.block(2 * self.modes, self.modes - 1)
    }

    pub fn bs_phi(&self) -> &[f64] {
        self.block(3 * self.modes - 1, self.modes - 1)
    }

    pub fn rot(&self) -> &[f64] {
        self.block(4 * self.modes - 2, self.modes)
    }

    pub fn disp_r(&self) -> &[f64] {
        self.block(5 * self.modes - 2, self.modes)
    }

    pub fn disp_phi(&self) -> &[f64] {
        self.block(6 * self.modes - 2, self.modes)
    }

    pub fn kerr(&self) -> &[f64] {
        self.block(7 * self.modes - 2, self.modes)
    }
}

impl StagedParams for EncodingParams {
    fn values(&self) -> &[f64] {
        &self.values
    }

    fn modes(&self) -> usize {
        self.modes
    }

    fn stages(&self) -> Stages {
        let squeeze = self
            .squeeze_r()
            .iter()
            .zip(self.squeeze_phi())
            .enumerate()
            .map(|(j, (&r, &phi))| (j, Gate::Squeezer { z: C64::from_polar(squash(r), phi) }))
            .collect();
        let displace = self
            .disp_r()
            .iter()
            .zip(self.disp_phi())
            .enumerate()
            .map(|(j, (&r, &phi))| (j, Gate::Displacement { alpha: C64::from_polar(squash(r), phi) }))
            .collect();
        let kerr = self.kerr().iter().enumerate().map(|(j, &kappa)| (j, Gate::Kerr { kappa })).collect();
        vec![
            squeeze,
            interferometer_stage(self.bs_theta(), self.bs_phi(), self.rot()),
            displace,
            kerr,
        ]
    }

    fn locate(&self, index: usize) -> (usize, usize) {
        let m = self.modes;
        match index {
            i if i < 2 * m => (0, i % m),
            i if i < 4 * m - 2 => (1, (i - 2 * m) % (m - 1)),
            i if i < 5 * m - 2 => (1, i - (4 * m - 2) + (m - 1)),
            i if i < 7 * m - 2 => (2, (i - (5 * m - 2)) % m),
            i => (3, i - (7 * m - 2)),
        }
    }

    fn with_value(&self, index: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.values[index] = value;
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QnnLayerParams {
    values: Vec<f64>,
    modes: usize,
}

impl QnnLayerParams {
    pub fn new(values: Vec<f64>, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidConfig("a layer needs at least one mode".into()));
        }
        check_len("layer parameters", &values, layer_param_count(modes))?;
        Ok(QnnLayerParams { values, modes })
    }

    pub fn zeros(modes: usize) -> Result<Self> {
        Self::new(vec![0.0; layer_param_count(modes)], modes)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn interferometer(&self, start: usize) -> InterferometerParams {
        let p = self.modes - 1;
        InterferometerParams {
            bs_thetas: self.values[start..start + p].to_vec(),
            bs_phis: self.values[start + p..start + 2 * p].to_vec(),
            rot_phis: self.values[start + 2 * p..start + 2 * p + self.modes].to_vec(),
        }
    }

    pub fn u1(&self) -> InterferometerParams {
        self.interferometer(0)
    }

    pub fn squeeze_r(&self) -> &[f64] {
        let m = self.modes;
        &self.values[3 * m - 2..4 * m - 2]
    }

    pub fn u2(&self) -> InterferometerParams {
        self.interferometer(4 * self.modes - 2)
    }

    pub fn disp_r(&self) -> &[f64] {
        let m = self.modes;
        &self.values[7 * m - 4..8 * m - 4]
    }

    pub fn kerr(&self) -> &[f64] {
        let m = self.modes;
        &self.values[8 * m - 4..9 * m - 4]
    }

    /// Which entries are phases (`true`) rather than magnitudes.
    pub fn phase_mask(modes: usize) -> Vec<bool> {
        let u = 3 * modes - 2;
        let mut mask = vec![true; u];
        mask.extend(std::iter::repeat_n(false, modes));
        mask.extend(std::iter::repeat_n(true, u));
        mask.extend(std::iter::repeat_n(false, 2 * modes));
        mask
    }
}

impl StagedParams for QnnLayerParams {
    fn values(&self) -> &[f64] {
        &self.values
    }

    fn modes(&self) -> usize {
        self.modes
    }

    fn stages(&self) -> Stages {
        let u1 = self.u1().gates().collect();
        let u2 = self.u2().gates().collect();
        let squeeze = self
            .squeeze_r()
            .iter()
            .enumerate()
            .map(|(j, &r)| (j, Gate::Squeezer { z: C64::new(squash(r), 0.0) }))
            .collect();
        let displace = self
            .disp_r()
            .iter()
            .enumerate()
            .map(|(j, &r)| (j, Gate::Displacement { alpha: C64::new(squash(r), 0.0) }))
            .collect();
        let kerr = self.kerr().iter().enumerate().map(|(j, &kappa)| (j, Gate::Kerr { kappa })).collect();
        vec![u1, squeeze, u2, displace, kerr]
    }

    fn locate(&self, index: usize) -> (usize, usize) {
        let m = self.modes;
        let u = 3 * m - 2;
        let in_interferometer = |i: usize| {
            if i < 2 * (m - 1) {
                i % (m - 1)
            } else {
                i - 2 * (m - 1) + (m - 1)
            }
        };
        match index {
            i if i < u => (0, in_interferometer(i)),
            i if i < u + m => (1, i - u),
            i if i < 2 * u + m => (2, in_interferometer(i - u - m)),
            i if i < 2 * u + 2 * m => (3, i - 2 * u - m),
            i => (4, i - 2 * u - 2 * m),
        }
    }

    fn with_value(&self, index: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.values[index] = value;
        out
    }
}

/// Stages with every gate matrix built.
#[derive(Clone, Debug)]
pub struct CompiledCircuit {
    stages: Vec<Vec<(usize, Operator)>>,
}

impl CompiledCircuit {
    pub fn compile<P: StagedParams>(params: &P, cutoff: Cutoff) -> Result<Self> {
        let stages = params
            .stages()
            .into_iter()
            .map(|stage| {
                stage
                    .into_iter()
                    .map(|(first, gate)| Ok((first, gate.matrix(cutoff)?)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CompiledCircuit { stages })
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn run(&self, state: &mut State) -> Result<()> {
        self.run_from(state, 0, None)
    }

    /// Runs stages `from..`, substituting `replacement = (stage, gate, op)`
    /// for one gate if given.
    pub fn run_from(&self, state: &mut State, from: usize, replacement: Option<(usize, usize, &Operator)>) -> Result<()> {
        for (s, stage) in self.stages.iter().enumerate().skip(from) {
            for (g, (first, op)) in stage.iter().enumerate() {
                let op = match replacement {
                    Some((rs, rg, alt)) if rs == s && rg == g => alt,
                    _ => op,
                };
                op.apply_on_mut(state, *first)?;
            }
        }
        Ok(())
    }

    /// Runs every stage and returns the state entering each stage followed
    /// by the final state.
    pub fn run_recording(&self, start: State) -> Result<Vec<State>> {
        let mut trace = Vec::with_capacity(self.stages.len() + 1);
        let mut state = start;
        for s in 0..self.stages.len() {
            trace.push(state.clone());
            for (first, op) in &self.stages[s] {
                op.apply_on_mut(&mut state, *first)?;
            }
        }
        trace.push(state);
        Ok(trace)
    }
}

/// Builds the single gate that parameter `index` drives, after setting it to
/// `value`.
pub fn perturbed_gate<P: StagedParams>(params: &P, index: usize, value: f64, cutoff: Cutoff) -> Result<(usize, usize, Operator)> {
    let (s, g) = params.locate(index);
    let (_, gate) = params.with_value(index, value).stages()[s][g];
    Ok((s, g, gate.matrix(cutoff)?))
}

/// Kerr ∘ displacement ∘ interferometer ∘ squeezers on the vacuum.
pub fn encode(features: &EncodingParams, cutoff: Cutoff) -> Result<State> {
    let mut state = State::vacuum(features.modes(), cutoff)?;
    CompiledCircuit::compile(features, cutoff)?.run(&mut state)?;
    Ok(state)
}

/// `Φ ∘ D ∘ U₂ ∘ S ∘ U₁` applied to `state`.
pub fn qnn_layer(params: &QnnLayerParams, state: &State) -> Result<State> {
    if params.modes() != state.modes() {
        return Err(Error::DimensionMismatch {
            expected: state.modes(),
            found: params.modes(),
        });
    }
    let mut out = state.clone();
    CompiledCircuit::compile(params, state.cutoff())?.run(&mut out)?;
    Ok(out)
}

pub fn readout(state: &State, kind: Readout) -> Result<Vec<f64>> {
    match kind {
        Readout::Probability => Ok(probabilities(state)),
        Readout::ExpectationX => expectation_all_modes(state, &Observable::pauli_x(state.cutoff())?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cut(n: usize) -> Cutoff {
        Cutoff::new(n).unwrap()
    }

    fn ramp(len: usize) -> Vec<f64> {
        (0..len).map(|i| 0.1 + 0.05 * i as f64).collect()
    }

    #[test]
    fn counts() {
        let table: Vec<usize> = [2, 3, 4, 5, 6, 8].iter().map(|&m| layer_param_count(m)).collect();
        assert_eq!(table, vec![14, 23, 32, 41, 50, 68]);
        assert_eq!(encoding_param_count(2), 14);
        assert_eq!(encoding_param_count(8), 62);
    }

    #[test]
    fn encode_trivial_cases() {
        let n = cut(3);
        let vac = State::vacuum(2, n).unwrap();
        assert_eq!(encode(&EncodingParams::zeros(2).unwrap(), n).unwrap(), vac);
        let mut v = vec![0.0; 14];
        v[12] = 0.8;
        v[13] = -1.7;
        let out = encode(&EncodingParams::new(v, 2).unwrap(), n).unwrap();
        assert_eq!(out, vac);
        assert!(EncodingParams::zeros(1).is_err());
        assert!(EncodingParams::new(vec![0.0; 13], 2).is_err());
    }

    #[test]
    fn layer_identity_at_zero() {
        let n = cut(3);
        let amps = (0..9).map(|k| C64::new(k as f64, 1.0)).collect();
        let psi = State::from_amplitudes(amps, 2, n).unwrap().normalized();
        let out = qnn_layer(&QnnLayerParams::zeros(2).unwrap(), &psi).unwrap();
        assert_eq!(out, psi);
        assert!(QnnLayerParams::new(vec![0.0; 13], 2).is_err());
        assert_eq!(QnnLayerParams::zeros(8).unwrap().values().len(), 68);
    }

    #[test]
    fn layer_accessors_follow_layout() {
        let p = QnnLayerParams::new(ramp(14), 2).unwrap();
        let v = ramp(14);
        assert_eq!(p.u1().bs_thetas, vec![v[0]]);
        assert_eq!(p.u1().bs_phis, vec![v[1]]);
        assert_eq!(p.u1().rot_phis, v[2..4].to_vec());
        assert_eq!(p.squeeze_r(), &v[4..6]);
        assert_eq!(p.u2().bs_thetas, vec![v[6]]);
        assert_eq!(p.u2().rot_phis, v[8..10].to_vec());
        assert_eq!(p.disp_r(), &v[10..12]);
        assert_eq!(p.kerr(), &v[12..14]);
        assert_eq!(QnnLayerParams::phase_mask(2).len(), 14);
    }

    #[test]
    fn layer_matches_explicit_composition() {
        use crate::gates::{displacement, interferometer, kerr, squeezer};
        let n = cut(3);
        let p = QnnLayerParams::new(ramp(14), 2).unwrap();
        let psi = encode(&EncodingParams::new(ramp(14), 2).unwrap(), n).unwrap();
        let single = |f: &dyn Fn(usize) -> Operator| f(0).kron(&f(1)).unwrap();
        let s = single(&|j| squeezer(C64::new(squash(p.squeeze_r()[j]), 0.0), n).unwrap());
        let d = single(&|j| displacement(C64::new(squash(p.disp_r()[j]), 0.0), n).unwrap());
        let k = single(&|j| kerr(p.kerr()[j], n).unwrap());
        let u1 = interferometer(&p.u1(), 2, n).unwrap();
        let u2 = interferometer(&p.u2(), 2, n).unwrap();
        let total = k.matmul(&d).unwrap().matmul(&u2).unwrap().matmul(&s).unwrap().matmul(&u1).unwrap();
        let expected = total.apply(&psi).unwrap();
        let got = qnn_layer(&p, &psi).unwrap();
        let diff = (got.amplitudes() - expected.amplitudes()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn locate_covers_every_gate() {
        for m in 2..5 {
            let e = EncodingParams::new(ramp(encoding_param_count(m)), m).unwrap();
            let stages = e.stages();
            for i in 0..encoding_param_count(m) {
                let (s, g) = e.locate(i);
                assert!(g < stages[s].len(), "m={m} i={i}");
                // Moving the parameter must change the located gate.
                let moved = e.with_value(i, e.values()[i] + 0.3).stages();
                assert_ne!(moved[s][g].1, stages[s][g].1, "m={m} i={i}");
            }
            let l = QnnLayerParams::new(ramp(layer_param_count(m)), m).unwrap();
            let stages = l.stages();
            for i in 0..layer_param_count(m) {
                let (s, g) = l.locate(i);
                let moved = l.with_value(i, l.values()[i] + 0.3).stages();
                assert_ne!(moved[s][g].1, stages[s][g].1, "m={m} i={i}");
            }
        }
    }

    #[test]
    fn partial_rerun_matches_full_run() {
        let n = cut(3);
        let e = EncodingParams::new(ramp(14), 2).unwrap();
        let compiled = CompiledCircuit::compile(&e, n).unwrap();
        let trace = compiled.run_recording(State::vacuum(2, n).unwrap()).unwrap();
        for i in 0..14 {
            let value = e.values()[i] + 0.01;
            let (s, g, op) = perturbed_gate(&e, i, value, n).unwrap();
            let mut fast = trace[s].clone();
            compiled.run_from(&mut fast, s, Some((s, g, &op))).unwrap();
            let slow = encode(&e.with_value(i, value), n).unwrap();
            assert_eq!(fast, slow, "i={i}");
        }
    }

    #[test]
    fn readout_shapes() {
        let s = State::vacuum(3, cut(3)).unwrap();
        assert_eq!(readout(&s, Readout::Probability).unwrap().len(), 27);
        let s = State::vacuum(8, cut(2)).unwrap();
        assert_eq!(readout(&s, Readout::ExpectationX).unwrap().len(), 8);
    }

    #[test]
    fn squash_bounds() {
        assert_eq!(squash(0.0), 0.0);
        assert!(squash(1e6) <= SQUASH_LIMIT);
        assert!(squash(-1e6) >= -SQUASH_LIMIT);
    }
}
