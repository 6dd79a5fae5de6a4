use std::collections::BTreeMap;
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, Dual, Real, Tape, Var};
use crate::linalg::Matrix;
use crate::{Error, Result};

/// Version written into every serialized network.
pub const SCHEMA_VERSION: u32 = 1;

/// Fully connected feed-forward network with a linear output layer.
///
/// Layer `k` maps `layer_dims[k]` inputs to `layer_dims[k + 1]` outputs with
/// a row-major `out × in` weight matrix. The flat parameter vector lists, per
/// layer, the weights row by row followed by the biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layer_dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    activation: Activation,
    seed: Option<u64>,
    metadata: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct NetworkDocument {
    schema_version: u32,
    layer_dims: Vec<usize>,
    activation: Activation,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    seed: Option<u64>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::Config("a network needs at least input and output dims".into()));
    }
    if layer_dims.contains(&0) {
        return Err(Error::Config("layer dimensions must be positive".into()));
    }
    Ok(())
}

impl Network {
    /// All weights and biases zero.
    pub fn zeros(layer_dims: &[usize], activation: Activation) -> Result<Self> {
        validate_dims(layer_dims)?;
        let weights = layer_dims
            .windows(2)
            .map(|w| vec![0.0; w[0] * w[1]])
            .collect();
        let biases = layer_dims[1..].iter().map(|&n| vec![0.0; n]).collect();
        Ok(Network {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
            activation,
            seed: None,
            metadata: BTreeMap::new(),
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot_uniform(layer_dims: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        let mut net = Network::zeros(layer_dims, activation)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (k, w) in net.weights.iter_mut().enumerate() {
            let (fan_in, fan_out) = (layer_dims[k], layer_dims[k + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit);
            for x in w.iter_mut() {
                *x = dist.sample(&mut rng);
            }
        }
        net.seed = Some(seed);
        Ok(net)
    }

    pub fn from_parts(
        layer_dims: &[usize],
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
        activation: Activation,
    ) -> Result<Self> {
        validate_dims(layer_dims)?;
        let layers = layer_dims.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::Config(format!(
                "expected {layers} weight and bias arrays, got {} and {}",
                weights.len(),
                biases.len()
            )));
        }
        for k in 0..layers {
            let (n_in, n_out) = (layer_dims[k], layer_dims[k + 1]);
            if weights[k].len() != n_in * n_out || biases[k].len() != n_out {
                return Err(Error::Config(format!(
                    "layer {k}: weights must be {n_out}x{n_in} and biases {n_out} long"
                )));
            }
        }
        Ok(Network {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
            activation,
            seed: None,
            metadata: BTreeMap::new(),
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.weights[layer]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.biases[layer]
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn set_metadata(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.insert(key.into(), value.into());
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::InputShape {
                expected: self.parameter_count(),
                got: params.len(),
            });
        }
        let mut rest = params;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let (head, tail) = rest.split_at(w.len());
            w.copy_from_slice(head);
            let (head, tail) = tail.split_at(b.len());
            b.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    /// Returns a copy with the given flat parameters.
    pub fn with_parameters(&self, params: &[f64]) -> Result<Self> {
        let mut net = self.clone();
        net.set_parameters(params)?;
        Ok(net)
    }

    /// Multiplies column `j` of the first weight matrix by `scales[j]`.
    ///
    /// Applied right after initialization this maps inputs of very different
    /// ranges (times, angles, accelerations) to comparable pre-activations.
    pub fn scale_input_columns(&mut self, scales: &[f64]) -> Result<()> {
        let n_in = self.n_inputs();
        if scales.len() != n_in {
            return Err(Error::InputShape {
                expected: n_in,
                got: scales.len(),
            });
        }
        for row in self.weights[0].chunks_mut(n_in) {
            for (w, s) in row.iter_mut().zip(scales) {
                *w *= s;
            }
        }
        Ok(())
    }

    /// Multiplies the output layer (weights and biases) by `scale`.
    pub fn scale_output(&mut self, scale: f64) {
        let last = self.weights.len() - 1;
        self.weights[last].iter_mut().for_each(|w| *w *= scale);
        self.biases[last].iter_mut().for_each(|b| *b *= scale);
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.n_inputs() {
            return Err(Error::InputShape {
                expected: self.n_inputs(),
                got: len,
            });
        }
        Ok(())
    }

    /// Network output for a plain input vector.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.forward_generic(input)
    }

    /// Forward pass with fixed `f64` weights and inputs of any [`Real`] type.
    pub fn forward_generic<S: Real>(&self, input: &[S]) -> Result<Vec<S>> {
        self.check_input(input.len())?;
        let last = self.n_layers() - 1;
        let mut h: Vec<S> = input.to_vec();
        for (k, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let cols = self.layer_dims[k];
            let z = w
                .chunks(cols)
                .zip(b)
                .map(|(row, &bias)| {
                    let mut acc = h[0] * row[0] + bias;
                    for j in 1..cols {
                        acc = acc + h[j] * row[j];
                    }
                    if k < last {
                        acc.activation(self.activation, 0)
                    } else {
                        acc
                    }
                })
                .collect();
            h = z;
        }
        Ok(h)
    }

    /// Forward pass where the weights are supplied as a flat vector of
    /// [`Real`] values (e.g. duals seeded along one parameter direction).
    pub fn forward_with_params<S: Real>(&self, params: &[S], input: &[S]) -> Result<Vec<S>> {
        self.check_input(input.len())?;
        if params.len() != self.parameter_count() {
            return Err(Error::InputShape {
                expected: self.parameter_count(),
                got: params.len(),
            });
        }
        let last = self.n_layers() - 1;
        let mut h: Vec<S> = input.to_vec();
        let mut offset = 0;
        for k in 0..self.n_layers() {
            let (cols, rows) = (self.layer_dims[k], self.layer_dims[k + 1]);
            let w = &params[offset..offset + rows * cols];
            let b = &params[offset + rows * cols..offset + rows * cols + rows];
            offset += rows * cols + rows;
            h = w
                .chunks(cols)
                .zip(b)
                .map(|(row, &bias)| {
                    let mut acc = bias;
                    for (x, wj) in h.iter().zip(row) {
                        acc = acc + *x * *wj;
                    }
                    if k < last {
                        acc.activation(self.activation, 0)
                    } else {
                        acc
                    }
                })
                .collect();
        }
        Ok(h)
    }

    /// Output and its directional derivative along input coordinate `direction`.
    pub fn forward_tangent(&self, input: &[f64], direction: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_input(input.len())?;
        if direction >= input.len() {
            return Err(Error::Usage(format!(
                "tangent direction {direction} out of range for {} inputs",
                input.len()
            )));
        }
        let seeded: Vec<Dual> = input
            .iter()
            .enumerate()
            .map(|(j, &x)| Dual::new(x, if j == direction { 1.0 } else { 0.0 }))
            .collect();
        let out = self.forward_generic(&seeded)?;
        Ok((
            out.iter().map(|d| d.value).collect(),
            out.iter().map(|d| d.derivative).collect(),
        ))
    }

    /// `n_out × n_in` Jacobian of the output with respect to the input, one
    /// forward-mode sweep per input coordinate.
    pub fn input_jacobian(&self, input: &[f64]) -> Result<Matrix> {
        self.check_input(input.len())?;
        let mut jac = Matrix::zeros(self.n_outputs(), self.n_inputs());
        for j in 0..self.n_inputs() {
            let (_, col) = self.forward_tangent(input, j)?;
            for (i, v) in col.into_iter().enumerate() {
                jac[(i, j)] = v;
            }
        }
        Ok(jac)
    }

    /// Records every parameter as an independent variable on `tape`.
    pub fn parameter_vars<'t>(&self, tape: &'t Tape) -> Vec<Var<'t>> {
        let mut vars = Vec::with_capacity(self.parameter_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            vars.extend(w.iter().chain(b).map(|&p| tape.var(p)));
        }
        vars
    }

    /// Forward pass recorded on `tape` with the given parameter variables.
    ///
    /// With `tangent = Some(j)` the directional derivative along input `j` is
    /// recorded as well (forward-over-reverse), which is what the physics
    /// loss needs to differentiate `d/dt φ̂` with respect to the weights.
    pub fn forward_on_tape<'t>(
        &self,
        tape: &'t Tape,
        params: &[Var<'t>],
        input: &[f64],
        tangent: Option<usize>,
    ) -> Result<(Vec<Var<'t>>, Option<Vec<Var<'t>>>)> {
        self.check_input(input.len())?;
        if params.len() != self.parameter_count() {
            return Err(Error::InputShape {
                expected: self.parameter_count(),
                got: params.len(),
            });
        }
        let last = self.n_layers() - 1;
        let mut h: Vec<Var<'t>> = input.iter().map(|&x| Var::constant(x)).collect();
        let mut hdot: Option<Vec<Var<'t>>> = tangent.map(|dir| {
            (0..input.len())
                .map(|j| Var::constant(if j == dir { 1.0 } else { 0.0 }))
                .collect()
        });
        let mut offset = 0;
        for k in 0..self.n_layers() {
            let (cols, rows) = (self.layer_dims[k], self.layer_dims[k + 1]);
            let w = &params[offset..offset + rows * cols];
            let b = &params[offset + rows * cols..offset + rows * cols + rows];
            offset += rows * cols + rows;
            let mut z = Vec::with_capacity(rows);
            let mut zdot = Vec::with_capacity(rows);
            for (i, row) in w.chunks(cols).enumerate() {
                let zi = tape.affine(b[i], row, &h);
                let zdi = hdot.as_ref().map(|hd| {
                    if k == 0 {
                        // Constant unit tangent: the derivative is one weight.
                        match tangent {
                            Some(dir) => row[dir],
                            None => unreachable!(),
                        }
                    } else {
                        tape.dot(row, hd)
                    }
                });
                if k < last {
                    let a = zi.activation(self.activation, 0);
                    if let Some(zd) = zdi {
                        zdot.push(zi.activation(self.activation, 1) * zd);
                    }
                    z.push(a);
                } else {
                    z.push(zi);
                    if let Some(zd) = zdi {
                        zdot.push(zd);
                    }
                }
            }
            h = z;
            if hdot.is_some() {
                hdot = Some(zdot);
            }
        }
        Ok((h, hdot))
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = NetworkDocument {
            schema_version: SCHEMA_VERSION,
            layer_dims: self.layer_dims.clone(),
            activation: self.activation,
            weights: self.weights.clone(),
            biases: self.biases.clone(),
            seed: self.seed,
            metadata: self.metadata.clone(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetworkDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "unsupported network schema version {}",
                doc.schema_version
            )));
        }
        let mut net = Network::from_parts(&doc.layer_dims, doc.weights, doc.biases, doc.activation)?;
        net.seed = doc.seed;
        net.metadata = doc.metadata;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Network::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent forward pass written with nested loops over explicit
    /// matrix indices.
    fn reference_forward(net: &Network, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        let layers = net.n_layers();
        for k in 0..layers {
            let n_in = net.layer_dims()[k];
            let n_out = net.layer_dims()[k + 1];
            let mut next = vec![0.0; n_out];
            for i in 0..n_out {
                let mut s = 0.0;
                for j in 0..n_in {
                    s += net.weights(k)[i * n_in + j] * h[j];
                }
                s += net.biases(k)[i];
                next[i] = if k + 1 < layers { s.tanh() } else { s };
            }
            h = next;
        }
        h
    }

    #[test]
    fn zero_network_maps_to_zero() {
        let net = Network::zeros(&[3, 5, 2], Activation::Tanh).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 7.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_linear_layer_identity() {
        let net = Network::from_parts(&[1, 1], vec![vec![1.0]], vec![vec![0.0]], Activation::Tanh)
            .unwrap();
        assert_eq!(net.forward(&[3.0]).unwrap(), vec![3.0]);
    }

    #[test]
    fn seeded_tanh_net_matches_reference() {
        let net = Network::glorot_uniform(&[1, 4, 4, 1], Activation::Tanh, 11).unwrap();
        let mut net = net;
        let params: Vec<f64> = (0..net.parameter_count()).map(|i| ((i * 7) % 5) as f64 * 0.1 - 0.2).collect();
        let mixed: Vec<f64> = net.parameters().iter().zip(&params).map(|(a, b)| a + b).collect();
        net.set_parameters(&mixed).unwrap();
        let ours = net.forward(&[0.5]).unwrap();
        let reference = reference_forward(&net, &[0.5]);
        assert!((ours[0] - reference[0]).abs() <= 1e-15);
    }

    #[test]
    fn shape_errors() {
        let net = Network::zeros(&[2, 3, 1], Activation::Tanh).unwrap();
        assert!(matches!(
            net.forward(&[1.0]),
            Err(Error::InputShape { expected: 2, got: 1 })
        ));
        assert!(Network::zeros(&[2], Activation::Tanh).is_err());
        assert!(Network::zeros(&[2, 0, 1], Activation::Tanh).is_err());
        assert!(Network::from_parts(&[2, 1], vec![vec![1.0]], vec![vec![0.0]], Activation::Tanh).is_err());
    }

    #[test]
    fn affine_jacobian_is_weight_matrix() {
        let w = vec![1.0, -2.0, 0.5, 3.0, 0.25, -1.5];
        let net = Network::from_parts(&[3, 2], vec![w.clone()], vec![vec![0.3, -0.7]], Activation::Gelu)
            .unwrap();
        let jac = net.input_jacobian(&[0.1, 0.2, 0.3]).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(jac[(i, j)], w[i * 3 + j]);
            }
        }
    }

    #[test]
    fn scalar_tanh_derivative_at_origin() {
        let net = Network::from_parts(&[1, 1, 1], vec![vec![1.0], vec![1.0]], vec![vec![0.0], vec![0.0]], Activation::Tanh)
            .unwrap();
        let jac = net.input_jacobian(&[0.0]).unwrap();
        assert_eq!(jac[(0, 0)], 1.0);
    }

    #[test]
    fn glorot_is_deterministic_and_bounded() {
        let a = Network::glorot_uniform(&[6, 32, 4], Activation::Tanh, 5).unwrap();
        let b = Network::glorot_uniform(&[6, 32, 4], Activation::Tanh, 5).unwrap();
        let c = Network::glorot_uniform(&[6, 32, 4], Activation::Tanh, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.parameters(), c.parameters());
        let limit = (6.0f64 / 38.0).sqrt();
        assert!(a.weights(0).iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn parameters_round_trip() {
        let net = Network::glorot_uniform(&[2, 3, 2], Activation::Silu, 1).unwrap();
        let p = net.parameters();
        assert_eq!(p.len(), 2 * 3 + 3 + 3 * 2 + 2);
        assert_eq!(net.with_parameters(&p).unwrap(), net);
        assert!(net.with_parameters(&p[1..]).is_err());
    }

    #[test]
    fn tape_forward_matches_plain_forward() {
        let net = Network::glorot_uniform(&[3, 5, 5, 2], Activation::Sigmoid, 3).unwrap();
        let x = [0.2, -0.4, 0.9];
        let tape = Tape::new();
        let p = net.parameter_vars(&tape);
        let (y, ydot) = net.forward_on_tape(&tape, &p, &x, Some(0)).unwrap();
        let (v, d) = net.forward_tangent(&x, 0).unwrap();
        for i in 0..2 {
            assert!((y[i].val() - v[i]).abs() < 1e-15);
            assert!((ydot.as_ref().unwrap()[i].val() - d[i]).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn serialization_is_bit_exact(seed in 0u64..1000, act in prop::sample::select(vec![
            Activation::Tanh, Activation::Gelu, Activation::Silu, Activation::Sigmoid,
        ])) {
            let mut net = Network::glorot_uniform(&[2, 4, 3], act, seed).unwrap();
            net.set_metadata("epochs", "12");
            let back = Network::from_json(&net.to_json().unwrap()).unwrap();
            let bits = |n: &Network| n.parameters().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&net), bits(&back));
            prop_assert_eq!(net, back);
        }

        #[test]
        fn evaluation_is_deterministic(x in -3.0..3.0f64, y in -3.0..3.0f64) {
            let net = Network::glorot_uniform(&[2, 8, 1], Activation::Gelu, 9).unwrap();
            let a = net.forward(&[x, y]).unwrap();
            let b = net.forward(&[x, y]).unwrap();
            prop_assert_eq!(a[0].to_bits(), b[0].to_bits());
        }
    }
}
