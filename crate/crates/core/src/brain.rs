//! Recurrent summing-and-squashing networks with Hebbian synapses.

use rand::Rng;

use crate::error::BrainError;
use crate::genome::{gene, GeneValues, INPUT_GROUPS, OUTPUT_NAMES};
use crate::rng::RandomStream;

/// Behaviours with a designated output neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Behavior {
    Move = 0,
    Turn = 1,
    Eat = 2,
    Mate = 3,
    Attack = 4,
}

impl Behavior {
    pub const ALL: [Behavior; 5] = [
        Behavior::Move,
        Behavior::Turn,
        Behavior::Eat,
        Behavior::Mate,
        Behavior::Attack,
    ];
}

pub const OUTPUT_COUNT: usize = OUTPUT_NAMES.len();

const RED: usize = 0;
const GREEN: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupSpec {
    pub excitatory: usize,
    pub inhibitory: usize,
}

impl GroupSpec {
    pub fn size(&self) -> usize {
        self.excitatory + self.inhibitory
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Projection {
    pub density: f64,
    pub distortion: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralArchitecture {
    /// Sizes of the sensory groups (red, green, blue, energy).
    pub input_sizes: Vec<usize>,
    pub groups: Vec<GroupSpec>,
    /// `projections[source][target]`; sources are the input groups followed
    /// by the processing groups, targets are processing groups.
    pub projections: Vec<Vec<Projection>>,
    pub group_bias: Vec<f64>,
    pub output_bias: [f64; OUTPUT_COUNT],
    pub max_weight: f64,
    pub reflex_green_move: f64,
    pub reflex_red_turn: f64,
}

impl NeuralArchitecture {
    /// Reads the architecture genes of the standard map.
    pub fn from_genes(values: &GeneValues, input_sizes: &[usize]) -> Self {
        assert_eq!(input_sizes.len(), INPUT_GROUPS);
        let n_groups = values.count(gene::GROUP_COUNT).max(1);
        let groups: Vec<GroupSpec> = (0..n_groups)
            .map(|g| GroupSpec {
                excitatory: values.count(&gene::excitatory(g)),
                inhibitory: values.count(&gene::inhibitory(g)),
            })
            .collect();
        let projections = (0..INPUT_GROUPS + n_groups)
            .map(|source| {
                let s = gene::source_name(source, INPUT_GROUPS);
                (0..n_groups)
                    .map(|t| Projection {
                        density: values.value(&gene::density(&s, t)),
                        distortion: values.value(&gene::distortion(&s, t)),
                        learning_rate: values.value(&gene::learning(&s, t)),
                    })
                    .collect()
            })
            .collect();
        let mut output_bias = [0.0; OUTPUT_COUNT];
        for (b, name) in output_bias.iter_mut().zip(OUTPUT_NAMES) {
            *b = values.value(&gene::output_bias(name));
        }
        NeuralArchitecture {
            input_sizes: input_sizes.to_vec(),
            groups,
            projections,
            group_bias: (0..n_groups).map(|g| values.value(&gene::group_bias(g))).collect(),
            output_bias,
            max_weight: values.value(gene::MAX_WEIGHT),
            reflex_green_move: values.value(gene::REFLEX_GREEN_MOVE),
            reflex_red_turn: values.value(gene::REFLEX_RED_TURN),
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.input_sizes.iter().sum()
    }

    pub fn n_processing(&self) -> usize {
        self.groups.iter().map(GroupSpec::size).sum()
    }

    pub fn n_neurons(&self) -> usize {
        self.n_inputs() + self.n_processing()
    }

    fn validate(&self) -> Result<(), BrainError> {
        if self.n_processing() == 0 {
            return Err(BrainError::NoProcessingNeurons);
        }
        let last = self.groups.last().expect("non-empty");
        if last.excitatory < OUTPUT_COUNT {
            return Err(BrainError::TooFewOutputs(last.excitatory, OUTPUT_COUNT));
        }
        Ok(())
    }

    /// Global neuron index ranges of every source group (inputs first).
    fn source_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        let sizes = self
            .input_sizes
            .iter()
            .copied()
            .chain(self.groups.iter().map(GroupSpec::size));
        sizes
            .map(|n| {
                let r = start..start + n;
                start += n;
                r
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Input,
    Processing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synapse {
    pub pre: usize,
    pub post: usize,
    pub weight: f64,
    pub learning_rate: f64,
}

#[inline]
pub fn logistic(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Brain {
    roles: Vec<Role>,
    excitatory: Vec<bool>,
    n_inputs: usize,
    outputs: [usize; OUTPUT_COUNT],
    bias: Vec<f64>,
    max_weight: f64,
    // Synapses sorted by post neuron; `post_start[k]..post_start[k+1]` are
    // the incoming synapses of processing neuron `n_inputs + k`.
    pre: Vec<u32>,
    weight: Vec<f64>,
    eta: Vec<f64>,
    post_start: Vec<usize>,
    activation: Vec<f64>,
    next: Vec<f64>,
}

impl Brain {
    /// Lays out neurons for `arch` and installs the given synapses.
    ///
    /// Weights are clamped to the sign of their pre-neuron and to `max_weight`.
    pub fn with_synapses(arch: &NeuralArchitecture, mut synapses: Vec<Synapse>) -> Result<Brain, BrainError> {
        arch.validate()?;
        let n_inputs = arch.n_inputs();
        let n = arch.n_neurons();
        let mut roles = vec![Role::Input; n_inputs];
        let mut excitatory = vec![true; n_inputs];
        let mut bias = vec![0.0; n_inputs];
        for (g, spec) in arch.groups.iter().enumerate() {
            roles.extend(std::iter::repeat_n(Role::Processing, spec.size()));
            excitatory.extend(std::iter::repeat_n(true, spec.excitatory));
            excitatory.extend(std::iter::repeat_n(false, spec.inhibitory));
            bias.extend(std::iter::repeat_n(arch.group_bias[g], spec.size()));
        }
        let last_start = n - arch.groups.last().expect("validated").size();
        let mut outputs = [0; OUTPUT_COUNT];
        for (k, out) in outputs.iter_mut().enumerate() {
            *out = last_start + k;
            bias[*out] = arch.output_bias[k];
        }

        synapses.sort_by_key(|s| s.post);
        let mut post_start = Vec::with_capacity(n - n_inputs + 1);
        let mut pre = Vec::with_capacity(synapses.len());
        let mut weight = Vec::with_capacity(synapses.len());
        let mut eta = Vec::with_capacity(synapses.len());
        let mut cursor = 0;
        for post in n_inputs..n {
            post_start.push(pre.len());
            while cursor < synapses.len() && synapses[cursor].post == post {
                let s = synapses[cursor];
                assert!(s.pre < n, "synapse pre-neuron {} out of range", s.pre);
                pre.push(s.pre as u32);
                weight.push(clamp_weight(s.weight, excitatory[s.pre], arch.max_weight));
                eta.push(s.learning_rate.max(0.0));
                cursor += 1;
            }
        }
        post_start.push(pre.len());
        assert_eq!(cursor, synapses.len(), "synapse targets an input neuron");

        let mut activation = vec![0.0; n];
        activation[n_inputs..].fill(0.5);
        Ok(Brain {
            roles,
            excitatory,
            n_inputs,
            outputs,
            bias,
            max_weight: arch.max_weight,
            pre,
            weight,
            eta,
            post_start,
            next: activation.clone(),
            activation,
        })
    }

    pub fn n_neurons(&self) -> usize {
        self.roles.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_processing(&self) -> usize {
        self.roles.len() - self.n_inputs
    }

    pub fn n_synapses(&self) -> usize {
        self.pre.len()
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn is_excitatory(&self, neuron: usize) -> bool {
        self.excitatory[neuron]
    }

    pub fn max_weight(&self) -> f64 {
        self.max_weight
    }

    pub fn activations(&self) -> &[f64] {
        &self.activation
    }

    pub fn output_index(&self, b: Behavior) -> usize {
        self.outputs[b as usize]
    }

    pub fn output(&self, b: Behavior) -> f64 {
        self.activation[self.outputs[b as usize]]
    }

    pub fn synapses(&self) -> impl Iterator<Item = Synapse> + '_ {
        (0..self.n_processing()).flat_map(move |k| {
            (self.post_start[k]..self.post_start[k + 1]).map(move |i| Synapse {
                pre: self.pre[i] as usize,
                post: self.n_inputs + k,
                weight: self.weight[i],
                learning_rate: self.eta[i],
            })
        })
    }

    /// One synchronous update: inputs are set, then every processing neuron
    /// is recomputed from the activations held before this call.
    pub fn step(&mut self, inputs: &[f64]) -> Result<&[f64], BrainError> {
        let order = 0..self.n_processing();
        self.step_in_order(inputs, order)
    }

    fn step_in_order(&mut self, inputs: &[f64], order: impl Iterator<Item = usize>) -> Result<&[f64], BrainError> {
        if inputs.len() != self.n_inputs {
            return Err(BrainError::InputLength {
                expected: self.n_inputs,
                got: inputs.len(),
            });
        }
        self.activation[..self.n_inputs].copy_from_slice(inputs);
        self.next[..self.n_inputs].copy_from_slice(inputs);
        for k in order {
            let post = self.n_inputs + k;
            let range = self.post_start[k]..self.post_start[k + 1];
            let sum: f64 = self.pre[range.clone()]
                .iter()
                .zip(&self.weight[range])
                .map(|(&p, &w)| w * self.activation[p as usize])
                .sum();
            self.next[post] = logistic(sum + self.bias[post]);
        }
        std::mem::swap(&mut self.activation, &mut self.next);
        Ok(&self.activation)
    }

    /// Centred Hebbian rule with sign-preserving hard clamps.
    pub fn hebbian_update(&mut self) {
        for k in 0..self.n_processing() {
            let post_dev = self.activation[self.n_inputs + k] - 0.5;
            for i in self.post_start[k]..self.post_start[k + 1] {
                let eta = self.eta[i];
                if eta == 0.0 {
                    continue;
                }
                let p = self.pre[i] as usize;
                let w = self.weight[i] + eta * (self.activation[p] - 0.5) * post_dev;
                self.weight[i] = clamp_weight(w, self.excitatory[p], self.max_weight);
            }
        }
    }

    #[cfg(test)]
    fn set_activations(&mut self, a: &[f64]) {
        self.activation.copy_from_slice(a);
    }
}

#[inline]
fn clamp_weight(w: f64, excitatory: bool, max_weight: f64) -> f64 {
    if excitatory {
        w.clamp(0.0, max_weight)
    } else {
        w.clamp(-max_weight, 0.0)
    }
}

/// Draws the synapses of `arch` and assembles the brain.
///
/// Every potential pre→post pair within a projection is realised with
/// probability equal to its density; each realised slot is filled with the
/// nearest index-aligned unused pre-neuron with probability `1 − distortion`,
/// otherwise with a uniformly chosen unused one. Self-connections are never
/// candidates. Fixed reflex synapses run from every green input to the move
/// output and from every red input to the turn output.
pub fn build_brain(arch: &NeuralArchitecture, rng: &mut RandomStream) -> Result<Brain, BrainError> {
    arch.validate()?;
    let ranges = arch.source_ranges();
    let n_inputs = arch.n_inputs();
    let mut synapses = Vec::new();
    let mut candidates: Vec<usize> = Vec::new();
    let mut used: Vec<bool> = Vec::new();
    for (t, _) in arch.groups.iter().enumerate() {
        let targets = ranges[INPUT_GROUPS + t].clone();
        let n_post = targets.len();
        for (s, source) in ranges.iter().enumerate() {
            let proj = arch.projections[s][t];
            if proj.density <= 0.0 || source.is_empty() {
                continue;
            }
            let n_src = source.len();
            for (j, post) in targets.clone().enumerate() {
                let aligned = if n_src > 1 && n_post > 1 {
                    source.start + (j * (n_src - 1) + (n_post - 1) / 2) / (n_post - 1)
                } else {
                    source.start
                };
                candidates.clear();
                candidates.extend(source.clone().filter(|&p| p != post));
                candidates.sort_by_key(|&p| (p.abs_diff(aligned), p));
                let k = candidates
                    .iter()
                    .filter(|_| rng.random_bool(proj.density.min(1.0)))
                    .count();
                used.clear();
                used.resize(candidates.len(), false);
                for _ in 0..k {
                    let slot = if rng.random::<f64>() < 1.0 - proj.distortion {
                        used.iter().position(|u| !u).expect("k <= candidates")
                    } else {
                        let free = used.iter().filter(|u| !**u).count();
                        let pick = rng.random_range(0..free);
                        used.iter()
                            .enumerate()
                            .filter(|(_, u)| !**u)
                            .nth(pick)
                            .map(|(i, _)| i)
                            .expect("pick < free")
                    };
                    used[slot] = true;
                    let pre = candidates[slot];
                    let magnitude = rng.random::<f64>() * 0.1 * arch.max_weight;
                    let pre_excitatory = pre < n_inputs || is_excitatory_in(arch, &ranges, pre);
                    synapses.push(Synapse {
                        pre,
                        post,
                        weight: if pre_excitatory { magnitude } else { -magnitude },
                        learning_rate: proj.learning_rate,
                    });
                }
            }
        }
    }

    let last_start = arch.n_neurons() - arch.groups.last().expect("validated").size();
    let reflexes = [
        (GREEN, Behavior::Move, arch.reflex_green_move),
        (RED, Behavior::Turn, arch.reflex_red_turn),
    ];
    for (group, behavior, weight) in reflexes {
        if weight <= 0.0 {
            continue;
        }
        for pre in ranges[group].clone() {
            synapses.push(Synapse {
                pre,
                post: last_start + behavior as usize,
                weight: weight.min(arch.max_weight),
                learning_rate: 0.0,
            });
        }
    }
    Brain::with_synapses(arch, synapses)
}

fn is_excitatory_in(arch: &NeuralArchitecture, ranges: &[std::ops::Range<usize>], neuron: usize) -> bool {
    arch.groups
        .iter()
        .zip(&ranges[INPUT_GROUPS..])
        .find(|(_, r)| r.contains(&neuron))
        .is_some_and(|(g, r)| neuron - r.start < g.excitatory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn arch(groups: &[(usize, usize)], density: f64) -> NeuralArchitecture {
        let n_src = INPUT_GROUPS + groups.len();
        NeuralArchitecture {
            input_sizes: vec![3, 3, 3, 1],
            groups: groups
                .iter()
                .map(|&(e, i)| GroupSpec {
                    excitatory: e,
                    inhibitory: i,
                })
                .collect(),
            projections: vec![
                vec![
                    Projection {
                        density,
                        distortion: 0.5,
                        learning_rate: 0.05
                    };
                    groups.len()
                ];
                n_src
            ],
            group_bias: vec![0.0; groups.len()],
            output_bias: [0.0; OUTPUT_COUNT],
            max_weight: 8.0,
            reflex_green_move: 0.0,
            reflex_red_turn: 0.0,
        }
    }

    fn only(mut a: NeuralArchitecture, source: usize, target: usize, density: f64) -> NeuralArchitecture {
        for row in &mut a.projections {
            for p in row.iter_mut() {
                p.density = 0.0;
            }
        }
        a.projections[source][target].density = density;
        a
    }

    #[test]
    fn zero_density_means_no_synapses() {
        let a = arch(&[(5, 2), (6, 0)], 0.0);
        let b = build_brain(&a, &mut stream(1, Purpose::BrainBuild)).unwrap();
        assert_eq!(b.n_synapses(), 0);
    }

    #[test]
    fn full_density_is_complete_bipartite() {
        // blue input group (3 neurons) into a 4-neuron group
        let mut a = arch(&[(5, 0), (4, 0)], 0.0);
        a.groups[0] = GroupSpec {
            excitatory: 4,
            inhibitory: 0,
        };
        a.groups[1] = GroupSpec {
            excitatory: 5,
            inhibitory: 0,
        };
        let a = only(a, 2, 0, 1.0);
        let b = build_brain(&a, &mut stream(1, Purpose::BrainBuild)).unwrap();
        assert_eq!(b.n_synapses(), 12);
    }

    #[test]
    fn half_density_binomial_mean() {
        // processing group 0 (10 neurons) into processing group 1 (10 neurons)
        let a = only(arch(&[(10, 0), (10, 0)], 0.0), INPUT_GROUPS, 1, 0.5);
        let mut rng = stream(2, Purpose::BrainBuild);
        let builds = 1000;
        let total: usize = (0..builds).map(|_| build_brain(&a, &mut rng).unwrap().n_synapses()).sum();
        let mean = total as f64 / builds as f64;
        assert!((mean - 50.0).abs() < 3.0, "mean {mean}");
    }

    #[test]
    fn zero_distortion_is_topographic() {
        let mut a = only(arch(&[(5, 0), (5, 0)], 0.0), INPUT_GROUPS, 1, 0.2);
        a.projections[INPUT_GROUPS][1].distortion = 0.0;
        let b = build_brain(&a, &mut stream(3, Purpose::BrainBuild)).unwrap();
        // every post that received input got its index-aligned partner first
        let mut by_post = std::collections::BTreeMap::<usize, Vec<usize>>::new();
        for s in b.synapses() {
            by_post.entry(s.post - 15).or_default().push(s.pre - 10);
        }
        assert!(!by_post.is_empty());
        for (post, pres) in by_post {
            assert!(pres.contains(&post), "post {post} got {pres:?}");
        }
    }

    #[test]
    fn stillborn_architectures_rejected() {
        let mut a = arch(&[(5, 0)], 0.1);
        a.groups.clear();
        a.group_bias.clear();
        assert_eq!(build_brain(&a, &mut stream(1, Purpose::BrainBuild)), Err(BrainError::NoProcessingNeurons));
        let a = arch(&[(3, 1)], 0.1);
        assert!(matches!(
            build_brain(&a, &mut stream(1, Purpose::BrainBuild)),
            Err(BrainError::TooFewOutputs(3, 5))
        ));
    }

    #[test]
    fn zero_weights_give_half_activation() {
        let a = arch(&[(5, 3)], 0.0);
        let mut b = build_brain(&a, &mut stream(1, Purpose::BrainBuild)).unwrap();
        let out = b.step(&[0.7; 10]).unwrap().to_vec();
        assert!(out[10..].iter().all(|&x| x == 0.5));
    }

    #[test]
    fn saturating_single_synapse() {
        let a = arch(&[(5, 0)], 0.0);
        let syn = Synapse {
            pre: 0,
            post: 10,
            weight: 8.0,
            learning_rate: 0.0,
        };
        let mut b = Brain::with_synapses(&a, vec![syn]).unwrap();
        let mut inputs = [0.0; 10];
        inputs[0] = 1.0;
        let out = b.step(&inputs).unwrap();
        assert!((out[10] - 0.999_664_649).abs() < 1e-8, "{}", out[10]);
    }

    #[test]
    fn update_order_is_irrelevant() {
        let a = arch(&[(6, 3), (5, 2)], 0.4);
        let mut b1 = build_brain(&a, &mut stream(9, Purpose::BrainBuild)).unwrap();
        let mut b2 = b1.clone();
        let inputs: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        for _ in 0..5 {
            b1.step(&inputs).unwrap();
            let n = b2.n_processing();
            b2.step_in_order(&inputs, (0..n).rev()).unwrap();
            assert_eq!(b1.activations(), b2.activations());
        }
    }

    #[test]
    fn hebbian_examples() {
        let a = arch(&[(5, 1)], 0.0);
        let mk = |w: f64, pre: usize| Synapse {
            pre,
            post: 11,
            weight: w,
            learning_rate: 0.1,
        };
        let mut b = Brain::with_synapses(&a, vec![mk(1.0, 0), mk(0.0, 1), mk(-1.0, 15)]).unwrap();
        let mut act = vec![0.5; 16];
        b.set_activations(&act);
        b.hebbian_update();
        let w: Vec<f64> = b.synapses().map(|s| s.weight).collect();
        assert_eq!(w, vec![1.0, 0.0, -1.0]);

        act[0] = 1.0;
        act[1] = 0.0;
        act[11] = 1.0;
        act[15] = 0.0;
        b.set_activations(&act);
        b.hebbian_update();
        let w: Vec<f64> = b.synapses().map(|s| s.weight).collect();
        assert!((w[0] - 1.025).abs() < 1e-15);
        // excitatory weight at 0 with a negative change stays at 0
        assert_eq!(w[1], 0.0);
        // inhibitory: Δw = 0.1·(−0.5)·0.5 = −0.025
        assert!((w[2] + 1.025).abs() < 1e-15);
    }

    #[test]
    fn build_is_deterministic_per_stream() {
        let a = arch(&[(7, 2), (6, 3)], 0.3);
        let b1 = build_brain(&a, &mut stream(4, Purpose::BrainBuild)).unwrap();
        let b2 = build_brain(&a, &mut stream(4, Purpose::BrainBuild)).unwrap();
        assert_eq!(b1, b2);
    }
}
