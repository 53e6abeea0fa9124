#![allow(dead_code)]

use crng_core::access::catalog;
use crng_core::codec::{
    CodePolicy, CodeShape, CosetPolicy, DecodeMode, EnsembleChoice, ExperimentPlan, RatePair, Simulator,
};
use crng_core::field::Field;
use crng_core::prob::{ChannelSpec, ConditionalKernel, FiniteDist, JointSourceSpec, LetterModel};

pub fn p2p_model(channel: ChannelSpec, source: Option<[f64; 2]>) -> LetterModel {
    let a = catalog::point_to_point();
    let sorted = a.sorted_family();
    let mut spec = JointSourceSpec::uniform(vec![2], &sorted).unwrap();
    if let Some(p) = source {
        spec.groups[0].kernel = ConditionalKernel::from_dist(&FiniteDist::new(vec![2], p.to_vec()).unwrap());
    }
    LetterModel::new(a, spec, vec![ConditionalKernel::noiseless(2).unwrap()], channel).unwrap()
}

pub fn p2p(channel: ChannelSpec, source: Option<[f64; 2]>) -> Simulator {
    Simulator::new(p2p_model(channel, source), Field::binary()).unwrap()
}

pub fn plan(n: usize, message: f64, codeword: f64, trials: u64, mode: DecodeMode) -> ExperimentPlan {
    ExperimentPlan {
        shape: CodeShape::from_rates(n, Field::binary(), &[RatePair { codeword, message }]).unwrap(),
        ensemble: EnsembleChoice::default(),
        code_policy: CodePolicy::PerExperiment,
        cosets: CosetPolicy::Sampled,
        mode,
        seed: 7,
        trials,
        threads: 4,
        keep_trials: false,
    }
}
