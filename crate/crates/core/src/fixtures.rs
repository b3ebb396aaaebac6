//! Small reference instances used across tests, benches and the CLI examples.
//!
//! * `W2`: alphabet `{z1, z2}`, one model `θ0` with losses `(0, 1)`,
//!   reference and data measure `(½, ½)`.
//! * `W3`: alphabet `{z1, z2, z3}`, models `θ1: (0, 1, 2)` and
//!   `θ2: (2, 1, 0)`, data measure `(0.5, 0.3, 0.2)`, uniform reference.

use crate::loss::LossModel;
use crate::measure::{Alphabet, DiscreteMeasure};

#[derive(Clone, Debug)]
pub struct Fixture {
    pub model: LossModel,
    pub reference: DiscreteMeasure,
    pub data: DiscreteMeasure,
}

pub fn w2() -> Fixture {
    let alphabet = Alphabet::new(["z1", "z2"]).expect("valid labels");
    let models = Alphabet::new(["theta0"]).expect("valid labels");
    let model = LossModel::new(alphabet.clone(), models, vec![vec![0.0, 1.0]]).expect("valid table");
    let reference = DiscreteMeasure::uniform(alphabet);
    Fixture {
        model,
        data: reference.clone(),
        reference,
    }
}

pub fn w3() -> Fixture {
    let alphabet = Alphabet::new(["z1", "z2", "z3"]).expect("valid labels");
    let models = Alphabet::new(["theta1", "theta2"]).expect("valid labels");
    let model =
        LossModel::new(alphabet.clone(), models, vec![vec![0.0, 1.0, 2.0], vec![2.0, 1.0, 0.0]]).expect("valid table");
    Fixture {
        model,
        reference: DiscreteMeasure::uniform(alphabet.clone()),
        data: DiscreteMeasure::new(alphabet, vec![0.5, 0.3, 0.2]).expect("valid weights"),
    }
}
