//! Cantilever tip deflection under an end load.
//!
//! A rectangular cross-section of height `h` and width `b` has second
//! moment of area `I = b·h³/12`, so an end load `F` on a beam of length
//! `L` and modulus `E` deflects the tip by
//!
//! `w = F·L³ / (3·E·I) = 4·F·L³ / (E·h³·b)`.
//!
//! Every parameter enters as a pure power (exponents 1, 3, −1, −3, −1),
//! which is what makes this the canonical stress test for moment
//! propagation: the response is linear in `1/E`, strongly convex in `h`,
//! and exactly linear in `F`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagation::ObjectiveModel;

/// Nominal geometry and load of the cantilever. Field names follow the
/// conventional symbols; serialized records use the same letters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    #[serde(rename = "F")]
    pub load: f64,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "E")]
    pub modulus: f64,
    #[serde(rename = "h")]
    pub height: f64,
    #[serde(rename = "b")]
    pub width: f64,
}

impl BeamParams {
    pub fn new(load: f64, length: f64, modulus: f64, height: f64, width: f64) -> Result<Self> {
        let params = BeamParams {
            load,
            length,
            modulus,
            height,
            width,
        };
        params.validate()?;
        Ok(params)
    }

    /// All five entries must be finite and strictly positive; a beam with
    /// zero modulus or zero cross-section has no finite deflection.
    pub fn validate(&self) -> Result<()> {
        for p in BeamParameter::ALL {
            let v = self.get(p);
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter {
                    name: p.label(),
                    value: v,
                    reason: "beam parameters must be finite and positive",
                });
            }
        }
        Ok(())
    }

    pub fn get(&self, p: BeamParameter) -> f64 {
        match p {
            BeamParameter::Load => self.load,
            BeamParameter::Length => self.length,
            BeamParameter::Modulus => self.modulus,
            BeamParameter::Height => self.height,
            BeamParameter::Width => self.width,
        }
    }

    pub fn set(&mut self, p: BeamParameter, value: f64) {
        match p {
            BeamParameter::Load => self.load = value,
            BeamParameter::Length => self.length = value,
            BeamParameter::Modulus => self.modulus = value,
            BeamParameter::Height => self.height = value,
            BeamParameter::Width => self.width = value,
        }
    }

    pub fn tip_deflection(&self) -> f64 {
        tip_deflection(self.load, self.length, self.modulus, self.height, self.width)
    }
}

/// `w = 4·F·L³ / (E·h³·b)`.
pub fn tip_deflection(load: f64, length: f64, modulus: f64, height: f64, width: f64) -> f64 {
    4.0 * load * (length * length * length) / (modulus * (height * height * height) * width)
}

/// One of the five cantilever parameters, identified in serialized form
/// by its conventional symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BeamParameter {
    #[serde(rename = "F")]
    Load,
    #[serde(rename = "L")]
    Length,
    #[serde(rename = "E")]
    Modulus,
    #[serde(rename = "h")]
    Height,
    #[serde(rename = "b")]
    Width,
}

impl BeamParameter {
    pub const ALL: [BeamParameter; 5] = [
        BeamParameter::Load,
        BeamParameter::Length,
        BeamParameter::Modulus,
        BeamParameter::Height,
        BeamParameter::Width,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            BeamParameter::Load => "F",
            BeamParameter::Length => "L",
            BeamParameter::Modulus => "E",
            BeamParameter::Height => "h",
            BeamParameter::Width => "b",
        }
    }

    pub fn from_label(label: &str) -> Result<Self> {
        match label {
            "F" => Ok(BeamParameter::Load),
            "L" => Ok(BeamParameter::Length),
            "E" => Ok(BeamParameter::Modulus),
            "h" => Ok(BeamParameter::Height),
            "b" => Ok(BeamParameter::Width),
            other => Err(Error::Configuration(format!(
                "unknown beam parameter {other:?}; expected one of F, L, E, h, b"
            ))),
        }
    }

    /// Exponent of this parameter in the deflection monomial.
    pub fn power(&self) -> f64 {
        match self {
            BeamParameter::Load => 1.0,
            BeamParameter::Length => 3.0,
            BeamParameter::Modulus => -1.0,
            BeamParameter::Height => -3.0,
            BeamParameter::Width => -1.0,
        }
    }
}

impl std::fmt::Display for BeamParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Tip deflection as an objective over the chosen random parameters, the
/// rest frozen at their nominal values. Input coordinates follow the
/// order of `random`.
///
/// Because the response is a monomial, gradient and Hessian come in
/// closed form: with `w` the deflection and `cᵢ` the exponent of
/// coordinate `i`, `∂w/∂xᵢ = cᵢ·w/xᵢ` and
/// `∂²w/∂xᵢ∂xⱼ = cᵢ·(cⱼ − [i = j])·w/(xᵢ·xⱼ)`.
pub fn tip_deflection_model(
    nominal: &BeamParams,
    random: &[BeamParameter],
) -> Result<ObjectiveModel> {
    nominal.validate()?;
    if random.is_empty() {
        return Err(Error::Configuration(
            "at least one beam parameter must be random".into(),
        ));
    }
    for (k, p) in random.iter().enumerate() {
        if random[..k].contains(p) {
            return Err(Error::Configuration(format!(
                "beam parameter {p} listed twice"
            )));
        }
    }
    let dimension = random.len();
    let base = *nominal;
    let assemble = {
        let random = random.to_vec();
        move |x: &[f64]| {
            let mut params = base;
            for (k, p) in random.iter().enumerate() {
                params.set(*p, x[k]);
            }
            params
        }
    };
    let value = {
        let assemble = assemble.clone();
        move |x: &[f64]| assemble(x).tip_deflection()
    };
    let gradient = {
        let assemble = assemble.clone();
        let random = random.to_vec();
        move |x: &[f64]| {
            let w = assemble(x).tip_deflection();
            random
                .iter()
                .zip(x)
                .map(|(p, xi)| p.power() * w / xi)
                .collect::<Vec<f64>>()
        }
    };
    let hessian = {
        let random = random.to_vec();
        move |x: &[f64]| {
            let w = assemble(x).tip_deflection();
            DMatrix::from_fn(random.len(), random.len(), |i, j| {
                let ci = random[i].power();
                let cj = random[j].power();
                let cross = if i == j { ci * (ci - 1.0) } else { ci * cj };
                cross * w / (x[i] * x[j])
            })
        }
    };
    Ok(ObjectiveModel::from_value(dimension, value)
        .with_gradient(gradient)
        .with_hessian(hessian))
}
