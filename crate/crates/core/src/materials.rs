//! Material properties referenced to an operating temperature, and the
//! volumetric Joule source of the drive wires.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Specific gas constant of dry air, J/(kg·K).
pub const R_AIR: f64 = 287.05;
pub const STANDARD_PRESSURE: f64 = 101_325.0;
pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialId {
    Air,
    Silicon,
    PyrexGlass,
    /// Drive-wire metal; the only heat-generating material.
    Aluminum,
}

impl MaterialId {
    pub const ALL: [MaterialId; 4] = [Self::Air, Self::Silicon, Self::PyrexGlass, Self::Aluminum];

    /// Integer tag used in field dumps.
    pub fn code(self) -> u8 {
        match self {
            Self::Air => 0,
            Self::Silicon => 1,
            Self::PyrexGlass => 2,
            Self::Aluminum => 3,
        }
    }

    pub fn is_heat_source(self) -> bool {
        self == Self::Aluminum
    }
}

impl fmt::Display for MaterialId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Air => "air",
            Self::Silicon => "silicon",
            Self::PyrexGlass => "pyrex_glass",
            Self::Aluminum => "aluminum",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("reference temperature must be positive, got {0} K")]
    NonPositiveTemperature(f64),
    #[error("{material}: {what} must be positive, got {value}")]
    NonPositiveProperty { material: MaterialId, what: &'static str, value: f64 },
    #[error("{0}: viscosity and expansion coefficient must be positive exactly for fluids")]
    FluidMismatch(MaterialId),
    #[error("material table has no entry for {0}")]
    Missing(MaterialId),
    #[error("wire volume must be positive, got {0} m^3")]
    NonPositiveVolume(f64),
    #[error("wire resistance must be positive, got {0} ohm")]
    NonPositiveResistance(f64),
    #[error("drive current must be non-negative, got {0} A")]
    NegativeCurrent(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialProps {
    /// Density, kg/m³ (the Boussinesq reference density for fluids).
    pub rho0: f64,
    /// Thermal conductivity, W/(m·K).
    pub k: f64,
    /// Specific heat, J/(kg·K).
    pub cp: f64,
    /// Dynamic viscosity, Pa·s; zero for solids.
    pub mu: f64,
    /// Thermal expansion coefficient, 1/K; zero for solids.
    pub beta: f64,
    pub is_fluid: bool,
}

impl MaterialProps {
    pub fn solid(rho0: f64, k: f64, cp: f64) -> Self {
        Self { rho0, k, cp, mu: 0.0, beta: 0.0, is_fluid: false }
    }

    pub fn fluid(rho0: f64, k: f64, cp: f64, mu: f64, beta: f64) -> Self {
        Self { rho0, k, cp, mu, beta, is_fluid: true }
    }

    pub fn validate(&self, id: MaterialId) -> Result<(), MaterialError> {
        for (what, value) in [("density", self.rho0), ("conductivity", self.k), ("heat capacity", self.cp)] {
            if !(value > 0.0) {
                return Err(MaterialError::NonPositiveProperty { material: id, what, value });
            }
        }
        let fluid_props = self.mu > 0.0 && self.beta > 0.0;
        let solid_props = self.mu == 0.0 && self.beta == 0.0;
        if (self.is_fluid && !fluid_props) || (!self.is_fluid && !solid_props) {
            return Err(MaterialError::FluidMismatch(id));
        }
        Ok(())
    }

    /// Volumetric heat capacity ρ₀c_p, J/(m³·K).
    pub fn rho_cp(&self) -> f64 {
        self.rho0 * self.cp
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialTable {
    props: BTreeMap<MaterialId, MaterialProps>,
    /// Boussinesq reference (operating) temperature, K.
    pub t_ref: f64,
    /// Gravity vector, m/s².
    pub gravity: [f64; 2],
}

impl MaterialTable {
    pub fn new(
        props: BTreeMap<MaterialId, MaterialProps>,
        t_ref: f64,
        gravity: [f64; 2],
    ) -> Result<Self, MaterialError> {
        if !(t_ref > 0.0) {
            return Err(MaterialError::NonPositiveTemperature(t_ref));
        }
        for (&id, p) in &props {
            p.validate(id)?;
        }
        Ok(Self { props, t_ref, gravity })
    }

    pub fn get(&self, id: MaterialId) -> Result<&MaterialProps, MaterialError> {
        self.props.get(&id).ok_or(MaterialError::Missing(id))
    }

    pub fn set(&mut self, id: MaterialId, props: MaterialProps) -> Result<(), MaterialError> {
        props.validate(id)?;
        self.props.insert(id, props);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (MaterialId, &MaterialProps)> {
        self.props.iter().map(|(&id, p)| (id, p))
    }
}

/// Dry air at temperature `t` (K) and pressure `p` (Pa).
///
/// Ideal-gas density, Sutherland's law for viscosity and conductivity, and
/// β = 1/T.
pub fn air_at(t: f64, p: f64) -> MaterialProps {
    const T_STD: f64 = 273.15;
    let mu = 1.716e-5 * (t / T_STD).powf(1.5) * (T_STD + 110.4) / (t + 110.4);
    let k = 0.0241 * (t / T_STD).powf(1.5) * (T_STD + 194.0) / (t + 194.0);
    MaterialProps::fluid(p / (R_AIR * t), k, 1006.0, mu, 1.0 / t)
}

/// Standard property set for the glass–silicon–glass stack at operating
/// temperature `t0`.
///
/// Air is evaluated at `t0` and one standard atmosphere. Solids use
/// room-temperature handbook values (silicon 2329 kg/m³, 148 W/m·K,
/// 712 J/kg·K; Pyrex 7740 2230 kg/m³, 1.13 W/m·K, 753 J/kg·K; aluminum
/// 2700 kg/m³, 237 W/m·K, 897 J/kg·K). Gravity points along −y.
pub fn default_table(t0: f64) -> Result<MaterialTable, MaterialError> {
    if !(t0 > 0.0) {
        return Err(MaterialError::NonPositiveTemperature(t0));
    }
    let props = BTreeMap::from([
        (MaterialId::Air, air_at(t0, STANDARD_PRESSURE)),
        (MaterialId::Silicon, MaterialProps::solid(2329.0, 148.0, 712.0)),
        (MaterialId::PyrexGlass, MaterialProps::solid(2230.0, 1.13, 753.0)),
        (MaterialId::Aluminum, MaterialProps::solid(2700.0, 237.0, 897.0)),
    ]);
    MaterialTable::new(props, t0, [0.0, -STANDARD_GRAVITY])
}

/// Time-averaged Joule heating of the AC drive wires.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JouleSource {
    /// RMS drive current, A.
    pub i_rms: f64,
    /// Wire resistance, Ω.
    pub resistance: f64,
    /// Wire volume, m³ (cross-section area times out-of-plane length).
    pub wire_volume: f64,
    /// Volumetric power density, W/m³.
    pub s_h: f64,
}

impl JouleSource {
    pub fn power(&self) -> f64 {
        self.i_rms * self.i_rms * self.resistance
    }

    pub fn off() -> Self {
        Self { i_rms: 0.0, resistance: 1.0, wire_volume: 1.0, s_h: 0.0 }
    }
}

/// `s_h = i_rms² R / V`.
pub fn joule_source(i_rms: f64, resistance: f64, wire_volume: f64) -> Result<JouleSource, MaterialError> {
    if !(wire_volume > 0.0) {
        return Err(MaterialError::NonPositiveVolume(wire_volume));
    }
    if !(resistance > 0.0) {
        return Err(MaterialError::NonPositiveResistance(resistance));
    }
    if !(i_rms >= 0.0) {
        return Err(MaterialError::NegativeCurrent(i_rms));
    }
    let s_h = i_rms * i_rms * resistance / wire_volume;
    Ok(JouleSource { i_rms, resistance, wire_volume, s_h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn air_expansion_is_ideal_gas() {
        let t300 = default_table(300.0).unwrap();
        let t600 = default_table(600.0).unwrap();
        let b300 = t300.get(MaterialId::Air).unwrap().beta;
        let b600 = t600.get(MaterialId::Air).unwrap().beta;
        assert!((b300 - 3.333e-3).abs() < 1e-6);
        assert_eq!(b600, b300 / 2.0);
        for t0 in [250.0, 293.0, 300.0, 313.0, 333.0, 600.0] {
            let table = default_table(t0).unwrap();
            assert_eq!(table.get(MaterialId::Air).unwrap().beta * t0, 1.0);
        }
    }

    #[test]
    fn default_table_is_complete_and_valid() {
        let table = default_table(300.0).unwrap();
        for id in MaterialId::ALL {
            let p = table.get(id).unwrap();
            assert!(p.validate(id).is_ok());
            assert_eq!(p.is_fluid, id == MaterialId::Air);
        }
        let air = table.get(MaterialId::Air).unwrap();
        assert!((air.rho0 - 1.177).abs() < 0.01);
        assert!((air.mu - 1.85e-5).abs() < 0.05e-5);
        assert!((air.k - 0.0263).abs() < 0.001);
    }

    #[test]
    fn nonpositive_reference_temperature_is_rejected() {
        assert_eq!(default_table(0.0).unwrap_err(), MaterialError::NonPositiveTemperature(0.0));
        assert!(default_table(-5.0).is_err());
    }

    #[test]
    fn fluid_flag_must_match_properties() {
        let bad = MaterialProps { is_fluid: false, ..air_at(300.0, STANDARD_PRESSURE) };
        assert_eq!(bad.validate(MaterialId::Air), Err(MaterialError::FluidMismatch(MaterialId::Air)));
    }

    #[test]
    fn joule_source_values() {
        assert_eq!(joule_source(0.0, 10.0, 1e-12).unwrap().s_h, 0.0);
        let s = joule_source(10e-3, 10.0, 1e-12).unwrap();
        assert!((s.power() - 1e-3).abs() < 1e-15);
        assert!((s.s_h - 1e9).abs() < 1e-3);
        let double = joule_source(20e-3, 10.0, 1e-12).unwrap();
        assert!((double.s_h / s.s_h - 4.0).abs() < 1e-12);
    }

    #[test]
    fn joule_source_errors() {
        assert_eq!(joule_source(1.0, 10.0, 0.0).unwrap_err(), MaterialError::NonPositiveVolume(0.0));
        assert_eq!(joule_source(1.0, -1.0, 1.0).unwrap_err(), MaterialError::NonPositiveResistance(-1.0));
        assert_eq!(joule_source(-1.0, 1.0, 1.0).unwrap_err(), MaterialError::NegativeCurrent(-1.0));
    }

    proptest! {
        #[test]
        fn joule_source_homogeneity(i in 1e-4f64..1.0, r in 0.1f64..100.0, v in 1e-15f64..1e-6, s in 0.1f64..10.0) {
            let base = joule_source(i, r, v).unwrap().s_h;
            let scaled_i = joule_source(s * i, r, v).unwrap().s_h;
            let scaled_v = joule_source(i, r, s * v).unwrap().s_h;
            prop_assert!((scaled_i / base - s * s).abs() <= 1e-12 * s * s);
            prop_assert!((scaled_v / base - 1.0 / s).abs() <= 1e-12 / s);
        }
    }
}
