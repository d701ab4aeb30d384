use serde::{Deserialize, Serialize};

use super::SimError;

/// Hardware noise applied during simulation.
///
/// Per gate: the unitary (with every rotation angle over-rotated by
/// `gate_imperfection` radians), then depolarizing, then amplitude damping
/// on each touched qubit. `measurement_flip` acts only at readout.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    pub measurement_flip: f64,
    pub gate_imperfection: f64,
    pub depolarizing: f64,
    pub amplitude_damping: f64,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), SimError> {
        let unit = [
            ("measurement_flip", self.measurement_flip),
            ("depolarizing", self.depolarizing),
            ("amplitude_damping", self.amplitude_damping),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::InvalidNoise(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.gate_imperfection) {
            return Err(SimError::InvalidNoise(format!(
                "gate_imperfection = {} outside [0, pi]",
                self.gate_imperfection
            )));
        }
        Ok(())
    }

    /// True when any incoherent channel is active and a density matrix is needed.
    pub fn has_channels(&self) -> bool {
        self.depolarizing > 0.0 || self.amplitude_damping > 0.0
    }

    /// Readout scaling of `⟨Z⟩` under symmetric measurement flips.
    pub fn readout_factor(&self) -> f64 {
        1.0 - 2.0 * self.measurement_flip
    }

    /// Sweep mapping of a noise level `L` (fraction) to a single active channel.
    pub fn single_channel(channel: NoiseChannel, level: f64) -> Self {
        let mut n = NoiseModel::default();
        match channel {
            NoiseChannel::MeasurementFlip => n.measurement_flip = level,
            NoiseChannel::GateImperfection => n.gate_imperfection = level * std::f64::consts::PI / 20.0,
            NoiseChannel::Depolarizing => n.depolarizing = level,
            NoiseChannel::AmplitudeDamping => n.amplitude_damping = level,
        }
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseChannel {
    MeasurementFlip,
    GateImperfection,
    Depolarizing,
    AmplitudeDamping,
}

impl NoiseChannel {
    pub const ALL: [NoiseChannel; 4] = [
        NoiseChannel::MeasurementFlip,
        NoiseChannel::GateImperfection,
        NoiseChannel::Depolarizing,
        NoiseChannel::AmplitudeDamping,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseChannel::MeasurementFlip => "measurement_flip",
            NoiseChannel::GateImperfection => "gate_imperfection",
            NoiseChannel::Depolarizing => "depolarizing",
            NoiseChannel::AmplitudeDamping => "amplitude_damping",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_bounds() {
        assert!(NoiseModel::default().validate().is_ok());
        assert!(NoiseModel { depolarizing: 1.5, ..Default::default() }.validate().is_err());
        assert!(NoiseModel { gate_imperfection: 4.0, ..Default::default() }.validate().is_err());
        assert!(NoiseModel { measurement_flip: -0.1, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn level_mapping() {
        let n = NoiseModel::single_channel(NoiseChannel::GateImperfection, 0.1);
        assert!((n.gate_imperfection - 0.1 * std::f64::consts::PI / 20.0).abs() < 1e-15);
        assert_eq!(n.depolarizing, 0.0);
        assert_eq!(NoiseModel::single_channel(NoiseChannel::Depolarizing, 0.05).depolarizing, 0.05);
    }
}
