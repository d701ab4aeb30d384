use super::SimError;

/// Rotation angle: either fixed at construction or looked up in the bindings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Fixed(f64),
    Param(usize),
}

impl Angle {
    pub fn resolve(self, bindings: &[f64]) -> Result<f64, SimError> {
        match self {
            Angle::Fixed(v) => Ok(v),
            Angle::Param(k) => bindings.get(k).copied().ok_or(SimError::UnboundParameter(k)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H(usize),
    Rz(usize, Angle),
    Ry(usize, Angle),
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn qubits(&self) -> ([usize; 2], usize) {
        match *self {
            Gate::H(q) | Gate::Rz(q, _) | Gate::Ry(q, _) => ([q, q], 1),
            Gate::Cnot { control, target } => ([control, target], 2),
        }
    }

    pub fn angle(&self) -> Option<Angle> {
        match *self {
            Gate::Rz(_, a) | Gate::Ry(_, a) => Some(a),
            _ => None,
        }
    }

    pub fn param(&self) -> Option<usize> {
        match self.angle() {
            Some(Angle::Param(k)) => Some(k),
            _ => None,
        }
    }
}

/// Ordered gate list over a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubits: usize) -> Self {
        Self { qubits, gates: Vec::new() }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self, SimError> {
        let (qs, n) = gate.qubits();
        for &q in &qs[..n] {
            if q >= self.qubits {
                return Err(SimError::QubitOutOfRange { index: q, qubits: self.qubits });
            }
        }
        if n == 2 && qs[0] == qs[1] {
            return Err(SimError::SameControlTarget(qs[0]));
        }
        self.gates.push(gate);
        Ok(self)
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<&mut Self, SimError> {
        for g in gates {
            self.push(g)?;
        }
        Ok(self)
    }

    /// One past the largest parameter index referenced, or 0.
    pub fn n_params(&self) -> usize {
        self.gates.iter().filter_map(Gate::param).map(|k| k + 1).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_indices() {
        let mut c = Circuit::new(2);
        assert!(c.push(Gate::H(1)).is_ok());
        assert_eq!(c.push(Gate::H(2)).unwrap_err(), SimError::QubitOutOfRange { index: 2, qubits: 2 });
        assert_eq!(c.push(Gate::Cnot { control: 1, target: 1 }).unwrap_err(), SimError::SameControlTarget(1));
        c.push(Gate::Ry(0, Angle::Param(3))).unwrap();
        assert_eq!(c.n_params(), 4);
        assert_eq!(Angle::Param(3).resolve(&[0.0]), Err(SimError::UnboundParameter(3)));
    }
}
