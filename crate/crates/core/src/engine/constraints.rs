use serde::{Deserialize, Serialize};

use super::EngineError;

/// Memory cap in bytes and latency cap in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    pub c_mem: f64,
    pub c_lat: f64,
}

impl Constraints {
    pub fn new(c_mem: f64, c_lat: f64) -> Result<Self, EngineError> {
        if !(c_mem > 0.0 && c_lat > 0.0) || !c_mem.is_finite() || !c_lat.is_finite() {
            return Err(EngineError::InvalidConstraints { c_mem, c_lat });
        }
        Ok(Self { c_mem, c_lat })
    }

    pub fn memory_ok(&self, memory_bytes: f64) -> bool {
        memory_bytes <= self.c_mem
    }

    pub fn latency_ok(&self, latency_ms: f64) -> bool {
        latency_ms <= self.c_lat
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, EngineError> {
        Constraints::new(self.c_mem * factor, self.c_lat * factor)
    }
}

/// Both caps hold; equality counts as within the cap.
pub fn check_feasible(latency_ms: f64, memory_bytes: f64, constraints: &Constraints) -> bool {
    constraints.memory_ok(memory_bytes) && constraints.latency_ok(latency_ms)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResourceSnapshot {
    pub memory_in_use: f64,
    pub cpu_load: f64,
}

impl ResourceSnapshot {
    pub fn new(memory_in_use: f64, cpu_load: f64) -> Result<Self, EngineError> {
        if !(memory_in_use >= 0.0) || !(0.0..=1.0).contains(&cpu_load) {
            return Err(EngineError::InvalidResources {
                memory_in_use,
                cpu_load,
            });
        }
        Ok(Self {
            memory_in_use,
            cpu_load,
        })
    }
}
