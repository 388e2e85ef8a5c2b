//! Solver-agnostic MILP representation: variables with bounds, linear
//! constraints and a linear minimization objective, plus the mapping from
//! variables back to problem entities.

use std::collections::HashMap;

use crate::error::MipError;
use crate::model::{ActivityId, BatteryId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

/// What a variable means in problem terms. Start/active slots are
/// week-relative for recurring activities and absolute for once-offs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarEntity {
    /// `x_bt`: battery charging.
    BatteryCharge { battery: BatteryId, slot: usize },
    /// `y_bt`: battery discharging.
    BatteryDischarge { battery: BatteryId, slot: usize },
    /// `s_bt`: state of charge at the end of a slot.
    BatterySoc { battery: BatteryId, slot: usize },
    /// `z_at`: activity starts at the slot.
    ActivityStart { activity: ActivityId, slot: usize },
    /// `v_at`: activity in progress at the slot.
    ActivityActive { activity: ActivityId, slot: usize },
    /// `w_a`: activity is scheduled.
    Scheduled { activity: ActivityId },
    /// `u_a`: once-off scheduled outside working hours.
    AfterHours { activity: ActivityId },
    /// `d_a`: day index of the start (sentinel when unscheduled).
    StartDay { activity: ActivityId },
    /// Net load at a slot, per scenario in SAA models.
    NetLoad { slot: usize, scenario: Option<usize> },
    /// Peak absolute net load.
    PeakAbs { scenario: Option<usize> },
    /// One-hot level selector for the linearized demand charge.
    PeakLevel { level: usize, scenario: Option<usize> },
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub entity: VarEntity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    /// `(variable index, coefficient)` pairs.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A built model. Construction goes through [`MipModel::new`] plus the
/// `add_*` methods so the name index stays consistent.
#[derive(Debug, Clone)]
pub struct MipModel {
    pub name: String,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    /// Minimization objective, `(variable index, coefficient)`.
    objective: Vec<(usize, f64)>,
    /// Integer upper bound `M` on the absolute net load.
    pub peak_bound: usize,
    /// Sentinel day index for unscheduled activities.
    pub day_sentinel: usize,
    /// Scenario base loads for SAA models (empty = deterministic).
    pub scenario_loads: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
}

impl MipModel {
    pub fn new(name: impl Into<String>) -> Self {
        MipModel {
            name: name.into(),
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            peak_bound: 0,
            day_sentinel: 0,
            scenario_loads: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
        entity: VarEntity,
    ) -> Result<usize, MipError> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(MipError::NameCollision(name));
        }
        let idx = self.variables.len();
        self.index.insert(name.clone(), idx);
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
            entity,
        });
        Ok(idx)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
    }

    pub fn add_objective_term(&mut self, var: usize, coefficient: f64) {
        if coefficient != 0.0 {
            self.objective.push((var, coefficient));
        }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn binary_count(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    /// Objective value of a point given as values aligned with the variable
    /// order.
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective
            .iter()
            .map(|(idx, coef)| coef * values[*idx])
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_names_are_rejected() {
        let mut m = MipModel::new("t");
        m.add_variable("x", VarKind::Binary, 0.0, 1.0, VarEntity::PeakAbs { scenario: None })
            .unwrap();
        let err = m
            .add_variable("x", VarKind::Binary, 0.0, 1.0, VarEntity::PeakAbs { scenario: None })
            .unwrap_err();
        assert!(matches!(err, MipError::NameCollision(_)));
    }
}
