//! Layered evaluation order: local XOR work, AND batches, reactive opens.

use crate::circuit::{BooleanCircuit, GateKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// XOR gates evaluated locally, in gate order.
    Local(Vec<u32>),
    /// AND gates evaluated together in one communication round.
    And(Vec<u32>),
    /// Index into the circuit's reactive opens.
    Open(usize),
}

#[derive(Debug, Clone)]
pub struct Schedule {
    steps: Vec<Step>,
    and_layers: u32,
    and_count: u64,
}

impl Schedule {
    pub fn new(c: &BooleanCircuit) -> Self {
        let levels = c.and_levels();
        let depth = levels.iter().copied().max().unwrap_or(0) as usize;
        let mut local: Vec<Vec<u32>> = vec![Vec::new(); depth + 1];
        let mut ands: Vec<Vec<u32>> = vec![Vec::new(); depth + 1];
        for (i, g) in c.gates().iter().enumerate() {
            let l = levels[g.out as usize] as usize;
            match g.kind {
                GateKind::Xor => local[l].push(i as u32),
                GateKind::And => ands[l].push(i as u32),
            }
        }
        // An open placed after gate g fires once every level reached by gates
        // before g is complete.
        let mut opens_at: Vec<Vec<usize>> = vec![Vec::new(); depth + 1];
        let mut prefix_max = 0u32;
        let mut reactive = c.reactive().iter().enumerate().peekable();
        for (i, g) in c.gates().iter().enumerate() {
            while let Some((k, _)) = reactive.next_if(|(_, r)| r.after_gate == i) {
                opens_at[prefix_max as usize].push(k);
            }
            prefix_max = prefix_max.max(levels[g.out as usize]);
        }
        for (k, _) in reactive {
            opens_at[prefix_max as usize].push(k);
        }

        let mut steps = Vec::new();
        let mut and_layers = 0;
        let mut and_count = 0;
        for l in 0..=depth {
            if l > 0 && !ands[l].is_empty() {
                and_layers += 1;
                and_count += ands[l].len() as u64;
                steps.push(Step::And(std::mem::take(&mut ands[l])));
            }
            if !local[l].is_empty() {
                steps.push(Step::Local(std::mem::take(&mut local[l])));
            }
            steps.extend(opens_at[l].iter().map(|&k| Step::Open(k)));
        }
        Schedule {
            steps,
            and_layers,
            and_count,
        }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Number of AND communication rounds.
    pub fn and_layers(&self) -> u32 {
        self.and_layers
    }

    pub fn and_count(&self) -> u64 {
        self.and_count
    }

    pub fn open_count(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s, Step::Open(_))).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{count_gates, CircuitBuilder};

    #[test]
    fn layers_equal_depth() {
        let mut b = CircuitBuilder::new();
        let x = b.input(0, 4);
        let p = b.and(x[0], x[1]);
        let q = b.and(x[2], x[3]);
        let r = b.xor(p, q);
        let s = b.and(r, x[0]);
        b.reactive_open(vec![s]);
        let t = b.and(x[1], x[2]);
        b.output(&[t]);
        let c = b.finish();
        let sched = Schedule::new(&c);
        assert_eq!(sched.and_layers(), count_gates(&c).depth_and);
        assert_eq!(sched.and_layers(), 3);
        assert_eq!(sched.open_count(), 1);
        let kinds: Vec<&str> = sched
            .steps()
            .iter()
            .map(|s| match s {
                Step::Local(_) => "L",
                Step::And(_) => "A",
                Step::Open(_) => "O",
            })
            .collect();
        assert_eq!(kinds, ["A", "L", "A", "O", "A"]);
    }
}
