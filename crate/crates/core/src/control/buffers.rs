use std::collections::VecDeque;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::Transition;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Model-generated tuples per real tuple in a mixed batch.
pub const MODEL_TO_REAL_RATIO: usize = 10;

/// Separate FIFO buffers for real (`D_R`) and model-generated (`D_M`) experience.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayBuffers {
    real: VecDeque<Transition>,
    model: VecDeque<Transition>,
    real_capacity: usize,
    model_capacity: usize,
}

impl ReplayBuffers {
    pub fn new(real_capacity: usize, model_capacity: usize) -> Result<Self> {
        if real_capacity == 0 {
            return Err(Error::invalid("real buffer capacity must be positive"));
        }
        Ok(Self {
            real: VecDeque::new(),
            model: VecDeque::new(),
            real_capacity,
            model_capacity,
        })
    }

    pub fn push_real(&mut self, t: Transition) -> Result<()> {
        if t.model_generated {
            return Err(Error::State("model-generated transition offered to the real buffer".into()));
        }
        check(&t, self.real.front())?;
        push_bounded(&mut self.real, t, self.real_capacity);
        Ok(())
    }

    pub fn push_model(&mut self, t: Transition) -> Result<()> {
        if !t.model_generated {
            return Err(Error::State("real transition offered to the model buffer".into()));
        }
        check(&t, self.model.front().or(self.real.front()))?;
        push_bounded(&mut self.model, t, self.model_capacity);
        Ok(())
    }

    pub fn clear_model(&mut self) {
        self.model.clear();
    }

    pub fn real(&self) -> &VecDeque<Transition> {
        &self.real
    }

    pub fn model(&self) -> &VecDeque<Transition> {
        &self.model
    }

    pub fn real_len(&self) -> usize {
        self.real.len()
    }

    pub fn model_len(&self) -> usize {
        self.model.len()
    }

    /// Real tuples in a batch of `batch`: everything when `D_M` is empty,
    /// otherwise `max(1, batch / 11)`.
    pub fn real_count(&self, batch: usize) -> usize {
        if self.model.is_empty() {
            batch
        } else {
            (batch / (MODEL_TO_REAL_RATIO + 1)).max(1).min(batch)
        }
    }

    /// Uniform sampling with replacement within each buffer, real tuples first.
    pub fn sample(&self, batch: usize, rng: &mut Rng) -> Result<Vec<&Transition>> {
        if self.real.is_empty() {
            return Err(Error::State("cannot sample a batch from an empty real buffer".into()));
        }
        let n_real = self.real_count(batch);
        let mut out = Vec::with_capacity(batch);
        for _ in 0..n_real {
            out.push(&self.real[rng.random_range(0..self.real.len())]);
        }
        for _ in n_real..batch {
            out.push(&self.model[rng.random_range(0..self.model.len())]);
        }
        Ok(out)
    }
}

fn check(t: &Transition, reference: Option<&Transition>) -> Result<()> {
    t.validate()?;
    if let Some(r) = reference {
        if r.state.len() != t.state.len() || r.action.len() != t.action.len() {
            return Err(Error::invalid("transition dimensions differ from the buffer's"));
        }
    }
    Ok(())
}

fn push_bounded(q: &mut VecDeque<Transition>, t: Transition, cap: usize) {
    if cap == 0 {
        return;
    }
    if q.len() == cap {
        q.pop_front();
    }
    q.push_back(t);
}
