//! Central finite-difference checks of analytic gradients.

use super::graph::{Graph, Var};
use super::params::{GradBuffer, ParamStore};
use super::tensor::Tensor;

/// Per-tensor comparison of analytic and numerical gradients.
#[derive(Debug, Clone)]
pub struct GradCheckEntry {
    pub name: String,
    pub rel_error: f64,
    pub analytic_norm: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.entries.iter().map(|e| e.rel_error).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&GradCheckEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
    }

    /// True when some checked gradient is not identically zero.
    pub fn any_signal(&self) -> bool {
        self.entries.iter().any(|e| e.analytic_norm > 0.0)
    }
}

/// Relative error `‖a − n‖ / max(‖a‖, ‖n‖, floor)` between two gradients.
pub fn relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, n)| (a - n) * (a - n)).sum::<f64>().sqrt();
    let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / na.max(nn).max(floor)
}

const NORM_FLOOR: f64 = 1e-6;

/// Checks d(loss)/d(every parameter) and d(loss)/d(every input) with step `h`.
///
/// `loss` builds a scalar from a fresh graph over `store`, given the input
/// tensors as graph leaves.
pub fn check_gradients<F>(store: &ParamStore, inputs: &[Tensor], h: f64, loss: F) -> GradCheckReport
where
    F: Fn(&mut Graph, &[Var]) -> Var,
{
    let eval = |s: &ParamStore, ins: &[Tensor]| -> f64 {
        let mut g = Graph::new(s);
        let vars: Vec<Var> = ins.iter().map(|t| g.input(t.clone())).collect();
        let l = loss(&mut g, &vars);
        g.value(l).data()[0]
    };

    let mut g = Graph::new(store);
    let vars: Vec<Var> = inputs.iter().map(|t| g.input(t.clone())).collect();
    let l = loss(&mut g, &vars);
    let grads = g.backward(l);
    let mut buffer = GradBuffer::zeros_like(store);
    grads.accumulate(&mut buffer, 1.0);

    let mut entries = Vec::new();
    let mut work = store.clone();
    for id in store.ids() {
        let n = store.get(id).len();
        let mut numeric = vec![0.0; n];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let orig = work.get(id).data()[i];
            work.get_mut(id).data_mut()[i] = orig + h;
            let plus = eval(&work, inputs);
            work.get_mut(id).data_mut()[i] = orig - h;
            let minus = eval(&work, inputs);
            work.get_mut(id).data_mut()[i] = orig;
            *slot = (plus - minus) / (2.0 * h);
        }
        let analytic = buffer.get(id).data();
        entries.push(GradCheckEntry {
            name: store.name(id).to_string(),
            rel_error: relative_error(analytic, &numeric, NORM_FLOOR),
            analytic_norm: buffer.get(id).norm(),
        });
    }

    let mut work_inputs = inputs.to_vec();
    for (k, var) in vars.iter().enumerate() {
        let n = inputs[k].len();
        let analytic = grads
            .wrt(*var)
            .map(|t| t.data().to_vec())
            .unwrap_or_else(|| vec![0.0; n]);
        let mut numeric = vec![0.0; n];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let orig = work_inputs[k].data()[i];
            work_inputs[k].data_mut()[i] = orig + h;
            let plus = eval(store, &work_inputs);
            work_inputs[k].data_mut()[i] = orig - h;
            let minus = eval(store, &work_inputs);
            work_inputs[k].data_mut()[i] = orig;
            *slot = (plus - minus) / (2.0 * h);
        }
        let norm = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
        entries.push(GradCheckEntry {
            name: format!("input[{k}]"),
            rel_error: relative_error(&analytic, &numeric, NORM_FLOOR),
            analytic_norm: norm,
        });
    }
    GradCheckReport { entries }
}
