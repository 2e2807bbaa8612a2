use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::hybrid::HybridState;

#[derive(Debug, Clone, PartialEq)]
pub struct ArcSample<S> {
    pub t: f64,
    pub j: usize,
    /// Integration step index; `t = step · dt`.
    pub step: usize,
    pub state: S,
}

/// Samples of a solution on a hybrid time domain, with named monitor columns.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridArc<S> {
    pub dt: f64,
    pub samples: Vec<ArcSample<S>>,
    pub monitors: Vec<(String, Vec<f64>)>,
}

impl<S: HybridState> HybridArc<S> {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            samples: Vec::new(),
            monitors: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> &ArcSample<S> {
        self.samples.last().expect("arc has at least the initial sample")
    }

    pub fn jump_count(&self) -> usize {
        self.last().j
    }

    /// True when sample `i` was produced by a jump.
    pub fn is_jump(&self, i: usize) -> bool {
        i > 0 && self.samples[i].j > self.samples[i - 1].j
    }

    /// Indices of jump samples.
    pub fn jump_indices(&self) -> Vec<usize> {
        (1..self.samples.len()).filter(|&i| self.is_jump(i)).collect()
    }

    /// Evaluates `f` at every sample and stores it as a named column,
    /// replacing any column of the same name.
    pub fn add_monitor(&mut self, name: &str, f: impl Fn(&ArcSample<S>) -> f64) {
        let column: Vec<f64> = self.samples.iter().map(f).collect();
        if let Some(slot) = self.monitors.iter_mut().find(|(n, _)| n == name) {
            slot.1 = column;
        } else {
            self.monitors.push((name.to_string(), column));
        }
    }

    pub fn with_monitor(mut self, name: &str, f: impl Fn(&ArcSample<S>) -> f64) -> Self {
        self.add_monitor(name, f);
        self
    }

    pub fn monitor(&self, name: &str) -> Option<&[f64]> {
        self.monitors.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }

    /// Checks that `(t, j)` is a hybrid time domain: `t` strictly increases
    /// within each `j`, and `j` grows by exactly one across a jump with `t`
    /// unchanged.
    pub fn check_time_domain(&self) -> std::result::Result<(), String> {
        for (i, w) in self.samples.windows(2).enumerate() {
            let (a, b) = (&w[0], &w[1]);
            if b.j == a.j {
                if b.t <= a.t {
                    return Err(format!("t not increasing at sample {}", i + 1));
                }
            } else if b.j == a.j + 1 {
                if b.t != a.t {
                    return Err(format!("t changed across jump at sample {}", i + 1));
                }
            } else {
                return Err(format!("j moved from {} to {} at sample {}", a.j, b.j, i + 1));
            }
        }
        for (name, col) in &self.monitors {
            if col.len() != self.samples.len() {
                return Err(format!("monitor {name} has {} values", col.len()));
            }
        }
        Ok(())
    }

    /// CSV with columns `t, j`, the state components and the monitors; reals
    /// carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let mut header = vec!["t".to_string(), "j".to_string()];
        if let Some(first) = self.samples.first() {
            header.extend(first.state.component_names());
        }
        header.extend(self.monitors.iter().map(|(n, _)| n.clone()));
        s.push_str(&header.join(","));
        s.push('\n');
        for (i, sample) in self.samples.iter().enumerate() {
            let _ = write!(s, "{:.16e},{}", sample.t, sample.j);
            for c in sample.state.components() {
                let _ = write!(s, ",{c:.16e}");
            }
            for (_, col) in &self.monitors {
                let _ = write!(s, ",{:.16e}", col[i]);
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}
