//! Iterate sequences with per-step diagnostics, shared by the gradient-flow
//! oracle and all the hill-climbing algorithms.

use crate::density::ModeList;
use crate::point::{cosine, dist, Point};

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    /// Endpoint was snapped to the listed mode with this index.
    ConvergedToMode(usize),
    /// Stopped by the algorithm's own convergence rule (tiny gradient,
    /// no improving point, or sub-tolerance displacement).
    NearCritical,
    MaxIterations,
    /// A guard tripped: empty kernel window, step-size underflow, or a
    /// gradient guard for algorithms that carry one.
    Stalled,
}

impl Terminal {
    pub fn as_str(&self) -> String {
        match self {
            Terminal::ConvergedToMode(i) => format!("converged_to_mode:{i}"),
            Terminal::NearCritical => "near_critical".into(),
            Terminal::MaxIterations => "max_iterations".into(),
            Terminal::Stalled => "stalled".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub points: Vec<Point>,
    /// Density values at the points (the shadow-KDE values for Mean Shift,
    /// which is the function that algorithm actually climbs).
    pub f_values: Vec<f64>,
    /// `||x_{k+1} - x_k||`, one per step.
    pub step_lengths: Vec<f64>,
    /// Cosine between each step and the gradient at the step's start;
    /// NaN when either vector vanishes.
    pub align_cosines: Vec<f64>,
    pub terminal: Terminal,
}

impl Trajectory {
    pub fn start(x0: Point, f0: f64) -> Self {
        Trajectory {
            points: vec![x0],
            f_values: vec![f0],
            step_lengths: Vec::new(),
            align_cosines: Vec::new(),
            terminal: Terminal::NearCritical,
        }
    }

    /// Append a step, deriving its length and alignment against the supplied
    /// gradient at the previous point.
    pub fn push(&mut self, x: Point, f: f64, grad_at_prev: &[f64]) {
        let prev = self.points.last().expect("trajectory never empty");
        let step: Vec<f64> = x.iter().zip(prev).map(|(a, b)| a - b).collect();
        self.step_lengths.push(dist(&x, prev));
        self.align_cosines
            .push(cosine(&step, grad_at_prev).unwrap_or(f64::NAN));
        self.points.push(x);
        self.f_values.push(f);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of shifts taken.
    pub fn n_steps(&self) -> usize {
        self.step_lengths.len()
    }

    pub fn endpoint(&self) -> &Point {
        self.points.last().expect("trajectory never empty")
    }

    pub fn arc_length(&self) -> f64 {
        self.step_lengths.iter().sum()
    }

    /// Upgrade a `NearCritical` terminal to `ConvergedToMode` when the
    /// endpoint lies within `radius` of a listed mode.
    pub fn snap_to_modes(&mut self, modes: &ModeList, radius: f64) {
        if matches!(self.terminal, Terminal::NearCritical) {
            if let Some(i) = modes.match_point(self.endpoint(), radius) {
                self.terminal = Terminal::ConvergedToMode(i);
            }
        }
    }

    /// CSV dump: `iteration,x_0..x_{d-1},f,step_length,align_cosine,terminal`.
    /// The terminal string appears only on the last row.
    pub fn dump_csv(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        let d = self.points.first().map_or(0, |p| p.len());
        write!(w, "iteration")?;
        for a in 0..d {
            write!(w, ",x_{a}")?;
        }
        writeln!(w, ",f,step_length,align_cosine,terminal")?;
        for (k, p) in self.points.iter().enumerate() {
            write!(w, "{k}")?;
            for v in p {
                write!(w, ",{}", crate::csvio::fmt_f64(*v))?;
            }
            write!(w, ",{}", crate::csvio::fmt_f64(self.f_values[k]))?;
            if k == 0 {
                write!(w, ",,")?;
            } else {
                write!(
                    w,
                    ",{},{}",
                    crate::csvio::fmt_f64(self.step_lengths[k - 1]),
                    crate::csvio::fmt_f64(self.align_cosines[k - 1])
                )?;
            }
            if k + 1 == self.points.len() {
                writeln!(w, ",{}", self.terminal.as_str())?;
            } else {
                writeln!(w, ",")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_tracks_lengths_and_alignment() {
        let mut t = Trajectory::start(vec![0.0, 0.0], 1.0);
        t.push(vec![1.0, 0.0], 2.0, &[2.0, 0.0]);
        assert_eq!(t.n_steps(), 1);
        assert_eq!(t.step_lengths[0], 1.0);
        assert!((t.align_cosines[0] - 1.0).abs() < 1e-15);
        assert_eq!(t.endpoint(), &vec![1.0, 0.0]);
        assert_eq!(t.arc_length(), 1.0);
    }

    #[test]
    fn csv_dump_shape() {
        let mut t = Trajectory::start(vec![0.5], 0.2);
        t.push(vec![0.7], 0.3, &[1.0]);
        let mut buf = Vec::new();
        t.dump_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("iteration,x_0,f,"));
        assert!(lines[2].ends_with("near_critical"));
    }
}
