//! Two near-identical hand-set models that disagree about which feature
//! matters once importance is measured by gradients instead of coefficients.
//!
//! `step:   c1 * [T > threshold] + c2 * H`
//! `smooth: sigmoid(c1 * (T - threshold) + c2 * H)`
//!
//! with traffic density `T` in [0, 10] and recent attack history `H` in
//! [0, 1].

use serde::{Deserialize, Serialize};

use super::{ImportanceMethod, ImportanceVector};
use crate::scalar::sigmoid;
use crate::{Error, Result};

pub const FEATURES: [&str; 2] = ["T", "H"];
const T_RANGE: (f64, f64) = (0.0, 10.0);
const H_RANGE: (f64, f64) = (0.0, 1.0);
const T_STEPS: usize = 101;
const H_STEPS: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToyVariant {
    Step,
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyModel {
    pub c1: f64,
    pub c2: f64,
    pub threshold: f64,
    pub variant: ToyVariant,
}

impl ToyModel {
    pub fn output(&self, t: f64, h: f64) -> f64 {
        match self.variant {
            ToyVariant::Step => self.c1 * f64::from(u8::from(t > self.threshold)) + self.c2 * h,
            ToyVariant::Smooth => sigmoid(self.c1 * (t - self.threshold) + self.c2 * h),
        }
    }

    /// Analytic partial derivatives `(d/dT, d/dH)`. The step's jump is
    /// measure-zero, so its T-derivative is 0 everywhere including the
    /// threshold itself.
    pub fn gradient(&self, t: f64, h: f64) -> (f64, f64) {
        match self.variant {
            ToyVariant::Step => (0.0, self.c2),
            ToyVariant::Smooth => {
                let s = sigmoid(self.c1 * (t - self.threshold) + self.c2 * h);
                let ds = s * (1.0 - s);
                (self.c1 * ds, self.c2 * ds)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientSample {
    pub t: f64,
    pub h: f64,
    pub d_t: f64,
    pub d_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantAlignment {
    pub model: ToyModel,
    pub coefficient: ImportanceVector,
    pub gradient: ImportanceVector,
    pub coefficient_top: String,
    pub gradient_top: String,
    pub agree: bool,
    /// Gradients on the evaluation grid, T-major.
    pub gradient_field: Vec<GradientSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub step: VariantAlignment,
    pub smooth: VariantAlignment,
    pub grid: [usize; 2],
}

fn top(v: &ImportanceVector) -> String {
    // ties resolve to the first feature
    let i = if v.scores[1].abs() > v.scores[0].abs() {
        1
    } else {
        0
    };
    FEATURES[i].to_string()
}

fn grid(steps: usize, (lo, hi): (f64, f64)) -> impl Iterator<Item = f64> {
    (0..steps).map(move |k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
}

fn align(model: ToyModel) -> VariantAlignment {
    let names: Vec<String> = FEATURES.iter().map(|s| s.to_string()).collect();
    let coefficient = ImportanceVector::new(
        ImportanceMethod::Coefficient,
        names.clone(),
        vec![model.c1.abs(), model.c2.abs()],
    );
    let gradient_field: Vec<GradientSample> = grid(T_STEPS, T_RANGE)
        .flat_map(|t| {
            grid(H_STEPS, H_RANGE).map(move |h| {
                let (d_t, d_h) = model.gradient(t, h);
                GradientSample { t, h, d_t, d_h }
            })
        })
        .collect();
    let n = gradient_field.len() as f64;
    let mean_abs =
        |f: fn(&GradientSample) -> f64| gradient_field.iter().map(|g| f(g).abs()).sum::<f64>() / n;
    let gradient = ImportanceVector::new(
        ImportanceMethod::Gradient,
        names,
        vec![mean_abs(|g| g.d_t), mean_abs(|g| g.d_h)],
    );
    let coefficient_top = top(&coefficient);
    let gradient_top = top(&gradient);
    VariantAlignment {
        model,
        agree: coefficient_top == gradient_top,
        coefficient,
        gradient,
        coefficient_top,
        gradient_top,
        gradient_field,
    }
}

/// Compares coefficient-based and mean-|gradient| importance for both
/// variants over the grid T in [0, 10] x H in [0, 1].
pub fn toy_alignment_demo(c1: f64, c2: f64, threshold: f64) -> Result<AlignmentReport> {
    if !(c1 >= 0.0 && c2 >= 0.0) || !threshold.is_finite() || !c1.is_finite() || !c2.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "toy model needs finite c1, c2 >= 0 (got {c1}, {c2}, threshold {threshold})"
        )));
    }
    let mk = |variant| ToyModel {
        c1,
        c2,
        threshold,
        variant,
    };
    Ok(AlignmentReport {
        step: align(mk(ToyVariant::Step)),
        smooth: align(mk(ToyVariant::Smooth)),
        grid: [T_STEPS, H_STEPS],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_parameters() {
        let r = toy_alignment_demo(0.9, 0.1, 7.0).unwrap();
        assert_eq!(r.step.coefficient_top, "T");
        assert_eq!(r.smooth.coefficient_top, "T");
        assert_eq!(r.step.gradient_top, "H");
        assert_eq!(r.smooth.gradient_top, "T");
        assert!(!r.step.agree && r.smooth.agree);
        assert!(r
            .step
            .gradient_field
            .iter()
            .all(|g| g.d_t == 0.0 && g.d_h == 0.1));
        let ratio = r.smooth.gradient.scores[0] / r.smooth.gradient.scores[1];
        assert!((ratio - 9.0).abs() < 1e-12);
    }

    #[test]
    fn smooth_gradient_matches_finite_differences() {
        let m = ToyModel {
            c1: 0.9,
            c2: 0.1,
            threshold: 7.0,
            variant: ToyVariant::Smooth,
        };
        let h = 1e-6;
        for (t, hh) in [(1.0, 0.2), (7.0, 0.5), (9.5, 1.0)] {
            let (dt, dh) = m.gradient(t, hh);
            let nt = (m.output(t + h, hh) - m.output(t - h, hh)) / (2.0 * h);
            let nh = (m.output(t, hh + h) - m.output(t, hh - h)) / (2.0 * h);
            assert!((dt - nt).abs() < 1e-8 && (dh - nh).abs() < 1e-8);
        }
    }

    #[test]
    fn argmax_invariant_to_joint_rescaling() {
        let base = toy_alignment_demo(0.9, 0.1, 7.0).unwrap();
        for k in [0.01, 0.5, 3.0, 100.0] {
            let r = toy_alignment_demo(0.9 * k, 0.1 * k, 7.0).unwrap();
            assert_eq!(r.step.gradient_top, base.step.gradient_top);
            assert_eq!(r.smooth.gradient_top, base.smooth.gradient_top);
            assert_eq!(r.step.coefficient_top, base.step.coefficient_top);
        }
    }

    #[test]
    fn rejects_negative_coefficients() {
        assert!(toy_alignment_demo(-0.1, 0.1, 7.0).is_err());
    }
}
