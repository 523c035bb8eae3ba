//! Activation strategies.
//!
//! Each activation is a small [`Kernel`] implementation written once,
//! generically over the float type, and exposed to the rest of the crate as a
//! `dyn Activation` trait object. The [`Registry`] maps a kind name to a
//! factory that turns an [`ActivationSpec`] into such an object.

mod kernels;
mod registry;
mod spec;

use std::fmt;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use kernels::{
    Aptx, Elu, LeakyRelu, Mish, PiecewiseMishApproximant, Relu, Sigmoid, Swish, Tanh,
};
pub use registry::{Factory, Registry};
pub use spec::{ActivationSpec, Kind};

/// `f(x)` and `f'(x)` evaluated together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueGrad {
    pub value: f64,
    pub grad: f64,
}

/// An elementwise activation function with its analytic derivative.
///
/// Scalar methods are 64-bit. The slice methods exist so throughput
/// benchmarks and the trainer pay one dynamic dispatch per array, not per
/// element; they must produce exactly what the scalar path would.
pub trait Activation: Send + Sync + fmt::Debug {
    /// Short display name, e.g. `aptx(1,0.5,0.5)`.
    fn name(&self) -> String;

    fn value(&self, x: f64) -> f64;

    fn grad(&self, x: f64) -> f64;

    /// Value and derivative sharing intermediate results.
    fn value_grad(&self, x: f64) -> ValueGrad;

    fn forward_f64(&self, xs: &[f64], out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = self.value(x);
        }
    }

    fn derivative_f64(&self, xs: &[f64], out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = self.grad(x);
        }
    }

    fn fused_f64(&self, xs: &[f64], values: &mut [f64], grads: &mut [f64]) {
        for ((v, g), &x) in values.iter_mut().zip(grads.iter_mut()).zip(xs) {
            let vg = self.value_grad(x);
            *v = vg.value;
            *g = vg.grad;
        }
    }

    fn forward_f32(&self, xs: &[f32], out: &mut [f32]);

    fn derivative_f32(&self, xs: &[f32], out: &mut [f32]);

    fn fused_f32(&self, xs: &[f32], values: &mut [f32], grads: &mut [f32]);
}

/// Generic scalar form of an activation. Anything implementing `Kernel` is
/// an [`Activation`] through the blanket impl below.
pub trait Kernel: Send + Sync + fmt::Debug {
    fn label(&self) -> String;

    fn value<T: Float>(&self, x: T) -> T;

    fn grad<T: Float>(&self, x: T) -> T;

    fn value_grad<T: Float>(&self, x: T) -> (T, T) {
        (self.value(x), self.grad(x))
    }
}

impl<K: Kernel> Activation for K {
    fn name(&self) -> String {
        self.label()
    }

    #[inline]
    fn value(&self, x: f64) -> f64 {
        Kernel::value(self, x)
    }

    #[inline]
    fn grad(&self, x: f64) -> f64 {
        Kernel::grad(self, x)
    }

    #[inline]
    fn value_grad(&self, x: f64) -> ValueGrad {
        let (value, grad) = Kernel::value_grad(self, x);
        ValueGrad { value, grad }
    }

    fn forward_f64(&self, xs: &[f64], out: &mut [f64]) {
        map_into(xs, out, |x| Kernel::value(self, x));
    }

    fn derivative_f64(&self, xs: &[f64], out: &mut [f64]) {
        map_into(xs, out, |x| Kernel::grad(self, x));
    }

    fn fused_f64(&self, xs: &[f64], values: &mut [f64], grads: &mut [f64]) {
        fused_into(xs, values, grads, |x| Kernel::value_grad(self, x));
    }

    fn forward_f32(&self, xs: &[f32], out: &mut [f32]) {
        map_into(xs, out, |x| Kernel::value(self, x));
    }

    fn derivative_f32(&self, xs: &[f32], out: &mut [f32]) {
        map_into(xs, out, |x| Kernel::grad(self, x));
    }

    fn fused_f32(&self, xs: &[f32], values: &mut [f32], grads: &mut [f32]) {
        fused_into(xs, values, grads, |x| Kernel::value_grad(self, x));
    }
}

#[inline]
fn map_into<T: Copy>(xs: &[T], out: &mut [T], f: impl Fn(T) -> T) {
    assert_eq!(xs.len(), out.len(), "output length must match input length");
    for (o, &x) in out.iter_mut().zip(xs) {
        *o = f(x);
    }
}

#[inline]
fn fused_into<T: Copy>(xs: &[T], values: &mut [T], grads: &mut [T], f: impl Fn(T) -> (T, T)) {
    assert_eq!(
        xs.len(),
        values.len(),
        "output length must match input length"
    );
    assert_eq!(
        xs.len(),
        grads.len(),
        "output length must match input length"
    );
    for ((v, g), &x) in values.iter_mut().zip(grads.iter_mut()).zip(xs) {
        let (fv, fg) = f(x);
        *v = fv;
        *g = fg;
    }
}

fn check_input(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("input must be finite, got {x}")))
    }
}

/// Evaluate `f(x)` for the activation described by `spec`.
pub fn eval(spec: &ActivationSpec, x: f64) -> Result<f64> {
    let act = Registry::builtin().resolve(spec)?;
    check_input(x)?;
    Ok(act.value(x))
}

/// Evaluate `f(x)` and `f'(x)`.
pub fn eval_grad(spec: &ActivationSpec, x: f64) -> Result<ValueGrad> {
    let act = Registry::builtin().resolve(spec)?;
    check_input(x)?;
    Ok(act.value_grad(x))
}

/// Elementwise [`eval`]. The first non-finite input is reported by index.
pub fn eval_batch(spec: &ActivationSpec, xs: &[f64]) -> Result<Vec<f64>> {
    let act = Registry::builtin().resolve(spec)?;
    if let Some((index, &x)) = xs.iter().enumerate().find(|(_, x)| !x.is_finite()) {
        return Err(Error::Element {
            index,
            source: Box::new(Error::domain(format!("input must be finite, got {x}"))),
        });
    }
    let mut out = vec![0.0; xs.len()];
    act.forward_f64(xs, &mut out);
    Ok(out)
}

/// Largest `|x|` accepted by [`mish_grad_closed_form`].
pub const MISH_CLOSED_FORM_LIMIT: f64 = 200.0;

/// MISH derivative in the rational-exponential closed form
///
/// ```text
/// e^x (4(x+1) + 4e^{2x} + e^{3x} + e^x (4x+6)) / (2e^x + e^{2x} + 2)^2
/// ```
///
/// kept separate from the MISH kernel's own derivative so the two can be
/// cross-checked. Above `x = 30` numerator and denominator are both divided
/// by `e^{4x}` before evaluation.
pub fn mish_grad_closed_form(x: f64) -> Result<f64> {
    check_input(x)?;
    if x.abs() > MISH_CLOSED_FORM_LIMIT {
        return Err(Error::domain(format!(
            "closed-form MISH derivative is only evaluated for |x| <= {MISH_CLOSED_FORM_LIMIT}, got {x}"
        )));
    }
    if x > 30.0 {
        let e1 = (-x).exp();
        let e2 = (-2.0 * x).exp();
        let e3 = (-3.0 * x).exp();
        let num = 4.0 * (x + 1.0) * e3 + 4.0 * e1 + 1.0 + (4.0 * x + 6.0) * e2;
        let den = 2.0 * e1 + 1.0 + 2.0 * e2;
        Ok(num / (den * den))
    } else {
        let e1 = x.exp();
        let e2 = (2.0 * x).exp();
        let e3 = (3.0 * x).exp();
        let num = e1 * (4.0 * (x + 1.0) + 4.0 * e2 + e3 + e1 * (4.0 * x + 6.0));
        let den = 2.0 * e1 + e2 + 2.0;
        Ok(num / (den * den))
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn scalar_examples() {
        assert_eq!(eval(&ActivationSpec::new(Kind::Sigmoid), 0.0).unwrap(), 0.5);
        assert_eq!(eval(&ActivationSpec::new(Kind::Relu), -3.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            eval(&ActivationSpec::leaky_relu(0.05), -2.0).unwrap(),
            -0.1,
            epsilon = 1e-15
        );
        assert_eq!(
            eval(&ActivationSpec::aptx(1.0, 1.0, 0.5), 0.0).unwrap(),
            0.0
        );
        // mpmath, 40 digits: 0.86509838826731034611...
        assert_abs_diff_eq!(
            eval(&ActivationSpec::new(Kind::Mish), 1.0).unwrap(),
            0.865_098_388_267_310_3,
            epsilon = 1e-14
        );
        assert_eq!(eval(&ActivationSpec::new(Kind::Mish), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn grad_examples() {
        let g = eval_grad(&ActivationSpec::aptx(1.0, 1.0, 0.5), 0.0).unwrap();
        assert_eq!(g.grad, 0.5);
        let g = eval_grad(&ActivationSpec::new(Kind::Mish), 0.0).unwrap();
        assert_abs_diff_eq!(g.grad, 0.6, epsilon = 1e-15);
        assert_eq!(
            eval_grad(&ActivationSpec::new(Kind::Relu), -1.0)
                .unwrap()
                .grad,
            0.0
        );
        assert_eq!(
            eval_grad(&ActivationSpec::new(Kind::Sigmoid), 0.0)
                .unwrap()
                .grad,
            0.25
        );
    }

    #[test]
    fn kink_derivatives_take_left_branch() {
        assert_eq!(
            eval_grad(&ActivationSpec::new(Kind::Relu), 0.0)
                .unwrap()
                .grad,
            0.0
        );
        assert_eq!(
            eval_grad(&ActivationSpec::leaky_relu(0.05), 0.0)
                .unwrap()
                .grad,
            0.05
        );
        let elu = eval_grad(&ActivationSpec::elu(2.0), 0.0).unwrap();
        assert_eq!(elu.value, 0.0);
        assert_eq!(elu.grad, 2.0);
    }

    #[test]
    fn batch_examples() {
        let relu = ActivationSpec::new(Kind::Relu);
        assert_eq!(
            eval_batch(&relu, &[-1.0, 0.0, 2.0]).unwrap(),
            vec![0.0, 0.0, 2.0]
        );
        assert!(eval_batch(&ActivationSpec::aptx(1.0, 1.0, 0.5), &[])
            .unwrap()
            .is_empty());
        let sig = ActivationSpec::new(Kind::Sigmoid);
        assert_eq!(eval_batch(&sig, &[0.0; 3]).unwrap(), vec![0.5; 3]);
    }

    #[test]
    fn batch_reports_first_bad_index() {
        let err = eval_batch(
            &ActivationSpec::new(Kind::Tanh),
            &[0.0, 1.0, f64::NAN, f64::INFINITY],
        )
        .unwrap_err();
        match err {
            Error::Element { index, .. } => assert_eq!(index, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_non_finite_input() {
        let spec = ActivationSpec::new(Kind::Mish);
        assert!(matches!(eval(&spec, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(
            eval_grad(&spec, f64::NEG_INFINITY),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rejects_degenerate_aptx() {
        assert!(matches!(
            eval(&ActivationSpec::aptx(1.0, 0.0, 0.5), 1.0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            eval(&ActivationSpec::aptx(1.0, 1.0, 0.0), 1.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn closed_form_examples() {
        assert_abs_diff_eq!(mish_grad_closed_form(0.0).unwrap(), 0.6, epsilon = 1e-15);
        assert!(mish_grad_closed_form(-50.0).unwrap().abs() < 1e-18);
        // mpmath: 1.0000000783129834727...
        assert_abs_diff_eq!(mish_grad_closed_form(10.0).unwrap(), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(
            mish_grad_closed_form(10.0).unwrap(),
            1.000_000_078_312_983_5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn closed_form_branches_agree_at_switch() {
        let below = mish_grad_closed_form(30.0).unwrap();
        let above = mish_grad_closed_form(30.0 + 1e-12).unwrap();
        assert_abs_diff_eq!(below, above, epsilon = 1e-14);
        assert!(mish_grad_closed_form(200.0).unwrap().is_finite());
        assert!(mish_grad_closed_form(-200.0).unwrap().is_finite());
    }

    #[test]
    fn closed_form_rejects_out_of_range() {
        assert!(matches!(
            mish_grad_closed_form(200.5),
            Err(Error::Domain(_))
        ));
        assert!(matches!(mish_grad_closed_form(-1e3), Err(Error::Domain(_))));
        assert!(matches!(
            mish_grad_closed_form(f64::NAN),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn finite_up_to_700() {
        for kind in Kind::ALL {
            let act = Registry::builtin()
                .resolve(&ActivationSpec::new(kind))
                .unwrap();
            for x in [-700.0, -300.0, -50.0, 50.0, 300.0, 700.0] {
                let vg = act.value_grad(x);
                assert!(
                    vg.value.is_finite() && vg.grad.is_finite(),
                    "{kind:?} at {x}: {vg:?}"
                );
            }
        }
    }

    #[test]
    fn slice_paths_match_scalar_bitwise() {
        let xs: Vec<f64> = (-200..=200).map(|i| i as f64 * 0.173).collect();
        for kind in Kind::ALL {
            let act = Registry::builtin()
                .resolve(&ActivationSpec::new(kind))
                .unwrap();
            let mut v = vec![0.0; xs.len()];
            let mut g = vec![0.0; xs.len()];
            let mut d = vec![0.0; xs.len()];
            act.fused_f64(&xs, &mut v, &mut g);
            act.derivative_f64(&xs, &mut d);
            for (i, &x) in xs.iter().enumerate() {
                let vg = act.value_grad(x);
                assert_eq!(
                    v[i].to_bits(),
                    act.value(x).to_bits(),
                    "{kind:?} value at {x}"
                );
                assert_eq!(
                    vg.value.to_bits(),
                    act.value(x).to_bits(),
                    "{kind:?} fused value at {x}"
                );
                assert_eq!(
                    d[i].to_bits(),
                    act.grad(x).to_bits(),
                    "{kind:?} grad at {x}"
                );
                assert!(
                    (g[i] - d[i]).abs() <= 1e-15 * d[i].abs().max(1.0),
                    "{kind:?} at {x}"
                );
            }
        }
    }
}
