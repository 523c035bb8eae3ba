use num_traits::Float;

use super::{ActivationSpec, Kernel};

#[inline(always)]
fn c<T: Float>(v: f64) -> T {
    T::from(v).unwrap()
}

/// `1 / (1 + e^{-z})`, evaluated on the side where the exponential cannot overflow.
#[inline(always)]
pub(crate) fn sigmoid<T: Float>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Above this input, softplus is evaluated as `x + ln(1 + e^{-x})`.
pub(crate) const SOFTPLUS_SWITCH: f64 = 20.0;

/// `ln(1 + e^x)` together with `sigmoid(x)`, which shares its exponential.
#[inline(always)]
fn softplus_sigmoid<T: Float>(x: T) -> (T, T) {
    if x > c(SOFTPLUS_SWITCH) {
        let e = (-x).exp();
        (x + e.ln_1p(), T::one() / (T::one() + e))
    } else {
        let e = x.exp();
        (e.ln_1p(), e / (T::one() + e))
    }
}

#[inline(always)]
fn softplus<T: Float>(x: T) -> T {
    if x > c(SOFTPLUS_SWITCH) {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sigmoid;

impl Kernel for Sigmoid {
    fn label(&self) -> String {
        "sigmoid".into()
    }

    #[inline(always)]
    fn value<T: Float>(&self, x: T) -> T {
        sigmoid(x)
    }

    #[inline(always)]
    fn grad<T: Float>(&self, x: T) -> T {
        let s = sigmoid(x);
        s * (T::one() - s)
    }

    #[inline(always)]
    fn value_grad<T: Float>(&self, x: T) -> (T, T) {
        let s = sigmoid(x);
        (s, s * (T::one() - s))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Tanh;

impl Kernel for Tanh {
    fn label(&self) -> String {
        "tanh".into()
    }

    #[inline(always)]
    fn value<T: Float>(&self, x: T) -> T {
        x.tanh()
    }

    #[inline(always)]
    fn grad<T: Float>(&self, x: T) -> T {
        let t = x.tanh();
        T::one() - t * t
    }

    #[inline(always)]
    fn value_grad<T: Float>(&self, x: T) -> (T, T) {
        let t = x.tanh();
        (t, T::one() - t * t)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Relu;

impl Kernel for Relu {
    fn label(&self) -> String {
        "relu".into()
    }

    #[inline(always)]
    fn value<T: Float>(&self, x: T) -> T {
        if x > T::zero() {
            x
        } else {
            T::zero()
        }
    }

    #[inline(always)]
    fn grad<T: Float>(&self, x: T) -> T {
        if x > T::zero() {
            T::one()
        } else {
            T::zero()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LeakyRelu {
    pub slope: f64,
}

impl Kernel for LeakyRelu {
    fn label(&self) -> String {
        format!("leaky_relu:alpha={}", self.slope)
    }

    #[inline(always)]
    fn value<T: Float>(&self, x: T) -> T {
        if x > T::zero() {
            x
        } else {
            c::<T>(self.slope) * x
        }
    }

    #[inline(always)]
    fn grad<T: Float>(&self, x: T) -> T {
        if x > T::zero() {
            T::one()
        } else {
            c(self.slope)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Elu {
    pub alpha: f64,
}

impl Kernel for Elu {
    fn label(&self) -> String {
        format!("elu:alpha={}", self.alpha)
    }

    #[inline(always)]
    fn value<T: Float>(&self, x: T) -> T {
        if x > T::zero() {
            x
        } else {
            c::<T>(self.alpha) * (x.exp() - T::one())
        }
    }

    #[inline(always)]
    fn grad<T: Float>(&self, x: T) -> T {
        if x > T::zero() {
            T::one()
        } else {
            c::<T>(self.alpha) * x.exp()
        }
    }

    #[inline(always)]
    fn value_grad<T: Float>(&self, x: T) -> (T, T) {
        if x > T::zero() {
            (x, T::one())
        } else {
            let a = c::<T>(self.alpha);
            let e = x.exp();
            (a * (e - T::one()), a * e)
        }
    }
}

/// `x * sigmoid(rho * x)`.
#[derive(Debug, Clone, Copy)]
pub struct Swish {
    pub rho: f64,
}

impl Kernel for Swish {
    fn label(&self) -> String {
        format!("swish:rho={}", self.rho)
    }

    #[inline(always)]
    fn value<T: Float>(&self, x: T) -> T {
        x * sigmoid(c::<T>(self.rho) * x)
    }

    #[inline(always)]
    fn grad<T: Float>(&self, x: T) -> T {
        self.value_grad(x).1
    }

    #[inline(always)]
    fn value_grad<T: Float>(&self, x: T) -> (T, T) {
        let z = c::<T>(self.rho) * x;
        let s = sigmoid(z);
        (x * s, s + z * (s * (T::one() - s)))
    }
}

/// `x * tanh(softplus(x))`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Mish;

impl Kernel for Mish {
    fn label(&self) -> String {
        "mish".into()
    }

    #[inline(always)]
    fn value<T: Float>(&self, x: T) -> T {
        x * softplus(x).tanh()
    }

    #[inline(always)]
    fn grad<T: Float>(&self, x: T) -> T {
        self.value_grad(x).1
    }

    #[inline(always)]
    fn value_grad<T: Float>(&self, x: T) -> (T, T) {
        let (sp, s) = softplus_sigmoid(x);
        let t = sp.tanh();
        (x * t, t + x * s * (T::one() - t * t))
    }
}

/// `(alpha + tanh(beta * x)) * gamma * x`.
#[derive(Debug, Clone, Copy)]
pub struct Aptx {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Aptx {
    pub fn from_spec(spec: &ActivationSpec) -> Self {
        Self {
            alpha: spec.aptx_alpha,
            beta: spec.aptx_beta,
            gamma: spec.aptx_gamma,
        }
    }
}

impl Kernel for Aptx {
    fn label(&self) -> String {
        format!(
            "aptx:alpha={},beta={},gamma={}",
            self.alpha, self.beta, self.gamma
        )
    }

    #[inline(always)]
    fn value<T: Float>(&self, x: T) -> T {
        let t = (c::<T>(self.beta) * x).tanh();
        (c::<T>(self.alpha) + t) * (c::<T>(self.gamma) * x)
    }

    #[inline(always)]
    fn grad<T: Float>(&self, x: T) -> T {
        let bx = c::<T>(self.beta) * x;
        let t = bx.tanh();
        c::<T>(self.gamma) * (c::<T>(self.alpha) + t + bx * (T::one() - t * t))
    }

    #[inline(always)]
    fn value_grad<T: Float>(&self, x: T) -> (T, T) {
        let (a, g) = (c::<T>(self.alpha), c::<T>(self.gamma));
        let bx = c::<T>(self.beta) * x;
        let t = bx.tanh();
        ((a + t) * (g * x), g * (a + t + bx * (T::one() - t * t)))
    }
}

/// APTx with `beta = 1/2` for `x < 0` and `beta = 1` for `x >= 0`
/// (`alpha = 1`, `gamma = 1/2` on both sides). Both halves have value 0 and
/// slope 1/2 at the origin.
#[derive(Debug, Clone, Copy, Default)]
pub struct PiecewiseMishApproximant;

impl PiecewiseMishApproximant {
    pub const NEGATIVE: Aptx = Aptx {
        alpha: 1.0,
        beta: 0.5,
        gamma: 0.5,
    };
    pub const POSITIVE: Aptx = Aptx {
        alpha: 1.0,
        beta: 1.0,
        gamma: 0.5,
    };

    #[inline(always)]
    fn branch<T: Float>(x: T) -> &'static Aptx {
        if x < T::zero() {
            &Self::NEGATIVE
        } else {
            &Self::POSITIVE
        }
    }
}

impl Kernel for PiecewiseMishApproximant {
    fn label(&self) -> String {
        "aptx_piecewise".into()
    }

    #[inline(always)]
    fn value<T: Float>(&self, x: T) -> T {
        Self::branch(x).value(x)
    }

    #[inline(always)]
    fn grad<T: Float>(&self, x: T) -> T {
        Kernel::grad(Self::branch(x), x)
    }

    #[inline(always)]
    fn value_grad<T: Float>(&self, x: T) -> (T, T) {
        Kernel::value_grad(Self::branch(x), x)
    }
}
