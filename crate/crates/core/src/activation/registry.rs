use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use super::kernels::{Aptx, Elu, LeakyRelu, Mish, Relu, Sigmoid, Swish, Tanh};
use super::{Activation, ActivationSpec, Kind};
use crate::{Error, Result};

/// Builds an activation from an already-validated spec.
pub type Factory = Arc<dyn Fn(&ActivationSpec) -> Arc<dyn Activation> + Send + Sync>;

/// Name-keyed table of activation factories.
#[derive(Clone, Default)]
pub struct Registry {
    factories: BTreeMap<String, Factory>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("names", &self.names())
            .finish()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// A registry with every [`Kind`] bound to its stock kernel.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Kind::Sigmoid.name(), |_| Arc::new(Sigmoid));
        r.register(Kind::Tanh.name(), |_| Arc::new(Tanh));
        r.register(Kind::Relu.name(), |_| Arc::new(Relu));
        r.register(Kind::LeakyRelu.name(), |s| {
            Arc::new(LeakyRelu {
                slope: s.leak_alpha,
            })
        });
        r.register(Kind::Elu.name(), |s| Arc::new(Elu { alpha: s.elu_alpha }));
        r.register(Kind::Swish.name(), |s| Arc::new(Swish { rho: s.swish_rho }));
        r.register(Kind::Mish.name(), |_| Arc::new(Mish));
        r.register(Kind::Aptx.name(), |s| Arc::new(Aptx::from_spec(s)));
        r
    }

    /// Shared registry holding the stock kernels.
    pub fn builtin() -> &'static Registry {
        static BUILTIN: OnceLock<Registry> = OnceLock::new();
        BUILTIN.get_or_init(Registry::with_builtins)
    }

    /// Bind `name` to `factory`, replacing any previous binding.
    pub fn register<F>(&mut self, name: &str, factory: F) -> &mut Self
    where
        F: Fn(&ActivationSpec) -> Arc<dyn Activation> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_owned(), Arc::new(factory));
        self
    }

    pub fn factory(&self, name: &str) -> Option<&Factory> {
        self.factories.get(name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    /// Validate `spec` and build the activation registered under its kind.
    pub fn resolve(&self, spec: &ActivationSpec) -> Result<Arc<dyn Activation>> {
        spec.validate()?;
        let factory = self.factories.get(spec.kind.name()).ok_or_else(|| {
            Error::config(format!(
                "no activation registered as `{}`",
                spec.kind.name()
            ))
        })?;
        Ok(factory(spec))
    }
}
