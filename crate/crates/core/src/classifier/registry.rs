use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use super::{load_backend, Backend, BackendKind, ClassTaxonomy, ClassifierError, ModelConfig, Normalization};

static NEXT_INSTANCE: AtomicU64 = AtomicU64::new(1);

struct LoadedModel {
    instance_id: u64,
    backend: Box<dyn Backend>,
    taxonomy: ClassTaxonomy,
    normalization: Normalization,
}

/// Shared reference to a loaded model. Cheap to clone; prediction through a
/// handle takes no locks.
#[derive(Clone)]
pub struct ModelHandle {
    model: Arc<LoadedModel>,
    load_count: u64,
}

impl ModelHandle {
    pub fn instance_id(&self) -> u64 {
        self.model.instance_id
    }

    pub fn backend_kind(&self) -> BackendKind {
        self.model.backend.kind()
    }

    /// Loads performed by the owning registry since its last reset, observed
    /// when this handle was acquired.
    pub fn registry_load_count(&self) -> u64 {
        self.load_count
    }

    pub fn class_labels(&self) -> &[String] {
        self.model.taxonomy.subtypes()
    }

    pub fn taxonomy(&self) -> &ClassTaxonomy {
        &self.model.taxonomy
    }

    pub fn normalization(&self) -> &Normalization {
        &self.model.normalization
    }

    pub(crate) fn backend(&self) -> &dyn Backend {
        self.model.backend.as_ref()
    }
}

impl fmt::Debug for ModelHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelHandle")
            .field("instance_id", &self.model.instance_id)
            .field("backend_kind", &self.backend_kind())
            .field("registry_load_count", &self.load_count)
            .finish()
    }
}

/// Load-once model slot.
///
/// The first [`acquire`](Self::acquire) loads the backend while holding the
/// slot lock, so concurrent callers wait for that one load and then share it.
/// Later calls return the resident model whatever config they pass.
#[derive(Default)]
pub struct ModelRegistry {
    slot: Mutex<Option<ModelHandle>>,
    load_count: AtomicU64,
    load_events: AtomicU64,
}

impl ModelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The process-wide registry.
    pub fn global() -> &'static ModelRegistry {
        static GLOBAL: OnceLock<ModelRegistry> = OnceLock::new();
        GLOBAL.get_or_init(ModelRegistry::new)
    }

    pub fn acquire(&self, cfg: &ModelConfig) -> Result<ModelHandle, ClassifierError> {
        let mut slot = self.slot.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(handle) = slot.as_ref() {
            return Ok(handle.clone());
        }
        let backend = load_backend(cfg)?;
        let load_count = self.load_count.fetch_add(1, Ordering::SeqCst) + 1;
        self.load_events.fetch_add(1, Ordering::SeqCst);
        let handle = ModelHandle {
            model: Arc::new(LoadedModel {
                instance_id: NEXT_INSTANCE.fetch_add(1, Ordering::Relaxed),
                backend,
                taxonomy: cfg.taxonomy.clone(),
                normalization: cfg.normalization,
            }),
            load_count,
        };
        *slot = Some(handle.clone());
        Ok(handle)
    }

    /// Drop the resident model; the next acquisition loads again.
    pub fn reset(&self) {
        let mut slot = self.slot.lock().unwrap_or_else(|e| e.into_inner());
        *slot = None;
        self.load_count.store(0, Ordering::SeqCst);
    }

    pub fn is_loaded(&self) -> bool {
        self.slot.lock().unwrap_or_else(|e| e.into_inner()).is_some()
    }

    /// Loads since the last reset.
    pub fn load_count(&self) -> u64 {
        self.load_count.load(Ordering::SeqCst)
    }

    /// Loads over the registry's lifetime; never reset.
    pub fn load_events(&self) -> u64 {
        self.load_events.load(Ordering::SeqCst)
    }
}

/// Acquire from the process-wide registry.
pub fn acquire_model(cfg: &ModelConfig) -> Result<ModelHandle, ClassifierError> {
    ModelRegistry::global().acquire(cfg)
}

/// Reset the process-wide registry.
pub fn reset_registry() {
    ModelRegistry::global().reset()
}
