//! Process-wide cache of J_x eigendecompositions, keyed by particle count.
//!
//! Reads take a shared lock only long enough to clone an `Arc`; after the
//! first construction at a given n, concurrent readers never contend. A lost
//! insert race just recomputes once.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock, RwLock};

use gravispin_core::dicke::JxEigen;
use gravispin_core::error::Result;

static CACHE: OnceLock<RwLock<BTreeMap<u32, Arc<JxEigen>>>> = OnceLock::new();

pub fn jx_eigen(n: u32) -> Result<Arc<JxEigen>> {
    let cache = CACHE.get_or_init(|| RwLock::new(BTreeMap::new()));
    if let Some(found) = cache.read().expect("cache lock").get(&n) {
        return Ok(found.clone());
    }
    let fresh = Arc::new(JxEigen::compute(n)?);
    let mut map = cache.write().expect("cache lock");
    Ok(map.entry(n).or_insert(fresh).clone())
}
