use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trainers::{DimKind, HpConfig, HpSpace, HpValue, Scale};

/// Numeric view of an [`HpConfig`]: linear dimensions as-is, log dimensions
/// as their natural log, categorical dimensions as level indices, in the
/// space's dimension order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedConfig(pub Vec<f64>);

impl EncodedConfig {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn encode(config: &HpConfig, space: &HpSpace) -> Result<EncodedConfig> {
    space
        .validate_config(config)
        .map_err(|e| Error::Argument(format!("cannot encode for {}: {e}", space.version_tag())))?;
    Ok(EncodedConfig(
        space
            .dims
            .iter()
            .zip(&config.values)
            .map(|(d, v)| match (&d.kind, v) {
                (DimKind::Numeric { scale: Scale::Log, .. }, HpValue::Num(x)) => x.ln(),
                (_, HpValue::Num(x)) => *x,
                (_, HpValue::Cat(i)) => *i as f64,
            })
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainers::{default_config, hp_space, Algorithm};

    #[test]
    fn encodes_each_kind_of_dimension() {
        let space = hp_space(Algorithm::LogisticRegression);
        let mut c = default_config(&space);
        let c_idx = space.index_of("C").unwrap();
        let iter_idx = space.index_of("max_iteration").unwrap();
        let solver_idx = space.index_of("solver").unwrap();
        c.values[c_idx] = HpValue::Num(100.0);
        c.values[iter_idx] = HpValue::Num(5.0 + 5.0);
        c.values[solver_idx] = HpValue::Cat(2);
        let e = encode(&c, &space).unwrap();
        assert!((e.0[c_idx] - 4.605_170_185_988_091).abs() < 1e-12);
        assert_eq!(e.0[iter_idx], 10.0);
        assert_eq!(e.0[solver_idx], 2.0);
        assert_eq!(e.len(), space.dims.len());
    }

    #[test]
    fn config_from_another_space_is_rejected() {
        let dt = hp_space(Algorithm::DecisionTree);
        let lr = hp_space(Algorithm::LogisticRegression);
        assert!(encode(&default_config(&dt), &lr).is_err());
    }
}
