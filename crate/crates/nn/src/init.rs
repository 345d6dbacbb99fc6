//! Seeded parameter initialization.
//!
//! candle's CPU generator cannot be seeded, so every freshly created
//! parameter is overwritten here from a ChaCha stream, visiting variables
//! in name order.

use candle_core::Tensor;
use candle_nn::VarMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;

/// Standard deviation of the BERT family's weight initializer.
pub const INIT_STD: f64 = 0.02;

/// Re-initializes every variable whose name satisfies `select`: biases to
/// zero, layer-norm gains to one, everything else from N(0, 0.02²).
pub fn seeded_init(varmap: &VarMap, seed: u64, select: impl Fn(&str) -> bool) -> Result<()> {
    let data = varmap.data().lock().expect("varmap lock");
    let mut names: Vec<&String> = data.keys().filter(|n| select(n)).collect();
    names.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0f32, INIT_STD as f32).expect("valid std");
    for name in names {
        let var = &data[name];
        let shape = var.shape().clone();
        let value = if name.ends_with("bias") {
            Tensor::zeros(&shape, var.dtype(), var.device())?
        } else if is_norm_gain(name) {
            Tensor::ones(&shape, var.dtype(), var.device())?
        } else {
            let n = shape.elem_count();
            let values: Vec<f32> = (0..n).map(|_| normal.sample(&mut rng)).collect();
            Tensor::from_vec(values, &shape, var.device())?
        };
        var.set(&value)?;
    }
    Ok(())
}

fn is_norm_gain(name: &str) -> bool {
    name.ends_with("LayerNorm.weight") || name.ends_with("layer_norm.weight")
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::{DType, Device};
    use candle_nn::{Init, VarBuilder};

    fn build() -> VarMap {
        let vm = VarMap::new();
        let vb = VarBuilder::from_varmap(&vm, DType::F32, &Device::Cpu);
        vb.get_with_hints((3, 4), "dense.weight", Init::Const(5.0)).unwrap();
        vb.get_with_hints(3, "dense.bias", Init::Const(5.0)).unwrap();
        vb.get_with_hints(4, "LayerNorm.weight", Init::Const(5.0)).unwrap();
        vm
    }

    fn value(vm: &VarMap, name: &str) -> Vec<f32> {
        vm.data().lock().unwrap()[name].as_tensor().flatten_all().unwrap().to_vec1().unwrap()
    }

    #[test]
    fn same_seed_same_weights() {
        let (a, b) = (build(), build());
        seeded_init(&a, 3, |_| true).unwrap();
        seeded_init(&b, 3, |_| true).unwrap();
        assert_eq!(value(&a, "dense.weight"), value(&b, "dense.weight"));
        assert!(value(&a, "dense.bias").iter().all(|&x| x == 0.0));
        assert!(value(&a, "LayerNorm.weight").iter().all(|&x| x == 1.0));
        let c = build();
        seeded_init(&c, 4, |_| true).unwrap();
        assert_ne!(value(&a, "dense.weight"), value(&c, "dense.weight"));
    }

    #[test]
    fn selection_leaves_others_alone() {
        let vm = build();
        seeded_init(&vm, 0, |n| n.starts_with("dense")).unwrap();
        assert!(value(&vm, "LayerNorm.weight").iter().all(|&x| x == 5.0));
    }
}
