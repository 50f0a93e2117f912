use crate::error::Result;

use super::layer::LayerKind;
use super::network::NetworkSpec;

/// Floating point operations for one dense inference: two per
/// multiply-accumulate, plus one per activation output and one per pooled
/// output.
pub fn count_flops(spec: &NetworkSpec) -> Result<u64> {
    let shapes = spec.layer_shapes()?;
    let mut total = 0u64;
    for (layer, s) in spec.layers.iter().zip(&shapes) {
        let macs = match &layer.kind {
            LayerKind::Conv(c) => {
                (c.kernel[0] * c.kernel[1] * c.in_channels * c.out_channels * s.output.plane()) as u64
            }
            LayerKind::Fc(f) => (f.in_features * f.out_features) as u64,
        };
        total += 2 * macs + s.output.len() as u64;
        if layer.kind.pool() > 1 {
            total += s.pooled.len() as u64;
        }
    }
    Ok(total)
}
