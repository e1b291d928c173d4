//! Embedding export with label-quartile classes for external plotting.

use std::path::Path;

use tripletreg_core::Target;

use crate::error::{Error, Result};
use crate::io::{write_labeled_embeddings, Dataset};
use crate::model_io::{LoadedModel, ModelDocument};

pub const CLASS_NAMES: [&str; 4] = ["high", "mid-high", "mid-low", "low"];

/// Splits items into four label classes by rank (highest label first, ties
/// by row order). The outer classes hold `n/4` items each, except for the
/// 744-song MediaEval set where they hold 100 each.
pub fn quartile_classes(labels: &[f64]) -> Vec<&'static str> {
    let n = labels.len();
    let top = if n == 744 { 100 } else { n / 4 };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| labels[b].total_cmp(&labels[a]).then(a.cmp(&b)));
    let mut classes = vec![CLASS_NAMES[3]; n];
    for (rank, &i) in order.iter().enumerate() {
        classes[i] = if rank < top {
            CLASS_NAMES[0]
        } else if rank < n / 2 {
            CLASS_NAMES[1]
        } else if rank < n - top {
            CLASS_NAMES[2]
        } else {
            CLASS_NAMES[3]
        };
    }
    classes
}

/// Embeds every row with a reducer document and writes
/// `song_id,e1..ek,label,class`. Labels are written as in the annotation
/// file.
pub fn export_embeddings(doc: &ModelDocument, data: &Dataset, target: Target, out: &Path) -> Result<usize> {
    if !matches!(doc.to_model()?, LoadedModel::Reducer(_)) {
        return Err(Error::Config(format!("export needs a reducer model, got `{}`", doc.kind())));
    }
    let embeddings = doc.apply(data.features.values())?;
    let labels = data.annotations.target(target);
    let classes = quartile_classes(labels);
    write_labeled_embeddings(out, data.features.song_ids(), &embeddings, labels, &classes)?;
    Ok(embeddings.rows())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classes_by_rank() {
        let labels = [0.1, 0.9, 0.5, 0.3, 0.7, 0.2, 0.8, 0.4];
        let c = quartile_classes(&labels);
        assert_eq!(c, ["low", "high", "mid-high", "mid-low", "mid-high", "low", "high", "mid-low"]);
    }

    #[test]
    fn mediaeval_size_uses_hundred() {
        let labels: Vec<f64> = (0..744).map(|i| i as f64).collect();
        let c = quartile_classes(&labels);
        let count = |name| c.iter().filter(|&&x| x == name).count();
        assert_eq!((count("high"), count("mid-high"), count("mid-low"), count("low")), (100, 272, 272, 100));
        assert_eq!(c[743], "high");
        assert_eq!(c[0], "low");
    }

    #[test]
    fn ties_follow_row_order() {
        let c = quartile_classes(&[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(c, ["high", "mid-high", "mid-low", "low"]);
    }
}
