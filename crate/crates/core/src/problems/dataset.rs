use crate::error::{Error, Result};
use crate::vecmath::all_finite;

/// One observation `z = (x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: f64,
}

impl Example {
    pub fn new(features: Vec<f64>, label: f64) -> Self {
        Example { features, label }
    }
}

/// Ordered, nonempty list of examples sharing one feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    examples: Vec<Example>,
    dim: usize,
}

impl Dataset {
    pub fn new(examples: Vec<Example>) -> Result<Self> {
        let first = examples
            .first()
            .ok_or_else(|| Error::invalid("dataset must contain at least one example"))?;
        let dim = first.features.len();
        for (i, ex) in examples.iter().enumerate() {
            if ex.features.len() != dim {
                return Err(Error::invalid(format!(
                    "example {i} has dimension {}, expected {dim}",
                    ex.features.len()
                )));
            }
            if !all_finite(&ex.features) || !ex.label.is_finite() {
                return Err(Error::invalid(format!("example {i} has non-finite entries")));
            }
        }
        Ok(Dataset { examples, dim })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn get(&self, i: usize) -> Option<&Example> {
        self.examples.get(i)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Example> {
        self.examples.iter()
    }

    /// Fraction of examples with label `+1`.
    pub fn positive_fraction(&self) -> f64 {
        let pos = self.examples.iter().filter(|e| e.label > 0.0).count();
        pos as f64 / self.len() as f64
    }

    /// Copy with `examples[index]` swapped for `replacement`.
    pub fn with_replaced(&self, index: usize, replacement: Example) -> Result<Self> {
        if index >= self.len() {
            return Err(Error::invalid(format!(
                "replacement index {index} out of range for n = {}",
                self.len()
            )));
        }
        if replacement.features.len() != self.dim {
            return Err(Error::invalid(format!(
                "replacement has dimension {}, expected {}",
                replacement.features.len(),
                self.dim
            )));
        }
        let mut examples = self.examples.clone();
        examples[index] = replacement;
        Dataset::new(examples)
    }

    /// Splits off the trailing `k` examples, e.g. to hold out replacements.
    pub fn split_tail(&self, k: usize) -> Result<(Dataset, Vec<Example>)> {
        if k >= self.len() {
            return Err(Error::invalid(format!(
                "cannot hold out {k} of {} examples",
                self.len()
            )));
        }
        let cut = self.len() - k;
        let head = Dataset::new(self.examples[..cut].to_vec())?;
        Ok((head, self.examples[cut..].to_vec()))
    }

    /// Scales every feature vector to unit Euclidean norm (zero rows are kept).
    pub fn normalized(&self) -> Self {
        let examples = self
            .examples
            .iter()
            .map(|e| {
                let n = crate::vecmath::norm(&e.features);
                let features = if n > 0.0 {
                    e.features.iter().map(|x| x / n).collect()
                } else {
                    e.features.clone()
                };
                Example::new(features, e.label)
            })
            .collect();
        Dataset {
            examples,
            dim: self.dim,
        }
    }

    pub fn max_feature_norm(&self) -> f64 {
        self.examples
            .iter()
            .map(|e| crate::vecmath::norm(&e.features))
            .fold(0.0, f64::max)
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Example;
    type IntoIter = std::slice::Iter<'a, Example>;

    fn into_iter(self) -> Self::IntoIter {
        self.examples.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(Dataset::new(vec![]).is_err());
        let ragged = vec![Example::new(vec![1.0], 1.0), Example::new(vec![1.0, 2.0], 1.0)];
        assert!(Dataset::new(ragged).is_err());
        assert!(Dataset::new(vec![Example::new(vec![f64::NAN], 1.0)]).is_err());
    }

    #[test]
    fn replace_and_split() {
        let d = Dataset::new(vec![
            Example::new(vec![1.0], 1.0),
            Example::new(vec![2.0], -1.0),
            Example::new(vec![3.0], 1.0),
        ])
        .unwrap();
        let r = d.with_replaced(2, Example::new(vec![9.0], -1.0)).unwrap();
        assert_eq!(r.get(0), d.get(0));
        assert_eq!(r.get(2).unwrap().features, vec![9.0]);
        assert!(d.with_replaced(3, Example::new(vec![9.0], 1.0)).is_err());
        assert!(d.with_replaced(0, Example::new(vec![9.0, 1.0], 1.0)).is_err());

        let (head, tail) = d.split_tail(1).unwrap();
        assert_eq!(head.len(), 2);
        assert_eq!(tail[0].features, vec![3.0]);
        assert!(d.split_tail(3).is_err());
        assert!((d.positive_fraction() - 2.0 / 3.0).abs() < 1e-15);
    }
}
