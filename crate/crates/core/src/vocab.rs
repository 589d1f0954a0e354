use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered set of discrete stimulus names (states, including reward states).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct StimulusVocabulary {
    names: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl StimulusVocabulary {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::InvalidArgument("empty stimulus name".into()));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateStimulus(name.clone()));
            }
        }
        Ok(Self { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownStimulus(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Input vector with `magnitude` at `name` and zero elsewhere.
    pub fn one_hot(&self, name: &str, magnitude: f64) -> Result<Vec<f64>> {
        let i = self.index_of(name)?;
        let mut v = vec![0.0; self.len()];
        v[i] = magnitude;
        Ok(v)
    }
}

impl TryFrom<Vec<String>> for StimulusVocabulary {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        Self::new(names)
    }
}

impl From<StimulusVocabulary> for Vec<String> {
    fn from(v: StimulusVocabulary) -> Self {
        v.names
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_is_total_over_names() {
        let v = StimulusVocabulary::new(["alpha", "beta", "R"]).unwrap();
        for (i, n) in v.names().iter().enumerate() {
            assert_eq!(v.index_of(n).unwrap(), i);
        }
        assert!(matches!(v.index_of("gamma"), Err(Error::UnknownStimulus(_))));
        assert_eq!(v.one_hot("beta", 2.0).unwrap(), vec![0.0, 2.0, 0.0]);
    }

    #[test]
    fn duplicates_rejected() {
        assert!(matches!(
            StimulusVocabulary::new(["a", "b", "a"]),
            Err(Error::DuplicateStimulus(n)) if n == "a"
        ));
    }
}
