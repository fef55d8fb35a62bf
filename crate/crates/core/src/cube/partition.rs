use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cube::measure::{decode, DenseMeasure};
use crate::error::{invalid, Error, Result};

/// A partition of the coordinates `0..n`, kept in canonical form: each class
/// sorted, classes ordered by their smallest element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawPartition")]
pub struct CoordinatePartition {
    n: usize,
    classes: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPartition {
    n: usize,
    classes: Vec<Vec<usize>>,
}

impl TryFrom<RawPartition> for CoordinatePartition {
    type Error = Error;
    fn try_from(r: RawPartition) -> Result<Self> {
        Self::new(r.n, r.classes)
    }
}

impl CoordinatePartition {
    pub fn new(n: usize, mut classes: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for class in &mut classes {
            if class.is_empty() {
                return invalid("partition class is empty");
            }
            class.sort_unstable();
            for &x in class.iter() {
                if x >= n {
                    return invalid(format!("coordinate {x} out of range for n = {n}"));
                }
                if std::mem::replace(&mut seen[x], true) {
                    return invalid(format!("coordinate {x} appears twice"));
                }
            }
        }
        if let Some(x) = seen.iter().position(|s| !s) {
            return invalid(format!("coordinate {x} is not covered"));
        }
        classes.sort_unstable_by_key(|c| c[0]);
        Ok(Self { n, classes })
    }

    pub fn whole(n: usize) -> Self {
        Self {
            n,
            classes: vec![(0..n).collect()],
        }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            n,
            classes: (0..n).map(|x| vec![x]).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    /// Class id of every coordinate.
    pub fn labels(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (j, c) in self.classes.iter().enumerate() {
            for &x in c {
                out[x] = j;
            }
        }
        out
    }

    /// Whether every class of `self` lies inside a class of `coarser`.
    pub fn refines(&self, coarser: &Self) -> bool {
        if self.n != coarser.n {
            return false;
        }
        let labels = coarser.labels();
        self.classes
            .iter()
            .all(|c| c.iter().all(|&x| labels[x] == labels[c[0]]))
    }

    /// Coarsest partition refining every input.
    pub fn common_refinement(parts: &[Self]) -> Result<Self> {
        let Some(first) = parts.first() else {
            return invalid("common refinement of no partitions");
        };
        let n = first.n;
        if parts.iter().any(|p| p.n != n) {
            return invalid("partitions of different ground sets");
        }
        let labels: Vec<Vec<usize>> = parts.iter().map(Self::labels).collect();
        let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for x in 0..n {
            let key = labels.iter().map(|l| l[x]).collect();
            groups.entry(key).or_default().push(x);
        }
        Self::new(n, groups.into_values().collect())
    }

    /// Splits class `j` into `s` and its complement. `s` must be a proper,
    /// nonempty subset of the class.
    pub fn split(&self, splits: &[(usize, Vec<usize>)]) -> Result<Self> {
        let mut classes = Vec::with_capacity(self.len() + splits.len());
        let mut touched = vec![false; self.len()];
        for (j, s) in splits {
            let class = self
                .classes
                .get(*j)
                .ok_or_else(|| Error::InvalidArgument(format!("no class {j}")))?;
            if std::mem::replace(&mut touched[*j], true) {
                return invalid(format!("class {j} split twice"));
            }
            if s.is_empty() || s.len() >= class.len() || s.iter().any(|x| !class.contains(x)) {
                return invalid(format!("split set is not a proper subset of class {j}"));
            }
            classes.push(s.clone());
            classes.push(class.iter().copied().filter(|x| !s.contains(x)).collect());
        }
        for (j, c) in self.classes.iter().enumerate() {
            if !touched[j] {
                classes.push(c.clone());
            }
        }
        Self::new(self.n, classes)
    }
}

/// A partition of `Ω^n` into sets of assignment indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatePartition {
    pub classes: Vec<Vec<usize>>,
}

impl StatePartition {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn masses(&self, mu: &DenseMeasure) -> Vec<f64> {
        self.classes.iter().map(|c| mu.mass_of(c)).collect()
    }
}

/// Cell of the axis grid of pitch `eps/|Ω|` containing the symbol counts
/// `counts / size`. Two distributions in one cell differ by less than `eps/2`
/// in total variation.
pub(crate) fn mesh_cell(counts: &[usize], size: usize, pitch: f64, out: &mut Vec<u32>) {
    for &c in counts {
        out.push(((c as f64 / size as f64) / pitch).floor() as u32);
    }
}

/// Groups assignments by the mesh cells of their empirical distributions on
/// every class of `v`. States are ordered by cell key, assignments by index.
pub fn mesh_states(q: usize, v: &CoordinatePartition, eps: f64) -> Result<StatePartition> {
    if !(eps > 0.0) {
        return invalid("mesh tolerance must be positive");
    }
    let n = v.n();
    let size = crate::error::table_size(q, n, crate::cube::measure::DENSE_CAP, "state mesh")?;
    let pitch = eps / q as f64;
    let labels = v.labels();
    let mut digits = vec![0; n];
    let mut counts = vec![0usize; v.len() * q];
    let mut key = Vec::with_capacity(v.len() * q);
    let mut groups: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
    for i in 0..size {
        decode(i, q, &mut digits);
        counts.iter_mut().for_each(|c| *c = 0);
        for (x, &s) in digits.iter().enumerate() {
            counts[labels[x] * q + s] += 1;
        }
        key.clear();
        for (j, class) in v.classes().iter().enumerate() {
            mesh_cell(&counts[j * q..(j + 1) * q], class.len(), pitch, &mut key);
        }
        groups.entry(key.clone()).or_default().push(i);
    }
    Ok(StatePartition {
        classes: groups.into_values().collect(),
    })
}
