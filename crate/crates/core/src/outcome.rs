//! Finite outcome spaces, possibly with product structure, and maps between them.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Separator between tuple components in outcome keys, e.g. `"0|+"`.
pub const KEY_DELIMITER: char = '|';

/// `Ω_1 × ⋯ × Ω_n` with string labels per axis.
///
/// Outcomes are addressed by a flat index in row-major order over the axes
/// (leftmost axis most significant), matching the Kronecker convention used
/// for tensor products.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OutcomeSpace {
    axes: Vec<Vec<String>>,
}

impl OutcomeSpace {
    pub fn new(axes: Vec<Vec<String>>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::OutcomeSpace("no axes".into()));
        }
        for (i, axis) in axes.iter().enumerate() {
            if axis.is_empty() {
                return Err(Error::OutcomeSpace(format!("axis {i} has no labels")));
            }
            let mut seen = HashSet::new();
            for label in axis {
                if label.contains(KEY_DELIMITER) {
                    return Err(Error::OutcomeSpace(format!("label {label:?} contains reserved '{KEY_DELIMITER}'")));
                }
                if !seen.insert(label.as_str()) {
                    return Err(Error::OutcomeSpace(format!("duplicate label {label:?} on axis {i}")));
                }
            }
        }
        Ok(Self { axes })
    }

    /// Single-axis space.
    pub fn flat<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::new(vec![labels.into_iter().map(Into::into).collect()])
    }

    /// Single axis labelled `"0"`, `"1"`, ….
    pub fn numbered(n: usize) -> Self {
        Self::flat((0..n).map(|k| k.to_string())).expect("distinct numeric labels")
    }

    /// Concatenates the axes of several spaces.
    pub fn product<'a>(spaces: impl IntoIterator<Item = &'a OutcomeSpace>) -> Result<Self> {
        Self::new(spaces.into_iter().flat_map(|s| s.axes.iter().cloned()).collect())
    }

    pub fn axes(&self) -> &[Vec<String>] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> Result<&[String]> {
        self.axes.get(i).map(Vec::as_slice).ok_or(Error::AxisOutOfRange { axis: i, axes: self.axes.len() })
    }

    /// Space consisting of axis `i` alone.
    pub fn axis_space(&self, i: usize) -> Result<Self> {
        Ok(Self { axes: vec![self.axis(i)?.to_vec()] })
    }

    pub fn num_axes(&self) -> usize {
        self.axes.len()
    }

    /// Number of outcomes.
    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Every axis carries at least two labels.
    pub fn is_nontrivial_product(&self) -> bool {
        self.axes.iter().all(|a| a.len() >= 2)
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.axes.len()];
        for k in (0..self.axes.len() - 1).rev() {
            s[k] = s[k + 1] * self.axes[k + 1].len();
        }
        s
    }

    /// Per-axis label indices of outcome `index`.
    pub fn digits(&self, index: usize) -> Vec<usize> {
        self.strides().iter().zip(&self.axes).map(|(s, a)| (index / s) % a.len()).collect()
    }

    pub fn from_digits(&self, digits: &[usize]) -> usize {
        self.strides().iter().zip(digits).map(|(s, d)| s * d).sum()
    }

    pub fn component(&self, index: usize, axis: usize) -> usize {
        (index / self.strides()[axis]) % self.axes[axis].len()
    }

    pub fn labels(&self, index: usize) -> Vec<&str> {
        self.digits(index).iter().zip(&self.axes).map(|(&d, a)| a[d].as_str()).collect()
    }

    /// Outcome key: tuple components joined by `|`.
    pub fn key(&self, index: usize) -> String {
        self.labels(index).join("|")
    }

    pub fn keys(&self) -> impl Iterator<Item = String> + '_ {
        (0..self.len()).map(|k| self.key(k))
    }

    pub fn index_of(&self, labels: &[&str]) -> Result<usize> {
        if labels.len() != self.axes.len() {
            return Err(Error::UnknownOutcome(labels.join("|")));
        }
        let mut digits = Vec::with_capacity(labels.len());
        for (axis, label) in self.axes.iter().zip(labels) {
            let d = axis.iter().position(|l| l == label).ok_or_else(|| Error::UnknownOutcome(labels.join("|")))?;
            digits.push(d);
        }
        Ok(self.from_digits(&digits))
    }

    pub fn index_of_key(&self, key: &str) -> Result<usize> {
        let parts: Vec<&str> = key.split(KEY_DELIMITER).collect();
        self.index_of(&parts)
    }
}

impl fmt::Display for OutcomeSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let axes: Vec<String> = self.axes.iter().map(|a| format!("{{{}}}", a.join(","))).collect();
        write!(f, "{}", axes.join("×"))
    }
}

/// Surjection `f: Ω_source → Ω_target`, stored as flat index images.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeMap {
    source: OutcomeSpace,
    target: OutcomeSpace,
    mapping: Vec<usize>,
}

impl OutcomeMap {
    pub fn new(source: OutcomeSpace, target: OutcomeSpace, mapping: Vec<usize>) -> Result<Self> {
        if mapping.len() != source.len() {
            return Err(Error::Structure(format!(
                "outcome map has {} images for {} source outcomes",
                mapping.len(),
                source.len()
            )));
        }
        let mut hit = vec![false; target.len()];
        for &y in &mapping {
            *hit.get_mut(y).ok_or_else(|| Error::UnknownOutcome(format!("target index {y}")))? = true;
        }
        if let Some(y) = hit.iter().position(|h| !h) {
            return Err(Error::NotSurjective(target.key(y)));
        }
        Ok(Self { source, target, mapping })
    }

    pub fn from_fn(source: &OutcomeSpace, target: &OutcomeSpace, f: impl Fn(usize) -> usize) -> Result<Self> {
        let mapping = (0..source.len()).map(f).collect();
        Self::new(source.clone(), target.clone(), mapping)
    }

    /// Map given as `source key → target label`, target labels ordered by
    /// first appearance in source order. Every source outcome must be listed.
    pub fn from_pairs<'a>(source: &OutcomeSpace, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut images: Vec<Option<String>> = vec![None; source.len()];
        for (k, v) in pairs {
            let idx = source.index_of_key(k)?;
            images[idx] = Some(v.to_string());
        }
        let mut labels: Vec<String> = Vec::new();
        let mut mapping = Vec::with_capacity(source.len());
        for (idx, img) in images.into_iter().enumerate() {
            let img =
                img.ok_or_else(|| Error::Structure(format!("outcome map has no image for {:?}", source.key(idx))))?;
            let pos = labels.iter().position(|l| *l == img).unwrap_or_else(|| {
                labels.push(img);
                labels.len() - 1
            });
            mapping.push(pos);
        }
        Self::new(source.clone(), OutcomeSpace::flat(labels)?, mapping)
    }

    pub fn identity(space: &OutcomeSpace) -> Self {
        Self { source: space.clone(), target: space.clone(), mapping: (0..space.len()).collect() }
    }

    /// `f_i(x_1, …, x_n) = x_i`
    pub fn projection(space: &OutcomeSpace, axis: usize) -> Result<Self> {
        let target = space.axis_space(axis)?;
        let mapping = (0..space.len()).map(|x| space.component(x, axis)).collect();
        Ok(Self { source: space.clone(), target, mapping })
    }

    pub fn constant(space: &OutcomeSpace, label: &str) -> Result<Self> {
        Ok(Self { source: space.clone(), target: OutcomeSpace::flat([label])?, mapping: vec![0; space.len()] })
    }

    pub fn source(&self) -> &OutcomeSpace {
        &self.source
    }

    pub fn target(&self) -> &OutcomeSpace {
        &self.target
    }

    pub fn image(&self, x: usize) -> usize {
        self.mapping[x]
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    /// `f^{-1}(y)` in ascending source order.
    pub fn fiber(&self, y: usize) -> Vec<usize> {
        (0..self.mapping.len()).filter(|&x| self.mapping[x] == y).collect()
    }
}

/// Outcome of checking whether maps `f_1, …, f_n` exhibit a product structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProductCheck {
    /// `h(x) = (f_1(x), …, f_n(x))` is a bijection onto `product`;
    /// `h[x]` is the flat index of `h(x)`.
    Bijection { product: OutcomeSpace, h: Vec<usize> },
    /// First tuple (in canonical order) whose joint preimage does not have exactly one element.
    BadIntersection { tuple: Vec<String>, count: usize },
}

/// Checks `|f_1^{-1}(x_1) ∩ ⋯ ∩ f_n^{-1}(x_n)| = 1` for every tuple of target labels.
pub fn product_structure(space: &OutcomeSpace, maps: &[OutcomeMap]) -> Result<ProductCheck> {
    if maps.is_empty() {
        return Err(Error::Empty("outcome maps"));
    }
    for (i, f) in maps.iter().enumerate() {
        if f.source != *space {
            return Err(Error::Structure(format!("map {i} has a different source space")));
        }
        if f.target.num_axes() != 1 {
            return Err(Error::Structure(format!("map {i} target must have a single axis")));
        }
        if f.target.len() < 2 {
            return Err(Error::TrivialMap { index: i });
        }
    }
    let product = OutcomeSpace::product(maps.iter().map(|f| &f.target))?;
    let h: Vec<usize> =
        (0..space.len()).map(|x| product.from_digits(&maps.iter().map(|f| f.image(x)).collect::<Vec<_>>())).collect();
    let mut counts = vec![0usize; product.len()];
    for &t in &h {
        counts[t] += 1;
    }
    if let Some(t) = counts.iter().position(|&c| c != 1) {
        return Ok(ProductCheck::BadIntersection {
            tuple: product.labels(t).into_iter().map(String::from).collect(),
            count: counts[t],
        });
    }
    Ok(ProductCheck::Bijection { product, h })
}
