//! Mixed per-dimension activation layers.
//!
//! A [`CombUSpec`] fixes, once and before training, which scalar activation
//! each dimension of a layer uses. The per-kind dimension counts come from
//! rounding `ratio * dim` (ties to even) and pushing the residual onto the
//! kinds in their listed order; the concrete dimensions are then drawn
//! without replacement, one kind at a time, from a seeded stream.

use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::activation::ActivationKind;
use crate::error::{param_err, shape_err, Error, Result};
use crate::rng::Rng;

/// Activation kinds with their fractions, in assignment order.
#[derive(Clone, Debug, PartialEq)]
pub struct Ratios(Vec<(ActivationKind, f64)>);

impl Ratios {
    pub fn new(entries: Vec<(ActivationKind, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(param_err!("a mixture needs at least one activation"));
        }
        for (i, (kind, r)) in entries.iter().enumerate() {
            kind.validate()?;
            if !(0.0..=1.0).contains(r) {
                return Err(param_err!("ratio {r} for {kind} is outside [0, 1]"));
            }
            if entries[..i].iter().any(|(k, _)| k == kind) {
                return Err(param_err!("{kind} appears twice in the mixture"));
            }
        }
        let total: f64 = entries.iter().map(|(_, r)| r).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(param_err!("mixture ratios sum to {total}, not 1"));
        }
        Ok(Self(entries))
    }

    /// 0.5 ReLU, 0.25 ELU(α = 1), 0.25 NLReLU(β = 1).
    pub fn default_mixture() -> Self {
        Self(vec![
            (ActivationKind::Relu, 0.5),
            (ActivationKind::ELU, 0.25),
            (ActivationKind::NLRELU, 0.25),
        ])
    }

    pub fn entries(&self) -> &[(ActivationKind, f64)] {
        &self.0
    }

    pub fn kinds(&self) -> impl Iterator<Item = ActivationKind> + '_ {
        self.0.iter().map(|(k, _)| *k)
    }
}

impl fmt::Display for Ratios {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, r)| format!("{k}:{r}")).collect();
        f.write_str(&parts.join(","))
    }
}

impl Serialize for Ratios {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (kind, ratio) in &self.0 {
            map.serialize_entry(kind, ratio)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Ratios {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct OrderedVisitor;

        impl<'de> Visitor<'de> for OrderedVisitor {
            type Value = Vec<(ActivationKind, f64)>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from activation name to ratio")
            }

            fn visit_map<A: MapAccess<'de>>(
                self,
                mut map: A,
            ) -> std::result::Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some(entry) = map.next_entry::<ActivationKind, f64>()? {
                    out.push(entry);
                }
                Ok(out)
            }
        }

        let entries = deserializer.deserialize_map(OrderedVisitor)?;
        Ratios::new(entries).map_err(serde::de::Error::custom)
    }
}

/// Per-kind dimension counts for a layer of width `dim`, in ratio order.
pub fn dim_counts(ratios: &Ratios, dim: usize) -> Result<Vec<usize>> {
    if dim == 0 {
        return Err(param_err!("layer width must be positive"));
    }
    let mut counts: Vec<i64> = ratios
        .entries()
        .iter()
        .map(|(_, r)| (r * dim as f64).round_ties_even() as i64)
        .collect();
    let mut diff = dim as i64 - counts.iter().sum::<i64>();
    for c in counts.iter_mut() {
        if diff == 0 {
            break;
        } else if diff > 0 {
            *c += diff;
            diff = 0;
        } else {
            let change = (*c).min(-diff);
            *c -= change;
            diff += change;
        }
    }
    if diff != 0 {
        return Err(Error::Internal(format!(
            "dimension residual {diff} left over"
        )));
    }
    Ok(counts.into_iter().map(|c| c as usize).collect())
}

/// Realize a mixture on `dim` dimensions.
pub fn assign_dims(ratios: &Ratios, dim: usize, rng: &mut Rng) -> Result<Vec<ActivationKind>> {
    let counts = dim_counts(ratios, dim)?;
    let mut slots: Vec<Option<ActivationKind>> = vec![None; dim];
    for ((kind, _), count) in ratios.entries().iter().zip(counts) {
        let free: Vec<usize> = (0..dim).filter(|&d| slots[d].is_none()).collect();
        for d in rng.choose_without_replacement(&free, count) {
            slots[d] = Some(*kind);
        }
    }
    slots
        .into_iter()
        .map(|s| s.ok_or_else(|| Error::Internal("unassigned dimension".into())))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct CombUSpec {
    ratios: Ratios,
    dim: usize,
    assignment: Vec<ActivationKind>,
    seed: u64,
}

#[derive(Deserialize)]
struct RawSpec {
    ratios: Ratios,
    dim: usize,
    assignment: Vec<ActivationKind>,
    seed: u64,
}

impl TryFrom<RawSpec> for CombUSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        if raw.assignment.len() != raw.dim {
            return Err(shape_err!(
                "assignment has {} entries for width {}",
                raw.assignment.len(),
                raw.dim
            ));
        }
        let expected = dim_counts(&raw.ratios, raw.dim)?;
        for ((kind, _), want) in raw.ratios.entries().iter().zip(expected) {
            let got = raw.assignment.iter().filter(|k| *k == kind).count();
            if got != want {
                return Err(param_err!(
                    "{kind} covers {got} dimensions, mixture requires {want}"
                ));
            }
        }
        Ok(Self {
            ratios: raw.ratios,
            dim: raw.dim,
            assignment: raw.assignment,
            seed: raw.seed,
        })
    }
}

impl CombUSpec {
    /// Assign dimensions with a stream seeded by `seed`, so the layout can
    /// be rebuilt from `(ratios, dim, seed)` alone.
    pub fn new(ratios: Ratios, dim: usize, seed: u64) -> Result<Self> {
        let assignment = assign_dims(&ratios, dim, &mut Rng::new(seed))?;
        Ok(Self {
            ratios,
            dim,
            assignment,
            seed,
        })
    }

    pub fn ratios(&self) -> &Ratios {
        &self.ratios
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assignment(&self) -> &[ActivationKind] {
        &self.assignment
    }

    /// Dimension count per kind, in ratio order.
    pub fn counts(&self) -> Vec<usize> {
        self.ratios
            .kinds()
            .map(|k| self.assignment.iter().filter(|a| **a == k).count())
            .collect()
    }

    /// One 0/1 mask per kind, in ratio order. The masks partition the layer.
    pub fn masks(&self) -> Vec<Vec<f64>> {
        self.ratios
            .kinds()
            .map(|k| {
                self.assignment
                    .iter()
                    .map(|a| if *a == k { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(shape_err!(
                "input of length {} for width {}",
                x.len(),
                self.dim
            ));
        }
        Ok(x.iter()
            .zip(&self.assignment)
            .map(|(v, kind)| kind.eval(*v))
            .collect())
    }
}

/// The default mixture on `dim` dimensions, seeded from `rng`.
pub fn default_combu(dim: usize, rng: &mut Rng) -> Result<CombUSpec> {
    CombUSpec::new(Ratios::default_mixture(), dim, rng.next_u64())
}
