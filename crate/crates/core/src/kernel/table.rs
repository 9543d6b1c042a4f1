use super::{Angular, Coefficient, KernelSpec};
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

/// Angular samples on the circle, interpolated linearly and periodically.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularTable {
    angles: Vec<f64>,
    values: Vec<f64>,
}

impl AngularTable {
    /// Angles in radians (any range; reduced mod 2π).
    pub fn new(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Config("angular table needs at least two samples".into()));
        }
        let mut pts: Vec<(f64, f64)> = samples
            .iter()
            .map(|&(a, v)| (a.rem_euclid(2.0 * PI), v))
            .collect();
        if pts.iter().any(|(a, v)| !a.is_finite() || !v.is_finite()) {
            return Err(Error::Config("angular table contains non-finite entries".into()));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|a, b| a.0 == b.0);
        let (angles, values) = pts.into_iter().unzip();
        Ok(Self { angles, values })
    }

    /// CSV with header `angle,value`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Config(format!("row {:?} has too few columns", rec)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad number in angular table: {e}")))
            };
            samples.push((parse(0)?, parse(1)?));
        }
        Self::new(&samples)
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn eval(&self, angle: f64) -> f64 {
        let a = angle.rem_euclid(2.0 * PI);
        let n = self.angles.len();
        let i = self.angles.partition_point(|&x| x <= a);
        // neighbours (wrapping)
        let (a0, v0, a1, v1) = if i == 0 {
            (self.angles[n - 1] - 2.0 * PI, self.values[n - 1], self.angles[0], self.values[0])
        } else if i == n {
            (self.angles[n - 1], self.values[n - 1], self.angles[0] + 2.0 * PI, self.values[0])
        } else {
            (self.angles[i - 1], self.values[i - 1], self.angles[i], self.values[i])
        };
        let w = (a - a0) / (a1 - a0);
        v0 + w * (v1 - v0)
    }
}

fn get<'a>(keys: &'a BTreeMap<String, String>, k: &str) -> Option<&'a str> {
    keys.get(k).map(|s| s.trim().trim_matches('"'))
}

fn num<T: std::str::FromStr>(keys: &BTreeMap<String, String>, k: &str, default: T) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    match get(keys, k) {
        None => Ok(default),
        Some(s) => s.parse::<T>().map_err(|e| Error::Config(format!("{k}: {e}"))),
    }
}

pub(super) fn from_keys(keys: &BTreeMap<String, String>) -> Result<KernelSpec> {
    if let Some(id) = get(keys, "kernel.id") {
        let mut k = super::builtin(id)?;
        if let Some(e) = get(keys, "kernel.exempt") {
            k.cancellation_exempt = e == "true";
        }
        return Ok(k);
    }
    let family = get(keys, "kernel.family").unwrap_or("circular-harmonic");
    let dim: usize = num(keys, "kernel.dimension", 2)?;
    if !(2..=3).contains(&dim) {
        return Err(Error::Config(format!("kernel.dimension = {dim}; supported are 2 and 3")));
    }
    let (angular, lip) = match family {
        "coordinate-monomial" => {
            let raw = get(keys, "kernel.exponents").unwrap_or("1,0,0");
            let mut exponents = [0u32; 3];
            for (i, part) in raw.trim_matches(|c| c == '[' || c == ']').split(',').enumerate() {
                if i >= 3 {
                    return Err(Error::Config("kernel.exponents has more than 3 entries".into()));
                }
                exponents[i] = part
                    .trim()
                    .parse()
                    .map_err(|e| Error::Config(format!("kernel.exponents: {e}")))?;
            }
            if dim == 2 && exponents[2] != 0 {
                return Err(Error::Config("third exponent must be 0 for n = 2".into()));
            }
            let deg: u32 = exponents.iter().sum();
            (Angular::Monomial { exponents }, Some((1.0, deg.max(1) as f64)))
        }
        "circular-harmonic" => {
            if dim != 2 {
                return Err(Error::Config("circular-harmonic kernels are planar (n = 2)".into()));
            }
            let k: u32 = num(keys, "kernel.k", 1)?;
            let phase: f64 = num(keys, "kernel.phase", 0.0)?;
            let c = if k <= 1 { k as f64 } else { k as f64 * PI / 2.0 };
            (Angular::Harmonic { k, phase }, Some((1.0, c)))
        }
        "custom-sample-table" => {
            if dim != 2 {
                return Err(Error::Config("sample-table kernels are planar (n = 2)".into()));
            }
            let path = get(keys, "kernel.table")
                .ok_or_else(|| Error::Config("custom-sample-table needs kernel.table".into()))?;
            (Angular::Table(std::sync::Arc::new(AngularTable::from_csv(Path::new(path))?)), None)
        }
        other => return Err(Error::Config(format!("unknown kernel family '{other}'"))),
    };
    let coefficient = match get(keys, "kernel.coefficient").unwrap_or("constant") {
        "constant" => Coefficient::Constant(num(keys, "kernel.coefficient.value", 1.0)?),
        "sinusoidal" => {
            let amplitude: f64 = num(keys, "kernel.coefficient.amplitude", 0.5)?;
            if amplitude.abs() >= 1.0 {
                return Err(Error::Config("sinusoidal coefficient needs |amplitude| < 1".into()));
            }
            let axis: usize = num(keys, "kernel.coefficient.axis", 0)?;
            if axis >= dim {
                return Err(Error::Config(format!("kernel.coefficient.axis = {axis} out of range")));
            }
            Coefficient::Sinusoidal {
                amplitude,
                frequency: num(keys, "kernel.coefficient.frequency", 1.0)?,
                axis,
            }
        }
        other => return Err(Error::Config(format!("unknown coefficient family '{other}'"))),
    };
    let mut k = KernelSpec::separable(family, dim, coefficient, angular);
    if let Some((a, c)) = lip {
        k = k.with_lipschitz(a, c);
    }
    k.cancellation_exempt = get(keys, "kernel.exempt") == Some("true");
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn table_interpolates_periodically() {
        let t = AngularTable::new(&[(0.0, 1.0), (PI, -1.0)]).unwrap();
        assert!((t.eval(PI / 2.0) - 0.0).abs() < 1e-15);
        assert!((t.eval(3.0 * PI / 2.0) - 0.0).abs() < 1e-15);
        assert!((t.eval(-PI / 2.0) - 0.0).abs() < 1e-15);
        assert!((t.eval(2.0 * PI) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn table_from_csv_and_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("y.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "angle,value").unwrap();
        for j in 0..360 {
            let a = 2.0 * PI * j as f64 / 360.0;
            writeln!(f, "{a},{}", a.cos()).unwrap();
        }
        drop(f);
        let mut keys = BTreeMap::new();
        keys.insert("kernel.family".to_string(), "custom-sample-table".to_string());
        keys.insert("kernel.table".to_string(), path.to_string_lossy().to_string());
        let k = KernelSpec::from_keys(&keys).unwrap();
        let v = k.evaluate(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((v - (PI / 4.0).cos()).abs() < 1e-4);
        // linear interpolation of a mean-zero cosine keeps the mean zero
        assert!(crate::kernel::check_cancellation(&k, 720).residual < 1e-8);
    }

    #[test]
    fn keys_build_families() {
        let mut keys = BTreeMap::new();
        keys.insert("kernel.family".into(), "coordinate-monomial".into());
        keys.insert("kernel.dimension".into(), "3".into());
        keys.insert("kernel.exponents".into(), "0,0,1".into());
        let k = KernelSpec::from_keys(&keys).unwrap();
        assert_eq!(k.evaluate(&[0.0; 3], &[0.0, 0.0, 5.0]).unwrap(), 1.0);
        let mut keys = BTreeMap::new();
        keys.insert("kernel.family".into(), "circular-harmonic".into());
        keys.insert("kernel.k".into(), "2".into());
        keys.insert("kernel.coefficient".into(), "sinusoidal".into());
        keys.insert("kernel.coefficient.amplitude".into(), "1.5".into());
        assert!(KernelSpec::from_keys(&keys).is_err());
        let mut keys = BTreeMap::new();
        keys.insert("kernel.id".into(), "test-constant".into());
        assert!(KernelSpec::from_keys(&keys).unwrap().cancellation_exempt);
    }
}
