use rand::seq::index::sample;
use rand::Rng;

use crate::nn::Matrix;
use crate::{Error, Result};

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Mean silhouette `s(i) = (b - a) / max(a, b)` over all samples, where `a`
/// is the mean Euclidean distance to the sample's own class (self excluded)
/// and `b` the mean distance to the other class.
///
/// Above `max_n` rows a stratified uniform subsample of `max_n` rows is used.
pub fn silhouette_coefficient<R: Rng + ?Sized>(features: &Matrix, labels: &[u8], max_n: usize, rng: &mut R) -> Result<f64> {
    if features.rows() != labels.len() {
        return Err(Error::Shape(format!("{} rows for {} labels", features.rows(), labels.len())));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &y) in labels.iter().enumerate() {
        match y {
            0 | 1 => by_class[y as usize].push(i),
            other => return Err(Error::InvalidLabel(other)),
        }
    }
    for (c, members) in by_class.iter().enumerate() {
        if members.len() < 2 {
            return Err(Error::invalid(format!("class {c} has fewer than 2 samples")));
        }
    }

    let n = labels.len();
    if n > max_n {
        for members in &mut by_class {
            let share = ((max_n as f64) * members.len() as f64 / n as f64).round() as usize;
            let keep = share.clamp(2, members.len());
            let mut picked: Vec<usize> = sample(rng, members.len(), keep).into_iter().map(|i| members[i]).collect();
            picked.sort_unstable();
            *members = picked;
        }
    }

    let mut total = 0.0;
    let mut count = 0usize;
    for c in 0..2 {
        let own = &by_class[c];
        let other = &by_class[1 - c];
        for &i in own {
            let xi = features.row(i);
            let a = own.iter().filter(|&&j| j != i).map(|&j| euclidean(xi, features.row(j))).sum::<f64>()
                / (own.len() - 1) as f64;
            let b = other.iter().map(|&j| euclidean(xi, features.row(j))).sum::<f64>() / other.len() as f64;
            let denom = a.max(b);
            total += if denom > 0.0 { (b - a) / denom } else { 0.0 };
            count += 1;
        }
    }
    Ok(total / count as f64)
}
