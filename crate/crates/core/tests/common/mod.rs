#![allow(dead_code)]

use std::path::PathBuf;

use mxlogit::{load_csv, LongChoiceData, Schema};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn yogurt() -> LongChoiceData {
    let schema = Schema::new("choice", "obsID").with_panel_id("id");
    load_csv(data_dir().join("yogurt.csv"), &schema).expect("data/yogurt.csv")
}

/// Small random panel: `n_obs` observations over individuals of two
/// observations each, `n_alts` alternatives, columns price, x1, x2 and an
/// undeclared per-observation weight w.
pub fn synthetic(seed: u64, n_obs: usize, n_alts: usize) -> LongChoiceData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("id,obs,y,price,x1,x2,w\n");
    for n in 0..n_obs {
        let chosen = rng.gen_range(0..n_alts);
        let w: f64 = rng.gen_range(0.5..2.0);
        for j in 0..n_alts {
            csv.push_str(&format!(
                "{},{},{},{:.6},{:.6},{},{:.6}\n",
                n / 2,
                n,
                u8::from(j == chosen),
                rng.gen_range(0.5..3.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0..2),
                w
            ));
        }
    }
    let schema = Schema::new("y", "obs").with_panel_id("id");
    LongChoiceData::read_csv(csv.as_bytes(), &schema).unwrap()
}

/// Central-difference gradient check; returns `|g - fd|_inf / max(|fd|_inf, 1e-8)`.
pub fn fd_relative_error(mut f: impl FnMut(&[f64], Option<&mut [f64]>) -> f64, theta: &[f64], h: f64) -> f64 {
    let mut g = vec![0.0; theta.len()];
    f(theta, Some(&mut g));
    let mut fd = vec![0.0; theta.len()];
    let mut x = theta.to_vec();
    for i in 0..theta.len() {
        x[i] = theta[i] + h;
        let up = f(&x, None);
        x[i] = theta[i] - h;
        let down = f(&x, None);
        x[i] = theta[i];
        fd[i] = (up - down) / (2.0 * h);
    }
    let num = g.iter().zip(&fd).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let den = fd.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-8);
    num / den
}
