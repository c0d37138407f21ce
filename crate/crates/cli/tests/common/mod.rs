#![allow(dead_code)]

use image::{Rgb, RgbImage};
use std::collections::HashMap;
use std::path::{Path, PathBuf};

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let vars: HashMap<String, String> = env.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let lookup = move |k: &str| vars.get(k).cloned();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("domainshift").chain(args.iter().copied());
    let code = domainshift_cli::run_command(argv, &lookup, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

pub fn run(args: &[&str]) -> Run {
    run_env(args, &[])
}

pub fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

pub fn write_png(path: &Path, w: u32, h: u32, f: impl Fn(u32, u32) -> [u8; 3]) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    RgbImage::from_fn(w, h, |x, y| Rgb(f(x, y))).save(path).unwrap();
}

/// `root/<domain>/obj/<i>.png`, each domain a single solid color.
pub fn solid_corpus(root: &Path, domains: &[(&str, [u8; 3])], per_domain: usize) -> PathBuf {
    for (name, rgb) in domains {
        for i in 0..per_domain {
            let rgb = *rgb;
            write_png(&root.join(name).join("obj").join(format!("{i}.png")), 2, 2, move |_, _| rgb);
        }
    }
    root.to_path_buf()
}

/// Scans `root` and writes the manifest next to it.
pub fn scan_to(root: &Path, manifest: &Path) {
    let r = run(&["scan", "--root", &s(root), "--save", &s(manifest)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
}

pub fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap()
}
