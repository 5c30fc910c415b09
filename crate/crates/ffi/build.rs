use std::path::PathBuf;

fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    let config = cbindgen::Config::from_file(dir.join("cbindgen.toml")).unwrap_or_default();
    match cbindgen::Builder::new().with_crate(&dir).with_config(config).generate() {
        Ok(bindings) => {
            let _ = std::fs::create_dir_all(dir.join("include"));
            bindings.write_to_file(dir.join("include/polar_ldgm.h"));
        }
        Err(err) => println!("cargo:warning=cbindgen failed: {err}"),
    }
}
