fn main() {
    // LAPACK/BLAS symbols come from the system OpenBLAS (which bundles LAPACK).
    println!("cargo:rustc-link-lib=dylib=openblas");
}
