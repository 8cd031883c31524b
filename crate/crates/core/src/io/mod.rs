//! On-disk formats: geometry configs, grid files with JSON sidecars, PGM
//! quicklooks and run manifests.

pub mod config;
pub mod gridfile;
pub mod manifest;

use crc::{Crc, CRC_64_XZ};
use sha2::{Digest, Sha256};

pub use config::{AtlasConfig, FanConfig, GeometryConfig, GridConfig, PhaseSpec, SinogramConfig, WeightSpec};
pub use gridfile::{
    read_grid, read_image, read_sinogram, sidecar_path, write_grid, write_pgm, GridData, GridKind,
    Sidecar,
};
pub use manifest::{FileEntry, Manifest};

const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

/// CRC-64/XZ as 16 lowercase hex digits.
pub fn crc64_hex(bytes: &[u8]) -> String {
    format!("{:016x}", CRC64.checksum(bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checksum_vectors() {
        assert_eq!(crc64_hex(b"123456789"), "995dc9bbdf1939fa");
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
