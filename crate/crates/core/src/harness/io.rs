//! Profile files and binary grid files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::asymptotics::HalfCylinderField;
use crate::beltrami::GridField;
use crate::error::Result;
use crate::profiles::BindingProfile;

use super::report::canonical_json;

/// Read and validate a profile JSON file.
pub fn parse_profile_file(path: &Path) -> Result<BindingProfile> {
    BindingProfile::from_json(&std::fs::read_to_string(path)?)
}

/// Canonical JSON of a profile document.
pub fn profile_canonical_json(profile: &BindingProfile) -> Result<Vec<u8>> {
    canonical_json(&profile.to_doc())
}

/// Direction of a [`grid_io`] call.
#[derive(Debug, Clone, PartialEq)]
pub enum GridIo<'a> {
    Read,
    Write(&'a GridField),
}

/// Read a QCG1 file, or write one and return the field written.
pub fn grid_io(path: &Path, direction: GridIo<'_>) -> Result<GridField> {
    match direction {
        GridIo::Read => GridField::read_qcg1(BufReader::new(File::open(path)?)),
        GridIo::Write(field) => {
            let mut w = BufWriter::new(File::create(path)?);
            field.write_qcg1(&mut w)?;
            w.flush()?;
            Ok(field.clone())
        }
    }
}

/// Read an HCF1 half-cylinder file.
pub fn read_half_cylinder(path: &Path) -> Result<HalfCylinderField> {
    HalfCylinderField::read_hcf1(BufReader::new(File::open(path)?))
}

/// Write an HCF1 half-cylinder file.
pub fn write_half_cylinder(path: &Path, field: &HalfCylinderField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    field.write_hcf1(&mut w)?;
    Ok(w.flush()?)
}
