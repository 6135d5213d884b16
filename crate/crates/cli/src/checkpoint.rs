//! Model checkpoints: a small text header describing the architecture,
//! followed by the flattened network parameters as little-endian f64.

use std::io::{Read as _, Write as _};
use std::path::Path;

use dbsn_core::model::DbsnModel;
use dbsn_core::net::MlpParams;
use dbsn_core::physics::PdeFamily;

use crate::config::{activation_name, family_kind, family_name, parse_activation};
use crate::error::{CliError, Result};

const MAGIC: &str = "DBSN-CHECKPOINT v1";

fn join_usize(v: &[usize]) -> String {
    v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|f| f.parse::<usize>().map_err(|e| CliError::Config(format!("bad integer '{f}': {e}"))))
        .collect()
}

pub fn save_checkpoint(path: &Path, model: &DbsnModel) -> Result<()> {
    let flat = model.params.flatten();
    let mut header = String::new();
    header.push_str(MAGIC);
    header.push('\n');
    header.push_str(&format!("family {}\n", family_name(model.family.kind)));
    header.push_str(&format!("counts {}\n", join_usize(&model.counts)));
    header.push_str(&format!("order {}\n", model.order));
    header.push_str(&format!("hidden {}\n", join_usize(&model.net_spec.hidden)));
    header.push_str(&format!("activation {}\n", activation_name(model.net_spec.activation)));
    header.push_str(&format!("param_count {}\n", flat.len()));
    header.push_str("end\n");

    let mut file = std::fs::File::create(path)?;
    file.write_all(header.as_bytes())?;
    for v in flat {
        file.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<DbsnModel> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?
        .read_to_end(&mut bytes)?;

    // The header is plain ASCII terminated by an "end" line; everything
    // after it is the parameter blob.
    let end_marker = b"\nend\n";
    let end = bytes
        .windows(end_marker.len())
        .position(|w| w == end_marker)
        .ok_or_else(|| CliError::Config("checkpoint header has no 'end' line".into()))?;
    let header = std::str::from_utf8(&bytes[..end])
        .map_err(|_| CliError::Config("checkpoint header is not UTF-8".into()))?;
    let blob = &bytes[end + end_marker.len()..];

    let mut lines = header.lines();
    if lines.next() != Some(MAGIC) {
        return Err(CliError::Config("not a checkpoint file (bad magic)".into()));
    }
    let mut field = |name: &str| -> Result<String> {
        let line = lines
            .next()
            .ok_or_else(|| CliError::Config(format!("checkpoint missing '{name}' line")))?;
        line.strip_prefix(&format!("{name} "))
            .map(str::to_owned)
            .ok_or_else(|| CliError::Config(format!("expected '{name} ...', got '{line}'")))
    };
    let family = PdeFamily::new(family_kind(&field("family")?)?);
    let counts = parse_usize_list(&field("counts")?)?;
    let order = field("order")?
        .parse::<usize>()
        .map_err(|e| CliError::Config(format!("bad order: {e}")))?;
    let hidden = parse_usize_list(&field("hidden")?)?;
    let activation = parse_activation(&field("activation")?)?;
    let param_count = field("param_count")?
        .parse::<usize>()
        .map_err(|e| CliError::Config(format!("bad param_count: {e}")))?;

    if blob.len() != param_count * 8 {
        return Err(CliError::Config(format!(
            "parameter blob is {} bytes, expected {}",
            blob.len(),
            param_count * 8
        )));
    }
    let flat: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();

    let mut model = DbsnModel::new(family, counts, order, hidden, activation, 0)?;
    if model.params.param_count() != param_count {
        return Err(CliError::Config(format!(
            "architecture implies {} parameters, checkpoint has {param_count}",
            model.params.param_count()
        )));
    }
    let mut params = MlpParams::zeros_like(&model.params);
    params.unflatten_into(&flat)?;
    model.params = params;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dbsn_core::net::Activation;
    use dbsn_core::physics::FamilyKind;

    fn small_model() -> DbsnModel {
        DbsnModel::new(
            PdeFamily::new(FamilyKind::ConvectionDiffusion),
            vec![6, 6],
            3,
            vec![8, 8],
            Activation::Relu,
            42,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let model = small_model();
        save_checkpoint(&path, &model).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back.counts, model.counts);
        assert_eq!(back.order, model.order);
        assert_eq!(back.net_spec, model.net_spec);
        let a = model.params.flatten();
        let b = back.params.flatten();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn rejects_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let model = small_model();
        save_checkpoint(&path, &model).unwrap();

        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 4);
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_checkpoint(&path).is_err());

        std::fs::write(&path, b"not a checkpoint\nend\n").unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
