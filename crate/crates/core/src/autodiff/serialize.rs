//! Versioned little-endian tape files.
//!
//! ```text
//! magic      5 bytes  "RBDT1"
//! n_inputs   u32
//! n_nodes    u32
//! n_outputs  u32
//! n_compare  u32      primal comparisons seen while recording
//! nodes      n_nodes x { op: u8, arg0: u32, arg1: u32, value: f64 }
//! outputs    n_outputs x u32
//! ```

use std::io::{Read, Write};

use super::op::Op;
use super::tape::{Node, Tape};
use crate::error::{Error, Result};

pub const TAPE_MAGIC: &[u8; 5] = b"RBDT1";

pub fn write_tape<W: Write>(tape: &Tape, mut w: W) -> Result<()> {
    w.write_all(TAPE_MAGIC)?;
    for v in [
        tape.n_inputs(),
        tape.nodes().len(),
        tape.n_outputs(),
        tape.branch_comparisons(),
    ] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    for node in tape.nodes() {
        w.write_all(&[node.op as u8])?;
        w.write_all(&node.args[0].to_le_bytes())?;
        w.write_all(&node.args[1].to_le_bytes())?;
        w.write_all(&node.value.to_le_bytes())?;
    }
    for &o in tape.outputs() {
        w.write_all(&o.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_tape<R: Read>(mut r: R) -> Result<Tape> {
    let mut magic = [0u8; 5];
    read_exact(&mut r, &mut magic)?;
    if &magic != TAPE_MAGIC {
        return Err(Error::TapeFormat("bad magic, expected RBDT1".into()));
    }
    let n_inputs = read_u32(&mut r)? as usize;
    let n_nodes = read_u32(&mut r)? as usize;
    let n_outputs = read_u32(&mut r)? as usize;
    let n_compare = read_u32(&mut r)? as usize;
    let mut nodes = Vec::with_capacity(n_nodes.min(1 << 24));
    for i in 0..n_nodes {
        let mut code = [0u8; 1];
        read_exact(&mut r, &mut code)?;
        let op = Op::from_u8(code[0])
            .ok_or_else(|| Error::TapeFormat(format!("node {i}: unknown opcode {}", code[0])))?;
        let a = read_u32(&mut r)?;
        let b = read_u32(&mut r)?;
        let mut buf = [0u8; 8];
        read_exact(&mut r, &mut buf)?;
        nodes.push(Node {
            op,
            args: [a, b],
            value: f64::from_le_bytes(buf),
        });
    }
    let mut outputs = Vec::with_capacity(n_outputs.min(1 << 20));
    for _ in 0..n_outputs {
        outputs.push(read_u32(&mut r)?);
    }
    let mut tape = Tape::from_parts(nodes, n_inputs, outputs)?;
    tape.set_branch_comparisons(n_compare);
    Ok(tape)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::TapeFormat("truncated file".into()),
        _ => Error::Io(e),
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{record, Scalar};
    use proptest::prelude::*;

    fn sample_tape(a: f64, b: f64) -> Tape {
        record(&[a, b], |x| {
            let v = (x[0] * x[1]).sin() + x[1].exp() / (x[0] * x[0] + Scalar::from_f64(1.0));
            Ok(vec![v, x[0] - x[1]])
        })
        .unwrap()
    }

    #[test]
    fn header_layout() {
        let tape = sample_tape(1.0, 2.0);
        let mut bytes = Vec::new();
        write_tape(&tape, &mut bytes).unwrap();
        assert_eq!(&bytes[..5], b"RBDT1");
        assert_eq!(u32::from_le_bytes(bytes[5..9].try_into().unwrap()), 2);
        assert_eq!(
            bytes.len(),
            5 + 16 + 17 * tape.nodes().len() + 4 * tape.n_outputs()
        );
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let tape = sample_tape(1.0, 2.0);
        let mut bytes = Vec::new();
        write_tape(&tape, &mut bytes).unwrap();
        let mut wrong = bytes.clone();
        wrong[4] = b'2';
        assert!(matches!(read_tape(&wrong[..]), Err(Error::TapeFormat(_))));
        assert!(matches!(
            read_tape(&bytes[..bytes.len() - 3]),
            Err(Error::TapeFormat(_))
        ));
    }

    proptest! {
        #[test]
        fn round_trip_preserves_tape(a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let tape = sample_tape(a, b);
            let mut bytes = Vec::new();
            write_tape(&tape, &mut bytes).unwrap();
            let back = read_tape(&bytes[..]).unwrap();
            prop_assert_eq!(&back, &tape);
        }
    }
}
