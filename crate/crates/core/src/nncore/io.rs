//! Parameter dump: `b"SGNN"`, version (u32), tensor count (u32), then per
//! tensor its axis count (u32), dims (u32 each) and little-endian f32 data.
//! All integers are little-endian.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{NnError, Result, Scalar, Tensor};

const MAGIC: &[u8; 4] = b"SGNN";
const VERSION: u32 = 1;

pub fn write_tensors<T: Scalar, W: Write>(out: &mut W, tensors: &[&Tensor<T>]) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_u32::<LittleEndian>(VERSION)?;
    out.write_u32::<LittleEndian>(tensors.len() as u32)?;
    for t in tensors {
        out.write_u32::<LittleEndian>(t.shape().len() as u32)?;
        for &d in t.shape() {
            out.write_u32::<LittleEndian>(d as u32)?;
        }
        for &v in t.data() {
            out.write_f32::<LittleEndian>(v.to_f64() as f32)?;
        }
    }
    Ok(())
}

pub fn read_tensors<T: Scalar, R: Read>(input: &mut R) -> Result<Vec<Tensor<T>>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NnError::Format("not a parameter file (bad magic)".into()));
    }
    let version = input.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(NnError::Format(format!("unsupported parameter file version {version}")));
    }
    let count = input.read_u32::<LittleEndian>()?;
    let mut out = Vec::with_capacity(count.min(1024) as usize);
    for i in 0..count {
        let ndim = input.read_u32::<LittleEndian>()? as usize;
        if !(1..=4).contains(&ndim) {
            return Err(NnError::Format(format!("tensor {i}: {ndim} axes")));
        }
        let shape = (0..ndim)
            .map(|_| input.read_u32::<LittleEndian>().map(|d| d as usize))
            .collect::<std::io::Result<Vec<_>>>()?;
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len.min(1 << 24));
        for _ in 0..len {
            data.push(T::from_f64(input.read_f32::<LittleEndian>()? as f64));
        }
        out.push(Tensor::from_vec(&shape, data).map_err(|e| NnError::Format(format!("tensor {i}: {e}")))?);
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(NnError::Format("trailing bytes after last tensor".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let a = Tensor::from_vec(&[2, 3], vec![1.0f32, -2.5, 3.25, 0.0, 1e-3, 7.0]).unwrap();
        let b = Tensor::from_vec(&[1, 1, 2, 1], vec![9.0f32, -9.0]).unwrap();
        let mut buf = Vec::new();
        write_tensors(&mut buf, &[&a, &b]).unwrap();
        assert_eq!(buf.len(), 12 + (4 + 8 + 24) + (4 + 16 + 8));
        let back: Vec<Tensor<f32>> = read_tensors(&mut buf.as_slice()).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_tensors::<f32, _>(&mut &b"NOPE\x01\0\0\0\0\0\0\0"[..]), Err(NnError::Format(_))));
        let mut buf = Vec::new();
        write_tensors::<f32, _>(&mut buf, &[]).unwrap();
        buf.push(0);
        assert!(read_tensors::<f32, _>(&mut buf.as_slice()).is_err());
    }
}
