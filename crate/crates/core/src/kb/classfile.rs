//! Minimal class-file reader: constant pool, access flags, names and the
//! member tables. Attributes and bytecode are skipped.

use thiserror::Error;

#[cfg(test)]
pub const ACC_PUBLIC: u16 = 0x0001;
pub const ACC_PRIVATE: u16 = 0x0002;
pub const ACC_BRIDGE: u16 = 0x0040;
pub const ACC_INTERFACE: u16 = 0x0200;
pub const ACC_ABSTRACT: u16 = 0x0400;
pub const ACC_SYNTHETIC: u16 = 0x1000;
pub const ACC_ANNOTATION: u16 = 0x2000;
pub const ACC_MODULE: u16 = 0x8000;

const MAGIC: u32 = 0xCAFE_BABE;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassParseError {
    #[error("unexpected end of class file at byte {0}")]
    Truncated(usize),
    #[error("bad magic number {0:#010x}")]
    BadMagic(u32),
    #[error("unknown constant pool tag {tag} at entry {index}")]
    BadConstant { index: u16, tag: u8 },
    #[error("constant pool index {0} does not point at the expected entry")]
    BadIndex(u16),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Member {
    pub name: String,
    pub access: u16,
}

/// One parsed class, names in dotted binary form (`a.b.Outer$Inner`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawClass {
    pub name: String,
    pub super_name: Option<String>,
    pub access: u16,
    pub fields: Vec<Member>,
    pub methods: Vec<Member>,
}

#[derive(Debug, Clone)]
enum Constant {
    Utf8(String),
    Class(u16),
    Other,
    /// Second slot of a Long or Double.
    Unusable,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ClassParseError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(ClassParseError::Truncated(self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u1(&mut self) -> Result<u8, ClassParseError> {
        Ok(self.take(1)?[0])
    }

    fn u2(&mut self) -> Result<u16, ClassParseError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u4(&mut self) -> Result<u32, ClassParseError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn skip_attributes(&mut self) -> Result<(), ClassParseError> {
        let n = self.u2()?;
        for _ in 0..n {
            self.u2()?;
            let len = self.u4()? as usize;
            self.take(len)?;
        }
        Ok(())
    }
}

struct Pool(Vec<Constant>);

impl Pool {
    fn utf8(&self, i: u16) -> Result<&str, ClassParseError> {
        match self.0.get(i as usize) {
            Some(Constant::Utf8(s)) => Ok(s),
            _ => Err(ClassParseError::BadIndex(i)),
        }
    }

    fn class_name(&self, i: u16) -> Result<String, ClassParseError> {
        match self.0.get(i as usize) {
            Some(Constant::Class(n)) => Ok(self.utf8(*n)?.replace('/', ".")),
            _ => Err(ClassParseError::BadIndex(i)),
        }
    }
}

fn read_pool(r: &mut Reader) -> Result<Pool, ClassParseError> {
    let count = r.u2()?;
    let mut pool = vec![Constant::Unusable];
    let mut i = 1u16;
    while i < count {
        let tag = r.u1()?;
        let c = match tag {
            1 => {
                let len = r.u2()? as usize;
                Constant::Utf8(String::from_utf8_lossy(r.take(len)?).into_owned())
            }
            7 => Constant::Class(r.u2()?),
            3 | 4 => {
                r.take(4)?;
                Constant::Other
            }
            5 | 6 => {
                r.take(8)?;
                pool.push(Constant::Other);
                i += 1;
                Constant::Unusable
            }
            8 | 16 | 19 | 20 => {
                r.take(2)?;
                Constant::Other
            }
            9 | 10 | 11 | 12 | 17 | 18 => {
                r.take(4)?;
                Constant::Other
            }
            15 => {
                r.take(3)?;
                Constant::Other
            }
            _ => return Err(ClassParseError::BadConstant { index: i, tag }),
        };
        pool.push(c);
        i += 1;
    }
    Ok(Pool(pool))
}

fn read_members(r: &mut Reader, pool: &Pool) -> Result<Vec<Member>, ClassParseError> {
    let n = r.u2()?;
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let access = r.u2()?;
        let name = pool.utf8(r.u2()?)?.to_string();
        r.u2()?; // descriptor
        r.skip_attributes()?;
        out.push(Member { name, access });
    }
    Ok(out)
}

pub fn parse_class(bytes: &[u8]) -> Result<RawClass, ClassParseError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.u4()?;
    if magic != MAGIC {
        return Err(ClassParseError::BadMagic(magic));
    }
    r.u2()?;
    r.u2()?;
    let pool = read_pool(&mut r)?;
    let access = r.u2()?;
    let name = pool.class_name(r.u2()?)?;
    let super_idx = r.u2()?;
    let super_name = if super_idx == 0 {
        None
    } else {
        Some(pool.class_name(super_idx)?)
    };
    let interfaces = r.u2()?;
    r.take(2 * interfaces as usize)?;
    let fields = read_members(&mut r, &pool)?;
    let methods = read_members(&mut r, &pool)?;
    r.skip_attributes()?;
    Ok(RawClass {
        name,
        super_name,
        access,
        fields,
        methods,
    })
}


#[cfg(test)]
mod tests {
    use super::testgen::*;
    use super::*;

    #[test]
    fn round_trip_generated_class() {
        let bytes = write_class(&ClassSpec {
            name: "p.q.Outer$Inner",
            super_name: Some("java.lang.Object"),
            access: ACC_PUBLIC,
            fields: &[("count", ACC_PRIVATE)],
            methods: &[("<init>", ACC_PUBLIC), ("run", ACC_PUBLIC)],
        });
        let c = parse_class(&bytes).unwrap();
        assert_eq!(c.name, "p.q.Outer$Inner");
        assert_eq!(c.super_name.as_deref(), Some("java.lang.Object"));
        assert_eq!(c.fields[0].name, "count");
        assert_eq!(c.methods.iter().map(|m| m.name.as_str()).collect::<Vec<_>>(), ["<init>", "run"]);
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!(parse_class(&[0xCA, 0xFE]), Err(ClassParseError::Truncated(0)));
        assert_eq!(parse_class(&[0, 0, 0, 1, 0, 0]), Err(ClassParseError::BadMagic(1)));
        let mut bytes = write_class(&ClassSpec {
            name: "a.B",
            super_name: None,
            access: ACC_PUBLIC,
            fields: &[],
            methods: &[],
        });
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(parse_class(&bytes), Err(ClassParseError::Truncated(_))));
    }
}
