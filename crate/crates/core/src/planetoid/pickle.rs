//! Just enough of the pickle protocol (0 to 5) to read the planetoid files:
//! numpy arrays, lists, dicts and `collections.defaultdict`.

use std::cell::RefCell;
use std::rc::Rc;

use crate::error::{HgmnError, Result};

#[derive(Debug, Clone)]
pub enum Value {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Bytes(Vec<u8>),
    Tuple(Rc<Vec<Value>>),
    List(Rc<RefCell<Vec<Value>>>),
    Dict(Rc<RefCell<Vec<(Value, Value)>>>),
    Global(Rc<(String, String)>),
    Object(Rc<RefCell<Object>>),
}

/// Result of calling a global; what it means is decided by the caller.
#[derive(Debug, Clone)]
pub struct Object {
    pub module: String,
    pub name: String,
    pub args: Vec<Value>,
    pub state: Option<Value>,
    pub dict_items: Vec<(Value, Value)>,
    pub list_items: Vec<Value>,
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            Value::Bool(b) => Some(*b as i64),
            _ => None,
        }
    }

    /// Text of a `str`, or of a Python 2 byte string read as latin-1.
    pub fn as_text(&self) -> Option<String> {
        match self {
            Value::Str(s) => Some(s.clone()),
            Value::Bytes(b) => Some(b.iter().map(|&c| c as char).collect()),
            _ => None,
        }
    }

    pub fn items(&self) -> Option<Vec<Value>> {
        match self {
            Value::Tuple(t) => Some(t.to_vec()),
            Value::List(l) => Some(l.borrow().clone()),
            _ => None,
        }
    }

    /// Key/value pairs of a dict or dict-like object.
    pub fn dict_items(&self) -> Option<Vec<(Value, Value)>> {
        match self {
            Value::Dict(d) => Some(d.borrow().clone()),
            Value::Object(o) => Some(o.borrow().dict_items.clone()),
            _ => None,
        }
    }
}

fn err(msg: impl Into<String>) -> HgmnError {
    HgmnError::Pickle(msg.into())
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| err(format!("truncated stream at byte {}", self.pos)))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn le(&mut self, n: usize) -> Result<u64> {
        Ok(self.take(n)?.iter().rev().fold(0u64, |acc, &b| (acc << 8) | b as u64))
    }

    fn line(&mut self) -> Result<&'a str> {
        let rest = &self.data[self.pos..];
        let n = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| err("unterminated text argument"))?;
        self.pos += n + 1;
        std::str::from_utf8(&rest[..n]).map_err(|_| err("text argument is not UTF-8"))
    }
}

fn utf8(b: &[u8]) -> Result<String> {
    String::from_utf8(b.to_vec()).map_err(|_| err("invalid UTF-8 in unicode string"))
}

enum Slot {
    Mark,
    V(Value),
}

struct Machine {
    stack: Vec<Slot>,
    memo: std::collections::HashMap<u64, Value>,
}

impl Machine {
    fn push(&mut self, v: Value) {
        self.stack.push(Slot::V(v));
    }

    fn pop(&mut self) -> Result<Value> {
        match self.stack.pop() {
            Some(Slot::V(v)) => Ok(v),
            Some(Slot::Mark) => Err(err("unexpected mark")),
            None => Err(err("stack underflow")),
        }
    }

    fn top(&self) -> Result<&Value> {
        match self.stack.last() {
            Some(Slot::V(v)) => Ok(v),
            _ => Err(err("expected a value on the stack")),
        }
    }

    fn pop_mark(&mut self) -> Result<Vec<Value>> {
        let pos = self
            .stack
            .iter()
            .rposition(|s| matches!(s, Slot::Mark))
            .ok_or_else(|| err("no mark on the stack"))?;
        let items = self
            .stack
            .drain(pos + 1..)
            .map(|s| match s {
                Slot::V(v) => v,
                Slot::Mark => unreachable!(),
            })
            .collect();
        self.stack.pop();
        Ok(items)
    }

    fn put(&mut self, key: u64) -> Result<()> {
        let v = self.top()?.clone();
        self.memo.insert(key, v);
        Ok(())
    }

    fn get(&mut self, key: u64) -> Result<()> {
        let v = self.memo.get(&key).cloned().ok_or_else(|| err(format!("memo key {key} missing")))?;
        self.push(v);
        Ok(())
    }

    fn call(&mut self, callable: Value, args: Vec<Value>) -> Result<Value> {
        let Value::Global(g) = callable else {
            return Err(err("REDUCE on a non-global"));
        };
        let (module, name) = (g.0.as_str(), g.1.as_str());
        Ok(match (module, name) {
            ("_codecs", "encode") => {
                let s = args.first().and_then(Value::as_text).ok_or_else(|| err("_codecs.encode without text"))?;
                let bytes = s
                    .chars()
                    .map(|c| u8::try_from(c as u32).map_err(|_| err("non latin-1 character in byte string")))
                    .collect::<Result<_>>()?;
                Value::Bytes(bytes)
            }
            ("__builtin__" | "builtins", "set" | "frozenset" | "list") => {
                Value::List(Rc::new(RefCell::new(args.first().and_then(Value::items).unwrap_or_default())))
            }
            _ => Value::Object(Rc::new(RefCell::new(Object {
                module: module.to_string(),
                name: name.to_string(),
                args,
                state: None,
                dict_items: Vec::new(),
                list_items: Vec::new(),
            }))),
        })
    }
}

/// Decodes one pickle stream.
pub fn loads(data: &[u8]) -> Result<Value> {
    let mut r = Reader { data, pos: 0 };
    let mut m = Machine {
        stack: Vec::new(),
        memo: Default::default(),
    };
    loop {
        let op = r.u8()?;
        match op {
            0x80 => {
                r.u8()?;
            }
            0x95 => {
                r.take(8)?;
            }
            b'.' => return m.pop(),
            b'(' => m.stack.push(Slot::Mark),
            b'0' => {
                m.stack.pop();
            }
            b'2' => {
                let v = m.top()?.clone();
                m.push(v);
            }
            b'1' => {
                m.pop_mark()?;
            }
            b'N' => m.push(Value::None),
            0x88 => m.push(Value::Bool(true)),
            0x89 => m.push(Value::Bool(false)),
            b'I' => {
                let s = r.line()?;
                m.push(match s {
                    "01" => Value::Bool(true),
                    "00" => Value::Bool(false),
                    _ => Value::Int(s.parse().map_err(|_| err(format!("bad INT `{s}`")))?),
                });
            }
            b'L' => {
                let s = r.line()?.trim_end_matches('L');
                m.push(Value::Int(s.parse().map_err(|_| err(format!("bad LONG `{s}`")))?));
            }
            b'J' => {
                let v = r.le(4)? as u32 as i32;
                m.push(Value::Int(v as i64));
            }
            b'K' => {
                let v = r.u8()?;
                m.push(Value::Int(v as i64));
            }
            b'M' => {
                let v = r.le(2)?;
                m.push(Value::Int(v as i64));
            }
            0x8a => {
                let n = r.u8()? as usize;
                let b = r.take(n)?;
                if n > 8 {
                    return Err(err("LONG1 wider than 64 bits"));
                }
                let mut v: i64 = 0;
                for (i, &x) in b.iter().enumerate() {
                    v |= (x as i64) << (8 * i);
                }
                if n > 0 && n < 8 && b[n - 1] & 0x80 != 0 {
                    v -= 1i64 << (8 * n);
                }
                m.push(Value::Int(v));
            }
            b'F' => {
                let s = r.line()?;
                m.push(Value::Float(s.parse().map_err(|_| err(format!("bad FLOAT `{s}`")))?));
            }
            b'G' => {
                let b = r.take(8)?;
                m.push(Value::Float(f64::from_be_bytes(b.try_into().expect("8 bytes"))));
            }
            b'S' => {
                let s = r.line()?;
                let inner = s
                    .strip_prefix(['\'', '"'])
                    .and_then(|x| x.strip_suffix(['\'', '"']))
                    .ok_or_else(|| err("bad STRING"))?;
                m.push(Value::Bytes(inner.as_bytes().to_vec()));
            }
            b'V' => {
                let s = r.line()?;
                m.push(Value::Str(s.to_string()));
            }
            b'T' => {
                let n = r.le(4)? as usize;
                m.push(Value::Bytes(r.take(n)?.to_vec()));
            }
            b'U' | b'C' => {
                let n = r.u8()? as usize;
                m.push(Value::Bytes(r.take(n)?.to_vec()));
            }
            b'B' => {
                let n = r.le(4)? as usize;
                m.push(Value::Bytes(r.take(n)?.to_vec()));
            }
            0x8e => {
                let n = r.le(8)? as usize;
                m.push(Value::Bytes(r.take(n)?.to_vec()));
            }
            0x8c => {
                let n = r.u8()? as usize;
                m.push(Value::Str(utf8(r.take(n)?)?));
            }
            b'X' => {
                let n = r.le(4)? as usize;
                m.push(Value::Str(utf8(r.take(n)?)?));
            }
            0x8d => {
                let n = r.le(8)? as usize;
                m.push(Value::Str(utf8(r.take(n)?)?));
            }
            b')' => m.push(Value::Tuple(Rc::new(Vec::new()))),
            b't' => {
                let items = m.pop_mark()?;
                m.push(Value::Tuple(Rc::new(items)));
            }
            0x85..=0x87 => {
                let n = (op - 0x84) as usize;
                let mut items = Vec::with_capacity(n);
                for _ in 0..n {
                    items.push(m.pop()?);
                }
                items.reverse();
                m.push(Value::Tuple(Rc::new(items)));
            }
            b']' => m.push(Value::List(Rc::new(RefCell::new(Vec::new())))),
            b'l' => {
                let items = m.pop_mark()?;
                m.push(Value::List(Rc::new(RefCell::new(items))));
            }
            b'a' | b'e' => {
                let items = if op == b'a' { vec![m.pop()?] } else { m.pop_mark()? };
                match m.top()? {
                    Value::List(l) => l.borrow_mut().extend(items),
                    Value::Object(o) => o.borrow_mut().list_items.extend(items),
                    _ => return Err(err("APPEND target is not a list")),
                }
            }
            b'}' => m.push(Value::Dict(Rc::new(RefCell::new(Vec::new())))),
            b'd' => {
                let items = m.pop_mark()?;
                m.push(Value::Dict(Rc::new(RefCell::new(pairs(items)?))));
            }
            b's' | b'u' => {
                let items = if op == b's' {
                    let v = m.pop()?;
                    let k = m.pop()?;
                    vec![k, v]
                } else {
                    m.pop_mark()?
                };
                let kv = pairs(items)?;
                match m.top()? {
                    Value::Dict(d) => d.borrow_mut().extend(kv),
                    Value::Object(o) => o.borrow_mut().dict_items.extend(kv),
                    _ => return Err(err("SETITEM target is not a dict")),
                }
            }
            0x8f => m.push(Value::List(Rc::new(RefCell::new(Vec::new())))),
            0x90 => {
                let items = m.pop_mark()?;
                match m.top()? {
                    Value::List(l) => l.borrow_mut().extend(items),
                    _ => return Err(err("ADDITEMS target is not a set")),
                }
            }
            0x91 => {
                let items = m.pop_mark()?;
                m.push(Value::List(Rc::new(RefCell::new(items))));
            }
            b'c' => {
                let module = r.line()?.to_string();
                let name = r.line()?.to_string();
                m.push(Value::Global(Rc::new((module, name))));
            }
            0x93 => {
                let name = m.pop()?.as_text().ok_or_else(|| err("STACK_GLOBAL name"))?;
                let module = m.pop()?.as_text().ok_or_else(|| err("STACK_GLOBAL module"))?;
                m.push(Value::Global(Rc::new((module, name))));
            }
            b'R' => {
                let args = m.pop()?.items().ok_or_else(|| err("REDUCE arguments are not a tuple"))?;
                let callable = m.pop()?;
                let v = m.call(callable, args)?;
                m.push(v);
            }
            0x81 => {
                let args = m.pop()?.items().ok_or_else(|| err("NEWOBJ arguments are not a tuple"))?;
                let cls = m.pop()?;
                let v = m.call(cls, args)?;
                m.push(v);
            }
            0x92 => {
                m.pop()?;
                let args = m.pop()?.items().ok_or_else(|| err("NEWOBJ_EX arguments are not a tuple"))?;
                let cls = m.pop()?;
                let v = m.call(cls, args)?;
                m.push(v);
            }
            b'b' => {
                let state = m.pop()?;
                match m.top()? {
                    Value::Object(o) => o.borrow_mut().state = Some(state),
                    _ => return Err(err("BUILD target is not an object")),
                }
            }
            b'p' => {
                let k = r.line()?.parse().map_err(|_| err("bad PUT key"))?;
                m.put(k)?;
            }
            b'q' => {
                let k = r.u8()? as u64;
                m.put(k)?;
            }
            b'r' => {
                let k = r.le(4)?;
                m.put(k)?;
            }
            0x94 => {
                let k = m.memo.len() as u64;
                m.put(k)?;
            }
            b'g' => {
                let k = r.line()?.parse().map_err(|_| err("bad GET key"))?;
                m.get(k)?;
            }
            b'h' => {
                let k = r.u8()? as u64;
                m.get(k)?;
            }
            b'j' => {
                let k = r.le(4)?;
                m.get(k)?;
            }
            other => return Err(err(format!("unsupported opcode 0x{other:02x} at byte {}", r.pos - 1))),
        }
    }
}

fn pairs(items: Vec<Value>) -> Result<Vec<(Value, Value)>> {
    if !items.len().is_multiple_of(2) {
        return Err(err("odd number of dict items"));
    }
    let mut it = items.into_iter();
    let mut out = Vec::new();
    while let (Some(k), Some(v)) = (it.next(), it.next()) {
        out.push((k, v));
    }
    Ok(out)
}

/// A decoded numeric numpy array, row-major, converted to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct NdArray {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Interprets a value produced by `numpy.ndarray.__reduce__`.
pub fn ndarray(v: &Value) -> Result<NdArray> {
    let Value::Object(o) = v else {
        return Err(err("expected a numpy array"));
    };
    let o = o.borrow();
    if o.name != "_reconstruct" || !o.module.ends_with("multiarray") {
        return Err(err(format!("expected a numpy array, found {}.{}", o.module, o.name)));
    }
    let state = o
        .state
        .as_ref()
        .and_then(Value::items)
        .ok_or_else(|| err("numpy array without state"))?;
    // (version, shape, dtype, is_fortran, raw)
    let [_, shape, dtype, fortran, raw] = state.as_slice() else {
        return Err(err("unexpected numpy array state"));
    };
    let shape: Vec<usize> = shape
        .items()
        .ok_or_else(|| err("array shape"))?
        .iter()
        .map(|d| d.as_int().and_then(|x| usize::try_from(x).ok()).ok_or_else(|| err("array shape")))
        .collect::<Result<_>>()?;
    let (code, big_endian) = dtype_code(dtype)?;
    let Value::Bytes(raw) = raw else {
        return Err(err("object arrays are not supported"));
    };
    let width = match code.as_str() {
        "f8" | "i8" | "u8" => 8,
        "f4" | "i4" | "u4" => 4,
        "i2" | "u2" => 2,
        "i1" | "u1" | "b1" => 1,
        other => return Err(err(format!("unsupported dtype {other}"))),
    };
    let count: usize = shape.iter().product();
    if raw.len() != count * width {
        return Err(err(format!("array holds {} bytes, expected {}", raw.len(), count * width)));
    }
    let data: Vec<f64> = raw
        .chunks_exact(width)
        .map(|c| {
            let mut b = [0u8; 8];
            if big_endian {
                for (i, &x) in c.iter().rev().enumerate() {
                    b[i] = x;
                }
            } else {
                b[..width].copy_from_slice(c);
            }
            let u = u64::from_le_bytes(b);
            match code.as_str() {
                "f8" => f64::from_bits(u),
                "f4" => f32::from_bits(u as u32) as f64,
                "i8" => u as i64 as f64,
                "i4" => u as u32 as i32 as f64,
                "i2" => u as u16 as i16 as f64,
                "i1" => u as u8 as i8 as f64,
                _ => u as f64,
            }
        })
        .collect();
    let data = if fortran.as_int() == Some(1) && shape.len() == 2 {
        let (r, c) = (shape[0], shape[1]);
        (0..r * c).map(|k| data[(k % c) * r + k / c]).collect()
    } else {
        data
    };
    Ok(NdArray { shape, data })
}

fn dtype_code(v: &Value) -> Result<(String, bool)> {
    let Value::Object(o) = v else {
        return Err(err("array dtype"));
    };
    let o = o.borrow();
    let code = o.args.first().and_then(Value::as_text).ok_or_else(|| err("array dtype code"))?;
    let order = o
        .state
        .as_ref()
        .and_then(Value::items)
        .and_then(|s| s.get(1).and_then(Value::as_text))
        .unwrap_or_else(|| "<".into());
    Ok((code, order == ">"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn python2_style_stream() {
        // protocol 2 as written by Python 2: byte strings, dict, list.
        let mut s = vec![0x80, 2, b'}', b'q', 0, b'(', b'U', 1, b'a', b']', b'q', 1];
        s.extend([b'(', b'K', 5, b'M', 0x34, 0x12, b'J', 0xff, 0xff, 0xff, 0xff, b'e']);
        s.extend([b'U', 1, b'b', b'h', 1, b'u', b'.']);
        let v = loads(&s).unwrap();
        let items = v.dict_items().unwrap();
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].0.as_text().unwrap(), "a");
        let list: Vec<i64> = items[1].1.items().unwrap().iter().map(|x| x.as_int().unwrap()).collect();
        assert_eq!(list, vec![5, 0x1234, -1]);
    }

    #[test]
    fn protocol0_text_opcodes() {
        let s = b"(lp0\nI3\naL-7L\naF0.5\na.";
        let v = loads(s).unwrap().items().unwrap();
        assert_eq!(v[0].as_int(), Some(3));
        assert_eq!(v[1].as_int(), Some(-7));
        assert!(matches!(v[2], Value::Float(x) if x == 0.5));
    }

    #[test]
    fn long1_sign() {
        let v = loads(&[0x80, 2, 0x8a, 2, 0x00, 0x80, b'.']).unwrap();
        assert_eq!(v.as_int(), Some(-32768));
    }

    #[test]
    fn truncated_and_unknown() {
        assert!(loads(&[0x80, 2, b'K']).is_err());
        assert!(loads(&[0x80, 2, 0xff]).is_err());
        assert!(loads(b".").is_err());
    }
}
