//! User data as code messages, split into equal shards across servers.

use std::ops::Range;

use crate::error::{format_err, usage, Result};
use crate::field::{BigNat, FieldElement, PrimeField};

/// How a message is split across `servers`; every shard has `shard_len`
/// units (symbols for RS, bytes for CRT).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShardLayout {
    pub servers: usize,
    pub shard_len: usize,
}

impl ShardLayout {
    pub fn range(&self, shard: usize) -> Range<usize> {
        shard * self.shard_len..(shard + 1) * self.shard_len
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessageData {
    /// Field symbols `x_0, …, x_{k−1}` for the RS hash.
    Symbols(Vec<FieldElement>),
    /// One integer per shard for the residue hash.
    Integers(Vec<BigNat>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    data: MessageData,
    layout: ShardLayout,
    original_byte_length: u64,
}

impl Message {
    /// Wraps symbols, zero-padding the tail so `servers` divides the length.
    pub fn from_symbols(mut symbols: Vec<FieldElement>, servers: usize) -> Result<Self> {
        if servers == 0 {
            return Err(usage("need at least one server"));
        }
        let field = symbols
            .first()
            .map(|s| s.field())
            .ok_or_else(|| usage("message has no symbols"))?;
        if symbols.iter().any(|s| s.field() != field) {
            return Err(usage("message symbols span several fields"));
        }
        let k = symbols.len().div_ceil(servers) * servers;
        symbols.resize(k, field.zero());
        Ok(Message {
            data: MessageData::Symbols(symbols),
            layout: ShardLayout {
                servers,
                shard_len: k / servers,
            },
            original_byte_length: 0,
        })
    }

    /// Packs bytes into symbols of `⌊log₂ q⌋` bits each, big-endian bit
    /// order, zero-filling the last symbol and padding to a multiple of
    /// `servers` symbols.
    pub fn pack_bytes(bytes: &[u8], field: PrimeField, servers: usize) -> Result<Self> {
        let width = field.symbol_bits();
        if width == 0 || width > 63 {
            return Err(usage(format!("cannot pack bytes into {field}")));
        }
        let mut symbols = Vec::with_capacity(bytes.len() * 8 / width as usize + 1);
        let mut acc: u128 = 0;
        let mut held = 0u32;
        for &b in bytes {
            acc = (acc << 8) | b as u128;
            held += 8;
            while held >= width {
                held -= width;
                symbols.push(field.element(((acc >> held) as u64) & ((1 << width) - 1)));
            }
            acc &= (1u128 << held) - 1;
        }
        if held > 0 {
            symbols.push(field.element((acc << (width - held)) as u64));
        }
        if symbols.is_empty() {
            symbols.push(field.zero());
        }
        let mut msg = Self::from_symbols(symbols, servers)?;
        msg.original_byte_length = bytes.len() as u64;
        Ok(msg)
    }

    /// Splits bytes into `servers` equal chunks (zero-padded at the end);
    /// each chunk is read as a big-endian integer.
    pub fn integers_from_bytes(bytes: &[u8], servers: usize) -> Result<Self> {
        if servers == 0 {
            return Err(usage("need at least one server"));
        }
        let shard_len = bytes.len().div_ceil(servers).max(1);
        let mut padded = bytes.to_vec();
        padded.resize(shard_len * servers, 0);
        let ints = padded
            .chunks(shard_len)
            .map(BigNat::from_bytes_be)
            .collect();
        Ok(Message {
            data: MessageData::Integers(ints),
            layout: ShardLayout { servers, shard_len },
            original_byte_length: bytes.len() as u64,
        })
    }

    /// Recovers the original bytes.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let len = self.original_byte_length as usize;
        let mut out = match &self.data {
            MessageData::Symbols(symbols) => {
                let width = symbols[0].field().symbol_bits();
                let mut out = Vec::with_capacity(len + 8);
                let mut acc: u128 = 0;
                let mut held = 0u32;
                for s in symbols {
                    acc = (acc << width) | s.value() as u128;
                    held += width;
                    while held >= 8 {
                        held -= 8;
                        out.push((acc >> held) as u8);
                    }
                    acc &= (1u128 << held) - 1;
                }
                out
            }
            MessageData::Integers(ints) => {
                let mut out = Vec::with_capacity(self.layout.shard_len * ints.len());
                for x in ints {
                    out.extend(x.to_bytes_be_padded(self.layout.shard_len)?);
                }
                out
            }
        };
        if out.len() < len {
            return Err(format_err("message holds fewer bytes than recorded"));
        }
        out.truncate(len);
        Ok(out)
    }

    pub fn data(&self) -> &MessageData {
        &self.data
    }

    pub fn layout(&self) -> ShardLayout {
        self.layout
    }

    pub fn servers(&self) -> usize {
        self.layout.servers
    }

    pub fn original_byte_length(&self) -> u64 {
        self.original_byte_length
    }

    pub fn set_original_byte_length(&mut self, len: u64) {
        self.original_byte_length = len;
    }

    /// All symbols of an RS message.
    pub fn symbols(&self) -> Result<&[FieldElement]> {
        match &self.data {
            MessageData::Symbols(s) => Ok(s),
            MessageData::Integers(_) => Err(usage("residue-hash message has no field symbols")),
        }
    }

    /// Symbol count `k` (RS) or shard count (CRT).
    pub fn len(&self) -> usize {
        match &self.data {
            MessageData::Symbols(s) => s.len(),
            MessageData::Integers(i) => i.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shard_symbols(&self, shard: usize) -> Result<&[FieldElement]> {
        self.check_shard(shard)?;
        Ok(&self.symbols()?[self.layout.range(shard)])
    }

    /// Symbol offset of `shard` inside the full message.
    pub fn shard_offset(&self, shard: usize) -> usize {
        shard * self.layout.shard_len
    }

    pub fn shard_integer(&self, shard: usize) -> Result<&BigNat> {
        self.check_shard(shard)?;
        match &self.data {
            MessageData::Integers(i) => Ok(&i[shard]),
            MessageData::Symbols(_) => Err(usage("RS message has no integer shards")),
        }
    }

    /// `x̂_i`: shard `i` in place, zeros elsewhere.
    pub fn embedded_shard(&self, shard: usize) -> Result<Vec<FieldElement>> {
        let symbols = self.symbols()?;
        self.check_shard(shard)?;
        let range = self.layout.range(shard);
        Ok(symbols
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                if range.contains(&i) {
                    s
                } else {
                    s.field().zero()
                }
            })
            .collect())
    }

    fn check_shard(&self, shard: usize) -> Result<()> {
        if shard >= self.layout.servers {
            return Err(usage(format!(
                "shard {shard} >= server count {}",
                self.layout.servers
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DEFAULT_MODULUS;
    use proptest::prelude::*;

    #[test]
    fn padding_to_server_multiple() {
        let f = PrimeField::new(17).unwrap();
        let msg = Message::from_symbols(vec![f.one(); 5], 3).unwrap();
        assert_eq!(msg.len(), 6);
        assert_eq!(msg.layout().shard_len, 2);
        assert_eq!(msg.shard_symbols(2).unwrap(), &[f.one(), f.zero()]);
        assert_eq!(
            msg.embedded_shard(1).unwrap()[..4],
            [f.zero(), f.zero(), f.one(), f.one()]
        );
        assert!(msg.shard_symbols(3).is_err());
    }

    #[test]
    fn bit_packing_big_endian() {
        let f = PrimeField::new(17).unwrap(); // 4 bits per symbol
        let msg = Message::pack_bytes(&[0xAB, 0xC0], f, 1).unwrap();
        let v: Vec<u64> = msg.symbols().unwrap().iter().map(|e| e.value()).collect();
        assert_eq!(v, vec![0xA, 0xB, 0xC, 0x0]);
        let f = PrimeField::new(DEFAULT_MODULUS).unwrap(); // 30 bits
        let msg = Message::pack_bytes(&[0xFF; 4], f, 1).unwrap();
        let v: Vec<u64> = msg.symbols().unwrap().iter().map(|e| e.value()).collect();
        assert_eq!(v, vec![(1 << 30) - 1, 0b11 << 28]);
    }

    #[test]
    fn empty_input_gives_one_zero_symbol_per_server() {
        let f = PrimeField::new(257).unwrap();
        let msg = Message::pack_bytes(&[], f, 4).unwrap();
        assert_eq!(msg.len(), 4);
        assert!(msg.to_bytes().unwrap().is_empty());
    }

    #[test]
    fn integer_shards() {
        let msg = Message::integers_from_bytes(&[1, 2, 3], 2).unwrap();
        assert_eq!(msg.layout().shard_len, 2);
        assert_eq!(msg.shard_integer(0).unwrap(), &BigNat::from_u64(0x0102));
        assert_eq!(msg.shard_integer(1).unwrap(), &BigNat::from_u64(0x0300));
        assert_eq!(msg.to_bytes().unwrap(), vec![1, 2, 3]);
    }

    proptest! {
        #[test]
        fn packing_round_trips(bytes in proptest::collection::vec(any::<u8>(), 0..200), q in prop::sample::select(vec![2u64, 3, 17, 257, 65537, DEFAULT_MODULUS]), s in 1usize..5) {
            let f = PrimeField::new(q).unwrap();
            let msg = Message::pack_bytes(&bytes, f, s).unwrap();
            prop_assert_eq!(msg.len() % s, 0);
            prop_assert_eq!(msg.to_bytes().unwrap(), bytes.clone());
            let ints = Message::integers_from_bytes(&bytes, s).unwrap();
            prop_assert_eq!(ints.to_bytes().unwrap(), bytes);
        }
    }
}
