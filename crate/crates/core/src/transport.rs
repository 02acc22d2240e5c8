//! Coded packet transport: turn a payload into `k` data packets, encode them
//! into `n` coded packets, and stripe those across `l` disjoint paths.
//!
//! Each path's share is serialized as a self-describing stripe file. The
//! egress side collects whatever rows arrived on any path and decodes as
//! soon as `k` of them are available.
//!
//! Stripe file layout (big-endian):
//!
//! ```text
//! "CPT1" | version u8 | q u8 | k u16 | n u16 | l u8 | stripe u8 | L u32
//!        | original_len u64 | row_count u16 | row_count x u16 row indices
//!        | row_count x L payload bytes | crc32 u32
//! ```
//!
//! The CRC-32 (IEEE) covers every byte before it.

use std::collections::BTreeMap;
use std::ops::Range;

use num_rational::Ratio;

use crate::error::{CodeError, TransportError};
use crate::galois::Symbol;
use crate::rs_code::{self, CodeParams, GeneratorMatrix, PacketSet, Rows};

pub const MAGIC: &[u8; 4] = b"CPT1";
pub const VERSION: u8 = 1;

/// Fixed-size part of the header, before the row index list.
const HEADER_LEN: usize = 4 + 1 + 1 + 2 + 2 + 1 + 1 + 4 + 8 + 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CptConfig {
    pub params: CodeParams,
    /// Number of disjoint paths.
    pub l: usize,
}

impl CptConfig {
    pub fn new(k: usize, n: usize, l: usize, q: u8) -> Result<Self, TransportError> {
        let params = CodeParams::new(n, k, q)?;
        Self::from_params(params, l)
    }

    pub fn from_params(params: CodeParams, l: usize) -> Result<Self, TransportError> {
        params.validate()?;
        if l < 2 {
            return Err(TransportError::BadConfig(format!(
                "need at least 2 paths, got l={l}"
            )));
        }
        if l > params.n {
            return Err(TransportError::TooManyPaths { n: params.n, l });
        }
        if l > u8::MAX as usize {
            return Err(TransportError::BadConfig(format!(
                "l={l} does not fit the stripe header"
            )));
        }
        Ok(Self { params, l })
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn q(&self) -> u8 {
        self.params.field.q
    }

    pub fn r(&self) -> usize {
        self.params.r()
    }

    /// Packet overhead `r / k`, exact.
    pub fn overhead(&self) -> Ratio<usize> {
        Ratio::new(self.r(), self.k())
    }

    /// Data packets per path, `floor(k / l)`.
    pub fn m(&self) -> usize {
        self.k() / self.l
    }

    /// Largest stripe, `ceil(n / l)`.
    pub fn m_prime_max(&self) -> usize {
        self.n().div_ceil(self.l)
    }

    pub fn plan(&self) -> StripePlan {
        StripePlan::balanced(self.n(), self.l)
    }
}

/// Contiguous assignment of coded rows to paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripePlan {
    /// 1-based, half-open row ranges; entry `i` belongs to path `i + 1`.
    ranges: Vec<Range<usize>>,
}

impl StripePlan {
    fn balanced(n: usize, l: usize) -> Self {
        let base = n / l;
        let extra = n % l;
        let mut start = 1;
        let ranges = (0..l)
            .map(|i| {
                let len = base + usize::from(i < extra);
                let r = start..start + len;
                start += len;
                r
            })
            .collect();
        Self { ranges }
    }

    pub fn paths(&self) -> usize {
        self.ranges.len()
    }

    /// Rows carried on `path` (1-based).
    pub fn rows_for(&self, path: usize) -> Range<usize> {
        self.ranges[path - 1].clone()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.ranges.iter().map(|r| r.len()).collect()
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    /// The path carrying `row`.
    pub fn path_of(&self, row: usize) -> Option<usize> {
        self.ranges
            .iter()
            .position(|r| r.contains(&row))
            .map(|i| i + 1)
    }
}

/// Splits `n` rows over `l` paths; the first `n mod l` paths get one extra.
pub fn plan_stripes(n: usize, l: usize) -> Result<StripePlan, TransportError> {
    if l < 2 {
        return Err(TransportError::BadConfig(format!(
            "need at least 2 paths, got l={l}"
        )));
    }
    if l > n {
        return Err(TransportError::TooManyPaths { n, l });
    }
    Ok(StripePlan::balanced(n, l))
}

/// One path's share of a coded packet set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripeFile {
    pub q: u8,
    pub k: u16,
    pub n: u16,
    pub l: u8,
    /// 1-based path index.
    pub stripe_index: u8,
    /// Symbols per packet.
    pub packet_len: u32,
    pub original_len: u64,
    /// 1-based coded row indices, parallel to `rows`.
    pub row_indices: Vec<u16>,
    pub rows: Rows,
}

impl StripeFile {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn serialize(&self) -> Vec<u8> {
        let payload = self.rows.len() * self.packet_len as usize;
        let mut out = Vec::with_capacity(HEADER_LEN + 2 * self.row_indices.len() + payload + 4);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.q);
        out.extend_from_slice(&self.k.to_be_bytes());
        out.extend_from_slice(&self.n.to_be_bytes());
        out.push(self.l);
        out.push(self.stripe_index);
        out.extend_from_slice(&self.packet_len.to_be_bytes());
        out.extend_from_slice(&self.original_len.to_be_bytes());
        out.extend_from_slice(&(self.row_indices.len() as u16).to_be_bytes());
        for idx in &self.row_indices {
            out.extend_from_slice(&idx.to_be_bytes());
        }
        for row in &self.rows {
            out.extend_from_slice(row);
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_be_bytes());
        out
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self, TransportError> {
        let malformed = |msg: &str| TransportError::Malformed(msg.to_string());
        if bytes.len() < HEADER_LEN + 4 {
            return Err(malformed("file shorter than the fixed header"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_be_bytes(tail.try_into().unwrap());
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(TransportError::ChecksumFailure { stored, computed });
        }

        let mut rd = Reader { buf: body, pos: 0 };
        if rd.take(4)? != MAGIC {
            return Err(malformed("bad magic"));
        }
        let version = rd.u8()?;
        if version != VERSION {
            return Err(TransportError::Malformed(format!(
                "unsupported version {version}"
            )));
        }
        let q = rd.u8()?;
        let k = rd.u16()?;
        let n = rd.u16()?;
        let l = rd.u8()?;
        let stripe_index = rd.u8()?;
        let packet_len = rd.u32()?;
        let original_len = rd.u64()?;
        let row_count = rd.u16()? as usize;
        let row_indices = (0..row_count)
            .map(|_| rd.u16())
            .collect::<Result<Vec<_>, _>>()?;
        let len = packet_len as usize;
        if rd.remaining() != row_count * len {
            return Err(TransportError::Malformed(format!(
                "payload is {} bytes, header implies {row_count} x {len}",
                rd.remaining()
            )));
        }
        let rows: Rows = (0..row_count)
            .map(|_| rd.take(len).map(<[u8]>::to_vec))
            .collect::<Result<_, _>>()?;
        if q < 8 {
            let limit = 1u8 << q;
            if rows.iter().flatten().any(|&s| s >= limit) {
                return Err(malformed("symbol exceeds field width"));
            }
        }
        Ok(Self {
            q,
            k,
            n,
            l,
            stripe_index,
            packet_len,
            original_len,
            row_indices,
            rows,
        })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], TransportError> {
        let end = self.pos + len;
        let out = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| TransportError::Malformed("truncated header".into()))?;
        self.pos = end;
        Ok(out)
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn u8(&mut self) -> Result<u8, TransportError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, TransportError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, TransportError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, TransportError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Splits bytes into `q`-bit symbols, most significant bit first. The final
/// symbol is zero-padded on the right.
pub fn bytes_to_symbols(bytes: &[u8], q: u8) -> Vec<Symbol> {
    if q == 8 {
        return bytes.to_vec();
    }
    let q = q as u32;
    let total_bits = bytes.len() * 8;
    let count = total_bits.div_ceil(q as usize);
    let mut out = Vec::with_capacity(count);
    let mut acc: u32 = 0;
    let mut bits: u32 = 0;
    for &b in bytes {
        acc = (acc << 8) | b as u32;
        bits += 8;
        while bits >= q {
            bits -= q;
            out.push(((acc >> bits) & ((1 << q) - 1)) as Symbol);
        }
        acc &= (1 << bits) - 1;
    }
    if bits > 0 {
        out.push(((acc << (q - bits)) & ((1 << q) - 1)) as Symbol);
    }
    debug_assert_eq!(out.len(), count);
    out
}

/// Inverse of [`bytes_to_symbols`], truncated to `byte_len` bytes.
pub fn symbols_to_bytes(symbols: &[Symbol], q: u8, byte_len: usize) -> Vec<u8> {
    if q == 8 {
        return symbols[..byte_len.min(symbols.len())].to_vec();
    }
    let q = q as u32;
    let mut out = Vec::with_capacity(byte_len);
    let mut acc: u32 = 0;
    let mut bits: u32 = 0;
    for &s in symbols {
        if out.len() == byte_len {
            break;
        }
        acc = (acc << q) | s as u32;
        bits += q;
        if bits >= 8 {
            bits -= 8;
            out.push((acc >> bits) as u8);
            acc &= (1 << bits) - 1;
        }
    }
    out
}

/// Converts a payload into `k` equal-length data packets, zero-padded.
pub fn ingest(payload: &[u8], config: &CptConfig) -> Result<PacketSet, TransportError> {
    if payload.is_empty() {
        return Err(TransportError::EmptyPayload);
    }
    let k = config.k();
    let mut symbols = bytes_to_symbols(payload, config.q());
    let len = symbols.len().div_ceil(k);
    if len > u32::MAX as usize {
        return Err(TransportError::BadConfig(
            "payload too large for one packet set".into(),
        ));
    }
    symbols.resize(k * len, 0);
    let rows = symbols.chunks(len).map(<[Symbol]>::to_vec).collect();
    Ok(PacketSet::new(rows)?)
}

/// A configuration together with its generator matrix, for repeated use.
#[derive(Debug, Clone)]
pub struct Codec {
    config: CptConfig,
    generator: GeneratorMatrix,
}

impl Codec {
    pub fn new(config: CptConfig) -> Result<Self, TransportError> {
        let generator = GeneratorMatrix::build(config.params)?;
        Ok(Self { config, generator })
    }

    pub fn config(&self) -> &CptConfig {
        &self.config
    }

    pub fn generator(&self) -> &GeneratorMatrix {
        &self.generator
    }

    /// Encodes a payload and returns one stripe file per path, in path order.
    pub fn encode_and_stripe(&self, payload: &[u8]) -> Result<Vec<StripeFile>, TransportError> {
        let config = &self.config;
        let x = ingest(payload, config)?;
        let y = rs_code::encode(&self.generator, &x)?;
        let packet_len = x.len() as u32;
        let mut coded = y.into_rows().into_iter();
        let stripes = config
            .plan()
            .ranges()
            .iter()
            .enumerate()
            .map(|(i, range)| StripeFile {
                q: config.q(),
                k: config.k() as u16,
                n: config.n() as u16,
                l: config.l as u8,
                stripe_index: (i + 1) as u8,
                packet_len,
                original_len: payload.len() as u64,
                row_indices: range.clone().map(|r| r as u16).collect(),
                rows: coded.by_ref().take(range.len()).collect(),
            })
            .collect();
        Ok(stripes)
    }

    /// Recovers the payload from whatever stripes (and rows within them)
    /// arrived. Stripes may be missing entirely or carry only part of
    /// their rows.
    pub fn reassemble(&self, stripes: &[StripeFile]) -> Result<Vec<u8>, TransportError> {
        let config = &self.config;
        let plan = config.plan();
        let mismatch = |msg: String| Err(TransportError::HeaderMismatch(msg));
        let mut shape: Option<(u32, u64)> = None;
        let mut received: BTreeMap<usize, &[Symbol]> = BTreeMap::new();
        let mut seen_paths = vec![false; config.l + 1];

        for s in stripes {
            if s.q != config.q()
                || s.k as usize != config.k()
                || s.n as usize != config.n()
                || s.l as usize != config.l
            {
                return mismatch(format!(
                    "stripe {} has (q={}, k={}, n={}, l={}), expected (q={}, k={}, n={}, l={})",
                    s.stripe_index,
                    s.q,
                    s.k,
                    s.n,
                    s.l,
                    config.q(),
                    config.k(),
                    config.n(),
                    config.l
                ));
            }
            let path = s.stripe_index as usize;
            if path == 0 || path > config.l {
                return mismatch(format!("stripe index {path} outside 1..={}", config.l));
            }
            if std::mem::replace(&mut seen_paths[path], true) {
                return mismatch(format!("stripe {path} supplied twice"));
            }
            match shape {
                None => shape = Some((s.packet_len, s.original_len)),
                Some(sh) if sh != (s.packet_len, s.original_len) => {
                    return mismatch(format!(
                        "stripe {path} has L={} length={}, others L={} length={}",
                        s.packet_len, s.original_len, sh.0, sh.1
                    ));
                }
                Some(_) => {}
            }
            if s.row_indices.len() != s.rows.len() {
                return Err(TransportError::Malformed(format!(
                    "stripe {path} lists {} indices for {} rows",
                    s.row_indices.len(),
                    s.rows.len()
                )));
            }
            let range = plan.rows_for(path);
            for (&idx, row) in s.row_indices.iter().zip(&s.rows) {
                let idx = idx as usize;
                if !range.contains(&idx) {
                    return mismatch(format!("row {idx} does not belong to stripe {path}"));
                }
                if row.len() != s.packet_len as usize {
                    return Err(TransportError::Malformed(format!(
                        "row {idx} has {} symbols, header says {}",
                        row.len(),
                        s.packet_len
                    )));
                }
                if received.insert(idx, row).is_some() {
                    return mismatch(format!("row {idx} appears twice"));
                }
            }
        }

        let Some((_, original_len)) = shape else {
            return Err(CodeError::InsufficientPackets {
                received: 0,
                needed: config.k(),
            }
            .into());
        };
        let rows: Vec<(usize, &[Symbol])> = received.into_iter().collect();
        let x = rs_code::decode(&self.generator, &rows)?;
        let symbols: Vec<Symbol> = x.into_rows().concat();
        let original_len = original_len as usize;
        let bytes = symbols_to_bytes(&symbols, config.q(), original_len);
        if bytes.len() != original_len {
            return Err(TransportError::Malformed(format!(
                "decoded {} bytes but header records {original_len}",
                bytes.len()
            )));
        }
        Ok(bytes)
    }
}

/// Encodes a payload and returns one stripe file per path, in path order.
pub fn encode_and_stripe(
    payload: &[u8],
    config: &CptConfig,
) -> Result<Vec<StripeFile>, TransportError> {
    Codec::new(*config)?.encode_and_stripe(payload)
}

/// Recovers the payload from whatever stripes arrived. See
/// [`Codec::reassemble`].
pub fn reassemble(stripes: &[StripeFile], config: &CptConfig) -> Result<Vec<u8>, TransportError> {
    Codec::new(*config)?.reassemble(stripes)
}

/// Parses serialized stripes and reassembles them.
pub fn reassemble_bytes<B: AsRef<[u8]>>(
    files: &[B],
    config: &CptConfig,
) -> Result<Vec<u8>, TransportError> {
    let stripes = files
        .iter()
        .map(|b| StripeFile::deserialize(b.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    reassemble(&stripes, config)
}

/// Reads the code configuration from a stripe header.
pub fn config_from_header(stripe: &StripeFile) -> Result<CptConfig, TransportError> {
    CptConfig::new(
        stripe.k as usize,
        stripe.n as usize,
        stripe.l as usize,
        stripe.q,
    )
}

/// A single lost row: `(path, row)`, both 1-based.
pub type RowLoss = (usize, usize);

/// Removes exactly the listed rows. Stripes that lose every row stay in the
/// list with no rows.
pub fn drop_rows(
    stripes: &[StripeFile],
    losses: &[RowLoss],
) -> Result<Vec<StripeFile>, TransportError> {
    let mut out = stripes.to_vec();
    for &(path, row) in losses {
        let stripe = out
            .iter_mut()
            .find(|s| s.stripe_index as usize == path)
            .ok_or(TransportError::UnknownRow { path, row })?;
        let pos = stripe
            .row_indices
            .iter()
            .position(|&r| r as usize == row)
            .ok_or(TransportError::UnknownRow { path, row })?;
        stripe.row_indices.remove(pos);
        stripe.rows.remove(pos);
    }
    Ok(out)
}

/// Every row of one path, as a loss pattern.
pub fn path_loss(stripes: &[StripeFile], path: usize) -> Vec<RowLoss> {
    stripes
        .iter()
        .filter(|s| s.stripe_index as usize == path)
        .flat_map(|s| s.row_indices.iter().map(move |&r| (path, r as usize)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn payload(len: usize, seed: u8) -> Vec<u8> {
        (0..len)
            .map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed))
            .collect()
    }

    #[test]
    fn stripe_sizes() {
        assert_eq!(plan_stripes(12, 3).unwrap().sizes(), vec![4, 4, 4]);
        assert_eq!(plan_stripes(31, 6).unwrap().sizes(), vec![6, 5, 5, 5, 5, 5]);
        assert_eq!(plan_stripes(5, 5).unwrap().sizes(), vec![1; 5]);
        assert!(matches!(
            plan_stripes(4, 5),
            Err(TransportError::TooManyPaths { n: 4, l: 5 })
        ));
        assert!(plan_stripes(4, 1).is_err());
        let plan = plan_stripes(31, 6).unwrap();
        assert_eq!(plan.rows_for(1), 1..7);
        assert_eq!(plan.rows_for(2), 7..12);
        assert_eq!(plan.path_of(31), Some(6));
        assert_eq!(plan.path_of(32), None);
    }

    #[test]
    fn config_derived_values() {
        let c = CptConfig::new(6, 12, 3, 8).unwrap();
        assert_eq!(c.overhead(), Ratio::new(1, 1));
        assert_eq!(c.m(), 2);
        assert_eq!(c.m_prime_max(), 4);
        let c = CptConfig::new(84, 127, 3, 7).unwrap();
        assert_eq!(c.overhead(), Ratio::new(43, 84));
        assert_eq!(c.m_prime_max(), 43);
        assert!(matches!(
            CptConfig::new(2, 3, 4, 8),
            Err(TransportError::TooManyPaths { .. })
        ));
    }

    #[test]
    fn ingest_shapes() {
        let c = CptConfig::new(3, 6, 2, 8).unwrap();
        let x = ingest(&[1, 2, 3, 4, 5, 6], &c).unwrap();
        assert_eq!(x.rows(), &vec![vec![1, 2], vec![3, 4], vec![5, 6]]);
        let x = ingest(&[1, 2, 3, 4, 5], &c).unwrap();
        assert_eq!(x.rows(), &vec![vec![1, 2], vec![3, 4], vec![5, 0]]);
        assert!(matches!(ingest(&[], &c), Err(TransportError::EmptyPayload)));

        let c = CptConfig::new(2, 4, 2, 5).unwrap();
        let x = ingest(&[0b1010_1100, 0b0101_0011], &c).unwrap();
        // 10101 10001 01001 1(0000)
        assert_eq!(
            x.rows(),
            &vec![vec![0b10101, 0b10001], vec![0b01001, 0b10000]]
        );
    }

    #[test]
    fn bitstream_round_trip_all_widths() {
        let data = payload(37, 5);
        for q in 2..=8 {
            let s = bytes_to_symbols(&data, q);
            assert_eq!(s.len(), (data.len() * 8).div_ceil(q as usize));
            assert!(s.iter().all(|&v| (v as u16) < (1 << q)));
            assert_eq!(symbols_to_bytes(&s, q, data.len()), data);
        }
    }

    #[test]
    fn example_configs_stripe_as_expected() {
        let c = CptConfig::new(6, 12, 3, 8).unwrap();
        let s = encode_and_stripe(&payload(100, 1), &c).unwrap();
        assert_eq!(
            s.iter().map(StripeFile::row_count).collect::<Vec<_>>(),
            vec![4, 4, 4]
        );

        let c = CptConfig::new(48, 96, 3, 8).unwrap();
        let s = encode_and_stripe(&payload(1000, 2), &c).unwrap();
        assert_eq!(
            s.iter().map(StripeFile::row_count).collect::<Vec<_>>(),
            vec![32, 32, 32]
        );

        let c = CptConfig::new(1, 2, 2, 8).unwrap();
        let data = payload(9, 3);
        let s = encode_and_stripe(&data, &c).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].rows, vec![data.clone()]);
        assert_eq!(s[1].rows, vec![data]);
    }

    #[test]
    fn encoding_is_deterministic() {
        let c = CptConfig::new(5, 11, 4, 6).unwrap();
        let a: Vec<_> = encode_and_stripe(&payload(77, 9), &c)
            .unwrap()
            .iter()
            .map(StripeFile::serialize)
            .collect();
        let b: Vec<_> = encode_and_stripe(&payload(77, 9), &c)
            .unwrap()
            .iter()
            .map(StripeFile::serialize)
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn reassemble_with_and_without_losses() {
        let c = CptConfig::new(6, 12, 3, 8).unwrap();
        let data = payload(250, 4);
        let s = encode_and_stripe(&data, &c).unwrap();
        assert_eq!(reassemble(&s, &c).unwrap(), data);
        for path in 1..=3 {
            let kept: Vec<_> = s
                .iter()
                .filter(|f| f.stripe_index != path)
                .cloned()
                .collect();
            assert_eq!(reassemble(&kept, &c).unwrap(), data);
        }
        let err = reassemble(&s[..1], &c).unwrap_err();
        assert!(err.is_insufficient(), "{err}");
        assert!(reassemble(&[], &c).unwrap_err().is_insufficient());
    }

    #[test]
    fn reassemble_detects_bad_headers() {
        let c = CptConfig::new(6, 12, 3, 8).unwrap();
        let mut s = encode_and_stripe(&payload(50, 1), &c).unwrap();
        s[1].k = 5;
        assert!(matches!(
            reassemble(&s, &c),
            Err(TransportError::HeaderMismatch(_))
        ));

        let mut s = encode_and_stripe(&payload(50, 1), &c).unwrap();
        s[2].original_len = 49;
        assert!(matches!(
            reassemble(&s, &c),
            Err(TransportError::HeaderMismatch(_))
        ));

        let mut s = encode_and_stripe(&payload(50, 1), &c).unwrap();
        s[2].stripe_index = 1;
        assert!(matches!(
            reassemble(&s, &c),
            Err(TransportError::HeaderMismatch(_))
        ));
    }

    #[test]
    fn checksum_failure_is_distinct_from_loss() {
        let c = CptConfig::new(6, 12, 3, 8).unwrap();
        let s = encode_and_stripe(&payload(50, 1), &c).unwrap();
        let mut files: Vec<Vec<u8>> = s.iter().map(StripeFile::serialize).collect();
        let mid = files[0].len() / 2;
        files[0][mid] ^= 0x40;
        assert!(matches!(
            reassemble_bytes(&files, &c),
            Err(TransportError::ChecksumFailure { .. })
        ));
    }

    #[test]
    fn serialized_layout() {
        let c = CptConfig::new(2, 4, 2, 8).unwrap();
        let s = encode_and_stripe(&[0xAA, 0xBB, 0xCC], &c).unwrap();
        let bytes = s[1].serialize();
        let mut want = b"CPT1".to_vec();
        want.extend([1, 8, 0, 2, 0, 4, 2, 2]);
        want.extend(2u32.to_be_bytes());
        want.extend(3u64.to_be_bytes());
        want.extend([0, 2, 0, 3, 0, 4]);
        want.extend(s[1].rows.concat());
        let crc = crc32fast::hash(&want);
        want.extend(crc.to_be_bytes());
        assert_eq!(bytes, want);
        assert_eq!(StripeFile::deserialize(&bytes).unwrap(), s[1]);
    }

    #[test]
    fn deserialize_rejects_garbage() {
        assert!(matches!(
            StripeFile::deserialize(b"CPT1"),
            Err(TransportError::Malformed(_))
        ));
        let c = CptConfig::new(2, 4, 2, 4).unwrap();
        let s = encode_and_stripe(&[1, 2, 3], &c).unwrap();
        let mut bytes = s[0].serialize();
        bytes[0] = b'X';
        let n = bytes.len();
        let crc = crc32fast::hash(&bytes[..n - 4]);
        bytes[n - 4..].copy_from_slice(&crc.to_be_bytes());
        assert!(matches!(
            StripeFile::deserialize(&bytes),
            Err(TransportError::Malformed(_))
        ));
    }

    #[test]
    fn drop_rows_patterns() {
        let c = CptConfig::new(6, 12, 3, 8).unwrap();
        let s = encode_and_stripe(&payload(60, 7), &c).unwrap();
        assert_eq!(drop_rows(&s, &[]).unwrap(), s);

        let dropped = drop_rows(&s, &path_loss(&s, 2)).unwrap();
        assert_eq!(dropped[1].row_count(), 0);
        assert_eq!(dropped[0], s[0]);

        let dropped = drop_rows(&s, &[(1, 2), (3, 12)]).unwrap();
        assert_eq!(dropped[0].row_indices, vec![1, 3, 4]);
        assert_eq!(dropped[2].row_indices, vec![9, 10, 11]);
        assert_eq!(dropped[0].rows[0], s[0].rows[0]);
        assert_eq!(dropped[0].rows[1], s[0].rows[2]);

        assert!(matches!(
            drop_rows(&s, &[(1, 5)]),
            Err(TransportError::UnknownRow { path: 1, row: 5 })
        ));
        assert!(matches!(
            drop_rows(&s, &[(1, 1), (1, 1)]),
            Err(TransportError::UnknownRow { .. })
        ));
    }

    #[test]
    fn exhaustive_losses_small_config() {
        let c = CptConfig::new(4, 9, 3, 4).unwrap();
        let data = payload(21, 11);
        let s = encode_and_stripe(&data, &c).unwrap();
        let plan = c.plan();
        for mask in 0u32..(1 << 9) {
            if mask.count_ones() as usize > c.r() {
                continue;
            }
            let losses: Vec<RowLoss> = (1..=9)
                .filter(|r| mask >> (r - 1) & 1 == 1)
                .map(|r| (plan.path_of(r).unwrap(), r))
                .collect();
            let kept = drop_rows(&s, &losses).unwrap();
            assert_eq!(reassemble(&kept, &c).unwrap(), data, "mask {mask:b}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn stripe_balance(n in 2usize..2000, l_seed in 0usize..1000) {
                let l = 2 + l_seed % (n - 1);
                let sizes = plan_stripes(n, l).unwrap().sizes();
                prop_assert_eq!(sizes.iter().sum::<usize>(), n);
                let max = *sizes.iter().max().unwrap();
                let min = *sizes.iter().min().unwrap();
                prop_assert!(max - min <= 1);
                prop_assert_eq!(max, n.div_ceil(l));
                prop_assert_eq!(min, n / l);
                prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
            }

            #[test]
            fn serialization_round_trip(
                q in 2u8..=8,
                k in 1usize..10,
                extra in 1usize..10,
                data in prop::collection::vec(any::<u8>(), 1..200),
            ) {
                let n = (k + extra).min((1 << q) - 1);
                prop_assume!(k < n);
                let c = CptConfig::new(k, n, 2, q).unwrap();
                for s in encode_and_stripe(&data, &c).unwrap() {
                    prop_assert_eq!(StripeFile::deserialize(&s.serialize()).unwrap(), s);
                }
            }

            #[test]
            fn random_losses_round_trip(
                q in prop::sample::select(vec![4u8, 6, 8]),
                k in 1usize..12,
                extra in 1usize..12,
                l in 2usize..6,
                data in prop::collection::vec(any::<u8>(), 1..300),
                loss_seed in any::<u64>(),
            ) {
                use rand::{seq::SliceRandom, Rng, SeedableRng};
                let n = (k + extra).min((1 << q) - 1);
                prop_assume!(k < n && l <= n);
                let c = CptConfig::new(k, n, l, q).unwrap();
                let s = encode_and_stripe(&data, &c).unwrap();
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(loss_seed);
                let mut rows: Vec<usize> = (1..=n).collect();
                rows.shuffle(&mut rng);
                let lost = rng.gen_range(0..=c.r());
                let plan = c.plan();
                let losses: Vec<RowLoss> = rows[..lost].iter().map(|&r| (plan.path_of(r).unwrap(), r)).collect();
                let kept = drop_rows(&s, &losses).unwrap();
                prop_assert_eq!(reassemble(&kept, &c).unwrap(), data);
            }
        }
    }
}
