//! Bit-stream encoding and decoding for AFDM-CPIM.
//!
//! A frame of `B = N·log2(M) + log2(K)` source bits is split into `B1` symbol
//! bits, mapped onto `N` constellation symbols, and `B2 = log2(K)` index bits
//! selecting the permuted DAFT matrix `A_{q_{k*}}` used to modulate them.

use num_complex::Complex64;

use crate::afdm::{ChirpParams, DaftMatrix, PermutationIndex};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::kv::KvMap;
use crate::Bit;

/// An ordered codebook of `K` distinct permuted DAFT matrices.
///
/// `K` must be a power of two so that the index field carries an integral
/// number of bits (`K = 1` degenerates to classical AFDM with no index bits).
#[derive(Debug, Clone)]
pub struct Codebook {
    params: ChirpParams,
    entries: Vec<PermutationIndex>,
    mats: Vec<DaftMatrix>,
}

impl Codebook {
    pub fn new(params: &ChirpParams, entries: Vec<PermutationIndex>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidCodebook("codebook must not be empty".into()));
        }
        if !entries.len().is_power_of_two() {
            return Err(Error::InvalidCodebook(format!(
                "K = {} is not a power of two",
                entries.len()
            )));
        }
        for (i, a) in entries.iter().enumerate() {
            if a.order() != params.n() {
                return Err(Error::dim(params.n(), a.order(), "codebook entry order"));
            }
            if entries[..i].contains(a) {
                return Err(Error::InvalidCodebook(format!(
                    "duplicate permutation index {a}"
                )));
            }
        }
        let mats = entries
            .iter()
            .map(|&p| DaftMatrix::new(params, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Codebook {
            params: params.clone(),
            entries,
            mats,
        })
    }

    pub fn params(&self) -> &ChirpParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    /// Number of codewords `K`.
    pub fn k(&self) -> usize {
        self.entries.len()
    }

    /// `B2 = log2(K)`.
    pub fn index_bits(&self) -> usize {
        self.entries.len().trailing_zeros() as usize
    }

    pub fn entries(&self) -> &[PermutationIndex] {
        &self.entries
    }

    /// The cached DAFT matrix of codeword `k` (1-based).
    pub fn daft(&self, k: usize) -> Result<&DaftMatrix> {
        if k == 0 || k > self.mats.len() {
            return Err(Error::CodewordOutOfRange {
                k,
                kmax: self.mats.len(),
            });
        }
        Ok(&self.mats[k - 1])
    }

    /// Serializes to the codebook text format (`n`, `c1`, `c2`, `k`, `q`).
    /// Reals are written as shortest round-trip decimals.
    pub fn to_text(&self) -> String {
        let q: Vec<String> = self.entries.iter().map(|p| p.index().to_string()).collect();
        format!(
            "n = {}\nc1 = {}\nc2 = {}\nk = {}\nq = {}\n",
            self.params.n(),
            self.params.c1(),
            self.params.c2(),
            self.entries.len(),
            q.join(" ")
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut kv = KvMap::parse(text)?;
        let n: usize = kv.require("n")?;
        let c1: f64 = kv.require("c1")?;
        let c2: f64 = kv.require("c2")?;
        let k: usize = kv.require("k")?;
        let q: Vec<u128> = kv
            .take_list("q")?
            .ok_or_else(|| Error::Config("missing required key `q`".into()))?;
        kv.finish()?;
        if q.len() != k {
            return Err(Error::InvalidCodebook(format!(
                "k = {k} but q lists {} indices",
                q.len()
            )));
        }
        let params = ChirpParams::new(n, c1, c2, 0)?;
        let entries = q
            .into_iter()
            .map(|i| PermutationIndex::new(i, n))
            .collect::<Result<Vec<_>>>()?;
        Codebook::new(&params, entries)
    }
}

/// One encoded CPIM frame.
#[derive(Debug, Clone)]
pub struct CpimFrame {
    /// The `B` source bits.
    pub bits: Vec<Bit>,
    /// The `N` mapped symbols.
    pub symbols: Vec<Complex64>,
    /// Selected codeword index `k*` (1-based).
    pub perm_choice: usize,
    /// Modulated transmit signal `s = A_{q_{k*}}⁻¹ x`.
    pub signal: Vec<Complex64>,
}

/// Splits a `B`-bit frame into its symbol and index fields and decodes
/// `k* = 1 + value(index bits)` (most-significant bit first).
pub fn bit_split(
    bits: &[Bit],
    n: usize,
    constellation: &Constellation,
    codebook_k: usize,
) -> Result<(Vec<Bit>, Vec<Bit>, usize)> {
    let b1 = n * constellation.bits_per_symbol();
    let b2 = codebook_k.trailing_zeros() as usize;
    if !codebook_k.is_power_of_two() {
        return Err(Error::InvalidCodebook(format!(
            "K = {codebook_k} is not a power of two"
        )));
    }
    if bits.len() != b1 + b2 {
        return Err(Error::BitLength {
            expected: b1 + b2,
            got: bits.len(),
        });
    }
    let symbol_bits = bits[..b1].to_vec();
    let index_bits = bits[b1..].to_vec();
    let mut k_star = 0usize;
    for &b in &index_bits {
        if b > 1 {
            return Err(Error::Config(format!("bit value {b} is not 0/1")));
        }
        k_star = (k_star << 1) | b as usize;
    }
    Ok((symbol_bits, index_bits, k_star + 1))
}

/// Encodes one frame: maps the symbol field, selects `A_{q_{k*}}` from the
/// index field and modulates.
pub fn encode(
    bits: &[Bit],
    codebook: &Codebook,
    constellation: &Constellation,
) -> Result<CpimFrame> {
    let (symbol_bits, _, k_star) = bit_split(bits, codebook.n(), constellation, codebook.k())?;
    let symbols = constellation.map_bits(&symbol_bits)?;
    let signal = codebook.daft(k_star)?.modulate(&symbols)?;
    Ok(CpimFrame {
        bits: bits.to_vec(),
        symbols,
        perm_choice: k_star,
        signal,
    })
}

/// Reassembles the source bit string from detected symbols and codeword
/// index: demapped symbol bits followed by the `B2`-bit encoding of `k̂ - 1`.
pub fn decode_bits(
    x_hat: &[Complex64],
    k_hat: usize,
    codebook: &Codebook,
    constellation: &Constellation,
) -> Result<Vec<Bit>> {
    if k_hat == 0 || k_hat > codebook.k() {
        return Err(Error::CodewordOutOfRange {
            k: k_hat,
            kmax: codebook.k(),
        });
    }
    let mut bits = constellation.demap(x_hat);
    let b2 = codebook.index_bits();
    let v = k_hat - 1;
    for i in (0..b2).rev() {
        bits.push(((v >> i) & 1) as Bit);
    }
    Ok(bits)
}
