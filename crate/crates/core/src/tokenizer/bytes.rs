//! Reversible byte <-> printable character table used by byte-level BPE
//! tokenizers published on model hubs (the GPT-2 convention, where a space
//! byte shows up as `Ġ`).

use std::collections::HashMap;
use std::sync::OnceLock;

struct ByteTable {
    to_char: [char; 256],
    to_byte: HashMap<char, u8>,
}

fn table() -> &'static ByteTable {
    static TABLE: OnceLock<ByteTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let printable = |b: u32| {
            (u32::from(b'!')..=u32::from(b'~')).contains(&b)
                || (0xA1..=0xAC).contains(&b)
                || (0xAE..=0xFF).contains(&b)
        };
        let mut to_char = ['\0'; 256];
        let mut shifted = 0u32;
        for b in 0..256u32 {
            let cp = if printable(b) {
                b
            } else {
                shifted += 1;
                255 + shifted
            };
            to_char[b as usize] = char::from_u32(cp).expect("table stays below the surrogate range");
        }
        let to_byte = to_char
            .iter()
            .enumerate()
            .map(|(b, &c)| (c, b as u8))
            .collect();
        ByteTable { to_char, to_byte }
    })
}

/// Printable stand-in for a raw byte.
pub fn byte_to_char(b: u8) -> char {
    table().to_char[b as usize]
}

/// Inverse of [`byte_to_char`].
pub fn char_to_byte(c: char) -> Option<u8> {
    table().to_byte.get(&c).copied()
}

/// Name of the byte token used in byte-fallback mode, e.g. `<0xE2>`.
pub fn byte_token_name(b: u8) -> String {
    format!("<0x{b:02X}>")
}

/// Parses a byte-fallback token name back into its byte.
pub fn parse_byte_token(token: &str) -> Option<u8> {
    let hex = token.strip_prefix("<0x")?.strip_suffix('>')?;
    if hex.len() != 2 || !hex.bytes().all(|b| b.is_ascii_digit() || (b'A'..=b'F').contains(&b)) {
        return None;
    }
    u8::from_str_radix(hex, 16).ok()
}
