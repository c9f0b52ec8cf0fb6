//! GAP advertising-data structures: `[len | type | value(len-1)]*`.

use std::collections::BTreeMap;

use super::IdentifyError;

pub const AD_SHORT_LOCAL_NAME: u8 = 0x08;
pub const AD_COMPLETE_LOCAL_NAME: u8 = 0x09;

/// AD type → value. A repeated type keeps the last value.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AdFields(pub BTreeMap<u8, Vec<u8>>);

impl AdFields {
    pub fn get(&self, ad_type: u8) -> Option<&[u8]> {
        self.0.get(&ad_type).map(Vec::as_slice)
    }

    /// Complete local name, falling back to the shortened one.
    pub fn local_name(&self) -> Option<String> {
        self.get(AD_COMPLETE_LOCAL_NAME).or_else(|| self.get(AD_SHORT_LOCAL_NAME)).map(|v| String::from_utf8_lossy(v).into_owned()).filter(|s| !s.is_empty())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Parses an advertising payload. A zero length byte ends the data.
pub fn parse_ble_adv(payload: &[u8]) -> Result<AdFields, IdentifyError> {
    let mut out = AdFields::default();
    let mut p = 0;
    while p < payload.len() {
        let len = payload[p] as usize;
        if len == 0 {
            break;
        }
        let remaining = payload.len() - p - 1;
        if len > remaining {
            return Err(IdentifyError::BleTruncated { offset: p, claimed: len, remaining });
        }
        out.0.insert(payload[p + 1], payload[p + 2..p + 1 + len].to_vec());
        p += 1 + len;
    }
    Ok(out)
}
