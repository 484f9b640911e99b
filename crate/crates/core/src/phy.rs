//! LoRa physical layer: modulation parameters, time on air and the channel plan.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The MAC symbol is pinned to 1 ms, independent of the LoRa symbol time.
pub const MAC_SYMBOL_TIME: Duration = Duration::from_millis(1);

pub const MAX_PHY_PAYLOAD: usize = 255;
pub const FCS_BYTES: usize = 2;
pub const COMMON_SYNC_WORD: u8 = 0x17;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhyConfig {
    pub spreading_factor: u8,
    pub bandwidth_hz: u32,
    /// Denominator of the coding rate 4/x, 5..=8.
    pub coding_rate_denominator: u8,
    pub preamble_symbols: u16,
    pub explicit_header: bool,
    pub payload_crc: bool,
    pub sync_word: u8,
    /// `None` selects it automatically (on when a symbol lasts 16 ms or more).
    pub low_data_rate_optimize: Option<bool>,
}

impl Default for PhyConfig {
    fn default() -> Self {
        PhyConfig {
            spreading_factor: 7,
            bandwidth_hz: 125_000,
            coding_rate_denominator: 5,
            preamble_symbols: 8,
            explicit_header: true,
            payload_crc: true,
            sync_word: COMMON_SYNC_WORD,
            low_data_rate_optimize: None,
        }
    }
}

impl PhyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(6..=12).contains(&self.spreading_factor) {
            return Err(Error::InvalidConfig(format!(
                "spreading factor {} outside 6..=12",
                self.spreading_factor
            )));
        }
        if ![125_000, 250_000, 500_000].contains(&self.bandwidth_hz) {
            return Err(Error::InvalidConfig(format!(
                "bandwidth {} Hz not one of 125/250/500 kHz",
                self.bandwidth_hz
            )));
        }
        if !(5..=8).contains(&self.coding_rate_denominator) {
            return Err(Error::InvalidConfig(format!(
                "coding rate 4/{} invalid",
                self.coding_rate_denominator
            )));
        }
        Ok(())
    }

    pub fn symbol_time(&self) -> Duration {
        symbol_time(self)
    }

    pub fn time_on_air(&self, phy_payload_bytes: usize) -> Result<Duration> {
        time_on_air(phy_payload_bytes, self)
    }

    fn ldro(&self) -> bool {
        self.low_data_rate_optimize
            .unwrap_or_else(|| symbol_time(self) >= Duration::from_millis(16))
    }
}

pub fn symbol_time(cfg: &PhyConfig) -> Duration {
    let nanos = (1u64 << cfg.spreading_factor) * 1_000_000_000 / cfg.bandwidth_hz as u64;
    Duration::from_nanos(nanos)
}

/// Number of payload symbols (including the 8 fixed header symbols).
pub fn payload_symbols(phy_payload_bytes: usize, cfg: &PhyConfig) -> u32 {
    let sf = cfg.spreading_factor as i64;
    let de = cfg.ldro() as i64;
    let ih = (!cfg.explicit_header) as i64;
    let crc = cfg.payload_crc as i64;
    let cr = (cfg.coding_rate_denominator - 4) as i64;
    let num = 8 * phy_payload_bytes as i64 - 4 * sf + 28 + 16 * crc - 20 * ih;
    let den = 4 * (sf - 2 * de);
    let blocks = if num > 0 { (num + den - 1) / den } else { 0 };
    (8 + blocks * (cr + 4)) as u32
}

/// Time on air of a PHY payload of `phy_payload_bytes` bytes (FCS included).
pub fn time_on_air(phy_payload_bytes: usize, cfg: &PhyConfig) -> Result<Duration> {
    if phy_payload_bytes > MAX_PHY_PAYLOAD {
        return Err(Error::InvalidArgument(format!(
            "PHY payload of {phy_payload_bytes} bytes exceeds {MAX_PHY_PAYLOAD}"
        )));
    }
    cfg.validate()?;
    // count quarter symbols so the 4.25-symbol sync field stays exact
    let quarters =
        4 * (cfg.preamble_symbols as u64 + payload_symbols(phy_payload_bytes, cfg) as u64) + 17;
    let nanos =
        quarters * (1u64 << cfg.spreading_factor) * 1_000_000_000 / (4 * cfg.bandwidth_hz as u64);
    Ok(Duration::from_nanos(nanos))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelPurpose {
    GtsOnly,
    Common,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelEntry {
    pub channel: u8,
    pub frequency_mhz: f64,
    pub band: String,
    pub duty_cycle_pct: f64,
    pub purpose: ChannelPurpose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPlan {
    entries: Vec<ChannelEntry>,
}

pub const CHANNELS_PER_PLAN: usize = 16;

impl ChannelPlan {
    /// Sixteen channels: 11..=25 in the 1% g band, 26 in the 10% g3 band.
    pub fn eu868() -> Self {
        let mut entries: Vec<ChannelEntry> = (11u8..=25)
            .map(|ch| ChannelEntry {
                channel: ch,
                frequency_mhz: 865.1 + 0.2 * (ch - 11) as f64,
                band: "g".into(),
                duty_cycle_pct: 1.0,
                purpose: ChannelPurpose::GtsOnly,
            })
            .collect();
        entries.push(ChannelEntry {
            channel: 26,
            frequency_mhz: 869.525,
            band: "g3".into(),
            duty_cycle_pct: 10.0,
            purpose: ChannelPurpose::Common,
        });
        ChannelPlan { entries }
    }

    pub fn new(mut entries: Vec<ChannelEntry>) -> Result<Self> {
        if entries.len() != CHANNELS_PER_PLAN {
            return Err(Error::InvalidConfig(format!(
                "channel plan needs {CHANNELS_PER_PLAN} channels, got {}",
                entries.len()
            )));
        }
        entries.sort_by_key(|e| e.channel);
        for w in entries.windows(2) {
            if w[0].channel == w[1].channel {
                return Err(Error::InvalidConfig(format!(
                    "duplicate channel {}",
                    w[0].channel
                )));
            }
        }
        for (i, a) in entries.iter().enumerate() {
            if !(a.duty_cycle_pct > 0.0 && a.duty_cycle_pct <= 100.0) {
                return Err(Error::InvalidConfig(format!(
                    "channel {} duty cycle {}% out of range",
                    a.channel, a.duty_cycle_pct
                )));
            }
            if entries[i + 1..]
                .iter()
                .any(|b| (a.frequency_mhz - b.frequency_mhz).abs() < 1e-9)
            {
                return Err(Error::InvalidConfig(format!(
                    "channel {} shares its frequency with another channel",
                    a.channel
                )));
            }
        }
        let common = entries
            .iter()
            .filter(|e| e.purpose == ChannelPurpose::Common)
            .count();
        if common != 1 {
            return Err(Error::InvalidConfig(format!(
                "channel plan needs exactly one common channel, got {common}"
            )));
        }
        Ok(ChannelPlan { entries })
    }

    pub fn entries(&self) -> &[ChannelEntry] {
        &self.entries
    }

    pub fn entry(&self, channel: u8) -> Result<&ChannelEntry> {
        self.entries
            .iter()
            .find(|e| e.channel == channel)
            .ok_or_else(|| Error::InvalidArgument(format!("channel {channel} not in plan")))
    }

    pub fn common_channel(&self) -> u8 {
        self.entries
            .iter()
            .find(|e| e.purpose == ChannelPurpose::Common)
            .map(|e| e.channel)
            .expect("validated plan has a common channel")
    }

    /// Channel used by a GTS with `offset` in multisuperframe `msf_counter`.
    pub fn hop(&self, offset: u8, msf_counter: u64) -> u8 {
        let n = self.entries.len() as u64;
        self.entries[((offset as u64 + msf_counter) % n) as usize].channel
    }
}

impl Default for ChannelPlan {
    fn default() -> Self {
        ChannelPlan::eu868()
    }
}

pub fn channel_frequency(plan: &ChannelPlan, channel: u8) -> Result<f64> {
    plan.entry(channel).map(|e| e.frequency_mhz)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(d: Duration) -> f64 {
        d.as_secs_f64() * 1e3
    }

    #[test]
    fn default_symbol_time() {
        assert_eq!(
            symbol_time(&PhyConfig::default()),
            Duration::from_micros(1024)
        );
    }

    #[test]
    fn airtime_anchors() {
        let cfg = PhyConfig::default();
        assert!((ms(time_on_air(27, &cfg).unwrap()) - 66.816).abs() < 1e-9);
        assert!((ms(time_on_air(5, &cfg).unwrap()) - 30.976).abs() < 1e-9);
        // empty payload: CRC alone still needs one coded block
        assert!((ms(time_on_air(0, &cfg).unwrap()) - 25.25 * 1.024).abs() < 1e-9);
        assert!(time_on_air(256, &cfg).is_err());
        assert!(time_on_air(255, &cfg).is_ok());
    }

    #[test]
    fn ldro_auto_enables_for_slow_symbols() {
        let cfg = PhyConfig {
            spreading_factor: 12,
            ..PhyConfig::default()
        };
        assert!(cfg.ldro());
        assert!(!PhyConfig::default().ldro());
    }

    #[test]
    fn plan_layout() {
        let plan = ChannelPlan::eu868();
        assert_eq!(plan.entries().len(), 16);
        assert_eq!(plan.common_channel(), 26);
        assert_eq!(plan.entry(26).unwrap().duty_cycle_pct, 10.0);
        assert_eq!(plan.entry(11).unwrap().duty_cycle_pct, 1.0);
        assert!((channel_frequency(&plan, 12).unwrap() - 865.3).abs() < 1e-9);
        assert!(plan.entry(10).is_err());
        assert_eq!(plan.hop(0, 0), 11);
        assert_eq!(plan.hop(15, 1), 11);
        assert_eq!(plan.hop(3, 16), 14);
    }

    #[test]
    fn plan_validation() {
        let mut e = ChannelPlan::eu868().entries().to_vec();
        e[3].purpose = ChannelPurpose::Common;
        assert!(ChannelPlan::new(e).is_err());
        let e = ChannelPlan::eu868().entries()[..15].to_vec();
        assert!(ChannelPlan::new(e).is_err());
    }
}
