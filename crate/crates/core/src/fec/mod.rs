//! Channel coding: DVB-S2 LDPC, bit interleaving and Gray QAM (de)mapping.

mod frame;
mod interleave;
mod ldpc;
mod qam;

pub use frame::FrameLayout;
pub use interleave::Interleaver;
pub use ldpc::{
    ldpc_decode, ldpc_encode, CodeRate, CodewordBlock, DecodeAlgorithm, DecodeStatus,
    DecoderConfig, LdpcCode, LLR_CLIP,
};
pub use qam::{demap_hard, demap_llr, map_symbols, DemapMethod, QamConstellation};
