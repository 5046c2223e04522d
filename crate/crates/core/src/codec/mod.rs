pub mod bitstream;
pub mod entropy;
pub mod plane_codec;
pub mod quant;
pub mod sequence;

pub use bitstream::{Bitstream, Header, Mode};
pub use entropy::{range_decode, range_encode};
pub use plane_codec::{decode_depth, decode_image, encode_depth, encode_image, DepthReference, ImageReference};
pub use quant::{dequantize, quantize, Quantizer};
pub use sequence::{decode_sequence, encode_sequence, EncodedView, SequenceOptions, ViewInput};
