//! DVB-S2 rate 5/6 LDPC over BPSK/AWGN: scaled min-sum against sum-product.
//!
//! ```text
//! cargo run --release --example ldpc_codec
//! ```

use pertnlc::fec::{ldpc_decode, ldpc_encode, CodeRate, DecoderConfig, LdpcCode};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

fn main() -> pertnlc::Result<()> {
    let code = LdpcCode::dvbs2(CodeRate::R5_6);
    println!("n = {}, k = {}, {} edges", code.block_len(), code.info_len(), code.num_edges());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let blocks = 4;
    println!("Eb/N0   algorithm     pre-FEC BER   post-FEC BER   mean iters");
    for ebn0_db in [2.6, 2.9, 3.2] {
        let es = code.info_len() as f64 / code.block_len() as f64;
        let sigma = (1.0 / (2.0 * es * 10f64.powf(ebn0_db / 10.0))).sqrt();
        let noise = Normal::new(0.0, sigma).unwrap();
        for (name, cfg) in [("min-sum", DecoderConfig::min_sum(50)), ("sum-product", DecoderConfig::sum_product(50))] {
            let (mut pre, mut post, mut iters) = (0usize, 0usize, 0usize);
            for _ in 0..blocks {
                let info: Vec<u8> = (0..code.info_len()).map(|_| rng.random_range(0..2u8)).collect();
                let cw = ldpc_encode(&info, &code)?;
                let llrs: Vec<f64> = cw
                    .bits
                    .iter()
                    .map(|&b| {
                        let y = if b == 0 { 1.0 } else { -1.0 } + noise.sample(&mut rng);
                        2.0 * y / (sigma * sigma)
                    })
                    .collect();
                pre += llrs.iter().zip(&cw.bits).filter(|(l, &b)| (**l < 0.0) != (b == 1)).count();
                let dec = ldpc_decode(&llrs, &code, &cfg)?;
                post += dec.info_bits(&code).iter().zip(&info).filter(|(a, b)| a != b).count();
                iters += dec.iterations;
            }
            println!(
                "{ebn0_db:4.1}    {name:<12}  {:.3e}     {:.3e}      {:.1}",
                pre as f64 / (blocks * code.block_len()) as f64,
                post as f64 / (blocks * code.info_len()) as f64,
                iters as f64 / blocks as f64
            );
        }
    }
    Ok(())
}
