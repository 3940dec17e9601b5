use bitvec::vec::BitVec;
use pmx::codec::{compress, decompress, CompressedBlock};
use pmx::construction::{build_chart, ChartParams, PolarChart, Threshold};
use pmx::memory_source::{compress_stream, decompress_stream, deblockify, CompressedStream, StreamLayout};
use pmx::oracle::{exact_chart, OracleLimits};
use pmx::slepian_wolf::{split_block, sw_decode, sw_encode_all, UserPayload};
use pmx::SourceDistribution;

fn source() -> SourceDistribution {
    SourceDistribution::new(2, vec![0.7, 0.1, 0.1, 0.1]).unwrap()
}

fn chart(n: usize) -> PolarChart {
    let params = ChartParams {
        threshold: Threshold::Budget(1e-2),
        mc_samples: 4000,
        seed: 3,
        force: true,
        ..ChartParams::new(n)
    };
    build_chart(&source(), &params).unwrap().0
}

#[test]
fn chart_and_block_survive_serialization() {
    let mu = source();
    let chart = PolarChart::from_bytes(&chart(256).to_bytes()).unwrap();
    let mut exact = 0;
    for seed in 0..20 {
        let x = mu.sample_columns(256, 100 + seed).unwrap();
        let block = CompressedBlock::from_bytes(&compress(&x, &chart).unwrap().to_bytes()).unwrap();
        exact += usize::from(decompress(&block, &chart, &mu).is_ok_and(|y| y == x));
    }
    assert!(exact >= 19, "{exact}/20");
}

#[test]
fn distributed_payloads_reassemble_the_block() {
    let mu = source();
    let chart = chart(128);
    let x = mu.sample_columns(128, 5).unwrap();
    let block = compress(&x, &chart).unwrap();
    let payloads: Vec<UserPayload> = sw_encode_all(&x, &chart)
        .unwrap()
        .iter()
        .rev()
        .map(|p| UserPayload::from_bytes(&p.to_bytes()).unwrap())
        .collect();
    let mut split = split_block(&block, &chart).unwrap();
    split.reverse();
    assert_eq!(split, payloads);
    assert_eq!(sw_decode(&payloads, &chart, &mu).unwrap(), decompress(&block, &chart, &mu).unwrap());
}

#[test]
fn stream_container_round_trip() {
    let mu = source();
    let chart = PolarChart::all_stored(&mu, 8).unwrap();
    let layout = StreamLayout::new(2, 8, 5).unwrap();
    let x = mu.sample_columns(8, 1).unwrap();
    let gaps = (0..layout.gap_bits()).map(|t| t % 4 == 1).collect::<BitVec<u64>>();
    let stream = deblockify(&x, &gaps, &layout).unwrap();
    let c = CompressedStream::from_bytes(&compress_stream(&stream, &chart, &layout).unwrap().to_bytes()).unwrap();
    assert_eq!(c.gaps, gaps);
    assert_eq!(c.rate(), 1.0);
    assert_eq!(decompress_stream(&c, &chart, &mu).unwrap(), stream);

    let sparse = exact_chart(&mu, 8, 0.3, OracleLimits::default()).unwrap();
    let c = compress_stream(&stream, &sparse, &layout).unwrap();
    assert!(c.rate() < 1.0);
    assert_eq!(c.gaps, gaps);
}
