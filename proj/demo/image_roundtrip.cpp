// image_roundtrip <in.pgm> <out.pgm> [block] [codebook size]
//
// Trains on the image's own blocks and writes the reconstruction.

#include <cstdlib>
#include <iostream>

#include "vq/vq.hpp"

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: " << argv[0] << " <in.pgm> <out.pgm> [block=4] [size=32]\n";
    return 1;
  }
  const std::size_t block = argc > 3 ? std::strtoul(argv[3], nullptr, 10) : 4;
  try {
    const vq::GrayImage img = vq::load_pgm(argv[1]);
    const vq::ImageBlocks blocks = vq::image_to_blocks(img, block);

    vq::LbgConfig cfg;
    cfg.target_size = argc > 4 ? std::strtoul(argv[4], nullptr, 10) : 32;
    cfg.workers = vq::default_worker_count();
    const vq::Codebook cb = vq::parallel_lbg_train(vq::TrainingSet(blocks.vectors), cfg).codebook;

    const vq::GrayImage out = vq::blocks_to_image(vq::decode(vq::encode(blocks.vectors, cb), cb), blocks.grid);
    vq::save_pgm(out, argv[2]);
    std::cout << "mean absolute pixel error " << vq::mean_absolute_error(img, out) << " at "
              << vq::rate(cb.size(), cb.dim()).bits_per_sample << " bits/pixel\n";
  } catch (const vq::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
