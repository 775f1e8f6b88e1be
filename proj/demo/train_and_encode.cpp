// Trains a 16-entry codebook on synthetic data with four workers, then encodes
// a fresh sample and reports the rate and reconstruction distortion.

#include <iostream>

#include "vq/vq.hpp"

int main() {
  const vq::TrainingSet train = vq::synthetic_uniform(4000, 4, 1);
  const vq::TrainingSet test = vq::synthetic_uniform(1000, 4, 2);

  vq::LbgConfig cfg;
  cfg.target_size = 16;
  cfg.workers = 4;
  const vq::TrainResult result = vq::parallel_lbg_train(train, cfg);

  for (const auto& h : result.stats.history)
    std::cout << "N=" << h.level_size << " iter " << h.iteration << " TD " << h.td << '\n';

  vq::WorkerTeam team(cfg.workers);
  const vq::EncodedStream es = vq::encode(test.vectors(), result.codebook, team);
  const vq::VectorSet recon = vq::decode(es, result.codebook);
  const auto d = vq::reconstruction_distortion(test.vectors(), recon);
  const vq::RateReport r = vq::rate(result.codebook.size(), result.codebook.dim());

  std::cout << "held-out mean distortion " << d.mean << " at " << r.bits_per_sample
            << " bits/sample (" << r.compression_ratio << "x smaller than raw doubles)\n";
}
