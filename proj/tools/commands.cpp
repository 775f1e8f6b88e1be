#include "commands.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vq/vq.hpp"

namespace vq::cli {
namespace {

struct TrainFlags {
  std::string input;
  std::size_t codebook_size = 0;
  double epsilon = 0.001;
  double delta = 0.01;
  std::size_t threads = 0;
  std::string metric = "squared_euclidean";
  std::size_t max_iters = 100;
  std::string out;
  std::string history;
  std::size_t block = 0;  // image-train only
};

void add_training_options(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--codebook-size,-n", f.codebook_size, "Target number of codevectors (power of two)")
      ->required();
  cmd->add_option("--epsilon", f.epsilon, "Relative distortion-drop threshold")->capture_default_str();
  cmd->add_option("--delta", f.delta, "Split offset added/subtracted per component")
      ->capture_default_str();
  cmd->add_option("--threads,-p", f.threads, "Worker count (default: VQ_THREADS or physical cores)");
  cmd->add_option("--metric", f.metric, "squared_euclidean or euclidean")->capture_default_str();
  cmd->add_option("--max-iters", f.max_iters, "Iteration guard per codebook size")->capture_default_str();
  cmd->add_option("--out,-o", f.out, "Output codebook file (VQCB)")->required();
  cmd->add_option("--history", f.history, "Optional per-iteration history CSV");
}

LbgConfig make_config(const TrainFlags& f) {
  LbgConfig cfg;
  cfg.target_size = f.codebook_size;
  cfg.epsilon = f.epsilon;
  cfg.delta = f.delta;
  cfg.workers = f.threads == 0 ? default_worker_count() : f.threads;
  cfg.max_iterations_per_level = f.max_iters;
  cfg.metric = parse_metric(f.metric);
  if (cfg.target_size == 0 || !std::has_single_bit(cfg.target_size))
    throw UsageError("--codebook-size " + std::to_string(cfg.target_size) + " must be a power of two");
  cfg.validate();
  return cfg;
}

void write_history(const DistortionStats& stats, const std::string& path) {
  std::ostringstream csv;
  csv << "level_size,iteration,td,empty_cells,seconds\n";
  for (const auto& h : stats.history)
    csv << h.level_size << ',' << h.iteration << ',' << format_number(h.td) << ',' << h.empty_cells
        << ',' << format_number(h.seconds) << '\n';
  write_text_file(path, csv.str());
}

void print_rate(std::ostream& out, std::size_t n, std::size_t k) {
  const RateReport r = rate(n, k);
  out << "rate: " << format_number(r.bits_per_vector) << " bits/vector, "
      << format_number(r.bits_per_sample) << " bits/sample, compression ratio "
      << format_number(r.compression_ratio) << " (vs raw 64-bit samples)\n";
}

int train_and_save(const TrainingSet& ts, const LbgConfig& cfg, const TrainFlags& f, std::ostream& out,
                   std::ostream& err) {
  const TrainResult result = parallel_lbg_train(ts, cfg);
  save_codebook(result.codebook, cfg.metric, f.out);
  if (!f.history.empty()) write_history(result.stats, f.history);
  for (const auto& w : result.stats.warnings) err << "warning: " << w << '\n';
  out << "trained " << result.codebook.size() << " codevectors of dimension " << ts.dim() << " from "
      << ts.size() << " vectors using " << cfg.workers << " worker(s)\n"
      << "epsilon " << format_number(cfg.epsilon) << ", delta " << format_number(cfg.delta)
      << ", metric " << to_string(cfg.metric) << '\n'
      << "final TD: " << format_number(result.stats.total)
      << " (mean " << format_number(result.stats.mean(ts.size())) << " per vector)\n";
  print_rate(out, result.codebook.size(), result.codebook.dim());
  return kSuccess;
}

std::size_t block_side_for(const Codebook& cb, std::size_t block) {
  if (block == 0) throw UsageError("--block must be at least 1");
  if (block * block != cb.dim())
    throw UsageError("codebook dimension " + std::to_string(cb.dim()) + " does not match --block " +
                     std::to_string(block) + " (needs " + std::to_string(block * block) + ")");
  return block;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(item);
  return parts;
}

std::uint64_t parse_count(const std::string& s, const char* what) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || s.front() == '-')
    throw UsageError(std::string("cannot parse ") + what + " '" + s + "'");
  return v;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vector quantization codebook training and coding"};
  app.name(args.empty() ? "vq" : args.front());
  app.require_subcommand(1);
  std::function<int()> action;

  // train
  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "Train a codebook from a CSV of vectors");
  train_cmd->add_option("--input,-i", train.input, "Training CSV")->required();
  add_training_options(train_cmd, train);
  train_cmd->callback([&] {
    action = [&] {
      const LbgConfig cfg = make_config(train);
      return train_and_save(load_training_csv(train.input), cfg, train, out, err);
    };
  });

  // encode
  std::string enc_input, enc_codebook, enc_out;
  std::size_t enc_threads = 0;
  auto* encode_cmd = app.add_subcommand("encode", "Quantize a CSV of vectors to codevector indices");
  encode_cmd->add_option("--input,-i", enc_input, "Data CSV")->required();
  encode_cmd->add_option("--codebook,-c", enc_codebook, "Codebook file (VQCB)")->required();
  encode_cmd->add_option("--out,-o", enc_out, "Output encoded file (VQEN)")->required();
  encode_cmd->add_option("--threads,-p", enc_threads, "Worker count");
  encode_cmd->callback([&] {
    action = [&] {
      const StoredCodebook stored = load_codebook(enc_codebook);
      const VectorSet data = load_vectors_csv(enc_input);
      WorkerTeam team(enc_threads == 0 ? default_worker_count() : enc_threads);
      const EncodedStream es = encode(data, stored.codebook, team);
      save_encoded(es, enc_out);
      out << "encoded " << es.indices.size() << " vectors with " << es.codebook_size
          << " codevectors\n";
      print_rate(out, stored.codebook.size(), stored.codebook.dim());
      return int{kSuccess};
    };
  });

  // decode
  std::string dec_input, dec_codebook, dec_out;
  auto* decode_cmd = app.add_subcommand("decode", "Reconstruct vectors from an encoded file");
  decode_cmd->add_option("--input,-i", dec_input, "Encoded file (VQEN)")->required();
  decode_cmd->add_option("--codebook,-c", dec_codebook, "Codebook file (VQCB)")->required();
  decode_cmd->add_option("--out,-o", dec_out, "Output CSV")->required();
  decode_cmd->callback([&] {
    action = [&] {
      const StoredCodebook stored = load_codebook(dec_codebook);
      const EncodedStream es = load_encoded(dec_input);
      const VectorSet rows = decode(es, stored.codebook);
      save_vectors_csv(rows, dec_out);
      out << "decoded " << rows.size() << " vectors of dimension " << stored.codebook.dim() << '\n';
      return int{kSuccess};
    };
  });

  // rate
  std::string rate_codebook;
  std::size_t rate_size = 0, rate_dim = 0;
  auto* rate_cmd = app.add_subcommand("rate", "Report bits per vector/sample of a codebook");
  auto* rate_cb_opt = rate_cmd->add_option("--codebook,-c", rate_codebook, "Codebook file (VQCB)");
  auto* rate_size_opt = rate_cmd->add_option("--size,-n", rate_size, "Codebook size N");
  auto* rate_dim_opt = rate_cmd->add_option("--dim,-k", rate_dim, "Vector dimension L");
  rate_cb_opt->excludes(rate_size_opt)->excludes(rate_dim_opt);
  rate_size_opt->needs(rate_dim_opt);
  rate_dim_opt->needs(rate_size_opt);
  rate_cmd->callback([&] {
    action = [&] {
      std::size_t n = rate_size, k = rate_dim;
      if (!rate_codebook.empty()) {
        const StoredCodebook stored = load_codebook(rate_codebook);
        n = stored.codebook.size();
        k = stored.codebook.dim();
      } else if (rate_size == 0 && rate_dim == 0) {
        throw UsageError("rate needs --codebook or both --size and --dim");
      }
      out << "codebook size " << n << ", dimension " << k << '\n';
      print_rate(out, n, k);
      return int{kSuccess};
    };
  });

  // image-train
  TrainFlags itrain;
  auto* itrain_cmd = app.add_subcommand("image-train", "Train a codebook from b x b blocks of a PGM image");
  itrain_cmd->add_option("--input,-i", itrain.input, "Binary PGM (P5, maxval 255)")->required();
  itrain_cmd->add_option("--block,-b", itrain.block, "Block side b (k = b*b)")->required();
  add_training_options(itrain_cmd, itrain);
  itrain_cmd->callback([&] {
    action = [&] {
      if (itrain.block == 0) throw UsageError("--block must be at least 1");
      const LbgConfig cfg = make_config(itrain);
      ImageBlocks blocks = image_to_blocks(load_pgm(itrain.input), itrain.block);
      return train_and_save(TrainingSet(std::move(blocks.vectors)), cfg, itrain, out, err);
    };
  });

  // image-encode
  std::string ienc_input, ienc_codebook, ienc_out;
  std::size_t ienc_block = 0, ienc_threads = 0;
  bool ienc_report = false;
  auto* ienc_cmd = app.add_subcommand("image-encode", "Encode a PGM image with a block codebook");
  ienc_cmd->add_option("--input,-i", ienc_input, "Binary PGM (P5, maxval 255)")->required();
  ienc_cmd->add_option("--codebook,-c", ienc_codebook, "Codebook file (VQCB)")->required();
  ienc_cmd->add_option("--block,-b", ienc_block, "Block side b")->required();
  ienc_cmd->add_option("--out,-o", ienc_out, "Output encoded file (VQEN)")->required();
  ienc_cmd->add_option("--threads,-p", ienc_threads, "Worker count");
  ienc_cmd->add_flag("--report", ienc_report, "Print reconstruction distortion");
  ienc_cmd->callback([&] {
    action = [&] {
      const StoredCodebook stored = load_codebook(ienc_codebook);
      const std::size_t b = block_side_for(stored.codebook, ienc_block);
      const GrayImage img = load_pgm(ienc_input);
      const ImageBlocks blocks = image_to_blocks(img, b);
      WorkerTeam team(ienc_threads == 0 ? default_worker_count() : ienc_threads);
      const EncodedStream es = encode(blocks.vectors, stored.codebook, team);
      save_encoded(es, ienc_out);
      out << "encoded " << img.width << "x" << img.height << " image as " << es.indices.size()
          << " blocks of " << b << "x" << b << " (decode with --width " << img.width
          << " --height " << img.height << ")\n";
      print_rate(out, stored.codebook.size(), stored.codebook.dim());
      if (ienc_report) {
        const VectorSet recon = decode(es, stored.codebook);
        const auto d = reconstruction_distortion(blocks.vectors, recon, stored.metric);
        const GrayImage recon_img = blocks_to_image(recon, blocks.grid);
        out << "reconstruction distortion (" << to_string(stored.metric)
            << "): total " << format_number(d.total) << ", mean " << format_number(d.mean)
            << " per block\n"
            << "mean absolute pixel error: " << format_number(mean_absolute_error(img, recon_img))
            << '\n';
      }
      return int{kSuccess};
    };
  });

  // image-decode
  std::string idec_input, idec_codebook, idec_out;
  std::size_t idec_block = 0, idec_width = 0, idec_height = 0;
  auto* idec_cmd = app.add_subcommand("image-decode", "Reconstruct a PGM image from an encoded file");
  idec_cmd->add_option("--input,-i", idec_input, "Encoded file (VQEN)")->required();
  idec_cmd->add_option("--codebook,-c", idec_codebook, "Codebook file (VQCB)")->required();
  idec_cmd->add_option("--block,-b", idec_block, "Block side b")->required();
  idec_cmd->add_option("--width", idec_width, "Image width in pixels")->required();
  idec_cmd->add_option("--height", idec_height, "Image height in pixels")->required();
  idec_cmd->add_option("--out,-o", idec_out, "Output PGM")->required();
  idec_cmd->callback([&] {
    action = [&] {
      const StoredCodebook stored = load_codebook(idec_codebook);
      const std::size_t b = block_side_for(stored.codebook, idec_block);
      if (idec_width == 0 || idec_height == 0) throw UsageError("--width and --height must be positive");
      const BlockGrid grid{idec_width, idec_height, b, Padding::replicate};
      const EncodedStream es = load_encoded(idec_input);
      if (es.indices.size() != grid.vector_count())
        throw UsageError("encoded file holds " + std::to_string(es.indices.size()) + " blocks, a " +
                         std::to_string(idec_width) + "x" + std::to_string(idec_height) +
                         " image needs " + std::to_string(grid.vector_count()));
      save_pgm(blocks_to_image(decode(es, stored.codebook), grid), idec_out);
      out << "decoded " << idec_width << "x" << idec_height << " image\n";
      return int{kSuccess};
    };
  });

  // bench
  std::string bench_input, bench_synthetic, bench_out;
  std::string bench_sizes = "8,16,32,64,128", bench_threads = "1,2,4";
  std::size_t bench_repeats = 3;
  double serial_fraction = 0.15;
  BenchOptions bench_opt;
  auto* bench_cmd = app.add_subcommand("bench", "Time training over a sweep of codebook sizes and worker counts");
  auto* bench_in_opt = bench_cmd->add_option("--input,-i", bench_input, "Training CSV");
  auto* bench_syn_opt =
      bench_cmd->add_option("--synthetic", bench_synthetic, "Uniform synthetic data: M,k,seed");
  bench_in_opt->excludes(bench_syn_opt);
  bench_cmd->add_option("--sizes", bench_sizes, "Comma-separated codebook sizes")->capture_default_str();
  bench_cmd->add_option("--threads", bench_threads, "Comma-separated worker counts")->capture_default_str();
  bench_cmd->add_option("--repeats", bench_repeats, "Repeats per cell (minimum is reported)")
      ->capture_default_str();
  bench_cmd->add_option("--out,-o", bench_out, "Output CSV (default: stdout)");
  bench_cmd->add_option("--serial-fraction", serial_fraction, "Serial fraction for the Amdahl column")
      ->capture_default_str();
  bench_cmd->add_option("--epsilon", bench_opt.epsilon)->capture_default_str();
  bench_cmd->add_option("--delta", bench_opt.delta)->capture_default_str();
  bench_cmd->add_option("--max-iters", bench_opt.max_iterations_per_level)->capture_default_str();
  bench_cmd->callback([&] {
    action = [&] {
      bench_opt.sizes.clear();
      bench_opt.threads.clear();
      for (const auto& s : split_list(bench_sizes)) bench_opt.sizes.push_back(parse_count(s, "size"));
      for (const auto& s : split_list(bench_threads))
        bench_opt.threads.push_back(parse_count(s, "thread count"));
      bench_opt.repeats = bench_repeats;
      for (auto n : bench_opt.sizes)
        if (n == 0 || !std::has_single_bit(n))
          throw UsageError("benchmark size " + std::to_string(n) + " must be a power of two");
      for (auto p : bench_opt.threads)
        if (p == 0) throw UsageError("thread counts must be positive");
      // Checked before the (slow) sweep starts.
      amdahl_speedup({serial_fraction, 1.0});

      std::string metadata;
      std::optional<TrainingSet> ts;
      if (!bench_synthetic.empty()) {
        const auto parts = split_list(bench_synthetic);
        if (parts.size() != 3) throw UsageError("--synthetic expects M,k,seed");
        const auto m = parse_count(parts[0], "M");
        const auto k = parse_count(parts[1], "k");
        const auto seed = parse_count(parts[2], "seed");
        ts.emplace(synthetic_uniform(m, k, seed));
        metadata = "synthetic uniform m=" + parts[0] + " k=" + parts[1] + " seed=" + parts[2];
      } else if (!bench_input.empty()) {
        ts.emplace(load_training_csv(bench_input));
        metadata = "input=" + bench_input;
      } else {
        throw UsageError("bench needs --input or --synthetic");
      }
      metadata += " epsilon=" + format_number(bench_opt.epsilon) +
                  " delta=" + format_number(bench_opt.delta);

      const auto records = run_bench(*ts, bench_opt);
      std::ostringstream csv;
      write_bench_csv(csv, records, metadata);
      if (bench_out.empty()) {
        out << csv.str();
      } else {
        write_text_file(bench_out, csv.str());
      }

      const auto speedups = measured_speedups(records);
      std::ostream& report = bench_out.empty() ? err : out;
      report << "n,p,seconds,speedup,amdahl(S=" << format_number(serial_fraction) << ")\n";
      for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        report << r.codebook_size << ',' << r.workers << ',' << format_number(r.seconds) << ','
               << format_number(speedups[i]) << ','
               << format_number(amdahl_speedup({serial_fraction, static_cast<double>(r.workers)}))
               << '\n';
      }
      return int{kSuccess};
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kSuccess : kUsageError;
  }

  try {
    return action ? action() : kUsageError;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace vq::cli
