#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "newsvm/newsvm.hpp"

namespace testing_support {

// Planted synthetic corpus: log-spaced source weights, noise at the requested signal-to-noise ratio.
inline newsvm::SynthConfig planted_config(std::uint64_t seed, std::size_t days, std::size_t stocks = 1,
                                          double snr = 10.0) {
  newsvm::SynthConfig cfg;
  cfg.seed = seed;
  cfg.num_days = days;
  cfg.num_stocks = stocks;
  cfg.source_coefficients = newsvm::planted_coefficients(cfg.num_sources);
  cfg.noise_std = newsvm::noise_for_snr(cfg.source_coefficients, snr);
  return cfg;
}

// Lexicons applied to the generated corpus, as the file pipeline would.
inline newsvm::Inputs inputs_from(const newsvm::SynthOutput& out) {
  const newsvm::Segmenter seg(out.sentiment, out.stopwords);
  return {out.truth.sources, newsvm::build_daily_signals(out.news, out.truth.sources, seg), out.stocks};
}

inline newsvm::AssembledData planted_data(const newsvm::SynthOutput& out, newsvm::FeatureLayout layout = {}) {
  const auto in = inputs_from(out);
  layout.num_sources = in.sources.size();
  return newsvm::assemble(in.stocks.at(0), in.signals, layout);
}

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("newsvm_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
