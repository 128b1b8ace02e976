#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sgm/corpus.hpp"
#include "sgm/model.hpp"

namespace sgm::testing {

// 20 records over a 50-word vocabulary and 5 labels, 1 to 3 labels each.
// Every label owns a few trigger words; the rest of each text is filler.
std::vector<RawRecord> overfit_corpus(std::uint64_t seed);

// Records whose label set always contains "beta" exactly when it contains
// "alpha". Only "alpha" has trigger words; the noise labels have their own
// triggers and appear independently.
struct CorrelationOptions {
  std::size_t records = 80;
  double alpha_rate = 0.5;
  double noise_rate = 0.3;
  std::size_t noise_labels = 4;
};
std::vector<RawRecord> correlation_corpus(std::uint64_t seed, const CorrelationOptions& options = {});
inline const std::string kAlpha = "alpha";
inline const std::string kBeta = "beta";

// Compact model for oracle tests. Parameters are redrawn uniformly in
// [-scale, scale] from `seed` after construction.
SgmModel toy_model(std::size_t vocab, std::size_t labels, std::size_t width, std::uint64_t seed,
                   double scale = 0.5, GlobalEmbeddingMode mode = GlobalEmbeddingMode::gate);

std::vector<int> random_tokens(std::size_t vocab, std::size_t length, std::uint64_t seed);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

void write_jsonl(const std::string& path, const std::vector<RawRecord>& records);
std::string read_file(const std::string& path);

}  // namespace sgm::testing
