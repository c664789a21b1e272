#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "infomaxda/rng.hpp"
#include "infomaxda/tensor.hpp"

namespace infomaxda {

struct LabeledSet {
  Tensor2D x;
  std::vector<std::size_t> y;
  std::size_t class_count = 0;

  std::size_t size() const { return x.rows(); }
  // Labels in [0, class_count), one per row, at least one row.
  void validate() const;
};

// Target-domain inputs as the trainer sees them: no labels.
struct UnlabeledSet {
  Tensor2D x;

  std::size_t size() const { return x.rows(); }
};

UnlabeledSet strip_labels(const LabeledSet& set);

// Source set plus a target whose labels are kept apart for scoring only.
struct DomainPair {
  LabeledSet source;
  UnlabeledSet target;
  std::vector<std::size_t> target_labels;

  LabeledSet target_for_evaluation() const;
};

/// Two interleaved half circles plus isotropic noise. Class 0 has ceil(n/2)
/// points on (cos t, sin t), class 1 has floor(n/2) on (1 - cos t, 1/2 - sin t),
/// t ~ U[0, pi]. Class 0 rows come first.
LabeledSet gen_two_moons(std::size_t n, double noise, std::uint64_t seed);

// Rotation about the origin; needs 2-D data.
LabeledSet rotate(const LabeledSet& set, double angle_degrees);
UnlabeledSet rotate(const UnlabeledSet& set, double angle_degrees);

/// C unit-variance Gaussian blobs with centers uniform in [-4, 4]^d; labels
/// cycle 0..C-1. The target draws fresh samples from the same blobs moved by
/// `shift`.
DomainPair gen_blob_shift(std::size_t n, std::size_t d, std::size_t classes, std::span<const double> shift,
                          std::uint64_t seed);

struct PairedSamples {
  Tensor2D x;
  Tensor2D z;
};

// Per dimension (x, z) standard bivariate normal with correlation rho.
PairedSamples gen_correlated_gaussians(std::size_t n, std::size_t dims, double rho, std::uint64_t seed);

/// Header `f0,...,f{d-1}` with an optional trailing `label` column. A label
/// column yields a LabeledSet with class_count = max label + 1 (at least 2).
/// Throws IoError when the file cannot be opened and ValidationError naming the
/// line for malformed content.
std::variant<LabeledSet, UnlabeledSet> load_csv(const std::filesystem::path& path);

/// One epoch of minibatch indices: Fisher-Yates shuffle of [0, n), then
/// contiguous slices of batch_size; a trailing slice shorter than 2 rows is
/// dropped, any other short slice is kept.
std::vector<std::vector<std::size_t>> batch_iterator(std::size_t n, std::size_t batch_size, Rng& rng);

// Endless stream of batches over n rows, reshuffling whenever an epoch runs out.
class BatchStream {
 public:
  BatchStream(std::size_t n, std::size_t batch_size, Rng rng);

  const std::vector<std::size_t>& next();
  std::size_t batches_per_epoch() const;

 private:
  std::size_t n_;
  std::size_t batch_size_;
  Rng rng_;
  std::vector<std::vector<std::size_t>> epoch_;
  std::size_t cursor_ = 0;
};

}  // namespace infomaxda
