#include "infomaxda/synthdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "infomaxda/errors.hpp"

namespace infomaxda {

void LabeledSet::validate() const {
  if (x.rows() == 0) throw ValidationError("LabeledSet: empty");
  if (y.size() != x.rows()) throw ValidationError("LabeledSet: label count differs from row count");
  for (std::size_t label : y) {
    if (label >= class_count) {
      throw ValidationError("LabeledSet: label " + std::to_string(label) + " outside [0, " +
                            std::to_string(class_count) + ")");
    }
  }
}

UnlabeledSet strip_labels(const LabeledSet& set) { return UnlabeledSet{set.x}; }

LabeledSet DomainPair::target_for_evaluation() const {
  return LabeledSet{target.x, target_labels, source.class_count};
}

LabeledSet gen_two_moons(std::size_t n, double noise, std::uint64_t seed) {
  if (n < 2) throw ValidationError("gen_two_moons: n must be >= 2");
  if (!(noise >= 0.0)) throw ValidationError("gen_two_moons: noise must be >= 0");
  Rng rng(seed);
  const std::size_t n_outer = (n + 1) / 2;
  LabeledSet set{Tensor2D(n, 2), std::vector<std::size_t>(n), 2};
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::numbers::pi * rng.uniform();
    const bool outer = i < n_outer;
    const double px = outer ? std::cos(t) : 1.0 - std::cos(t);
    const double py = outer ? std::sin(t) : 0.5 - std::sin(t);
    const double ex = noise > 0.0 ? noise * rng.normal() : 0.0;
    const double ey = noise > 0.0 ? noise * rng.normal() : 0.0;
    set.x(i, 0) = px + ex;
    set.x(i, 1) = py + ey;
    set.y[i] = outer ? 0 : 1;
  }
  return set;
}

namespace {

Tensor2D rotate_points(const Tensor2D& x, double angle_degrees) {
  if (x.cols() != 2) throw ValidationError("rotate: data must be 2-D, got " + std::to_string(x.cols()) + " columns");
  const double a = angle_degrees * std::numbers::pi / 180.0;
  const double c = std::cos(a);
  const double s = std::sin(a);
  Tensor2D out(x.rows(), 2);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    out(r, 0) = c * x(r, 0) - s * x(r, 1);
    out(r, 1) = s * x(r, 0) + c * x(r, 1);
  }
  return out;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

LabeledSet rotate(const LabeledSet& set, double angle_degrees) {
  return LabeledSet{rotate_points(set.x, angle_degrees), set.y, set.class_count};
}

UnlabeledSet rotate(const UnlabeledSet& set, double angle_degrees) {
  return UnlabeledSet{rotate_points(set.x, angle_degrees)};
}

DomainPair gen_blob_shift(std::size_t n, std::size_t d, std::size_t classes, std::span<const double> shift,
                          std::uint64_t seed) {
  if (classes < 2) throw ValidationError("gen_blob_shift: need at least 2 classes");
  if (d == 0) throw ValidationError("gen_blob_shift: d must be >= 1");
  if (n == 0) throw ValidationError("gen_blob_shift: n must be >= 1");
  if (shift.size() != d) throw ValidationError("gen_blob_shift: shift length differs from d");
  Rng rng(seed);
  Tensor2D centers(classes, d);
  for (double& c : centers.values()) c = rng.uniform(-4.0, 4.0);
  Rng source_rng = rng.split();
  Rng target_rng = rng.split();

  DomainPair pair;
  pair.source = LabeledSet{Tensor2D(n, d), std::vector<std::size_t>(n), classes};
  pair.target = UnlabeledSet{Tensor2D(n, d)};
  pair.target_labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % classes;
    pair.source.y[i] = label;
    pair.target_labels[i] = label;
    for (std::size_t j = 0; j < d; ++j) {
      pair.source.x(i, j) = centers(label, j) + source_rng.normal();
      pair.target.x(i, j) = centers(label, j) + shift[j] + target_rng.normal();
    }
  }
  return pair;
}

PairedSamples gen_correlated_gaussians(std::size_t n, std::size_t dims, double rho, std::uint64_t seed) {
  if (!(std::abs(rho) < 1.0)) throw ValidationError("gen_correlated_gaussians: |rho| must be < 1");
  if (dims == 0) throw ValidationError("gen_correlated_gaussians: dims must be >= 1");
  Rng rng(seed);
  const double residual = std::sqrt(1.0 - rho * rho);
  PairedSamples out{Tensor2D(n, dims), Tensor2D(n, dims)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dims; ++j) {
      const double a = rng.normal();
      const double b = rng.normal();
      out.x(i, j) = a;
      out.z(i, j) = rho * a + residual * b;
    }
  }
  return out;
}

std::variant<LabeledSet, UnlabeledSet> load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open data file " + path.string());
  const std::string where = path.string() + ": line ";
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(where + "1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_commas(line);
  for (auto& h : header) h = trim(h);
  const bool labeled = !header.empty() && header.back() == "label";
  const std::size_t d = header.size() - (labeled ? 1 : 0);
  if (d == 0) throw ValidationError(where + "1: no feature columns");
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "f" + std::to_string(j)) {
      throw ValidationError(where + "1: expected column 'f" + std::to_string(j) + "', found '" + header[j] + "'");
    }
  }

  std::vector<double> values;
  std::vector<std::size_t> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != header.size()) {
      throw ValidationError(where + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " columns, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      const std::string f = trim(fields[j]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || f.empty() || !std::isfinite(v)) {
        throw ValidationError(where + std::to_string(line_no) + ": malformed number '" + f + "'");
      }
      values.push_back(v);
    }
    if (labeled) {
      const std::string f = trim(fields.back());
      std::size_t label = 0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), label);
      if (ec != std::errc() || ptr != f.data() + f.size() || f.empty()) {
        throw ValidationError(where + std::to_string(line_no) + ": label '" + f + "' is not a non-negative integer");
      }
      labels.push_back(label);
    }
  }
  const std::size_t n = values.size() / d;
  if (n == 0) throw ValidationError(path.string() + ": no data rows");
  Tensor2D x(n, d, std::move(values));
  if (!labeled) return UnlabeledSet{std::move(x)};
  const std::size_t classes = std::max<std::size_t>(2, *std::max_element(labels.begin(), labels.end()) + 1);
  return LabeledSet{std::move(x), std::move(labels), classes};
}

std::vector<std::vector<std::size_t>> batch_iterator(std::size_t n, std::size_t batch_size, Rng& rng) {
  if (batch_size < 2) throw ValidationError("batch_iterator: batch_size must be >= 2");
  const auto order = rng.permutation(n);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(n, begin + batch_size);
    if (end - begin < 2) break;
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

BatchStream::BatchStream(std::size_t n, std::size_t batch_size, Rng rng)
    : n_(n), batch_size_(batch_size), rng_(rng) {
  if (batch_size < 2) throw ValidationError("BatchStream: batch_size must be >= 2");
  if (n < 2) throw ValidationError("BatchStream: need at least 2 rows");
}

const std::vector<std::size_t>& BatchStream::next() {
  if (cursor_ >= epoch_.size()) {
    epoch_ = batch_iterator(n_, batch_size_, rng_);
    cursor_ = 0;
  }
  return epoch_[cursor_++];
}

std::size_t BatchStream::batches_per_epoch() const {
  std::size_t full = n_ / batch_size_;
  return full + (n_ % batch_size_ >= 2 ? 1 : 0);
}

}  // namespace infomaxda
