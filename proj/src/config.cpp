#include "infomaxda/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <variant>

#include "infomaxda/errors.hpp"

namespace infomaxda {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ValidationError(std::string(key) + ": expected " + std::string(expected) + ", got '" + std::string(value) +
                        "'");
}

double parse_double(std::string_view key, std::string_view text) {
  const std::string_view v = trim(text);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, text, "a number");
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view text) {
  const std::string_view v = trim(text);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    bad_value(key, text, "a non-negative integer");
  }
  return out;
}

std::size_t parse_count(std::string_view key, std::string_view text) {
  return static_cast<std::size_t>(parse_u64(key, text));
}

bool parse_bool(std::string_view key, std::string_view text) {
  const std::string_view v = trim(text);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, text, "true or false");
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> items;
  const std::string_view v = trim(text);
  if (v.empty()) return items;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = v.find(',', begin);
    items.push_back(trim(v.substr(begin, comma == std::string_view::npos ? std::string_view::npos : comma - begin)));
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return items;
}

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view key, std::string_view text, Parse parse, bool allow_empty) {
  std::vector<T> out;
  for (auto item : split_list(text)) out.push_back(parse(key, item));
  if (out.empty() && !allow_empty) bad_value(key, text, "a non-empty comma-separated list");
  return out;
}

template <typename T, typename Format>
std::string join(const std::vector<T>& items, Format format) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) s += ',';
    s += format(items[i]);
  }
  return s;
}

std::string fmt_count(std::size_t v) { return std::to_string(v); }
std::string fmt_u64(std::uint64_t v) { return std::to_string(v); }
std::string fmt_bool(bool v) { return v ? "true" : "false"; }

std::optional<double> parse_optional(std::string_view key, std::string_view text) {
  const std::string_view v = trim(text);
  if (v == "none" || v.empty()) return std::nullopt;
  return parse_double(key, v);
}

std::string fmt_optional(const std::optional<double>& v) { return v ? format_double(*v) : "none"; }

template <typename E, typename Parse>
E parse_enum(std::string_view key, std::string_view text, Parse parse) {
  try {
    return parse(trim(text));
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(key) + ": " + e.what());
  }
}

struct Key {
  std::string name;
  std::function<void(ResolvedConfig&, std::string_view)> set;
  std::function<std::string(const ResolvedConfig&)> get;
};

#define INFOMAXDA_KEY(NAME, FIELD, PARSE, FORMAT)                                                     \
  Key {                                                                                               \
    NAME, [](ResolvedConfig& c, std::string_view v) { c.FIELD = PARSE(NAME, v); },                    \
        [](const ResolvedConfig& c) { return FORMAT(c.FIELD); }                                       \
  }

std::string_view identity_text(std::string_view, std::string_view v) { return trim(v); }
std::string copy_text(const std::string& s) { return s; }

std::vector<std::size_t> parse_layers(std::string_view key, std::string_view v) {
  return parse_list<std::size_t>(key, v, parse_count, true);
}
std::string fmt_layers(const std::vector<std::size_t>& v) { return join(v, fmt_count); }
std::vector<double> parse_grid(std::string_view key, std::string_view v) {
  return parse_list<double>(key, v, parse_double, false);
}
std::string fmt_grid(const std::vector<double>& v) { return join(v, format_double); }
std::vector<std::uint64_t> parse_seeds(std::string_view key, std::string_view v) {
  return parse_list<std::uint64_t>(key, v, parse_u64, false);
}
std::string fmt_seeds(const std::vector<std::uint64_t>& v) { return join(v, fmt_u64); }
Activation parse_act(std::string_view key, std::string_view v) {
  return parse_enum<Activation>(key, v, parse_activation);
}
std::string fmt_act(Activation a) { return std::string(to_string(a)); }
Ablation parse_abl(std::string_view key, std::string_view v) { return parse_enum<Ablation>(key, v, parse_ablation); }
std::string fmt_abl(Ablation a) { return std::string(to_string(a)); }
Estimator parse_est(std::string_view key, std::string_view v) {
  return parse_enum<Estimator>(key, v, parse_estimator);
}
std::string fmt_est(Estimator e) { return std::string(to_string(e)); }

const std::vector<Key>& key_table() {
  static const std::vector<Key> table{
      INFOMAXDA_KEY("train.alpha", train.alpha, parse_double, format_double),
      INFOMAXDA_KEY("train.beta", train.beta, parse_double, format_double),
      INFOMAXDA_KEY("train.gamma", train.gamma, parse_double, format_double),
      INFOMAXDA_KEY("train.lr", train.lr, parse_double, format_double),
      INFOMAXDA_KEY("train.momentum", train.momentum, parse_double, format_double),
      INFOMAXDA_KEY("train.batch_size", train.batch_size, parse_count, fmt_count),
      INFOMAXDA_KEY("train.epochs", train.max_epochs, parse_count, fmt_count),
      INFOMAXDA_KEY("train.critic_steps", train.critic_steps, parse_count, fmt_count),
      INFOMAXDA_KEY("train.seed", train.seed, parse_u64, fmt_u64),
      INFOMAXDA_KEY("train.ablation", train.ablation, parse_abl, fmt_abl),
      INFOMAXDA_KEY("train.estimator", train.estimator, parse_est, fmt_est),
      INFOMAXDA_KEY("train.hinge_lambda", train.hinge_lambda, parse_double, format_double),
      INFOMAXDA_KEY("train.ema_rate", train.ema_rate, parse_optional, fmt_optional),
      INFOMAXDA_KEY("train.clip_norm", train.clip_norm, parse_double, format_double),
      INFOMAXDA_KEY("train.model_clip_norm", train.model_clip_norm, parse_double, format_double),
      INFOMAXDA_KEY("train.entropy", train.entropy, parse_bool, fmt_bool),
      INFOMAXDA_KEY("train.heldout_fraction", train.heldout_fraction, parse_double, format_double),
      INFOMAXDA_KEY("train.verify_phase_isolation", train.verify_phase_isolation, parse_bool, fmt_bool),
      INFOMAXDA_KEY("arch.latent_dim", train.arch.latent_dim, parse_count, fmt_count),
      INFOMAXDA_KEY("arch.encoder_hidden", train.arch.encoder_hidden, parse_layers, fmt_layers),
      INFOMAXDA_KEY("arch.classifier_hidden", train.arch.classifier_hidden, parse_layers, fmt_layers),
      INFOMAXDA_KEY("arch.critic_hidden", train.arch.critic_hidden, parse_layers, fmt_layers),
      INFOMAXDA_KEY("arch.decoder_hidden", train.arch.decoder_hidden, parse_layers, fmt_layers),
      INFOMAXDA_KEY("arch.encoder_activation", train.arch.encoder_activation, parse_act, fmt_act),
      INFOMAXDA_KEY("arch.classifier_activation", train.arch.classifier_activation, parse_act, fmt_act),
      INFOMAXDA_KEY("arch.critic_activation", train.arch.critic_activation, parse_act, fmt_act),
      INFOMAXDA_KEY("arch.decoder_activation", train.arch.decoder_activation, parse_act, fmt_act),
      INFOMAXDA_KEY("data.kind", data.kind, identity_text, copy_text),
      INFOMAXDA_KEY("data.n", data.n, parse_count, fmt_count),
      INFOMAXDA_KEY("data.noise", data.noise, parse_double, format_double),
      INFOMAXDA_KEY("data.seed", data.seed, parse_u64, fmt_u64),
      INFOMAXDA_KEY("data.source_rotation_deg", data.source_rotation_deg, parse_double, format_double),
      INFOMAXDA_KEY("data.rotation_deg", data.rotation_deg, parse_double, format_double),
      INFOMAXDA_KEY("data.third_rotation_deg", data.third_rotation_deg, parse_optional, fmt_optional),
      INFOMAXDA_KEY("data.dims", data.dims, parse_count, fmt_count),
      INFOMAXDA_KEY("data.classes", data.classes, parse_count, fmt_count),
      INFOMAXDA_KEY("data.shift", data.shift, parse_double, format_double),
      INFOMAXDA_KEY("data.source_path", data.source_path, identity_text, copy_text),
      INFOMAXDA_KEY("data.target_path", data.target_path, identity_text, copy_text),
      INFOMAXDA_KEY("data.third_path", data.third_path, identity_text, copy_text),
      INFOMAXDA_KEY("mi.rho", mi.rho, parse_double, format_double),
      INFOMAXDA_KEY("mi.dims", mi.dims, parse_count, fmt_count),
      INFOMAXDA_KEY("mi.n", mi.n, parse_count, fmt_count),
      INFOMAXDA_KEY("run.out_dir", run.out_dir, identity_text, copy_text),
      INFOMAXDA_KEY("run.jobs", run.jobs, parse_count, fmt_count),
      INFOMAXDA_KEY("run.seeds", run.seeds, parse_seeds, fmt_seeds),
      INFOMAXDA_KEY("sweep.alphas", sweep.alphas, parse_grid, fmt_grid),
      INFOMAXDA_KEY("sweep.betas", sweep.betas, parse_grid, fmt_grid),
      INFOMAXDA_KEY("oracle.suite", oracle.suite, identity_text, copy_text),
      INFOMAXDA_KEY("oracle.instances", oracle.instances, parse_count, fmt_count),
      INFOMAXDA_KEY("oracle.seed", oracle.seed, parse_u64, fmt_u64),
      INFOMAXDA_KEY("gradcheck.loss", gradcheck.loss, identity_text, copy_text),
      INFOMAXDA_KEY("gradcheck.seed", gradcheck.seed, parse_u64, fmt_u64),
  };
  return table;
}

#undef INFOMAXDA_KEY

const Key& find_key(std::string_view name) {
  for (const Key& k : key_table()) {
    if (k.name == name) return k;
  }
  throw ValidationError("unknown config key '" + std::string(name) + "'");
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ResolvedConfig ResolvedConfig::defaults_for(std::string_view subcommand) {
  ResolvedConfig c;
  if (subcommand == "gaussian-mi") {
    c.train.lr = 5e-3;
    c.train.batch_size = 256;
    c.train.max_epochs = 14;
  } else if (subcommand == "cross-eval") {
    c.data.rotation_deg = 30.0;
    c.data.third_rotation_deg = 60.0;
  }
  return c;
}

void ResolvedConfig::set(std::string_view key, std::string_view value) { find_key(key).set(*this, value); }

std::string ResolvedConfig::get(std::string_view key) const { return find_key(key).get(*this); }

const std::vector<std::string>& ResolvedConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const Key& k : key_table()) n.push_back(k.name);
    return n;
  }();
  return names;
}

std::vector<std::pair<std::string, std::string>> ResolvedConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Key& k : key_table()) out.emplace_back(k.name, k.get(*this));
  return out;
}

std::string ResolvedConfig::to_text() const {
  std::string s;
  for (const auto& [k, v] : entries()) s += k + " = " + v + "\n";
  return s;
}

void apply_config_file(ResolvedConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = line;
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    const std::string where = path.string() + ": line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ValidationError(where + "expected 'key = value'");
    const std::string_view key = trim(v.substr(0, eq));
    try {
      config.set(key, v.substr(eq + 1));
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
}

void apply_overrides(ResolvedConfig& config, const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string_view a = args[i];
    if (!a.starts_with("--")) throw ValidationError("unexpected argument '" + args[i] + "'");
    a.remove_prefix(2);
    if (const auto eq = a.find('='); eq != std::string_view::npos) {
      config.set(a.substr(0, eq), a.substr(eq + 1));
    } else {
      find_key(a);
      if (i + 1 >= args.size()) throw ValidationError("--" + std::string(a) + ": missing value");
      config.set(a, args[++i]);
    }
  }
}

ExperimentData build_experiment_data(const DataConfig& data) {
  ExperimentData out;
  if (data.kind == "two_moons") {
    if (data.n < 2) throw ValidationError("data.n must be >= 2");
    out.source = rotate(gen_two_moons(data.n, data.noise, data.seed), data.source_rotation_deg);
    const LabeledSet target = rotate(gen_two_moons(data.n, data.noise, derive_seed(data.seed, 1)), data.rotation_deg);
    out.target = strip_labels(target);
    out.target_eval = target;
    if (data.third_rotation_deg) {
      out.extra.push_back(
          rotate(gen_two_moons(data.n, data.noise, derive_seed(data.seed, 2)), *data.third_rotation_deg));
    }
  } else if (data.kind == "blob_shift") {
    const std::vector<double> shift(data.dims, data.shift);
    DomainPair pair = gen_blob_shift(data.n, data.dims, data.classes, shift, data.seed);
    out.target_eval = pair.target_for_evaluation();
    out.source = std::move(pair.source);
    out.target = std::move(pair.target);
    if (data.third_rotation_deg) {
      // Same blob centers, twice the shift.
      const std::vector<double> far(data.dims, 2.0 * data.shift);
      out.extra.push_back(gen_blob_shift(data.n, data.dims, data.classes, far, data.seed).target_for_evaluation());
    }
  } else if (data.kind == "csv") {
    if (data.source_path.empty()) throw ValidationError("data.source_path is required for data.kind = csv");
    if (data.target_path.empty()) throw ValidationError("data.target_path is required for data.kind = csv");
    auto source = load_csv(data.source_path);
    if (!std::holds_alternative<LabeledSet>(source)) {
      throw ValidationError(data.source_path + ": source data needs a label column");
    }
    out.source = std::get<LabeledSet>(std::move(source));
    auto target = load_csv(data.target_path);
    if (auto* labeled = std::get_if<LabeledSet>(&target)) {
      out.target = strip_labels(*labeled);
      labeled->class_count = std::max(labeled->class_count, out.source.class_count);
      out.target_eval = std::move(*labeled);
    } else {
      out.target = std::get<UnlabeledSet>(std::move(target));
    }
    if (!data.third_path.empty()) {
      auto third = load_csv(data.third_path);
      if (!std::holds_alternative<LabeledSet>(third)) {
        throw ValidationError(data.third_path + ": third-domain data needs a label column");
      }
      out.extra.push_back(std::get<LabeledSet>(std::move(third)));
    }
  } else {
    throw ValidationError("data.kind: expected two_moons, blob_shift or csv, got '" + data.kind + "'");
  }
  return out;
}

}  // namespace infomaxda
