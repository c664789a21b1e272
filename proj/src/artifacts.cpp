#include "infomaxda/artifacts.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <system_error>
#include <unistd.h>

#include "infomaxda/config.hpp"
#include "infomaxda/errors.hpp"

namespace infomaxda {

void atomic_write_text(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp, ec);
      throw IoError("short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

std::string metrics_csv(std::span<const MetricsRecord> history) {
  std::string s(kMetricsHeader);
  s += '\n';
  for (const MetricsRecord& r : history) {
    s += std::to_string(r.epoch);
    for (double v : {r.l_cls, r.l_kld, r.l_mi, r.l_ent, r.mi_estimate, r.constraint_gap, r.source_acc, r.target_acc}) {
      s += ',';
      s += format_double(v);
    }
    s += '\n';
  }
  return s;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::filesystem::path default_output_root() {
  const char* env = std::getenv("INFOMAXDA_OUT");
  if (env != nullptr && *env != '\0') return env;
  return "runs";
}

}  // namespace infomaxda
