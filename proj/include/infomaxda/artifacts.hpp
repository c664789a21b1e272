#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "infomaxda/trainer.hpp"

namespace infomaxda {

/// Writes to a sibling temp file and renames it over `path`, so readers see
/// either the old file or the complete new one. Creates parent directories.
/// Throws IoError naming the path on failure.
void atomic_write_text(const std::filesystem::path& path, std::string_view content);

inline constexpr std::string_view kMetricsHeader =
    "epoch,l_cls,l_kld,l_mi,l_ent,mi_estimate,constraint_gap,source_acc,target_acc";

std::string metrics_csv(std::span<const MetricsRecord> history);

// Current UTC time as 2026-01-31T12:34:56Z.
std::string utc_timestamp();

// Output root: $INFOMAXDA_OUT if set and non-empty, else "runs".
std::filesystem::path default_output_root();

}  // namespace infomaxda
