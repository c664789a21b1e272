#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "infomaxda/oracle.hpp"

namespace infomaxda {

inline constexpr std::array<std::string_view, 6> kGradcheckLosses{"cls", "kld", "ent", "mi", "dv_single", "recon"};

/// Finite-difference check of one loss on small seeded tanh/elu nets. The loss
/// is chained through an encoder wherever it consumes latents, so the check
/// covers both the loss gradient and its backward pass into G.
/// Throws ValidationError for an unknown loss name.
oracle::CheckReport run_loss_gradcheck(std::string_view loss, std::uint64_t seed, double tolerance = 1e-4);

}  // namespace infomaxda
