#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "lob/sim.hpp"

namespace lob {

/// Provenance written as the leading `# seed=... config=...` line of every CSV.
struct OutputTag {
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

void write_tag(std::ostream& out, const OutputTag& tag);

/// events,T,B_inf,A_inf,beta,alpha
void write_checkpoints_csv(std::ostream& out, const Trace& trace, const OutputTag& tag);
/// bin_lo,bin_hi,pi_b,pi_a (masses divided by post-burn-in time)
void write_occupation_csv(std::ostream& out, const Trace& trace, const OutputTag& tag);
/// bin_beta,bin_alpha,mass over nonzero cells
void write_joint_csv(std::ostream& out, const Trace& trace, const OutputTag& tag);
/// offset,mean_bids for best-bid bins >= min_bin
void write_top_shape_csv(std::ostream& out, const Trace& trace, std::size_t min_bin, const OutputTag& tag);
/// events,T,value,running_max
void write_mid_series_csv(std::ostream& out, const Trace& trace, const OutputTag& tag);

}  // namespace lob
