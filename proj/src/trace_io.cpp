#include "lob/trace_io.hpp"

#include <cstdio>
#include <iomanip>
#include <ostream>

namespace lob {

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_tag(std::ostream& out, const OutputTag& tag) {
  out << "# seed=" << tag.seed << " config=" << tag.config_hash << '\n';
}

void write_checkpoints_csv(std::ostream& out, const Trace& trace, const OutputTag& tag) {
  write_tag(out, tag);
  out << "events,T,B_inf,A_inf,beta,alpha\n" << std::setprecision(17);
  for (const Checkpoint& c : trace.checkpoints) {
    out << c.events << ',' << c.time << ',' << c.bids << ',' << c.asks << ',' << c.beta << ',' << c.alpha << '\n';
  }
}

void write_occupation_csv(std::ostream& out, const Trace& trace, const OutputTag& tag) {
  write_tag(out, tag);
  out << "bin_lo,bin_hi,pi_b,pi_a\n" << std::setprecision(17);
  const double t = trace.occupation_time;
  for (std::size_t k = 0; k < trace.occupation_b.size(); ++k) {
    out << trace.bins.lower(k) << ',' << trace.bins.upper(k) << ',' << (t > 0 ? trace.occupation_b[k] / t : 0.0)
        << ',' << (t > 0 ? trace.occupation_a[k] / t : 0.0) << '\n';
  }
}

void write_joint_csv(std::ostream& out, const Trace& trace, const OutputTag& tag) {
  write_tag(out, tag);
  out << "bin_beta,bin_alpha,mass\n" << std::setprecision(17);
  const std::size_t n = trace.bins.size();
  const double t = trace.occupation_time;
  if (!(t > 0)) return;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double m = trace.joint[i * n + j];
      if (m > 0) out << i << ',' << j << ',' << m / t << '\n';
    }
  }
}

void write_top_shape_csv(std::ostream& out, const Trace& trace, std::size_t min_bin, const OutputTag& tag) {
  write_tag(out, tag);
  out << "offset,mean_bids\n" << std::setprecision(17);
  const auto mean = trace.top_shape_mean(min_bin);
  for (std::size_t k = 0; k < mean.size(); ++k) out << k << ',' << mean[k] << '\n';
}

void write_mid_series_csv(std::ostream& out, const Trace& trace, const OutputTag& tag) {
  write_tag(out, tag);
  out << "events,T,value,running_max\n" << std::setprecision(17);
  for (const MidSample& s : trace.mid_series) {
    out << s.events << ',' << s.time << ',' << s.value << ',' << s.running_max << '\n';
  }
}

}  // namespace lob
